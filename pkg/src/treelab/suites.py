"""Seeded verification suites producing machine-readable records.

Every suite is deterministic in its configuration: case k of a run is
regenerated from (seed, k) alone, so any failing record can be replayed in
isolation.  Records are plain dicts; the CLI serialises them as one JSON
object per line plus a comma-separated summary.
"""

from __future__ import annotations

import random
import time
from fractions import Fraction

import numpy as np

from . import derivation as dv
from . import liftings as lf
from . import sampling
from . import tree
from . import truncation as tr
from . import vectors as vc
from .exact import frac_mat, identity_mat, in_span, mat_eq, mat_mul, span_equal
from .vectors import FinSuppVector


class SuiteResult:
    def __init__(self, suite: str, seed: int):
        self.suite = suite
        self.seed = seed
        self.records: list[dict] = []
        self.failures = 0
        self.cases = 0
        self.wall_ms = 0.0
        self.extra: dict = {}

    @property
    def ok(self) -> bool:
        return self.failures == 0

    def case(self, index: int, ok: bool, **payload):
        self.cases += 1
        if not ok:
            self.failures += 1
            self.records.append({
                "record": "failure",
                "suite": self.suite,
                "seed": self.seed,
                "case": index,
                "record_id": f"{self.suite}:{index}",
                **payload,
            })

    def summary_record(self) -> dict:
        rec = {
            "record": "summary",
            "suite": self.suite,
            "seed": self.seed,
            "cases": self.cases,
            "failures": self.failures,
            **self.extra,
        }
        return rec


def _case_rng(suite: str, seed: int, index: int) -> random.Random:
    return random.Random(f"{suite}:{seed}:{index}")


# ---------------------------------------------------------------------------
# derivation identity suites
# ---------------------------------------------------------------------------


def identity_case(q: int, seed: int, index: int) -> dict:
    """One exact-identity case; returns the per-identity outcomes."""
    rng = _case_rng("identities", seed, index)
    g = sampling.random_mixed_automorphism(rng, q)
    f = sampling.random_mixed_automorphism(rng, q)
    x = sampling.random_vector(rng, q, 6)
    y = sampling.random_vector(rng, q, 6)
    out = {}
    out["cocycle"] = dv.cocycle_check(g, f, x, q)
    out["lstar_plus_l_is_n"] = (
        vc.apply_Lstar(x, q) + vc.apply_L(x) == vc.apply_N(x, q)
    )
    out["d_formulas_agree"] = dv.d_apply(g, x, q) == dv.d_apply_via_L(g, x, q)
    v = dv.BlockVector(x, y)
    gf = tree.aut_compose(g, f)
    out["twisted_multiplicative"] = (
        dv.lambda_d_apply(gf, v, q) == dv.lambda_d_apply(g, dv.lambda_d_apply(f, v, q), q)
    )
    out["adjoint_pairing"] = vc.dot(vc.apply_L(x), y) == vc.dot(x, vc.apply_Lstar(y, q))
    out["inputs"] = {
        "g": tree.format_automorphism(g),
        "f": tree.format_automorphism(f),
        "x": vc.serialize_vector(x),
        "y": vc.serialize_vector(y),
    }
    return out


def run_identity_suite(q_list=(2, 3, 4, 5), cases: int = 1000, seed: int = 0) -> SuiteResult:
    result = SuiteResult("identities", seed)
    start = time.perf_counter()
    per_q = max(1, cases // len(q_list))
    index = 0
    for q in q_list:
        for _ in range(per_q):
            out = identity_case(q, seed, index)
            checks = {k: v for k, v in out.items() if k != "inputs"}
            result.case(index, all(checks.values()), q=q, checks=checks, inputs=out["inputs"])
            index += 1
    result.wall_ms = (time.perf_counter() - start) * 1000.0
    result.extra = {"q_list": list(q_list), "identities": 5}
    return result


def closed_form_case(q: int, seed: int, index: int) -> tuple[bool, str, dict]:
    """One closed-form agreement case; the sampler steers all four branches."""
    rng = _case_rng("closed_form", seed, index)
    roll = rng.random()
    s = sampling.random_word(rng, q, 6)
    if roll < 0.12:
        s = tree.ROOT
        g: tree.TreeAutomorphism = tree.Translation(q, sampling.random_word(rng, q, 4))
    elif roll < 0.24:
        while not s:
            s = sampling.random_word(rng, q, 6)
        g = tree.Translation(q, tree.word_inverse(s))
        if rng.random() < 0.5:
            g = tree.aut_compose(g, tree.random_automorphism(q, "portrait", 2, rng.randrange(2**30)))
    elif roll < 0.32:
        s = tree.ROOT
        g = tree.random_automorphism(q, "portrait", 2, rng.randrange(2**30))
    else:
        g = sampling.random_mixed_automorphism(rng, q)
    case = dv.closed_form_case(g, s)
    ok = dv.d_closed_form(g, s, q) == dv.d_apply(g, FinSuppVector.dirac(s), q)
    return ok, case, {"g": tree.format_automorphism(g), "s": ".".join(map(str, s)) or "e"}


def run_closed_form_suite(q_list=(2, 3, 4, 5), cases: int = 1000, seed: int = 0) -> SuiteResult:
    result = SuiteResult("closed_form", seed)
    start = time.perf_counter()
    counters = {"generic": 0, "to_root": 0, "root_moved": 0, "root_fixed": 0}
    per_q = max(1, cases // len(q_list))
    index = 0
    for q in q_list:
        for _ in range(per_q):
            ok, case, inputs = closed_form_case(q, seed, index)
            counters[case] += 1
            result.case(index, ok, q=q, branch=case, inputs=inputs)
            index += 1
    result.wall_ms = (time.perf_counter() - start) * 1000.0
    result.extra = {"case_counters": counters}
    return result


def run_certificate_suite(q_list=(2, 3, 4, 5), sample_g: int = 50, depth: int = 4,
                          seed: int = 0) -> SuiteResult:
    """Column/row sparsity and norm bounds of the derivation sections."""
    result = SuiteResult("certificates", seed)
    start = time.perf_counter()
    for index in range(sample_g):
        rng = _case_rng("certificates", seed, index)
        q = q_list[index % len(q_list)]
        g = sampling.random_mixed_automorphism(rng, q)
        cert = dv.d_norm_certificates(g, q, depth, samples=20, seed=seed + index)
        ok = (
            cert.col_max_nonzeros <= 2
            and cert.row_max_nonzeros <= 2
            and cert.entry_bound <= 1
            and cert.l1_norm <= 2
            and cert.linf_norm <= 2
            and cert.l2_violations == 0
        )
        result.case(index, ok, q=q, g=tree.format_automorphism(g),
                    cert=[cert.col_max_nonzeros, cert.row_max_nonzeros,
                          str(cert.entry_bound), cert.l2_violations])
    result.wall_ms = (time.perf_counter() - start) * 1000.0
    return result


# ---------------------------------------------------------------------------
# symbolic propagation suite
# ---------------------------------------------------------------------------


def run_psi_suite(q: int = 3, witnesses: int = 5, conjugation_cases: int = 100,
                  seed: int = 0) -> SuiteResult:
    result = SuiteResult("psi", seed)
    start = time.perf_counter()
    index = 0
    targets = [w for w in tree.ball_words(q, 3) if w]
    for s in targets:
        outs = {dv.psi_propagate_singleton(s, dv.singleton_witness(s, q, v), q).__repr__()
                for v in range(witnesses)}
        expected = dv.SymbolicVector.dirac(tree.vertex_parent(s)) + dv.SymbolicVector.dirac(s, dv.MU)
        ok = len(outs) == 1 and outs == {repr(expected)}
        result.case(index, ok, target=".".join(map(str, s)), kind="singleton")
        index += 1
    for t in [w for w in tree.ball_words(q, 3) if len(w) >= 2]:
        outs = set()
        for v in range(witnesses):
            out = dv.psi_propagate_edge(t, dv.edge_witness(t, q, v), q)
            outs.add(repr(out))
        t_hat = tree.vertex_parent(t)
        expected = (
            dv.SymbolicVector.dirac(t, dv.MU)
            + dv.SymbolicVector.dirac(t_hat, dv.ONE + dv.NU)
            + dv.SymbolicVector.dirac(tree.vertex_parent(t_hat))
        )
        ok = outs == {repr(expected)}
        result.case(index, ok, target=".".join(map(str, t)), kind="edge")
        index += 1
    for k in range(conjugation_cases):
        rng = _case_rng("psi-conj", seed, k)
        n = rng.randint(1, 3)
        u, w, v = sampling.random_upper_block(rng, n)
        theta = sampling.random_fraction(rng)
        cu, cw, cv = dv.conjugate_by_theta(theta, u, v, w)
        # oracle: literal block multiplication with the inverse-ordered shears
        shear = dv.block_matrix(identity_mat(n), frac_mat([[-theta if i == j else 0
                                for j in range(n)] for i in range(n)]), identity_mat(n))
        unshear = dv.block_matrix(identity_mat(n), frac_mat([[theta if i == j else 0
                                  for j in range(n)] for i in range(n)]), identity_mat(n))
        conj = mat_mul(mat_mul(shear, dv.block_matrix(u, w, v)), unshear)
        ou, ow, ov = dv.block_parts(conj, n)
        ok = mat_eq(ou, cu) and mat_eq(ow, cw) and mat_eq(ov, cv)
        result.case(index, ok, kind="conjugation", n=n, theta=str(theta))
        index += 1
    result.wall_ms = (time.perf_counter() - start) * 1000.0
    return result


# ---------------------------------------------------------------------------
# lifting suite
# ---------------------------------------------------------------------------


def run_lift_suite(names=("shear_reflection", "orthogonal_split", "pnorm_cyclic"),
                   seed: int = 0) -> SuiteResult:
    result = SuiteResult("lift", seed)
    start = time.perf_counter()
    problems = lf.shipped_problems()
    index = 0
    rng = np.random.default_rng(seed)
    for name in names:
        problem = problems[name]
        checks: dict[str, bool] = {}
        zs = [rng.standard_normal(problem.n_z) for _ in range(10)]
        zs += [np.eye(problem.n_z)[i] for i in range(problem.n_z)]

        eq_res = 0.0
        for m, mf in zip(problem.group, problem._group_float):
            _, _, _, v = lf.split_blocks(m, problem.n_y)
            vf = np.array([[float(x) for x in row] for row in v])
            for z in zs[:6]:
                eq_res = max(eq_res, float(np.max(np.abs(
                    lf.lifting_phi(problem, vf @ z) - mf @ lf.lifting_phi(problem, z)))))
        checks["equivariance"] = eq_res <= 1e-8

        checks["projection"] = all(
            np.array_equal(lf.lifting_phi(problem, z)[problem.n_y:], np.asarray(z, dtype=float))
            for z in zs[:4]
        )
        hom_res = max(
            float(np.max(np.abs(lf.lifting_phi(problem, lam * zs[0])
                                - lam * lf.lifting_phi(problem, zs[0]))))
            for lam in (-2.0, -1.0, 0.5, 3.0)
        )
        checks["homogeneity"] = hom_res <= 1e-8

        min_ok = True
        phi0 = lf.lifting_phi(problem, zs[0])
        base_val, _ = lf.objective_and_gradient(problem, phi0)
        for _ in range(100):
            y = np.zeros(problem.n)
            y[: problem.n_y] = rng.standard_normal(problem.n_y)
            val, _ = lf.objective_and_gradient(problem, phi0 + y)
            if val < base_val - 1e-10:
                min_ok = False
        checks["minimality"] = min_ok

        delta_res = max(lf.delta_check(problem, el, seed=seed) for el in problem.elements_blocks())
        checks["corner_identity"] = delta_res <= 1e-8

        if problem.norm.family == "quadratic":
            d_res = max(
                float(np.max(np.abs(lf.Delta_of(problem, z1, z2))))
                for z1, z2 in zip(zs[:4], zs[4:8])
            )
            checks["delta_defect_linear"] = d_res <= 1e-10

        grad_ok = True
        for _ in range(25):
            x = rng.standard_normal(problem.n)
            _, grad = lf.objective_and_gradient(problem, x)
            fd = np.zeros(problem.n)
            h = 1e-6
            for i in range(problem.n):
                e = np.zeros(problem.n)
                e[i] = h
                fp, _ = lf.objective_and_gradient(problem, x + e)
                fm, _ = lf.objective_and_gradient(problem, x - e)
                fd[i] = (fp - fm) / (2 * h)
            scale = max(1.0, float(np.max(np.abs(grad))))
            if float(np.max(np.abs(grad - fd))) > 1e-6 * scale:
                grad_ok = False
        checks["gradient_fd"] = grad_ok

        inj, _ = lf.injectivity_check(problem)
        checks["injective_diagonals"] = inj
        checks["closed"] = problem.closed

        result.case(index, all(checks.values()), problem=name, checks=checks,
                    residuals={"equivariance": eq_res, "corner": delta_res,
                               "homogeneity": hom_res})
        index += 1
    result.wall_ms = (time.perf_counter() - start) * 1000.0
    return result


# ---------------------------------------------------------------------------
# solver experiment wrappers
# ---------------------------------------------------------------------------


def resolve_generators(spec: str, q: int, depth: int):
    if spec == "default":
        return tr.default_generators(q, depth)
    if spec == "portraits":
        return tr.portrait_generators(q, max(0, depth - 1))
    if spec == "gap-default":
        return tr.gap_generators(q)
    return [tree.parse_automorphism(part, q) for part in spec.split(";") if part]


def run_solver(kind: str, q: int, depth: int, margin: int, scope: str = "window",
               generators: str = "default", seed: int = 0) -> SuiteResult:
    result = SuiteResult(kind, seed)
    start = time.perf_counter()
    ball = tr.enumerate_ball(q, depth)
    gens = resolve_generators(generators, q, depth)
    solve = {
        "commutant": tr.commutant_solve,
        "gram": tr.invariant_gram_solve,
        "intertwiner": tr.intertwiner_solve,
    }[kind]
    res = solve(gens, ball, margin, scope=scope)
    checks = {"feasible": res.feasible}
    if kind == "commutant":
        n = ball.size
        ident = tr.identity_entries_row(n)
        checks["identity_in_space"] = tr.window_residual("commutant", ident, gens, ball, margin) == 0
    if kind == "gram":
        n = ball.size
        ident = tr.identity_entries_row(n)
        checks["gram_identity_in_space"] = tr.window_residual("gram", ident, gens, ball, margin) == 0
    if kind == "intertwiner":
        n = ball.size
        lstar = tr.matrix_entries_row(tr.matrix_of(tr.TreeOperator("Lstar"), ball).rows, n)
        checks["lstar_zero_residual"] = tr.window_residual("intertwiner", lstar, gens, ball, margin) == 0
    result.case(0, all(checks.values()), checks=checks)
    result.extra = {
        "q": q, "depth": depth, "margin": margin, "scope": scope,
        "generator_spec": generators, "generators": len(gens),
        "full_dim": res.full_dim, "interior_dim": res.interior_dim,
        "checksum": res.checksum,
    }
    result.wall_ms = (time.perf_counter() - start) * 1000.0
    return result


def run_orbits(q: int, depth: int, depth_bound: int | None = None,
               generators: str = "portraits", include_swap: bool = False,
               seed: int = 0) -> SuiteResult:
    result = SuiteResult("orbits", seed)
    start = time.perf_counter()
    ball = tr.enumerate_ball(q, depth)
    gens = resolve_generators(generators, q, depth)
    count = tr.pair_orbit_count(gens, ball, depth_bound, include_swap=include_swap)
    result.case(0, True)
    result.extra = {"q": q, "depth": depth, "orbit_count": count,
                    "include_swap": include_swap, "generator_spec": generators}
    result.wall_ms = (time.perf_counter() - start) * 1000.0
    return result


def run_gap(q: int = 3, depth: int = 5, margin: int = 1, generators: str = "gap-default",
            seed: int = 0) -> SuiteResult:
    result = SuiteResult("gap", seed)
    start = time.perf_counter()
    ball = tr.enumerate_ball(q, depth)
    gens = resolve_generators(generators, q, depth)
    res = tr.spectral_gap(gens, ball, tree.ROOT, margin, seed=seed)
    rel = (abs(res.dense_value - res.power_value) / res.dense_value) if res.dense_value else 0.0
    ok = res.value > 0 and rel <= 1e-6
    result.case(0, ok, value=res.value, dense=res.dense_value, power=res.power_value)
    result.extra = {
        "q": q, "depth": depth, "margin": margin, "value": res.value,
        "dense": res.dense_value, "power": res.power_value,
        "rank": res.rank, "kernel_dim": res.kernel_dim, "generator_spec": generators,
    }
    result.wall_ms = (time.perf_counter() - start) * 1000.0
    return result
