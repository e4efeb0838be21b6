"""Finite-dimensional equivariant liftings and inner-derivation solvers.

A :class:`LiftingProblem` is a decomposition X = Y + Z (Y spanned by the first
coordinates) together with a finite group of upper block-triangular rational
matrices and a group-invariant strictly convex objective.  The minimal-norm
lifting phi selects, for each z, the unique point of the affine slice
(0, z) + Y minimising the objective; psi is minus its Y block, and the group's
corner blocks must satisfy  delta(u, v) = u psi - psi v.

Group averaging replaces a supremum norm: for a finite closed matrix group the
averaged quadratic form and the averaged even-power objective are exactly
invariant, strictly convex and smooth, so the nearest point is unique and a
damped Newton iteration finds it.  All group algebra stays in exact rationals;
only the Newton iteration itself runs in floating point.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import InvarianceFailureError, SolverFailureError
from .exact import (
    LinearSystem,
    Mat,
    Row,
    frac_mat,
    identity_mat,
    mat_add,
    mat_eq,
    mat_inverse,
    mat_is_zero,
    mat_mul,
    mat_scale,
    mat_shape,
    mat_sub,
    mat_transpose,
    zero_mat,
)

# ---------------------------------------------------------------------------
# block helpers
# ---------------------------------------------------------------------------


def split_blocks(m: Mat, n_y: int) -> tuple[Mat, Mat, Mat, Mat]:
    u = tuple(tuple(row[:n_y]) for row in m[:n_y])
    w = tuple(tuple(row[n_y:]) for row in m[:n_y])
    z = tuple(tuple(row[:n_y]) for row in m[n_y:])
    v = tuple(tuple(row[n_y:]) for row in m[n_y:])
    return u, w, z, v


def assemble_blocks(u: Mat, w: Mat, v: Mat) -> Mat:
    n_y, _ = mat_shape(u)
    n_z, _ = mat_shape(v)
    top = tuple(tuple(u[i]) + tuple(w[i]) for i in range(n_y))
    bottom = tuple((Fraction(0),) * n_y + tuple(v[i]) for i in range(n_z))
    return top + bottom


def delta_composition_check(first: tuple[Mat, Mat, Mat], second: tuple[Mat, Mat, Mat]) -> bool:
    """Corner of a block product equals u1 w2 + w1 v2; exact block arithmetic."""
    u1, w1, v1 = map(frac_mat, first)
    u2, w2, v2 = map(frac_mat, second)
    product = mat_mul(assemble_blocks(u1, w1, v1), assemble_blocks(u2, w2, v2))
    _, corner, _, _ = split_blocks(product, mat_shape(u1)[0])
    return mat_eq(corner, mat_add(mat_mul(u1, w2), mat_mul(w1, v2)))


# ---------------------------------------------------------------------------
# group closure
# ---------------------------------------------------------------------------


@dataclass
class ClosureResult:
    elements: list[Mat]
    max_operator_norm: float
    closed: bool


def _spectral_norm(m: Mat) -> float:
    arr = np.array([[float(x) for x in row] for row in m])
    return float(np.linalg.norm(arr, 2))


def group_closure(generators, cap: int = 64) -> ClosureResult:
    """Close a matrix set under products and inverses, up to ``cap`` elements."""
    if cap < 1:
        raise ValueError("cap must be >= 1")
    seeds = [frac_mat(g) for g in generators]
    n = mat_shape(seeds[0])[0]
    elements: dict[Mat, None] = {}
    frontier: list[Mat] = []
    closed = True

    def add(m: Mat):
        nonlocal closed
        if m in elements:
            return
        if len(elements) >= cap:
            closed = False
            return
        elements[m] = None
        frontier.append(m)

    add(identity_mat(n))
    for g in seeds:
        add(g)
        add(mat_inverse(g))
    while frontier and closed:
        current = frontier.pop()
        for g in seeds:
            add(mat_mul(current, g))
            add(mat_mul(g, current))
            if not closed:
                break
    element_list = list(elements)
    max_norm = max(_spectral_norm(m) for m in element_list)
    return ClosureResult(element_list, max_norm, closed)


# ---------------------------------------------------------------------------
# norms and lifting problems
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NormSpec:
    """Strictly convex objective family used for nearest-point problems.

    ``quadratic``: F(x) = average over the group of <Tx, Tx>.
    ``pnorm``:     F(x) = average of |Tx|_p^p plus blend * (quadratic part)^(p/2),
                   p even and >= 4; blend > 0 keeps the slice Hessian definite.

    The blend is raised to the power p/2 so that F stays homogeneous of one
    degree: minimisers over affine slices then scale exactly with the data,
    which the lifting's homogeneity contract requires.  (A degree-2 blend
    would break homogeneity at first order in blend whenever the lifting is
    nonlinear.)  On the slice (0, z) + Y the quadratic part is bounded below
    by a positive multiple of |z|^2, so the blended Hessian is definite there
    even where the pure power part degenerates.
    """

    family: str = "quadratic"
    p: int = 4
    blend: Fraction = Fraction(1, 100)

    def __post_init__(self):
        if self.family not in ("quadratic", "pnorm"):
            raise ValueError(f"unknown norm family {self.family}")
        if self.family == "pnorm" and (self.p < 4 or self.p % 2):
            raise ValueError("pnorm family needs an even p >= 4")


class LiftingProblem:
    """X = Y + Z with a bounded block-triangular matrix group and invariant norm."""

    def __init__(self, n_y: int, n_z: int, generators, norm: NormSpec | None = None,
                 closure_cap: int = 64, newton_tol: float = 1e-10,
                 max_iter: int = 200, armijo: float = 1e-4, backtrack: float = 0.5):
        self.n_y = n_y
        self.n_z = n_z
        self.n = n_y + n_z
        self.norm = norm or NormSpec("quadratic")
        self.newton_tol = newton_tol
        self.max_iter = max_iter
        self.armijo = armijo
        self.backtrack = backtrack

        closure = group_closure([frac_mat(g) for g in generators], cap=closure_cap)
        self.closed = closure.closed
        self.max_operator_norm = closure.max_operator_norm
        self.group: list[Mat] = closure.elements
        for m in self.group:
            if mat_shape(m) != (self.n, self.n):
                raise ValueError("group elements must be n x n")
            _, _, z_block, _ = split_blocks(m, n_y)
            if not mat_is_zero(z_block):
                raise InvarianceFailureError("group does not leave Y invariant")
            u, _, _, v = split_blocks(m, n_y)
            mat_inverse(u), mat_inverse(v)  # raises SingularMatrixError if not invertible

        count = Fraction(len(self.group))
        q_form = zero_mat(self.n)
        for m in self.group:
            q_form = mat_add(q_form, mat_mul(mat_transpose(m), m))
        self.q_form: Mat = mat_scale(Fraction(1) / count, q_form)
        if self.closed:
            self._check_exact_invariance()

        self._group_float = [np.array([[float(x) for x in row] for row in m]) for m in self.group]
        self._q_float = np.array([[float(x) for x in row] for row in self.q_form])

    def _check_exact_invariance(self):
        for m in self.group:
            if not mat_eq(mat_mul(mat_mul(mat_transpose(m), self.q_form), m), self.q_form):
                raise InvarianceFailureError("averaged quadratic form is not invariant")

    def elements_blocks(self) -> list[tuple[Mat, Mat, Mat]]:
        out = []
        for m in self.group:
            u, w, _, v = split_blocks(m, self.n_y)
            out.append((u, w, v))
        return out

    def embed(self, z) -> np.ndarray:
        x = np.zeros(self.n)
        x[self.n_y:] = np.asarray(z, dtype=float)
        return x


def objective_and_gradient(problem: LiftingProblem, x) -> tuple[float, np.ndarray]:
    """Objective value and exact analytic gradient at x."""
    x = np.asarray(x, dtype=float)
    spec = problem.norm
    quad_val = float(x @ (problem._q_float @ x))
    quad_grad = 2.0 * (problem._q_float @ x)
    if spec.family == "quadratic":
        return quad_val, quad_grad
    count = len(problem._group_float)
    value = 0.0
    grad = np.zeros_like(x)
    p = spec.p
    for t in problem._group_float:
        tx = t @ x
        value += float(np.sum(tx ** p))
        grad += p * (t.T @ (tx ** (p - 1)))
    blend = float(spec.blend)
    half = p // 2
    blend_val = blend * quad_val ** half
    blend_grad = blend * half * quad_val ** (half - 1) * quad_grad if quad_val else 0.0 * quad_grad
    return value / count + blend_val, grad / count + blend_grad


def objective_hessian(problem: LiftingProblem, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    spec = problem.norm
    if spec.family == "quadratic":
        return 2.0 * problem._q_float
    p = spec.p
    hess = np.zeros((problem.n, problem.n))
    for t in problem._group_float:
        tx = t @ x
        hess += p * (p - 1) * (t.T * (tx ** (p - 2))) @ t
    hess /= len(problem._group_float)
    blend = float(spec.blend)
    half = p // 2
    quad_val = float(x @ (problem._q_float @ x))
    qx = problem._q_float @ x
    if quad_val:
        hess += blend * half * quad_val ** (half - 1) * 2.0 * problem._q_float
        if half > 1:
            hess += blend * half * (half - 1) * quad_val ** (half - 2) * 4.0 * np.outer(qx, qx)
    return hess


def nearest_point(problem: LiftingProblem, x) -> np.ndarray:
    """The unique y in Y minimising objective(x - y); damped Newton iteration.

    First-order optimality is certified by the Y block of the gradient at the
    optimum having norm below the configured tolerance.
    """
    x = np.asarray(x, dtype=float)
    n_y = problem.n_y
    if n_y == 0:
        return np.zeros(problem.n)
    c = np.zeros(n_y)

    def value_grad(cvec):
        point = x.copy()
        point[:n_y] -= cvec
        val, grad = objective_and_gradient(problem, point)
        return val, -grad[:n_y], point

    val, grad_c, point = value_grad(c)
    for _ in range(problem.max_iter):
        if float(np.linalg.norm(grad_c)) <= problem.newton_tol:
            out = np.zeros(problem.n)
            out[:n_y] = c
            return out
        hess_c = objective_hessian(problem, point)[:n_y, :n_y]
        try:
            step = np.linalg.solve(hess_c, -grad_c)
        except np.linalg.LinAlgError as exc:
            raise SolverFailureError(f"singular Newton system: {exc}") from exc
        slope = float(grad_c @ step)
        if slope >= 0:
            step = -grad_c
            slope = float(grad_c @ step)
        # once the Newton decrement is below value rounding, objective
        # comparisons are noise; accept full steps on gradient decrease,
        # which is quadratically contractive in the convex basin
        noise = 1e-13 * (1.0 + abs(val))
        accepted = False
        if -slope >= noise:
            alpha = 1.0
            while alpha > 1e-14:
                trial = c + alpha * step
                trial_val, trial_grad, trial_point = value_grad(trial)
                if trial_val <= val + problem.armijo * alpha * slope:
                    c, val, grad_c, point = trial, trial_val, trial_grad, trial_point
                    accepted = True
                    break
                alpha *= problem.backtrack
        if not accepted:
            trial = c + step
            trial_val, trial_grad, trial_point = value_grad(trial)
            if float(np.linalg.norm(trial_grad)) < float(np.linalg.norm(grad_c)):
                c, val, grad_c, point = trial, trial_val, trial_grad, trial_point
            else:
                raise SolverFailureError(
                    f"line search stalled at gradient norm {np.linalg.norm(grad_c):.3e}"
                )
    raise SolverFailureError(
        f"no convergence in {problem.max_iter} iterations; "
        f"gradient norm {np.linalg.norm(grad_c):.3e}"
    )


def lifting_phi(problem: LiftingProblem, z) -> np.ndarray:
    """Minimal-objective point of the affine slice (0, z) + Y; phi(0) = 0."""
    z = np.asarray(z, dtype=float)
    if not np.any(z):
        return np.zeros(problem.n)
    x = problem.embed(z)
    return x - nearest_point(problem, x)


def psi_of(problem: LiftingProblem, z) -> np.ndarray:
    """psi(z) = minus the Y block of the lifting."""
    return -lifting_phi(problem, z)[: problem.n_y]


def Delta_of(problem: LiftingProblem, z1, z2) -> np.ndarray:
    """Nonlinearity defect phi(z1) + phi(z2) - phi(z1 + z2); lands in Y."""
    z1 = np.asarray(z1, dtype=float)
    z2 = np.asarray(z2, dtype=float)
    out = lifting_phi(problem, z1) + lifting_phi(problem, z2) - lifting_phi(problem, z1 + z2)
    # the Z block cancels exactly in coordinates
    out[problem.n_y:] = 0.0
    return out


def delta_check(problem: LiftingProblem, element: tuple[Mat, Mat, Mat],
                samples: int = 20, seed: int = 0) -> float:
    """max_z | w z - (u psi(z) - psi(v z)) | over sampled z; group elements only."""
    u, w, v = (np.array([[float(x) for x in row] for row in frac_mat(b)]) for b in element)
    rng = np.random.default_rng(seed)
    worst = 0.0
    zs = [np.eye(problem.n_z)[i] for i in range(problem.n_z)]
    zs += [rng.standard_normal(problem.n_z) for _ in range(samples)]
    for z in zs:
        lhs = w @ z
        rhs = u @ psi_of(problem, z) - psi_of(problem, v @ z)
        worst = max(worst, float(np.max(np.abs(lhs - rhs))) if lhs.size else 0.0)
    return worst


def quadratic_psi_matrix(problem: LiftingProblem) -> Mat:
    """Exact psi for the averaged quadratic family.

    Minimising (x-y)^T Q (x-y) over y in Y is a rational linear solve, so psi
    is linear with matrix  (Q_YY)^-1 Q_YZ; used as the exact oracle against
    the Newton-computed lifting.
    """
    if problem.norm.family != "quadratic":
        raise ValueError("exact psi is only available for the quadratic family")
    n_y = problem.n_y
    q_yy = tuple(tuple(row[:n_y]) for row in problem.q_form[:n_y])
    q_yz = tuple(tuple(row[n_y:]) for row in problem.q_form[:n_y])
    return mat_mul(mat_inverse(q_yy), q_yz)


def injectivity_check(problem: LiftingProblem) -> tuple[bool, tuple[Mat, Mat] | None]:
    """Whether distinct group elements always differ in their diagonal blocks."""
    seen: dict[tuple, Mat] = {}
    for m in problem.group:
        u, _, _, v = split_blocks(m, problem.n_y)
        key = (u, v)
        if key in seen and not mat_eq(seen[key], m):
            return False, (seen[key], m)
        seen[key] = m
    return True, None


# ---------------------------------------------------------------------------
# derivation tables and the inner-derivation solve
# ---------------------------------------------------------------------------


@dataclass
class DerivationTable:
    """Generator images of a representation together with derivation values."""

    lams: list[Mat]
    ds: list[Mat]
    relations: list[list[tuple[int, bool]]] = field(default_factory=list)

    def __post_init__(self):
        self.lams = [frac_mat(m) for m in self.lams]
        self.ds = [frac_mat(m) for m in self.ds]
        for lam in self.lams:
            mat_inverse(lam)  # must be invertible


def combine_cocycle(a: tuple[Mat, Mat], b: tuple[Mat, Mat]) -> tuple[Mat, Mat]:
    """(lam, d) of a product from the factors: d(ab) = lam(a) d(b) + d(a) lam(b)."""
    lam_a, d_a = a
    lam_b, d_b = b
    return mat_mul(lam_a, lam_b), mat_add(mat_mul(lam_a, d_b), mat_mul(d_a, lam_b))


def cocycle_extend(table: DerivationTable, word) -> tuple[Mat, Mat]:
    """Fold the cocycle rule along a word of (generator index, inverted) steps."""
    n = mat_shape(table.lams[0])[0]
    acc = (identity_mat(n), zero_mat(n))
    for index, inverted in word:
        lam, d = table.lams[index], table.ds[index]
        if inverted:
            lam_inv = mat_inverse(lam)
            lam, d = lam_inv, mat_scale(-1, mat_mul(mat_mul(lam_inv, d), lam_inv))
        acc = combine_cocycle(acc, (lam, d))
    return acc


def certify_table(table: DerivationTable, words) -> None:
    """Raise when two words with equal representation matrices disagree on d."""
    from .errors import CocycleInconsistencyError

    seen: dict[Mat, tuple[Mat, object]] = {}
    for word in words:
        lam, d = cocycle_extend(table, word)
        if lam in seen:
            d_prev, word_prev = seen[lam]
            if not mat_eq(d, d_prev):
                raise CocycleInconsistencyError(word_prev, list(word))
        else:
            seen[lam] = (d, list(word))


@dataclass
class InnerResult:
    feasible: bool
    particular: Mat | None
    homogeneous_basis: list[Mat]
    certificate: tuple[Row, Fraction] | None


def inner_derivation_solve(elements: list[tuple[Mat, Mat]]) -> InnerResult:
    """Solve d(a) = lam(a) A - A lam(a) over all given (lam, d) pairs, exactly.

    Infeasibility comes with a certificate: a rational combination of the
    scalar equations whose left side vanishes while the right side does not.
    """
    if not elements:
        raise ValueError("need at least one element")
    n = mat_shape(frac_mat(elements[0][0]))[0]
    system = LinearSystem(n * n, track_provenance=True)
    for lam, d in elements:
        lam, d = frac_mat(lam), frac_mat(d)
        for i in range(n):
            for j in range(n):
                row: Row = {}
                for k in range(n):
                    if lam[i][k]:
                        row[k * n + j] = row.get(k * n + j, Fraction(0)) + lam[i][k]
                    if lam[k][j]:
                        row[i * n + k] = row.get(i * n + k, Fraction(0)) - lam[k][j]
                system.add_row({c: v for c, v in row.items() if v}, rhs=d[i][j])
    sol = system.solution()
    if not sol.feasible:
        return InnerResult(False, None, [], sol.certificate)
    part = sol.particular()
    particular = tuple(
        tuple(part.get(i * n + j, Fraction(0)) for j in range(n)) for i in range(n)
    )
    basis = [
        tuple(tuple(vec.get(i * n + j, Fraction(0)) for j in range(n)) for i in range(n))
        for vec in sol.nullspace_basis()
    ]
    return InnerResult(True, particular, basis, None)


@dataclass
class ComplementResult:
    graph_basis: list[tuple[Fraction, ...]]
    invariant: bool
    block_diagonalises: bool
    witness: Mat | None


def lambda_d_matrix(lam: Mat, d: Mat) -> Mat:
    """The block matrix (lam d; 0 lam) acting on the doubled space."""
    return assemble_blocks(lam, d, lam)


def invariant_complement_from_A(a_matrix: Mat, elements: list[tuple[Mat, Mat]]) -> ComplementResult:
    """Graph subspace {(Az, z)} and the exact block-diagonalisation check.

    For a valid solution A of the inner-derivation system the graph is
    invariant under every (lam d; 0 lam) and conjugation by (Id A; 0 Id)
    makes every element block diagonal.
    """
    a_matrix = frac_mat(a_matrix)
    n = mat_shape(a_matrix)[0]
    basis = []
    for j in range(n):
        column = tuple(a_matrix[i][j] for i in range(n))
        unit = tuple(Fraction(int(i == j)) for i in range(n))
        basis.append(column + unit)
    shear = assemble_blocks(identity_mat(n), a_matrix, identity_mat(n))
    unshear = assemble_blocks(identity_mat(n), mat_scale(-1, a_matrix), identity_mat(n))
    invariant = True
    diagonalises = True
    witness = None
    for lam, d in elements:
        lam, d = frac_mat(lam), frac_mat(d)
        big = lambda_d_matrix(lam, d)
        # invariance: big maps (A z, z) to (A lam z, lam z), i.e. lam A + d = A lam
        if not mat_eq(mat_add(mat_mul(lam, a_matrix), d), mat_mul(a_matrix, lam)):
            invariant = False
            witness = big
        conj = mat_mul(mat_mul(shear, big), unshear)
        u, w, z_block, v = split_blocks(conj, n)
        if not (mat_is_zero(w) and mat_is_zero(z_block) and mat_eq(u, lam) and mat_eq(v, lam)):
            diagonalises = False
            witness = big
    return ComplementResult(basis, invariant, diagonalises, witness)


# ---------------------------------------------------------------------------
# shipped problem set
# ---------------------------------------------------------------------------


def shear_reflection_problem(norm: NormSpec | None = None) -> LiftingProblem:
    """The two-dimensional group {I, [[1,1],[0,-1]]} with the averaged quadratic."""
    t = ((1, 1), (0, -1))
    return LiftingProblem(1, 1, [t], norm or NormSpec("quadratic"))


def orthogonal_split_problem() -> LiftingProblem:
    """Block-diagonal signed permutations: psi vanishes identically."""
    g1 = ((0, 1, 0, 0), (1, 0, 0, 0), (0, 0, -1, 0), (0, 0, 0, 1))
    g2 = ((1, 0, 0, 0), (0, -1, 0, 0), (0, 0, 0, 1), (0, 0, 1, 0))
    return LiftingProblem(2, 2, [g1, g2], NormSpec("quadratic"))


def pnorm_problem(p: int = 4, blend: Fraction = Fraction(1, 100)) -> LiftingProblem:
    """Order-three shear over a cyclic shift with the even-power norm.

    An order-two group averages two shifted quartics, whose minimiser is the
    exact midpoint, so the lifting would stay linear; three asymmetric shifts
    make psi genuinely nonlinear and the defect Delta nonzero.
    """
    t = (
        (1, 1, -1, 0),
        (0, 0, 0, 1),
        (0, 1, 0, 0),
        (0, 0, 1, 0),
    )
    return LiftingProblem(1, 3, [t], NormSpec("pnorm", p=p, blend=blend))


def shipped_problems() -> dict[str, LiftingProblem]:
    return {
        "shear_reflection": shear_reflection_problem(),
        "orthogonal_split": orthogonal_split_problem(),
        "pnorm_cyclic": pnorm_problem(),
    }
