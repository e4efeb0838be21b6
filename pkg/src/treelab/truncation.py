"""Windowed finite-section solvers on balls of the tree.

Identities that hold on the infinite tree are imposed on a ball only where
truncation cannot corrupt them: columns are restricted to the window (depth <=
ball depth - margin, margin at least every generator reach).  Two row scopes
are available:

* ``scope="window"``: rows are also restricted to the window.  Every imposed
  equation is then a pure entry identification, so solution spaces are spanned
  by indicator patterns of pair classes; in particular every truncated
  distance matrix (entries depending only on d(s, t)) always solves the
  commutant, Gram, and homogeneous intertwiner systems.
* ``scope="ball"``: rows run over the whole ball.  Rows whose preimage escapes
  the ball turn into zero-forcings, the finite shadow of mass escaping to
  infinity.  These forcings can only reach entry pairs at distance > margin
  (an escaping row is at least margin+1 away from any window column image), so
  distance classes up to the margin always survive either scope.

All solves are exact over the rationals; floating point appears only in the
spectral-gap measurement, where it is cross-checked by two independent
methods plus an exact rank computation.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import tree
from .errors import (
    DegenerateWindowError,
    InvalidAutomorphismError,
    NumericalInconsistencyError,
    ReachViolationError,
)
from .exact import (
    LinearSystem,
    Mat,
    Row,
    mat_mul,
    mat_transpose,
    rank_of,
    row_space_basis,
)
from .tree import TreeAutomorphism, Word
from .vectors import FinSuppVector, apply_L, apply_Lstar, apply_N, apply_lambda
from .derivation import d_apply


class Ball:
    """All vertices of depth <= depth, canonically ordered and indexed."""

    def __init__(self, q: int, depth: int):
        if q < 2 or depth < 0:
            raise ValueError("need q >= 2 and depth >= 0")
        self.q = q
        self.depth = depth
        self.vertices: tuple[Word, ...] = tuple(tree.ball_words(q, depth))
        self.index: dict[Word, int] = {w: i for i, w in enumerate(self.vertices)}

    @property
    def size(self) -> int:
        return len(self.vertices)

    def __repr__(self):
        return f"Ball(q={self.q}, depth={self.depth}, size={self.size})"


def expected_ball_size(q: int, depth: int) -> int:
    if q == 2:
        return 2 * depth + 1
    return 1 + q * ((q - 1) ** depth - 1) // (q - 2)


def enumerate_ball(q: int, depth: int) -> Ball:
    ball = Ball(q, depth)
    assert ball.size == expected_ball_size(q, depth), "ball size disagrees with closed form"
    return ball


# ---------------------------------------------------------------------------
# operators as finite sections
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TreeOperator:
    """Named operator with a declared support-displacement bound (reach)."""

    kind: str                     # "lambda" | "L" | "Lstar" | "N" | "derivation"
    aut: TreeAutomorphism | None = None

    def reach(self, q: int, depth: int) -> int:
        if self.kind in ("L", "Lstar", "N"):
            return 1
        if self.kind == "lambda":
            return tree.aut_reach(self.aut, depth)
        if self.kind == "derivation":
            return tree.aut_reach(self.aut, depth) + 1
        raise ValueError(f"unknown operator kind {self.kind}")

    def apply(self, x: FinSuppVector, q: int) -> FinSuppVector:
        if self.kind == "lambda":
            return apply_lambda(self.aut, x)
        if self.kind == "L":
            return apply_L(x)
        if self.kind == "Lstar":
            return apply_Lstar(x, q)
        if self.kind == "N":
            return apply_N(x, q)
        if self.kind == "derivation":
            return d_apply(self.aut, x, q)
        raise ValueError(f"unknown operator kind {self.kind}")


@dataclass(frozen=True)
class SectionMatrix:
    """Ball section of an operator; columns of boundary vertices are flagged."""

    rows: Mat
    boundary_cols: frozenset[int]
    reach: int


def matrix_of(op: TreeOperator, ball: Ball) -> SectionMatrix:
    """Column s is the coefficient vector of op(1_s) truncated to the ball."""
    n = ball.size
    reach = op.reach(ball.q, ball.depth)
    cols: list[dict[int, Fraction]] = []
    for s in ball.vertices:
        image = op.apply(FinSuppVector.dirac(s), ball.q)
        col = {}
        for w, c in image.items():
            i = ball.index.get(w)
            if i is not None:
                col[i] = c
        cols.append(col)
    rows = tuple(
        tuple(cols[j].get(i, Fraction(0)) for j in range(n)) for i in range(n)
    )
    boundary = frozenset(
        j for j, w in enumerate(ball.vertices) if len(w) > ball.depth - reach
    )
    return SectionMatrix(rows, boundary, reach)


def window_indices(ball: Ball, margin: int) -> list[int]:
    cut = ball.depth - margin
    idx = [i for i, w in enumerate(ball.vertices) if len(w) <= cut]
    if not idx:
        raise DegenerateWindowError(f"margin {margin} empties the depth-{ball.depth} window")
    return idx


def interior_indices(ball: Ball, margin: int) -> list[int]:
    cut = ball.depth - 2 * margin
    return [i for i, w in enumerate(ball.vertices) if len(w) <= cut]


def _check_margin(generators, ball: Ball, margin: int) -> None:
    for g in generators:
        r = tree.aut_reach(g, ball.depth)
        if margin < r:
            raise ReachViolationError(
                f"margin {margin} below reach {r} of generator {tree.format_automorphism(g)}"
            )


def _index_maps(g: TreeAutomorphism, ball: Ball):
    """Images of ball vertices under g and its inverse, None when truncated."""
    fwd = [ball.index.get(tree.aut_apply(g, w)) for w in ball.vertices]
    ginv = tree.aut_invert(g)
    inv = [ball.index.get(tree.aut_apply(ginv, w)) for w in ball.vertices]
    return fwd, inv


# ---------------------------------------------------------------------------
# solve results
# ---------------------------------------------------------------------------


@dataclass
class SolveResult:
    solver: str
    q: int
    depth: int
    margin: int
    scope: str
    unknowns: int
    full_dim: int
    interior_dim: int
    basis: list[Row]
    interior_basis: list[Row]
    interior_map: dict[int, int]
    interior_size: int
    generator_spec: str
    wall_ms: float
    checksum: str
    feasible: bool = True
    particular: Row | None = None
    certificate: object = None

    def project_interior(self, vec: Row) -> Row:
        return {self.interior_map[k]: v for k, v in vec.items() if k in self.interior_map}


def _checksum(interior_basis: list[Row], dims: tuple[int, int]) -> str:
    text = repr((dims, [sorted(row.items()) for row in interior_basis]))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _finish(solver, ball, margin, scope, system, unknowns,
            interior_map, start, generator_spec) -> SolveResult:
    sol = system.solution()
    basis = sol.nullspace_basis()
    projected = [
        proj for vec in basis
        if (proj := {interior_map[k]: v for k, v in vec.items() if k in interior_map})
    ]
    interior_size = len(set(interior_map.values()))
    interior_basis = row_space_basis(projected, interior_size)
    result = SolveResult(
        solver=solver,
        q=ball.q,
        depth=ball.depth,
        margin=margin,
        scope=scope,
        unknowns=unknowns,
        full_dim=len(basis),
        interior_dim=len(interior_basis),
        basis=basis,
        interior_basis=interior_basis,
        interior_map=interior_map,
        interior_size=interior_size,
        generator_spec=generator_spec,
        wall_ms=(time.perf_counter() - start) * 1000.0,
        checksum="",
        feasible=sol.feasible,
        particular=sol.particular(),
        certificate=sol.certificate,
    )
    result.checksum = _checksum(interior_basis, (result.full_dim, result.interior_dim))
    return result


def _spec_of(generators) -> str:
    return ";".join(tree.format_automorphism(g) for g in generators)


# ---------------------------------------------------------------------------
# the three rigidity solves
# ---------------------------------------------------------------------------


def commutant_solve(generators, ball: Ball, margin: int, scope: str = "window") -> SolveResult:
    """Exact basis of matrices S with S.lambda(g) = lambda(g).S on the window.

    The system is assembled entry-wise and eliminated exactly; the result
    reports both the full solution dimension and the dimension after
    projecting every solution to the interior block (depth <= depth-2*margin).
    """
    start = time.perf_counter()
    _check_margin(generators, ball, margin)
    window = window_indices(ball, margin)
    rows_scope = range(ball.size) if scope == "ball" else window
    n = ball.size
    system = LinearSystem(n * n)
    for g in generators:
        fwd, inv = _index_maps(g, ball)
        for s in window:
            gs = fwd[s]
            assert gs is not None, "margin check should prevent truncated window columns"
            for t in rows_scope:
                row: Row = {t * n + gs: Fraction(1)}
                if inv[t] is not None:
                    key = inv[t] * n + s
                    row[key] = row.get(key, Fraction(0)) - 1
                system.add_row(row)
    interior = interior_indices(ball, margin)
    interior_map = {
        i * n + j: a * len(interior) + b
        for a, i in enumerate(interior)
        for b, j in enumerate(interior)
    }
    return _finish("commutant", ball, margin, scope, system,
                   n * n, interior_map, start, _spec_of(generators))


def invariant_gram_solve(generators, ball: Ball, margin: int, scope: str = "window") -> SolveResult:
    """Exact basis of symmetric A with lambda(g)^T A lambda(g) = A on the window."""
    start = time.perf_counter()
    _check_margin(generators, ball, margin)
    window = window_indices(ball, margin)
    rows_scope = range(ball.size) if scope == "ball" else window
    n = ball.size
    pair_index: dict[tuple[int, int], int] = {}
    for i in range(n):
        for j in range(i, n):
            pair_index[(i, j)] = len(pair_index)

    def pidx(i: int, j: int) -> int:
        return pair_index[(i, j) if i <= j else (j, i)]

    system = LinearSystem(len(pair_index))
    for g in generators:
        fwd, _ = _index_maps(g, ball)
        for s in window:
            gs = fwd[s]
            for t in rows_scope:
                gt = fwd[t]
                row: Row = {}
                if gt is not None:
                    row[pidx(gt, gs)] = Fraction(1)
                key = pidx(t, s)
                row[key] = row.get(key, Fraction(0)) - 1
                system.add_row(row)
    interior = interior_indices(ball, margin)
    interior_pairs = {}
    for a, i in enumerate(interior):
        for b, j in enumerate(interior):
            if i <= j:
                interior_pairs[pair_index[(i, j)]] = len(interior_pairs)
    return _finish("gram", ball, margin, scope, system,
                   len(pair_index), interior_pairs, start, _spec_of(generators))


def intertwiner_solve(generators, ball: Ball, margin: int, scope: str = "window") -> SolveResult:
    """Affine solve of d(g) = A.lambda(g) - lambda(g).A imposed on the window.

    Returns a particular solution plus the homogeneous basis (the windowed
    commutant).  The child-sum section satisfies every window row exactly, so
    the system is always feasible in window scope.
    """
    start = time.perf_counter()
    _check_margin(generators, ball, margin)
    window = window_indices(ball, margin)
    rows_scope = range(ball.size) if scope == "ball" else window
    n = ball.size
    system = LinearSystem(n * n)
    for g in generators:
        fwd, inv = _index_maps(g, ball)
        dmat = matrix_of(TreeOperator("derivation", g), ball).rows
        for s in window:
            gs = fwd[s]
            for t in rows_scope:
                row: Row = {t * n + gs: Fraction(1)}
                if inv[t] is not None:
                    key = inv[t] * n + s
                    row[key] = row.get(key, Fraction(0)) - 1
                system.add_row(row, rhs=dmat[t][s])
    interior = interior_indices(ball, margin)
    interior_map = {
        i * n + j: a * len(interior) + b
        for a, i in enumerate(interior)
        for b, j in enumerate(interior)
    }
    return _finish("intertwiner", ball, margin, scope, system,
                   n * n, interior_map, start, _spec_of(generators))


def matrix_entries_row(m: Mat, n: int) -> Row:
    """Flatten a dense n x n matrix into the sparse entry indexing of the solves."""
    out: Row = {}
    for i in range(n):
        for j in range(n):
            if m[i][j]:
                out[i * n + j] = Fraction(m[i][j])
    return out


def identity_entries_row(n: int) -> Row:
    return {i * n + i: Fraction(1) for i in range(n)}


def window_residual(kind: str, entries: Row, generators, ball: Ball, margin: int) -> Fraction:
    """Largest violation of the window-scope constraints by a candidate matrix.

    ``entries`` uses the flat i*n+j indexing; for ``kind="gram"`` the candidate
    is read symmetrically.  Exact; zero means the candidate solves the system.
    """
    _check_margin(generators, ball, margin)
    window = window_indices(ball, margin)
    n = ball.size
    worst = Fraction(0)

    def get(i, j):
        return entries.get(i * n + j, Fraction(0))

    for g in generators:
        fwd, inv = _index_maps(g, ball)
        dmat = None
        if kind == "intertwiner":
            dmat = matrix_of(TreeOperator("derivation", g), ball).rows
        for s in window:
            gs = fwd[s]
            for t in window:
                if kind == "commutant":
                    val = get(t, gs) - get(inv[t], s)
                elif kind == "gram":
                    gt = fwd[t]
                    val = get(gt, gs) - get(t, s)
                elif kind == "intertwiner":
                    val = get(t, gs) - get(inv[t], s) - dmat[t][s]
                else:
                    raise ValueError(f"unknown residual kind {kind}")
                worst = max(worst, abs(val))
    return worst


# ---------------------------------------------------------------------------
# orbit counting (independent cross-check for the commutant dimension)
# ---------------------------------------------------------------------------


class _UnionFind:
    def __init__(self, size: int):
        self.parent = list(range(size))

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra

    def count(self) -> int:
        return sum(1 for i, p in enumerate(self.parent) if self.find(i) == i)


def pair_orbit_count(generators, ball: Ball, depth_bound: int | None = None,
                     include_swap: bool = False) -> int:
    """Orbits of the generated group acting diagonally on ordered vertex pairs.

    Generators must fix the root (so they restrict to permutations of the
    ball).  With ``include_swap`` the count additionally merges (a, b) with
    (b, a), which is the right comparison target for symmetric Gram solves.
    """
    depth_bound = ball.depth if depth_bound is None else depth_bound
    verts = [w for w in ball.vertices if len(w) <= depth_bound]
    index = {w: i for i, w in enumerate(verts)}
    perms = []
    for g in generators:
        if tree.aut_apply(g, tree.ROOT) != tree.ROOT:
            raise InvalidAutomorphismError("pair_orbit_count needs root-fixing generators")
        perms.append([index[tree.aut_apply(g, w)] for w in verts])
    m = len(verts)
    uf = _UnionFind(m * m)
    for perm in perms:
        for a in range(m):
            pa = perm[a] * m
            am = a * m
            for b in range(m):
                uf.union(am + b, pa + perm[b])
    if include_swap:
        for a in range(m):
            for b in range(a + 1, m):
                uf.union(a * m + b, b * m + a)
    return uf.count()


# ---------------------------------------------------------------------------
# spectral gap of the stacked difference operator
# ---------------------------------------------------------------------------


def _stacked_rows(generators, ball: Ball, excluded: Word, margin: int):
    excluded = tuple(excluded)
    for g in generators:
        if tree.aut_apply(g, excluded) != excluded:
            raise InvalidAutomorphismError("stacked_R generators must fix the excluded vertex")
    cols = [i for i, w in enumerate(ball.vertices) if w != excluded]
    col_of = {v: k for k, v in enumerate(cols)}
    window = [i for i in window_indices(ball, margin) if ball.vertices[i] != excluded]
    rows: list[dict[int, int]] = []
    for g in generators:
        _, inv = _index_maps(g, ball)
        for t in window:
            row = {col_of[t]: 1}
            src = inv[t]
            row[col_of[src]] = row.get(col_of[src], 0) - 1
            if not row[col_of[src]]:
                del row[col_of[src]]
            rows.append(row)
    return rows, len(cols)


def stacked_R(generators, ball: Ball, excluded: Word, margin: int = 0) -> np.ndarray:
    """Vertical stack of (I - lambda(g)) on window rows, excluded vertex removed."""
    rows, ncols = _stacked_rows(generators, ball, excluded, margin)
    out = np.zeros((len(rows), ncols))
    for r, row in enumerate(rows):
        for c, v in row.items():
            out[r, c] = float(v)
    return out


@dataclass(frozen=True)
class GapResult:
    value: float
    dense_value: float
    power_value: float
    rank: int
    kernel_dim: int

    def __float__(self):
        return self.value


def spectral_gap(generators, ball: Ball, excluded: Word, margin: int = 0,
                 seed: int = 0, rel_tol: float = 1e-6) -> GapResult:
    """Smallest positive singular value of the stacked difference operator.

    Orbit indicator vectors of the generated permutation action are always in
    the kernel, so the literal smallest singular value of any finite section
    is zero; the quantitative certificate lives on the orthogonal complement
    of that kernel.  The exact rational rank selects the smallest positive
    singular value, which is then computed two independent ways (dense SVD
    and shifted power iteration on R^T R with exact kernel deflation) and
    cross-checked to ``rel_tol`` relative agreement.
    """
    rows, ncols = _stacked_rows(generators, ball, excluded, margin)
    exact_rows: list[Row] = [
        {c: Fraction(v) for c, v in row.items()} for row in rows
    ]
    rank = rank_of(exact_rows, ncols)
    if rank == 0:
        return GapResult(0.0, 0.0, 0.0, 0, ncols)

    r_mat = np.zeros((len(rows), ncols))
    for r, row in enumerate(rows):
        for c, v in row.items():
            r_mat[r, c] = float(v)

    svals = np.linalg.svd(r_mat, compute_uv=False)
    dense_value = float(svals[rank - 1])

    # exact kernel of R spans ker(R^T R); deflate it during the power iteration
    system = LinearSystem(ncols)
    for row in exact_rows:
        system.add_row(row)
    kernel = system.solution().nullspace_basis()
    m = r_mat.T @ r_mat
    if kernel:
        k_mat = np.zeros((ncols, len(kernel)))
        for j, vec in enumerate(kernel):
            for c, v in vec.items():
                k_mat[c, j] = float(v)
        k_q, _ = np.linalg.qr(k_mat)
    else:
        k_q = None
    rng = np.random.default_rng(seed)

    def deflate(vec):
        if k_q is not None:
            vec = vec - k_q @ (k_q.T @ vec)
        return vec

    # largest eigenvalue of M for the shift
    v = rng.standard_normal(ncols)
    v /= np.linalg.norm(v)
    for _ in range(300):
        v = m @ v
        norm = np.linalg.norm(v)
        if norm == 0:
            break
        v /= norm
    mu_max = float(v @ (m @ v)) if np.linalg.norm(v) else 0.0
    shift = mu_max * 1.001 + 1.0

    v = deflate(rng.standard_normal(ncols))
    v /= np.linalg.norm(v)
    mu = 0.0
    for _ in range(50000):
        v = deflate(shift * v - m @ v)
        norm = np.linalg.norm(v)
        if norm == 0:
            break
        v /= norm
        mu_new = float(v @ (m @ v))
        if abs(mu_new - mu) <= 1e-15 * shift:
            mu = mu_new
            break
        mu = mu_new
    power_value = float(np.sqrt(max(mu, 0.0)))

    scale = max(dense_value, 1e-300)
    if abs(power_value - dense_value) > rel_tol * scale:
        raise NumericalInconsistencyError(
            f"gap methods disagree: dense {dense_value} vs power {power_value}"
        )
    return GapResult(dense_value, dense_value, power_value, rank, ncols - rank)


# ---------------------------------------------------------------------------
# growth of the child-sum operator
# ---------------------------------------------------------------------------


def lstar_growth(q_list, depth: int) -> list[tuple[int, Fraction]]:
    """Exact squared spectral norm of the child-sum section for each q.

    The section has pairwise disjoint column supports, so its Gram matrix is
    diagonal with the per-vertex child counts; the squared norm is the largest
    child count, attained at the root.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    out = []
    for q in q_list:
        ball = enumerate_ball(q, depth)
        a = matrix_of(TreeOperator("Lstar"), ball).rows
        gram = mat_mul(mat_transpose(a), a)
        n = ball.size
        for i in range(n):
            for j in range(n):
                if i != j and gram[i][j]:
                    raise AssertionError("child-sum columns are not disjoint")
        out.append((q, max(gram[i][i] for i in range(n))))
    return out


# ---------------------------------------------------------------------------
# shipped generator families
# ---------------------------------------------------------------------------


def transposition_portrait(q: int, path: Word, a: int, b: int) -> tree.Portrait:
    """Portrait swapping the subtrees hanging at letters a, b below ``path``."""
    last = path[-1] if path else 0
    if a == last or b == last or a == b:
        raise InvalidAutomorphismError("swap letters must be distinct and available")
    sigma = list(range(1, q + 1))
    sigma[a - 1], sigma[b - 1] = b, a
    node = tree.PNode(tuple(sigma))
    for letter in reversed(path):
        node = tree.PNode(tuple(range(1, q + 1)), ((letter, node),))
    return tree.Portrait(q, node)


def cycle_portrait(q: int) -> tree.Portrait:
    sigma = tuple(list(range(2, q + 1)) + [1])
    return tree.Portrait(q, tree.PNode(sigma))


def portrait_generators(q: int, max_vertex_depth: int) -> list[TreeAutomorphism]:
    """Adjacent child-swaps at every vertex of depth <= max_vertex_depth.

    These generate the full rooted symmetry of any ball of depth
    max_vertex_depth + 1.
    """
    gens: list[TreeAutomorphism] = []
    for v in tree.ball_words(q, max_vertex_depth):
        last = v[-1] if v else 0
        available = [j for j in range(1, q + 1) if j != last]
        for a, b in zip(available, available[1:]):
            gens.append(transposition_portrait(q, v, a, b))
    return gens


def default_generators(q: int, depth: int) -> list[TreeAutomorphism]:
    """Shipped solver generators: rooted swaps to depth-1 nodes plus two shifts."""
    gens = portrait_generators(q, max(0, depth - 2))
    gens.append(tree.Translation(q, (1,)))
    gens.append(tree.Translation(q, (2,)))
    return gens


def gap_generators(q: int) -> list[TreeAutomorphism]:
    """Three root-fixing portraits acting freely near the root (fewer for q=2)."""
    gens: list[TreeAutomorphism] = [cycle_portrait(q)] if q >= 3 else []
    gens.append(transposition_portrait(q, (), 1, 2))
    if q >= 3:
        available = [j for j in range(2, q + 1)]
        gens.append(transposition_portrait(q, (1,), available[0], available[1]))
    return gens[:3]


def distance_matrix(ball: Ball, d: int) -> Mat:
    """Indicator section of the distance-d relation; an infinite-tree commutant element."""
    n = ball.size
    return tuple(
        tuple(Fraction(int(tree.vertex_distance(ball.vertices[i], ball.vertices[j]) == d))
              for j in range(n))
        for i in range(n)
    )
