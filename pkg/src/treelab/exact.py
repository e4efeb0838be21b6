"""Exact rational linear algebra: sparse elimination, null spaces, dense helpers.

The elimination keeps a fully reduced pivot basis (each pivot column appears in
exactly one stored row), rescales every row to coprime integers to control
entry growth, and picks the largest-magnitude integer coefficient of a new row
as its pivot.  Everything is exact; floating point never enters this module.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd

Row = dict[int, Fraction]
Mat = tuple[tuple[Fraction, ...], ...]


class SingularMatrixError(Exception):
    pass


# ---------------------------------------------------------------------------
# dense rational matrices (small dimensions)
# ---------------------------------------------------------------------------


def frac_mat(rows) -> Mat:
    return tuple(tuple(Fraction(x) for x in row) for row in rows)


def identity_mat(n: int) -> Mat:
    return tuple(tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n))


def zero_mat(n: int, m: int | None = None) -> Mat:
    m = n if m is None else m
    return tuple((Fraction(0),) * m for _ in range(n))


def mat_shape(a: Mat) -> tuple[int, int]:
    return (len(a), len(a[0]) if a else 0)


def mat_add(a: Mat, b: Mat) -> Mat:
    return tuple(tuple(x + y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def mat_sub(a: Mat, b: Mat) -> Mat:
    return tuple(tuple(x - y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def mat_scale(c, a: Mat) -> Mat:
    c = Fraction(c)
    return tuple(tuple(c * x for x in row) for row in a)


def mat_mul(a: Mat, b: Mat) -> Mat:
    n, k = mat_shape(a)
    k2, m = mat_shape(b)
    if k != k2:
        raise ValueError(f"shape mismatch: {n}x{k} times {k2}x{m}")
    bt = list(zip(*b))
    return tuple(
        tuple(sum((x * y for x, y in zip(row, col)), Fraction(0)) for col in bt)
        for row in a
    )


def mat_transpose(a: Mat) -> Mat:
    return tuple(zip(*a)) if a else ()


def mat_eq(a: Mat, b: Mat) -> bool:
    return mat_shape(a) == mat_shape(b) and all(
        x == y for ra, rb in zip(a, b) for x, y in zip(ra, rb)
    )


def mat_is_zero(a: Mat) -> bool:
    return all(not x for row in a for x in row)


def mat_inverse(a: Mat) -> Mat:
    n, m = mat_shape(a)
    if n != m:
        raise ValueError("inverse of a non-square matrix")
    work = [list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(a)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if work[r][col]), None)
        if pivot is None:
            raise SingularMatrixError("matrix is singular")
        work[col], work[pivot] = work[pivot], work[col]
        inv = Fraction(1) / work[col][col]
        work[col] = [x * inv for x in work[col]]
        for r in range(n):
            if r != col and work[r][col]:
                factor = work[r][col]
                work[r] = [x - factor * y for x, y in zip(work[r], work[col])]
    return tuple(tuple(row[n:]) for row in work)


def mat_det(a: Mat) -> Fraction:
    n, m = mat_shape(a)
    if n != m:
        raise ValueError("determinant of a non-square matrix")
    work = [list(row) for row in a]
    det = Fraction(1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if work[r][col]), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            work[col], work[pivot] = work[pivot], work[col]
            det = -det
        det *= work[col][col]
        inv = Fraction(1) / work[col][col]
        for r in range(col + 1, n):
            if work[r][col]:
                factor = work[r][col] * inv
                work[r] = [x - factor * y for x, y in zip(work[r], work[col])]
    return det


def leading_minors_positive(a: Mat) -> bool:
    """Sylvester test: all leading principal minors strictly positive."""
    n, _ = mat_shape(a)
    for k in range(1, n + 1):
        if mat_det(tuple(row[:k] for row in a[:k])) <= 0:
            return False
    return True


# ---------------------------------------------------------------------------
# sparse exact elimination
# ---------------------------------------------------------------------------

_RHS = -1  # reserved key for the right-hand side inside stored rows


def _normalize_content(row: Row) -> Row:
    """Scale a row to coprime integer entries (sign of pivot handled later)."""
    if not row:
        return row
    denom_lcm = 1
    for c in row.values():
        denom_lcm = denom_lcm * c.denominator // gcd(denom_lcm, c.denominator)
    numerators = [int(c * denom_lcm) for c in row.values()]
    g = 0
    for x in numerators:
        g = gcd(g, abs(x))
    scale = Fraction(denom_lcm, g if g else 1)
    return {k: c * scale for k, c in row.items()}


@dataclass
class LinearSolution:
    """Reduced form of a linear system over the rationals."""

    ncols: int
    pivots: dict[int, Row]            # pivot column -> normalized row (pivot coeff 1)
    free_cols: list[int]
    feasible: bool
    certificate: tuple[Row, Fraction] | None = None   # combination of input rows, value

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def nullspace_basis(self) -> list[Row]:
        """One sparse basis vector per free column of the homogeneous system."""
        basis = []
        for f in self.free_cols:
            vec: Row = {f: Fraction(1)}
            for col, row in self.pivots.items():
                coeff = row.get(f)
                if coeff:
                    vec[col] = -coeff
            basis.append(vec)
        return basis

    def particular(self) -> Row | None:
        if not self.feasible:
            return None
        vec: Row = {}
        for col, row in self.pivots.items():
            rhs = row.get(_RHS)
            if rhs:
                vec[col] = rhs
        return vec


class LinearSystem:
    """Incremental exact RREF over the rationals with sparse rows."""

    def __init__(self, ncols: int, track_provenance: bool = False):
        self.ncols = ncols
        self.track = track_provenance
        self.pivots: dict[int, Row] = {}
        self.provenance: dict[int, Row] = {}
        self.free_cols_cache = None
        self.infeasible: tuple[Row, Fraction] | None = None
        self.nrows = 0
        self._seen: set[tuple] = set()

    def add_row(self, coeffs: Row, rhs=Fraction(0)):
        """Insert one equation  sum coeffs[c]*x_c = rhs."""
        rhs = Fraction(rhs)
        row = {c: Fraction(v) for c, v in coeffs.items() if v}
        if rhs:
            row[_RHS] = rhs
        row_id = self.nrows
        self.nrows += 1
        if not row:
            return
        signature = tuple(sorted(row.items()))
        if signature in self._seen and not self.track:
            return
        self._seen.add(signature)

        combo: Row = {row_id: Fraction(1)} if self.track else {}
        # one pass suffices: stored pivot rows contain no other pivot columns
        for col in [c for c in row if c != _RHS and c in self.pivots]:
            factor = row.get(col)
            if not factor:
                continue
            pivot_row = self.pivots[col]
            for k, v in pivot_row.items():
                s = row.get(k, Fraction(0)) - factor * v
                if s:
                    row[k] = s
                else:
                    row.pop(k, None)
            if self.track:
                for k, v in self.provenance[col].items():
                    s = combo.get(k, Fraction(0)) - factor * v
                    if s:
                        combo[k] = s
                    else:
                        combo.pop(k, None)

        cols = [c for c in row if c != _RHS]
        if not cols:
            residual = row.get(_RHS, Fraction(0))
            if residual and self.infeasible is None:
                self.infeasible = (combo, residual)
            return

        row = _normalize_content(row)
        pivot_col = max(cols, key=lambda c: (abs(row[c]), -c))
        inv = Fraction(1) / row[pivot_col]
        row = {k: v * inv for k, v in row.items()}
        if self.track:
            combo = {k: v * inv for k, v in combo.items()}

        # back-eliminate the new pivot column from all stored rows
        for col, stored in list(self.pivots.items()):
            factor = stored.get(pivot_col)
            if not factor:
                continue
            for k, v in row.items():
                s = stored.get(k, Fraction(0)) - factor * v
                if s:
                    stored[k] = s
                else:
                    stored.pop(k, None)
            if self.track:
                stored_combo = self.provenance[col]
                for k, v in combo.items():
                    s = stored_combo.get(k, Fraction(0)) - factor * v
                    if s:
                        stored_combo[k] = s
                    else:
                        stored_combo.pop(k, None)

        self.pivots[pivot_col] = row
        if self.track:
            self.provenance[pivot_col] = combo

    def solution(self) -> LinearSolution:
        free_cols = [c for c in range(self.ncols) if c not in self.pivots]
        return LinearSolution(
            ncols=self.ncols,
            pivots={c: dict(r) for c, r in self.pivots.items()},
            free_cols=free_cols,
            feasible=self.infeasible is None,
            certificate=self.infeasible,
        )


def row_space_basis(vectors: list[Row], ncols: int) -> list[Row]:
    """Canonical reduced basis of the span; equal spans give equal output."""
    system = LinearSystem(ncols)
    for vec in vectors:
        system.add_row(vec)
    sol = system.solution()
    basis = []
    for col in sorted(sol.pivots):
        row = dict(sol.pivots[col])
        row.pop(_RHS, None)
        basis.append(row)
    return basis


def rank_of(vectors: list[Row], ncols: int) -> int:
    return len(row_space_basis(vectors, ncols))


def in_span(vector: Row, basis: list[Row], ncols: int) -> bool:
    return rank_of(list(basis) + [vector], ncols) == rank_of(list(basis), ncols)


def span_equal(a: list[Row], b: list[Row], ncols: int) -> bool:
    return row_space_basis(a, ncols) == row_space_basis(b, ncols)
