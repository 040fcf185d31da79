"""Exact matrix algebra over the rings in `jordanlab.rings`.

Supports canonical subspace bases (reduced column echelon over fields and
local nilpotent extensions, Hermite form over Z restricted to direct
summands), linear solving, and inversion with exact unit pivots.
"""

from __future__ import annotations

from typing import Iterator, List, Optional, Sequence

from .rings import (IntegerRing, NotInvertible, Ring, RingElement, RingError,
                    WeilRing, Z)


class LinAlgError(Exception):
    pass


class NotSummand(LinAlgError):
    """The integer span is not a direct summand of the ambient module."""


class UnsupportedRing(LinAlgError):
    pass


class Matrix:
    """Dense matrix of ring elements sharing one descriptor."""

    __slots__ = ("ring", "nrows", "ncols", "rows")

    def __init__(self, ring: Ring, rows: Sequence[Sequence[RingElement]],
                 ncols: Optional[int] = None):
        self.ring = ring
        self.rows: List[List[RingElement]] = [list(r) for r in rows]
        self.nrows = len(self.rows)
        self.ncols = len(self.rows[0]) if self.rows else (ncols or 0)
        for r in self.rows:
            if len(r) != self.ncols:
                raise LinAlgError("ragged rows")

    # -- constructors --------------------------------------------------------
    @classmethod
    def from_ints(cls, ring: Ring, rows: Sequence[Sequence[int]]) -> "Matrix":
        return cls(ring, [[ring.from_int(v) for v in r] for r in rows])

    @classmethod
    def identity(cls, ring: Ring, n: int) -> "Matrix":
        one, zero = ring.one(), ring.zero()
        return cls(ring, [[one if i == j else zero for j in range(n)] for i in range(n)])

    @classmethod
    def zeros(cls, ring: Ring, nrows: int, ncols: int) -> "Matrix":
        zero = ring.zero()
        return cls(ring, [[zero] * ncols for _ in range(nrows)], ncols=ncols)

    def copy(self) -> "Matrix":
        return Matrix(self.ring, [list(r) for r in self.rows], ncols=self.ncols)

    # -- shape and access ----------------------------------------------------
    def __getitem__(self, ij) -> RingElement:
        i, j = ij
        return self.rows[i][j]

    def column(self, j: int) -> List[RingElement]:
        return [r[j] for r in self.rows]

    def columns(self) -> Iterator[List[RingElement]]:
        for j in range(self.ncols):
            yield self.column(j)

    def hstack(self, other: "Matrix") -> "Matrix":
        if other.nrows != self.nrows:
            raise LinAlgError("hstack shape mismatch")
        return Matrix(self.ring, [a + b for a, b in zip(self.rows, other.rows)],
                      ncols=self.ncols + other.ncols)

    def transpose(self) -> "Matrix":
        return Matrix(self.ring, [list(col) for col in zip(*self.rows)] if self.rows
                      else [], ncols=self.nrows)

    # -- arithmetic ------------------------------------------------------------
    def __add__(self, other: "Matrix") -> "Matrix":
        self._conform(other, same_shape=True)
        return Matrix(self.ring, [[a + b for a, b in zip(r1, r2)]
                                  for r1, r2 in zip(self.rows, other.rows)],
                      ncols=self.ncols)

    def __sub__(self, other: "Matrix") -> "Matrix":
        self._conform(other, same_shape=True)
        return Matrix(self.ring, [[a - b for a, b in zip(r1, r2)]
                                  for r1, r2 in zip(self.rows, other.rows)],
                      ncols=self.ncols)

    def __neg__(self) -> "Matrix":
        return Matrix(self.ring, [[-a for a in r] for r in self.rows], ncols=self.ncols)

    def scaled(self, c: RingElement) -> "Matrix":
        return Matrix(self.ring, [[c * a for a in r] for r in self.rows], ncols=self.ncols)

    def __matmul__(self, other: "Matrix") -> "Matrix":
        self._conform(other)
        if self.ncols != other.nrows:
            raise LinAlgError("product shape mismatch")
        zero = self.ring.zero()
        ocols = list(zip(*other.rows)) if other.rows else []
        out = []
        for r in self.rows:
            row = []
            for c in ocols:
                acc = zero
                for a, b in zip(r, c):
                    acc = acc + a * b
                row.append(acc)
            out.append(row)
        return Matrix(self.ring, out, ncols=other.ncols)

    def _conform(self, other: "Matrix", same_shape: bool = False):
        if self.ring != other.ring:
            raise LinAlgError("ring mismatch")
        if same_shape and (self.nrows, self.ncols) != (other.nrows, other.ncols):
            raise LinAlgError("shape mismatch")

    def is_zero(self) -> bool:
        return all(a.is_zero() for r in self.rows for a in r)

    def key(self):
        return (self.nrows, self.ncols) + tuple(a.key() for r in self.rows for a in r)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Matrix):
            return NotImplemented
        return self.ring == other.ring and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __repr__(self) -> str:
        return "[" + "; ".join(", ".join(str(a) for a in r) for r in self.rows) + "]"

    # -- elimination -----------------------------------------------------------
    def rref_columns(self) -> "Matrix":
        """Reduced column echelon form using exact unit pivots.

        Pivot selection scans rows top-down and takes the first column whose
        entry in that row is a unit (over a local nilpotent extension: base
        part invertible), so the result is a deterministic canonical basis of
        the column span over fields and local rings.  Zero columns dropped.
        """
        m = [list(col) for col in zip(*self.rows)]  # work on columns
        ring = self.ring
        pivots = []
        used = [False] * len(m)
        for row in range(self.nrows):
            pick = None
            for j, col in enumerate(m):
                if used[j]:
                    continue
                inv = col[row].try_inverse()
                if inv is not None:
                    pick = (j, inv)
                    break
            if pick is None:
                continue
            j, inv = pick
            m[j] = [inv * v for v in m[j]]
            for k, col in enumerate(m):
                if k == j or col[row].is_zero():
                    continue
                c = col[row]
                m[k] = [v - c * w for v, w in zip(col, m[j])]
            used[j] = True
            pivots.append((row, j))
        cols = [m[j] for _, j in pivots]
        leftover = [m[j] for j in range(len(m)) if not used[j]
                    and any(not v.is_zero() for v in m[j])]
        if leftover:
            raise UnsupportedRing(
                f"no unit pivot available over {ring}; span is not free in canonical form")
        return Matrix(ring, list(zip(*cols)) if cols else [[] for _ in range(self.nrows)],
                      ncols=len(cols))

    def invert(self) -> Optional["Matrix"]:
        """Exact two-sided inverse, or None when not invertible."""
        if self.nrows != self.ncols:
            raise LinAlgError("only square matrices invert")
        n = self.nrows
        if n == 0:
            return Matrix(self.ring, [], ncols=0)
        aug = [list(r) + list(e) for r, e in
               zip(self.rows, Matrix.identity(self.ring, n).rows)]
        for col in range(n):
            pick = None
            for i in range(col, n):
                inv = aug[i][col].try_inverse()
                if inv is not None:
                    pick = (i, inv)
                    break
            if pick is None:
                return None
            i, inv = pick
            aug[col], aug[i] = aug[i], aug[col]
            aug[col] = [inv * v for v in aug[col]]
            for k in range(n):
                if k == col or aug[k][col].is_zero():
                    continue
                c = aug[k][col]
                aug[k] = [v - c * w for v, w in zip(aug[k], aug[col])]
        return Matrix(self.ring, [row[n:] for row in aug], ncols=n)

    def is_invertible(self) -> bool:
        if self.nrows != self.ncols:
            return False
        if isinstance(self.ring, IntegerRing):
            return abs(_int_det(self)) == 1
        return self.invert() is not None

    def solve(self, b: "Matrix") -> Optional["Matrix"]:
        """Exact solution x of self @ x = b, or None when inconsistent.

        Over fields and local nilpotent extensions any consistent system is
        solved; over Z the system is solved in rationals and accepted when
        the solution is integral.
        """
        if isinstance(self.ring, IntegerRing):
            return _solve_over_z(self, b)
        self._conform(b)
        if b.nrows != self.nrows:
            raise LinAlgError("rhs shape mismatch")
        n, m = self.nrows, self.ncols
        aug = [list(r) + list(rb) for r, rb in zip(self.rows, b.rows)]
        pivot_cols = []
        row = 0
        for col in range(m):
            pick = None
            for i in range(row, n):
                inv = aug[i][col].try_inverse()
                if inv is not None:
                    pick = (i, inv)
                    break
            if pick is None:
                if any(not aug[i][col].is_zero() for i in range(row, n)):
                    raise UnsupportedRing(
                        f"non-unit pivot over {self.ring}; cannot reduce")
                continue
            i, inv = pick
            aug[row], aug[i] = aug[i], aug[row]
            aug[row] = [inv * v for v in aug[row]]
            for k in range(n):
                if k == row or aug[k][col].is_zero():
                    continue
                c = aug[k][col]
                aug[k] = [v - c * w for v, w in zip(aug[k], aug[row])]
            pivot_cols.append(col)
            row += 1
            if row == n:
                break
        for i in range(row, n):
            if any(not v.is_zero() for v in aug[i][m:]):
                return None  # inconsistent
        zero = self.ring.zero()
        x = [[zero] * b.ncols for _ in range(m)]
        for r, col in enumerate(pivot_cols):
            x[col] = aug[r][m:]
        return Matrix(self.ring, x, ncols=b.ncols)


# ---------------------------------------------------------------------------
# integer lattice machinery


def _int_rows(m: Matrix) -> List[List[int]]:
    return [[a.payload for a in r] for r in m.rows]


def _int_det(m: Matrix) -> int:
    rows = _int_rows(m)
    n = len(rows)
    if n != m.ncols:
        raise LinAlgError("determinant of non-square matrix")
    # Bareiss fraction-free elimination
    sign = 1
    prev = 1
    rows = [list(r) for r in rows]
    for k in range(n - 1):
        if rows[k][k] == 0:
            for i in range(k + 1, n):
                if rows[i][k] != 0:
                    rows[k], rows[i] = rows[i], rows[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                rows[i][j] = (rows[i][j] * rows[k][k] - rows[i][k] * rows[k][j]) // prev
            rows[i][k] = 0
        prev = rows[k][k]
    return sign * rows[n - 1][n - 1]


def hermite_normal_form(rows: List[List[int]]) -> List[List[int]]:
    """Row-style Hermite normal form: echelon, positive pivots, entries above
    each pivot reduced into [0, pivot).  Zero rows are dropped."""
    m = [list(r) for r in rows]
    nr = len(m)
    nc = len(m[0]) if m else 0
    r = 0
    for c in range(nc):
        piv = None
        for i in range(r, nr):
            if m[i][c] != 0:
                piv = i
                break
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        # clear below by gcd steps
        for i in range(r + 1, nr):
            while m[i][c] != 0:
                q = m[r][c] // m[i][c]
                m[r] = [a - q * b for a, b in zip(m[r], m[i])]
                m[r], m[i] = m[i], m[r]
        if m[r][c] < 0:
            m[r] = [-a for a in m[r]]
        for i in range(r):
            q = m[i][c] // m[r][c]
            if q:
                m[i] = [a - q * b for a, b in zip(m[i], m[r])]
        r += 1
        if r == nr:
            break
    return [row for row in m[:r]]


def smith_divisors(rows: List[List[int]]) -> List[int]:
    """Nonzero elementary divisors d1 | d2 | ... of an integer matrix."""
    m = [list(r) for r in rows]
    nr, nc = len(m), len(m[0]) if m else 0
    divisors = []
    s = 0
    while True:
        found = None
        for i in range(s, nr):
            for j in range(s, nc):
                if m[i][j] != 0:
                    if found is None or abs(m[i][j]) < abs(m[found[0]][found[1]]):
                        found = (i, j)
        if found is None:
            break
        i, j = found
        m[s], m[i] = m[i], m[s]
        for row in m:
            row[s], row[j] = row[j], row[s]
        dirty = True
        while dirty:
            dirty = False
            for i in range(s + 1, nr):
                if m[i][s] != 0:
                    q = m[i][s] // m[s][s]
                    m[i] = [a - q * b for a, b in zip(m[i], m[s])]
                    if m[i][s] != 0:
                        m[s], m[i] = m[i], m[s]
                        dirty = True
            for j in range(s + 1, nc):
                col = [m[i][j] for i in range(nr)]
                if col[s] != 0:
                    q = col[s] // m[s][s]
                    if q:
                        for i in range(nr):
                            m[i][j] -= q * m[i][s]
                    if m[s][j] != 0:
                        for i in range(nr):
                            m[i][s], m[i][j] = m[i][j], m[i][s]
                        dirty = True
        # ensure divisibility of the remaining block
        for i in range(s + 1, nr):
            for j in range(s + 1, nc):
                if m[i][j] % m[s][s] != 0:
                    m[s] = [a + b for a, b in zip(m[s], m[i])]
                    dirty = True
                    break
            if dirty:
                break
        if dirty:
            continue
        divisors.append(abs(m[s][s]))
        s += 1
    return divisors


def _solve_over_z(a: Matrix, b: Matrix) -> Optional[Matrix]:
    from .rings import Q as QQ
    aq = Matrix(QQ, [[QQ.from_int(v.payload) for v in r] for r in a.rows], ncols=a.ncols)
    bq = Matrix(QQ, [[QQ.from_int(v.payload) for v in r] for r in b.rows], ncols=b.ncols)
    xq = aq.solve(bq)
    if xq is None:
        return None
    rows = []
    for r in xq.rows:
        row = []
        for v in r:
            if v.payload.denominator != 1:
                return None
            row.append(Z.from_int(int(v.payload)))
        rows.append(row)
    return Matrix(Z, rows, ncols=b.ncols)


# ---------------------------------------------------------------------------
# canonical spans


def canonical_span(m: Matrix) -> Matrix:
    """Canonical basis matrix of the column span of m.

    Over a field or a local nilpotent extension of one this is the reduced
    column echelon basis; over Z it is the Hermite basis of the lattice,
    accepted only when the lattice is a direct summand (raises NotSummand
    otherwise).  Rings such as Z/6 are rejected.
    """
    ring = m.ring
    if isinstance(ring, IntegerRing):
        rows = [r for r in _int_rows(m.transpose()) if any(r)]
        if not rows:
            return Matrix(ring, [[] for _ in range(m.nrows)], ncols=0)
        h = hermite_normal_form(rows)
        if any(d != 1 for d in smith_divisors(h)):
            raise NotSummand(f"integer span with divisors {smith_divisors(h)}")
        return Matrix.from_ints(ring, [list(r) for r in zip(*h)])
    if ring.is_field or ring.is_local_weil:
        return m.rref_columns()
    raise UnsupportedRing(f"canonical spans are not defined over {ring}")


def span_rank(m: Matrix) -> int:
    return canonical_span(m).ncols
