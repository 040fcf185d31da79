"""Tangent objects of a geometry: scalar extension by nilpotent rings,
extraction of the quadratic pair at a base pair, quadratic Jordan pairs,
algebras and triple systems, the graded bracket algebra of quadratic vector
fields, and the closed quasi-inverse formulas with geometric cross-checks.

Chart conventions at a base pair (o, o'), with the ambient module written
as o (+) o' (columns of [basis(o) | basis(o')]):

    plus chart   x = colspan [I; X]  ->  X      (maps o -> o')
    minus chart  a = colspan [A; I]  ->  -A     (maps o' -> o)

The minus-side sign is what makes the extracted quadratic map come out as
Q(x)a = x a x on matrix Grassmannians, and makes the quasi-translation of
the chart of o agree with the closed quasi-inverse formula
x^a = B(x,a)^(-1) (x - Q(x)a).
"""

from __future__ import annotations

import itertools
import random
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .geometry import Geometry, GrasPoint, ProjectiveMap
from .linalg import Matrix
from .report import FAIL, PASS, SKIP, CheckRecord, CheckReport, Stopwatch
from .rings import (PolynomialRing, Ring, RingElement, RingError, WeilRing,
                    weil_extend)
from .verify import random_element


class TangentError(Exception):
    pass


class NotQuasiInvertible(TangentError):
    pass


# ---------------------------------------------------------------------------
# ring plumbing


def fresh_names(ring: Ring, count: int, stem: str = "t") -> List[str]:
    used = set()
    r = ring
    while isinstance(r, (WeilRing, PolynomialRing)):
        used.update(r.names)
        r = r.base
    out, i = [], 1
    while len(out) < count:
        nm = f"{stem}{i}"
        if nm not in used:
            out.append(nm)
        i += 1
    return out


def ring_embedding(src: Ring, dst: Ring) -> Callable[[RingElement], RingElement]:
    """Coefficient-preserving embedding src -> dst built from constant
    injections (dst must be an iterated extension of src)."""
    if src == dst:
        return lambda a: a
    if isinstance(dst, WeilRing):
        inner = ring_embedding(src, dst.base)
        return lambda a: dst.inject(inner(a))
    if isinstance(dst, PolynomialRing):
        inner = ring_embedding(src, dst.base)
        return lambda a: dst.el({dst._zero_mon: inner(a).payload}
                                if not dst.base.p_is_zero(inner(a).payload) else {})
    raise TangentError(f"no embedding of {src} into {dst}")


def extend_geometry(g: Geometry, ring_ext: Ring) -> Geometry:
    """Same Grassmannian construction over the extended scalars."""
    if not isinstance(ring_ext, WeilRing) or ring_ext.base != g.ring:
        raise TangentError("extension must be a nilpotent extension of the base ring")
    return Geometry(ring_ext, g.ambient, g.ranks)


def lift_point(ext: Geometry, p: GrasPoint) -> GrasPoint:
    """Zero section: inject each basis entry into the extended ring."""
    emb = ring_embedding(p.geometry.ring, ext.ring)
    rows = [[emb(v) for v in row] for row in p.basis.rows]
    return ext.point(Matrix(ext.ring, rows, ncols=p.basis.ncols))


def project_point(base: Geometry, p: GrasPoint) -> GrasPoint:
    """Base-part projection of a point of the extended geometry."""
    ring = p.geometry.ring
    if not isinstance(ring, WeilRing):
        raise TangentError("projection expects a point over a nilpotent extension")
    rows = [[ring.base_part(v) for v in row] for row in p.basis.rows]
    return base.point(Matrix(base.ring, rows, ncols=p.basis.ncols))


def lift_map(ext: Geometry, m: ProjectiveMap) -> ProjectiveMap:
    emb = ring_embedding(m.geometry.ring, ext.ring)
    rows = [[emb(v) for v in row] for row in m.matrix.rows]
    return ProjectiveMap(ext, Matrix(ext.ring, rows, ncols=m.matrix.ncols))


# ---------------------------------------------------------------------------
# charts at a base pair


class PairChart:
    """Matrix charts of the two-sided big cell at a transversal pair."""

    def __init__(self, geometry: Geometry, o: GrasPoint, oprime: GrasPoint):
        if not geometry.transversal(o, oprime):
            raise TangentError("chart anchor must be a transversal pair")
        self.geometry = geometry
        self.o = o
        self.oprime = oprime
        self.p = o.rank
        self.q = oprime.rank
        self.trans = o.basis.hstack(oprime.basis)
        self.trans_inv = self.trans.invert()
        if self.trans_inv is None:
            raise TangentError("adapted basis is not invertible")

    def lift(self, ring_ext: Ring) -> "PairChart":
        ext = extend_geometry(self.geometry, ring_ext)
        return PairChart(ext, lift_point(ext, self.o), lift_point(ext, self.oprime))

    # -- plus side (chart of o', origin o) ---------------------------------
    def chart_plus(self, x: GrasPoint) -> Optional[Matrix]:
        c = self.trans_inv @ x.basis
        if c.ncols != self.p:
            return None
        top = Matrix(c.ring, c.rows[:self.p], ncols=c.ncols)
        bot = Matrix(c.ring, c.rows[self.p:], ncols=c.ncols)
        top_inv = top.invert()
        return None if top_inv is None else bot @ top_inv

    def point_plus(self, x: Matrix) -> GrasPoint:
        cols = Matrix.identity(self.geometry.ring, self.p)
        stacked = Matrix(self.geometry.ring, cols.rows + x.rows, ncols=self.p)
        return self.geometry.point(self.trans @ stacked)

    # -- minus side (chart of o, origin o') ---------------------------------
    def chart_minus(self, a: GrasPoint) -> Optional[Matrix]:
        c = self.trans_inv @ a.basis
        if c.ncols != self.q:
            return None
        top = Matrix(c.ring, c.rows[:self.p], ncols=c.ncols)
        bot = Matrix(c.ring, c.rows[self.p:], ncols=c.ncols)
        bot_inv = bot.invert()
        return None if bot_inv is None else -(top @ bot_inv)

    def point_minus(self, alpha: Matrix) -> GrasPoint:
        eye = Matrix.identity(self.geometry.ring, self.q)
        stacked = Matrix(self.geometry.ring, (-alpha).rows + eye.rows, ncols=self.q)
        return self.geometry.point(self.trans @ stacked)

    def quasi_translation(self, a: GrasPoint) -> ProjectiveMap:
        """Translation of the chart of o moving o' to a."""
        return self.geometry.translation_operator(self.o, a, self.oprime,
                                                  check=False)

    def translation(self, v: GrasPoint) -> ProjectiveMap:
        """Translation of the chart of o' moving o to v."""
        return self.geometry.translation_operator(self.oprime, v, self.o,
                                                  check=False)


# ---------------------------------------------------------------------------
# quadratic Jordan pairs


def _flatten(m: Matrix) -> List[RingElement]:
    return [v for row in m.rows for v in row]


def _unflatten(ring: Ring, vec: Sequence[RingElement], shape: Tuple[int, int]) -> Matrix:
    r, c = shape
    return Matrix(ring, [list(vec[i * c:(i + 1) * c]) for i in range(r)], ncols=c)


def _mat_vec(m: Matrix, vec: Sequence[RingElement]) -> List[RingElement]:
    return [sum((a * b for a, b in zip(row, vec)), m.ring.zero()) for row in m.rows]


class QuadraticJordanPair:
    """Pair of free modules with quadratic maps stored through basis values
    and polarizations, so that evaluation makes sense over every scalar
    extension without dividing by two.

    q_plus[i] is the matrix of Q(e_i): V- -> V+; q_plus_pol[(i,j)] the matrix
    of Q(e_i, e_j) = Q(e_i + e_j) - Q(e_i) - Q(e_j) for i < j; dually for the
    minus side."""

    def __init__(self, ring: Ring, n_plus: int, n_minus: int,
                 q_plus: List[Matrix], q_plus_pol: Dict[Tuple[int, int], Matrix],
                 q_minus: List[Matrix], q_minus_pol: Dict[Tuple[int, int], Matrix],
                 shape_plus: Optional[Tuple[int, int]] = None,
                 shape_minus: Optional[Tuple[int, int]] = None):
        self.ring = ring
        self.n_plus = n_plus
        self.n_minus = n_minus
        self.q_plus = q_plus
        self.q_plus_pol = q_plus_pol
        self.q_minus = q_minus
        self.q_minus_pol = q_minus_pol
        self.shape_plus = shape_plus or (n_plus, 1)
        self.shape_minus = shape_minus or (n_minus, 1)

    # -- vectors ---------------------------------------------------------------
    def zero_plus(self) -> List[RingElement]:
        return [self.ring.zero()] * self.n_plus

    def zero_minus(self) -> List[RingElement]:
        return [self.ring.zero()] * self.n_minus

    def basis_plus(self, i: int) -> List[RingElement]:
        return [self.ring.one() if k == i else self.ring.zero()
                for k in range(self.n_plus)]

    def basis_minus(self, i: int) -> List[RingElement]:
        return [self.ring.one() if k == i else self.ring.zero()
                for k in range(self.n_minus)]

    # -- quadratic operators -----------------------------------------------
    def _q_of(self, vec, values, polars, n, out_dim) -> Matrix:
        zero = Matrix.zeros(self.ring, out_dim, values[0].ncols)
        acc = zero
        for i in range(n):
            ci = vec[i]
            if ci.is_zero():
                continue
            acc = acc + values[i].scaled(ci * ci)
            for j in range(i + 1, n):
                cj = vec[j]
                if cj.is_zero():
                    continue
                acc = acc + polars[(i, j)].scaled(ci * cj)
        return acc

    def q_plus_op(self, x: Sequence[RingElement]) -> Matrix:
        return self._q_of(x, self.q_plus, self.q_plus_pol, self.n_plus, self.n_plus)

    def q_minus_op(self, a: Sequence[RingElement]) -> Matrix:
        return self._q_of(a, self.q_minus, self.q_minus_pol, self.n_minus,
                          self.n_minus)

    def q_plus_apply(self, x, a) -> List[RingElement]:
        return _mat_vec(self.q_plus_op(x), a)

    def q_minus_apply(self, a, x) -> List[RingElement]:
        return _mat_vec(self.q_minus_op(a), x)

    def _pol_op(self, x, z, q_of) -> Matrix:
        xz = [u + v for u, v in zip(x, z)]
        return q_of(xz) - q_of(x) - q_of(z)

    def d_plus_op(self, x, y) -> Matrix:
        """D(x, y) on the plus module: z -> Q(x, z)y, column by column."""
        cols = []
        for k in range(self.n_plus):
            ek = self.basis_plus(k)
            cols.append(_mat_vec(self._pol_op(x, ek, self.q_plus_op), y))
        return Matrix(self.ring, [list(r) for r in zip(*cols)], ncols=self.n_plus)

    def d_minus_op(self, a, x) -> Matrix:
        cols = []
        for k in range(self.n_minus):
            fk = self.basis_minus(k)
            cols.append(_mat_vec(self._pol_op(a, fk, self.q_minus_op), x))
        return Matrix(self.ring, [list(r) for r in zip(*cols)], ncols=self.n_minus)

    def bergman_plus(self, y, b) -> Matrix:
        eye = Matrix.identity(self.ring, self.n_plus)
        return eye - self.d_plus_op(y, b) + self.q_plus_op(y) @ self.q_minus_op(b)

    def bergman_minus(self, b, y) -> Matrix:
        eye = Matrix.identity(self.ring, self.n_minus)
        return eye - self.d_minus_op(b, y) + self.q_minus_op(b) @ self.q_plus_op(y)

    def beta(self, x, a) -> Tuple[Matrix, Matrix]:
        """Inner automorphism pair (B(x,a), B(a,x)^(-1)); raises when the
        pair is not quasi-invertible."""
        bp = self.bergman_plus(x, a)
        bm_inv = self.bergman_minus(a, x).invert()
        if bp.invert() is None or bm_inv is None:
            raise NotQuasiInvertible("Bergman operator is singular")
        return bp, bm_inv

    def quasi_inverse_plus(self, x, a) -> List[RingElement]:
        b = self.bergman_plus(x, a)
        binv = b.invert()
        if binv is None:
            raise NotQuasiInvertible("Bergman operator is singular")
        rhs = [u - v for u, v in zip(x, self.q_plus_apply(x, a))]
        return _mat_vec(binv, rhs)

    def quasi_inverse_minus(self, a, x) -> List[RingElement]:
        b = self.bergman_minus(a, x)
        binv = b.invert()
        if binv is None:
            raise NotQuasiInvertible("Bergman operator is singular")
        rhs = [u - v for u, v in zip(a, self.q_minus_apply(a, x))]
        return _mat_vec(binv, rhs)

    def is_quasi_invertible(self, x, a) -> bool:
        return self.bergman_plus(x, a).invert() is not None

    def swap(self) -> "QuadraticJordanPair":
        return QuadraticJordanPair(self.ring, self.n_minus, self.n_plus,
                                   self.q_minus, self.q_minus_pol,
                                   self.q_plus, self.q_plus_pol,
                                   self.shape_minus, self.shape_plus)

    # -- scalar extension ----------------------------------------------------
    def extend(self, ring_ext: Ring) -> "QuadraticJordanPair":
        emb = ring_embedding(self.ring, ring_ext)

        def lift(m: Matrix) -> Matrix:
            return Matrix(ring_ext, [[emb(v) for v in row] for row in m.rows],
                          ncols=m.ncols)

        return QuadraticJordanPair(
            ring_ext, self.n_plus, self.n_minus,
            [lift(m) for m in self.q_plus],
            {k: lift(m) for k, m in self.q_plus_pol.items()},
            [lift(m) for m in self.q_minus],
            {k: lift(m) for k, m in self.q_minus_pol.items()},
            self.shape_plus, self.shape_minus)

    # -- serialization ---------------------------------------------------------
    def to_json(self) -> dict:
        def mat(m: Matrix):
            return [[str(v) for v in row] for row in m.rows]

        return {
            "ring": self.ring.descriptor(),
            "n_plus": self.n_plus, "n_minus": self.n_minus,
            "shape_plus": list(self.shape_plus),
            "shape_minus": list(self.shape_minus),
            "q_plus": [mat(m) for m in self.q_plus],
            "q_plus_pol": {f"{i},{j}": mat(m)
                           for (i, j), m in sorted(self.q_plus_pol.items())},
            "q_minus": [mat(m) for m in self.q_minus],
            "q_minus_pol": {f"{i},{j}": mat(m)
                            for (i, j), m in sorted(self.q_minus_pol.items())},
        }

    @classmethod
    def from_json(cls, data: dict) -> "QuadraticJordanPair":
        from .rings import parse_ring
        ring = parse_ring(data["ring"])

        def mat(rows):
            return Matrix(ring, [[ring.parse(v) for v in row] for row in rows],
                          ncols=len(rows[0]) if rows else 0)

        def pol(d):
            out = {}
            for key, rows in d.items():
                i, j = key.split(",")
                out[(int(i), int(j))] = mat(rows)
            return out

        return cls(ring, data["n_plus"], data["n_minus"],
                   [mat(m) for m in data["q_plus"]], pol(data["q_plus_pol"]),
                   [mat(m) for m in data["q_minus"]], pol(data["q_minus_pol"]),
                   tuple(data["shape_plus"]), tuple(data["shape_minus"]))


# ---------------------------------------------------------------------------
# extraction from a geometry


class GeometryBackedPair:
    """A quadratic pair together with the charts it was read from."""

    def __init__(self, pair: QuadraticJordanPair, chart: PairChart):
        self.pair = pair
        self.chart = chart

    def plus_point(self, x: Sequence[RingElement]) -> GrasPoint:
        return self.chart.point_plus(_unflatten(self.pair.ring, x,
                                                self.pair.shape_plus))

    def minus_point(self, a: Sequence[RingElement]) -> GrasPoint:
        return self.chart.point_minus(_unflatten(self.pair.ring, a,
                                                 self.pair.shape_minus))

    def plus_chart(self, p: GrasPoint) -> Optional[List[RingElement]]:
        m = self.chart.chart_plus(p)
        return None if m is None else _flatten(m)

    def minus_chart(self, p: GrasPoint) -> Optional[List[RingElement]]:
        m = self.chart.chart_minus(p)
        return None if m is None else _flatten(m)


def extract_pair(geometry: Geometry, o: GrasPoint, oprime: GrasPoint
                 ) -> GeometryBackedPair:
    """Read the quadratic maps off the geometry at the base pair (o, o').

    The value Q(x)a is the nilpotent part of the chart of the quasi-translated
    point: translating the chart of o by the infinitesimal point of a moves
    x + eps 0 to x + eps Q(x)a.  Basis values and polarizations are collected
    by evaluating at basis vectors and sums of two basis vectors."""
    chart = PairChart(geometry, o, oprime)
    ring = geometry.ring
    name = fresh_names(ring, 1, "e")[0]
    tk = weil_extend(ring, [(name, 1)])
    eps_mon = (0,) * (len(tk.names) - 1) + (1,)
    eps = tk.el({eps_mon: tk.base.p_one()}) if not isinstance(ring, WeilRing) else \
        tk.gen(name)
    echart = chart.lift(tk)
    emb = ring_embedding(ring, tk)
    p, q = chart.p, chart.q
    n_plus, n_minus = p * q, q * p
    shape_plus, shape_minus = (q, p), (p, q)

    def eps_part(v: RingElement) -> RingElement:
        # coefficient of the fresh nilpotent generator
        idx = tk.names.index(name)
        out = {}
        for mon, c in v.payload.items():
            if mon[idx] == 1:
                rest = mon[:idx] + (0,) + mon[idx + 1:]
                out[rest] = c
            elif mon[idx] > 1:
                raise TangentError("unexpected higher dual-number order")
        if isinstance(ring, WeilRing):
            return ring.el({m[:len(ring.names)]: c for m, c in out.items()})
        return ring.el(out[(0,) * len(tk.names)]) if (0,) * len(tk.names) in out \
            else ring.zero()

    def eps_part_matrix(m: Matrix) -> Matrix:
        return Matrix(ring, [[eps_part(v) for v in row] for row in m.rows],
                      ncols=m.ncols)

    def q_value(side: str, vec_matrix: Matrix) -> List[Matrix]:
        """Q(vec) as a list of columns indexed by the opposite basis."""
        cols = []
        opp_shape = shape_minus if side == "+" else shape_plus
        n_opp = n_minus if side == "+" else n_plus
        for j in range(n_opp):
            unit = Matrix.zeros(tk, opp_shape[0], opp_shape[1])
            r, c = divmod(j, opp_shape[1])
            unit.rows[r][c] = eps
            lifted = Matrix(tk, [[emb(v) for v in row] for row in vec_matrix.rows],
                            ncols=vec_matrix.ncols)
            if side == "+":
                mover = echart.quasi_translation(echart.point_minus(unit))
                img = mover.apply(echart.point_plus(lifted))
                val = echart.chart_plus(img)
            else:
                mover = echart.translation(echart.point_plus(unit))
                img = mover.apply(echart.point_minus(lifted))
                val = echart.chart_minus(img)
            if val is None:
                raise TangentError("infinitesimal image left the chart")
            cols.append(_flatten(eps_part_matrix(val)))
        return cols

    def build(side: str, n: int, shape: Tuple[int, int], n_opp: int):
        values, polars = [], {}

        def q_matrix(vec_matrix: Matrix) -> Matrix:
            cols = q_value(side, vec_matrix)
            return Matrix(ring, [list(r) for r in zip(*cols)], ncols=n_opp)

        units = []
        for i in range(n):
            unit = Matrix.zeros(ring, shape[0], shape[1])
            r, c = divmod(i, shape[1])
            unit.rows[r][c] = ring.one()
            units.append(unit)
            values.append(q_matrix(unit))
        for i in range(n):
            for j in range(i + 1, n):
                polars[(i, j)] = q_matrix(units[i] + units[j]) - values[i] - values[j]
        return values, polars

    q_plus, q_plus_pol = build("+", n_plus, shape_plus, n_minus)
    q_minus, q_minus_pol = build("-", n_minus, shape_minus, n_plus)
    pair = QuadraticJordanPair(ring, n_plus, n_minus, q_plus, q_plus_pol,
                               q_minus, q_minus_pol, shape_plus, shape_minus)
    return GeometryBackedPair(pair, chart)


# ---------------------------------------------------------------------------
# identity suites for pairs


def _random_vec(ring: Ring, n: int, rng: random.Random) -> List[RingElement]:
    return [random_element(ring, rng) for _ in range(n)]


def _formal_pair(pair: QuadraticJordanPair, var_sets: Sequence[str]
                 ) -> Tuple[QuadraticJordanPair, Dict[str, List[RingElement]]]:
    """Extend the pair by polynomial indeterminates, one block per requested
    variable name (plus-side sizes for x/z/u, minus-side for a/b/y)."""
    plus_vars = {"x", "z", "u", "v", "w"}
    names, sizes = [], []
    for vs in var_sets:
        size = pair.n_plus if vs in plus_vars else pair.n_minus
        names.extend(f"{vs}{i+1}" for i in range(size))
        sizes.append(size)
    base = pair.ring
    poly = PolynomialRing(base, names)
    ext = pair.extend(poly)
    assign: Dict[str, List[RingElement]] = {}
    pos = 0
    for vs, size in zip(var_sets, sizes):
        assign[vs] = [poly.gen(names[pos + i]) for i in range(size)]
        pos += size
    return ext, assign


def check_pair_identities(pair: QuadraticJordanPair, mode: str = "random",
                          samples: int = 40, seed: int = 0,
                          jet_orders: Sequence[int] = (2, 3)) -> CheckReport:
    """The three quadratic identities, on both sides, plus the linear-pair
    identities when 6 is invertible; in jets mode the arguments are scaled by
    the nilpotent jet generator with fully formal coefficients."""
    rep = CheckReport(suite="pair.identities",
                      config={"ring": pair.ring.descriptor(), "mode": mode,
                              "samples": samples},
                      seed=seed)
    with Stopwatch() as sw:
        if mode == "random":
            rng = random.Random(seed)
            cases = [(_random_vec(pair.ring, pair.n_plus, rng),
                      _random_vec(pair.ring, pair.n_minus, rng))
                     for _ in range(samples)]
            _jp_identities(rep, pair, cases, "random")
        elif mode == "exhaustive":
            els = list(pair.ring.elements())
            plus = [list(v) for v in itertools.product(els, repeat=pair.n_plus)]
            minus = [list(v) for v in itertools.product(els, repeat=pair.n_minus)]
            cases = [(x, y) for x in plus for y in minus]
            _jp_identities(rep, pair, cases, "exhaustive")
        elif mode == "symbolic":
            ext, assign = _formal_pair(pair, ["x", "y"])
            _jp_identities(rep, ext, [(assign["x"], assign["y"])], "symbolic")
        elif mode == "jets":
            for k in jet_orders:
                ext, assign = _formal_pair(pair, ["x", "y"])
                name = fresh_names(ext.ring, 1, "d")[0]
                jr = weil_extend(ext.ring, [(name, k)])
                jext = ext.extend(jr)
                delta = jr.gen(name)
                x = [delta * ring_embedding(ext.ring, jr)(v) for v in assign["x"]]
                y = [delta * ring_embedding(ext.ring, jr)(v) for v in assign["y"]]
                _jp_identities(rep, jext, [(x, y)], f"jets[{k}]")
        else:
            raise TangentError(f"unknown mode {mode!r}")
        if mode != "jets":
            _linear_identities(rep, pair, mode, samples, seed)
    rep.elapsed_ms = sw.ms
    return rep


def _jp_identities(rep: CheckReport, pair: QuadraticJordanPair, cases, mode: str):
    for tag, pr in (("plus", pair), ("minus", pair.swap())):
        flip = tag == "minus"

        def row(name, law, ok_fn):
            wit = None
            count = 0
            for (x, y) in cases:
                count += 1
                xx, yy = (y, x) if flip else (x, y)
                if not ok_fn(pr, xx, yy):
                    wit = [[str(v) for v in xx], [str(v) for v in yy]]
                    break
            rep.add(CheckRecord(f"{name}.{tag}", law, mode, count,
                                FAIL if wit else PASS, wit))

        row("pair.JP1", "D(x,y) Q(x) = Q(x) D(y,x)",
            lambda p, x, y: p.d_plus_op(x, y) @ p.q_plus_op(x)
            == p.q_plus_op(x) @ p.d_minus_op(y, x))
        row("pair.JP2", "D(Q(x)y, y) = D(x, Q(y)x)",
            lambda p, x, y: p.d_plus_op(p.q_plus_apply(x, y), y)
            == p.d_plus_op(x, p.q_minus_apply(y, x)))
        row("pair.JP3", "Q(Q(x)y) = Q(x) Q(y) Q(x)",
            lambda p, x, y: p.q_plus_op(p.q_plus_apply(x, y))
            == p.q_plus_op(x) @ p.q_minus_op(y) @ p.q_plus_op(x))


def _linear_identities(rep: CheckReport, pair: QuadraticJordanPair, mode: str,
                       samples: int, seed: int):
    six = pair.ring.from_int(6)
    if not six.is_unit():
        return  # trilinear identities only claimed without 6-torsion
    rng = random.Random(seed + 1)

    def tri(p, x, a, z):
        return _mat_vec(p.d_plus_op(x, a), z)

    wit = None
    count = 0
    for _ in range(samples if mode == "random" else 20):
        x = _random_vec(pair.ring, pair.n_plus, rng)
        z = _random_vec(pair.ring, pair.n_plus, rng)
        a = _random_vec(pair.ring, pair.n_minus, rng)
        count += 1
        if tri(pair, x, a, z) != tri(pair, z, a, x):
            wit = [[str(v) for v in x], [str(v) for v in a], [str(v) for v in z]]
            break
    rep.add(CheckRecord("pair.linear-symmetry", "{xaz} = {zax}", mode, count,
                        FAIL if wit else PASS, wit))

    wit = None
    count = 0
    pm = pair.swap()
    for _ in range(samples if mode == "random" else 20):
        u = _random_vec(pair.ring, pair.n_plus, rng)
        x = _random_vec(pair.ring, pair.n_plus, rng)
        z = _random_vec(pair.ring, pair.n_plus, rng)
        v = _random_vec(pair.ring, pair.n_minus, rng)
        y = _random_vec(pair.ring, pair.n_minus, rng)
        count += 1
        lhs = tri(pair, u, v, tri(pair, x, y, z))
        rhs1 = tri(pair, tri(pair, u, v, x), y, z)
        rhs2 = tri(pair, x, _mat_vec(pm.d_plus_op(v, u), y), z)
        rhs3 = tri(pair, x, y, tri(pair, u, v, z))
        if lhs != [r1 - r2 + r3 for r1, r2, r3 in zip(rhs1, rhs2, rhs3)]:
            wit = [[str(c) for c in vec] for vec in (u, v, x, y, z)]
            break
    rep.add(CheckRecord("pair.linear-5term",
                        "{uv{xyz}} = {{uvx}yz} - {x{vuy}z} + {xy{uvz}}",
                        mode, count, FAIL if wit else PASS, wit))


# ---------------------------------------------------------------------------
# graded bracket algebra of quadratic vector fields


class GradedElement:
    """v + H + a: constant, linear and quadratic field on the plus module."""

    __slots__ = ("v", "a_plus", "a_minus", "a")

    def __init__(self, v, ops: Tuple[Matrix, Matrix], a):
        self.v = list(v)
        self.a_plus, self.a_minus = ops
        self.a = list(a)

    def __eq__(self, other):
        return (self.v == other.v and self.a == other.a
                and self.a_plus == other.a_plus and self.a_minus == other.a_minus)

    def __repr__(self):
        return f"Graded(v={self.v}, a={self.a})"


class GradedLieAlgebra:
    """Three-graded bracket algebra attached to a quadratic pair.

    Degree -1 is the plus module (constant fields), degree 0 the pairs of
    linear operators, degree +1 the minus module (quadratic fields
    x -> Q(x)a); the Euler element is the identity field."""

    def __init__(self, pair: QuadraticJordanPair):
        self.pair = pair
        self.ring = pair.ring

    def zero_ops(self) -> Tuple[Matrix, Matrix]:
        return (Matrix.zeros(self.ring, self.pair.n_plus, self.pair.n_plus),
                Matrix.zeros(self.ring, self.pair.n_minus, self.pair.n_minus))

    def element(self, v=None, ops=None, a=None) -> GradedElement:
        return GradedElement(v if v is not None else self.pair.zero_plus(),
                             ops if ops is not None else self.zero_ops(),
                             a if a is not None else self.pair.zero_minus())

    def euler(self) -> GradedElement:
        eye_p = Matrix.identity(self.ring, self.pair.n_plus)
        eye_m = Matrix.identity(self.ring, self.pair.n_minus)
        return self.element(ops=(-eye_p, eye_m))

    def delta(self, v, a) -> Tuple[Matrix, Matrix]:
        """The degree-zero bracket of a plus and a minus element."""
        return (self.pair.d_plus_op(v, a), -self.pair.d_minus_op(a, v))

    def bracket(self, g1: GradedElement, g2: GradedElement) -> GradedElement:
        p = self.pair
        v = [u - w for u, w in zip(_mat_vec(g1.a_plus, g2.v),
                                   _mat_vec(g2.a_plus, g1.v))]
        a = [u - w for u, w in zip(_mat_vec(g1.a_minus, g2.a),
                                   _mat_vec(g2.a_minus, g1.a))]
        d1p, d1m = self.delta(g1.v, g2.a)
        d2p, d2m = self.delta(g2.v, g1.a)
        ap = g1.a_plus @ g2.a_plus - g2.a_plus @ g1.a_plus + d1p - d2p
        am = g1.a_minus @ g2.a_minus - g2.a_minus @ g1.a_minus + d1m - d2m
        return GradedElement(v, (ap, am), a)

    def triple_plus(self, x, a, z) -> List[RingElement]:
        """{x a z} = [[x, a], z] evaluated through the bracket."""
        inner = self.bracket(self.element(v=x), self.element(a=a))
        outer = self.bracket(inner, self.element(v=z))
        return [-c for c in outer.v]


def check_tkk(pair: QuadraticJordanPair, samples: int = 25, seed: int = 0
              ) -> CheckReport:
    """Grading, Euler eigenvalues, Jacobi and the bracket-to-triple link."""
    rep = CheckReport(suite="pair.tkk",
                      config={"ring": pair.ring.descriptor(), "samples": samples},
                      seed=seed)
    alg = GradedLieAlgebra(pair)
    rng = random.Random(seed)
    six_ok = pair.ring.from_int(6).is_unit()

    def rnd():
        return alg.element(v=_random_vec(pair.ring, pair.n_plus, rng),
                           ops=(Matrix(pair.ring,
                                       [[random_element(pair.ring, rng)
                                         for _ in range(pair.n_plus)]
                                        for _ in range(pair.n_plus)],
                                       ncols=pair.n_plus),
                                Matrix(pair.ring,
                                       [[random_element(pair.ring, rng)
                                         for _ in range(pair.n_minus)]
                                        for _ in range(pair.n_minus)],
                                       ncols=pair.n_minus)),
                           a=_random_vec(pair.ring, pair.n_minus, rng))

    def direct(name, law, ok, note=None):
        rep.add(CheckRecord(name, law, "random", samples, PASS if ok else FAIL,
                            note=note))

    e = alg.euler()
    ok = True
    for _ in range(samples):
        v = _random_vec(pair.ring, pair.n_plus, rng)
        a = _random_vec(pair.ring, pair.n_minus, rng)
        ev = alg.bracket(e, alg.element(v=v))
        ea = alg.bracket(e, alg.element(a=a))
        ok = ok and ev == alg.element(v=[-c for c in v]) \
            and ea == alg.element(a=a)
    direct("tkk.euler", "the Euler field has eigenvalue -1 on constants and "
           "+1 on quadratics", ok)

    ok = True
    for _ in range(samples):
        v = alg.element(v=_random_vec(pair.ring, pair.n_plus, rng))
        w = alg.element(v=_random_vec(pair.ring, pair.n_plus, rng))
        a = alg.element(a=_random_vec(pair.ring, pair.n_minus, rng))
        b = alg.element(a=_random_vec(pair.ring, pair.n_minus, rng))
        zero = alg.element()
        va = alg.bracket(v, a)
        ok = ok and alg.bracket(v, w) == zero and alg.bracket(a, b) == zero \
            and va.v == alg.element().v and va.a == alg.element().a
    direct("tkk.grading", "degree-(+-1) parts bracket to degree 0, equal "
           "degrees to zero", ok)

    if six_ok:
        ok = True
        wit = None
        for _ in range(samples):
            g1, g2, g3 = rnd(), rnd(), rnd()
            jac = alg.bracket(g1, alg.bracket(g2, g3))
            jac2 = alg.bracket(g2, alg.bracket(g3, g1))
            jac3 = alg.bracket(g3, alg.bracket(g1, g2))
            total = GradedElement(
                [a + b + c for a, b, c in zip(jac.v, jac2.v, jac3.v)],
                (jac.a_plus + jac2.a_plus + jac3.a_plus,
                 jac.a_minus + jac2.a_minus + jac3.a_minus),
                [a + b + c for a, b, c in zip(jac.a, jac2.a, jac3.a)])
            if total != alg.element():
                ok = False
                break
        direct("tkk.jacobi", "Jacobi identity on random triples", ok)

        ok = True
        for _ in range(samples):
            x = _random_vec(pair.ring, pair.n_plus, rng)
            z = _random_vec(pair.ring, pair.n_plus, rng)
            a = _random_vec(pair.ring, pair.n_minus, rng)
            if alg.triple_plus(x, a, z) != _mat_vec(pair.d_plus_op(x, a), z):
                ok = False
                break
        direct("tkk.triple", "[[x,a],z] recovers the trilinear map D(x,a)z", ok)
    else:
        rep.add(CheckRecord("tkk.jacobi", "Jacobi identity", "random", 0, SKIP,
                            note="skipped: ring has 6-torsion"))
    return rep


def geometric_bracket(backed: GeometryBackedPair, g1_kind: str, g1_data,
                      g2_kind: str, g2_data) -> GradedElement:
    """Bracket of two infinitesimal flows computed as the second-order part
    of their group commutator over the doubled dual numbers.

    Kinds: "plus" (translation flow of a plus vector), "minus"
    (quasi-translation flow of a minus vector), "euler"."""
    pair, chart = backed.pair, backed.chart
    ring = pair.ring
    n1, n2 = fresh_names(ring, 2, "e")
    tt = weil_extend(ring, [(n1, 1), (n2, 1)])
    e1, e2 = tt.gen(n1), tt.gen(n2)
    echart = chart.lift(tt)
    emb = ring_embedding(ring, tt)

    def flow(kind, data, eps):
        if kind == "plus":
            vec = _unflatten(tt, [eps * emb(c) for c in data], pair.shape_plus)
            return echart.translation(echart.point_plus(vec))
        if kind == "minus":
            vec = _unflatten(tt, [eps * emb(c) for c in data], pair.shape_minus)
            return echart.quasi_translation(echart.point_minus(vec)).inverse()
        if kind == "euler":
            one = tt.one()
            return echart.geometry.scale_operator(one + eps, echart.o,
                                                  echart.oprime)
        raise TangentError(f"unknown flow kind {kind!r}")

    f = flow(g1_kind, g1_data, e1)
    g = flow(g2_kind, g2_data, e2)
    comm = g.inverse().compose(f.inverse()).compose(g).compose(f)

    def part(v: RingElement) -> RingElement:
        # coefficient of e1*e2
        i1, i2 = tt.names.index(n1), tt.names.index(n2)
        out = {}
        for mon, c in v.payload.items():
            if mon[i1] == 1 and mon[i2] == 1:
                rest = tuple(e for k, e in enumerate(mon) if k not in (i1, i2))
                out[rest] = c
        if isinstance(ring, WeilRing):
            return ring.el(out)
        zero_mon = ()
        return ring.el(out[zero_mon]) if zero_mon in out else ring.zero()

    def field_plus(vec: List[RingElement]) -> List[RingElement]:
        pt = echart.point_plus(_unflatten(tt, [emb(c) for c in vec],
                                          pair.shape_plus))
        img = echart.chart_plus(comm.apply(pt))
        return [part(v) for v in _flatten(img)]

    def field_minus(vec: List[RingElement]) -> List[RingElement]:
        pt = echart.point_minus(_unflatten(tt, [emb(c) for c in vec],
                                           pair.shape_minus))
        img = echart.chart_minus(comm.apply(pt))
        return [part(v) for v in _flatten(img)]

    v_res = field_plus(pair.zero_plus())
    a_res = [-c for c in field_minus(pair.zero_minus())]
    cols_p = []
    for k in range(pair.n_plus):
        xk = field_plus(pair.basis_plus(k))
        qk = pair.q_plus_apply(pair.basis_plus(k), a_res)
        cols_p.append([v - q - f_ for v, q, f_ in zip(v_res, qk, xk)])
    a_plus = Matrix(ring, [list(r) for r in zip(*cols_p)], ncols=pair.n_plus)
    cols_m = []
    for k in range(pair.n_minus):
        fk = field_minus(pair.basis_minus(k))
        qk = pair.q_minus_apply(pair.basis_minus(k), v_res)
        cols_m.append([q - a - f_ for q, a, f_ in zip(qk, a_res, fk)])
    a_minus = Matrix(ring, [list(r) for r in zip(*cols_m)], ncols=pair.n_minus)
    return GradedElement(v_res, (a_plus, a_minus), a_res)


def check_geometric_bracket(backed: GeometryBackedPair, samples: int = 4,
                            seed: int = 0) -> CheckReport:
    """Commutators of lifted flows against the algebraic bracket table."""
    pair = backed.pair
    alg = GradedLieAlgebra(pair)
    rng = random.Random(seed)
    rep = CheckReport(suite="pair.bracket-crosscheck",
                      config={"ring": pair.ring.descriptor()}, seed=seed)

    def direct(name, law, ok):
        rep.add(CheckRecord(name, law, "random", samples, PASS if ok else FAIL))

    ok = True
    for _ in range(samples):
        v = _random_vec(pair.ring, pair.n_plus, rng)
        a = _random_vec(pair.ring, pair.n_minus, rng)
        geom = geometric_bracket(backed, "plus", v, "minus", a)
        alge = alg.bracket(alg.element(v=v), alg.element(a=a))
        ok = ok and geom == alge
    direct("bracket.mixed", "flow commutator of a translation and a "
           "quasi-translation matches the table", ok)

    ok = True
    for _ in range(samples):
        v = _random_vec(pair.ring, pair.n_plus, rng)
        geom = geometric_bracket(backed, "euler", None, "plus", v)
        alge = alg.bracket(alg.euler(), alg.element(v=v))
        ok = ok and geom == alge
    direct("bracket.euler-plus", "flow commutator with the Euler flow scales "
           "constants by -1", ok)

    ok = True
    for _ in range(samples):
        a = _random_vec(pair.ring, pair.n_minus, rng)
        geom = geometric_bracket(backed, "euler", None, "minus", a)
        alge = alg.bracket(alg.euler(), alg.element(a=a))
        ok = ok and geom == alge
    direct("bracket.euler-minus", "flow commutator with the Euler flow scales "
           "quadratics by +1", ok)
    return rep


# ---------------------------------------------------------------------------
# closed quasi-inverse formulas against the geometric inversions


def _vec_str(vec) -> list:
    return [str(v) for v in vec]


def check_quasi_inverse(backed: GeometryBackedPair, mode: str = "random",
                        samples: int = 60, seed: int = 0) -> CheckReport:
    """Quasi-inverses against quasi-translations, the transversality
    criterion, the symmetry principle and scaling homogeneity.

    The criterion reads: B(x, a) is invertible exactly when the plus point of
    x is transversal to the minus point of -a (the reflection of the point of
    a through the origin of its chart)."""
    pair, chart = backed.pair, backed.chart
    ring = pair.ring
    rep = CheckReport(suite="pair.quasi-inverse",
                      config={"ring": ring.descriptor(), "mode": mode},
                      seed=seed)
    rng = random.Random(seed)

    if mode == "exhaustive":
        els = list(ring.elements())
        cases = [(list(x), list(a)) for x in
                 itertools.product(els, repeat=pair.n_plus)
                 for a in itertools.product(els, repeat=pair.n_minus)]
    else:
        cases = [(_random_vec(ring, pair.n_plus, rng),
                  _random_vec(ring, pair.n_minus, rng)) for _ in range(samples)]

    wit = None
    for (x, a) in cases:
        qi = pair.is_quasi_invertible(x, a)
        neg_a = [-c for c in a]
        geo = backed.pair and chart.geometry.transversal(
            backed.plus_point(x), backed.minus_point(neg_a))
        if qi != geo:
            wit = [_vec_str(x), _vec_str(a)]
            break
    rep.add(CheckRecord("qi.criterion",
                        "B(x,a) invertible iff the point of x is transversal "
                        "to the point of -a", mode, len(cases),
                        FAIL if wit else PASS, wit))

    wit = None
    hits = 0
    for (x, a) in cases:
        if not pair.is_quasi_invertible(x, a):
            continue
        hits += 1
        lhs = pair.quasi_inverse_plus(x, a)
        img = chart.quasi_translation(backed.minus_point(a)).apply(
            backed.plus_point(x))
        geo = backed.plus_chart(img)
        if geo != lhs:
            wit = [_vec_str(x), _vec_str(a)]
            break
    rep.add(CheckRecord("qi.vs-translation",
                        "B(x,a)^(-1)(x - Q(x)a) equals the quasi-translated "
                        "chart value", mode, hits, FAIL if wit else PASS, wit))

    wit = None
    hits = 0
    for (x, a) in cases:
        if not pair.is_quasi_invertible(x, a):
            continue
        hits += 1
        xa = pair.quasi_inverse_plus(x, a)
        ax = pair.quasi_inverse_minus(a, x)
        rhs = [u + v for u, v in zip(x, pair.q_plus_apply(x, ax))]
        if xa != rhs:
            wit = [_vec_str(x), _vec_str(a)]
            break
    rep.add(CheckRecord("qi.symmetry-principle", "x^a = x + Q(x)(a^x)",
                        mode, hits, FAIL if wit else PASS, wit))

    wit = None
    hits = 0
    for (x, a) in cases:
        r = random_element(ring, rng) if mode == "random" else ring.from_int(2)
        if not r.is_unit():
            continue
        ra = [r * c for c in a]
        if not pair.is_quasi_invertible([r * c for c in x], a):
            continue
        if not pair.is_quasi_invertible(x, ra):
            continue
        hits += 1
        lhs = pair.quasi_inverse_plus([r * c for c in x], a)
        rhs = [r * c for c in pair.quasi_inverse_plus(x, ra)]
        if lhs != rhs:
            wit = [str(r), _vec_str(x), _vec_str(a)]
            break
    rep.add(CheckRecord("qi.homogeneity", "(r x)^a = r (x^(r a))",
                        mode, hits, FAIL if wit else PASS, wit))
    return rep


def check_bergman_geometric(backed: GeometryBackedPair, samples: int = 30,
                            seed: int = 0) -> CheckReport:
    """The operator pair beta(y,b) against the four-translation composite and
    against the decomposition denominator."""
    pair, chart = backed.pair, backed.chart
    g = chart.geometry
    rep = CheckReport(suite="pair.bergman",
                      config={"ring": pair.ring.descriptor()}, seed=seed)
    rng = random.Random(seed)

    def sample_qi():
        while True:
            y = _random_vec(pair.ring, pair.n_plus, rng)
            b = _random_vec(pair.ring, pair.n_minus, rng)
            if pair.is_quasi_invertible(y, b):
                return y, b

    def chart_action_plus(op: ProjectiveMap) -> Optional[Matrix]:
        cols = []
        for k in range(pair.n_plus):
            img = backed.plus_chart(op.apply(backed.plus_point(
                pair.basis_plus(k))))
            if img is None:
                return None
            cols.append(img)
        return Matrix(pair.ring, [list(r) for r in zip(*cols)],
                      ncols=pair.n_plus)

    wit = None
    for _ in range(samples):
        y, b = sample_qi()
        yp = backed.plus_point(y)
        bp = backed.minus_point([-c for c in b])
        if not g.transversal(bp, yp):
            continue
        geo = g.bergman_operator(chart.oprime, chart.o, bp, yp)
        act = chart_action_plus(geo)
        bexp = pair.bergman_plus(y, b)
        ok = act is not None and act == bexp
        if ok:
            rev = g.bergman_operator(chart.o, chart.oprime, yp, bp)
            act_rev = chart_action_plus(rev)
            ok = act_rev is not None and act_rev == bexp.invert()
        if not ok:
            wit = [_vec_str(y), _vec_str(b)]
            break
    rep.add(CheckRecord("bergman.vs-geometry",
                        "the four-translation composite at the reversed base "
                        "realizes B(y,b); the direct one realizes its inverse",
                        "random", samples, FAIL if wit else PASS, wit))

    wit = None
    for _ in range(samples):
        y, b = sample_qi()
        yp = backed.plus_point(y)
        bp = backed.minus_point(b)
        gmap = chart.quasi_translation(bp).compose(chart.translation(yp))
        try:
            _, h, _ = g.triple_decomposition(gmap, chart.o, chart.oprime)
        except Exception:
            continue
        act = chart_action_plus(h)
        binv = pair.bergman_plus(y, b).invert()
        if act is None or binv is None or act != binv:
            wit = [_vec_str(y), _vec_str(b)]
            break
    rep.add(CheckRecord("bergman.as-denominator",
                        "the linear part of quasi-translation after "
                        "translation is B(y,b)^(-1)", "random", samples,
                        FAIL if wit else PASS, wit))
    return rep


def check_inversion_formulas(backed: GeometryBackedPair, samples: int = 50,
                             seed: int = 0) -> CheckReport:
    """Chart formulas for the inversions: the compact three-term quasi-inverse
    expression, the stepwise expansions, and the operator identities backing
    them, all against the projector-built maps."""
    pair, chart = backed.pair, backed.chart
    g = chart.geometry
    ring = pair.ring
    rep = CheckReport(suite="pair.inversion-formulas",
                      config={"ring": ring.descriptor(), "samples": samples},
                      seed=seed)
    rng = random.Random(seed)
    rejected = 0

    def qi(x, a):
        return pair.quasi_inverse_plus(x, a)

    def qi_minus(a, x):
        return pair.quasi_inverse_minus(a, x)

    def neg(v):
        return [-c for c in v]

    def add(u, v):
        return [a + b for a, b in zip(u, v)]

    def sub(u, v):
        return [a - b for a, b in zip(u, v)]

    def sample_config():
        nonlocal rejected
        while True:
            x = _random_vec(ring, pair.n_plus, rng)
            z = _random_vec(ring, pair.n_plus, rng)
            y = _random_vec(ring, pair.n_plus, rng)
            a = _random_vec(ring, pair.n_minus, rng)
            ok = (pair.is_quasi_invertible(x, neg(a))
                  and pair.is_quasi_invertible(z, neg(a))
                  and pair.is_quasi_invertible(y, neg(a))
                  and pair.is_quasi_invertible(z, pair.q_minus_apply(a, x)))
            if ok:
                v = add(qi(x, neg(a)), qi(z, neg(a)))
                ok = pair.is_quasi_invertible(v, a)
            if ok:
                w = sub(v, qi(y, neg(a)))
                ok = pair.is_quasi_invertible(w, a)
            if not ok:
                rejected += 1
                continue
            ap = backed.minus_point(a)
            xp, zp, yp = (backed.plus_point(c) for c in (x, z, y))
            if not (g.transversal(xp, ap) and g.transversal(ap, zp)):
                rejected += 1
                continue
            return x, a, z, y, xp, ap, zp, yp

    def record(name, law, pred):
        wit = None
        for _ in range(samples):
            cfg = sample_config()
            if not pred(cfg):
                wit = [_vec_str(cfg[0]), _vec_str(cfg[1]), _vec_str(cfg[2]),
                       _vec_str(cfg[3])]
                break
        rep.add(CheckRecord(name, law, "random", samples,
                            FAIL if wit else PASS, wit,
                            note=f"{rejected} rejected samples so far"))

    record("formulas.compact",
           "the inversion acts by x^-a - y^-a + z^-a followed by ^a",
           lambda cfg: backed.plus_chart(
               g.j_map(cfg[4], cfg[5], cfg[6], cfg[7]))
           == pair.quasi_inverse_plus(
               sub(add(qi(cfg[0], neg(cfg[1])), qi(cfg[2], neg(cfg[1]))),
                   qi(cfg[3], neg(cfg[1]))), cfg[1]))

    def base_image_ok(cfg):
        x, a, z, _, xp, ap, zp, _ = cfg
        v_geo = backed.plus_chart(g.j_map(xp, ap, zp, chart.o))
        v1 = qi(add(qi(x, neg(a)), qi(z, neg(a))), a)
        bxa = pair.bergman_plus(x, neg(a))
        v2 = add(x, _mat_vec(bxa, qi(z, pair.q_minus_apply(a, x))))
        return v_geo == v1 == v2

    record("formulas.base-image",
           "the image of the origin: (x^-a + z^-a)^a = x + B(x,-a) z^(Q(a)x)",
           base_image_ok)

    def cobase_image_ok(cfg):
        x, a, z, _, xp, ap, zp, _ = cfg
        vp_geo = backed.minus_chart(g.j_map(xp, ap, zp, chart.oprime))
        two_a = add(a, a)
        v = add(x, _mat_vec(pair.bergman_plus(x, neg(a)),
                            qi(z, pair.q_minus_apply(a, x))))
        vp1 = add(two_a, pair.q_minus_apply(a, v))
        qz_x = qi_minus(pair.q_minus_apply(a, z), x)
        vp2 = add(add(two_a, pair.q_minus_apply(a, x)),
                  _mat_vec(pair.bergman_minus(a, neg(x)), qz_x))
        return vp_geo == vp1 == vp2

    record("formulas.cobase-image",
           "the image of the co-origin: 2a + Q(a)v = 2a + Q(a)x + "
           "B(a,-x)(Q(a)z)^x", cobase_image_ok)

    def full_expansion_ok(cfg):
        x, a, z, y, xp, ap, zp, yp = cfg
        v = qi(add(qi(x, neg(a)), qi(z, neg(a))), a)
        vp = add(add(a, a), pair.q_minus_apply(a, v))
        if not (pair.is_quasi_invertible(v, neg(a))
                and pair.is_quasi_invertible(y, neg(vp))):
            return True  # outside the expansion's domain
        lhs = backed.plus_chart(g.j_map(xp, ap, zp, yp))
        bop = pair.bergman_plus(qi(v, neg(a)), a)
        rhs = sub(v, _mat_vec(bop, qi(y, neg(vp))))
        return lhs == rhs

    record("formulas.full-expansion",
           "J(y) = v - B(v^-a, a) y^(-v')", full_expansion_ok)

    def minus_action_ok(cfg):
        x, a, z, _, xp, ap, zp, _ = cfg
        b = _random_vec(ring, pair.n_minus, rng)
        v = qi(add(qi(x, neg(a)), qi(z, neg(a))), a)
        vp = add(add(a, a), pair.q_minus_apply(a, v))
        if not (pair.is_quasi_invertible(b, neg(v))
                and pair.bergman_minus(a, v).invert() is not None):
            return True
        bp = backed.minus_point(b)
        lhs = backed.minus_chart(g.j_map(xp, ap, zp, bp))
        binv = pair.bergman_minus(a, v).invert()
        rhs = sub(vp, _mat_vec(binv, qi_minus(b, neg(v))))
        return lhs == rhs

    record("formulas.minus-action",
           "J(b) = v' - B(a,v)^(-1) b^(-v)", minus_action_ok)

    def beta_pins_ok(cfg):
        x, a, _, _, _, _, _, _ = cfg
        b1 = pair.bergman_plus(qi(neg(x), a), neg(a))
        b2 = pair.bergman_plus(qi(x, neg(a)), a)
        b3 = pair.bergman_plus(x, neg(a)).invert()
        return b1 == b2 == b3

    record("formulas.beta-pins",
           "B((-v)^a, -a) = B(v^-a, a) = B(v, -a)^(-1)", beta_pins_ok)

    def step2_ok(cfg):
        x, a, _, y, xp, ap, _, yp = cfg
        v = x
        vp = add(add(a, a), pair.q_minus_apply(a, v))
        if not (pair.is_quasi_invertible(v, neg(a))
                and pair.is_quasi_invertible(y, neg(vp))):
            return True
        vp_geo = backed.minus_chart(g.j_map(xp, ap, chart.o, chart.oprime))
        if vp_geo != vp:
            return False
        lhs = backed.plus_chart(g.j_map(xp, ap, chart.o, yp))
        bop = pair.bergman_plus(qi(v, neg(a)), a)
        rhs = sub(v, _mat_vec(bop, qi(y, neg(vp))))
        return lhs == rhs

    record("formulas.one-base-point",
           "with z at the origin: co-image 2a + Q(a)v and the same expansion",
           step2_ok)
    return rep


def check_tangent_contracts(geometry: Geometry, samples: int = 40,
                            seed: int = 0) -> CheckReport:
    """Functoriality of the nilpotent extension and the two tangent-space
    contracts: translations act trivially on the fiber over their anchor, and
    the tangent map of an inversion at its isolated fixed point is -1."""
    ring = geometry.ring
    rep = CheckReport(suite="tangent.contracts",
                      config={"geometry": geometry.descriptor(),
                              "samples": samples},
                      seed=seed)
    name = fresh_names(ring, 1, "e")[0]
    tk = weil_extend(ring, [(name, 1)])
    ext = extend_geometry(geometry, tk)
    eps = tk.gen(name)
    emb = ring_embedding(ring, tk)
    rng = random.Random(seed)
    ranks = geometry.ranks or (geometry.ambient // 2,
                               geometry.ambient - geometry.ambient // 2)
    p, q = ranks

    def rand_pair():
        from .verify import random_chain
        return random_chain(geometry, [p, q], rng)

    def rand_lifted_point(rank):
        from .verify import random_point
        base = random_point(geometry, rank, rng)
        rows = [[emb(v) + eps * emb(random_element(ring, rng)) for v in row]
                for row in base.basis.rows]
        return ext.point(Matrix(tk, rows, ncols=rank))

    def record(name_, law, pred, n=samples):
        wit = None
        for i in range(n):
            if not pred(i):
                wit = [i]
                break
        rep.add(CheckRecord(name_, law, "random", n, FAIL if wit else PASS, wit))

    record("tangent.section",
           "projecting a lifted point returns the point",
           lambda _: (lambda pt: project_point(
               geometry, lift_point(ext, pt)) == pt)(rand_pair()[0]))

    def functorial_j(_):
        from .verify import random_chain, random_point
        x, a, z = random_chain(geometry, [p, q, p], rng)
        y = rand_lifted_point(p)
        lhs = project_point(geometry, ext.j_map(
            lift_point(ext, x), lift_point(ext, a), lift_point(ext, z), y))
        return lhs == geometry.j_map(x, a, z, project_point(geometry, y))

    record("tangent.functorial-inversion",
           "projection intertwines the extended and base inversions",
           functorial_j)

    def functorial_m(_):
        from .verify import random_chain
        x, a, z, b = random_chain(geometry, [p, q, p, q], rng, closed=True)
        y = rand_lifted_point(p)
        lhs = project_point(geometry, ext.m_map(
            lift_point(ext, x), lift_point(ext, a), lift_point(ext, z),
            lift_point(ext, b), y))
        return lhs == geometry.m_map(x, a, z, b, project_point(geometry, y))

    record("tangent.functorial-multiplication",
           "projection intertwines the extended and base multiplications",
           functorial_m)

    def functorial_s(_):
        y_, a_ = rand_pair()
        r = ring.from_int(rng.choice([-2, -1, 1, 2, 3]))
        if not r.is_unit():
            return True
        x = rand_lifted_point(p)
        lhs = project_point(geometry, ext.scale(
            emb(r), lift_point(ext, y_), lift_point(ext, a_), x))
        return lhs == geometry.scale(r, y_, a_, project_point(geometry, x))

    record("tangent.functorial-scaling",
           "projection intertwines the extended and base scalings",
           functorial_s)

    def fiber_triviality(_):
        from .verify import random_chain
        x, a, z = random_chain(geometry, [p, q, p], rng)
        # fiber point over a, anchored at x
        fiber_chart = PairChart(ext, lift_point(ext, a), lift_point(ext, x))
        vec = Matrix(tk, [[eps * emb(random_element(ring, rng))
                           for _ in range(q)] for _ in range(p)], ncols=q)
        u = fiber_chart.point_plus(vec)
        gmap = geometry.translation_operator(a, x, z, check=False)
        return lift_map(ext, gmap).apply(u) == u

    record("tangent.translation-trivial",
           "translations act trivially on the fiber over their anchor",
           fiber_triviality)

    def tangent_minus_id(_):
        from .verify import random_chain
        a, x, b = random_chain(geometry, [q, p, q], rng)
        fiber_chart = PairChart(ext, lift_point(ext, x), lift_point(ext, a))
        vec = Matrix(tk, [[eps * emb(random_element(ring, rng))
                           for _ in range(p)] for _ in range(q)], ncols=p)
        u = fiber_chart.point_plus(vec)
        gmap = geometry.j_operator(a, x, b)
        return lift_map(ext, gmap).apply(u) == fiber_chart.point_plus(-vec)

    record("tangent.inversion-minus-one",
           "the tangent map of an inversion at its fixed point negates the "
           "fiber", tangent_minus_id)

    def reanchor(_):
        from .verify import random_chain, random_point
        x, a = random_chain(geometry, [p, q], rng)
        for _ in range(200):
            a2 = random_point(geometry, q, rng)
            if geometry.transversal(x, a2):
                break
        ch1 = PairChart(ext, lift_point(ext, x), lift_point(ext, a))
        ch2 = PairChart(ext, lift_point(ext, x), lift_point(ext, a2))

        def enc(ch, vec):
            return ch.point_plus(vec.scaled(eps))

        def dec(ch, pt):
            m = ch.chart_plus(pt)
            if m is None:
                return None
            return Matrix(ring, [[ring_eps_part(tk, ring, v, name) for v in row]
                                 for row in m.rows], ncols=m.ncols)

        v1 = Matrix(ring, [[random_element(ring, rng) for _ in range(p)]
                           for _ in range(q)], ncols=p)
        v2 = Matrix(ring, [[random_element(ring, rng) for _ in range(p)]
                           for _ in range(q)], ncols=p)
        lift = lambda m: Matrix(tk, [[emb(c) for c in row] for row in m.rows],
                                ncols=m.ncols)
        u1, u2 = enc(ch1, lift(v1)), enc(ch1, lift(v2))
        w1, w2 = dec(ch2, u1), dec(ch2, u2)
        if w1 is None or w2 is None:
            return False
        usum = enc(ch1, lift(v1 + v2))
        wsum = dec(ch2, usum)
        # re-anchoring is well-defined and additive on fiber coordinates
        return (enc(ch2, lift(w1)) == u1 and wsum == w1 + w2)

    record("tangent.reanchoring",
           "fiber coordinates re-anchor consistently and additively",
           reanchor)
    return rep


def ring_eps_part(tk: WeilRing, base: Ring, v: RingElement, name: str
                  ) -> RingElement:
    idx = tk.names.index(name)
    out = {}
    for mon, c in v.payload.items():
        if mon[idx] == 1:
            out[mon[:idx] + mon[idx + 1:]] = c
        elif mon[idx] > 1:
            raise TangentError("unexpected higher nilpotent order")
    if isinstance(base, WeilRing):
        return base.el(out)
    return base.el(out[()]) if () in out else base.zero()


def check_fiber_dimension(geometry: Geometry, o: GrasPoint, oprime: GrasPoint
                          ) -> CheckReport:
    """Count the dual-number fiber over a base point: it must biject with the
    chart matrices (a free module of rank p*q)."""
    ring = geometry.ring
    rep = CheckReport(suite="tangent.fiber",
                      config={"geometry": geometry.descriptor()})
    name = fresh_names(ring, 1, "e")[0]
    tk = weil_extend(ring, [(name, 1)])
    ext = extend_geometry(geometry, tk)
    eps = tk.gen(name)
    emb = ring_embedding(ring, tk)
    chart = PairChart(ext, lift_point(ext, o), lift_point(ext, oprime))
    p, q = o.rank, oprime.rank
    els = list(ring.elements())
    fiber = set()
    for vals in itertools.product(els, repeat=p * q):
        rows = [[eps * emb(vals[i * p + j]) for j in range(p)] for i in range(q)]
        fiber.add(chart.point_plus(Matrix(tk, rows, ncols=p)).key())
    expected = len(els) ** (p * q)
    direct = {pt.key() for pt in ext.enumerate_points()
              if project_point(geometry, pt) == o}
    ok = len(fiber) == expected and fiber == direct
    rep.add(CheckRecord("fiber.dimension",
                        "the fiber over the base point is the chart module",
                        "exhaustive", expected, PASS if ok else FAIL,
                        note=f"fiber size {len(direct)}, expected {expected}"))
    return rep


# ---------------------------------------------------------------------------
# algebras from closed transversal triples


def jordan_algebra_from_triple(geometry: Geometry, o: GrasPoint,
                               oprime: GrasPoint, e: GrasPoint):
    """Unital quadratic structure on the plus module of the pair at (o, o'),
    with quadratic operators U_x = Q(x) Q(e)^(-1) and unit e."""
    for (u, v) in ((o, oprime), (oprime, e), (o, e)):
        if not geometry.transversal(u, v):
            raise TangentError("triple must be pairwise transversal")
    backed = extract_pair(geometry, o, oprime)
    pair = backed.pair
    e_chart = backed.plus_chart(e)
    if e_chart is None:
        raise TangentError("unit point must lie in the chart")
    qe_inv = pair.q_plus_op(e_chart).invert()
    if qe_inv is None:
        raise TangentError("unit point is not invertible")

    def u_op(x: Sequence[RingElement]) -> Matrix:
        return pair.q_plus_op(x) @ qe_inv

    def jinv(y: Sequence[RingElement]) -> Optional[List[RingElement]]:
        qy_inv = pair.q_plus_op(y).invert()
        if qy_inv is None:
            return None
        qe = pair.q_plus_op(e_chart)
        return _mat_vec(qe @ qy_inv @ qe, y)

    return backed, e_chart, u_op, jinv


def check_jordan_algebra(geometry: Geometry, o, oprime, e,
                         samples: int = 40, seed: int = 0) -> CheckReport:
    backed, e_chart, u_op, jinv = jordan_algebra_from_triple(geometry, o,
                                                             oprime, e)
    pair = backed.pair
    ring = pair.ring
    g = geometry
    rep = CheckReport(suite="algebra.jordan",
                      config={"geometry": g.descriptor(), "samples": samples},
                      seed=seed)
    rng = random.Random(seed)
    eye = Matrix.identity(ring, pair.n_plus)

    rep.add(CheckRecord("jalg.unit", "the unit acts as the identity",
                        "direct", 1,
                        PASS if u_op(e_chart) == eye else FAIL))

    def record(name, law, pred, n=samples):
        wit = None
        count = 0
        for _ in range(n):
            case = _random_vec(ring, pair.n_plus, rng)
            count += 1
            if not pred(case):
                wit = [_vec_str(case)]
                break
        rep.add(CheckRecord(name, law, "random", count,
                            FAIL if wit else PASS, wit))

    def fundamental(x):
        y = _random_vec(ring, pair.n_plus, rng)
        ux = u_op(x)
        return u_op(_mat_vec(ux, y)) == ux @ u_op(y) @ ux

    record("jalg.fundamental", "U_{U_x y} = U_x U_y U_x", fundamental)

    def inversion_matches(y):
        j = jinv(y)
        if j is None:
            return True
        geo = backed.plus_chart(g.j_map(o, e, oprime, backed.plus_point(y)))
        return geo == j

    record("jalg.inversion",
           "Q(e) Q(y)^(-1) Q(e) y matches the inversion swapping the base "
           "pair and fixing the unit", inversion_matches)

    def transvection_matches(x):
        ux = u_op(x)
        if ux.invert() is None:
            return True
        xp = backed.plus_point(x)
        if not g.transversal(xp, o):
            return True
        op = g.j_operator(o, xp, oprime).compose(g.j_operator(o, e, oprime))
        cols = []
        for k in range(pair.n_plus):
            img = backed.plus_chart(op.apply(backed.plus_point(
                pair.basis_plus(k))))
            if img is None:
                return True
            cols.append(img)
        return Matrix(ring, [list(r) for r in zip(*cols)],
                      ncols=pair.n_plus) == ux

    record("jalg.transvection",
           "the two-inversion transvection through x and e acts as U_x",
           transvection_matches)

    def invertible_locus(x):
        xp = backed.plus_point(x)
        return (pair.q_plus_op(x).invert() is not None) \
            == g.transversal(xp, o)

    record("jalg.invertible-locus",
           "invertible elements are exactly the points of the double chart",
           invertible_locus)
    return rep


def associative_algebra_from_triple(geometry: Geometry, o: GrasPoint,
                                    oprime: GrasPoint, e: GrasPoint):
    """Bilinear product on the plus module from the second-order part of the
    double-chart group law m(x, z) = M(x, o, z, o')(e)."""
    for (u, v) in ((o, oprime), (oprime, e), (o, e)):
        if not geometry.transversal(u, v):
            raise TangentError("triple must be pairwise transversal")
    backed = extract_pair(geometry, o, oprime)
    pair = backed.pair
    ring = pair.ring
    e_chart_m = backed.chart.chart_plus(e)
    names = fresh_names(ring, 2, "e")
    tt = weil_extend(ring, [(names[0], 1), (names[1], 1)])
    e1, e2 = tt.gen(names[0]), tt.gen(names[1])
    echart = backed.chart.lift(tt)
    emb = ring_embedding(ring, tt)
    ext = echart.geometry
    e_lift = lift_point(ext, e)

    def lift(m: Matrix) -> Matrix:
        return Matrix(tt, [[emb(v) for v in row] for row in m.rows], ncols=m.ncols)

    def part12(v: RingElement) -> RingElement:
        i1, i2 = tt.names.index(names[0]), tt.names.index(names[1])
        out = {}
        for mon, c in v.payload.items():
            if mon[i1] == 1 and mon[i2] == 1:
                out[tuple(x for k, x in enumerate(mon) if k not in (i1, i2))] = c
        if isinstance(ring, WeilRing):
            return ring.el(out)
        return ring.el(out[()]) if () in out else ring.zero()

    def product(u: Sequence[RingElement], v: Sequence[RingElement]
                ) -> List[RingElement]:
        mu = _unflatten(tt, [e1 * emb(c) for c in u], pair.shape_plus)
        mv = _unflatten(tt, [e2 * emb(c) for c in v], pair.shape_plus)
        x = echart.point_plus(lift(e_chart_m) + mu)
        z = echart.point_plus(lift(e_chart_m) + mv)
        img = ext.m_operator(x, echart.o, z, echart.oprime).apply(e_lift)
        val = echart.chart_plus(img)
        return [part12(c) for c in _flatten(val)]

    return backed, e_chart_m, product


def check_associative_algebra(geometry: Geometry, o, oprime, e,
                              samples: int = 25, seed: int = 0,
                              matrix_oracle: bool = True) -> CheckReport:
    """Bilinearity, unit, associativity, group-law agreement, and (when the
    chart unit is the identity matrix) literal matrix multiplication."""
    backed, e_chart, product = associative_algebra_from_triple(geometry, o,
                                                               oprime, e)
    pair = backed.pair
    ring = pair.ring
    g = geometry
    rep = CheckReport(suite="algebra.associative",
                      config={"geometry": g.descriptor(), "samples": samples},
                      seed=seed)
    rng = random.Random(seed)
    n = pair.n_plus

    if matrix_oracle and _flatten(e_chart) == _flatten(
            Matrix.identity(ring, pair.shape_plus[0])) \
            and pair.shape_plus[0] == pair.shape_plus[1]:
        wit = None
        count = 0
        for i in range(n):
            for j in range(n):
                count += 1
                lhs = product(pair.basis_plus(i), pair.basis_plus(j))
                mi = _unflatten(ring, pair.basis_plus(i), pair.shape_plus)
                mj = _unflatten(ring, pair.basis_plus(j), pair.shape_plus)
                if lhs != _flatten(mi @ mj):
                    wit = [i, j]
                    break
            if wit:
                break
        rep.add(CheckRecord("aalg.matrix-units",
                            "basis products reproduce matrix multiplication",
                            "exhaustive", count, FAIL if wit else PASS, wit))

    def rnd():
        return _random_vec(ring, n, rng)

    def record(name, law, pred):
        wit = None
        for _ in range(samples):
            if not pred():
                wit = ["rng"]
                break
        rep.add(CheckRecord(name, law, "random", samples,
                            FAIL if wit else PASS, wit))

    e_vec = _flatten(e_chart)
    record("aalg.unit", "the unit multiplies trivially on both sides",
           lambda: (lambda v: product(e_vec, v) == v and product(v, e_vec) == v)
           (rnd()))
    record("aalg.bilinear", "the product is additive in each slot",
           lambda: (lambda u, v, w: product([a + b for a, b in zip(u, v)], w)
                    == [a + b for a, b in zip(product(u, w), product(v, w))]
                    and product(w, [a + b for a, b in zip(u, v)])
                    == [a + b for a, b in zip(product(w, u), product(w, v))])
           (rnd(), rnd(), rnd()))
    record("aalg.associative", "the product is associative",
           lambda: (lambda u, v, w: product(product(u, v), w)
                    == product(u, product(v, w)))(rnd(), rnd(), rnd()))

    def group_law_agrees():
        x = rnd()
        z = rnd()
        xm = _unflatten(ring, x, pair.shape_plus)
        zm = _unflatten(ring, z, pair.shape_plus)
        xp = backed.plus_point(x)
        zp = backed.plus_point(z)
        if not (g.transversal(xp, o) and g.transversal(zp, o)):
            return True
        img = g.m_operator(xp, o, zp, oprime).apply(e)
        val = backed.plus_chart(img)
        prod = product(x, z)
        if val != prod:
            return False
        if pair.shape_plus[0] == pair.shape_plus[1] and _flatten(e_chart) == \
                _flatten(Matrix.identity(ring, pair.shape_plus[0])):
            return prod == _flatten(xm @ zm)
        return True

    record("aalg.group-law",
           "the bilinear product restricts to the double-chart group law",
           group_law_agrees)
    return rep


# ---------------------------------------------------------------------------
# triple systems from polarities


class QuadraticTriple:
    """Single-module quadratic triple structure Q: V -> End(V)."""

    def __init__(self, pair: QuadraticJordanPair, invol_plus: Matrix,
                 invol_minus: Matrix):
        self.pair = pair
        self.invol_plus = invol_plus    # V+ -> V-
        self.invol_minus = invol_minus  # V- -> V+

    def q_op(self, x: Sequence[RingElement]) -> Matrix:
        return self.pair.q_plus_op(x) @ self.invol_plus

    def q_apply(self, x, y):
        return _mat_vec(self.q_op(x), y)

    def d_op(self, x, y) -> Matrix:
        cols = []
        n = self.pair.n_plus
        for k in range(n):
            ek = self.pair.basis_plus(k)
            xk = [a + b for a, b in zip(x, ek)]
            col = [a - b - c for a, b, c in zip(self.q_apply(xk, y),
                                                self.q_apply(x, y),
                                                self.q_apply(ek, y))]
            cols.append(col)
        return Matrix(self.pair.ring, [list(r) for r in zip(*cols)], ncols=n)


def jts_from_polarity(geometry: Geometry, pol: ProjectiveMap, o: GrasPoint
                      ) -> QuadraticTriple:
    """Fold the pair at (o, p(o)) into a triple system along the polarity."""
    oprime = pol.apply(o)
    if not geometry.transversal(o, oprime):
        raise TangentError("base point must be non-isotropic for the polarity")
    if not pol.compose(pol).is_identity():
        raise TangentError("map is not an involution")
    backed = extract_pair(geometry, o, oprime)
    pair = backed.pair
    ring = pair.ring
    cols_p = []
    for k in range(pair.n_plus):
        img = backed.minus_chart(pol.apply(backed.plus_point(
            pair.basis_plus(k))))
        if img is None:
            raise TangentError("polarity does not map the chart into the dual chart")
        cols_p.append(img)
    invol_plus = Matrix(ring, [list(r) for r in zip(*cols_p)], ncols=pair.n_plus)
    cols_m = []
    for k in range(pair.n_minus):
        img = backed.plus_chart(pol.apply(backed.minus_point(
            pair.basis_minus(k))))
        if img is None:
            raise TangentError("polarity does not map the dual chart back")
        cols_m.append(img)
    invol_minus = Matrix(ring, [list(r) for r in zip(*cols_m)],
                         ncols=pair.n_minus)
    return QuadraticTriple(backed.pair, invol_plus, invol_minus)


def check_jts(triple: QuadraticTriple, samples: int = 40, seed: int = 0
              ) -> CheckReport:
    rep = CheckReport(suite="jts.identities",
                      config={"ring": triple.pair.ring.descriptor()}, seed=seed)
    ring = triple.pair.ring
    n = triple.pair.n_plus
    rng = random.Random(seed)

    rep.add(CheckRecord("jts.involution", "the folding maps invert each other",
                        "direct", 1,
                        PASS if triple.invol_minus @ triple.invol_plus
                        == Matrix.identity(ring, n) else FAIL))
    rep.add(CheckRecord(
        "jts.vs-pair", "the triple operator is the pair operator after the fold",
        "direct", n,
        PASS if all(triple.q_op(triple.pair.basis_plus(k))
                    == triple.pair.q_plus_op(triple.pair.basis_plus(k))
                    @ triple.invol_plus for k in range(n)) else FAIL))

    def record(name, law, pred):
        wit = None
        for _ in range(samples):
            x = _random_vec(ring, n, rng)
            y = _random_vec(ring, n, rng)
            if not pred(x, y):
                wit = [_vec_str(x), _vec_str(y)]
                break
        rep.add(CheckRecord(name, law, "random", samples,
                            FAIL if wit else PASS, wit))

    record("jts.JT1", "D(x,y) Q(x) = Q(x) D(y,x)",
           lambda x, y: triple.d_op(x, y) @ triple.q_op(x)
           == triple.q_op(x) @ triple.d_op(y, x))
    record("jts.JT2", "D(Q(x)y, y) = D(x, Q(y)x)",
           lambda x, y: triple.d_op(triple.q_apply(x, y), y)
           == triple.d_op(x, triple.q_apply(y, x)))
    record("jts.JT3", "Q(Q(x)y) = Q(x) Q(y) Q(x)",
           lambda x, y: triple.q_op(triple.q_apply(x, y))
           == triple.q_op(x) @ triple.q_op(y) @ triple.q_op(x))
    return rep


# ---------------------------------------------------------------------------
# jet-ring identity checks for formal expressions


class JetExpr:
    """Tiny expression language over the pair alphabet.

    Syntax: sums of terms, where a term is a variable, a negated term, or
    one of Q(f,g), D(f,g,h), B(f,g,h), qi(f,g).  Variables x,z,u,v,w live in
    the plus module, a,b,c,y in the minus module."""

    PLUS = set("xzuvw")
    MINUS = set("abcy")

    def __init__(self, text: str):
        self.text = text.replace(" ", "")
        self.pos = 0
        self.tree = self._parse_sum()
        if self.pos != len(self.text):
            raise TangentError(f"trailing input at {self.pos} in {text!r}")
        self.side = self._side(self.tree)

    # -- parsing -----------------------------------------------------------
    def _peek(self):
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def _parse_sum(self):
        terms = [("+", self._parse_term())]
        while self._peek() in "+-":
            sign = self.text[self.pos]
            self.pos += 1
            terms.append((sign, self._parse_term()))
        return ("sum", terms)

    def _parse_term(self):
        if self._peek() == "-":
            self.pos += 1
            return ("neg", self._parse_term())
        for fname in ("qi", "Q", "D", "B"):
            if self.text.startswith(fname + "(", self.pos):
                self.pos += len(fname) + 1
                args = [self._parse_sum()]
                while self._peek() == ",":
                    self.pos += 1
                    args.append(self._parse_sum())
                if self._peek() != ")":
                    raise TangentError(f"missing ')' at {self.pos}")
                self.pos += 1
                arity = {"Q": 2, "D": 3, "B": 3, "qi": 2}[fname]
                if len(args) != arity:
                    raise TangentError(f"{fname} expects {arity} arguments")
                return (fname, args)
        ch = self._peek()
        if ch in self.PLUS | self.MINUS:
            self.pos += 1
            return ("var", ch)
        raise TangentError(f"unexpected input at {self.pos} in {self.text!r}")

    def _side(self, node) -> str:
        kind = node[0]
        if kind == "var":
            return "+" if node[1] in self.PLUS else "-"
        if kind == "neg":
            return self._side(node[1])
        if kind == "sum":
            sides = {self._side(t) for _, t in node[1]}
            if len(sides) != 1:
                raise TangentError("mixed sides in a sum")
            return sides.pop()
        if kind == "Q":
            s1, s2 = self._side(node[1][0]), self._side(node[1][1])
            if s1 == s2:
                raise TangentError("Q needs arguments from opposite sides")
            return s1
        if kind in ("D", "B"):
            s = [self._side(arg) for arg in node[1]]
            if not (s[0] == s[2] and s[1] != s[0]):
                raise TangentError(f"{kind} needs sides (s, -s, s)")
            return s[0]
        if kind == "qi":
            s1, s2 = self._side(node[1][0]), self._side(node[1][1])
            if s1 == s2:
                raise TangentError("quasi-inverse needs opposite sides")
            return s1
        raise TangentError(f"unknown node {kind!r}")

    def variables(self) -> List[str]:
        out = []

        def walk(node):
            if node[0] == "var":
                if node[1] not in out:
                    out.append(node[1])
            elif node[0] == "sum":
                for _, t in node[1]:
                    walk(t)
            elif node[0] == "neg":
                walk(node[1])
            else:
                for arg in node[1]:
                    walk(arg)

        walk(self.tree)
        return out

    def evaluate(self, pair: QuadraticJordanPair,
                 assignment: Dict[str, List[RingElement]]) -> List[RingElement]:
        minus_pair = pair.swap()

        def ev(node):
            kind = node[0]
            if kind == "var":
                return assignment[node[1]], self._side(node)
            if kind == "neg":
                v, s = ev(node[1])
                return [-c for c in v], s
            if kind == "sum":
                total, side = None, None
                for sign, t in node[1]:
                    v, s = ev(t)
                    if total is None:
                        total = [c if sign == "+" else -c for c in v]
                        side = s
                    else:
                        total = [a + (c if sign == "+" else -c)
                                 for a, c in zip(total, v)]
                return total, side
            args = [ev(arg) for arg in node[1]]
            side = args[0][1]
            pr = pair if side == "+" else minus_pair
            vecs = [a[0] for a in args]
            if kind == "Q":
                return pr.q_plus_apply(vecs[0], vecs[1]), side
            if kind == "D":
                return _mat_vec(pr.d_plus_op(vecs[0], vecs[1]), vecs[2]), side
            if kind == "B":
                return _mat_vec(pr.bergman_plus(vecs[0], vecs[1]), vecs[2]), side
            if kind == "qi":
                return pr.quasi_inverse_plus(vecs[0], vecs[1]), side
            raise TangentError(f"unknown node {kind!r}")

        return ev(self.tree)[0]


def koecher_jet_check(expr_text: str, pair: QuadraticJordanPair, k: int
                      ) -> CheckReport:
    """Evaluate a formal pair expression on jet-scaled formal arguments.

    Every variable is replaced by delta times a vector of fresh polynomial
    indeterminates over the jet ring of order k, which makes every
    quasi-inverse in the expression defined; the check asserts that each
    delta-homogeneous component of the result vanishes."""
    expr = JetExpr(expr_text)
    rep = CheckReport(suite="pair.jet-check",
                      config={"ring": pair.ring.descriptor(), "order": k,
                              "expr": expr_text})
    variables = expr.variables()
    ext, assign = _formal_pair(pair, variables)
    dname = fresh_names(ext.ring, 1, "d")[0]
    jr = weil_extend(ext.ring, [(dname, k)])
    jext = ext.extend(jr)
    delta = jr.gen(dname)
    emb = ring_embedding(ext.ring, jr)
    jassign = {v: [delta * emb(c) for c in vec] for v, vec in assign.items()}
    value = expr.evaluate(jext, jassign)
    bad_orders = set()
    didx = jr.names.index(dname)
    for comp in value:
        for mon, c in comp.payload.items():
            bad_orders.add(mon[didx])
    status = PASS if not bad_orders else FAIL
    rep.add(CheckRecord("jet.vanishing",
                        "every jet-order component of the expression vanishes",
                        f"jets[{k}]", len(value), status,
                        sorted(bad_orders) if bad_orders else None,
                        note=None if not bad_orders else
                        f"nonzero at delta orders {sorted(bad_orders)}"))
    return rep
