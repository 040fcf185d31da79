"""Grassmannian incidence geometry over exact rings.

Points are direct-summand submodules of a free module W, held as canonical
basis matrices.  Transversality x T a means W = x (+) a.  The structure
maps are all induced by invertible operators on W built from the projectors
onto one summand along a complementary one:

    inversion        J(x,a,z)   : P(x,a) - P(a,z)      fixes a, swaps x,z
    multiplication   M(x,a,z,b) : P(x,a) - P(b,z)      swaps x,z and a,b
    scaling          S(r,y,a)   : P(y,a) + r P(a,y)
    translation      L(a,x,z)   : J(x,a,u) J(u,a,z), independent of u

where P(i, k) denotes the projector with image i and kernel k.
"""

from __future__ import annotations

import itertools
from typing import Callable, Iterable, Iterator, List, Optional, Sequence, Tuple

from .linalg import LinAlgError, Matrix, NotSummand, UnsupportedRing, canonical_span
from .rings import IntegerRing, Ring, RingElement, RingError, WeilRing, parse_ring


class GeometryError(Exception):
    pass


class NotInBigCell(GeometryError):
    """The map does not move the base point into the base chart."""


class NoChain(GeometryError):
    """No transversal chain joins the two configurations."""


class Geometry:
    """A Grassmannian of a free module, possibly restricted to two ranks.

    ranks=None keeps every submodule rank (0 through n); ranks=(p, q) keeps
    the union of the rank-p and rank-q Grassmannians (p + q = n); the
    projective line is ranks=(1, 1) with n=2.
    """

    def __init__(self, ring: Ring, ambient: int, ranks: Optional[Tuple[int, int]] = None):
        if ambient < 2:
            raise GeometryError("ambient rank must be at least 2")
        if ranks is not None and ranks[0] + ranks[1] != ambient:
            raise GeometryError("type restriction must satisfy p + q = ambient rank")
        self.ring = ring
        self.ambient = ambient
        self.ranks = ranks

    # -- basic structure -----------------------------------------------------
    def allowed_rank(self, k: int) -> bool:
        if self.ranks is None:
            return 0 <= k <= self.ambient
        return k in self.ranks

    def point(self, basis: Matrix) -> "GrasPoint":
        if basis.ring != self.ring or basis.nrows != self.ambient:
            raise GeometryError("basis does not live in this geometry's module")
        canon = canonical_span(basis)
        if not self.allowed_rank(canon.ncols):
            raise GeometryError(f"rank {canon.ncols} not allowed in {self}")
        return GrasPoint(self, canon)

    def point_from_ints(self, cols: Sequence[Sequence[int]]) -> "GrasPoint":
        m = Matrix.from_ints(self.ring, [list(r) for r in zip(*cols)])
        return self.point(m)

    def transversal(self, x: "GrasPoint", a: "GrasPoint") -> bool:
        if x.geometry is not self and x.geometry != self:
            raise GeometryError("point from a different geometry")
        if x.rank + a.rank != self.ambient:
            return False
        return x.basis.hstack(a.basis).is_invertible()

    def projector(self, x: "GrasPoint", a: "GrasPoint") -> Matrix:
        """Projector of W with image x and kernel a; requires x T a."""
        t = x.basis.hstack(a.basis)
        tinv = t.invert()
        if tinv is None:
            raise GeometryError("projector needs a transversal pair")
        img = x.basis.hstack(Matrix.zeros(self.ring, self.ambient, a.rank))
        return img @ tinv

    # -- structure maps --------------------------------------------------------
    def j_operator(self, x: "GrasPoint", a: "GrasPoint", z: "GrasPoint") -> "ProjectiveMap":
        """Inversion attached to the chain (x, a, z): swaps x and z, fixes a."""
        op = self.projector(x, a) - self.projector(a, z)
        return ProjectiveMap(self, op)

    def j_map(self, x, a, z, y: "GrasPoint") -> "GrasPoint":
        return self.j_operator(x, a, z).apply(y)

    def m_operator(self, x, a, z, b) -> "ProjectiveMap":
        """Multiplication map of the closed chain (x, a, z, b): swaps x with z
        and a with b."""
        if not (self.transversal(x, a) and self.transversal(a, z)
                and self.transversal(z, b) and self.transversal(b, x)):
            raise GeometryError("multiplication map needs a closed transversal chain")
        op = self.projector(x, a) - self.projector(b, z)
        return ProjectiveMap(self, op)

    def m_map(self, x, a, z, b, y: "GrasPoint") -> "GrasPoint":
        return self.m_operator(x, a, z, b).apply(y)

    def scale_operator(self, r: RingElement, y, a) -> "ProjectiveMap":
        """Dilation by the scalar r anchored at the pair (y, a).

        r = 1 is the identity, r = 0 collapses the chart of a onto y, and
        r = -1 is the point reflection fixing y and a.
        """
        if not self.transversal(y, a):
            raise GeometryError("scaling anchor must be a transversal pair")
        op = self.projector(y, a) + self.projector(a, y).scaled(r)
        return ProjectiveMap(self, op, invertible=r.is_unit())

    def scale(self, r: RingElement, y, a, x) -> "GrasPoint":
        if not r.is_unit() and not self.transversal(x, a):
            raise GeometryError("non-invertible scalars act only on the chart of a")
        return self.scale_operator(r, y, a).apply(x)

    def translation_operator(self, a, x, z, check: bool = True) -> "ProjectiveMap":
        """Translation of the chart of a moving z to x (and acting on all
        points).  Built from two inversions; the auxiliary-point independence
        is asserted when check is set."""
        jxx = self.j_operator(x, a, x)
        jxz = self.j_operator(x, a, z)
        left = jxx.compose(jxz)
        if check:
            jzz = self.j_operator(z, a, z)
            right = jxz.compose(jzz)
            if left != right:
                raise GeometryError("translation depends on the auxiliary point")
        return left

    def bergman_operator(self, x, a, y, b) -> "ProjectiveMap":
        """Composite of four translations attached to the closed chain
        (a, x, b, y); stabilizes x and a."""
        for (u, v) in ((a, x), (x, b), (b, y), (y, a)):
            if not self.transversal(u, v):
                raise GeometryError("Bergman operator needs a closed chain")
        l1 = self.translation_operator(x, a, b, check=False)
        l2 = self.translation_operator(b, x, y, check=False)
        l3 = self.translation_operator(y, b, a, check=False)
        l4 = self.translation_operator(a, y, x, check=False)
        return l1.compose(l2).compose(l3).compose(l4)

    def denominator(self, g: "ProjectiveMap", o, oprime) -> "ProjectiveMap":
        """Part of g fixing o and o' in the translation / linear /
        quasi-translation decomposition; defined on the big cell."""
        t, h, tp = self.triple_decomposition(g, o, oprime)
        return h

    def triple_decomposition(self, g: "ProjectiveMap", o, oprime):
        """Factor g as (translation to g(o)) o (linear part) o
        (quasi-translation); raises NotInBigCell when g(o) is not
        transversal to o'."""
        t = g.apply(o)
        if not self.transversal(t, oprime):
            raise NotInBigCell("image of base point leaves the big cell")
        ginv = g.inverse()
        s = ginv.apply(oprime)
        minus_one = -self.ring.one()
        tprime = self.scale(minus_one, oprime, o, s)
        left = self.translation_operator(oprime, o, t, check=False)
        right = self.translation_operator(o, s, oprime, check=False)
        h = left.compose(g).compose(right)
        return t, h, tprime

    def quasi_translation(self, o, a, oprime) -> "ProjectiveMap":
        """Translation of the chart of o moving o' to a."""
        return self.translation_operator(o, a, oprime, check=False)

    # -- enumeration -----------------------------------------------------------
    def enumerate_points(self) -> List["GrasPoint"]:
        ring = self.ring
        if not getattr(ring, "is_finite", False):
            raise GeometryError(f"cannot enumerate points over {ring}")
        pts: List[GrasPoint] = []
        ranks = range(self.ambient + 1) if self.ranks is None else sorted(set(self.ranks))
        for k in ranks:
            pts.extend(self._rank_points(k))
        return pts

    def _rank_points(self, k: int) -> Iterator["GrasPoint"]:
        ring = self.ring
        n = self.ambient
        if k == 0:
            yield GrasPoint(self, Matrix(ring, [[] for _ in range(n)], ncols=0))
            return
        units, nils = _unit_and_nil_elements(ring)
        everything = units + nils
        for pivot_rows in itertools.combinations(range(n), k):
            free, nilonly = [], []
            for i in range(n):
                if i in pivot_rows:
                    continue
                for j, r in enumerate(pivot_rows):
                    if i < r:
                        nilonly.append((i, j))
                    else:
                        free.append((i, j))
            slots = [(pos, everything) for pos in free] + [(pos, nils) for pos in nilonly]
            for choice in itertools.product(*(vals for _, vals in slots)):
                rows = [[ring.zero()] * k for _ in range(n)]
                for j, r in enumerate(pivot_rows):
                    rows[r][j] = ring.one()
                for ((i, j), _), v in zip(slots, choice):
                    rows[i][j] = v
                yield GrasPoint(self, Matrix(ring, rows, ncols=k))

    def pairs(self) -> List[Tuple["GrasPoint", "GrasPoint"]]:
        pts = self.enumerate_points()
        return [(x, a) for x in pts for a in pts if self.transversal(x, a)]

    # -- connectivity ------------------------------------------------------------
    def components(self) -> List[List["GrasPoint"]]:
        pts = self.enumerate_points()
        index = {p.key(): i for i, p in enumerate(pts)}
        seen = [False] * len(pts)
        comps = []
        for i, p in enumerate(pts):
            if seen[i]:
                continue
            comp, queue = [], [i]
            seen[i] = True
            while queue:
                cur = queue.pop()
                comp.append(pts[cur])
                for j, q in enumerate(pts):
                    if not seen[j] and self.transversal(pts[cur], q):
                        seen[j] = True
                        queue.append(j)
            comps.append(comp)
        return comps

    def splitting(self) -> Optional[Tuple[List["GrasPoint"], List["GrasPoint"]]]:
        """Two-coloring of the transversality graph, or None when a
        component is not bipartite (the geometry is self-dual)."""
        pts = self.enumerate_points()
        color = {}
        for start in pts:
            if start.key() in color:
                continue
            color[start.key()] = 0
            queue = [start]
            while queue:
                cur = queue.pop()
                for q in pts:
                    if self.transversal(cur, q):
                        if q.key() not in color:
                            color[q.key()] = 1 - color[cur.key()]
                            queue.append(q)
                        elif color[q.key()] == color[cur.key()]:
                            return None
        plus = [p for p in pts if color[p.key()] == 0]
        minus = [p for p in pts if color[p.key()] == 1]
        return plus, minus

    def dissociation(self) -> "Dissociation":
        return Dissociation(self)

    def transporter(self, src: Tuple["GrasPoint", "GrasPoint"],
                    dst: Tuple["GrasPoint", "GrasPoint"]) -> "ProjectiveMap":
        """Inner automorphism moving the pair src to the pair dst, found by
        breadth-first search along transversal chains.  Raises NoChain when
        the pairs lie in different connected components."""
        o, op = src
        y, b = dst
        for (u, v) in (src, dst):
            if not self.transversal(u, v):
                raise GeometryError("transporter endpoints must be transversal pairs")
        if o.key() == y.key() and op.key() == b.key():
            return ProjectiveMap(self, Matrix.identity(self.ring, self.ambient))
        pairs = self.pairs()
        start = (o.key(), op.key())
        target = (y.key(), b.key())
        by_key = {(u.key(), v.key()): (u, v) for (u, v) in pairs}
        prev = {start: None}
        queue = [start]
        while queue:
            nxt = []
            for cur in queue:
                if cur == target:
                    queue = []
                    break
                cx, ca = by_key[cur]
                for (u, v) in pairs:
                    k = (u.key(), v.key())
                    if k not in prev and self.transversal(ca, u):
                        prev[k] = cur
                        nxt.append(k)
            else:
                queue = nxt
                continue
            break
        if target not in prev:
            raise NoChain("no transversal chain joins the two pairs")
        path = [target]
        while prev[path[-1]] is not None:
            path.append(prev[path[-1]])
        path.reverse()
        g = ProjectiveMap(self, Matrix.identity(self.ring, self.ambient))
        for a_key, b_key in zip(path, path[1:]):
            (x0, a0), (y0, b0) = by_key[a_key], by_key[b_key]
            lam = self.translation_operator(y0, b0, a0, check=False).compose(
                self.translation_operator(a0, y0, x0, check=False))
            g = lam.compose(g)
        if g.apply(o) != y or g.apply(op) != b:
            raise GeometryError("transporter postcondition failed")
        return g

    # -- projective line helpers ---------------------------------------------
    def affine_point(self, t: RingElement) -> "GrasPoint":
        if self.ambient != 2:
            raise GeometryError("affine coordinates need ambient rank 2")
        return self.point(Matrix(self.ring, [[t], [self.ring.one()]], ncols=1))

    def infinity(self) -> "GrasPoint":
        return self.point(Matrix(self.ring, [[self.ring.one()], [self.ring.zero()]], ncols=1))

    def point_affine(self, p: "GrasPoint") -> Optional[RingElement]:
        """Affine coordinate of a projective-line point, None at infinity."""
        if p.rank != 1 or self.ambient != 2:
            raise GeometryError("affine coordinate of a non-line point")
        u, v = p.basis[0, 0], p.basis[1, 0]
        vinv = v.try_inverse()
        return None if vinv is None else u * vinv

    def descriptor(self) -> str:
        if self.ambient == 2 and self.ranks == (1, 1):
            return f"projline:{self.ring.descriptor()}"
        if self.ranks is None:
            return f"gras:{self.ring.descriptor()}:{self.ambient}"
        return f"gras:{self.ring.descriptor()}:{self.ranks[0]}+{self.ranks[1]}"

    def __eq__(self, other):
        return isinstance(other, Geometry) and self.descriptor() == other.descriptor()

    def __hash__(self):
        return hash(self.descriptor())

    def __repr__(self):
        return self.descriptor()


def _unit_and_nil_elements(ring: Ring):
    units, nils = [], []
    for e in ring.elements():
        (units if e.is_unit() else nils).append(e)
    # stable order: key sort keeps reports reproducible
    units.sort(key=lambda e: repr(e.key()))
    nils.sort(key=lambda e: repr(e.key()))
    return units, nils


class GrasPoint:
    """A direct-summand submodule in canonical basis form."""

    __slots__ = ("geometry", "basis", "_key")

    def __init__(self, geometry: Geometry, canonical_basis: Matrix):
        self.geometry = geometry
        self.basis = canonical_basis
        self._key = None

    @property
    def rank(self) -> int:
        return self.basis.ncols

    def key(self):
        if self._key is None:
            self._key = self.basis.key()
        return self._key

    def __eq__(self, other):
        if not isinstance(other, GrasPoint):
            return NotImplemented
        return self.geometry == other.geometry and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        cols = [", ".join(str(self.basis[i, j]) for i in range(self.basis.nrows))
                for j in range(self.basis.ncols)]
        return "span{" + "; ".join("(" + c + ")" for c in cols) + "}"


class ProjectiveMap:
    """Invertible operator on W modulo units, acting on Grassmannian points.

    Normalization: the first unit entry in row-major order is scaled to one
    (over Z, where the only units are +-1, the first nonzero entry is made
    positive), so equal maps have equal normalized matrices.
    """

    __slots__ = ("geometry", "matrix", "_norm_key")

    def __init__(self, geometry: Geometry, matrix: Matrix, invertible: bool = True):
        self.geometry = geometry
        self.matrix = matrix
        self._norm_key = None
        if invertible and not matrix.is_invertible():
            raise GeometryError("projective maps must be invertible operators")

    def apply(self, p: GrasPoint) -> GrasPoint:
        return self.geometry.point(self.matrix @ p.basis)

    def compose(self, other: "ProjectiveMap") -> "ProjectiveMap":
        """self after other."""
        return ProjectiveMap(self.geometry, self.matrix @ other.matrix)

    def inverse(self) -> "ProjectiveMap":
        inv = self.matrix.invert()
        if inv is None:
            raise GeometryError("map is not invertible")
        return ProjectiveMap(self.geometry, inv)

    def normalized_key(self):
        if self._norm_key is not None:
            return self._norm_key
        ring = self.geometry.ring
        if isinstance(ring, IntegerRing):
            scaled = self.matrix
            for row in self.matrix.rows:
                entry = next((a for a in row if not a.is_zero()), None)
                if entry is not None:
                    if entry.payload < 0:
                        scaled = -self.matrix
                    break
            self._norm_key = scaled.key()
            return self._norm_key
        for row in self.matrix.rows:
            for a in row:
                inv = a.try_inverse()
                if inv is not None:
                    self._norm_key = self.matrix.scaled(inv).key()
                    return self._norm_key
        raise GeometryError("no unit entry to normalize against")

    def is_identity(self) -> bool:
        n = self.geometry.ambient
        ident = ProjectiveMap(self.geometry, Matrix.identity(self.geometry.ring, n))
        return self.normalized_key() == ident.normalized_key()

    def __eq__(self, other):
        if not isinstance(other, ProjectiveMap):
            return NotImplemented
        return (self.geometry == other.geometry
                and self.normalized_key() == other.normalized_key())

    def __hash__(self):
        return hash(self.normalized_key())

    def __repr__(self):
        return f"ProjectiveMap({self.matrix!r})"

    def agrees_on_points(self, other: "ProjectiveMap",
                         points: Iterable[GrasPoint]) -> bool:
        """Point-map equality on the given (finite) point set: necessary and
        sufficient there, used as fallback when normalizations differ."""
        return all(self.apply(p) == other.apply(p) for p in points)


class Dissociation:
    """Two tagged copies of a geometry, transversal only across the copies."""

    def __init__(self, base: Geometry):
        self.base = base

    def points(self) -> List[Tuple[int, GrasPoint]]:
        pts = self.base.enumerate_points()
        return [(0, p) for p in pts] + [(1, p) for p in pts]

    def transversal(self, xp: Tuple[int, GrasPoint], aq: Tuple[int, GrasPoint]) -> bool:
        (s, p), (t, q) = xp, aq
        return s != t and self.base.transversal(p, q)

    def is_bipartite(self) -> bool:
        return True  # by construction: all edges cross between the copies


# ---------------------------------------------------------------------------
# geometry spec strings


def parse_geometry(text: str) -> Geometry:
    """Parse `projline:<ring>`, `gras:<ring>:<n>` or `gras:<ring>:<p>+<q>`."""
    s = text.strip()
    if s.startswith("projline:"):
        return Geometry(parse_ring(s[len("projline:"):]), 2, (1, 1))
    if s.startswith("gras:"):
        body = s[len("gras:"):]
        ring_str, sep, rank_str = body.rpartition(":")
        if not sep:
            raise GeometryError(f"bad geometry spec {text!r}")
        ring = parse_ring(ring_str)
        if "+" in rank_str:
            p, q = rank_str.split("+")
            return Geometry(ring, int(p) + int(q), (int(p), int(q)))
        return Geometry(ring, int(rank_str), None)
    raise GeometryError(f"cannot parse geometry spec {text!r}")


# ---------------------------------------------------------------------------
# closed-form homographies on the projective line


def j_affine_formula(x: RingElement, z: RingElement, y: RingElement) -> RingElement:
    """Inversion with the anchor at infinity: x - y + z."""
    return x - y + z


def j_zero_inf_formula(a: RingElement, y: RingElement) -> Optional[RingElement]:
    """Inversion swapping 0 and infinity, fixing a: a^2 / y."""
    yinv = y.try_inverse()
    return None if yinv is None else a * a * yinv


def m_zero_inf_formula(a: RingElement, b: RingElement,
                       y: RingElement) -> Optional[RingElement]:
    """Multiplication map swapping 0 and infinity, a and b: a b / y."""
    yinv = y.try_inverse()
    return None if yinv is None else a * yinv * b


def m_inf_formula(x: RingElement, z: RingElement, a: RingElement,
                  y: RingElement) -> Optional[RingElement]:
    """Multiplication map sending a to infinity: (x - y + z - x z / a) / (1 - y / a)."""
    ainv = a.try_inverse()
    if ainv is None:
        return None
    den = (x.ring.one() - ainv * y).try_inverse()
    if den is None:
        return None
    return (x - y + z - x * ainv * z) * den


def j_generic_formula(x: RingElement, a: RingElement, z: RingElement,
                      y: RingElement, printed_variant: bool = False
                      ) -> Optional[RingElement]:
    """Fully generic inversion in affine coordinates.

    The denominator carries -xz; the variant with +xz (selected by
    printed_variant) is kept only as a negative control, since it breaks the
    forced fixed point at a.
    """
    ainv = a.try_inverse()
    if ainv is None:
        return None
    one = x.ring.one()
    two = one + one
    num = x - y + z - two * x * ainv * z + ainv * ainv * x * y * z
    cross = x * y + y * z + (x * z if printed_variant else -(x * z))
    den = (one - two * ainv * y + ainv * ainv * cross).try_inverse()
    return None if den is None else num * den
