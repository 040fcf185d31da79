"""Integer 2x2 matrix words acting on a geometry through an anchored triple.

A pairwise transversal triple (a, b, c) induces a copy of the permutation
group S3 inside the inner automorphisms, and generator assignments

    [S] -> J(b,a,b) o J(a,c,b),   [T] -> L_b(c, a),   [I] -> J(b,a,b)

extend to a homomorphism from the sign-quotient of the integer matrix group
generated by S, T, I.  Words are strings over {S, T, F, I}; lower-case
letters denote inverses.  Strong idempotent quadruples induce an analogous
representation of the full integer matrix group, realized explicitly on
block matrices in the canonical middle-block example.
"""

from __future__ import annotations

import itertools
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .geometry import Geometry, GrasPoint, ProjectiveMap
from .linalg import Matrix
from .report import FAIL, PASS, CheckRecord, CheckReport, run_identity
from .rings import Ring

Mat2 = Tuple[int, int, int, int]  # row-major (a, b, c, d)

S_MAT: Mat2 = (0, 1, -1, 0)
T_MAT: Mat2 = (1, 1, 0, 1)
F_MAT: Mat2 = (0, 1, 1, 0)
I_MAT: Mat2 = (1, 0, 0, -1)
ID_MAT: Mat2 = (1, 0, 0, 1)

_GEN_MATS = {"S": S_MAT, "T": T_MAT, "F": F_MAT, "I": I_MAT}


class ModularError(Exception):
    pass


def mat_mul(m: Mat2, n: Mat2) -> Mat2:
    a, b, c, d = m
    e, f, g, h = n
    return (a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)


def mat_det(m: Mat2) -> int:
    return m[0] * m[3] - m[1] * m[2]


def mat_inv(m: Mat2) -> Mat2:
    det = mat_det(m)
    if det not in (1, -1):
        raise ModularError("matrix is not invertible over the integers")
    a, b, c, d = m
    return (d * det, -b * det, -c * det, a * det)


def mats_equal_up_to_sign(m: Mat2, n: Mat2) -> bool:
    return m == n or m == tuple(-v for v in n)


def realize_word(word: str) -> Mat2:
    """Product of generator matrices; lower-case letters invert."""
    out = ID_MAT
    for ch in word:
        up = ch.upper()
        if up not in _GEN_MATS:
            raise ModularError(f"unknown generator {ch!r}")
        m = _GEN_MATS[up]
        out = mat_mul(out, m if ch.isupper() else mat_inv(m))
    return out


def word_from_matrix(m: Mat2) -> str:
    """A word over {S, T, I} (and inverses) realizing m up to sign.

    Determinant -1 is reduced by a leading I; the unimodular part is
    decomposed by the Euclidean algorithm on the first column."""
    if mat_det(m) == -1:
        return "I" + word_from_matrix(mat_mul(mat_inv(I_MAT), m))
    if mat_det(m) != 1:
        raise ModularError("matrix is not invertible over the integers")
    word = ""
    cur = m
    while cur[2] != 0:
        a, c = cur[0], cur[2]
        q = a // c
        if q:
            word += ("T" * q) if q > 0 else ("t" * (-q))
            cur = mat_mul(mat_inv((1, q, 0, 1)), cur)
        word += "S"
        cur = mat_mul(mat_inv(S_MAT), cur)
    a, b = cur[0], cur[1]
    n = a * b
    word += ("T" * n) if n >= 0 else ("t" * (-n))
    assert mats_equal_up_to_sign(realize_word(word), m)
    return word


# ---------------------------------------------------------------------------
# the triple-based homomorphism


class ModularTriple:
    """A pairwise transversal triple with its induced matrix-group action."""

    def __init__(self, geometry: Geometry, a: GrasPoint, b: GrasPoint,
                 c: GrasPoint):
        for (u, v) in ((a, b), (b, c), (a, c)):
            if not geometry.transversal(u, v):
                raise ModularError("triple must be pairwise transversal")
        self.geometry = geometry
        self.a, self.b, self.c = a, b, c
        g = geometry
        self.phi_I = g.j_operator(b, a, b)
        self.phi_S = self.phi_I.compose(g.j_operator(a, c, b))
        self.phi_T = g.translation_operator(b, c, a)
        self._images = {"S": self.phi_S, "T": self.phi_T, "I": self.phi_I,
                        "F": self.phi_I.compose(self.phi_S)}

    def evaluate_word(self, word: str) -> ProjectiveMap:
        out = ProjectiveMap(self.geometry,
                            Matrix.identity(self.geometry.ring,
                                            self.geometry.ambient))
        for ch in word:
            img = self._images.get(ch.upper())
            if img is None:
                raise ModularError(f"unknown generator {ch!r}")
            out = out.compose(img if ch.isupper() else img.inverse())
        return out

    def evaluate_matrix(self, m: Mat2) -> ProjectiveMap:
        return self.evaluate_word(word_from_matrix(m))

    # -- verification suites -------------------------------------------------
    def s3_report(self) -> Tuple[Dict[tuple, ProjectiveMap], CheckReport]:
        """The six inversions generated by the triple, checked against the
        multiplication table of the permutations of three letters."""
        rep = CheckReport(suite="modular.s3",
                          config={"geometry": self.geometry.descriptor()})
        g = self.geometry
        a, b, c = self.a, self.b, self.c
        ident = ProjectiveMap(g, Matrix.identity(g.ring, g.ambient))
        j_ab_c = g.j_operator(a, c, b)
        j_bc_a = g.j_operator(b, a, c)
        j_ac_b = g.j_operator(a, b, c)
        table: Dict[tuple, ProjectiveMap] = {
            (0, 1, 2): ident,
            (1, 0, 2): j_ab_c,
            (0, 2, 1): j_bc_a,
            (2, 1, 0): j_ac_b,
            (1, 2, 0): j_ab_c.compose(j_bc_a),
            (2, 0, 1): j_bc_a.compose(j_ab_c),
        }
        perms = list(table)

        def compose_perm(p, q):
            return tuple(p[q[i]] for i in range(3))

        run_identity(rep, "s3.table",
                     "the six inversions multiply like the permutations",
                     "exhaustive", itertools.product(perms, perms),
                     lambda pq: table[pq[0]].compose(table[pq[1]])
                     == table[compose_perm(pq[0], pq[1])])
        run_identity(rep, "s3.order3",
                     "the composite of two transpositions has order three",
                     "direct", [0],
                     lambda _: _power(j_ab_c.compose(j_ac_b), 3) == ident,
                     witness_of=lambda _: [])
        return table, rep

    def relations_report(self) -> CheckReport:
        """Presentation relations plus the six anchored-map rows.

        Each row states that a specific inversion or translation built from
        the triple is the image of a specific integer matrix; the row for
        L_c(b, a) uses the matrix (2, -1, 1, 0) forced by the generator
        assignments (the variant (1, -1, 1, 0) fails and is recorded as a
        negative control)."""
        rep = CheckReport(suite="modular.relations",
                          config={"geometry": self.geometry.descriptor()})
        g = self.geometry
        a, b, c = self.a, self.b, self.c
        ident = ProjectiveMap(g, Matrix.identity(g.ring, g.ambient))
        run_identity(rep, "relations.S2", "image of S squares to the identity",
                     "direct", [0], lambda _: _power(self.phi_S, 2) == ident,
                     witness_of=lambda _: [])
        run_identity(rep, "relations.ST3", "image of ST has order three",
                     "direct", [0],
                     lambda _: _power(self.phi_S.compose(self.phi_T), 3) == ident,
                     witness_of=lambda _: [])
        rows = [
            ("row.Jaab", g.j_operator(a, b, a), (-1, 0, 0, 1)),
            ("row.Jbbc", g.j_operator(b, c, b), (-1, 2, 0, 1)),
            ("row.Jcca", g.j_operator(c, a, c), (-1, 0, -2, 1)),
            ("row.Lcba", g.translation_operator(c, b, a), (2, -1, 1, 0)),
            ("row.Lbca", g.translation_operator(b, c, a), (1, 1, 0, 1)),
            ("row.Labc", g.translation_operator(a, b, c), (1, 0, -1, 1)),
        ]
        for name, geom_map, mat in rows:
            run_identity(rep, name,
                         f"anchored map equals the image of {mat}",
                         "direct", [0],
                         lambda _, gm=geom_map, m=mat:
                         self.evaluate_matrix(m) == gm,
                         witness_of=lambda _: [])
        run_identity(rep, "row.Lcba-misprint",
                     "the (1, -1, 1, 0) variant does not give L_c(b, a)",
                     "direct", [0],
                     lambda _: self.evaluate_matrix((1, -1, 1, 0))
                     != g.translation_operator(c, b, a),
                     witness_of=lambda _: [])
        run_identity(rep, "relations.sign-quotient",
                     "words with opposite matrices give equal maps",
                     "direct", ["T", "ST", "TTS", "ITS"],
                     lambda w: self.evaluate_word("SS" + w) == self.evaluate_word(w),
                     witness_of=lambda w: [w])
        return rep

    def orbit_report(self, max_word_length: int = 4) -> Tuple[List[GrasPoint], CheckReport]:
        """Closure of the triple under its own inversions, plus equivariance
        of the induced quotient map from the integer projective line."""
        rep = CheckReport(suite="modular.orbit",
                          config={"geometry": self.geometry.descriptor()})
        g = self.geometry
        a, b, c = self.a, self.b, self.c
        limit = None
        try:
            limit = len(g.enumerate_points())
        except Exception:
            limit = 512
        orbit = {p.key(): p for p in (a, b, c)}
        grew = True
        while grew and len(orbit) <= limit:
            grew = False
            pts = list(orbit.values())
            for x in pts:
                for w in pts:
                    for z in pts:
                        if not (g.transversal(x, w) and g.transversal(w, z)):
                            continue
                        op = g.j_operator(x, w, z)
                        for y in pts:
                            img = op.apply(y)
                            if img.key() not in orbit:
                                orbit[img.key()] = img
                                grew = True
        orbit_pts = list(orbit.values())
        rep.add(CheckRecord("orbit.size", "closure of the triple under its "
                            "inversions", "exhaustive", len(orbit_pts), PASS,
                            note=f"{len(orbit_pts)} points"))

        # equivariance of the quotient map from primitive integer vectors,
        # pairing (0,1) with a, (1,0) with b and (1,1) with c so that the
        # fractional coordinate of a vector matches the chart of the triple
        base_vectors = ((0, 1), (1, 0), (1, 1))
        base_points = (a, b, c)
        assignment: Dict[Tuple[int, int], GrasPoint] = {}
        conflict = None
        alphabet = ["S", "T", "I", "s", "t", "i"]
        words, frontier = [""], [""]
        for _ in range(max_word_length):
            frontier = [w + ch for w in frontier for ch in alphabet]
            words.extend(frontier)
        cases = 0
        for word in words:
            m = realize_word(word)
            gm = self.evaluate_word(word)
            for vec, pt in zip(base_vectors, base_points):
                img_vec = _normalize_vec((m[0] * vec[0] + m[1] * vec[1],
                                          m[2] * vec[0] + m[3] * vec[1]))
                img_pt = gm.apply(pt)
                cases += 1
                prev = assignment.get(img_vec)
                if prev is None:
                    assignment[img_vec] = img_pt
                elif prev != img_pt:
                    conflict = [word, list(img_vec)]
                    break
            if conflict:
                break
        rep.add(CheckRecord(
            "orbit.equivariance",
            "the map from primitive integer vectors is well-defined and "
            "equivariant", "exhaustive", cases,
            FAIL if conflict else PASS, conflict))
        run_identity(rep, "orbit.extra-fixed-point",
                     "J(c,b,a) fixes the image of b under J(a,c,a)",
                     "direct", [0],
                     lambda _: g.j_map(c, b, a, g.j_map(a, c, a, b))
                     == g.j_map(a, c, a, b), witness_of=lambda _: [])
        run_identity(rep, "orbit.anchor-shift",
                     "J(a,b,c) equals J(a, J(a,c,a)(b), c)",
                     "direct", [0],
                     lambda _: g.j_operator(a, b, c)
                     == g.j_operator(a, g.j_map(a, c, a, b), c),
                     witness_of=lambda _: [])
        return orbit_pts, rep


def _power(m: ProjectiveMap, k: int) -> ProjectiveMap:
    out = m
    for _ in range(k - 1):
        out = out.compose(m)
    return out


def _normalize_vec(v: Tuple[int, int]) -> Tuple[int, int]:
    from math import gcd
    a, b = v
    g = gcd(abs(a), abs(b))
    if g:
        a, b = a // g, b // g
    if a < 0 or (a == 0 and b < 0):
        a, b = -a, -b
    return (a, b)


# ---------------------------------------------------------------------------
# idempotent quadruples


def idempotent_kind(geometry: Geometry, a: GrasPoint, x: GrasPoint,
                    b: GrasPoint, y: GrasPoint
                    ) -> Tuple[str, CheckReport]:
    """Classify the chain (a, x, b, y) as none / idempotent / strong.

    The eight fixed-point conditions are checked first; when they all hold,
    the extra inversion identity deciding strength is evaluated (as maps)."""
    g = geometry
    rep = CheckReport(suite="modular.idempotent",
                      config={"geometry": g.descriptor()})
    for (u, v) in ((a, x), (x, b), (b, y)):
        if not g.transversal(u, v):
            raise ModularError("quadruple must be a transversal chain")
    j = g.j_map
    c_pt = j(a, x, a, b)
    d_pt = j(x, b, y, a)
    w_pt = j(a, x, b, y)
    z_pt = j(y, b, y, x)
    conditions = [
        ("idem.1", "reflection through x fixes y", j(a, x, a, y) == y),
        ("idem.2", "the x-y inversion fixes the shifted anchor",
         j(x, b, y, c_pt) == c_pt),
        ("idem.3", "reflection through x fixes the shifted co-anchor",
         j(a, x, a, d_pt) == d_pt),
        ("idem.4", "the x-y inversion fixes the mirrored point",
         j(x, b, y, w_pt) == w_pt),
        ("idem.5", "reflection through y fixes a", j(b, y, b, a) == a),
        ("idem.6", "the a-b inversion fixes the mirrored co-point",
         j(a, x, b, z_pt) == z_pt),
        ("idem.7", "reflection through b fixes the mirrored point",
         j(y, b, y, w_pt) == w_pt),
        ("idem.8", "the a-b inversion fixes the shifted co-anchor",
         j(a, x, b, d_pt) == d_pt),
    ]
    all_ok = True
    for name, law, ok in conditions:
        rep.add(CheckRecord(name, law, "direct", 1, PASS if ok else FAIL))
        all_ok = all_ok and ok
    if not all_ok:
        return "none", rep
    rep.add(CheckRecord("idem.fixed-w", "reflection through b at x fixes w",
                        "direct", 1,
                        PASS if j(b, x, b, w_pt) == w_pt else FAIL))
    rep.add(CheckRecord("idem.fixed-d", "reflection through x at b fixes d",
                        "direct", 1,
                        PASS if j(x, b, x, d_pt) == d_pt else FAIL))
    strong_ok = (g.transversal(y, c_pt) and g.transversal(c_pt, x)
                 and g.transversal(a, w_pt) and g.transversal(w_pt, d_pt)
                 and g.j_operator(y, c_pt, x) == g.j_operator(a, w_pt, d_pt))
    rep.add(CheckRecord("idem.strong",
                        "the two derived inversions coincide", "direct", 1,
                        PASS if strong_ok else FAIL))
    return ("strong" if strong_ok else "idempotent"), rep


def idempotent_representation(geometry: Geometry, a: GrasPoint, x: GrasPoint,
                              b: GrasPoint, y: GrasPoint
                              ) -> Tuple[Dict[str, ProjectiveMap], CheckReport]:
    """Generator images A, B, J of the integer matrix group attached to an
    idempotent quadruple, with the defining relations and the central
    elements verified."""
    kind, _ = idempotent_kind(geometry, a, x, b, y)
    if kind == "none":
        raise ModularError("quadruple is not an idempotent")
    g = geometry
    rep = CheckReport(suite="modular.idempotent-rep",
                      config={"geometry": g.descriptor(), "kind": kind})
    A = g.translation_operator(x, a, b)
    B = g.translation_operator(b, x, y)
    J = g.j_operator(b, x, b)
    ident = ProjectiveMap(g, Matrix.identity(g.ring, g.ambient))

    def direct(name, law, ok, note=None):
        rep.add(CheckRecord(name, law, "direct", 1, PASS if ok else FAIL,
                            note=note))

    aba = A.compose(B).compose(A)
    bab = B.compose(A).compose(B)
    direct("rep.ABA4", "(ABA)^4 is the identity", _power(aba, 4) == ident)
    direct("rep.J2", "J squares to the identity", _power(J, 2) == ident)
    direct("rep.JA2", "(JA)^2 is the identity",
           _power(J.compose(A), 2) == ident)
    direct("rep.JB2", "(JB)^2 is the identity",
           _power(J.compose(B), 2) == ident)
    z = _power(g.j_operator(x, b, y).compose(g.j_operator(a, x, a)), 2)
    z_prime = _power(A.compose(B), 3)
    for tag, elt in (("Z", z), ("Z'", z_prime)):
        direct(f"rep.{tag}-fixes",
               f"{tag} fixes the four configuration points",
               all(elt.apply(p) == p for p in (a, x, b, y)))
        direct(f"rep.{tag}-order", f"{tag} has order at most two",
               _power(elt, 2) == ident)
        direct(f"rep.{tag}-central",
               f"{tag} commutes with the three generators",
               all(elt.compose(h) == h.compose(elt) for h in (A, B, J)))
    braid = aba == bab
    direct("rep.braid", "ABA = BAB exactly for strong idempotents",
           braid == (kind == "strong"),
           note=f"kind={kind}, braid={'holds' if braid else 'fails'}")
    direct("rep.ZZprime", "Z Z' = 1 exactly for strong idempotents",
           (z.compose(z_prime) == ident) == (kind == "strong"))
    return {"A": A, "B": B, "J": J, "Z": z, "Z'": z_prime}, rep


# ---------------------------------------------------------------------------
# the middle-block example


def peirce_example(ring: Ring, dim_e: int = 1, dim_u: int = 1,
                   dim_h: int = 1):
    """Canonical strong idempotent in the Grassmannian of E + u + v + H with
    the diagonal of u + v as the shared direction.

    Returns (geometry, (a, x, b, y), embed, report) where embed sends an
    integer 2x2 matrix to the block operator acting on the middle two
    slots."""
    dim_v = dim_u
    n = dim_e + dim_u + dim_v + dim_h
    g = Geometry(ring, n, ranks=None)

    def unit_cols(rows: Sequence[int]) -> List[List[int]]:
        return [[1 if i == r else 0 for i in range(n)] for r in rows]

    e_rows = list(range(dim_e))
    u_rows = list(range(dim_e, dim_e + dim_u))
    v_rows = list(range(dim_e + dim_u, dim_e + dim_u + dim_v))
    h_rows = list(range(dim_e + dim_u + dim_v, n))
    w_cols = [[1 if i in (u_rows[k], v_rows[k]) else 0 for i in range(n)]
              for k in range(dim_u)]
    a = g.point_from_ints(w_cols + unit_cols(h_rows))
    x = g.point_from_ints(unit_cols(e_rows) + unit_cols(u_rows))
    b = g.point_from_ints(unit_cols(h_rows) + unit_cols(v_rows))
    y = g.point_from_ints(unit_cols(e_rows) + w_cols)

    def embed(m: Mat2) -> ProjectiveMap:
        alpha, beta, gamma, delta = (ring.from_int(v) for v in m)
        zero, one = ring.zero(), ring.one()
        rows = []
        for i in range(n):
            row = [zero] * n
            if i in e_rows or i in h_rows:
                row[i] = one
            elif i in u_rows:
                k = i - u_rows[0]
                row[u_rows[k]] = alpha
                row[v_rows[k]] = beta
            else:
                k = i - v_rows[0]
                row[u_rows[k]] = gamma
                row[v_rows[k]] = delta
            rows.append(row)
        return ProjectiveMap(g, Matrix(ring, rows, ncols=n))

    rep = CheckReport(suite="modular.peirce",
                      config={"ring": ring.descriptor(), "ambient": n})
    kind, sub = idempotent_kind(g, a, x, b, y)
    for r in sub.records:
        rep.records.append(r)
    rep.add(CheckRecord("peirce.kind", "the middle-block quadruple is a "
                        "strong idempotent", "direct", 1,
                        PASS if kind == "strong" else FAIL, note=kind))
    maps, sub = idempotent_representation(g, a, x, b, y)
    rep.extend(sub)

    def direct(name, law, ok, note=None):
        rep.add(CheckRecord(name, law, "direct", 1, PASS if ok else FAIL,
                            note=note))

    direct("peirce.gen-A", "A is the block image of (1,1,0,1)",
           maps["A"] == embed(T_MAT))
    direct("peirce.gen-B", "B is the block image of (1,0,-1,1)",
           maps["B"] == embed((1, 0, -1, 1)))
    direct("peirce.weyl", "ABA is the block image of the quarter rotation",
           maps["A"].compose(maps["B"]).compose(maps["A"]) == embed(S_MAT))
    # J agrees with the block image of I up to the central block twist: the
    # discrepancy fixes the configuration and commutes with the image.
    twist = embed(I_MAT).inverse().compose(maps["J"])
    direct("peirce.J-twist-fixes",
           "the J discrepancy fixes the four configuration points",
           all(twist.apply(p) == p for p in (a, x, b, y)))
    direct("peirce.J-twist-central",
           "the J discrepancy commutes with the block image",
           all(twist.compose(embed(m)) == embed(m).compose(twist)
               for m in (S_MAT, T_MAT, I_MAT)))
    direct("peirce.J-twist-order", "the J discrepancy has order at most two",
           _power(twist, 2) == ProjectiveMap(g, Matrix.identity(ring, n)))
    direct("peirce.not-transversal",
           "the first and last chain points share the diagonal direction",
           not g.transversal(a, y))
    return g, (a, x, b, y), embed, rep, maps
