"""Finite torsors, inversive torsor actions, reflection spaces and symmetry
actions, with exhaustive axiom checkers.

All carriers are finite and indexed 0..n-1 so that witnesses are index
tuples; checks sweep tuples in lexicographic order and report the first
failure.  Tables load from and store to plain JSON index arrays.
"""

from __future__ import annotations

import itertools
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .report import FAIL, PASS, CheckRecord, CheckReport, run_identity


class TableError(Exception):
    pass


def _is_perm(t: Sequence[int], n: int) -> bool:
    return len(t) == n and sorted(t) == list(range(n))


class TorsorTable:
    """Total ternary law on a finite carrier."""

    def __init__(self, size: int, law: Sequence[Sequence[Sequence[int]]],
                 labels: Optional[List[str]] = None):
        self.size = size
        self.law = [[[int(v) for v in row] for row in plane] for plane in law]
        self.labels = labels or [str(i) for i in range(size)]
        if len(self.law) != size or any(len(p) != size for p in self.law) \
                or any(len(r) != size for p in self.law for r in p):
            raise TableError("law is not total on the carrier")

    def t(self, x: int, y: int, z: int) -> int:
        return self.law[x][y][z]

    # middle multiplication m_{xz}(y) = (x y z)
    def middle(self, x: int, z: int) -> Tuple[int, ...]:
        return tuple(self.law[x][y][z] for y in range(self.size))

    @classmethod
    def from_function(cls, size: int, fn: Callable[[int, int, int], int],
                      labels=None) -> "TorsorTable":
        law = [[[fn(x, y, z) for z in range(size)] for y in range(size)]
               for x in range(size)]
        return cls(size, law, labels)

    @classmethod
    def from_group(cls, elements: list, op, inv, labels=None) -> "TorsorTable":
        """Torsor (x, y, z) -> x y^-1 z of a finite group."""
        index = {e: i for i, e in enumerate(elements)}
        return cls.from_function(
            len(elements),
            lambda x, y, z: index[op(op(elements[x], inv(elements[y])), elements[z])],
            labels)

    def to_json(self) -> dict:
        return {"kind": "torsor", "size": self.size, "labels": self.labels,
                "law": self.law}

    @classmethod
    def from_json(cls, data: dict) -> "TorsorTable":
        return cls(data["size"], data["law"], data.get("labels"))


class InversiveActionTable:
    """Bijections M[x][z] of a target set, indexed by carrier pairs, together
    with the carrier's own ternary law (needed by the composition axiom).

    carrier_to_target embeds the carrier into the target when the action is
    not the regular one (e.g. a chart acting on the whole point space)."""

    def __init__(self, carrier: TorsorTable, target_size: int,
                 maps: Sequence[Sequence[Sequence[int]]],
                 carrier_to_target: Optional[Sequence[int]] = None,
                 target_labels: Optional[List[str]] = None):
        self.carrier = carrier
        self.target_size = target_size
        self.maps = [[tuple(int(v) for v in m) for m in row] for row in maps]
        n = carrier.size
        if len(self.maps) != n or any(len(r) != n for r in self.maps):
            raise TableError("maps are not total on carrier pairs")
        for row in self.maps:
            for m in row:
                if not _is_perm(m, target_size):
                    raise TableError("map table entry is not a permutation of the target")
        if carrier_to_target is None:
            if target_size != n:
                raise TableError("regular-style table needs matching sizes")
            carrier_to_target = list(range(n))
        self.carrier_to_target = list(carrier_to_target)
        self._target_to_carrier = {t: i for i, t in enumerate(self.carrier_to_target)}
        self.target_labels = target_labels or [str(i) for i in range(target_size)]

    def M(self, x: int, z: int) -> Tuple[int, ...]:
        return self.maps[x][z]

    def apply_to_carrier(self, x: int, z: int, y: int) -> Optional[int]:
        """m_{xz}(y) inside the carrier, None when the carrier is not closed."""
        img = self.maps[x][z][self.carrier_to_target[y]]
        return self._target_to_carrier.get(img)

    @classmethod
    def regular(cls, torsor: TorsorTable) -> "InversiveActionTable":
        maps = [[torsor.middle(x, z) for z in range(torsor.size)]
                for x in range(torsor.size)]
        return cls(torsor, torsor.size, maps)

    def to_json(self) -> dict:
        return {"kind": "inversive-action", "carrier": self.carrier.to_json(),
                "target_size": self.target_size, "maps":
                [[list(m) for m in row] for row in self.maps],
                "carrier_to_target": self.carrier_to_target,
                "target_labels": self.target_labels}

    @classmethod
    def from_json(cls, data: dict) -> "InversiveActionTable":
        return cls(TorsorTable.from_json(data["carrier"]), data["target_size"],
                   data["maps"], data.get("carrier_to_target"),
                   data.get("target_labels"))


class ReflectionTable:
    """Point symmetries s_x of a finite carrier."""

    def __init__(self, size: int, sym: Sequence[Sequence[int]],
                 labels: Optional[List[str]] = None):
        self.size = size
        self.sym = [tuple(int(v) for v in s) for s in sym]
        if len(self.sym) != size or any(not _is_perm(s, size) for s in self.sym):
            raise TableError("symmetries must be permutations of the carrier")
        self.labels = labels or [str(i) for i in range(size)]

    def s(self, x: int) -> Tuple[int, ...]:
        return self.sym[x]

    def to_json(self) -> dict:
        return {"kind": "reflection-space", "size": self.size,
                "labels": self.labels, "sym": [list(s) for s in self.sym]}

    @classmethod
    def from_json(cls, data: dict) -> "ReflectionTable":
        return cls(data["size"], data["sym"], data.get("labels"))


class SymmetryActionTable:
    """A reflection space (carrier, s) acting on a target by involutions S_x."""

    def __init__(self, space: ReflectionTable, target_size: int,
                 maps: Sequence[Sequence[int]],
                 target_labels: Optional[List[str]] = None):
        self.space = space
        self.target_size = target_size
        self.maps = [tuple(int(v) for v in m) for m in maps]
        if len(self.maps) != space.size or any(not _is_perm(m, target_size)
                                               for m in self.maps):
            raise TableError("action maps must be permutations of the target")
        self.target_labels = target_labels or [str(i) for i in range(target_size)]

    def S(self, x: int) -> Tuple[int, ...]:
        return self.maps[x]

    @classmethod
    def regular(cls, space: ReflectionTable) -> "SymmetryActionTable":
        return cls(space, space.size, space.sym)

    def to_json(self) -> dict:
        return {"kind": "symmetry-action", "space": self.space.to_json(),
                "target_size": self.target_size,
                "maps": [list(m) for m in self.maps],
                "target_labels": self.target_labels}

    @classmethod
    def from_json(cls, data: dict) -> "SymmetryActionTable":
        return cls(ReflectionTable.from_json(data["space"]), data["target_size"],
                   data["maps"], data.get("target_labels"))


def table_from_json(data: dict):
    kind = data.get("kind")
    ctor = {"torsor": TorsorTable, "inversive-action": InversiveActionTable,
            "reflection-space": ReflectionTable,
            "symmetry-action": SymmetryActionTable}.get(kind)
    if ctor is None:
        raise TableError(f"unknown table kind {kind!r}")
    return ctor.from_json(data)


# ---------------------------------------------------------------------------
# permutation helpers


def _compose(f: Sequence[int], g: Sequence[int]) -> Tuple[int, ...]:
    """f after g."""
    return tuple(f[v] for v in g)


def _identity(n: int) -> Tuple[int, ...]:
    return tuple(range(n))


# ---------------------------------------------------------------------------
# axiom suites


def check_structure(kind: str, table) -> CheckReport:
    """Exhaustively verify the defining identities of the requested kind."""
    rep = CheckReport(suite=f"torsor-kit.{kind}", config={"kind": kind})
    if kind in ("torsor", "commutative-torsor"):
        if not isinstance(table, TorsorTable):
            raise TableError(f"{kind} check expects a torsor table")
        _torsor_checks(rep, table, commutative=(kind == "commutative-torsor"))
    elif kind == "inversive-action":
        if not isinstance(table, InversiveActionTable):
            raise TableError("inversive-action check expects an action table")
        _torsor_checks(rep, table.carrier, commutative=False)
        _inversive_checks(rep, table)
    elif kind == "reflection-space":
        if not isinstance(table, ReflectionTable):
            raise TableError("reflection-space check expects a reflection table")
        _reflection_checks(rep, table)
    elif kind == "symmetry-action":
        if not isinstance(table, SymmetryActionTable):
            raise TableError("symmetry-action check expects an action table")
        _reflection_checks(rep, table.space)
        _symmetry_action_checks(rep, table)
    else:
        raise TableError(f"unknown structure kind {kind!r}")
    return rep


def _torsor_checks(rep: CheckReport, t: TorsorTable, commutative: bool):
    n = t.size
    rng = range(n)
    run_identity(
        rep, "torsor.PA",
        "para-associativity ((xuv)wz) = (x(wvu)z) = (xu(vwz))", "exhaustive",
        itertools.product(rng, repeat=5),
        lambda c: t.t(t.t(c[0], c[1], c[2]), c[3], c[4])
        == t.t(c[0], t.t(c[3], c[2], c[1]), c[4])
        == t.t(c[0], c[1], t.t(c[2], c[3], c[4])))
    run_identity(
        rep, "torsor.IP", "idempotency (xxy) = y = (yxx)", "exhaustive",
        itertools.product(rng, repeat=2),
        lambda c: t.t(c[0], c[0], c[1]) == c[1] and t.t(c[1], c[0], c[0]) == c[1])
    if commutative:
        run_identity(
            rep, "torsor.C", "commutativity (xyz) = (zyx)", "exhaustive",
            itertools.product(rng, repeat=3),
            lambda c: t.t(*c) == t.t(c[2], c[1], c[0]))


def check_middle_axioms(t: TorsorTable) -> CheckReport:
    """Middle-multiplication reformulation: the operators m_{xz} composed
    three at a time close up, plus the two-point idempotency."""
    rep = CheckReport(suite="torsor-kit.middle", config={})
    n = t.size
    rng = range(n)
    mids = {(x, z): t.middle(x, z) for x in rng for z in rng}
    run_identity(
        rep, "middle.SA", "m(x,y) m(u,v) m(r,s) = m((xvr), (syu))", "exhaustive",
        itertools.product(rng, repeat=6),
        lambda c: _compose(_compose(mids[(c[0], c[1])], mids[(c[2], c[3])]),
                           mids[(c[4], c[5])])
        == mids[(t.t(c[0], c[3], c[4]), t.t(c[5], c[2], c[1]))])
    run_identity(
        rep, "middle.IP", "m(x,z)(x) = z and m(x,z)(z) = x", "exhaustive",
        itertools.product(rng, repeat=2),
        lambda c: mids[(c[0], c[1])][c[0]] == c[1] and mids[(c[0], c[1])][c[1]] == c[0])
    return rep


def check_sa_prime(t: TorsorTable) -> CheckReport:
    """Chasles-style composition of middle operators m(x,y) m(y,v) m(v,s) = m(x,s)."""
    rep = CheckReport(suite="torsor-kit.sa-prime", config={})
    n = t.size
    rng = range(n)
    mids = {(x, z): t.middle(x, z) for x in rng for z in rng}
    run_identity(
        rep, "middle.SA'", "m(x,y) m(y,v) m(v,s) = m(x,s)", "exhaustive",
        itertools.product(rng, repeat=4),
        lambda c: _compose(_compose(mids[(c[0], c[1])], mids[(c[1], c[2])]),
                           mids[(c[2], c[3])]) == mids[(c[0], c[3])])
    return rep


def sa_prime_implies_sa_probe(size: int,
                              middle: Dict[Tuple[int, int], Tuple[int, ...]]
                              ) -> Optional[str]:
    """Conjecture probe on a finite family m: does SA'+IP force SA?

    Returns None when the implication holds on this table, otherwise a
    description of the counterexample (SA' and IP hold but SA fails)."""
    rng = range(size)

    def sa_prime_ok():
        for x, y, v, s in itertools.product(rng, repeat=4):
            if _compose(_compose(middle[(x, y)], middle[(y, v)]),
                        middle[(v, s)]) != middle[(x, s)]:
                return False
        return True

    def ip_ok():
        return all(middle[(x, z)][x] == z and middle[(x, z)][z] == x
                   for x in rng for z in rng)

    if not (sa_prime_ok() and ip_ok()):
        return None  # hypothesis fails; nothing to test
    law = lambda x, y, z: middle[(x, z)][y]
    for c in itertools.product(rng, repeat=6):
        lhs = _compose(_compose(middle[(c[0], c[1])], middle[(c[2], c[3])]),
                       middle[(c[4], c[5])])
        rhs = middle[(law(c[0], c[3], c[4]), law(c[5], c[2], c[1]))]
        if lhs != rhs:
            return f"SA fails at {c} although SA' and IP hold"
    return None


def _inversive_checks(rep: CheckReport, t: InversiveActionTable):
    n = t.carrier.size
    rng = range(n)
    law = t.carrier.t
    run_identity(
        rep, "action.STA1", "M(x,z) M(z,x) = id", "exhaustive",
        itertools.product(rng, repeat=2),
        lambda c: _compose(t.M(*c), t.M(c[1], c[0])) == _identity(t.target_size))
    run_identity(
        rep, "action.STA2", "M(x,z) M(u,v) M(a,b) = M((xva), (buz))", "exhaustive",
        itertools.product(rng, repeat=6),
        lambda c: _compose(_compose(t.M(c[0], c[1]), t.M(c[2], c[3])),
                           t.M(c[4], c[5]))
        == t.M(law(c[0], c[3], c[4]), law(c[5], c[2], c[1])))


def is_commutative_action(t: InversiveActionTable) -> bool:
    n = t.carrier.size
    return all(t.M(x, z) == t.M(z, x) for x in range(n) for z in range(n))


def _reflection_checks(rep: CheckReport, t: ReflectionTable):
    n = t.size
    rng = range(n)
    run_identity(rep, "reflection.R1", "s_x fixes x", "exhaustive", rng,
                 lambda x: t.s(x)[x] == x, witness_of=lambda x: [x])
    run_identity(rep, "reflection.R2", "s_x is an involution", "exhaustive", rng,
                 lambda x: _compose(t.s(x), t.s(x)) == _identity(n),
                 witness_of=lambda x: [x])
    run_identity(
        rep, "reflection.R3", "s_x s_z s_x = s_{s_x(z)}", "exhaustive",
        itertools.product(rng, repeat=2),
        lambda c: _compose(_compose(t.s(c[0]), t.s(c[1])), t.s(c[0]))
        == t.s(t.s(c[0])[c[1]]))


def _symmetry_action_checks(rep: CheckReport, t: SymmetryActionTable):
    n = t.space.size
    rng = range(n)
    ident = _identity(t.target_size)
    run_identity(rep, "action.S1", "S_x is an involution", "exhaustive", rng,
                 lambda x: _compose(t.S(x), t.S(x)) == ident,
                 witness_of=lambda x: [x])
    run_identity(
        rep, "action.S2", "S_x S_y S_x = S_{s_x(y)}", "exhaustive",
        itertools.product(rng, repeat=2),
        lambda c: _compose(_compose(t.S(c[0]), t.S(c[1])), t.S(c[0]))
        == t.S(t.space.s(c[0])[c[1]]))


def symmetry_action_from_inversive(t: InversiveActionTable) -> SymmetryActionTable:
    """The diagonal family S_x = M(x,x) of an inversive action."""
    n = t.carrier.size
    sym = []
    for x in range(n):
        row = []
        for y in range(n):
            img = t.apply_to_carrier(x, x, y)
            if img is None:
                raise TableError("carrier is not closed under its diagonal maps")
            row.append(img)
        sym.append(row)
    space = ReflectionTable(n, sym, t.carrier.labels)
    return SymmetryActionTable(space, t.target_size,
                               [t.M(x, x) for x in range(n)], t.target_labels)


def derived_translations(t: InversiveActionTable) -> Tuple[dict, dict, CheckReport]:
    """Left and right translation families of an inversive action, with the
    auxiliary-point independence and the translation identities verified."""
    rep = CheckReport(suite="torsor-kit.translations", config={})
    n = t.carrier.size
    rng = range(n)
    law = t.carrier.t

    left: Dict[Tuple[int, int], Tuple[int, ...]] = {}
    right: Dict[Tuple[int, int], Tuple[int, ...]] = {}
    bad = None
    cases = 0
    for x, v in itertools.product(rng, repeat=2):
        candidates_l = {_compose(t.M(x, z), t.M(z, v)) for z in rng}
        candidates_r = {_compose(t.M(z, v), t.M(x, z)) for z in rng}
        cases += 1
        if len(candidates_l) != 1 or len(candidates_r) != 1:
            bad = [x, v]
            break
        left[(x, v)] = candidates_l.pop()
        right[(v, x)] = candidates_r.pop()
    rep.add(CheckRecord("translations.independent",
                        "L and R do not depend on the auxiliary point",
                        "exhaustive", cases, FAIL if bad else PASS, bad))
    if bad:
        return left, right, rep

    ident = _identity(t.target_size)
    run_identity(rep, "translations.LTA1", "L(x,x) = id", "exhaustive", rng,
                 lambda x: left[(x, x)] == ident, witness_of=lambda x: [x])
    run_identity(
        rep, "translations.LTA2", "L(x,v) L(u,w) = L((xvu), w) = L(x, (wuv))",
        "exhaustive", itertools.product(rng, repeat=4),
        lambda c: _compose(left[(c[0], c[1])], left[(c[2], c[3])])
        == left[(law(c[0], c[1], c[2]), c[3])]
        == left[(c[0], law(c[3], c[2], c[1]))])
    run_identity(
        rep, "translations.commute", "left and right translations commute",
        "exhaustive", itertools.product(rng, repeat=4),
        lambda c: _compose(left[(c[0], c[1])], right[(c[2], c[3])])
        == _compose(right[(c[2], c[3])], left[(c[0], c[1])]))
    run_identity(
        rep, "translations.intertwine", "M(x,x) L(v,x) M(x,x) = R((xvx), x)",
        "exhaustive", itertools.product(rng, repeat=2),
        lambda c: _compose(_compose(t.M(c[0], c[0]), left[(c[1], c[0])]),
                           t.M(c[0], c[0]))
        == right[(law(c[0], c[1], c[0]), c[0])])
    if is_commutative_action(t):
        run_identity(rep, "translations.LR", "commutative action: L = R",
                     "exhaustive", itertools.product(rng, repeat=2),
                     lambda c: left[(c[0], c[1])] == right[(c[0], c[1])])
    return left, right, rep


def transvections_and_formulas(t) -> CheckReport:
    """Transvection identities of a symmetry action; for commutative inversive
    actions also the transplantation formula M(x,z) = M(m_{xz}(o), o)."""
    rep = CheckReport(suite="torsor-kit.transvections", config={})
    if isinstance(t, InversiveActionTable):
        sym = symmetry_action_from_inversive(t)
        _transvection_checks(rep, sym)
        if is_commutative_action(t):
            n = t.carrier.size
            rng = range(n)

            def transplant(c):
                x, z, o = c
                m = t.apply_to_carrier(x, z, o)
                return m is not None and t.M(x, z) == t.M(m, o)

            run_identity(rep, "transvections.transplant",
                         "M(x,z) = M(m_{xz}(o), o) for every origin o",
                         "exhaustive", itertools.product(rng, repeat=3), transplant)
        return rep
    if isinstance(t, SymmetryActionTable):
        _transvection_checks(rep, t)
        return rep
    raise TableError("transvection checks expect a symmetry or inversive action")


def _transvection_checks(rep: CheckReport, t: SymmetryActionTable):
    n = t.space.size
    rng = range(n)
    q = {(x, y): _compose(t.S(x), t.S(y)) for x in rng for y in rng}
    run_identity(
        rep, "transvections.chasles", "Q(x,y) Q(y,z) = Q(x,z)", "exhaustive",
        itertools.product(rng, repeat=3),
        lambda c: _compose(q[(c[0], c[1])], q[(c[1], c[2])]) == q[(c[0], c[2])])
    run_identity(
        rep, "transvections.fundamental",
        "Q(x,y) Q(z,y) Q(x,y) = Q(s_x s_y(z), y)", "exhaustive",
        itertools.product(rng, repeat=3),
        lambda c: _compose(_compose(q[(c[0], c[1])], q[(c[2], c[1])]),
                           q[(c[0], c[1])])
        == q[(t.space.s(c[0])[t.space.s(c[1])[c[2]]], c[1])])
