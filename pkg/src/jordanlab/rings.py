"""Exact commutative rings: Z, Q, prime fields, Z/n, polynomial rings and
nilpotent (Weil-type) extensions such as dual numbers and jet rings.

Every element is kept in a canonical form so that equality is structural:
fractions are reduced, residues lie in [0, n), zero coefficients are absent
and monomials beyond their truncation order are dropped.  All arithmetic is
exact; there is no floating point anywhere in this package.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Iterable, Iterator, Optional


class RingError(Exception):
    pass


class NotInvertible(RingError):
    pass


class Ring:
    """Base class for ring descriptors.  Subclasses operate on raw payloads;
    the `RingElement` wrapper provides operator syntax on top."""

    is_field = False
    is_finite = False
    is_local_weil = False

    # -- payload operations ------------------------------------------------
    def p_zero(self):
        raise NotImplementedError

    def p_one(self):
        raise NotImplementedError

    def p_from_int(self, n: int):
        raise NotImplementedError

    def p_add(self, a, b):
        raise NotImplementedError

    def p_neg(self, a):
        raise NotImplementedError

    def p_mul(self, a, b):
        raise NotImplementedError

    def p_sub(self, a, b):
        return self.p_add(a, self.p_neg(b))

    def p_invert(self, a):
        """Payload inverse, or None when the element is not a unit."""
        raise NotImplementedError

    def p_is_zero(self, a) -> bool:
        raise NotImplementedError

    def p_key(self, a):
        """Hashable canonical key of a payload."""
        return a

    def p_str(self, a) -> str:
        return str(a)

    def p_parse(self, s: str):
        raise NotImplementedError

    # -- element-level conveniences ----------------------------------------
    def el(self, payload) -> "RingElement":
        return RingElement(self, payload)

    def zero(self) -> "RingElement":
        return self.el(self.p_zero())

    def one(self) -> "RingElement":
        return self.el(self.p_one())

    def from_int(self, n: int) -> "RingElement":
        return self.el(self.p_from_int(n))

    def parse(self, s: str) -> "RingElement":
        return self.el(self.p_parse(s))

    def elements(self) -> Iterator["RingElement"]:
        raise RingError(f"ring {self} is not finite")

    def descriptor(self) -> str:
        raise NotImplementedError

    def __str__(self) -> str:
        return self.descriptor()

    def __repr__(self) -> str:
        return self.descriptor()

    def __eq__(self, other) -> bool:
        return isinstance(other, Ring) and self.descriptor() == other.descriptor()

    def __hash__(self) -> int:
        return hash(self.descriptor())


class RingElement:
    """An exact ring element: a descriptor plus canonical payload."""

    __slots__ = ("ring", "payload")

    def __init__(self, ring: Ring, payload):
        self.ring = ring
        self.payload = payload

    def _coerce(self, other) -> "RingElement":
        if isinstance(other, RingElement):
            if other.ring != self.ring:
                raise RingError(f"descriptor mismatch: {self.ring} vs {other.ring}")
            return other
        if isinstance(other, int):
            return self.ring.from_int(other)
        raise RingError(f"cannot coerce {other!r} into {self.ring}")

    def __add__(self, other):
        other = self._coerce(other)
        return RingElement(self.ring, self.ring.p_add(self.payload, other.payload))

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        return RingElement(self.ring, self.ring.p_sub(self.payload, other.payload))

    def __rsub__(self, other):
        return self._coerce(other).__sub__(self)

    def __mul__(self, other):
        other = self._coerce(other)
        return RingElement(self.ring, self.ring.p_mul(self.payload, other.payload))

    __rmul__ = __mul__

    def __neg__(self):
        return RingElement(self.ring, self.ring.p_neg(self.payload))

    def inverse(self) -> "RingElement":
        inv = self.ring.p_invert(self.payload)
        if inv is None:
            raise NotInvertible(f"{self} is not invertible in {self.ring}")
        return RingElement(self.ring, inv)

    def try_inverse(self) -> Optional["RingElement"]:
        inv = self.ring.p_invert(self.payload)
        return None if inv is None else RingElement(self.ring, inv)

    def __truediv__(self, other):
        other = self._coerce(other)
        return self * other.inverse()

    def is_zero(self) -> bool:
        return self.ring.p_is_zero(self.payload)

    def is_unit(self) -> bool:
        return self.ring.p_invert(self.payload) is not None

    def key(self):
        return self.ring.p_key(self.payload)

    def __eq__(self, other) -> bool:
        if isinstance(other, int):
            other = self.ring.from_int(other)
        if not isinstance(other, RingElement):
            return NotImplemented
        return self.ring == other.ring and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __str__(self) -> str:
        return self.ring.p_str(self.payload)

    def __repr__(self) -> str:
        return self.ring.p_str(self.payload)


# ---------------------------------------------------------------------------
# ground rings


class IntegerRing(Ring):
    def p_zero(self):
        return 0

    def p_one(self):
        return 1

    def p_from_int(self, n):
        return n

    def p_add(self, a, b):
        return a + b

    def p_neg(self, a):
        return -a

    def p_mul(self, a, b):
        return a * b

    def p_invert(self, a):
        return a if a in (1, -1) else None

    def p_is_zero(self, a):
        return a == 0

    def p_parse(self, s):
        return int(s)

    def descriptor(self):
        return "Z"


class RationalRing(Ring):
    is_field = True

    def p_zero(self):
        return Fraction(0)

    def p_one(self):
        return Fraction(1)

    def p_from_int(self, n):
        return Fraction(n)

    def p_add(self, a, b):
        return a + b

    def p_neg(self, a):
        return -a

    def p_mul(self, a, b):
        return a * b

    def p_invert(self, a):
        return None if a == 0 else 1 / a

    def p_is_zero(self, a):
        return a == 0

    def p_str(self, a):
        return str(a)

    def p_parse(self, s):
        return Fraction(s)

    def descriptor(self):
        return "Q"


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


class ModularRing(Ring):
    """Z/n.  When n is prime this is a field (see PrimeField)."""

    is_finite = True

    def __init__(self, n: int):
        if n < 2:
            raise RingError("modulus must be >= 2")
        self.n = n

    def p_zero(self):
        return 0

    def p_one(self):
        return 1 % self.n

    def p_from_int(self, k):
        return k % self.n

    def p_add(self, a, b):
        return (a + b) % self.n

    def p_neg(self, a):
        return (-a) % self.n

    def p_mul(self, a, b):
        return (a * b) % self.n

    def p_invert(self, a):
        if gcd(a, self.n) != 1:
            return None
        return pow(a, -1, self.n)

    def p_is_zero(self, a):
        return a == 0

    def p_parse(self, s):
        return int(s) % self.n

    def elements(self):
        for k in range(self.n):
            yield self.el(k)

    def descriptor(self):
        return f"Zn:{self.n}"


class PrimeField(ModularRing):
    is_field = True

    def __init__(self, p: int):
        if not _is_prime(p):
            raise RingError(f"{p} is not prime")
        super().__init__(p)

    def p_invert(self, a):
        return None if a == 0 else pow(a, self.n - 2, self.n)

    def descriptor(self):
        return f"Fp:{self.n}"


# ---------------------------------------------------------------------------
# sparse monomial rings (polynomials and Weil extensions)


def _dict_add(base: Ring, a: dict, b: dict) -> dict:
    out = dict(a)
    for mon, c in b.items():
        if mon in out:
            s = base.p_add(out[mon], c)
            if base.p_is_zero(s):
                del out[mon]
            else:
                out[mon] = s
        else:
            out[mon] = c
    return out


class MonomialRing(Ring):
    """Shared machinery for sparse monomial-to-coefficient rings.

    Payload: dict mapping exponent tuples (one slot per generator, fixed
    order) to nonzero base payloads.
    """

    def __init__(self, base: Ring, names: Iterable[str]):
        self.base = base
        self.names = tuple(names)
        if len(set(self.names)) != len(self.names):
            raise RingError("duplicate generator names")
        for nm in self.names:
            if not nm or not nm[0].isalpha() or not nm.isalnum():
                raise RingError(f"bad generator name {nm!r}")
        self._zero_mon = (0,) * len(self.names)

    def _truncate(self, mon) -> bool:
        """Return True when the monomial survives (is not forced to zero)."""
        return True

    def p_zero(self):
        return {}

    def p_one(self):
        return {self._zero_mon: self.base.p_one()}

    def p_from_int(self, n):
        c = self.base.p_from_int(n)
        return {} if self.base.p_is_zero(c) else {self._zero_mon: c}

    def p_add(self, a, b):
        return _dict_add(self.base, a, b)

    def p_neg(self, a):
        return {m: self.base.p_neg(c) for m, c in a.items()}

    def p_mul(self, a, b):
        out: dict = {}
        badd, bmul, bzero = self.base.p_add, self.base.p_mul, self.base.p_is_zero
        for m1, c1 in a.items():
            for m2, c2 in b.items():
                mon = tuple(x + y for x, y in zip(m1, m2))
                if not self._truncate(mon):
                    continue
                c = bmul(c1, c2)
                if bzero(c):
                    continue
                if mon in out:
                    s = badd(out[mon], c)
                    if bzero(s):
                        del out[mon]
                    else:
                        out[mon] = s
                else:
                    out[mon] = c
        return out

    def p_is_zero(self, a):
        return not a

    def p_key(self, a):
        return (self.descriptor(),) + tuple(
            sorted((m, self.base.p_key(c)) for m, c in a.items())
        )

    def gen(self, name: str) -> RingElement:
        i = self.names.index(name)
        mon = tuple(1 if j == i else 0 for j in range(len(self.names)))
        return self.el({mon: self.base.p_one()})

    def gens(self):
        return [self.gen(nm) for nm in self.names]

    # -- printing / parsing --------------------------------------------------
    def _mon_str(self, mon) -> str:
        parts = []
        for nm, e in zip(self.names, mon):
            if e == 1:
                parts.append(nm)
            elif e > 1:
                parts.append(f"{nm}^{e}")
        return "*".join(parts)

    def _coeff_str(self, c) -> str:
        s = self.base.p_str(c)
        if any(ch in s for ch in "+-*") and not (s.startswith("-") and s.count("-") == 1
                                                 and all(ch not in s[1:] for ch in "+-*")):
            return f"({s})"
        return s

    def p_str(self, a):
        if not a:
            return "0"
        terms = []
        for mon in sorted(a):
            c = a[mon]
            ms = self._mon_str(mon)
            cs = self._coeff_str(c)
            terms.append(f"{cs}*{ms}" if ms else cs)
        out = terms[0]
        for t in terms[1:]:
            out += t if t.startswith("-") else "+" + t
        return out

    def p_parse(self, s):
        s = s.replace(" ", "")
        if not s:
            raise RingError("empty element string")
        terms, depth, start = [], 0, 0
        for i, ch in enumerate(s):
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
            elif ch in "+-" and depth == 0 and i > start:
                terms.append(s[start:i])
                start = i
        terms.append(s[start:])
        out = self.p_zero()
        for term in terms:
            out = self.p_add(out, self._parse_term(term))
        return out

    def _parse_term(self, term: str):
        sign = 1
        while term and term[0] in "+-":
            if term[0] == "-":
                sign = -sign
            term = term[1:]
        coeff = self.base.p_one()
        mon = list(self._zero_mon)
        for factor in self._split_factors(term):
            name, _, exp = factor.partition("^")
            if name in self.names:
                mon[self.names.index(name)] += int(exp) if exp else 1
            else:
                if factor.startswith("(") and factor.endswith(")"):
                    factor = factor[1:-1]
                coeff = self.base.p_mul(coeff, self.base.p_parse(factor))
        if sign < 0:
            coeff = self.base.p_neg(coeff)
        mon = tuple(mon)
        if self.base.p_is_zero(coeff) or not self._truncate(mon):
            return {}
        return {mon: coeff}

    @staticmethod
    def _split_factors(term: str):
        factors, depth, start = [], 0, 0
        for i, ch in enumerate(term):
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
            elif ch == "*" and depth == 0:
                factors.append(term[start:i])
                start = i + 1
        factors.append(term[start:])
        return [f for f in factors if f]


class PolynomialRing(MonomialRing):
    """Multivariate polynomials with exact base coefficients."""

    def __init__(self, base: Ring, names: Iterable[str]):
        if isinstance(base, (PolynomialRing, WeilRing)):
            raise RingError("polynomial base must be a ground ring")
        super().__init__(base, names)

    def p_invert(self, a):
        if len(a) == 1 and self._zero_mon in a:
            inv = self.base.p_invert(a[self._zero_mon])
            if inv is not None:
                return {self._zero_mon: inv}
        return None

    def descriptor(self):
        return f"Poly:{self.base.descriptor()}[{','.join(self.names)}]"


class WeilRing(MonomialRing):
    """Base ring plus nilpotent generators with per-generator truncation.

    The generator named `g` with order k satisfies g^(k+1) = 0; an element
    splits uniquely into base part (constant monomial) and nilpotent part.
    Dual numbers are one generator of order 1, jet rings one generator of
    order k, and iterated tangent rings several generators of order 1.
    """

    is_local_weil = True

    def __init__(self, base: Ring, names: Iterable[str], orders: Iterable[int]):
        if isinstance(base, WeilRing):
            raise RingError("Weil base flattening must go through weil_extend")
        super().__init__(base, names)
        self.orders = tuple(orders)
        if len(self.orders) != len(self.names):
            raise RingError("generator/order count mismatch")
        if any(k < 1 for k in self.orders):
            raise RingError("truncation orders must be >= 1")
        self.is_finite = base.is_finite

    def _truncate(self, mon):
        return all(e <= k for e, k in zip(mon, self.orders))

    def p_invert(self, a):
        c0 = a.get(self._zero_mon, self.base.p_zero())
        c0inv = self.base.p_invert(c0)
        if c0inv is None:
            return None
        # geometric series in the nilpotent part; terminates by nilpotency
        u = {self._zero_mon: c0inv}
        nil = self.p_neg({m: c for m, c in a.items() if m != self._zero_mon})
        out = dict(u)
        power = dict(u)
        for _ in range(sum(self.orders)):
            power = self.p_mul(self.p_mul(power, nil), u)
            if not power:
                break
            out = self.p_add(out, power)
        return out

    def base_part(self, a: RingElement) -> RingElement:
        return self.base.el(a.payload.get(self._zero_mon, self.base.p_zero()))

    def nil_part(self, a: RingElement) -> RingElement:
        return self.el({m: c for m, c in a.payload.items() if m != self._zero_mon})

    def project(self, a: RingElement) -> RingElement:
        """Ring morphism onto the base: kill every nilpotent generator."""
        return self.base_part(a)

    def inject(self, a: RingElement) -> RingElement:
        """Ring morphism from the base: constant embedding."""
        if a.ring != self.base:
            raise RingError("inject expects a base-ring element")
        p = a.payload
        return self.el({} if self.base.p_is_zero(p) else {self._zero_mon: p})

    def coefficient(self, a: RingElement, mon: tuple) -> RingElement:
        return self.base.el(a.payload.get(mon, self.base.p_zero()))

    def elements(self):
        if not self.base.is_finite:
            raise RingError(f"ring {self} is not finite")
        mons = [m for m in self._all_monomials()]
        base_payloads = [e.payload for e in self.base.elements()]
        def rec(i):
            if i == len(mons):
                yield {}
                return
            for rest in rec(i + 1):
                for c in base_payloads:
                    d = dict(rest)
                    if not self.base.p_is_zero(c):
                        d[mons[i]] = c
                    yield d
        for payload in rec(0):
            yield self.el(payload)

    def _all_monomials(self):
        def rec(i):
            if i == len(self.orders):
                yield ()
                return
            for rest in rec(i + 1):
                for e in range(self.orders[i] + 1):
                    yield (e,) + rest
        return rec(0)

    def descriptor(self):
        gens = ",".join(f"{nm}^{k + 1}" for nm, k in zip(self.names, self.orders))
        return f"Weil:{self.base.descriptor()}[{gens}]"


# ---------------------------------------------------------------------------
# constructors and parsing


Z = IntegerRing()
Q = RationalRing()


def weil_extend(base: Ring, spec: Iterable[tuple[str, int]]) -> Ring:
    """Extend `base` by nilpotent generators given as (name, order) pairs.

    Extending an existing Weil ring appends fresh generators (iterated
    tangent construction).  An empty spec returns the base unchanged.
    """
    spec = list(spec)
    if not spec:
        return base
    names = [nm for nm, _ in spec]
    orders = [k for _, k in spec]
    if isinstance(base, WeilRing):
        return WeilRing(base.base, base.names + tuple(names), base.orders + tuple(orders))
    return WeilRing(base, names, orders)


def tangent_ring(base: Ring, name: str = "e") -> WeilRing:
    """Dual numbers over `base`: one generator with square zero."""
    return weil_extend(base, [(name, 1)])


def jet_ring(base: Ring, k: int, name: str = "d") -> WeilRing:
    """Jet ring of order k: one generator with (k+1)-st power zero."""
    return weil_extend(base, [(name, k)])


def weil_morphism(src: WeilRing, dst: Ring, images: dict):
    """Ring morphism src -> dst determined by generator substitution.

    `images` maps each generator name of src to a nilpotent element of dst
    (or zero).  Base coefficients are carried over unchanged, which requires
    the two base rings to coincide (dst may be the base itself).
    """
    dst_base = dst.base if isinstance(dst, WeilRing) else dst
    if src.base != dst_base:
        raise RingError("generator substitution requires matching base rings")

    def lift_coeff(c):
        if isinstance(dst, WeilRing):
            return dst.inject(dst.base.el(c))
        return dst.el(c)

    gen_images = [images.get(nm, dst.zero()) for nm in src.names]

    def phi(a: RingElement) -> RingElement:
        if a.ring != src:
            raise RingError("morphism applied to foreign element")
        out = dst.zero()
        for mon, c in a.payload.items():
            term = lift_coeff(c)
            for g, e in zip(gen_images, mon):
                for _ in range(e):
                    term = term * g
            out = out + term
        return out

    return phi


def _find_bracket(s: str) -> int:
    """Index of the '[' opening the final bracket group of s (ends with ])."""
    if not s.endswith("]"):
        raise RingError(f"missing bracket group in {s!r}")
    depth = 0
    for i in range(len(s) - 1, -1, -1):
        if s[i] == "]":
            depth += 1
        elif s[i] == "[":
            depth -= 1
            if depth == 0:
                return i
    raise RingError(f"unbalanced brackets in {s!r}")


def parse_ring(text: str) -> Ring:
    """Parse the compact ring syntax used by CLI flags and JSON files.

    Examples: Z, Q, Fp:7, Zn:6, Poly:Q[x,y], Weil:Q[e^2], Weil:Fp:5[e^2],
    Weil:Q[e1^2,e2^2] (iterated tangents), Weil:Poly:Q[x][d^3].
    """
    s = text.strip()
    if s == "Z":
        return Z
    if s == "Q":
        return Q
    if s.startswith("Fp:"):
        return PrimeField(int(s[3:]))
    if s.startswith("Zn:"):
        return ModularRing(int(s[3:]))
    if s.startswith("Poly:"):
        rest = s[5:]
        i = _find_bracket(rest)
        base = parse_ring(rest[:i])
        names = [nm for nm in rest[i + 1:-1].split(",") if nm]
        return PolynomialRing(base, names)
    if s.startswith("Weil:"):
        rest = s[5:]
        i = _find_bracket(rest)
        base = parse_ring(rest[:i])
        spec = []
        for item in rest[i + 1:-1].split(","):
            if not item:
                continue
            name, _, exp = item.partition("^")
            if not exp:
                raise RingError(f"generator {item!r} needs an explicit power")
            vanish = int(exp)
            if vanish < 2:
                raise RingError("vanishing exponent must be >= 2")
            spec.append((name, vanish - 1))
        return weil_extend(base, spec)
    raise RingError(f"cannot parse ring descriptor {text!r}")
