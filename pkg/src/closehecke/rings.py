"""Truncated rings of integers of non-Archimedean local fields.

A local field enters only through its truncations o/p^N.  Two base models
are supported: ``mixed`` is Z/p^N (truncation of a p-adic field) and
``equal`` is F_p[t]/(t^N) (truncation of F_p((t))).  Degree-l extensions
are presented as quotients base[T]/(f) with f either a monic irreducible
lift (unramified) or T^l - w for a uniformizer class w (totally ramified).

Coordinate conventions
    mixed element   : int in [0, p^N)
    equal element   : tuple of N ints in [0, p), little-endian in t
    extension element: tuple of l base elements, little-endian in T

Ring objects operate on these raw coordinates; :class:`RingElement` is a
thin wrapper carrying a precision tag for use at the API surface.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import (
    GaloisConditionError,
    KindMismatchError,
    NotAUnitError,
    NotMCloseError,
    SamePrimeError,
    SpecMismatchError,
)

MIXED = "mixed"
EQUAL = "equal"
UNRAMIFIED = "unramified"
RAMIFIED = "ramified"

_PRIMES_SMALL = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37}


def is_prime(n):
    if n < 2:
        return False
    if n in _PRIMES_SMALL:
        return True
    k = 2
    while k * k <= n:
        if n % k == 0:
            return False
        k += 1
    return True


def _ceil_div(a, b):
    return -(-a // b)


# ---------------------------------------------------------------------------
# F_p polynomial helpers (dense little-endian int lists)

def _fp_trim(f):
    while f and f[-1] == 0:
        f.pop()
    return f


def _fp_add(f, g, p):
    n = max(len(f), len(g))
    out = [0] * n
    for i in range(n):
        a = f[i] if i < len(f) else 0
        b = g[i] if i < len(g) else 0
        out[i] = (a + b) % p
    return _fp_trim(out)


def _fp_mul(f, g, p):
    if not f or not g:
        return []
    out = [0] * (len(f) + len(g) - 1)
    for i, a in enumerate(f):
        if a:
            for j, b in enumerate(g):
                out[i + j] = (out[i + j] + a * b) % p
    return _fp_trim(out)


def _fp_rem(f, g, p):
    f = list(f)
    dg = len(g) - 1
    inv_lead = pow(g[-1], -1, p)
    while len(f) - 1 >= dg and f:
        shift = len(f) - 1 - dg
        c = (f[-1] * inv_lead) % p
        for i in range(len(g)):
            f[shift + i] = (f[shift + i] - c * g[i]) % p
        _fp_trim(f)
    return f


def _fp_powmod(f, e, g, p):
    result = [1]
    base = _fp_rem(f, g, p)
    while e:
        if e & 1:
            result = _fp_rem(_fp_mul(result, base, p), g, p)
        base = _fp_rem(_fp_mul(base, base, p), g, p)
        e >>= 1
    return result


def _fp_gcd(f, g, p):
    f, g = list(f), list(g)
    while g:
        f, g = g, _fp_rem(f, g, p)
    return f


def _fp_extgcd_invmod(f, g, p):
    """Inverse of f modulo g over F_p, assuming gcd(f, g) = 1."""
    r0, r1 = list(g), _fp_rem(f, g, p)
    s0, s1 = [], [1]
    while r1:
        dg = len(r1) - 1
        inv_lead = pow(r1[-1], -1, p)
        q = [0] * (len(r0) - len(r1) + 1) if len(r0) >= len(r1) else []
        rem = list(r0)
        while rem and len(rem) - 1 >= dg:
            shift = len(rem) - 1 - dg
            c = (rem[-1] * inv_lead) % p
            q[shift] = c
            for i in range(len(r1)):
                rem[shift + i] = (rem[shift + i] - c * r1[i]) % p
            _fp_trim(rem)
        r0, r1 = r1, rem
        s0, s1 = s1, _fp_add(s0, [(-c) % p for c in _fp_mul(q, s1, p)], p)
    # r0 is a unit constant
    c_inv = pow(r0[0], -1, p)
    return _fp_trim([(c_inv * c) % p for c in s0])


def _fp_is_irreducible(f, p):
    """f monic of degree d >= 1 over F_p."""
    d = len(f) - 1
    x = [0, 1]
    # f | x^(p^d) - x
    t = _fp_powmod(x, p ** d, f, p)
    if _fp_trim(_fp_add(t, [0, p - 1], p)):
        return False
    # gcd(f, x^(p^(d/q)) - x) = 1 for every prime q | d
    for q in sorted({q for q in range(2, d + 1) if d % q == 0 and is_prime(q)}):
        t = _fp_powmod(x, p ** (d // q), f, p)
        g = _fp_gcd(f, _fp_add(t, [0, p - 1], p), p)
        if len(g) - 1 >= 1:
            return False
    return True


def smallest_irreducible(p, degree):
    """Lexicographically smallest monic irreducible of given degree over F_p.

    Candidates are ordered by the coefficient tuple read from the highest
    non-leading coefficient down to the constant term.
    """
    for high in itertools.product(range(p), repeat=degree):
        # high = (c_{d-1}, ..., c_0)
        coeffs = list(reversed(high)) + [1]
        if coeffs[0] == 0:
            continue  # reducible: divisible by T
        if _fp_is_irreducible(coeffs, p):
            return tuple(coeffs[:-1])
    raise AssertionError("no irreducible polynomial found")


# ---------------------------------------------------------------------------
# Specs

@dataclass(frozen=True)
class BaseRingSpec:
    model: str
    p: int
    level: int

    def __post_init__(self):
        if self.model not in (MIXED, EQUAL):
            raise SpecMismatchError(f"unknown model {self.model!r}")
        if not is_prime(self.p):
            raise SpecMismatchError(f"p = {self.p} is not prime")
        if self.level < 1:
            raise SpecMismatchError("level must be >= 1")

    def to_json(self):
        return {"model": self.model, "p": self.p, "N": self.level}


@dataclass(frozen=True)
class ExtensionSpec:
    base: BaseRingSpec
    kind: str
    l: int
    minimal_poly: tuple | None  # low-degree F_p coefficients, leading 1 implicit
    e: int

    def to_json(self):
        d = self.base.to_json()
        ext = {"kind": self.kind, "l": self.l}
        if self.minimal_poly is not None:
            ext["minimalPoly"] = list(self.minimal_poly) + [1]
        d["ext"] = ext
        return d


def build_extension(base: BaseRingSpec, kind: str, l: int, minimal_poly=None):
    """Extension spec of prime degree l over a truncated base."""
    if not is_prime(l):
        raise SpecMismatchError(f"l = {l} is not prime")
    if l == base.p:
        raise SamePrimeError(f"l = p = {l}")
    if kind == UNRAMIFIED:
        if minimal_poly is None:
            minimal_poly = smallest_irreducible(base.p, l)
        else:
            minimal_poly = tuple(c % base.p for c in minimal_poly)
            if not _fp_is_irreducible(list(minimal_poly) + [1], base.p):
                raise SpecMismatchError("minimalPoly is not irreducible mod p")
        return ExtensionSpec(base, UNRAMIFIED, l, minimal_poly, 1)
    if kind == RAMIFIED:
        if (base.p - 1) % l != 0:
            raise GaloisConditionError(f"l = {l} does not divide p - 1 = {base.p - 1}")
        return ExtensionSpec(base, RAMIFIED, l, None, l)
    raise SpecMismatchError(f"unknown extension kind {kind!r}")


# ---------------------------------------------------------------------------
# Rings on raw coordinates

class BaseRing:
    """Z/p^N or F_p[t]/(t^N) on raw coordinates."""

    def __init__(self, spec: BaseRingSpec):
        self.spec = spec
        self.model = spec.model
        self.p = spec.p
        self.level = spec.level
        self.pi_level = spec.level
        if self.model == MIXED:
            self.modulus = spec.p ** spec.level

    # -- structural equality so rings can key caches
    def __eq__(self, other):
        return isinstance(other, BaseRing) and self.spec == other.spec

    def __hash__(self):
        return hash(("base", self.spec))

    def __repr__(self):
        if self.model == MIXED:
            return f"Z/{self.p}^{self.level}"
        return f"F_{self.p}[t]/t^{self.level}"

    def size(self):
        return self.p ** self.level

    def zero(self):
        return 0 if self.model == MIXED else (0,) * self.level

    def one(self):
        return self.from_int(1)

    def from_int(self, c):
        if self.model == MIXED:
            return c % self.modulus
        return ((c % self.p),) + (0,) * (self.level - 1)

    def add(self, a, b):
        if self.model == MIXED:
            return (a + b) % self.modulus
        return tuple((x + y) % self.p for x, y in zip(a, b))

    def neg(self, a):
        if self.model == MIXED:
            return (-a) % self.modulus
        return tuple((-x) % self.p for x in a)

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def mul(self, a, b):
        if self.model == MIXED:
            return (a * b) % self.modulus
        out = [0] * self.level
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    if i + j >= self.level:
                        break
                    out[i + j] = (out[i + j] + x * y) % self.p
        return tuple(out)

    def is_zero(self, a):
        return a == 0 if self.model == MIXED else not any(a)

    def val(self, a):
        """t/p-adic valuation; returns self.pi_level for zero."""
        if self.model == MIXED:
            if a == 0:
                return self.level
            v = 0
            while a % self.p == 0:
                a //= self.p
                v += 1
            return v
        for i, c in enumerate(a):
            if c:
                return i
        return self.level

    def is_unit(self, a):
        return self.val(a) == 0

    def inv(self, a):
        if not self.is_unit(a):
            raise NotAUnitError(f"{a!r} is not a unit in {self!r}")
        if self.model == MIXED:
            return pow(a, -1, self.modulus)
        # Newton lift of the residue-field inverse
        v = self.from_int(pow(a[0], -1, self.p))
        for _ in range(self.level.bit_length() + 1):
            v = self.mul(v, self.sub(self.from_int(2), self.mul(a, v)))
            if self.mul(a, v) == self.one():
                break
        assert self.mul(a, v) == self.one()
        return v

    def pow(self, a, k):
        if k < 0:
            return self.pow(self.inv(a), -k)
        out = self.one()
        base = a
        while k:
            if k & 1:
                out = self.mul(out, base)
            base = self.mul(base, base)
            k >>= 1
        return out

    def unif(self):
        """Natural uniformizer coordinates: p resp. t."""
        if self.model == MIXED:
            return self.p % self.modulus
        if self.level == 1:
            return (0,)
        return (0, 1) + (0,) * (self.level - 2)

    def mul_pi(self, a, j):
        if j == 0:
            return a
        if self.model == MIXED:
            return (a * self.p ** j) % self.modulus
        return (0,) * min(j, self.level) + a[: max(self.level - j, 0)]

    def div_pi(self, a, j):
        """Divide by the natural uniformizer^j; assumes val >= j."""
        if j == 0:
            return a
        if self.model == MIXED:
            assert a % self.p ** j == 0, "inexact division"
            return a // self.p ** j
        assert not any(a[:j]), "inexact division"
        return a[j:] + (0,) * j

    def residue(self, a, r):
        """Canonical residue data at level r <= level."""
        if r <= 0:
            return 0 if self.model == MIXED else ()
        if self.model == MIXED:
            return a % self.p ** r
        return a[:r]

    def lift_residue(self, data, r):
        """Canonical coordinates lifting residue data from level r."""
        if r <= 0:
            return self.zero()
        if self.model == MIXED:
            return data % self.modulus
        return tuple(data[:r]) + (0,) * (self.level - min(r, self.level)) if r < self.level \
            else tuple(data[: self.level])

    def res1_int(self, a):
        """Residue-field representative as an int in [0, p)."""
        if self.model == MIXED:
            return a % self.p
        return a[0]

    def elements(self):
        if self.model == MIXED:
            return iter(range(self.modulus))
        return itertools.product(range(self.p), repeat=self.level)

    def coords_json(self, a):
        if self.model == MIXED:
            return a
        return list(a)

    def coords_from_json(self, d):
        if self.model == MIXED:
            return int(d) % self.modulus
        coords = tuple(int(c) % self.p for c in d)
        if len(coords) != self.level:
            raise SpecMismatchError("coordinate length mismatch")
        return coords


class ExtensionRing:
    """base[T]/(f) with f monic irreducible (unramified) or T^l - w (ramified)."""

    def __init__(self, spec: ExtensionSpec, base_ring: BaseRing, unif_class=None):
        if base_ring.spec.model != spec.base.model or base_ring.spec.p != spec.base.p:
            raise SpecMismatchError("base ring does not match extension spec")
        self.spec = spec
        self.base = base_ring
        self.kind = spec.kind
        self.l = spec.l
        self.p = base_ring.p
        self.level = base_ring.level          # base truncation level
        self.e = spec.e
        self.pi_level = base_ring.level * spec.e
        if self.kind == UNRAMIFIED:
            # T^l = -(f_0 + f_1 T + ... + f_{l-1} T^{l-1})
            self.head = tuple(base_ring.neg(base_ring.from_int(c)) for c in spec.minimal_poly)
            self.w = None
        else:
            # T^l = w, the distinguished uniformizer class of the base field.
            # At base level 1 the class is 0 and T-division cannot recover the
            # top coordinate; the canonical lift 0 is used there.
            assert unif_class is not None, "ramified ring needs a uniformizer class"
            self.w = unif_class
            if not base_ring.is_zero(unif_class) and base_ring.val(unif_class) == 1:
                self.w_unit_inv = base_ring.inv(base_ring.div_pi(unif_class, 1))
            else:
                self.w_unit_inv = None
            self.head = None

    def __eq__(self, other):
        return (isinstance(other, ExtensionRing) and self.spec == other.spec
                and self.base == other.base and self.w == other.w)

    def __hash__(self):
        return hash(("ext", self.spec, self.base.spec, self.w))

    def __repr__(self):
        rel = f"T^{self.l}-pi" if self.kind == RAMIFIED else "f(T)"
        return f"{self.base!r}[T]/({rel})"

    def size(self):
        return self.base.size() ** self.l

    def zero(self):
        return (self.base.zero(),) * self.l

    def one(self):
        return (self.base.one(),) + (self.base.zero(),) * (self.l - 1)

    def from_int(self, c):
        return (self.base.from_int(c),) + (self.base.zero(),) * (self.l - 1)

    def embed(self, a):
        """Embed a base-ring element."""
        return (a,) + (self.base.zero(),) * (self.l - 1)

    def gen(self):
        """The class of T."""
        z, o = self.base.zero(), self.base.one()
        return (z, o) + (z,) * (self.l - 2)

    def add(self, a, b):
        return tuple(self.base.add(x, y) for x, y in zip(a, b))

    def neg(self, a):
        return tuple(self.base.neg(x) for x in a)

    def sub(self, a, b):
        return tuple(self.base.sub(x, y) for x, y in zip(a, b))

    def mul(self, a, b):
        B, l = self.base, self.l
        conv = [B.zero()] * (2 * l - 1)
        for i, x in enumerate(a):
            if not B.is_zero(x):
                for j, y in enumerate(b):
                    conv[i + j] = B.add(conv[i + j], B.mul(x, y))
        for i in range(2 * l - 2, l - 1, -1):
            c = conv[i]
            if B.is_zero(c):
                continue
            if self.kind == RAMIFIED:
                conv[i - l] = B.add(conv[i - l], B.mul(c, self.w))
            else:
                for j in range(l):
                    conv[i - l + j] = B.add(conv[i - l + j], B.mul(c, self.head[j]))
            conv[i] = B.zero()
        return tuple(conv[:l])

    def is_zero(self, a):
        return all(self.base.is_zero(x) for x in a)

    def val(self, a):
        """Valuation in the natural uniformizer of the extension."""
        if self.kind == UNRAMIFIED:
            return min(self.base.val(x) for x in a)
        best = self.pi_level
        for i, x in enumerate(a):
            bv = self.base.val(x)
            if bv < self.base.level:
                best = min(best, self.e * bv + i)
        return best

    def is_unit(self, a):
        return self.val(a) == 0

    def _res_field_inv(self, a):
        """Inverse of the residue of a unit, lifted canonically."""
        p = self.p
        if self.kind == RAMIFIED:
            c = pow(self.base.res1_int(a[0]), -1, p)
            return self.from_int(c)
        fbar = [c % p for c in self.spec.minimal_poly] + [1]
        abar = _fp_trim([self.base.res1_int(x) for x in a])
        inv = _fp_extgcd_invmod(abar, fbar, p)
        inv = inv + [0] * (self.l - len(inv))
        return tuple(self.base.from_int(c) for c in inv[: self.l])

    def inv(self, a):
        if not self.is_unit(a):
            raise NotAUnitError("not a unit in extension ring")
        v = self._res_field_inv(a)
        two = self.from_int(2)
        for _ in range(self.pi_level.bit_length() + 2):
            v = self.mul(v, self.sub(two, self.mul(a, v)))
            if self.mul(a, v) == self.one():
                break
        assert self.mul(a, v) == self.one()
        return v

    def pow(self, a, k):
        if k < 0:
            return self.pow(self.inv(a), -k)
        out = self.one()
        base = a
        while k:
            if k & 1:
                out = self.mul(out, base)
            base = self.mul(base, base)
            k >>= 1
        return out

    def mul_pi(self, a, j):
        if self.kind == UNRAMIFIED:
            return tuple(self.base.mul_pi(x, j) for x in a)
        out = a
        for _ in range(j):
            out = (self.base.mul(out[-1], self.w),) + out[:-1]
        return out

    def div_pi(self, a, j):
        if self.kind == UNRAMIFIED:
            return tuple(self.base.div_pi(x, j) for x in a)
        out = a
        for _ in range(j):
            if self.w_unit_inv is None:
                head = self.base.zero()
            else:
                head = self.base.div_pi(self.base.mul(out[0], self.w_unit_inv), 1)
            out = out[1:] + (head,)
        return out

    def coord_res_levels(self, r):
        """Base residue level of each T-coordinate at extension level r."""
        if self.kind == UNRAMIFIED:
            return tuple(r for _ in range(self.l))
        return tuple(max(0, _ceil_div(r - i, self.l)) for i in range(self.l))

    def residue(self, a, r):
        lv = self.coord_res_levels(r)
        return tuple(self.base.residue(x, k) for x, k in zip(a, lv))

    def lift_residue(self, data, r):
        lv = self.coord_res_levels(r)
        return tuple(self.base.lift_residue(d, k) for d, k in zip(data, lv))

    def elements(self):
        return itertools.product(self.base.elements(), repeat=self.l)

    def coords_json(self, a):
        return [self.base.coords_json(x) for x in a]

    def coords_from_json(self, d):
        return tuple(self.base.coords_from_json(x) for x in d)


# ---------------------------------------------------------------------------
# Ring elements with precision tags

class RingElement:
    """Ring coordinates plus an effective precision (in the natural
    uniformizer of the ring).  Arithmetic carries the min of the operand
    precisions and never claims more digits than it knows."""

    __slots__ = ("ring", "coords", "precision")

    def __init__(self, ring, coords, precision=None):
        self.ring = ring
        self.coords = coords
        self.precision = ring.pi_level if precision is None else min(precision, ring.pi_level)

    def _check(self, other):
        if self.ring != other.ring:
            raise SpecMismatchError("elements of different rings")

    def __add__(self, other):
        self._check(other)
        return RingElement(self.ring, self.ring.add(self.coords, other.coords),
                           min(self.precision, other.precision))

    def __sub__(self, other):
        self._check(other)
        return RingElement(self.ring, self.ring.sub(self.coords, other.coords),
                           min(self.precision, other.precision))

    def __neg__(self):
        return RingElement(self.ring, self.ring.neg(self.coords), self.precision)

    def __mul__(self, other):
        self._check(other)
        return RingElement(self.ring, self.ring.mul(self.coords, other.coords),
                           min(self.precision, other.precision))

    def inverse(self):
        return RingElement(self.ring, self.ring.inv(self.coords), self.precision)

    def __pow__(self, k):
        return RingElement(self.ring, self.ring.pow(self.coords, k), self.precision)

    def is_unit(self):
        return self.ring.is_unit(self.coords)

    def val(self):
        return self.ring.val(self.coords)

    def __eq__(self, other):
        return (isinstance(other, RingElement) and self.ring == other.ring
                and self.coords == other.coords)

    def __hash__(self):
        return hash((self.coords,))

    def __repr__(self):
        return f"RingElement({self.coords!r} in {self.ring!r})"

    def to_json(self):
        return self.ring.coords_json(self.coords)


def ring_arithmetic(a: RingElement, b: RingElement, op: str) -> RingElement:
    """Dispatch basic arithmetic; ``op`` in add|sub|mul|invUnit."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "invUnit":
        return a.inverse()
    raise SpecMismatchError(f"unknown op {op!r}")


# ---------------------------------------------------------------------------
# Hensel lifting and roots of unity

def hensel_root_of_unity(ring, l, residue_root):
    """Unique l-th root of unity in ``ring`` congruent to residue_root mod pi.

    Newton iteration on X^l - 1; requires l a unit in the ring.
    """
    x = ring.from_int(residue_root)
    l_elt = ring.from_int(l)
    one = ring.one()
    for _ in range(ring.pi_level.bit_length() + 2):
        fx = ring.sub(ring.pow(x, l), one)
        if ring.is_zero(fx):
            break
        dfx = ring.mul(l_elt, ring.pow(x, l - 1))
        x = ring.sub(x, ring.mul(fx, ring.inv(dfx)))
    assert ring.pow(x, l) == one
    return x


def primitive_root_residue(p, l):
    """Smallest c in [2, p) with c^l = 1 mod p and c != 1."""
    if (p - 1) % l != 0:
        raise GaloisConditionError(f"l = {l} does not divide p - 1 = {p - 1}")
    for c in range(2, p):
        if pow(c, l, p) == 1:
            return c
    raise AssertionError("unreachable: mu_l is cyclic of order l | p - 1")


def primitive_root_of_unity(spec: BaseRingSpec, l: int) -> RingElement:
    """Hensel lift of the smallest nontrivial residue-field l-th root of 1."""
    ring = BaseRing(spec)
    c = primitive_root_residue(spec.p, l)
    return RingElement(ring, hensel_root_of_unity(ring, l, c))


# ---------------------------------------------------------------------------
# Ring isomorphisms (the closeness data)

class RingIso:
    """Bijective ring homomorphism between two truncated rings.

    For base rings the action is determined by the image of the natural
    uniformizer (a valuation-one polynomial formula); for extension rings it
    acts coefficientwise through the base iso with T mapped to T.
    """

    def __init__(self, domain, codomain, apply_fn, inverse_fn, descriptor):
        self.domain = domain
        self.codomain = codomain
        self._apply = apply_fn
        self._inverse = inverse_fn
        self.descriptor = descriptor

    def apply(self, coords):
        return self._apply(coords)

    def __call__(self, elt: RingElement) -> RingElement:
        if elt.ring != self.domain:
            raise SpecMismatchError("element not in the domain ring")
        return RingElement(self.codomain, self._apply(elt.coords), elt.precision)

    def inverse(self):
        return RingIso(self.codomain, self.domain, self._inverse, self._apply,
                       {"inverse_of": self.descriptor})

    def to_json(self):
        return dict(self.descriptor)


def _subst_formula(ring, image_coeffs):
    """Coordinates of sum_j c_j pi^j in ``ring`` from F_p coefficients
    (little-endian, c_0 first), Horner in the natural uniformizer."""
    acc = ring.zero()
    for c in reversed(image_coeffs):
        acc = ring.add(ring.mul_pi(acc, 1), ring.from_int(c))
    return acc


def _equal_substitution(dom, cod, image_coeffs):
    """x(t) -> x(phi) with phi = sum_{j>=1} c_j t^j given by image_coeffs
    (c_1 first)."""
    phi = cod.mul_pi(_subst_formula(cod, image_coeffs), 1)

    def apply(coords):
        acc = cod.zero()
        for c in reversed(coords):
            acc = cod.add(cod.mul(acc, phi), cod.from_int(c))
        return acc

    return apply


def _revert_series(p, image_coeffs, m):
    """Compositional inverse of phi = sum_{j>=1} c_j t^j modulo t^m,
    returned in the same c_1-first convention.  Solves psi(phi(t)) = t
    degree by degree; correcting psi at degree k moves the composite by
    c_1^k t^k plus higher order."""
    spec = BaseRingSpec(EQUAL, p, m)
    ring = BaseRing(spec)
    fwd = _equal_substitution(ring, ring, image_coeffs)
    inv_c1 = pow(image_coeffs[0], -1, p)
    psi = [inv_c1] + [0] * (m - 2)
    for k in range(2, m):
        composite = fwd(tuple([0] + psi)[:m] + (0,) * max(0, m - 1 - len(psi)))
        err = ring.sub(composite, ring.unif())
        assert not any(err[:k]), "reversion drifted at low degree"
        psi[k - 1] = (-err[k] * pow(inv_c1, k, p)) % p
    return tuple(psi)


def build_lambda(F: BaseRingSpec, Fp: BaseRingSpec, m: int, unif_image=None) -> RingIso:
    """Level-m closeness isomorphism between two base truncations.

    ``unif_image`` (equal/equal only) gives the image of t as F_p
    coefficients (c_1, c_2, ...); default is the identity t -> t.
    """
    if F.p != Fp.p:
        raise NotMCloseError("different residue characteristics")
    if m < 1 or m > F.level or m > Fp.level:
        raise SpecMismatchError("level m out of range")
    dom = BaseRing(BaseRingSpec(F.model, F.p, m))
    cod = BaseRing(BaseRingSpec(Fp.model, Fp.p, m))
    if F.model != Fp.model and m >= 2:
        raise NotMCloseError(
            f"o/p^{m} truncations of mixed and equal characteristic are not isomorphic")
    desc = {"p": F.p, "m": m, "from": F.model, "to": Fp.model}
    if m == 1 or F.model == MIXED:
        # Residue-level transport, or identity on Z/p^m.  At m = 1 any
        # uniformizer image is invisible (the t-class is 0), so it is ignored.
        if m >= 2 and unif_image is not None and tuple(unif_image) != (1,):
            raise SpecMismatchError("nontrivial uniformizer images need equal/equal mode")

        def fwd(a, _d=dom, _c=cod):
            return _c.from_int(_d.res1_int(a)) if m == 1 else a % _c.modulus

        def bwd(a, _d=cod, _c=dom):
            return _c.from_int(_d.res1_int(a)) if m == 1 else a % _c.modulus

        return RingIso(dom, cod, fwd, bwd, desc)
    # equal/equal at level m >= 2
    image = tuple(int(c) % F.p for c in (unif_image or (1,)))
    if not image or image[0] % F.p == 0:
        raise SpecMismatchError("uniformizer image must have valuation exactly 1")
    desc["unifImage"] = list(image)
    fwd = _equal_substitution(dom, cod, image)
    bwd = _equal_substitution(cod, dom, _revert_series(F.p, image, m))
    return RingIso(dom, cod, fwd, bwd, desc)


def build_pi(lam: RingIso, E: ExtensionRing, Ep: ExtensionRing) -> RingIso:
    """Extension-level isomorphism induced by a base iso: coefficientwise
    lambda with T mapped to T."""
    if E.kind != Ep.kind or E.l != Ep.l:
        raise KindMismatchError("extensions have different kind or degree")
    if E.base != lam.domain or Ep.base != lam.codomain:
        raise SpecMismatchError("extensions not built over the iso's rings")
    if E.kind == RAMIFIED and lam.apply(E.w) != Ep.w:
        raise SpecMismatchError("uniformizer classes do not correspond")
    if E.kind == UNRAMIFIED:
        img = tuple(lam.apply(E.base.neg(h)) for h in E.head)
        exp = tuple(Ep.base.neg(h) for h in Ep.head)
        if img != exp:
            raise SpecMismatchError("minimal polynomials do not correspond")

    def fwd(coords, _l=lam):
        return tuple(_l.apply(x) for x in coords)

    lam_inv = lam.inverse()

    def bwd(coords, _l=lam_inv):
        return tuple(_l.apply(x) for x in coords)

    return RingIso(E, Ep, fwd, bwd, {"ext": True, "base": lam.descriptor})


# ---------------------------------------------------------------------------
# Galois generators

FROBENIUS = "frobenius"
ZETA_SCALING = "zeta"


class GaloisGenerator:
    """Order-l ring automorphism of an extension ring fixing the base.

    Unramified: the canonical Frobenius lift (T goes to the root of the
    minimal polynomial congruent to T^p mod pi).  Ramified: T goes to
    zeta_l T for the distinguished l-th root of unity.
    """

    def __init__(self, ring: ExtensionRing, rule: str, zeta_residue=None):
        self.ring = ring
        self.rule = rule
        self.l = ring.l
        if rule == ZETA_SCALING:
            assert zeta_residue is not None
            self.zeta_residue = zeta_residue
            self.zeta = hensel_root_of_unity(ring.base, ring.l, zeta_residue)
            self.gen_image = ring.mul(ring.embed(self.zeta), ring.gen())
        elif rule == FROBENIUS:
            self.zeta_residue = None
            self.zeta = None
            self.gen_image = self._frobenius_gen_image()
        else:
            raise SpecMismatchError(f"unknown Galois rule {rule!r}")
        self._powers = [self.ring.one(), self.gen_image]
        for i in range(2, self.l):
            self._powers.append(ring.mul(self._powers[-1], self.gen_image))

    def _frobenius_gen_image(self):
        ring = self.ring
        s = ring.pow(ring.gen(), ring.p)
        if ring.base.model == EQUAL:
            return s
        # Newton-lift s to the root of the minimal polynomial congruent to
        # T^p mod p (the mixed model has p-th powers only at the residue level).
        f_low = [ring.embed(ring.base.from_int(c)) for c in ring.spec.minimal_poly]

        def f_eval(x):
            acc = ring.one()
            out = ring.zero()
            for c in f_low:
                out = ring.add(out, ring.mul(c, acc))
                acc = ring.mul(acc, x)
            return ring.add(out, acc)  # + x^l

        def df_eval(x):
            acc = ring.one()
            out = ring.zero()
            for j in range(1, ring.l):
                acc_j = ring.pow(x, j - 1)
                out = ring.add(out, ring.mul(ring.from_int(j), ring.mul(f_low[j], acc_j)))
            out = ring.add(out, ring.mul(ring.from_int(ring.l), ring.pow(x, ring.l - 1)))
            return out

        for _ in range(ring.pi_level.bit_length() + 2):
            fx = f_eval(s)
            if ring.is_zero(fx):
                break
            s = ring.sub(s, ring.mul(fx, ring.inv(df_eval(s))))
        assert ring.is_zero(f_eval(s)), "Frobenius lift failed"
        return s

    def apply_coords(self, coords):
        ring = self.ring
        out = ring.zero()
        for i, x in enumerate(coords):
            if not ring.base.is_zero(x):
                out = ring.add(out, ring.mul(ring.embed(x), self._powers[i]))
        return out

    def __call__(self, elt: RingElement) -> RingElement:
        if elt.ring != self.ring:
            raise SpecMismatchError("element not in the generator's ring")
        return RingElement(self.ring, self.apply_coords(elt.coords), elt.precision)


def galois_sigma(gen: GaloisGenerator, x: RingElement) -> RingElement:
    return gen(x)


# ---------------------------------------------------------------------------
# Sides: one local field of a close pair or extension tower

class LocalFieldSide:
    """A local field known only through its truncations.

    The distinguished uniformizer is stored as an exact formula
    w = (w_0, w_1, ...) of F_p coefficients, meaning pi_dist = pi_nat * w(pi_nat);
    the formula instantiates at every working level, so closeness data fixed
    at level m never needs to be deepened.
    """

    def __init__(self, name, model=None, p=None, m=None, unif_unit=(1,),
                 base_side=None, kind=None, l=None, minimal_poly=None,
                 zeta_residue=None):
        self.name = name
        self.base_side = base_side
        self._rings = {}
        self._sigmas = {}
        if base_side is None:
            self.is_ext = False
            self.model = model
            self.p = p
            self.base_level_m = m
            self.e = 1
            self.m = m
            self.kind = None
            self.l = None
            self.unif_unit = tuple(unif_unit)
            if self.unif_unit[0] % p == 0:
                raise SpecMismatchError("uniformizer unit part must be a unit")
        else:
            self.is_ext = True
            self.model = base_side.model
            self.p = base_side.p
            self.kind = kind
            self.l = l
            self.minimal_poly = minimal_poly
            self.zeta_residue = zeta_residue
            spec = build_extension(BaseRingSpec(self.model, self.p, max(base_side.m, 1)),
                                   kind, l, minimal_poly)
            self.minimal_poly = spec.minimal_poly
            self.e = spec.e
            self.base_level_m = base_side.m
            self.m = spec.e * base_side.m
            if kind == RAMIFIED and zeta_residue is None:
                self.zeta_residue = primitive_root_residue(self.p, l)

    def __repr__(self):
        return f"<side {self.name}>"

    def spec(self, level=None):
        level = self.base_level_m if level is None else level
        base = BaseRingSpec(self.model, self.p, level)
        if not self.is_ext:
            return base
        return ExtensionSpec(base, self.kind, self.l, self.minimal_poly, self.e)

    def ring(self, base_level):
        """Ring of this side truncated at the given base level (memoized)."""
        if base_level in self._rings:
            return self._rings[base_level]
        base_spec = BaseRingSpec(self.model, self.p, base_level)
        if not self.is_ext:
            r = BaseRing(base_spec)
        else:
            base_ring = self.base_side.ring(base_level)
            spec = ExtensionSpec(base_spec, self.kind, self.l, self.minimal_poly, self.e)
            if self.kind == RAMIFIED:
                w = self.base_side.unif_class(base_ring)
                r = ExtensionRing(spec, base_ring, unif_class=w)
            else:
                r = ExtensionRing(spec, base_ring)
        self._rings[base_level] = r
        return r

    def unif_unit_coords(self, ring):
        """Unit w with pi_dist = pi_nat * w, in the given ring of this side."""
        if not self.is_ext:
            return _subst_formula(ring, self.unif_unit)
        if self.kind == RAMIFIED:
            return ring.one()
        return ring.embed(self.base_side.unif_unit_coords(ring.base))

    def unif_class(self, ring):
        """Distinguished uniformizer class in the given ring of this side."""
        return ring.mul_pi(self.unif_unit_coords(ring), 1)

    def sigma(self, base_level) -> GaloisGenerator:
        """Matched Galois generator at a working level (extensions only)."""
        assert self.is_ext, "base fields carry no Galois generator"
        if base_level not in self._sigmas:
            rule = FROBENIUS if self.kind == UNRAMIFIED else ZETA_SCALING
            self._sigmas[base_level] = GaloisGenerator(
                self.ring(base_level), rule, self.zeta_residue)
        return self._sigmas[base_level]

    def to_json(self):
        d = self.spec().to_json()
        d["name"] = self.name
        d["m"] = self.m
        if not self.is_ext and self.unif_unit != (1,):
            d["unifUnit"] = list(self.unif_unit)
        if self.is_ext:
            d["e"] = self.e
            if self.kind == RAMIFIED:
                d["ext"]["zetaResidue"] = self.zeta_residue
        return d


def base_side(name, model, p, m, unif_unit=(1,)) -> LocalFieldSide:
    return LocalFieldSide(name, model=model, p=p, m=m, unif_unit=unif_unit)


def extension_side(name, base, kind, l, minimal_poly=None, zeta_residue=None) -> LocalFieldSide:
    return LocalFieldSide(name, base_side=base, kind=kind, l=l,
                          minimal_poly=minimal_poly, zeta_residue=zeta_residue)
