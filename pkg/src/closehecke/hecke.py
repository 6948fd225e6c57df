"""The mod-l Hecke algebra H(G, K) at congruence level m.

Elements are finitely supported maps from double-coset labels to F_{l^k};
support is keyed by the complete double-coset invariant, so no two stored
labels name the same coset.  Convolution counts left cosets with the Haar
normalization mu(K) = 1: the coefficient of t_c in t_a * t_b is
#{(i, j) : a_i b_j K = c K} reduced mod l.
"""

from __future__ import annotations

from .cartan import GroupContext
from .coeffs import CoeffField
from .errors import (
    NotSigmaInvariantError,
    SideMismatchError,
    SpecMismatchError,
    WindowTooSmallError,
)
from .matrices import FieldElement, GroupMatrix, spread


class HeckeElement:
    """Finitely supported label -> coefficient map over one side."""

    __slots__ = ("algebra", "terms")

    def __init__(self, algebra, terms):
        # terms: dict fingerprint -> (label, coeff); zero coeffs dropped
        self.algebra = algebra
        self.terms = terms

    def is_zero(self):
        return not self.terms

    def support(self):
        return sorted((lab for lab, _ in self.terms.values()),
                      key=lambda lab: lab.sort_key())

    def coeff_at(self, label):
        fp = self.algebra.context.fingerprint(label)
        entry = self.terms.get(fp)
        return entry[1] if entry else self.algebra.field.zero()

    def __add__(self, other):
        self.algebra._check_same(other.algebra)
        F = self.algebra.field
        out = dict(self.terms)
        for fp, (lab, c) in other.terms.items():
            if fp in out:
                s = F.add(out[fp][1], c)
                if F.is_zero(s):
                    del out[fp]
                else:
                    out[fp] = (out[fp][0], s)
            else:
                out[fp] = (lab, c)
        return HeckeElement(self.algebra, out)

    def scale(self, c):
        F = self.algebra.field
        if F.is_zero(c):
            return HeckeElement(self.algebra, {})
        return HeckeElement(self.algebra,
                            {fp: (lab, F.mul(c, x)) for fp, (lab, x) in self.terms.items()})

    def __neg__(self):
        return self.scale(self.algebra.field.neg(self.algebra.field.one()))

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        return self.algebra.convolve(self, other)

    def __eq__(self, other):
        if not isinstance(other, HeckeElement):
            return NotImplemented
        self.algebra._check_same(other.algebra)
        if set(self.terms) != set(other.terms):
            return False
        return all(self.terms[fp][1] == other.terms[fp][1] for fp in self.terms)

    def __repr__(self):
        parts = [f"{c}*t[{lab.mu}]" for lab, c in
                 sorted(self.terms.values(), key=lambda e: e[0].sort_key())]
        return " + ".join(parts) if parts else "0"

    def to_json(self):
        alg = self.algebra
        terms = sorted(self.terms.values(), key=lambda e: e[0].sort_key())
        return {"side": alg.side,
                "l": alg.field.l,
                "k": alg.field.k,
                "terms": [{"label": alg.context.label_to_json(lab),
                           "coeff": alg.field.coords_json(c)} for lab, c in terms]}


class HeckeAlgebra:
    """H(G, K) for one side, with coefficients in F_{l^k}."""

    def __init__(self, context: GroupContext, field: CoeffField, side=None):
        if field.l == context.side.p:
            raise SpecMismatchError("coefficient characteristic l must differ from p")
        self.context = context
        self.field = field
        self.side = side or context.side.name
        self._product_cache = {}

    def _check_same(self, other):
        if other is not self and (other.side != self.side or other.field != self.field):
            raise SideMismatchError(f"sides {self.side} and {other.side} differ")

    # -- constructors -------------------------------------------------------
    def zero(self):
        return HeckeElement(self, {})

    def element(self, pairs):
        F = self.field
        out = {}
        for lab, c in pairs:
            if F.is_zero(c):
                continue
            fp = self.context.fingerprint(lab)
            if fp in out:
                s = F.add(out[fp][1], c)
                if F.is_zero(s):
                    del out[fp]
                else:
                    out[fp] = (out[fp][0], s)
            else:
                out[fp] = (lab, c)
        return HeckeElement(self, out)

    def basis(self, label):
        return self.element([(label, self.field.one())])

    def one(self):
        return self.basis(self.context.identity_label())

    def unif_basis(self, mu):
        return self.basis(self.context.unif_label(mu))

    # -- convolution ---------------------------------------------------------
    def _basis_product(self, la, lb):
        ctx = self.context
        key = (ctx.fingerprint(la), ctx.fingerprint(lb))
        hit = self._product_cache.get(key)
        if hit is not None:
            return hit
        pi_prec = (ctx.m + 2 * (spread(la.mu) + spread(lb.mu))
                   + max(0, -la.mu[0]) + max(0, -lb.mu[0]) + 4)

        def run(prec):
            ring = ctx.working_ring(prec)
            A = ctx.lift_label(la, ring)
            B = ctx.lift_label(lb, ring)
            areps = ctx.left_coset_reps(A, mu=la.mu)
            breps = ctx.left_coset_reps(B, mu=lb.mu)
            buckets = {}
            for ai in areps:
                for bj in breps:
                    prod = ai * bj
                    k = ctx.left_coset_key(prod)
                    if k in buckets:
                        buckets[k][0] += 1
                    else:
                        buckets[k] = [1, prod]
            per_dc = {}
            for cnt, prod in buckets.values():
                lab = ctx.label_of_matrix(prod)
                fp = ctx.fingerprint(lab)
                if fp in per_dc:
                    # bi-invariance: every left coset of one double coset
                    # receives the same count
                    assert per_dc[fp][1] == cnt, "inconsistent double-coset counts"
                else:
                    per_dc[fp] = (lab, cnt)
            return tuple(per_dc.values())

        result = ctx.with_retry(run, pi_prec)
        self._product_cache[key] = result
        return result

    def convolve(self, f: HeckeElement, g: HeckeElement) -> HeckeElement:
        self._check_same(f.algebra)
        self._check_same(g.algebra)
        F = self.field
        out = self.zero()
        terms = []
        for la, ca in f.terms.values():
            for lb, cb in g.terms.values():
                c = F.mul(ca, cb)
                if F.is_zero(c):
                    continue
                for lab, cnt in self._basis_product(la, lb):
                    coeff = F.mul(c, F.from_int(cnt))
                    if not F.is_zero(coeff):
                        terms.append((lab, coeff))
        return self.element(terms)

    # -- Galois action ---------------------------------------------------------
    def sigma_label(self, label):
        """Image label of sigma . t_label: apply sigma to a representative and
        re-run the Cartan decomposition."""
        ctx = self.context

        def run(prec):
            ring = ctx.working_ring(prec)
            g = ctx.lift_label(label, ring)
            return ctx.label_of_matrix(ctx.sigma_on_group(g))

        out = ctx.with_retry(run, ctx.default_pi_prec([label.mu]))
        assert out.mu == label.mu, "Galois action must preserve the Cartan invariant"
        return out

    def sigma_act(self, f: HeckeElement) -> HeckeElement:
        self._check_same(f.algebra)
        if not self.context.side.is_ext:
            raise SideMismatchError("Galois action lives on the extension side")
        return self.element([(self.sigma_label(lab), c) for lab, c in f.terms.values()])

    def sigma_orbit(self, label):
        ctx = self.context
        orbit = [label]
        fps = {ctx.fingerprint(label)}
        cur = label
        for _ in range(self.context.side.l - 1):
            cur = self.sigma_label(cur)
            fp = ctx.fingerprint(cur)
            if fp in fps:
                break
            fps.add(fp)
            orbit.append(cur)
        assert len(orbit) in (1, self.context.side.l)
        return orbit

    def sigma_orbit_sum(self, label) -> HeckeElement:
        one = self.field.one()
        return self.element([(lab, one) for lab in self.sigma_orbit(label)])

    def is_sigma_invariant(self, f: HeckeElement) -> bool:
        return self.sigma_act(f) == f

    # -- Brauer restriction -------------------------------------------------------
    def embed_base_matrix(self, gF, ring):
        """Embed a base-side matrix into an extension-side working ring,
        rescaling valuations by the ramification index."""
        e = self.context.side.e
        rows = []
        for row in gF.rows:
            new = []
            for x in row:
                if x.is_zero_marker():
                    new.append(FieldElement.zero(ring, e * x.v))
                else:
                    new.append(FieldElement(ring, e * x.v, ring.embed(x.unit), e * x.prec))
            rows.append(new)
        return GroupMatrix(ring, rows)

    def brauer_restrict(self, f: HeckeElement, target: "HeckeAlgebra",
                        window=None) -> HeckeElement:
        """Restriction of a sigma-invariant function on G(E) to G(F), as a
        bi-K_F-invariant function: each base-side label takes the value of f
        at its representative."""
        self._check_same(f.algebra)
        ctxE = self.context
        ctxF = target.context
        side = ctxE.side
        if not side.is_ext or side.base_side is not ctxF.side:
            raise SideMismatchError("target is not the fixed-field side of this tower")
        if self.field != target.field:
            raise SideMismatchError("coefficient fields differ")
        if not self.is_sigma_invariant(f):
            raise NotSigmaInvariantError("restriction is only defined on sigma-invariant elements")
        e = side.e
        nus = set()
        for lab, _ in f.terms.values():
            mu = lab.mu
            if e == 1:
                nus.add(mu)
            elif all(x % e == 0 for x in mu):
                nus.add(tuple(x // e for x in mu))
        if window is not None:
            for nu in nus:
                if nu not in window:
                    raise WindowTooSmallError(f"support invariant {nu} outside window")
        sup_spread = max((spread(lab.mu) for lab, _ in f.terms.values()), default=0)
        fp_sets = {}
        for fp, (lab, c) in f.terms.items():
            fp_sets[fp] = (set(fp[1]), lab.mu, c)
        terms = []
        for nu in sorted(nus):
            for flab in ctxF.enumerate_labels([nu]):
                val = self._value_at_base_label(f, fp_sets, flab, ctxF, sup_spread)
                if val is not None and not self.field.is_zero(val):
                    terms.append((flab, val))
        return target.element(terms)

    def _value_at_base_label(self, f, fp_sets, flab, ctxF, sup_spread):
        ctxE = self.context
        e = ctxE.side.e
        pi_prec = ctxE.m + 2 * e * (spread(flab.mu) + sup_spread) + 4

        def run(prec):
            ringE = ctxE.working_ring(prec)
            ringF = ctxE.side.base_side.ring(ringE.level)
            gF = ctxF.lift_label(flab, ringF)
            gE = self.embed_base_matrix(gF, ringE)
            key = ctxE.left_coset_key(gE)
            mu_e = tuple(e * x for x in flab.mu)
            for keyset, mu, c in fp_sets.values():
                if mu == mu_e and key in keyset:
                    return c
            return None

        return ctxE.with_retry(run, pi_prec)

    # -- serialization ---------------------------------------------------------------
    def from_json(self, d):
        if d.get("side") not in (None, self.side):
            raise SideMismatchError(f"element is on side {d.get('side')!r}")
        if int(d["l"]) != self.field.l or int(d.get("k", 1)) != self.field.k:
            raise SpecMismatchError("coefficient field mismatch")
        return self.element([(self.context.label_from_json(t["label"]),
                              self.field.coords_from_json(t["coeff"]))
                             for t in d["terms"]])
