"""Close pairs, matched extension towers, the Kazhdan transfer, and the
verification suites (homomorphism, Galois equivariance, main diagram).

The transfer acts on labels only: level-m residue pairs move through the
closeness isomorphism coefficientwise and the cocharacter stays put.  Every
check computes its two sides through independent routes and reports exact
equality; failures carry full support tables.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .cartan import CosetLabel, GroupContext
from .coeffs import CoeffField
from .errors import ConfigError, SideMismatchError
from .hecke import HeckeAlgebra, HeckeElement
from .matrices import GroupMatrix, cochar_window, spread
from .rings import (
    EQUAL,
    MIXED,
    RAMIFIED,
    UNRAMIFIED,
    LocalFieldSide,
    RingIso,
    base_side,
    build_lambda,
    build_pi,
    extension_side,
)

EXHAUSTIVE_RING_BOUND = 4000


@dataclass
class ClosePair:
    F: LocalFieldSide
    Fp: LocalFieldSide
    m: int
    lam: RingIso


@dataclass
class ExtensionPair:
    base: ClosePair
    E: LocalFieldSide
    Ep: LocalFieldSide
    e: int
    pi: RingIso


def build_close_pair(p, m, pair_mode="mixed-equal", unif_image=None) -> ClosePair:
    """The two supported closeness modes: mixed/equal at m = 1, and
    equal/equal at any m with a configurable uniformizer image."""
    if pair_mode == "mixed-equal":
        if m != 1:
            raise ConfigError("mixed/equal pairs exist only at closeness level m = 1")
        F = base_side("F", MIXED, p, m)
        Fp = base_side("F'", EQUAL, p, m)
        lam = build_lambda(F.spec(), Fp.spec(), m)
    elif pair_mode == "equal-equal":
        image = tuple(unif_image) if unif_image else (1,)
        F = base_side("F", EQUAL, p, m)
        Fp = base_side("F'", EQUAL, p, m, unif_unit=image)
        lam = build_lambda(F.spec(), Fp.spec(), m,
                           unif_image=image if m >= 2 else None)
    else:
        raise ConfigError(f"unknown pair mode {pair_mode!r}")
    ringF, ringFp = F.ring(m), Fp.ring(m)
    assert lam.apply(F.unif_class(ringF)) == Fp.unif_class(ringFp), \
        "closeness iso must match the distinguished uniformizer classes"
    return ClosePair(F, Fp, m, lam)


def build_extension_pair(pair: ClosePair, kind, l) -> ExtensionPair:
    """Matched degree-l extensions over a close pair, with the induced
    extension iso and matched Galois generators verified eagerly."""
    E = extension_side("E", pair.F, kind, l)
    Ep = extension_side("E'", pair.Fp, kind, l, minimal_poly=E.minimal_poly,
                        zeta_residue=E.zeta_residue)
    mb = pair.m
    pi = build_pi(pair.lam, E.ring(mb), Ep.ring(mb))
    _verify_extension_pair(pair, E, Ep, pi)
    return ExtensionPair(pair, E, Ep, E.e, pi)


def _verify_extension_pair(pair, E, Ep, pi):
    dom, cod = pi.domain, pi.codomain
    sig, sigp = E.sigma(pair.m), Ep.sigma(pair.m)
    els = list(dom.elements()) if dom.size() <= EXHAUSTIVE_RING_BOUND else None
    if els is None:
        import random
        rng = random.Random(0)
        els = [tuple(rng.choice(list(dom.base.elements())) for _ in range(dom.l))
               for _ in range(64)]
    inv = pi.inverse()
    one = dom.one()
    for a in els:
        fa = pi.apply(a)
        assert inv.apply(fa) == a, "Pi must be bijective"
        assert pi.apply(sig.apply_coords(a)) == sigp.apply_coords(fa), \
            "Pi o sigma must equal sigma' o Pi"
        sa = a
        for _ in range(E.l):
            sa = sig.apply_coords(sa)
        assert sa == a, "sigma must have order l"
    for b in els[:32]:
        for a in els[:32]:
            assert pi.apply(dom.mul(a, b)) == cod.mul(pi.apply(a), pi.apply(b))
            assert pi.apply(dom.add(a, b)) == cod.add(pi.apply(a), pi.apply(b))
    for x in pair.F.ring(pair.m).elements():
        assert pi.apply(dom.embed(x)) == cod.embed(pair.lam.apply(x)), \
            "Pi restricted to the base must be lambda"


class Tower:
    """All four sides with contexts and Hecke algebras, plus the transfers."""

    def __init__(self, p, m, n=2, case=None, l=None, pair_mode="mixed-equal",
                 coeff_l=None, coeff_k=1, unif_image=None,
                 budget=10 ** 7, pair_budget=10 ** 4, precision_cap=64):
        self.p = p
        self.m = m
        self.n = n
        self.case = case
        self.pair = build_close_pair(p, m, pair_mode, unif_image)
        self.extpair = None
        if case is not None:
            kind = UNRAMIFIED if case == "unramified" else RAMIFIED
            self.extpair = build_extension_pair(self.pair, kind, l)
        if l is not None and l == p:
            raise ConfigError("l must differ from the residue characteristic p")
        if coeff_l is None:
            coeff_l = l if l is not None else (3 if p == 2 else 2)
        if coeff_l == p:
            raise ConfigError("coefficient characteristic must differ from p")
        self.field = CoeffField(coeff_l, coeff_k)
        kw = dict(budget=budget, pair_budget=pair_budget, precision_cap=precision_cap)
        self.ctx = {"F": GroupContext(self.pair.F, n, **kw),
                    "F'": GroupContext(self.pair.Fp, n, **kw)}
        if self.extpair is not None:
            self.ctx["E"] = GroupContext(self.extpair.E, n, **kw)
            self.ctx["E'"] = GroupContext(self.extpair.Ep, n, **kw)
        self.alg = {name: HeckeAlgebra(ctx, self.field, side=name)
                    for name, ctx in self.ctx.items()}

    # -- transfers ------------------------------------------------------------
    def _iso_for(self, side):
        if side == "F":
            return self.pair.lam, "F'"
        if side == "F'":
            return self.pair.lam.inverse(), "F"
        if side == "E":
            return self.extpair.pi, "E'"
        if side == "E'":
            return self.extpair.pi.inverse(), "E"
        raise SideMismatchError(f"unknown side {side!r}")

    def kaz_label(self, side, label):
        iso, target = self._iso_for(side)
        P = tuple(tuple(iso.apply(x) for x in row) for row in label.P)
        Q = tuple(tuple(iso.apply(x) for x in row) for row in label.Q)
        return CosetLabel(label.mu, P, Q, label.level), target

    def kaz(self, f: HeckeElement) -> HeckeElement:
        """Basis-label transport; coefficients unchanged."""
        side = f.algebra.side
        iso, target_name = self._iso_for(side)
        target = self.alg[target_name]
        terms = []
        for lab, c in f.terms.values():
            moved, _ = self.kaz_label(side, lab)
            terms.append((moved, c))
        return target.element(terms)

    def brauer(self, f: HeckeElement, window=None) -> HeckeElement:
        side = f.algebra.side
        if side == "E":
            return f.algebra.brauer_restrict(f, self.alg["F"], window)
        if side == "E'":
            return f.algebra.brauer_restrict(f, self.alg["F'"], window)
        raise SideMismatchError("Brauer restriction starts on an extension side")


# ---------------------------------------------------------------------------
# Reports

@dataclass
class Report:
    command: str
    config: dict
    samples: list = field(default_factory=list)

    @property
    def passed(self):
        return all(s.get("equal", True) for s in self.samples)

    def add(self, **kw):
        self.samples.append(kw)

    def to_json(self, library_version="0.1.0"):
        return {"command": self.command,
                "config": self.config,
                "library_version": library_version,
                "samples": self.samples,
                "pass": self.passed}


def _sample_entry(kind, inputs, lhs, rhs):
    equal = lhs == rhs
    return {"kind": kind, "input": inputs, "equal": equal,
            "lhs": lhs.to_json(), "rhs": rhs.to_json()}


def _random_residue_gl(ctx, rng):
    """Seeded random invertible residue matrix over the label ring."""
    ring, n = ctx.label_ring, ctx.n
    pool = sorted(ring.elements())
    while True:
        mat = tuple(tuple(pool[rng.randrange(len(pool))] for _ in range(n))
                    for _ in range(n))
        if _residue_det_is_unit(ring, mat):
            return mat


def _residue_det_is_unit(ring, mat):
    import itertools
    n = len(mat)
    det = ring.zero()
    for perm in itertools.permutations(range(n)):
        sign = 1
        seen = list(perm)
        for i in range(n):
            for j in range(i + 1, n):
                if seen[i] > seen[j]:
                    sign = -sign
        term = ring.one()
        for i in range(n):
            term = ring.mul(term, mat[i][perm[i]])
        det = ring.add(det, term if sign > 0 else ring.neg(term))
    return ring.is_unit(det)


def random_label(ctx, rng, mus):
    mu = mus[rng.randrange(len(mus))]
    return CosetLabel(tuple(mu), _random_residue_gl(ctx, rng),
                      _random_residue_gl(ctx, rng), ctx.m)


# ---------------------------------------------------------------------------
# Check suites

def check_kaz_hom(tower: Tower, window_spread=2, samples=10, seed=0) -> Report:
    """Kaz(f * g) = Kaz(f) * Kaz(g) on cocharacter basis pairs in the window
    plus seeded random basis pairs, both products computed on their own side."""
    import random
    rng = random.Random(seed)
    rep = Report("check kaz-hom", {"p": tower.p, "m": tower.m, "n": tower.n,
                                   "window": window_spread, "samples": samples,
                                   "seed": seed})
    HF = tower.alg["F"]
    mus = cochar_window(tower.n, 0, window_spread, max_spread=window_spread)
    pairs = [(HF.unif_basis(lam_), HF.unif_basis(mu_), f"t[{lam_}]*t[{mu_}]")
             for lam_ in mus for mu_ in mus]
    small = cochar_window(tower.n, 0, 1)
    for i in range(samples):
        a = random_label(tower.ctx["F"], rng, small)
        b = random_label(tower.ctx["F"], rng, small)
        pairs.append((HF.basis(a), HF.basis(b), f"random#{i}"))
    for f, g, name in pairs:
        lhs = tower.kaz(HF.convolve(f, g))
        rhs = tower.alg["F'"].convolve(tower.kaz(f), tower.kaz(g))
        rep.add(**_sample_entry("kaz-hom", name, lhs, rhs))
    return rep


def check_galois_equivariance(tower: Tower, window_spread=2, samples=50,
                              seed=0) -> Report:
    """Kaz(sigma . f) = sigma' . Kaz(f) through independent routes."""
    import random
    rng = random.Random(seed)
    rep = Report("check galois-equivariance",
                 {"p": tower.p, "m": tower.m, "n": tower.n, "case": tower.case,
                  "window": window_spread, "samples": samples, "seed": seed})
    HE, HEp = tower.alg["E"], tower.alg["E'"]
    ctxE = tower.ctx["E"]
    labels = [ctxE.unif_label(mu)
              for mu in cochar_window(tower.n, 0, window_spread, max_spread=window_spread)]
    small = cochar_window(tower.n, 0, 1)
    labels += [random_label(ctxE, rng, small) for _ in range(samples)]
    for i, lab in enumerate(labels):
        f = HE.basis(lab)
        lhs = tower.kaz(HE.sigma_act(f))
        rhs = HEp.sigma_act(tower.kaz(f))
        rep.add(**_sample_entry("galois-equivariance", f"label#{i} mu={lab.mu}",
                                lhs, rhs))
    return rep


def structured_orbit_sums(tower: Tower, mu_spread, base_window, samples, seed):
    """The sigma-invariant sample family for the main diagram: orbit-sums of
    the cocharacter labels, of extension-side labels of base-side points, and
    of seeded random labels."""
    import random
    rng = random.Random(seed)
    HE = tower.alg["E"]
    ctxE, ctxF = tower.ctx["E"], tower.ctx["F"]
    e = tower.extpair.e
    sums = []
    names = []
    for mu in cochar_window(tower.n, 0, mu_spread, max_spread=mu_spread):
        sums.append(HE.sigma_orbit_sum(ctxE.unif_label(mu)))
        names.append(f"orbit-sum pi_{mu}")
    for nu in cochar_window(tower.n, 0, base_window, max_spread=base_window):
        for flab in ctxF.enumerate_labels([nu]):
            elab = _extension_label_of_base(tower, flab)
            sums.append(HE.sigma_orbit_sum(elab))
            names.append(f"orbit-sum of F-label {flab.mu}")
    small = cochar_window(tower.n, 0, max(1, mu_spread - (e - 1)))
    for i in range(samples):
        lab = random_label(ctxE, rng, small)
        sums.append(HE.sigma_orbit_sum(lab))
        names.append(f"random orbit-sum #{i}")
    return list(zip(names, sums))


def _extension_label_of_base(tower: Tower, flab):
    ctxE, ctxF = tower.ctx["E"], tower.ctx["F"]
    HE = tower.alg["E"]
    prec = ctxE.m + 2 * ctxE.side.e * (spread(flab.mu) + 1) + 4

    def run(p):
        ringE = ctxE.working_ring(p)
        ringF = ctxE.side.base_side.ring(ringE.level)
        gF = ctxF.lift_label(flab, ringF)
        return ctxE.label_of_matrix(HE.embed_base_matrix(gF, ringE))

    return ctxE.with_retry(run, prec)


def check_main_diagram(tower: Tower, mu_spread=None, base_window=1, samples=25,
                       seed=0) -> Report:
    """Kaz_m(Br(h)) = Br'(Kaz_em(h)) for every sample in the structured
    sigma-invariant family."""
    if mu_spread is None:
        mu_spread = 1 if tower.case == "unramified" else 2
    rep = Report("check main-diagram",
                 {"p": tower.p, "m": tower.m, "n": tower.n, "case": tower.case,
                  "muSpread": mu_spread, "baseWindow": base_window,
                  "samples": samples, "seed": seed})
    for name, h in structured_orbit_sums(tower, mu_spread, base_window, samples, seed):
        lhs = tower.kaz(tower.brauer(h))
        rhs = tower.brauer(tower.kaz(h))
        rep.add(**_sample_entry("main-diagram", name, lhs, rhs))
    return rep


def check_brauer_multiplicative(tower: Tower, pairs=25, seed=0) -> Report:
    """Br(f * g) = Br(f) * Br(g) on seeded sigma-invariant pairs."""
    import random
    rng = random.Random(seed)
    rep = Report("check brauer-mult",
                 {"p": tower.p, "m": tower.m, "n": tower.n, "case": tower.case,
                  "pairs": pairs, "seed": seed})
    HE, HF = tower.alg["E"], tower.alg["F"]
    ctxE = tower.ctx["E"]
    small = cochar_window(tower.n, 0, 1)
    family = [HE.sigma_orbit_sum(ctxE.unif_label(mu))
              for mu in cochar_window(tower.n, 0, tower.extpair.e)]
    for i in range(pairs):
        f = family[rng.randrange(len(family))] if rng.randrange(2) == 0 \
            else HE.sigma_orbit_sum(random_label(ctxE, rng, small))
        g = HE.sigma_orbit_sum(random_label(ctxE, rng, small))
        lhs = tower.brauer(HE.convolve(f, g))
        rhs = HF.convolve(tower.brauer(f), tower.brauer(g))
        rep.add(**_sample_entry("brauer-mult", f"pair#{i}", lhs, rhs))
    return rep


def check_lemma_conv(tower_or_alg, window_spread=2, elements=20, seed=0) -> Report:
    """Both convolution identities: cocharacter additivity over the window,
    and the three-factor identity for unit-group window elements."""
    import random
    if isinstance(tower_or_alg, Tower):
        alg = tower_or_alg.alg["F"]
    else:
        alg = tower_or_alg
    ctx = alg.context
    rng = random.Random(seed)
    rep = Report("check lemma-conv",
                 {"p": ctx.side.p, "m": ctx.m, "n": ctx.n,
                  "window": window_spread, "elements": elements, "seed": seed})
    mus = cochar_window(ctx.n, -1, window_spread, max_spread=window_spread)
    for lam_ in mus:
        for mu_ in mus:
            lhs = alg.convolve(alg.unif_basis(lam_), alg.unif_basis(mu_))
            rhs = alg.unif_basis(tuple(a + b for a, b in zip(lam_, mu_)))
            rep.add(**_sample_entry("cocharacter-additivity",
                                    f"{lam_}+{mu_}", lhs, rhs))
    window_elements = [_random_residue_gl(ctx, rng) for _ in range(elements)]
    lam_list = [mu for mu in mus if spread(mu) >= 1][:3]
    prec = ctx.default_pi_prec(lam_list)
    ring = ctx.working_ring(prec)
    for i, (x1, x2) in enumerate(zip(window_elements, reversed(window_elements))):
        lam_ = lam_list[i % len(lam_list)]
        X1 = GroupMatrix.from_residue(ring, x1, ctx.m)
        X2 = GroupMatrix.from_residue(ring, x2, ctx.m)
        D = ctx.unif_power_matrix(lam_, ring)
        lhs = alg.basis(ctx.label_of_matrix(X1 * D * X2))
        rhs = alg.convolve(alg.convolve(alg.basis(ctx.label_of_matrix(X1)),
                                        alg.unif_basis(lam_)),
                           alg.basis(ctx.label_of_matrix(X2)))
        rep.add(**_sample_entry("three-factor", f"x{i} around t[{lam_}]", lhs, rhs))
    return rep
