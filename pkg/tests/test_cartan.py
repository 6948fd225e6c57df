import random

import pytest

from closehecke.cartan import CosetLabel, GroupContext, group_order, required_precision
from closehecke.errors import BudgetExceededError, InsufficientPrecisionError
from closehecke.matrices import (
    FieldElement,
    GroupMatrix,
    check_antidominant,
    cochar_window,
    spread,
)
from closehecke.rings import EQUAL, MIXED, RAMIFIED, UNRAMIFIED, base_side, extension_side

from helpers import (
    brute_left_cosets,
    minor_valuation_mu,
    random_field_matrix,
    same_left_coset,
)


@pytest.fixture(scope="module")
def ctx2():
    return GroupContext(base_side("F", MIXED, 2, 1), 2)


@pytest.fixture(scope="module")
def ctx3():
    return GroupContext(base_side("F", MIXED, 3, 1), 2)


def fe(ring, v, c):
    return FieldElement.make(ring, v, ring.from_int(c))


# -- smith/cartan ------------------------------------------------------------

def test_smith_identity(ctx2):
    ring = ctx2.working_ring(6)
    mu, x, y = ctx2.smith_cartan(GroupMatrix.identity(ring, 2))
    assert mu == (0, 0)


def test_smith_diag_already_cartan(ctx2):
    ring = ctx2.working_ring(6)
    mu, _, _ = ctx2.smith_cartan(GroupMatrix.unif_diagonal(ring, (0, 1)))
    assert mu == (0, 1)


def test_smith_unit_entry_forces_invariants(ctx2):
    # [[pi, 1], [0, pi]]: the unit entry forces pi^0, the determinant pi^2
    ring = ctx2.working_ring(6)
    z = FieldElement.zero(ring)
    g = GroupMatrix(ring, [[fe(ring, 1, 1), fe(ring, 0, 1)], [z, fe(ring, 1, 1)]])
    mu, x, y = ctx2.smith_cartan(g)
    assert mu == (0, 2)
    assert minor_valuation_mu(g) == (0, 2)


@pytest.mark.parametrize("p", [2, 3])
@pytest.mark.parametrize("n", [2, 3])
def test_smith_matches_minor_oracle_and_reconstructs(p, n):
    ctx = GroupContext(base_side("F", MIXED, p, 1), n)
    ring = ctx.working_ring(6)
    rng = random.Random(100 * p + n)
    done = 0
    while done < 30:
        g = random_field_matrix(ctx, ring, rng, n=n)
        try:
            oracle_mu = minor_valuation_mu(g)
        except AssertionError:
            continue
        mu, x, y = ctx.smith_cartan(g)
        assert mu == oracle_mu
        rec = x * ctx.unif_power_matrix(mu, ring) * y.inverse()
        # exact modular arithmetic: the difference must vanish through every
        # certified digit (a wrong digit would surface as a certified entry)
        for row_r, row_g in zip(rec.rows, g.rows):
            for a, b in zip(row_r, row_g):
                d = a - b
                assert d.is_zero_marker() and d.v >= 1
        done += 1


def test_smith_cartan_invariance_under_units(ctx3):
    ring = ctx3.working_ring(6)
    rng = random.Random(5)
    els = ctx3.group_elements()
    g = ctx3.lift_label(ctx3.unif_label((-1, 1)), ring)
    mu0 = ctx3.smith_cartan(g)[0]
    for _ in range(8):
        x = GroupMatrix.from_residue(ring, els[rng.randrange(len(els))], 1)
        y = GroupMatrix.from_residue(ring, els[rng.randrange(len(els))], 1)
        assert ctx3.smith_cartan(x * g * y.inverse())[0] == mu0


# -- left cosets ---------------------------------------------------------------

def test_left_coset_reps_identity(ctx2):
    ring = ctx2.working_ring(6)
    reps = ctx2.left_coset_reps(GroupMatrix.identity(ring, 2))
    assert len(reps) == 1


def test_left_coset_reps_count_and_brute_match(ctx2):
    ring = ctx2.working_ring(6)
    g = GroupMatrix.unif_diagonal(ring, (0, 1))
    reps = ctx2.left_coset_reps(g)
    assert len(reps) == 2  # [K : K cap gKg^-1] = q
    brute = brute_left_cosets(ctx2, g)
    assert len(brute) == len(reps)
    # same partition: every brute rep matches exactly one fast rep
    for b in brute:
        assert sum(1 for r in reps if same_left_coset(ctx2, b, r)) == 1


def test_left_coset_count_conjugation_invariant(ctx2):
    ring = ctx2.working_ring(8)
    rng = random.Random(3)
    els = ctx2.group_elements()
    g = ctx2.lift_label(ctx2.unif_label((0, 2)), ring)
    base = len(ctx2.left_coset_reps(g, mu=(0, 2)))
    for _ in range(5):
        x = GroupMatrix.from_residue(ring, els[rng.randrange(len(els))], 1)
        y = GroupMatrix.from_residue(ring, els[rng.randrange(len(els))], 1)
        assert len(ctx2.left_coset_reps(x * g * y.inverse(), mu=(0, 2))) == base


def test_left_coset_key_invariance_across_precision(ctx2):
    lab = ctx2.unif_label((0, 1))
    r1 = ctx2.working_ring(6)
    r2 = ctx2.working_ring(12)
    k1 = ctx2.left_coset_key(ctx2.lift_label(lab, r1))
    k2 = ctx2.left_coset_key(ctx2.lift_label(lab, r2))
    assert k1 == k2


# -- double cosets ----------------------------------------------------------------

def test_same_double_coset_by_k_multiplication(ctx2):
    ring = ctx2.working_ring(6)
    g = GroupMatrix.unif_diagonal(ring, (0, 1))
    gens = ctx2._k_generators(ring, 3)
    assert ctx2.same_double_coset(g, gens[1] * g * gens[4])


def test_same_double_coset_diag_swap_is_oracle_false(ctx2):
    # Same G(o)-Cartan invariant but different K_1-double cosets: every
    # element of K diag(1,pi) K reduces to diag(1,0) mod pi, while
    # diag(pi,1) reduces to diag(0,1).  Frozen from the exhaustive
    # membership scan at p=2, m=1.
    ring = ctx2.working_ring(6)
    g = GroupMatrix.unif_diagonal(ring, (0, 1))
    z = FieldElement.zero(ring)
    h = GroupMatrix(ring, [[fe(ring, 1, 1), z], [z, fe(ring, 0, 1)]])
    assert ctx2.smith_cartan(h)[0] == (0, 1)
    assert not ctx2.same_double_coset(g, h)


def test_same_double_coset_distinct_mu(ctx2):
    ring = ctx2.working_ring(6)
    assert not ctx2.same_double_coset(GroupMatrix.identity(ring, 2),
                                      GroupMatrix.unif_diagonal(ring, (0, 1)))


def test_fingerprint_representative_independence(ctx3):
    rng = random.Random(17)
    ring = ctx3.working_ring(8)
    els = ctx3.group_elements()
    for _ in range(6):
        lab = CosetLabel((0, 1), els[rng.randrange(len(els))],
                         els[rng.randrange(len(els))], 1)
        relabeled = ctx3.label_of_matrix(ctx3.lift_label(lab, ring))
        assert ctx3.fingerprint(relabeled) == ctx3.fingerprint(lab)


# -- required precision ---------------------------------------------------------------

def test_required_precision_values():
    assert required_precision([(0, 0)], 1) == 1
    assert required_precision([(0, 1)], 1) == 2
    assert required_precision([(-1, 1)], 1) == 3


def test_required_precision_guarantee_exhaustive(ctx2):
    # every generator 1 + pi^{n_C} c E_ab of the level-n_C subgroup
    # conjugates into K_m under every g in the window
    for mu in [(0, 1), (-1, 1)]:
        n_c = required_precision([mu], ctx2.m)
        ring = ctx2.working_ring(n_c + 4)
        ident = GroupMatrix.identity(ring, 2)
        for lab in ctx2.enumerate_labels([mu]):
            g = ctx2.lift_label(lab, ring)
            ginv = g.inverse()
            for a in range(2):
                for b in range(2):
                    rows = [list(r) for r in ident.rows]
                    rows[a][b] = rows[a][b] + FieldElement.make(
                        ring, n_c, ring.one())
                    s = GroupMatrix(ring, rows)
                    conj = g * s * ginv
                    assert conj.residue_matrix(ctx2.m) == \
                        ident.residue_matrix(ctx2.m)


# -- enumeration -----------------------------------------------------------------------

def test_enumerate_labels_mu_zero_counts(ctx2):
    labs = ctx2.enumerate_labels([(0, 0)])
    assert len(labs) == 6  # |GL_2(F_2)|
    assert ctx2.group_order() == 6


def test_enumerate_labels_level2_count():
    ctx = GroupContext(base_side("F", MIXED, 2, 2), 2)
    labs = ctx.enumerate_labels([(0, 0)])
    assert len(labs) == group_order(2, 2, 2) == 96


def test_enumerate_labels_empty_window(ctx2):
    assert ctx2.enumerate_labels([]) == []


def test_enumerate_labels_complete_and_distinct(ctx2):
    rng = random.Random(23)
    els = ctx2.group_elements()
    for mu in [(0, 0), (0, 1)]:
        labs = ctx2.enumerate_labels([mu])
        fps = [ctx2.fingerprint(lab) for lab in labs]
        assert len(set(fps)) == len(fps)
        for _ in range(12):
            cand = CosetLabel(mu, els[rng.randrange(len(els))],
                              els[rng.randrange(len(els))], 1)
            assert sum(1 for fp in fps if fp == ctx2.fingerprint(cand)) == 1


def test_enumerate_deterministic_order(ctx3):
    labs1 = ctx3.enumerate_labels([(0, 1), (0, 0)])
    ctx_fresh = GroupContext(base_side("F", MIXED, 3, 1), 2)
    labs2 = ctx_fresh.enumerate_labels([(0, 1), (0, 0)])
    assert [l.sort_key() for l in labs1] == [l.sort_key() for l in labs2]


def test_enumeration_budget_guard():
    # spread windows carry the |G(o/p^m)|^2 guard; central windows are only
    # bounded by the group order itself
    ctx = GroupContext(base_side("F", MIXED, 3, 2), 2, budget=10)
    with pytest.raises(BudgetExceededError):
        ctx.enumerate_labels([(0, 1)])
    ctx2 = GroupContext(base_side("F", MIXED, 3, 2), 2, budget=10, pair_budget=10)
    with pytest.raises(BudgetExceededError):
        ctx2.enumerate_labels([(0, 0)])
    # the default budget keeps level-2 spread windows out of desk range
    ctx3 = GroupContext(base_side("F", MIXED, 3, 2), 2)
    with pytest.raises(BudgetExceededError):
        ctx3.enumerate_labels([(0, 1)])


# -- stabilizer -------------------------------------------------------------------------

def test_gamma_stabilizer_mu_zero_is_diagonal(ctx2):
    stab = ctx2.gamma_stabilizer((0, 0))
    assert len(stab.members) == 6
    assert all(x == y for x, y in stab.members)
    idm = tuple(tuple(ctx2.label_ring.one() if i == j else ctx2.label_ring.zero()
                      for j in range(2)) for i in range(2))
    assert (idm, idm) in stab.members


def test_gamma_stabilizer_closed_under_pair_product(ctx2):
    stab = ctx2.gamma_stabilizer((0, 1))
    members = set(stab.members)
    for (x1, y1) in stab.members:
        for (x2, y2) in stab.members:
            prod = (ctx2._rmat_mul(x1, x2), ctx2._rmat_mul(y1, y2))
            assert prod in members


def test_gamma_index_counts_labels(ctx2, ctx3):
    for ctx, total in ((ctx2, 36), (ctx3, 48 * 48)):
        for mu in [(0, 0), (0, 1)]:
            stab = ctx.gamma_stabilizer(mu)
            labs = ctx.enumerate_labels([mu])
            assert len(stab.members) * len(labs) == total


def test_gamma_budget_guard():
    ctx = GroupContext(base_side("F", MIXED, 3, 2), 2, pair_budget=100)
    with pytest.raises(BudgetExceededError):
        ctx.gamma_stabilizer((0, 0))


# -- sigma on matrices ---------------------------------------------------------------

@pytest.fixture(scope="module")
def ctx_ram():
    side = extension_side("E", base_side("F", MIXED, 3, 1), RAMIFIED, 2)
    return GroupContext(side, 2)


def test_sigma_on_group_fixes_base_points(ctx_ram):
    ring = ctx_ram.working_ring(6)
    g = GroupMatrix.from_residue(
        ring, tuple(tuple(ring.from_int(c) for c in row) for row in ((1, 2), (1, 0))),
        2)
    sg = ctx_ram.sigma_on_group(g)
    assert sg.residue_matrix(4) == g.residue_matrix(4)


def test_sigma_on_group_order_l(ctx_ram):
    ring = ctx_ram.working_ring(6)
    rng = random.Random(9)
    g = random_field_matrix(ctx_ram, ring, rng)
    s2 = ctx_ram.sigma_on_group(ctx_ram.sigma_on_group(g))
    for row_a, row_b in zip(s2.rows, g.rows):
        for a, b in zip(row_a, row_b):
            assert a.is_zero_marker() == b.is_zero_marker()
            if not a.is_zero_marker():
                assert (a.v, a.unit) == (b.v, b.unit)


def test_sigma_on_group_zeta_scaling(ctx_ram):
    # sigma(diag(1, pi)) = diag(1, -pi) = diag(1, pi) diag(1, -1)
    ring = ctx_ram.working_ring(6)
    g = GroupMatrix.unif_diagonal(ring, (0, 1))
    sg = ctx_ram.sigma_on_group(g)
    z = FieldElement.zero(ring)
    expected = GroupMatrix(ring, [
        [fe(ring, 0, 1), z],
        [z, FieldElement(ring, 1, ring.neg(ring.one()), ring.pi_level)]])
    assert ctx_ram.same_double_coset(sg, expected)
    assert sg.rows[1][1].unit == ring.neg(ring.one())


# -- windows and labels ------------------------------------------------------------------

def test_cochar_window_and_antidominance():
    win = cochar_window(2, 0, 2, max_spread=2)
    assert (0, 0) in win and (0, 2) in win and (2, 0) not in win
    with pytest.raises(Exception):
        check_antidominant((1, 0))
    assert spread((0, 2)) == 2


def test_label_json_roundtrip(ctx_ram):
    lab = ctx_ram.unif_label((0, 1))
    d = ctx_ram.label_to_json(lab)
    back = ctx_ram.label_from_json(d)
    assert back == lab


def test_insufficient_precision_surfaces():
    ctx = GroupContext(base_side("F", MIXED, 2, 1), 2, precision_cap=2)
    ring = ctx.working_ring(2)
    z_shallow = FieldElement.zero(ring, floor=1)
    g = GroupMatrix(ring, [[z_shallow, z_shallow], [z_shallow, z_shallow]])
    with pytest.raises(InsufficientPrecisionError):
        ctx.smith_cartan(g)
