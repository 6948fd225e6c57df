"""Cartan decomposition and double-coset machinery for GL_n at congruence
level m over a truncated local field side.

Left cosets g K_m carry a canonical key: scale g integral, column-reduce to
the lower-triangular Hermite form H over the valuation ring (diagonal
pi^{a_i}, below-diagonal entries reduced mod the diagonal of their row) and
record (scaling, a, reduced entries, H^{-1} g mod pi^m).  The key determines
the coset exactly, so the sorted tuple of keys over the cosets of K g K is a
complete invariant of the double coset; label equality is membership of one
key in the other's key set, never equality of representatives.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .errors import BudgetExceededError, InsufficientPrecisionError
from .matrices import FieldElement, GroupMatrix, check_antidominant, spread
from .rings import RAMIFIED


@dataclass(frozen=True)
class CosetLabel:
    """One double coset K g K named by g = lift(P) pi_mu lift(Q)^{-1}."""
    mu: tuple
    P: tuple
    Q: tuple
    level: int

    def sort_key(self):
        return (self.mu, _flatten(self.P), _flatten(self.Q))


@dataclass(frozen=True)
class StabilizerSubgroup:
    mu: tuple
    level: int
    members: tuple  # pairs of residue matrices


def _flatten(data, out=None):
    if out is None:
        out = []
    if isinstance(data, tuple):
        for x in data:
            _flatten(x, out)
    else:
        out.append(data)
    return tuple(out)


def required_precision(mus, m):
    """Congruence depth n_C = m + max spread: conjugation by any g in the
    window carries the level-n_C subgroup into the level-m one."""
    s = max((spread(mu) for mu in mus), default=0)
    return m + s


def group_order(n, q, pi_level):
    """|GL_n(o/pi^M)| for residue field size q."""
    order = 1
    for i in range(n):
        order *= q ** n - q ** i
    return order * q ** (n * n * (pi_level - 1))


class GroupContext:
    """GL_n double-coset computations on one side at one congruence level."""

    def __init__(self, side, n, budget=10 ** 7, pair_budget=10 ** 4,
                 precision_cap=64):
        self.side = side
        self.n = n
        self.m = side.m                      # congruence level, in pi-units
        self.budget = budget
        self.pair_budget = pair_budget
        self.precision_cap = precision_cap
        self._ring_e = side.l if (side.is_ext and side.kind == RAMIFIED) else 1
        self.label_ring = side.ring(side.base_level_m if side.is_ext else side.m)
        assert self.label_ring.pi_level == self.m
        if side.is_ext and side.kind != RAMIFIED:
            self.residue_q = side.p ** side.l
        else:
            self.residue_q = side.p
        self._fingerprints = {}
        self._kgens = {}
        self._group_elements = None
        self._label_cache = {}

    # -- working precision ---------------------------------------------------

    def working_ring(self, pi_prec):
        base_level = max(-(-pi_prec // self._ring_e), 1)
        return self.side.ring(base_level)

    def default_pi_prec(self, mus):
        s = max((spread(mu) for mu in mus), default=0)
        neg = max((max(0, -mu[0]) for mu in mus), default=0)
        return self.m + 2 * s + neg + 4

    def with_retry(self, fn, pi_prec):
        while True:
            try:
                return fn(pi_prec)
            except InsufficientPrecisionError:
                if pi_prec >= self.precision_cap:
                    raise
                pi_prec = min(2 * pi_prec, self.precision_cap)

    # -- lifting ---------------------------------------------------------------

    def lift_residue_matrix(self, data, ring):
        return GroupMatrix.from_residue(ring, data, self.m)

    def unif_power_matrix(self, mu, ring):
        return GroupMatrix.unif_diagonal(ring, mu, self.side.unif_unit_coords(ring))

    def lift_label(self, label, ring):
        P = self.lift_residue_matrix(label.P, ring)
        Q = self.lift_residue_matrix(label.Q, ring)
        return P * self.unif_power_matrix(label.mu, ring) * Q.inverse()

    def identity_label(self):
        idm = GroupMatrix.identity(self.label_ring, self.n).residue_matrix(self.m)
        return CosetLabel((0,) * self.n, idm, idm, self.m)

    def unif_label(self, mu):
        mu = check_antidominant(mu)
        idm = GroupMatrix.identity(self.label_ring, self.n).residue_matrix(self.m)
        return CosetLabel(mu, idm, idm, self.m)

    # -- Smith/Cartan ----------------------------------------------------------

    def smith_cartan(self, g):
        """g = x pi_mu y^{-1} with x, y integral units and mu non-decreasing.

        Pivots take the entry of globally minimal certified valuation with
        lexicographic (row, col) tie-breaking; transforms are accumulated
        exactly and the distinguished-uniformizer unit is folded into y.
        """
        R, n = g.ring, g.n
        a = [list(row) for row in g.rows]
        P = [list(row) for row in GroupMatrix.identity(R, n).rows]
        Q = [list(row) for row in GroupMatrix.identity(R, n).rows]

        def row_sub(mat, i, k, f):
            mat[i] = [x - f * y for x, y in zip(mat[i], mat[k])]

        def col_sub(mat, j, k, f):
            for row in mat:
                row[j] = row[j] - f * row[k]

        for k in range(n):
            piv = None
            floor_min = None
            for i in range(k, n):
                for j in range(k, n):
                    v, exact = a[i][j].certified_val()
                    if exact:
                        if piv is None or v < piv[0]:
                            piv = (v, i, j)
                    else:
                        floor_min = v if floor_min is None else min(floor_min, v)
            if piv is None or (floor_min is not None and floor_min < piv[0]):
                raise InsufficientPrecisionError("cannot certify a minimal pivot")
            v0, pi_, pj = piv
            if pi_ != k:
                a[k], a[pi_] = a[pi_], a[k]
                P[k], P[pi_] = P[pi_], P[k]
            if pj != k:
                for mat in (a, Q):
                    for row in mat:
                        row[k], row[pj] = row[pj], row[k]
            pivot = a[k][k]
            inv_piv = pivot.inverse()
            for i in range(k + 1, n):
                f = a[i][k] * inv_piv
                if not f.is_zero_marker():
                    row_sub(a, i, k, f)
                    row_sub(P, i, k, f)
            for j in range(k + 1, n):
                f = a[k][j] * inv_piv
                if not f.is_zero_marker():
                    col_sub(a, j, k, f)
                    col_sub(Q, j, k, f)
        mu = []
        units = []
        w = self.side.unif_unit_coords(R)
        for k in range(n):
            v, exact = a[k][k].certified_val()
            if not exact:
                raise InsufficientPrecisionError("diagonal entry lost to cancellation")
            mu.append(v)
            # d_k = pi_nat^v u_k = pi_dist^v (w^{-v} u_k)
            units.append(FieldElement(R, 0, R.mul(a[k][k].unit, R.pow(w, -v)),
                                      a[k][k].prec))
        if any(mu[i] > mu[i + 1] for i in range(n - 1)):
            raise AssertionError("global min pivoting must give non-decreasing mu")
        Pm = GroupMatrix(R, P)
        Qm = GroupMatrix(R, Q)
        x = Pm.inverse()
        y = Qm * GroupMatrix.diagonal(R, [u.inverse() for u in units])
        return tuple(mu), x, y

    # -- canonical left-coset keys ----------------------------------------------

    def left_coset_key(self, g):
        R, n, m = g.ring, g.n, self.m
        c = -g.min_val()
        A = g.times_pi(c) if c else g
        cols = [[A.rows[i][j] for i in range(n)] for j in range(n)]
        avals = []
        below = []
        for i in range(n):
            piv, floor_min = None, None
            for j in range(i, n):
                v, exact = cols[j][i].certified_val()
                if exact:
                    if piv is None or v < piv[0]:
                        piv = (v, j)
                else:
                    floor_min = v if floor_min is None else min(floor_min, v)
            if piv is None or (floor_min is not None and floor_min < piv[0]):
                raise InsufficientPrecisionError("cannot certify a pivot row minimum")
            ai, jstar = piv
            if jstar != i:
                cols[i], cols[jstar] = cols[jstar], cols[i]
            u_inv = FieldElement(R, 0, R.inv(cols[i][i].unit), cols[i][i].prec)
            cols[i] = [u_inv * x for x in cols[i]]
            inv_piv = cols[i][i].inverse()
            for j in range(i + 1, n):
                f = cols[j][i] * inv_piv
                if not f.is_zero_marker():
                    cols[j] = [x - f * y for x, y in zip(cols[j], cols[i])]
            avals.append(ai)
        for i in range(1, n):
            for j in range(i):
                e = cols[j][i]
                rdata = e.residue(avals[i])
                rlift = FieldElement.from_residue(R, rdata, avals[i])
                q = (e - rlift).times_pi(-avals[i])
                if not q.is_zero_marker():
                    cols[j] = [x - q * y for x, y in zip(cols[j], cols[i])]
                below.append(rdata)
        H = GroupMatrix(R, [[cols[j][i] for j in range(n)] for i in range(n)])
        V = H.inverse() * A
        return (c, tuple(avals), tuple(below), V.residue_matrix(m))

    def _k_generators(self, ring, r):
        """Generators of K_m / K_r as working matrices (1 + pi^j c E_ab)."""
        key = (ring, r)
        if key in self._kgens:
            return self._kgens[key]
        n = self.n
        basis = [ring.one()]
        if self.side.is_ext and self.side.kind != RAMIFIED:
            basis = [ring.pow(ring.gen(), i) for i in range(self.side.l)]
        gens = []
        for j in range(self.m, r):
            for cb in basis:
                c = ring.mul_pi(cb, j)
                if ring.is_zero(c):
                    continue
                fe = FieldElement.make(ring, 0, c)
                for aa in range(n):
                    for bb in range(n):
                        rows = [list(row) for row in GroupMatrix.identity(ring, n).rows]
                        rows[aa][bb] = rows[aa][bb] + fe
                        gens.append(GroupMatrix(ring, rows))
        self._kgens[key] = gens
        return gens

    def left_coset_reps(self, g, mu=None, with_keys=False):
        """Duplicate-free left-coset representatives of K g K / K, BFS order."""
        if mu is None:
            mu = self.smith_cartan(g)[0]
        r = self.m + spread(mu)
        gens = self._k_generators(g.ring, r)
        k0 = self.left_coset_key(g)
        seen = {k0}
        order = [(k0, g)]
        queue = deque([g])
        while queue:
            x = queue.popleft()
            for s in gens:
                y = s * x
                ky = self.left_coset_key(y)
                if ky not in seen:
                    seen.add(ky)
                    order.append((ky, y))
                    queue.append(y)
        if with_keys:
            return order
        return [mat for _, mat in order]

    # -- double cosets -----------------------------------------------------------

    def fingerprint(self, label):
        """Complete double-coset invariant: (mu, sorted left-coset keys)."""
        fp = self._fingerprints.get(label)
        if fp is not None:
            return fp

        def run(pi_prec):
            ring = self.working_ring(pi_prec)
            g = self.lift_label(label, ring)
            keyed = self.left_coset_reps(g, mu=label.mu, with_keys=True)
            return (label.mu, tuple(sorted(k for k, _ in keyed)))

        fp = self.with_retry(run, self.default_pi_prec([label.mu]))
        self._fingerprints[label] = fp
        return fp

    def label_of_matrix(self, g):
        mu, x, y = self.smith_cartan(g)
        return CosetLabel(mu, x.residue_matrix(self.m), y.residue_matrix(self.m),
                          self.m)

    def same_double_coset(self, g, h):
        """K g K == K h K: equal Cartan invariants and h in the left-coset
        union of g."""
        mu_g = self.smith_cartan(g)[0]
        mu_h = self.smith_cartan(h)[0]
        if mu_g != mu_h:
            return False
        keys = {k for k, _ in self.left_coset_reps(g, mu=mu_g, with_keys=True)}
        return self.left_coset_key(h) in keys

    def same_label(self, a, b):
        return self.fingerprint(a) == self.fingerprint(b)

    # -- enumeration ---------------------------------------------------------------

    def group_order(self):
        return group_order(self.n, self.residue_q, self.m)

    def _residue_gl_generators(self):
        """Generators of GL_n(o/pi^m) as residue matrices of the label ring."""
        ring, n = self.label_ring, self.n
        basis = [ring.one()]
        if self.side.is_ext and self.side.kind != RAMIFIED:
            basis = [ring.pow(ring.gen(), i) for i in range(self.side.l)]
        gens = []
        for a in range(n):
            for b in range(n):
                if a == b:
                    continue
                for j in range(ring.pi_level):
                    for cb in basis:
                        c = ring.mul_pi(cb, j)
                        if ring.is_zero(c):
                            continue
                        mat = [[ring.one() if r == s else ring.zero() for s in range(n)]
                               for r in range(n)]
                        mat[a][b] = c
                        gens.append(tuple(tuple(row) for row in mat))
        for u in unit_group_generators(ring):
            mat = [[ring.one() if r == s else ring.zero() for s in range(n)]
                   for r in range(n)]
            mat[0][0] = u
            gens.append(tuple(tuple(row) for row in mat))
        return gens

    def _rmat_mul(self, A, B):
        ring, n = self.label_ring, self.n
        return tuple(tuple(
            _ring_dot(ring, A[i], [B[k][j] for k in range(n)]) for j in range(n))
            for i in range(n))

    def enumerate_labels(self, mus):
        """One label per double coset with invariant in ``mus``; complete,
        pairwise distinct, ordered lexicographically by (mu, P, Q).

        Central invariants reduce to level-m classes (K is normal there) and
        are only bounded by the group order; windows with spread walk the
        pair-group orbit and carry the |G(o/p^m)|^2 guard."""
        out = []
        gens = None
        for mu in sorted(set(check_antidominant(mu) for mu in mus)):
            cached = self._label_cache.get(mu)
            if cached is not None:
                out.extend(cached)
                continue
            if spread(mu) != 0 and self.group_order() ** 2 > self.budget:
                raise BudgetExceededError(
                    f"|G(o/p^m)|^2 = {self.group_order() ** 2} exceeds "
                    f"budget {self.budget}")
            if spread(mu) == 0:
                # central pi-power times G(o): K is normal there, so double
                # cosets biject with level-m classes
                idm = tuple(tuple(self.label_ring.one() if i == j else self.label_ring.zero()
                                  for j in range(self.n)) for i in range(self.n))
                orbit = [CosetLabel(mu, x, idm, self.m) for x in self.group_elements()]
            else:
                if gens is None:
                    gens = self._residue_gl_generators()
                start = self.unif_label(mu)
                seen = {self.fingerprint(start)}
                orbit = [start]
                queue = deque([start])
                while queue:
                    lab = queue.popleft()
                    for s in gens:
                        for moved in (CosetLabel(mu, self._rmat_mul(s, lab.P), lab.Q, self.m),
                                      CosetLabel(mu, lab.P, self._rmat_mul(s, lab.Q), self.m)):
                            fp = self.fingerprint(moved)
                            if fp not in seen:
                                seen.add(fp)
                                orbit.append(moved)
                                queue.append(moved)
            orbit.sort(key=lambda lab: lab.sort_key())
            self._label_cache[mu] = orbit
            out.extend(orbit)
        out.sort(key=lambda lab: lab.sort_key())
        return out

    def group_elements(self):
        """All residue matrices of GL_n(o/pi^m), BFS closure (budgeted)."""
        if self._group_elements is not None:
            return self._group_elements
        if self.group_order() > self.pair_budget:
            raise BudgetExceededError(
                f"|G(o/p^m)| = {self.group_order()} exceeds pair budget")
        gens = self._residue_gl_generators()
        ident = tuple(tuple(self.label_ring.one() if i == j else self.label_ring.zero()
                            for j in range(self.n)) for i in range(self.n))
        seen = {ident}
        queue = [ident]
        while queue:
            x = queue.pop(0)
            for s in gens:
                y = self._rmat_mul(s, x)
                if y not in seen:
                    seen.add(y)
                    queue.append(y)
        assert len(seen) == self.group_order()
        self._group_elements = sorted(seen)
        return self._group_elements

    def gamma_stabilizer(self, mu):
        """Gamma_mu as an explicit pair list (diagnostic, desk sizes only)."""
        mu = check_antidominant(mu)
        if self.group_order() ** 2 > self.pair_budget:
            raise BudgetExceededError(
                f"|H_m| = {self.group_order() ** 2} exceeds pair budget {self.pair_budget}")
        els = self.group_elements()
        base_fp = self.fingerprint(self.unif_label(mu))
        members = []
        for x in els:
            for y in els:
                cand = CosetLabel(mu, x, y, self.m)
                if self.fingerprint(cand) == base_fp:
                    members.append((x, y))
        return StabilizerSubgroup(mu, self.m, tuple(members))

    # -- Galois action ------------------------------------------------------------

    def sigma_on_group(self, g):
        """Entrywise Galois application at the matrix's working level.

        With the ramified zeta-scaling rule, sigma(pi^v u) = pi^v zeta^v
        sigma(u); the unramified Frobenius fixes the uniformizer."""
        assert self.side.is_ext
        ring = g.ring
        gen = self.side.sigma(ring.level)
        zeta = ring.embed(gen.zeta) if gen.zeta is not None else None
        rows = []
        for row in g.rows:
            new = []
            for x in row:
                if x.is_zero_marker():
                    new.append(x)
                    continue
                u = gen.apply_coords(x.unit)
                if zeta is not None and x.v % self.side.l:
                    u = ring.mul(u, ring.pow(zeta, x.v % self.side.l))
                new.append(FieldElement(ring, x.v, u, x.prec))
            rows.append(new)
        return GroupMatrix(ring, rows)

    # -- serialization --------------------------------------------------------------

    def label_to_json(self, label):
        ring = self.label_ring
        return {"mu": list(label.mu),
                "P": [[ring.coords_json(ring.lift_residue(x, self.m)) for x in row]
                      for row in label.P],
                "Q": [[ring.coords_json(ring.lift_residue(x, self.m)) for x in row]
                      for row in label.Q],
                "level": label.level}

    def label_from_json(self, d):
        ring = self.label_ring
        P = tuple(tuple(ring.residue(ring.coords_from_json(x), self.m) for x in row)
                  for row in d["P"])
        Q = tuple(tuple(ring.residue(ring.coords_from_json(x), self.m) for x in row)
                  for row in d["Q"])
        return CosetLabel(tuple(int(x) for x in d["mu"]), P, Q, int(d["level"]))


def _ring_dot(ring, row, col):
    acc = ring.zero()
    for x, y in zip(row, col):
        acc = ring.add(acc, ring.mul(x, y))
    return acc


def unit_group_generators(ring):
    """Small generating set of the unit group, greedy over sorted units."""
    units = sorted(u for u in ring.elements() if ring.is_unit(u))
    gens = []
    closure = {ring.one()}
    for u in units:
        if u in closure:
            continue
        gens.append(u)
        queue = deque(closure)
        while queue:
            a = queue.popleft()
            for g in gens:
                c = ring.mul(a, g)
                if c not in closure:
                    closure.add(c)
                    queue.append(c)
        if len(closure) == len(units):
            break
    return gens
