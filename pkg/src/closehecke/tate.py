"""Tate cohomology of order-l operators over F_{l^k}, Frobenius twists,
composition factors, module transport, and the linkage predicate.

Everything is exact linear algebra at desk dimension: vectors are coordinate
tuples, operators act on column vectors, subspaces are row-echelon bases.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

from .coeffs import CoeffField
from .errors import (
    DimBoundExceededError,
    GeneratorNameMismatchError,
    MissingActionError,
    NotOrderLError,
    SpecMismatchError,
    UndecidedError,
)

DIM_BOUND = 24


# ---------------------------------------------------------------------------
# matrices over a CoeffField: tuples of tuples of field coordinates

def mat_identity(F, d):
    return tuple(tuple(F.one() if i == j else F.zero() for j in range(d))
                 for i in range(d))


def mat_zero(F, d):
    return tuple(tuple(F.zero() for _ in range(d)) for _ in range(d))


def mat_add(F, A, B):
    return tuple(tuple(F.add(x, y) for x, y in zip(ra, rb)) for ra, rb in zip(A, B))


def mat_sub(F, A, B):
    return tuple(tuple(F.sub(x, y) for x, y in zip(ra, rb)) for ra, rb in zip(A, B))


def mat_mul(F, A, B):
    n, mid, m = len(A), len(B), len(B[0]) if B else 0
    out = []
    for i in range(n):
        row = []
        for j in range(m):
            acc = F.zero()
            for k in range(mid):
                acc = F.add(acc, F.mul(A[i][k], B[k][j]))
            row.append(acc)
        out.append(tuple(row))
    return tuple(out)


def mat_pow(F, A, e):
    out = mat_identity(F, len(A))
    base = A
    while e:
        if e & 1:
            out = mat_mul(F, out, base)
        base = mat_mul(F, base, base)
        e >>= 1
    return out


def mat_transpose(A):
    if not A:
        return A
    return tuple(tuple(A[i][j] for i in range(len(A))) for j in range(len(A[0])))


def mat_apply(F, A, v):
    return tuple(_dot(F, row, v) for row in A)


def _dot(F, row, v):
    acc = F.zero()
    for x, y in zip(row, v):
        acc = F.add(acc, F.mul(x, y))
    return acc


def rref(F, rows):
    """Reduced row echelon form; returns (nonzero rows, pivot columns)."""
    rows = [list(r) for r in rows]
    pivots = []
    r = 0
    ncols = len(rows[0]) if rows else 0
    for c in range(ncols):
        piv = None
        for i in range(r, len(rows)):
            if not F.is_zero(rows[i][c]):
                piv = i
                break
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = F.inv(rows[r][c])
        rows[r] = [F.mul(inv, x) for x in rows[r]]
        for i in range(len(rows)):
            if i != r and not F.is_zero(rows[i][c]):
                f = rows[i][c]
                rows[i] = [F.sub(x, F.mul(f, y)) for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return [tuple(row) for row in rows[:r]], pivots


def reduce_against(F, echelon, pivots, v):
    """Remainder of v modulo the row span of an echelon basis."""
    v = list(v)
    for row, c in zip(echelon, pivots):
        if not F.is_zero(v[c]):
            f = v[c]
            v = [F.sub(x, F.mul(f, y)) for x, y in zip(v, row)]
    return tuple(v)


def kernel_basis(F, A):
    """Row-echelon basis of {v : A v = 0}; A may be rectangular."""
    if not A:
        return []
    d = len(A[0])
    ech, pivots = rref(F, A)
    free = [c for c in range(d) if c not in pivots]
    basis = []
    for c in free:
        v = [F.zero()] * d
        v[c] = F.one()
        for row, pc in zip(ech, pivots):
            v[pc] = F.neg(row[c])
        basis.append(tuple(v))
    ech2, _ = rref(F, basis) if basis else ([], [])
    return ech2


def image_basis(F, A):
    """Row-echelon basis of the column space of A."""
    cols = [tuple(A[i][j] for i in range(len(A))) for j in range(len(A[0]))] if A else []
    nz = [c for c in cols if any(not F.is_zero(x) for x in c)]
    if not nz:
        return []
    ech, _ = rref(F, nz)
    return ech


def solve_in_span(F, basis_rows, v):
    """Coefficients expressing v in the given (independent) rows, or None."""
    if not basis_rows:
        return None if any(not F.is_zero(x) for x in v) else ()
    d = len(v)
    k = len(basis_rows)
    aug = [[basis_rows[j][i] for j in range(k)] + [v[i]] for i in range(d)]
    ech, pivots = rref(F, aug)
    coeffs = [F.zero()] * k
    for row, c in zip(ech, pivots):
        if c == k:
            return None  # inconsistent
        coeffs[c] = row[k]
    # verify (guards against underdetermined nonsense)
    chk = [F.zero()] * d
    for cf, b in zip(coeffs, basis_rows):
        chk = [F.add(x, F.mul(cf, y)) for x, y in zip(chk, b)]
    return tuple(coeffs) if tuple(chk) == tuple(v) else None


# ---------------------------------------------------------------------------
# modules

@dataclass(frozen=True)
class CyclicModule:
    """Finite-dimensional F_{l^k}-space with an order-l operator and an
    optional named generator action."""
    field: CoeffField
    dim: int
    T: tuple
    action: dict = dc_field(default_factory=dict)

    def to_json(self):
        F = self.field
        return {"l": F.l, "k": F.k, "dim": self.dim,
                "T": [[F.coords_json(x) for x in row] for row in self.T],
                "action": {name: [[F.coords_json(x) for x in row] for row in mat]
                           for name, mat in sorted(self.action.items())}}


def module_from_json(d):
    F = CoeffField(int(d["l"]), int(d.get("k", 1)))

    def mat(rows):
        return tuple(tuple(F.coords_from_json(x) for x in row) for row in rows)

    return CyclicModule(F, int(d["dim"]), mat(d["T"]),
                        {name: mat(rows) for name, rows in d.get("action", {}).items()})


@dataclass(frozen=True)
class TateResult:
    i: int
    dim: int
    basis: tuple

    def to_json(self, F=None):
        return {"i": self.i, "dim": self.dim,
                "basis": [[(F.coords_json(x) if F else list(x)) for x in row]
                          for row in self.basis]}


def _check_order_l(M: CyclicModule):
    F = M.field
    if mat_pow(F, M.T, F.l) != mat_identity(F, M.dim):
        raise NotOrderLError("T^l is not the identity")


def norm_operator(M: CyclicModule):
    """N = id + T + ... + T^(l-1)."""
    _check_order_l(M)
    F = M.field
    out = mat_identity(F, M.dim)
    acc = mat_identity(F, M.dim)
    for _ in range(F.l - 1):
        acc = mat_mul(F, acc, M.T)
        out = mat_add(F, out, acc)
    return out


def tate_cohomology(M: CyclicModule, i: int) -> TateResult:
    """H^0 = ker(id - T)/im(N), H^1 = ker(N)/im(id - T), with the quotient
    basis in reduced echelon form."""
    _check_order_l(M)
    F = M.field
    N = norm_operator(M)
    A = mat_sub(F, mat_identity(F, M.dim), M.T)
    if i == 0:
        ker, im = kernel_basis(F, A), image_basis(F, N)
    elif i == 1:
        ker, im = kernel_basis(F, N), image_basis(F, A)
    else:
        raise SpecMismatchError("i must be 0 or 1")
    im_ech, im_piv = rref(F, im) if im else ([], [])
    reduced = []
    for row in ker:
        rem = reduce_against(F, im_ech, im_piv, row)
        if any(not F.is_zero(x) for x in rem):
            reduced.append(rem)
    qbasis, _ = rref(F, reduced) if reduced else ([], [])
    assert len(qbasis) == len(ker) - len(im_ech)
    return TateResult(i, len(qbasis), tuple(qbasis))


def tate_quotient_module(M: CyclicModule, i: int) -> CyclicModule:
    """The Tate quotient with the induced named-generator action (generators
    must preserve the kernel and image involved)."""
    F = M.field
    res = tate_cohomology(M, i)
    N = norm_operator(M)
    A = mat_sub(F, mat_identity(F, M.dim), M.T)
    ker, im = (kernel_basis(F, A), image_basis(F, N)) if i == 0 else \
        (kernel_basis(F, N), image_basis(F, A))
    im_ech, im_piv = rref(F, im) if im else ([], [])
    ker_ech, ker_piv = rref(F, ker) if ker else ([], [])

    def induce(op, name):
        cols = []
        for q in res.basis:
            v = mat_apply(F, op, q)
            if solve_in_span(F, ker_ech, v) is None:
                raise SpecMismatchError(
                    f"generator {name} does not preserve the Tate kernel")
            rem = reduce_against(F, im_ech, im_piv, v)
            coeffs = solve_in_span(F, list(res.basis), rem)
            if coeffs is None:
                raise SpecMismatchError(
                    f"generator {name} does not descend to the Tate quotient")
            cols.append(coeffs)
        d = len(res.basis)
        return tuple(tuple(cols[j][i2] for j in range(d)) for i2 in range(d))

    action = {name: induce(op, name) for name, op in sorted(M.action.items())}
    T_ind = induce(M.T, "T") if res.dim else tuple()
    if not res.dim:
        T_ind = tuple()
    return CyclicModule(F, res.dim, T_ind, action)


def frobenius_twist(M: CyclicModule) -> CyclicModule:
    """Entrywise inverse Frobenius x -> x^(l^(k-1)) on T and the action;
    applying it k times returns the original module."""
    F = M.field

    def tw(mat):
        return tuple(tuple(F.inv_frobenius(x) for x in row) for row in mat)

    return CyclicModule(F, M.dim, tw(M.T),
                        {name: tw(op) for name, op in M.action.items()})


def transport_module(M: CyclicModule, label_map: dict) -> CyclicModule:
    """Rename the generators along an algebra-isomorphism label map."""
    if not M.action:
        raise MissingActionError("module carries no named action to transport")
    renamed = {}
    for name, op in M.action.items():
        renamed[label_map.get(name, name)] = op
    if len(renamed) != len(M.action):
        raise GeneratorNameMismatchError("label map collapses generator names")
    return CyclicModule(M.field, M.dim, M.T, renamed)


# ---------------------------------------------------------------------------
# polynomials over the coefficient field (dense little-endian lists)

def _poly_trim(F, f):
    while f and F.is_zero(f[-1]):
        f.pop()
    return f


def _poly_add(F, f, g):
    n = max(len(f), len(g))
    out = []
    for i in range(n):
        a = f[i] if i < len(f) else F.zero()
        b = g[i] if i < len(g) else F.zero()
        out.append(F.add(a, b))
    return _poly_trim(F, out)


def _poly_mul(F, f, g):
    if not f or not g:
        return []
    out = [F.zero()] * (len(f) + len(g) - 1)
    for i, a in enumerate(f):
        if F.is_zero(a):
            continue
        for j, b in enumerate(g):
            out[i + j] = F.add(out[i + j], F.mul(a, b))
    return _poly_trim(F, out)


def _poly_rem(F, f, g):
    f = list(f)
    dg = len(g) - 1
    inv_lead = F.inv(g[-1])
    while f and len(f) - 1 >= dg:
        c = F.mul(f[-1], inv_lead)
        shift = len(f) - 1 - dg
        for i in range(len(g)):
            f[shift + i] = F.sub(f[shift + i], F.mul(c, g[i]))
        _poly_trim(F, f)
    return f


def _poly_gcd(F, f, g):
    f, g = list(f), list(g)
    while g:
        f, g = g, _poly_rem(F, f, g)
    if f:
        inv_lead = F.inv(f[-1])
        f = [F.mul(inv_lead, c) for c in f]
    return f


def _poly_powmod(F, f, e, g):
    result = [F.one()]
    base = _poly_rem(F, f, g)
    while e:
        if e & 1:
            result = _poly_rem(F, _poly_mul(F, result, base), g)
        base = _poly_rem(F, _poly_mul(F, base, base), g)
        e >>= 1
    return result


def _poly_is_irreducible(F, f):
    d = len(f) - 1
    if d <= 0:
        return False
    if d == 1:
        return True
    q = F.size()
    x = [F.zero(), F.one()]
    t = _poly_powmod(F, x, q ** d, f)
    if _poly_trim(F, _poly_add(F, t, [F.zero(), F.neg(F.one())])):
        return False
    for r in sorted({r for r in range(2, d + 1) if d % r == 0 and _is_prime(r)}):
        t = _poly_powmod(F, x, q ** (d // r), f)
        g = _poly_gcd(F, f, _poly_add(F, t, [F.zero(), F.neg(F.one())]))
        if len(g) - 1 >= 1:
            return False
    return True


def _is_prime(n):
    if n < 2:
        return False
    k = 2
    while k * k <= n:
        if n % k == 0:
            return False
        k += 1
    return True


def _poly_eval_matrix(F, f, A):
    d = len(A)
    out = mat_zero(F, d)
    for c in reversed(f):
        out = mat_mul(F, out, A)
        cI = tuple(tuple(F.mul(c, x) for x in row) for row in mat_identity(F, d))
        out = mat_add(F, out, cI)
    return out


def min_poly(F, A):
    """Monic minimal polynomial of A, by the first linear dependence among
    its flattened powers."""
    d = len(A)
    powers = [mat_identity(F, d)]
    flat = [tuple(x for row in powers[0] for x in row)]
    while True:
        nxt = mat_mul(F, powers[-1], A)
        v = tuple(x for row in nxt for x in row)
        coeffs = solve_in_span(F, flat, v)
        if coeffs is not None:
            return _poly_trim(F, [F.neg(c) for c in coeffs] + [F.one()])
        powers.append(nxt)
        flat.append(v)


# ---------------------------------------------------------------------------
# composition factors (deterministic spin-up splitter)

def spin(F, mats, v):
    """Row-echelon basis of the smallest invariant subspace containing v."""
    basis, pivots = rref(F, [v])
    queue = list(basis)
    while queue:
        w = queue.pop(0)
        for A in mats:
            u = mat_apply(F, A, w)
            rem = reduce_against(F, basis, pivots, u)
            if any(not F.is_zero(x) for x in rem):
                stacked = list(basis) + [rem]
                basis, pivots = rref(F, stacked)
                queue.append(rem)
    return basis


def _theta_candidates(F, mats, d, seed):
    """Deterministic stream of algebra elements used by the splitter."""
    import random
    rng = random.Random(seed)
    scalars = list(F.elements()) if F.k > 1 else [F.from_int(c) for c in range(F.l)]
    ident = mat_identity(F, d)
    for A in mats:
        yield A
        for c in scalars:
            if F.is_zero(c):
                continue
            cI = tuple(tuple(F.mul(c, x) for x in row) for row in ident)
            yield mat_sub(F, A, cI)
    for A in mats:
        for B in mats:
            yield mat_mul(F, A, B)
            yield mat_add(F, A, B)
    for _ in range(40):
        acc = mat_zero(F, d)
        for A in mats:
            c = F.from_int(rng.randrange(F.l))
            acc = mat_add(F, acc, tuple(tuple(F.mul(c, x) for x in row) for row in A))
        if mats:
            yield acc


def _probe_singular(F, d, mats, theta):
    """Try to split using the kernel of a singular algebra element; returns
    a proper submodule, True for a simplicity certificate (Parker nullity
    one), or None when inconclusive."""
    ker = kernel_basis(F, theta)
    if not (0 < len(ker) < d):
        return None
    for v in ker:
        W = spin(F, mats, v)
        if len(W) < d:
            return W
    if len(ker) == 1:
        kert = kernel_basis(F, mat_transpose(theta))
        matst = [mat_transpose(A) for A in mats]
        Wt = spin(F, matst, kert[0])
        if len(Wt) < d:
            ann = kernel_basis(F, tuple(Wt))
            assert 0 < len(ann) < d
            return ann
        return True
    return None


def find_proper_submodule(F, d, mats, seed=0):
    """A proper nonzero invariant subspace (echelon rows), or None when the
    module is certified simple.

    Certificates: a generated-algebra element with irreducible minimal
    polynomial of full degree, or Parker's nullity-one criterion.  Kernels of
    the distinct-degree parts of minimal polynomials supply the singular
    elements.  Raises UndecidedError when the candidate budget is exhausted.
    """
    if d == 1:
        return None
    if not mats:
        v = [F.zero()] * d
        v[0] = F.one()
        return [tuple(v)]
    # cheap first pass: a standard basis vector may already generate a
    # proper submodule (always the case when the action is by scalars)
    for idx in range(d):
        v = [F.zero()] * d
        v[idx] = F.one()
        W = spin(F, mats, tuple(v))
        if len(W) < d:
            return W
    q = F.size()
    x = [F.zero(), F.one()]
    for theta in _theta_candidates(F, mats, d, seed):
        res = _probe_singular(F, d, mats, theta)
        if res is True:
            return None
        if res is not None:
            return res
        m = min_poly(F, theta)
        deg = len(m) - 1
        if deg == d and _poly_is_irreducible(F, m):
            # the algebra contains a field of degree d: invariant subspaces
            # are vector spaces over it, so only 0 and the whole space
            return None
        for i in range(1, deg + 1):
            t = _poly_powmod(F, x, q ** i, m)
            g = _poly_gcd(F, m, _poly_add(F, t, [F.zero(), F.neg(F.one())]))
            if len(g) - 1 < 1:
                continue
            res = _probe_singular(F, d, mats, _poly_eval_matrix(F, g, theta))
            if res is True:
                return None
            if res is not None:
                return res
    raise UndecidedError("no splitting element found within the candidate budget")


def _restrict_to(F, mats_named, basis):
    """Generator matrices restricted to an invariant subspace basis."""
    out = {}
    for name, A in mats_named.items():
        cols = []
        for b in basis:
            v = mat_apply(F, A, b)
            coeffs = solve_in_span(F, list(basis), v)
            assert coeffs is not None, "subspace is not invariant"
            cols.append(coeffs)
        k = len(basis)
        out[name] = tuple(tuple(cols[j][i] for j in range(k)) for i in range(k))
    return out


def _quotient_by(F, mats_named, basis, d):
    """Generator matrices induced on the quotient by an invariant subspace."""
    ech, pivots = rref(F, basis) if basis else ([], [])
    comp = [c for c in range(d) if c not in pivots]
    qvecs = []
    for c in comp:
        v = [F.zero()] * d
        v[c] = F.one()
        qvecs.append(tuple(reduce_against(F, ech, pivots, tuple(v))))
    out = {}
    for name, A in mats_named.items():
        cols = []
        for q in qvecs:
            v = reduce_against(F, ech, pivots, mat_apply(F, A, q))
            coeffs = solve_in_span(F, qvecs, v)
            assert coeffs is not None
            cols.append(coeffs)
        k = len(qvecs)
        out[name] = tuple(tuple(cols[j][i] for j in range(k)) for i in range(k))
    return out


def composition_factors(M: CyclicModule, bound=DIM_BOUND, seed=0):
    """Jordan-Holder factors of the named-generator module, as simple
    CyclicModules (T is the identity on each factor)."""
    if not M.action:
        raise MissingActionError("composition factors need a named action")
    if M.dim > bound:
        raise DimBoundExceededError(f"dim {M.dim} exceeds bound {bound}")
    F = M.field
    factors = []
    stack = [(M.dim, M.action)]
    while stack:
        d, mats_named = stack.pop()
        if d == 0:
            continue
        mats = [mats_named[name] for name in sorted(mats_named)]
        W = find_proper_submodule(F, d, mats, seed)
        if W is None:
            factors.append(CyclicModule(F, d, mat_identity(F, d), dict(mats_named)))
            continue
        stack.append((len(W), _restrict_to(F, mats_named, W)))
        stack.append((d - len(W), _quotient_by(F, mats_named, W, d)))
    factors.sort(key=lambda fac: (fac.dim, sorted(fac.action.items())))
    return factors


# ---------------------------------------------------------------------------
# module isomorphism and linkage

def modules_isomorphic(A: CyclicModule, B: CyclicModule) -> bool:
    """Simultaneous-conjugacy test over the shared generator names.  For the
    simple modules produced by the splitter any nonzero intertwiner is
    invertible, so the test is exact."""
    if A.dim != B.dim:
        return False
    if set(A.action) != set(B.action):
        raise GeneratorNameMismatchError("modules act through different generator names")
    F = A.field
    d = A.dim
    if d == 0:
        return True
    rows = []
    for name in sorted(A.action):
        Am, Bm = A.action[name], B.action[name]
        # X A = B X, linear in X: row for each (i, j)
        for i in range(d):
            for j in range(d):
                row = [F.zero()] * (d * d)
                for k in range(d):
                    row[i * d + k] = F.add(row[i * d + k], Am[k][j])
                    row[k * d + j] = F.sub(row[k * d + j], Bm[i][k])
                rows.append(tuple(row))
    if not rows:
        return True
    sols = kernel_basis(F, tuple(rows))
    for v in sols:
        X = tuple(tuple(v[i * d + j] for j in range(d)) for i in range(d))
        ech, _ = rref(F, X)
        if len(ech) == d:
            return True
    if sols:
        raise UndecidedError("nonzero intertwiners exist but none certified invertible")
    return False


def linkage_check(Xi: CyclicModule, rho: CyclicModule, br_map: dict,
                  bound=DIM_BOUND, seed=0):
    """Is the Frobenius twist of rho a Jordan-Holder constituent of a Tate
    cohomology group of Xi, over the shared sigma-invariant generator names?

    Returns {0: bool, 1: bool}."""
    if Xi.dim > bound or rho.dim > bound:
        raise DimBoundExceededError("module dimension exceeds bound")
    if not Xi.action or not rho.action:
        raise MissingActionError("both modules need named actions")
    if set(br_map) != set(Xi.action):
        raise GeneratorNameMismatchError("br map keys must match Xi's generators")
    for name, img in br_map.items():
        if img not in rho.action:
            raise GeneratorNameMismatchError(f"rho has no action for {img!r}")
    twisted = frobenius_twist(rho)
    target = CyclicModule(rho.field, rho.dim, mat_identity(rho.field, rho.dim),
                          {name: twisted.action[br_map[name]] for name in br_map})
    out = {}
    for i in (0, 1):
        quot = tate_quotient_module(Xi, i)
        if quot.dim == 0:
            out[i] = False
            continue
        linked = False
        for fac in composition_factors(quot, bound=bound, seed=seed):
            if fac.dim == target.dim and modules_isomorphic(fac, target):
                linked = True
                break
        out[i] = linked
    return out
