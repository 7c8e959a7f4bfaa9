"""Massey products and Lie-Massey products from defining systems.

Conventions: bar(a) = (-1)^{|a|+1} a, and a defining system for
<x_1, ..., x_n> is a family a_{i,j} (0 <= i < j <= n, (i,j) != (0,n)) with
a_{i-1,i} representing x_i and d(a_{i,j}) = sum_{i<k<j} bar(a_{i,k}) a_{k,j}.
The product is the set of classes of sum_{0<k<n} bar(a_{0,k}) a_{k,n}.
The binary product is the singleton {(-1)^{|x_1|+1} x_1 x_2}.

In the Lie case chains u_S are indexed by proper subsets and
d(u_S) = sum (-1)^{e_{V,W}} [u_V, u_W] over partitions S = V u W with
min(S) in V, where e_{V,W} is sum_{v in V}(|a_v|+1) plus the Koszul sign of
unshuffling the suspended letters of S into V then W.

The solver is staged greedily gap by gap, returning the first unsolvable
equation when no defining system extends the current choices; indeterminacy
is the span obtained by varying the last-solved chains by cycles.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

from .linalg import (GradedSpace, SparseMap, Complex, Q, Vector, vec_add,
                     vec_addmul, vec_scale, vec_eq, solve_in_span,
                     row_space_basis)
from .structures import InfinityStructure, LIE


def _bar(space: GradedSpace, v: Vector) -> Vector:
    """bar(a) = (-1)^{|a|+1} a on homogeneous pieces."""
    out = {}
    for k, c in v.items():
        out[k] = -c if space.degree(k) % 2 == 0 else c
    return out


def _m2(s: InfinityStructure, u: Vector, v: Vector) -> Vector:
    tab = s.ops.get(2, {})
    out: Vector = {}
    for a, ca in u.items():
        for b, cb in v.items():
            val = tab.get((a, b))
            if val:
                out = vec_addmul(out, ca * cb, val)
    return out


def _solve_boundary(s: InfinityStructure, rhs: Vector):
    """A chain xi with d(xi) = rhs, or None."""
    if not rhs:
        return {}
    deg = s.space.vector_degree(rhs)
    sources = [e.name for e in s.space.slice(deg + 1)]
    cols = [s.d.column(x) for x in sources]
    keys = [e.name for e in s.space.slice(deg)]
    sol = solve_in_span(cols, rhs, keys)
    if sol is None:
        return None
    return {x: c for x, c in zip(sources, sol) if c}


def _homology_reduce(s: InfinityStructure, v: Vector):
    """Class data of a cycle: reduced coordinates against boundaries."""
    cx = Complex(s.space, s.d, check=False)
    deg = s.space.vector_degree(v)
    if deg is None:
        return {}
    keys = [e.name for e in s.space.slice(deg)]
    bnd = cx.boundaries(deg)
    rows = bnd + [v]
    basis, _ = row_space_basis(rows, keys)
    bnd_basis, _ = row_space_basis(bnd, keys)
    if len(basis) == len(bnd_basis):
        return {}
    return v


class MasseyResult:
    def __init__(self, defined: bool, representative=None, indeterminacy=None,
                 failure: str = "", sign_exponent: int | None = None):
        self.defined = defined
        self.representative = representative
        self.indeterminacy = indeterminacy or []
        self.failure = failure
        self.sign_exponent = sign_exponent

    def contains(self, s: InfinityStructure, v: Vector) -> bool:
        """Is the class of v in the set (representative + indeterminacy span,
        modulo boundaries)?"""
        if not self.defined:
            return False
        diff = vec_add(v, vec_scale(-1, self.representative))
        if not diff:
            return True
        deg = s.space.vector_degree(diff)
        cx = Complex(s.space, s.d, check=False)
        keys = [e.name for e in s.space.slice(deg)]
        span = cx.boundaries(deg) + [w for w in self.indeterminacy if w]
        return solve_in_span(span, diff, keys) is not None

    def contains_zero(self, s: InfinityStructure) -> bool:
        return self.contains(s, {})

    def __repr__(self):
        if not self.defined:
            return f"MasseyResult(undefined: {self.failure})"
        return (f"MasseyResult(rep {self.representative}, "
                f"indeterminacy dim {len(self.indeterminacy)})")


def massey_product(s: InfinityStructure, classes: list[Vector]) -> MasseyResult:
    """n-fold Massey product of cycles in a strict dg algebra.

    Each class is given by a representing cycle.  Degrees of the inputs must
    be homogeneous; the binary case needs no defining system.
    """
    n = len(classes)
    if n < 2:
        raise ValueError("need at least two classes")
    if any(k >= 3 for k in s.ops):
        raise ValueError("massey_product expects a strict dg algebra")
    sp = s.space
    for v in classes:
        if s.d.apply(v):
            raise ValueError("inputs must be cycles")
    if n == 2:
        x1, x2 = classes
        sign = -1 if (sp.vector_degree(x1) + 1) % 2 else 1
        rep = vec_scale(sign, _m2(s, x1, x2))
        return MasseyResult(True, rep, [], sign_exponent=0)

    a: dict[tuple, Vector] = {}
    for i, v in enumerate(classes):
        a[(i, i + 1)] = dict(v)

    def rhs_for(i, j):
        out: Vector = {}
        for k in range(i + 1, j):
            out = vec_add(out, _m2(s, _bar(sp, a[(i, k)]), a[(k, j)]))
        return out

    for gap in range(2, n):
        for i in range(0, n - gap + 1):
            j = i + gap
            if (i, j) == (0, n):
                continue
            rhs = rhs_for(i, j)
            xi = _solve_boundary(s, rhs)
            if xi is None:
                return MasseyResult(
                    False,
                    failure=f"sub-product <x_{i+1},...,x_{j}> does not vanish: "
                            f"d a_({i},{j}) = {rhs} is not exact")
            a[(i, j)] = xi

    value = rhs_for(0, n)
    if s.d.apply(value):
        raise AssertionError("internal error: Massey value is not a cycle")

    # indeterminacy: vary a_(0,n-1) and a_(1,n) by cycles
    indet: list[Vector] = []
    cx = Complex(sp, s.d, check=False)
    for (pos, mult) in (((0, n - 1), "left"), ((1, n), "right")):
        chain = a.get(pos)
        deg = sp.vector_degree(chain) if chain else None
        if deg is None:
            deg = sp.vector_degree(rhs_for(*pos))
            deg = None if deg is None else deg + 1
        if deg is None:
            continue
        for z in cx.cycles(deg):
            if mult == "left":
                w = _m2(s, _bar(sp, z), a[(n - 1, n)])
            else:
                w = _m2(s, _bar(sp, a[(0, 1)]), z)
            if w:
                indet.append(w)
    return MasseyResult(True, value, indet, sign_exponent=None)


# --- Lie-Massey --------------------------------------------------------------

def _l2(s: InfinityStructure, u: Vector, v: Vector) -> Vector:
    tab = s.ops.get(2, {})
    out: Vector = {}
    for x, cx in u.items():
        for y, cy in v.items():
            val = tab.get((x, y))
            if val:
                out = vec_addmul(out, cx * cy, val)
    return out


def _partition_sign(s: InfinityStructure, classes, S: tuple, V: tuple, W: tuple) -> int:
    """(-1)^{e_{V,W}}: suspended-degree Koszul sign of S -> (V, W) plus
    sum over V of (|a_v| + 1)."""
    sdeg = {i: s.space.vector_degree(classes[i - 1]) + 1 for i in S}
    order = list(V) + list(W)
    exp = sum(sdeg[v] + 0 for v in V)  # note |a_v|+1 = suspended degree
    # Koszul sign of permuting (s a)_{i in S} into order
    seq = list(S)
    for target_pos, elt in enumerate(order):
        cur = seq.index(elt)
        for k in range(cur, target_pos, -1):
            if sdeg[seq[k]] % 2 and sdeg[seq[k - 1]] % 2:
                exp += 1
            seq[k], seq[k - 1] = seq[k - 1], seq[k]
    return -1 if exp % 2 else 1


def lie_massey_product(s: InfinityStructure, classes: list[Vector]) -> MasseyResult:
    """n-fold Lie-Massey product of cycles in a strict dg Lie algebra."""
    n = len(classes)
    if n < 2:
        raise ValueError("need at least two classes")
    if s.flavor != LIE or any(k >= 3 for k in s.ops):
        raise ValueError("lie_massey_product expects a strict dg Lie algebra")
    sp = s.space
    for v in classes:
        if s.d.apply(v):
            raise ValueError("inputs must be cycles")
    if n == 2:
        sign = -1 if (sp.vector_degree(classes[0]) + 1) % 2 else 1
        rep = vec_scale(sign, _l2(s, classes[0], classes[1]))
        return MasseyResult(True, rep, [], sign_exponent=0)

    full = tuple(range(1, n + 1))
    u: dict[tuple, Vector] = {}
    for i, v in enumerate(classes, start=1):
        u[(i,)] = dict(v)

    def rhs_for(S: tuple):
        out: Vector = {}
        m = min(S)
        for r in range(1, len(S)):
            for Vset in itertools.combinations(S, r):
                if m not in Vset:
                    continue
                Wset = tuple(x for x in S if x not in Vset)
                if (Vset not in u) or (Wset not in u):
                    return None
                sign = _partition_sign(s, classes, S, Vset, Wset)
                out = vec_addmul(out, sign, _l2(s, u[Vset], u[Wset]))
        return out

    for size in range(2, n):
        for S in itertools.combinations(full, size):
            rhs = rhs_for(S)
            if rhs is None:
                return MasseyResult(False, failure=f"missing chains below {S}")
            xi = _solve_boundary(s, rhs)
            if xi is None:
                return MasseyResult(
                    False, failure=f"sub-bracket for subset {S} does not "
                                   f"vanish: {rhs} is not exact")
            u[S] = xi

    value: Vector = {}
    for r in range(1, n):
        for Vset in itertools.combinations(full, r):
            if 1 not in Vset:
                continue
            Wset = tuple(x for x in full if x not in Vset)
            sign = _partition_sign(s, classes, full, Vset, Wset)
            value = vec_addmul(value, sign, _l2(s, u[Vset], u[Wset]))
    if s.d.apply(value):
        raise AssertionError("internal error: Lie-Massey value is not a cycle")

    indet: list[Vector] = []
    cx = Complex(sp, s.d, check=False)
    for S in [tuple(x for x in full if x != full[-1]),
              tuple(x for x in full if x != full[0])]:
        chain = u.get(S)
        if not chain:
            continue
        deg = sp.vector_degree(chain)
        comp = tuple(x for x in full if x not in S)
        for z in cx.cycles(deg):
            if 1 in S:
                sign = _partition_sign(s, classes, full, S, comp)
                w = vec_scale(sign, _l2(s, z, u[comp]))
            else:
                sign = _partition_sign(s, classes, full, comp, S)
                w = vec_scale(sign, _l2(s, u[comp], z))
            if w:
                indet.append(w)
    return MasseyResult(True, value, indet, sign_exponent=None)


# --- comparison with transferred operations ----------------------------------

class CompareReport:
    def __init__(self):
        self.ok = False
        self.defined = False
        self.sign_exponent = 0
        self.caveat = ""
        self.details = ""

    def __repr__(self):
        return (f"CompareReport(ok={self.ok}, defined={self.defined}, "
                f"e={self.sign_exponent}{', ' + self.caveat if self.caveat else ''})")


def compare_products(strict: InfinityStructure, classes: list[Vector],
                     minimal=None) -> CompareReport:
    """Check (-1)^e m_n(x_1,...,x_n) lies in the Massey product <x_1,...,x_n>.

    ``strict`` is the chain-level dg algebra (or dg Lie algebra); the minimal
    structure is its deterministic minimal model unless supplied.  Classes
    are cycles in the strict structure.  The hypothesis for straight
    membership is m_k = 0 for k <= n-2 on the minimal side; when it fails the
    comparison only holds modulo lower images and the report says so.
    """
    from .transfer import minimal_model
    from .linalg import build_contraction
    rep = CompareReport()
    n = len(classes)
    res = minimal_model(strict) if minimal is None else minimal
    s_min = res.structure
    f1 = res.f_inf.linear_part()

    if s_min.d.cols:
        rep.caveat = "minimal side has nonzero differential"
    lows = [k for k in s_min.ops if 2 <= k <= n - 2 and s_min.ops[k]]
    if lows:
        rep.caveat = (f"m_k nonzero for k in {sorted(lows)} <= n-2: comparison "
                      f"only valid modulo sum of lower images")

    if strict.flavor == LIE:
        massey = lie_massey_product(strict, classes)
    else:
        massey = massey_product(strict, classes)
    rep.defined = massey.defined
    if not massey.defined:
        rep.details = massey.failure
        return rep

    degs = [strict.space.vector_degree(v) for v in classes]
    e = sum((n - i) * degs[i - 1] for i in range(1, n + 1))
    rep.sign_exponent = e % 2
    hclasses = [f1.apply(v) for v in classes]
    val: Vector = {}
    tab = s_min.ops.get(n, {})
    idx = [list(h.items()) for h in hclasses]
    for combo in itertools.product(*idx):
        word = tuple(k for k, _ in combo)
        coeff = Q(1)
        for _, c in combo:
            coeff *= c
        v = tab.get(word)
        if v:
            val = vec_addmul(val, coeff, v)
    sign = -1 if e % 2 else 1
    val = vec_scale(sign, val)
    # carry the minimal-side value back to chains along g
    g1 = res.g_inf.linear_part()
    chain_val = g1.apply(val)
    rep.ok = massey.contains(strict, chain_val)
    rep.details = (f"massey rep {massey.representative}; "
                   f"(-1)^e m_{n} value (chain level) {chain_val}")
    return rep
