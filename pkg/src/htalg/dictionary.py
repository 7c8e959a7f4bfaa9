"""Sullivan and Quillen models and their dictionaries with L/C-infinity.

Sullivan generators live in positive cohomological degree; internally all
degrees are homological, so a degree-k generator is stored with degree -k.
The translation between a Sullivan differential and an L-infinity structure
is the factorial-corrected transpose: a sorted wedge monomial xi in the
Chevalley-Eilenberg coalgebra corresponds to the polynomial monomial divided
by the product of multiplicity factorials.  With this normalization
(Lambda(x,y), dy = x^{n+1}) translates to l_{n+1}(a,...,a) = (n+1)! b exactly.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

from .linalg import (GradedSpace, BasisElement, SparseMap, Q, Vector,
                     vec_add, vec_addmul, vec_scale, vec_eq, Complex)
from .words import (lie_basis, LieWord, lie_bracket_vectors, sort_wedge,
                    wedge_monomials, wedge_norm, tensor_words, ShuffleQuotient)
from .structures import (InfinityStructure, LIE, COMM, ASSOC, suspend_space,
                         suspend_op, unsuspend_op, wedges_in_degree_range,
                         words_in_degree_range)

# --- free graded-commutative polynomial algebra ----------------------------

Mono = tuple  # sorted tuple of generator names, odd generators squarefree


def mono_degree(space: GradedSpace, m: Mono) -> int:
    return sum(space.degree(x) for x in m)


def mono_weight(space: GradedSpace, m: Mono) -> int:
    return sum((space.weight(x) or 1) for x in m)


def mono_mul(space: GradedSpace, a: Mono, b: Mono):
    """Product of sorted monomials: (monomial, koszul sign) or None."""
    srt = sort_wedge(a + b, space)
    if srt is None:
        return None
    w, sign = srt
    for x, y in zip(w, w[1:]):
        if x == y and space.degree(x) % 2:
            return None
    return w, sign


def poly_mul(space: GradedSpace, p: Vector, q: Vector) -> Vector:
    out: Vector = {}
    for a, ca in p.items():
        for b, cb in q.items():
            r = mono_mul(space, a, b)
            if r is None:
                continue
            w, sign = r
            out = vec_addmul(out, sign * ca * cb, {w: Q(1)})
    return out


def poly_degree(space: GradedSpace, p: Vector) -> int | None:
    degs = {mono_degree(space, m) for m in p}
    if not degs:
        return None
    if len(degs) > 1:
        raise ValueError("inhomogeneous polynomial")
    return degs.pop()


def derivation_apply(space: GradedSpace, values: dict, op_degree: int, p: Vector) -> Vector:
    """Extend generator values to a graded derivation of the free algebra.

    ``values[g]`` is a polynomial; crossing a prefix letter of odd degree
    flips the sign when the derivation has odd degree.
    """
    out: Vector = {}
    odd_op = op_degree % 2
    for m, c in p.items():
        for i, g in enumerate(m):
            val = values.get(g)
            if not val:
                continue
            prefix_deg = sum(space.degree(x) for x in m[:i])
            sign = -1 if (odd_op and prefix_deg % 2) else 1
            rest = m[:i] + m[i + 1:]
            for vm, vc in val.items():
                r = mono_mul(space, vm, rest)
                if r is None:
                    continue
                w, s2 = r
                out = vec_addmul(out, sign * s2 * c * vc, {w: Q(1)})
    return out


def monomials_up_to(space: GradedSpace, min_degree: int, max_weight: int | None = None,
                    include_unit: bool = False):
    """All monomials with homological degree >= min_degree (degrees negative).

    Generators sit in negative homological degree, so the enumeration is
    finite.  Optionally bounded by word length.
    """
    names = space.names()
    out = [()] if include_unit else []

    def rec(start, mono, deg):
        for i in range(start, len(names)):
            g = names[i]
            dg = space.degree(g)
            if dg >= 0:
                raise ValueError("monomials_up_to expects negative degrees")
            if deg + dg < min_degree:
                continue
            if space.degree(g) % 2 and mono and mono[-1] == g:
                continue
            if max_weight is not None and len(mono) + 1 > max_weight:
                continue
            m2 = mono + (g,)
            out.append(m2)
            rec(i, m2, deg + dg)

    rec(0, (), 0)
    return sorted(out, key=lambda m: (-mono_degree(space, m), m))


class SullivanModel:
    """(Lambda V, d): free cdga on positive-cohomological-degree generators.

    ``generators`` uses homological (negative) degrees; ``d`` maps generator
    names to polynomials (dicts monomial -> coefficient) of homological
    degree deg(v) - 1.  The nilpotence filtration is certified by a
    topological order of the generator dependency graph.
    """

    def __init__(self, generators: GradedSpace, d: dict, name: str = "",
                 check: bool = True):
        self.generators = generators
        self.d = {g: dict(v) for g, v in d.items() if v}
        self.name = name
        if check:
            self.check()

    def check(self):
        for g, p in self.d.items():
            for m in p:
                dm = mono_degree(self.generators, m)
                if dm != self.generators.degree(g) - 1:
                    raise ValueError(f"d({g}) term {m} has degree {dm}, "
                                     f"want {self.generators.degree(g) - 1}")
        self.filtration_order()  # nilpotence
        for g in self.generators.names():
            v = derivation_apply(self.generators, self.d, -1,
                                 self.d.get(g, {}))
            if v:
                raise ValueError(f"d^2 != 0 on {g}: {v}")

    def filtration_order(self) -> list:
        """Generators in an order exhibiting d(F_p) in Lambda(F_{p-1})."""
        deps = {g: {x for m in self.d.get(g, {}) for x in m}
                for g in self.generators.names()}
        order, placed = [], set()
        pending = list(self.generators.names())
        while pending:
            progress = [g for g in pending if deps[g] <= placed]
            if not progress:
                raise ValueError(
                    f"differential not nilpotent; cycle among {sorted(pending)}")
            for g in progress:
                order.append(g)
                placed.add(g)
            pending = [g for g in pending if g not in placed]
        return order

    def is_minimal(self) -> bool:
        return all(len(m) >= 2 for p in self.d.values() for m in p)

    def d_poly(self, p: Vector) -> Vector:
        return derivation_apply(self.generators, self.d, -1, p)

    def as_structure(self, min_degree: int, flavor: str = COMM,
                     max_weight: int | None = None) -> InfinityStructure:
        """Truncated reduced cdga (monomials of degree >= min_degree) as a
        strict structure.  Products escaping the window are dropped, which is
        only sound when callers keep within half the window; transfer and
        homology routines use windows generously for this reason."""
        monos = monomials_up_to(self.generators, min_degree, max_weight)
        space = GradedSpace()
        for m in monos:
            space.add(BasisElement(m, mono_degree(self.generators, m),
                                   _mono_weight_or_none(self.generators, m)))
        d = SparseMap(space, space, -1)
        for m in monos:
            img = self.d_poly({m: Q(1)})
            for t, c in img.items():
                if t in space:
                    d.add_entry(t, m, c)
        prod = {}
        for a, b in itertools.product(monos, repeat=2):
            r = mono_mul(self.generators, a, b)
            if r is None:
                continue
            w, sign = r
            if w in space:
                prod.setdefault((a, b), {})[w] = Q(sign)
        return InfinityStructure(flavor, space, d, {2: prod}, name=self.name)

    def __repr__(self):
        gens = ", ".join(f"{g}^{-self.generators.degree(g)}"
                         for g in self.generators.names())
        return f"SullivanModel(Lambda({gens}))"


def _mono_weight_or_none(space, m):
    if all(space.weight(x) is not None for x in m):
        return sum(space.weight(x) for x in m)
    return None


class QuillenModel:
    """(L V, delta): free graded Lie algebra on positive-degree generators.

    ``delta`` maps generator names to tensor-algebra expansions of Lie
    elements (as produced by LieWord.expand or lie_bracket_vectors).
    """

    def __init__(self, generators: GradedSpace, delta: dict, name: str = "",
                 check: bool = True):
        self.generators = generators
        self.delta = {g: dict(v) for g, v in delta.items() if v}
        self.name = name
        if check:
            self.check()

    def _delta_word(self, word) -> Vector:
        """Derivation extension of delta to a tensor word."""
        out: Vector = {}
        for i, g in enumerate(word):
            val = self.delta.get(g)
            if not val:
                continue
            prefix_deg = sum(self.generators.degree(x) for x in word[:i])
            sign = -1 if prefix_deg % 2 else 1
            for vm, vc in val.items():
                out = vec_addmul(out, sign * vc,
                                 {word[:i] + vm + word[i + 1:]: Q(1)})
        return out

    def delta_vector(self, v: Vector) -> Vector:
        out: Vector = {}
        for w, c in v.items():
            out = vec_addmul(out, c, self._delta_word(w))
        return out

    def check(self):
        if any(self.generators.degree(x) <= 0 for x in self.generators.names()):
            raise ValueError("Quillen generators must be positively graded")
        for g, p in self.delta.items():
            degs = {sum(self.generators.degree(x) for x in w) for w in p}
            if degs and degs != {self.generators.degree(g) - 1}:
                raise ValueError(f"delta({g}) not of degree -1")
            if self.delta_vector(p):
                raise ValueError(f"delta^2 != 0 on {g}")

    def is_minimal(self) -> bool:
        return all(len(w) >= 2 for p in self.delta.values() for w in p)

    def __repr__(self):
        gens = ", ".join(f"{g}_{self.generators.degree(g)}"
                         for g in self.generators.names())
        return f"QuillenModel(L({gens}))"


# --- L-infinity <-> Sullivan ------------------------------------------------

def _check_simply_connected_sullivan(m: SullivanModel):
    for g in m.generators.names():
        if m.generators.degree(g) > -2:
            raise ValueError(
                "dictionary requires generators in cohomological degree >= 2 "
                f"(got {g} in degree {-m.generators.degree(g)})")


def linfty_from_sullivan(m: SullivanModel, dual_name=None) -> InfinityStructure:
    """Finite-type nilpotent Sullivan algebra to its L-infinity structure.

    Quadratic differential gives a strict dg Lie algebra; d = 0 gives an
    abelian structure.
    """
    _check_simply_connected_sullivan(m)
    dual_name = dual_name or (lambda g: g)
    gens = m.generators
    L = GradedSpace()
    for e in gens:
        L.add(BasisElement(dual_name(e.name), -e.degree - 1, e.weight))
    sL = suspend_space(L)
    name_of = {dual_name(g): g for g in gens.names()}

    # group d-terms by monomial length
    by_arity: dict[int, dict] = {}
    for g, p in m.d.items():
        for mono, c in p.items():
            by_arity.setdefault(len(mono), {}).setdefault(g, {})[mono] = c

    d_L = SparseMap(L, L, -1)
    ops: dict[int, dict] = {}
    for n, table in sorted(by_arity.items()):
        b_tab: dict = {}
        for g, polys in table.items():
            for mono, c in polys.items():
                xi = tuple(dual_name(x) for x in mono)  # sorted consistently
                coeff = c * wedge_norm(mono)
                tgt = dual_name(g)
                b_tab.setdefault(xi, {})
                b_tab[xi][tgt] = b_tab[xi].get(tgt, Q(0)) + coeff
        # symmetric lift to tensor words, then unsuspend
        full = {}
        for xi, val in b_tab.items():
            degs = [sL.degree(x) for x in xi]
            for perm_word in set(itertools.permutations(xi)):
                srt = sort_wedge(perm_word, sL)
                if srt is None:
                    continue
                w, sign = srt
                if w != xi:
                    continue
                full[perm_word] = vec_scale(sign, val)
        un = unsuspend_op(L, n, full)
        if n == 1:
            for (x,), val in un.items():
                for t, c in val.items():
                    d_L.add_entry(t, x, c)
        else:
            ops[n] = un
    return InfinityStructure(LIE, L, d_L, ops, name=m.name)


def sullivan_from_linfty(s: InfinityStructure, dual_name=None) -> SullivanModel:
    """Inverse dictionary: factorial-corrected transpose of the coderivation."""
    if s.flavor != LIE:
        raise ValueError("sullivan_from_linfty expects a lie-flavor structure")
    dual_name = dual_name or (lambda g: g)
    L = s.space
    for e in L:
        if e.degree < 1:
            raise ValueError("structure must be positively graded "
                             f"(found degree {e.degree})")
    V = GradedSpace()
    for e in L:
        V.add(BasisElement(dual_name(e.name), -(e.degree + 1), e.weight))
    d: dict = {}
    for n in range(1, max(s.max_op_arity(), 1) + 1):
        tab = s.b_table(n)
        for word, val in tab.items():
            srt = sort_wedge(word, s.sspace)
            if srt is None or srt[0] != word:
                continue  # enumerate sorted representatives once
            mono = tuple(dual_name(x) for x in word)
            norm = wedge_norm(word)
            for t, c in val.items():
                g = dual_name(t)
                d.setdefault(g, {})
                d[g][mono] = d[g].get(mono, Q(0)) + c / norm
    d = {g: {m: c for m, c in p.items() if c} for g, p in d.items()}
    d = {g: p for g, p in d.items() if p}
    return SullivanModel(V, d, name=s.name)


# --- C-infinity <-> Quillen ---------------------------------------------------

def word_pairing_sign(degrees_f, degrees_x) -> int:
    """Koszul sign of evaluating f_1 x ... x f_n on x_1 x ... x x_n."""
    exp = 0
    for i in range(len(degrees_f)):
        for j in range(i + 1, len(degrees_f)):
            exp += degrees_f[j] * degrees_x[i]
    return -1 if exp % 2 else 1


def pair_words(W: GradedSpace, sA: GradedSpace, fword, xword, dual: dict) -> int:
    """<w_1...w_n, sa_1...sa_n> with dual[w] the matching sA name."""
    if len(fword) != len(xword):
        return 0
    for w, x in zip(fword, xword):
        if dual[w] != x:
            return 0
    return word_pairing_sign([W.degree(w) for w in fword],
                             [sA.degree(x) for x in xword])


def pair_vector_word(W, sA, fvec: Vector, xword, dual) -> Q:
    out = Q(0)
    for fw, c in fvec.items():
        out += c * pair_words(W, sA, fw, xword, dual)
    return out


def cinfty_from_quillen(q: QuillenModel, dual_name=None) -> InfinityStructure:
    """Minimal-or-not Quillen model to the C-infinity structure on its duals.

    Components of delta of bracket length n transpose to m_n; the shuffle
    constraint holds because delta lands in the free Lie algebra.
    """
    dual_name = dual_name or (lambda g: g)
    W = q.generators
    A = GradedSpace()
    for e in W:
        A.add(BasisElement(dual_name(e.name), -(e.degree + 1), e.weight))
    sA = suspend_space(A)
    dual = {w: dual_name(w) for w in W.names()}

    by_arity: dict[int, dict] = {}
    for g, p in q.delta.items():
        for word, c in p.items():
            by_arity.setdefault(len(word), {}).setdefault(g, {})[word] = c

    d_A = SparseMap(A, A, -1)
    ops: dict[int, dict] = {}
    for n, table in sorted(by_arity.items()):
        # b_n on suspended words: <delta_n(w), word> against each sA word
        support_words = set()
        for g, p in table.items():
            for word in p:
                for perm in itertools.permutations(word):
                    support_words.add(tuple(dual_name(x) for x in perm))
        b_tab: dict = {}
        for xword in sorted(support_words):
            val: Vector = {}
            for g, p in table.items():
                coeff = pair_vector_word(W, sA, p, xword, dual)
                if coeff:
                    val[dual_name(g)] = coeff
            if val:
                b_tab[xword] = val
        un = unsuspend_op(A, n, b_tab)
        if n == 1:
            for (x,), val in un.items():
                for t, c in val.items():
                    d_A.add_entry(t, x, c)
        else:
            ops[n] = un
    return InfinityStructure(COMM, A, d_A, ops, name=q.name)


def quillen_from_cinfty(s: InfinityStructure, dual_name=None,
                        max_weight: int | None = None) -> QuillenModel:
    """Harrison cochains of a C-infinity algebra, as a Quillen model."""
    if s.flavor != COMM:
        raise ValueError("quillen_from_cinfty expects a comm-flavor structure")
    dual_name = dual_name or (lambda g: g)
    A = s.space
    for e in A:
        if e.degree > -2:
            raise ValueError("structure must be simply connected "
                             "(cohomological degrees >= 2)")
    W = GradedSpace()
    for e in A:
        W.add(BasisElement(dual_name(e.name), -e.degree - 1, e.weight))
    dual = {dual_name(a): a for a in A.names()}
    sA = s.sspace

    delta: dict = {}
    top = max_weight if max_weight is not None else max(s.max_op_arity(), 1)
    for n in range(1, top + 1):
        tab = s.b_table(n)
        if not tab:
            continue
        # basis of Lie words of weight n on W restricted to relevant degrees
        basis = lie_basis(W, n)
        if not basis:
            if tab:
                raise ValueError(f"b_{n} nonzero but free Lie weight {n} empty")
            continue
        expansions = [lw.expand() for lw in basis]
        support = sorted(tab, key=str)
        # For each generator w, solve <delta_n(w), u> = coeff of s a_w in b_n(u)
        for gname in W.names():
            rhs = []
            for u in support:
                rhs.append(tab[u].get(dual[gname], Q(0)))
            if not any(rhs):
                continue
            rows = []
            for exp in expansions:
                rows.append([pair_vector_word(W, sA, exp, u, dual)
                             for u in support])
            sol = _solve_exact(rows, rhs)
            if sol is None:
                raise ValueError(
                    f"b_{n} component at {gname} is not dual to a Lie element "
                    "(structure fails the shuffle constraint)")
            acc: Vector = {}
            for c, exp in zip(sol, expansions):
                if c:
                    acc = vec_addmul(acc, c, exp)
            if acc:
                delta.setdefault(gname, {})
                for wrd, c in acc.items():
                    delta[gname][wrd] = delta[gname].get(wrd, Q(0)) + c
    delta = {g: {w: c for w, c in p.items() if c} for g, p in delta.items()}
    delta = {g: p for g, p in delta.items() if p}
    return QuillenModel(W, delta, name=s.name)


def _solve_exact(rows, rhs):
    """Solve sum_i x_i rows[i] = rhs exactly; None if inconsistent."""
    from .linalg import rref
    n = len(rows)
    cols = len(rhs)
    aug = [[rows[i][j] for i in range(n)] + [rhs[j]] for j in range(cols)]
    red, pivots = rref(aug)
    if n in pivots:
        return None
    sol = [Q(0)] * n
    for r, c in enumerate(pivots):
        sol[c] = red[r][n]
    return sol


def cochain_dual(s: InfinityStructure, dual_name=None):
    """coCE of an L-infinity structure (a Sullivan algebra) or coHarr of a
    C-infinity structure (a Quillen-style dg Lie algebra)."""
    if s.flavor == LIE:
        return sullivan_from_linfty(s, dual_name)
    if s.flavor == COMM:
        return quillen_from_cinfty(s, dual_name)
    raise ValueError("cochain_dual supports lie and comm flavors")
