"""Infinity-morphisms as coalgebra maps between bar constructions.

Components f_n: A^{x n} -> A' of degree n - 1 are stored unsuspended; the
suspended components have degree 0, so the coalgebra-map extension needs no
operator signs (Koszul signs enter only through wedge re-sorting on the lie
side).  A comm-flavor morphism is an assoc-flavor one whose suspended
components kill shuffles; composition then restricts correctly.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

from .linalg import GradedSpace, SparseMap, Q, Vector, vec_add, vec_addmul, vec_scale, vec_eq, rank_kernel
from .words import sort_wedge, act, shuffle_product, Word
from .structures import (InfinityStructure, LIE, COMM, ASSOC, suspend_op,
                         unsuspend_op, coderivation_apply, slice_basis,
                         words_in_degree_range, wedges_in_degree_range)


class InfinityMorphism:
    """Morphism of bar coalgebras, given by its corestriction components."""

    def __init__(self, source: InfinityStructure, target: InfinityStructure,
                 components: dict, name: str = ""):
        if source.flavor != target.flavor:
            raise ValueError("flavor mismatch between source and target")
        self.source = source
        self.target = target
        self.name = name
        self.components: dict[int, dict] = {}
        for n, tab in components.items():
            cleaned = {}
            for w, v in tab.items():
                if len(w) != n:
                    raise ValueError("component keyed by wrong-length word")
                d = sum(source.space.degree(x) for x in w) + n - 1
                for t, c in v.items():
                    if c and target.space.degree(t) != d:
                        raise ValueError(
                            f"component f_{n}{w} -> {t} violates degree {d}")
                v = {t: Q(c) for t, c in v.items() if c}
                if v:
                    cleaned[w] = v
            if cleaned:
                self.components[n] = cleaned
        self._s_cache: dict[int, dict] = {}

    def f_table(self, n: int) -> dict:
        """Suspended component: degree-0 table on suspended words."""
        if n not in self._s_cache:
            self._s_cache[n] = suspend_op(self.source.space, n,
                                          self.components.get(n, {}))
        return self._s_cache[n]

    def f_apply(self, n: int, word: Word) -> Vector:
        return dict(self.f_table(n).get(word, {}))

    def f_apply_wedge(self, n: int, mono: Word) -> Vector:
        tab = self.f_table(n)
        if mono in tab:
            return dict(tab[mono])
        srt = sort_wedge(mono, self.source.sspace)
        if srt is None:
            return {}
        w, sign = srt
        return vec_scale(sign, tab.get(w, {}))

    def linear_part(self) -> SparseMap:
        f1 = SparseMap(self.source.space, self.target.space, 0)
        for (x,), val in self.components.get(1, {}).items():
            for t, c in val.items():
                f1.add_entry(t, x, c)
        return f1

    def max_arity(self) -> int:
        return max(self.components, default=1)

    # -- coalgebra-map extension, weight by weight --

    def extend_tensor(self, word: Word) -> dict:
        """Image of a suspended tensor word as {output word: coeff}."""
        out: dict[Word, Q] = {}
        n = len(word)
        arities = sorted(self.components)
        if not arities:
            return {}

        def rec(pos, parts, coeff):
            if pos == n:
                key = tuple(parts)
                out[key] = out.get(key, Q(0)) + coeff
                return
            for k in arities:
                if pos + k > n:
                    continue
                val = self.f_apply(k, word[pos:pos + k])
                for t, c in val.items():
                    rec(pos + k, parts + [t], coeff * c)

        rec(0, [], Q(1))
        return {w: c for w, c in out.items() if c}

    def extend_wedge(self, mono: Word) -> dict:
        """Image of a wedge monomial: sum over unordered set partitions."""
        out: dict[Word, Q] = {}
        n = len(mono)
        sp = self.source.sspace
        sdeg = [sp.degree(x) for x in mono]
        arities = set(self.components)
        for partition in _set_partitions(n):
            if any(len(b) not in arities for b in partition):
                continue
            # Koszul sign of regrouping mono into block order
            order = [i for b in partition for i in b]
            sign = 1
            for a in range(len(order)):
                for b in range(a + 1, len(order)):
                    if order[a] > order[b] and sdeg[order[a]] % 2 and sdeg[order[b]] % 2:
                        sign = -sign
            vals = [self.f_apply_wedge(len(b), tuple(mono[i] for i in b))
                    for b in partition]
            if any(not v for v in vals):
                continue
            for combo in itertools.product(*[list(v.items()) for v in vals]):
                letters = tuple(t for t, _ in combo)
                coeff = Q(sign)
                for _, c in combo:
                    coeff *= c
                srt = sort_wedge(letters, self.target.sspace)
                if srt is None:
                    continue
                w2, s2 = srt
                out[w2] = out.get(w2, Q(0)) + coeff * s2
        return {w: c for w, c in out.items() if c}

    def extend(self, key: Word) -> dict:
        if self.source.flavor == LIE:
            return self.extend_wedge(key)
        return self.extend_tensor(key)

    def __repr__(self):
        return (f"InfinityMorphism({self.source.flavor}, arities "
                f"{sorted(self.components)})")


def _set_partitions(n: int):
    """Unordered set partitions of range(n), blocks sorted by minimum."""
    if n == 0:
        yield []
        return
    first, rest = 0, list(range(1, n))
    for k in range(len(rest) + 1):
        for comb in itertools.combinations(rest, k):
            block = [first] + list(comb)
            remaining = [i for i in rest if i not in comb]
            if not remaining:
                yield [block]
                continue
            shift = {i: v for i, v in enumerate(remaining)}
            for sub in _set_partitions(len(remaining)):
                yield [block] + [[shift[i] for i in b] for b in sub]


def identity_morphism(s: InfinityStructure) -> InfinityMorphism:
    f1 = {(e.name,): {e.name: Q(1)} for e in s.space}
    return InfinityMorphism(s, s, {1: f1}, name="id")


def strict_morphism(source: InfinityStructure, target: InfinityStructure,
                    f1_table: dict, name: str = "") -> InfinityMorphism:
    return InfinityMorphism(source, target, {1: dict(f1_table)}, name=name)


class MorphismReport:
    def __init__(self):
        self.violations: list[str] = []
        self.checked_weight = 0
        self.is_infinity_iso = False
        self.is_infinity_quasi_iso = False

    @property
    def ok(self):
        return not self.violations

    def __repr__(self):
        status = "pass" if self.ok else f"FAIL({len(self.violations)})"
        kind = ("infinity-iso" if self.is_infinity_iso else
                "infinity-quasi-iso" if self.is_infinity_quasi_iso else "map")
        return f"MorphismReport {status} ({kind}, weight <= {self.checked_weight})"


def check_morphism(phi: InfinityMorphism, max_weight: int | None = None) -> MorphismReport:
    """Verify that the extension commutes with the two coderivations.

    The defect F D - D' F of a coalgebra map along coderivations is itself
    determined by its weight-1 corestriction, so only that part is checked,
    on degree-feasible source words, through the stated weight bound.
    """
    rep = MorphismReport()
    s, t = phi.source, phi.target
    _component_constraint_violations(phi, rep)
    W = max_weight if max_weight is not None else max(
        2 * max(phi.max_arity(), s.max_op_arity(), t.max_op_arity()), 2)
    rep.checked_weight = W
    tdegs = [e.degree for e in t.sspace]
    if tdegs:
        lo, hi = min(tdegs) + 1, max(tdegs) + 1
    else:
        lo = hi = 0
    for N in range(1, W + 1):
        keys = slice_basis(s, N, lo=lo, hi=hi)
        for w in keys:
            dv = coderivation_apply(s, w)
            lhs: Vector = {}
            for w2, c in dv.items():
                img = phi.extend(w2)
                for w3, c3 in img.items():
                    if len(w3) == 1:
                        lhs = vec_addmul(lhs, c * c3, {w3[0]: Q(1)})
            rhs: Vector = {}
            img = phi.extend(w)
            for w2, c in img.items():
                dv2 = coderivation_apply(t, w2)
                for w3, c3 in dv2.items():
                    if len(w3) == 1:
                        rhs = vec_addmul(rhs, c * c3, {w3[0]: Q(1)})
            if not vec_eq(lhs, rhs):
                diff = vec_add(lhs, vec_scale(-1, rhs))
                rep.violations.append(f"morphism equation fails at {w}: {diff}")
    if rep.ok:
        f1 = phi.linear_part()
        rank, kernel, _ = rank_kernel(f1)
        rep.is_infinity_iso = (not kernel and rank == len(t.space)
                               and len(s.space) == len(t.space))
        rep.is_infinity_quasi_iso = rep.is_infinity_iso or _is_quasi_iso(phi)
    return rep


def _component_constraint_violations(phi: InfinityMorphism, rep: MorphismReport):
    sp = phi.source.sspace
    for n in sorted(phi.components):
        if n == 1:
            continue
        tab = phi.f_table(n)
        if phi.source.flavor == LIE:
            support = set()
            for w in tab:
                support.update(itertools.permutations(w))
            for w in sorted(support, key=str):
                degs = [sp.degree(x) for x in w]
                for i in range(n - 1):
                    p = list(range(n))
                    p[i], p[i + 1] = p[i + 1], p[i]
                    w2, sign = act(tuple(p), w, degs)
                    if not vec_eq(tab.get(w2, {}), vec_scale(sign, tab.get(w, {}))):
                        rep.violations.append(
                            f"f_{n} not graded symmetric after suspension at {w}")
        elif phi.source.flavor == COMM:
            for p in range(1, n):
                q = n - p
                seen = set()
                for w in sorted(tab, key=str):
                    for perm in set(itertools.permutations(w)):
                        u, v = perm[:p], perm[p:]
                        if (u, v) in seen:
                            continue
                        seen.add((u, v))
                        prod = shuffle_product(u, v, sp.degree)
                        total: Vector = {}
                        for ww, c in prod.items():
                            total = vec_addmul(total, c, tab.get(ww, {}))
                        if total:
                            rep.violations.append(
                                f"f_{n} does not kill the ({p},{q})-shuffle of {u},{v}")


def _is_quasi_iso(phi: InfinityMorphism) -> bool:
    from .linalg import Complex, row_space_basis
    s, t = phi.source, phi.target
    f1 = phi.linear_part()
    cs = Complex(s.space, s.d, check=False)
    ct = Complex(t.space, t.d, check=False)
    for deg in sorted(set(s.space.degrees()) | set(t.space.degrees())):
        hs, reps_s = cs.homology(deg)
        ht, reps_t = ct.homology(deg)
        if len(hs) != len(ht):
            return False
        if not len(hs):
            continue
        keys = [e.name for e in t.space.slice(deg)]
        bnd = ct.boundaries(deg)
        rows = bnd + [f1.apply(r) for r in reps_s]
        basis, _ = row_space_basis(rows, keys)
        target_rows = bnd + reps_t
        tbasis, _ = row_space_basis(target_rows, keys)
        if len(basis) != len(tbasis):
            return False
    return True


def compose_morphisms(g: InfinityMorphism, f: InfinityMorphism) -> InfinityMorphism:
    """Composite g o f, computed through the coalgebra extensions."""
    if f.target is not g.source and f.target.space.names() != g.source.space.names():
        raise ValueError("morphisms not composable")
    if f.source.flavor != g.source.flavor:
        raise ValueError("flavor mismatch")
    top = max(f.max_arity() * g.max_arity(), 1)
    comps: dict[int, dict] = {}
    src = f.source
    for n in range(1, top + 1):
        table = {}
        for w in slice_basis(src, n):
            mid = f.extend(w)
            acc: Vector = {}
            for w2, c in mid.items():
                val = (g.f_apply_wedge(len(w2), w2) if src.flavor == LIE
                       else g.f_apply(len(w2), w2))
                acc = vec_addmul(acc, c, val)
            if acc:
                table[w] = acc
        if table:
            if src.flavor == LIE:
                full = {}
                sp = src.sspace
                for xi, val in table.items():
                    for perm_word in set(itertools.permutations(xi)):
                        srt = sort_wedge(perm_word, sp)
                        if srt is None or srt[0] != xi:
                            continue
                        full[perm_word] = vec_scale(srt[1], val)
                table = full
            comps[n] = unsuspend_op(src.space, n, table)
    return InfinityMorphism(f.source, g.target, comps,
                            name=f"{g.name}*{f.name}")
