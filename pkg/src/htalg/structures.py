"""A-infinity / C-infinity / L-infinity structures as coderivation data.

An ``InfinityStructure`` stores the unsuspended operation tables m_n
(degree n - 2 multilinear maps given on basis words).  All coalgebra-side
computation happens on the suspension: the component of the bar coderivation
in arity n is b_n = s o m_n o (s^{-1})^{x n}, applied with mechanical Koszul
signs.  The structure equations are checked as D^2 = 0 on the bar side,
where D is the coderivation extension of all b_n (n >= 1, b_1 from d); this
is equivalent to the classical sign-laden relations, which the test suite
re-derives independently.

Flavors:
  * ``assoc`` - tensor coalgebra T(sA), no symmetry constraint;
  * ``comm``  - same underlying tensor model, operations kill suspended
                shuffles (Harrison quotient is formed on demand);
  * ``lie``   - symmetric coalgebra on sL, suspended operations symmetric.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from .linalg import (GradedSpace, BasisElement, SparseMap, Complex, Q, Vector,
                     vec_add, vec_addmul, vec_scale, vec_eq)
from .words import (shuffles, act, koszul_sign, sort_wedge, wedge_monomials,
                    shuffle_product, tensor_words, Word)

ASSOC = "assoc"
COMM = "comm"
LIE = "lie"
FLAVORS = (ASSOC, COMM, LIE)

ARITY_CAP = 64  # search limit when certifying the arity bound


# --- suspension of operation tables ---------------------------------------

def suspend_space(space: GradedSpace) -> GradedSpace:
    """The suspension sA: same names, degrees shifted up by one."""
    out = GradedSpace()
    for e in space:
        out.add(BasisElement(e.name, e.degree + 1, e.weight))
    return out


def suspend_op(space: GradedSpace, n: int, table: dict) -> dict:
    """b_n = s o m_n o (s^{-1})^{x n} on suspended words.

    ``table`` maps length-n words over A to vectors in A.  The Koszul sign of
    (s^{-1})^{x n} against suspended letters is (-1)^{sum_i (n-i)(|a_i|+1)}.
    """
    out = {}
    for word, val in table.items():
        exp = sum((n - i) * (space.degree(word[i - 1]) + 1)
                  for i in range(1, n + 1))
        sign = -1 if exp % 2 else 1
        sval = vec_scale(sign, val)
        if sval:
            out[word] = sval
    return out


def unsuspend_op(space: GradedSpace, n: int, table: dict) -> dict:
    """Inverse of suspend_op: m_n = (-1)^{n(n-1)/2} s^{-1} o b_n o s^{x n}."""
    out = {}
    glob = -1 if (n * (n - 1) // 2) % 2 else 1
    for word, val in table.items():
        exp = sum((n - i) * space.degree(word[i - 1]) for i in range(1, n + 1))
        sign = glob * (-1 if exp % 2 else 1)
        sval = vec_scale(sign, val)
        if sval:
            out[word] = sval
    return out


def op_degree_check(space: GradedSpace, n: int, table: dict):
    for word, val in table.items():
        if len(word) != n:
            raise ValueError(f"arity-{n} table keyed by word of length {len(word)}")
        d = sum(space.degree(x) for x in word) + n - 2
        for t, c in val.items():
            if c and space.degree(t) != d:
                raise ValueError(
                    f"op entry m_{n}{word} -> {t} violates degree {d}")


class InfinityStructure:
    """Arity-indexed operations on a graded space, one of the three flavors."""

    def __init__(self, flavor: str, space: GradedSpace, d: SparseMap | None = None,
                 ops: dict | None = None, arity_bound: int | None = None,
                 name: str = ""):
        if flavor not in FLAVORS:
            raise ValueError(f"unknown flavor {flavor!r}")
        self.flavor = flavor
        self.space = space
        self.name = name
        self.d = d if d is not None else SparseMap(space, space, -1)
        if self.d.degree != -1:
            raise ValueError("differential must have degree -1")
        self.ops: dict[int, dict] = {}
        for n, table in (ops or {}).items():
            if n < 2:
                raise ValueError("operation tables start at arity 2")
            op_degree_check(space, n, table)
            cleaned = {w: dict(v) for w, v in table.items() if v}
            if cleaned:
                self.ops[n] = cleaned
        self.sspace = suspend_space(space)
        bound = certified_arity_bound(space)
        if bound is None:
            raise ValueError(
                "no finite arity bound: degree support does not force the "
                "operations to vanish eventually")
        if arity_bound is not None and arity_bound < bound:
            # caller may certify a smaller bound only if tables vanish there
            for n in self.ops:
                if n > arity_bound:
                    raise ValueError("declared arity bound below a nonzero op")
            bound = arity_bound
        self.arity_bound = bound
        for n in self.ops:
            if n > bound:
                raise ValueError(f"operation of arity {n} above certified bound {bound}")
        self._b_cache: dict[int, dict] = {}

    # -- coderivation components on the suspension --

    def b_table(self, n: int) -> dict:
        """Suspended component b_n as a table on length-n suspended words."""
        if n in self._b_cache:
            return self._b_cache[n]
        if n == 1:
            tab = {}
            for e in self.space:
                col = self.d.column(e.name)
                if col:
                    tab[(e.name,)] = dict(col)
            out = suspend_op(self.space, 1, tab)
        else:
            out = suspend_op(self.space, n, self.ops.get(n, {}))
        self._b_cache[n] = out
        return out

    def b_apply(self, n: int, word: Word) -> Vector:
        return dict(self.b_table(n).get(word, {}))

    def b_apply_wedge(self, n: int, mono: Word) -> Vector:
        """Symmetric lift: value on an arbitrary word via sorting (lie flavor)."""
        tab = self.b_table(n)
        if mono in tab:
            return dict(tab[mono])
        srt = sort_wedge(mono, self.sspace)
        if srt is None:
            return {}
        w, sign = srt
        return vec_scale(sign, tab.get(w, {}))

    def op_apply(self, n: int, word: Word) -> Vector:
        if n == 1:
            return self.d.apply({word[0]: Q(1)})
        return dict(self.ops.get(n, {}).get(word, {}))

    def max_op_arity(self) -> int:
        return max(self.ops, default=1)

    def copy_with(self, **kw):
        args = dict(flavor=self.flavor, space=self.space, d=self.d,
                    ops=self.ops, name=self.name)
        args.update(kw)
        return InfinityStructure(**args)

    def __repr__(self):
        return (f"InfinityStructure({self.flavor}, dim {len(self.space)}, "
                f"ops {sorted(self.ops)}, bound {self.arity_bound})")


def certified_arity_bound(space: GradedSpace) -> int | None:
    """Least N with ops of arity > N impossible by degree support.

    An arity-n operation takes total input degree D to D + n - 2; it can be
    nonzero only if [n*min + n - 2, n*max + n - 2] meets the degree support.
    Returns None if no such N up to ARITY_CAP exists.
    """
    degs = [e.degree for e in space.elements]
    if not degs:
        return 1
    lo, hi = min(degs), max(degs)
    feasible = []
    for n in range(2, ARITY_CAP + 1):
        if n * lo + n - 2 <= hi and n * hi + n - 2 >= lo:
            feasible.append(n)
    if feasible and feasible[-1] == ARITY_CAP:
        return None
    return max(feasible, default=1)


# --- word enumeration with degree pruning ----------------------------------

def words_in_degree_range(space: GradedSpace, length: int, lo=None, hi=None):
    """Words over the basis with total degree in [lo, hi], DFS-pruned."""
    names = space.names()
    degs = [space.degree(n) for n in names]
    if not names:
        return [] if length > 0 else [()]
    dmin, dmax = min(degs), max(degs)
    out = []

    def rec(prefix, total, remaining):
        if remaining == 0:
            if (lo is None or total >= lo) and (hi is None or total <= hi):
                out.append(tuple(prefix))
            return
        if lo is not None and total + remaining * dmax < lo:
            return
        if hi is not None and total + remaining * dmin > hi:
            return
        for nm, dg in zip(names, degs):
            prefix.append(nm)
            rec(prefix, total + dg, remaining - 1)
            prefix.pop()

    rec([], 0, length)
    return out


def wedges_in_degree_range(space: GradedSpace, length: int, lo=None, hi=None):
    out = []
    for w in wedge_monomials(space, length):
        d = sum(space.degree(x) for x in w)
        if (lo is None or d >= lo) and (hi is None or d <= hi):
            out.append(w)
    return out


# --- coderivation extension -------------------------------------------------

def coderivation_apply_tensor(s: InfinityStructure, word: Word,
                              min_arity: int = 1) -> Vector:
    """Full coderivation D on a suspended tensor word (weight >= 1).

    Sum over consecutive blocks; crossing a prefix of odd total degree flips
    the sign since each b_n has degree -1.  ``min_arity=2`` gives the
    perturbation part only.
    """
    out: Vector = {}
    W = len(word)
    sdeg = [s.sspace.degree(x) for x in word]
    for n in range(min_arity, min(W, max(s.arity_bound, 1)) + 1):
        tab = s.b_table(n)
        if not tab:
            continue
        for i in range(W - n + 1):
            block = word[i:i + n]
            val = tab.get(block)
            if not val:
                continue
            sign = -1 if sum(sdeg[:i]) % 2 else 1
            for t, c in val.items():
                neww = word[:i] + (t,) + word[i + n:]
                out = vec_addmul(out, sign * c, {neww: Q(1)})
    return out


def coderivation_apply_wedge(s: InfinityStructure, mono: Word,
                             min_arity: int = 1) -> Vector:
    """Full coderivation D on a wedge monomial (lie flavor).

    Sum over position subsets; the subset is unshuffled to the front with its
    Koszul sign, hit by b_n, and the result is re-sorted.
    """
    out: Vector = {}
    W = len(mono)
    sp = s.sspace
    sdeg = [sp.degree(x) for x in mono]
    for n in range(min_arity, min(W, max(s.arity_bound, 1)) + 1):
        if n > 1 and not s.b_table(n):
            continue
        for S in itertools.combinations(range(W), n):
            rest = [i for i in range(W) if i not in S]
            # Koszul sign of extracting S (order preserved) to the front
            exp = 0
            for a in S:
                exp += sum(sdeg[b] for b in rest if b < a)
            sign = -1 if exp % 2 else 1
            block = tuple(mono[i] for i in S)
            val = s.b_apply_wedge(n, block)
            if not val:
                continue
            tail = tuple(mono[i] for i in rest)
            for t, c in val.items():
                srt = sort_wedge((t,) + tail, sp)
                if srt is None:
                    continue
                w2, sg2 = srt
                out = vec_addmul(out, sign * sg2 * c, {w2: Q(1)})
    return out


def coderivation_apply(s: InfinityStructure, key: Word) -> Vector:
    if s.flavor == LIE:
        return coderivation_apply_wedge(s, key)
    return coderivation_apply_tensor(s, key)


def slice_basis(s: InfinityStructure, weight: int, lo=None, hi=None):
    if s.flavor == LIE:
        return wedges_in_degree_range(s.sspace, weight, lo, hi)
    return words_in_degree_range(s.sspace, weight, lo, hi)


# --- validity -----------------------------------------------------------------

class StructureReport:
    def __init__(self):
        self.violations: list[str] = []
        self.checked_weight = 0
        self.arity_bound = None

    @property
    def ok(self):
        return not self.violations

    def __repr__(self):
        status = "pass" if self.ok else f"FAIL({len(self.violations)})"
        return (f"StructureReport {status}, structure equations through "
                f"weight {self.checked_weight}, arity bound {self.arity_bound}")


def _symmetry_violations(s: InfinityStructure, report: StructureReport):
    """Lie: suspended b_n symmetric; comm: b_n kills suspended shuffles."""
    sp = s.sspace
    for n in sorted(s.ops):
        tab = s.b_table(n)
        words = sorted({w for w in tab}, key=str)
        if s.flavor == LIE:
            support = set()
            for w in tab:
                support.update(itertools.permutations(w))
            for w in sorted(support, key=str):
                degs = [sp.degree(x) for x in w]
                for i in range(n - 1):
                    p = list(range(n))
                    p[i], p[i + 1] = p[i + 1], p[i]
                    w2, sign = act(tuple(p), w, degs)
                    lhs = tab.get(w2, {})
                    rhs = vec_scale(sign, tab.get(w, {}))
                    if not vec_eq(lhs, rhs):
                        report.violations.append(
                            f"l_{n} not graded symmetric after suspension at {w}")
        elif s.flavor == COMM:
            # b_n must vanish on every (p,q)-shuffle of suspended words
            support_letters = sorted({x for w in tab for x in w},
                                     key=sp.index)
            for p in range(1, n):
                q = n - p
                seen = set()
                for w in sorted({w for w in tab}, key=str):
                    # all splittings of permutations of support into (p, q)
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
                            report.violations.append(
                                f"m_{n} does not vanish on the ({p},{q})-shuffle "
                                f"of {u} and {v}")


def check_structure(s: InfinityStructure, max_weight: int | None = None) -> StructureReport:
    """Verify flavor constraints and (d+b)^2 = 0 through the certified bound.

    The square of a coderivation is again a coderivation, so vanishing of its
    weight->1 corestriction implies full vanishing; that corestriction in
    weight N is the arity-N structure equation.  Words are enumerated with
    degree pruning, so the check is exhaustive within the certificate.
    """
    report = StructureReport()
    report.arity_bound = s.arity_bound
    _symmetry_violations(s, report)
    W = max_weight if max_weight is not None else 2 * max(
        s.max_op_arity(), 1)
    report.checked_weight = W
    sp = s.sspace
    if len(sp):
        dlo = min(e.degree for e in sp)
        dhi = max(e.degree for e in sp)
    else:
        dlo = dhi = 0
    for N in range(1, W + 1):
        # Nonzero weight-1 corestriction of D^2 needs word degree in
        # [dlo+2, dhi+2]; outside it the arity-N relation holds trivially,
        # and vanishing of all corestrictions forces D^2 = 0 (coderivation).
        keys = slice_basis(s, N, lo=dlo + 2, hi=dhi + 2)
        for w in keys:
            val = coderivation_apply(s, w)
            acc: Vector = {}
            for w2, c in val.items():
                acc = vec_addmul(acc, c, coderivation_apply(s, w2))
            if acc:
                report.violations.append(
                    f"structure equation fails on {w}: D^2 = {acc}")
    return report


# --- bar constructions -------------------------------------------------------

def bar_key(weight: int, word: Word) -> tuple:
    return ("bar", weight, word)


class BarComplex:
    """Weight-graded bar-side complex of a structure.

    ``kind`` is "tensor" (assoc), "harrison" (comm; shuffle quotient) or
    "ce" (lie; symmetric words).  Basis keys are ("bar", weight, word).
    The stored complex carries the coweight in each element's weight slot:
    sum of letter weights minus the length, when letter weights are set.
    """

    def __init__(self, s: InfinityStructure, max_weight: int,
                 degree_lo=None, degree_hi=None, include_unit=True,
                 kind: str | None = None):
        self.structure = s
        self.max_weight = max_weight
        self.kind = kind or {ASSOC: "tensor", COMM: "harrison", LIE: "ce"}[s.flavor]
        self.quotients = {}
        space = GradedSpace()
        weights_have_meaning = all(e.weight is not None for e in s.space)
        if include_unit:
            space.add(BasisElement(bar_key(0, ()), 0,
                                   0 if weights_have_meaning else None))
        self._slices: dict[int, list] = {}
        for w in range(1, max_weight + 1):
            if self.kind == "harrison":
                raw = words_in_degree_range(s.sspace, w, degree_lo, degree_hi)
                quot = _HarrisonSlices(s, w, raw)
                self.quotients[w] = quot
                keys = quot.representatives
            elif self.kind == "ce":
                keys = wedges_in_degree_range(s.sspace, w, degree_lo, degree_hi)
            else:
                keys = words_in_degree_range(s.sspace, w, degree_lo, degree_hi)
            self._slices[w] = keys
            for word in keys:
                deg = sum(s.sspace.degree(x) for x in word)
                cw = None
                if weights_have_meaning:
                    cw = sum((s.space.weight(x) or 1) for x in word) - w
                space.add(BasisElement(bar_key(w, word), deg, cw))
        d = SparseMap(space, space, -1)
        for w in range(1, max_weight + 1):
            for word in self._slices[w]:
                img = self.apply_coderivation(w, word)
                for (w2, word2), c in img.items():
                    if bar_key(w2, word2) in space:
                        d.add_entry(bar_key(w2, word2), bar_key(w, word), c)
                    elif c:
                        raise ValueError(
                            f"bar differential leaves the window at {word} -> {word2}")
        self.complex = Complex(space, d)

    def apply_coderivation(self, w: int, word: Word) -> dict:
        """Image of a slice key, as {(weight, key): coeff}."""
        s = self.structure
        if self.kind == "harrison":
            out = {}
            val = coderivation_apply_tensor(s, word)
            by_len: dict[int, Vector] = {}
            for w2, c in val.items():
                by_len.setdefault(len(w2), {})
                by_len[len(w2)] = vec_addmul(by_len[len(w2)], c, {w2: Q(1)})
            res = {}
            for L, vec_ in by_len.items():
                quot = self.quotients.get(L)
                if quot is None:
                    raise ValueError("harrison window too small")
                red = quot.reduce(vec_)
                for rw, c in red.items():
                    res[(L, rw)] = res.get((L, rw), Q(0)) + c
            return {k: v for k, v in res.items() if v}
        val = coderivation_apply(s, word)
        return {(len(w2), w2): c for w2, c in val.items()}

    def weight_part(self, w: int):
        return list(self._slices.get(w, []))


class _HarrisonSlices:
    """Shuffle quotient of one tensor weight slice of the suspension."""

    def __init__(self, s: InfinityStructure, length: int, raw_words: list):
        from .words import ShuffleQuotient
        by_deg: dict[int, list] = {}
        for w in raw_words:
            by_deg.setdefault(sum(s.sspace.degree(x) for x in w), []).append(w)
        self._quots = {d: ShuffleQuotient(s.sspace, ws)
                       for d, ws in sorted(by_deg.items())}
        self.representatives = [r for d in sorted(self._quots)
                                for r in self._quots[d].representatives]

    def reduce(self, v: Vector) -> Vector:
        out: Vector = {}
        groups: dict[int, Vector] = {}
        for w, c in v.items():
            for d, q in self._quots.items():
                if w in q._word_class:
                    groups.setdefault(d, {})
                    groups[d] = vec_addmul(groups[d], c, {w: Q(1)})
                    break
            else:
                raise KeyError(f"word {w} not in any quotient slice")
        for d, vv in groups.items():
            out = vec_add(out, self._quots[d].reduce(vv))
        return out


def bar(s: InfinityStructure, max_weight: int, degree_lo=None, degree_hi=None,
        include_unit: bool = True) -> BarComplex:
    """Bar construction per flavor: T(sA), Harrison, or Chevalley-Eilenberg."""
    return BarComplex(s, max_weight, degree_lo, degree_hi, include_unit)


def coderivation_matrix(s: InfinityStructure, max_weight: int,
                        degree_lo=None, degree_hi=None) -> SparseMap:
    """The coderivation d + b as an explicit map on a bar window."""
    bc = BarComplex(s, max_weight, degree_lo, degree_hi, include_unit=False)
    return bc.complex.d


def ops_from_coderivation(flavor: str, space: GradedSpace, D: SparseMap,
                          max_arity: int) -> InfinityStructure:
    """Recover a structure from a coderivation on a bar window.

    Reads off the weight->1 components, unsuspends them, and validates that
    re-extending reproduces D on the window (rejects non-coderivations).
    """
    sspace = suspend_space(space)
    d = SparseMap(space, space, -1)
    ops: dict[int, dict] = {}
    # collect components by arity
    comps: dict[int, dict] = {}
    for skey, col in D.cols.items():
        _, w, word = skey
        for tkey, c in col.items():
            _, w2, word2 = tkey
            if w2 == 1 and len(word) >= 1:
                comps.setdefault(len(word), {}).setdefault(word, {})
                comps[len(word)][word][word2[0]] = \
                    comps[len(word)][word].get(word2[0], Q(0)) + c
    for n, tab in comps.items():
        tab = {w: {k: c for k, c in v.items() if c} for w, v in tab.items()}
        tab = {w: v for w, v in tab.items() if v}
        if not tab:
            continue
        un = unsuspend_op(space, n, tab)
        if n == 1:
            for (x,), val in un.items():
                for t, c in val.items():
                    d.add_entry(t, x, c)
        else:
            ops[n] = un
    out = InfinityStructure(flavor, space, d, ops)
    # reject non-coderivation input: re-extension must reproduce D
    for skey in D.cols:
        _, w, word = skey
        img = {}
        if flavor == LIE:
            val = coderivation_apply_wedge(out, word)
        else:
            val = coderivation_apply_tensor(out, word)
        for w2, c in val.items():
            img[("bar", len(w2), w2)] = c
        if not vec_eq(img, D.column(skey)):
            raise ValueError(f"input is not the coderivation of a structure "
                             f"(mismatch on {skey})")
    return out


# --- constructors -----------------------------------------------------------

def strict_algebra(space: GradedSpace, product: dict, d: SparseMap | None = None,
                   flavor: str = COMM, name: str = "") -> InfinityStructure:
    """A dg (commutative) algebra as a structure with only m_2."""
    return InfinityStructure(flavor, space, d, {2: product} if product else {},
                             name=name)


def strict_lie(space: GradedSpace, bracket: dict, d: SparseMap | None = None,
               name: str = "") -> InfinityStructure:
    return InfinityStructure(LIE, space, d, {2: bracket} if bracket else {},
                             name=name)


def abelian(space: GradedSpace, d: SparseMap | None = None, flavor=LIE,
            name: str = "") -> InfinityStructure:
    return InfinityStructure(flavor, space, d, {}, name=name)
