"""Homotopy transfer via the basic perturbation lemma.

The contraction (f, g, h) of chain complexes is suspended (h picks up a
minus sign so the side conditions survive), extended to the bar space by
the symmetrized homotopy

    h_n^Sigma = sum_j sum_{eps, eps_j = 0} a_{n,|eps|+1}
                pi^{eps_1} x ... x h_(j) x ... x pi^{eps_n},

with a_{n,k} = 1/(binom(n,k) k) the entries of Leibniz's harmonic triangle,
and perturbed by the structure coderivation:

    b' = F Sigma G,  F' = F(1 + Sigma H),  G' = (1 + H Sigma) G,
    H' = H(1 + Sigma H),        Sigma = sum_k b (H b)^k.

The series is finite because b strictly decreases weight.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from math import comb

from .linalg import (GradedSpace, BasisElement, SparseMap, Complex, Contraction,
                     Q, Vector, vec_add, vec_addmul, vec_scale, vec_eq)
from .words import sort_wedge, Word
from .structures import (InfinityStructure, LIE, COMM, ASSOC, suspend_space,
                         unsuspend_op, certified_arity_bound,
                         coderivation_apply_tensor, coderivation_apply_wedge,
                         words_in_degree_range, wedges_in_degree_range,
                         check_structure)
from .morphisms import InfinityMorphism, check_morphism


# --- Leibniz's harmonic triangle -------------------------------------------

def leibniz_entry(n: int, k: int) -> Fraction:
    """Closed form a_{n,k} = 1/(binom(n,k) k), 1 <= k <= n."""
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    return Q(1, comb(n, k) * k)


def leibniz_triangle(rows: int) -> list[list[Fraction]]:
    """First rows of the triangle by the recursion a_{n,k} = a_{n-1,k-1} - a_{n,k-1}."""
    tri: list[list[Fraction]] = []
    for n in range(1, rows + 1):
        row = [Q(1, n)]
        for k in range(2, n + 1):
            row.append(tri[-1][k - 2] - row[-1])
        tri.append(row)
    return tri


# --- symmetrized homotopy ----------------------------------------------------

def tensor_power_space(space: GradedSpace, n: int) -> GradedSpace:
    out = GradedSpace()
    for w in itertools.product(space.names(), repeat=n):
        out.add(BasisElement(w, sum(space.degree(x) for x in w)))
    return out


def _slotwise_apply(word: Word, degs, slot_ops, slot_degrees) -> Vector:
    """Apply per-slot maps to a word with the Koszul sign rule."""
    out: Vector = {(): Q(1)}
    sign_exp = 0
    for i in range(len(word)):
        sign_exp += slot_degrees[i] * sum(degs[:i])
    base_sign = -1 if sign_exp % 2 else 1
    for i, x in enumerate(word):
        op = slot_ops[i]
        img = op.get(x, {}) if isinstance(op, dict) else {x: Q(1)}
        new: Vector = {}
        for w, c in out.items():
            for t, ct in img.items():
                new[w + (t,)] = new.get(w + (t,), Q(0)) + c * ct
        out = {w: c for w, c in new.items() if c}
        if not out:
            return {}
    return {w: base_sign * c for w, c in out.items()}


def h_sigma_tables(space: GradedSpace, h_cols: dict, pi_cols: dict, n: int):
    """h_n^Sigma on length-n words over the given space, as a word table."""
    names = space.names()
    degs_of = {x: space.degree(x) for x in names}

    def apply(word: Word) -> Vector:
        degs = [degs_of[x] for x in word]
        total: Vector = {}
        for j in range(n):
            for eps in itertools.product((0, 1), repeat=n):
                if eps[j]:
                    continue
                coeff = leibniz_entry(n, sum(eps) + 1)
                slot_ops = []
                slot_degrees = []
                for i in range(n):
                    if i == j:
                        slot_ops.append(h_cols)
                        slot_degrees.append(1)
                    elif eps[i]:
                        slot_ops.append(pi_cols)
                        slot_degrees.append(0)
                    else:
                        slot_ops.append(None)
                        slot_degrees.append(0)
                img = _slotwise_apply(word, degs, slot_ops, slot_degrees)
                for w, c in img.items():
                    total = vec_addmul(total, coeff * c, {w: Q(1)})
        return total

    return apply


def symmetrized_homotopy(c: Contraction, n: int) -> SparseMap:
    """The map h_n^Sigma on the n-th tensor power of the big complex."""
    if n < 1:
        raise ValueError("n >= 1 required")
    space = c.big.space
    power = tensor_power_space(space, n)
    pi = c.g.compose(c.f)
    apply = h_sigma_tables(space, c.h.cols, pi.cols, n)
    out = SparseMap(power, power, +1)
    for e in power:
        for w, coeff in apply(e.name).items():
            out.add_entry(w, e.name, coeff)
    return out


# --- the suspended contraction and functional bar operators ------------------

class SuspendedContraction:
    """Contraction carried to the suspension, adapted to the bar differential.

    Conjugating by s makes (f, g, -h) a contraction for d_{sA} = -s d s^{-1};
    since the bar-internal differential is the extension of b_1 = +s d s^{-1},
    the two sign flips cancel and the plain copies (f, g, h) are the right
    contraction data on suspended letters.
    """

    def __init__(self, c: Contraction):
        self.base = c
        self.sA = suspend_space(c.big.space)
        self.sB = suspend_space(c.small.space)
        self.f_cols = {s: dict(col) for s, col in c.f.cols.items()}
        self.g_cols = {s: dict(col) for s, col in c.g.cols.items()}
        self.h_cols = {s: dict(col) for s, col in c.h.cols.items()}
        pi = c.g.compose(c.f)
        self.pi_cols = {s: dict(col) for s, col in pi.cols.items()}


class BarOps:
    """Functional operators on suspended bar words for one transfer problem."""

    def __init__(self, s: InfinityStructure, sc: SuspendedContraction):
        self.s = s
        self.sc = sc
        self.lie = s.flavor == LIE
        self._h_apply_cache: dict[int, object] = {}

    # -- canonicalization --
    def canon(self, vec_words: Vector, side_space: GradedSpace) -> Vector:
        if not self.lie:
            return vec_words
        out: Vector = {}
        for w, c in vec_words.items():
            srt = sort_wedge(w, side_space)
            if srt is None:
                continue
            w2, sign = srt
            out = vec_addmul(out, sign * c, {w2: Q(1)})
        return out

    def _letterwise(self, vec_words: Vector, cols: dict, out_space: GradedSpace) -> Vector:
        out: Vector = {}
        for w, c in vec_words.items():
            imgs = [cols.get(x, {}) for x in w]
            if any(not im for im in imgs):
                continue
            for combo in itertools.product(*[list(im.items()) for im in imgs]):
                letters = tuple(t for t, _ in combo)
                coeff = c
                for _, cc in combo:
                    coeff *= cc
                out = vec_addmul(out, coeff, {letters: Q(1)})
        return self.canon(out, out_space)

    def G0(self, v: Vector) -> Vector:
        return self._letterwise(v, self.sc.g_cols, self.sc.sA)

    def F0(self, v: Vector) -> Vector:
        return self._letterwise(v, self.sc.f_cols, self.sc.sB)

    def H(self, v: Vector) -> Vector:
        out: Vector = {}
        by_len: dict[int, Vector] = {}
        for w, c in v.items():
            by_len.setdefault(len(w), {})[w] = c
        for n, vv in by_len.items():
            if n not in self._h_apply_cache:
                self._h_apply_cache[n] = h_sigma_tables(
                    self.sc.sA, self.sc.h_cols, self.sc.pi_cols, n)
            app = self._h_apply_cache[n]
            for w, c in vv.items():
                out = vec_addmul(out, c, app(w))
        return self.canon(out, self.sc.sA)

    def b(self, v: Vector) -> Vector:
        """Perturbation part of the coderivation (arities >= 2 only)."""
        out: Vector = {}
        for w, c in v.items():
            if self.lie:
                img = coderivation_apply_wedge(self.s, w, min_arity=2)
            else:
                img = coderivation_apply_tensor(self.s, w, min_arity=2)
            out = vec_addmul(out, c, img) if img else out
        return out

    def sigma(self, v: Vector) -> Vector:
        """Sigma = sum_k b (H b)^k, finite by weight decrease."""
        acc = self.b(v)
        total = dict(acc)
        guard = 0
        while acc:
            acc = self.b(self.H(acc))
            total = vec_add(total, acc)
            guard += 1
            if guard > 10000:
                raise RuntimeError("perturbation series failed to terminate")
        return total

    def b_prime(self, word: Word) -> Vector:
        return self.F0(self.sigma(self.G0({word: Q(1)})))

    def f_prime(self, word: Word) -> Vector:
        v = {word: Q(1)}
        return self.F0(vec_add(v, self.sigma(self.H(v))))

    def g_prime(self, word: Word) -> Vector:
        v = self.G0({word: Q(1)})
        return vec_add(v, self.H(self.sigma(v)))


def _morphism_arity_cap(src: GradedSpace, tgt: GradedSpace) -> int:
    degs_s = [e.degree for e in src]
    degs_t = [e.degree for e in tgt]
    if not degs_s or not degs_t:
        return 1
    lo_s, hi_s = min(degs_s), max(degs_s)
    lo_t, hi_t = min(degs_t), max(degs_t)
    cap = 1
    for n in range(2, 65):
        # suspended components have degree 0: need n letters' degrees to meet target
        if n * (lo_s + 1) <= hi_t + 1 and n * (hi_s + 1) >= lo_t + 1:
            cap = n
    return cap


class TransferResult:
    def __init__(self, structure, f_inf, g_inf):
        self.structure = structure
        self.f_inf = f_inf
        self.g_inf = g_inf

    def __iter__(self):
        return iter((self.structure, self.f_inf, self.g_inf))


def transfer(s: InfinityStructure, c: Contraction, check: bool = True) -> TransferResult:
    """Transferred structure on the small complex plus both infinity-maps.

    The weight-1 components of F' and G' are f and g; the transferred
    operations are read off the weight-1 corestriction of b' = F Sigma G and
    the differential is the small one corrected by the weight-1 part.
    """
    if c.big.space.names() != s.space.names():
        raise ValueError("contraction big complex does not match the structure")
    for e in s.space:
        if not vec_eq(c.big.d.column(e.name), s.d.column(e.name)):
            raise ValueError("contraction differential differs from structure d")
    sc = SuspendedContraction(c)
    ops_engine = BarOps(s, sc)
    B = c.small.space
    sB = sc.sB
    bound_B = certified_arity_bound(B)
    if bound_B is None:
        raise ValueError("no finite arity bound on the target complex")

    degs_B = [e.degree for e in sB]
    lo = min(degs_B) + 1 if degs_B else 0
    hi = max(degs_B) + 1 if degs_B else 0

    d_new = SparseMap(B, B, -1)
    for sname, col in c.small.d.cols.items():
        for t, coeff in col.items():
            d_new.add_entry(t, sname, coeff)
    ops: dict[int, dict] = {}
    for n in range(1, bound_B + 1):
        if s.flavor == LIE:
            keys = wedges_in_degree_range(sB, n, lo, hi)
        else:
            keys = words_in_degree_range(sB, n, lo, hi)
        tab = {}
        for w in keys:
            img = ops_engine.b_prime(w)
            val = {t[0]: cc for t, cc in img.items() if len(t) == 1}
            if val:
                tab[w] = val
        if not tab:
            continue
        if s.flavor == LIE:
            full = {}
            for xi, val in tab.items():
                for perm_word in set(itertools.permutations(xi)):
                    srt = sort_wedge(perm_word, sB)
                    if srt is None or srt[0] != xi:
                        continue
                    full[perm_word] = vec_scale(srt[1], val)
            tab = full
        un = unsuspend_op(B, n, tab)
        if n == 1:
            for (x,), val in un.items():
                for t, coeff in val.items():
                    d_new.add_entry(t, x, coeff)
        else:
            ops[n] = un
    s_new = InfinityStructure(s.flavor, B, d_new, ops,
                              name=(s.name + "|transferred") if s.name else "")

    # infinity-morphism components: suspended degree 0, unshifted windows
    loF = min(degs_B) if degs_B else 0
    hiF = max(degs_B) if degs_B else 0
    cap_f = _morphism_arity_cap(s.space, B)
    comps_f: dict[int, dict] = {}
    for n in range(1, cap_f + 1):
        if s.flavor == LIE:
            keys = wedges_in_degree_range(sc.sA, n, loF, hiF)
        else:
            keys = words_in_degree_range(sc.sA, n, loF, hiF)
        tab = {}
        for w in keys:
            img = ops_engine.f_prime(w)
            val = {t[0]: cc for t, cc in img.items() if len(t) == 1}
            if val:
                tab[w] = val
        if tab:
            if s.flavor == LIE:
                full = {}
                for xi, val in tab.items():
                    for perm_word in set(itertools.permutations(xi)):
                        srt = sort_wedge(perm_word, sc.sA)
                        if srt is None or srt[0] != xi:
                            continue
                        full[perm_word] = vec_scale(srt[1], val)
                tab = full
            comps_f[n] = unsuspend_op(s.space, n, tab)
    f_inf = InfinityMorphism(s, s_new, comps_f, name="transfer-F")

    cap_g = _morphism_arity_cap(B, s.space)
    degs_A = [e.degree for e in sc.sA.elements]
    loA = min(degs_A) if degs_A else 0
    hiA = max(degs_A) if degs_A else 0
    comps_g: dict[int, dict] = {}
    for n in range(1, cap_g + 1):
        if s.flavor == LIE:
            keys = wedges_in_degree_range(sB, n, loA, hiA)
        else:
            keys = words_in_degree_range(sB, n, loA, hiA)
        tab = {}
        for w in keys:
            img = ops_engine.g_prime(w)
            val = {t[0]: cc for t, cc in img.items() if len(t) == 1}
            if val:
                tab[w] = val
        if tab:
            if s.flavor == LIE:
                full = {}
                for xi, val in tab.items():
                    for perm_word in set(itertools.permutations(xi)):
                        srt = sort_wedge(perm_word, sB)
                        if srt is None or srt[0] != xi:
                            continue
                        full[perm_word] = vec_scale(srt[1], val)
                tab = full
            comps_g[n] = unsuspend_op(B, n, tab)
    g_inf = InfinityMorphism(s_new, s, comps_g, name="transfer-G")

    if check:
        rep = check_structure(s_new)
        if not rep.ok:
            raise AssertionError(
                "internal error: transferred structure invalid: "
                + "; ".join(rep.violations[:3]))
        for phi in (f_inf, g_inf):
            mrep = check_morphism(phi)
            if not mrep.ok:
                raise AssertionError(
                    "internal error: transfer morphism invalid: "
                    + "; ".join(mrep.violations[:3]))
    return TransferResult(s_new, f_inf, g_inf)


def minimal_model(s: InfinityStructure, check: bool = True) -> TransferResult:
    """Minimal structure on homology via the deterministic contraction."""
    from .linalg import build_contraction
    cx = Complex(s.space, s.d, check=False)
    ctr = build_contraction(cx)
    res = transfer(s, ctr, check=check)
    if res.structure.d.cols:
        raise AssertionError("internal error: minimal model has differential")
    return res


# --- basic perturbation lemma on explicit contractions -----------------------

class PerturbResult:
    def __init__(self, contraction, b_transferred):
        self.contraction = contraction
        self.b_transferred = b_transferred

    def __iter__(self):
        return iter((self.contraction, self.b_transferred))


def perturb(c: Contraction, b: SparseMap, max_iterations: int = 4096) -> PerturbResult:
    """Basic perturbation lemma for an explicit perturbation map.

    ``b`` must be a degree -1 self-map of the big complex such that (d+b)^2=0
    and the series Sigma terminates (guaranteed when b strictly decreases the
    weights carried by the big space's basis).  Rejects non-terminating input.
    """
    big, small = c.big, c.small
    if b.degree != -1:
        raise ValueError("perturbation must have degree -1")
    weights = [e.weight for e in big.space]
    if all(w is not None for w in weights) and big.space.elements:
        for s_, col in b.cols.items():
            for t in col:
                if big.space.weight(t) >= big.space.weight(s_):
                    raise ValueError(
                        f"perturbation does not decrease weight at {s_} -> {t}")

    def H(v):
        return c.h.apply(v)

    def B(v):
        return b.apply(v)

    def sigma(v):
        acc = B(v)
        total = dict(acc)
        it = 0
        while acc:
            acc = B(H(acc))
            total = vec_add(total, acc)
            it += 1
            if it > max_iterations:
                raise ValueError("perturbation series does not terminate "
                                 "(not weight-decreasing)")
        return total

    d_big2 = big.d.add(b)
    big2 = Complex(big.space, d_big2)  # validates (d+b)^2 = 0

    b_small = SparseMap(small.space, small.space, -1)
    f2 = SparseMap(big.space, small.space, 0)
    g2 = SparseMap(small.space, big.space, 0)
    h2 = SparseMap(big.space, big.space, +1)
    for e in small.space:
        x = {e.name: Q(1)}
        gx = c.g.apply(x)
        sgx = sigma(gx)
        for t, coeff in c.f.apply(sgx).items():
            b_small.add_entry(t, e.name, coeff)
        for t, coeff in vec_add(gx, H(sgx)).items():
            g2.add_entry(t, e.name, coeff)
    for e in big.space:
        x = {e.name: Q(1)}
        sx = sigma(H(x))
        for t, coeff in c.f.apply(vec_add(x, sx)).items():
            f2.add_entry(t, e.name, coeff)
        for t, coeff in c.h.apply(vec_add(x, sx)).items():
            h2.add_entry(t, e.name, coeff)
    d_small2 = small.d.add(b_small)
    small2 = Complex(small.space, d_small2)
    out = Contraction(big2, small2, f2, g2, h2, check=True)
    return PerturbResult(out, b_small)
