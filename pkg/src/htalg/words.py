"""Combinatorics of free objects: shuffles, Koszul signs, Lyndon bases.

Permutations are tuples ``p`` of length n with ``p[i] = sigma(i+1) - 1``,
i.e. 0-indexed images.  A permutation acts on a tensor word on the left by
moving the letter in position i to position sigma(i); the Koszul sign is a
product of (-1)^{|x_i||x_j|} over inversions.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from functools import lru_cache

from .linalg import GradedSpace, BasisElement, Q, Vector, vec_addmul, row_space_basis, solve_in_span

Word = tuple  # tuple of basis names


def perm_sign(p: tuple) -> int:
    sign = 1
    for i in range(len(p)):
        for j in range(i + 1, len(p)):
            if p[i] > p[j]:
                sign = -sign
    return sign


def koszul_sign(p: tuple, degrees) -> int:
    """Sign of the left action of p on letters of the given degrees."""
    if len(p) != len(degrees):
        raise ValueError("permutation/degree length mismatch")
    sign = 1
    for i in range(len(p)):
        for j in range(i + 1, len(p)):
            if p[i] > p[j] and degrees[i] % 2 and degrees[j] % 2:
                sign = -sign
    return sign


def act(p: tuple, word: Word, degrees) -> tuple[Word, int]:
    """Left action: position i of the result holds the letter from p^{-1}(i)."""
    n = len(p)
    out = [None] * n
    for i in range(n):
        out[p[i]] = word[i]
    return tuple(out), koszul_sign(p, degrees)


def shuffles(p: int, q: int):
    """All (p,q)-shuffles with their permutation signs.

    A (p,q)-shuffle keeps 1..p and p+1..p+q in order.  Returned as a list of
    (permutation, sign) pairs, binomial(p+q, p) of them.
    """
    if p <= 0 or q <= 0:
        raise ValueError("shuffles(p, q) requires p, q >= 1")
    out = []
    slots = range(p + q)
    for first in itertools.combinations(slots, p):
        rest = [i for i in slots if i not in first]
        perm = [0] * (p + q)
        for i, pos in enumerate(first):
            perm[i] = pos
        for j, pos in enumerate(rest):
            perm[p + j] = pos
        perm = tuple(perm)
        out.append((perm, perm_sign(perm)))
    return out


def shuffle_product(u: Word, v: Word, degree_of) -> Vector:
    """Graded shuffle product of two words (Koszul signs only, no sgn)."""
    if not u:
        return {v: Q(1)}
    if not v:
        return {u: Q(1)}
    word = u + v
    degs = [degree_of(x) for x in word]
    out: Vector = {}
    for perm, _ in shuffles(len(u), len(v)):
        w, sign = act(perm, word, degs)
        out = vec_addmul(out, sign, {w: Q(1)})
    return out


# --- Lyndon words and the free graded Lie algebra -------------------------

def _is_lyndon(word: tuple[int, ...]) -> bool:
    n = len(word)
    if n == 0:
        return False
    for i in range(1, n):
        if word[i:] + word[:i] <= word:
            return False
    return True


def lyndon_words(n_letters: int, max_len: int):
    """All Lyndon words on 0..n_letters-1 of length <= max_len (Duval)."""
    out = []
    w = [-1]
    while w:
        w[-1] += 1
        m = len(w)
        if m <= max_len:
            out.append(tuple(w))
        while len(w) < max_len:
            w.append(w[len(w) - m])
        while w and w[-1] == n_letters - 1:
            w.pop()
    return sorted(out, key=lambda t: (len(t), t))


def standard_factorization(word: tuple[int, ...]):
    """Lyndon standard factorization w = uv, v the longest proper Lyndon suffix."""
    n = len(word)
    for i in range(1, n):
        if _is_lyndon(word[i:]):
            return word[:i], word[i:]
    raise ValueError(f"{word} is not a Lyndon word of length >= 2")


class LieWord:
    """Element of a free graded Lie algebra: a binary bracketing of generators.

    ``tree`` is either a generator name or a pair (left, right) of trees.
    """

    def __init__(self, tree, space: GradedSpace):
        self.tree = tree
        self.space = space
        self.degree = sum(space.degree(g) for g in self.letters())
        self.weight = sum((space.weight(g) or 1) for g in self.letters())

    def letters(self):
        out = []

        def walk(t):
            if isinstance(t, tuple) and len(t) == 2 and not isinstance(t, str):
                walk(t[0])
                walk(t[1])
            else:
                out.append(t)
        walk(self.tree)
        return out

    def expand(self) -> Vector:
        """Expansion into the tensor algebra: words -> coefficients."""
        return _expand_tree(self.tree, self.space)

    def __repr__(self):
        return _tree_str(self.tree)


def _tree_str(t):
    if isinstance(t, tuple) and len(t) == 2:
        return f"[{_tree_str(t[0])},{_tree_str(t[1])}]"
    return str(t)


def _expand_tree(t, space: GradedSpace) -> Vector:
    if not (isinstance(t, tuple) and len(t) == 2):
        return {(t,): Q(1)}
    left = _expand_tree(t[0], space)
    right = _expand_tree(t[1], space)
    out: Vector = {}
    for u, cu in left.items():
        du = sum(space.degree(x) for x in u)
        for v, cv in right.items():
            dv = sum(space.degree(x) for x in v)
            out = vec_addmul(out, cu * cv, {u + v: Q(1)})
            sign = -1 if (du % 2 and dv % 2) else 1
            out = vec_addmul(out, -sign * cu * cv, {v + u: Q(1)})
    return out


def lie_bracket_vectors(u: Vector, v: Vector, space: GradedSpace) -> Vector:
    """Commutator [u, v] of tensor-algebra vectors over the generator space."""
    out: Vector = {}
    for a, ca in u.items():
        da = sum(space.degree(x) for x in a)
        for b, cb in v.items():
            db = sum(space.degree(x) for x in b)
            out = vec_addmul(out, ca * cb, {a + b: Q(1)})
            sign = -1 if (da % 2 and db % 2) else 1
            out = vec_addmul(out, -sign * ca * cb, {b + a: Q(1)})
    return out


def lie_basis(gens: GradedSpace, weight: int) -> list[LieWord]:
    """Super-Lyndon basis of the weight-w part of the free graded Lie algebra.

    Standard bracketings of Lyndon words in generator declaration order,
    plus [b(w), b(w)] for each odd-degree Lyndon word w of half the weight.
    Letter weights default to 1; with explicit generator weights the weight
    of a word is the sum over its letters.
    """
    if weight < 1:
        raise ValueError("weight must be >= 1")
    names = gens.names()
    for n in names:
        if isinstance(n, tuple) and len(n) == 2:
            raise ValueError("generator names must not be 2-tuples "
                             "(ambiguous with bracket trees)")
    wts = [gens.weight(n) or 1 for n in names]
    out: list[LieWord] = []

    def word_weight(w):
        return sum(wts[i] for i in w)

    max_len = weight  # letter weights >= 1
    for w in lyndon_words(len(names), max_len):
        ww = word_weight(w)
        if ww == weight:
            out.append(LieWord(_bracket_of(w, names), gens))
        if 2 * ww == weight:
            lw = LieWord(_bracket_of(w, names), gens)
            if lw.degree % 2:
                out.append(LieWord((lw.tree, lw.tree), gens))
    # independence is guaranteed for the super-Lyndon set; verified in tests
    return out


def _bracket_of(word: tuple[int, ...], names):
    if len(word) == 1:
        return names[word[0]]
    u, v = standard_factorization(word)
    return (_bracket_of(u, names), _bracket_of(v, names))


def tensor_words(space: GradedSpace, length: int, degree: int | None = None,
                 max_abs_degree: int | None = None):
    """All length-n words over the basis, optionally filtered by total degree."""
    names = space.names()
    out = []
    for w in itertools.product(names, repeat=length):
        d = sum(space.degree(x) for x in w)
        if degree is not None and d != degree:
            continue
        if max_abs_degree is not None and abs(d) > max_abs_degree:
            continue
        out.append(w)
    return out


def sort_wedge(word: Word, space: GradedSpace):
    """Canonical form of a wedge/symmetric word: (sorted word, sign) or None.

    Letters sort by ambient basis index; repeated odd-degree letters kill the
    monomial (None).  The sign is the Koszul sign of the sorting permutation.
    """
    idx = [space.index(x) for x in word]
    degs = [space.degree(x) for x in word]
    # insertion sort tracking Koszul sign
    order = list(range(len(word)))
    sign = 1
    for i in range(1, len(order)):
        j = i
        while j > 0 and idx[order[j - 1]] > idx[order[j]]:
            if degs[order[j - 1]] % 2 and degs[order[j]] % 2:
                sign = -sign
            order[j - 1], order[j] = order[j], order[j - 1]
            j -= 1
    sorted_word = tuple(word[i] for i in order)
    for a, b in zip(sorted_word, sorted_word[1:]):
        if a == b and space.degree(a) % 2:
            return None
    return sorted_word, sign


def wedge_monomials(space: GradedSpace, length: int, degree: int | None = None):
    """Sorted-monomial basis of the length-n symmetric power (graded sense)."""
    names = space.names()
    out = []
    for comb in itertools.combinations_with_replacement(range(len(names)), length):
        w = tuple(names[i] for i in comb)
        ok = all(not (w[i] == w[i + 1] and space.degree(w[i]) % 2)
                 for i in range(len(w) - 1))
        if not ok:
            continue
        if degree is not None and sum(space.degree(x) for x in w) != degree:
            continue
        out.append(w)
    return out


def wedge_norm(word: Word) -> int:
    """Product of multiplicities factorials of a sorted monomial."""
    out = 1
    run = 1
    for a, b in zip(word, word[1:]):
        run = run + 1 if a == b else 1
        if run > 1:
            out *= run
    return out


class ShuffleQuotient:
    """Weight-w slice of T(V) modulo shuffle products, with representatives.

    Representative words prefer (in order) Lyndon words in the basis order,
    doubled odd-degree Lyndon words, then lexicographically smallest.  This
    realizes the cofree Lie coalgebra slice concretely.
    """

    def __init__(self, space: GradedSpace, words: list[Word]):
        self.space = space
        self.words = list(words)
        self._build()

    def _classify(self, w: Word) -> tuple:
        idx = tuple(self.space.index(x) for x in w)
        if _is_lyndon(idx):
            return (0, idx)
        n = len(idx)
        if n % 2 == 0 and idx[: n // 2] == idx[n // 2:] and _is_lyndon(idx[: n // 2]):
            deg = sum(self.space.degree(x) for x in w[: n // 2])
            if deg % 2:
                return (1, idx)
        return (2, idx)

    def _build(self):
        deg = self.space.degree
        span_rows: list[Vector] = []
        n = len(self.words)
        if n == 0:
            self.representatives = []
            self.shuffle_rank = 0
            self._span = []
            self._memo = {}
            return
        length = len(self.words[0])
        wordset = set(self.words)
        for p in range(1, length):
            q = length - p
            # enumerate from sub-words actually occurring in the slice
            lefts = sorted({word[:p] for word in self.words})
            rights = sorted({word[p:] for word in self.words})
            seen = set()
            for u in lefts:
                for v in rights:
                    if (u, v) in seen:
                        continue
                    seen.add((u, v))
                    prod = shuffle_product(u, v, deg)
                    prod = {w: c for w, c in prod.items() if w in wordset}
                    if prod:
                        span_rows.append(prod)
        basis, pivots = row_space_basis(span_rows, self.words)
        self._span = basis
        self._pivots = pivots
        self.shuffle_rank = len(basis)
        reps = []
        span = list(basis)
        cand = sorted(self.words, key=self._classify)
        from .linalg import _reduce_against, _append_reduced
        piv = list(pivots)
        for w in cand:
            red = _reduce_against({w: Q(1)}, span, piv, self.words)
            if red:
                reps.append(w)
                _append_reduced(red, span, piv, self.words)
        self.representatives = reps
        # One inversion per slice: columns of inv express each word in the
        # (shuffle-span + representatives) basis; only rep coordinates matter.
        rows = self._span + [{r: Q(1)} for r in self.representatives]
        inv = _invert_rows(rows, self.words)
        k = len(self._span)
        self._word_class = {}
        for j, w in enumerate(self.words):
            self._word_class[w] = {
                r: inv[k + i][j] for i, r in enumerate(self.representatives)
                if inv[k + i][j]}

    def reduce(self, v: Vector) -> Vector:
        """Class of a slice vector written in the representative basis."""
        out: Vector = {}
        for w, c in v.items():
            out = vec_addmul(out, c, self._word_class[w])
        return out


def _invert_rows(rows: list[Vector], keys):
    """Inverse of the matrix whose columns are the given basis vectors.

    Returns a dense list of rows: inv[i][j] = coefficient of basis vector i
    in the expansion of unit vector e_{keys[j]}.
    """
    from .linalg import rref
    n = len(keys)
    if len(rows) != n:
        raise ValueError("need exactly dim-many basis vectors")
    aug = [[rows[i].get(k, Q(0)) for i in range(n)] + [Q(1) if j == jj else Q(0) for jj in range(n)]
           for j, k in enumerate(keys)]
    red, pivots = rref(aug)
    if pivots != list(range(n)):
        raise ValueError("rows do not form a basis")
    return [[red[i][n + j] for j in range(n)] for i in range(n)]
