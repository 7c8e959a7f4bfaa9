"""Weight gradings, Koszulness certificates, and Koszul duality.

A weight grading makes the bar coweight (sum of letter weights minus word
length) rise by exactly 1 under the coderivation when the operations are
homogeneous of weight 2 - n.  Bar elements regraded by minus their coweight
therefore form honest chain complexes, split along the conserved quantity
t = sum over letters of (degree + weight - 1); Koszulness is exactness of
every row away from coweight zero.

Classical Koszul duals are computed with the degree -2 pairing

  <x ^ y, [a, b]> = (-1)^{|y||a|+|x|+|a|} <x,a><y,b>
                  - (-1)^{|a||b|+|y||b|+|x|+|b|} <x,b><y,a>,

implemented verbatim; the infinity-versions pair suspended wedge monomials
against polynomial monomials (multiset-diagonal with Koszul evaluation
signs), which induces the same orthogonal complements in weight 2.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

from .linalg import (GradedSpace, BasisElement, SparseMap, Complex, Q, Vector,
                     vec_add, vec_addmul, vec_scale, vec_eq, row_space_basis,
                     solve_in_span, _reduce_against, _append_reduced)
from .words import (lie_basis, LieWord, lie_bracket_vectors, sort_wedge,
                    wedge_norm, ShuffleQuotient, Word)
from .structures import (InfinityStructure, LIE, COMM, ASSOC,
                         coderivation_apply_tensor, coderivation_apply_wedge,
                         suspend_space)
from .dictionary import (mono_mul, mono_degree, poly_mul, monomials_up_to,
                         word_pairing_sign)

COMM_ALG = "comm_alg"
LIE_ALG = "lie_alg"


class WeightedPresentation:
    """Generators with weights plus homogeneous relations.

    Commutative relations are vectors over sorted monomials of the free
    graded-commutative algebra; Lie relations are tensor-algebra expansions
    of free Lie elements.
    """

    def __init__(self, kind: str, generators: GradedSpace, relations: list,
                 name: str = ""):
        if kind not in (COMM_ALG, LIE_ALG):
            raise ValueError(f"unknown presentation kind {kind!r}")
        self.kind = kind
        self.generators = generators
        self.relations = [dict(r) for r in relations if r]
        self.name = name
        for r in self.relations:
            ws = {self._weight_of(m) for m in r}
            if len(ws) != 1:
                raise ValueError(f"relation {r} not weight homogeneous: {ws}")
            ds = {self._degree_of(m) for m in r}
            if len(ds) != 1:
                raise ValueError(f"relation {r} not degree homogeneous")

    def _weight_of(self, m) -> int:
        return sum((self.generators.weight(x) or 1) for x in m)

    def _degree_of(self, m) -> int:
        return sum(self.generators.degree(x) for x in m)

    def relation_weight(self, r) -> int:
        return self._weight_of(next(iter(r)))

    @property
    def quadratic_part(self) -> list:
        return [r for r in self.relations if self.relation_weight(r) == 2]

    def is_quadratic(self) -> bool:
        return all(self.relation_weight(r) == 2 for r in self.relations)

    def __repr__(self):
        kinds = {COMM_ALG: "Lambda", LIE_ALG: "FreeLie"}
        return (f"WeightedPresentation({kinds[self.kind]}"
                f"({', '.join(map(str, self.generators.names()))}), "
                f"{len(self.relations)} relations)")


# --- quotient algebras from presentations -----------------------------------

def _comm_weight_slice(p: WeightedPresentation, w: int):
    """Monomials of weight w (letter weights >= 1 keep this finite)."""
    names = p.generators.names()
    out = []

    def rec(start, mono, wt):
        if wt == w:
            out.append(tuple(mono))
            return
        for i in range(start, len(names)):
            g = names[i]
            gw = p.generators.weight(g) or 1
            if wt + gw > w:
                continue
            if p.generators.degree(g) % 2 and mono and mono[-1] == g:
                continue
            mono.append(g)
            rec(i, mono, wt + gw)
            mono.pop()

    rec(0, [], 0)
    return out


def _comm_ideal_slice(p: WeightedPresentation, w: int):
    """Spanning vectors of the ideal in weight w."""
    rows = []
    for r in p.relations:
        rw = p.relation_weight(r)
        if rw > w:
            continue
        if rw == w:
            rows.append(dict(r))
            continue
        for mono in _comm_weight_slice(p, w - rw):
            prod = poly_mul(p.generators, {mono: Q(1)}, r)
            if prod:
                rows.append(prod)
    return rows


def comm_quotient_slice(p: WeightedPresentation, w: int):
    """(monomials, ideal span rows, representative monomials) in weight w."""
    monos = _comm_weight_slice(p, w)
    rows = _comm_ideal_slice(p, w)
    basis, pivots = row_space_basis(rows, monos)
    reps = []
    span = list(basis)
    piv = list(pivots)
    for m in monos:
        red = _reduce_against({m: Q(1)}, span, piv, monos)
        if red:
            reps.append(m)
            _append_reduced(red, span, piv, monos)
    return monos, basis, reps


def algebra_from_presentation(p: WeightedPresentation, max_weight: int,
                              name: str = "") -> InfinityStructure:
    """Strict commutative structure on the quotient, through a weight bound.

    The basis in each weight is a representative set of monomials; products
    landing beyond the bound are dropped, so consumers must stay within it.
    """
    if p.kind != COMM_ALG:
        raise ValueError("expected a commutative presentation")
    reducers = {}
    space = GradedSpace()
    for w in range(1, max_weight + 1):
        monos, ideal, reps = comm_quotient_slice(p, w)
        reducers[w] = (monos, ideal, reps)
        for m in reps:
            space.add(BasisElement(m, self_deg := p._degree_of(m), w))
    # reduction helper
    red_cache = {}

    def reduce_poly(poly: Vector) -> Vector:
        out: Vector = {}
        group: dict[int, Vector] = {}
        for m, c in poly.items():
            group.setdefault(p._weight_of(m), {})
            group[p._weight_of(m)] = vec_addmul(group[p._weight_of(m)], c, {m: Q(1)})
        for w, v in group.items():
            if w > max_weight:
                continue
            monos, ideal, reps = reducers[w]
            rows = ideal + [{r: Q(1)} for r in reps]
            for m, c in v.items():
                if m in red_cache:
                    out = vec_addmul(out, c, red_cache[m])
                    continue
                sol = solve_in_span(rows, {m: Q(1)}, monos)
                if sol is None:
                    raise AssertionError("monomial outside its weight slice")
                k = len(ideal)
                red = {reps[i]: sol[k + i] for i in range(len(reps))
                       if sol[k + i]}
                red_cache[m] = red
                out = vec_addmul(out, c, red)
        return out

    prod = {}
    for a in space.names():
        for b in space.names():
            wa, wb = p._weight_of(a), p._weight_of(b)
            if wa + wb > max_weight:
                continue
            r = mono_mul(p.generators, a, b)
            if r is None:
                continue
            m, sign = r
            val = reduce_poly({m: Q(sign)})
            if val:
                prod[(a, b)] = val
    return InfinityStructure(COMM, space, None, {2: prod} if prod else {},
                             name=name or p.name)


def lie_weight_slice(p: WeightedPresentation, w: int):
    """Free Lie basis expansions and ideal span in weight w (tensor coords)."""
    basis = lie_basis(p.generators, w)
    expansions = [lw.expand() for lw in basis]
    # ideal: brackets of generators with lower ideal slices, plus relations
    ideal_rows: list[Vector] = []
    for r in p.relations:
        if p.relation_weight(r) == w:
            ideal_rows.append(dict(r))
    if w >= 2:
        lower = {}
        for w2 in range(2, w):
            lower[w2] = lie_weight_slice(p, w2)[2]
        for w2, rows in lower.items():
            for g in p.generators.names():
                gw = p.generators.weight(g) or 1
                if w2 + gw != w:
                    continue
                for r in rows:
                    br = lie_bracket_vectors({(g,): Q(1)}, r, p.generators)
                    if br:
                        ideal_rows.append(br)
    return basis, expansions, ideal_rows


def lie_quotient_slice(p: WeightedPresentation, w: int):
    """(lie basis words, expansions, ideal rows, representative indices)."""
    basis, expansions, ideal_rows = lie_weight_slice(p, w)
    words = sorted({u for v in expansions + ideal_rows for u in v})
    span, piv = row_space_basis(ideal_rows, words)
    reps = []
    s2, p2 = list(span), list(piv)
    for i, exp in enumerate(expansions):
        red = _reduce_against(exp, s2, p2, words)
        if red:
            reps.append(i)
            _append_reduced(red, s2, p2, words)
    return basis, expansions, ideal_rows, reps


def lie_from_presentation(p: WeightedPresentation, max_weight: int,
                          name: str = "") -> InfinityStructure:
    """Strict graded Lie structure on the quotient, through a weight bound."""
    if p.kind != LIE_ALG:
        raise ValueError("expected a Lie presentation")
    slices = {w: lie_quotient_slice(p, w) for w in range(1, max_weight + 1)}
    space = GradedSpace()
    key_of = {}
    rep_vectors = {}
    for w, (basis, expansions, ideal, reps) in slices.items():
        for i in reps:
            key = ("L", w, i)
            space.add(BasisElement(key, basis[i].degree, w))
            key_of[(w, i)] = key
            rep_vectors[key] = expansions[i]

    def reduce_to_reps(w: int, tensor_vec: Vector) -> Vector:
        basis, expansions, ideal, reps = slices[w]
        words = sorted({u for v in expansions + ideal + [tensor_vec] for u in v})
        rows = ideal + [expansions[i] for i in reps]
        sol = solve_in_span(rows, tensor_vec, words)
        if sol is None:
            raise AssertionError("bracket left the Lie span")
        k = len(ideal)
        return {key_of[(w, reps[i])]: sol[k + i]
                for i in range(len(reps)) if sol[k + i]}

    bracket = {}
    for ka in space.names():
        for kb in space.names():
            wa, wb = ka[1], kb[1]
            if wa + wb > max_weight:
                continue
            br = lie_bracket_vectors(rep_vectors[ka], rep_vectors[kb],
                                     p.generators)
            val = reduce_to_reps(wa + wb, br) if br else {}
            if val:
                bracket[(ka, kb)] = val
    return InfinityStructure(LIE, space, None, {2: bracket} if bracket else {},
                             name=name or p.name)


# --- weight rows and Koszulness ----------------------------------------------

def check_weight_homogeneous(s: InfinityStructure):
    """Operations must be homogeneous of weight 2 - n; returns the offender."""
    for e in s.space:
        if e.weight is None:
            return f"basis element {e.name} carries no weight"
    for n, tab in s.ops.items():
        for word, val in tab.items():
            win = sum(s.space.weight(x) for x in word)
            for t, c in val.items():
                if c and s.space.weight(t) != win + 2 - n:
                    return (f"m_{n}{word} -> {t}: weight "
                            f"{s.space.weight(t)} != {win + 2 - n}")
    for sname, col in s.d.cols.items():
        for t, c in col.items():
            if c and s.space.weight(t) != s.space.weight(sname) + 1:
                return f"d({sname}) -> {t} violates weight homogeneity"
    return None


def _tau(s: InfinityStructure, name) -> int:
    """Conserved per-letter quantity: suspended degree + weight - 1."""
    return s.sspace.degree(name) + (s.space.weight(name) or 1) - 1


def _row_words(s: InfinityStructure, target_t: int, max_len: int):
    """Bar words (or wedge monomials) with letter-tau summing to target_t."""
    names = s.sspace.names()
    taus = [_tau(s, x) for x in names]
    if not names:
        return []
    tmin, tmax = min(taus), max(taus)
    out = []
    lie = s.flavor == LIE

    def reachable(acc, remaining):
        for k in range(remaining + 1):
            lo = acc + k * tmin
            hi = acc + k * tmax
            if lo <= target_t <= hi:
                return True
        return False

    def rec(start, word, acc, length):
        if acc == target_t and word:
            out.append(tuple(word))
        if length == max_len or not reachable(acc, max_len - length):
            return
        for i in range(start if lie else 0, len(names)):
            x = names[i]
            if lie and word and word[-1] == x and s.sspace.degree(x) % 2:
                continue
            word.append(x)
            rec(i if lie else 0, word, acc + taus[i], length + 1)
            word.pop()

    rec(0, [], 0, 0)
    return out


def weight_row_complex(s: InfinityStructure, row_t: int, max_len: int):
    """The bar row with conserved invariant t, regraded by minus coweight.

    The returned complex's homological degree is -(coweight); exactness of
    the row means homology concentrated in degree 0.  Basis keys are
    ("row", coweight, word).
    """
    offender = check_weight_homogeneous(s)
    if offender:
        raise ValueError(f"weight-inhomogeneous structure: {offender}")
    words = _row_words(s, row_t, max_len)
    space = GradedSpace()
    for w in words:
        cw = sum(s.space.weight(x) for x in w) - len(w)
        space.add(BasisElement(("row", cw, w), -cw))
    d = SparseMap(space, space, -1)
    for w in words:
        cw = sum(s.space.weight(x) for x in w) - len(w)
        img = (coderivation_apply_wedge(s, w) if s.flavor == LIE
               else coderivation_apply_tensor(s, w))
        for w2, c in img.items():
            cw2 = sum(s.space.weight(x) for x in w2) - len(w2)
            key2 = ("row", cw2, w2)
            if key2 not in space:
                raise ValueError("row window too small; raise max_len")
            d.add_entry(key2, ("row", cw, w), c)
    return Complex(space, d)


def weight_complex(s: InfinityStructure, w: int, max_len: int | None = None):
    """Rows meeting total letter-weight w, as one regraded complex.

    For a strict weight-graded algebra this is the classical weight-w row of
    the (Harrison or Chevalley-Eilenberg) complex.
    """
    offender = check_weight_homogeneous(s)
    if offender:
        raise ValueError(f"weight-inhomogeneous structure: {offender}")
    max_len = max_len or 2 * w
    ts = sorted({sum(_tau(s, x) for x in word)
                 for word in _weight_words(s, w, max_len)})
    spaces = [weight_row_complex(s, t, max_len) for t in ts]
    total = GradedSpace()
    for cx in spaces:
        for e in cx.space:
            total.add(e)
    d = SparseMap(total, total, -1)
    for cx in spaces:
        for sname, col in cx.d.cols.items():
            for t, c in col.items():
                d.add_entry(t, sname, c)
    return Complex(total, d)


def _weight_words(s: InfinityStructure, w: int, max_len: int):
    names = s.sspace.names()
    out = []
    lie = s.flavor == LIE

    def rec(start, word, wt):
        if wt == w and word:
            out.append(tuple(word))
        if len(word) == max_len or wt >= w:
            return
        for i in range(start if lie else 0, len(names)):
            x = names[i]
            if lie and word and word[-1] == x and s.sspace.degree(x) % 2:
                continue
            word.append(x)
            rec(i if lie else 0, word, wt + (s.space.weight(x) or 1))
            word.pop()

    rec(0, [], 0)
    return out


class KoszulCertificate:
    def __init__(self, verdict: str, verified_rows: list, max_weight: int,
                 failing=None, witness=None, note: str = ""):
        self.verdict = verdict  # "KoszulUpTo" | "NotKoszul"
        self.verified_rows = verified_rows
        self.max_weight = max_weight
        self.failing = failing
        self.witness = witness
        self.note = note

    @property
    def koszul(self):
        return self.verdict == "KoszulUpTo"

    def __repr__(self):
        if self.koszul:
            return (f"KoszulCertificate(KoszulUpTo {self.max_weight}, "
                    f"rows {self.verified_rows})")
        return (f"KoszulCertificate(NotKoszul at {self.failing}, "
                f"witness {self.witness})")


def koszul_check(s: InfinityStructure, max_weight: int,
                 max_len: int | None = None) -> KoszulCertificate:
    """Exactness of the weight rows through total letter-weight max_weight.

    NotKoszul comes with an explicit nonzero homology class in positive
    coweight.  The certificate records exactly which rows were checked.
    """
    offender = check_weight_homogeneous(s)
    if offender:
        raise ValueError(f"weight-inhomogeneous structure: {offender}")
    max_len = max_len or 2 * max_weight
    ts = set()
    for w in range(1, max_weight + 1):
        for word in _weight_words(s, w, max_len):
            ts.add(sum(_tau(s, x) for x in word))
    verified = []
    for t in sorted(ts):
        cx = weight_row_complex(s, t, max_len)
        for deg in cx.space.degrees():
            if deg == 0:
                continue  # coweight 0 may carry homology
            hs, reps = cx.homology(deg)
            if reps:
                return KoszulCertificate(
                    "NotKoszul", verified, max_weight,
                    failing={"row": t, "coweight": -deg},
                    witness=reps[0])
        verified.append(t)
    return KoszulCertificate("KoszulUpTo", verified, max_weight)


# --- quadratic presentations --------------------------------------------------

def quadratic_presentation(s: InfinityStructure, max_weight: int = 2,
                           dual_name=None) -> WeightedPresentation:
    """Presentation (V, R) of a strict weight-graded algebra or Lie algebra.

    V is the weight-1 slice and R the kernel of the weight-2 multiplication;
    the multiplication must be surjective in every weight <= max_weight.
    """
    if any(k >= 3 for k in s.ops):
        raise ValueError("quadratic_presentation expects a strict structure")
    if s.d.cols:
        raise ValueError("expected zero differential")
    for e in s.space:
        if e.weight is None:
            raise ValueError("structure carries no weight grading")
    dual_name = dual_name or (lambda x: ("v", x))
    V = GradedSpace()
    orig = {}
    for e in s.space:
        if e.weight == 1:
            nm = dual_name(e.name)
            V.add(BasisElement(nm, e.degree, 1))
            orig[nm] = e.name

    tab = s.ops.get(2, {})

    def mult(x, y) -> Vector:
        return dict(tab.get((orig[x], orig[y]), {}))

    # weight-2 kernel
    from .words import wedge_monomials
    pairs = wedge_monomials(V, 2)
    keys2 = [e.name for e in s.space if e.weight == 2]
    rows = []
    for m in pairs:
        rows.append(mult(m[0], m[1]))
    # kernel of the map pairs -> weight-2 slice
    relations = []
    n = len(pairs)
    aug = [[rows[i].get(k, Q(0)) for i in range(n)] for k in keys2]
    from .linalg import rref
    red, pivots = rref(aug) if keys2 else ([], [])
    rank = len(pivots)
    if rank < len(keys2):
        raise ValueError("weight-2 multiplication not surjective; "
                         "no quadratic presentation on this weight grading")
    free = [j for j in range(n) if j not in pivots]
    for j in free:
        v = {pairs[j]: Q(1)}
        for r, c in enumerate(pivots):
            if red[r][j]:
                v[pairs[c]] = -red[r][j]
        relations.append(v)
    pres = WeightedPresentation(
        COMM_ALG if s.flavor == COMM else LIE_ALG, V,
        [_normalize_relation(V, rel, s.flavor) for rel in relations],
        name=s.name)
    _check_presentation_surjective(s, pres, orig, max_weight)
    return pres


def _normalize_relation(V, rel, flavor):
    if flavor == COMM:
        return rel
    # lie: monomial (x, y) stands for the bracket [x, y]; expand to tensors
    out: Vector = {}
    for (x, y), c in rel.items():
        out = vec_addmul(out, c, lie_bracket_vectors(
            {(x,): Q(1)}, {(y,): Q(1)}, V))
    return out


def _check_presentation_surjective(s, pres, orig, max_weight):
    inv = {v: k for k, v in orig.items()}
    tab = s.ops.get(2, {})
    span: dict[int, list] = {1: [{k: Q(1)} for k in orig.values()]}
    for w in range(2, max_weight + 1):
        rows = []
        for v in span[1]:
            for u in span.get(w - 1, []):
                for a, ca in v.items():
                    for b, cb in u.items():
                        val = tab.get((a, b))
                        if val:
                            rows.append(vec_scale(ca * cb, val))
        keys = [e.name for e in s.space if e.weight == w]
        basis, _ = row_space_basis(rows, keys) if keys else ([], [])
        if len(basis) < len(keys):
            raise ValueError(f"multiplication not surjective in weight {w}")
        span[w] = [{k: Q(1)} for k in keys]


# --- Koszul duals --------------------------------------------------------------

def classical_pairing(V: GradedSpace, W: GradedSpace, dual: dict,
                      mono: tuple, bracket_pair: tuple) -> Q:
    """<x ^ y, [a, b]> by the displayed degree -2 pairing formula.

    ``dual`` maps V-names to W-names; mono = (x, y), bracket_pair = (a, b).
    """
    x, y = mono
    a, b = bracket_pair
    dx, dy = V.degree(x), V.degree(y)
    da, db = W.degree(a), W.degree(b)

    def delta(u, al):
        return Q(1) if dual[u] == al else Q(0)

    t1 = delta(x, a) * delta(y, b)
    t2 = delta(x, b) * delta(y, a)
    s1 = -1 if (dy * da + dx + da) % 2 else 1
    s2 = -1 if (da * db + dy * db + dx + db) % 2 else 1
    return s1 * t1 - s2 * t2


def koszul_dual(p: WeightedPresentation, dual_name=None) -> WeightedPresentation:
    """Koszul dual of a quadratic presentation, by orthogonal complement.

    Commutative V with relations R gives the Lie algebra on W = (sV)^dual
    with relations S = R-perp; the Lie direction mirrors it.  Involutive up
    to presentation isomorphism.
    """
    if not p.is_quadratic():
        raise ValueError("koszul_dual needs a quadratic presentation")
    dual_name = dual_name or (lambda g: ("!", g) if not (
        isinstance(g, tuple) and len(g) == 2 and g[0] == "!") else g[1])
    V = p.generators
    W = GradedSpace()
    dual = {}
    for e in V:
        nm = dual_name(e.name)
        if p.kind == COMM_ALG:
            # x in cohomological degree k (hom -k) pairs with a in degree k-1
            W.add(BasisElement(nm, -e.degree - 1, 1))
        else:
            W.add(BasisElement(nm, -e.degree - 1, 1))
        dual[e.name] = nm

    if p.kind == COMM_ALG:
        from .words import wedge_monomials
        pairs = wedge_monomials(V, 2)
        lie_words = lie_basis(W, 2)
        mat = [[_pair_comm_lie(V, W, dual, m, lw) for lw in lie_words]
               for m in pairs]
        # S = vectors in Lie side orthogonal to all relations
        rel_rows = []
        for r in p.relations:
            rel_rows.append([sum(r.get(m, Q(0)) * mat[i][j]
                                 for i, m in enumerate(pairs))
                             for j in range(len(lie_words))])
        S = _nullspace(rel_rows, len(lie_words))
        relations = []
        for coeffs in S:
            acc: Vector = {}
            for c, lw in zip(coeffs, lie_words):
                if c:
                    acc = vec_addmul(acc, c, lw.expand())
            if acc:
                relations.append(acc)
        return WeightedPresentation(LIE_ALG, W, relations,
                                    name=(p.name + "!") if p.name else "")
    else:
        from .words import wedge_monomials
        lie_words = lie_basis(V, 2)
        pairs = wedge_monomials(W, 2)
        mat = [[_pair_comm_lie(W, V, {w: v for v, w in dual.items()}, m, lw)
                for lw in lie_words] for m in pairs]
        rel_rows = []
        lie_exp = [lw.expand() for lw in lie_words]
        for r in p.relations:
            coords = _lie_coords(r, lie_exp)
            rel_rows.append([sum(coords[j] * mat[i][j]
                                 for j in range(len(lie_words)))
                             for i in range(len(pairs))])
        R = _nullspace(rel_rows, len(pairs))
        relations = []
        for coeffs in R:
            acc: Vector = {}
            for c, m in zip(coeffs, pairs):
                if c:
                    acc = vec_addmul(acc, c, {m: Q(1)})
            if acc:
                relations.append(acc)
        return WeightedPresentation(COMM_ALG, W, relations,
                                    name=(p.name + "!") if p.name else "")


def _pair_comm_lie(V, W, dual, mono, lw: LieWord) -> Q:
    """Pairing of a weight-2 monomial against a weight-2 Lie basis word."""
    tree = lw.tree
    a, b = tree
    return classical_pairing(V, W, dual, mono, (a, b))


def _lie_coords(tensor_vec: Vector, expansions: list) -> list:
    words = sorted({u for v in expansions + [tensor_vec] for u in v})
    sol = solve_in_span(expansions, tensor_vec, words)
    if sol is None:
        raise ValueError("relation is not in the free Lie algebra")
    return sol


def _nullspace(rows, ncols):
    from .linalg import rref
    if not rows:
        return [[Q(1) if i == j else Q(0) for j in range(ncols)]
                for i in range(ncols)]
    red, pivots = rref(rows)
    out = []
    for j in range(ncols):
        if j in pivots:
            continue
        v = [Q(0)] * ncols
        v[j] = Q(1)
        for r, c in enumerate(pivots):
            if red[r][j]:
                v[c] = -red[r][j]
        out.append(v)
    return out


def presentations_isomorphic(p: WeightedPresentation, q: WeightedPresentation) -> bool:
    """Same generators (up to the canonical double-dual renaming) and equal
    relation spans."""
    if p.kind != q.kind or len(p.generators) != len(q.generators):
        return False
    degs_p = sorted(e.degree for e in p.generators)
    degs_q = sorted(e.degree for e in q.generators)
    if degs_p != degs_q:
        return False
    # identify generators positionally (declaration order)
    rename = {qe.name: pe.name
              for pe, qe in zip(p.generators.elements, q.generators.elements)}

    def rn(vec):
        return {tuple(rename[x] for x in m): c for m, c in vec.items()}

    keys = sorted({m for r in p.relations for m in r} |
                  {tuple(rename[x] for x in m) for r in q.relations for m in r})
    bp, _ = row_space_basis(p.relations, keys)
    bq, _ = row_space_basis([rn(r) for r in q.relations], keys)
    if len(bp) != len(bq):
        return False
    return all(vec_eq(a, b) for a, b in zip(bp, bq))


# --- Koszul duals of infinity-structures ---------------------------------------

def koszul_dual_infinity(s: InfinityStructure, max_arity: int | None = None,
                         dual_name=None) -> WeightedPresentation:
    """Koszul dual presentation of a minimal Koszul infinity-structure.

    For an L-infinity algebra: relations S-perp inside Lambda(V) computed
    from the weight-2 sequence of the free structure on the weight-1 part.
    For a C-infinity algebra: relations R-perp inside the free Lie algebra.
    Requires the structure to be generated in weight 1.
    """
    if s.d.cols:
        raise ValueError("koszul_dual_infinity expects a minimal structure")
    for e in s.space:
        if e.weight is None:
            raise ValueError("structure carries no weight grading")
    offender = check_weight_homogeneous(s)
    if offender:
        raise ValueError(offender)
    dual_name = dual_name or (lambda g: ("!", g))
    top = max_arity if max_arity is not None else s.arity_bound
    W1 = [e for e in s.space if e.weight == 1]
    weight2 = [e.name for e in s.space if e.weight == 2]
    sub = GradedSpace(W1)

    if s.flavor == LIE:
        ssub = suspend_space(sub)
        V = GradedSpace()
        for e in W1:
            V.add(BasisElement(dual_name(e.name), -(e.degree + 1), 1))
        vname = {e.name: dual_name(e.name) for e in W1}
        # check generation in weight 1 at weight 2
        from .words import wedge_monomials
        relations = []
        img_rows = []
        for n in range(2, top + 1):
            monos = wedge_monomials(ssub, n)
            rows = []
            for m in monos:
                val = s.b_apply_wedge(n, m)
                rows.append({t: c for t, c in val.items()})
            img_rows.extend(rows)
            S_rows = _kernel_vectors(rows, monos, weight2)
            perp = _perp_in_poly(V, ssub, vname, monos, S_rows, n)
            relations.extend(perp)
        if weight2:
            basis, _ = row_space_basis(img_rows, weight2)
            if len(basis) < len(weight2):
                raise ValueError("structure is not generated in weight 1")
        return WeightedPresentation(COMM_ALG, V, relations,
                                    name=(s.name + "!") if s.name else "")

    if s.flavor == COMM:
        ssub = suspend_space(sub)
        W = GradedSpace()
        for e in W1:
            W.add(BasisElement(dual_name(e.name), -e.degree - 1, 1))
        wname = {e.name: dual_name(e.name) for e in W1}
        relations = []
        img_rows = []
        from .words import tensor_words, ShuffleQuotient
        for n in range(2, top + 1):
            words = tensor_words(ssub, n)
            if not words:
                continue
            by_deg: dict[int, list] = {}
            for wd in words:
                by_deg.setdefault(sum(ssub.degree(x) for x in wd), []).append(wd)
            reps, classes = [], {}
            for dg, ws in sorted(by_deg.items()):
                q = ShuffleQuotient(ssub, ws)
                reps.extend(q.representatives)
                classes.update({w: q._word_class[w] for w in ws})
            rows = []
            for r in reps:
                val = s.b_apply(n, r)
                rows.append(dict(val))
            img_rows.extend(rows)
            R_rows = _kernel_vectors(rows, reps, weight2)
            # orthogonal complement inside free Lie via the word pairing
            lie_words = lie_basis(W, n)
            exps = [lw.expand() for lw in lie_words]
            if not lie_words:
                continue
            mat = []
            for exp in exps:
                mat.append([_pair_lie_word_class(W, ssub, wname, exp, rvec)
                            for rvec in R_rows])
            null = _nullspace([[mat[i][j] for i in range(len(lie_words))]
                               for j in range(len(R_rows))] if R_rows else [],
                              len(lie_words))
            for coeffs in null:
                acc: Vector = {}
                for c, exp in zip(coeffs, exps):
                    if c:
                        acc = vec_addmul(acc, c, exp)
                if acc:
                    relations.append(acc)
        if weight2:
            basis, _ = row_space_basis(img_rows, weight2)
            if len(basis) < len(weight2):
                raise ValueError("structure is not generated in weight 1")
        return WeightedPresentation(LIE_ALG, W, relations,
                                    name=(s.name + "!") if s.name else "")
    raise ValueError("koszul_dual_infinity supports lie and comm flavors")


def _kernel_vectors(rows: list, keys_in, keys_out) -> list:
    """Kernel of the map sending basis key i to rows[i], as sparse vectors."""
    n = len(keys_in)
    mat = [[rows[i].get(k, Q(0)) for i in range(n)] for k in keys_out]
    null = _nullspace([[mat[r][j] for j in range(n)]
                       for r in range(len(keys_out))] if keys_out else [],
                      n)
    out = []
    for coeffs in null:
        v = {keys_in[i]: coeffs[i] for i in range(n) if coeffs[i]}
        if v:
            out.append(v)
    return out


def _perp_in_poly(V, ssub, vname, monos, S_rows, n) -> list:
    """Polynomial relations of weight n orthogonal to S under the
    multiset-diagonal pairing with multiplicity norms.

    An empty S means the whole polynomial slice is orthogonal (these are the
    relations dual to arities where the structure map is injective)."""
    poly_of = {}
    for m in monos:
        pm = tuple(sorted((vname[x] for x in m), key=V.index))
        poly_of[m] = pm
        # norm = wedge_norm(m) enters the pairing diagonally
    rows = []
    for svec in S_rows:
        rows.append([svec.get(m, Q(0)) * wedge_norm(m) *
                     word_pairing_sign([ssub.degree(x) for x in m],
                                       [ssub.degree(x) for x in m])
                     for m in monos])
    null = _nullspace(rows, len(monos))
    out = []
    for coeffs in null:
        acc: Vector = {}
        for c, m in zip(coeffs, monos):
            if c:
                acc = vec_addmul(acc, c, {poly_of[m]: Q(1)})
        if acc:
            out.append(acc)
    return out


def _pair_lie_word_class(W, ssub, wname, lie_exp: Vector, class_vec: Vector) -> Q:
    """Pair a free-Lie tensor expansion against a shuffle-quotient class."""
    dual = {wname[a]: a for a in wname}
    total = Q(0)
    for fword, cf in lie_exp.items():
        for xword, cx in class_vec.items():
            if len(fword) != len(xword):
                continue
            if tuple(dual[x] for x in fword) != xword:
                continue
            total += cf * cx * word_pairing_sign(
                [W.degree(x) for x in fword],
                [ssub.degree(x) for x in xword])
    return total


# --- bigraded model -------------------------------------------------------------

class BigradedModelReport:
    def __init__(self, exact: bool, dims, failing=None, augmentation_rank=None,
                 resolution_map=None):
        self.exact = exact
        self.dims = dims  # {(i, degree): dim}
        self.failing = failing
        self.augmentation_rank = augmentation_rank
        self.resolution_map = resolution_map or {}

    def __repr__(self):
        return f"BigradedModelReport(exact={self.exact}, dims={self.dims})"


def bigraded_model(s: InfinityStructure, min_degree: int,
                   max_arity: int | None = None) -> BigradedModelReport:
    """Resolution grading on coCE of a Koszul L-infinity algebra.

    Monomials of the Sullivan dual carry the level i = sum (weight - 1) over
    letters; d lowers i by exactly 1 and preserves u = (cohomological degree)
    + i, so each u-slice is an augmented complex

        ... -> (level 1) -> (level 0) -> L^! -> 0

    whose exactness is verified by ranks through the degree window.
    """
    from .dictionary import sullivan_from_linfty
    if s.flavor != LIE:
        raise ValueError("bigraded_model expects an L-infinity structure")
    model = sullivan_from_linfty(s)
    gens = model.generators
    wt = {e.name: (s.space.weight(e.name) or 1) for e in s.space}
    monos = monomials_up_to(gens, min_degree)
    level = {m: sum(wt[x] - 1 for x in m) for m in monos}
    dims: dict[tuple, int] = {}
    for m in monos:
        key = (level[m], -mono_degree(gens, m))
        dims[key] = dims.get(key, 0) + 1

    pres = koszul_dual_infinity(s, max_arity=max_arity, dual_name=lambda g: g)
    res_map = {m: model.d_poly({m: Q(1)}) for m in monos if level[m] == 1}

    # u-slices: u = cohomological degree + level is preserved from level i to
    # level i-1 composed with the degree +1 of d
    by_u: dict[int, dict[int, list]] = {}
    for m in monos:
        u = -mono_degree(gens, m) + level[m]
        by_u.setdefault(u, {}).setdefault(level[m], []).append(m)
    exact = True
    failing = None
    window_edge = -min_degree  # cohomological edge; slices touching it are cut
    for u, levels in sorted(by_u.items()):
        top = max(levels)
        # slice is complete if no monomial at its edge could continue out of
        # the window: conservatively require u + top < window edge
        if u > window_edge - 1:
            continue
        for i in range(1, top + 2):
            sources = levels.get(i, [])
            targets = levels.get(i - 1, [])
            img_rows = [model.d_poly({m: Q(1)}) for m in sources]
            img_rows = [r for r in img_rows if r]
            rank_img = 0
            if img_rows:
                keys = sorted({k for r in img_rows for k in r})
                rank_img = len(row_space_basis(img_rows, keys)[0])
            if i - 1 >= 1:
                dim_ker = 0
                if targets:
                    out_keys = sorted({k for m in targets
                                       for k in model.d_poly({m: Q(1)})})
                    mat = [[model.d_poly({m: Q(1)}).get(k, Q(0))
                            for m in targets] for k in out_keys]
                    from .linalg import rref
                    red, piv = rref(mat) if out_keys else ([], [])
                    dim_ker = len(targets) - len(piv)
                if dim_ker != rank_img:
                    exact = False
                    failing = failing or {"u": u, "level": i - 1,
                                          "kernel": dim_ker, "image": rank_img}
            else:
                # augmentation: kernel of (level 0) -> L^! is the ideal slice
                if not targets:
                    if rank_img:
                        exact = False
                        failing = failing or {"u": u, "level": 0,
                                              "kernel": 0, "image": rank_img}
                    continue
                w = sum(wt[x] for x in targets[0])
                monos_w, ideal, reps = comm_quotient_slice(pres, w)
                tset = set(targets)
                ideal_rows = [{m: c for m, c in r.items() if m in tset}
                              for r in ideal]
                ideal_rows = [r for r in ideal_rows if r]
                dim_ideal = 0
                if ideal_rows:
                    dim_ideal = len(row_space_basis(ideal_rows, targets)[0])
                if dim_ideal != rank_img:
                    exact = False
                    failing = failing or {"u": u, "level": 0,
                                          "kernel (ideal)": dim_ideal,
                                          "image": rank_img}
    return BigradedModelReport(exact, dims, failing, resolution_map=res_map)
