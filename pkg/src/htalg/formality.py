"""Formality and coformality certificates.

Three routes, used according to the flavor of the minimal input structure:

  (a) Koszulness of the homotopy-side structure for a weight grading
      (certifies formality up to the stated bound);
  (b) a staged search for an infinity-isomorphism with identity linear part
      onto the strict part of the structure: each arity stage is one exact
      linear solve (sound, not complete: general linear parts are not
      searched, and certificates say so);
  (c) for strict inputs, non-existence of a quadratic presentation, which
      rules out Koszulness for every weight grading and hence formality.

Inconclusive is a valid outcome.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

from .linalg import (GradedSpace, BasisElement, SparseMap, Q, Vector, vec_add,
                     vec_addmul, vec_scale, vec_eq, row_space_basis,
                     solve_in_span, rref)
from .words import (lie_basis, lie_bracket_vectors, sort_wedge, ShuffleQuotient,
                    tensor_words, Word)
from .structures import (InfinityStructure, LIE, COMM, words_in_degree_range,
                         wedges_in_degree_range, slice_basis)
from .morphisms import InfinityMorphism, check_morphism, identity_morphism
from .koszul import (koszul_check, KoszulCertificate, WeightedPresentation,
                     COMM_ALG, LIE_ALG, check_weight_homogeneous,
                     lie_quotient_slice)
from .dictionary import QuillenModel


class FormalityCertificate:
    def __init__(self, verdict: str, route: str = "", detail=None,
                 morphism: InfinityMorphism | None = None,
                 koszul: KoszulCertificate | None = None, note: str = ""):
        self.verdict = verdict  # Formal | FormalUpTo | NotFormal | Inconclusive
        self.route = route
        self.detail = detail
        self.morphism = morphism
        self.koszul = koszul
        self.note = note

    def __repr__(self):
        extra = f" [{self.route}]" if self.route else ""
        return f"FormalityCertificate({self.verdict}{extra}{': ' + self.note if self.note else ''})"


# --- weight inference ---------------------------------------------------------

def infer_weights(s: InfinityStructure) -> InfinityStructure | None:
    """Weight grading candidates when the user supplied none.

    Tries weight = |degree| / k for the k that makes some generator weight 1
    (the weight-equal-to-cohomological-degree case scaled), then all-weight-1.
    Returns a re-weighted copy whose operations are homogeneous, or None.
    """
    if all(e.weight is not None for e in s.space):
        return s
    degs = [abs(e.degree) for e in s.space]
    candidates = []
    if degs:
        k = min(degs)
        if k >= 1 and all(d % k == 0 for d in degs):
            candidates.append({e.name: abs(e.degree) // k for e in s.space})
    candidates.append({e.name: 1 for e in s.space})
    for cand in candidates:
        sp = GradedSpace()
        for e in s.space:
            sp.add(BasisElement(e.name, e.degree, cand[e.name]))
        try:
            s2 = InfinityStructure(s.flavor, sp,
                                   _remap_d(s, sp), s.ops, name=s.name)
        except ValueError:
            continue
        if check_weight_homogeneous(s2) is None:
            return s2
    return None


def _remap_d(s, sp):
    d = SparseMap(sp, sp, -1)
    for src, col in s.d.cols.items():
        for t, c in col.items():
            d.add_entry(t, src, c)
    return d


# --- quadratic presentation existence (strict graded Lie) ----------------------

def lie_quadraticity_report(s: InfinityStructure, max_weight: int = 4):
    """Does a strict graded Lie algebra admit a quadratic presentation?

    Presents L on its indecomposables and checks, through the weight bound,
    that the relation ideal is generated in bracket length two.  A failure
    weight with the extra relations' dimension is returned as a witness.
    """
    if s.flavor != LIE or any(k >= 3 for k in s.ops) or s.d.cols:
        raise ValueError("expected a strict minimal graded Lie algebra")
    tab = s.ops.get(2, {})
    names = s.space.names()
    # indecomposables: L / [L, L]
    bracket_img = []
    for (a, b), val in tab.items():
        bracket_img.append(dict(val))
    img_basis, _ = row_space_basis(bracket_img, names)
    pivots = {next(iter(sorted(v, key=s.space.index))) for v in img_basis}
    gens = [e for e in s.space if e.name not in pivots]
    W = GradedSpace()
    lift = {}
    for i, e in enumerate(gens):
        nm = f"w{i}"  # plain string names keep LieWord trees unambiguous
        W.add(BasisElement(nm, e.degree, 1))
        lift[nm] = {e.name: Q(1)}

    def bracket(u: Vector, v: Vector) -> Vector:
        out: Vector = {}
        for a, ca in u.items():
            for b, cb in v.items():
                val = tab.get((a, b))
                if val:
                    out = vec_addmul(out, ca * cb, val)
        return out

    # evaluate free-Lie basis words in L, weight by weight
    evals: dict[int, tuple] = {}
    maps: dict[tuple, Vector] = {}
    for w in range(1, max_weight + 1):
        basis = lie_basis(W, w)
        vals = []
        for lw in basis:
            vals.append(_eval_lie_word(lw.tree, lift, bracket))
        evals[w] = (basis, vals)

    # relation space J_w = kernel of FreeLie_w -> L; generated-by-J_2 check
    J2_rows = _kernel_rows(evals[2][1], names) if 2 in evals else []
    witness = None
    for w in range(3, max_weight + 1):
        basis, vals = evals[w]
        if not basis:
            continue
        Jw = _kernel_rows(vals, names)
        dim_Jw = len(Jw)
        # ideal generated by J_2 in weight w, inside free-Lie coordinates:
        # exact kernel comparison via quotient dims
        gen_rows = _ideal_from_quadratic(W, evals, J2_rows, w)
        dim_gen = len(row_space_basis(
            gen_rows, list(range(len(evals[w][0]))))[0]) if gen_rows else 0
        if dim_Jw != dim_gen:
            witness = {"weight": w, "relations": dim_Jw, "generated": dim_gen}
            break
    return witness  # None = quadratic through the bound


def _eval_lie_word(tree, lift, bracket) -> Vector:
    if not (isinstance(tree, tuple) and len(tree) == 2):
        return dict(lift[tree])
    left = _eval_lie_word(tree[0], lift, bracket)
    right = _eval_lie_word(tree[1], lift, bracket)
    return bracket(left, right)


def _kernel_rows(vals: list, keys) -> list:
    """Coefficient vectors (over basis indices) annihilated by the map."""
    n = len(vals)
    if n == 0:
        return []
    mat = [[vals[i].get(k, Q(0)) for i in range(n)] for k in keys]
    red, pivots = rref(mat) if keys else ([], [])
    out = []
    for j in range(n):
        if j in pivots:
            continue
        v = [Q(0)] * n
        v[j] = Q(1)
        for r, c in enumerate(pivots):
            if red[r][j]:
                v[c] = -red[r][j]
        out.append(v)
    return out


def _ideal_from_quadratic(W, evals, J2_rows, w):
    """Span of [generators, J-ideal] in free-Lie weight w, in coordinates of
    the weight-w basis (padded by the evaluation kernel structure)."""
    from .words import LieWord
    basis_w, vals_w = evals[w]
    exp_w = [lw.expand() for lw in basis_w]
    words_w = sorted({u for e in exp_w for u in e})
    # J_2 expansions
    basis2, _ = evals[2]
    exp2 = [lw.expand() for lw in basis2]
    J2_exp = []
    for row in J2_rows:
        acc: Vector = {}
        for c, e in zip(row, exp2):
            if c:
                acc = vec_addmul(acc, c, e)
        if acc:
            J2_exp.append(acc)
    # iterate ideal: I_2 = J2; I_k = [W, I_{k-1}]
    ideal = {2: J2_exp}
    for k in range(3, w + 1):
        rows = []
        for r in ideal[k - 1]:
            for g in W.names():
                br = lie_bracket_vectors({(g,): Q(1)}, r, W)
                if br:
                    rows.append(br)
        ideal[k] = rows
    out = []
    for r in ideal.get(w, []):
        sol = solve_in_span(exp_w, r, words_w)
        if sol is None:
            raise AssertionError("ideal element left the free Lie span")
        out.append({i: c for i, c in enumerate(sol) if c})
    return out


def comm_quadraticity_report(s: InfinityStructure, max_weight: int = 4):
    """Does a strict graded commutative algebra admit a quadratic presentation?

    Mirrors lie_quadraticity_report: presents A on its indecomposables and
    compares the relation ideal with the ideal generated by its weight-2
    part, through the weight bound.
    """
    from .dictionary import mono_mul, poly_mul
    if s.flavor != COMM or any(k >= 3 for k in s.ops) or s.d.cols:
        raise ValueError("expected a strict minimal commutative algebra")
    tab = s.ops.get(2, {})
    names = s.space.names()
    prod_img = [dict(v) for v in tab.values()]
    img_basis, _ = row_space_basis(prod_img, names)
    pivots = {next(iter(sorted(v, key=s.space.index))) for v in img_basis}
    gens = [e for e in s.space if e.name not in pivots]
    V = GradedSpace()
    lift = {}
    for i, e in enumerate(gens):
        nm = f"v{i}"
        V.add(BasisElement(nm, e.degree, 1))
        lift[nm] = {e.name: Q(1)}

    def mul(u: Vector, v: Vector) -> Vector:
        out: Vector = {}
        for a, ca in u.items():
            for b, cb in v.items():
                val = tab.get((a, b))
                if val:
                    out = vec_addmul(out, ca * cb, val)
        return out

    # evaluate monomials of Lambda(V) in A, weight by weight
    from .koszul import _comm_weight_slice, WeightedPresentation as WP, COMM_ALG as CA
    pres_all = WP(CA, V, [])
    evals: dict[int, tuple] = {}
    for w in range(1, max_weight + 1):
        monos = _comm_weight_slice(pres_all, w)
        vals = []
        for m in monos:
            cur: Vector | None = None
            for x in m:
                cur = dict(lift[x]) if cur is None else mul(cur, lift[x])
            vals.append(cur or {})
        evals[w] = (monos, vals)

    mono2, vals2 = evals[2]
    J2_rows = _kernel_rows(vals2, names)
    J2 = []
    for row in J2_rows:
        acc: Vector = {}
        for c, m in zip(row, mono2):
            if c:
                acc[m] = c
        if acc:
            J2.append(acc)
    witness = None
    for w in range(3, max_weight + 1):
        monos, vals = evals[w]
        if not monos:
            continue
        Jw = _kernel_rows(vals, names)
        dim_Jw = len(Jw)
        gen_rows = []
        for r in J2:
            for m in _comm_weight_slice(pres_all, w - 2):
                pr = poly_mul(V, {m: Q(1)}, r)
                if pr:
                    gen_rows.append([pr.get(mm, Q(0)) for mm in monos])
        dim_gen = len(row_space_basis(
            [{i: c for i, c in enumerate(r) if c} for r in gen_rows],
            list(range(len(monos))))[0]) if gen_rows else 0
        if dim_Jw != dim_gen:
            witness = {"weight": w, "relations": dim_Jw, "generated": dim_gen}
            break
    return witness


# --- staged iso-to-strict search ------------------------------------------------

class IsoSearchResult:
    def __init__(self, found: bool, morphism=None, obstruction=None):
        self.found = found
        self.morphism = morphism
        self.obstruction = obstruction


def strict_part(s: InfinityStructure) -> InfinityStructure:
    ops = {2: s.ops[2]} if 2 in s.ops else {}
    return InfinityStructure(s.flavor, s.space, s.d, ops,
                             name=(s.name + "|strict") if s.name else "")


def morphism_defect(phi: InfinityMorphism, word: Word) -> Vector:
    """Weight-1 corestriction of F D - D' F at one bar word."""
    from .structures import coderivation_apply
    s, t = phi.source, phi.target
    lhs: Vector = {}
    for w2, c in coderivation_apply(s, word).items():
        for w3, c3 in phi.extend(w2).items():
            if len(w3) == 1:
                lhs = vec_addmul(lhs, c * c3, {w3[0]: Q(1)})
    rhs: Vector = {}
    for w2, c in phi.extend(word).items():
        for w3, c3 in coderivation_apply(t, w2).items():
            if len(w3) == 1:
                rhs = vec_addmul(rhs, c * c3, {w3[0]: Q(1)})
    return vec_add(lhs, vec_scale(-1, rhs))


class _shuffle_reducer:
    """Representatives of tensor slices modulo suspended shuffles."""

    def __init__(self, sA, length):
        degs = [e.degree for e in sA.elements]
        lo = min(degs) * length if degs else 0
        hi = max(degs) * length if degs else 0
        words = words_in_degree_range(sA, length, min(lo, hi), max(lo, hi))
        by_deg = {}
        for w in words:
            by_deg.setdefault(sum(sA.degree(x) for x in w), []).append(w)
        self.quots = {d: ShuffleQuotient(sA, ws)
                      for d, ws in sorted(by_deg.items())}
        self.representatives = [r for d in sorted(self.quots)
                                for r in self.quots[d].representatives]

    def reduce_word(self, w):
        for q in self.quots.values():
            if w in q._word_class:
                return q._word_class[w]
        raise KeyError(w)


def iso_to_strict_search(s: InfinityStructure, max_stage: int | None = None) -> IsoSearchResult:
    """Find an infinity-isomorphism s -> strict_part(s) with identity f_1.

    Stage N solves the weight-N morphism equations for the arity N-1
    component; each stage is one exact linear solve.  Flavor constraints are
    built in: comm components are solved on shuffle-quotient representatives
    and lifted, lie components on sorted monomials and symmetrized.
    Inconsistency is reported as an obstruction (the search fixes f_1 = id,
    so failure does not prove non-formality).
    """
    from .structures import unsuspend_op, suspend_op
    if s.d.cols:
        raise ValueError("iso search expects a minimal structure")
    t = strict_part(s)
    top = max_stage if max_stage is not None else 2 * s.arity_bound
    sA = s.sspace
    degs = [e.degree for e in sA.elements]
    lo, hi = (min(degs), max(degs)) if degs else (0, 0)
    comps: dict[int, dict] = {1: {(e.name,): {e.name: Q(1)} for e in s.space}}

    def suspended_from_assign(N1, assign, reducer):
        tab: dict = {}
        if s.flavor == COMM:
            full = {}
            for word in words_in_degree_range(sA, N1, lo * N1, hi * N1):
                red = reducer.reduce_word(word)
                acc: Vector = {}
                for r, c in red.items():
                    for (u, tt), coeff in assign.items():
                        if u == r and coeff:
                            acc = vec_addmul(acc, c * coeff, {tt: Q(1)})
                if acc:
                    full[word] = acc
            return full
        if s.flavor == LIE:
            base: dict = {}
            for (u, tt), coeff in assign.items():
                base.setdefault(u, {})[tt] = coeff
            full = {}
            for xi, val in base.items():
                for perm_word in set(itertools.permutations(xi)):
                    srt = sort_wedge(perm_word, sA)
                    if srt is None or srt[0] != xi:
                        continue
                    full[perm_word] = vec_scale(srt[1], val)
            return full
        for (u, tt), coeff in assign.items():
            tab.setdefault(u, {})[tt] = coeff
        return tab

    for N in range(3, top + 1):
        # the defect is a degree -1 operator into single letters
        keys = slice_basis(s, N, lo=lo + 1, hi=hi + 1)
        if not keys:
            continue
        if s.flavor == COMM:
            reducer = _shuffle_reducer(sA, N - 1)
            var_words = [u for u in reducer.representatives
                         if lo <= sum(sA.degree(x) for x in u) <= hi]
        elif s.flavor == LIE:
            reducer = None
            var_words = wedges_in_degree_range(sA, N - 1, lo, hi)
        else:
            reducer = None
            var_words = words_in_degree_range(sA, N - 1, lo, hi)
        variables = []
        for u in var_words:
            du = sum(sA.degree(x) for x in u)
            for e in sA.elements:
                if e.degree == du:
                    variables.append((u, e.name))

        def defect_with(assign):
            probe = {k: comps[k] for k in comps}
            stab = suspended_from_assign(N - 1, assign, reducer)
            if stab:
                un = unsuspend_op(s.space, N - 1, stab)
                if un:
                    merged = dict(probe.get(N - 1, {}))
                    for w0, v0 in un.items():
                        merged[w0] = vec_add(merged.get(w0, {}), v0)
                    probe[N - 1] = merged
            mor = InfinityMorphism(s, t, probe)
            return {w: morphism_defect(mor, w) for w in keys}

        consts = defect_with({})
        cols = []
        for var in variables:
            dv = defect_with({var: Q(1)})
            col = {}
            for w in keys:
                diff = vec_add(dv[w], vec_scale(-1, consts[w]))
                for tt, c in diff.items():
                    if c:
                        col[(w, tt)] = c
            cols.append(col)
        rhs = {}
        for w in keys:
            for tt, c in consts[w].items():
                if c:
                    rhs[(w, tt)] = -c
        if not rhs:
            continue
        all_keys = sorted(set(rhs) | {k for col in cols for k in col}, key=str)
        sol = solve_in_span(cols, rhs, all_keys)
        if sol is None:
            return IsoSearchResult(False, obstruction={
                "stage": N,
                "defect": {w: consts[w] for w in keys if consts[w]}})
        assign = {var: c for var, c in zip(variables, sol) if c}
        stab = suspended_from_assign(N - 1, assign, reducer)
        if stab:
            un = unsuspend_op(s.space, N - 1, stab)
            if un:
                merged = dict(comps.get(N - 1, {}))
                for w0, v0 in un.items():
                    merged[w0] = vec_add(merged.get(w0, {}), v0)
                comps[N - 1] = {w0: {k: c for k, c in v0.items() if c}
                                for w0, v0 in merged.items()}
                comps[N - 1] = {w0: v0 for w0, v0 in comps[N - 1].items() if v0}
    mor = InfinityMorphism(s, t, comps, name="formality-iso")
    rep = check_morphism(mor)
    if not rep.ok:
        raise AssertionError("internal error: staged solution fails the "
                             "morphism equations: " + rep.violations[0])
    return IsoSearchResult(True, morphism=mor)


# --- public checks ---------------------------------------------------------------

def formality_check(s: InfinityStructure, max_weight: int = 4) -> FormalityCertificate:
    """Formality of the space modeled by a minimal structure.

    Lie flavor (homotopy side): formal iff the structure is Koszul; route (a)
    tries the available weight grading, route (c) rules out quadratic
    presentations for strict inputs.  Comm flavor (cohomology side): route
    (b) searches for an infinity-isomorphism onto the strict part with
    identity linear part.
    """
    if s.d.cols:
        raise ValueError("formality_check expects a minimal structure")
    if s.flavor == LIE:
        if not any(s.ops.get(k) for k in s.ops if k >= 3):
            witness = lie_quadraticity_report(s, max_weight)
            if witness is not None:
                return FormalityCertificate(
                    "NotFormal", route="quadratic-presentation",
                    detail=witness,
                    note="homotopy Lie algebra admits no quadratic "
                         "presentation, hence is not Koszul")
        sw = infer_weights(s)
        if sw is None:
            return FormalityCertificate(
                "Inconclusive", note="no weight grading found; supply weights")
        cert = koszul_check(sw, max_weight)
        if cert.koszul:
            return FormalityCertificate("FormalUpTo", route="koszul",
                                        koszul=cert,
                                        note=f"Koszul through weight {max_weight}")
        return FormalityCertificate(
            "Inconclusive", route="koszul", koszul=cert,
            note="inferred weight grading is not Koszul; other gradings "
                 "not excluded for non-strict input")
    if s.flavor == COMM:
        res = iso_to_strict_search(s)
        if res.found:
            return FormalityCertificate("Formal", route="iso-search",
                                        morphism=res.morphism)
        return FormalityCertificate(
            "Inconclusive", route="iso-search", detail=res.obstruction,
            note="staged solve with identity linear part failed; general "
                 "linear parts not searched")
    raise ValueError("formality_check supports lie and comm flavors")


def coformality_check(s: InfinityStructure, max_weight: int = 4) -> FormalityCertificate:
    """Coformality: mirror of formality_check with the roles swapped.

    Comm flavor (cohomology side): coformal iff the C-infinity structure is
    Koszul.  Lie flavor (homotopy side): coformal iff infinity-isomorphic to
    a strict dg Lie algebra, searched with identity linear part.
    """
    if s.d.cols:
        raise ValueError("coformality_check expects a minimal structure")
    if s.flavor == COMM:
        if not any(s.ops.get(k) for k in s.ops if k >= 3):
            witness = comm_quadraticity_report(s, max_weight)
            if witness is not None:
                return FormalityCertificate(
                    "NotFormal", route="quadratic-presentation", detail=witness,
                    note="cohomology algebra admits no quadratic "
                         "presentation, hence is not Koszul")
        sw = infer_weights(s)
        if sw is None:
            return FormalityCertificate(
                "Inconclusive", note="no weight grading found; supply weights")
        cert = koszul_check(sw, max_weight)
        if cert.koszul:
            return FormalityCertificate("FormalUpTo", route="koszul",
                                        koszul=cert,
                                        note=f"Koszul through weight {max_weight}")
        return FormalityCertificate("Inconclusive", route="koszul", koszul=cert)
    if s.flavor == LIE:
        res = iso_to_strict_search(s)
        if res.found:
            return FormalityCertificate("Formal", route="iso-search",
                                        morphism=res.morphism)
        return FormalityCertificate(
            "Inconclusive", route="iso-search", detail=res.obstruction)
    raise ValueError("coformality_check supports lie and comm flavors")


# --- strict Quillen-model isomorphism search (wedge example) ----------------------

def quillen_iso_search(q1: QuillenModel, q2: QuillenModel,
                       max_weight: int = 4):
    """A dg Lie isomorphism (L V, delta_1) -> (L V, delta_2) fixing linear parts.

    phi(g) = g + corrections of bracket length w, solved stage by stage: the
    stage-w unknowns kill the defect components of word length w + 1.
    Returns the generator image table, or None.
    """
    V = q1.generators
    if V.names() != q2.generators.names():
        raise ValueError("models must share generators")
    phi = {g: {(g,): Q(1)} for g in V.names()}

    def substitute(vec: Vector) -> Vector:
        out: Vector = {}
        for word, c in vec.items():
            acc = {(): c}
            for x in word:
                new = {}
                for w0, c0 in acc.items():
                    for w1, c1 in phi[x].items():
                        new[w0 + w1] = new.get(w0 + w1, Q(0)) + c0 * c1
                acc = new
            for w0, c0 in acc.items():
                out[w0] = out.get(w0, Q(0)) + c0
        return {k: v for k, v in out.items() if v}

    def defects():
        out = {}
        for g in V.names():
            lhs = substitute(q1.delta.get(g, {}))
            rhs = q2.delta_vector(phi[g])
            dv = vec_add(lhs, vec_scale(-1, rhs))
            if dv:
                out[g] = dv
        return out

    for w in range(2, max_weight + 1):
        dfs = defects()
        staged = {g: {k: c for k, c in dv.items() if len(k) == w + 1}
                  for g, dv in dfs.items()}
        staged = {g: dv for g, dv in staged.items() if dv}
        if not staged and not dfs:
            break
        if not staged:
            continue
        basis = lie_basis(V, w)
        exps = [lw.expand() for lw in basis]
        variables = []
        for g in V.names():
            for i, lw in enumerate(basis):
                if lw.degree == V.degree(g):
                    variables.append((g, i))
        cols = []
        for (g, i) in variables:
            exp = exps[i]
            col = {}
            # phi delta_1 side: substitute the correction for letter g
            for g2 in V.names():
                for word, c in q1.delta.get(g2, {}).items():
                    for pos, x in enumerate(word):
                        if x != g:
                            continue
                        acc = {(): c}
                        parts = [phi[y] for y in word[:pos]] + [exp] + \
                                [phi[y] for y in word[pos + 1:]]
                        for tvec in parts:
                            new = {}
                            for w0, c0 in acc.items():
                                for w1, c1 in tvec.items():
                                    new[w0 + w1] = new.get(w0 + w1, Q(0)) + c0 * c1
                            acc = new
                        for w0, c0 in acc.items():
                            if c0 and len(w0) == w + 1:
                                col[(g2, w0)] = col.get((g2, w0), Q(0)) + c0
            # delta_2 phi side
            for w0, c0 in q2.delta_vector(exp).items():
                if c0 and len(w0) == w + 1:
                    col[(g, w0)] = col.get((g, w0), Q(0)) - c0
            cols.append(col)
        rhs = {}
        for g, dv in staged.items():
            for w0, c in dv.items():
                rhs[(g, w0)] = -c
        keys = sorted(set(rhs) | {k for col in cols for k in col}, key=str)
        sol = solve_in_span(cols, rhs, keys)
        if sol is None:
            return None
        for (g, i), c in zip(variables, sol):
            if c:
                phi[g] = vec_add(phi[g], vec_scale(c, exps[i]))
    return phi if not defects() else None
