"""Exact rational graded linear algebra.

Everything here works over Q with `fractions.Fraction`; no floats anywhere.
Vectors are sparse dicts mapping basis keys to nonzero Fractions.  Basis keys
are arbitrary hashables (strings for generators, tuples for tensor words).
All elimination is deterministic: pivots are chosen at the first nonzero
entry in (row, column) order, rows and columns being listed in the order the
ambient graded space lists its basis (degree slices keep insertion order).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Iterable, Sequence

Q = Fraction
Key = Hashable
Vector = dict  # Key -> Fraction, zero entries never stored


def vec(*pairs) -> Vector:
    return {k: Q(c) for k, c in pairs if c}


def vec_add(u: Vector, v: Vector) -> Vector:
    out = dict(u)
    for k, c in v.items():
        s = out.get(k, 0) + c
        if s:
            out[k] = s
        else:
            out.pop(k, None)
    return out


def vec_scale(c, v: Vector) -> Vector:
    c = Q(c)
    if not c:
        return {}
    return {k: c * x for k, x in v.items()}


def vec_addmul(u: Vector, c, v: Vector) -> Vector:
    return vec_add(u, vec_scale(c, v)) if c else dict(u)


def vec_eq(u: Vector, v: Vector) -> bool:
    return all(v.get(k, 0) == c for k, c in u.items()) and all(
        u.get(k, 0) == c for k, c in v.items())


@dataclass(frozen=True)
class BasisElement:
    name: Key
    degree: int
    weight: int | None = None

    def __repr__(self):
        w = f" w{self.weight}" if self.weight is not None else ""
        return f"<{self.name}:{self.degree}{w}>"


class GradedSpace:
    """Finite ordered basis of named elements with homological degrees.

    Names must be unique.  The global element order is the insertion order;
    degree slices list elements in that same order.
    """

    def __init__(self, elements: Iterable[BasisElement] = ()):
        self.elements: list[BasisElement] = []
        self._index: dict[Key, int] = {}
        for e in elements:
            self.add(e)

    def add(self, e: BasisElement):
        if e.name in self._index:
            raise ValueError(f"duplicate basis name {e.name!r}")
        self._index[e.name] = len(self.elements)
        self.elements.append(e)
        return e

    @classmethod
    def of(cls, *triples) -> "GradedSpace":
        """Build from (name, degree) or (name, degree, weight) tuples."""
        sp = cls()
        for t in triples:
            sp.add(BasisElement(*t))
        return sp

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __contains__(self, name: Key):
        return name in self._index

    def names(self) -> list[Key]:
        return [e.name for e in self.elements]

    def degree(self, name: Key) -> int:
        return self.elements[self._index[name]].degree

    def weight(self, name: Key) -> int | None:
        return self.elements[self._index[name]].weight

    def index(self, name: Key) -> int:
        return self._index[name]

    def slice(self, degree: int) -> list[BasisElement]:
        return [e for e in self.elements if e.degree == degree]

    def degrees(self) -> list[int]:
        return sorted({e.degree for e in self.elements})

    def dim(self, degree: int | None = None) -> int:
        if degree is None:
            return len(self.elements)
        return len(self.slice(degree))

    def vector_degree(self, v: Vector) -> int | None:
        """Degree of a homogeneous vector; None for 0; error if mixed."""
        degs = {self.degree(k) for k in v}
        if not degs:
            return None
        if len(degs) > 1:
            raise ValueError(f"inhomogeneous vector, degrees {sorted(degs)}")
        return degs.pop()


class SparseMap:
    """Degree-homogeneous linear map between graded spaces.

    Stored column-wise: ``cols[source_name] = {target_name: coeff}``.  Every
    entry must connect elements with target degree = source degree + degree.
    """

    def __init__(self, source: GradedSpace, target: GradedSpace, degree: int,
                 cols: dict | None = None, check: bool = True):
        self.source = source
        self.target = target
        self.degree = degree
        self.cols: dict[Key, Vector] = {}
        if cols:
            for s, col in cols.items():
                for t, c in col.items():
                    self.set(t, s, c, check=check)

    def set(self, t: Key, s: Key, c, check: bool = True):
        c = Q(c)
        col = self.cols.setdefault(s, {})
        if check:
            if s not in self.source._index:
                raise KeyError(f"unknown source element {s!r}")
            if t not in self.target._index:
                raise KeyError(f"unknown target element {t!r}")
            if self.target.degree(t) != self.source.degree(s) + self.degree:
                raise ValueError(
                    f"entry ({t!r},{s!r}) violates degree shift {self.degree}")
        if c:
            col[t] = c
        else:
            col.pop(t, None)
        if not col:
            self.cols.pop(s, None)

    def add_entry(self, t: Key, s: Key, c):
        self.set(t, s, self.entry(t, s) + Q(c))

    def entry(self, t: Key, s: Key) -> Q:
        return self.cols.get(s, {}).get(t, Q(0))

    def column(self, s: Key) -> Vector:
        return dict(self.cols.get(s, {}))

    def apply(self, v: Vector) -> Vector:
        out: Vector = {}
        for s, c in v.items():
            for t, x in self.cols.get(s, {}).items():
                acc = out.get(t, 0) + c * x
                if acc:
                    out[t] = acc
                else:
                    out.pop(t, None)
        return out

    def __call__(self, v: Vector) -> Vector:
        return self.apply(v)

    def compose(self, other: "SparseMap") -> "SparseMap":
        """self after other (self.source must be other.target)."""
        if other.target is not self.source and other.target.names() != self.source.names():
            raise ValueError("composition mismatch")
        out = SparseMap(other.source, self.target, self.degree + other.degree)
        for s, col in other.cols.items():
            img = self.apply(col)
            for t, c in img.items():
                out.add_entry(t, s, c)
        return out

    def add(self, other: "SparseMap") -> "SparseMap":
        if self.degree != other.degree:
            raise ValueError("degree mismatch in sum")
        out = SparseMap(self.source, self.target, self.degree)
        for m in (self, other):
            for s, col in m.cols.items():
                for t, c in col.items():
                    out.add_entry(t, s, c)
        return out

    def scale(self, c) -> "SparseMap":
        out = SparseMap(self.source, self.target, self.degree)
        for s, col in self.cols.items():
            for t, x in col.items():
                out.set(t, s, Q(c) * x)
        return out

    def is_zero(self) -> bool:
        return not self.cols

    @classmethod
    def identity(cls, space: GradedSpace) -> "SparseMap":
        m = cls(space, space, 0)
        for e in space:
            m.set(e.name, e.name, 1)
        return m

    @classmethod
    def zero(cls, source: GradedSpace, target: GradedSpace, degree: int) -> "SparseMap":
        return cls(source, target, degree)

    def transpose_entries(self):
        """Iterate (target, source, coeff)."""
        for s, col in self.cols.items():
            for t, c in col.items():
                yield t, s, c


# --- elimination ----------------------------------------------------------

def rref(rows: list[list[Q]]):
    """Reduced row echelon form over Q, first-nonzero pivoting.

    Returns (rref_rows, pivot_columns).  Input rows are not modified.
    """
    m = [list(map(Q, r)) for r in rows]
    nrows = len(m)
    ncols = len(m[0]) if m else 0
    pivots = []
    r = 0
    for c in range(ncols):
        pr = next((i for i in range(r, nrows) if m[i][c]), None)
        if pr is None:
            continue
        m[r], m[pr] = m[pr], m[r]
        pv = m[r][c]
        m[r] = [x / pv for x in m[r]]
        for i in range(nrows):
            if i != r and m[i][c]:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return m, pivots


def row_space_basis(rows: list[Vector], keys: Sequence[Key]):
    """RREF basis of the span of sparse vectors in the given coordinate order.

    Returns (basis_rows, pivots) with basis_rows as sparse vectors.
    """
    dense = [[v.get(k, Q(0)) for k in keys] for v in rows]
    red, pivots = rref(dense)
    out = []
    for i in range(len(pivots)):
        out.append({k: red[i][j] for j, k in enumerate(keys) if red[i][j]})
    return out, pivots


def solve_in_span(span_rows: list[Vector], target: Vector, keys: Sequence[Key]):
    """Coefficients expressing target in the span, or None.

    Deterministic least-index solution (free coefficients set to 0).
    """
    # Solve A^T x = target where rows of A are the span vectors.
    cols = list(keys)
    n = len(span_rows)
    aug = [[span_rows[i].get(k, Q(0)) for i in range(n)] + [target.get(k, Q(0))]
           for k in cols]
    red, pivots = rref(aug)
    if n in pivots:  # pivot in augmented column: inconsistent
        return None
    sol = [Q(0)] * n
    for r, c in enumerate(pivots):
        sol[c] = red[r][n]
    return sol


class MatrixData:
    """Dense matrix view of a SparseMap between two basis lists."""

    def __init__(self, m: SparseMap, src_keys: Sequence[Key], tgt_keys: Sequence[Key]):
        self.src_keys = list(src_keys)
        self.tgt_keys = list(tgt_keys)
        self.rows = [[m.entry(t, s) for s in self.src_keys] for t in self.tgt_keys]


def rank_kernel(m: SparseMap):
    """Rank, kernel basis and image basis of a sparse map, exactly.

    Works blockwise per source degree (the map is degree homogeneous so
    distinct degrees are independent).  Kernel vectors are reduced
    deterministically; image vectors are the images of the pivot columns.
    """
    kernel: list[Vector] = []
    image: list[Vector] = []
    rank = 0
    for deg in m.source.degrees():
        src = [e.name for e in m.source.slice(deg)]
        tgt = [e.name for e in m.target.slice(deg + m.degree)]
        if not src:
            continue
        cols = [[m.entry(t, s) for s in src] for t in tgt]
        if not tgt:
            cols = [[Q(0)] * len(src)]
        red, pivots = rref(cols)
        rank += len(pivots)
        for s in pivots:
            image.append(m.column(src[s]))
        free = [j for j in range(len(src)) if j not in pivots]
        for j in free:
            v = {src[j]: Q(1)}
            for r, c in enumerate(pivots):
                if red[r][j]:
                    v[src[c]] = -red[r][j]
            kernel.append(v)
    return rank, kernel, image


def bareiss_rank(rows: list[list[int]]) -> int:
    """Fraction-free Gaussian elimination rank over the integers (Bareiss).

    Independent cross-check route for rank computations: scale rational rows
    to integers first.  Pivoting rule matches rref: first nonzero in
    (row, column) order.
    """
    m = [list(r) for r in rows]
    nrows, ncols = len(m), len(m[0]) if m else 0
    prev = 1
    r = 0
    for c in range(ncols):
        pr = next((i for i in range(r, nrows) if m[i][c]), None)
        if pr is None:
            continue
        m[r], m[pr] = m[pr], m[r]
        for i in range(r + 1, nrows):
            for j in range(c + 1, ncols):
                m[i][j] = (m[r][c] * m[i][j] - m[i][c] * m[r][j]) // prev
            m[i][c] = 0
        prev = m[r][c]
        r += 1
        if r == nrows:
            break
    return r


class Complex:
    """Chain complex: graded space with a degree -1 differential, d*d = 0."""

    def __init__(self, space: GradedSpace, d: SparseMap | None = None, check: bool = True):
        self.space = space
        self.d = d if d is not None else SparseMap(space, space, -1)
        if self.d.degree != -1:
            raise ValueError("differential must have degree -1")
        if check:
            self.check()

    def check(self):
        for e in self.space:
            v = self.d.apply(self.d.column(e.name))
            if v:
                raise ValueError(f"d^2 != 0 on {e.name!r}: {v}")

    def cycles(self, degree: int) -> list[Vector]:
        slice_space = GradedSpace(self.space.slice(degree))
        restricted = SparseMap(slice_space, self.space, -1, check=False)
        for e in slice_space:
            for t, c in self.d.column(e.name).items():
                restricted.set(t, e.name, c, check=False)
        _, kernel, _ = rank_kernel(restricted)
        return kernel

    def boundaries(self, degree: int) -> list[Vector]:
        out = []
        for e in self.space.slice(degree + 1):
            col = self.d.column(e.name)
            if col:
                out.append(col)
        keys = [e.name for e in self.space.slice(degree)]
        basis, _ = row_space_basis(out, keys)
        return basis

    def homology(self, degree: int):
        """GradedSpace of homology classes plus representing cycles."""
        keys = [e.name for e in self.space.slice(degree)]
        cyc = self.cycles(degree)
        bnd = self.boundaries(degree)
        bnd_basis, bnd_pivots = row_space_basis(bnd, keys)
        reps = []
        span = list(bnd_basis)
        span_pivots = list(bnd_pivots)
        for v in cyc:
            red = _reduce_against(v, span, span_pivots, keys)
            if red:
                reps.append(v)
                _append_reduced(red, span, span_pivots, keys)
        hs = GradedSpace()
        for i, _ in enumerate(reps):
            hs.add(BasisElement(("H", degree, i), degree))
        return hs, reps


def _reduce_against(v: Vector, span: list[Vector], pivots: list[int], keys):
    out = dict(v)
    for row, p in zip(span, pivots):
        c = out.get(keys[p], 0)
        if c:
            out = vec_addmul(out, -c, row)
    return out


def _append_reduced(red: Vector, span: list[Vector], pivots: list[int], keys):
    lead = next(i for i, k in enumerate(keys) if red.get(k))
    c = red[keys[lead]]
    red = vec_scale(1 / c, red)
    span.append(red)
    pivots.append(lead)
    order = sorted(range(len(span)), key=lambda i: pivots[i])
    span[:] = [span[i] for i in order]
    pivots[:] = [pivots[i] for i in order]


def homology(c: Complex, degree: int):
    return c.homology(degree)


def total_homology(c: Complex):
    """Dict degree -> (space, representatives) over all populated degrees."""
    return {deg: c.homology(deg) for deg in c.space.degrees()}


class Contraction:
    """Contraction (f, g, h) of ``big`` onto ``small``.

    Invariants: fg = id, gf = id + dh + hd, fh = 0, hg = 0, hh = 0.
    """

    def __init__(self, big: Complex, small: Complex, f: SparseMap, g: SparseMap,
                 h: SparseMap, check: bool = True):
        self.big = big
        self.small = small
        self.f = f
        self.g = g
        self.h = h
        if check:
            errs = self.side_condition_errors()
            if errs:
                raise ValueError("contraction conditions fail: " + "; ".join(errs))

    def side_condition_errors(self) -> list[str]:
        errs = []
        f, g, h = self.f, self.g, self.h
        db, ds = self.big.d, self.small.d
        for e in self.small.space:
            v = f.apply(g.column(e.name))
            if not vec_eq(v, {e.name: Q(1)}):
                errs.append(f"fg != id at {e.name!r}")
        for e in self.big.space:
            x = {e.name: Q(1)}
            lhs = g.apply(f.apply(x))
            rhs = vec_add(x, vec_add(db.apply(h.apply(x)), h.apply(db.apply(x))))
            if not vec_eq(lhs, rhs):
                errs.append(f"gf != id + dh + hd at {e.name!r}")
            if f.apply(h.apply(x)):
                errs.append(f"fh != 0 at {e.name!r}")
            if h.apply(h.apply(x)):
                errs.append(f"hh != 0 at {e.name!r}")
            # chain map conditions
            if not vec_eq(f.apply(db.apply(x)), ds.apply(f.apply(x))):
                errs.append(f"f not chain map at {e.name!r}")
        for e in self.small.space:
            x = {e.name: Q(1)}
            if h.apply(self.g.apply(x)):
                errs.append(f"hg != 0 at {e.name!r}")
            if not vec_eq(self.g.apply(self.small.d.apply(x)),
                          db.apply(self.g.apply(x))):
                errs.append(f"g not chain map at {e.name!r}")
        return errs


def build_contraction(c: Complex, name_prefix: str = "H") -> Contraction:
    """Deterministic contraction of a complex onto its homology.

    Per degree n the basis splits as boundaries + homology representatives +
    a complement mapping isomorphically onto boundaries one degree down; f
    projects, g includes the representatives, h inverts d on boundaries with
    the sign forced by gf - id = dh + hd.
    """
    small = GradedSpace()
    reps: dict[Key, Vector] = {}
    # decompose each degree
    degrees = c.space.degrees()
    f = None
    # First pass: pick boundaries-basis with preimages, homology reps, complements.
    decomp = {}
    for deg in degrees:
        keys = [e.name for e in c.space.slice(deg)]
        # boundary vectors with preimages
        pre = [(e.name, c.d.column(e.name)) for e in c.space.slice(deg + 1)
               if c.d.column(e.name)]
        bnd_span: list[Vector] = []
        bnd_pivots: list[int] = []
        bnd_pre: list[Vector] = []  # preimage combination for each reduced boundary row
        for src, v in pre:
            red = _reduce_against(v, bnd_span, bnd_pivots, keys)
            if red:
                # track preimage through the reduction
                pvec = {src: Q(1)}
                acc = dict(v)
                for row, p, rp in zip(list(bnd_span), list(bnd_pivots), list(bnd_pre)):
                    coef = acc.get(keys[p], 0)
                    if coef:
                        acc = vec_addmul(acc, -coef, row)
                        pvec = vec_addmul(pvec, -coef, rp)
                lead = next(i for i, k in enumerate(keys) if acc.get(k))
                cc = acc[keys[lead]]
                acc = vec_scale(1 / cc, acc)
                pvec = vec_scale(1 / cc, pvec)
                pos = sum(1 for p in bnd_pivots if p < lead)
                bnd_span.insert(pos, acc)
                bnd_pivots.insert(pos, lead)
                bnd_pre.insert(pos, pvec)
        cyc = c.cycles(deg)
        h_reps = []
        span = list(bnd_span)
        pivots = list(bnd_pivots)
        for v in cyc:
            red = _reduce_against(v, span, pivots, keys)
            if red:
                h_reps.append(v)
                _append_reduced(red, span, pivots, keys)
        decomp[deg] = (keys, bnd_span, bnd_pivots, bnd_pre, h_reps)

    for deg in degrees:
        keys, bnd_span, bnd_pivots, bnd_pre, h_reps = decomp[deg]
        for i, v in enumerate(h_reps):
            nm = (name_prefix, deg, i)
            small.add(BasisElement(nm, deg))
            reps[nm] = v

    small_cx = Complex(small, SparseMap(small, small, -1))
    f = SparseMap(c.space, small, 0)
    g = SparseMap(small, c.space, 0)
    h = SparseMap(c.space, c.space, +1)

    for deg in degrees:
        keys, bnd_span, bnd_pivots, bnd_pre, h_reps = decomp[deg]
        small_names = [e.name for e in small.slice(deg)]
        # adapted basis: boundaries, then homology reps, then complements A
        adapted: list[Vector] = list(bnd_span) + list(h_reps)
        labels: list[tuple] = [("B", i) for i in range(len(bnd_span))] + \
            [("H", nm) for nm in small_names]
        span = list(bnd_span)
        pivots = list(bnd_pivots)
        for v in h_reps:
            red = _reduce_against(v, span, pivots, keys)
            _append_reduced(red, span, pivots, keys)
        comp = []
        for j, k in enumerate(keys):
            v = {k: Q(1)}
            red = _reduce_against(v, span, pivots, keys)
            if red:
                comp.append(v)
                _append_reduced(red, span, pivots, keys)
                labels.append(("A", len(comp) - 1))
                adapted.append(v)
        # express standard basis in adapted coordinates
        coeffs = {}
        for k in keys:
            sol = solve_in_span(adapted, {k: Q(1)}, keys)
            coeffs[k] = sol
        for k in keys:
            sol = coeffs[k]
            for c_i, lab in zip(sol, labels):
                if not c_i:
                    continue
                kind = lab[0]
                if kind == "H":
                    f.add_entry(lab[1], k, c_i)
                elif kind == "B":
                    # h on this boundary row: minus the tracked preimage
                    for t, x in bnd_pre[lab[1]].items():
                        h.add_entry(t, k, -c_i * x)
        for nm in small_names:
            for t, x in reps[nm].items():
                g.add_entry(t, nm, x)

    return Contraction(c, small_cx, f, g, h)


def dualize(c: Complex, dual_name=lambda n: ("dual", n)) -> Complex:
    """Dual complex: degrees negated, differential transposed.

    The dual differential is the plain transpose; this convention is used
    consistently by every dualization in the package so double-dualizing is
    the identity on basis labels.
    """
    sp = GradedSpace()
    for e in c.space:
        sp.add(BasisElement(dual_name(e.name), -e.degree, e.weight))
    d = SparseMap(sp, sp, -1)
    for t, s, coeff in c.d.transpose_entries():
        # d(x) has entry (t, s); dual pairing gives d*(t*) ∋ s* — degree check:
        # deg t* = -deg t = -(deg s - 1); target s*: -deg s = deg t* - 1. OK.
        d.add_entry(dual_name(s), dual_name(t), coeff)
    return Complex(sp, d)
