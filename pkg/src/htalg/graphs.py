"""The Lie graph complex: decorated graphs, contractions, differential.

A chain is a linear combination of connected graphs with labeled legs; a
vertex of valence m >= 3 carries a decoration in the dual of the cyclic Lie
module on its half-edges twisted by the sign representation, placed in
degree m - 3.  The cyclic Lie module is realized as unrooted binary trees
with the given leaf set modulo AS and IHX: the basis is the left-combed
trees planted at the smallest leaf, and every tree reduces through exact
linear algebra on its multilinear expansion.

Genus = E - V + 1, homological degree = sum_v (valence - 3) = 2E + n - 3V.
Isomorphism classes are handled by exact Aut-coinvariants, so a class
killed by a sign-reversing automorphism simply has no basis vectors.

The differential expands one vertex into two joined by a new edge; the
coefficient against a pair of new decorations is the pairing of the old
decoration with their grafting, decorated slots passing each other with
Koszul signs in the local degrees m - 3.  d^2 = 0 is asserted in tests on
every block the enumerator covers; the displayed one-vertex relation in
F<1,2> pins the overall sign convention.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

from .linalg import (GradedSpace, BasisElement, SparseMap, Complex, Q, Vector,
                     vec_add, vec_addmul, vec_scale, row_space_basis,
                     solve_in_span, rref, _reduce_against, _append_reduced)

# --- unrooted binary trees ----------------------------------------------------

def _tree_leaves(t):
    if isinstance(t, tuple) and len(t) == 2:
        return _tree_leaves(t[0]) + _tree_leaves(t[1])
    return [t]


def _expand_words(t):
    """Multilinear expansion of a bracket nesting: word tuple -> int coeff."""
    if not (isinstance(t, tuple) and len(t) == 2):
        return {(t,): 1}
    left = _expand_words(t[0])
    right = _expand_words(t[1])
    out = {}
    for u, cu in left.items():
        for v, cv in right.items():
            out[u + v] = out.get(u + v, 0) + cu * cv
            out[v + u] = out.get(v + u, 0) - cu * cv
    return {w: c for w, c in out.items() if c}


def _left_comb(leaves):
    t = leaves[0]
    for x in leaves[1:]:
        t = (t, x)
    return t


def _adjacency(root_leaf, nested):
    """Adjacency with CYCLIC neighbor order at internal vertices.

    Each internal node lists its three neighbors as (parent, left, right);
    only the cyclic order matters.  Reading the tree from any leaf with the
    cyclic convention reproduces the same element of the cyclic Lie module
    with no sign.
    """
    adj: dict = {}
    counter = itertools.count()

    def build(t, parent):
        if not (isinstance(t, tuple) and len(t) == 2):
            node = ("leaf", t)
            adj[node] = [parent]
            return node
        node = ("n", next(counter))
        adj[node] = [parent]
        a = build(t[0], node)
        b = build(t[1], node)
        adj[node] += [a, b]
        return node

    root = ("leaf", root_leaf)
    top = build(nested, root)
    adj[root] = [top]
    return adj


def _read_cyclic(adj, node, parent):
    if node[0] == "leaf":
        return node[1]
    nbrs = adj[node]
    k = nbrs.index(parent)
    a = nbrs[(k + 1) % 3]
    b = nbrs[(k + 2) % 3]
    return (_read_cyclic(adj, a, node), _read_cyclic(adj, b, node))


def plant_at(unrooted, leaf):
    """Replant (root_leaf, nested) at another leaf, cyclic-order correctly."""
    root_leaf, nested = unrooted
    if root_leaf == leaf:
        return unrooted
    adj = _adjacency(root_leaf, nested)
    start = ("leaf", leaf)
    nbr = adj[start][0]
    return (leaf, _read_cyclic(adj, nbr, start))


def graft_trees(T1, T2, e_label, root):
    """Join two planted trees along their e_label leaves; plant at root.

    The e-stub of each tree is replaced by the other tree's attachment node,
    keeping every cyclic order, so no sign is incurred.
    """
    r1, n1 = plant_at(T1, e_label)
    r2, n2 = plant_at(T2, e_label)
    adj: dict = {}
    counter = itertools.count()

    def build(t, parent):
        if not (isinstance(t, tuple) and len(t) == 2):
            node = ("leaf", t)
            adj[node] = [parent]
            return node
        node = ("n", next(counter))
        adj[node] = [parent]
        a = build(t[0], node)
        b = build(t[1], node)
        adj[node] += [a, b]
        return node

    top1 = build(n1, ("glue", 1))
    top2 = build(n2, ("glue", 2))
    # splice: each top's parent slot points at the other top
    adj[top1][adj[top1].index(("glue", 1))] = top2
    adj[top2][adj[top2].index(("glue", 2))] = top1
    start = ("leaf", root)
    nbr = adj[start][0]
    return (root, _read_cyclic(adj, nbr, start))


def relabel_tree(unrooted, mapping):
    root, nested = unrooted

    def walk(t):
        if isinstance(t, tuple) and len(t) == 2:
            return (walk(t[0]), walk(t[1]))
        return mapping[t]

    return (mapping[root], walk(nested))


def all_trees(leaves: tuple):
    """All unrooted binary trees on the leaves, planted at the first."""
    first, rest = leaves[0], list(leaves[1:])

    def rooted(items):
        if len(items) == 1:
            yield items[0]
            return
        fixed = items[0]
        others = items[1:]
        for k in range(len(others) + 1):
            for left_rest in itertools.combinations(others, k):
                right_rest = [x for x in others if x not in left_rest]
                if not right_rest:
                    continue
                for lt in rooted([fixed] + list(left_rest)):
                    for rt in rooted(list(right_rest)):
                        yield (lt, rt)

    for t in rooted(rest):
        yield (first, t)


# --- cyclic Lie module and its sign-twisted dual --------------------------------

class CyclicLie:
    """Lie<m> on the leaf set range(m); basis: left combs 0 < 1 < perm."""

    _cache: dict[int, "CyclicLie"] = {}

    def __init__(self, m: int):
        if m < 3:
            raise ValueError("need m >= 3")
        self.m = m
        self.basis_trees = [(0, _left_comb((1,) + perm))
                            for perm in itertools.permutations(range(2, m))]
        self.dim = len(self.basis_trees)
        self.words = sorted(itertools.permutations(range(1, m)))
        self._exp = [_expand_words(t[1]) for t in self.basis_trees]
        self._coords_cache: dict = {}
        self._act_cache: dict = {}

    @classmethod
    def get(cls, m: int) -> "CyclicLie":
        if m not in cls._cache:
            cls._cache[m] = cls(m)
        return cls._cache[m]

    def coords(self, unrooted) -> tuple:
        key = plant_at(unrooted, 0)
        ck = _canon_key(key)
        if ck in self._coords_cache:
            return self._coords_cache[ck]
        vec = _expand_words(key[1])
        rows = [[Q(self._exp[i].get(w, 0)) for i in range(self.dim)] + [Q(vec.get(w, 0))]
                for w in self.words]
        red, pivots = rref(rows)
        if self.dim in pivots:
            raise AssertionError("tree expansion escaped the Lie span")
        sol = [Q(0)] * self.dim
        for r, c in enumerate(pivots):
            sol[c] = red[r][self.dim]
        sol = tuple(sol)
        self._coords_cache[ck] = sol
        return sol

    def dual_act_matrix(self, perm: tuple):
        """Matrix of the sign-twisted dual action: rows index the new vector."""
        if perm in self._act_cache:
            return self._act_cache[perm]
        sgn = _perm_sign(perm)
        inv = [0] * self.m
        for i, p in enumerate(perm):
            inv[p] = i
        mat = []
        for tree in self.basis_trees:
            moved = relabel_tree(tree, {j: inv[j] for j in range(self.m)})
            mat.append([sgn * c for c in self.coords(moved)])
        self._act_cache[perm] = mat
        return mat


def _canon_key(planted):
    root, nested = planted

    def norm(t):
        if isinstance(t, tuple) and len(t) == 2:
            return ("B", norm(t[0]), norm(t[1]))
        return ("L", t)

    return (root, norm(nested))


def _perm_sign(perm) -> int:
    sign = 1
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                sign = -sign
    return sign


def dual_act(m: int, perm: tuple, mu) -> list:
    mat = CyclicLie.get(m).dual_act_matrix(perm)
    dim = CyclicLie.get(m).dim
    return [sum((mat[i][j] * mu[j] for j in range(dim) if mu[j]), Q(0))
            for i in range(dim)]


def dual_pair(m: int, mu, unrooted) -> Q:
    coords = CyclicLie.get(m).coords(unrooted)
    return sum((mu[j] * coords[j] for j in range(CyclicLie.get(m).dim)
                if mu[j] and coords[j]), Q(0))


# --- graphs ---------------------------------------------------------------------

class Graph:
    """Connected multigraph with labeled legs (hashable, orderable key).

    Edges are stored as a sorted tuple of sorted pairs; loops allowed.
    Half-edges at a vertex are ordered legs-first (by leg label) then edge
    ends by edge index, a loop contributing its end 0 then end 1.
    """

    def __init__(self, n_vertices: int, legs: tuple, edges):
        self.V = n_vertices
        self.legs = tuple(legs)
        self.edges = tuple(sorted(tuple(sorted(e)) for e in edges))
        self.n = len(self.legs)
        self.E = len(self.edges)

    def valence(self, v: int) -> int:
        out = sum(1 for w in self.legs if w == v)
        for a, b in self.edges:
            out += (a == v) + (b == v)
        return out

    def genus(self) -> int:
        return self.E - self.V + 1

    def degree(self) -> int:
        return 2 * self.E + self.n - 3 * self.V

    def half_edges(self, v: int) -> list:
        out = [("leg", i) for i, w in enumerate(self.legs) if w == v]
        for idx, (a, b) in enumerate(self.edges):
            if a == v:
                out.append(("e", idx, 0))
            if b == v:
                out.append(("e", idx, 1))
        return out

    def he_vertex(self, he) -> int:
        if he[0] == "leg":
            return self.legs[he[1]]
        a, b = self.edges[he[1]]
        return a if he[2] == 0 else b

    def connected(self) -> bool:
        if self.V == 0:
            return False
        seen = {0}
        stack = [0]
        while stack:
            v = stack.pop()
            for a, b in self.edges:
                for x, y in ((a, b), (b, a)):
                    if x == v and y not in seen:
                        seen.add(y)
                        stack.append(y)
        return len(seen) == self.V

    def key(self):
        return (self.V, self.legs, self.edges)

    def permuted(self, perm) -> "Graph":
        return Graph(self.V, tuple(perm[v] for v in self.legs),
                     [(perm[a], perm[b]) for a, b in self.edges])

    def __repr__(self):
        return f"Graph(V={self.V}, legs={self.legs}, edges={self.edges})"


def canonical_graph(g: Graph):
    best, best_perm = None, None
    for perm in itertools.permutations(range(g.V)):
        h = g.permuted(perm)
        if best is None or h.key() < best.key():
            best, best_perm = h, list(perm)
    return best, best_perm


def iso_halfedge_maps(g: Graph, h: Graph, perm):
    """Local half-edge maps of the iso g -> h induced by a vertex bijection.

    Parallel edges are matched in index order (deterministic; any other
    choice differs by an automorphism of h, which the coinvariant reduction
    absorbs).  Returns he_maps[v][i] = local index at perm[v] in h.
    """
    pair_src: dict = {}
    for idx, (a, b) in enumerate(g.edges):
        pair_src.setdefault(tuple(sorted((perm[a], perm[b]))), []).append(idx)
    pair_tgt: dict = {}
    for idx, (a, b) in enumerate(h.edges):
        pair_tgt.setdefault((a, b), []).append(idx)
    edge_map = {}
    for pair, srcs in pair_src.items():
        tgts = pair_tgt.get(pair)
        if tgts is None or len(tgts) != len(srcs):
            raise ValueError("not an isomorphism")
        for s_idx, t_idx in zip(srcs, tgts):
            edge_map[s_idx] = t_idx
    edge_sign = _perm_sign(tuple(edge_map[i] for i in range(len(g.edges)))) \
        if g.edges else 1
    he_maps = {}
    for v in range(g.V):
        tgt_list = h.half_edges(perm[v])
        local = []
        loop_used: dict = {}
        for he in g.half_edges(v):
            if he[0] == "leg":
                img = ("leg", he[1])
            else:
                idx, end = he[1], he[2]
                a, b = g.edges[idx]
                nid = edge_map[idx]
                na, nb = h.edges[nid]
                if a == b:
                    # loop: ends map in order of appearance
                    nend = loop_used.get(idx, 0)
                    loop_used[idx] = nend + 1
                else:
                    src_v = a if end == 0 else b
                    nend = 0 if perm[src_v] == na else 1
                img = ("e", nid, nend)
            local.append(tgt_list.index(img))
        he_maps[v] = local
    return he_maps, edge_sign


def graph_automorphisms(g: Graph):
    """All (vertex_perm, he_maps) automorphisms, including edge/loop swaps."""
    autos = []
    hes = {v: g.half_edges(v) for v in range(g.V)}
    for perm in itertools.permutations(range(g.V)):
        if g.permuted(perm).key() != g.key():
            continue
        pair_src: dict = {}
        for idx, (a, b) in enumerate(g.edges):
            pair_src.setdefault(tuple(sorted((perm[a], perm[b]))), []).append(idx)
        pair_tgt: dict = {}
        for idx, (a, b) in enumerate(g.edges):
            pair_tgt.setdefault((a, b), []).append(idx)
        keys = sorted(pair_src)
        per_class = []
        for k in keys:
            srcs = pair_src[k]
            tgts = pair_tgt[k]
            per_class.append([dict(zip(srcs, assign))
                              for assign in itertools.permutations(tgts)])
        loop_edges = [idx for idx, (a, b) in enumerate(g.edges) if a == b]
        for combo in itertools.product(*per_class):
            edge_map = {}
            for d in combo:
                edge_map.update(d)
            for flips in itertools.product((0, 1), repeat=len(loop_edges)):
                flip = dict(zip(loop_edges, flips))
                he_maps = {}
                ok = True
                for v in range(g.V):
                    tgt_list = hes[perm[v]]
                    local = []
                    for he in hes[v]:
                        if he[0] == "leg":
                            img = ("leg", he[1])
                        else:
                            idx, end = he[1], he[2]
                            a, b = g.edges[idx]
                            nid = edge_map[idx]
                            na, nb = g.edges[nid]
                            if a == b:
                                if na != nb:
                                    ok = False
                                    break
                                nend = end ^ flip[idx]
                            else:
                                if na == nb:
                                    ok = False
                                    break
                                src_v = a if end == 0 else b
                                if perm[src_v] not in (na, nb):
                                    ok = False
                                    break
                                nend = 0 if perm[src_v] == na else 1
                            img = ("e", nid, nend)
                        if img not in tgt_list:
                            ok = False
                            break
                        local.append(tgt_list.index(img))
                    if not ok:
                        break
                    he_maps[v] = local
                if ok:
                    es = _perm_sign(tuple(edge_map[i]
                                          for i in range(len(g.edges)))) \
                        if g.edges else 1
                    autos.append((list(perm), he_maps, es))
    seen = set()
    out = []
    for perm, hmaps, es in autos:
        key = (tuple(perm), tuple(tuple(hmaps[v]) for v in range(g.V)))
        if key not in seen:
            seen.add(key)
            out.append((perm, hmaps, es))
    return out


# --- decorated classes ------------------------------------------------------------

def _koszul_perm_sign(perm, degrees) -> int:
    sign = 1
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j] and degrees[i] % 2 and degrees[j] % 2:
                sign = -sign
    return sign


class GraphClass:
    """Canonical graph with its exact Aut-coinvariant decoration basis."""

    def __init__(self, graph: Graph):
        self.graph = graph
        self.valences = [graph.valence(v) for v in range(graph.V)]
        self.dims = [CyclicLie.get(m).dim for m in self.valences]
        self.deg_local = [m - 3 for m in self.valences]
        self.tuples = list(itertools.product(*[range(d) for d in self.dims]))
        self._build()

    def transport(self, perm, he_maps, tensor: dict, edge_sign: int = 1) -> dict:
        """Move a decoration tensor along a graph isomorphism.

        The sign is Koszul on local decoration degrees times the parity of
        the induced edge permutation (the orientation twist)."""
        out: dict = {}
        sign0 = edge_sign * _koszul_perm_sign(perm, self.deg_local)
        acts = [CyclicLie.get(self.valences[v]).dual_act_matrix(
            tuple(he_maps[v])) for v in range(self.graph.V)]
        for tup, coeff in tensor.items():
            idx_lists = [None] * self.graph.V
            for v in range(self.graph.V):
                col = [acts[v][i][tup[v]] for i in range(self.dims[v])]
                idx_lists[perm[v]] = [(i, c) for i, c in enumerate(col) if c]
            for combo in itertools.product(*idx_lists):
                tgt = tuple(i for i, _ in combo)
                c = coeff * sign0
                for _, cc in combo:
                    c *= cc
                if c:
                    out[tgt] = out.get(tgt, Q(0)) + c
        return {k: v for k, v in out.items() if v}

    def _build(self):
        autos = graph_automorphisms(self.graph)
        rows = []
        ident = (list(range(self.graph.V)),
                 {v: list(range(self.valences[v])) for v in range(self.graph.V)})
        for perm, hmaps, es in autos:
            if perm == ident[0] and es == 1 and all(
                    hmaps[v] == ident[1][v] for v in range(self.graph.V)):
                continue
            for tup in self.tuples:
                ax = self.transport(perm, hmaps, {tup: Q(1)}, es)
                diff = vec_add({tup: Q(1)}, vec_scale(-1, ax))
                if diff:
                    rows.append(diff)
        basis, pivots = row_space_basis(rows, self.tuples)
        self._span = basis
        reps = []
        span, piv = list(basis), list(pivots)
        for tup in self.tuples:
            red = _reduce_against({tup: Q(1)}, span, piv, self.tuples)
            if red:
                reps.append(tup)
                _append_reduced(red, span, piv, self.tuples)
        self.rep_tuples = reps
        self._rows_full = self._span + [{t: Q(1)} for t in reps]
        self._reduce_cache: dict = {}

    def reduce(self, tensor: dict) -> Vector:
        out: Vector = {}
        for tup, c in tensor.items():
            if tup not in self._reduce_cache:
                sol = solve_in_span(self._rows_full, {tup: Q(1)}, self.tuples)
                if sol is None:
                    raise AssertionError("decoration outside class span")
                k = len(self._span)
                self._reduce_cache[tup] = {
                    self.rep_tuples[i]: sol[k + i]
                    for i in range(len(self.rep_tuples)) if sol[k + i]}
            out = vec_addmul(out, c, self._reduce_cache[tup])
        return out

    @property
    def dim(self):
        return len(self.rep_tuples)


# --- enumeration --------------------------------------------------------------------

def enumerate_graphs(genus: int, n_legs: int, degree: int):
    """Canonical connected graphs with the stated invariants."""
    V = 2 * genus - 2 + n_legs - degree
    if V < 1:
        return []
    E = genus - 1 + V
    if E < 0:
        return []
    pairs = [(a, b) for a in range(V) for b in range(a, V)]
    out = {}
    for legs in itertools.product(range(V), repeat=n_legs):
        for combo in itertools.combinations_with_replacement(range(len(pairs)), E):
            edges = [pairs[i] for i in combo]
            g = Graph(V, legs, edges)
            if any(g.valence(v) < 3 for v in range(V)):
                continue
            if not g.connected():
                continue
            canon, _ = canonical_graph(g)
            out.setdefault(canon.key(), canon)
    return [out[k] for k in sorted(out)]


# --- differential -------------------------------------------------------------------

def _split_graph(g: Graph, v: int, S_pos, Sc_pos):
    """Split vertex v: g.V becomes the S^c vertex, a new edge joins them.

    Returns (new graph, local order of the S part at v, local order of the
    S^c part at g.V); the local orders list the positions of the split
    half-edges in the NEW graph's half-edge convention, with the new edge
    end last in both.
    """
    hes = g.half_edges(v)
    he_S = {hes[i] for i in S_pos}
    legs = []
    for i, w in enumerate(g.legs):
        if w != v:
            legs.append(w)
        else:
            legs.append(v if ("leg", i) in he_S else g.V)
    raw_edges = []
    src_desc = {}
    for idx, (a, b) in enumerate(g.edges):
        ends = []
        for end, w in ((0, a), (1, b)):
            if w != v:
                ends.append(w)
            else:
                ends.append(v if ("e", idx, end) in he_S else g.V)
        raw_edges.append(tuple(ends))
    raw_edges.append((v, g.V))
    # sort as Graph will, stably, tracking index and end flips
    order = sorted(range(len(raw_edges)),
                   key=lambda i: tuple(sorted(raw_edges[i])))
    newg = Graph(g.V + 1, tuple(legs), [raw_edges[i] for i in order])
    idx_map = {old: new for new, old in enumerate(order)}
    flipped = {old: (tuple(sorted(raw_edges[old])) != raw_edges[old])
               for old in range(len(raw_edges))}

    def new_desc(he):
        if he[0] == "leg":
            return ("leg", he[1])
        idx, end = he[1], he[2]
        nid = idx_map[idx]
        nend = (1 - end) if flipped[idx] else end
        return ("e", nid, nend)

    new_edge_idx = idx_map[len(raw_edges) - 1]
    # orientation: reference order is (new edge, old edges in old order);
    # the canonical order of newg is a permutation of that reference
    reference = [len(raw_edges) - 1] + list(range(len(raw_edges) - 1))
    pos = {raw: i for i, raw in enumerate(reference)}
    edge_or_sign = _perm_sign(tuple(pos[raw] for raw in order))
    he_v = newg.half_edges(v)
    he_w = newg.half_edges(g.V)
    loc_v = [he_v.index(new_desc(hes[i])) for i in S_pos]
    loc_v.append(he_v.index(("e", new_edge_idx, 1 if flipped[len(raw_edges) - 1] else 0)))
    loc_w = [he_w.index(new_desc(hes[i])) for i in Sc_pos]
    loc_w.append(he_w.index(("e", new_edge_idx, 0 if flipped[len(raw_edges) - 1] else 1)))
    return newg, loc_v, loc_w, edge_or_sign


def expand_decorated(cls: GraphClass, tensor: dict):
    """Raw boundary terms: list of (new labeled graph, decoration tensor).

    Splits run over subsets S of each vertex's half-edge positions with
    0 in S and both parts of size >= 2.  The new decorations sit at slots v
    and V (appended); the S^c factor passes the tail decorations with a
    Koszul sign, and the expansion operator itself passes earlier
    decorations as an odd operator.
    """
    g = cls.graph
    terms = []
    for v in range(g.V):
        m = cls.valences[v]
        if m < 4:
            continue
        others = list(range(1, m))
        pref = sum(cls.deg_local[w] for w in range(v)) % 2
        tail = sum(cls.deg_local[w] for w in range(v + 1, g.V)) % 2
        for size_s in range(1, m - 2):
            for S_rest in itertools.combinations(others, size_s):
                S_pos = (0,) + S_rest
                Sc_pos = tuple(i for i in others if i not in S_rest)
                m1, m2 = len(S_pos) + 1, len(Sc_pos) + 1
                newg, loc_v, loc_w, e_sign = _split_graph(g, v, S_pos, Sc_pos)
                cl1, cl2 = CyclicLie.get(m1), CyclicLie.get(m2)
                deg2 = m2 - 3
                sign = e_sign * (-1 if pref else 1) * \
                    (-1 if (deg2 % 2 and tail) else 1)
                # grafting tables in the new local orders: map local index
                # k of part 1 to S_pos[k] names, the last to the edge "E"
                map1 = {loc_v[k]: f"h{S_pos[k]}" for k in range(len(S_pos))}
                map1[loc_v[-1]] = "E"
                map2 = {loc_w[k]: f"h{Sc_pos[k]}" for k in range(len(Sc_pos))}
                map2[loc_w[-1]] = "E"
                pair_cache = {}
                for tup, coeff in tensor.items():
                    mu = [Q(0)] * cls.dims[v]
                    mu[tup[v]] = Q(1)
                    newdec = {}
                    for i1, t1 in enumerate(cl1.basis_trees):
                        T1 = relabel_tree(t1, map1)
                        for i2, t2 in enumerate(cl2.basis_trees):
                            keyp = (i1, i2)
                            if keyp not in pair_cache:
                                T2 = relabel_tree(t2, map2)
                                grafted = graft_trees(T1, T2, "E", "h0")
                                named = relabel_tree(
                                    grafted, {f"h{k}": k for k in range(m)})
                                pair_cache[keyp] = CyclicLie.get(m).coords(named)
                            coords = pair_cache[keyp]
                            c = coords[tup[v]]
                            if c:
                                newtup = tuple(list(tup[:v]) + [i1] +
                                               list(tup[v + 1:]) + [i2])
                                newdec[newtup] = newdec.get(newtup, Q(0)) + \
                                    sign * coeff * c
                    newdec = {k: c for k, c in newdec.items() if c}
                    if newdec:
                        terms.append((newg, newdec))
    return terms


class GraphComplexBlock:
    """Chain complex of F<genus, n>: bases, differential, homology."""

    def __init__(self, genus: int, n_legs: int):
        if genus < 0 or genus + n_legs < 1:
            raise ValueError("need genus >= 0 and genus + n >= 1")
        self.genus = genus
        self.n = n_legs
        self.top_degree = 2 * genus - 3 + n_legs
        self.classes: dict[int, list[GraphClass]] = {}
        self._class_index: dict = {}
        for deg in range(0, max(self.top_degree, -1) + 1):
            cl = [GraphClass(g) for g in enumerate_graphs(genus, n_legs, deg)]
            self.classes[deg] = cl
            for i, c in enumerate(cl):
                self._class_index[c.graph.key()] = (deg, i)
        self._space = GradedSpace()
        for deg in sorted(self.classes):
            for ci, c in enumerate(self.classes[deg]):
                for ti in range(c.dim):
                    self._space.add(BasisElement(("F", deg, ci, ti), deg))
        self._d = SparseMap(self._space, self._space, -1)
        for deg in sorted(self.classes):
            for ci, c in enumerate(self.classes[deg]):
                for ti, tup in enumerate(c.rep_tuples):
                    img = self.boundary(c, {tup: Q(1)})
                    for key, coeff in img.items():
                        self._d.add_entry(key, ("F", deg, ci, ti), coeff)
        self.complex = Complex(self._space, self._d)

    def locate(self, graph: Graph, tensor: dict) -> Vector:
        """Canonicalize a labeled decorated graph into block coordinates."""
        canon, perm = canonical_graph(graph)
        loc = self._class_index.get(canon.key())
        if loc is None:
            raise AssertionError(f"graph missing from enumeration: {canon}")
        deg, ci = loc
        cls = self.classes[deg][ci]
        he_maps, edge_sign = iso_halfedge_maps(graph, canon, perm)
        moved = _transport_between(graph, perm, he_maps, tensor, edge_sign)
        red = cls.reduce(moved)
        return {("F", deg, ci, cls.rep_tuples.index(t)): c
                for t, c in red.items()}

    def boundary(self, cls: GraphClass, tensor: dict) -> Vector:
        out: Vector = {}
        for newg, newdec in expand_decorated(cls, tensor):
            out = vec_add(out, self.locate(newg, newdec))
        return out

    def homology_ranks(self) -> dict:
        out = {}
        for deg in sorted(self.classes):
            hs, _ = self.complex.homology(deg)
            out[deg] = len(hs)
        return out

    def chain_dims(self) -> dict:
        return {deg: sum(c.dim for c in cls)
                for deg, cls in self.classes.items()}

    def euler_characteristic(self) -> int:
        return sum((-1) ** deg * d for deg, d in self.chain_dims().items())


def _transport_between(src_graph: Graph, perm, he_maps,
                       tensor: dict, edge_sign: int = 1) -> dict:
    """Transport tensor from a labeled graph to the canonical class basis."""
    V = src_graph.V
    val_src = [src_graph.valence(v) for v in range(V)]
    deg_src = [m - 3 for m in val_src]
    out: dict = {}
    acts = [CyclicLie.get(val_src[v]).dual_act_matrix(tuple(he_maps[v]))
            for v in range(V)]
    sign0 = edge_sign * _koszul_perm_sign(perm, deg_src)
    for tup, coeff in tensor.items():
        idx_lists = [None] * V
        for v in range(V):
            col = [acts[v][i][tup[v]] for i in range(len(acts[v]))]
            idx_lists[perm[v]] = [(i, c) for i, c in enumerate(col) if c]
        for combo in itertools.product(*idx_lists):
            tgt = tuple(i for i, _ in combo)
            c = coeff * sign0
            for _, cc in combo:
                c *= cc
            if c:
                out[tgt] = out.get(tgt, Q(0)) + c
    return {k: v for k, v in out.items() if v}


# --- public operations -----------------------------------------------------------

_block_cache: dict = {}


def graph_block(genus: int, n_legs: int) -> GraphComplexBlock:
    key = (genus, n_legs)
    if key not in _block_cache:
        _block_cache[key] = GraphComplexBlock(genus, n_legs)
    return _block_cache[key]


def enumerate_basis(genus: int, n_legs: int, degree: int):
    """Decorated-graph basis of F<g,n> in one degree.

    Each element is (Graph, decoration tuple); orientation-killed classes
    are already absent.
    """
    blk = graph_block(genus, n_legs)
    if degree < 0 or degree > blk.top_degree:
        return []
    out = []
    for c in blk.classes.get(degree, []):
        for tup in c.rep_tuples:
            out.append((c.graph, tup))
    return out


def graph_homology(genus: int, n_legs: int) -> dict:
    """Exact homology ranks per degree, with the Euler cross-check."""
    blk = graph_block(genus, n_legs)
    ranks = blk.homology_ranks()
    chi_chain = blk.euler_characteristic()
    chi_hom = sum((-1) ** deg * r for deg, r in ranks.items())
    if chi_chain != chi_hom:
        raise AssertionError("Euler characteristic mismatch")
    return ranks


def contract_legs(graph: Graph, tensor: dict, i: int, j: int):
    """The modular contraction xi_{i,j}: glue legs i and j into an edge.

    Remaining legs are relabeled order-preservingly.  Returns (Graph, tensor)
    in labeled form; use GraphComplexBlock.locate to canonicalize.
    """
    if i == j or not (0 <= i < graph.n) or not (0 <= j < graph.n):
        raise ValueError("invalid leg labels")
    vi, vj = graph.legs[i], graph.legs[j]
    old_hes = {v: graph.half_edges(v) for v in range(graph.V)}
    keep = [k for k in range(graph.n) if k not in (i, j)]
    legs = tuple(graph.legs[k] for k in keep)
    raw_edges = list(graph.edges) + [(vi, vj)]
    order = sorted(range(len(raw_edges)),
                   key=lambda t: tuple(sorted(raw_edges[t])))
    newg = Graph(graph.V, legs, [raw_edges[t] for t in order])
    idx_map = {old: new for new, old in enumerate(order)}
    flipped = {old: (tuple(sorted(raw_edges[old])) != raw_edges[old])
               for old in range(len(raw_edges))}
    reference = [len(raw_edges) - 1] + list(range(len(raw_edges) - 1))
    pos = {raw: i for i, raw in enumerate(reference)}
    edge_or_sign = _perm_sign(tuple(pos[raw] for raw in order))
    leg_map = {k: r for r, k in enumerate(keep)}

    def new_desc(he):
        if he[0] == "leg":
            if he[1] == i:
                nid = idx_map[len(raw_edges) - 1]
                nend = (1 - 0) if flipped[len(raw_edges) - 1] else 0
                return ("e", nid, nend)
            if he[1] == j:
                nid = idx_map[len(raw_edges) - 1]
                nend = (1 - 1) if flipped[len(raw_edges) - 1] else 1
                return ("e", nid, nend)
            return ("leg", leg_map[he[1]])
        idx, end = he[1], he[2]
        nid = idx_map[idx]
        nend = (1 - end) if flipped[idx] else end
        return ("e", nid, nend)

    # loop gluing (vi == vj): ends of the new loop follow insertion order
    if vi == vj:
        # ensure desc ends are distinct: leg i -> end 0, leg j -> end 1 already
        pass
    he_maps = {}
    for v in range(graph.V):
        tgt = newg.half_edges(v)
        he_maps[v] = [tgt.index(new_desc(he)) for he in old_hes[v]]
    perm = list(range(graph.V))
    moved = _transport_between(graph, perm, he_maps, tensor)
    moved = {k: edge_or_sign * c for k, c in moved.items()}
    return newg, moved


def single_vertex_generator(n_legs: int):
    """The one-vertex genus-0 graph with its m_{n-1} decoration space."""
    g = Graph(1, tuple(0 for _ in range(n_legs)), [])
    return g


def regrade_shift(d: int, genus: int) -> int:
    """Degree shift of the regraded complex: 2 d (1 - genus)."""
    return 2 * d * (1 - genus)


def regrade(d: int, genus: int, n_legs: int) -> dict:
    """Homology of the shifted complex F^d<g,n>."""
    shift = regrade_shift(d, genus)
    return {deg + shift: r for deg, r in graph_homology(genus, n_legs).items()}


def assemble_vacuum(d: int, max_genus: int) -> dict:
    """Shifted vacuum blocks F^d<g,0> for 1 <= g <= max_genus."""
    out = {}
    for g in range(1, max_genus + 1):
        out[g] = {"shift": regrade_shift(d, g),
                  "homology": regrade(d, g, 0),
                  "chain_dims": {deg + regrade_shift(d, g): v
                                 for deg, v in graph_block(g, 0).chain_dims().items()}}
    return out
