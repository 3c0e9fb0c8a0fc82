"""Vertex-local structure of the reduced spine: directions, ideal edges,
blow-ups, link construction, and certified link symmetries."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

from . import gog as gg
from .groups import (
    Monomorphism,
    Subgroup,
    all_isomorphisms,
    left_cosets,
)


class SpineError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class Direction:
    """A coset of the included edge group, attached to an oriented edge."""

    edge: int
    coset: tuple


def directions_at(g, v):
    """All directions at v; loops contribute via both orientations."""
    out = []
    for e in g.star(v):
        im = g.inclusions[e].image()
        for c in left_cosets(im):
            out.append(Direction(e, c))
    return sorted(out)


def direction_stabilizer(g, v, d):
    """Elements of the vertex group fixing the coset by left multiplication."""
    G = g.vertex_groups[v]
    cs = set(d.coset)
    return tuple(
        sorted(x for x in G.elements() if {G.mul(x, y) for y in d.coset} == cs)
    )


def act_on_direction(g, v, x, d):
    G = g.vertex_groups[v]
    return Direction(d.edge, tuple(sorted(G.mul(x, y) for y in d.coset)))


@dataclass(frozen=True)
class IdealEdge:
    base: int
    alpha: frozenset  # of Direction
    stab: tuple  # sorted elements of the base vertex group

    def key(self):
        return (self.base, tuple(sorted(self.alpha)), self.stab)

    def size(self):
        return len(self.alpha)


def _orbit_reps(g, v, a):
    """The G_v-orbit of an ideal edge, as raw (alpha, stab) data."""
    G = g.vertex_groups[v]
    out = []
    for x in G.elements():
        alpha = frozenset(act_on_direction(g, v, x, d) for d in a.alpha)
        stab = tuple(sorted(G.conj(x, h) for h in a.stab))
        out.append((alpha, stab))
    return out


def canonical_ideal_edge(g, a, fold_complement=True):
    """Canonical representative of the equivalence class of an ideal edge.

    When the stabilizer is the whole vertex group the complement gives the
    same vertex of the spine (orientation flip); such pairs are stored once,
    under the lexicographically smaller direction set.
    """
    v = a.base
    G = g.vertex_groups[v]
    candidates = _orbit_reps(g, v, a)
    if fold_complement and len(a.stab) == G.order:
        dv = frozenset(directions_at(g, v))
        comp = IdealEdge(v, dv - a.alpha, a.stab)
        candidates += _orbit_reps(g, v, comp)
    best = min((tuple(sorted(al)), st) for al, st in candidates)
    return IdealEdge(v, frozenset(best[0]), best[1])


def is_valid_ideal_edge(g, a):
    """Orbit condition plus stabilizer containment of direction stabilizers."""
    v = a.base
    G = g.vertex_groups[v]
    stab_set = set(a.stab)
    if 0 not in stab_set:
        return False
    for d in a.alpha:
        full_orbit = {act_on_direction(g, v, x, d) for x in G.elements()}
        sub_orbit = {act_on_direction(g, v, x, d) for x in a.stab}
        if full_orbit & a.alpha != sub_orbit:
            return False
        if not set(direction_stabilizer(g, v, d)) <= stab_set:
            return False
    return True


def enumerate_ideal_edges(g, v, min_size=2, min_cosize=2):
    """All ideal edges at v up to equivalence (complement classes folded),
    with |alpha| >= min_size and |D_v - alpha| >= min_cosize."""
    from .groups import all_subgroups

    G = g.vertex_groups[v]
    dv = directions_at(g, v)
    ndv = len(dv)
    families = {}
    for d in dv:
        families.setdefault(d.edge, []).append(d)
    fam_edges = sorted(families)

    found = {}
    for H in all_subgroups(G):
        stab = H.elements
        stab_set = set(stab)
        # orbits of H on each family
        options = []
        for e in fam_edges:
            orbits = []
            seen = set()
            for d in families[e]:
                if d in seen:
                    continue
                orb = frozenset(act_on_direction(g, v, x, d) for x in stab)
                seen.update(orb)
                # direction stabilizers must sit inside the ideal-edge stabilizer
                if all(set(direction_stabilizer(g, v, q)) <= stab_set for q in orb):
                    orbits.append(orb)
            options.append([None] + orbits)
        for pick in itertools.product(*options):
            chosen = [orb for orb in pick if orb is not None]
            if not chosen:
                continue
            alpha = frozenset().union(*chosen)
            if len(alpha) < min_size or ndv - len(alpha) < min_cosize:
                continue
            a = IdealEdge(v, alpha, stab)
            canon = canonical_ideal_edge(g, a)
            found.setdefault(canon.key(), canon)
    return [found[k] for k in sorted(found)]


# -- blow-up ----------------------------------------------------------------


@dataclass(frozen=True)
class BlowupResult:
    gog: object
    new_vertex: int
    new_pair: int
    moved: tuple  # oriented edges re-based at the new vertex
    reps: dict  # oriented edge -> chosen coset representative (old vertex group)


def blow_up(g, a):
    """Blow up the ideal edge a, yielding a new graph of groups.

    The new vertex and new edge carry the stabilizer; edges supporting a
    direction of alpha are re-based at the new vertex with inclusions
    conjugated by the minimal coset representative.
    """
    v = a.base
    G = g.vertex_groups[v]
    dv = directions_at(g, v)
    if len(a.alpha) < 2 or len(dv) - len(a.alpha) < 2:
        raise SpineError("size-violation")
    if not is_valid_ideal_edge(g, a):
        raise SpineError("invalid-ideal-edge")

    H = Subgroup(G, a.stab)
    Habs, elems = H.as_group("stab")
    idx_in_H = {x: i for i, x in enumerate(elems)}

    # minimal coset representative per moved family (deterministic choice)
    fams = {}
    for d in a.alpha:
        fams.setdefault(d.edge, []).append(d)
    reps = {e: min(min(d.coset) for d in ds) for e, ds in fams.items()}

    new_vertex = g.num_vertices
    vertex_groups = list(g.vertex_groups) + [Habs]
    origin = list(g.origin)
    inclusions = list(g.inclusions)
    for e, rep in reps.items():
        origin[e] = new_vertex
        inc = g.inclusions[e]
        images = []
        for x in inc.source.elements():
            y = G.conj(rep, inc(x))
            if y not in idx_in_H:
                raise SpineError("invalid-ideal-edge: stabilizer too small")
            images.append(idx_in_H[y])
        inclusions[e] = Monomorphism(inc.source, Habs, images)
    # the new edge: oriented from v to the new vertex
    origin += [v, new_vertex]
    edge_groups = list(g.edge_groups) + [Habs]
    inclusions += [
        Monomorphism(Habs, G, elems),
        Monomorphism(Habs, Habs, range(Habs.order)),
    ]
    out = gg.GraphOfGroups(vertex_groups, origin, edge_groups, inclusions, g.name)
    return BlowupResult(out, new_vertex, g.num_pairs, tuple(sorted(reps)), reps)


def transport_ideal_edge(g, a, res, b):
    """Re-express ideal edge b of g inside blow_up(g, a) = res.

    b must be compatible with a: based at another vertex, disjoint from a at
    the same vertex, or nested inside a (then it moves to the new vertex).
    """
    h = res.gog
    if b.base != a.base:
        return b  # untouched vertices keep their directions
    v = a.base
    G = g.vertex_groups[v]
    moved_fams = set(res.moved)
    b_fams = {d.edge for d in b.alpha}
    if not (b_fams & moved_fams):
        return b  # disjoint: still based at v with the same cosets
    if not b_fams <= moved_fams:
        raise SpineError("cannot transport: not nested or disjoint")
    # nested: directions translate into cosets at the new vertex
    Habs = h.vertex_groups[res.new_vertex]
    H_elems = {x: i for i, x in enumerate(Subgroup(G, a.stab).elements)}
    alpha = set()
    for d in sorted(b.alpha):
        e = d.edge
        rep = res.reps[e]
        inc_new = h.inclusions[e]
        # d.coset = c * iota(Ge); find s in stab with coset = s*rep*iota(Ge)
        cs = set(d.coset)
        s_found = None
        for s in a.stab:
            base = {G.mul(G.mul(s, rep), g.inclusions[e](x))
                    for x in g.inclusions[e].source.elements()}
            if base == cs:
                s_found = s
                break
        if s_found is None:
            raise SpineError("cannot transport: direction outside alpha's orbits")
        s_idx = H_elems[s_found]
        coset = tuple(sorted(
            Habs.mul(s_idx, y) for y in inc_new.image_of
        ))
        alpha.add(Direction(e, coset))
    stab = tuple(sorted(H_elems[x] for x in b.stab))
    return IdealEdge(res.new_vertex, frozenset(alpha), stab)


def blow_up_forest(g, ideal_edges):
    """Blow up pairwise compatible ideal edges, sqsubset-maximal first."""
    todo = sorted(ideal_edges, key=lambda a: (-a.size(), a.key()))
    cur = g
    while todo:
        a, rest = todo[0], todo[1:]
        res = blow_up(cur, a)
        todo = sorted(
            (transport_ideal_edge(cur, a, res, b) for b in rest),
            key=lambda b: (-b.size(), b.key()),
        )
        cur = res.gog
    return cur


# -- compatibility ----------------------------------------------------------


def compatible(g, a, b):
    """'nested', 'disjoint' or 'incompatible' for two ideal edges."""
    if a.base != b.base:
        return "disjoint"
    v = a.base
    G = g.vertex_groups[v]

    def nested_in(x, y):
        ys = set(y.stab)
        for alpha, stab in _orbit_reps(g, v, x):
            if alpha <= y.alpha and set(stab) <= ys:
                return True
        return False

    if nested_in(a, b) or nested_in(b, a):
        return "nested"
    orbit_a = set()
    for alpha, _ in _orbit_reps(g, v, a):
        orbit_a |= alpha
    orbit_b = set()
    for alpha, _ in _orbit_reps(g, v, b):
        orbit_b |= alpha
    if not (orbit_a & orbit_b):
        return "disjoint"
    return "incompatible"


def _orientations_of(g, a):
    """The stored class plus its complement flip when the stabilizer is full."""
    v = a.base
    G = g.vertex_groups[v]
    out = [a]
    if len(a.stab) == G.order:
        dv = frozenset(directions_at(g, v))
        comp = IdealEdge(v, dv - a.alpha, a.stab)
        if len(comp.alpha) >= 2:
            out.append(comp)
    return out


def forest_pair(g, a, b):
    """An orientation of {a, b} forming an oriented ideal forest, or None.

    Respects the flip equivalence: tries all stored orientations, refusing
    the pair {alpha, complement}.
    """
    for ao in _orientations_of(g, a):
        for bo in _orientations_of(g, b):
            if ao.base == bo.base:
                dv = frozenset(directions_at(g, ao.base))
                if ao.alpha == dv - bo.alpha:
                    continue  # forbidden complement pair
                if ao.alpha == bo.alpha and ao.stab == bo.stab:
                    continue
            rel = compatible(g, ao, bo)
            if rel == "incompatible":
                continue
            if rel == "nested":
                # align representatives so inclusion holds on the nose
                v = ao.base
                for alpha, stab in _orbit_reps(g, v, ao):
                    cand = IdealEdge(v, alpha, stab)
                    if alpha <= bo.alpha and set(stab) <= set(bo.stab):
                        return (cand, bo)
                for alpha, stab in _orbit_reps(g, v, bo):
                    cand = IdealEdge(v, alpha, stab)
                    if alpha <= ao.alpha and set(stab) <= set(ao.stab):
                        return (cand, ao)
                continue
            return (ao, bo)
    return None


def blow_up_pair(g, pair):
    """Blow up a compatible ideal-edge pair (smaller transported if nested)."""
    small, big = pair
    if small.base == big.base and small.alpha <= big.alpha:
        res1 = blow_up(g, big)
        moved = transport_ideal_edge(g, small, res1, small)
        res2 = blow_up(res1.gog, moved)
        return res2.gog
    res1 = blow_up(g, big)
    moved = transport_ideal_edge(g, small, res1, small)
    res2 = blow_up(res1.gog, moved)
    return res2.gog


# -- membership of blow-ups in the spine ------------------------------------


def _segment_paths(g):
    """Segment shelters as oriented-edge paths (one representative each)."""
    out = {}

    def endpoint_ok(e):
        return not g.inclusions[e].is_surjective()

    def extend(path, verts):
        e_last = path[-1]
        if endpoint_ok(e_last ^ 1) and endpoint_ok(path[0]):
            pairs = frozenset(e >> 1 for e in path)
            out.setdefault(pairs, tuple(path))
        if not g.inclusions[e_last ^ 1].is_surjective():
            return
        v = g.terminus(e_last)
        for e in g.star(v):
            if e >> 1 == e_last >> 1 or g.is_loop(e >> 1):
                continue
            w = g.terminus(e)
            if w in verts:
                continue
            if not g.inclusions[e].is_surjective():
                continue
            extend(path + [e], verts | {w})

    for e in range(len(g.origin)):
        if g.is_loop(e >> 1):
            continue
        extend([e], {g.origin[e], g.terminus(e)})
    return list(out.values())


def _direction_in_segment_shelter(g, v, d, paths):
    """d's oriented edge occurs in a segment shelter at v (endpoint via that
    edge, or v interior to the shelter through it)."""
    e = d.edge
    for path in paths:
        if path[0] == e:
            return True
        if path[-1] == (e ^ 1):
            return True
        for i in range(1, len(path)):
            if g.origin[path[i]] == v and (path[i] == e or (path[i - 1] ^ 1) == e):
                return True
    return False


def _embedded_circles_through(g, v):
    """Embedded circles through v, as (pairs, out_edge_1, out_edge_2)."""
    out = {}
    for p in range(g.num_pairs):
        if g.is_loop(p) and g.origin[2 * p] == v:
            out[frozenset([p])] = (frozenset([p]), 2 * p, 2 * p + 1)

    def search(path, verts):
        e_last = path[-1]
        w = g.terminus(e_last)
        if w == v and len(path) >= 2:
            pairs = frozenset(e >> 1 for e in path)
            if pairs not in out:
                out[pairs] = (pairs, path[0], e_last ^ 1)
            return
        if w in verts:
            return
        for e in g.star(w):
            if e >> 1 == e_last >> 1 or g.is_loop(e >> 1):
                continue
            search(path + [e], verts | {w})

    for e in g.star(v):
        if not g.is_loop(e >> 1):
            search([e], {v})
    return list(out.values())


def ideal_edge_in_L(g, a, assume_in_L=True):
    """Conditions (1)-(3) for the blown-up graph of groups to stay in L."""
    v = a.base
    G = g.vertex_groups[v]
    dv = directions_at(g, v)
    if len(a.alpha) < 2 or len(dv) - len(a.alpha) < 2:
        return False
    stab_set = set(a.stab)
    d_alpha = [d for d in a.alpha if set(direction_stabilizer(g, v, d)) == stab_set]
    if not d_alpha:
        return False
    stab_group_key = Subgroup(G, a.stab).as_group()[0].iso_key()
    alpha_edges = {d.edge for d in a.alpha}
    for pairs, e1, e2 in _embedded_circles_through(g, v):
        supp1, supp2 = e1 in alpha_edges, e2 in alpha_edges
        if supp1 == supp2:
            continue
        if all(g.edge_groups[p].iso_key() == stab_group_key for p in pairs):
            return True
    paths = _segment_paths(g)
    if not any(_direction_in_segment_shelter(g, v, d, paths) for d in d_alpha):
        return False
    if len(a.stab) == G.order:
        comp = frozenset(dv) - a.alpha
        d_comp = [
            d for d in comp if set(direction_stabilizer(g, v, d)) == stab_set
        ]
        if not any(_direction_in_segment_shelter(g, v, d, paths) for d in d_comp):
            return False
    return True


def ideal_edge_in_L_oracle(g, a):
    """Brute-force route: blow up and check every edge survives."""
    try:
        res = blow_up(g, a)
    except SpineError:
        return False
    return gg.in_L(res.gog)


# -- links -------------------------------------------------------------------


@dataclass
class Link:
    g: object
    ideal_classes: list  # canonical in-L ideal edges
    collapse_moves: list  # collapsible pair ids with in-L collapse
    ideal_pairs: list  # (i, j) index pairs forming in-L ideal 2-forests
    collapse_pairs: list  # (p, q) collapsible 2-forests with in-L collapse

    def moves_nodes(self):
        return [("I", i) for i in range(len(self.ideal_classes))] + [
            ("C", p) for p in self.collapse_moves
        ]

    def moves_edges(self):
        out = []
        for i, j in self.ideal_pairs:
            out.append((("I", i), ("I", j)))
        for p, q in self.collapse_pairs:
            out.append((("C", p), ("C", q)))
        for i in range(len(self.ideal_classes)):
            for p in self.collapse_moves:
                out.append((("I", i), ("C", p)))
        return out

    def simplicial_nodes(self):
        nodes = [("I", (i,)) for i in range(len(self.ideal_classes))]
        nodes += [("I", pair) for pair in self.ideal_pairs]
        nodes += [("C", (p,)) for p in self.collapse_moves]
        nodes += [("C", pair) for pair in self.collapse_pairs]
        return nodes

    def simplicial_edges(self):
        """Corners: containments within a side plus all mixed pairs."""
        out = []
        for pair in self.ideal_pairs:
            for i in pair:
                out.append((("I", (i,)), ("I", pair)))
        for pair in self.collapse_pairs:
            for p in pair:
                out.append((("C", (p,)), ("C", pair)))
        ideal_nodes = [("I", (i,)) for i in range(len(self.ideal_classes))] + [
            ("I", pair) for pair in self.ideal_pairs
        ]
        collapse_nodes = [("C", (p,)) for p in self.collapse_moves] + [
            ("C", pair) for pair in self.collapse_pairs
        ]
        for a in ideal_nodes:
            for b in collapse_nodes:
                out.append((a, b))
        return out


def link_of(g, require_in_L=True):
    """The link of a vertex of L: one-move neighbours plus two-move chains.

    Chains are materialized to length <= 3 (pairs of moves), enough for
    two-dimensional spines and the local constraint systems.
    """
    if require_in_L and not gg.in_L(g):
        raise SpineError("not-in-L")

    ideal_classes = []
    for v in range(g.num_vertices):
        for a in enumerate_ideal_edges(g, v):
            if ideal_edge_in_L(g, a):
                ideal_classes.append(a)
    ideal_classes.sort(key=lambda a: a.key())

    collapse_moves = []
    for p in range(g.num_pairs):
        if gg.is_collapsible(g, p) and gg.in_L(gg.collapse(g, p).gog):
            collapse_moves.append(p)

    ideal_pairs = []
    for i in range(len(ideal_classes)):
        for j in range(i + 1, len(ideal_classes)):
            pair = forest_pair(g, ideal_classes[i], ideal_classes[j])
            if pair is None:
                continue
            try:
                h = blow_up_pair(g, pair)
            except SpineError:
                continue
            if gg.in_L(h):
                ideal_pairs.append((i, j))

    collapse_pairs = []
    for a in range(len(collapse_moves)):
        for b in range(a + 1, len(collapse_moves)):
            p, q = collapse_moves[a], collapse_moves[b]
            forest = gg.orient_forest(g, [p, q])
            if forest is None:
                continue
            res = gg.collapse_forest(g, forest)
            if gg.in_L(res.gog):
                collapse_pairs.append((p, q))

    return Link(g, ideal_classes, collapse_moves, ideal_pairs, collapse_pairs)


# -- symmetries --------------------------------------------------------------


@dataclass(frozen=True)
class Symmetry:
    """A graph-of-groups automorphism with twist decorations.

    phi: vertex permutation; emap: oriented-edge permutation; fvs: one
    isomorphism G_v -> G_phi(v) per vertex; twists: one element of
    G_phi(origin(e)) per oriented edge (the ad-freedom of the compatibility
    squares).
    """

    phi: tuple
    emap: tuple
    fvs: tuple
    twists: tuple

    def on_direction(self, g, v, d):
        e2 = self.emap[d.edge]
        v2 = self.phi[v]
        T = g.vertex_groups[v2]
        tw = self.twists[d.edge]
        inv_tw = T.inv(tw)
        coset = tuple(sorted(T.mul(self.fvs[v](x), inv_tw) for x in d.coset))
        return v2, Direction(e2, coset)

    def on_ideal_edge(self, g, a):
        v2 = None
        alpha = set()
        for d in a.alpha:
            v2, d2 = self.on_direction(g, a.base, d)
            alpha.add(d2)
        stab = tuple(sorted(self.fvs[a.base](x) for x in a.stab))
        return IdealEdge(v2, frozenset(alpha), stab)

    def on_pair(self, p):
        return self.emap[2 * p] >> 1


def _twist_is_valid(g, sym_phi, emap, fvs, e, tw):
    """Existence of f_e making the compatibility square commute with twist tw."""
    inc = g.inclusions[e]
    e2 = emap[e]
    inc2 = g.inclusions[e2]
    T = g.vertex_groups[g.origin[e2]]
    im2 = set(inc2.image_of)
    inv_tw = T.inv(tw)
    mapped = [T.mul(T.mul(inv_tw, fvs[g.origin[e]](x)), tw) for x in inc.image_of]
    return set(mapped) <= im2 and len(set(mapped)) == len(mapped)


def symmetry_generators(g):
    """A generating set of certified symmetries: graph automorphisms with a
    compatible decoration, vertex-group automorphisms, and single twists."""
    gens = []
    n = g.num_vertices
    ident_phi = tuple(range(n))
    ident_emap = tuple(range(len(g.origin)))
    id_fvs = []
    for G in g.vertex_groups:
        id_fvs.append(Monomorphism(G, G, range(G.order)))
    id_fvs = tuple(id_fvs)
    zero_twists = tuple(0 for _ in g.origin)

    # graph automorphisms (one decoration each)
    for phi, edge_bij in gg._graph_matchings(g, g):
        phi = tuple(phi)
        emap = tuple(edge_bij[e] for e in range(len(g.origin)))
        fvs = []
        ok = True
        for v in range(n):
            isos = all_isomorphisms(g.vertex_groups[v], g.vertex_groups[phi[v]])
            if not isos:
                ok = False
                break
            fvs.append(isos[0])
        if not ok:
            continue
        fvs = tuple(fvs)
        if all(
            _twist_is_valid(g, phi, emap, fvs, e, 0) for e in range(len(g.origin))
        ):
            gens.append(Symmetry(phi, emap, fvs, zero_twists))

    # vertex-group automorphisms
    for v in range(n):
        for f in all_isomorphisms(g.vertex_groups[v], g.vertex_groups[v]):
            fvs = tuple(f if u == v else id_fvs[u] for u in range(n))
            if all(
                _twist_is_valid(g, ident_phi, ident_emap, fvs, e, 0)
                for e in range(len(g.origin))
            ):
                gens.append(Symmetry(ident_phi, ident_emap, fvs, zero_twists))

    # single-edge twists
    for e in range(len(g.origin)):
        T = g.vertex_groups[g.origin[e]]
        for tw in T.elements():
            if tw == 0:
                continue
            if _twist_is_valid(g, ident_phi, ident_emap, id_fvs, e, tw):
                twists = tuple(tw if i == e else 0 for i in range(len(g.origin)))
                gens.append(Symmetry(ident_phi, ident_emap, id_fvs, twists))
    return gens


def link_symmetry_orbits(g, link):
    """Partition of the link corners (simplicial edges) under the certified
    symmetry generators; a refinement of the true Out-orbit partition."""
    gens = symmetry_generators(g)

    def canon_of_ideal(a):
        return canonical_ideal_edge(g, a).key()

    ideal_index = {a.key(): i for i, a in enumerate(link.ideal_classes)}

    def map_node(sym, node):
        kind, idx = node
        if kind == "C":
            return ("C", tuple(sorted(sym.on_pair(p) for p in idx)))
        mapped = []
        for i in idx:
            b = sym.on_ideal_edge(g, link.ideal_classes[i])
            key = canon_of_ideal(b)
            if key not in ideal_index:
                return None
            mapped.append(ideal_index[key])
        return ("I", tuple(sorted(mapped)))

    edges = sorted({tuple(sorted(e)) for e in link.simplicial_edges()})
    edge_set = {e: n for n, e in enumerate(edges)}
    parent = list(range(len(edges)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x, y):
        rx, ry = find(x), find(y)
        if rx != ry:
            parent[rx] = ry

    for sym in gens:
        for n, (a, b) in enumerate(edges):
            ma = map_node(sym, a)
            mb = map_node(sym, b)
            if ma is None or mb is None:
                continue
            m = edge_set.get(tuple(sorted((ma, mb))))
            if m is not None:
                union(n, m)
    groups = {}
    for n, e in enumerate(edges):
        groups.setdefault(find(n), []).append(e)
    return sorted(groups.values())
