"""Graph-of-groups core: collapses, shelters, surviving edges, spine membership.

Oriented edges are primary: pair p has orientations 2p and 2p+1, and
bar(e) = e ^ 1.  origin[e] is the initial vertex of oriented edge e, and
inclusions[e] is the edge-to-vertex monomorphism at that end.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .groups import (
    FiniteGroup,
    GroupError,
    Monomorphism,
    all_isomorphisms,
    make_trivial,
    trivial_into,
)

_TRIVIAL = make_trivial()


class GogError(ValueError):
    pass


class GraphOfGroups:
    __slots__ = ("vertex_groups", "origin", "edge_groups", "inclusions", "name")

    def __init__(self, vertex_groups, origin, edge_groups, inclusions, name=""):
        self.vertex_groups = tuple(vertex_groups)
        self.origin = tuple(origin)
        self.edge_groups = tuple(edge_groups)
        self.inclusions = tuple(inclusions)
        self.name = name
        if len(self.origin) != 2 * len(self.edge_groups):
            raise GogError("bad-involution: origin must list both orientations")
        if len(self.inclusions) != len(self.origin):
            raise GogError("each oriented edge needs an inclusion")

    # -- basic structure ----------------------------------------------------

    @property
    def num_vertices(self):
        return len(self.vertex_groups)

    @property
    def num_pairs(self):
        return len(self.edge_groups)

    def bar(self, e):
        return e ^ 1

    def pair_of(self, e):
        return e >> 1

    def orientations(self, p):
        return 2 * p, 2 * p + 1

    def terminus(self, e):
        return self.origin[e ^ 1]

    def endpoints(self, p):
        return self.origin[2 * p], self.origin[2 * p + 1]

    def is_loop(self, p):
        u, w = self.endpoints(p)
        return u == w

    def star(self, v):
        """Oriented edges with initial vertex v (loops appear twice)."""
        return [e for e in range(len(self.origin)) if self.origin[e] == v]

    def valence(self, v):
        return len(self.star(v))

    def is_connected(self):
        n = self.num_vertices
        if n == 0:
            return False
        seen = {0}
        frontier = [0]
        while frontier:
            new = []
            for v in frontier:
                for e in self.star(v):
                    w = self.terminus(e)
                    if w not in seen:
                        seen.add(w)
                        new.append(w)
            frontier = new
        return len(seen) == n

    def is_free_splitting(self):
        return all(G.is_trivial() for G in self.edge_groups)

    def __repr__(self):
        return "GraphOfGroups(V=%d, E=%d%s)" % (
            self.num_vertices,
            self.num_pairs,
            ", " + self.name if self.name else "",
        )


def build(vertex_groups, edges, name=""):
    """Build a graph of groups from edge tuples.

    Each edge is (u, w, edge_group, images_at_u, images_at_w); pass None for
    a trivial edge group with the obvious inclusions.
    """
    vertex_groups = list(vertex_groups)
    origin = []
    edge_groups = []
    inclusions = []
    for spec in edges:
        if len(spec) == 2:
            u, w = spec
            eg, img_u, img_w = None, None, None
        else:
            u, w, eg, img_u, img_w = spec
        if eg is None:
            eg = _TRIVIAL
            inc_u = trivial_into(vertex_groups[u], eg)
            inc_w = trivial_into(vertex_groups[w], eg)
        else:
            inc_u = Monomorphism(eg, vertex_groups[u], img_u)
            inc_w = Monomorphism(eg, vertex_groups[w], img_w)
        origin += [u, w]
        edge_groups.append(eg)
        inclusions += [inc_u, inc_w]
    return GraphOfGroups(vertex_groups, origin, edge_groups, inclusions, name)


def free_splitting(vertex_groups, edge_list, name=""):
    return build(vertex_groups, [(u, w) for u, w in edge_list], name)


def validate(g):
    """Check all type invariants; raises GogError at the first violation."""
    if not g.is_connected():
        raise GogError("disconnected-graph")
    for e, inc in enumerate(g.inclusions):
        if inc.source is not g.edge_groups[e >> 1]:
            raise GogError("bad-monomorphism: wrong source at oriented edge %d" % e)
        if inc.target is not g.vertex_groups[g.origin[e]]:
            raise GogError("bad-monomorphism: wrong target at oriented edge %d" % e)
    return True


# -- inessential vertices, collapsibility --------------------------------


def is_inessential(g, v):
    """True iff every edge-to-vertex inclusion at v is surjective."""
    return all(g.inclusions[e].is_surjective() for e in g.star(v))


def is_collapsible(g, p):
    """Endpoints distinct and at least one inclusion surjective."""
    if g.is_loop(p):
        return False
    e0, e1 = g.orientations(p)
    return g.inclusions[e0].is_surjective() or g.inclusions[e1].is_surjective()


def is_reduced(g):
    return not any(is_collapsible(g, p) for p in range(g.num_pairs))


@dataclass(frozen=True)
class CollapseResult:
    gog: GraphOfGroups
    vertex_map: tuple  # old vertex -> new vertex
    pair_map: tuple  # old pair -> new pair, None for the collapsed pair


def collapse(g, p, absorb=None):
    """Collapse edge pair p; returns a CollapseResult.

    `absorb` optionally names the endpoint to be absorbed (its inclusion
    must be surjective); by default the surjective side is absorbed, the
    lower-indexed vertex kept on ties.
    """
    if not is_collapsible(g, p):
        raise GogError("not-collapsible")
    e0, e1 = g.orientations(p)
    u, w = g.origin[e0], g.origin[e1]
    s0 = g.inclusions[e0].is_surjective()
    s1 = g.inclusions[e1].is_surjective()
    if absorb is None:
        if s0 and s1:
            absorb = max(u, w)
        elif s1:
            absorb = w
        else:
            absorb = u
    if absorb == w:
        keep, lost, e_keep, e_lost = u, w, e0, e1
    elif absorb == u:
        keep, lost, e_keep, e_lost = w, u, e1, e0
    else:
        raise GogError("absorb must be an endpoint")
    if not g.inclusions[e_lost].is_surjective():
        raise GogError("absorbed side must have surjective inclusion")

    # G_f -> G_lost ~ G_e -> G_keep for edges formerly at the lost vertex.
    reroute = g.inclusions[e_lost].inverse().then(g.inclusions[e_keep])

    vmap = []
    nxt = 0
    for v in range(g.num_vertices):
        if v == lost:
            vmap.append(None)
        else:
            vmap.append(nxt)
            nxt += 1
    vmap[lost] = vmap[keep]

    new_vgroups = [g.vertex_groups[v] for v in range(g.num_vertices) if v != lost]
    new_origin = []
    new_egroups = []
    new_incs = []
    pmap = []
    for q in range(g.num_pairs):
        if q == p:
            pmap.append(None)
            continue
        pmap.append(len(new_egroups))
        new_egroups.append(g.edge_groups[q])
        for e in g.orientations(q):
            v = g.origin[e]
            new_origin.append(vmap[v])
            inc = g.inclusions[e]
            if v == lost:
                inc = inc.then(reroute)
            new_incs.append(inc)
    out = GraphOfGroups(new_vgroups, new_origin, new_egroups, new_incs, g.name)
    return CollapseResult(out, tuple(vmap), tuple(pmap))


@dataclass(frozen=True)
class CollapsibleForest:
    """Pairs with a chosen orientation: each oriented edge points away from
    its component's source, and its terminal inclusion is surjective."""

    oriented_edges: tuple  # oriented edge ids, one per pair

    @property
    def pairs(self):
        return frozenset(e >> 1 for e in self.oriented_edges)


def check_collapsible_forest(g, oriented_edges):
    """Validate the oriented forest conditions; raises GogError if invalid."""
    oriented_edges = tuple(oriented_edges)
    pairs = [e >> 1 for e in oriented_edges]
    if len(set(pairs)) != len(pairs):
        raise GogError("invalid-forest: repeated pair")
    for e in oriented_edges:
        p = e >> 1
        if g.is_loop(p):
            raise GogError("invalid-forest: loop edge")
        if not g.inclusions[e ^ 1].is_surjective():
            raise GogError("invalid-forest: terminal inclusion not surjective")
    # components must be trees oriented away from a single source
    verts = set()
    for e in oriented_edges:
        verts.add(g.origin[e])
        verts.add(g.terminus(e))
    indeg = {v: 0 for v in verts}
    for e in oriented_edges:
        indeg[g.terminus(e)] += 1
    if any(d > 1 for d in indeg.values()):
        raise GogError("invalid-forest: vertex with two incoming edges")
    # acyclicity: |edges| per component = |vertices| - 1
    parent = {v: v for v in verts}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in oriented_edges:
        a, b = find(g.origin[e]), find(g.terminus(e))
        if a == b:
            raise GogError("invalid-forest: component contains a cycle")
        parent[a] = b
    return CollapsibleForest(oriented_edges)


def orient_forest(g, pairs):
    """Find an orientation making the pair set a collapsible forest, or None."""
    pairs = sorted(set(pairs))

    def backtrack(i, chosen):
        if i == len(pairs):
            try:
                return check_collapsible_forest(g, tuple(chosen))
            except GogError:
                return None
        for e in g.orientations(pairs[i]):
            if g.inclusions[e ^ 1].is_surjective():
                res = backtrack(i + 1, chosen + [e])
                if res is not None:
                    return res
        return None

    return backtrack(0, [])


def collapse_forest(g, forest):
    """Collapse an oriented collapsible forest; returns a CollapseResult.

    Equals iterated single-edge collapses from each source outward, and is
    independent of the admissible order.
    """
    if isinstance(forest, CollapsibleForest):
        oriented = list(forest.oriented_edges)
    else:
        fo = orient_forest(g, forest)
        if fo is None:
            raise GogError("invalid-forest")
        oriented = list(fo.oriented_edges)
    check_collapsible_forest(g, oriented)

    cur = g
    vmap = list(range(g.num_vertices))
    pmap = list(range(g.num_pairs))
    remaining = oriented
    while remaining:
        # an edge whose initial vertex has no incoming remaining edge
        targets = {cur.terminus(_relabel_edge(e, pmap)) for e in remaining}
        pick = None
        for e in remaining:
            ce = _relabel_edge(e, pmap)
            if cur.origin[ce] not in targets:
                pick = e
                break
        assert pick is not None
        ce = _relabel_edge(pick, pmap)
        res = collapse(cur, ce >> 1, absorb=cur.terminus(ce))
        cur = res.gog
        vmap = [res.vertex_map[v] for v in vmap]
        pmap = [None if q is None else res.pair_map[q] for q in pmap]
        remaining = [e for e in remaining if e != pick]
    return CollapseResult(cur, tuple(vmap), tuple(pmap))


def _relabel_edge(e, pmap):
    q = pmap[e >> 1]
    if q is None:
        raise GogError("edge already collapsed")
    return 2 * q + (e & 1)


# -- shelters ------------------------------------------------------------


@dataclass(frozen=True)
class Shelter:
    kind: str  # "segment" | "basepointed_loop" | "flat_loop" | "ascending_loop"
    pairs: frozenset
    base: int | None = None  # basepointed loop: the distinguished vertex


def _segment_shelters(g, through=None):
    """All segment shelters, as oriented edge paths, deduplicated."""
    out = {}
    nor = len(g.origin)

    def endpoint_ok(e):
        # e is the single shelter edge at its initial vertex: must be
        # non-surjective there for a valid segment endpoint.
        return not g.inclusions[e].is_surjective()

    def extend(path, verts):
        e_last = path[-1]
        v = g.terminus(e_last)
        # try to stop here: v endpoint via bar(e_last)
        if endpoint_ok(e_last ^ 1):
            first = path[0]
            if endpoint_ok(first):
                pairs = frozenset(e >> 1 for e in path)
                if through is None or through in pairs:
                    out.setdefault(pairs, Shelter("segment", pairs))
        # continue: v interior needs both inclusions surjective
        if not g.inclusions[e_last ^ 1].is_surjective():
            return
        for e in g.star(v):
            if e >> 1 == e_last >> 1:
                continue
            w = g.terminus(e)
            if w in verts or w == g.origin[path[0]]:
                continue
            if not g.inclusions[e].is_surjective():
                continue
            extend(path + [e], verts | {w})

    for e in range(nor):
        if g.is_loop(e >> 1):
            continue
        u, w = g.origin[e], g.terminus(e)
        extend([e], {u, w})
    return list(out.values())


def _cycle_shelters(g, through=None):
    """All embedded-circle shelters (all three loop kinds), deduplicated."""
    out = {}

    def classify(cycle_edges):
        # cycle_edges: oriented edges e1..ek with terminus(e_i) = origin(e_{i+1})
        k = len(cycle_edges)
        verts = [g.origin[e] for e in cycle_edges]
        # inclusions at vertex v_i: incoming bar(e_{i-1}) and outgoing e_i
        surj_in = [g.inclusions[cycle_edges[i - 1] ^ 1].is_surjective() for i in range(k)]
        surj_out = [g.inclusions[cycle_edges[i]].is_surjective() for i in range(k)]
        pairs = frozenset(e >> 1 for e in cycle_edges)
        if all(surj_in) and all(surj_out):
            return Shelter("flat_loop", pairs)
        bad = [i for i in range(k) if not surj_in[i] and not surj_out[i]]
        iness = [i for i in range(k) if surj_in[i] and surj_out[i]]
        if len(bad) == 1 and len(iness) == k - 1:
            return Shelter("basepointed_loop", pairs, base=verts[bad[0]])
        if all(surj_out) or all(surj_in):
            return Shelter("ascending_loop", pairs)
        return None

    # loops (single-edge circles)
    for p in range(g.num_pairs):
        if g.is_loop(p):
            if through is not None and p != through:
                continue
            s = classify([2 * p])
            if s is not None:
                out.setdefault(s.pairs, s)

    # longer embedded cycles
    def search(path, verts):
        e_last = path[-1]
        v = g.terminus(e_last)
        if v == g.origin[path[0]] and len(path) >= 2:
            pairs = frozenset(e >> 1 for e in path)
            if pairs not in out and (through is None or through in pairs):
                s = classify(path)
                if s is not None:
                    out[pairs] = s
            # fall through: other cycles may extend differently -- but an
            # embedded cycle closes exactly once, so stop here.
            return
        if v in verts:
            return
        for e in g.star(v):
            if e >> 1 == e_last >> 1 or g.is_loop(e >> 1):
                continue
            search(path + [e], verts | {v})

    for e in range(len(g.origin)):
        if g.is_loop(e >> 1):
            continue
        search([e], {g.origin[e]})
    return list(out.values())


def all_shelters(g):
    return _segment_shelters(g) + _cycle_shelters(g)


def shelters_containing(g, p):
    """All shelters whose edge set contains pair p, without duplicates."""
    return [s for s in _segment_shelters(g, through=p) + _cycle_shelters(g, through=p)]


def is_surviving(g, p):
    """Clay's criterion: an edge survives iff it lies in a shelter."""
    return bool(shelters_containing(g, p))


def surviving_pairs(g):
    s = set()
    for sh in all_shelters(g):
        s.update(sh.pairs)
    return frozenset(s)


def has_ascending_shelter(g):
    return any(s.kind == "ascending_loop" for s in _cycle_shelters(g))


def in_L(g, check_ascending=True):
    """Membership in the reduced spine: all edges surviving, no inessential
    valence-1/2 vertices.  Rejects ascending deformation data outright."""
    validate(g)
    if check_ascending and has_ascending_shelter(g):
        raise GogError("ascending deformation space: not supported")
    for v in range(g.num_vertices):
        if g.valence(v) in (1, 2) and is_inessential(g, v):
            return False
    return surviving_pairs(g) == frozenset(range(g.num_pairs))


def signature(g):
    """(sorted nontrivial vertex-group iso keys, free rank) of a free splitting."""
    if not g.is_free_splitting():
        raise GogError("not-a-free-splitting")
    k = g.num_pairs - g.num_vertices + 1
    factors = sorted(
        G.iso_key() for G in g.vertex_groups if not G.is_trivial()
    )
    return tuple(factors), k


# -- brute-force oracles ---------------------------------------------------


def surviving_bruteforce(g):
    """Pairs that survive in some reduced collapse (exhaustive collapse tree)."""
    surv = set()
    seen = set()

    def key(h, pair_origin):
        return (
            tuple(id(G) for G in h.vertex_groups),
            h.origin,
            tuple(id(G) for G in h.edge_groups),
            tuple(inc.image_of for inc in h.inclusions),
            pair_origin,
        )

    def rec(h, pair_origin):
        k = key(h, pair_origin)
        if k in seen:
            return
        seen.add(k)
        collapsibles = [p for p in range(h.num_pairs) if is_collapsible(h, p)]
        if not collapsibles:
            surv.update(pair_origin)
            return
        for p in collapsibles:
            res = collapse(h, p)
            new_origin = tuple(
                pair_origin[q] for q in range(h.num_pairs) if q != p
            )
            rec(res.gog, new_origin)

    rec(g, tuple(range(g.num_pairs)))
    return frozenset(surv)


def in_L_bruteforce(g):
    validate(g)
    for v in range(g.num_vertices):
        if g.valence(v) in (1, 2) and is_inessential(g, v):
            return False
    return surviving_bruteforce(g) == frozenset(range(g.num_pairs))


# -- isomorphism -----------------------------------------------------------


def _graph_matchings(g, h, vertex_marks_g=None, vertex_marks_h=None):
    """Yield (vertex bijection, oriented-edge bijection) graph isomorphisms."""
    if g.num_vertices != h.num_vertices or g.num_pairs != h.num_pairs:
        return

    def vkey(x, v, marks):
        mk = marks[v] if marks else None
        return (x.vertex_groups[v].order, x.vertex_groups[v].iso_key(), x.valence(v), mk)

    gkeys = [vkey(g, v, vertex_marks_g) for v in range(g.num_vertices)]
    hkeys = [vkey(h, v, vertex_marks_h) for v in range(h.num_vertices)]
    if sorted(gkeys) != sorted(hkeys):
        return
    classes = {}
    for v, k in enumerate(hkeys):
        classes.setdefault(k, []).append(v)

    slots = [classes.get(k, []) for k in gkeys]

    def edge_class(x, p):
        u, w = x.endpoints(p)
        return (min(u, w), max(u, w))

    for choice in itertools.product(*slots):
        if len(set(choice)) != g.num_vertices:
            continue
        phi = list(choice)
        # group pairs by endpoint classes and match within
        gby = {}
        for p in range(g.num_pairs):
            u, w = g.endpoints(p)
            key = (min(phi[u], phi[w]), max(phi[u], phi[w]), g.edge_groups[p].iso_key())
            gby.setdefault(key, []).append(p)
        hby = {}
        for p in range(h.num_pairs):
            u, w = h.endpoints(p)
            key = (min(u, w), max(u, w), h.edge_groups[p].iso_key())
            hby.setdefault(key, []).append(p)
        if set(gby) != set(hby) or any(
            len(gby[k]) != len(hby[k]) for k in gby
        ):
            continue
        keys = sorted(gby)
        perms = [itertools.permutations(hby[k]) for k in keys]
        for assignment in itertools.product(*perms):
            pair_map = {}
            ok = True
            for k, perm in zip(keys, assignment):
                for p, q in zip(gby[k], perm):
                    pair_map[p] = q
            # orient each pair consistently
            emap = {}
            for p, q in pair_map.items():
                u, w = g.endpoints(p)
                hu, hw = h.endpoints(q)
                if (phi[u], phi[w]) == (hu, hw):
                    orients = [(2 * q, 2 * q + 1)]
                    if phi[u] == phi[w]:
                        orients.append((2 * q + 1, 2 * q))
                elif (phi[u], phi[w]) == (hw, hu):
                    orients = [(2 * q + 1, 2 * q)]
                else:
                    ok = False
                    break
                emap[p] = orients
            if not ok:
                continue
            for orient_choice in itertools.product(*(emap[p] for p in sorted(emap))):
                edge_bij = {}
                for p, (a, b) in zip(sorted(emap), orient_choice):
                    edge_bij[2 * p] = a
                    edge_bij[2 * p + 1] = b
                yield phi, edge_bij


def is_isomorphic(g, h, vertex_marks_g=None, vertex_marks_h=None):
    """Isomorphism of graphs of groups (inclusions match up to ad-twists)."""
    for phi, edge_bij in _graph_matchings(g, h, vertex_marks_g, vertex_marks_h):
        if _decorations_match(g, h, phi, edge_bij):
            return True
    return False


def _decorations_match(g, h, phi, edge_bij):
    # choose vertex-group isomorphisms f_v, then per edge check existence of
    # f_e with both sides commuting up to inner automorphisms of the targets
    vertex_iso_lists = []
    for v in range(g.num_vertices):
        isos = all_isomorphisms(g.vertex_groups[v], h.vertex_groups[phi[v]])
        if not isos:
            return False
        vertex_iso_lists.append(isos)

    pairs = list(range(g.num_pairs))

    def edge_ok(p, fvs):
        q = edge_bij[2 * p] >> 1
        Eg, Eh = g.edge_groups[p], h.edge_groups[q]
        for fe in all_isomorphisms(Eg, Eh):
            good = True
            for e in g.orientations(p):
                v = g.origin[e]
                he = edge_bij[e]
                target = h.vertex_groups[h.origin[he]]
                want = [fvs[v](g.inclusions[e](a)) for a in Eg.elements()]
                got0 = [h.inclusions[he](fe(a)) for a in Eg.elements()]
                if not any(
                    all(target.conj(c, x) == w for x, w in zip(got0, want))
                    for c in target.elements()
                ):
                    good = False
                    break
            if good:
                return True
        return False

    for fvs in itertools.product(*vertex_iso_lists):
        if all(edge_ok(p, fvs) for p in pairs):
            return True
    return False


# -- canonical forms for free splittings -----------------------------------


def canonical_key(g, vertex_marks=None, pair_marks=None):
    """Canonical form of a free splitting, optionally with decorations.

    Two decorated free splittings get equal keys iff they are isomorphic as
    decorated graphs of groups.  Marks must be hashable and orderable.
    """
    if not g.is_free_splitting():
        raise GogError("canonical_key requires a free splitting")
    n = g.num_vertices

    def vkey(v):
        mk = vertex_marks[v] if vertex_marks else ""
        return (g.vertex_groups[v].order, g.vertex_groups[v].iso_key(), g.valence(v), mk)

    base_keys = [vkey(v) for v in range(n)]
    classes = {}
    for v in range(n):
        classes.setdefault(base_keys[v], []).append(v)
    class_keys = sorted(classes)
    best = None
    pools = [itertools.permutations(classes[k]) for k in class_keys]
    for arrangement in itertools.product(*pools):
        perm = {}
        i = 0
        for k, block in zip(class_keys, arrangement):
            for v in block:
                perm[v] = i
                i += 1
        vert_part = tuple(base_keys[v] for v in sorted(perm, key=perm.get))
        edge_part = []
        for p in range(g.num_pairs):
            u, w = g.endpoints(p)
            a, b = sorted((perm[u], perm[w]))
            mk = pair_marks[p] if pair_marks else ""
            edge_part.append((a, b, mk))
        key = (vert_part, tuple(sorted(edge_part)))
        if best is None or key < best:
            best = key
    return best
