"""The A*B*Z specialization: combinatorial-type census, marked maximal
splittings as cosets in F = A*B*<t>, the square/octagon tiled ball, and the
separation check.

A vertex of the spine is represented concretely: the two finite vertex
groups as conjugates uAu^-1, vBv^-1 and the loop as an element s of F,
up to global conjugation, the stabilizer of the combinatorial type, and
per-factor automorphisms.  Moves (collapse + alternative expansion) act by
explicit formulas on (u, v, s); identifications are by canonical forms, not
by marking homotopy classes.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from . import gog as gg
from .groups import are_isomorphic, make_trivial


class AbzError(ValueError):
    pass


# -- words in F = A * B * <t> -------------------------------------------------


class FreeProductWords:
    """Normal-form arithmetic in A * B * Z for table groups A and B.

    A word is a tuple of syllables ('a', i), ('b', j), ('t', k) with i, j
    nonidentity and k a nonzero integer.
    """

    def __init__(self, A, B):
        self.A = A
        self.B = B

    def reduce(self, syllables):
        out = []
        for kind, val in syllables:
            if kind == "a":
                val = val if isinstance(val, int) else int(val)
                if val == 0:
                    continue
            elif kind == "b":
                if val == 0:
                    continue
            elif kind == "t":
                if val == 0:
                    continue
            else:
                raise AbzError("bad syllable kind %r" % (kind,))
            if out and out[-1][0] == kind:
                pk, pv = out.pop()
                if kind == "a":
                    nv = self.A.mul(pv, val)
                elif kind == "b":
                    nv = self.B.mul(pv, val)
                else:
                    nv = pv + val
                if nv != 0:
                    out.append((kind, nv))
            else:
                out.append((kind, val))
        return tuple(out)

    def mul(self, *words):
        syl = []
        for w in words:
            syl.extend(w)
        return self.reduce(syl)

    def inv(self, word):
        out = []
        for kind, val in reversed(word):
            if kind == "a":
                out.append(("a", self.A.inv(val)))
            elif kind == "b":
                out.append(("b", self.B.inv(val)))
            else:
                out.append(("t", -val))
        return tuple(out)

    def conj(self, g, w):
        return self.mul(g, w, self.inv(g))

    def a(self, i):
        return self.reduce([("a", i)])

    def b(self, j):
        return self.reduce([("b", j)])

    def t(self, k=1):
        return self.reduce([("t", k)])

    identity = ()

    def coset_rep_a(self, u):
        """Canonical representative of the coset u*A (drop a trailing a)."""
        if u and u[-1][0] == "a":
            return u[:-1]
        return u

    def coset_rep_b(self, v):
        if v and v[-1][0] == "b":
            return v[:-1]
        return v


# -- combinatorial type census ------------------------------------------------


@dataclass
class CombType:
    id: str
    template: object  # GraphOfGroups


TYPE_IDS = (
    "maximal",
    "intermediate-loop",
    "intermediate-A",
    "intermediate-B",
    "minimal-2loop",
    "minimal-loop-A",
    "minimal-loop-B",
)


def make_templates(A, B):
    T = make_trivial()
    return {
        "maximal": gg.free_splitting([A, B, T, T], [(0, 2), (1, 3), (2, 3), (2, 3)]),
        "intermediate-loop": gg.free_splitting([A, B, T], [(0, 2), (1, 2), (2, 2)]),
        "intermediate-A": gg.free_splitting([A, B, T], [(0, 2), (0, 2), (1, 2)]),
        "intermediate-B": gg.free_splitting([B, A, T], [(0, 2), (0, 2), (1, 2)]),
        "minimal-2loop": gg.free_splitting([A, B], [(0, 1), (0, 1)]),
        "minimal-loop-A": gg.free_splitting([A, B], [(0, 0), (0, 1)]),
        "minimal-loop-B": gg.free_splitting([B, A], [(0, 0), (0, 1)]),
    }


def census(A, B):
    """The combinatorial types of vertices of the spine: 7, or 5 if A = B."""
    if A.is_trivial() or B.is_trivial():
        raise AbzError("trivial-factor")
    templates = make_templates(A, B)
    out = []
    for tid in TYPE_IDS:
        t = templates[tid]
        if not gg.in_L(t):
            raise AbzError("template %s not in the spine" % tid)
        if are_isomorphic(A, B):
            if any(gg.is_isomorphic(t, c.template) for c in out):
                continue
        out.append(CombType(tid, t))
    return out


# -- marked maximal splittings ------------------------------------------------


@dataclass(frozen=True)
class MaxState:
    """A maximal vertex: groups uAu^-1 and vBv^-1 plus the loop element s."""

    u: tuple
    v: tuple
    s: tuple


class SpineModel:
    """The move groupoid on maximal vertices of L(A*B*Z)."""

    def __init__(self, A, B):
        self.A = A
        self.B = B
        self.F = FreeProductWords(A, B)
        self.symmetric = are_isomorphic(A, B)

    def base(self):
        return self.canon(MaxState((), (), self.F.t()))

    # equivalences ------------------------------------------------------

    def _conj(self, st, g):
        F = self.F
        return MaxState(
            F.coset_rep_a(F.mul(g, st.u)),
            F.coset_rep_b(F.mul(g, st.v)),
            F.conj(g, st.s),
        )

    def _swap(self, st):
        # exchanging the two parallel edges of the template
        F = self.F
        return MaxState(st.u, F.coset_rep_b(F.mul(st.s, st.v)), F.inv(st.s))

    def canon(self, st):
        """Canonical representative: the x slot always carries the conjugate
        of the first factor, so the only identifications are global
        conjugation and the swap of the two parallel edges."""
        F = self.F
        forms = [st, self._swap(st)]
        best = None
        for f in forms:
            base = self._conj(f, F.inv(f.u))
            for a in self.A.elements():
                cand = self._conj(base, F.a(a))
                key = (cand.u, cand.v, cand.s)
                if best is None or key < best:
                    best = key
        return MaxState(*best)

    # moves ------------------------------------------------------------

    def phi_a(self, st, a):
        return self.F.conj(st.u, self.F.a(a))

    def phi_b(self, st, b):
        return self.F.conj(st.v, self.F.b(b))

    def moves(self, st):
        """All (label, neighbour) moves: collapse an edge, expand the other way."""
        F = self.F
        out = []
        for a in self.A.elements():
            if a == 0:
                continue
            out.append(("x%d" % a, self.canon(
                MaxState(st.u, st.v, F.mul(self.phi_a(st, a), st.s)))))
        for b in self.B.elements():
            if b == 0:
                continue
            out.append(("y%d" % b, self.canon(
                MaxState(st.u, st.v, F.mul(st.s, self.phi_b(st, b))))))
        out.append(("z", self.canon(MaxState(st.u, st.v, F.inv(st.s)))))
        out.append(("w", self.canon(
            MaxState(st.u, F.coset_rep_b(F.mul(st.s, st.v)), st.s))))
        return out

    def move_family(self, st, fam):
        """The co-expansions sharing one intermediate with st (incl. st)."""
        F = self.F
        if fam == "x":
            return {self.canon(MaxState(st.u, st.v, F.mul(self.phi_a(st, a), st.s)))
                    for a in self.A.elements()}
        if fam == "y":
            return {self.canon(MaxState(st.u, st.v, F.mul(st.s, self.phi_b(st, b))))
                    for b in self.B.elements()}
        if fam == "z":
            return {self.canon(st), self.canon(MaxState(st.u, st.v, F.inv(st.s)))}
        if fam == "w":
            return {self.canon(st), self.canon(
                MaxState(st.u, F.coset_rep_b(F.mul(st.s, st.v)), st.s))}
        raise AbzError("unknown family %r" % (fam,))

    def intermediate(self, st, fam):
        """Canonical id of the intermediate below st in direction fam."""
        members = self.move_family(st, fam)
        return (fam if fam in ("x", "y") else "zw", tuple(sorted(
            (m.u, m.v, m.s) for m in members)))

    def _triple_key(self, st):
        """Conjugation-only canonical form (keeps the two edge slots apart)."""
        F = self.F
        base = self._conj(st, F.inv(st.u))
        best = None
        for a in self.A.elements():
            cand = self._conj(base, F.a(a))
            key = (cand.u, cand.v, cand.s)
            if best is None or key < best:
                best = key
        return best

    def minimal(self, st, fams):
        """Canonical id of the minimal below st for a pair of families.

        The star closure runs on triples: the surviving loop edge is pinned
        in one slot (via the swap for the w side), after which every loop
        move collapses the other slot.
        """
        fams = tuple(sorted(fams))
        if fams == ("w", "z"):
            raise AbzError("the two nonseparating edges cannot both collapse")
        F = self.F
        st = self.canon(st)
        if "w" in fams:
            start = self._swap(st)
        else:
            start = st
        loop_move = None if fams == ("x", "y") else "z"
        letter_fams = [f for f in fams if f in ("x", "y")]

        def triple_moves(T):
            out = []
            for f in letter_fams:
                if f == "x":
                    for a in self.A.elements():
                        if a:
                            out.append(MaxState(
                                T.u, T.v, F.mul(F.conj(T.u, F.a(a)), T.s)))
                else:
                    for b in self.B.elements():
                        if b:
                            out.append(MaxState(
                                T.u, T.v, F.mul(T.s, F.conj(T.v, F.b(b)))))
            if loop_move:
                out.append(MaxState(T.u, T.v, F.inv(T.s)))
            return out

        seen = {self._triple_key(start): start}
        frontier = [start]
        while frontier:
            new = []
            for T in frontier:
                for O in triple_moves(T):
                    k = self._triple_key(O)
                    if k not in seen:
                        seen[k] = O
                        new.append(O)
            frontier = new
        star = {self.canon(T) for T in seen.values()}
        kind = "square" if fams == ("x", "y") else "octagon"
        letters = "".join(letter_fams) or "xy"
        key = (letters, tuple(sorted((m.u, m.v, m.s) for m in star)))
        return key, kind, star

    def loop_partner(self, st, star):
        """The loop-intermediate neighbour of st inside a given minimal star."""
        F = self.F
        st = self.canon(st)
        z_nb = self.canon(MaxState(st.u, st.v, F.inv(st.s)))
        w_nb = self.canon(MaxState(st.u, F.coset_rep_b(F.mul(st.s, st.v)), st.s))
        cands = [nb for nb in {z_nb, w_nb} if nb in star and nb != st]
        if len(cands) != 1:
            raise AbzError("ambiguous loop intermediate in star")
        return cands[0]


MIN_PAIRS = (("x", "y"), ("x", "z"), ("x", "w"), ("y", "z"), ("y", "w"))


# -- the tiled complex --------------------------------------------------------


@dataclass
class Polygon:
    key: object
    vertices: list  # vertex ids around the cell
    corners: list  # Fractions, units of pi


class TiledComplex:
    """Triangulated square/octagon complex: flags (min < int < max) with the
    exact corner angles of the quarter-square and quarter-octagon pieces."""

    def __init__(self):
        self.kind = {}  # vertex id -> ('max'|'int'|'min', type tag)
        self.interior = {}
        self.edges = set()
        self.triangles = []  # (min id, int id, max id, family)
        self.labels = {}

    def add_vertex(self, vid, kind, tag, label=None):
        self.kind[vid] = (kind, tag)
        if label is not None:
            self.labels[vid] = label

    def add_triangle(self, mn, it, mx, family):
        for a, b in ((mn, it), (it, mx), (mn, mx)):
            self.edges.add(tuple(sorted((a, b), key=repr)))
        self.triangles.append((mn, it, mx, family))

    CORNERS = {
        "square": {"min": Fraction(1, 4), "int": Fraction(1, 2), "max": Fraction(1, 4)},
        "octagon": {"min": Fraction(1, 8), "int": Fraction(1, 2), "max": Fraction(3, 8)},
    }

    @property
    def polygons(self):
        out = []
        for i, (mn, it, mx, fam) in enumerate(self.triangles):
            c = self.CORNERS[fam]
            out.append(
                Polygon((fam, i), [mn, it, mx], [c["min"], c["int"], c["max"]])
            )
        return out

    def vertex_ids(self):
        return sorted(self.kind, key=repr)

    def is_interior(self, v):
        return self.interior.get(v, False)

    def vertex_link(self, v):
        """The metric link at v: nodes are incident edges, weighted edges are
        triangle corners."""
        from .metric import MetricGraph

        nodes = set()
        edges = []
        for mn, it, mx, fam in self.triangles:
            tri = {"min": mn, "int": it, "max": mx}
            if v not in tri.values():
                continue
            pos = [p for p, x in tri.items() if x == v][0]
            others = [x for p, x in tri.items() if x != v]
            e1 = tuple(sorted((v, others[0]), key=repr))
            e2 = tuple(sorted((v, others[1]), key=repr))
            nodes.update([e1, e2])
            edges.append((e1, e2, self.CORNERS[fam][pos]))
        return MetricGraph(sorted(nodes, key=repr), edges)

    def stats(self):
        from collections import Counter

        return Counter(kind for kind, _ in self.kind.values())


def build_ball(A, B, radius, max_radius=4):
    """The tiled ball of the spine around the base maximal vertex.

    Vertices are generated by the move groupoid; the ball contains every
    complete minimal star whose maximal corners lie within the given move
    distance of the base.
    """
    if radius > max_radius:
        raise AbzError("radius-too-large")
    model = SpineModel(A, B)
    base = model.base()
    dist = {base: 0}
    frontier = [base]
    while frontier:
        new = []
        for st in frontier:
            if dist[st] >= radius:
                continue
            for _, nb in model.moves(st):
                if nb not in dist:
                    dist[nb] = dist[st] + 1
                    new.append(nb)
        frontier = new
    core = set(dist)

    # every minimal star touching a core maximal is completed, so core
    # vertices carry their full links
    min_records = {}
    for st in sorted(core, key=lambda m: (m.u, m.v, m.s)):
        for fams in MIN_PAIRS:
            key, kind, star = model.minimal(st, fams)
            if key not in min_records:
                min_records[key] = (kind, star)

    cx = TiledComplex()
    cx.radius = radius
    maxid = {}

    def max_vertex(st):
        if st not in maxid:
            vid = ("max", (st.u, st.v, st.s))
            maxid[st] = vid
            cx.add_vertex(vid, "max", "maximal", label=dist.get(st))
        return maxid[st]

    for st in sorted(core, key=lambda m: (m.u, m.v, m.s)):
        max_vertex(st)
    int_ids = {}

    def int_id(ikey, tag):
        if ikey not in int_ids:
            iid = ("int",) + ikey
            int_ids[ikey] = iid
            cx.add_vertex(iid, "int", tag)
        return int_ids[ikey]

    def star_ints(key, kind, star, st):
        out = []
        if kind == "square":
            for fam in ("x", "y"):
                ikey = model.intermediate(st, fam)
                tag = "intermediate-A" if fam == "x" else "intermediate-B"
                out.append(int_id(ikey, tag))
        else:
            letter = key[0]
            ikey = model.intermediate(st, letter)
            tag = "intermediate-A" if letter == "x" else "intermediate-B"
            out.append(int_id(ikey, tag))
            partner = model.loop_partner(st, star)
            lkey = ("zw", tuple(sorted(
                (m.u, m.v, m.s) for m in (st, partner))))
            out.append(int_id(lkey, "intermediate-loop"))
        return out

    int_core = {}
    for key, (kind, star) in sorted(min_records.items()):
        if kind == "square":
            tag = "minimal-2loop"
        else:
            tag = "minimal-loop-A" if key[0] == "x" else "minimal-loop-B"
        mid = ("min",) + key
        cx.add_vertex(mid, "min", tag)
        cx.interior[mid] = True
        for st in sorted(star, key=lambda m: (m.u, m.v, m.s)):
            vid = max_vertex(st)
            iids = star_ints(key, kind, star, st)
            for iid in iids:
                cx.add_triangle(mid, iid, vid, kind)
                if st in core:
                    int_core[iid] = True

    # interiority: core maximals have complete stars by construction, hence
    # their intermediates and minimals carry full links too
    for st, vid in maxid.items():
        cx.interior[vid] = st in core
    for iid in int_ids.values():
        cx.interior[iid] = int_core.get(iid, False)
    return cx


def star_of_minimal(comb_id, A, B):
    """The star of a minimal vertex as a polygon complex.

    For C2 factors this is a quadrilateral (two-loop type) or an octagon
    (loop types); in general the square or 16-cycle gluing of quarters.
    """
    model = SpineModel(A, B)
    base = model.base()
    if comb_id == "minimal-2loop":
        fams = ("x", "y")
    elif comb_id == "minimal-loop-A":
        fams = ("x", "z")
    elif comb_id == "minimal-loop-B":
        fams = ("y", "z")
    else:
        raise AbzError("not-minimal")
    key, kind, star = model.minimal(base, fams)
    cx = TiledComplex()
    mid = ("min",) + key
    cx.add_vertex(mid, "min", comb_id)
    cx.interior[mid] = True
    for st in sorted(star, key=lambda m: (m.u, m.v, m.s)):
        vid = ("max", (st.u, st.v, st.s))
        if vid not in cx.kind:
            cx.add_vertex(vid, "max", "maximal")
        iids = []
        if kind == "square":
            for fam in ("x", "y"):
                iids.append(("int",) + model.intermediate(st, fam))
        else:
            letter = key[0]
            iids.append(("int",) + model.intermediate(st, letter))
            partner = model.loop_partner(st, star)
            iids.append(("int", "zw", tuple(sorted(
                (m.u, m.v, m.s) for m in (st, partner)))))
        for iid in iids:
            if iid not in cx.kind:
                cx.add_vertex(iid, "int", "intermediate")
            cx.add_triangle(mid, iid, vid, kind)
    return cx


def check_separation(ball, min_vertex=None):
    """Remove the closed star of a minimal-2loop vertex; report components.

    Returns (components, sizes, touching) where touching counts components
    meeting the ball boundary.
    """
    if min_vertex is None:
        candidates = [
            v for v, (kind, tag) in ball.kind.items()
            if kind == "min" and tag == "minimal-2loop" and ball.is_interior(v)
        ]
        if not candidates:
            raise AbzError("no interior minimal-2loop vertex")

        def depth(v):
            ds = [
                ball.labels.get(mx)
                for mn, it, mx, _ in ball.triangles
                if mn == v
            ]
            if any(d is None for d in ds):
                return (10 ** 9, repr(v))
            return (max(ds), repr(v))

        min_vertex = min(candidates, key=depth)
    star_verts = {min_vertex}
    for mn, it, mx, _ in ball.triangles:
        if mn == min_vertex:
            star_verts.update([it, mx])
    radius = getattr(ball, "radius", None)
    for v in star_verts:
        if ball.kind[v][0] != "max":
            continue
        d = ball.labels.get(v)
        if not ball.is_interior(v) or d is None or (radius is not None and d >= radius):
            raise AbzError("star-touches-boundary")
    adj = {}
    for a, b in ball.edges:
        if a in star_verts or b in star_verts:
            continue
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)
    remaining = [v for v in ball.vertex_ids() if v not in star_verts and v in adj]
    seen = set()
    components = []
    for v in remaining:
        if v in seen:
            continue
        comp = {v}
        stack = [v]
        while stack:
            x = stack.pop()
            for y in adj.get(x, ()):
                if y not in comp:
                    comp.add(y)
                    stack.append(y)
        seen |= comp
        components.append(comp)
    def touches_boundary(comp):
        return any(not ball.is_interior(v) for v in comp)
    sizes = sorted(len(c) for c in components)
    touching = sum(1 for c in components if touches_boundary(c))
    return components, sizes, touching
