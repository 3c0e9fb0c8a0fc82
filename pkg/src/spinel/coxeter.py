"""Exact Coxeter machinery over Q(sqrt 2): the geometric representation,
Cayley balls, the square/octagon Davis--Moussong complex, and the anchored
comparison with the A*B*Z ball."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .abz import TiledComplex


class CoxeterError(ValueError):
    pass


@dataclass(frozen=True)
class QuadraticNumber:
    """a + b*sqrt(2) with rational coefficients; exact ring arithmetic."""

    a: Fraction = Fraction(0)
    b: Fraction = Fraction(0)

    def __add__(self, other):
        return QuadraticNumber(self.a + other.a, self.b + other.b)

    def __sub__(self, other):
        return QuadraticNumber(self.a - other.a, self.b - other.b)

    def __mul__(self, other):
        return QuadraticNumber(
            self.a * other.a + 2 * self.b * other.b,
            self.a * other.b + self.b * other.a,
        )

    def __neg__(self):
        return QuadraticNumber(-self.a, -self.b)

    def is_zero(self):
        return self.a == 0 and self.b == 0

    def __repr__(self):
        return "(%s+%s r2)" % (self.a, self.b)


def qn(a, b=0):
    return QuadraticNumber(Fraction(a), Fraction(b))


ZERO = qn(0)
ONE = qn(1)
HALF_SQRT2 = qn(0, Fraction(1, 2))


class CoxeterSystem:
    """Rank and symmetric Coxeter matrix with labels in {1, 2, 3, 4, inf}."""

    INF = 0  # encode infinity as 0 in the matrix

    def __init__(self, m, names=None):
        self.m = tuple(tuple(row) for row in m)
        self.rank = len(self.m)
        self.names = tuple(names or ("s%d" % i for i in range(self.rank)))
        for i in range(self.rank):
            if self.m[i][i] != 1:
                raise CoxeterError("diagonal must be 1")
            for j in range(self.rank):
                if self.m[i][j] != self.m[j][i]:
                    raise CoxeterError("matrix must be symmetric")
                if i != j and self.m[i][j] not in (2, 3, 4, self.INF):
                    raise CoxeterError("unsupported-label %r" % (self.m[i][j],))

    def label(self, i, j):
        return self.m[i][j]


def paper_w():
    """The Coxeter group with m(x,y)=2, the other finite labels 4, and
    m(z,w) infinite."""
    INF = CoxeterSystem.INF
    return CoxeterSystem(
        [
            [1, 2, 4, 4],
            [2, 1, 4, 4],
            [4, 4, 1, INF],
            [4, 4, INF, 1],
        ],
        names=("x", "y", "z", "w"),
    )


# cos(pi/m) for the supported labels
_COS = {2: ZERO, 3: qn(Fraction(1, 2)), 4: HALF_SQRT2, CoxeterSystem.INF: ONE}


def gram_matrix(c):
    n = c.rank
    B = [[ZERO] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if i == j:
                B[i][j] = ONE
            else:
                B[i][j] = -_COS[c.label(i, j)]
    return B


def reflection_representation(c):
    """Generator matrices of the geometric representation.

    sigma_s(e_t) = e_t - 2 B(s,t) e_s, exactly over Q(sqrt 2).
    """
    B = gram_matrix(c)
    n = c.rank
    mats = []
    for s in range(n):
        M = [[ONE if i == j else ZERO for j in range(n)] for i in range(n)]
        for t in range(n):
            M[s][t] = M[s][t] - (qn(2) * B[s][t])
        mats.append(tuple(tuple(row) for row in M))
    return mats


def mat_mul(A, B):
    n = len(A)
    return tuple(
        tuple(
            sum((A[i][k] * B[k][j] for k in range(n)), ZERO) for j in range(n)
        )
        for i in range(n)
    )


def mat_eq(A, B):
    return A == B


def identity_matrix(n):
    return tuple(tuple(ONE if i == j else ZERO for j in range(n)) for i in range(n))


def element_order(M, cap=64):
    n = len(M)
    I = identity_matrix(n)
    P = M
    for k in range(1, cap + 1):
        if P == I:
            return k
        P = mat_mul(P, M)
    return None


@dataclass
class CayleyBall:
    system: CoxeterSystem
    radius: int
    elements: list  # matrices, element 0 = identity
    words: list  # one shortest word (tuple of generator indices) per element
    dist: list
    edges: set  # (i, j, s): j = sigma_s * i

    def index(self):
        return {m: i for i, m in enumerate(self.elements)}


def cayley_ball(c, radius):
    """Left Cayley ball by breadth-first search with exact matrix dedup."""
    gens = reflection_representation(c)
    I = identity_matrix(c.rank)
    elements = [I]
    words = [()]
    dist = [0]
    index = {I: 0}
    edges = set()
    frontier = [0]
    while frontier:
        new = []
        for i in frontier:
            if dist[i] >= radius:
                continue
            for s, g in enumerate(gens):
                M = mat_mul(g, elements[i])
                j = index.get(M)
                if j is None:
                    j = len(elements)
                    index[M] = j
                    elements.append(M)
                    words.append((s,) + words[i])
                    dist.append(dist[i] + 1)
                    new.append(j)
                else:
                    # matrix dedup must respect BFS depth (exactness check)
                    if abs(dist[j] - dist[i]) > 1:
                        raise CoxeterError("dedup merged different depths")
                edges.add((min(i, j), max(i, j), s))
        frontier = new
    return CayleyBall(c, radius, elements, words, dist, edges)


def build_dm(c, ball):
    """The square/octagon Davis--Moussong complex over a Cayley ball.

    For each pair {s,t} with finite label, the <s,t>-coset loops of length
    2 m(s,t) through core elements are filled as cells and triangulated
    exactly like the A*B*Z ball (cell centers are 'min' vertices, edge
    midpoints 'int', group elements 'max').  Loops may extend past the core;
    the added elements are boundary vertices.
    """
    gens = reflection_representation(c)
    elements = list(ball.elements)
    dist = list(ball.dist)
    index = {m: i for i, m in enumerate(elements)}
    ncore = len(ball.elements)

    def elt_id(M):
        j = index.get(M)
        if j is None:
            j = len(elements)
            index[M] = j
            elements.append(M)
            dist.append(None)
        return j

    n = c.rank
    pair_polys = {}
    for i in range(ncore):
        for s in range(n):
            for t in range(s + 1, n):
                msts = c.label(s, t)
                if msts == CoxeterSystem.INF:
                    continue
                cyc = [i]
                cur = i
                letter = s
                for _ in range(2 * msts - 1):
                    j = elt_id(mat_mul(gens[letter], elements[cur]))
                    cyc.append(j)
                    cur = j
                    letter = t if letter == s else s
                key = ((s, t), frozenset(cyc))
                pair_polys.setdefault(key, (msts, cyc))

    cx = TiledComplex()
    cx.radius = ball.radius
    for i, m in enumerate(elements):
        cx.add_vertex(("max", i), "max", "maximal", label=dist[i])

    for ((s, t), memb), (m, cyc) in sorted(
        pair_polys.items(), key=lambda kv: (kv[0][0], sorted(kv[0][1]))
    ):
        fam = "square" if m == 2 else "octagon"
        mid_id = ("min", (s, t), tuple(sorted(memb)))
        cx.add_vertex(mid_id, "min",
                      "minimal-2loop" if fam == "square" else "minimal-loop")
        cx.interior[mid_id] = True
        k = len(cyc)
        for a in range(k):
            i, j = cyc[a], cyc[(a + 1) % k]
            letter = s if a % 2 == 0 else t
            eid = ("int", letter, tuple(sorted((i, j))))
            if eid not in cx.kind:
                cx.add_vertex(eid, "int", "intermediate")
            cx.add_triangle(mid_id, eid, ("max", i), fam)
            cx.add_triangle(mid_id, eid, ("max", j), fam)

    for i in range(len(elements)):
        cx.interior[("max", i)] = i < ncore
    for v, (kind, _) in cx.kind.items():
        if kind == "int":
            i, j = v[2]
            cx.interior[v] = i < ncore or j < ncore
    return cx


def interior_polygon_count(c, ball, cx):
    """Polygons per interior element (5 for the paper's W)."""
    counts = {}
    for mn, it, mx, _ in cx.triangles:
        counts.setdefault(mx, set()).add(mn)
    return {
        v: len(s) for v, s in counts.items() if cx.is_interior(v)
    }


# -- comparison with the A*B*Z ball -------------------------------------------


def _typed_graph(cx):
    """(adjacency, kinds) of the triangle structure for matching."""
    tri_at = {}
    for idx, (mn, it, mx, fam) in enumerate(cx.triangles):
        for v in (mn, it, mx):
            tri_at.setdefault(v, []).append(idx)
    return tri_at


def _cell_data(cx):
    tri = {}
    int_maxes = {}
    min_ints = {}
    max_fan = {}
    for mn, it, mx, fam in cx.triangles:
        tri.setdefault(mx, []).append((mn, it, fam))
        int_maxes.setdefault(it, set()).add(mx)
        min_ints.setdefault(mn, set()).add(it)
        max_fan.setdefault(mx, set()).add((mn, it, fam))
    return tri, int_maxes, min_ints, max_fan


def compare_with_L(dm, ball, base_pairing=None):
    """Label-respecting cell isomorphism from the Davis--Moussong ball to the
    A*B*Z ball, extending a base pairing of the Coxeter generators with the
    edge midpoints they fix.  Returns (True, mapping) or (False, report).

    Without an explicit pairing the generator anchors are recovered from the
    intermediate tags at the base, trying the finitely many assignments of
    the loop directions.
    """
    dm_tri, dm_imax, dm_mint, dm_fan = _cell_data(dm)
    b_tri, b_imax, b_mint, b_fan = _cell_data(ball)

    dm_base = ("max", 0)
    ball_base = None
    for v, (k, tag) in ball.kind.items():
        if k == "max" and ball.labels.get(v) == 0:
            ball_base = v
    if ball_base is None:
        return False, {"reason": "no base vertex in ball"}

    def base_ints(cx, fan, base):
        return sorted({it for mn, it, fam in fan.get(base, ())}, key=repr)

    dints = base_ints(dm, dm_fan, dm_base)
    bints = base_ints(ball, b_fan, ball_base)
    if base_pairing is None:
        pairings = []
        # match by tag where unique, permute the rest
        import itertools as _it

        def tag_of(cx, v):
            return cx.kind[v][1]

        groups = {}
        for it in dints:
            groups.setdefault(tag_of(dm, it), []).append(it)
        bgroups = {}
        for it in bints:
            bgroups.setdefault(tag_of(ball, it), []).append(it)
        dm_loops = [it for it in dints if it[1] in (2, 3)]
        b_loops = [it for it in bints if ball.kind[it][1] == "intermediate-loop"]
        dm_x = [it for it in dints if it[1] == 0]
        dm_y = [it for it in dints if it[1] == 1]
        b_x = [it for it in bints if ball.kind[it][1] == "intermediate-A"]
        b_y = [it for it in bints if ball.kind[it][1] == "intermediate-B"]
        if not (len(dm_x) == len(b_x) == 1 and len(dm_y) == len(b_y) == 1
                and len(dm_loops) == len(b_loops) == 2):
            return False, {"reason": "base stars do not align"}
        for perm in _it.permutations(b_loops):
            pairings.append(
                dict([(dm_x[0], b_x[0]), (dm_y[0], b_y[0])]
                     + list(zip(dm_loops, perm)))
            )
    else:
        pairings = [dict(base_pairing)]

    last = None
    for pairing in pairings:
        ok, res = _propagate(
            dm, ball, dm_fan, b_fan, dm_imax, b_imax, dm_mint, b_mint,
            dm_base, ball_base, pairing,
        )
        if ok:
            return True, res
        last = res
    return False, last


def _propagate(dm, ball, dm_fan, b_fan, dm_imax, b_imax, dm_mint, b_mint,
               dm_base, ball_base, pairing):
    vmap = dict(pairing)
    vmap[dm_base] = ball_base
    used = set(vmap.values())

    def assign(a, b):
        if a in vmap:
            return vmap[a] == b
        if b in used:
            return False
        if dm.kind[a][0] != ball.kind[b][0]:
            return False
        vmap[a] = b
        used.add(b)
        return True

    changed = True
    while changed:
        changed = False
        # an int with one matched endpoint forces the other
        for a in [v for v in list(vmap) if dm.kind[v][0] == "int"]:
            am = dm_imax.get(a, set())
            bm = b_imax.get(vmap[a], set())
            am_un = [m for m in am if m not in vmap]
            bm_un = [m for m in bm if m not in used]
            am_ma = [m for m in am if m in vmap]
            if {vmap[m] for m in am_ma} - bm:
                return False, {"mismatch": "int endpoints clash at %r" % (a,)}
            if len(am_un) == 1 and len(bm_un) == 1:
                if not assign(am_un[0], bm_un[0]):
                    return False, {"mismatch": "forced max clash at %r" % (a,)}
                changed = True
        # fans at matched maxes: match mins by their matched int sets
        for a in [v for v in list(vmap) if dm.kind[v][0] == "max"]:
            b = vmap[a]
            fan_a = dm_fan.get(a, set())
            fan_b = b_fan.get(b, set())
            if len(fan_a) != len(fan_b):
                return False, {"mismatch": "fan size differs at %r" % (a,)}
            for mn, it, fam in fan_a:
                if mn in vmap and it in vmap:
                    continue
                req = {vmap[i2] for m2, i2, f2 in fan_a
                       if m2 == mn and i2 in vmap}
                if mn in vmap:
                    cands_i = [
                        i2 for m2, i2, f2 in fan_b
                        if m2 == vmap[mn] and f2 == fam and i2 not in used
                        and dm.kind[it][0] == ball.kind[i2][0]
                    ]
                    iset = {i2 for m2, i2, f2 in fan_a if m2 == mn}
                    if len(cands_i) == 1 and it not in vmap:
                        if not assign(it, cands_i[0]):
                            return False, {"mismatch": "int clash at %r" % (it,)}
                        changed = True
                    continue
                if not req:
                    continue
                cands = sorted({
                    m2 for m2, i2, f2 in fan_b
                    if f2 == fam and m2 not in used
                } , key=repr)
                cands = [m2 for m2 in cands
                         if req <= {i2 for mm, i2, f2 in fan_b if mm == m2}]
                if len(cands) == 1:
                    if not assign(mn, cands[0]):
                        return False, {"mismatch": "min clash at %r" % (mn,)}
                    changed = True
        # matched mins force their remaining ints by matched max sets
        for a in [v for v in list(vmap) if dm.kind[v][0] == "min"]:
            b = vmap[a]
            for it in dm_mint.get(a, set()):
                if it in vmap:
                    continue
                req = {vmap[m] for m in dm_imax.get(it, set()) if m in vmap}
                if not req:
                    continue
                cands = [
                    i2 for i2 in b_mint.get(b, set())
                    if i2 not in used and req <= b_imax.get(i2, set())
                ]
                if len(cands) == 1:
                    if not assign(it, cands[0]):
                        return False, {"mismatch": "int clash at %r" % (it,)}
                    changed = True

    unmatched = [v for v in dm.kind if dm.is_interior(v) and v not in vmap]
    if unmatched:
        return False, {"mismatch": "unmatched interior vertices",
                       "count": len(unmatched), "example": unmatched[0]}
    # verify: the map sends triangles to triangles on the matched region
    tri_b = {(mn, it, mx) for mn, it, mx, _ in ball.triangles}
    for mn, it, mx, fam in dm.triangles:
        if mn in vmap and it in vmap and mx in vmap:
            if (vmap[mn], vmap[it], vmap[mx]) not in tri_b:
                return False, {"mismatch": "triangle image missing",
                               "triangle": (mn, it, mx)}
    return True, vmap
