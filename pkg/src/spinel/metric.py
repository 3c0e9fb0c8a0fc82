"""Exact angle metrics: girth of metric graphs, the rational feasibility
engine with Farkas certificates, Gromov link-condition checking, and the
local constraint systems behind the (non)existence of equivariant metrics.

All angles and lengths are Fractions in units of pi.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from fractions import Fraction

from . import gog as gg
from . import spine_local as sl
from .groups import make_cyclic

TWO_PI = Fraction(2)  # 2*pi in pi-units


class MetricError(ValueError):
    pass


# -- metric graphs and girth --------------------------------------------------


class MetricGraph:
    """Finite graph with positive rational edge weights (units of pi)."""

    def __init__(self, nodes, edges):
        self.nodes = list(nodes)
        self.edges = []
        for u, v, w in edges:
            w = Fraction(w)
            if w <= 0:
                raise MetricError("weights must be positive")
            self.edges.append((u, v, w))

    def adjacency(self):
        adj = {n: [] for n in self.nodes}
        for i, (u, v, w) in enumerate(self.edges):
            adj[u].append((v, w, i))
            adj[v].append((u, w, i))
        return adj

    def degree(self, n):
        return sum(1 for u, v, _ in self.edges for x in (u, v) if x == n)


def girth(graph):
    """Length of the shortest injective cycle; None when the graph is a forest.

    Computed as min over edges e = (u,v) of weight(e) plus the shortest
    path u -> v avoiding that edge instance, in exact arithmetic.
    """
    adj = graph.adjacency()
    best = None
    for i, (u, v, w) in enumerate(graph.edges):
        if u == v:
            if best is None or w < best:
                best = w
            continue
        dist = {u: Fraction(0)}
        heap = [(Fraction(0), 0, u)]
        tiebreak = 1
        while heap:
            d, _, x = heapq.heappop(heap)
            if d > dist.get(x, None if x not in dist else dist[x]):
                continue
            if x == v:
                break
            for y, wy, j in adj[x]:
                if j == i:
                    continue
                nd = d + wy
                if y not in dist or nd < dist[y]:
                    dist[y] = nd
                    heapq.heappush(heap, (nd, tiebreak, y))
                    tiebreak += 1
        if v in dist:
            c = w + dist[v]
            if best is None or c < best:
                best = c
    return best


# -- linear constraints and certificates --------------------------------------


@dataclass(frozen=True)
class Constraint:
    coeffs: tuple  # ((var, Fraction), ...)
    rel: str  # '>=', '==', '>'
    rhs: Fraction
    label: str = ""

    def substitute(self, assignment):
        return sum(Fraction(c) * assignment[v] for v, c in self.coeffs)


@dataclass
class ConstraintSystem:
    variables: list
    constraints: list = field(default_factory=list)
    _seen: set = field(default_factory=set, repr=False)

    def add(self, coeffs, rel, rhs, label=""):
        items = tuple(sorted((v, Fraction(c)) for v, c in coeffs.items() if c != 0))
        c = Constraint(items, rel, Fraction(rhs), label)
        if (items, rel, c.rhs) not in self._seen:
            self._seen.add((items, rel, c.rhs))
            self.constraints.append(c)

    def check_witness(self, assignment):
        for c in self.constraints:
            lhs = c.substitute(assignment)
            if c.rel == ">=" and not lhs >= c.rhs:
                return False
            if c.rel == "==" and not lhs == c.rhs:
                return False
            if c.rel == ">" and not lhs > c.rhs:
                return False
        return True


@dataclass
class Certificate:
    kind: str  # 'cat0-pass' | 'infeasible' | 'cat0-fail'
    data: dict

    def revalidate(self, system=None):
        """Re-check the certificate by pure arithmetic, no search."""
        if self.kind == "cat0-pass":
            return all(val >= TWO_PI for val in self.data["girths"].values())
        if self.kind != "infeasible":
            raise MetricError("only infeasibility certificates re-validate")
        assert system is not None
        lambdas = self.data["lambdas"]  # list of (index, Fraction)
        combined = {}
        rhs_total = Fraction(0)
        strict_weight = Fraction(0)
        for idx, lam in lambdas:
            c = system.constraints[idx]
            if c.rel in (">=", ">") and lam < 0:
                return False
            if c.rel in (">=", ">") or c.rel == "==":
                for v, co in c.coeffs:
                    combined[v] = combined.get(v, Fraction(0)) + lam * co
                rhs_total += lam * c.rhs
                if c.rel == ">":
                    strict_weight += lam
        if any(val > 0 for val in combined.values()):
            return False
        if rhs_total > 0:
            return True
        return rhs_total >= 0 and strict_weight > 0


# -- exact simplex -----------------------------------------------------------


def _simplex_max(c, rows, n):
    """Maximize c.x over {x >= 0 : rows}, rows = (coeffs list, rel, rhs).

    Exact two-phase simplex with Bland's rule.  Returns one of
      ('optimal', x, y)   y = dual multipliers per row
      ('infeasible', y)   y a Farkas witness per row
      ('unbounded', None)
    """
    m = len(rows)
    # columns: n original, then one surplus per '>=' row, then m artificials
    surplus_col = {}
    ncols = n
    for i, (_, rel, _) in enumerate(rows):
        if rel == ">=":
            surplus_col[i] = ncols
            ncols += 1
    art0 = ncols
    ncols += m

    T = [[Fraction(0)] * (ncols + 1) for _ in range(m)]
    sigma = [1] * m
    for i, (coeffs, rel, rhs) in enumerate(rows):
        flip = rhs < 0
        s = -1 if flip else 1
        sigma[i] = s
        for j, v in coeffs:
            T[i][j] = Fraction(s) * v
        if rel == ">=":
            T[i][surplus_col[i]] = Fraction(-s)
        T[i][art0 + i] = Fraction(1)
        T[i][ncols] = Fraction(s) * rhs

    basis = [art0 + i for i in range(m)]

    def run(cost, banned):
        # objective row: z_j - c_j for current basis
        obj = [Fraction(0)] * (ncols + 1)
        for j in range(ncols + 1):
            z = sum(cost[basis[i]] * T[i][j] for i in range(m))
            obj[j] = z - (cost[j] if j < ncols else 0)
        while True:
            enter = None
            for j in range(ncols):
                if j in banned:
                    continue
                if obj[j] < 0:
                    enter = j
                    break
            if enter is None:
                return obj, True
            leave = None
            best = None
            for i in range(m):
                if T[i][enter] > 0:
                    ratio = T[i][ncols] / T[i][enter]
                    if best is None or ratio < best or (
                        ratio == best and basis[i] < basis[leave]
                    ):
                        best = ratio
                        leave = i
            if leave is None:
                return obj, False  # unbounded
            piv = T[leave][enter]
            T[leave] = [x / piv for x in T[leave]]
            for i in range(m):
                if i != leave and T[i][enter] != 0:
                    f = T[i][enter]
                    T[i] = [a - f * b for a, b in zip(T[i], T[leave])]
            f = obj[enter]
            if f != 0:
                obj = [a - f * b for a, b in zip(obj, T[leave])]
            basis[leave] = enter

    # phase 1
    cost1 = [Fraction(0)] * ncols
    for i in range(m):
        cost1[art0 + i] = Fraction(-1)
    obj, ok = run(cost1, banned=set())
    assert ok
    val1 = sum(cost1[basis[i]] * T[i][ncols] for i in range(m))
    if val1 < 0:
        # Farkas: y_i from the artificial columns; multiplier for original
        # row i is -sigma_i * y_i
        y = [obj[art0 + i] - 1 for i in range(m)]
        lam = [-(Fraction(sigma[i]) * y[i]) for i in range(m)]
        return ("infeasible", lam)

    # drive basic artificials out where possible
    for i in range(m):
        if basis[i] >= art0 and T[i][ncols] == 0:
            for j in range(art0):
                if T[i][j] != 0:
                    piv = T[i][j]
                    T[i] = [x / piv for x in T[i]]
                    for r in range(m):
                        if r != i and T[r][j] != 0:
                            f = T[r][j]
                            T[r] = [a - f * b for a, b in zip(T[r], T[i])]
                    basis[i] = j
                    break

    # phase 2
    cost2 = [Fraction(0)] * ncols
    for j, v in enumerate(c):
        cost2[j] = Fraction(v)
    obj, ok = run(cost2, banned=set(range(art0, ncols)))
    if not ok:
        return ("unbounded", None)
    x = [Fraction(0)] * n
    for i in range(m):
        if basis[i] < n:
            x[basis[i]] = T[i][ncols]
    y = [obj[art0 + i] for i in range(m)]
    lam = [-(Fraction(sigma[i]) * y[i]) for i in range(m)]
    return ("optimal", x, lam)


@dataclass
class FeasibilityResult:
    feasible: bool
    witness: dict | None = None
    certificate: Certificate | None = None
    margin: Fraction | None = None


def _presolve(system):
    """Eliminate variables that occur in at most one non-positivity row.

    A strictly positive variable with a single other occurrence either makes
    its row slack (it can grow freely) or turns an equality into a strict
    inequality on the remaining terms.  Returns (rows, var_order,
    row_combos, witness_recipes); each reduced row carries its provenance as
    a combination of original constraint indices so Farkas certificates
    translate back.
    """
    rows = []  # (coeff dict, rel, rhs, combo dict)
    pos_row = {}
    for idx, c in enumerate(system.constraints):
        coeffs = dict(c.coeffs)
        if (
            c.rel == ">"
            and c.rhs == 0
            and len(coeffs) == 1
            and next(iter(coeffs.values())) == 1
        ):
            v = next(iter(coeffs))
            if v not in pos_row:
                pos_row[v] = idx
                continue
        rows.append((coeffs, c.rel, c.rhs, {idx: Fraction(1)}))

    recipes = []  # (var, coeff dict, rel, rhs): reconstruct eliminated values
    changed = True
    while changed:
        changed = False
        occur = {}
        for r, (coeffs, _, _, _) in enumerate(rows):
            for v in coeffs:
                occur.setdefault(v, []).append(r)
        for v, where in occur.items():
            if v not in pos_row or len(where) != 1:
                continue
            r = where[0]
            coeffs, rel, rhs, combo = rows[r]
            a = coeffs[v]
            rest = {u: c for u, c in coeffs.items() if u != v}
            recipes.append((v, dict(rest), rel, rhs, a))
            ppart = {pos_row[v]: abs(a)}
            if rel == "==":
                if a > 0:
                    newc = {u: -c for u, c in rest.items()}
                    newrhs = -rhs
                    newcombo = {i: -m for i, m in combo.items()}
                else:
                    newc = rest
                    newrhs = rhs
                    newcombo = dict(combo)
                for i, m in ppart.items():
                    newcombo[i] = newcombo.get(i, Fraction(0)) + m
                rows[r] = (newc, ">", Fraction(newrhs), newcombo)
            elif a > 0:
                rows[r] = ({}, ">=", Fraction(0), {})  # vacuous
            else:
                newcombo = dict(combo)
                for i, m in ppart.items():
                    newcombo[i] = newcombo.get(i, Fraction(0)) + m
                rows[r] = (rest, ">", rhs, newcombo)
            changed = True
            break
    rows = [r for r in rows if r[0]]
    kept = sorted({v for coeffs, _, _, _ in rows for v in coeffs}, key=repr)
    return rows, kept, pos_row, recipes


def _reconstruct(witness, recipes, all_vars):
    """Assign eliminated variables consistently with their defining rows."""
    out = dict(witness)
    for v, rest, rel, rhs, a in reversed(recipes):
        restval = sum(c * out[u] for u, c in rest.items()) if rest else Fraction(0)
        if rel == "==":
            out[v] = (Fraction(rhs) - restval) / a
        else:
            # slack direction: any strictly positive value keeping the row true
            if a > 0:
                need = (Fraction(rhs) - restval) / a
                out[v] = max(Fraction(1), need + 1)
            else:
                out[v] = (restval - Fraction(rhs)) / (2 * (-a))
    for v in all_vars:
        out.setdefault(v, Fraction(1))
    return out


def is_feasible(system):
    """Exact rational decision with re-checkable certificates.

    Strict constraints are slackened by a margin delta which is then
    maximized (capped at 1); the system is feasible iff the optimum is
    positive.  Infeasibility comes with a Farkas combination over the
    original constraints.
    """
    red_rows, kept, pos_row, recipes = _presolve(system)

    def expand(lambdas_local):
        out = {}
        for combo, lam in lambdas_local:
            for idx, m in combo.items():
                out[idx] = out.get(idx, Fraction(0)) + lam * m
        return sorted((i, m) for i, m in out.items() if m != 0)

    # constant rows witness infeasibility outright
    clean_rows = []
    for coeffs, rel, rhs, combo in red_rows:
        if coeffs:
            clean_rows.append((coeffs, rel, rhs, combo))
            continue
        bad = (
            (rel == ">=" and rhs > 0)
            or (rel == ">" and rhs >= 0)
            or (rel == "==" and rhs != 0)
        )
        if bad:
            cert = Certificate("infeasible", {"lambdas": expand([(combo, Fraction(1))])})
            if not cert.revalidate(system):
                raise MetricError("internal: presolve certificate failed")
            return FeasibilityResult(False, certificate=cert)

    vindex = {v: j for j, v in enumerate(kept)}
    n = len(kept)
    has_strict = any(rel == ">" for _, rel, _, _ in clean_rows) or bool(kept)
    ncols = n + (1 if has_strict else 0)
    delta_col = n

    rows = []
    row_combos = []
    for coeffs, rel, rhs, combo in clean_rows:
        cc = [(vindex[v], co) for v, co in sorted(coeffs.items(), key=repr)]
        if rel == ">":
            cc = cc + [(delta_col, Fraction(-1))]
            rows.append((cc, ">=", rhs))
        elif rel in (">=", "=="):
            rows.append((cc, rel, rhs))
        else:
            raise MetricError("unknown relation %r" % (rel,))
        row_combos.append(combo)
    for v in kept:
        if v in pos_row:
            rows.append(([(vindex[v], Fraction(1)), (delta_col, Fraction(-1))], ">=", Fraction(0)))
            row_combos.append({pos_row[v]: Fraction(1)})
    if has_strict:
        rows.append(([(delta_col, Fraction(-1))], ">=", Fraction(-1)))
        row_combos.append(None)  # the cap delta <= 1

    objective = [Fraction(0)] * ncols
    if has_strict:
        objective[delta_col] = Fraction(1)

    out = _simplex_max(objective, rows, ncols)

    def make_cert(lam):
        lambdas = expand(
            [(row_combos[i], lam[i]) for i in range(len(rows))
             if lam[i] != 0 and row_combos[i] is not None]
        )
        cert = Certificate("infeasible", {"lambdas": lambdas})
        if not cert.revalidate(system):
            raise MetricError("internal: Farkas certificate failed revalidation")
        return cert

    if out[0] == "infeasible":
        return FeasibilityResult(False, certificate=make_cert(out[1]))
    if out[0] == "unbounded":
        return FeasibilityResult(True, witness=None, margin=None)
    _, x, lam = out
    margin = x[delta_col] if has_strict else None
    if not has_strict or margin > 0:
        witness = _reconstruct(
            {v: x[vindex[v]] for v in kept}, recipes, system.variables
        )
        if not system.check_witness(witness):
            raise MetricError("internal: witness failed recheck")
        return FeasibilityResult(True, witness=witness, margin=margin)
    return FeasibilityResult(False, certificate=make_cert(lam), margin=margin)


# -- link condition on tiled complexes ----------------------------------------


def check_link_condition(complex_, interior_only=True):
    """Gromov's link condition for a square/octagon style tiled complex.

    Every polygon must have Euclidean angle sum (n-2)*pi, and the link of
    every (interior) vertex must have girth >= 2*pi.
    """
    for poly in complex_.polygons:
        total = sum(poly.corners)
        if total != len(poly.corners) - 2:
            return Certificate(
                "cat0-fail",
                {"reason": "polygon angle sum", "polygon": poly.key, "sum": total},
            )
    girths = {}
    for v in complex_.vertex_ids():
        if interior_only and not complex_.is_interior(v):
            continue
        lk = complex_.vertex_link(v)
        if any(w is None for _, _, w in lk.edges):
            raise MetricError("unassigned-corner at vertex %r" % (v,))
        gv = girth(lk)
        if gv is not None:
            girths[v] = gv
            if gv < TWO_PI:
                return Certificate(
                    "cat0-fail", {"reason": "girth", "vertex": v, "girth": gv}
                )
    return Certificate("cat0-pass", {"girths": girths})


# -- the local constraint systems of the negative result ----------------------


POSITIVE_LIST = {(1, 0), (2, 0), (3, 0), (0, 1), (1, 1), (0, 2), (2, 1)}


def _c2():
    return make_cyclic(2)


def badtri_configuration(n, k):
    """The reduced base graph plus the gold and red ideal edges for (n, k).

    All factors are instantiated as C2: the certified symmetry sub-partition
    then realizes every corner equality the argument needs.
    """
    if k == 0:
        if n < 4:
            raise MetricError("configuration-not-applicable")
        # path A1 - A2 - ... - An; gold at vertex 1, red at vertex 2
        groups = [_c2() for _ in range(n)]
        edges = [(i, i + 1) for i in range(n - 1)]
        tau = gg.free_splitting(groups, edges, "badtri1")
        # oriented edges: pair i has orientations (2i, 2i+1); origin(2i) = i
        p_bar = 1  # edge 0 oriented from vertex 1 (toward vertex 0)
        q_fwd = 2  # edge 1 oriented from vertex 1 (toward vertex 2)
        gold = _size2_ideal(tau, 1, (1, p_bar), (0, q_fwd))
        t_fwd = 4  # edge 2 oriented from vertex 2
        q_bar = 3  # edge 1 oriented from vertex 2 (toward vertex 1)
        red = _size2_ideal(tau, 2, (1, t_fwd), (0, q_bar))
        return tau, gold, red
    if k == 1:
        if n < 3:
            raise MetricError("configuration-not-applicable")
        # vertex 0 carries a loop (pair 0) and pendant edges to A2..An
        groups = [_c2() for _ in range(n)]
        edges = [(0, 0)] + [(0, i) for i in range(1, n)]
        tau = gg.free_splitting(groups, edges, "badtri2")
        loop_plus, loop_minus = 0, 1
        pink = 2  # pendant to vertex 1, oriented from vertex 0
        teal = 4  # pendant to vertex 2, oriented from vertex 0
        gold = _size2_ideal(tau, 0, (1, pink), (0, loop_plus))
        red = _size2_ideal(tau, 0, (1, teal), (0, loop_minus))
        return tau, gold, red
    if k >= 2:
        if n < 1:
            raise MetricError("configuration-not-applicable")
        # vertex 0 = A1 with k loops, plus pendant vertices for A2..An
        groups = [_c2() for _ in range(n)]
        edges = [(0, 0) for _ in range(k)] + [(0, i) for i in range(1, n)]
        tau = gg.free_splitting(groups, edges, "badtri3")
        p_plus, p_minus = 0, 1
        q_plus, q_minus = 2, 3
        gold = _size2_ideal(tau, 0, (1, p_plus), (0, q_plus))
        red = _size2_ideal(tau, 0, (1, q_minus), (0, p_minus))
        return tau, gold, red
    raise MetricError("configuration-not-applicable")


def _size2_ideal(g, v, d1, d2):
    """Ideal edge with trivial stabilizer from (group element, oriented edge)."""
    G = g.vertex_groups[v]
    dirs = []
    for x, e in (d1, d2):
        im = g.inclusions[e].image()
        coset = tuple(sorted(G.mul(x, h) for h in im.elements))
        dirs.append(sl.Direction(e, coset))
    return sl.IdealEdge(v, frozenset(dirs), (0,))


def _pair_class_key(g, link, i, j):
    """Canonical class of the blown-up pair with symmetric pair marks."""
    pair = sl.forest_pair(g, link.ideal_classes[i], link.ideal_classes[j])
    if pair is None:
        return None
    h = sl.blow_up_pair(g, pair)
    marks = [""] * h.num_pairs
    marks[h.num_pairs - 1] = "s"
    marks[h.num_pairs - 2] = "s"
    return gg.canonical_key(h, pair_marks=marks)


def _mid_class_key(g, link, p, i):
    """Canonical class of (collapse p, blow ideal i) with asymmetric marks."""
    res = sl.blow_up(g, link.ideal_classes[i])
    h = res.gog
    marks = [""] * h.num_pairs
    marks[res.new_pair] = "up"
    marks[p] = "down"
    return gg.canonical_key(h, pair_marks=marks)


def _moves_4cycles(link):
    """Injective 4-cycles in the moves graph."""
    edges = {tuple(sorted(e)) for e in link.moves_edges()}
    adj = {}
    for a, b in edges:
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)
    nodes = sorted(adj)
    cycles = set()
    for a, b, c, d in itertools.permutations(nodes, 4):
        if a != min(a, b, c, d):
            continue
        if b in adj[a] and c in adj[b] and d in adj[c] and a in adj[d]:
            key = frozenset(
                [tuple(sorted((a, b))), tuple(sorted((b, c))),
                 tuple(sorted((c, d))), tuple(sorted((d, a)))]
            )
            cycles.add(key)
    return [sorted(cyc) for cyc in sorted(cycles, key=sorted)]


def build_constraint_system(n, k, mode="euclidean"):
    """The local angle system for the (n, k) configuration.

    For parameter pairs on the positive list this raises, except for the
    control case (2, 1) which builds the square/octagon cell system of the
    positive construction.
    """
    if mode not in ("euclidean", "hyperbolic"):
        raise MetricError("mode must be euclidean or hyperbolic")
    if (n, k) == (2, 1):
        return _control_system_21(mode)
    if (n, k) in POSITIVE_LIST or n < 0 or k < 0:
        raise MetricError("configuration-not-applicable")
    tau, gold, red = badtri_configuration(n, k)
    if not gg.in_L(tau):
        raise MetricError("internal: base graph not in L")

    res_g = sl.blow_up(tau, gold)
    G = res_g.gog
    builder = _SystemBuilder(mode)
    builder.add_intermediate(G)
    builder.finish()
    return builder.system


def _flag_keys(T, a, b):
    """(min, mid/apex) canonical keys of the flag {a} < {a, b} of top T."""
    marks = [""] * T.num_pairs
    marks[a] = "up"
    marks[b] = "down"
    mid_key = gg.canonical_key(T, pair_marks=marks)
    smarks = [""] * T.num_pairs
    smarks[a] = "s"
    smarks[b] = "s"
    min_key = gg.canonical_key(T, pair_marks=smarks)
    return min_key, mid_key


def _link_is_graph(g, link):
    """Whether the link has no 2-simplices (so girth bounds are sound)."""
    if link.ideal_pairs and link.collapse_moves:
        return False
    if link.collapse_pairs and link.ideal_classes:
        return False
    pairset = set(link.ideal_pairs)
    n = len(link.ideal_classes)
    for i, j, l in itertools.combinations(range(n), 3):
        if {(i, j), (i, l), (j, l)} <= pairset:
            return False
    if link.collapse_pairs:
        for trio in itertools.combinations(link.collapse_moves, 3):
            forest = gg.orient_forest(g, list(trio))
            if forest is not None:
                try:
                    if gg.in_L(gg.collapse_forest(g, forest).gog):
                        return False
                except gg.GogError:
                    pass
    return True


def _injective_cycles(nodes, edges, max_len=16):
    """Injective cycles in a small graph, as edge lists, deduplicated."""
    adj = {}
    for e in edges:
        a, b = e
        adj.setdefault(a, []).append((b, e))
        adj.setdefault(b, []).append((a, e))
    cycles = set()
    nodes = sorted(adj)

    def dfs(start, current, visited, path_edges):
        if len(path_edges) > max_len:
            return
        for (nxt, e) in adj[current]:
            if e in path_edges:
                continue
            if nxt == start and len(path_edges) >= 2:
                cycles.add(frozenset(path_edges + [e]))
                continue
            if nxt in visited or nxt < start:
                continue
            dfs(start, nxt, visited | {nxt}, path_edges + [e])

    for s in nodes:
        dfs(s, s, {s}, [])
    return [sorted(c) for c in sorted(cycles, key=sorted)]


class _SystemBuilder:
    """Assembles the local angle system around an intermediate graph."""

    def __init__(self, mode):
        self.mode = mode
        self.system = ConstraintSystem(variables=[])
        self._vars = set()
        self._done_links = set()
        self._tops = {}

    def var(self, tag, key):
        name = (tag, key)
        if name not in self._vars:
            self._vars.add(name)
            self.system.variables.append(name)
        return name

    def add_intermediate(self, G):
        lk = sl.link_of(G)
        for i in range(len(lk.ideal_classes)):
            res = sl.blow_up(G, lk.ideal_classes[i])
            if gg.in_L(res.gog):
                self.add_top(res.gog)

    def add_top(self, T):
        tkey = gg.canonical_key(T)
        if tkey in self._tops:
            return
        self._tops[tkey] = T
        lkT = sl.link_of(T)
        singles = lkT.collapse_moves
        pairs = lkT.collapse_pairs
        # triangle sums, one per flag {a} < {a,b}
        for (a, b) in pairs:
            for x, y in ((a, b), (b, a)):
                min_key, mid_key = _flag_keys(T, x, y)
                v_min = self.var("min", min_key)
                v_mid = self.var("mid", mid_key)
                v_apex = self.var("apex", mid_key)
                if self.mode == "euclidean":
                    self.system.add(
                        {v_min: 1, v_mid: 1, v_apex: 1}, "==", 1, "triangle sum"
                    )
                else:
                    self.system.add(
                        {v_min: -1, v_mid: -1, v_apex: -1}, ">", -1,
                        "hyperbolic triangle sum",
                    )
        # down-link girth cycles at a genuine maximum (pure graph link)
        if not lkT.ideal_classes and _link_is_graph(T, lkT):
            nodes = [("s", p) for p in singles] + [("p", pr) for pr in pairs]
            edges = []
            flag_of = {}
            for pr in pairs:
                for x in pr:
                    e = (("s", x), ("p", pr))
                    edges.append(e)
                    y = pr[0] if pr[1] == x else pr[1]
                    flag_of[e] = _flag_keys(T, x, y)[1]
            for cyc in _injective_cycles(nodes, edges):
                coeffs = {}
                for e in cyc:
                    v = self.var("apex", flag_of[tuple(e)])
                    coeffs[v] = coeffs.get(v, 0) + 1
                if coeffs:
                    self.system.add(coeffs, ">=", TWO_PI, "down girth cycle")
        # middle graphs and minimal graphs below T
        for p in singles:
            self.add_cycles(gg.collapse(T, p).gog)
        for pr in pairs:
            forest = gg.orient_forest(T, list(pr))
            self.add_cycles(gg.collapse_forest(T, forest).gog)

    def add_cycles(self, X):
        # 4-cycle bounds in the moves graph of Link(X), following the
        # argument of the negative result (see the ledger note on links of
        # higher-dimensional spines).
        xkey = gg.canonical_key(X)
        if xkey in self._done_links:
            return
        self._done_links.add(xkey)
        lk = sl.link_of(X)
        blowups = {}
        for i in range(len(lk.ideal_classes)):
            res = sl.blow_up(X, lk.ideal_classes[i])
            blowups[i] = res

        def edge_coeffs(a, b):
            (ka, ia), (kb, ib) = a, b
            out = {}
            if {ka, kb} == {"I", "C"}:
                i = ia if ka == "I" else ib
                p = ib if kb == "C" else ia
                res = blowups[i]
                marks = [""] * res.gog.num_pairs
                marks[res.new_pair] = "up"
                marks[p] = "down"
                key = gg.canonical_key(res.gog, pair_marks=marks)
                out[self.var("mid", key)] = 1
            elif ka == kb == "I":
                key = _pair_class_key(X, lk, ia, ib)
                if key is None:
                    return None
                out[self.var("min", key)] = 1
            else:
                # a collapse pair: two apex flags
                for x, y in ((ia, ib), (ib, ia)):
                    _, mid_key = _flag_keys(X, x, y)
                    v = self.var("apex", mid_key)
                    out[v] = out.get(v, 0) + 1
            return out

        for cyc in _moves_4cycles(lk):
            coeffs = {}
            ok = True
            for a, b in cyc:
                ec = edge_coeffs(a, b)
                if ec is None:
                    ok = False
                    break
                for v, c in ec.items():
                    coeffs[v] = coeffs.get(v, 0) + c
            if ok and coeffs:
                self.system.add(coeffs, ">=", TWO_PI, "4-cycle in link")

    def finish(self):
        for name in self.system.variables:
            self.system.add({name: 1}, ">", 0, "positive corner %r" % (name,))


def _control_system_21(mode):
    """Cell system of the positive A*B*Z construction at (C2, C2).

    Square and octagon cell sums plus the maximal-link girth cycles; the
    witness is the paper's square = pi/2, octagon = 3pi/4 metric.
    """
    C2 = _c2()
    T = make_cyclic(1)
    maximal = gg.free_splitting([C2, C2, T, T], [(0, 2), (1, 3), (2, 3), (2, 3)])
    link = sl.link_of(maximal)

    system = ConstraintSystem(variables=[])
    vars_seen = {}

    def var(key):
        if key not in vars_seen:
            vars_seen[key] = True
            system.variables.append(key)
        return key

    pair_stars = {}
    pair_key = {}
    for p, q in link.collapse_pairs:
        forest = gg.orient_forest(maximal, [p, q])
        mu = gg.collapse_forest(maximal, forest).gog
        key = ("cell", gg.canonical_key(mu))
        pair_key[(p, q)] = var(key)
        mu_link = sl.link_of(mu)
        pair_stars[key] = len(mu_link.ideal_pairs)

    # cell angle sums: an n-gon cell has Euclidean angle sum (n-2)*pi
    for key, ncorners in pair_stars.items():
        rel = "==" if mode == "euclidean" else "<"
        rhs = Fraction(ncorners - 2)
        if rel == "==":
            system.add({key: ncorners}, "==", rhs, "cell angle sum")
        else:
            system.add({key: -ncorners}, ">", -rhs, "hyperbolic cell angle sum")

    # maximal-link girth: every injective cycle in the weighted moves graph
    edges = {}
    for p, q in link.collapse_pairs:
        edges[tuple(sorted((p, q)))] = pair_key[(p, q)]
    nodes = sorted({x for e in edges for x in e})
    adj = {x: sorted(y for y in nodes if tuple(sorted((x, y))) in edges) for x in nodes}

    cycles = set()
    for r in range(3, len(nodes) + 1):
        for combo in itertools.permutations(nodes, r):
            if combo[0] != min(combo):
                continue
            if combo[1] > combo[-1]:
                continue
            ok = all(
                tuple(sorted((combo[i], combo[(i + 1) % r]))) in edges
                for i in range(r)
            )
            if ok:
                cyc = frozenset(
                    tuple(sorted((combo[i], combo[(i + 1) % r]))) for i in range(r)
                )
                cycles.add(cyc)
    for cyc in sorted(cycles, key=sorted):
        coeffs = {}
        for e in cyc:
            v = edges[e]
            coeffs[v] = coeffs.get(v, 0) + 1
        system.add(coeffs, ">=", TWO_PI, "maximal link girth cycle")

    for v in system.variables:
        system.add({v: 1}, ">", 0, "positive corner")
    return system


def relax_cycles(system, new_rhs=Fraction(1)):
    """The sanity relaxation: 4-cycle bounds lowered (2pi -> new_rhs * pi)."""
    out = ConstraintSystem(variables=list(system.variables))
    for c in system.constraints:
        if c.rel == ">=" and c.rhs == TWO_PI and "cycle" in c.label:
            out.constraints.append(
                Constraint(c.coeffs, c.rel, Fraction(new_rhs), c.label + " (relaxed)")
            )
        else:
            out.constraints.append(c)
    return out
