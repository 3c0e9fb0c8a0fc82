"""Command-line front end: file formats, exports, and the end-to-end
pipelines reproducing the positive and negative results at desk scale.

Formats are plain line-oriented text with section keywords, diffable and
round-trip stable.  Exit codes: 0 pass, 1 check failed, 2 usage/parse error.
"""

from __future__ import annotations

import argparse
import hashlib
import sys
from fractions import Fraction

from . import __version__
from . import abz, coxeter, freeprod_aut, gog, metric, spine_local
from .groups import FiniteGroup, make_cyclic


class ParseError(ValueError):
    def __init__(self, msg, line=None):
        super().__init__("line %s: %s" % (line, msg) if line else msg)


# -- graph-of-groups documents -------------------------------------------------


def parse_group_spec(tokens, line=None):
    if tokens[0] == "cyclic":
        return make_cyclic(int(tokens[1]))
    if tokens[0] == "table":
        rows = " ".join(tokens[1:]).split(";")
        table = [[int(x) for x in row.split()] for row in rows]
        return FiniteGroup(table)
    raise ParseError("unknown group spec %r" % (tokens[0],), line)


def parse_gog_document(text):
    groups = {}
    vertices = []
    vnames = {}
    edges = []
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        try:
            if tok[0] == "group":
                groups[tok[1]] = parse_group_spec(tok[2:], ln)
                groups[tok[1]].name = tok[1]
            elif tok[0] == "vertex":
                if tok[2] not in groups:
                    raise ParseError("unknown group %r" % tok[2], ln)
                vnames[tok[1]] = len(vertices)
                vertices.append(groups[tok[2]])
            elif tok[0] == "edge":
                _, _name, u, w, gname = tok[:5]
                rest = " ".join(tok[5:])
                if u not in vnames or w not in vnames:
                    raise ParseError("unknown vertex in edge", ln)
                if gname not in groups:
                    raise ParseError("unknown group %r" % gname, ln)
                eg = groups[gname]
                if rest:
                    parts = rest.split(";")
                    if len(parts) != 2:
                        raise ParseError("edge needs 'images ; images'", ln)
                    img_u = [int(x) for x in parts[0].split()]
                    img_w = [int(x) for x in parts[1].split()]
                else:
                    img_u = img_w = None
                if eg.order == 1:
                    edges.append((vnames[u], vnames[w]))
                else:
                    edges.append((vnames[u], vnames[w], eg, img_u, img_w))
            else:
                raise ParseError("unknown keyword %r" % tok[0], ln)
        except (IndexError, ValueError) as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(str(exc), ln)
    if not vertices:
        raise ParseError("no vertices")
    return gog.build(vertices, edges)


def print_gog_document(g):
    lines = []
    group_names = {}
    for i, G in enumerate(list(g.vertex_groups) + list(g.edge_groups)):
        if id(G) not in group_names:
            name = "G%d" % len(group_names)
            group_names[id(G)] = name
            rows = "; ".join(" ".join(str(x) for x in row) for row in G.table)
            lines.append("group %s table %s" % (name, rows))
    for v, G in enumerate(g.vertex_groups):
        lines.append("vertex v%d %s" % (v, group_names[id(G)]))
    for p in range(g.num_pairs):
        u, w = g.endpoints(p)
        eg = g.edge_groups[p]
        iu = " ".join(str(x) for x in g.inclusions[2 * p].image_of)
        iw = " ".join(str(x) for x in g.inclusions[2 * p + 1].image_of)
        lines.append(
            "edge e%d v%d v%d %s %s ; %s" % (p, u, w, group_names[id(eg)], iu, iw)
        )
    return "\n".join(lines) + "\n"


# -- complex documents ----------------------------------------------------------


class GenericComplex:
    """A tiled complex parsed from a document: polygons with corner angles."""

    def __init__(self):
        self.kind = {}
        self.interior = {}
        self.polys = []  # (vertex tuple, corner tuple)
        self.edges = set()
        self.labels = {}

    @property
    def polygons(self):
        out = []
        for i, (vs, cs) in enumerate(self.polys):
            out.append(abz.Polygon(("p", i), list(vs), list(cs)))
        return out

    def vertex_ids(self):
        return sorted(self.kind, key=repr)

    def is_interior(self, v):
        return self.interior.get(v, False)

    def vertex_link(self, v):
        from .metric import MetricGraph

        nodes = set()
        edges = []
        for vs, cs in self.polys:
            n = len(vs)
            for i, x in enumerate(vs):
                if x != v:
                    continue
                e1 = tuple(sorted((v, vs[(i - 1) % n]), key=repr))
                e2 = tuple(sorted((v, vs[(i + 1) % n]), key=repr))
                nodes.update([e1, e2])
                edges.append((e1, e2, cs[i]))
        return MetricGraph(sorted(nodes, key=repr), edges)


def parse_complex_document(text):
    cx = GenericComplex()
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if tok[0] == "vertex":
            name = tok[1]
            cx.kind[name] = (tok[2] if len(tok) > 2 else "v", "")
            cx.interior[name] = "interior" in tok
        elif tok[0] == "polygon":
            if ":" not in tok:
                raise ParseError("polygon needs ': corners'", ln)
            sep = tok.index(":")
            vs = tok[1:sep]
            cs = [Fraction(x) for x in tok[sep + 1:]]
            if len(vs) != len(cs):
                raise ParseError("polygon corner count mismatch", ln)
            if any(c <= 0 for c in cs):
                raise ParseError("corner angles must be positive", ln)
            for v in vs:
                cx.kind.setdefault(v, ("v", ""))
            n = len(vs)
            for i in range(n):
                cx.edges.add(tuple(sorted((vs[i], vs[(i + 1) % n]))))
            cx.polys.append((tuple(vs), tuple(cs)))
        else:
            raise ParseError("unknown keyword %r" % tok[0], ln)
    return cx


def print_complex_document(cx):
    lines = []
    for v in cx.vertex_ids():
        kind = cx.kind[v][0]
        flag = " interior" if cx.is_interior(v) else ""
        lines.append("vertex %s %s%s" % (_vid(v), kind, flag))
    for poly in cx.polygons:
        lines.append(
            "polygon %s : %s"
            % (
                " ".join(_vid(v) for v in poly.vertices),
                " ".join(str(c) for c in poly.corners),
            )
        )
    return "\n".join(lines) + "\n"


def _vid(v):
    if isinstance(v, str):
        return v
    h = hashlib.sha256(repr(v).encode()).hexdigest()[:12]
    return "%s_%s" % (v[0] if isinstance(v, tuple) else "v", h)


def export_dot(nodes, edges, labels=None, path=None):
    lines = ["graph L {"]
    for n in sorted(nodes, key=repr):
        lab = (labels or {}).get(n, _vid(n))
        lines.append('  "%s" [label="%s"];' % (_vid(n), lab))
    for a, b in sorted(edges, key=repr):
        lines.append('  "%s" -- "%s";' % (_vid(a), _vid(b)))
    lines.append("}")
    out = "\n".join(lines) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(out)
    return out


# -- commands -------------------------------------------------------------------


def _header(args_desc, payload):
    digest = hashlib.sha256(payload.encode()).hexdigest()[:16]
    return "spinel %s | %s | input %s" % (__version__, args_desc, digest)


def _group_from_flag(s):
    if s.startswith("cyclic:"):
        return make_cyclic(int(s.split(":", 1)[1]))
    raise ParseError("group flag must look like cyclic:N")


def cmd_validate(args, out):
    text = open(args.path).read()
    print(_header("validate %s" % args.path, text), file=out)
    try:
        g = parse_gog_document(text)
        gog.validate(g)
    except (ParseError, gog.GogError) as exc:
        print("INVALID: %s" % exc, file=out)
        return 1 if isinstance(exc, gog.GogError) else 2
    print("ok: %d vertices, %d edge pairs" % (g.num_vertices, g.num_pairs), file=out)
    print("in reduced spine: %s" % gog.in_L(g), file=out)
    return 0


def cmd_link(args, out):
    text = open(args.path).read()
    print(_header("link %s vertex=%s" % (args.path, args.vertex), text), file=out)
    try:
        g = parse_gog_document(text)
        gog.validate(g)
    except (ParseError, gog.GogError) as exc:
        print("INVALID: %s" % exc, file=out)
        return 2
    link = spine_local.link_of(g)
    nodes = link.moves_nodes()
    edges = link.moves_edges()
    by_size = {}
    for a in link.ideal_classes:
        by_size[a.size()] = by_size.get(a.size(), 0) + 1
    print("link vertices: %d (%d blow-ups, %d collapses)" % (
        len(nodes), len(link.ideal_classes), len(link.collapse_moves)), file=out)
    print("link edges: %d" % len(edges), file=out)
    print("ideal edges by size: %s" % (sorted(by_size.items()),), file=out)
    if args.dot:
        labels = {}
        for i, a in enumerate(link.ideal_classes):
            labels[("I", i)] = "blowup#%d(size %d at v%d)" % (i, a.size(), a.base)
        for p in link.collapse_moves:
            labels[("C", p)] = "collapse e%d" % p
        export_dot(nodes, edges, labels, args.dot)
        print("dot written to %s" % args.dot, file=out)
    return 0


def cmd_positive(args, out):
    A = _group_from_flag(args.A)
    B = _group_from_flag(args.B)
    desc = "positive A=%s B=%s radius=%d" % (args.A, args.B, args.radius)
    print(_header(desc, desc), file=out)
    cens = abz.census(A, B)
    print("census: %d combinatorial types" % len(cens), file=out)
    ball = abz.build_ball(A, B, args.radius)
    stats = ball.stats()
    print("ball: %s" % dict(stats), file=out)
    cert = metric.check_link_condition(ball)
    print("link condition: %s (%d interior links)" % (
        cert.kind, len(cert.data.get("girths", {}))), file=out)
    ok = cert.kind == "cat0-pass"
    try:
        comps, sizes, touching = abz.check_separation(ball)
        print("separation: %d components, %d meeting the boundary" % (
            len(comps), touching), file=out)
        ok = ok and len(comps) >= 2 and touching >= 2
    except abz.AbzError as exc:
        print("separation skipped: %s" % exc, file=out)
    if A.order == 2 and B.order == 2:
        rep = freeprod_aut.verify_phi()
        print("phi relators inner: %d/9" % len(rep), file=out)
        W = coxeter.paper_w()
        r = min(args.radius, 3)
        wball = coxeter.cayley_ball(W, r)
        dm = coxeter.build_dm(W, wball)
        iso, res = coxeter.compare_with_L(dm, abz.build_ball(A, B, r))
        print("Davis-Moussong comparison (radius %d): %s" % (
            r, "isomorphic (%d cells matched)" % len(res) if iso else res), file=out)
        ok = ok and iso and len(rep) == 9
    print("RESULT: %s" % ("pass" if ok else "FAIL"), file=out)
    return 0 if ok else 1


def cmd_negative(args, out):
    desc = "negative n=%d k=%d mode=%s" % (args.n, args.k, args.mode)
    print(_header(desc, desc), file=out)
    try:
        system = metric.build_constraint_system(args.n, args.k, args.mode)
    except metric.MetricError as exc:
        print("rejected-positive-case: %s" % exc, file=out)
        return 0 if "not-applicable" in str(exc) else 2
    res = metric.is_feasible(system)
    if (args.n, args.k) == (2, 1):
        if res.feasible:
            print("feasible (control case); witness corners:", file=out)
            for var, val in sorted(res.witness.items(), key=repr):
                print("  %s = %s" % (var, val), file=out)
            return 0
        print("FAIL: control case should be feasible", file=out)
        return 1
    if res.feasible:
        print("FAIL: expected infeasible system", file=out)
        return 1
    cert = res.certificate
    print("infeasible: %d constraints over %d corner classes" % (
        len(system.constraints), len(system.variables)), file=out)
    print("Farkas combination (constraint index, multiplier):", file=out)
    for idx, lam in cert.data["lambdas"]:
        c = system.constraints[idx]
        print("  %s * [%s]" % (lam, c.label or ("constraint %d" % idx)), file=out)
    print("certificate re-validates: %s" % cert.revalidate(system), file=out)
    return 0


def cmd_build_ball(args, out):
    A = _group_from_flag(args.A)
    B = _group_from_flag(args.B)
    ball = abz.build_ball(A, B, args.radius)
    print(_header("build-ball", repr((args.A, args.B, args.radius))), file=out)
    print("ball: %s" % dict(ball.stats()), file=out)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(print_complex_document(ball))
        print("complex written to %s" % args.out, file=out)
    if args.dot:
        export_dot(ball.vertex_ids(), ball.edges, path=args.dot)
        print("dot written to %s" % args.dot, file=out)
    return 0


def cmd_check_cat0(args, out):
    text = open(args.path).read()
    print(_header("check-cat0 %s" % args.path, text), file=out)
    try:
        cx = parse_complex_document(text)
    except ParseError as exc:
        print("INVALID: %s" % exc, file=out)
        return 2
    cert = metric.check_link_condition(cx, interior_only=True)
    print("link condition: %s" % cert.kind, file=out)
    if cert.kind != "cat0-pass":
        print("detail: %s" % {k: v for k, v in cert.data.items()}, file=out)
        return 1
    return 0


def cmd_verify_phi(args, out):
    print(_header("verify-phi", "phi"), file=out)
    rep = freeprod_aut.verify_phi()
    for rel, conj in rep:
        print("relator %s: inner, conjugator %r" % ("".join(rel), conj), file=out)
    print("all %d relators inner" % len(rep), file=out)
    return 0


def cmd_verify_normality(args, out):
    print(_header("verify-normality radius=%d" % args.radius, str(args.radius)),
          file=out)
    ball = coxeter.cayley_ball(coxeter.paper_w(), args.radius)
    rep = freeprod_aut.verify_normality_and_index(ball.words)
    print("conjugates matched: %d" % len(rep["conjugates"]), file=out)
    for sname, pname, w, conj in rep["conjugates"]:
        print("  %s Phi(%s) %s^-1 = Phi(%s) * ad(%r)" % (
            sname, pname, sname, "".join("xyzw"[i] for i in w) or "1", conj),
            file=out)
    print("coset cover: %d of %d products" % (
        len(rep["cosets"]), rep["tested_products"]), file=out)
    if rep["unresolved"]:
        print("UNRESOLVED: %s" % rep["unresolved"], file=out)
        return 1
    return 0


def main(argv=None):
    ap = argparse.ArgumentParser(
        prog="spinel",
        description="exact computations in the reduced spine of deformation"
        " spaces of graphs of groups",
    )
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("validate", help="validate a graph-of-groups file")
    p.add_argument("path")

    p = sub.add_parser("link", help="link of a spine vertex")
    p.add_argument("path")
    p.add_argument("--vertex", default=None)
    p.add_argument("--dot", default=None)

    p = sub.add_parser("positive", help="the CAT(0) pipeline for A*B*Z")
    p.add_argument("--A", default="cyclic:2")
    p.add_argument("--B", default="cyclic:2")
    p.add_argument("--radius", type=int, default=3)

    for name in ("negative", "refute-metric"):
        p = sub.add_parser(name, help="infeasibility certificate for (n,k)")
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--k", type=int, required=True)
        p.add_argument("--mode", choices=("euclidean", "hyperbolic"),
                       default="euclidean")

    p = sub.add_parser("build-ball", help="tiled ball of the spine")
    p.add_argument("--A", default="cyclic:2")
    p.add_argument("--B", default="cyclic:2")
    p.add_argument("--radius", type=int, default=3)
    p.add_argument("--out", default=None)
    p.add_argument("--dot", default=None)

    p = sub.add_parser("check-cat0", help="link condition on a complex file")
    p.add_argument("path")

    sub.add_parser("verify-phi", help="the nine relators map to inners")

    p = sub.add_parser("verify-normality", help="normality and index evidence")
    p.add_argument("--radius", type=int, default=4)

    args = ap.parse_args(argv)
    out = sys.stdout
    try:
        if args.cmd == "validate":
            return cmd_validate(args, out)
        if args.cmd == "link":
            return cmd_link(args, out)
        if args.cmd == "positive":
            return cmd_positive(args, out)
        if args.cmd in ("negative", "refute-metric"):
            return cmd_negative(args, out)
        if args.cmd == "build-ball":
            return cmd_build_ball(args, out)
        if args.cmd == "check-cat0":
            return cmd_check_cat0(args, out)
        if args.cmd == "verify-phi":
            return cmd_verify_phi(args, out)
        if args.cmd == "verify-normality":
            return cmd_verify_normality(args, out)
    except ParseError as exc:
        print("parse error: %s" % exc, file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
