"""Command line front end.

Exit codes: 0 success, 1 usage error, 2 domain error (bad group, singular
block, indeterminate point, ...).  Rationals print as ``p/q``, floats with
17 significant digits.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import catalog, dynamics, schreier, schur, spectra, subshift, treeauto, walks
from .errors import DomainError


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def fmt(value):
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, int):
        return str(value)
    return format(float(value), ".17g")


def _number(text, exact=True):
    text = text.strip()
    if exact:
        try:
            return Fraction(text)
        except ValueError:
            pass
    return float(text)


def _assignments(text):
    out = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        if "=" not in part:
            raise UsageError(f"expected name=value, got {part!r}")
        k, v = part.split("=", 1)
        out[k.strip()] = _number(v)
    return out


def _vertex(text):
    return tuple(int(c) for c in text.strip())


def cmd_catalog(args, out):
    if args.action == "list":
        for name in catalog.names():
            out.write(f"{name}\t{catalog.get(name).description}\n")
        return
    if not args.name:
        raise UsageError("catalog show needs a group name")
    spec = catalog.get(args.name)
    if args.json:
        data = spec.machine.to_dict()
        data["generators"] = list(spec.generators)
        out.write(json.dumps(data, indent=2) + "\n")
    else:
        m = spec.machine
        out.write(f"{spec.name}: {spec.description}\n")
        for q, s in enumerate(m.names):
            secs = ", ".join(m.names[t] for t in m.transition[q])
            out.write(f"  {s} = {list(m.output[q])} ({secs})\n")


def cmd_act(args, out):
    spec = _group(args)
    g = spec.word(args.word)
    if args.section:
        out.write(str(treeauto.section(g, _vertex(args.vertex))) + "\n")
    else:
        out.write("".join(map(str, treeauto.apply(g, _vertex(args.vertex)))) + "\n")


def cmd_wp(args, out):
    spec = _group(args)
    trivial = treeauto.is_identity(spec.word(args.word), budget=args.budget)
    out.write("identity\n" if trivial else "nontrivial\n")


def cmd_nucleus(args, out):
    spec = catalog.get(args.group)
    for g in treeauto.nucleus(spec.machine, cap=args.cap):
        out.write(str(g) + "\n")


def cmd_schreier(args, out):
    spec = catalog.get(args.group)
    if args.ball is not None:
        graph = schreier.boundary_ball(spec, _vertex(args.xi), args.ball,
                                       prefix=_vertex(args.prefix) if args.prefix else ())
    else:
        graph = schreier.level_graph(spec, args.level)
    out.write(schreier.export_csv(graph) if args.format == "csv" else schreier.export_dot(graph))


def cmd_growth(args, out):
    spec = catalog.get(args.group)
    table, _ = schreier.cayley_ball(spec, args.radius)
    out.write("radius,sphere,ball\n")
    for k, (s, b) in enumerate(zip(table.sphere, table.ball)):
        out.write(f"{k},{s},{b}\n")


PARAM_NAMES = "xyzuqrst"


def _pencil(spec, args):
    """Weights come as generator names (``a=1/4``) or as positional
    parameters ``x, y, z, ...`` in generator order; ``v`` or ``1`` is the
    identity coefficient."""
    if args.adjacency:
        return spectra.adjacency_pencil(spec)
    if not args.pencil:
        return spectra.markov_pencil(spec)
    weights, ident = {}, 0
    labels = [label for label, _ in spec.symmetric_generators()]
    for key, value in _assignments(args.pencil).items():
        if key in ("v", "1"):
            ident = value
        elif key in labels:
            weights[key] = value
        elif key in PARAM_NAMES and PARAM_NAMES.index(key) < len(spec.generators):
            weights[spec.generators[PARAM_NAMES.index(key)]] = value
        else:
            raise UsageError(f"unknown pencil weight {key!r} for {spec.name}")
    return spectra.Pencil(weights, ident)


def _group(args):
    if getattr(args, "machine", None):
        with open(args.machine) as fh:
            machine = treeauto.MealyMachine.from_json(fh.read())
        gens = tuple(n for n in machine.names if n != "1")
        return catalog.GroupSpec(args.machine, machine, gens)
    if not args.group:
        raise UsageError("--group or --machine is required")
    return catalog.get(args.group)


def cmd_spectrum(args, out):
    spec = catalog.get(args.group)
    if args.exact:
        raise UsageError("exact mode is not available for eigenvalue computations")
    mat = spectra.pencil_matrix(spec, _pencil(spec, args), args.level)
    result = spectra.eigen_sym(mat, method=args.method)
    out.write("value,multiplicity\n")
    for v, m in result.clusters:
        out.write(f"{fmt(v)},{m}\n")


def cmd_dos(args, out):
    spec = catalog.get(args.group)
    if args.exact:
        raise UsageError("exact mode is not available for eigenvalue computations")
    (measure,), _ = spectra.dos(spec, _pencil(spec, args), [args.level])
    out.write("value,cdf\n")
    total = 0.0
    for v, m in measure.atoms:
        total += m
        out.write(f"{fmt(v)},{fmt(total)}\n")


def cmd_schur(args, out):
    at = _assignments(args.at)
    if args.group == "grigorchuk":
        names = ("x", "y", "z", "u", "v")
        s1, s2 = schur.derive_grigorchuk_maps(*(at.get(n, Fraction(0)) for n in names))
        rows = [("S1", s1), ("S2", s2)]
    elif args.group == "overgroup":
        names = ("x", "y", "z", "u", "q", "r", "s", "t", "v")
        s1, s2 = schur.derive_overgroup_maps(*(at.get(n, Fraction(0)) for n in names))
        rows = [("S1", s1), ("S2", s2)]
    elif args.group == "gomega":
        vals = [at.get(n, Fraction(0)) for n in ("x", "v", "y", "z", "u")]
        rows = [("S2", schur.derive_gomega_schur2_full(*vals, args.omega0))]
    else:
        raise UsageError(f"schur derive supports grigorchuk, overgroup, gomega; got {args.group}")
    for label, values in rows:
        out.write(label + " " + " ".join(fmt(v) for v in values) + "\n")


def cmd_map(args, out):
    if args.action == "list":
        for name, spec in dynamics.REGISTRY.items():
            extra = f" params={','.join(spec.params)}" if spec.params else ""
            out.write(f"{name}\tdim={spec.dim}{extra}\t{spec.description}\n")
        return
    if not args.id:
        raise UsageError("--id is required")
    if args.action == "render" and args.exact:
        raise UsageError("exact mode is not available for rendering")
    params = _assignments(args.params) if args.params else None
    if args.action == "orbit":
        point = tuple(_number(c, exact=args.exact) for c in args.point.split(","))
        if not args.exact:
            point = tuple(float(c) for c in point)
        orbit = dynamics.iterate(args.id, point, args.n, params=params)
        for p in orbit.points:
            out.write(" ".join(fmt(c) for c in p) + "\n")
        out.write(f"# {orbit.status}" + (f" at step {orbit.step}" if orbit.step is not None else "") + "\n")
        return
    try:
        window = tuple(float(w) for w in args.window.split(":"))
    except ValueError:
        raise UsageError("window must be xmin:xmax:ymin:ymax") from None
    if len(window) != 4:
        raise UsageError("window must be xmin:xmax:ymin:ymax")
    sequence = None
    if args.omega:
        sequence = dynamics.omega_sequence([int(c) for c in args.omega], args.iters, seed=args.seed)
    img = dynamics.render(args.id, window, args.res, args.iters, params=params, sequence=sequence)
    path = args.out or f"{args.id}.ppm"
    dynamics.write_image(img, path)
    out.write(f"{path} {dynamics.image_hash(img)}\n")


def cmd_walk(args, out):
    if args.action == "fixedpoint":
        found = walks.find_fixed_points(grid=args.grid, tol=args.tol, which=args.which)
        if not found:
            out.write("none\n")
        for p, count in found:
            exact_p = walks.rational_fixed_point(p) if args.which == "k1" else None
            values = exact_p if exact_p is not None else p
            out.write(" ".join(fmt(c) for c in values) + "\n")
        return
    p = tuple(_number(c) for c in args.at.split(","))
    if args.action == "iterate":
        fn = walks.k1_hat if args.which == "k1" else walks.k2_normalized
        out.write("step,x,y,z,u\n")
        for step in range(args.n + 1):
            out.write(f"{step}," + ",".join(fmt(c) for c in p) + "\n")
            if step < args.n:
                p = fn(p)
                if not args.exact:
                    p = tuple(float(c) for c in p)
        return
    fn = {"k1": walks.k1, "k2": walks.k2, "k1hat": walks.k1_hat}[args.action]
    out.write(" ".join(fmt(c) for c in fn(p)) + "\n")


def cmd_subshift(args, out):
    sub = subshift.SIGMA_PRIME if args.prime else subshift.SIGMA
    if args.action == "eta":
        out.write(subshift.fixed_point_prefix(sub, "a", args.length) + "\n")
    elif args.action == "relators":
        spec = catalog.get("grigorchuk")
        for word in subshift.presentation_relators(args.k):
            line = word
            if args.verify:
                line += " " + ("identity" if treeauto.is_identity(spec.word(word)) else "nontrivial")
            out.write(line + "\n")
    elif args.action == "periods":
        periods, skipped = subshift.toeplitz_periods(subshift.fixed_point_prefix(sub, "a", args.length))
        counts = {}
        for p in periods.values():
            counts[p] = counts.get(p, 0) + 1
        out.write("period,positions\n")
        for p in sorted(counts):
            out.write(f"{p},{counts[p]}\n")
        out.write(f"# skipped {skipped}\n")
    elif args.action == "primitive":
        ok, k = subshift.is_primitive(sub)
        out.write(f"{'primitive' if ok else 'not primitive'}" + (f" K={k}" if ok else "") + "\n")


def build_parser():
    p = _Parser(prog="fractalgroups", description="self-similar groups, pencils and their maps")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    c = sub.add_parser("catalog")
    c.add_argument("action", choices=["list", "show"])
    c.add_argument("name", nargs="?")
    c.add_argument("--json", action="store_true")

    c = sub.add_parser("act")
    c.add_argument("--group")
    c.add_argument("--machine", help="JSON machine file instead of a catalog group")
    c.add_argument("--word", required=True)
    c.add_argument("--vertex", required=True)
    c.add_argument("--section", action="store_true", help="print the section instead of the image")

    c = sub.add_parser("wp")
    c.add_argument("--group")
    c.add_argument("--machine", help="JSON machine file instead of a catalog group")
    c.add_argument("--word", required=True)
    c.add_argument("--budget", type=int, default=treeauto.DEFAULT_BUDGET)

    c = sub.add_parser("nucleus")
    c.add_argument("--group", required=True)
    c.add_argument("--cap", type=int, default=treeauto.DEFAULT_NUCLEUS_CAP)

    c = sub.add_parser("schreier")
    c.add_argument("--group", required=True)
    c.add_argument("--level", type=int, default=3)
    c.add_argument("--format", choices=["dot", "csv"], default="dot")
    c.add_argument("--ball", type=int, help="radius of a boundary ball instead of a level graph")
    c.add_argument("--xi", default="1", help="periodic part of the boundary point")
    c.add_argument("--prefix", default="")

    c = sub.add_parser("growth")
    c.add_argument("--group", required=True)
    c.add_argument("--radius", type=int, default=6)

    for name in ("spectrum", "dos"):
        c = sub.add_parser(name)
        c.add_argument("group")
        c.add_argument("--level", type=int, required=True)
        if name == "spectrum":
            c.add_argument("--method", choices=["lapack", "jacobi"], default="lapack")
        c.add_argument("--adjacency", action="store_true")
        c.add_argument("--pencil", help="e.g. x=1/4,y=1/4,z=1/4,u=1/4 or a=1,b=2")
        c.add_argument("--exact", action="store_true", help="rejected: eigenvalues are floating point")

    c = sub.add_parser("schur")
    c.add_argument("action", choices=["derive"])
    c.add_argument("--group", required=True)
    c.add_argument("--at", required=True, help="e.g. x=1/2,y=1/3,z=1/5,u=2,v=3")
    c.add_argument("--omega0", type=int, default=0)

    c = sub.add_parser("map")
    c.add_argument("action", choices=["render", "orbit", "list"])
    c.add_argument("--id")
    c.add_argument("--window", default="-4:4:-4:4")
    c.add_argument("--res", type=int, default=512)
    c.add_argument("--iters", type=int, default=100)
    c.add_argument("--params")
    c.add_argument("--omega", help="prefix of the sequence driving omega<w> maps")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out")
    c.add_argument("--point")
    c.add_argument("--n", type=int, default=10)
    c.add_argument("--exact", action="store_true")

    c = sub.add_parser("walk")
    c.add_argument("action", choices=["fixedpoint", "iterate", "k1", "k2", "k1hat"])
    c.add_argument("--grid", type=int, default=10)
    c.add_argument("--tol", type=float, default=1e-12)
    c.add_argument("--which", choices=["k1", "k2"], default="k1")
    c.add_argument("--at", help="x,y,z,u")
    c.add_argument("--n", type=int, default=20)
    c.add_argument("--exact", action="store_true")

    c = sub.add_parser("subshift")
    c.add_argument("action", choices=["eta", "relators", "periods", "primitive"])
    c.add_argument("--length", type=int, default=1024)
    c.add_argument("--k", type=int, default=4)
    c.add_argument("--verify", action="store_true")
    c.add_argument("--prime", action="store_true", help="use the primitive substitution")
    return p


COMMANDS = {
    "catalog": cmd_catalog, "act": cmd_act, "wp": cmd_wp, "nucleus": cmd_nucleus,
    "schreier": cmd_schreier, "growth": cmd_growth, "spectrum": cmd_spectrum, "dos": cmd_dos,
    "schur": cmd_schur, "map": cmd_map, "walk": cmd_walk, "subshift": cmd_subshift,
}


def _attach_negative_values(argv):
    # "--window -4:4:-4:4" would otherwise read the value as an option
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else None
        if tok.startswith("--") and "=" not in tok and nxt and len(nxt) > 1 \
                and nxt[0] == "-" and (nxt[1].isdigit() or nxt[1] == "."):
            out.append(f"{tok}={nxt}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def run(argv, out=None, err=None):
    """Run one command; returns the exit code."""
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(_attach_negative_values(list(argv)))
        if not args.command:
            raise UsageError("missing command")
        if args.command == "walk" and args.action != "fixedpoint" and not args.at:
            raise UsageError("--at is required")
        if args.command == "map" and args.action == "orbit" and not args.point:
            raise UsageError("--point is required")
        COMMANDS[args.command](args, out)
        return 0
    except UsageError as exc:
        err.write(f"usage error: {exc}\n")
        return 1
    except DomainError as exc:
        err.write(f"error: {type(exc).__name__}: {exc}\n")
        return 2


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
