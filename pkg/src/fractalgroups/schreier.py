"""Schreier graphs of levels and of boundary points, Cayley balls, export."""
from __future__ import annotations

import io
from collections import deque
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .errors import BudgetExceeded, PatternMismatch, StabilizationNotReached
from .treeauto import DEFAULT_BUDGET, apply, canonical_form, level_permutation


@dataclass
class LabeledGraph:
    """Directed multigraph with labeled edges ``(src, dst, label)``."""

    vertices: list
    edges: list
    marked: object = None
    labels: tuple = field(default=())

    def __post_init__(self):
        if not self.labels:
            seen = []
            for _, _, lab in self.edges:
                if lab not in seen:
                    seen.append(lab)
            self.labels = tuple(seen)

    def out_map(self, label):
        return {s: t for s, t, lab in self.edges if lab == label}

    def degree(self, v, involutive=()):
        """Non-oriented degree: an involutive label contributes once per vertex,
        any other label once for the outgoing and once for the incoming edge."""
        # for an involution the edges s->t and t->s are one undirected edge
        deg = 0
        for s, t, lab in self.edges:
            if lab in involutive:
                deg += s == v
            else:
                deg += (s == v) + (t == v)
        return deg

    def is_connected(self):
        if not self.vertices:
            return True
        adj = {v: set() for v in self.vertices}
        for s, t, _ in self.edges:
            adj[s].add(t)
            adj[t].add(s)
        seen = {self.vertices[0]}
        stack = [self.vertices[0]]
        while stack:
            for w in adj[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == len(self.vertices)


def vertex_name(letters):
    return "".join(str(x) for x in letters)


def level_graph(spec, n):
    """Schreier graph of level ``n``: an edge ``v -> g(v)`` per generator."""
    d = spec.machine.d
    verts = [vertex_name(v) for v in product(range(d), repeat=n)]
    edges = []
    for g in spec.generators:
        perm = level_permutation(spec.gen(g), n)
        edges.extend((verts[i], verts[int(perm[i])], g) for i in range(len(verts)))
    edges.sort(key=lambda e: (e[0], spec.generators.index(e[2])))
    return LabeledGraph(verts, edges, labels=tuple(spec.generators))


def covering_map(upper, lower):
    """Check that deleting the last letter maps ``upper`` onto ``lower``
    edge by edge; returns True on success."""
    lower_edges = {(s, lab): t for s, t, lab in lower.edges}
    for s, t, lab in upper.edges:
        if lower_edges.get((s[:-1], lab)) != t[:-1]:
            return False
    return True


def _ball(spec, root, r):
    moves = spec.symmetric_generators()
    dist = {root: 0}
    queue = deque([root])
    while queue:
        v = queue.popleft()
        if dist[v] == r:
            continue
        for _, g in moves:
            w = apply(g, v)
            if w not in dist:
                dist[w] = dist[v] + 1
                queue.append(w)
    verts = sorted(dist, key=lambda v: (dist[v], v))
    inside = set(verts)
    edges = []
    for v in verts:
        for g in spec.generators:
            w = apply(spec.gen(g), v)
            if w in inside:
                edges.append((vertex_name(v), vertex_name(w), g))
    return LabeledGraph([vertex_name(v) for v in verts], edges, marked=vertex_name(root),
                        labels=tuple(spec.generators)), dist


def rooted_code(graph, root):
    """Canonical code of a connected rooted graph in which every label is a
    partial injection; equal codes mean label-preserving rooted isomorphism."""
    out = {lab: {} for lab in graph.labels}
    inn = {lab: {} for lab in graph.labels}
    for s, t, lab in graph.edges:
        out[lab][s] = t
        inn[lab][t] = s
    order = {root: 0}
    queue = [root]
    for v in queue:
        for lab in graph.labels:
            for table in (out[lab], inn[lab]):
                w = table.get(v)
                if w is not None and w not in order:
                    order[w] = len(order)
                    queue.append(w)
    if len(order) != len(graph.vertices):
        raise ValueError("graph is not connected")
    return len(order), tuple(sorted((order[s], order[t], graph.labels.index(lab))
                                    for s, t, lab in graph.edges))


def isomorphic(g1, g2):
    """Label-preserving isomorphism of connected Schreier-type graphs."""
    if len(g1.vertices) != len(g2.vertices) or len(g1.edges) != len(g2.edges):
        return False
    if set(g1.labels) != set(g2.labels):
        return False
    g2 = LabeledGraph(g2.vertices, g2.edges, labels=g1.labels)
    target = rooted_code(g2, g2.vertices[0])
    return any(rooted_code(g1, v) == target for v in g1.vertices)


def boundary_ball(spec, xi, r, prefix=(), n_cap=16):
    """Ball of radius ``r`` around the boundary point ``prefix + xi^inf``.

    The ball in the level-``n`` graph around the length-``n`` truncation is
    computed for growing ``n``; the answer is returned once two consecutive
    levels agree up to rooted isomorphism.
    """
    xi = tuple(xi)
    prefix = tuple(prefix)

    def point(n):
        seq = list(prefix)
        while len(seq) < n:
            seq.extend(xi)
        return tuple(seq[:n])

    previous = None
    for n in range(1, n_cap + 1):
        ball, _ = _ball(spec, point(n), r)
        code = rooted_code(ball, ball.marked)
        if previous is not None and code == previous[1]:
            return previous[0]
        previous = (ball, code)
    raise StabilizationNotReached(f"ball of radius {r} still changing at level {n_cap}")


GRIGORCHUK_LABELS = ("a", "b", "c", "d")
SIGMA_LABEL = {"b": "d", "c": "b", "d": "c"}


def _check_grigorchuk_pattern(graph):
    if set(graph.labels) != set(GRIGORCHUK_LABELS):
        raise PatternMismatch(f"labels {graph.labels} are not a, b, c, d")
    maps = {}
    for lab in GRIGORCHUK_LABELS:
        m = graph.out_map(lab)
        if len(m) != len(graph.vertices) or sum(1 for e in graph.edges if e[2] == lab) != len(m):
            raise PatternMismatch(f"label {lab} is not one edge per vertex")
        if any(m.get(t) != s for s, t in m.items()):
            raise PatternMismatch(f"label {lab} is not an involution")
        maps[lab] = m
    if any(s == t for s, t in maps["a"].items()):
        raise PatternMismatch("a-edge loop found")
    for v in graph.vertices:
        targets = [maps[lab][v] for lab in "bcd"]
        loops = targets.count(v)
        moved = {t for t in targets if t != v}
        if not (loops == 3 or (loops == 1 and len(moved) == 1)):
            raise PatternMismatch(f"b, c, d edges at {v!r} do not follow the level pattern")
    return maps


def substitution_expand(graph):
    """Next level of a Grigorchuk Schreier graph by local substitution.

    Each vertex ``v`` becomes an a-edge between ``1v`` and ``0v``.  An a-edge
    ``v - w`` becomes a b-edge and a c-edge between ``0v`` and ``0w``; the
    b, c, d edges at ``v`` move to ``1v`` with labels b, c, d -> d, b, c;
    every ``0v`` carries a d-loop.
    """
    maps = _check_grigorchuk_pattern(graph)
    verts = [f"0{v}" for v in graph.vertices] + [f"1{v}" for v in graph.vertices]
    edges = []
    for v in graph.vertices:
        edges.append((f"0{v}", f"1{v}", "a"))
        edges.append((f"1{v}", f"0{v}", "a"))
        w = maps["a"][v]
        edges.append((f"0{v}", f"0{w}", "b"))
        edges.append((f"0{v}", f"0{w}", "c"))
        edges.append((f"0{v}", f"0{v}", "d"))
        for lab in "bcd":
            edges.append((f"1{v}", f"1{maps[lab][v]}", SIGMA_LABEL[lab]))
    return LabeledGraph(verts, edges, labels=GRIGORCHUK_LABELS)


@dataclass
class GrowthTable:
    radius: int
    sphere: list
    ball: list


def cayley_ball(spec, r, budget=DEFAULT_BUDGET):
    """Ball of radius ``r`` in the Cayley graph (left multiplication).

    Elements are told apart by the canonical form of their minimized
    automaton.  Returns the growth table and the ball as a labeled graph.
    """
    moves = spec.symmetric_generators()
    forms = {canonical_form(spec.machine.identity): 0}
    words = [spec.machine.identity]
    frontier = [0]
    sphere = [1]
    edges = []
    for _ in range(r):
        nxt = []
        for i in frontier:
            for label, g in moves:
                h = g * words[i]
                form = canonical_form(h)
                j = forms.get(form)
                if j is None:
                    if len(words) >= budget:
                        raise BudgetExceeded(f"ball holds more than {budget} elements")
                    j = len(words)
                    forms[form] = j
                    words.append(h.reduced())
                    nxt.append(j)
                edges.append((i, j, label))
        sphere.append(len(nxt))
        frontier = nxt
    names = [str(w) for w in words]
    graph = LabeledGraph(names, [(names[i], names[j], lab) for i, j, lab in edges],
                         marked=names[0], labels=tuple(lab for lab, _ in moves))
    return GrowthTable(r, sphere, list(np.cumsum(sphere).tolist())), graph


def _quote(s):
    return '"' + str(s).replace('"', '\\"') + '"'


def export_dot(graph, name="G"):
    """Deterministic Graphviz text: vertices in graph order, then edges."""
    buf = io.StringIO()
    buf.write(f"digraph {name} {{\n")
    for v in graph.vertices:
        extra = " [shape=doublecircle]" if v == graph.marked else ""
        buf.write(f"  {_quote(v)}{extra};\n")
    for s, t, lab in graph.edges:
        buf.write(f"  {_quote(s)} -> {_quote(t)} [label={_quote(lab)}];\n")
    buf.write("}\n")
    return buf.getvalue()


def export_csv(graph):
    lines = ["src,dst,label"]
    lines.extend(f"{s},{t},{lab}" for s, t, lab in graph.edges)
    return "\n".join(lines) + "\n"
