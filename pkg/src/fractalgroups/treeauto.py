"""Mealy automata and the tree automorphisms they generate.

Group elements are words in the states and their inverses.  A word acts on
the left: the product ``g*h`` sends a vertex ``v`` to ``g(h(v))``, so the
rightmost letter of a word is applied first.  Sections follow

    (g h)|_x = g|_{h(x)} h|_x,        (g^-1)|_x = (g|_{g^-1(x)})^-1.

Letters are packed into ints: state ``q`` is ``2*q`` and its inverse is
``2*q + 1``.
"""
from __future__ import annotations

import json
import re
import threading
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from . import exact
from .errors import BudgetExceeded, MalformedTable, NotContractingWithinCap

DEFAULT_BUDGET = 200_000
DEFAULT_NUCLEUS_CAP = 10_000


class MealyMachine:
    """Synchronous transducer over the letters ``0 .. d-1``.

    ``output[q][x]`` is the letter written and ``transition[q][x]`` the
    state entered when state ``q`` reads ``x``.  Tables are validated on
    construction.
    """

    def __init__(self, alphabet_size, names, output, transition):
        if not isinstance(alphabet_size, int) or alphabet_size < 1:
            raise MalformedTable(f"alphabet size must be a positive int, got {alphabet_size!r}")
        names = [str(s) for s in names]
        if not names:
            raise MalformedTable("machine has no states")
        if len(set(names)) != len(names):
            raise MalformedTable("state names are not unique")
        if len(output) != len(names) or len(transition) != len(names):
            raise MalformedTable("table rows do not match the number of states")
        d = alphabet_size
        for q, name in enumerate(names):
            if len(output[q]) != d or len(transition[q]) != d:
                raise MalformedTable(f"state {name!r}: rows must have {d} entries")
            for x in range(d):
                y, t = output[q][x], transition[q][x]
                if not (isinstance(y, (int, np.integer)) and 0 <= y < d):
                    raise MalformedTable(f"state {name!r}: output {y!r} outside the alphabet")
                if not (isinstance(t, (int, np.integer)) and 0 <= t < len(names)):
                    raise MalformedTable(f"state {name!r}: transition {t!r} to unknown state")
        self.d = d
        self.names = tuple(names)
        self.output = tuple(tuple(int(y) for y in row) for row in output)
        self.transition = tuple(tuple(int(t) for t in row) for row in transition)
        self._index = {s: i for i, s in enumerate(self.names)}
        self._perm_cache = {}
        self._lock = threading.Lock()

    # -- construction helpers -------------------------------------------------

    @classmethod
    def from_recursions(cls, alphabet_size, recursions):
        """Build from ``{name: (output_row, section_names)}``."""
        names = list(recursions)
        index = {s: i for i, s in enumerate(names)}
        output, transition = [], []
        for name in names:
            out, secs = recursions[name]
            output.append(list(out))
            try:
                transition.append([index[s] for s in secs])
            except KeyError as exc:
                raise MalformedTable(f"state {name!r}: unknown section {exc.args[0]!r}") from None
        return cls(alphabet_size, names, output, transition)

    @classmethod
    def from_dict(cls, data):
        try:
            d = data["alphabet"]
            rows = data["states"]
            names = [r["name"] for r in rows]
        except (KeyError, TypeError) as exc:
            raise MalformedTable(f"missing field {exc}") from None
        index = {str(s): i for i, s in enumerate(names)}
        output, transition = [], []
        for r in rows:
            output.append(list(r.get("out", [])))
            to = []
            for t in r.get("to", []):
                if isinstance(t, str):
                    if t not in index:
                        raise MalformedTable(f"transition to unknown state {t!r}")
                    to.append(index[t])
                else:
                    to.append(t)
            transition.append(to)
        return cls(d, names, output, transition)

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise MalformedTable(f"invalid JSON: {exc}") from None
        return cls.from_dict(data)

    def to_dict(self):
        return {
            "alphabet": self.d,
            "states": [
                {"name": s, "out": list(self.output[q]),
                 "to": [self.names[t] for t in self.transition[q]]}
                for q, s in enumerate(self.names)
            ],
        }

    def to_json(self, indent=2):
        return json.dumps(self.to_dict(), indent=indent)

    def __repr__(self):
        return f"MealyMachine(d={self.d}, states={list(self.names)})"

    # -- basic properties -----------------------------------------------------

    def state(self, name):
        if name not in self._index:
            raise KeyError(name)
        return self._index[name]

    @property
    def size(self):
        return len(self.names)

    @cached_property
    def invertible(self):
        return all(sorted(row) == list(range(self.d)) for row in self.output)

    @cached_property
    def inverse_output(self):
        if not self.invertible:
            raise MalformedTable("machine is not invertible: some output row is not a permutation")
        inv = []
        for row in self.output:
            r = [0] * self.d
            for x, y in enumerate(row):
                r[y] = x
            inv.append(tuple(r))
        return tuple(inv)

    @cached_property
    def classes(self):
        """Moore equivalence class of every state (smallest member index)."""
        return _moore_classes(self.output, self.transition)

    @cached_property
    def trivial_states(self):
        """States acting as the identity (greatest fixed point)."""
        trivial = [all(row[x] == x for x in range(self.d)) for row in self.output]
        changed = True
        while changed:
            changed = False
            for q in range(self.size):
                if trivial[q] and not all(trivial[t] for t in self.transition[q]):
                    trivial[q] = False
                    changed = True
        return tuple(trivial)

    @cached_property
    def involutions(self):
        """States q with q*q trivial, found with the plain reduction rules."""
        flags = []
        for q in range(self.size):
            if self.trivial_states[q]:
                flags.append(True)
                continue
            try:
                flags.append(_closure_is_trivial(self, (2 * q, 2 * q), self._reduce_basic, 10_000))
            except BudgetExceeded:
                flags.append(False)
        return tuple(flags)

    # -- words ----------------------------------------------------------------

    def _reduce_basic(self, letters):
        rep, trivial = self.classes, self.trivial_states
        out = []
        for l in letters:
            q = rep[l >> 1]
            if trivial[q]:
                continue
            l = (q << 1) | (l & 1)
            if out and out[-1] == l ^ 1:
                out.pop()
            else:
                out.append(l)
        return tuple(out)

    def reduce(self, letters):
        """Exact rewriting: merge equivalent states, drop trivial ones,
        write involutions without inverse marks and cancel ``q q^-1``."""
        rep, trivial, invol = self.classes, self.trivial_states, self.involutions
        out = []
        for l in letters:
            q = rep[l >> 1]
            if trivial[q]:
                continue
            inv = 0 if invol[q] else l & 1
            l = (q << 1) | inv
            if out and (out[-1] == l ^ 1 or (inv == 0 and invol[q] and out[-1] == l)):
                out.pop()
            else:
                out.append(l)
        return tuple(out)

    def element(self, letters):
        return ElementWord(self, tuple(letters))

    @property
    def identity(self):
        return ElementWord(self, ())

    def generator(self, name, inverse=False):
        return ElementWord(self, ((self.state(name) << 1) | int(inverse),))

    def word(self, text):
        """Parse a word such as ``"adad"``, ``"b a^-1 c"`` or ``"x'y"``.

        State names are matched greedily (longest first); ``^-1`` or a
        trailing apostrophe marks an inverse; spaces, ``*`` and ``.``
        separate letters.  ``1`` or ``e`` alone is the identity.
        """
        text = text.strip()
        if text in ("", "e") or (text == "1" and "1" not in self._index):
            return self.identity
        names = sorted(self.names, key=len, reverse=True)
        letters = []
        i = 0
        while i < len(text):
            if text[i] in " *.,":
                i += 1
                continue
            for s in names:
                if text.startswith(s, i):
                    i += len(s)
                    break
            else:
                raise MalformedTable(f"cannot parse word at {text[i:]!r}")
            inv = 0
            m = re.match(r"\^-1|'", text[i:])
            if m:
                inv = 1
                i += m.end()
            letters.append((self._index[s] << 1) | inv)
        return ElementWord(self, tuple(letters))

    def letter_name(self, l):
        s = self.names[l >> 1]
        return s + "^-1" if l & 1 else s

    # -- per-letter action ----------------------------------------------------

    def step(self, l, x):
        """Letter ``l`` reading ``x``: returns (output, section letter)."""
        q = l >> 1
        if l & 1:
            y = self.inverse_output[q][x]
            return y, (self.transition[q][y] << 1) | 1
        return self.output[q][x], self.transition[q][x] << 1

    def expand(self, letters, x):
        """Image of the first letter ``x`` and the (unreduced) section there."""
        sec = [0] * len(letters)
        for i in range(len(letters) - 1, -1, -1):
            x, sec[i] = self.step(letters[i], x)
        return x, tuple(sec)

    def state_permutation(self, l, n):
        """Permutation of level ``n`` induced by a single letter (cached)."""
        key = (l, n)
        perm = self._perm_cache.get(key)
        if perm is not None:
            return perm
        if l & 1:
            fwd = self.state_permutation(l ^ 1, n)
            perm = np.empty_like(fwd)
            perm[fwd] = np.arange(fwd.size)
        elif n == 0:
            perm = np.zeros(1, dtype=np.int64)
        else:
            q = l >> 1
            block = self.d ** (n - 1)
            perm = np.concatenate([
                self.output[q][x] * block + self.state_permutation(self.transition[q][x] << 1, n - 1)
                for x in range(self.d)
            ])
        with self._lock:
            self._perm_cache[key] = perm
        return perm


@dataclass(frozen=True)
class ElementWord:
    """A word over the states of ``machine`` and their inverses."""

    machine: MealyMachine
    letters: tuple

    def __post_init__(self):
        if not self.machine.invertible and any(l & 1 for l in self.letters):
            raise MalformedTable("inverse letters need an invertible machine")

    def __mul__(self, other):
        return compose(self, other)

    def __pow__(self, k):
        if k < 0:
            return invert(self) ** (-k)
        return ElementWord(self.machine, self.letters * k)

    def inverse(self):
        return invert(self)

    def reduced(self):
        return ElementWord(self.machine, self.machine.reduce(self.letters))

    def __len__(self):
        return len(self.letters)

    def __str__(self):
        if not self.letters:
            return "1"
        names = [self.machine.letter_name(l) for l in self.letters]
        sep = "" if all(len(s) == 1 for s in self.machine.names) else " "
        return sep.join(names)

    def __repr__(self):
        return f"ElementWord({str(self)!r})"


def validate(machine):
    """Return ``machine`` with its tables checked; ``machine.invertible``
    tells whether it defines a group.

    Accepts a ``MealyMachine``, a dict in the JSON layout or a JSON string.
    """
    if isinstance(machine, str):
        machine = MealyMachine.from_json(machine)
    elif isinstance(machine, dict):
        machine = MealyMachine.from_dict(machine)
    if machine.invertible:
        machine.inverse_output
    return machine


def require_invertible(machine):
    machine = validate(machine)
    if not machine.invertible:
        bad = [machine.names[q] for q, row in enumerate(machine.output)
               if sorted(row) != list(range(machine.d))]
        raise MalformedTable(f"output rows are not permutations for states {bad}")
    return machine


def compose(g, h):
    if g.machine is not h.machine:
        raise ValueError("elements belong to different machines")
    return ElementWord(g.machine, g.letters + h.letters)


def invert(g):
    return ElementWord(g.machine, tuple(l ^ 1 for l in reversed(g.letters)))


def apply(g, vertex):
    """Image of a vertex (sequence of letters) under ``g``."""
    m = g.machine
    v = list(vertex)
    for l in reversed(g.letters):
        cur = l
        for i, x in enumerate(v):
            v[i], cur = m.step(cur, x)
    return tuple(v)


def section(g, vertex):
    """The section ``g|_v`` as a reduced word."""
    m = g.machine
    word = m.reduce(g.letters)
    for x in vertex:
        _, word = m.expand(word, x)
        word = m.reduce(word)
    return ElementWord(m, word)


def root_permutation(g):
    m = g.machine
    return tuple(m.expand(g.letters, x)[0] for x in range(m.d))


def level_permutation(g, n):
    """Array ``p`` with ``p[i] = index(g(v_i))`` on level ``n``.

    Vertex ``x_1 ... x_n`` has index ``sum x_k d^(n-k)``.
    """
    m = g.machine
    result = np.arange(m.d ** n)
    for l in reversed(g.letters):
        result = m.state_permutation(l, n)[result]
    return result


def _closure_is_trivial(machine, word, reducer, budget):
    d = machine.d
    start = reducer(word)
    seen = {start}
    queue = deque([start])
    while queue:
        w = queue.popleft()
        if not w:
            continue
        for x in range(d):
            y, sec = machine.expand(w, x)
            if y != x:
                return False
            sec = reducer(sec)
            if sec not in seen:
                if len(seen) >= budget:
                    raise BudgetExceeded(f"section closure exceeded {budget} words")
                seen.add(sec)
                queue.append(sec)
    return True


def is_identity(g, budget=DEFAULT_BUDGET):
    """Decide whether ``g`` acts trivially on the whole tree.

    Explores every section reachable from ``g``; a nontrivial root
    permutation anywhere is a witness, otherwise the element is trivial.
    """
    m = g.machine
    require_invertible(m)
    return _closure_is_trivial(m, g.letters, m.reduce, budget)


def equal(g, h, budget=DEFAULT_BUDGET):
    return is_identity(compose(g, invert(h)), budget)


def _moore_classes(output, transition):
    n = len(output)
    sig = [tuple(output[q]) for q in range(n)]
    block = _relabel(sig)
    while True:
        sig = [(block[q],) + tuple(block[t] for t in transition[q]) for q in range(n)]
        new = _relabel(sig)
        if len(set(new)) == len(set(block)):
            block = new
            break
        block = new
    first = {}
    for q in range(n):
        first.setdefault(block[q], q)
    return tuple(first[block[q]] for q in range(n))


def _relabel(sig):
    ids = {}
    return [ids.setdefault(s, len(ids)) for s in sig]


def section_closure(g, budget=DEFAULT_BUDGET):
    """All reduced section words of ``g`` with their root permutations.

    Returns ``(words, perms, children)`` with ``words[0]`` the reduced ``g``.
    """
    m = g.machine
    start = m.reduce(g.letters)
    index = {start: 0}
    words, perms, children = [start], [], []
    i = 0
    while i < len(words):
        w = words[i]
        row, kids = [], []
        for x in range(m.d):
            y, sec = m.expand(w, x)
            sec = m.reduce(sec)
            row.append(y)
            if sec not in index:
                if len(words) >= budget:
                    raise BudgetExceeded(f"section closure exceeded {budget} words")
                index[sec] = len(words)
                words.append(sec)
            kids.append(index[sec])
        perms.append(tuple(row))
        children.append(tuple(kids))
        i += 1
    return words, perms, children


def canonical_form(g, budget=DEFAULT_BUDGET):
    """Hashable form of the minimized initial automaton of ``g``.

    Two words are equal as tree automorphisms exactly when their canonical
    forms coincide.
    """
    _, perms, children = section_closure(g, budget)
    cls = _moore_classes(perms, children)
    order = {cls[0]: 0}
    queue = [cls[0]]
    rows = []
    for c in queue:
        kids = []
        for t in children[c]:
            k = cls[t]
            if k not in order:
                order[k] = len(order)
                queue.append(k)
            kids.append(order[k])
        rows.append((perms[c], tuple(kids)))
    return tuple(rows)


def element_automaton(g, budget=DEFAULT_BUDGET):
    """Minimized initial automaton of ``g``; its state ``s0`` realizes ``g``."""
    form = canonical_form(g, budget)
    names = [f"s{i}" for i in range(len(form))]
    return MealyMachine(g.machine.d, names, [r[0] for r in form], [r[1] for r in form])


def minimize(machine):
    """Quotient by Moore equivalence; each class keeps its first member's name."""
    cls = machine.classes
    keep = sorted(set(cls))
    pos = {q: i for i, q in enumerate(keep)}
    return MealyMachine(
        machine.d,
        [machine.names[q] for q in keep],
        [machine.output[q] for q in keep],
        [[pos[cls[t]] for t in machine.transition[q]] for q in keep],
    )


def disjoint_union(first, second, suffix="'"):
    if first.d != second.d:
        raise MalformedTable("alphabets differ")
    n = first.size
    names = list(first.names) + [s + suffix for s in second.names]
    output = list(first.output) + list(second.output)
    transition = list(first.transition) + [[t + n for t in row] for row in second.transition]
    return MealyMachine(first.d, names, output, transition)


def compose_automata(first, second):
    """Machine on pairs ``(q, s)`` whose state acts as ``first_q o second_s``."""
    if first.d != second.d:
        raise MalformedTable("alphabets differ")
    d = first.d
    pairs = [(q, s) for q in range(first.size) for s in range(second.size)]
    pos = {p: i for i, p in enumerate(pairs)}
    output, transition = [], []
    for q, s in pairs:
        out_row, to_row = [], []
        for x in range(d):
            y = second.output[s][x]
            out_row.append(first.output[q][y])
            to_row.append(pos[(first.transition[q][y], second.transition[s][x])])
        output.append(out_row)
        transition.append(to_row)
    names = [f"{first.names[q]}*{second.names[s]}" for q, s in pairs]
    return MealyMachine(d, names, output, transition)


def inverse_automaton(machine):
    inv = require_invertible(machine).inverse_output
    transition = [[machine.transition[q][inv[q][y]] for y in range(machine.d)]
                  for q in range(machine.size)]
    return MealyMachine(machine.d, [s + "^-1" for s in machine.names], inv, transition)


def count_fixed(g, n):
    """Number of level-``n`` vertices fixed by ``g``."""
    m = g.machine
    memo = {}

    def fixed(w, k):
        if not w:
            return m.d ** k
        if k == 0:
            return 1
        key = (w, k)
        if key not in memo:
            total = 0
            for x in range(m.d):
                y, sec = m.expand(w, x)
                if y == x:
                    total += fixed(m.reduce(sec), k - 1)
            memo[key] = total
        return memo[key]

    return fixed(m.reduce(g.letters), n)


def trace_estimate(g, n):
    """Fraction of level-``n`` vertices fixed by ``g``."""
    return Fraction(count_fixed(g, n), g.machine.d ** n)


def trace_limit(g, budget=DEFAULT_BUDGET):
    """Limit of ``trace_estimate(g, n)``: the measure of the fixed boundary set.

    Solves ``t(w) = (1/d) sum_{x fixed} t(w|_x)`` exactly over the words
    reachable through fixed letters, with ``t = 1`` on trivial words.
    """
    m = g.machine
    start = m.reduce(g.letters)
    index = {start: 0}
    words = [start]
    edges = []
    i = 0
    while i < len(words):
        w = words[i]
        out = []
        if w and not is_identity(ElementWord(m, w), budget):
            for x in range(m.d):
                y, sec = m.expand(w, x)
                if y == x:
                    sec = m.reduce(sec)
                    if sec not in index:
                        if len(words) >= budget:
                            raise BudgetExceeded("trace system too large")
                        index[sec] = len(words)
                        words.append(sec)
                    out.append(index[sec])
            edges.append(out)
        else:
            edges.append(None)
        i += 1
    n = len(words)
    a = [[Fraction(int(r == c)) for c in range(n)] for r in range(n)]
    b = [[Fraction(0)] for _ in range(n)]
    for r, out in enumerate(edges):
        if out is None:
            b[r][0] = Fraction(1)
            continue
        for c in out:
            a[r][c] -= Fraction(1, m.d)
    return exact.solve(a, b)[0][0]


def _core(nodes, children):
    """Nodes reachable from a cycle of the section graph."""
    n = len(nodes)
    # repeatedly strip nodes with no incoming edges; survivors lie on or below cycles
    indeg = [0] * n
    for kids in children:
        for k in kids:
            indeg[k] += 1
    alive = [True] * n
    stack = [i for i in range(n) if indeg[i] == 0]
    while stack:
        i = stack.pop()
        alive[i] = False
        for k in children[i]:
            indeg[k] -= 1
            if indeg[k] == 0:
                stack.append(k)
    return [i for i in range(n) if alive[i]]


class _ElementTable:
    """Canonical forms of words, each stored once with a shortest word."""

    def __init__(self, machine, budget):
        self.machine = machine
        self.budget = budget
        self.by_form = {}
        self.words = []
        self.forms = []
        self.children = []

    def add(self, word):
        word = self.machine.reduce(word)
        form = canonical_form(ElementWord(self.machine, word), self.budget)
        i = self.by_form.get(form)
        if i is None:
            i = len(self.words)
            self.by_form[form] = i
            self.words.append(word)
            self.forms.append(form)
            self.children.append(None)
        elif len(word) < len(self.words[i]):
            self.words[i] = word
        return i

    def expand(self, i):
        if self.children[i] is None:
            kids = []
            for x in range(self.machine.d):
                _, sec = self.machine.expand(self.words[i], x)
                kids.append(self.add(sec))
            self.children[i] = kids
        return self.children[i]

    def closure(self, start, cap):
        todo = list(start)
        seen = set(todo)
        while todo:
            i = todo.pop()
            for k in self.expand(i):
                if k not in seen:
                    seen.add(k)
                    todo.append(k)
            if len(self.words) > cap:
                raise NotContractingWithinCap(f"more than {cap} elements while searching for the nucleus")
        return seen


def nucleus(machine, cap=DEFAULT_NUCLEUS_CAP, budget=DEFAULT_BUDGET):
    """Nucleus of a contracting self-similar group, as shortest words.

    Starting from the core of the generators' section closure, products of
    pairs of nucleus candidates are added (through their cores) until the
    set is stable.
    """
    machine = require_invertible(machine)
    table = _ElementTable(machine, budget)
    gens = [table.add(())]
    for q in range(machine.size):
        gens.append(table.add((q << 1,)))
        gens.append(table.add((q << 1 | 1,)))

    def core_of(ids):
        ids = sorted(table.closure(ids, cap))
        local = {i: k for k, i in enumerate(ids)}
        kids = [[local[c] for c in table.children[i]] for i in ids]
        return {ids[k] for k in _core(ids, kids)}

    current = core_of(gens)
    checked = set()
    while True:
        new_ids = []
        members = sorted(current)
        for g in members:
            for h in members:
                if (g, h) in checked:
                    continue
                checked.add((g, h))
                new_ids.append(table.add(table.words[g] + table.words[h]))
                if len(table.words) > cap:
                    raise NotContractingWithinCap(f"more than {cap} elements while searching for the nucleus")
        grown = core_of(list(current) + new_ids)
        if grown == current:
            break
        current = grown
        if len(current) > cap:
            raise NotContractingWithinCap(f"nucleus candidate exceeds {cap} elements")
    words = sorted((table.words[i] for i in current), key=lambda w: (len(w), w))
    return [ElementWord(machine, w) for w in words]
