"""Named self-similar groups given by their wreath recursions.

Recursions are written ``name: (output_row, sections)`` with sections
listed by input letter, so ``b = (a, c)`` reads: ``b`` fixes the first
letter and has section ``a`` below ``0`` and ``c`` below ``1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import UnknownName
from .treeauto import MealyMachine

ID2 = (0, 1)
SWAP = (1, 0)


@dataclass(frozen=True)
class GroupSpec:
    name: str
    machine: MealyMachine
    generators: tuple
    description: str = ""
    omega: tuple | None = None
    notes: dict = field(default_factory=dict)

    def gen(self, name, inverse=False):
        return self.machine.generator(name, inverse)

    def word(self, text):
        return self.machine.word(text)

    @property
    def involutive_generators(self):
        return tuple(g for g in self.generators if self.machine.involutions[self.machine.state(g)])

    def symmetric_generators(self):
        """Generators plus inverses of the non-involutive ones, as (label, element)."""
        out = []
        for g in self.generators:
            out.append((g, self.gen(g)))
            if g not in self.involutive_generators:
                out.append((g + "^-1", self.gen(g, inverse=True)))
        return out


def _grigorchuk():
    m = MealyMachine.from_recursions(2, {
        "1": (ID2, ("1", "1")),
        "a": (SWAP, ("1", "1")),
        "b": (ID2, ("a", "c")),
        "c": (ID2, ("a", "d")),
        "d": (ID2, ("1", "b")),
    })
    return GroupSpec("grigorchuk", m, ("a", "b", "c", "d"),
                     "first Grigorchuk group, intermediate growth")


def _overgroup():
    # uppercase letters stand for the tilde generators
    m = MealyMachine.from_recursions(2, {
        "1": (ID2, ("1", "1")),
        "a": (SWAP, ("1", "1")),
        "b": (ID2, ("a", "c")),
        "c": (ID2, ("a", "d")),
        "d": (ID2, ("1", "b")),
        "A": (ID2, ("a", "A")),
        "B": (ID2, ("1", "C")),
        "C": (ID2, ("1", "D")),
        "D": (ID2, ("a", "B")),
    })
    return GroupSpec("overgroup", m, ("a", "b", "c", "d", "A", "B", "C", "D"),
                     "Grigorchuk overgroup; A, B, C, D are the tilde generators")


def _lamplighter():
    m = MealyMachine.from_recursions(2, {
        "a": (SWAP, ("a", "b")),
        "b": (ID2, ("a", "b")),
    })
    return GroupSpec("lamplighter", m, ("a", "b"), "lamplighter group Z2 wr Z")


def _hanoi3():
    m = MealyMachine.from_recursions(3, {
        "1": ((0, 1, 2), ("1", "1", "1")),
        "a": ((1, 0, 2), ("1", "1", "a")),
        "b": ((2, 1, 0), ("1", "b", "1")),
        "c": ((0, 2, 1), ("c", "1", "1")),
    })
    return GroupSpec("hanoi3", m, ("a", "b", "c"), "Hanoi towers group on three pegs")


def _basilica():
    m = MealyMachine.from_recursions(2, {
        "1": (ID2, ("1", "1")),
        "a": (ID2, ("1", "b")),
        "b": (SWAP, ("a", "1")),
    })
    return GroupSpec("basilica", m, ("a", "b"), "Basilica group, IMG(z^2 - 1)")


def _img_i():
    m = MealyMachine.from_recursions(2, {
        "1": (ID2, ("1", "1")),
        "a": (SWAP, ("1", "1")),
        "b": (ID2, ("a", "c")),
        "c": (ID2, ("b", "1")),
    })
    return GroupSpec("img_z2_plus_i", m, ("a", "b", "c"), "iterated monodromy group of z^2 + i")


def _adding_machine():
    m = MealyMachine.from_recursions(2, {
        "1": (ID2, ("1", "1")),
        "a": (SWAP, ("1", "a")),
    })
    return GroupSpec("adding_machine", m, ("a",), "binary odometer, infinite cyclic")


def _bellaterra():
    m = MealyMachine.from_recursions(2, {
        "a": (ID2, ("c", "b")),
        "b": (ID2, ("b", "c")),
        "c": (SWAP, ("a", "a")),
    })
    return GroupSpec("bellaterra", m, ("a", "b", "c"),
                     "Bellaterra automaton, free product of three groups of order 2",
                     notes={"source": "standard published recursion, not read off a figure"})


def _f3():
    m = MealyMachine.from_recursions(2, {
        "a": (SWAP, ("b", "c")),
        "b": (SWAP, ("c", "b")),
        "c": (ID2, ("a", "a")),
    })
    return GroupSpec("f3", m, ("a", "b", "c"),
                     "Aleshin automaton generating a free group of rank 3",
                     notes={"source": "standard published recursion, not read off a figure"})


# letter w of the sequence decides which of b, c, d has section a at 0
OMEGA_SECTION = {
    "b": {0: "a", 1: "a", 2: "1"},
    "c": {0: "a", 1: "1", 2: "a"},
    "d": {0: "1", 1: "a", 2: "a"},
}


def omega_group(prefix, period):
    """Group G_w for the eventually periodic sequence ``prefix + period^inf``.

    ``b_w = (b_{w0}, b_{Tw})`` and likewise for ``c``, ``d``.  The
    generators at shift 0 are named ``b, c, d``; shifted copies are ``b1``,
    ``c1``, ... .
    """
    prefix = tuple(int(v) for v in prefix)
    period = tuple(int(v) for v in period)
    if not period:
        raise UnknownName("period must be nonempty")
    if any(v not in (0, 1, 2) for v in prefix + period):
        raise UnknownName("sequence letters must be 0, 1 or 2")
    seq = prefix + period
    n = len(seq)

    def nxt(j):
        return j + 1 if j + 1 < n else len(prefix)

    def name(letter, j):
        return letter if j == 0 else f"{letter}{j}"

    rec = {"1": (ID2, ("1", "1")), "a": (SWAP, ("1", "1"))}
    for j in range(n):
        for letter in "bcd":
            rec[name(letter, j)] = (ID2, (OMEGA_SECTION[letter][seq[j]], name(letter, nxt(j))))
    m = MealyMachine.from_recursions(2, rec)
    label = "".join(map(str, prefix)) + "(" + "".join(map(str, period)) + ")"
    return GroupSpec(f"omega:{label}", m, ("a", "b", "c", "d"),
                     f"Grigorchuk group G_w for w = {label}^inf", omega=(prefix, period))


_BUILDERS = {
    "grigorchuk": _grigorchuk,
    "overgroup": _overgroup,
    "lamplighter": _lamplighter,
    "hanoi3": _hanoi3,
    "basilica": _basilica,
    "img_z2_plus_i": _img_i,
    "adding_machine": _adding_machine,
    "bellaterra": _bellaterra,
    "f3": _f3,
}
_CACHE = {}


def names():
    return list(_BUILDERS)


def get(name):
    """Catalog lookup; ``omega:<prefix>(<period>)`` builds a G_w group."""
    if name.startswith("omega:"):
        return _parse_omega(name[6:])
    if name not in _BUILDERS:
        raise UnknownName(f"unknown group {name!r}; known: {', '.join(_BUILDERS)}")
    if name not in _CACHE:
        _CACHE[name] = _BUILDERS[name]()
    return _CACHE[name]


def _parse_omega(text):
    if "(" in text and text.endswith(")"):
        prefix, period = text[:-1].split("(", 1)
    else:
        prefix, period = "", text
    try:
        return omega_group([int(c) for c in prefix], [int(c) for c in period])
    except ValueError:
        raise UnknownName(f"bad sequence {text!r}") from None
