"""Substitutions on words, their fixed points and the Grigorchuk presentation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PrefixConditionViolated


@dataclass(frozen=True)
class Substitution:
    rules: dict

    @property
    def alphabet(self):
        letters = set(self.rules)
        for w in self.rules.values():
            letters.update(w)
        return sorted(letters)

    def __call__(self, word):
        return apply_substitution(self, word)

    def power(self, word, k):
        for _ in range(k):
            word = self(word)
        return word

    def matrix(self):
        """``M[i][j]`` = occurrences of letter ``i`` in the image of letter ``j``."""
        alpha = self.alphabet
        pos = {c: i for i, c in enumerate(alpha)}
        m = np.zeros((len(alpha), len(alpha)), dtype=np.int64)
        for c in alpha:
            for ch in self.rules.get(c, c):
                m[pos[ch], pos[c]] += 1
        return m


SIGMA = Substitution({"a": "aca", "b": "d", "c": "b", "d": "c"})
SIGMA_PRIME = Substitution({"a": "ac", "b": "ac", "c": "ad", "d": "ab"})


def apply_substitution(sub, word):
    return "".join(sub.rules.get(c, c) for c in word)


def fixed_point_prefix(sub, seed, length):
    """First ``length`` letters of the fixed point grown from ``seed``."""
    image = sub.rules.get(seed, seed)
    if len(image) < 2 or image[0] != seed:
        raise PrefixConditionViolated(f"image of {seed!r} is {image!r}; need {seed!r} followed by more letters")
    word = seed
    while len(word) < length:
        word = sub(word)
    return word[:length]


def _verified_period(arr, n):
    # a candidate counts only if it repeats at least twice inside the prefix
    length = len(arr)
    for p in range(1, (length - 1 - n) // 2 + 1):
        if np.all(arr[n::p] == arr[n]):
            return p
    return None


def toeplitz_periods(prefix):
    """Least period of every position ``n < len(prefix) / 4``.

    The period of ``n`` is the least ``p`` with ``prefix[n + k p] ==
    prefix[n]`` for every ``k`` inside the prefix, and ``n + 2p`` still
    inside it.  Positions without such a ``p`` are skipped; returns
    ``(periods, skipped)``.
    """
    arr = np.frombuffer(prefix.encode(), dtype=np.uint8)
    periods = {}
    skipped = 0
    for n in range(len(arr) // 4):
        p = _verified_period(arr, n)
        if p is None:
            skipped += 1
        else:
            periods[n] = p
    return periods, skipped


def is_primitive(sub, k_max=None):
    """``(True, K)`` for the least ``K`` with a positive ``K``-th matrix
    power, or ``(False, None)`` if none up to ``4 |A|^2``."""
    m = sub.matrix()
    k_max = k_max or 4 * len(m) ** 2
    power = np.eye(len(m), dtype=np.int64)
    bool_m = (m > 0).astype(np.int64)
    for k in range(1, k_max + 1):
        power = ((power @ bool_m) > 0).astype(np.int64)
        if power.all():
            return True, k
    return False, None


def factors(word, max_len):
    out = set()
    for n in range(1, max_len + 1):
        out.update(word[i:i + n] for i in range(len(word) - n + 1))
    return out


def language(sub, max_len, seed="a"):
    """Factors of length ``<= max_len`` of the fixed point from ``seed``.

    Prefixes are doubled until the factor set is unchanged twice in a row.
    """
    length = max(64, 8 * max_len)
    prev, stable = None, 0
    while True:
        cur = factors(fixed_point_prefix(sub, seed, length), max_len)
        if cur == prev:
            stable += 1
            if stable == 2:
                return cur
        else:
            stable = 0
        prev = cur
        length *= 2


def return_window(word, w):
    """Least ``R`` such that every length-``R`` window of ``word`` that starts
    at or before the last occurrence of ``w`` contains ``w``."""
    starts = []
    i = word.find(w)
    while i != -1:
        starts.append(i)
        i = word.find(w, i + 1)
    if not starts:
        return None
    gaps = [starts[0] + 1] + [b - a for a, b in zip(starts, starts[1:])]
    return max(gaps) - 1 + len(w)


def repetitivity_bound(sub, w_len, seed="a", length=None):
    """Largest ratio ``R(w) / |w|`` over factors with ``|w| <= w_len``, read
    from a fixed-point prefix (``length`` defaults to ``256 * w_len``)."""
    length = length or 256 * w_len
    word = fixed_point_prefix(sub, seed, length)
    half = word[: length // 2]
    best = 0.0
    for w in factors(half, w_len):
        r = return_window(word, w)
        best = max(best, r / len(w))
    return best


def presentation_relators(k_max=4):
    """``sigma^k((ad)^4)`` and ``sigma^k((adacac)^4)`` for ``k = 0..k_max``."""
    out = []
    for k in range(k_max + 1):
        out.append(SIGMA.power("ad" * 4, k))
        out.append(SIGMA.power("adacac" * 4, k))
    return out


FINITE_RELATORS = ("aa", "bb", "cc", "dd", "bcd")
