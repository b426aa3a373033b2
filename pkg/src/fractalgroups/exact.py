"""Small dense linear algebra over Fractions (Gauss-Jordan elimination)."""
from fractions import Fraction

from .errors import SingularBlock


def as_fraction_matrix(rows):
    return [[Fraction(v) for v in row] for row in rows]


def identity(n):
    return [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]


def matmul(a, b):
    inner = len(b)
    cols = len(b[0]) if b else 0
    return [[sum((a[i][k] * b[k][j] for k in range(inner)), Fraction(0))
             for j in range(cols)] for i in range(len(a))]


def add(a, b, scale=1):
    return [[x + scale * y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def solve(a, b):
    """Solve a X = b exactly; b is a matrix (list of rows)."""
    n = len(a)
    m = len(b[0]) if b else 0
    aug = [list(map(Fraction, a[i])) + list(map(Fraction, b[i])) for i in range(n)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if pivot is None:
            raise SingularBlock(f"matrix is singular (column {col})")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        p = aug[col][col]
        row = [v / p for v in aug[col]]
        aug[col] = row
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], row)]
    return [aug[i][n:n + m] for i in range(n)]


def inverse(a):
    return solve(a, identity(len(a)))
