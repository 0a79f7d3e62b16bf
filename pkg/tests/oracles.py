"""Slow, direct reference implementations used to cross-check the package."""

import cmath
import itertools
import math


def bias(elements, x, q):
    total = sum(cmath.exp(2j * math.pi * s * x / q) for s in elements)
    return abs(total) / len(elements)


def max_bias(elements, q):
    return max(bias(elements, x, q) for x in range(1, q))


def hash_vector(rows, q, x):
    """Full tensor-product statevector built by explicit index expansion."""
    d = len(rows[0])
    out = []
    for ks in itertools.product(range(d), repeat=len(rows)):
        amp = 1.0
        for row, k in zip(rows, ks):
            amp *= cmath.exp(2j * math.pi * row[k] * x / q) / math.sqrt(d)
        out.append(amp)
    return out


def fidelity(rows, q, x1, x2):
    a, b = hash_vector(rows, q, x1), hash_vector(rows, q, x2)
    return abs(sum(u.conjugate() * v for u, v in zip(a, b))) ** 2


def worst_case(rows, q):
    d = len(rows[0])
    best = 0.0
    for x in range(1, q):
        f = 1.0
        for row in rows:
            f *= abs(sum(cmath.exp(2j * math.pi * s * x / q) for s in row)) ** 2 / d**2
        best = max(best, f)
    return best


def brute_force_optimum(q, d, m):
    """min over all canonical parameter matrices of the worst-case collision.

    Returns (value, minimizers) where minimizers are row-sorted matrices.
    """
    rows = [(0,) + c for c in itertools.combinations(range(1, q), d - 1)]
    factor = {}
    for row in rows:
        factor[row] = [abs(sum(cmath.exp(2j * math.pi * s * x / q) for s in row)) ** 2 / d**2
                       for x in range(1, q)]
    values = {}
    for mat in itertools.product(rows, repeat=m):
        key = tuple(sorted(mat))
        if key in values:
            continue
        values[key] = max(math.prod(factor[r][i] for r in mat) for i in range(q - 1))
    best = min(values.values())
    return best, sorted(k for k, v in values.items() if v <= best + 1e-12)


def best_biased(q, d):
    """Smallest max bias over all d-subsets of Z_q containing 0."""
    return min(max_bias((0,) + c, q) for c in itertools.combinations(range(1, q), d - 1))
