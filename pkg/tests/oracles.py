"""Independent reference implementations used only by the tests.

Nothing here imports the package's evaluation code: elementary symmetric
functions by brute-force subsets, power means by their definition,
derivatives by central differences, exact sphere solutions.
"""
from itertools import combinations
from math import comb

import numpy as np


def esym_brute(x, k):
    """Normalized E_k = e_k / C(n,k) by summing over all k-subsets."""
    x = np.asarray(x, dtype=float)
    n = x.size
    return sum(np.prod([x[i] for i in c]) for c in combinations(range(n), k)) / comb(n, k)


def quot_brute(x, k, l):
    return (esym_brute(x, k) / esym_brute(x, l)) ** (1.0 / (k - l))


def pmean_brute(x, r):
    x = np.asarray(x, dtype=float)
    if r == 0:
        return float(np.exp(np.mean(np.log(x))))
    return float(np.mean(x ** r) ** (1.0 / r))


def dual_brute(f, x):
    x = np.asarray(x, dtype=float)
    return 1.0 / f(1.0 / x)


def fd_gradient(f, x, rel=1e-5):
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        h = rel * max(abs(x[i]), 1e-3)
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def fd_hessian(f, x, rel=1e-4):
    x = np.asarray(x, dtype=float)
    n = x.size
    H = np.empty((n, n))
    for i in range(n):
        h = rel * max(abs(x[i]), 1e-3)
        e = np.zeros(n)
        e[i] = h
        H[i] = (fd_gradient(f, x + e) - fd_gradient(f, x - e)) / (2 * h)
    return 0.5 * (H + H.T)


def sphere_radius(r0, alpha, t):
    return (r0 ** (1 + alpha) - (1 + alpha) * np.asarray(t)) ** (1 / (1 + alpha))


def support_ellipse(a, b, theta):
    """Support function of the ellipse x^2/a^2 + y^2/b^2 <= 1 (x: equatorial, y: axis)."""
    return np.sqrt((a * np.cos(theta)) ** 2 + (b * np.sin(theta)) ** 2)


def brute_center_scan(theta, s, lo=-1.0, hi=1.0, count=20001, passes=3):
    """Inradius and circumradius by scanning axial centres on dense grids.

    Each pass rescans a window of a few cells around the previous optimum.
    """
    sin = np.sin(theta)

    def scan(a, b):
        cs = np.linspace(a, b, count)
        vals = s[None, :] - cs[:, None] * sin[None, :]
        inner, outer = vals.min(axis=1), vals.max(axis=1)
        return cs, inner, outer

    res = []
    for pick in ("in", "out"):
        a, b = lo, hi
        for _ in range(passes):
            cs, inner, outer = scan(a, b)
            k = int(np.argmax(inner)) if pick == "in" else int(np.argmin(outer))
            step = cs[1] - cs[0]
            a, b = cs[k] - 2 * step, cs[k] + 2 * step
        res.append(float(inner[k]) if pick == "in" else float(outer[k]))
    return res[0], res[1]
