"""Slow reference implementations used to pin expected values in tests."""

import numpy as np


def point_segment_closest(p, a, b):
    d = b - a
    dd = float(d @ d)
    if dd == 0.0:
        return a.copy()
    t = float(np.clip((p - a) @ d / dd, 0.0, 1.0))
    return a + t * d


def dense_triangle_closest(p, a, b, c, n=400):
    """Closest point on a triangle by dense barycentric sampling."""
    best_d2 = np.inf
    best = None
    for i in range(n + 1):
        for j in range(n + 1 - i):
            u = i / n
            v = j / n
            q = a + u * (b - a) + v * (c - a)
            d2 = float((p - q) @ (p - q))
            if d2 < best_d2:
                best_d2 = d2
                best = q
    return best, np.sqrt(best_d2)


def linear_scan_closest(tris, p):
    """Brute-force closest point over a triangle soup; ties -> lowest index."""
    from udfmesh.geometry import point_triangle_distance

    best = (np.inf, None, -1)
    for i, t in enumerate(tris):
        d, q = point_triangle_distance(p, t)
        if d < best[0]:
            best = (d, q, i)
    return best


def brute_power_argmin(positions, weights, x):
    """Lowest-index argmin of the power distance at x."""
    pw = ((x - positions) ** 2).sum(axis=1) - weights ** 2
    return int(np.argmin(pw))
