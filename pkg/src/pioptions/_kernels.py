"""Compiled stochastic-tree kernels.

The tree is walked depth first with one row of child results per level, so a
replication needs O(n * l) memory no matter how many leaves it has.
"""

from __future__ import annotations

import math

import numba
import numpy as np

from ._rng import normal_at


@numba.njit(inline="always")
def _power(x, e):
    # pow(x, 0) == 1 and pow(x, 1) == x exactly, so these only skip the libm call
    if e == 0.0:
        return 1.0
    if e == 1.0:
        return x
    return math.pow(x, e)


@numba.njit(inline="always")
def _exercise(s, m, a, b, strike, sign):
    return max(0.0, sign * (_power(m, a) * _power(s, b) - strike))


@numba.njit(nogil=True, cache=True)
def combine(h, theta_kids, phi_kids, disc):
    """High and low estimator at one node from its children's estimates.

    The low estimator is written as ``(n_ex / l) * h + disc * (held / l)`` rather
    than a plain mean of the per-branch values: a node where every branch
    exercises then returns exactly ``h``, and one where every branch holds rounds
    exactly like the high estimator's continuation, so the two never cross by
    an ulp.
    """
    l = theta_kids.shape[0]
    theta_total = 0.0
    phi_total = 0.0
    for j in range(l):
        theta_total += theta_kids[j]
        phi_total += phi_kids[j]
    theta = max(h, disc * (theta_total / l))
    n_ex = 0
    held = 0.0
    for j in range(l):
        others = disc * ((phi_total - phi_kids[j]) / (l - 1))
        if h >= others:
            n_ex += 1
        else:
            held += phi_kids[j]
    phi = (n_ex / l) * h + disc * (held / l)
    return theta, phi


@numba.njit(nogil=True, cache=True)
def tree_replication(seed, rep, s0, m0, drift, vol, disc, a, b, strike, sign, n, l):
    """Root (theta, phi) of one realized tree and the count of nodes with phi > theta."""
    s = np.empty(n + 1)
    m = np.empty(n + 1)
    idx = np.zeros(n + 1, dtype=np.int64)
    branch = np.zeros(n + 1, dtype=np.int64)
    theta_kids = np.empty((n, l))
    phi_kids = np.empty((n, l))
    s[0] = s0
    m[0] = m0
    violations = 0
    d = 0
    while True:
        if branch[d] < l:
            j = branch[d]
            child = idx[d] * l + j
            z = normal_at(seed, rep, d + 1, child)
            sc = s[d] * math.exp(drift + vol * z)
            mc = max(m[d], sc)
            if d + 1 == n:
                h = _exercise(sc, mc, a, b, strike, sign)
                theta_kids[d, j] = h
                phi_kids[d, j] = h
                branch[d] = j + 1
            else:
                d += 1
                s[d] = sc
                m[d] = mc
                idx[d] = child
                branch[d] = 0
        else:
            h = _exercise(s[d], m[d], a, b, strike, sign)
            theta, phi = combine(h, theta_kids[d], phi_kids[d], disc)
            if phi > theta:
                violations += 1
            if d == 0:
                return theta, phi, violations
            d -= 1
            theta_kids[d, branch[d]] = theta
            phi_kids[d, branch[d]] = phi
            branch[d] += 1


@numba.njit(nogil=True, cache=True)
def tree_block(seed, first_rep, theta_out, phi_out, viol_out,
               s0, m0, drift, vol, disc, a, b, strike, sign, n, l):
    for k in range(theta_out.shape[0]):
        th, ph, v = tree_replication(seed, first_rep + k, s0, m0, drift, vol, disc,
                                     a, b, strike, sign, n, l)
        theta_out[k] = th
        phi_out[k] = ph
        viol_out[k] = v


@numba.njit(nogil=True, cache=True)
def realize_levels(seed, rep, s0, m0, drift, vol, a, b, strike, sign, n, l):
    """Exercise values of every node, level-major (level i holds l**i entries)."""
    total = 0
    width = 1
    for _ in range(n + 1):
        total += width
        width *= l
    s = np.empty(total)
    m = np.empty(total)
    h = np.empty(total)
    s[0] = s0
    m[0] = m0
    h[0] = _exercise(s0, m0, a, b, strike, sign)
    start = 0
    width = 1
    for step in range(1, n + 1):
        nxt = start + width
        for p in range(width):
            for j in range(l):
                child = p * l + j
                z = normal_at(seed, rep, step, child)
                sc = s[start + p] * math.exp(drift + vol * z)
                mc = max(m[start + p], sc)
                s[nxt + child] = sc
                m[nxt + child] = mc
                h[nxt + child] = _exercise(sc, mc, a, b, strike, sign)
        start = nxt
        width *= l
    return s, m, h
