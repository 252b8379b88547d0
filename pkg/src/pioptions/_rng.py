"""Counter-based standard-normal draws.

Every variate is a pure function of ``(master_seed, replication, step, index)``:

    key = mix(mix(mix(mix(seed) ^ replication) ^ step) ^ index)
    u1  = uniform(mix(key ^ LANE_1)),  u2 = uniform(mix(key ^ LANE_2))
    z   = sqrt(-2 log u1) * cos(2 pi u2)

``mix`` is the splitmix64 finalizer and ``uniform`` maps the top 53 bits to the
open interval (0, 1).  For a tree node, ``index`` is the node's position within
its level (``parent_index * l + branch``); for a plain path it is 0.  No state is
carried between draws, so any partition of the work across threads sees the
same numbers.
"""

from __future__ import annotations

import math

import numba
import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MUL1 = np.uint64(0xBF58476D1CE4E5B9)
_MUL2 = np.uint64(0x94D049BB133111EB)
_LANE_1 = np.uint64(0x243F6A8885A308D3)
_LANE_2 = np.uint64(0x13198A2E03707344)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_TWO_M53 = 1.0 / 9007199254740992.0
_TWO_PI = 2.0 * math.pi

MASK64 = (1 << 64) - 1


@numba.njit(inline="always")
def _mix(x):
    z = x + _GOLDEN
    z = (z ^ (z >> _S30)) * _MUL1
    z = (z ^ (z >> _S27)) * _MUL2
    return z ^ (z >> _S31)


@numba.njit(inline="always")
def _unit(x):
    return (np.float64(x >> _S11) + 0.5) * _TWO_M53


@numba.njit(nogil=True, cache=True)
def normal_at(seed, replication, step, index):
    """Standard normal for one ``(seed, replication, step, index)`` counter."""
    key = _mix(np.uint64(seed))
    key = _mix(key ^ np.uint64(replication))
    key = _mix(key ^ np.uint64(step))
    key = _mix(key ^ np.uint64(index))
    u1 = _unit(_mix(key ^ _LANE_1))
    u2 = _unit(_mix(key ^ _LANE_2))
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(_TWO_PI * u2)


@numba.njit(nogil=True, cache=True)
def normals_over_replications(seed, replications, step, index):
    out = np.empty(replications.shape[0])
    for k in range(replications.shape[0]):
        out[k] = normal_at(seed, replications[k], step, index)
    return out


def seed_to_u64(seed: int) -> np.uint64:
    return np.uint64(int(seed) & MASK64)
