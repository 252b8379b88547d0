"""Stochastic-tree high/low estimators and the replication engine.

A realized tree has ``n`` exercise steps after the root and ``l`` independent
one-step continuations per node.  On it the high estimator is plain backward
induction, ``max(h, disc * mean(children))``, and the low estimator decides
exercise-or-hold for branch ``j`` using only the other ``l - 1`` branches.
Averaging both over independent trees brackets the Bermudan value.
"""

from __future__ import annotations

import enum
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from ._rng import seed_to_u64
from .errors import BudgetExceededError, NumericalError, ValidationError
from .model import MarketParams
from .payoffs import PiPayoff

BUDGET_ENV = "PIOPTIONS_NODE_BUDGET"
DEFAULT_NODE_BUDGET = 10**8


def node_budget() -> int:
    """Leaf budget per tree; ``PIOPTIONS_NODE_BUDGET`` overrides the default."""
    raw = os.environ.get(BUDGET_ENV)
    if raw is None:
        return DEFAULT_NODE_BUDGET
    try:
        value = int(raw)
    except ValueError:
        raise ValidationError(f"{BUDGET_ENV} must be an integer, got {raw!r}", field="budget")
    if value < 1:
        raise ValidationError(f"{BUDGET_ENV} must be positive", field="budget")
    return value


class DiscountMode(str, enum.Enum):
    CALENDAR = "calendar"
    UNIT_STEP = "unit_step"


@dataclass(frozen=True)
class TreeConfig:
    """Tree shape and replication schedule.

    ``calendar`` steps by ``dt = T/n`` and discounts ``exp(-r dt)`` per step.
    ``unit_step`` uses ``dt = 1`` for both, which reproduces hand-worked trees
    that discount a flat ``exp(-r)`` per level.
    """

    n: int = 3
    l: int = 50
    replications: int = 500
    master_seed: int = 0
    discount_mode: DiscountMode = DiscountMode.CALENDAR
    budget: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "discount_mode", DiscountMode(self.discount_mode))
        if self.n < 1:
            raise ValidationError("n must be at least 1", field="steps")
        if self.l < 2:
            raise ValidationError("l must be at least 2", field="branches")
        if self.replications < 1:
            raise ValidationError("replications must be at least 1", field="replications")
        cap = self.budget if self.budget is not None else node_budget()
        if self.l**self.n > cap:
            raise BudgetExceededError(
                f"tree with l={self.l}, n={self.n} has {self.l**self.n} leaves, over the budget of {cap}"
            )

    def step(self, params: MarketParams) -> Tuple[float, float]:
        """``(dt, per-step discount factor)``."""
        dt = params.maturity / self.n if self.discount_mode is DiscountMode.CALENDAR else 1.0
        return dt, math.exp(-params.r * dt)


@dataclass(frozen=True)
class NodeEstimates:
    theta: float
    phi: float


@dataclass
class EstimateReport:
    mean_low: float
    mean_high: float
    se_low: Optional[float]
    se_high: Optional[float]
    point: float
    ci_low: float
    ci_high: float
    replications_used: int
    wall_time: float
    z: float = 1.96
    sandwich_violations: int = 0
    theta_samples: np.ndarray = field(default=None, repr=False, compare=False)
    phi_samples: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def se_gap(self) -> Optional[float]:
        """Standard error of ``mean_high - mean_low`` from the paired samples."""
        if self.replications_used < 2:
            return None
        gap = self.theta_samples - self.phi_samples
        return float(np.std(gap, ddof=1) / math.sqrt(self.replications_used))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "low": self.mean_low,
            "high": self.mean_high,
            "point": self.point,
            "ci": [self.ci_low, self.ci_high],
            "se_low": self.se_low,
            "se_high": self.se_high,
            "replications": self.replications_used,
            "z": self.z,
            "sandwich_violations": self.sandwich_violations,
        }


# -- hand-specified trees ----------------------------------------------------


@dataclass(frozen=True)
class FixtureNode:
    h: float
    children: Tuple["FixtureNode", ...] = ()

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "FixtureNode":
        if not isinstance(data, dict) or "h" not in data:
            raise ValidationError("every node needs an 'h' value", field="tree")
        h = float(data["h"])
        if not (math.isfinite(h) and h >= 0):
            raise ValidationError(f"h must be finite and non-negative, got {data['h']!r}", field="tree")
        kids = data.get("children") or []
        return cls(h, tuple(cls.from_dict(k) for k in kids))

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"h": self.h}
        if self.children:
            out["children"] = [c.to_dict() for c in self.children]
        return out


@dataclass(frozen=True)
class FixtureTree:
    """A tree of exercise values with no market model attached.

    JSON form::

        {"discount": 0.951229, "root": {"h": 0.0909, "children": [{"h": 0.0}, ...]}}

    Leaves omit ``children`` (or give an empty list).  Every internal node must
    have the same number of children and every leaf must sit at the same depth.
    """

    root: FixtureNode
    discount: float

    def __post_init__(self):
        if not (0 < self.discount and math.isfinite(self.discount)):
            raise ValidationError("discount must be a positive factor", field="discount")
        self.shape()

    def shape(self) -> Tuple[int, int]:
        """``(depth n, branching l)``; raises on ragged trees."""
        widths = set()
        depths = set()
        stack = [(self.root, 0)]
        while stack:
            node, depth = stack.pop()
            if node.is_leaf:
                depths.add(depth)
            else:
                widths.add(len(node.children))
                stack.extend((c, depth + 1) for c in node.children)
        if len(depths) != 1:
            raise ValidationError(f"leaves at different depths {sorted(depths)}", field="tree")
        if len(widths) > 1:
            raise ValidationError(f"nodes have differing child counts {sorted(widths)}", field="tree")
        l = widths.pop() if widths else 0
        if l == 1:
            raise ValidationError("internal nodes need at least 2 children", field="tree")
        return depths.pop(), l

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "FixtureTree":
        if "discount" in data:
            disc = float(data["discount"])
        elif "rate" in data:
            disc = math.exp(-float(data["rate"]))
        else:
            raise ValidationError("fixture needs 'discount' (or a per-step 'rate')", field="discount")
        return cls(FixtureNode.from_dict(data["root"]), disc)

    def to_dict(self) -> Dict[str, Any]:
        return {"discount": self.discount, "root": self.root.to_dict()}


def theta_estimate(node: FixtureNode, discount: float) -> float:
    if node.is_leaf:
        return node.h
    kids = [theta_estimate(c, discount) for c in node.children]
    return max(node.h, discount * (sum(kids) / len(kids)))


def phi_estimate(node: FixtureNode, discount: float) -> float:
    if node.is_leaf:
        return node.h
    l = len(node.children)
    if l < 2:
        raise ValidationError("the low estimator needs at least 2 branches", field="tree")
    kids = [phi_estimate(c, discount) for c in node.children]
    return _low_from_children(node.h, kids, discount)


def _low_from_children(h: float, kids: Sequence[float], discount: float) -> float:
    # same grouping as _kernels.combine; see its docstring
    l = len(kids)
    total = sum(kids)
    n_ex = 0
    held = 0.0
    for phi_j in kids:
        if h >= discount * ((total - phi_j) / (l - 1)):
            n_ex += 1
        else:
            held += phi_j
    return (n_ex / l) * h + discount * (held / l)


def _walk(node: FixtureNode, discount: float, path: Tuple[int, ...], out: Dict):
    if node.is_leaf:
        out[path] = NodeEstimates(node.h, node.h)
        return out[path]
    kids = [_walk(c, discount, path + (j,), out) for j, c in enumerate(node.children)]
    theta = max(node.h, discount * (sum(k.theta for k in kids) / len(kids)))
    phi = _low_from_children(node.h, [k.phi for k in kids], discount)
    out[path] = NodeEstimates(theta, phi)
    return out[path]


def evaluate_fixture(tree: FixtureTree) -> Dict[Tuple[int, ...], NodeEstimates]:
    """Both estimators at every node, keyed by branch path (``()`` is the root)."""
    out: Dict[Tuple[int, ...], NodeEstimates] = {}
    _walk(tree.root, tree.discount, (), out)
    return out


# -- market trees ------------------------------------------------------------


def _kernel_args(params: MarketParams, payoff: PiPayoff, config: TreeConfig):
    dt, disc = config.step(params)
    return dict(
        s0=float(params.s0),
        m0=float(params.m0),
        drift=(params.r - 0.5 * params.sigma**2) * dt,
        vol=params.sigma * math.sqrt(dt),
        disc=disc,
        a=float(payoff.a),
        b=float(payoff.b),
        strike=float(payoff.strike),
        sign=payoff.kind.sign,
    )


def evaluate_tree(
    params: MarketParams, payoff: PiPayoff, config: TreeConfig, replication_index: int
) -> NodeEstimates:
    """Root estimates of replication ``replication_index``'s realized tree."""
    kw = _kernel_args(params, payoff, config)
    theta, phi, _ = _kernels.tree_replication(
        seed_to_u64(config.master_seed), replication_index, kw["s0"], kw["m0"], kw["drift"],
        kw["vol"], kw["disc"], kw["a"], kw["b"], kw["strike"], kw["sign"], config.n, config.l,
    )
    return NodeEstimates(theta, phi)


def realize_tree(
    params: MarketParams, payoff: PiPayoff, config: TreeConfig, replication_index: int
) -> FixtureTree:
    """Materialize a realized tree as exercise values (small trees only)."""
    kw = _kernel_args(params, payoff, config)
    _, _, h = _kernels.realize_levels(
        seed_to_u64(config.master_seed), replication_index, kw["s0"], kw["m0"], kw["drift"],
        kw["vol"], kw["a"], kw["b"], kw["strike"], kw["sign"], config.n, config.l,
    )
    n, l = config.n, config.l
    offsets = [0]
    for i in range(n):
        offsets.append(offsets[-1] + l**i)

    def build(level: int, index: int) -> FixtureNode:
        hv = float(h[offsets[level] + index])
        if level == n:
            return FixtureNode(hv)
        return FixtureNode(hv, tuple(build(level + 1, index * l + j) for j in range(l)))

    return FixtureTree(build(0, 0), kw["disc"])


def _blocks(total: int, parts: int) -> Iterator[Tuple[int, int]]:
    parts = max(1, min(parts, total))
    size, extra = divmod(total, parts)
    start = 0
    for k in range(parts):
        stop = start + size + (1 if k < extra else 0)
        yield start, stop
        start = stop


def run_replications(
    params: MarketParams, payoff: PiPayoff, config: TreeConfig, threads: int = 1
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-replication root ``theta``, ``phi`` and sandwich-violation counts.

    Replication ``k`` is a pure function of ``(master_seed, k)``; ``threads``
    only changes how the index range is split.
    """
    if threads < 1:
        raise ValidationError("threads must be at least 1", field="threads")
    kw = _kernel_args(params, payoff, config)
    seed = seed_to_u64(config.master_seed)
    R = config.replications
    theta = np.empty(R)
    phi = np.empty(R)
    viol = np.empty(R, dtype=np.int64)

    def work(bounds):
        lo, hi = bounds
        _kernels.tree_block(
            seed, lo, theta[lo:hi], phi[lo:hi], viol[lo:hi], kw["s0"], kw["m0"], kw["drift"],
            kw["vol"], kw["disc"], kw["a"], kw["b"], kw["strike"], kw["sign"], config.n, config.l,
        )

    blocks = list(_blocks(R, threads))
    if threads == 1:
        for b in blocks:
            work(b)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, blocks))
    return theta, phi, viol


def summarize(theta: np.ndarray, phi: np.ndarray, z: float = 1.96, wall_time: float = 0.0,
              violations: int = 0) -> EstimateReport:
    R = theta.shape[0]
    if R == 0:
        raise ValidationError("no replications to summarize", field="replications")
    bad = np.flatnonzero(~(np.isfinite(theta) & np.isfinite(phi)))
    if bad.size:
        raise NumericalError(f"replication {int(bad[0])} produced a non-finite estimate")
    mean_low = float(np.mean(phi))
    mean_high = float(np.mean(theta))
    if R > 1:
        se_low: Optional[float] = float(np.std(phi, ddof=1) / math.sqrt(R))
        se_high: Optional[float] = float(np.std(theta, ddof=1) / math.sqrt(R))
        ci_low, ci_high = mean_low - z * se_low, mean_high + z * se_high
    else:
        se_low = se_high = None
        ci_low, ci_high = mean_low, mean_high
    return EstimateReport(
        mean_low=mean_low,
        mean_high=mean_high,
        se_low=se_low,
        se_high=se_high,
        point=0.5 * (mean_low + mean_high),
        ci_low=ci_low,
        ci_high=ci_high,
        replications_used=R,
        wall_time=wall_time,
        z=z,
        sandwich_violations=violations,
        theta_samples=theta,
        phi_samples=phi,
    )


def price(
    params: MarketParams,
    payoff: PiPayoff,
    config: TreeConfig,
    threads: int = 1,
    z: float = 1.96,
) -> EstimateReport:
    """Low/high bounds, standard errors and a two-sided interval over ``R`` trees."""
    started = time.perf_counter()
    theta, phi, viol = run_replications(params, payoff, config, threads)
    return summarize(theta, phi, z=z, wall_time=time.perf_counter() - started,
                     violations=int(viol.sum()))


def count_sandwich_violations(params: MarketParams, payoff: PiPayoff, config: TreeConfig) -> int:
    """Nodes, over all replications, where the low estimator exceeds the high one."""
    _, _, viol = run_replications(params, payoff, config)
    return int(viol.sum())


def node_count(config: TreeConfig) -> int:
    return sum(config.l**i for i in range(config.n + 1))


__all__: List[str] = [
    "DiscountMode",
    "EstimateReport",
    "FixtureNode",
    "FixtureTree",
    "NodeEstimates",
    "TreeConfig",
    "count_sandwich_violations",
    "evaluate_fixture",
    "evaluate_tree",
    "phi_estimate",
    "price",
    "realize_tree",
    "run_replications",
    "summarize",
    "theta_estimate",
]
