"""One-dimensional multilevel kernel summation with nested Chebyshev bases.

Computes ``phi(y_i) = sum_j g(y_i, x_j) m_j`` for all targets in near-linear
time.  Sources and targets are organised in binary cluster trees.  Pairs of
well-separated clusters interact through the kernel values at the clusters'
interpolation points; everything else is summed directly.

Source coefficients of an internal cluster are assembled from its children by
re-interpolation (evaluating the parent's Lagrange basis at the children's
interpolation points), so raw points are only touched at the leaves.  The
target side mirrors this with a downward pass.

Operation counting
------------------
``op_count`` adds one per kernel evaluation (coupling blocks and near field)
and one per complex multiply-add in the transfer steps: leaf expansion,
child-to-parent, parent-to-child and leaf evaluation.  The multiply-adds that
apply a coupling matrix are not counted separately because each one consumes
exactly one counted kernel value.

Execution is single-threaded.  Sibling subtrees and individual blocks write to
disjoint accumulators, so a parallel schedule would only reorder
floating-point sums.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .chebyshev import ChebyshevRule, chebyshev_rule
from .errors import AuditError, ConfigurationError, DomainError
from .geometry import Interval

MAX_DEPTH = 48
KERNELS = {"inverse": _kernels.KERNEL_INVERSE, "log": _kernels.KERNEL_LOG,
           "helmholtz": _kernels.KERNEL_HELMHOLTZ}


# --------------------------------------------------------------------------
# kernels
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Kernel:
    """Translation-invariant kernel ``g(y, x)``: ``1/(y-x)``, ``log|y-x|`` or ``exp(i kappa |y-x|)/|y-x|``."""

    name: str = "inverse"
    kappa: float = 0.0

    def __post_init__(self):
        if self.name not in KERNELS:
            raise ConfigurationError(f"unknown kernel {self.name!r}; choose from {sorted(KERNELS)}")
        if self.name == "helmholtz" and not self.kappa > 0:
            raise ConfigurationError("the helmholtz kernel needs kappa > 0")

    @property
    def kernel_id(self) -> int:
        return KERNELS[self.name]

    def __call__(self, y, x):
        """Kernel values on the broadcast grid of ``y`` and ``x``; zero where ``y == x``."""
        d = np.asarray(y, dtype=np.float64) - np.asarray(x, dtype=np.float64)
        zero = d == 0.0
        d = np.where(zero, 1.0, d)
        if self.name == "inverse":
            g = (1.0 / d).astype(np.complex128)
        elif self.name == "log":
            g = np.log(np.abs(d)).astype(np.complex128)
        else:
            r = np.abs(d)
            g = np.exp(1j * self.kappa * r) / r
        return np.where(zero, 0.0, g)

    def direction(self, target_right: bool) -> float:
        """Plane-wave direction that removes the oscillation of a separated block."""
        if self.name != "helmholtz":
            return 0.0
        return self.kappa if target_right else -self.kappa

    @property
    def directions(self) -> tuple:
        return (self.kappa, -self.kappa) if self.name == "helmholtz" else (0.0,)


def direct_summation(points_src, masses, points_tgt, kernel: Kernel) -> np.ndarray:
    """``O(n m)`` reference sum; coincident source/target pairs contribute zero."""
    x = np.ascontiguousarray(points_src, dtype=np.float64)
    y = np.ascontiguousarray(points_tgt, dtype=np.float64)
    m = np.ascontiguousarray(masses, dtype=np.complex128)
    return _kernels.direct_sum(y, x, m, kernel.kernel_id, float(kernel.kappa))


# --------------------------------------------------------------------------
# cluster trees
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class OrderSchedule:
    """Constant order ``m`` or variable order ``alpha + beta (depth_max - depth)``."""

    kind: str
    m: int = 0
    alpha: int = 0
    beta: int = 0

    def __post_init__(self):
        if self.kind == "constant":
            if self.m < 0:
                raise ConfigurationError(f"order must be nonnegative, got {self.m}")
        elif self.kind == "variable":
            if self.alpha < 1 or self.beta < 1:
                raise ConfigurationError(f"need alpha, beta >= 1, got {self.alpha}, {self.beta}")
        else:
            raise ConfigurationError(f"unknown order schedule {self.kind!r}")

    @classmethod
    def constant(cls, m: int) -> "OrderSchedule":
        return cls("constant", m=int(m))

    @classmethod
    def variable(cls, alpha: int, beta: int) -> "OrderSchedule":
        return cls("variable", alpha=int(alpha), beta=int(beta))

    def order(self, depth: int, depth_max: int) -> int:
        if self.kind == "constant":
            return self.m
        return self.alpha + self.beta * (depth_max - depth)


@dataclass
class ClusterNode:
    index: int
    interval: Interval
    lo: int
    hi: int
    depth: int
    children: tuple = ()
    order: int = 0

    @property
    def size(self) -> int:
        return self.hi - self.lo

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @property
    def is_empty(self) -> bool:
        return self.hi == self.lo


@dataclass
class ClusterTree:
    """Binary dyadic cluster tree over sorted points; nodes are stored parents-first."""

    points: np.ndarray
    nodes: list
    leaf_capacity: int
    schedule: OrderSchedule
    _transfers: dict = field(default_factory=dict, repr=False)

    @property
    def root(self) -> ClusterNode:
        return self.nodes[0]

    @property
    def depth(self) -> int:
        return max(node.depth for node in self.nodes)

    def rule(self, node: ClusterNode) -> ChebyshevRule:
        return chebyshev_rule(node.order)

    def interpolation_points(self, node: ClusterNode) -> np.ndarray:
        return node.interval.phi(self.rule(node).points)

    def node_points(self, node: ClusterNode) -> np.ndarray:
        return self.points[node.lo:node.hi]

    def lagrange(self, node: ClusterNode, x) -> np.ndarray:
        """``L[k, nu] = l_{node, nu}(x_k)``."""
        return self.rule(node).lagrange(node.interval.phi_inv(np.asarray(x, dtype=np.float64)))

    def transfer(self, parent: ClusterNode, child: ClusterNode) -> np.ndarray:
        """``E[nu_c, nu] = l_{parent, nu}(xi_{child, nu_c})``."""
        key = (parent.index, child.index)
        if key not in self._transfers:
            self._transfers[key] = self.lagrange(parent, self.interpolation_points(child))
        return self._transfers[key]


def build_tree(points, leaf_capacity: int, schedule: OrderSchedule,
               root_interval: Optional[Interval] = None) -> ClusterTree:
    """Split intervals at their midpoints until every leaf holds at most ``leaf_capacity`` points.

    Parameters
    ----------
    points : array_like
        Sorted, finite coordinates.
    leaf_capacity : int
    schedule : OrderSchedule
        Orders are assigned after the build, once the maximal depth is known.
    root_interval : Interval, optional
        Defaults to the hull of the points (padded if they coincide).
    """
    pts = np.ascontiguousarray(points, dtype=np.float64)
    if pts.ndim != 1 or pts.size == 0:
        raise DomainError("build_tree needs a nonempty 1-D point array")
    if not np.all(np.isfinite(pts)):
        raise DomainError("points must be finite")
    if np.any(np.diff(pts) < 0):
        raise DomainError("points must be sorted ascending")
    if leaf_capacity < 1:
        raise ConfigurationError(f"leaf_capacity must be positive, got {leaf_capacity}")
    if root_interval is None:
        a, b = float(pts[0]), float(pts[-1])
        if a == b:
            a, b = a - 0.5, b + 0.5
        root_interval = Interval(a, b)
    elif pts[0] < root_interval.a or pts[-1] > root_interval.b:
        raise DomainError("points must lie inside the root interval")

    nodes = [ClusterNode(0, root_interval, 0, pts.size, 0)]
    k = 0
    while k < len(nodes):
        node = nodes[k]
        k += 1
        if node.size <= leaf_capacity or node.depth >= MAX_DEPTH:
            continue
        iv = node.interval
        mid = iv.midpoint
        split = node.lo + int(np.searchsorted(pts[node.lo:node.hi], mid, side="left"))
        left = ClusterNode(len(nodes), Interval(iv.a, mid), node.lo, split, node.depth + 1)
        right = ClusterNode(len(nodes) + 1, Interval(mid, iv.b), split, node.hi, node.depth + 1)
        nodes.extend([left, right])
        node.children = (left, right)
    depth_max = max(node.depth for node in nodes)
    for node in nodes:
        node.order = schedule.order(node.depth, depth_max)
    return ClusterTree(pts, nodes, int(leaf_capacity), schedule)


# --------------------------------------------------------------------------
# block partition
# --------------------------------------------------------------------------


def distance(s: Interval, t: Interval) -> float:
    return max(0.0, s.a - t.b, t.a - s.b)


@dataclass
class SummationPlan:
    source: ClusterTree
    target: ClusterTree
    far: list  # (target node, source node) pairs
    near: list
    eta: float


def admissible(t: Interval, s: Interval, eta: float) -> bool:
    d = distance(t, s)
    return d > 0.0 and d >= eta * max(t.length, s.length)


def build_plan(source: ClusterTree, target: ClusterTree, eta: float = 1.0) -> SummationPlan:
    """Partition all (target, source) pairs into admissible and near-field blocks."""
    if not eta > 0:
        raise ConfigurationError(f"eta must be positive, got {eta}")
    far, near = [], []
    stack = [(target.root, source.root)]
    while stack:
        t, s = stack.pop()
        if t.is_empty or s.is_empty:
            continue
        if admissible(t.interval, s.interval, eta):
            far.append((t, s))
        elif t.is_leaf and s.is_leaf:
            near.append((t, s))
        elif s.is_leaf or (not t.is_leaf and t.interval.length > s.interval.length):
            stack.extend((tc, s) for tc in reversed(t.children))
        elif t.is_leaf or s.interval.length > t.interval.length:
            stack.extend((t, sc) for sc in reversed(s.children))
        else:
            stack.extend((tc, sc) for tc in reversed(t.children) for sc in reversed(s.children))
    return SummationPlan(source, target, far, near, float(eta))


def coverage_audit(plan: SummationPlan) -> None:
    """Check that every (target, source) index pair lies in exactly one block; raises AuditError."""
    nt, ns = plan.target.points.size, plan.source.points.size
    if nt * ns > 4_000_000:
        raise ConfigurationError("coverage audit is meant for small instances")
    count = np.zeros((nt, ns), dtype=np.int32)
    for t, s in plan.far + plan.near:
        count[t.lo:t.hi, s.lo:s.hi] += 1
    if not np.all(count == 1):
        bad = int(np.sum(count != 1))
        raise AuditError(f"{bad} index pairs are covered {sorted(set(count.ravel()) - {1})} times")
    for t, s in plan.far:
        if not admissible(t.interval, s.interval, plan.eta):
            raise AuditError(f"far block {t.interval} x {s.interval} is not admissible")


# --------------------------------------------------------------------------
# passes
# --------------------------------------------------------------------------


def upward_pass(tree: ClusterTree, masses, directions=(0.0,), ops: Optional[Counter] = None) -> dict:
    """Source coefficients ``x_hat[c][node] = sum_j m_j exp(-i c x_j) l_{node, nu}(x_j)``.

    Leaves sum over their points; internal nodes only combine their children
    through transfer matrices.  Empty nodes get ``None``.
    """
    ops = Counter() if ops is None else ops
    m = np.asarray(masses, dtype=np.complex128)
    if m.shape != tree.points.shape:
        raise DomainError(f"expected {tree.points.size} masses, got {m.shape}")
    out = {}
    for c in directions:
        coeffs = [None] * len(tree.nodes)
        for node in reversed(tree.nodes):
            if node.is_empty:
                continue
            if node.is_leaf:
                x = tree.node_points(node)
                w = m[node.lo:node.hi]
                if c != 0.0:
                    w = w * np.exp(-1j * c * x)
                coeffs[node.index] = tree.lagrange(node, x).T @ w
                ops["p2m"] += node.size * (node.order + 1)
            else:
                acc = np.zeros(node.order + 1, dtype=np.complex128)
                for child in node.children:
                    if coeffs[child.index] is None:
                        continue
                    e = tree.transfer(node, child)
                    acc += e.T @ coeffs[child.index]
                    ops["m2m"] += e.size
                coeffs[node.index] = acc
        out[c] = coeffs
    return out


def direct_coefficients(tree: ClusterTree, node: ClusterNode, masses, c: float = 0.0) -> np.ndarray:
    """``sum_j m_j exp(-i c x_j) l_{node, nu}(x_j)`` straight from the node's points."""
    x = tree.node_points(node)
    w = np.asarray(masses, dtype=np.complex128)[node.lo:node.hi]
    if c != 0.0:
        w = w * np.exp(-1j * c * x)
    return tree.lagrange(node, x).T @ w


def evaluate_farfield(plan: SummationPlan, coefficients: dict, kernel: Kernel,
                      ops: Optional[Counter] = None) -> np.ndarray:
    """Far-field potentials at the target points (target-tree order).

    Each admissible block contributes the demodulated kernel matrix at the two
    clusters' interpolation points applied to the source coefficients; the
    resulting target expansions are pushed down to the leaves and evaluated.
    """
    ops = Counter() if ops is None else ops
    target = plan.target
    local = {c: [None] * len(target.nodes) for c in coefficients}
    for t, s in plan.far:
        c = kernel.direction(t.interval.a >= s.interval.b)
        xs = coefficients[c][s.index]
        if xs is None:
            continue
        yi = plan.target.interpolation_points(t)
        xi = plan.source.interpolation_points(s)
        d = yi[:, None] - xi[None, :]
        if np.any(d == 0.0):
            raise AuditError(f"kernel singularity inside admissible block {t.interval} x {s.interval}")
        g = kernel(yi[:, None], xi[None, :])
        if c != 0.0:
            g = g * np.exp(-1j * c * d)
        if not np.all(np.isfinite(g)):
            raise AuditError(f"non-finite kernel values in admissible block {t.interval} x {s.interval}")
        ops["m2l"] += g.size
        acc = local[c][t.index]
        local[c][t.index] = g @ xs if acc is None else acc + g @ xs

    phi = np.zeros(target.points.size, dtype=np.complex128)
    for c, expansions in local.items():
        for node in target.nodes:
            y = expansions[node.index]
            if y is None:
                continue
            if node.is_leaf:
                pts = target.node_points(node)
                vals = target.lagrange(node, pts) @ y
                if c != 0.0:
                    vals = vals * np.exp(1j * c * pts)
                phi[node.lo:node.hi] += vals
                ops["l2p"] += node.size * (node.order + 1)
                continue
            for child in node.children:
                if child.is_empty:
                    continue
                e = target.transfer(node, child)
                prev = expansions[child.index]
                expansions[child.index] = e @ y if prev is None else prev + e @ y
                ops["l2l"] += e.size
    return phi


def evaluate_nearfield(plan: SummationPlan, masses, kernel: Kernel, ops: Optional[Counter] = None) -> np.ndarray:
    ops = Counter() if ops is None else ops
    m = np.asarray(masses, dtype=np.complex128)
    phi = np.zeros(plan.target.points.size, dtype=np.complex128)
    for t, s in plan.near:
        y = plan.target.node_points(t)
        x = plan.source.node_points(s)
        g = kernel(y[:, None], x[None, :])
        phi[t.lo:t.hi] += g @ m[s.lo:s.hi]
        ops["near"] += g.size
    return phi


# --------------------------------------------------------------------------
# driver
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SummationConfig:
    eta: float = 1.0
    leaf_capacity: int = 16
    schedule: OrderSchedule = OrderSchedule.constant(8)

    def __post_init__(self):
        if not self.eta > 0:
            raise ConfigurationError(f"eta must be positive, got {self.eta}")
        if self.leaf_capacity < 1:
            raise ConfigurationError(f"leaf_capacity must be positive, got {self.leaf_capacity}")


def summation(points_src, masses, points_tgt, kernel: Kernel = Kernel(),
              config: SummationConfig = SummationConfig(), stats: Optional[Counter] = None):
    """Approximate ``phi(y_i) = sum_j g(y_i, x_j) m_j`` with nested interpolation.

    Returns
    -------
    (potentials, op_count) : tuple
        Potentials in the caller's target order and the total operation count.
        Pass a ``Counter`` as ``stats`` to receive the per-phase breakdown.
    """
    x = np.asarray(points_src, dtype=np.float64)
    y = np.asarray(points_tgt, dtype=np.float64)
    m = np.asarray(masses, dtype=np.complex128)
    if x.shape != m.shape:
        raise DomainError("points_src and masses must have the same shape")
    ps = np.argsort(x, kind="stable")
    pt = np.argsort(y, kind="stable")
    lo = float(min(x.min(), y.min()))
    hi = float(max(x.max(), y.max()))
    root = Interval(lo, hi) if hi > lo else Interval(lo - 0.5, hi + 0.5)
    src = build_tree(x[ps], config.leaf_capacity, config.schedule, root)
    tgt = build_tree(y[pt], config.leaf_capacity, config.schedule, root)
    plan = build_plan(src, tgt, config.eta)
    ops = Counter() if stats is None else stats
    ms = m[ps]
    phi_sorted = evaluate_nearfield(plan, ms, kernel, ops)
    if plan.far:
        # without admissible blocks the expansions would be computed for nothing
        coeffs = upward_pass(src, ms, kernel.directions, ops)
        phi_sorted = phi_sorted + evaluate_farfield(plan, coeffs, kernel, ops)
    phi = np.empty_like(phi_sorted)
    phi[pt] = phi_sorted
    return phi, int(sum(ops.values()))


def relative_error(approx, exact) -> float:
    """``max |approx - exact| / max |exact|``."""
    exact = np.asarray(exact)
    scale = float(np.max(np.abs(exact)))
    err = float(np.max(np.abs(np.asarray(approx) - exact)))
    return err / scale if scale > 0 else err


def interleaved_points(n: int):
    """Sources at ``(2k + 1/2) / (2n)``, targets at ``(2k + 3/2) / (2n)``, ``k < n``."""
    k = np.arange(n)
    return (2 * k + 0.5) / (2 * n), (2 * k + 1.5) / (2 * n)
