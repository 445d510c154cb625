"""Pareto-front maintenance and quality indicators (minimization).

Hypervolume is computed exactly by dimension sweep: a vectorized
staircase sweep at m=2, recursive slicing along the last objective
above that. Exercised up to the campaign's four objectives; fronts stay
small enough (hundreds of points) that exactness is affordable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def dominates(a, b) -> bool:
    """True when ``a`` is no worse everywhere and better somewhere."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"objective vectors must share a length, got {a.shape} vs {b.shape}")
    return bool(np.all(a <= b) and np.any(a < b))


def nondominated_filter(points) -> list[int]:
    """Indices of points not dominated by any other point.

    Duplicates of a nondominated point are all kept (equal vectors do
    not dominate each other).
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2:
        raise ValueError("points must be a 2-D array-like (n points x m objectives)")
    n = len(pts)
    if n == 0:
        return []
    le = np.all(pts[:, None, :] <= pts[None, :, :], axis=2)
    lt = np.any(pts[:, None, :] < pts[None, :, :], axis=2)
    dominated = np.any(le & lt, axis=0)
    return [int(i) for i in np.nonzero(~dominated)[0]]


def _hv2(pts: np.ndarray, ref: np.ndarray) -> float:
    """Exact 2-D hypervolume staircase sweep; dominated rows add 0."""
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    p = pts[order]
    run_min = np.minimum.accumulate(p[:, 1])
    prev = np.concatenate(([ref[1]], run_min[:-1]))
    contrib = (ref[0] - p[:, 0]) * np.maximum(prev - p[:, 1], 0.0)
    return float(np.sum(contrib))


def _hv_rec(pts: np.ndarray, ref: np.ndarray) -> float:
    m = pts.shape[1]
    if len(pts) == 0:
        return 0.0
    if m == 1:
        return float(ref[0] - np.min(pts[:, 0]))
    if m == 2:
        return _hv2(pts, ref)
    # Slice along the last objective: each slab's cross-section is the
    # (m-1)-D hypervolume of every point already "active" at that level.
    order = np.argsort(pts[:, -1], kind="stable")
    p = pts[order]
    zs = np.unique(p[:, -1])
    total = 0.0
    for i, z in enumerate(zs):
        z_next = zs[i + 1] if i + 1 < len(zs) else ref[-1]
        if z_next <= z:
            continue
        active = p[p[:, -1] <= z][:, :-1]
        total += _hv_rec(active, ref[:-1]) * float(z_next - z)
    return total


def hypervolume(front, reference) -> float:
    """Exact hypervolume of ``front`` against ``reference`` (minimized
    objectives; the reference must be weakly dominated by every point).

    Raises naming the offending point if any coordinate lies beyond the
    reference.
    """
    pts = np.asarray(front, dtype=np.float64)
    ref = np.asarray(reference, dtype=np.float64)
    if pts.ndim != 2 or ref.ndim != 1 or pts.shape[1] != ref.shape[0]:
        raise ValueError("front must be (n, m) and reference length m")
    if not np.all(np.isfinite(pts)) or not np.all(np.isfinite(ref)):
        raise ValueError("hypervolume inputs must be finite")
    beyond = np.any(pts > ref, axis=1)
    if np.any(beyond):
        bad = pts[np.argmax(beyond)]
        raise ValueError(f"point {bad.tolist()} lies beyond the reference {ref.tolist()}")
    return _hv_rec(pts, ref)


def spacing(front) -> float:
    """Schott spacing on min-max normalized objectives.

    Standard deviation of nearest-neighbor L1 distances; 0 means an
    equispaced front. Dimensions with no spread are dropped (they carry
    no distance information). Needs at least two points.
    """
    pts = np.asarray(front, dtype=np.float64)
    if pts.ndim != 2 or len(pts) < 2:
        raise ValueError("spacing needs a 2-D front with at least two points")
    lo = pts.min(axis=0)
    span = pts.max(axis=0) - lo
    keep = span > 0
    if not np.any(keep):
        return 0.0
    norm = (pts[:, keep] - lo[keep]) / span[keep]
    dist = np.abs(norm[:, None, :] - norm[None, :, :]).sum(axis=2)
    np.fill_diagonal(dist, np.inf)
    nearest = dist.min(axis=1)
    if len(pts) == 2:
        return 0.0
    return float(np.sqrt(np.sum((nearest - nearest.mean()) ** 2) / (len(pts) - 1)))


def reference_point(objectives) -> np.ndarray:
    """Componentwise worst observed value, inflated by 1% so boundary
    points keep nonzero volume."""
    pts = np.asarray(objectives, dtype=np.float64)
    if pts.ndim != 2 or len(pts) == 0:
        raise ValueError("reference_point needs a nonempty (n, m) array")
    worst = pts.max(axis=0)
    return worst + 0.01 * np.abs(worst) + 1e-12 * (worst == 0)


@dataclass
class ParetoArchive:
    """Nondominated objective vectors with their trial indices."""

    indices: list[int]
    objectives: np.ndarray  # (k, m), row order matches indices
    reference: np.ndarray  # (m,)
    objective_names: tuple[str, ...] = ()

    @classmethod
    def from_objectives(cls, trial_indices, objectives, objective_names=()) -> "ParetoArchive":
        pts = np.asarray(objectives, dtype=np.float64)
        if len(pts) == 0:
            raise ValueError("archive needs at least one completed trial")
        ref = reference_point(pts)
        keep = nondominated_filter(pts)
        return cls(
            indices=[int(trial_indices[i]) for i in keep],
            objectives=pts[keep],
            reference=ref,
            objective_names=tuple(objective_names),
        )

    def hypervolume(self) -> float:
        return hypervolume(self.objectives, self.reference)


def hypervolume_curve(objectives, reference) -> np.ndarray:
    """Hypervolume of each prefix of the objective sequence against a
    fixed reference; nondecreasing by construction.

    Recomputes only when a prefix gains a nondominated point; dominated
    arrivals reuse the previous value.
    """
    pts = np.asarray(objectives, dtype=np.float64)
    ref = np.asarray(reference, dtype=np.float64)
    out = np.empty(len(pts))
    front: list[np.ndarray] = []
    current = 0.0
    for i, p in enumerate(pts):
        if not any(np.all(q <= p) for q in front):
            front = [q for q in front if not (np.all(p <= q) and np.any(p < q))]
            front.append(p)
            clipped = np.minimum(np.asarray(front), ref)
            current = _hv_rec(clipped, ref)
        out[i] = current
    return out


def eta(baseline_mse: float, val_mse: float) -> float:
    """Accuracy gain over the constant-predictor baseline."""
    if val_mse <= 0:
        raise ValueError("val_mse must be positive")
    return baseline_mse / val_mse


def f_max_hz(delay_ps: float) -> float:
    """Highest clock sustainable by the critical path."""
    if delay_ps <= 0:
        raise ValueError("delay_ps must be positive")
    return 1.0 / (delay_ps * 1e-12)


def area_utilization(area_um2: float, limit_um2: float) -> float:
    if limit_um2 <= 0:
        raise ValueError("limit_um2 must be positive")
    return area_um2 / limit_um2


def record_feasible(record, limits) -> bool:
    """Constraint check on a logged trial (inclusive bounds, mirroring
    the hardware-report path). ``limits.val_mse`` must be resolved."""
    if limits.val_mse is None:
        raise ValueError("limits.val_mse is unset; derive it from the dataset first")
    if record.status != "completed":
        return False
    m = record.metrics
    return (
        m["area_um2"] <= limits.area_um2
        and m["power_density_w_per_cm2"] <= limits.power_density_w_per_cm2
        and m["delay_ps"] <= limits.delay_ps
        and m["val_mse"] <= limits.val_mse
    )


def constrained_front(trials, limits) -> ParetoArchive:
    """Feasible subset of a trial list, reduced to its nondominated set.

    ``trials`` are campaign records carrying ``status``, ``metrics``,
    ``objectives`` and ``trial_index``. The archive is empty when no
    trial passes the limits.
    """
    feasible = [t for t in trials if record_feasible(t, limits)]
    if not feasible:
        return ParetoArchive(indices=[], objectives=np.empty((0, 0)), reference=np.empty(0))
    return ParetoArchive.from_objectives(
        [t.trial_index for t in feasible],
        [t.objectives for t in feasible],
    )
