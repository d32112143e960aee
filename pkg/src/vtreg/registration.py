"""Weighted point-cloud registration.

The solver aligns a weighted sensor cloud (source) to a model-sampled cloud
(target): weighted Kabsch for a single correspondence set, iterated closest
point around it, and a deterministic 24-orientation multi-start sweep to
escape the local minima that a single initialization falls into.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

import numpy as np

from .cloud import LabeledPointCloud, Modality
from .errors import (
    AllCorrespondencesRejected,
    AllStartsFailed,
    DegenerateConfiguration,
    LengthMismatch,
    ZeroTotalWeight,
)
from .geometry import RigidTransform, compose
from .spatial import SpatialIndex

# Relative singular-value floor below which the cross-covariance is treated
# as rank-deficient (no unique rotation).
_RANK_TOL = 1e-12

# Denominator guard for the relative RMSE convergence test.
_RMSE_EPS = 1e-12

# Post-selection nudge size and retry budget. Half a coarse grid cell, so a
# start that converged one blind band away from the optimum is reachable.
_POLISH_ANGLE_DEG = 15.0
_POLISH_ROUNDS = 3

# Coarse-sweep controls: the start grid runs on a thinned cloud capped at
# this many cells, each probe capped at this many iterations after a
# translation-only settle, and only the best few distinct basins survive
# into the full-resolution stage.
_COARSE_BUDGET = 400
_COARSE_MAX_ITERATIONS = 40
_SLIDE_ROUNDS = 8
_ALIAS_SEEDS = 2
_BEAM_WIDTH = 6
_REFINE_TOP = 3


@dataclass(frozen=True)
class IcpParams:
    """Iteration controls for the weighted ICP loop."""

    max_iterations: int = 100
    rel_rmse_tolerance: float = 1e-6
    max_correspondence_distance: float = np.inf

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.rel_rmse_tolerance < 0.0:
            raise ValueError("rel_rmse_tolerance must be nonnegative")
        if self.max_correspondence_distance <= 0.0:
            raise ValueError("max_correspondence_distance must be positive")

    @property
    def gating(self) -> bool:
        return np.isfinite(self.max_correspondence_distance)


@dataclass(frozen=True)
class RegistrationResult:
    """Outcome of one registration run.

    final_rmse is the converged weighted RMSE over the correspondences that
    fed the last update (the gated set when gating is on).
    correspondence_error is the weighted RMSE over all source points at the
    final transform regardless of gating, so results from different starts
    are comparable; with gating off the two are equal. rmse_history holds
    the per-iteration weighted RMSE values in order.
    """

    transform: RigidTransform
    final_rmse: float
    iterations: int
    correspondence_error: float
    init_index: int = 0
    rmse_history: tuple = ()


def weighted_kabsch(source_points, target_points, weights) -> RigidTransform:
    """Best rigid transform mapping weighted source points onto paired targets.

    Minimizes sum of w_i * ||R a_i + t - b_i||^2. Weights are normalized to
    sum to one first; the optimum is scale-invariant in the weights. The
    rotation comes from the SVD of the weighted cross-covariance with the
    usual reflection guard (flip the singular direction of the smallest
    singular value when the determinant would be -1).
    """
    a = np.asarray(source_points, dtype=np.float64)
    b = np.asarray(target_points, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if a.ndim != 2 or a.shape[1] != 3 or b.ndim != 2 or b.shape[1] != 3:
        raise ValueError("point arrays must have shape (N, 3)")
    if len(a) != len(b) or len(a) != len(w):
        raise LengthMismatch(
            f"paired inputs differ in length: {len(a)} source, {len(b)} target, {len(w)} weights"
        )
    if len(a) < 3:
        raise DegenerateConfiguration("need at least 3 point pairs")
    total = w.sum()
    if total <= 0.0:
        raise ZeroTotalWeight("weights sum to zero")
    w = w / total

    centroid_a = w @ a
    centroid_b = w @ b
    da = a - centroid_a
    db = b - centroid_b
    h = (w[:, None] * da).T @ db
    u, s, vt = np.linalg.svd(h)
    if s[0] <= 0.0 or s[1] <= _RANK_TOL * s[0]:
        raise DegenerateConfiguration("weighted point configuration is rank-deficient")
    d = np.sign(np.linalg.det(vt.T @ u.T))
    if d < 0.0:
        vt = vt.copy()
        vt[-1] = -vt[-1]
    rotation = vt.T @ u.T
    translation = centroid_b - rotation @ centroid_a
    return RigidTransform(rotation, translation)


def _weighted_rmse(distances, weights) -> float:
    wsum = weights.sum()
    if wsum <= 0.0:
        raise ZeroTotalWeight("correspondence weights sum to zero")
    return float(np.sqrt((weights * distances * distances).sum() / wsum))


def _run_icp(
    source_points: np.ndarray,
    weights: np.ndarray,
    target_index: SpatialIndex,
    init: RigidTransform,
    params: IcpParams,
) -> RegistrationResult:
    # One iteration = match, measure, maybe update. The loop breaks at the
    # measuring step (on convergence or on the iteration budget), so the
    # returned transform is always the one final_rmse was measured at.
    current = init
    pts = init.apply(source_points)
    history: list[float] = []
    for it in range(params.max_iterations):
        dist, idx = target_index.query(pts)
        if params.gating:
            mask = dist <= params.max_correspondence_distance
            if not mask.any():
                raise AllCorrespondencesRejected(
                    "no correspondence within the gating distance"
                )
        else:
            mask = slice(None)
        rmse = _weighted_rmse(dist[mask], weights[mask])
        history.append(rmse)
        if rmse <= _RMSE_EPS:
            break
        if len(history) > 1:
            prev = history[-2]
            if abs(prev - rmse) / max(prev, _RMSE_EPS) < params.rel_rmse_tolerance:
                break
        if it == params.max_iterations - 1:
            break
        delta = weighted_kabsch(pts[mask], target_index.points[idx[mask]], weights[mask])
        current = compose(delta, current)
        pts = delta.apply(pts)

    if params.gating:
        final_dist, _ = target_index.query(pts)
        correspondence_error = _weighted_rmse(final_dist, weights)
    else:
        correspondence_error = history[-1]
    return RegistrationResult(
        transform=current,
        final_rmse=history[-1],
        iterations=len(history),
        correspondence_error=correspondence_error,
        rmse_history=tuple(history),
    )


def icp_weighted(
    source: LabeledPointCloud,
    target: LabeledPointCloud,
    init: RigidTransform | None = None,
    params: IcpParams | None = None,
) -> RegistrationResult:
    """Weighted iterative closest point from one initialization.

    Each iteration matches every source point to its nearest target point,
    measures the weighted RMSE over those matches, and stops when the RMSE
    changed by less than the relative tolerance; otherwise it fits a
    weighted Kabsch update on the (optionally distance-gated) matches and
    applies it. The iteration count reported is the number of matching
    rounds, at most max_iterations, and the final transform is always the
    one the final RMSE was measured at.
    """
    params = params or IcpParams()
    init = init or RigidTransform.identity()
    weights = source.weights
    if int((weights > 0.0).sum()) < 3:
        raise DegenerateConfiguration("source needs at least 3 positively weighted points")
    target_index = SpatialIndex(target.points)
    return _run_icp(source.points, weights, target_index, init, params)


def rotation_grid() -> tuple[np.ndarray, ...]:
    """The 24 proper rotations of the axis-aligned cube, identity first.

    Signed permutation matrices with determinant +1, ordered so the listing
    is deterministic and the identity gets index 0 (ties in downstream
    selection prefer the lowest index).
    """
    mats = []
    for perm in itertools.permutations(range(3)):
        for signs in itertools.product((1.0, -1.0), repeat=3):
            m = np.zeros((3, 3))
            for row, col in enumerate(perm):
                m[row, col] = signs[row]
            if np.linalg.det(m) > 0.0:
                mats.append(m)
    mats.sort(key=lambda m: tuple(-v for v in m.reshape(-1)))
    return tuple(mats)


def _decimate(points, weights, budget):
    """Thin a cloud to at most `budget` voxel cells, conserving weight.

    Cells collapse to their weighted mean position carrying the summed
    weight, so the weighted centroid and the Kabsch objective see the same
    mass in the same places at lower resolution. Zero-weight points cannot
    influence the objective and are dropped outright, which also keeps the
    grid itself independent of them.
    """
    keep = weights > 0.0
    pts = points[keep]
    w = weights[keep]
    if len(pts) <= budget:
        return pts, w
    lo = pts.min(axis=0)
    span = float((pts.max(axis=0) - lo).max())
    if span <= 0.0:
        return pts, w
    # Walk the cell edge down a geometric ladder and keep the finest grid
    # that still fits the budget: too coarse a grid erases the very basin
    # structure the sweep is trying to rank.
    edge = span / 4.0
    chosen = None
    for _ in range(24):
        cell = np.floor((pts - lo) / edge).astype(np.int64)
        key = (cell[:, 0] << 42) + (cell[:, 1] << 21) + cell[:, 2]
        uniq, inverse = np.unique(key, return_inverse=True)
        if chosen is not None and len(uniq) > budget:
            break
        chosen = (uniq, inverse)
        if len(uniq) >= min(budget, len(pts)):
            break
        edge /= 2.0
    uniq, inverse = chosen
    wsum = np.zeros(len(uniq))
    np.add.at(wsum, inverse, w)
    acc = np.zeros((len(uniq), 3))
    np.add.at(acc, inverse, w[:, None] * pts)
    return acc / wsum[:, None], wsum


def _same_basin(rot_a, t_a, rot_b, t_b) -> bool:
    # Loose equivalence used only to avoid refining the same minimum twice.
    cos = (np.trace(rot_a.T @ rot_b) - 1.0) / 2.0
    if cos < 0.9962:  # about 5 degrees
        return False
    return bool(np.linalg.norm(t_a - t_b) < 2.0)


def _slide(points, weights, target_index, init: RigidTransform) -> RigidTransform:
    """Translation-only settle: drop the rotated cloud onto the surface.

    A start whose anchor buries the cloud inside the body hands the first
    joint update garbage matches that spin the rotation away. Letting the
    translation alone converge first keeps the rotation hypothesis intact
    while the cloud finds the surface.
    """
    normalized = weights / weights.sum()
    translation = np.array(init.translation, dtype=np.float64)
    pts = init.apply(points)
    for _ in range(_SLIDE_ROUNDS):
        _, idx = target_index.query(pts)
        shift = normalized @ (target_index.points[idx] - pts)
        if np.linalg.norm(shift) < 1e-9:
            break
        translation = translation + shift
        pts = pts + shift
    return RigidTransform(init.rotation, translation)


def _climb(
    points,
    weights,
    target_index,
    start: RegistrationResult,
    pivot,
    params: IcpParams,
) -> RegistrationResult:
    """Restart ICP from small rotations of a result, keeping strict wins.

    Coarse grids leave a blind band between cells; a run that stalled one
    basin short of the optimum gets pulled in by a nudge about the pivot's
    image, while an already-converged run is left untouched.
    """
    best = start
    for _ in range(_POLISH_ROUNDS):
        improved = False
        image = best.transform.apply(pivot)
        for axis in np.eye(3):
            for angle in (_POLISH_ANGLE_DEG, -_POLISH_ANGLE_DEG):
                nudge = RigidTransform.from_axis_angle(axis, angle)
                rotation = nudge.rotation @ best.transform.rotation
                init = RigidTransform(rotation, image - rotation @ pivot)
                try:
                    result = _run_icp(points, weights, target_index, init, params)
                except (DegenerateConfiguration, AllCorrespondencesRejected, ZeroTotalWeight):
                    continue
                if result.correspondence_error < best.correspondence_error:
                    best = replace(result, init_index=best.init_index)
                    improved = True
        if not improved:
            break
    return best


def _best_distinct(pool, limit):
    # Pool entries are (error, rotation index, insertion order, result);
    # the sort key makes ties deterministic and the basin test keeps the
    # survivors diverse instead of five copies of one minimum.
    survivors = []
    for entry in sorted(pool, key=lambda c: c[:3]):
        transform = entry[3].transform
        if any(
            _same_basin(transform.rotation, transform.translation,
                        s[3].transform.rotation, s[3].transform.translation)
            for s in survivors
        ):
            continue
        survivors.append(entry)
        if len(survivors) == limit:
            break
    return survivors


def multi_start(
    source: LabeledPointCloud,
    target: LabeledPointCloud,
    params: IcpParams | None = None,
) -> RegistrationResult:
    """Run ICP from a grid of coarse starts and keep the best result.

    Each start applies one of the 24 cube rotations to the source and
    translates a source anchor onto the target centroid. Up to three
    anchors are tried per rotation when they differ: the weighted centroid,
    which tracks the heavily weighted points, the plain centroid of the
    positively weighted points, which tracks the cloud as a whole, and the
    tactile midpoint, which for an antipodal grasp sits near the body's
    core even when vision coverage is a sliver. Neither is reliably the
    best guess, so each distinct one gets probed.

    Every start first settles translation-only (rotation frozen) so a
    buried cloud finds the surface before the joint updates begin, then
    runs ICP on a weight-conserving thinned copy of the cloud. The probes
    are joined by a symmetry-escape round: mostly-symmetric bodies hide
    deep wrong minima at 90, 120, and 180 degree re-orientations, so every
    cube-group re-orientation of the best basin found is probed too, which
    group closure makes exhaustive over those aliases. The best few
    distinct basins then each get a nudge hill-climb (coarse grids leave a
    blind band between cells that a stalled run needs a push to cross),
    the climbed survivors are re-run at full resolution, and the winner by
    full-resolution correspondence error takes a final climb. Exact ties
    go to the lowest rotation index.
    """
    params = params or IcpParams()
    weights = source.weights
    positive = weights > 0.0
    if int(positive.sum()) < 3:
        raise DegenerateConfiguration("source needs at least 3 positively weighted points")
    target_index = SpatialIndex(target.points)
    weighted_centroid = (weights[positive] / weights[positive].sum()) @ source.points[positive]
    anchors = [weighted_centroid]

    def add_anchor(candidate):
        if all(not np.allclose(candidate, a, rtol=0.0, atol=1e-9) for a in anchors):
            anchors.append(candidate)

    add_anchor(source.points[positive].mean(axis=0))
    touched = positive & (source.labels == Modality.TACTILE)
    if touched.any():
        add_anchor(source.points[touched].mean(axis=0))
    target_centroid = target.points.mean(axis=0)

    coarse_points, coarse_weights = _decimate(source.points, weights, _COARSE_BUDGET)
    coarse_params = replace(
        params, max_iterations=min(params.max_iterations, _COARSE_MAX_ITERATIONS)
    )

    pool = []
    failures: list[str] = []

    def probe_from(rotation, anchor, index):
        init = RigidTransform(rotation, target_centroid - rotation @ anchor)
        try:
            init = _slide(coarse_points, coarse_weights, target_index, init)
            probe = _run_icp(coarse_points, coarse_weights, target_index, init, coarse_params)
        except (DegenerateConfiguration, AllCorrespondencesRejected, ZeroTotalWeight) as exc:
            failures.append(f"start {index}: {exc}")
            return
        pool.append((probe.correspondence_error, index, len(pool), probe))

    for index, rotation in enumerate(rotation_grid()):
        for anchor in anchors:
            probe_from(rotation, anchor, index)
    if not pool:
        raise AllStartsFailed("; ".join(failures))

    for lead in _best_distinct(pool, _ALIAS_SEEDS):
        for turn in rotation_grid()[1:]:
            probe_from(turn @ lead[3].transform.rotation, weighted_centroid, lead[1])

    beam = _best_distinct(pool, _BEAM_WIDTH)
    climbed = [
        (entry[1], entry[2],
         _climb(coarse_points, coarse_weights, target_index, entry[3], weighted_centroid,
                coarse_params))
        for entry in beam
    ]
    climbed.sort(key=lambda c: (c[2].correspondence_error, c[0], c[1]))

    best: RegistrationResult | None = None
    for index, _, candidate in climbed[:_REFINE_TOP]:
        try:
            result = _run_icp(source.points, weights, target_index, candidate.transform, params)
        except (DegenerateConfiguration, AllCorrespondencesRejected, ZeroTotalWeight) as exc:
            failures.append(f"refine {index}: {exc}")
            continue
        result = replace(result, init_index=index)
        if best is None or result.correspondence_error < best.correspondence_error:
            best = result
    if best is None:
        raise AllStartsFailed("; ".join(failures))
    return _climb(source.points, weights, target_index, best, weighted_centroid, params)
