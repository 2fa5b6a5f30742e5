"""Fixed-point search along Cesaro means, with honest failure analysis.

The positive path mirrors the classical contraction argument.  Each outer
iteration records the Cesaro means of the current point's orbit, measures
the asymptotic radius r of the point against the best recorded approximate
fixed-point sequence, extracts an in-measure limit from a trailing cluster
of means, and recenters that limit into the body.  When the growth gate is
open the recenter point provably contracts the radius by a factor (1 - eps),
and the iterates converge to a fixed point.

The negative path is just as important.  When the gate is closed, or a
contraction branch fails its measured certificate, the solver restarts the
mean computation at staggered orbit offsets: agreeing restart limits that
leave the body certify escape in measure, anything else is an honest budget
report.  Discretization artifacts (orbits pinned by the mesh floor) are
flagged and never reported as fixed points.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .coefficients import opial_sum, recentering_bounds
from .grid import DEFAULT_TOL, GridFunction, limsup_tail
from .operators import (
    AffineOperator,
    CyclicShift,
    DomainError,
    MassOverflowError,
    affinity_defect,
    afps_residual,
    mean_lipschitz,
)
from .sets import ConvexBody, CoordPoint, measure_distance, norm

STATUS_FIXED = "fixed_point"
STATUS_ESCAPED = "escaped_in_measure"
STATUS_BUDGET = "budget_exhausted"


class ExtendSequenceError(RuntimeError):
    """The trailing cluster is too small; more terms are needed."""


class BranchConditionError(RuntimeError):
    """Neither contraction branch passed its measured certificate."""


def _raw(p) -> np.ndarray:
    if isinstance(p, GridFunction):
        return p.values
    if isinstance(p, CoordPoint):
        return p.coeffs
    raise TypeError(f"unsupported point type {type(p).__name__}")


def _rebuild(template, arr: np.ndarray):
    if isinstance(template, GridFunction):
        return GridFunction(template.level, arr)
    return CoordPoint(template.t, arr)


def _norm_weights(p) -> np.ndarray:
    if isinstance(p, GridFunction):
        return np.full(p.values.size, p.cell_width)
    w = np.ones(p.slots)
    w[0] = p.t - 1.0
    return w


def _median_point(points):
    """Cellwise median: the robust center of a cluster of points."""
    stack = np.stack([_raw(p) for p in points])
    return _rebuild(points[0], np.median(stack, axis=0))


def _safe_residual(T: AffineOperator, x) -> float | None:
    try:
        return afps_residual(T, x)
    except (MassOverflowError, DomainError):
        return None


@dataclass(frozen=True)
class AfpsRecord:
    """Cesaro means of one orbit, their residuals, and a detected limit.

    The means form an approximate fixed-point sequence whenever the orbit
    stays bounded: the residual of the s-th mean decays like 1/s by the
    affine two-point identity.  ``limit`` is the in-measure cluster point of
    the trailing means when one exists, with ``limit_quality`` the largest
    in-measure distance from the limit to a selected term.
    """

    points: tuple
    residuals: tuple
    limit: object | None = None
    limit_quality: float | None = None
    start_offset: int = 0
    window_fraction: float = 0.5

    def __post_init__(self) -> None:
        if not self.points:
            raise ValueError("record needs at least one mean")
        object.__setattr__(self, "points", tuple(self.points))
        object.__setattr__(self, "residuals", tuple(float(r) for r in self.residuals))

    def radius_from(self, y) -> float:
        """Trailing limsup of norm distances from ``y`` to the means."""
        return limsup_tail([norm(y - p) for p in self.points], self.window_fraction)

    def limit_spread(self) -> float | None:
        """Trailing limsup of norm distances from the detected limit."""
        if self.limit is None:
            return None
        return self.radius_from(self.limit)


@dataclass(frozen=True)
class StepReport:
    """Everything one contraction step measured, certificates included."""

    branch: str
    r_before: float
    r_after: float
    rho: float
    limit_gap_x: float | None
    limit_gap_means: float | None
    displacement: float
    displacement_bound: float
    recenter_bound: str
    near_achieving: bool
    phi_min: float | None = None
    phi_ratio: float | None = None
    extraction_quality: float | None = None


@dataclass
class SolveOutcome:
    """Terminal report of a solver run.

    ``status`` is one of fixed_point, escaped_in_measure, budget_exhausted.
    ``point`` carries the fixed point or the detected escape limit,
    ``trace`` one row per outer iteration (or orbit snapshot in the
    practical solver), ``diagnostics`` the measured coefficients and the
    reasons behind the verdict.
    """

    status: str
    point: object | None
    residual: float | None
    trace: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)


def komlos_extract(seq, *, extraction_tol: float = 1e-3, min_cluster: int = 4,
                   trailing_fraction: float = 0.5, max_candidates: int = 64):
    """Subsequence indices whose terms cluster in measure, and their limit.

    Greedy cluster growth around the last term, over a thinned candidate set
    from the trailing window (geometric offsets from the end plus an even
    spread).  The returned limit is the cellwise median of the cluster and
    lies within ``extraction_tol`` in measure of every selected term.  When
    no cluster of ``min_cluster`` terms exists the sequence is declared too
    short, never silently truncated.
    """
    seq = list(seq)
    n = len(seq)
    if n < 8:
        raise ValueError(f"need at least 8 terms, got {n}")
    if not (0.0 < trailing_fraction <= 1.0):
        raise ValueError(f"trailing_fraction must be in (0, 1], got {trailing_fraction}")
    top = max(norm(p) for p in seq)
    if not math.isfinite(top) or top > 1e9:
        raise ValueError("sequence is not bounded in norm")

    start = max(0, n - max(min_cluster, math.ceil(trailing_fraction * n)))
    picks = {n - 1}
    step = 1
    while n - 1 - step >= start:
        picks.add(n - 1 - step)
        step *= 2
    room = max_candidates - len(picks)
    if room > 0:
        picks.update(int(i) for i in np.linspace(start, n - 1, num=min(room, n - start), dtype=int))
    cand = sorted(picks)[-max_candidates:]

    cluster = [n - 1]
    center = seq[n - 1]
    pool = [i for i in cand if i != n - 1]
    while pool:
        dists = [measure_distance(center, seq[i]) for i in pool]
        j = int(np.argmin(dists))
        if dists[j] > extraction_tol:
            break
        cluster.append(pool.pop(j))
        center = _median_point([seq[i] for i in cluster])
    # soundness: the final median must cover every member it claims
    cluster = [i for i in cluster
               if measure_distance(center, seq[i]) <= extraction_tol]
    if len(cluster) >= min_cluster:
        center = _median_point([seq[i] for i in cluster])
        cluster = [i for i in cluster
                   if measure_distance(center, seq[i]) <= extraction_tol]
    if len(cluster) < min_cluster:
        raise ExtendSequenceError(
            f"extend the sequence: only {len(cluster)} trailing terms cluster "
            f"within {extraction_tol:g} in measure")
    return sorted(cluster), center


def build_afps_record(T: AffineOperator, x0, n_inner: int, *,
                      window_fraction: float = 0.5,
                      extraction_tol: float = 1e-3, min_cluster: int = 4,
                      check_domain: bool = True) -> AfpsRecord:
    """Record the Cesaro means of the orbit of ``x0`` with their residuals.

    Residuals come from the affine identity z_s - T z_s = (T x0 - T**(s+1) x0)/s,
    so the whole record costs one orbit pass.  Coordinate orbits that run out
    of tracked slots are truncated at the last computable mean.
    """
    if n_inner < 1:
        raise ValueError(f"n_inner must be >= 1, got {n_inner}")
    pts = [x0]
    try:
        for _ in range(n_inner + 1):
            pts.append(T.apply(pts[-1], check_domain=check_domain))
    except MassOverflowError:
        pass
    n_means = len(pts) - 2
    if n_means < 1:
        raise ExtendSequenceError("orbit ended before the first residual")
    means = []
    residuals = []
    total = None
    for s in range(1, n_means + 1):
        total = pts[s] if total is None else total + pts[s]
        means.append(total * (1.0 / s))
        residuals.append(norm(pts[1] - pts[s + 1]) / s)
    limit = None
    quality = None
    if n_means >= 8:
        try:
            idx, limit = komlos_extract(means, extraction_tol=extraction_tol,
                                        min_cluster=min_cluster)
            quality = max(measure_distance(limit, means[i]) for i in idx)
        except (ExtendSequenceError, ValueError):
            limit = None
    return AfpsRecord(tuple(means), tuple(residuals), limit, quality,
                      window_fraction=window_fraction)


def nearest_afps_radius(y, records, *, default=None) -> float:
    """Smallest trailing radius of ``y`` against the recorded sequences.

    This is the working surrogate for the infimum over all approximate
    fixed-point sequences: records only ever overestimate it.
    """
    records = list(records)
    if not records:
        if default is not None:
            return default
        raise ValueError("need at least one record")
    return min(rec.radius_from(y) for rec in records)


def admissible_eps(mean_lip: float, t_coeff: float, opial: float = 2.0) -> float | None:
    """Half the largest eps with mean_lip < (opial/t_coeff)(1-eps)/(1+eps)**2,
    or None when no positive eps exists (the gate is closed)."""
    if mean_lip <= 0 or t_coeff <= 0 or opial <= 0:
        raise ValueError("coefficients must be positive")
    q = mean_lip * t_coeff / opial
    if q >= 1.0:
        return None
    disc = (2.0 * q + 1.0) ** 2 - 4.0 * q * (q - 1.0)
    e_star = 1.0 if q == 0.0 else (-(2.0 * q + 1.0) + math.sqrt(disc)) / (2.0 * q)
    eps = min(0.5 * e_star, 0.5)
    while eps > 1e-12 and mean_lip >= (opial / t_coeff) * (1.0 - eps) / (1.0 + eps) ** 2:
        eps *= 0.5
    return eps if eps > 1e-12 else None


def _phi_values(points, record: AfpsRecord, window_fraction: float) -> np.ndarray:
    """Trailing limsup of norm distances from each point to the record means,
    vectorized in blocks to keep memory flat."""
    w_len = max(1, math.ceil(window_fraction * len(record.points)))
    window = record.points[len(record.points) - w_len:]
    W = np.stack([_raw(p) for p in window])
    Z = np.stack([_raw(p) for p in points])
    weights = _norm_weights(points[0])
    out = np.empty(Z.shape[0])
    per_row = max(1, W.shape[0] * W.shape[1])
    chunk = max(1, (1 << 21) // per_row)
    for i in range(0, Z.shape[0], chunk):
        gaps = np.abs(Z[i:i + chunk, None, :] - W[None, :, :]) @ weights
        out[i:i + chunk] = gaps.max(axis=1)
    return out


def proof_step(T: AffineOperator, C: ConvexBody, x0, eps: float, records, *,
               mean_lip: float, t_coeff: float, opial: float = 2.0,
               rng: np.random.Generator | None = None,
               window_fraction: float = 0.5, tol: float = 1e-8,
               branch_slack: float = 1e-6, extraction_tol: float = 0.05,
               n_select: int = 24):
    """One certified contraction step: returns (w, StepReport).

    Measures the radius r of ``x0``, forms the contraction target
    rho = r (1 - eps) / (t_coeff (1 + eps)), and tries two branches: the
    detected limit of the best record, then the limit of means of a
    low-score subsequence of the newest means.  Whichever limit sits within
    rho (trailing limsup in norm) is recentered into the body, and the
    recenter point must pass two measured certificates: radius contraction
    by (1 - eps) and the displacement bound (2 + (1 + eps) mean_lip) r.
    Certificate failure raises BranchConditionError; nothing is papered over.
    """
    records = list(records)
    if not records:
        raise ValueError("need at least one afps record")
    if not (0.0 < eps < 1.0):
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    rng = np.random.default_rng(0) if rng is None else rng

    r0 = nearest_afps_radius(x0, records)
    rho = r0 * (1.0 - eps) / (t_coeff * (1.0 + eps))
    with_limits = [rec for rec in records if rec.limit is not None]
    if not with_limits:
        raise BranchConditionError("no record detected an in-measure limit")
    best = min(with_limits, key=lambda rec: rec.radius_from(x0))
    near = best.radius_from(x0) <= r0 * (1.0 + eps) + branch_slack
    gap_x = best.limit_spread()

    current = records[-1]
    zs = list(current.points)
    zbar = []
    z_lim = None
    gap_z = None
    phi_min = None
    phi_ratio = None
    quality = current.limit_quality
    if len(zs) >= 16:
        phi = _phi_values(zs, best, window_fraction)
        phi_min = float(phi.min())
        k = int(min(n_select, max(8, len(zs) // 4)))
        chosen = np.sort(np.argsort(phi, kind="stable")[:k])
        total = None
        for rank, idx in enumerate(chosen, start=1):
            total = zs[idx] if total is None else total + zs[idx]
            zbar.append(total * (1.0 / rank))
        try:
            _, z_lim = komlos_extract(zbar, extraction_tol=extraction_tol,
                                      min_cluster=min(4, len(zbar) // 2))
        except (ExtendSequenceError, ValueError):
            z_lim = _median_point(zbar[len(zbar) // 2:])
        gap_z = limsup_tail([norm(z_lim - zb) for zb in zbar], window_fraction)
        phi_bar = _phi_values(zbar, best, window_fraction)
        if phi_min > 1e-12:
            phi_ratio = float(limsup_tail(phi_bar, window_fraction) / phi_min)

    if gap_x is not None and gap_x <= rho + branch_slack:
        branch = "x_limit"
        result = C.recenter(best.limit, best.points, rng=rng,
                            window_fraction=window_fraction)
        base_seq = best.points
    elif gap_z is not None and gap_z <= rho + branch_slack:
        branch = "mean_limit"
        result = C.recenter(z_lim, zbar, rng=rng, window_fraction=window_fraction)
        base_seq = tuple(zbar)
    else:
        raise BranchConditionError(
            f"no branch within rho={rho:.4g}: limit gap {gap_x}, "
            f"means gap {gap_z}")

    w = result.point
    r_after = limsup_tail([norm(w - p) for p in base_seq], window_fraction)
    if r_after > (1.0 - eps) * r0 + branch_slack:
        raise BranchConditionError(
            f"contraction certificate failed: {r_after:.6g} > "
            f"(1-eps) r0 = {(1.0 - eps) * r0:.6g}")
    displacement = norm(x0 - w)
    disp_bound = (2.0 + (1.0 + eps) * mean_lip) * r0 + branch_slack
    if displacement > disp_bound:
        raise BranchConditionError(
            f"displacement certificate failed: {displacement:.6g} > "
            f"{disp_bound:.6g}")
    report = StepReport(branch=branch, r_before=r0, r_after=r_after, rho=rho,
                        limit_gap_x=gap_x, limit_gap_means=gap_z,
                        displacement=displacement, displacement_bound=disp_bound,
                        recenter_bound=result.bound_type, near_achieving=near,
                        phi_min=phi_min, phi_ratio=phi_ratio,
                        extraction_quality=quality)
    return w, report


def classify_escape(T: AffineOperator, C: ConvexBody, x0, *,
                    measure_tol: float = 0.02, membership_tol: float = 1e-6,
                    max_span: int = 96):
    """Restart diagnosis: (status, limit, diagnostics).

    Means are recomputed from three staggered orbit offsets.  When the three
    limits agree in measure, the agreed limit is the orbit's working limit;
    membership then separates a genuine escape from a budget problem.  The
    limits must agree to count: a single window can lie, three staggered
    ones rarely do.
    """
    faithful = T.max_faithful_steps(x0)
    span = max_span if faithful is None else min(faithful, max_span)
    pts = [x0]
    overflow = False
    try:
        for _ in range(span):
            pts.append(T.apply(pts[-1], check_domain=False))
    except MassOverflowError:
        overflow = True
    n = len(pts) - 1
    diag = {"applications": n, "faithful_steps": faithful, "overflow": overflow}
    if n < 8:
        diag["note"] = f"orbit usable for only {n} steps; no restart window fits"
        return STATUS_BUDGET, None, diag

    base = n // 2
    step = max(1, n // 8)
    offsets = [min(base + i * step, n - 3) for i in range(3)]
    seg_len = min(5, n - offsets[-1])
    limits = []
    for off in offsets:
        total = None
        seg = []
        for i in range(off + 1, off + seg_len + 1):
            total = pts[i] if total is None else total + pts[i]
            seg.append(total * (1.0 / (i - off)))
        limits.append(_median_point(seg))
    stability = max(measure_distance(a, b) for a in limits for b in limits)
    limit = limits[-1]
    zero = 0.0 * x0
    diag.update({
        "offsets": offsets,
        "segment_length": seg_len,
        "restart_stability": stability,
        "limit_measure_to_zero": measure_distance(limit, zero),
    })
    if stability <= measure_tol:
        problem = C.violation(limit, membership_tol)
        if problem is not None:
            diag["violation"] = problem
            return STATUS_ESCAPED, limit, diag
        diag["note"] = ("restart limits agree and stay in the body; "
                        "residuals simply did not reach tol in budget")
        return STATUS_BUDGET, limit, diag
    diag["note"] = "restart limits disagree in measure; no stable limit detected"
    return STATUS_BUDGET, None, diag


def _default_inner(T: AffineOperator, x) -> int:
    faithful = T.max_faithful_steps(x)
    if faithful is not None:
        return max(8, min(faithful, 4096))
    if isinstance(T, CyclicShift):
        return min(8 * T.cycle_length(), 4096)
    return 256


def _eps_at(eps_schedule, outer: int, eps0: float) -> float:
    if eps_schedule is None:
        return eps0
    if callable(eps_schedule):
        return float(eps_schedule(outer))
    if isinstance(eps_schedule, (int, float)):
        return float(eps_schedule)
    seq = list(eps_schedule)
    return float(seq[min(outer, len(seq) - 1)])


def solve(T: AffineOperator, C: ConvexBody, x0=None, *, tol: float = 1e-8,
          max_outer: int = 16, eps_schedule=None, n_inner: int | None = None,
          budget: int = 10 ** 6, seed: int = 0, window_fraction: float = 0.5,
          measure_tol: float = 0.02, membership_tol: float = 1e-6,
          extraction_tol: float = 0.05) -> SolveOutcome:
    """Certified fixed-point search for an affine map of a convex body.

    Entry enforces the affinity certificate and domain membership.  When the
    growth gate mean_lip < opial / t_coeff admits a positive eps, the solver
    runs contraction steps whose certificates are measured, not assumed, and
    returns a fixed point with its residual.  Otherwise, or on certificate
    failure, it switches to restart diagnosis and reports either escape in
    measure (limit left the body) or budget exhaustion.  A point pinned only
    by the mesh floor is never reported as a fixed point.
    """
    rng = np.random.default_rng(seed)
    defect = affinity_defect(T, rng, pairs=8)
    if defect > 1e-7:
        raise ValueError(f"affinity certificate failed: defect {defect:.3g}")
    if x0 is None:
        x0 = T.default_start(rng)
    problem = C.violation(x0, 1e-7)
    if problem is not None:
        raise DomainError(f"starting point outside the body: {problem}")

    opial = opial_sum()
    mean_lip = mean_lipschitz(T, 8, rng=rng)
    t_coeff = C.t_exact
    t_source = "catalog"
    if t_coeff is None:
        t_coeff = recentering_bounds(C, rng=rng).estimate_high
        t_source = "measured"
    eps0 = admissible_eps(mean_lip, t_coeff, opial)
    diagnostics = {
        "mean_lip": mean_lip,
        "t_coeff": t_coeff,
        "t_source": t_source,
        "opial": opial,
        "gate_open": eps0 is not None,
        "eps": eps0,
        "affinity_defect": defect,
        "applications": 0,
    }
    trace: list[dict] = []
    apps = 0

    def finish_with_classification(outer: int, r_est: float | None, reason: str | None):
        nonlocal apps
        status, limit, diag = classify_escape(
            T, C, x0, measure_tol=measure_tol, membership_tol=membership_tol)
        apps += diag.get("applications", 0)
        if reason is not None:
            diagnostics["branch_failure"] = reason
        diagnostics.update({k: v for k, v in diag.items() if k != "applications"})
        diagnostics["applications"] = apps
        residual = None if limit is None else _safe_residual(T, limit)
        trace.append({
            "outer_iter": outer,
            "r_estimate": r_est,
            "branch": "diagnostic",
            "displacement": None,
            "residual": residual,
            "ky_fan_to_limit": None if limit is None else 0.0,
            "membership": None if limit is None else C.membership(limit, membership_tol),
        })
        return SolveOutcome(status, limit, residual, trace, diagnostics)

    def accept_fixed(outer: int, point, residual: float, r_est: float | None):
        diagnostics["applications"] = apps
        trace.append({
            "outer_iter": outer,
            "r_estimate": r_est if r_est is not None else 0.0,
            "branch": "converged",
            "displacement": 0.0,
            "residual": residual,
            "ky_fan_to_limit": 0.0,
            "membership": True,
        })
        return SolveOutcome(STATUS_FIXED, point, residual, trace, diagnostics)

    residual_start = _safe_residual(T, x0)
    apps += 1
    if (residual_start is not None and residual_start <= tol
            and C.membership(x0, membership_tol) and not T.is_saturated(x0)):
        return accept_fixed(0, x0, residual_start, None)
    if eps0 is None:
        return finish_with_classification(0, None, "growth gate closed: "
                                          f"mean_lip * t / opial = "
                                          f"{mean_lip * t_coeff / opial:.6g} >= 1")

    pool: list[AfpsRecord] = []
    a = x0
    for outer in range(max_outer):
        eps = _eps_at(eps_schedule, outer, eps0)
        if not (0.0 < eps < 1.0) or mean_lip >= (opial / t_coeff) * (1.0 - eps) / (1.0 + eps) ** 2:
            raise ValueError(f"eps={eps} is not admissible at outer {outer}")
        n_in = n_inner if n_inner is not None else _default_inner(T, a)
        n_in = min(n_in, budget - apps - 8)
        if n_in < 8:
            return finish_with_classification(outer, None, "budget exhausted "
                                              "before the next record")
        try:
            rec = build_afps_record(T, a, n_in, window_fraction=window_fraction,
                                    extraction_tol=extraction_tol)
        except ExtendSequenceError as exc:
            return finish_with_classification(outer, None, str(exc))
        apps += n_in + 1
        pool.append(rec)
        r0 = nearest_afps_radius(a, pool)
        residual_a = _safe_residual(T, a)
        apps += 1
        if residual_a is not None and residual_a <= tol:
            if C.membership(a, membership_tol) and not T.is_saturated(a):
                return accept_fixed(outer, a, residual_a, r0)
            return finish_with_classification(outer, r0, "candidate is a mesh "
                                              "artifact or left the body")
        if r0 <= tol:
            return finish_with_classification(outer, r0, "radius reached tol "
                                              "but the residual did not")
        try:
            w, report = proof_step(T, C, a, eps, pool, mean_lip=mean_lip,
                                   t_coeff=t_coeff, opial=opial, rng=rng,
                                   window_fraction=window_fraction, tol=tol,
                                   extraction_tol=extraction_tol)
        except (BranchConditionError, ExtendSequenceError) as exc:
            return finish_with_classification(outer, r0, str(exc))
        residual_w = _safe_residual(T, w)
        apps += 1
        rec_limit = pool[-1].limit
        trace.append({
            "outer_iter": outer,
            "r_estimate": r0,
            "branch": report.branch,
            "displacement": report.displacement,
            "residual": residual_w,
            "ky_fan_to_limit": None if rec_limit is None
            else measure_distance(w, rec_limit),
            "membership": C.membership(w, membership_tol),
        })
        a = w
    residual_a = _safe_residual(T, a)
    apps += 1
    if (residual_a is not None and residual_a <= tol
            and C.membership(a, membership_tol) and not T.is_saturated(a)):
        return accept_fixed(max_outer, a, residual_a, None)
    return finish_with_classification(max_outer, None,
                                      f"no convergence in {max_outer} outer steps")


def cesaro_solve(T: AffineOperator, C: ConvexBody, x0=None, *, tol: float = 1e-8,
                 n_max: int = 4096, seed: int = 0, membership_tol: float = 1e-6,
                 measure_tol: float = 0.02, trace_points: int = 256) -> SolveOutcome:
    """Practical solver: march the Cesaro means until a residual clears tol.

    One operator application per step prices the residual exactly through
    the affine identity.  Orbits that stop moving are handled analytically:
    a genuinely fixed orbit point is returned at once, a mesh-pinned one is
    rejected as an artifact and handed to restart diagnosis, with the mean
    horizon that tol would need reported either way.  Statuses agree with
    the certified solver.
    """
    rng = np.random.default_rng(seed)
    if x0 is None:
        x0 = T.default_start(rng)
    problem = C.violation(x0, 1e-7)
    if problem is not None:
        raise DomainError(f"starting point outside the body: {problem}")
    diagnostics = {"applications": 0, "n_max": n_max}
    trace: list[dict] = []
    keep_every = max(1, n_max // trace_points)

    def classify(reason: str):
        status, limit, diag = classify_escape(
            T, C, x0, measure_tol=measure_tol, membership_tol=membership_tol)
        diagnostics["applications"] += diag.pop("applications", 0)
        diagnostics.update(diag)
        diagnostics["stop_reason"] = reason
        residual = None if limit is None else _safe_residual(T, limit)
        _fill_measure_column(trace, limit)
        return SolveOutcome(status, limit, residual, trace, diagnostics)

    try:
        first = T.apply(x0)
    except MassOverflowError:
        diagnostics["applications"] = 0
        return classify("orbit cannot move from the starting point")
    apps = 1
    orbit_pt = first
    total = first
    best_residual = math.inf
    s = 1
    while s <= n_max:
        z = total * (1.0 / s)
        try:
            nxt = T.apply(orbit_pt, check_domain=False)
        except MassOverflowError:
            diagnostics["applications"] = apps
            return classify(f"orbit ran out of tracked slots at step {s + 1}")
        apps += 1
        residual = norm(first - nxt) / s
        best_residual = min(best_residual, residual)
        if s % keep_every == 0 or residual <= tol or s == n_max:
            trace.append({"s": s, "residual": residual, "norm": norm(z),
                          "point": z})
        if residual <= tol:
            direct = _safe_residual(T, z)
            apps += 1
            diagnostics["applications"] = apps
            if (direct is not None and direct <= max(tol, residual + 1e-12)
                    and C.membership(z, membership_tol) and not T.is_saturated(z)):
                diagnostics["stopped_at"] = s
                _fill_measure_column(trace, z)
                return SolveOutcome(STATUS_FIXED, z, direct, trace, diagnostics)
            return classify("candidate mean failed verification")
        if norm(nxt - orbit_pt) == 0.0:
            # orbit stopped moving: every later mean is a closed form
            pin = nxt
            gap = norm(first - pin)
            needed = math.inf if gap == 0.0 else gap / tol
            diagnostics["orbit_pinned_at"] = s + 1
            diagnostics["means_needed_for_tol"] = needed
            diagnostics["applications"] = apps
            if not T.is_saturated(pin):
                residual_pin = _safe_residual(T, pin)
                apps += 1
                diagnostics["applications"] = apps
                if (residual_pin is not None and residual_pin <= tol
                        and C.membership(pin, membership_tol)):
                    _fill_measure_column(trace, pin)
                    return SolveOutcome(STATUS_FIXED, pin, residual_pin, trace,
                                        diagnostics)
            return classify("orbit pinned by the mesh floor; later means are "
                            "artifacts")
        total = total + nxt
        orbit_pt = nxt
        s += 1
    diagnostics["applications"] = apps
    diagnostics["best_residual"] = best_residual
    return classify(f"no mean reached tol within n_max={n_max}")


def _fill_measure_column(trace: list[dict], limit) -> None:
    """Price the in-measure distance of each kept mean to the detected limit,
    then drop the stored points from the rows."""
    for row in trace:
        point = row.pop("point", None)
        if limit is None or point is None:
            row["ky_fan_to_detected_limit"] = None
        else:
            row["ky_fan_to_detected_limit"] = measure_distance(point, limit)
