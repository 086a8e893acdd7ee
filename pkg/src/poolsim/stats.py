"""Monte Carlo estimators and hypothesis checks for the model's
probabilistic structure.

Every estimator takes an explicit stream, uses pre-registered tolerances
(recorded in the report's details), and certifies its field truncation
with the same probability bound the exact engine uses.  Verdicts are
"pass" / "fail" / "inconclusive"; an inconclusive verdict means the data
could not decide (for example, no retained replicas), never an error.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels

from .exact_engine import choose_sim_radius, truncation_bound
from .field import Annulus
from .streams import RngStream
from .trajectory import Trajectory

__all__ = [
    "StatReport",
    "AnnulusCounts",
    "poisson_structure_checks",
    "kurtz_test",
    "hazard_estimate",
    "hazard_linearity",
    "refill_density_estimate",
    "hitting_prob_estimate",
    "entered_count_estimate",
    "growth_exponent_fit",
    "fit_loglog_slope",
    "cascade_tail_fit",
    "exp_lln_check",
    "volume_deviation_scan",
    "free_field_snapshots",
]

VERDICTS = ("pass", "fail", "inconclusive")
_MIN_RADIUS = 1.0 / math.sqrt(math.pi)

@dataclass
class StatReport:
    name: str
    estimate: float
    ci_low: float
    ci_high: float
    n_samples: int
    verdict: str
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"verdict must be one of {VERDICTS}, got {self.verdict!r}")
        if not (self.ci_low <= self.estimate <= self.ci_high):
            raise ValueError(
                f"need ci_low <= estimate <= ci_high, got "
                f"({self.ci_low}, {self.estimate}, {self.ci_high})"
            )

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        def clean(v):
            if isinstance(v, (np.floating, np.integer)):
                return v.item()
            if isinstance(v, np.ndarray):
                return v.tolist()
            if isinstance(v, dict):
                return {k: clean(x) for k, x in v.items()}
            if isinstance(v, (list, tuple)):
                return [clean(x) for x in v]
            return v

        return {
            "name": self.name,
            "estimate": float(self.estimate),
            "ci_low": float(self.ci_low),
            "ci_high": float(self.ci_high),
            "n_samples": int(self.n_samples),
            "verdict": self.verdict,
            "details": clean(self.details),
        }

@dataclass
class AnnulusCounts:
    """Replica-by-annulus count matrix of an observed point field."""

    annuli: list[Annulus]
    counts: np.ndarray

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.ndim != 2 or self.counts.shape[1] != len(self.annuli):
            raise ValueError("counts must be (replicas, len(annuli))")

def _seeds_for(rng: RngStream, n: int) -> np.ndarray:
    return rng.generator().integers(0, 2**32, size=n, dtype=np.int64)

def _verdict(ok: bool | None) -> str:
    if ok is None:
        return "inconclusive"
    return "pass" if ok else "fail"

# ---------------------------------------------------------------------------
# conditional-field structure (Kurtz)

def poisson_structure_checks(
    counts: np.ndarray,
    expected_means: np.ndarray,
    expected_ses: np.ndarray,
    fano_band=(0.9, 1.1),
    corr_tol=0.05,
    mean_z_tol=3.0,
) -> dict:
    """Dispersion, cross-correlation, and mean checks of a count matrix
    against target Poisson intensities."""
    counts = np.asarray(counts, dtype=float)
    n, k = counts.shape
    means = counts.mean(axis=0)
    variances = counts.var(axis=0, ddof=1)
    fano = variances / np.where(means > 0, means, np.nan)
    se_obs = np.sqrt(variances / n)
    mean_z = (means - expected_means) / np.hypot(se_obs, expected_ses)
    corr = np.corrcoef(counts, rowvar=False) if k > 1 else np.ones((1, 1))
    off = corr[~np.eye(k, dtype=bool)] if k > 1 else np.array([])
    max_corr = float(np.nanmax(np.abs(off))) if off.size else 0.0
    fano_ok = bool(np.all((fano >= fano_band[0]) & (fano <= fano_band[1])))
    corr_ok = bool(max_corr < corr_tol)
    means_ok = bool(np.all(np.abs(mean_z) <= mean_z_tol))
    return {
        "means": means,
        "expected_means": np.asarray(expected_means, dtype=float),
        "mean_z": mean_z,
        "fano": fano,
        "max_abs_corr": max_corr,
        "fano_band": list(fano_band),
        "corr_tol": corr_tol,
        "mean_z_tol": mean_z_tol,
        "fano_ok": fano_ok,
        "corr_ok": corr_ok,
        "means_ok": means_ok,
        "all_ok": fano_ok and corr_ok and means_ok,
    }

def kurtz_test(
    lam: float,
    pool_radius: float,
    t: float,
    annuli: list[Annulus],
    replicas: int,
    rng: RngStream,
    fano_band=(0.9, 1.1),
    corr_tol=0.05,
    mean_z_tol=3.0,
    oracle_walkers: int = 100_000,
    max_batches: int = 60,
    trunc_tol: float = 1e-3,
) -> StatReport:
    """Frozen-pool conditional structure test.

    Simulates fields of walkers around a pool frozen at pool_radius and
    keeps the replicas with no arrival by time t; on those, the active
    field should be Poisson with intensity lam * P(walk avoided the pool),
    which is estimated independently by single-particle Monte Carlo.
    `replicas` is the target number of retained replicas.
    """
    if replicas < 1000:
        raise ValueError(f"replicas must be >= 1000, got {replicas}")
    if pool_radius <= 0:
        raise ValueError("pool_radius must be > 0")
    edges = []
    for a in annuli:
        if a.r_inner < pool_radius:
            raise ValueError("annuli must lie outside the pool radius")
        edges.append((a.r_inner, a.r_outer))
    edges.sort()
    for (a_lo, a_hi), (b_lo, b_hi) in zip(edges, edges[1:]):
        if b_lo < a_hi:
            raise ValueError("annuli must be disjoint")
    outer = max(a.r_outer for a in annuli)
    trunc = max(
        choose_sim_radius(lam, t, max(outer, _MIN_RADIUS), trunc_tol), outer + 1.0
    )
    ann_edges = np.array(
        sorted({a.r_inner for a in annuli} | {a.r_outer for a in annuli}), dtype=float
    )
    ordered = sorted(annuli, key=lambda a: a.r_inner)
    # indices of each requested annulus in the sorted edge partition
    col = [int(np.searchsorted(ann_edges, a.r_inner)) for a in ordered]

    batch = replicas
    kept_rows = []
    total_raw = 0
    for b in range(max_batches):
        seeds = _seeds_for(rng.substream("batch", b), batch)
        counts, retained = _kernels.frozen_pool_replicas(
            batch, lam, pool_radius, trunc, t, ann_edges, seeds
        )
        total_raw += batch
        kept = counts[retained.astype(bool)]
        if kept.shape[0]:
            kept_rows.append(kept)
        n_kept = sum(r.shape[0] for r in kept_rows)
        if n_kept >= replicas:
            break
    counts = (
        np.concatenate(kept_rows)[:replicas]
        if kept_rows
        else np.zeros((0, ann_edges.size - 1), dtype=np.int64)
    )
    n_kept = counts.shape[0]
    observed = AnnulusCounts(ordered, counts[:, col]) if n_kept else None
    if n_kept == 0:
        return StatReport(
            name="kurtz_test", estimate=math.nan if False else 0.0, ci_low=0.0,
            ci_high=0.0, n_samples=0, verdict="inconclusive",
            details={"reason": "no retained replicas", "raw_replicas": total_raw},
        )

    sub = observed.counts
    expected = np.empty(len(ordered))
    expected_se = np.empty(len(ordered))
    for j, a in enumerate(ordered):
        seed = rng.substream("oracle", j).kernel_seed()
        kept = _kernels.avoidance_count(
            oracle_walkers, a.r_inner, a.r_outer, pool_radius, t, seed
        )
        p = kept / oracle_walkers
        expected[j] = lam * a.area * p
        expected_se[j] = lam * a.area * math.sqrt(max(p * (1 - p), 1e-12) / oracle_walkers)

    checks = poisson_structure_checks(
        sub, expected, expected_se, fano_band, corr_tol, mean_z_tol
    )
    fano = checks["fano"]
    est = float(np.nanmax(np.abs(fano - 1.0)))
    se = math.sqrt(2.0 / max(n_kept - 1, 1))
    details = dict(checks)
    details.update(
        {
            "retained": n_kept,
            "raw_replicas": total_raw,
            "retention_rate": n_kept / total_raw,
            "truncation_radius": trunc,
            "truncation_bound": truncation_bound(lam, t, trunc, max(outer, _MIN_RADIUS)),
            "annuli": [[a.r_inner, a.r_outer] for a in ordered],
        }
    )
    return StatReport(
        name="kurtz_test",
        estimate=est,
        ci_low=max(est - 2 * se, 0.0),
        ci_high=est + 2 * se,
        n_samples=n_kept,
        verdict=_verdict(checks["all_ok"]),
        details=details,
    )

# ---------------------------------------------------------------------------
# arrival hazard

def hazard_estimate(
    R: float,
    replicas: int,
    rng: RngStream,
    intensity: float = 1.0,
    t_max: float | None = None,
    trunc_tol: float = 1e-3,
    ks_factor: float = 2.5,
) -> StatReport:
    """First-arrival rate into a frozen ball of radius R from a
    unit-intensity field outside it.

    The rate is the censored-exponential MLE of the first entry times; the
    report also runs a one-sided KS comparison of the entry times against
    the exponential with the early-window rate (entry times should be
    stochastically above it, since the hazard only decreases)."""
    if R < _MIN_RADIUS:
        raise ValueError(f"R must be >= 1/sqrt(pi), got {R}")
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    if t_max is None:
        t_max = max(1.0, 6.0 / R)
    trunc = choose_sim_radius(max(intensity, 1e-9), t_max, R, trunc_tol)
    seeds = _seeds_for(rng.substream("fields"), replicas)
    times = _kernels.first_entry_times(replicas, intensity, R, trunc, t_max, seeds)
    censored = ~np.isfinite(times)
    n_unc = int((~censored).sum())
    details: dict = {
        "R": R,
        "t_max": t_max,
        "replicas": replicas,
        "n_uncensored": n_unc,
        "truncation_radius": trunc,
    }
    if n_unc == 0:
        return StatReport(
            name="hazard_estimate", estimate=0.0, ci_low=0.0, ci_high=0.0,
            n_samples=replicas, verdict="inconclusive",
            details={**details, "reason": "no arrivals observed"},
        )
    exposure = float(np.minimum(times, t_max).sum())
    rate = n_unc / exposure
    se = rate / math.sqrt(n_unc)
    finite = np.sort(times[~censored])

    # early-window rate approximates the hazard at 0 (its supremum)
    delta = float(np.quantile(finite, 0.2)) if n_unc >= 10 else t_max
    n_early = int((finite <= delta).sum())
    exposure_early = float(np.minimum(times, delta).sum())
    rate0 = n_early / exposure_early if exposure_early > 0 and n_early > 0 else rate
    emp = np.arange(1, n_unc + 1) / replicas  # ECDF including censored mass
    bound_cdf = 1.0 - np.exp(-rate0 * finite)
    d_plus = float(np.max(emp - bound_cdf))
    ks_tol = ks_factor / math.sqrt(n_unc)
    details.update(
        {
            "rate": rate,
            "rate_se": se,
            "rate_early": rate0,
            "early_window": delta,
            "ks_d_plus": d_plus,
            "ks_tol": ks_tol,
            "ratio_rate_over_R": rate / R,
        }
    )
    return StatReport(
        name="hazard_estimate",
        estimate=rate,
        ci_low=rate - 1.96 * se,
        ci_high=rate + 1.96 * se,
        n_samples=replicas,
        verdict=_verdict(d_plus <= ks_tol),
        details=details,
    )

def hazard_linearity(
    radii: list[float],
    replicas: int,
    rng: RngStream,
    ratio_tol: float = 0.25,
    **kwargs,
) -> StatReport:
    """Rate-over-radius constancy across target radii plus per-radius
    exponential-domination checks."""
    reports = [
        hazard_estimate(R, replicas, rng.substream("R", i), **kwargs)
        for i, R in enumerate(radii)
    ]
    ratios = np.array([r.details["rate"] / r.details["R"] for r in reports])
    spread = float(ratios.max() / ratios.min()) if ratios.min() > 0 else math.inf
    ks_ok = all(r.verdict == "pass" for r in reports)
    ok = spread <= 1.0 + ratio_tol and ks_ok
    est = float(ratios.mean())
    return StatReport(
        name="hazard_linearity",
        estimate=est,
        ci_low=float(ratios.min()),
        ci_high=float(ratios.max()),
        n_samples=replicas * len(radii),
        verdict=_verdict(ok),
        details={
            "radii": list(radii),
            "rates": [r.details["rate"] for r in reports],
            "rate_ses": [r.details["rate_se"] for r in reports],
            "ratios": ratios.tolist(),
            "ratio_spread": spread,
            "ratio_tol": ratio_tol,
            "ks_ok": ks_ok,
            "per_radius": [r.to_dict() for r in reports],
        },
    )

# ---------------------------------------------------------------------------
# vacuum refill

def refill_density_estimate(
    lam: float,
    R: float,
    t: float,
    probe: Annulus,
    replicas: int,
    rng: RngStream,
    ratio_threshold: float = 0.9,
    trunc_tol: float = 1e-3,
) -> StatReport:
    """Density recovery inside an initially evacuated ball.

    Field starts as PPP(lam) outside B(R); after free evolution to time t
    the particle density in the probe annulus is compared to lam."""
    if R <= 0 or t < 0:
        raise ValueError("need R > 0 and t >= 0")
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    target = max(probe.r_outer, _MIN_RADIUS)
    trunc = max(
        choose_sim_radius(max(lam, 1e-9), t, target, trunc_tol), R + 1.0, probe.r_outer + 1.0
    )
    seeds = _seeds_for(rng.substream("fields"), replicas)
    counts = _kernels.refill_probe_counts(
        replicas, lam, R, t, probe.r_inner, probe.r_outer, trunc, seeds
    )
    denom = lam * probe.area
    mean = counts.mean()
    se = counts.std(ddof=1) / math.sqrt(replicas) if replicas > 1 else 0.0
    if denom <= 0:
        return StatReport(
            name="refill_density_estimate", estimate=0.0, ci_low=0.0, ci_high=0.0,
            n_samples=replicas, verdict="inconclusive",
            details={"reason": "zero reference intensity"},
        )
    ratio = float(mean / denom)
    return StatReport(
        name="refill_density_estimate",
        estimate=ratio,
        ci_low=float((mean - 1.96 * se) / denom),
        ci_high=float((mean + 1.96 * se) / denom),
        n_samples=replicas,
        verdict=_verdict(ratio >= ratio_threshold),
        details={
            "lam": lam,
            "R": R,
            "t": t,
            "probe": [probe.r_inner, probe.r_outer],
            "mean_count": float(mean),
            "expected_count": float(denom),
            "ratio_threshold": ratio_threshold,
            "truncation_radius": trunc,
        },
    )

# ---------------------------------------------------------------------------
# hitting probability / entered counts

def hitting_prob_estimate(
    x_radius: float,
    k: float,
    replicas: int,
    rng: RngStream,
    scaled_band=(0.2, 5.0),
) -> StatReport:
    """Single-walker probability of entering B(1/sqrt(pi)) before time k,
    reported alongside p_hat * log(k)."""
    if x_radius <= _MIN_RADIUS:
        raise ValueError(f"x_radius must exceed 1/sqrt(pi), got {x_radius}")
    if k <= 1:
        raise ValueError("k must be > 1")
    hits = _kernels.hitting_count(
        replicas, x_radius, k, _MIN_RADIUS, rng.substream("walkers").kernel_seed()
    )
    p = hits / replicas
    se = math.sqrt(max(p * (1 - p), 1e-12) / replicas)
    scaled = p * math.log(k)
    ok = scaled_band[0] <= scaled <= scaled_band[1]
    return StatReport(
        name="hitting_prob_estimate",
        estimate=float(p),
        ci_low=float(max(p - 1.96 * se, 0.0)),
        ci_high=float(min(p + 1.96 * se, 1.0)),
        n_samples=replicas,
        verdict=_verdict(ok),
        details={
            "x_radius": x_radius,
            "k": k,
            "p_log_k": scaled,
            "scaled_band": list(scaled_band),
            "se": se,
        },
    )

def entered_count_estimate(
    lam: float,
    k: float,
    replicas: int,
    rng: RngStream,
    fano_band=(0.85, 1.15),
    trunc_tol: float = 1e-3,
) -> StatReport:
    """Distinct particles that ever visit B(1/sqrt(pi)) by time k:
    Poisson-dispersion check and the polylog lower bound on the mean."""
    if replicas < 100:
        raise ValueError(f"replicas must be >= 100, got {replicas}")
    if k < 0:
        raise ValueError("k must be >= 0")
    trunc = choose_sim_radius(max(lam, 1e-9), k, _MIN_RADIUS, trunc_tol)
    seeds = _seeds_for(rng.substream("fields"), replicas)
    counts = _kernels.entered_ball_counts(replicas, lam, k, _MIN_RADIUS, trunc, seeds)
    mean = float(counts.mean())
    var = float(counts.var(ddof=1))
    se = math.sqrt(var / replicas)
    fano = var / mean if mean > 0 else math.nan
    fano_ok = fano_band[0] <= fano <= fano_band[1] if mean > 0 else None
    details = {
        "lam": lam,
        "k": k,
        "fano": fano,
        "fano_band": list(fano_band),
        "truncation_radius": trunc,
    }
    if k >= 3:
        floor = math.pi * k / math.log(k) ** 1.5
        details["polylog_floor"] = floor
        ok = (fano_ok is True) and mean > floor
    else:
        ok = fano_ok
    return StatReport(
        name="entered_count_estimate",
        estimate=mean,
        ci_low=mean - 1.96 * se,
        ci_high=mean + 1.96 * se,
        n_samples=replicas,
        verdict=_verdict(ok),
        details=details,
    )

# ---------------------------------------------------------------------------
# growth exponents / cascade tails

def fit_loglog_slope(times, values) -> tuple[float, float]:
    """Least-squares slope of log(values) vs log(times); returns
    (slope, standard error)."""
    x = np.log(np.asarray(times, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    if x.size < 3:
        raise ValueError("need at least 3 points for a slope fit")
    xc = x - x.mean()
    slope = float(np.dot(xc, y) / np.dot(xc, xc))
    resid = y - (y.mean() + slope * xc)
    dof = max(x.size - 2, 1)
    se = float(math.sqrt((resid @ resid) / dof / np.dot(xc, xc)))
    return slope, se

def growth_exponent_fit(
    traj: Trajectory,
    t_min: float,
    t_max: float,
    grid_points: int = 64,
    expected_range: tuple[float, float] | None = None,
) -> StatReport:
    """Log-log slope of the pool radius over [t_min, t_max] on a geometric
    time grid (cadlag evaluation)."""
    if t_min <= 0 or t_max <= t_min:
        raise ValueError("need 0 < t_min < t_max")
    horizon = traj.metadata.get("horizon", traj.events[-1].time)
    if t_max > horizon + 1e-9:
        raise ValueError(f"trajectory (horizon {horizon}) does not cover t_max={t_max}")
    grid = np.geomspace(t_min, t_max, grid_points)
    radii = np.array([traj.radius_at(t) for t in grid])
    slope, se = fit_loglog_slope(grid, radii)
    ok = None
    if expected_range is not None:
        ok = expected_range[0] <= slope <= expected_range[1]
    return StatReport(
        name="growth_exponent_fit",
        estimate=slope,
        ci_low=slope - 1.96 * se,
        ci_high=slope + 1.96 * se,
        n_samples=grid_points,
        verdict=_verdict(ok),
        details={
            "t_min": t_min,
            "t_max": t_max,
            "expected_range": list(expected_range) if expected_range else None,
        },
    )

def cascade_tail_fit(
    samples,
    n_min: int = 10,
    upper_quantile: float = 0.999,
    expected: float | None = None,
    tol: float = 0.1,
) -> StatReport:
    """Log-log slope of the empirical survival function of cascade sizes
    over [n_min, quantile(upper_quantile)]; -1/2 at criticality."""
    samples = np.asarray(samples)
    if samples.size < 10_000:
        raise ValueError(f"need >= 1e4 samples, got {samples.size}")
    hi = float(np.quantile(samples, upper_quantile))
    if samples.max() < n_min or hi <= n_min:
        return StatReport(
            name="cascade_tail_fit", estimate=0.0, ci_low=0.0, ci_high=0.0,
            n_samples=int(samples.size), verdict="inconclusive",
            details={"reason": f"no mass above n_min={n_min}"},
        )
    grid = np.unique(np.geomspace(n_min, hi, 40).astype(np.int64))
    sorted_samples = np.sort(samples)
    survival = 1.0 - np.searchsorted(sorted_samples, grid, side="left") / samples.size
    keep = survival > 0
    slope, se = fit_loglog_slope(grid[keep], survival[keep])
    ok = None
    if expected is not None:
        ok = abs(slope - expected) <= tol
    return StatReport(
        name="cascade_tail_fit",
        estimate=slope,
        ci_low=slope - 1.96 * se,
        ci_high=slope + 1.96 * se,
        n_samples=int(samples.size),
        verdict=_verdict(ok),
        details={
            "n_min": n_min,
            "grid_max": hi,
            "expected": expected,
            "tol": tol,
        },
    )

# ---------------------------------------------------------------------------
# weighted-exponential law of large numbers

def exp_lln_check(
    weight_rule: str,
    n: int,
    rng: RngStream | None,
    band=(0.99, 1.01),
    exponentials=None,
) -> StatReport:
    """Ratio (sum of Exp(c_k)) / (sum of c_k) with c_k = sqrt(pi)/sqrt(k):
    decreasing weights with divergent sum, so the ratio tends to 1.

    ``exponentials`` overrides the raw Exp(1) draws for fixtures."""
    if weight_rule != "inverse-sqrt":
        raise ValueError(f"unknown weight rule {weight_rule!r}")
    if n < 1:
        raise ValueError("n must be >= 1")
    c = math.sqrt(math.pi) / np.sqrt(np.arange(1, n + 1, dtype=float))
    if exponentials is None:
        draws = rng.generator().exponential(1.0, size=n)
    else:
        draws = np.asarray(exponentials, dtype=float)
        if draws.shape != (n,):
            raise ValueError("exponentials must have shape (n,)")
    total_c = float(c.sum())
    ratio = float((c * draws).sum() / total_c)
    sd = float(math.sqrt((c * c).sum()) / total_c)
    return StatReport(
        name="exp_lln_check",
        estimate=ratio,
        ci_low=ratio - 1.96 * sd,
        ci_high=ratio + 1.96 * sd,
        n_samples=n,
        verdict=_verdict(band[0] <= ratio <= band[1]),
        details={"band": list(band), "analytic_sd": sd, "weight_rule": weight_rule},
    )

# ---------------------------------------------------------------------------
# volume deviations

def volume_deviation_scan(
    times,
    counts,
    R: float,
    delta: float,
    lam: float = 1.0,
) -> StatReport:
    """Scan time-indexed counts in B(R) for the abnormally-empty event
    count < lam*pi*R^2 - R^(1+delta); reports violations and the worst
    margin (count minus threshold)."""
    times = np.asarray(times, dtype=float)
    counts = np.asarray(counts, dtype=float)
    if counts.ndim == 1:
        counts = counts[None, :]
    if counts.shape[1] != times.size:
        raise ValueError("counts must have one column per snapshot time")
    threshold = lam * math.pi * R * R - R ** (1.0 + delta)
    margins = counts - threshold
    worst = float(margins.min())
    viol = margins < 0
    viol_times = times[np.any(viol, axis=0)]
    return StatReport(
        name="volume_deviation_scan",
        estimate=worst,
        ci_low=worst,
        ci_high=worst,
        n_samples=int(counts.size),
        verdict=_verdict(not bool(viol.any())),
        details={
            "R": R,
            "delta": delta,
            "lam": lam,
            "threshold": threshold,
            "n_violations": int(viol.sum()),
            "violation_times": viol_times.tolist(),
        },
    )

def free_field_snapshots(
    lam: float,
    R: float,
    times,
    replicas: int,
    rng: RngStream,
    trunc_tol: float = 1e-3,
) -> tuple[np.ndarray, np.ndarray]:
    """Counts in B(R) at the given times for freely evolving PPP(lam)
    fields; returns (times, counts[replica, time])."""
    times = np.sort(np.asarray(times, dtype=float))
    horizon = float(times[-1]) if times.size else 0.0
    trunc = max(
        choose_sim_radius(max(lam, 1e-9), horizon, max(R, _MIN_RADIUS), trunc_tol), R + 1.0
    )
    seeds = _seeds_for(rng.substream("fields"), replicas)
    counts = _kernels.free_field_ball_counts(replicas, lam, R, trunc, times, seeds)
    return times, counts
