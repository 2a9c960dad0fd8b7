"""
Luttinger-parameter fits of binned correlation profiles.

    C^x(r) = [A r^{-1/(2K)} + B (-1)^d r^{-(2K + 1/(2K))}] exp(-r / xi)
    C^z(r) = rescale [-(2K / pi^2) r^{-2} + D (-1)^d r^{-2K}]

r is the chord distance and d = d(r) the integer perimeter distance. AFM
x-correlations carry a global (-1)^d, removed before fitting when `stagger`
is set. The envelope is parametrized by inv_xi = 1/xi >= 0 so clean data
can reach xi = infinity.
"""

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from scipy.optimize import OptimizeWarning, curve_fit
from scipy.stats import chi2 as chi2_dist

from lattice.geometry import perimeter_distances
from models.result_models import CorrelationProfile, CutoffRow, CutoffScanResult, FitResult
from utils.exceptions import FitError
from utils.parallel import TaskPool

K_BOUNDS = (0.05, 20.0)
INV_XI_MAX = 5.0
MIN_POINTS_CX = 5
MIN_POINTS_CZ = 4
DEFAULT_TOLERANCE = 0.05


def cx_model(r, d, K, A, B, inv_xi=0.0):
    stagger = np.where(np.asarray(d) % 2 == 0, 1.0, -1.0)
    return (A * r ** (-1.0 / (2.0 * K))
            + B * stagger * r ** (-(2.0 * K + 1.0 / (2.0 * K)))) * np.exp(-r * inv_xi)


def cz_model(r, d, K, D, rescale=1.0):
    stagger = np.where(np.asarray(d) % 2 == 0, 1.0, -1.0)
    return rescale * (-(2.0 * K / math.pi ** 2) * r ** -2.0 + D * stagger * r ** (-2.0 * K))


def integer_perimeter(profile: CorrelationProfile, n_sites: int) -> np.ndarray:
    """d(r) rounded to integers; non-lattice chord distances are rejected"""
    d = perimeter_distances(profile.r, n_sites)
    rounded = np.rint(d)
    if np.any(np.abs(d - rounded) > 1e-6):
        raise FitError("perimeter distance", "chord distances do not map onto integer sites")
    return rounded.astype(int)


@dataclass
class _BootstrapTask:
    channel: str
    n_sites: int
    r_c: float
    stagger: bool
    envelope: bool
    rescale: float
    profile: CorrelationProfile
    seed_sequence: np.random.SeedSequence


def _bootstrap_replica(task: _BootstrapTask) -> float:
    rng = np.random.default_rng(task.seed_sequence)
    p = task.profile
    means = np.array([rng.choice(v, size=len(v), replace=True).mean() for v in p.pair_values])
    resampled = CorrelationProfile(p.r, p.d, means, np.zeros_like(means), p.n_pairs, p.basis,
                                   p.n_samples)
    fitter = LuttingerFitter(envelope=task.envelope, logger=logging.getLogger(__name__))
    try:
        if task.channel == "cx":
            fit = fitter.fit_cx(resampled, task.n_sites, task.r_c, task.stagger)
        else:
            fit = fitter.fit_cz(resampled, task.n_sites, task.r_c, task.rescale)
    except FitError:
        return math.nan
    return fit["K"]


class LuttingerFitter:
    """Weighted nonlinear least squares for the x and z correlation laws"""

    def __init__(self, envelope: bool = True, k_guess: float = 1.0,
                 bootstrap: int = 0, seed: int = 0, workers: int = 1,
                 logger: Optional[logging.Logger] = None):
        self.envelope = envelope
        self.k_guess = k_guess
        self.bootstrap = bootstrap
        self.seed = seed
        self.workers = workers
        self.logger = logger or logging.getLogger(__name__)

    # ------------------------------------------------------------------ helpers

    def _prepare(self, profile: CorrelationProfile, n_sites: int, r_c: float, min_points: int,
                 name: str):
        d = integer_perimeter(profile, n_sites)
        keep = (d >= max(r_c, 1e-9)) & np.isfinite(profile.mean) & (profile.r > 0)
        if int(keep.sum()) < min_points:
            raise FitError(name, f"need >= {min_points} points beyond r_c={r_c}, "
                                 f"have {int(keep.sum())}")
        sigma = profile.stderr[keep]
        weighted = bool(np.all(sigma > 0))
        return profile.r[keep], d[keep], profile.mean[keep], (sigma if weighted else None), keep

    def _run(self, name: str, func: Callable, r, y, sigma, p0, bounds, names: Sequence[str],
             r_c: float, rescale: float = 1.0, free_lower: Sequence[str] = ()) -> FitResult:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", OptimizeWarning)
            try:
                popt, pcov = curve_fit(func, r, y, p0=p0, sigma=sigma, absolute_sigma=sigma is not None,
                                       bounds=bounds, method="trf", maxfev=20000)
            except (RuntimeError, ValueError) as exc:
                raise FitError(name, f"least squares did not converge: {exc}") from exc

        resid = y - func(r, *popt)
        dof = max(len(y) - len(popt), 1)
        if sigma is not None:
            chi2_red = float(np.sum((resid / sigma) ** 2) / dof)
        else:
            chi2_red = float(np.sum(resid ** 2) / dof)
        pcov = np.atleast_2d(pcov)
        errors = np.sqrt(np.abs(np.diag(pcov)))

        at_bound = []
        lower, upper = bounds
        for k, pname in enumerate(names):
            hits_lower = (pname not in free_lower and np.isfinite(lower[k])
                          and abs(popt[k] - lower[k]) < 1e-6 * max(1.0, abs(lower[k])))
            hits_upper = np.isfinite(upper[k]) and abs(popt[k] - upper[k]) < 1e-6 * max(1.0, abs(upper[k]))
            if hits_lower or hits_upper:
                at_bound.append(pname)
        if at_bound:
            self.logger.warning(f"[WARNING] {name}: parameters at bound: {', '.join(at_bound)}")

        params = {pname: float(v) for pname, v in zip(names, popt)}
        fit = FitResult(
            name=name, params=params,
            errors={pname: float(e) for pname, e in zip(names, errors)},
            covariance=pcov, chi2_red=chi2_red, n_points=len(y), r_c=r_c, rescale=rescale,
            weighted=sigma is not None, at_bound=at_bound,
        )
        self.logger.info(f"[FIT] {name}: " + ", ".join(f"{k}={v:.4g}" for k, v in params.items())
                         + f" (chi2_red={chi2_red:.3g}, r_c={r_c})")
        return fit

    def _attach_bootstrap(self, fit: FitResult, channel: str, profile: CorrelationProfile,
                          n_sites: int, r_c: float, stagger: bool, rescale: float):
        if self.bootstrap <= 0 or fit.weighted or profile.pair_values is None:
            return
        children = np.random.SeedSequence(self.seed).spawn(self.bootstrap)
        tasks = [_BootstrapTask(channel, n_sites, r_c, stagger, self.envelope, rescale, profile, c)
                 for c in children]
        values = np.array(TaskPool(self.workers, self.logger).map(_bootstrap_replica, tasks))
        values = values[np.isfinite(values)]
        if len(values) > 1:
            fit.metadata["bootstrap_K_err"] = float(values.std(ddof=1))
            fit.metadata["bootstrap_replicas"] = int(len(values))
            fit.errors["K"] = max(fit.errors["K"], fit.metadata["bootstrap_K_err"])

    # --------------------------------------------------------------- the fits

    def fit_cx(self, profile: CorrelationProfile, n_sites: int, r_c: float = 0.0,
               stagger: bool = False) -> FitResult:
        """K, inv_xi, A, B from x-correlations"""
        r, d, y, sigma, _ = self._prepare(profile, n_sites, r_c, MIN_POINTS_CX, "fit_cx")
        if stagger:
            y = y * np.where(d % 2 == 0, 1.0, -1.0)
        a0 = float(y[0] * r[0] ** (1.0 / (2.0 * self.k_guess)))

        if self.envelope:
            def func(rr, K, A, B, inv_xi):
                return cx_model(rr, d, K, A, B, inv_xi)
            names = ["K", "A", "B", "inv_xi"]
            p0 = [self.k_guess, a0, 0.0, 1e-3]
            bounds = ([K_BOUNDS[0], -np.inf, -np.inf, 0.0], [K_BOUNDS[1], np.inf, np.inf, INV_XI_MAX])
        else:
            def func(rr, K, A, B):
                return cx_model(rr, d, K, A, B)
            names = ["K", "A", "B"]
            p0 = [self.k_guess, a0, 0.0]
            bounds = ([K_BOUNDS[0], -np.inf, -np.inf], [K_BOUNDS[1], np.inf, np.inf])

        fit = self._run("fit_cx", func, r, y, sigma, p0, bounds, names, r_c, free_lower=("inv_xi",))
        inv_xi = fit.params.get("inv_xi", 0.0)
        fit.params["xi"] = 1.0 / inv_xi if inv_xi > 0 else math.inf
        fit.metadata.update({"stagger": stagger, "envelope": self.envelope, "n_sites": n_sites})
        self._attach_bootstrap(fit, "cx", profile, n_sites, r_c, stagger, 1.0)
        return fit

    def fit_cz(self, profile: CorrelationProfile, n_sites: int, r_c: float = 0.0,
               rescale: float = 1.0) -> FitResult:
        """K, D from z-correlations with a fixed global rescale factor"""
        r, d, y, sigma, _ = self._prepare(profile, n_sites, r_c, MIN_POINTS_CZ, "fit_cz")

        def func(rr, K, D):
            return cz_model(rr, d, K, D, rescale)

        fit = self._run("fit_cz", func, r, y, sigma, [self.k_guess, 0.0],
                        ([K_BOUNDS[0], -np.inf], [K_BOUNDS[1], np.inf]), ["K", "D"], r_c,
                        rescale=rescale)
        fit.metadata["n_sites"] = n_sites
        self._attach_bootstrap(fit, "cz", profile, n_sites, r_c, False, rescale)
        return fit

    def cutoff_scan(self, profile: CorrelationProfile, n_sites: int, channel: str,
                    cutoffs: Sequence[float] = (0, 1, 2, 3, 4, 5), stagger: bool = False,
                    rescale: float = 1.0, tolerance: float = DEFAULT_TOLERANCE) -> CutoffScanResult:
        if channel == "cx":
            def fitter(p, r_c):
                return self.fit_cx(p, n_sites, r_c, stagger)
        elif channel == "cz":
            def fitter(p, r_c):
                return self.fit_cz(p, n_sites, r_c, rescale)
        else:
            raise ValueError(f"unknown channel '{channel}'")
        return cutoff_scan(profile, fitter, cutoffs, tolerance, channel, self.logger)


def cutoff_scan(profile: CorrelationProfile, fitter: Callable[[CorrelationProfile, float], FitResult],
                cutoffs: Sequence[float], tolerance: float = DEFAULT_TOLERANCE,
                channel: str = "", logger: Optional[logging.Logger] = None) -> CutoffScanResult:
    """Smallest r_c whose K agrees with the next cutoff that drops points

    Cutoffs retaining the same point set give the same fit, so each r_c is
    compared with the next larger cutoff that retains fewer points.
    """
    logger = logger or logging.getLogger(__name__)
    rows: List[CutoffRow] = []
    fits: Dict[float, FitResult] = {}
    for r_c in sorted(cutoffs):
        try:
            fit = fitter(profile, r_c)
        except FitError as exc:
            rows.append(CutoffRow(r_c, math.nan, math.nan, 0, success=False, message=str(exc)))
            continue
        fits[r_c] = fit
        rows.append(CutoffRow(r_c, fit["K"], fit.error("K"), fit.n_points))

    good = [row for row in rows if row.success]
    if len(good) < 2:
        logger.warning(f"[WARNING] cutoff scan {channel}: fewer than two successful fits")
    selected = None
    for i, row in enumerate(good):
        nxt = next((other for other in good[i + 1:] if other.n_points != row.n_points), None)
        if nxt is not None and abs(row.K - nxt.K) < tolerance:
            selected = row.r_c
            break
    if selected is None:
        logger.warning(f"[WARNING] cutoff scan {channel}: no plateau within {tolerance}")
    else:
        logger.info(f"[FIT] cutoff scan {channel}: selected r_c={selected}")
    return CutoffScanResult(channel=channel, rows=rows, selected_rc=selected, tolerance=tolerance,
                            selected_fit=fits.get(selected) if selected is not None else None)


def fit_power_law_tail(r: np.ndarray, y: np.ndarray, stderr: Optional[np.ndarray] = None,
                       r_min: Optional[float] = None, significance: float = 0.05,
                       logger: Optional[logging.Logger] = None) -> FitResult:
    """Single power law |y| = a r^slope; slope from the tail, chi-square over all points

    The tail is r >= r_min (default: the last decade). The full-range fit of a
    single power law is tested with a chi-square test at `significance`.
    """
    logger = logger or logging.getLogger(__name__)
    r = np.asarray(r, dtype=float)
    y = np.abs(np.asarray(y, dtype=float))
    ok = (r > 0) & (y > 0) & np.isfinite(y)
    r, y = r[ok], y[ok]
    sig = None if stderr is None else np.asarray(stderr, dtype=float)[ok]
    if len(r) < 3:
        raise FitError("power law tail", "need at least three positive points")
    if r_min is None:
        r_min = r.max() / 10.0
    tail = r >= r_min
    if tail.sum() < 2:
        raise FitError("power law tail", f"fewer than two points beyond r_min={r_min}")

    slope, intercept = np.polyfit(np.log(r[tail]), np.log(y[tail]), 1, cov=False)
    if tail.sum() > 2:
        _, cov = np.polyfit(np.log(r[tail]), np.log(y[tail]), 1, cov=True)
        slope_err = float(np.sqrt(cov[0, 0]))
    else:
        slope_err = math.nan

    # Full-range single power law in log space; relative errors from stderr
    log_sigma = None
    if sig is not None and np.all(sig > 0):
        log_sigma = sig / y
    coeffs = np.polyfit(np.log(r), np.log(y), 1, w=None if log_sigma is None else 1.0 / log_sigma)
    resid = np.log(y) - np.polyval(coeffs, np.log(r))
    dof = max(len(r) - 2, 1)
    if log_sigma is not None:
        chi2 = float(np.sum((resid / log_sigma) ** 2))
        p_value = float(chi2_dist.sf(chi2, dof))
    else:
        chi2 = float(np.sum(resid ** 2))
        p_value = math.nan
    rejected = bool(np.isfinite(p_value) and p_value < significance)
    logger.info(f"[FIT] power law tail: slope={slope:.3f} +- {slope_err:.3f}, "
                f"single-law p={p_value:.3g}")
    return FitResult(
        name="power_law_tail",
        params={"slope": float(slope), "amplitude": float(np.exp(intercept)),
                "global_slope": float(coeffs[0])},
        errors={"slope": slope_err},
        covariance=np.array([[slope_err ** 2]]),
        chi2_red=chi2 / dof, n_points=int(len(r)), r_c=float(r_min), weighted=log_sigma is not None,
        metadata={"p_value": p_value, "rejected_single_power_law": rejected,
                  "significance": significance},
    )
