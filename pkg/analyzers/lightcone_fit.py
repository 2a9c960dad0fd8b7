"""
Light-cone velocity from a quench grid C^z(d, t).

The front at distance d is detected as the first local maximum of C^z(d, .)
above the detection threshold. Its arrival time t*(d) is where the rising
edge first crosses front_fraction of that maximum (half-maximum by default),
linearly interpolated between samples.
The group velocity follows from d = d0 + 2 v_g t*.
"""

import logging
from typing import List, Optional, Tuple

import numpy as np
from scipy.optimize import curve_fit

from models.protocol_models import QuenchGrid
from models.result_models import FitResult
from utils.exceptions import FitError

MIN_FRONT_POINTS = 3
FRONT_FRACTION = 0.5


def first_peak(values: np.ndarray, threshold: float) -> Optional[int]:
    """Index of the first local maximum above threshold"""
    for k in range(1, len(values)):
        if values[k] <= threshold:
            continue
        if k == len(values) - 1 or values[k] >= values[k + 1]:
            if values[k] >= values[k - 1]:
                return k
    return None


def edge_crossing(times: np.ndarray, values: np.ndarray, k_peak: int, level: float) -> float:
    """Time at which the rise towards values[k_peak] first passes level"""
    k = k_peak
    while k > 0 and values[k - 1] >= level:
        k -= 1
    if k == 0:
        return float(times[0])
    lo, hi = values[k - 1], values[k]
    weight = (level - lo) / (hi - lo) if hi > lo else 1.0
    return float(times[k - 1] + weight * (times[k] - times[k - 1]))


def front_arrival(times: np.ndarray, values: np.ndarray, stderr: Optional[np.ndarray] = None,
                  n_sigma: float = 3.0, relative_threshold: float = 0.2,
                  front_fraction: float = FRONT_FRACTION) -> Optional[float]:
    """Rising-edge crossing of front_fraction times the first detected maximum"""
    if not 0.0 < front_fraction <= 1.0:
        raise ValueError(f"front_fraction must be in (0, 1], got {front_fraction}")
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    peak = float(np.nanmax(values)) if values.size else 0.0
    if not peak > 0:
        return None
    noise = float(np.median(stderr)) if stderr is not None and np.any(stderr > 0) else 0.0
    threshold = max(n_sigma * noise, relative_threshold * peak)
    k_peak = first_peak(values, threshold)
    if k_peak is None:
        return None
    return edge_crossing(times, values, k_peak, front_fraction * values[k_peak])


def fit_lightcone(grid: QuenchGrid, d_min: int = 2, d_max: Optional[int] = None,
                  j_xy: Optional[float] = None, n_sigma: float = 3.0,
                  relative_threshold: float = 0.2,
                  front_fraction: float = FRONT_FRACTION,
                  logger: Optional[logging.Logger] = None) -> FitResult:
    """v_g (sites per time unit) from the rising edge of positive correlations"""
    logger = logger or logging.getLogger(__name__)
    d_all = np.asarray(grid.d, dtype=float)
    if d_max is None:
        d_max = int(d_all.max())

    fronts: List[Tuple[float, float]] = []
    for k, d in enumerate(d_all):
        if d < d_min or d > d_max:
            continue
        err = grid.stderr[:, k] if grid.stderr is not None else None
        t_star = front_arrival(grid.times, grid.values[:, k], err, n_sigma, relative_threshold,
                               front_fraction)
        if t_star is None:
            logger.debug(f"No front detected at d={d:g}")
            continue
        fronts.append((d, t_star))

    if len(fronts) < MIN_FRONT_POINTS:
        raise FitError("fit_lightcone", f"front detected at {len(fronts)} distances, "
                                        f"need {MIN_FRONT_POINTS}")
    d_front = np.array([f[0] for f in fronts])
    t_front = np.array([f[1] for f in fronts])

    def line(t, d0, v):
        return d0 + 2.0 * v * t

    slope0 = np.polyfit(t_front, d_front, 1)
    try:
        popt, pcov = curve_fit(line, t_front, d_front, p0=[slope0[1], slope0[0] / 2.0])
    except (RuntimeError, ValueError) as exc:
        raise FitError("fit_lightcone", f"linear fit failed: {exc}") from exc
    resid = d_front - line(t_front, *popt)
    dof = max(len(d_front) - 2, 1)
    errors = np.sqrt(np.abs(np.diag(pcov)))
    v_g = float(popt[1])
    params = {"d0": float(popt[0]), "vg": v_g}
    if j_xy:
        params["vg_over_aJ"] = v_g / j_xy
    logger.info(f"[FIT] light cone: v_g={v_g:.4g} sites/us"
                + (f" = {v_g / j_xy:.3f} aJ" if j_xy else "") + f" from {len(d_front)} distances")
    return FitResult(
        name="fit_lightcone", params=params,
        errors={"d0": float(errors[0]), "vg": float(errors[1]),
                **({"vg_over_aJ": float(errors[1]) / j_xy} if j_xy else {})},
        covariance=pcov, chi2_red=float(np.sum(resid ** 2) / dof), n_points=len(d_front),
        metadata={"front_d": d_front.tolist(), "front_t": t_front.tolist(), "d_min": d_min,
                  "n_sigma": n_sigma, "relative_threshold": relative_threshold,
                  "front_fraction": front_fraction},
    )
