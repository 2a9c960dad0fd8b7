"""
Friedel oscillations of the z-magnetization on an open chain of N spins.

    <sz_j> = background + A cos(2 k_F j) [(N/pi) cos(pi j / N)]^{-K}

with j measured from the chain center (phase fixed to zero by reflection
symmetry) and 2 k_F = pi (1 - M_z / N).
"""

import logging
import math
from typing import Dict, Optional

import numpy as np
from scipy.optimize import curve_fit

from models.result_models import FftResult, FitResult
from utils.exceptions import FitError

logger = logging.getLogger(__name__)


def chain_coordinates(n_spins: int) -> np.ndarray:
    """j = k - (N-1)/2 for k = 0..N-1"""
    return np.arange(n_spins) - (n_spins - 1) / 2.0


def friedel_wavevector(mz: int, n_spins: int) -> float:
    """2 k_F = pi (1 - M_z / N)"""
    if abs(mz) > n_spins:
        raise ValueError(f"|M_z|={abs(mz)} exceeds N={n_spins}")
    return math.pi * (1.0 - mz / n_spins)


def friedel_fft(profile: np.ndarray, flat_ratio: float = 1.5,
                log: Optional[logging.Logger] = None) -> FftResult:
    """|sum_j sz_j e^{-i q j}| on q = 2 pi n / N; peak searched over 0 < q <= pi"""
    log = log or logger
    profile = np.asarray(profile, dtype=float)
    n_spins = len(profile)
    if n_spins < 3:
        raise ValueError("profile needs at least three sites")
    spectrum = np.abs(np.fft.fft(profile))
    n = np.arange(n_spins // 2 + 1)
    amplitude = spectrum[: n_spins // 2 + 1]
    search = amplitude[1:]
    peak_n = int(np.argmax(search)) + 1
    noise_floor = float(np.median(search))
    flat = bool(amplitude[peak_n] < 1e-12 or amplitude[peak_n] <= flat_ratio * noise_floor)
    if flat:
        log.warning(f"[WARNING] Friedel spectrum is flat (peak {amplitude[peak_n]:.3g}, "
                    f"median {noise_floor:.3g})")
    return FftResult(n=n, q=2.0 * np.pi * n / n_spins, amplitude=amplitude, peak_n=peak_n,
                     peak_q=2.0 * np.pi * peak_n / n_spins, flat=flat, noise_floor=noise_floor)


def friedel_model(j, n_spins, background, A, K, kf2):
    envelope = ((n_spins / np.pi) * np.cos(np.pi * j / n_spins)) ** (-K)
    return background + A * np.cos(kf2 * j) * envelope


def fit_friedel(profile: np.ndarray, n_spins: int, mz: int, stderr: Optional[np.ndarray] = None,
                pin_wavevector: bool = True, background: Optional[float] = None,
                k_guess: float = 1.0, log: Optional[logging.Logger] = None) -> FitResult:
    """A, K (and 2k_F when free) from a per-site magnetization profile

    `background` defaults to M_z/N; pass 0 for a PBC-subtracted signal.
    """
    log = log or logger
    y = np.asarray(profile, dtype=float)
    if len(y) != n_spins:
        raise FitError("fit_friedel", f"profile length {len(y)} does not match N={n_spins}")
    if n_spins % 2 == 0:
        raise FitError("fit_friedel", "open chain needs an odd number of spins")
    if background is None:
        background = mz / n_spins
    j = chain_coordinates(n_spins)
    kf2_eq = friedel_wavevector(mz, n_spins)
    center = n_spins // 2
    a0 = float((y[center] - background) * (n_spins / math.pi) ** k_guess)
    if a0 == 0.0:
        a0 = 0.1

    sigma = None
    if stderr is not None and np.all(np.asarray(stderr) > 0):
        sigma = np.asarray(stderr, dtype=float)

    if pin_wavevector:
        def func(jj, A, K):
            return friedel_model(jj, n_spins, background, A, K, kf2_eq)
        names = ["A", "K"]
        p0 = [a0, k_guess]
        bounds = ([-np.inf, 0.01], [np.inf, 10.0])
    else:
        kf2_start = friedel_fft(y - background, log=log).peak_q

        def func(jj, A, K, kf2):
            return friedel_model(jj, n_spins, background, A, K, kf2)
        names = ["A", "K", "kF2"]
        p0 = [a0, k_guess, kf2_start]
        bounds = ([-np.inf, 0.01, 0.0], [np.inf, 10.0, 2.0 * np.pi])

    try:
        popt, pcov = curve_fit(func, j, y, p0=p0, sigma=sigma, absolute_sigma=sigma is not None,
                               bounds=bounds, method="trf", maxfev=20000)
    except (RuntimeError, ValueError) as exc:
        raise FitError("fit_friedel", f"least squares did not converge: {exc}") from exc

    resid = y - func(j, *popt)
    dof = max(n_spins - len(popt), 1)
    chi2_red = float(np.sum((resid / sigma) ** 2 if sigma is not None else resid ** 2) / dof)
    errors = np.sqrt(np.abs(np.diag(np.atleast_2d(pcov))))
    params = {name: float(v) for name, v in zip(names, popt)}
    if pin_wavevector:
        params["kF2"] = kf2_eq
    log.info(f"[FIT] fit_friedel M_z={mz}: " + ", ".join(f"{k}={v:.4g}" for k, v in params.items()))
    return FitResult(
        name="fit_friedel", params=params,
        errors={name: float(e) for name, e in zip(names, errors)},
        covariance=np.atleast_2d(pcov), chi2_red=chi2_red, n_points=n_spins,
        weighted=sigma is not None,
        metadata={"mz": mz, "n_spins": n_spins, "pinned": pin_wavevector,
                  "background": background, "kF2_expected": kf2_eq},
    )


def wavevector_slope(kf2_by_mz: Dict[int, float], n_spins: int) -> FitResult:
    """Linear regression of fitted 2 k_F against M_z (expected slope -pi/N)"""
    if len(kf2_by_mz) < 2:
        raise FitError("wavevector slope", "need at least two sectors")
    mz = np.array(sorted(kf2_by_mz), dtype=float)
    kf2 = np.array([kf2_by_mz[m] for m in sorted(kf2_by_mz)])
    if len(mz) > 2:
        coeffs, cov = np.polyfit(mz, kf2, 1, cov=True)
        slope_err = float(np.sqrt(cov[0, 0]))
    else:
        coeffs = np.polyfit(mz, kf2, 1)
        cov = np.zeros((2, 2))
        slope_err = 0.0
    expected = -math.pi / n_spins
    return FitResult(
        name="wavevector_slope",
        params={"slope": float(coeffs[0]), "intercept": float(coeffs[1])},
        errors={"slope": slope_err},
        covariance=np.asarray(cov), chi2_red=0.0, n_points=len(mz),
        metadata={"expected_slope": expected,
                  "relative_deviation": abs(coeffs[0] - expected) / abs(expected)},
    )
