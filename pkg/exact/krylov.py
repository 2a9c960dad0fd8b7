"""
Krylov (Lanczos) exponential propagation for piecewise-constant H(t).

Each step builds an orthonormal Krylov basis with full reorthogonalization,
exponentiates the small tridiagonal matrix and estimates the local error from
the last Krylov coefficient. A step whose error estimate exceeds the
tolerance at the maximal Krylov dimension is rejected and split in halves.
"""

import logging
import math
import warnings
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.linalg import expm

from hilbert.operators import SectorOperator
from models.lattice_models import CouplingMatrices
from models.state_models import SectorState
from utils.exceptions import ConvergenceError, PhysicsWarning

MAX_HALVINGS = 12


def lanczos_expm(matvec: Callable[[np.ndarray], np.ndarray], psi: np.ndarray, dt: float,
                 krylov_dim: int = 30, tol: float = 1e-12
                 ) -> Tuple[np.ndarray, float, int, float]:
    """exp(-i dt H) psi with an adaptive Krylov dimension

    Returns (new vector, error estimate, dimension used, largest |Ritz value|).
    """
    n = psi.shape[0]
    beta0 = np.linalg.norm(psi)
    if beta0 == 0.0:
        return psi.copy(), 0.0, 0, 0.0

    m_max = max(1, min(krylov_dim, n))
    V = np.zeros((m_max + 1, n), dtype=np.complex128)
    alpha = np.zeros(m_max)
    beta = np.zeros(m_max)
    V[0] = psi / beta0

    err = np.inf
    coeffs = np.ones(1, dtype=np.complex128)
    ritz_max = 0.0
    m_used = 0
    for j in range(m_max):
        w = matvec(V[j])
        alpha[j] = np.real(np.vdot(V[j], w))
        # Full reorthogonalization (twice is enough)
        for _ in range(2):
            w -= V[: j + 1].T @ (V[: j + 1].conj() @ w)
        b = np.linalg.norm(w)
        m_used = j + 1

        T = np.diag(alpha[:m_used]) + np.diag(beta[: m_used - 1], 1) + np.diag(beta[: m_used - 1], -1)
        coeffs = expm(-1j * dt * T)[:, 0]
        ritz_max = float(np.max(np.abs(np.linalg.eigvalsh(T))))

        if b < 1e-14 * max(1.0, abs(alpha[j])):
            # Invariant subspace: exact
            err = 0.0
            break
        err = b * abs(coeffs[-1]) * beta0
        if err < tol or j == m_max - 1:
            break
        beta[j] = b
        V[j + 1] = w / b

    new = beta0 * (V[:m_used].T @ coeffs)
    return new, float(err), m_used, ritz_max


def propagate_operator(op: SectorOperator, psi: np.ndarray, t0: float, t1: float, dt: float,
                       light_shift: Optional[Callable[[float], np.ndarray]] = None,
                       krylov_dim: int = 30, tol: float = 1e-12,
                       logger: Optional[logging.Logger] = None) -> np.ndarray:
    """Propagate a raw vector with an existing operator"""
    logger = logger or logging.getLogger(__name__)
    if t1 < t0:
        raise ValueError(f"t1={t1} precedes t0={t0}")
    if t1 == t0:
        return psi.copy()
    if dt <= 0:
        raise ValueError("dt must be positive")

    n_steps = max(1, math.ceil((t1 - t0) / dt - 1e-9))
    h = (t1 - t0) / n_steps
    guard_checked = False
    for step in range(n_steps):
        start = t0 + step * h
        psi = _step(op, psi, start, h, light_shift, krylov_dim, tol, 0, logger)
        if not guard_checked:
            guard_checked = True
            _check_step_size(op, psi, h, light_shift, start, logger)
    return psi


def _step(op, psi, start, h, light_shift, krylov_dim, tol, depth, logger):
    if light_shift is not None:
        op.set_light_shift(light_shift(start + 0.5 * h))
    new, err, m_used, _ = lanczos_expm(op.matvec, psi, h, krylov_dim, tol)
    if err <= tol * max(1.0, np.linalg.norm(psi)) * 10:
        return new
    if depth >= MAX_HALVINGS:
        raise ConvergenceError("Krylov step", m_used, err)
    logger.debug(f"Rejected Krylov step at t={start:.4g} (err {err:.1e}); halving")
    half = 0.5 * h
    psi = _step(op, psi, start, half, light_shift, krylov_dim, tol, depth + 1, logger)
    return _step(op, psi, start + half, half, light_shift, krylov_dim, tol, depth + 1, logger)


def _check_step_size(op, psi, h, light_shift, start, logger):
    if light_shift is not None:
        op.set_light_shift(light_shift(start + 0.5 * h))
    _, _, _, ritz_max = lanczos_expm(op.matvec, psi, h, min(20, op.dim), 1e-6)
    if h * ritz_max >= 1.0:
        msg = f"time step {h:.3g} exceeds 1/||H|| (||H|| ~ {ritz_max:.3g})"
        logger.warning(f"[WARNING] {msg}")
        warnings.warn(msg, PhysicsWarning)


def krylov_propagate(matrices: CouplingMatrices,
                     light_shift: Optional[Callable[[float], np.ndarray]],
                     state: SectorState, t0: float, t1: float, dt: float,
                     krylov_dim: int = 30, tol: float = 1e-12, scale: float = 1.0,
                     logger: Optional[logging.Logger] = None) -> SectorState:
    """State at t1 under H_XY + H_vdW + light_shift(t), piecewise constant over dt"""
    op = SectorOperator(matrices, state.basis, scale=scale, logger=logger)
    psi = propagate_operator(op, state.amplitudes, t0, t1, dt, light_shift, krylov_dim, tol, logger)
    return SectorState(state.basis, psi)
