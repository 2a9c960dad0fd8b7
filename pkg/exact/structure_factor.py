"""
Dynamical structure factor S(q, omega) of an extremal state.

S(q, w) = sum_n |<n| S^z_q |0>|^2 delta(w - (E_n - E_0)),
S^z_q = N^{-1/2} sum_j e^{i q j} sz_j over active sites.

Small sectors use the exact spectrum. Larger ones use a Lanczos pole
expansion started from S^z_q|0>, which keeps the sum rule exactly. Poles are
binned into a frequency histogram (density = weight / bin width) or
Lorentzian-broadened, then normalized to the peak value.
"""

import logging
from typing import Optional, Union

import numpy as np

from hilbert.operators import SectorOperator
from models.lattice_models import ChainGeometry, CouplingMatrices
from models.state_models import DsfGrid, LanczosResult, SpectrumResult, Which


def _sz_q_vector(basis, ground: np.ndarray, q: float, n_sites: int) -> np.ndarray:
    active = basis.active_sites
    signs = 2.0 * ((basis.codes[:, None] >> np.arange(basis.n_active)[None, :]) & 1) - 1.0
    phases = np.exp(1j * q * active.astype(float)) / np.sqrt(n_sites)
    return (signs @ phases) * ground


def _lanczos_poles(op: SectorOperator, phi: np.ndarray, e0: float, n_steps: int):
    norm2 = float(np.real(np.vdot(phi, phi)))
    if norm2 < 1e-300:
        return np.zeros(0), np.zeros(0)
    m_max = max(1, min(n_steps, op.dim))
    V = np.zeros((m_max, phi.shape[0]), dtype=np.complex128)
    alpha = np.zeros(m_max)
    beta = np.zeros(m_max)
    V[0] = phi / np.sqrt(norm2)
    m = m_max
    for j in range(m_max):
        w = op.matvec(V[j])
        alpha[j] = np.real(np.vdot(V[j], w))
        for _ in range(2):
            w -= V[: j + 1].T @ (V[: j + 1].conj() @ w)
        b = np.linalg.norm(w)
        if j == m_max - 1 or b < 1e-12 * max(1.0, abs(alpha[j])):
            m = j + 1
            break
        beta[j] = b
        V[j + 1] = w / b
    T = np.diag(alpha[:m]) + np.diag(beta[: m - 1], 1) + np.diag(beta[: m - 1], -1)
    theta, U = np.linalg.eigh(T)
    return theta - e0, norm2 * np.abs(U[0, :]) ** 2


def _exact_poles(spectrum: SpectrumResult, phi: np.ndarray):
    overlaps = spectrum.states.T @ phi
    return spectrum.energies - spectrum.energies[0], np.abs(overlaps) ** 2


def dynamical_structure_factor(matrices: CouplingMatrices, geom: ChainGeometry,
                               ground: Union[LanczosResult, SpectrumResult],
                               eta: float = 0.0, n_omega: int = 200,
                               omega_max: Optional[float] = None, lanczos_steps: int = 200,
                               logger: Optional[logging.Logger] = None) -> DsfGrid:
    """S(q, omega) for q = 2 pi n / N, n = 0..N/2"""
    logger = logger or logging.getLogger(__name__)
    n_sites = geom.n_sites
    qs = 2.0 * np.pi * np.arange(n_sites // 2 + 1) / n_sites

    if isinstance(ground, SpectrumResult):
        basis = ground.basis
        scale = ground.scale
        psi0 = ground.states[:, 0].astype(np.complex128)
        method = "exact"
        op = None
        e0 = float(ground.energies[0])
    else:
        basis = ground.state.basis
        scale = ground.which.scale if isinstance(ground.which, Which) else 1.0
        psi0 = ground.state.amplitudes
        method = "lanczos"
        op = SectorOperator(matrices, basis, scale=scale, logger=logger)
        e0 = scale * ground.energy

    poles = []
    for q in qs:
        phi = _sz_q_vector(basis, psi0, q, n_sites)
        if method == "exact":
            omega_n, weight_n = _exact_poles(ground, phi)
        else:
            omega_n, weight_n = _lanczos_poles(op, phi, e0, lanczos_steps)
        poles.append({"omega": np.clip(omega_n, 0.0, None), "weight": weight_n})

    static = np.array([p["weight"].sum() for p in poles])
    if omega_max is None:
        tops = [p["omega"][p["weight"] > 1e-12 * max(static.max(), 1e-300)].max(initial=0.0)
                for p in poles]
        omega_max = 1.05 * max(max(tops), 1e-6)
    edges = np.linspace(0.0, omega_max, n_omega + 1)
    centers = 0.5 * (edges[1:] + edges[:-1])
    width = edges[1] - edges[0]

    intensity = np.zeros((len(qs), n_omega))
    peak_omega = np.zeros(len(qs))
    for iq, p in enumerate(poles):
        omega_n, weight_n = p["omega"], p["weight"]
        if eta > 0.0:
            intensity[iq] = np.sum(
                weight_n[None, :] * (eta / np.pi)
                / ((centers[:, None] - omega_n[None, :]) ** 2 + eta ** 2), axis=1)
        else:
            # Poles beyond the window go to the last bin so every column keeps its sum rule
            idx = np.clip(np.searchsorted(edges, omega_n, side="right") - 1, 0, n_omega - 1)
            np.add.at(intensity[iq], idx, weight_n / width)
        finite = omega_n > 1e-9
        if np.any(finite & (weight_n > 0)):
            candidates = np.where(finite, weight_n, -1.0)
            peak_omega[iq] = omega_n[int(np.argmax(candidates))]

    norm_factor = float(intensity.max()) if intensity.size and intensity.max() > 0 else 1.0
    logger.info(f"[SUCCESS] Structure factor ({method}): {len(qs)} wavevectors, "
                f"{n_omega} frequency bins, peak {norm_factor:.4g}")
    return DsfGrid(
        q=qs, omega=centers, intensity=intensity / norm_factor, eta=eta,
        norm_factor=norm_factor, static=static, omega_edges=edges, peak_omega=peak_omega,
        method=method, poles=poles,
    )


def static_structure_factor(ground_state: np.ndarray, basis, q: float, n_sites: int) -> float:
    """<0| S^z_{-q} S^z_q |0> evaluated directly"""
    phi = _sz_q_vector(basis, ground_state.astype(np.complex128), q, n_sites)
    return float(np.real(np.vdot(phi, phi)))


def dsf_ridge_velocity(grid: DsfGrid, n_low: int = 2) -> float:
    """Slope of the dominant-pole ridge omega(q) through the origin at the lowest q"""
    q = grid.q[1: n_low + 1]
    w = grid.peak_omega[1: n_low + 1]
    mask = w > 0
    if not np.any(mask):
        return float("nan")
    q, w = q[mask], w[mask]
    return float(np.sum(q * w) / np.sum(q * q))
