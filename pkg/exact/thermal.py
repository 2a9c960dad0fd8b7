"""
Gibbs states at small N, averaged over i.i.d. hole realizations.

With no transverse field the Hamiltonian is block diagonal in M_z and the
density matrix is assembled sector by sector. A transverse field h sum_i sx_i
mixes sectors, so the full 2^M space over active sites is diagonalized.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from hilbert.basis import enumerate_sector
from hilbert.operators import SectorOperator
from lattice.couplings import build_couplings
from lattice.geometry import sample_holes
from models.lattice_models import ChainGeometry, CouplingModel
from models.state_models import ThermalObservables
from utils.exceptions import CapacityError
from utils.parallel import TaskPool

MAX_THERMAL_SITES = 12


@dataclass
class _ThermalTask:
    geom: ChainGeometry
    model: CouplingModel
    temperature: float
    transverse_field: float
    hole_density: float
    seed_sequence: np.random.SeedSequence


def _flip_trace(rho: np.ndarray, codes: np.ndarray, ranks_of, mask: int, both_differ: bool) -> float:
    """Tr(rho P) for the permutation P: c -> c ^ mask"""
    flipped = codes ^ mask
    if both_differ:
        bits = codes & mask
        valid = (bits != 0) & (bits != mask)
    else:
        valid = np.ones(codes.shape[0], dtype=bool)
    if not np.any(valid):
        return 0.0
    rows = np.nonzero(valid)[0]
    cols = ranks_of(flipped[valid])
    return float(np.real(np.sum(rho[rows, cols])))


def _spin_signs(codes: np.ndarray, n_bits: int) -> np.ndarray:
    return (2 * ((codes[:, None] >> np.arange(n_bits)[None, :]) & 1) - 1).astype(float)


def _gibbs_blocks(geom: ChainGeometry, model: CouplingModel, temperature: float,
                  transverse_field: float) -> List[Tuple[np.ndarray, np.ndarray, object]]:
    """List of (rho block, codes, rank function), normalized jointly"""
    matrices = build_couplings(geom, model)
    active = geom.active_sites()
    n_bits = len(active)
    scale = model.sign.scale
    blocks = []

    if transverse_field == 0.0:
        spectra = []
        for n_up in range(n_bits + 1):
            basis = enumerate_sector(geom.n_sites, n_up, active)
            op = SectorOperator(matrices, basis, scale=scale)
            energies, vectors = np.linalg.eigh(op.to_dense())
            spectra.append((energies, vectors, basis))
        e_min = min(e[0] for e, _, _ in spectra)
        z = sum(np.exp(-(e - e_min) / temperature).sum() for e, _, _ in spectra)
        for energies, vectors, basis in spectra:
            w = np.exp(-(energies - e_min) / temperature) / z
            rho = (vectors * w[None, :]) @ vectors.T
            blocks.append((rho, basis.codes, basis.rank_codes))
        return blocks

    dim = 1 << n_bits
    hamiltonian = np.zeros((dim, dim))
    for n_up in range(n_bits + 1):
        basis = enumerate_sector(geom.n_sites, n_up, active)
        block = SectorOperator(matrices, basis, scale=scale).to_dense()
        hamiltonian[np.ix_(basis.codes, basis.codes)] = block
    codes = np.arange(dim, dtype=np.int64)
    for b in range(n_bits):
        hamiltonian[codes ^ (1 << b), codes] += scale * transverse_field
    energies, vectors = np.linalg.eigh(hamiltonian)
    w = np.exp(-(energies - energies[0]) / temperature)
    w /= w.sum()
    rho = (vectors * w[None, :]) @ vectors.T
    blocks.append((rho, codes, lambda c: np.asarray(c, dtype=np.int64)))
    return blocks


def _realization(task: _ThermalTask):
    rng = np.random.default_rng(task.seed_sequence)
    geom = sample_holes(task.geom, task.hole_density, rng)
    active = geom.active_sites()
    n_bits = len(active)
    blocks = _gibbs_blocks(geom, task.model, task.temperature, task.transverse_field)
    full_space = task.transverse_field != 0.0

    sz = np.zeros(n_bits)
    zz = np.zeros((n_bits, n_bits))
    sx = np.zeros(n_bits)
    xx = np.zeros((n_bits, n_bits))
    for rho, codes, ranks_of in blocks:
        diag = np.real(np.diag(rho))
        signs = _spin_signs(codes, n_bits)
        sz += diag @ signs
        zz += (signs * diag[:, None]).T @ signs
        for p in range(n_bits):
            if full_space:
                sx[p] += _flip_trace(rho, codes, ranks_of, 1 << p, both_differ=False)
            for q in range(p + 1, n_bits):
                xx[p, q] += _flip_trace(rho, codes, ranks_of, (1 << p) | (1 << q),
                                        both_differ=not full_space)
    xx = xx + xx.T
    np.fill_diagonal(xx, 1.0)
    np.fill_diagonal(zz, 1.0)

    n = geom.n_sites
    out_sz = np.full(n, np.nan)
    out_cx = np.full((n, n), np.nan)
    out_cz = np.full((n, n), np.nan)
    idx = np.array(active, dtype=np.int64)
    out_sz[idx] = sz
    out_cx[np.ix_(idx, idx)] = xx - np.outer(sx, sx)
    out_cz[np.ix_(idx, idx)] = zz - np.outer(sz, sz)
    return out_sz, out_cx, out_cz


def _mean_and_error(samples: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    counts = np.sum(np.isfinite(samples), axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = np.nanmean(samples, axis=0)
        if samples.shape[0] > 1:
            err = np.nanstd(samples, axis=0, ddof=1) / np.sqrt(counts)
        else:
            err = np.zeros_like(mean)
    return mean, np.where(counts > 1, err, 0.0)


def thermal_observables(geom: ChainGeometry, model: CouplingModel, temperature: float,
                        transverse_field: float = 0.0, hole_density: float = 0.0,
                        n_realizations: int = 1, seed: int = 0, workers: int = 1,
                        logger: Optional[logging.Logger] = None) -> ThermalObservables:
    """Gibbs <sz>, C^x and C^z at temperature T (units of the Hamiltonian)"""
    logger = logger or logging.getLogger(__name__)
    if temperature <= 0:
        raise ValueError(f"temperature must be > 0, got {temperature}")
    if transverse_field < 0:
        raise ValueError("transverse field must be >= 0")
    if geom.n_active > MAX_THERMAL_SITES:
        raise CapacityError("thermal full-space diagonalization over sites",
                            geom.n_active, MAX_THERMAL_SITES, module="exact")
    if hole_density == 0.0:
        n_realizations = 1

    children = np.random.SeedSequence(seed).spawn(n_realizations)
    tasks = [_ThermalTask(geom, model, temperature, transverse_field, hole_density, child)
             for child in children]
    results = TaskPool(workers, logger).map(_realization, tasks)

    sz_all = np.stack([r[0] for r in results])
    cx_all = np.stack([r[1] for r in results])
    cz_all = np.stack([r[2] for r in results])
    sz, sz_err = _mean_and_error(sz_all)
    cx, cx_err = _mean_and_error(cx_all)
    cz, cz_err = _mean_and_error(cz_all)
    logger.info(f"[SUCCESS] Thermal averages at T={temperature:.4g}, h={transverse_field:.3g} "
                f"over {n_realizations} realizations")
    return ThermalObservables(
        temperature=temperature, transverse_field=transverse_field,
        sz=sz, sz_err=sz_err, cx=cx, cx_err=cx_err, cz=cz, cz_err=cz_err,
        n_realizations=n_realizations, variance_mz=float(np.nansum(cz)),
    )


def varmz_offset_correction(czz: np.ndarray, target_variance: float) -> np.ndarray:
    """Add a uniform offset so that sum_ij C_ij equals target_variance"""
    czz = np.asarray(czz, dtype=float)
    if czz.ndim != 2 or czz.shape[0] != czz.shape[1]:
        raise ValueError("C^z must be a square matrix")
    finite = np.isfinite(czz)
    count = int(finite.sum())
    if count == 0:
        return czz.copy()
    offset = (target_variance - float(np.sum(czz[finite]))) / count
    return np.where(finite, czz + offset, czz)
