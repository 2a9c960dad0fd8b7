"""
Correlation binning by chord distance and snapshot estimators.

Pairs (i, j) are grouped by their ring separation s; every pair with the same
s shares the chord distance r = (N/pi) sin(pi s / N) and the perimeter
distance d = s. Missing entries (NaN for holes or the removed site) are
skipped, so open rings and hole-doped data average the available pairs only.
"""

import logging
from typing import Optional, Tuple, Union

import numpy as np

from lattice.geometry import chord_of_separation
from models.lattice_models import ChainGeometry
from models.protocol_models import SnapshotSet
from models.result_models import CorrelationProfile

logger = logging.getLogger(__name__)


def _separation_matrix(n_sites: int) -> np.ndarray:
    idx = np.arange(n_sites)
    sep = np.abs(idx[:, None] - idx[None, :])
    return np.minimum(sep, n_sites - sep)


def estimate_from_snapshots(snapshots: SnapshotSet) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Per-site mean, connected correlation matrix and their standard errors

    Each pair uses only the shots where both atoms were detected.
    """
    shots = snapshots.shots.astype(float)
    present = snapshots.shots != 0
    n_sites = shots.shape[1]

    counts = present.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = np.where(counts > 0, shots.sum(axis=0) / counts, np.nan)
        second = np.where(counts > 0, (shots ** 2).sum(axis=0) / counts, np.nan)
        mean_err = np.sqrt(np.maximum(second - mean ** 2, 0.0) / np.maximum(counts - 1, 1))

    both = present.T.astype(float) @ present.astype(float)
    sum_i = shots.T @ present.astype(float)          # sum of s_i over shots where j present
    sum_ij = shots.T @ shots
    with np.errstate(invalid="ignore", divide="ignore"):
        m_i = sum_i / both
        m_j = m_i.T
        corr = sum_ij / both - m_i * m_j
        # Var of s_i s_j for +-1 outcomes is 1 - <s_i s_j>^2
        var = np.maximum(1.0 - (sum_ij / both) ** 2, 0.0)
        corr_err = np.sqrt(var / np.maximum(both - 1, 1))
    corr = np.where(both > 1, corr, np.nan)
    corr_err = np.where(both > 1, corr_err, np.nan)
    np.fill_diagonal(corr, np.where(counts > 0, 1.0 - mean ** 2, np.nan))
    np.fill_diagonal(corr_err, 0.0)
    return mean, corr, mean_err, corr_err


def bin_correlations(data: Union[np.ndarray, SnapshotSet], geom: ChainGeometry,
                     basis: str = "z", errors: Optional[np.ndarray] = None,
                     n_samples: int = 1, log: Optional[logging.Logger] = None) -> CorrelationProfile:
    """Average a correlation matrix (or snapshot estimate) over equal chord distances

    `errors` is an optional matrix of per-pair standard errors; without it the
    bin error is the standard error over the pairs of that bin for snapshot
    input and zero for exact matrices.
    """
    log = log or logger
    if isinstance(data, SnapshotSet):
        _, matrix, _, errors = estimate_from_snapshots(data)
        n_samples = data.n_shots
        basis = data.basis_label
    else:
        matrix = np.asarray(data, dtype=float)
    n = geom.n_sites
    if matrix.shape != (n, n):
        raise ValueError(f"correlation matrix shape {matrix.shape} does not match N={n}")
    # Pair exchange symmetry
    matrix = 0.5 * (matrix + matrix.T)
    if errors is not None:
        errors = np.sqrt(0.5 * (np.asarray(errors) ** 2 + np.asarray(errors).T ** 2))

    sep = _separation_matrix(n)
    iu, ju = np.triu_indices(n, 1)
    pair_sep = sep[iu, ju]
    pair_val = matrix[iu, ju]
    pair_err = errors[iu, ju] if errors is not None else None
    finite = np.isfinite(pair_val)

    rows = []
    for s in range(1, n // 2 + 1):
        in_bin = (pair_sep == s)
        sel = in_bin & finite
        if not np.any(sel):
            if np.any(in_bin):
                log.warning(f"[WARNING] no valid pairs at separation {s}; bin skipped")
            continue
        values = pair_val[sel]
        count = int(sel.sum())
        if pair_err is not None:
            err = float(np.sqrt(np.nansum(pair_err[sel] ** 2)) / count)
        else:
            err = 0.0
        rows.append((s, float(values.mean()), err, count, values))

    if not rows:
        log.warning("[WARNING] correlation matrix has no valid pairs")
    seps = np.array([row[0] for row in rows], dtype=float)
    return CorrelationProfile(
        r=chord_of_separation(seps, n),
        d=seps,
        mean=np.array([row[1] for row in rows]),
        stderr=np.array([row[2] for row in rows]),
        n_pairs=np.array([row[3] for row in rows], dtype=int),
        basis=basis,
        n_samples=n_samples,
        pair_values=[row[4] for row in rows],
    )

