"""
Matrix-free H_XY + H_vdW + light shift on a fixed-magnetization sector.

The XY term only connects configurations differing by one flip-flop pair, so
each output amplitude gathers from the pairs whose two bits differ:

    out[k] = diag[k] psi[k] - sum_p w_p psi[rank(c_k ^ mask_p)]

Every output index is written by exactly one thread, so results do not depend
on the thread count.
"""

import logging
from typing import Optional

import numpy as np
import scipy.sparse
from numba import njit, prange
from scipy.sparse.linalg import LinearOperator

from hilbert.basis import SectorBasis, rank_code
from models.lattice_models import CouplingMatrices
from models.state_models import SectorState


@njit(parallel=True, cache=True)
def _static_diagonal(codes, n_bits, zz, field, offset):
    out = np.empty(codes.shape[0])
    for k in prange(codes.shape[0]):
        c = codes[k]
        e = offset
        for p in range(n_bits):
            sp = 2.0 * ((c >> p) & 1) - 1.0
            e += field[p] * sp
            for q in range(p + 1, n_bits):
                if zz[p, q] != 0.0:
                    e += zz[p, q] * sp * (2.0 * ((c >> q) & 1) - 1.0)
        out[k] = e
    return out


@njit(parallel=True, cache=True)
def _occupation_energy(codes, n_bits, weights):
    out = np.empty(codes.shape[0])
    for k in prange(codes.shape[0]):
        c = codes[k]
        e = 0.0
        for p in range(n_bits):
            if (c >> p) & 1:
                e += weights[p]
        out[k] = e
    return out


@njit(parallel=True, cache=True)
def _apply_kernel(codes, diag, masks, weights, psi, out, scale,
                  n_low, low_mask, low, low_pop, high):
    for k in prange(codes.shape[0]):
        c = codes[k]
        acc = diag[k] * psi[k]
        for p in range(masks.shape[0]):
            m = masks[p]
            b = c & m
            if b != 0 and b != m:
                acc -= weights[p] * psi[rank_code(c ^ m, n_low, low_mask, low, low_pop, high)]
        out[k] = scale * acc


@njit(parallel=True, cache=True)
def _row_counts(codes, masks):
    counts = np.zeros(codes.shape[0], dtype=np.int64)
    for k in prange(codes.shape[0]):
        c = codes[k]
        n = 0
        for p in range(masks.shape[0]):
            b = c & masks[p]
            if b != 0 and b != masks[p]:
                n += 1
        counts[k] = n
    return counts


@njit(parallel=True, cache=True)
def _fill_offdiagonal(codes, masks, weights, starts, rows, cols, vals,
                      n_low, low_mask, low, low_pop, high):
    for k in prange(codes.shape[0]):
        c = codes[k]
        pos = starts[k]
        for p in range(masks.shape[0]):
            m = masks[p]
            b = c & m
            if b != 0 and b != m:
                rows[pos] = k
                cols[pos] = rank_code(c ^ m, n_low, low_mask, low, low_pop, high)
                vals[pos] = -weights[p]
                pos += 1


@njit(parallel=True, cache=True)
def _gershgorin_rows(codes, diag, masks, weights):
    out = np.empty(codes.shape[0])
    for k in prange(codes.shape[0]):
        c = codes[k]
        s = abs(diag[k])
        for p in range(masks.shape[0]):
            b = c & masks[p]
            if b != 0 and b != masks[p]:
                s += abs(weights[p])
        out[k] = s
    return out


class SectorOperator:
    """scale * (H_XY + H_vdW + light shift) restricted to one sector"""

    def __init__(self, matrices: CouplingMatrices, basis: SectorBasis,
                 light_shift: Optional[np.ndarray] = None, scale: float = 1.0,
                 logger: Optional[logging.Logger] = None):
        self.logger = logger or logging.getLogger(__name__)
        if matrices.n_sites != basis.n_sites:
            raise ValueError(f"coupling matrices for {matrices.n_sites} sites "
                             f"do not match basis over {basis.n_sites} sites")
        self.basis = basis
        self.scale = float(scale)
        self.n_matvec = 0

        sub = matrices.submatrices(list(basis.active_sites))
        n_bits = basis.n_active
        iu, ju = np.triu_indices(n_bits, 1)
        w = sub.xy[iu, ju]
        keep = w != 0.0
        self.pairs = np.stack([iu[keep], ju[keep]], axis=1)
        self.weights = np.ascontiguousarray(w[keep], dtype=np.float64)
        self.masks = ((np.int64(1) << self.pairs[:, 0].astype(np.int64))
                      | (np.int64(1) << self.pairs[:, 1].astype(np.int64))).astype(np.int64)
        self.static_diagonal = _static_diagonal(basis.codes, n_bits, sub.zz, sub.field_z,
                                                float(sub.offset))
        self.diagonal = self.static_diagonal
        self.set_light_shift(light_shift)

    @property
    def dim(self) -> int:
        return self.basis.dim

    def set_light_shift(self, light_shift: Optional[np.ndarray]):
        """On-site energies l_i (1 + sz_i)/2; entries at inactive sites are ignored"""
        if light_shift is None:
            self.diagonal = self.static_diagonal
            return
        light_shift = np.asarray(light_shift, dtype=np.float64)
        if light_shift.shape != (self.basis.n_sites,):
            raise ValueError(f"light shift must have length {self.basis.n_sites}")
        active = np.ascontiguousarray(light_shift[self.basis.active_sites])
        if not np.any(active):
            self.diagonal = self.static_diagonal
            return
        self.diagonal = self.static_diagonal + _occupation_energy(
            self.basis.codes, self.basis.n_active, active)

    def matvec(self, psi: np.ndarray) -> np.ndarray:
        psi = np.ascontiguousarray(psi)
        if psi.shape != (self.dim,):
            raise ValueError(f"vector length {psi.shape} does not match sector dimension {self.dim}")
        out = np.empty_like(psi)
        _apply_kernel(self.basis.codes, self.diagonal, self.masks, self.weights, psi, out,
                      self.scale, *self.basis.rank_tables)
        self.n_matvec += 1
        return out

    def apply(self, state: SectorState) -> SectorState:
        return SectorState(self.basis, self.matvec(state.amplitudes))

    def as_linear_operator(self, dtype=np.float64) -> LinearOperator:
        return LinearOperator((self.dim, self.dim), matvec=self.matvec, dtype=dtype)

    def to_sparse(self) -> scipy.sparse.csr_matrix:
        codes = self.basis.codes
        counts = _row_counts(codes, self.masks)
        starts = np.zeros(self.dim, dtype=np.int64)
        if self.dim > 1:
            starts[1:] = np.cumsum(counts)[:-1]
        nnz = int(counts.sum())
        rows = np.empty(nnz, dtype=np.int64)
        cols = np.empty(nnz, dtype=np.int64)
        vals = np.empty(nnz, dtype=np.float64)
        _fill_offdiagonal(codes, self.masks, self.weights, starts, rows, cols, vals,
                          *self.basis.rank_tables)
        diag_idx = np.arange(self.dim)
        matrix = scipy.sparse.coo_matrix(
            (np.concatenate([vals, self.diagonal]),
             (np.concatenate([rows, diag_idx]), np.concatenate([cols, diag_idx]))),
            shape=(self.dim, self.dim),
        ).tocsr()
        return self.scale * matrix

    def to_dense(self) -> np.ndarray:
        return self.to_sparse().toarray()

    def norm_estimate(self) -> float:
        """Gershgorin bound on the spectral norm"""
        rows = _gershgorin_rows(self.basis.codes, self.diagonal, self.masks, self.weights)
        return float(rows.max()) if rows.size else 0.0

    def expectation(self, state: SectorState) -> float:
        """<psi| scale H |psi> / <psi|psi>"""
        psi = state.amplitudes
        return float(np.real(np.vdot(psi, self.matvec(psi))) / np.real(np.vdot(psi, psi)))

    def energy(self, state: SectorState) -> float:
        """Expectation of the unscaled Hamiltonian"""
        return self.expectation(state) / self.scale


def apply_hamiltonian(matrices: CouplingMatrices, light_shift: Optional[np.ndarray],
                      state: SectorState) -> SectorState:
    """Unnormalized image H|psi> in the same sector"""
    return SectorOperator(matrices, state.basis, light_shift).apply(state)
