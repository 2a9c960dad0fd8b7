"""
Sector and full-state observables: <sz>, connected C^z, C^x and the
raising-operator moments needed for rotated measurement bases.

All site-resolved outputs have length N; inactive sites are NaN.
"""

from typing import Tuple, Union

import numpy as np
from numba import njit, prange

from hilbert.basis import SectorBasis, rank_code
from models.state_models import FullState, SectorState


@njit(parallel=True, cache=True)
def _sz_sums(codes, prob, n_bits):
    out = np.zeros(n_bits)
    for p in prange(n_bits):
        s = 0.0
        for k in range(codes.shape[0]):
            s += prob[k] * (2.0 * ((codes[k] >> p) & 1) - 1.0)
        out[p] = s
    return out


@njit(parallel=True, cache=True)
def _zz_sums(codes, prob, n_bits):
    out = np.zeros((n_bits, n_bits))
    for p in prange(n_bits):
        for q in range(p + 1, n_bits):
            s = 0.0
            for k in range(codes.shape[0]):
                c = codes[k]
                s += prob[k] * (2.0 * ((c >> p) & 1) - 1.0) * (2.0 * ((c >> q) & 1) - 1.0)
            out[p, q] = s
    return out


@njit(parallel=True, cache=True)
def _flip_flop_sums(codes, psi, n_bits, n_low, low_mask, low, low_pop, high):
    # out[p, q] = <s+_p s-_q>
    out = np.zeros((n_bits, n_bits), dtype=np.complex128)
    for p in prange(n_bits):
        for q in range(n_bits):
            if q == p:
                continue
            m = (np.int64(1) << p) | (np.int64(1) << q)
            s = 0.0 + 0.0j
            for k in range(codes.shape[0]):
                c = codes[k]
                if ((c >> p) & 1) == 0 and ((c >> q) & 1) == 1:
                    s += np.conj(psi[rank_code(c ^ m, n_low, low_mask, low, low_pop, high)]) * psi[k]
            out[p, q] = s
    return out


@njit(parallel=True, cache=True)
def _raise_one_sums(codes, psi_from, psi_to, n_bits, n_low, low_mask, low, low_pop, high):
    # <psi_to| s+_p |psi_from>, psi_to lives in the sector with one more up spin
    out = np.zeros(n_bits, dtype=np.complex128)
    for p in prange(n_bits):
        bit = np.int64(1) << p
        s = 0.0 + 0.0j
        for k in range(codes.shape[0]):
            c = codes[k]
            if (c & bit) == 0:
                s += np.conj(psi_to[rank_code(c | bit, n_low, low_mask, low, low_pop, high)]) * psi_from[k]
        out[p] = s
    return out


@njit(parallel=True, cache=True)
def _raise_two_sums(codes, psi_from, psi_to, n_bits, n_low, low_mask, low, low_pop, high):
    # <psi_to| s+_p s+_q |psi_from>, psi_to has two more up spins
    out = np.zeros((n_bits, n_bits), dtype=np.complex128)
    for p in prange(n_bits):
        for q in range(p + 1, n_bits):
            m = (np.int64(1) << p) | (np.int64(1) << q)
            s = 0.0 + 0.0j
            for k in range(codes.shape[0]):
                c = codes[k]
                if (c & m) == 0:
                    s += np.conj(psi_to[rank_code(c | m, n_low, low_mask, low, low_pop, high)]) * psi_from[k]
            out[p, q] = s
    return out


def _embed_vector(basis: SectorBasis, values: np.ndarray, dtype=float) -> np.ndarray:
    out = np.full(basis.n_sites, np.nan, dtype=dtype)
    out[basis.active_sites] = values
    return out


def _embed_matrix(basis: SectorBasis, values: np.ndarray, dtype=float) -> np.ndarray:
    out = np.full((basis.n_sites, basis.n_sites), np.nan, dtype=dtype)
    idx = basis.active_sites
    out[np.ix_(idx, idx)] = values
    return out


def _sector_list(state: Union[SectorState, FullState]):
    if isinstance(state, FullState):
        return [state.sectors[n] for n in sorted(state.sectors)]
    return [state]


def _moments_z(state: Union[SectorState, FullState]) -> Tuple[np.ndarray, np.ndarray, SectorBasis]:
    """Active-site <sz> and <sz sz> accumulated over sectors"""
    sectors = _sector_list(state)
    basis = sectors[0].basis
    n_bits = basis.n_active
    sz = np.zeros(n_bits)
    zz = np.zeros((n_bits, n_bits))
    total = 0.0
    for s in sectors:
        prob = s.probabilities()
        total += prob.sum()
        sz += _sz_sums(s.basis.codes, prob, n_bits)
        zz += _zz_sums(s.basis.codes, prob, n_bits)
    sz /= total
    zz = (zz + zz.T) / total
    np.fill_diagonal(zz, 1.0)
    return sz, zz, basis


def observable_sz(state: Union[SectorState, FullState]) -> np.ndarray:
    """Per-site <sz_i>"""
    sz, _, basis = _moments_z(state)
    return _embed_vector(basis, sz)


def observable_czz(state: Union[SectorState, FullState]) -> np.ndarray:
    """Connected C^z_ij = <sz_i sz_j> - <sz_i><sz_j>; C_ii = 1 - <sz_i>^2"""
    sz, zz, basis = _moments_z(state)
    return _embed_matrix(basis, zz - np.outer(sz, sz))


def flip_flop_matrix(state: SectorState) -> np.ndarray:
    """Active-site matrix of <s+_p s-_q>, normalized"""
    basis = state.basis
    psi = np.ascontiguousarray(state.amplitudes)
    out = _flip_flop_sums(basis.codes, psi, basis.n_active, *basis.rank_tables)
    return out / np.real(np.vdot(psi, psi))


def observable_cxx(state: SectorState) -> np.ndarray:
    """Connected C^x_ij = 2 Re <s+_i s-_j> within one sector; C_ii = 1"""
    if isinstance(state, FullState):
        raise TypeError("observable_cxx needs an M_z eigenstate; "
                        "use rotated_moments for states spanning several sectors")
    ff = flip_flop_matrix(state)
    cx = 2.0 * np.real(ff)
    cx = 0.5 * (cx + cx.T)
    np.fill_diagonal(cx, 1.0)
    return _embed_matrix(state.basis, cx)


def raising_expectations(state: Union[SectorState, FullState]
                         ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Active-site <s+_p>, <s+_p s+_q> (p<q filled symmetric) and <s+_p s-_q>"""
    sectors = _sector_list(state)
    basis0 = sectors[0].basis
    n_bits = basis0.n_active
    by_up = {s.basis.n_up: s for s in sectors}
    norm2 = sum(np.real(np.vdot(s.amplitudes, s.amplitudes)) for s in sectors)

    sp = np.zeros(n_bits, dtype=np.complex128)
    spsp = np.zeros((n_bits, n_bits), dtype=np.complex128)
    spsm = np.zeros((n_bits, n_bits), dtype=np.complex128)
    for n_up, s in by_up.items():
        psi = np.ascontiguousarray(s.amplitudes)
        spsm += _flip_flop_sums(s.basis.codes, psi, n_bits, *s.basis.rank_tables)
        if n_up + 1 in by_up:
            target = by_up[n_up + 1]
            sp += _raise_one_sums(s.basis.codes, psi, np.ascontiguousarray(target.amplitudes),
                                  n_bits, *target.basis.rank_tables)
        if n_up + 2 in by_up:
            target = by_up[n_up + 2]
            spsp += _raise_two_sums(s.basis.codes, psi, np.ascontiguousarray(target.amplitudes),
                                    n_bits, *target.basis.rank_tables)
    spsp = spsp + spsp.T
    return sp / norm2, spsp / norm2, spsm / norm2


def rotated_moments(state: Union[SectorState, FullState], theta: float
                    ) -> Tuple[np.ndarray, np.ndarray]:
    """<s_theta_i> and connected C^theta_ij for s_theta = cos(theta) sx + sin(theta) sy"""
    sp, spsp, spsm = raising_expectations(state)
    basis = _sector_list(state)[0].basis
    phase = np.exp(-1j * theta)
    s_theta = 2.0 * np.real(phase * sp)
    second = 2.0 * np.real(phase ** 2 * spsp) + 2.0 * np.real(spsm)
    second = 0.5 * (second + second.T)
    np.fill_diagonal(second, 1.0)
    connected = second - np.outer(s_theta, s_theta)
    return _embed_vector(basis, s_theta), _embed_matrix(basis, connected)
