"""
Fixed-magnetization configuration bases.

A sector is enumerated over the ACTIVE sites only: codes are compressed
bitstrings (bit k = k-th active site, 1 = up) with popcount n_up, in
ascending integer order. Inactive sites are frozen down. Ranking is
combinatorial (colex rank = ascending rank for fixed popcount) with two
half-word lookup tables.
"""

import logging
from math import comb
from typing import Optional, Sequence

import numpy as np
from numba import njit, prange

from utils.exceptions import CapacityError, GeometryError

MAX_BASIS_SITES = 30


@njit(cache=True)
def _binomial_table(n_max):
    table = np.zeros((n_max + 2, n_max + 2), dtype=np.int64)
    for n in range(n_max + 2):
        table[n, 0] = 1
        for k in range(1, n + 1):
            table[n, k] = table[n - 1, k - 1] + table[n - 1, k]
    return table


@njit(cache=True)
def _enumerate_codes(n_bits, n_up, dim):
    codes = np.empty(dim, dtype=np.int64)
    if n_up == 0:
        codes[0] = 0
        return codes
    c = (np.int64(1) << n_up) - 1
    for k in range(dim):
        codes[k] = c
        # Gosper's hack: next integer with the same popcount
        u = c & -c
        v = c + u
        c = v + (((v ^ c) // u) >> 2)
    return codes


@njit(cache=True)
def _build_rank_tables(n_bits, n_low, binom):
    n_high = n_bits - n_low
    low = np.zeros(1 << n_low, dtype=np.int64)
    low_pop = np.zeros(1 << n_low, dtype=np.int64)
    for x in range(1 << n_low):
        r = 0
        i = 0
        for p in range(n_low):
            if (x >> p) & 1:
                i += 1
                r += binom[p, i]
        low[x] = r
        low_pop[x] = i
    high = np.zeros((1 << n_high, n_low + 1), dtype=np.int64)
    for y in range(1 << n_high):
        for s in range(n_low + 1):
            r = 0
            i = s
            for q in range(n_high):
                if (y >> q) & 1:
                    i += 1
                    r += binom[n_low + q, i]
            high[y, s] = r
    return low, low_pop, high


@njit(cache=True, inline="always")
def rank_code(code, n_low, low_mask, low, low_pop, high):
    lo = code & low_mask
    return low[lo] + high[code >> n_low, low_pop[lo]]


@njit(parallel=True, cache=True)
def _rank_many(codes, n_low, low_mask, low, low_pop, high):
    out = np.empty(codes.shape[0], dtype=np.int64)
    for k in prange(codes.shape[0]):
        out[k] = rank_code(codes[k], n_low, low_mask, low, low_pop, high)
    return out


@njit(parallel=True, cache=True)
def _expand_codes(codes, active):
    out = np.zeros(codes.shape[0], dtype=np.int64)
    for k in prange(codes.shape[0]):
        c = codes[k]
        full = np.int64(0)
        for b in range(active.shape[0]):
            if (c >> b) & 1:
                full |= np.int64(1) << active[b]
        out[k] = full
    return out


class SectorBasis:
    """All configurations with n_up up spins on the active sites"""

    def __init__(self, n_sites: int, n_up: int, active_sites: Optional[Sequence[int]] = None,
                 logger: Optional[logging.Logger] = None):
        self.logger = logger or logging.getLogger(__name__)
        if n_sites > MAX_BASIS_SITES:
            raise CapacityError("basis enumeration over sites", n_sites, MAX_BASIS_SITES)
        if active_sites is None:
            active_sites = range(n_sites)
        self.n_sites = int(n_sites)
        self.active_sites = np.array(sorted(active_sites), dtype=np.int64)
        self.n_active = len(self.active_sites)
        if self.n_active and (self.active_sites[0] < 0 or self.active_sites[-1] >= n_sites):
            raise GeometryError("active site outside the ring")
        if not 0 <= n_up <= self.n_active:
            raise GeometryError(f"n_up={n_up} outside [0, {self.n_active}]")
        self.n_up = int(n_up)
        self.dim = comb(self.n_active, self.n_up)

        self._binom = _binomial_table(max(self.n_active, 1))
        self.n_low = (self.n_active + 1) // 2
        self.low_mask = (1 << self.n_low) - 1
        self._low, self._low_pop, self._high = _build_rank_tables(
            self.n_active, self.n_low, self._binom)
        self.codes = _enumerate_codes(self.n_active, self.n_up, self.dim)
        self._configs: Optional[np.ndarray] = None
        self.logger.debug(f"Sector n_active={self.n_active} n_up={self.n_up}: dim={self.dim}")

    @property
    def magnetization(self) -> int:
        """M_z over the active sites"""
        return 2 * self.n_up - self.n_active

    @property
    def configs(self) -> np.ndarray:
        """Expanded N-bit configurations, same order as codes"""
        if self._configs is None:
            self._configs = _expand_codes(self.codes, self.active_sites)
        return self._configs

    @property
    def rank_tables(self):
        return self.n_low, self.low_mask, self._low, self._low_pop, self._high

    def rank(self, code: int) -> int:
        """Index of a compressed code"""
        return int(rank_code(np.int64(code), self.n_low, self.low_mask,
                             self._low, self._low_pop, self._high))

    def rank_codes(self, codes: np.ndarray) -> np.ndarray:
        return _rank_many(np.asarray(codes, dtype=np.int64), *self.rank_tables)

    def compress(self, config: int) -> int:
        """N-bit configuration -> compressed code (inactive bits must be down)"""
        code = 0
        for b, site in enumerate(self.active_sites):
            if (config >> int(site)) & 1:
                code |= 1 << b
        return code

    def rank_config(self, config: int) -> int:
        return self.rank(self.compress(config))

    def site_bit(self, site: int) -> int:
        """Bit position of an active site in the compressed code"""
        pos = np.searchsorted(self.active_sites, site)
        if pos >= self.n_active or self.active_sites[pos] != site:
            raise GeometryError(f"site {site} is not active in this basis")
        return int(pos)

    def spins(self) -> np.ndarray:
        """(dim, n_active) array of +-1"""
        bits = (self.codes[:, None] >> np.arange(self.n_active)[None, :]) & 1
        return (2 * bits - 1).astype(np.int8)


def enumerate_sector(n_sites: int, n_up: int, active_sites: Optional[Sequence[int]] = None,
                     logger: Optional[logging.Logger] = None) -> SectorBasis:
    """Basis of the sector with n_up up spins (M_z = 2 n_up - N_active)"""
    if n_up < 0 or n_sites < 0:
        raise GeometryError("negative sector parameters")
    return SectorBasis(n_sites, n_up, active_sites, logger)
