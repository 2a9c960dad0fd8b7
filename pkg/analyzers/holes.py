"""
Decay length of staggered correlations in a hole-doped ring.

Each hole slips the sublattice phase, so staggered order survives a
perimeter distance d with probability (1 - 2p)^d.
"""

import math
from typing import Optional, Tuple

from lattice.geometry import chord_of_separation


def hole_decay_length(p: float, n_sites: Optional[int] = None) -> Tuple[float, Optional[float]]:
    """(xi_p in sites along the perimeter, chord equivalent on an N-site ring)"""
    if not 0.0 <= p < 0.5:
        raise ValueError(f"hole probability must be in [0, 1/2), got {p}")
    if p == 0.0:
        return math.inf, (n_sites / math.pi if n_sites else None)
    xi = 1.0 / abs(math.log(1.0 - 2.0 * p))
    if n_sites is None:
        return xi, None
    # Decay lengths beyond half the ring saturate at the diameter
    chord = float(chord_of_separation(min(xi, n_sites / 2.0), n_sites))
    return xi, chord
