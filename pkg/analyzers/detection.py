"""
Readout-error maps.

An atom in |up> is read as down with probability eps_up and an atom in
|down> as up with probability eps_dn. To first order this maps
    <s> -> (1 - eps_dn - eps_up) <s> + eps_dn - eps_up
and rescales connected correlations by 1 - 2 eps_up - 2 eps_dn.
"""

from typing import Union

import numpy as np

from models.result_models import CorrelationProfile

MAX_EPS = 0.25


def _check(eps_up: float, eps_dn: float):
    for name, value in (("eps_up", eps_up), ("eps_dn", eps_dn)):
        if not 0.0 <= value < MAX_EPS:
            raise ValueError(f"{name} must be in [0, {MAX_EPS}), got {value}")


def detection_factor(eps_up: float, eps_dn: float) -> float:
    """Correlation rescale factor"""
    _check(eps_up, eps_dn)
    return 1.0 - 2.0 * eps_up - 2.0 * eps_dn


def apply_detection(values: Union[float, np.ndarray, CorrelationProfile],
                    eps_up: float, eps_dn: float):
    """Forward map: ideal estimator -> what a lossy readout reports"""
    _check(eps_up, eps_dn)
    if isinstance(values, CorrelationProfile):
        return values.scaled(detection_factor(eps_up, eps_dn))
    values = np.asarray(values, dtype=float)
    return (1.0 - eps_dn - eps_up) * values + eps_dn - eps_up


def invert_detection(values: Union[float, np.ndarray, CorrelationProfile],
                     eps_up: float, eps_dn: float):
    """Inverse map: magnetizations via the affine inverse, profiles via the factor"""
    _check(eps_up, eps_dn)
    if isinstance(values, CorrelationProfile):
        return values.scaled(1.0 / detection_factor(eps_up, eps_dn))
    values = np.asarray(values, dtype=float)
    return (values - (eps_dn - eps_up)) / (1.0 - eps_dn - eps_up)
