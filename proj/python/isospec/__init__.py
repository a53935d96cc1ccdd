"""Isotropic random fields on the sphere.

Descriptors and configurations are plain dicts in the same JSON schema the
command-line tool reads.
"""

import json as _json

from . import _isospec
from ._isospec import (
    ConfigError,
    InvalidArgument,
    IoError,
    NotPositiveDefinite,
    clebsch_gordan,
    gaunt,
    legendre,
    power_spectrum,
    spherical_harmonic,
    wigner_3j,
    wigner_3j_zero,
    wigner_D,
    wigner_d,
)

__all__ = [
    "ConfigError",
    "InvalidArgument",
    "IoError",
    "NotPositiveDefinite",
    "clebsch_gordan",
    "gaunt",
    "legendre",
    "model_covariance",
    "model_spectrum",
    "polyspectrum",
    "power_spectrum",
    "simulate",
    "spherical_harmonic",
    "theoretical_polyspectrum",
    "verify",
    "wigner_3j",
    "wigner_3j_zero",
    "wigner_D",
    "wigner_d",
]


def model_spectrum(descriptor, lmax):
    """Angular power spectrum f_0..f_lmax of a covariance model descriptor."""
    return _isospec.model_spectrum(_json.dumps(descriptor), lmax)


def model_covariance(descriptor, gamma):
    """Covariance of a model at great-circle angle gamma."""
    return _isospec.model_covariance(_json.dumps(descriptor), gamma)


def simulate(config):
    """Replicate coefficient arrays, shape (n_replicates, (lmax+1)**2), index l*l + l + m."""
    return _isospec.simulate(_json.dumps(config))


def polyspectrum(p, coeffs, lmax, threads=1):
    """Estimated order-p polyspectrum as {(degrees, diagonals): (value, se)}."""
    return _isospec.polyspectrum(p, coeffs, lmax, threads)


def theoretical_polyspectrum(config, p):
    """Exact order-3 or order-4 polyspectrum of a wigner_d simulation config."""
    return _isospec.theoretical_polyspectrum(_json.dumps(config), p)


def verify(level="quick"):
    """Run the identity suite; returns (checks, findings)."""
    checks, findings = _isospec.verify(level)
    return checks, _json.loads(findings)
