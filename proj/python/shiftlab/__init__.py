"""Adapted shifts of Brownian paths: simulation, inversion and invertibility certificates."""

try:
    from ._shiftlab import (
        apply_shift,
        certify,
        certify_density,
        density_residuals,
        energy,
        inverse_residuals,
        invert,
        log_density,
        sample,
    )
except ImportError:  # in-tree builds keep the extension next to the package
    from _shiftlab import (
        apply_shift,
        certify,
        certify_density,
        density_residuals,
        energy,
        inverse_residuals,
        invert,
        log_density,
        sample,
    )

__all__ = [
    "apply_shift",
    "certify",
    "certify_density",
    "density_residuals",
    "energy",
    "inverse_residuals",
    "invert",
    "log_density",
    "sample",
]
