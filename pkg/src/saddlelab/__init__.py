"""saddlelab: stability bounds and pressure-robust experiments for saddle-point problems."""

from . import errors, experiments, fem2d, saddle_core, stokes

__all__ = ["errors", "experiments", "fem2d", "saddle_core", "stokes"]
__version__ = "0.1.0"
