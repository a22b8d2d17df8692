"""Simulation and verification toolkit for long-range random-cluster and
Potts models on finite boxes of Z^d."""

__version__ = "0.1.0"

from .couplings import CouplingSpec  # noqa: F401
from .core import Configuration, FkModel  # noqa: F401
from .lattice import Box, make_box  # noqa: F401
