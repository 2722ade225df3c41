"""Generalized Littlewood-Paley analysis on the discrete torus."""

from .grid import Grid, SampledFunction, SpectralFunction, forward_transform, inverse_transform
from .multipliers import MultiplierFamily, make_family
from .norms import Cube, bmo_norm, d_norm, enumerate_cubes, tl_norm
from .operators import band_project, decompose, kernel, neighborhood_project
from .testfuns import EnsembleSpec, generate

__version__ = "0.1.0"
