"""Exact and Monte Carlo sensitivity analysis of halfspace intersections."""
from .boolfn import (Combiner, CompositeSpec, HypercubePoint, LinearThresholdFunction,
                     TruthTable, evaluate, loads_spec, dumps_spec, truth_table)
from .fourier import FourierSpectrum, degree_profile, tail_weight, wht
from .sensitivity import (average_sensitivity_exact, average_sensitivity_mc,
                          noise_sensitivity_mc)

__version__ = "0.1.0"
