"""Explicit ReLU network constructions with width/depth-dependent error guarantees."""

from .approximator import (ConstructedApproximator, HolderModulus, build_approximator,
                           error_bound, rescale_to_box)
from .bits import (build_bit_extraction_multi, build_bits_width, build_bits_width_depth,
                   build_point_fitter, build_point_fitter_2d)
from .cpwl import PiecewiseLinear, eval_pwl, fit_samples, to_shallow_net, wide_to_deep
from .errors import (ConstructionError, DimensionError, NetworkFormatError, PrecisionError,
                     RelunetError)
from .network import (AffineLayer, ReluNetwork, compose_serial, evaluate, stack_parallel,
                      stats, widen_with_passthrough)
from .serialize import from_json, load, save, to_json
from .step import build_step_network, make_partition

__version__ = "0.1.0"
