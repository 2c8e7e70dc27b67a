"""Recursive constraint-aware input perturbation design for closed-loop ARMAX identification."""

from .plant import ArmaxModel, ClosedLoop, Controller, theta_vector, unpack_theta
from .poly import Polynomial, closed_loop_denominator, convolve, filter_step, is_stable
from .rpem import DesignerInfo, Rpem, update_R
from .sensitivity import Limits, build_sensitivity, constraint_bounds
from .designer import compute_u_hat, design_step

__version__ = "0.1.0"
