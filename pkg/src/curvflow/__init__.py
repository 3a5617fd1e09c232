"""Contraction of convex hypersurfaces by powers of curvature."""
from .speed_algebra import SpeedSpec, parse_speed, eval_speed, dualize, restrict_boundary, q_matrix, fhat

__version__ = "0.1.0"
__all__ = ["SpeedSpec", "parse_speed", "eval_speed", "dualize", "restrict_boundary", "q_matrix", "fhat"]
