"""The four constructed barriers and their sampled certificates.

A certificate is the worst margin of the barrier's differential inequality
over its samples; a barrier is accepted when it is at least -1e-8.
"""
from curvflow.barriers import (build_cylindrical_subsolution, build_flat_subsolution,
                               build_graph_supersolution, build_ridge_supersolution)
from curvflow.speed_algebra import parse_speed

flat = build_flat_subsolution(2.0)
print(f"flat-sided subsolution, alpha = 2: beta = {flat.params['beta']:.5g}, "
      f"certificate {flat.certificate:.2e}")

cyl = build_cylindrical_subsolution(parse_speed("named(norm_A)", 2, 1.0))
print(f"cylindrical subsolution, |A|: r0 = {cyl.params['r0']:.4f}, certificate {cyl.certificate:.2e}")

t, R = 0.5, 1.0
graph = build_graph_supersolution(parse_speed("E(1)", 2, 1.0), R, 2 * R / t)
print(f"graphical supersolution, mean curvature, t = {t}: sigma = {graph.params['sigma']:.4g}, "
      f"drop at 2R = {graph.params['drop_at_2R']:.3e} <= {graph.params['drop_bound']:.3e}")

ridge = build_ridge_supersolution(parse_speed("pmean(-2)", 2, 1.0))
print(f"ridge supersolution, H_-2: flat on |u| <= {ridge.params['u0']}, extends to "
      f"u = {ridge.params['u1']:.3f}, certificate {ridge.certificate:.2e}")
