"""Support-function geometry of axisymmetric convex bodies.

Bodies are described by their support function on the latitude chart,
``s(theta)`` for theta in [0, pi/2], extended evenly to [-pi/2, pi/2].  A
translation by ``c`` along the axis changes it to ``s(theta) - c sin(theta)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize
from scipy.spatial import cKDTree

from .axisym import SupportProfile, Trajectory, embed, evolve, radii

__all__ = [
    "GeometryError", "ConvexBodyAxi", "radii_bounds", "hausdorff", "boundary_hausdorff",
    "inclusion_scaling_check", "continuous_dependence_check", "perturbation_ladder",
]


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class ConvexBodyAxi:
    profile: SupportProfile
    center_offset: float = 0.0
    tol: float = 1e-8

    def __post_init__(self):
        if self.profile.chart != "latitude":
            raise GeometryError("bodies are described on the latitude chart")
        r1, r2 = radii(self.profile)
        scale = np.max(np.abs(self.profile.values))
        if min(r1.min(), r2.min()) < -self.tol * scale:
            raise GeometryError("profile is not convex (negative radius of curvature)")

    def full(self):
        """Angles on [-pi/2, pi/2] and the support function of the translate."""
        th = self.profile.grid
        s = self.profile.values
        theta = np.concatenate([-th[:0:-1], th])
        vals = np.concatenate([s[:0:-1], s]) - self.center_offset * np.sin(theta)
        return theta, vals

    def translated(self, c: float) -> "ConvexBodyAxi":
        return ConvexBodyAxi(self.profile, self.center_offset + c, self.tol)


def _as_body(b) -> ConvexBodyAxi:
    return b if isinstance(b, ConvexBodyAxi) else ConvexBodyAxi(b)


def _full_values(b) -> tuple:
    """(grid, even extension) of a body or a bare profile, without a convexity check."""
    if isinstance(b, ConvexBodyAxi):
        return b.profile.grid, b.full()[1]
    s = b.values
    th = b.grid
    return th, np.concatenate([s[:0:-1], s])


def _centered(body: ConvexBodyAxi):
    """Axial centre maximizing the inscribed radius, with min/max support about it."""
    theta, s = body.full()
    sin = np.sin(theta)
    R = np.abs(s).max()
    res = optimize.minimize_scalar(lambda c: -np.min(s - c * sin), bounds=(-R, R),
                                   method="bounded", options={"xatol": 1e-12})
    return res.x, s - res.x * sin


def radii_bounds(body) -> dict:
    """Inradius and circumradius; optimal centres lie on the axis by symmetry."""
    body = _as_body(body)
    theta, s = body.full()
    sin = np.sin(theta)
    R = np.abs(s).max()
    opts = {"xatol": 1e-12}
    inn = optimize.minimize_scalar(lambda c: -np.min(s - c * sin), bounds=(-R, R),
                                   method="bounded", options=opts)
    out = optimize.minimize_scalar(lambda c: np.max(s - c * sin), bounds=(-R, R),
                                   method="bounded", options=opts)
    return {"inradius": float(-inn.fun), "circumradius": float(out.fun),
            "in_center": float(inn.x), "circum_center": float(out.x)}


def hausdorff(s1, s2) -> float:
    """sup |s1 - s2| on a common grid; equals the Hausdorff distance of convex bodies.

    Bare profiles are not checked for convexity, so solver output with
    round-off level negative radii can be compared.
    """
    g1, v1 = _full_values(s1)
    g2, v2 = _full_values(s2)
    if g1.shape != g2.shape or not np.allclose(g1, g2):
        raise GeometryError("support functions live on different grids")
    return float(np.max(np.abs(v1 - v2)))


def boundary_hausdorff(p1: SupportProfile, p2: SupportProfile) -> float:
    """Hausdorff distance between the embedded boundary curves (meridian sections)."""
    c1 = np.column_stack(embed(p1, close=False)[1:])
    c2 = np.column_stack(embed(p2, close=False)[1:])
    d12 = cKDTree(c2).query(c1)[0].max()
    d21 = cKDTree(c1).query(c2)[0].max()
    return float(max(d12, d21))


def inclusion_scaling_check(body, body_prime, d: float | None = None, tol: float = 1e-8) -> dict:
    """Scaled inclusions between a convex body and a nearby one.

    About the in-centre of ``body`` (so that r_- B is inside and r_+ B
    outside): with d >= d_H, ``(1 - K d) s <= s' <= (1 + K d) s`` for
    K = 4 / r_-; and with a the smallest factor giving
    ``(1 - a) s <= s' <= (1 + a) s``, ``d_H <= L a`` for L = r_+.
    """
    b, bp = _as_body(body), _as_body(body_prime)
    c, s = _centered(b)
    sp = bp.translated(c).full()[1]
    rm, rp = float(s.min()), float(s.max())
    if rm <= 0:
        raise GeometryError("body has empty interior")
    dist = float(np.max(np.abs(sp - s)))
    d = dist if d is None else d
    if d < dist - tol:
        raise GeometryError("d is smaller than the Hausdorff distance")
    K = 4.0 / rm
    if not K * d < 1:
        raise GeometryError("need d < 1/K = r_-/4")
    outer = float(np.min((1 + K * d) * s - sp))
    inner = float(np.min(sp - (1 - K * d) * s))
    a = float(np.max(np.abs(sp - s) / s))
    lmargin = rp * a - dist
    ok = min(outer, inner, lmargin) >= -tol
    return {"holds": bool(ok), "K": K, "L": rp, "d": d, "hausdorff": dist, "a": a,
            "outer_margin": outer, "inner_margin": inner, "L_margin": lmargin,
            "r_minus": rm, "r_plus": rp}


def continuous_dependence_check(traj: Trajectory, traj_prime: Trajectory, alpha: float) -> dict:
    """sup_t d_H(traj_t, traj'_t) against d^{1/(1+a)} + d with d the initial distance."""
    if len(traj.times) != len(traj_prime.times) or not np.allclose(traj.times, traj_prime.times,
                                                                   rtol=0, atol=1e-12):
        raise GeometryError("trajectories are stored at different times")
    dist = np.array([hausdorff(p, q) for p, q in zip(traj.profiles, traj_prime.profiles)])
    d = float(dist[0])
    sup = float(dist.max())
    scale = d ** (1 / (1 + alpha)) + d
    return {"d": d, "sup_distance": sup, "ratio": sup / scale if scale > 0 else 0.0,
            "argmax_t": float(traj.times[int(dist.argmax())])}


def _common(t1: Trajectory, t2: Trajectory):
    """Restrict two trajectories to the stored times they share."""
    k2 = {t: p for t, p in zip(t2.times, t2.profiles)}
    ts = [t for t in t1.times if t in k2]
    k1 = dict(zip(t1.times, t1.profiles))
    return (Trajectory(ts, [k1[t] for t in ts]), Trajectory(ts, [k2[t] for t in ts]))


def perturbation_ladder(profile: SupportProfile, spec, t_end: float, exponents=range(4, 11),
                        n_store: int = 50, **kw) -> dict:
    """Ratios for initial data (1 + 2^-j) s0 against s0, all stored at common times.

    The verdict is 'holds' when no ratio exceeds four times the ratio at the
    first rung (no growth as d shrinks).
    """
    times = np.linspace(0.0, t_end, n_store + 1)
    base = evolve(profile, spec, t_end, store_times=times, **kw)
    rows = []
    for j in exponents:
        eps = 2.0 ** -j
        other = evolve(profile.with_values((1 + eps) * profile.values), spec, t_end,
                       store_times=times, **kw)
        a, b = _common(base, other)
        r = continuous_dependence_check(a, b, spec.alpha)
        r.update(j=j, status=other.status)
        rows.append(r)
    ratios = np.array([r["ratio"] for r in rows])
    return {"rows": rows, "base_status": base.status, "max_over_first": float(ratios.max() / ratios[0]),
            "holds": bool(ratios.max() <= 4 * ratios[0])}
