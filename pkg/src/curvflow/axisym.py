"""Axially symmetric contraction flow in support-function form.

The support function ``s(theta)`` of a convex hypersurface of revolution is
sampled on the latitude chart ``theta in [0, pi/2]`` (``theta = 0`` is the
equator, ``pi/2`` the pole) and extended evenly about both ends.  The radii
of curvature are

    r1 = s'' + s,      r2 = ... = rn = s - tan(theta) s',

and the flow reads ``ds/dt = psi(r1, r2, ..., r2)`` with
``psi = -f_*(r)^(-alpha)``.  A second chart uses ``sigma(u) =
s(P(u)) sqrt(1 + u^2)`` on a cylinder around the axis.

Spatial derivatives are 4th-order central differences; time stepping is
classical RK4 with a parabolic step-size restriction.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np
from scipy import integrate

from .speed_algebra import ElemQuot, Scale, SpeedSpec, boundary_limit, dualize, _quot_const

__all__ = [
    "SupportProfile", "Trajectory", "DomainExit", "latitude_profile", "sphere_profile",
    "cylinder_profile", "build_theorem1_data", "bump_radius", "radii", "rhs", "r1_rate",
    "flat_part_rate", "evolve", "embed", "turning", "diagnostics", "sphere_radius",
    "extinction_time", "d1", "d2",
]


class DomainExit(RuntimeError):
    """The dual speed cannot be evaluated at the current radii."""


@dataclass(frozen=True)
class SupportProfile:
    chart: str          # "latitude" or "cylinder"
    grid: np.ndarray    # theta_j in [0, pi/2] or u_j in [0, U]
    values: np.ndarray  # s(theta_j) or sigma(u_j)
    n: int

    @property
    def h(self) -> float:
        return float(self.grid[1] - self.grid[0])

    def with_values(self, values) -> "SupportProfile":
        return SupportProfile(self.chart, self.grid, np.asarray(values, dtype=float), self.n)


def latitude_profile(values, n: int) -> SupportProfile:
    values = np.asarray(values, dtype=float)
    grid = np.linspace(0.0, np.pi / 2, values.size)
    return SupportProfile("latitude", grid, values, n)


def sphere_profile(radius: float, n: int, N: int = 256) -> SupportProfile:
    return latitude_profile(np.full(N + 1, float(radius)), n)


def cylinder_profile(values, U: float, n: int) -> SupportProfile:
    values = np.asarray(values, dtype=float)
    return SupportProfile("cylinder", np.linspace(0.0, U, values.size), values, n)


# ---------------------------------------------------------------------------
# finite differences


def _pad(y: np.ndarray, chart: str) -> np.ndarray:
    """Two ghost nodes per side: even reflection, or quartic extrapolation at u = U."""
    e = np.empty(y.size + 4)
    e[2:-2] = y
    e[0], e[1] = y[2], y[1]
    if chart == "latitude":
        e[-2], e[-1] = y[-2], y[-3]
    else:
        e[-2] = 5 * y[-1] - 10 * y[-2] + 10 * y[-3] - 5 * y[-4] + y[-5]
        e[-1] = 5 * e[-2] - 10 * y[-1] + 10 * y[-2] - 5 * y[-3] + y[-4]
    return e


def _d1(e, h):
    return (e[:-4] - e[4:] + 8.0 * (e[3:-1] - e[1:-3])) / (12.0 * h)


def _d2(e, h):
    return (16.0 * (e[3:-1] + e[1:-3]) - (e[4:] + e[:-4]) - 30.0 * e[2:-2]) / (12.0 * h * h)


def d1(y: np.ndarray, h: float, chart: str = "latitude") -> np.ndarray:
    return _d1(_pad(y, chart), h)


def d2(y: np.ndarray, h: float, chart: str = "latitude") -> np.ndarray:
    return _d2(_pad(y, chart), h)


@numba.njit(cache=True, error_model="numpy")
def _latitude_radii(y, h, tan):
    N = y.size - 1
    e = np.empty(N + 5)
    e[2:N + 3] = y
    e[0], e[1] = y[2], y[1]
    e[N + 3], e[N + 4] = y[N - 1], y[N - 2]
    r1 = np.empty(N + 1)
    r2 = np.empty(N + 1)
    c1 = 1.0 / (12.0 * h)
    c2 = c1 / h
    for j in range(N + 1):
        a, b, c, d, f = e[j], e[j + 1], e[j + 2], e[j + 3], e[j + 4]
        r1[j] = (16.0 * (d + b) - (f + a) - 30.0 * c) * c2 + c
        if j < N:
            r2[j] = c - tan[j] * (a - f + 8.0 * (d - b)) * c1
    r2[N] = r1[N]
    return r1, r2


def _radii(y, grid, h, chart, tan=None):
    if chart == "latitude" and tan is not None:
        return _latitude_radii(y, h, tan)
    e = _pad(y, chart)
    if chart == "latitude":
        r1 = _d2(e, h) + y
        if tan is None:
            tan = np.tan(grid[:-1])
        r2 = np.empty_like(y)
        r2[:-1] = y[:-1] - tan * _d1(e, h)[:-1]
        r2[-1] = r1[-1]
        return r1, r2
    w = 1.0 + grid * grid
    return w ** 1.5 * _d2(e, h), np.sqrt(w) * (y - grid * _d1(e, h))


def radii(profile: SupportProfile):
    """Principal radii (r1, r2) of the profile.

    Latitude chart: r1 = s'' + s, r2 = s - tan(theta) s', with r2 := r1 at
    the pole.  Cylinder chart: (1+u^2)^{3/2} sigma'' and
    sqrt(1+u^2) (sigma - u sigma').
    """
    return _radii(profile.values, profile.grid, profile.h, profile.chart)


# ---------------------------------------------------------------------------
# right-hand side


def _dual_of(spec: SpeedSpec) -> SpeedSpec:
    return dualize(spec)


def dual_speed(dspec: SpeedSpec, r1, r2, order: int = 0):
    """f_*(r1, r2, ..., r2) with its r1-derivative; extends past r1 = 0 while finite."""
    pts = np.empty((r1.size, dspec.n))
    pts[:, 0] = r1
    pts[:, 1:] = r2[:, None]
    with np.errstate(all="ignore"):
        v, g, _ = dspec.raw(pts, order)
        if not np.isfinite(v).all():
            # closed form indeterminate on the boundary of the cone: take the limit
            bad = ~np.isfinite(v)
            sub = pts[bad]
            if (sub < 0).any():
                raise DomainExit("dual speed undefined outside the cone")
            v = v.copy()
            v[bad] = boundary_limit(dspec, sub)
            if g is not None:
                g = g.copy()
                g[bad] = np.nan
    if not (v > 0).all():
        raise DomainExit("dual speed is not positive")
    return v, None if g is None else g[:, 0]


def _psi(dspec, alpha, r1, r2, order=0):
    v, g0 = dual_speed(dspec, r1, r2, order)
    psi = -1.0 / v if alpha == 1.0 else -v ** -alpha
    dpsi = None
    if order:
        dpsi = alpha * v ** (-alpha - 1) * g0
    return psi, dpsi


@numba.njit(cache=True, error_model="numpy")
def _esym_repeated(r1, r2, n, q):
    """E_q(r1, r2, ..., r2) (unnormalized) = C(n-1,q) r2^q + C(n-1,q-1) r1 r2^(q-1)."""
    if q == 0:
        return 1.0
    b1 = 1.0   # C(n-1, q-1)
    for i in range(q - 1):
        b1 = b1 * (n - 1 - i) / (i + 1)
    b0 = b1 * (n - q) / q   # C(n-1, q)
    pw = 1.0
    for i in range(q - 1):
        pw *= r2
    return b0 * pw * r2 + b1 * r1 * pw


@numba.njit(cache=True, error_model="numpy")
def _fused_quot_stage(y, h, tan, n, k, l, c, p, alpha):
    """Latitude radii and psi for a dual speed c (E_k/E_l)^p in one pass."""
    N = y.size - 1
    r1, r2 = _latitude_radii(y, h, tan)
    psi = np.empty(N + 1)
    ok = True
    for j in range(N + 1):
        ratio = _esym_repeated(r1[j], r2[j], n, k) / _esym_repeated(r1[j], r2[j], n, l)
        if p == 1.0:
            v = c * ratio
        elif p == 0.5:
            v = c * np.sqrt(ratio)
        else:
            v = c * ratio ** p
        if not (v > 0.0 and v < np.inf):
            ok = False
            v = 1.0
        if alpha == 1.0:
            psi[j] = -1.0 / v
        elif alpha == 2.0:
            psi[j] = -1.0 / (v * v)
        elif alpha == 0.5:
            psi[j] = -1.0 / np.sqrt(v)
        else:
            psi[j] = -v ** -alpha
    return psi, r1, r2, ok


@numba.njit(cache=True, error_model="numpy")
def _fused_quot_rk4(y, k1, dt, h, tan, n, k, l, c, p, alpha):
    """One RK4 step with the fused stage; ok is False if any stage left the closed form."""
    k2, _, _, ok2 = _fused_quot_stage(y + 0.5 * dt * k1, h, tan, n, k, l, c, p, alpha)
    k3, _, _, ok3 = _fused_quot_stage(y + 0.5 * dt * k2, h, tan, n, k, l, c, p, alpha)
    k4, _, _, ok4 = _fused_quot_stage(y + dt * k3, h, tan, n, k, l, c, p, alpha)
    y_new = y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    nk1, r1, r2, ok5 = _fused_quot_stage(y_new, h, tan, n, k, l, c, p, alpha)
    return y_new, nk1, r1, r2, ok2 and ok3 and ok4 and ok5


def _stage_factory(spec: SpeedSpec, profile: SupportProfile, dspec: SpeedSpec | None = None):
    """y -> (rhs, psi, (r1, r2)) for the profile's chart and grid."""
    dspec = dspec or _dual_of(spec)
    alpha = spec.alpha
    grid, h, chart = profile.grid, profile.h, profile.chart
    tan = np.tan(grid[:-1]) if chart == "latitude" else None
    if chart == "cylinder":
        m0 = np.sqrt(1.0 + grid ** 2)
    else:
        m0 = 1.0

    def generic(y):
        rr = _radii(y, grid, h, chart, tan)
        psi = _psi(dspec, alpha, rr[0], rr[1])[0]
        return m0 * psi, psi, rr

    node, c = dspec.expr, 1.0 / dspec.norm_factor
    while isinstance(node, Scale):
        c *= node.c
        node = node.child
    if chart != "latitude" or not isinstance(node, ElemQuot):
        return generic
    k, l, n = node.k, node.l, dspec.n
    c *= _quot_const(n, k, l)
    p = 1.0 / (k - l)

    def fused(y):
        psi, r1, r2, ok = _fused_quot_stage(y, h, tan, n, k, l, c, p, alpha)
        if not ok:
            return generic(y)
        return psi, psi, (r1, r2)

    def rk4(y, k1, dt):
        y_new, nk1, r1, r2, ok = _fused_quot_rk4(y, k1, dt, h, tan, n, k, l, c, p, alpha)
        return (y_new, nk1, nk1, (r1, r2)) if ok else None

    fused.rk4 = rk4
    return fused


def rhs(profile: SupportProfile, spec: SpeedSpec, dspec: SpeedSpec | None = None) -> np.ndarray:
    """Time derivative of the support function (latitude) or of sigma (cylinder)."""
    return _stage_factory(spec, profile, dspec)(profile.values)[0]


def r1_rate(profile: SupportProfile, spec: SpeedSpec) -> np.ndarray:
    """d r1 / dt = psi'' + psi on the latitude chart."""
    psi = rhs(profile, spec)
    return d2(psi, profile.h) + psi


def flat_part_rate(theta, psi, alpha: float):
    """Closed-form d r1/dt where r1 and its first two derivatives vanish."""
    return (1.0 - alpha) * (1.0 - alpha * np.tan(theta) ** 2) * psi


# ---------------------------------------------------------------------------
# initial data


def bump_radius(theta, alpha: float, theta0=None, theta1=None, theta2=None, h: float = 1.0):
    """Smooth r0 >= 0, even and pi-periodic, vanishing on the prescribed set.

    alpha < 1: zero for |theta| <= theta0, positive up to the pole.
    alpha > 1: zero on theta1 <= |theta| <= theta2, positive elsewhere.
    Pieces are h * exp(-1/(1 - zeta^2)) in a variable zeta that reaches 1
    exactly where r0 must vanish.
    """
    th = np.abs(np.asarray(theta, dtype=float))

    def piece(z):
        out = np.zeros_like(z)
        m = z < 1
        out[m] = h * np.exp(-1.0 / (1.0 - z[m] ** 2))
        return out

    if theta0 is not None:
        z = np.where(th > theta0, (np.pi / 2 - th) / (np.pi / 2 - theta0), 1.0)
        return piece(z)
    r = np.zeros_like(th)
    lo = th < theta1
    hi = th > theta2
    r[lo] = piece(th[lo] / theta1)
    r[hi] = piece((np.pi / 2 - th[hi]) / (np.pi / 2 - theta2))
    return r


def support_from_radius(r0, theta) -> np.ndarray:
    """Even pi-periodic s with s'' + s = r0 on the nodes ``theta`` of [0, pi/2].

    s = sin(t) int_0^t r0 cos + cos(t) int_t^{pi/2} r0 sin, integrated node
    to node and accumulated, so that intervals where r0 vanishes contribute
    exactly zero.
    """
    theta = np.asarray(theta, dtype=float)
    kw = dict(limit=200, epsabs=1e-15, epsrel=1e-13)
    segc = np.zeros(theta.size)
    segs = np.zeros(theta.size)
    for j in range(theta.size - 1):
        a, b = theta[j], theta[j + 1]
        segc[j + 1] = integrate.quad(lambda x: r0(x) * np.cos(x), a, b, **kw)[0]
        segs[j] = integrate.quad(lambda x: r0(x) * np.sin(x), a, b, **kw)[0]
    ic = np.cumsum(segc)
    is_ = np.cumsum(segs[::-1])[::-1]
    return np.sin(theta) * ic + np.cos(theta) * is_


def build_theorem1_data(alpha: float, n: int, theta0=None, theta1=None, theta2=None,
                        h: float = 4.0, N: int = 256):
    """Initial support function with a flat set of zero radius r1.

    Returns the profile and the prescribed r0 on the grid.
    """
    if h <= 0:
        raise ValueError("bump height must be positive (r0 = 0 gives s = 0)")
    if theta0 is not None:
        if not 0 < theta0 < np.pi / 2:
            raise ValueError("theta0 must lie in (0, pi/2)")
        if not 1 - alpha * np.tan(theta0) ** 2 > 0:
            raise ValueError("need 1 - alpha tan^2(theta0) > 0")
    else:
        if theta1 is None or theta2 is None or not 0 < theta1 < theta2 < np.pi / 2:
            raise ValueError("need 0 < theta1 < theta2 < pi/2")
        if not 1 - alpha * np.tan(theta1) ** 2 < 0:
            raise ValueError("need 1 - alpha tan^2(theta1) < 0")
    grid = np.linspace(0.0, np.pi / 2, N + 1)

    def r0(x):
        return float(bump_radius(np.array([x]), alpha, theta0, theta1, theta2, h)[0])

    s0 = support_from_radius(r0, grid)
    prof = SupportProfile("latitude", grid, s0, n)
    return prof, bump_radius(grid, alpha, theta0, theta1, theta2, h)


# ---------------------------------------------------------------------------
# evolution


@dataclass
class Trajectory:
    times: list = field(default_factory=list)
    profiles: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    events: list = field(default_factory=list)
    status: str = "running"
    message: str = ""
    steps: int = 0

    def values(self) -> np.ndarray:
        return np.array([p.values for p in self.profiles])

    def event(self, kind: str):
        for e in self.events:
            if e["kind"] == kind:
                return e
        return None

    def diag(self, key: str) -> np.ndarray:
        return np.array([d[key] for d in self.diagnostics])


DIAG_KEYS = ("min_r1", "min_r2", "max_S", "min_S", "s0", "s90")


def diagnostics(profile: SupportProfile, spec: SpeedSpec) -> dict:
    """Radii extremes, speed extremes S = -psi and end values of the profile."""
    _, psi, rr = _stage_factory(spec, profile)(profile.values)
    return dict(zip(DIAG_KEYS, _diag_vec(profile.values, psi, rr).tolist()))


def _diag_vec(y, psi, rr) -> np.ndarray:
    return np.array([rr[0].min(), rr[1].min(), -psi.min(), -psi.max(), y[0], y[-1]])


def _jump(old: np.ndarray, new: np.ndarray) -> float:
    """Largest single-step relative change of the diagnostics vector."""
    scale = max(abs(old[4]), abs(old[5]))
    ref = np.abs(old)
    np.maximum(ref, (scale, scale, old[2], old[2], scale, scale), out=ref)
    return (np.abs(new - old) / ref).max()


def evolve(profile: SupportProfile, spec: SpeedSpec, t_end: float, cfl: float = 0.2,
           extend: bool = True, n_store: int = 200, store_times=None,
           extinction_frac: float = 1e-3, r1_tol: float = 1e-9, rate_every: int = 4,
           max_steps: int = 10_000_000) -> Trajectory:
    """Evolve a profile by RK4 until ``t_end``, extinction or a domain exit.

    The step is ``cfl * h^2 / max |d psi / d r1|`` (scaled by the chart
    metric on the cylinder chart; the maximum is refreshed every
    ``rate_every`` steps), halved while a step produces NaN, leaves the
    domain of the dual speed, or changes a diagnostic by more than 10%.
    Profiles are stored at ``store_times`` if given, otherwise at
    ``n_store`` evenly spaced times, plus the initial state, event times and
    the final state.  The ``r1_negative`` event fires when min r1 drops
    below ``-r1_tol * max s0`` (less twice any negative noise already in
    the initial radii); with ``extend=False`` the run stops there.
    """
    dspec = _dual_of(spec)
    alpha = spec.alpha
    h = profile.h
    chart = profile.chart
    grid = profile.grid
    m1 = (1.0 + grid ** 2) ** 2 if chart == "cylinder" else 1.0
    stage = _stage_factory(spec, profile, dspec)
    rk4 = getattr(stage, "rk4", None)

    def max_rate(psi, rr):
        """max |d rhs / d s''| by a one-sided difference quotient."""
        eps = 1e-7 * max(float(np.max(np.abs(rr[1]))), 1e-300)
        psi2 = _psi(dspec, alpha, rr[0] + eps, rr[1])[0]
        return float(np.max(np.abs(psi2 - psi) * m1)) / eps

    if store_times is None:
        store_times = np.linspace(0.0, t_end, n_store + 1)[1:]
    store_times = [float(t) for t in store_times if 0 < t <= t_end]
    traj = Trajectory()
    y = profile.values.astype(float).copy()
    t = 0.0
    try:
        k1, psi, rr = stage(y)
    except DomainExit as exc:
        traj.status, traj.message = "domain_exit", str(exc)
        traj.events.append({"kind": "domain_exit", "t": 0.0})
        return traj
    diag = _diag_vec(y, psi, rr)
    s_max0 = float(np.max(np.abs(y)))
    # discretization noise of the initial radii is not an event
    r1_floor = r1_tol * s_max0 + 2.0 * max(0.0, -float(diag[0]))
    state = {"r1": False, "next": 0}

    def store():
        if traj.times and traj.times[-1] == t:
            return
        traj.times.append(float(t))
        traj.profiles.append(profile.with_values(y.copy()))
        traj.diagnostics.append(dict(zip(DIAG_KEYS, diag.tolist())))

    def check_r1():
        if not state["r1"] and diag[0] < -r1_floor:
            state["r1"] = True
            traj.events.append({"kind": "r1_negative", "t": float(t),
                                "theta": float(grid[int(np.argmin(rr[0]))])})
            return True
        return False

    store()
    if check_r1() and not extend:
        traj.status = "stopped"
        return traj

    rate = None
    while t < t_end and traj.steps < max_steps:
        if rate is None or traj.steps % rate_every == 0:
            rate = max_rate(psi, rr)
        dt = cfl * h * h / rate
        target = store_times[state["next"]] if state["next"] < len(store_times) else t_end
        snap = dt >= target - t
        if snap:
            dt = target - t
        while True:
            if dt < 1e-12 * t_end:
                traj.status = "step_collapse"
                traj.message = f"step size {dt:.3e} below 1e-12 * t_end at t = {t:.17g}"
                store()
                return traj
            try:
                with np.errstate(all="ignore"):
                    step = rk4(y, k1, dt) if rk4 is not None else None
                    if step is not None:
                        y_new, nk1, npsi, nrr = step
                    else:
                        k2 = stage(y + 0.5 * dt * k1)[0]
                        k3 = stage(y + 0.5 * dt * k2)[0]
                        k4 = stage(y + dt * k3)[0]
                        y_new = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
                        nk1, npsi, nrr = stage(y_new)
                    ndiag = _diag_vec(y_new, npsi, nrr)
                if not _jump(diag, ndiag) <= 0.1:
                    raise FloatingPointError
                break
            except (FloatingPointError, DomainExit):
                dt *= 0.5
                snap = False
                rate = None
        t = target if snap else t + dt
        y, k1, psi, rr, diag = y_new, nk1, npsi, nrr, ndiag
        traj.steps += 1
        fired = check_r1()
        due = False
        while state["next"] < len(store_times) and t >= store_times[state["next"]]:
            state["next"] += 1
            due = True
        if due or fired:
            store()
        if fired and not extend:
            traj.status = "stopped"
            return traj
        if chart == "latitude" and np.min(y) < extinction_frac * s_max0:
            traj.events.append({"kind": "extinction", "t": float(t)})
            traj.status = "extinction"
            store()
            return traj
    traj.status = "completed" if t >= t_end else "max_steps"
    store()
    return traj


# ---------------------------------------------------------------------------
# exact solutions and embedding


def sphere_radius(r0: float, alpha: float, t):
    """Radius of a shrinking sphere for a normalized speed."""
    return np.maximum(r0 ** (1 + alpha) - (1 + alpha) * np.asarray(t, dtype=float), 0.0) ** (1 / (1 + alpha))


def extinction_time(r0: float, alpha: float) -> float:
    return r0 ** (1 + alpha) / (1 + alpha)


def full_period(profile: SupportProfile):
    """Angles in [0, 2 pi) and s extended evenly about 0 and pi/2."""
    s = profile.values
    N = s.size - 1
    quarter = s                     # [0, pi/2]
    second = s[-2::-1]              # (pi/2, pi]
    half = np.concatenate([quarter, second])          # [0, pi]
    full = np.concatenate([half, half[1:-1]])          # [0, 2 pi)
    th = np.arange(full.size) * profile.h
    assert full.size == 4 * N
    return th, full


def embed(profile: SupportProfile, close: bool = True):
    """Planar profile curve (s cos - s' sin, s sin + s' cos) over the full period."""
    th, s = full_period(profile)
    h = profile.h
    e = np.concatenate([s[-2:], s, s[:2]])
    ds = (-e[4:] + 8 * e[3:-1] - 8 * e[1:-3] + e[:-4]) / (12 * h)
    x = s * np.cos(th) - ds * np.sin(th)
    y = s * np.sin(th) + ds * np.cos(th)
    if close:
        th = np.append(th, 2 * np.pi)
        x = np.append(x, x[0])
        y = np.append(y, y[0])
    return th, x, y


def turning(profile: SupportProfile) -> np.ndarray:
    """Tangent speed of the embedded curve along theta, d/dtheta X . T = r1.

    The embedded curve has X'(theta) = r1(theta) * (-sin, cos); its
    orientation relative to the normal direction reverses where r1 < 0.
    Returned on the full period for consistency with ``embed``.
    """
    th, s = full_period(profile)
    h = profile.h
    e = np.concatenate([s[-2:], s, s[:2]])
    dds = (-e[4:] + 16 * e[3:-1] - 30 * e[2:-2] + 16 * e[1:-3] - e[:-4]) / (12 * h * h)
    return dds + s
