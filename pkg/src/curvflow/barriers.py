"""Barriers for the flow and checks of the a priori bounds along trajectories.

Explicit solutions (shrinking spheres), displacement bounds obtained by
comparison with spheres and graphs, the speed / Harnack / pinching monitors
and sampled constructions of the flat-sided, cylindrical, graphical and
ridge barriers.  Every constructed barrier carries the worst sampled margin
of the differential inequality that makes it a sub- or supersolution.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .axisym import DomainExit, SupportProfile, Trajectory, dual_speed, radii, rhs
from .classifier import (_growth, check_conditions, cylinder_persistence, invert_increasing,
                         ridge_persistence)
from .geometry import ConvexBodyAxi, radii_bounds
from .speed_algebra import SpeedSpec, dualize, eval_speed, fhat

__all__ = [
    "BarrierError", "BarrierProfile", "BoundRecord", "BoundReport", "sphere_solution",
    "extinction_time", "drop_constant", "upper_drop", "lower_drop_power", "lower_drop_alpha1",
    "displacement_bounds", "verify_trajectory", "build_flat_subsolution",
    "build_cylindrical_subsolution", "cylindrical_profile", "cylinder_integral_direct",
    "build_graph_supersolution", "build_ridge_supersolution", "ridge_implicit_integral",
]

MARGIN_TOL = 1e-8
_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)


class BarrierError(ValueError):
    """A barrier's hypotheses fail for the given speed or parameters."""


@dataclass
class BarrierProfile:
    kind: str
    x: np.ndarray
    value: np.ndarray
    margin: np.ndarray
    params: dict = field(default_factory=dict)

    @property
    def certificate(self) -> float:
        return float(np.min(self.margin))

    @property
    def accepted(self) -> bool:
        return self.certificate >= -MARGIN_TOL


@dataclass
class BoundRecord:
    name: str
    basis: str
    worst: float
    t: float | None
    theta: float | None
    checked: bool = True
    note: str = ""

    def to_dict(self):
        return {"name": self.name, "basis": self.basis, "worst": self.worst, "t": self.t,
                "theta": self.theta, "checked": self.checked, "note": self.note}


@dataclass
class BoundReport:
    records: list
    R_minus: float
    R_plus: float

    def __getitem__(self, name) -> BoundRecord:
        for r in self.records:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_dict(self):
        return {"R_minus": self.R_minus, "R_plus": self.R_plus,
                "records": [r.to_dict() for r in self.records]}


# ---------------------------------------------------------------------------
# spheres and displacement bounds


def extinction_time(r0: float, alpha: float) -> float:
    return r0 ** (1 + alpha) / (1 + alpha)


def sphere_solution(r0: float, alpha: float, t):
    """Radius of the shrinking sphere, r^{1+a} = r0^{1+a} - (1+a) t."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(t > extinction_time(r0, alpha)):
        raise BarrierError("time outside [0, extinction time]")
    out = (r0 ** (1 + alpha) - (1 + alpha) * t) ** (1 / (1 + alpha))
    return float(out) if out.ndim == 0 else out


def drop_constant(alpha: float) -> float:
    """C(a) = 2 (1+a)^{1/(1+a)} in the upper displacement bound."""
    return 2 * (1 + alpha) ** (1 / (1 + alpha))


def upper_drop(R_plus: float, R_minus: float, alpha: float, t):
    """Largest possible decrease of s by time t, from enclosed shrinking spheres."""
    t = np.asarray(t, dtype=float)
    if np.any(t > R_minus ** (1 + alpha) / (1 + alpha) * (1 + 1e-12)):
        raise BarrierError("t beyond R_-^{1+a}/(1+a)")
    return drop_constant(alpha) * R_plus / R_minus * t ** (1 / (1 + alpha))


def lower_drop_power(R_plus: float, alpha: float, t):
    """Guaranteed decrease of s by time t for a < 1, from enclosing spheres."""
    if not alpha < 1:
        raise BarrierError("the sphere lower bound needs alpha < 1")
    t = np.asarray(t, dtype=float)
    if np.any(t > R_plus ** (1 + alpha) / alpha * (1 + 1e-12)):
        raise BarrierError("t beyond R_+^{1+a}/a")
    return ((1 - alpha) * alpha ** (alpha / (1 - alpha)) * R_plus ** (-2 * alpha / (1 - alpha))
            * t ** (1 / (1 - alpha)))


def _chi(spec: SpeedSpec, xi):
    """Inverse of fhat, clipped to 0 below fhat(0)."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    return invert_increasing(lambda x: fhat(spec, x.ravel()).reshape(x.shape), xi)


def _fhat_unbounded(spec: SpeedSpec) -> bool:
    return _growth(fhat(spec, 2.0 ** np.arange(10, 41))) == "unbounded"


def lower_drop_alpha1(R_plus: float, t, spec: SpeedSpec):
    """Guaranteed decrease R_+ 3^{-chi(3 R_+^2 / t)} for a = 1 and unbounded fhat."""
    if spec.alpha != 1:
        raise BarrierError("the graph lower bound needs alpha = 1")
    if not _fhat_unbounded(spec):
        raise BarrierError("fhat is bounded: flat sides do not move")
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = R_plus * 3.0 ** -_chi(spec, 3 * R_plus ** 2 / t)
    return out if out.size > 1 else float(out[0])


def displacement_bounds(R_plus: float, R_minus: float, alpha: float, t: float,
                        spec: SpeedSpec | None = None) -> dict:
    """Upper and lower bounds on s(z,0) - s(z,t); None outside a bound's window."""
    out = {"upper_drop": None, "lower_drop": None}
    if t <= R_minus ** (1 + alpha) / (1 + alpha):
        out["upper_drop"] = float(upper_drop(R_plus, R_minus, alpha, t))
    if alpha < 1 and t <= R_plus ** (1 + alpha) / alpha:
        out["lower_drop"] = float(lower_drop_power(R_plus, alpha, t))
    elif alpha == 1 and spec is not None and t > 0 and _fhat_unbounded(spec):
        out["lower_drop"] = float(lower_drop_alpha1(R_plus, t, spec))
    return out


# ---------------------------------------------------------------------------
# trajectory monitors


def _speeds(traj: Trajectory, spec: SpeedSpec, dspec: SpeedSpec):
    S, tau_ratio = [], []
    for p in traj.profiles:
        psi = rhs(p, spec, dspec)
        S.append(-psi)
        r1, r2 = radii(p)
        try:
            fs = dual_speed(dspec, r1, r2)[0]
            tau_ratio.append(np.maximum(r1, r2) / fs)
        except DomainExit:
            tau_ratio.append(np.full(r1.shape, np.nan))
    return np.array(S), np.array(tau_ratio)


def verify_trajectory(traj: Trajectory, spec: SpeedSpec, inverse_concave: bool | None = None,
                      tol: float = MARGIN_TOL) -> BoundReport:
    """Check displacement, speed, Harnack and pinching bounds along a latitude-chart run.

    Only stored states up to the first ``r1_negative`` event are used (the
    bounds concern convex solutions).  ``inverse_concave`` defaults to the
    sampled verdict of the classifier.
    """
    if not traj.profiles or not traj.diagnostics:
        raise BarrierError("trajectory has no stored states or diagnostics")
    if traj.profiles[0].chart != "latitude":
        raise BarrierError("bounds are checked on the latitude chart")
    a = spec.alpha
    ev = traj.event("r1_negative")
    t_stop = ev["t"] if ev else np.inf
    keep = [i for i, t in enumerate(traj.times) if t < t_stop or (t == 0 and t_stop == 0)]
    times = np.array([traj.times[i] for i in keep])
    sub = Trajectory([traj.times[i] for i in keep], [traj.profiles[i] for i in keep])
    s = sub.values()
    theta = sub.profiles[0].grid
    dspec = dualize(spec)
    S, pinch = _speeds(sub, spec, dspec)
    if inverse_concave is None:
        inverse_concave = check_conditions(spec, count=500).holds("inverse_concave")
    geo = [radii_bounds(_body(p)) for p in sub.profiles]
    R_minus0, R_plus0 = geo[0]["inradius"], geo[0]["circumradius"]
    records = []

    def loc(arr):
        k, j = np.unravel_index(int(np.nanargmin(arr)), arr.shape)
        return float(np.nanmin(arr)), k, j

    # lower speed bound at every stored pair t1 < t2
    worst, where = np.inf, (None, None)
    for i in range(len(times) - 1):
        dt = times[i + 1:] - times[i]
        m = S[i + 1:] - (s[i] - s[i + 1:]) / ((1 + a) * dt[:, None])
        w, k, j = loc(m)
        if w < worst:
            worst, where = w, (float(times[i + 1 + k]), float(theta[j]))
    records.append(BoundRecord("lower_speed", "speed bounded below by the support-function decrease",
                               float(worst) if np.isfinite(worst) else 0.0, *where,
                               checked=len(times) > 1))

    # displacement bounds
    C = drop_constant(a)
    win = (times <= R_minus0 ** (1 + a) / (1 + a)) & (times > 0 if len(times) > 1 else True)
    m = s[win] - s[0] + C * R_plus0 / R_minus0 * times[win, None] ** (1 / (1 + a))
    w, k, j = loc(m)
    records.append(BoundRecord("upper_displacement", "enclosed shrinking spheres", w,
                               float(times[win][k]), float(theta[j])))
    if a < 1:
        win = (times <= R_plus0 ** (1 + a) / a) & (times > 0 if len(times) > 1 else True)
        m = s[0] - lower_drop_power(R_plus0, a, times[win])[:, None] - s[win]
        w, k, j = loc(m)
        records.append(BoundRecord("lower_displacement", "enclosing spheres (alpha < 1)", w,
                                   float(times[win][k]), float(theta[j])))
    elif a == 1 and _fhat_unbounded(spec) and len(times) > 1:
        tt = times[1:]
        m = s[0] - np.atleast_1d(lower_drop_alpha1(R_plus0, tt, spec))[:, None] - s[1:]
        w, k, j = loc(m)
        records.append(BoundRecord("lower_displacement", "graphical supersolutions (alpha = 1)", w,
                                   float(tt[k]), float(theta[j])))
    else:
        records.append(BoundRecord("lower_displacement", "not available", 0.0, None, None,
                                   checked=False, note="flat sides persist for this speed"))

    # upper speed bound: report the sup of the ratio
    R_minus = min(g["inradius"] for g in geo)
    R_plus = max(g["circumradius"] for g in geo)
    pos = times > 0
    if np.any(pos):
        scale = R_plus / R_minus * (R_minus ** -a + times[pos] ** (-a / (1 + a)))
        ratio = S[pos].max(axis=1) / scale
        k = int(np.argmax(ratio))
        records.append(BoundRecord("upper_speed", "speed bound in terms of in/circumradius",
                                   float(ratio[k]), float(times[pos][k]),
                                   float(theta[int(np.argmax(S[pos][k]))]),
                                   note="value is sup S / ((R+/R-)(R-^-a + t^(-a/(1+a)))); "
                                        "the constant is not given explicitly"))
    # Harnack: psi t^{a/(1+a)} non-increasing
    if inverse_concave and np.sum(pos) > 1:
        H = -S[pos] * times[pos, None] ** (a / (1 + a))
        scale = np.abs(H).max()
        m = (H[:-1] - H[1:]) / scale
        w, k, j = loc(m)
        records.append(BoundRecord("harnack", "psi t^(a/(1+a)) non-increasing", w,
                                   float(times[pos][k + 1]), float(theta[j])))
    else:
        records.append(BoundRecord("harnack", "psi t^(a/(1+a)) non-increasing", 0.0, None, None,
                                   checked=False, note="needs an inverse-concave speed"))
    # pinching: max tau / f_* non-increasing
    if a == 1 and inverse_concave and len(times) > 1:
        P = np.nanmax(pinch, axis=1)
        m = (P[:-1] - P[1:]) / P[0]
        k = int(np.argmin(m))
        records.append(BoundRecord("pinching", "max tau / f_* non-increasing", float(m[k]),
                                   float(times[k + 1]), float(theta[int(np.nanargmax(pinch[k + 1]))]),
                                   note=f"initial value {float(P[0]):.6g}, final value {float(P[-1]):.6g}"))
    else:
        records.append(BoundRecord("pinching", "max tau / f_* non-increasing", 0.0, None, None,
                                   checked=False, note="needs alpha = 1 and a concave dual speed"))
    return BoundReport(records, R_minus, R_plus)


def _body(p: SupportProfile):
    # smooth data with flat parts carry grid-level negative radii (~1e-5 relative)
    return ConvexBodyAxi(p, tol=1e-3)


# ---------------------------------------------------------------------------
# cumulative quadrature on a sample grid


def _cumulative(fun, grid: np.ndarray) -> np.ndarray:
    """int_{grid[0]}^{grid[i]} fun, by a Gauss-Legendre rule on each cell."""
    a, b = grid[:-1], grid[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    nodes = mid[:, None] + half[:, None] * _GL_X[None, :]
    vals = np.asarray(fun(nodes.ravel()), dtype=float).reshape(nodes.shape)
    return np.concatenate([[0.0], np.cumsum(half * (vals @ _GL_W))])


def _graded(lo: float, hi: float, count: int, refine: int = 40, end: str = "left") -> np.ndarray:
    """Uniform grid on [lo, hi] with geometric refinement toward one end."""
    u = np.linspace(0.0, 1.0, count)
    geo = 2.0 ** -np.arange(refine, 0, -1) * u[1]
    u = np.unique(np.concatenate([[0.0], geo, u]))
    if end == "right":
        u = 1.0 - u[::-1]
    return lo + (hi - lo) * u


# ---------------------------------------------------------------------------
# flat-sided self-similar subsolution (alpha > 1)


def build_flat_subsolution(alpha: float, samples: int = 10_000, mu: float = 4.0,
                           spec: SpeedSpec | None = None) -> BarrierProfile:
    """Boundary of {x > 0, |y|^2 + 2x - 1 - 2 x^p < 0}, p = (a-1)/(2a-1).

    The profile is |y| = rho(x).  beta = min s / max(k_r, k_perp)^a makes the
    set shrink homothetically as a subsolution; its flat disc {x = 0,
    |y| <= 1} stays in place for times up to (beta/(1+a)) (r/mu)^{1+a}.
    """
    if not alpha > 1:
        raise BarrierError("flat-sided subsolutions need alpha > 1")
    p = (alpha - 1) / (2 * alpha - 1)

    def G0(x):
        return 1 - 2 * x + 2 * x ** p

    # x_max: G0(x) = 0 beyond the maximum of G0
    lo, hi = max(p ** (1 / (1 - p)), 1e-300), 4.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if G0(mid) > 0 else (lo, mid)
    xmax = lo
    x = _graded(0.0, xmax, samples, refine=120, end="left")[1:]
    x = np.unique(np.concatenate([x[:-1], xmax - (xmax - x[-2]) * 2.0 ** -np.arange(1, 40)]))
    x = x[(x > 1e-300) & (x < xmax)]
    rho2 = G0(x)
    rho = np.sqrt(rho2)
    d1 = (-1 + p * x ** (p - 1)) / rho                  # rho'
    d2 = (p * (p - 1) * x ** (p - 2) - d1 ** 2) / rho   # rho''
    w = 1 + d1 * d1
    k_r = -d2 / w ** 1.5
    k_perp = 1 / (rho * np.sqrt(w))
    # outward normal is grad G / |grad G| with grad G = (2 - 2 p x^{p-1}, 2 rho)
    gx, gy = 2 - 2 * p * x ** (p - 1), 2 * rho
    s = (x * gx + rho * gy) / np.hypot(gx, gy)
    kmax = np.maximum(k_r, k_perp)
    with np.errstate(over="ignore"):
        q = s / kmax ** alpha
    beta = float(np.min(q))
    if not beta > 0:
        raise BarrierError("non-positive beta")
    # subsolution: inward normal speed s / beta dominates the flow speed <= kmax^a
    speed = kmax ** alpha
    if spec is not None:
        pts = np.ones((x.size, spec.n))
        pts[:, 0] = k_r
        pts[:, 1:] = k_perp[:, None]
        speed = eval_speed(spec, pts) ** alpha
    margin = (s / beta - speed) / np.maximum(s / beta, 1e-300)
    radius = float(np.sqrt(np.max(x ** 2 + rho2)))
    if radius > mu:
        raise BarrierError(f"set does not fit in a ball of radius mu = {mu}")
    coef = alpha * (2 * alpha - 1) / (alpha - 1) ** 2
    return BarrierProfile("flat_subsolution", x, rho, margin, {
        "alpha": alpha, "beta": beta, "mu": mu, "exponent": p, "x_max": xmax,
        "enclosing_radius": radius, "k_r": k_r, "k_perp": k_perp, "s": s,
        "k_r_coefficient": coef,
        "horizon": lambda r: beta / (1 + alpha) * (r / mu) ** (1 + alpha)})


# ---------------------------------------------------------------------------
# cylindrical subsolution


def _g_cyl(spec: SpeedSpec):
    a = spec.alpha
    c0 = float(fhat(spec, 0.0)[0]) ** a

    def g(x):
        x = np.asarray(x, dtype=float)
        return fhat(spec, x.ravel()).reshape(x.shape) ** a - c0

    def dg(x):
        x = np.asarray(x, dtype=float).ravel()
        pts = np.ones((x.size, spec.n))
        pts[:, 0] = x
        v, grad, _ = spec.raw(pts, 1)
        return a * v ** (a - 1) * grad[:, 0]
    return g, dg, c0


def cylinder_integral_direct(g, z: float) -> float:
    """G(z) = int_0^z ds / g^{-1}(s) by adaptive quadrature with a bisection inverse."""
    def integrand(sv):
        return 1.0 / invert_increasing(g, np.array([sv]), rtol=1e-15)[0]
    return float(integrate.quad(integrand, 0.0, z, limit=400, epsabs=1e-14, epsrel=1e-12)[0])


def _head(fun, first: float) -> float:
    """int_0^first fun for an integrand behaving like a power of xi near 0."""
    h0, h1 = fun(np.array([first]))[0], fun(np.array([2 * first]))[0]
    if h0 == 0:
        return 0.0
    pexp = np.log2(h1 / h0) if h1 > 0 and h0 > 0 else 0.0
    if pexp <= -1:
        raise BarrierError("integrand is not integrable at 0")
    return float(first * h0 / (1 + pexp))


def cylindrical_profile(g, dg, X_end: float, samples: int = 10_000) -> dict:
    """Concave v with v(0) = 1, v'(0) = 0 and g(-v'') = -v', sampled by X = -v''.

    With Gamma(X) = int_0^X g'(xi)/xi dxi (this is G(g(X))), the curve is
    x = Gamma(X), v = 1 - int_0^X g g'/xi, v' = -g(X), v'' = -X.
    """
    X = _graded(0.0, X_end, samples, refine=50)
    Xp = X[1:]

    def fx(t):
        return dg(t).reshape(np.shape(t)) / t

    def fv(t):
        return g(t) * fx(t)
    x = np.concatenate([[0.0], _head(fx, Xp[0]) + _cumulative(fx, Xp)])
    v = np.concatenate([[1.0], 1.0 - _head(fv, Xp[0]) - _cumulative(fv, Xp)])
    # g by quadrature of g' avoids the cancellation in fhat(X)^a - fhat(0)^a
    gq = np.concatenate([[0.0], _head(lambda t: dg(t).reshape(np.shape(t)), Xp[0])
                         + _cumulative(dg, Xp)])
    return {"X": X, "x": x, "v": v, "dv": -gq, "d2v": -X}


def build_cylindrical_subsolution(spec: SpeedSpec, samples: int = 10_000,
                                  safety: float = 1.1) -> BarrierProfile:
    """Subsolution with a cylindrical part, u(r) = 1 for |r| <= r0, u = v(r - r0) beyond.

    fhat(0) > 0: homothetic, fhat(0)^a (u - r u') >= RHS(u); fhat(0) = 0:
    translating, RHS(u) <= -V u', where RHS(u) = u^{-a} (1+u'^2)^{(1-a)/2}
    fhat(-u u''/(1+u'^2))^a.  v is kept to the piece with v >= 1/2 and
    |v'| <= 1; r0 (or V) is the sampled requirement times ``safety`` and the
    certificate is evaluated at fresh midpoints.
    """
    verdict = cylinder_persistence(spec, 1)
    if verdict["verdict"] != "persists":
        raise BarrierError(f"cylinder integral test: {verdict['verdict']}")
    a = spec.alpha
    g, dg, c0 = _g_cyl(spec)
    # X_end: first X where v' = -1 or v = 1/2
    X_end = float(invert_increasing(g, np.array([1.0]))[0])
    prof = cylindrical_profile(g, dg, X_end, samples)
    ok = prof["v"] >= 0.5
    last = int(np.flatnonzero(ok)[-1])
    if last < prof["X"].size - 1:
        prof = cylindrical_profile(g, dg, float(prof["X"][last]), samples)

    def rhs29(v, dv, d2v):
        w = 1 + dv * dv
        arg = -v * d2v / w
        return v ** -a * w ** ((1 - a) / 2) * fhat(spec, arg) ** a

    x, v, dv, d2v = prof["x"], prof["v"], prof["dv"], prof["d2v"]
    R = rhs29(v, dv, d2v)
    inner = slice(1, None)  # exclude x = 0, where v' = 0
    ratio_ok = -dv[inner] > 1e-6 * np.max(-dv)
    if c0 > 0:
        need = ((R[inner] / c0 - v[inner]) / (-dv[inner]))[ratio_ok]
        r0 = safety * max(float(np.max(need)), 0.0) + 1e-3
        # fresh samples: shift the parameter grid by half a cell
        Xm = 0.5 * (prof["X"][1:] + prof["X"][:-1])
        chk = _resample(g, dg, prof, Xm)
        Rm = rhs29(chk["v"], chk["dv"], chk["d2v"])
        rr = r0 + chk["x"]
        mchk = (c0 * (chk["v"] - rr * chk["dv"]) - Rm) / c0
        r = np.concatenate([[0.0, r0], r0 + x[inner]])
        u = np.concatenate([[1.0, 1.0], v[inner]])
        margin_main = (c0 * (v[inner] - (r0 + x[inner]) * dv[inner]) - R[inner]) / c0
        margin = np.concatenate([[0.0, 0.0], margin_main])
        params = {"mode": "homothetic", "r0": r0, "V": None, "fhat0": c0 ** (1 / a),
                  "shrink": lambda t: np.maximum(1 - (1 + a) * c0 * np.asarray(t), 0) ** (1 / (1 + a)),
                  "fresh_margin": float(mchk.min())}
    else:
        need = (R[inner] / (-dv[inner]))[ratio_ok]
        V = safety * float(np.max(need))
        Xm = 0.5 * (prof["X"][1:] + prof["X"][:-1])
        chk = _resample(g, dg, prof, Xm)
        Rm = rhs29(chk["v"], chk["dv"], chk["d2v"])
        mchk = (-V * chk["dv"] - Rm) / V
        r0 = 0.0
        r = np.concatenate([[0.0], x[inner]])
        u = np.concatenate([[1.0], v[inner]])
        margin = np.concatenate([[0.0], (-V * dv[inner] - R[inner]) / V])
        params = {"mode": "translating", "r0": 0.0, "V": V, "fhat0": 0.0,
                  "fresh_margin": float(mchk.min())}
    params.update(alpha=a, profile=prof, integral=verdict["integral"])
    return BarrierProfile("cylindrical_subsolution", r, u, margin, params)


def _resample(g, dg, prof: dict, Xm: np.ndarray) -> dict:
    """Profile quantities at parameter values Xm inside the sampled range."""
    X = prof["X"]
    j = np.clip(np.searchsorted(X, Xm) - 1, 0, X.size - 2)
    # integrate from the left sample to Xm on each cell
    lo = X[j]
    half = 0.5 * (Xm - lo)
    mid = 0.5 * (Xm + lo)
    nodes = mid[:, None] + half[:, None] * _GL_X[None, :]
    f1 = dg(nodes.ravel()).reshape(nodes.shape) / nodes
    f2 = g(nodes) * f1
    f0 = dg(nodes.ravel()).reshape(nodes.shape)
    x = prof["x"][j] + half * (f1 @ _GL_W)
    v = prof["v"][j] - half * (f2 @ _GL_W)
    dv = prof["dv"][j] - half * (f0 @ _GL_W)
    return {"X": Xm, "x": x, "v": v, "dv": dv, "d2v": -Xm}


# ---------------------------------------------------------------------------
# graphical supersolution (alpha = 1)


def build_graph_supersolution(spec: SpeedSpec, R_plus: float, v_speed: float, s0: float = 0.0,
                              samples: int = 10_000) -> BarrierProfile:
    """w(r) = s0 - 3R int_{1/3}^{r/(3R)} xi^sig / sqrt(1 - xi^{2 sig}) dxi, sig = chi(3 v R).

    The certificate is the sampled margin of fhat(r w''/(w'(1+w'^2))) >= v r
    on 0 < r < 3R, with w', w'' from the closed forms.
    """
    if spec.alpha != 1:
        raise BarrierError("graphical supersolutions are built for alpha = 1")
    if not _fhat_unbounded(spec):
        raise BarrierError("fhat is bounded, so chi is undefined for large arguments")
    R = R_plus
    sig = float(_chi(spec, np.array([3 * v_speed * R]))[0])
    r = _graded(0.0, 3 * R, samples, refine=40, end="right")[:-1]
    xi = r / (3 * R)

    def integrand(t):
        q = t ** sig
        return q / np.sqrt(1 - q * q)
    cum = _cumulative(integrand, xi)
    third = np.concatenate([[0.0], np.cumsum([integrate.quad(integrand, 0, 1 / 3, epsabs=1e-15,
                                                               epsrel=1e-13)[0]])])[-1]
    w = s0 - 3 * R * (cum - third)
    q = xi ** sig
    dw = -q / np.sqrt(1 - q * q)
    with np.errstate(divide="ignore", invalid="ignore"):
        d2w = -sig * xi ** (sig - 1) / (3 * R) * (1 - q * q) ** -1.5
        arg = r * d2w / (dw * (1 + dw * dw))
    arg[0] = sig
    fv = fhat(spec, arg)
    margin = (fv - v_speed * r) / (v_speed * 3 * R)
    i2 = np.searchsorted(r, 2 * R)
    w2 = float(s0 - 3 * R * integrate.quad(integrand, 1 / 3, 2 / 3, epsabs=1e-15, epsrel=1e-13)[0])
    return BarrierProfile("graph_supersolution", r, w, margin, {
        "sigma": sig, "v": v_speed, "R_plus": R, "w_at_R": float(np.interp(R, r, w)),
        "drop_at_2R": w2 - s0, "drop_bound": -R * 3.0 ** -sig, "index_2R": int(i2)})


# ---------------------------------------------------------------------------
# ridge supersolution (alpha = 1)


def _g_ridge(spec: SpeedSpec):
    dspec = dualize(spec)
    f0 = float(fhat(dspec, 0.0)[0])

    def g(x):
        x = np.asarray(x, dtype=float)
        return 1.0 / f0 - 1.0 / fhat(dspec, x.ravel()).reshape(x.shape)

    def dg(x):
        x = np.asarray(x, dtype=float).ravel()
        pts = np.ones((x.size, dspec.n))
        pts[:, 0] = x
        v, grad, _ = dspec.raw(pts, 1)
        return grad[:, 0] / v ** 2
    return g, dg, f0


def ridge_implicit_integral(spec: SpeedSpec, v: float) -> float:
    """int_0^v dz / ((1-z) g^{-1}(z / (2 fhat_*(0)))) by adaptive quadrature."""
    g, _, f0 = _g_ridge(spec)
    c = 2 * f0

    def integrand(z):
        return 1.0 / ((1 - z) * invert_increasing(g, np.array([z / c]), rtol=1e-15)[0])
    return float(integrate.quad(integrand, 0.0, v, limit=400, epsabs=1e-13, epsrel=1e-11)[0])


def build_ridge_supersolution(spec: SpeedSpec, u0: float = 1.0, samples: int = 10_000,
                              v_max: float = 0.9) -> BarrierProfile:
    """Homothetic outer barrier sigma_+ on the cylinder chart, flat on |u| <= u0.

    v = u sigma' - (sigma - 1) solves int_0^v dz / ((1-z) g^{-1}(z/(2 f0)))
    = log((1+u^2)/(1+u0^2)) / 2 and sigma / u has derivative (v - 1)/u^2.
    The profile is parametrized by X = g^{-1}(v / (2 f0)) and stops at
    u = 3 u0 / 2 or v = v_max.  The certificate is the margin of
    g((1+u^2) sigma'' / (sigma - u sigma')) <= (1 - sigma (sigma - u sigma')) / f0.
    """
    if spec.alpha != 1:
        raise BarrierError("ridge barriers are built for alpha = 1")
    g, dg, f0 = _g_ridge(spec)
    if not f0 > 1e-14:
        raise BarrierError("fhat_*(0) = 0: no ridge barrier")
    verdict = ridge_persistence(spec)
    if verdict["verdict"] != "persists":
        raise BarrierError(f"ridge integral test: {verdict['verdict']}")
    c = 2 * f0
    X_end = float(invert_increasing(g, np.array([v_max / c]))[0])
    X = _graded(0.0, X_end, samples, refine=50)

    def dphi(t):
        t = np.asarray(t, dtype=float)
        return c * dg(t).reshape(t.shape) / ((1 - c * g(t)) * t)

    def u_of(ph):
        return np.sqrt((1 + u0 ** 2) * np.exp(2 * ph) - 1)

    # phi(X) = Phi(c g(X)); q = sigma / u with dq/du = (v - 1)/u^2, du = (1+u^2) phi' / u dX
    def ode(t, y):
        dp = dphi(np.array([t]))[0]
        uu = u_of(y[0])
        return [dp, (c * g(np.array([t]))[0] - 1) * (1 + uu * uu) * dp / uu ** 3]
    X1 = X[1]
    ph1 = _head(dphi, X1)
    q1 = 1 / u0 + (c * g(np.array([X1]))[0] - 1) * (1 + u0 ** 2) * ph1 / u0 ** 3
    sol = integrate.solve_ivp(ode, (X1, X[-1]), [ph1, q1], method="DOP853", t_eval=X[1:],
                              rtol=1e-12, atol=1e-14)
    if not sol.success:
        raise BarrierError(f"ridge profile integration failed: {sol.message}")
    phi = np.concatenate([[0.0], sol.y[0]])
    q = np.concatenate([[1 / u0], sol.y[1]])
    u = u_of(phi)
    stop = u <= 1.5 * u0
    X, phi, u, q = X[stop], phi[stop], u[stop], q[stop]
    v = c * g(X)
    sigma = u * q
    dsig = (sigma + v - 1) / u
    # sigma'' = v'/u with v' = u (1-v) X / (1+u^2)
    d2sig = (1 - v) * X / (1 + u * u)
    a = 1 - v
    arg = (1 + u * u) * d2sig / (sigma - u * dsig)
    margin = (1 - sigma * (sigma - u * dsig)) / f0 - g(arg)
    uu = np.concatenate([np.linspace(0, u0, 50)[:-1], u])
    ss = np.concatenate([np.ones(49), sigma])
    mm = np.concatenate([np.zeros(49), margin])
    return BarrierProfile("ridge_supersolution", uu, ss, mm, {
        "u0": u0, "u1": float(u[-1]), "fhat_dual0": f0, "v": v, "X": X, "phi": phi,
        "dsigma": dsig, "d2sigma": d2sig, "one_minus_v": a,
        "disc_radius": lambda t: np.sqrt(np.maximum(1 - 2 * np.asarray(t) / f0, 0.0))})
