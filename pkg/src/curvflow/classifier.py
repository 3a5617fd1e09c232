"""Sampled structural conditions on a speed and the flow behaviour they predict.

Every condition is reduced to a per-point margin that must be nonnegative
(up to ``tol``); a failing condition always carries the worst sample as a
witness, and :func:`condition_margin` recomputes the margin at that witness.

Behaviour predictions rest on one-dimensional integral tests of
``1 / g^{-1}`` near zero, evaluated on dyadic intervals ``[2^-j, 2^-j+1]``
with Gauss-Legendre rules and an inverse computed by bisection.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import optimize

from .speed_algebra import (SpeedError, SpeedSpec, dualize, eval_speed, fhat, restrict_boundary)

__all__ = [
    "ConditionResult", "ConditionsReport", "ClassifierError", "sample_rays", "check_conditions",
    "condition_margin", "flat_side_dichotomy", "cylinder_persistence", "ridge_persistence",
    "singularity_flags", "regularity_class", "improper_integral", "invert_increasing",
    "classify", "CONDITIONS",
]

TOL = 1e-8
HOLDS, FAILS, NA, INCONCLUSIVE = "holds-on-samples", "fails", "inapplicable", "inconclusive"

# report keys, in order
CONDITIONS = (
    "symmetric", "increasing", "homogeneous", "normalized", "concave", "inverse_concave",
    "dual_vanishes_on_boundary", "boundary_inverse_concave", "dual_boundary_inverse_concave",
    "boundary_nondegenerate", "dual_boundary_nondegenerate", "holder_interior", "holder_boundary",
)


class ClassifierError(ValueError):
    pass


@dataclass
class ConditionResult:
    verdict: str
    margin: float | None = None
    witness: list | None = None
    samples: int = 0
    note: str = ""

    def to_dict(self):
        return {"verdict": self.verdict, "margin": self.margin, "witness": self.witness,
                "samples": self.samples, "note": self.note}


@dataclass
class ConditionsReport:
    entries: dict
    count: int
    seed: int

    def __getitem__(self, key) -> ConditionResult:
        return self.entries[key]

    def holds(self, key) -> bool:
        return self.entries[key].verdict == HOLDS

    def fails(self, key) -> bool:
        return self.entries[key].verdict == FAILS

    def to_dict(self):
        return {k: self.entries[k].to_dict() for k in CONDITIONS}


def sample_rays(n: int, count: int, seed: int, ratio: float = 1e4) -> np.ndarray:
    """Points of the positive cone with pairwise ratios log-uniform in [1/ratio, ratio]."""
    rng = np.random.default_rng(seed)
    u = rng.uniform(-0.5 * np.log(ratio), 0.5 * np.log(ratio), size=(count, n))
    x = np.exp(u)
    return x / x.max(axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# per-point margins


def _rowsum_norm(a: np.ndarray) -> np.ndarray:
    return np.max(np.sum(np.abs(a), axis=-1), axis=-1)


def _eig_margin(mats: np.ndarray, largest: bool) -> np.ndarray:
    lam = np.linalg.eigvalsh(mats)
    scale = _rowsum_norm(mats)
    scale = np.where(scale > 0, scale, 1.0)
    return -lam[:, -1] / scale if largest else lam[:, 0] / scale


def _m_symmetric(spec, x):
    v = spec.raw(x)[0]
    w = np.maximum(np.abs(spec.raw(np.roll(x, 1, axis=1))[0] - v),
                   np.abs(spec.raw(x[:, ::-1])[0] - v))
    return -w / np.abs(v)


def _m_increasing(spec, x):
    return spec.raw(x, 1)[1].min(axis=1)


def _m_homogeneous(spec, x, lam=3.0):
    v = spec.raw(x)[0]
    return -np.abs(spec.raw(lam * x)[0] - lam * v) / (lam * np.abs(v))


def _m_concave(spec, x):
    return _eig_margin(spec.raw(x, 2)[2], largest=True)


def _m_inverse_concave(spec, x):
    _, g, h = spec.raw(x, 2)
    q = h + np.einsum("mi,ij->mij", 2.0 * g / x, np.eye(x.shape[1]))
    return _eig_margin(q, largest=False)


def _m_vanishes(spec, b):
    return -eval_speed(spec, b) / b.max(axis=1)


def _m_nondegenerate(spec, b):
    """min partial derivative just inside the cone at boundary points."""
    g = spec.raw(b + 2.0 ** -30, 1)[1]
    m = g.min(axis=1)
    return np.where(np.all(np.isfinite(g), axis=1), m, -np.inf)


_MARGINS = {
    "symmetric": _m_symmetric, "increasing": _m_increasing, "homogeneous": _m_homogeneous,
    "concave": _m_concave, "inverse_concave": _m_inverse_concave,
    "dual_vanishes_on_boundary": _m_vanishes, "boundary_inverse_concave": _m_inverse_concave,
    "dual_boundary_inverse_concave": _m_inverse_concave,
    "boundary_nondegenerate": _m_nondegenerate, "dual_boundary_nondegenerate": _m_nondegenerate,
}


def _target(spec: SpeedSpec, name: str) -> SpeedSpec:
    """The function a condition is evaluated on."""
    if name in ("dual_vanishes_on_boundary", "dual_boundary_nondegenerate"):
        return dualize(spec)
    if name == "boundary_inverse_concave":
        return restrict_boundary(spec, spec.n - 1)
    if name == "dual_boundary_inverse_concave":
        return restrict_boundary(dualize(spec), spec.n - 1)
    return spec


def condition_margin(spec: SpeedSpec, name: str, point) -> float:
    """Recompute a condition's margin at one point (e.g. a reported witness)."""
    x = np.atleast_2d(np.asarray(point, dtype=float))
    with np.errstate(all="ignore"):
        return float(_MARGINS[name](_target(spec, name), x)[0])


def _judge(margins: np.ndarray, pts: np.ndarray, tol: float) -> ConditionResult:
    margins = np.where(np.isnan(margins), -np.inf, margins)
    j = int(np.argmin(margins))
    worst = float(margins[j])
    if worst < -tol:
        return ConditionResult(FAILS, worst, pts[j].tolist(), len(pts))
    return ConditionResult(HOLDS, worst, None, len(pts))


def _face_points(x: np.ndarray) -> np.ndarray:
    """Put one coordinate at zero; by monotonicity these dominate deeper faces."""
    b = x.copy()
    b[:, 0] = 0.0
    return b


def check_conditions(spec: SpeedSpec, count: int = 1000, seed: int = 0,
                     tol: float = TOL) -> ConditionsReport:
    n = spec.n
    x = sample_rays(n, count, seed)
    x[0] = 1.0
    out = {}
    with np.errstate(all="ignore"):
        for name in ("symmetric", "increasing", "homogeneous", "concave", "inverse_concave"):
            out[name] = _judge(_MARGINS[name](spec, x), x, tol)
        nf = float(eval_speed(spec, np.ones(n)))
        out["normalized"] = ConditionResult(HOLDS if abs(nf - 1) <= 1e-12 else FAILS,
                                            -abs(nf - 1), None, 1)
        dspec = dualize(spec)
        b = _face_points(x)
        try:
            out["dual_vanishes_on_boundary"] = _judge(_m_vanishes(dspec, b), b, tol)
        except SpeedError as exc:
            out["dual_vanishes_on_boundary"] = ConditionResult(INCONCLUSIVE, note=str(exc))
        xr = sample_rays(n - 1, count, seed + 1)
        for name, dual in (("boundary_inverse_concave", False), ("dual_boundary_inverse_concave", True)):
            try:
                r = restrict_boundary(dspec if dual else spec, n - 1)
            except SpeedError as exc:
                out[name] = ConditionResult(INCONCLUSIVE, note=str(exc))
                continue
            if r.identically_zero:
                out[name] = ConditionResult(NA, note="restriction vanishes identically")
                continue
            out[name] = _judge(_m_inverse_concave(r, xr), xr, tol)
        for name, s in (("boundary_nondegenerate", spec), ("dual_boundary_nondegenerate", dspec)):
            vals = eval_speed(s, b)
            keep = vals > tol * b.max(axis=1)
            if not np.any(keep):
                out[name] = ConditionResult(NA, note="function vanishes on the sampled faces")
                continue
            out[name] = _judge(_m_nondegenerate(s, b[keep]), b[keep], tol)
    for name in ("holder_interior", "holder_boundary"):
        out[name] = ConditionResult("assumed", note="second derivative Holder estimates are assumed, not tested")
    return ConditionsReport(out, count, seed)


# ---------------------------------------------------------------------------
# one-dimensional integral tests

_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)


def invert_increasing(g, z: np.ndarray, rtol: float = 1e-12, max_iter: int = 400) -> np.ndarray:
    """Solve g(x) = z for x >= 0 with g increasing, elementwise, by bisection.

    ``g`` maps an array of x (same shape as ``z``) to values.  The bracket
    [0, hi] grows geometrically; targets above sup g give +inf and targets
    at or below g(0) give 0.
    """
    z = np.asarray(z, dtype=float)
    lo = np.zeros_like(z)
    hi = np.ones_like(z)
    with np.errstate(all="ignore"):
        g0 = g(lo)
        for _ in range(200):
            short = g(hi) < z
            if not np.any(short):
                break
            hi = np.where(short, 2.0 * hi, hi)
            if np.all(hi[short] > 2.0 ** 180):
                break
        unbounded = g(hi) < z
        for _ in range(max_iter):
            mid = 0.5 * (lo + hi)
            below = g(mid) < z
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
            if np.all((hi - lo) <= rtol * hi):
                break
    x = 0.5 * (lo + hi)
    x = np.where(g0 >= z, 0.0, x)
    return np.where(unbounded, np.inf, x)


def improper_integral(integrand, jmin: int = 4, jmax: int = 30, decay: float = 0.99,
                      flat: float = 0.999, tail: int = 8) -> dict:
    """int_0^1 integrand(z) dz for an integrand that may blow up at z = 0.

    Increments over [2^-j, 2^-j+1] are computed for j = 1..jmax; the
    integral is finite when the last ``tail`` increment ratios stay below
    ``decay`` (geometric tail, extrapolated), infinite when they stay above
    ``flat`` (increments bounded below), and inconclusive otherwise.
    """
    j = np.arange(1, jmax + 1)
    a = 2.0 ** -j
    z = a[:, None] * (1.5 + 0.5 * _GL_X[None, :])  # nodes on [a, 2a]
    with np.errstate(all="ignore"):
        vals = np.asarray(integrand(z.ravel()), dtype=float).reshape(z.shape)
    inc = 0.5 * a * (vals @ _GL_W)
    partial = np.cumsum(inc)
    res = {"partial": partial[jmin - 1:].tolist(), "j": list(range(jmin, jmax + 1))}
    if not np.all(np.isfinite(inc)) or np.any(inc < 0):
        return dict(res, verdict="infinite", value=np.inf, tail_ratio=np.inf)
    last = inc[-(tail + 1):]
    if np.all(last == 0):
        return dict(res, verdict="finite", value=float(partial[-1]), tail_ratio=0.0)
    with np.errstate(all="ignore"):
        ratios = last[1:] / last[:-1]
    if np.all(np.isfinite(ratios)) and np.all(ratios < decay):
        r = float(ratios[-1])
        return dict(res, verdict="finite", value=float(partial[-1] + inc[-1] * r / (1 - r)),
                    tail_ratio=r)
    if np.all(ratios > flat):
        return dict(res, verdict="infinite", value=np.inf, tail_ratio=float(ratios[-1]))
    return dict(res, verdict="inconclusive", value=float(partial[-1]),
                tail_ratio=float(ratios[-1]))


def _growth(values: np.ndarray) -> str:
    """Classify a positive sequence sampled at x = 2^j as 'bounded' or 'unbounded'."""
    with np.errstate(all="ignore"):
        slope = np.diff(np.log2(values))
    tailslope = slope[-6:]
    if np.all(tailslope > 1e-4) and np.ptp(tailslope) <= 0.1 * tailslope.max():
        return "unbounded"
    if np.all(np.abs(tailslope) < 1e-6) or (
            np.all(tailslope[1:] <= 0.75 * tailslope[:-1] + 1e-15) and tailslope[-1] < 1e-3):
        return "bounded"
    return "inconclusive"


# ---------------------------------------------------------------------------
# behaviour predictions


def flat_side_dichotomy(spec: SpeedSpec) -> dict:
    a = spec.alpha
    if a < 1:
        coef = (1 - a) * a ** (a / (1 - a))
        return {"verdict": "moves", "basis": "enclosing-sphere barrier lower displacement bound",
                "quantity": {"drop_coefficient": coef, "time_exponent": 1 / (1 - a)}}
    if a > 1:
        return {"verdict": "persists", "basis": "self-similar subsolution with a flat side",
                "quantity": {"alpha": a}}
    j = np.arange(10, 41)
    v = fhat(spec, 2.0 ** j)
    trend = _growth(v)
    verdict = {"unbounded": "moves", "bounded": "persists"}.get(trend, INCONCLUSIVE)
    return {"verdict": verdict,
            "basis": "alpha = 1: flat sides move iff f(x,1,...,1) is unbounded",
            "quantity": {"fhat_at_2^40": float(v[-1]), "growth": trend}}


def _cyl_fk(spec: SpeedSpec, k: int):
    """f_k(x, p) = f(x, p (k-1 times), 1 (n-k times)), vectorized over x and p."""
    n = spec.n

    def fk(x, p):
        x, p = np.broadcast_arrays(np.asarray(x, float), np.asarray(p, float))
        pts = np.ones(x.shape + (n,))
        pts[..., 0] = x
        pts[..., 1:k] = p[..., None]
        return eval_speed(spec, pts.reshape(-1, n)).reshape(x.shape)
    return fk


def cylinder_persistence(spec: SpeedSpec, k: int = 1, v_exponents=range(0, 21)) -> dict:
    """Integral test for persistence of regions B^k x S^(n-k) (k flat directions).

    k = 1 is the round cylinder: g(x) = fhat(x)^a - fhat(0)^a and the region
    persists when int_0^1 dz / g^{-1}(z) is finite.  For 2 <= k <= n-1 the
    test also needs limsup_{p->0} f_k(0,p)^a / p < inf and a finite
    int_0^1 dp / g_{k,p}^{-1}(V p) for some V = 2^j.
    """
    n, a = spec.n, spec.alpha
    if not 1 <= k <= n - 1:
        raise ClassifierError(f"flat dimension k must satisfy 1 <= k <= n-1 = {n - 1}")
    if k == 1:
        f0 = float(fhat(spec, 0.0)[0])
        c0 = f0 ** a

        def g(x):
            return fhat(spec, x.ravel()).reshape(x.shape) ** a - c0

        probe = g(2.0 ** -np.arange(4.0, 15.0))
        if not (np.all(probe > 0) and np.all(np.diff(probe) < 0)):
            raise ClassifierError("g is not strictly increasing near 0 (degenerate speed)")
        res = improper_integral(lambda z: 1.0 / invert_increasing(g, z))
        verdict = {"finite": "persists", "infinite": "vanishes"}.get(res["verdict"], INCONCLUSIVE)
        out = {"verdict": verdict, "k": 1, "integral": res["value"], "test": res["verdict"],
               "tail_ratio": res["tail_ratio"], "fhat0": f0,
               "basis": "homothetic or translating cylindrical subsolution"}
        if f0 > 0:
            out["shrink_rate"] = (1 + a) * c0
        return out
    fk = _cyl_fk(spec, k)
    zero_k = np.ones(n)
    zero_k[:k] = 0.0
    c0 = float(eval_speed(spec, zero_k)) ** a
    p = 2.0 ** -np.arange(4, 31)
    ratio = fk(np.zeros_like(p), p) ** a / p
    with np.errstate(all="ignore"):
        growth = np.diff(np.log2(np.where(ratio > 0, ratio, np.nan)))
    limsup_ok = bool(np.all(ratio == 0) or np.all(np.nan_to_num(growth[-6:], nan=0.0) <= 1e-6))
    tried = []
    found = None
    if limsup_ok:
        for e in v_exponents:
            V = 2.0 ** e

            def integrand(pp, V=V):
                def g(x):
                    return fk(x, pp) ** a - c0
                return 1.0 / invert_increasing(g, V * pp)

            res = improper_integral(integrand)
            tried.append({"V": V, "test": res["verdict"], "integral": res["value"]})
            if res["verdict"] == "finite":
                found = tried[-1]
                break
    if not limsup_ok:
        verdict = "vanishes"
    elif found is not None:
        verdict = "persists"
    elif tried and all(t["test"] == "infinite" for t in tried):
        verdict = "vanishes"
    else:
        verdict = INCONCLUSIVE
    return {"verdict": verdict, "k": k, "limsup_bounded": limsup_ok,
            "limsup_ratio_tail": float(ratio[-1]), "V_tried": tried,
            "integral": found["integral"] if found else np.inf,
            "fk00": c0 ** (1 / a) if c0 > 0 else 0.0,
            "basis": "k-flat cylindrical subsolution (V = 2^j, j <= 20 tested)"}


def ridge_persistence(spec: SpeedSpec) -> dict:
    """Ridge (edge of infinite curvature) persistence for alpha = 1."""
    if spec.alpha != 1:
        return {"verdict": "n/a", "reason": "only alpha = 1 is covered"}
    dspec = dualize(spec)
    f0 = float(fhat(dspec, 0.0)[0])
    if not f0 > 1e-14:
        return {"verdict": "n/a", "reason": "dual speed vanishes on the boundary", "fhat_dual0": f0}

    def g(x):
        return 1.0 / f0 - 1.0 / fhat(dspec, x.ravel()).reshape(x.shape)

    res = improper_integral(lambda z: 1.0 / invert_increasing(g, z))
    if res["verdict"] == "finite":
        verdict = "persists"
    else:
        verdict = "n/a" if res["verdict"] == "infinite" else INCONCLUSIVE
    return {"verdict": verdict, "integral": res["value"], "test": res["verdict"],
            "fhat_dual0": f0, "disc_shrink": {"r2_rate": -2.0 / f0},
            "basis": "homothetic ridge supersolution on the cylinder chart"}


def _boundary_witness(r: SpeedSpec, count: int, seed: int) -> dict | None:
    """Point a and unit direction b with b.Q.b = -delta < 0 and grad.b = 0."""
    m = r.n
    x = sample_rays(m, count, seed + 2)
    with np.errstate(all="ignore"):
        marg = _m_inverse_concave(r, x)
    marg = np.where(np.isfinite(marg), marg, np.inf)
    j = int(np.argmin(marg))
    if not marg[j] < -TOL:
        return None

    def obj(u):
        pt = np.exp(u)[None, :]
        with np.errstate(all="ignore"):
            v = _m_inverse_concave(r, pt)[0]
        return v if np.isfinite(v) else 1.0

    u0 = np.log(x[j])
    opt = optimize.minimize(obj, u0, method="Nelder-Mead",
                            options={"maxiter": 400, "xatol": 1e-10, "fatol": 1e-14})
    u = opt.x if opt.fun <= marg[j] else u0
    a = np.exp(u)
    a = a / a.max()
    v, g, h = r.raw(a[None, :], 2)
    q = h[0] + np.diag(2.0 * g[0] / a)
    lam, vec = np.linalg.eigh(q)
    if not lam[0] < -TOL * _rowsum_norm(q[None])[0]:
        return None
    b = vec[:, 0]
    b = b - (g[0] @ b) / v[0] * a  # make grad . b = 0; only lowers b.Q.b
    b = b / np.linalg.norm(b)
    delta = float(-(b @ q @ b))
    return {"a": a.tolist(), "b": b.tolist(), "delta": delta, "value": float(v[0]),
            "grad_dot_b": float(g[0] @ b)}


def singularity_flags(spec: SpeedSpec, conditions: ConditionsReport | None = None,
                      count: int = 1000, seed: int = 0) -> dict:
    c = conditions or check_conditions(spec, count, seed)
    a, n = spec.alpha, spec.n
    out = {}
    smooth = a != 1 and not c.fails("dual_boundary_nondegenerate") and c.fails("dual_vanishes_on_boundary")
    cert = None
    if smooth:
        fd0 = float(fhat(dualize(spec), 0.0)[0])
        psi = -fd0 ** -a
        cert = {"psi_flat": psi, "rate_at_equator": (1 - a) * psi,
                "rate_formula": "(1 - a)(1 - a tan^2 theta) psi on a flat part"}
    out["smoothness_loss"] = {"flag": smooth, "certificate": cert,
                              "basis": "support function with a flat set of zero radius"}
    blow = {"flag": False, "certificate": None,
            "basis": "boundary inverse-concavity of the dual speed"}
    if a == 1 and c.fails("dual_boundary_inverse_concave"):
        w = _boundary_witness(restrict_boundary(dualize(spec), n - 1), c.count, c.seed)
        if w is None:
            blow["flag"] = INCONCLUSIVE
        else:
            w["rate"] = -w["delta"] / (2 * w["value"] ** 2)
            blow.update(flag=True, certificate=w)
    out["curvature_blowup"] = blow
    conv = {"flag": False, "certificate": None, "basis": "boundary inverse-concavity of the speed"}
    if c.fails("boundary_inverse_concave"):
        w = _boundary_witness(restrict_boundary(spec, n - 1), c.count, c.seed)
        if w is None:
            conv["flag"] = INCONCLUSIVE
        else:
            w["rate"] = -a * w["value"] ** (a - 1) * w["delta"] / 2
            conv.update(flag=True, certificate=w)
    out["convexity_loss"] = conv
    return out


def _sigma_samples(n: int, seed: int, decades: float = 30.0, size: int = 40000) -> np.ndarray:
    """Points (1, y_2, ..., y_n) with y_i log-spaced down to 10^-decades."""
    if n == 2:
        y = 10.0 ** -np.linspace(0, decades, size)
        return np.column_stack([np.ones(size), y])
    if n == 3:
        side = int(np.sqrt(size))
        t = 10.0 ** -np.linspace(0, decades, side)
        yy, zz = np.meshgrid(t, t, indexing="ij")
        return np.column_stack([np.ones(side * side), yy.ravel(), zz.ravel()])
    rng = np.random.default_rng(seed)
    u = rng.uniform(0, decades, size=(size, n - 1))
    return np.column_stack([np.ones(size), 10.0 ** -u])


def _sigma_test(level: np.ndarray, obj: np.ndarray, floor: float, jmax: int = 40) -> dict:
    """ln2 * sum_j 1 / sigma(2^j), sigma(r) = min obj over samples with level <= 1/r.

    ``floor`` is the level at (1, 0, ..., 0); when it is positive no point of
    the cone reaches levels below it and sigma is +inf there.  Otherwise the
    sum stops where the samples run out of depth.
    """
    order = np.argsort(level)
    lv = level[order]
    running = np.minimum.accumulate(obj[order])
    terms = []
    for j in range(jmax + 1):
        bound = 2.0 ** -j
        i = np.searchsorted(lv, bound, side="right")
        if i == 0:
            if floor > bound:
                terms.append(0.0)
                continue
            break
        terms.append(1.0 / running[i - 1])
    terms = np.array(terms)
    if terms.size < 10:
        return {"verdict": INCONCLUSIVE, "value": float("nan"), "terms": terms.tolist()}
    tail = terms[-8:]
    if np.all(tail == 0):
        return {"verdict": "finite", "value": float(np.log(2) * terms.sum())}
    with np.errstate(all="ignore"):
        ratios = tail[1:] / tail[:-1]
    if np.all(ratios < 0.99):
        r = float(ratios[-1])
        return {"verdict": "finite", "value": float(np.log(2) * (terms.sum() + terms[-1] * r / (1 - r)))}
    if np.all(ratios > 0.999):
        return {"verdict": "infinite", "value": float("inf")}
    return {"verdict": INCONCLUSIVE, "value": float(np.log(2) * terms.sum())}


def _corner(n: int) -> np.ndarray:
    e = np.zeros(n)
    e[0] = 1.0
    return e


def _sigma_dual_trace(spec: SpeedSpec, seed: int) -> dict:
    d = dualize(spec)
    y = _sigma_samples(spec.n, seed)
    with np.errstate(all="ignore"):
        v, g, _ = d.raw(y, 1)
        ok = np.all(np.isfinite(g), axis=1) & np.isfinite(v) & (v > 0)
    return _sigma_test(v[ok], g[ok].sum(axis=1), float(eval_speed(d, _corner(spec.n))))


def _sigma_speed(spec: SpeedSpec, seed: int) -> dict:
    y = _sigma_samples(spec.n, seed)
    with np.errstate(all="ignore"):
        v, g, _ = spec.raw(y, 1)
        obj = np.sum(g * y * y, axis=1) / v ** 2
        ok = np.isfinite(obj) & np.isfinite(v) & (v > 0)
    return _sigma_test(v[ok], obj[ok], float(eval_speed(spec, _corner(spec.n))))


def regularity_class(spec: SpeedSpec, conditions: ConditionsReport | None = None,
                     count: int = 1000, seed: int = 0) -> dict:
    """Which smoothing / contraction results have their hypotheses met."""
    c = conditions or check_conditions(spec, count, seed)
    a, n = spec.alpha, spec.n
    H = c.holds
    inv = H("inverse_concave")
    conc = H("concave")
    dual0 = H("dual_vanishes_on_boundary")
    f0 = float(eval_speed(spec, np.r_[0.0, np.ones(n - 1)])) <= TOL
    bdy = H("boundary_inverse_concave") or c["boundary_inverse_concave"].verdict == NA
    dbdy = H("dual_boundary_inverse_concave") or c["dual_boundary_inverse_concave"].verdict == NA
    xnd = not c.fails("boundary_nondegenerate")
    dxnd = not c.fails("dual_boundary_nondegenerate")
    out = {}
    out["contract_inverse_concave"] = {
        "applies": inv and ((a != 1 and dual0) or (a == 1 and (dual0 or conc or n == 2 or (dxnd and dbdy)))),
        "needs": "dual concave; alpha != 1 with dual vanishing on the boundary, or alpha = 1 with one of: "
                 "dual vanishing, f concave, n = 2, dual boundary conditions"}
    out["contract_concave_alpha1"] = {"applies": a == 1 and conc and bdy,
                                      "needs": "alpha = 1, f concave, boundary inverse-concavity"}
    if n == 2:
        pts = np.array([[0.0, 1.0]])
        lower = float(eval_speed(spec, pts)[0]) > TOL
        out["contract_surfaces"] = {"applies": a == 1 or (a < 1 and lower),
                                    "needs": "n = 2 and alpha = 1, or alpha < 1 with f >= C H"}
    else:
        out["contract_surfaces"] = {"applies": False, "needs": "n = 2"}
    if n == 2 and a <= 1 and inv:
        case_i = xnd and not f0 is True and float(eval_speed(spec, np.array([0.0, 1.0]))) > TOL
        res = None
        case_ii = False
        if f0 and dual0:
            d = dualize(spec)
            res = improper_integral(lambda x: 1.0 / eval_speed(d, np.column_stack([np.ones_like(x), x])))
            case_ii = res["verdict"] == "finite"
        out["smoothing_surfaces"] = {"applies": bool(case_i or case_ii),
                                     "integral": None if res is None else res["value"],
                                     "needs": "n = 2, alpha <= 1, dual concave; boundary nondegeneracy "
                                              "or int_0^1 dx / f_*(1, x) finite"}
    else:
        out["smoothing_surfaces"] = {"applies": False, "needs": "n = 2, alpha <= 1, dual concave"}
    convex = c["concave"].margin is not None and _convex_on_samples(spec, c)
    out["smoothing_nondegenerate"] = {"applies": a <= 1 and (conc or convex) and xnd and bdy,
                                      "needs": "alpha <= 1, f concave or convex, boundary nondegenerate "
                                               "and boundary inverse-concave"}
    if a <= 1 and f0 and dual0 and inv:
        res = _sigma_dual_trace(spec, seed)
        out["smoothing_fast_diffusion_dual"] = {"applies": res["verdict"] == "finite"
                                                if res["verdict"] != INCONCLUSIVE else None,
                                                "integral": res["value"],
                                                "needs": "int_1^inf dr / (r sigma(r)) finite, sigma from the dual trace"}
    else:
        out["smoothing_fast_diffusion_dual"] = {"applies": False,
                                                "needs": "alpha <= 1, f and f_* vanish on the boundary, dual concave"}
    if a == 1 and conc and dual0 and bdy and xnd:
        res = _sigma_speed(spec, seed)
        out["smoothing_fast_diffusion"] = {"applies": res["verdict"] == "finite"
                                           if res["verdict"] != INCONCLUSIVE else None,
                                           "integral": res["value"],
                                           "needs": "int_1^inf dr / (r sigma(r)) finite, sigma = inf sum f^i k_i^2"}
    else:
        out["smoothing_fast_diffusion"] = {"applies": False,
                                           "needs": "alpha = 1, f concave, dual vanishing, boundary conditions"}
    return out


def _convex_on_samples(spec: SpeedSpec, c: ConditionsReport) -> bool:
    x = sample_rays(spec.n, c.count, c.seed)
    with np.errstate(all="ignore"):
        h = spec.raw(x, 2)[2]
        return bool(np.all(_eig_margin(-h, largest=True) >= -TOL))


# ---------------------------------------------------------------------------
# full report


def classify(spec: SpeedSpec, count: int = 1000, seed: int = 0) -> dict:
    """Conditions, behaviour predictions and the quantities behind them."""
    c = check_conditions(spec, count, seed)
    if not spec.monotone_verified and c.holds("increasing"):
        spec = replace(spec, monotone_verified=True)
    preds = {"flat_side": flat_side_dichotomy(spec)}
    cyl = {}
    for k in range(1, spec.n):
        try:
            cyl[str(k)] = cylinder_persistence(spec, k)
        except (ClassifierError, SpeedError) as exc:
            cyl[str(k)] = {"verdict": INCONCLUSIVE, "reason": str(exc)}
    preds["cylinder"] = cyl
    preds["ridge"] = ridge_persistence(spec)
    preds["singularities"] = singularity_flags(spec, c)
    preds["regularity"] = regularity_class(spec, c)
    certs = [{"prediction": "flat_side", "basis": preds["flat_side"]["basis"],
              "quantity": preds["flat_side"]["quantity"]}]
    for k, v in cyl.items():
        if v["verdict"] != INCONCLUSIVE:
            certs.append({"prediction": f"cylinder[{k}]", "basis": v["basis"],
                          "quantity": v["integral"]})
    if preds["ridge"]["verdict"] == "persists":
        certs.append({"prediction": "ridge", "basis": preds["ridge"]["basis"],
                      "quantity": preds["ridge"]["integral"]})
    for key, v in preds["singularities"].items():
        if v["flag"] is True:
            certs.append({"prediction": key, "basis": v["basis"], "quantity": v["certificate"]})
    for key in CONDITIONS:
        e = c[key]
        if e.verdict == FAILS:
            certs.append({"prediction": f"condition:{key}", "basis": "sampled witness",
                          "quantity": {"margin": e.margin, "witness": e.witness}})
    return {"spec": str(spec), "n": spec.n, "alpha": spec.alpha, "seed": seed,
            "monotone_verified": spec.monotone_verified,
            "conditions": c.to_dict(), "predictions": preds, "certificates": certs}
