"""Symmetric speed functions on the positive cone.

A speed is an expression tree built from normalized elementary symmetric
quotients, power means and a couple of named functions, combined through
convex, geometric and linear combinations.  Every node evaluates its value,
gradient and Hessian in closed form on a batch of points of shape ``(m, n)``.

Duals ``f_*(x) = 1 / f(1/x)`` and limits onto boundary faces (some
coordinates sent to 0 or to infinity) are computed symbolically, so that
values at the boundary of the cone never rely on differencing.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from functools import lru_cache
from math import comb, isfinite
from typing import Sequence

import numba
import numpy as np

__all__ = [
    "SpeedSpec", "ConePoint", "DerivativeBundle", "SpeedError", "SpeedSyntaxError",
    "parse_speed", "eval_speed", "derivatives", "dualize", "restrict_boundary",
    "q_matrix", "cone_point", "fhat", "boundary_limit",
]

INTERIOR_TOL = 0.0


class SpeedError(ValueError):
    """Raised for invalid speeds or points where a speed is undefined."""


class SpeedSyntaxError(SpeedError):
    def __init__(self, msg: str, pos: int):
        super().__init__(f"{msg} at position {pos}")
        self.pos = pos


# ---------------------------------------------------------------------------
# elementary symmetric polynomials


@numba.njit(cache=True, error_model="numpy")
def _esym_kernel(x, kmax):
    m, n = x.shape
    e = np.zeros((kmax + 1, m))
    e[0, :] = 1.0
    for j in range(n):
        for k in range(min(j + 1, kmax), 0, -1):
            for a in range(m):
                e[k, a] += x[a, j] * e[k - 1, a]
    return e.T.copy()


@numba.njit(cache=True, error_model="numpy")
def _esym_ratio_kernel(x, k, l):
    m, n = x.shape
    e = np.zeros((k + 1, m))
    e[0, :] = 1.0
    for j in range(n):
        for q in range(min(j + 1, k), 0, -1):
            for a in range(m):
                e[q, a] += x[a, j] * e[q - 1, a]
    out = np.empty(m)
    for a in range(m):
        out[a] = e[k, a] / e[l, a]
    return out


def esym(x: np.ndarray, kmax: int) -> np.ndarray:
    """Unnormalized e_0..e_kmax of the last axis of ``x``, shape (..., kmax + 1)."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] == 0:
        out = np.zeros(x.shape[:-1] + (kmax + 1,))
        out[..., 0] = 1.0
        return out
    flat = np.ascontiguousarray(x.reshape(-1, x.shape[-1]))
    return _esym_kernel(flat, kmax).reshape(x.shape[:-1] + (kmax + 1,))


def _esym_derivs(x: np.ndarray, ks: tuple, order: int):
    """e_k for each k in ``ks`` with gradients and Hessians, points of shape (m, n)."""
    m, n = x.shape
    kmax = max(ks)
    full = esym(x, kmax)
    vals = [full[:, k] if k <= n else np.zeros(m) for k in ks]
    grads = hesss = None
    if order >= 1:
        grads = [np.zeros((m, n)) for _ in ks]
        if kmax >= 1:
            for i in range(n):
                e = esym(np.delete(x, i, axis=1), kmax - 1)
                for g, k in zip(grads, ks):
                    if k >= 1:
                        g[:, i] = e[:, k - 1]
    if order >= 2:
        hesss = [np.zeros((m, n, n)) for _ in ks]
        if kmax >= 2:
            for i in range(n):
                for j in range(i + 1, n):
                    e = esym(np.delete(x, [i, j], axis=1), kmax - 2)
                    for hh, k in zip(hesss, ks):
                        if k >= 2:
                            hh[:, i, j] = hh[:, j, i] = e[:, k - 2]
    return vals, grads, hesss


# ---------------------------------------------------------------------------
# expression nodes


class Node:
    """Base class.  ``ev`` returns (value, gradient, hessian) up to ``order``."""

    def ev(self, x: np.ndarray, order: int = 0):
        raise NotImplementedError

    def dual(self, n: int) -> "Node":
        return Dual(self)

    def restrict(self, n: int, m: int, at: str) -> "Node":
        """Limit as the last ``n - m`` coordinates go to 0 (``at='zero'``) or inf."""
        raise SpeedError(f"no boundary limit for {self}")


@dataclass(frozen=True)
class Const(Node):
    c: float

    def ev(self, x, order=0):
        m, n = x.shape
        return (np.full(m, self.c),
                np.zeros((m, n)) if order >= 1 else None,
                np.zeros((m, n, n)) if order >= 2 else None)

    def dual(self, n):
        return Const(np.inf if self.c == 0 else (0.0 if np.isinf(self.c) else 1.0 / self.c))

    def restrict(self, n, m, at):
        return self

    def __str__(self):
        return repr(self.c)


ZERO = Const(0.0)
INF = Const(np.inf)


def _is_zero(node):
    return isinstance(node, Const) and node.c == 0.0


def _is_inf(node):
    return isinstance(node, Const) and np.isinf(node.c)


@dataclass(frozen=True)
class Scale(Node):
    c: float
    child: Node

    def ev(self, x, order=0):
        v, g, h = self.child.ev(x, order)
        return (self.c * v,
                None if g is None else self.c * g,
                None if h is None else self.c * h)

    def dual(self, n):
        return scaled(1.0 / self.c, self.child.dual(n))

    def restrict(self, n, m, at):
        return scaled(self.c, self.child.restrict(n, m, at))

    def __str__(self):
        return f"{self.c!r}*{self.child}"


def scaled(c: float, node: Node) -> Node:
    if isinstance(node, Const):
        return Const(c * node.c)
    if isinstance(node, Scale):
        return scaled(c * node.c, node.child)
    if c == 1.0:
        return node
    return Scale(c, node)


@dataclass(frozen=True)
class ElemQuot(Node):
    """(E_k / E_l)^{1/(k-l)} with normalized E_j; l = 0 gives E_k^{1/k}."""
    k: int
    l: int = 0

    def ev(self, x, order=0):
        m, n = x.shape
        k, l = self.k, self.l
        p = 1.0 / (k - l)
        c = _quot_const(n, k, l)
        if order == 0:
            ratio = _esym_ratio_kernel(x, k, l)
            return c * (ratio if p == 1.0 else ratio ** p), None, None
        (ek, el), gg, hh = _esym_derivs(x, (k, l), order)
        gk, gl = gg if gg else (None, None)
        hk, hl = hh if hh else (None, None)
        with np.errstate(divide="ignore", invalid="ignore"):
            f = c * (ek / el) ** p
            if order == 0:
                return f, None, None
            dk = gk / ek[:, None]
            dl = gl / el[:, None]
            dL = p * (dk - dl)
            grad = f[:, None] * dL
            hess = None
            if order >= 2:
                ddL = p * (hk / ek[:, None, None] - dk[:, :, None] * dk[:, None, :]
                           - hl / el[:, None, None] + dl[:, :, None] * dl[:, None, :])
                hess = f[:, None, None] * (dL[:, :, None] * dL[:, None, :] + ddL)
            # at points where e_k = 0 the log-derivative form is 0 * inf
            bad = ek == 0
            if np.any(bad):
                grad[bad] = np.inf if p < 1 else np.nan
                if hess is not None:
                    hess[bad] = np.nan
        return f, grad, hess

    def dual(self, n):
        return _elemquot(n - self.l, n - self.k)

    def restrict(self, n, m, at):
        k, l = self.k, self.l
        p = 1.0 / (k - l)
        if at == "zero":
            if k > m:
                return ZERO
            kk, ll = k, l
        else:
            off = n - m
            if l < off:
                return INF
            kk, ll = k - off, l - off
        c = (comb(n, l) * comb(m, kk) / (comb(n, k) * comb(m, ll))) ** p
        return scaled(c, _elemquot(kk, ll))

    def __str__(self):
        return f"E({self.k})" if self.l == 0 else f"quot({self.k},{self.l})"


@lru_cache(maxsize=None)
def _quot_const(n: int, k: int, l: int) -> float:
    return (comb(n, l) / comb(n, k)) ** (1.0 / (k - l))


def _elemquot(k: int, l: int) -> ElemQuot:
    if k < l:
        k, l = l, k
    return ElemQuot(k, l)


@dataclass(frozen=True)
class PowerMean(Node):
    r: float

    def ev(self, x, order=0):
        m, n = x.shape
        r = self.r
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if r == 0:
                f = np.exp(np.mean(np.log(x), axis=1))
            else:
                f = np.mean(x ** r, axis=1) ** (1.0 / r)
            if order == 0:
                return f, None, None
            # dH/dx_i = H^{1-r} x_i^{r-1} / n
            grad = (x / f[:, None]) ** (r - 1) / n
            hess = None
            if order >= 2:
                hess = (r - 1) * (np.einsum("mi,ij->mij", grad / x, np.eye(n))
                                  - grad[:, :, None] * grad[:, None, :] / f[:, None, None])
        return f, grad, hess

    def dual(self, n):
        return PowerMean(-self.r)

    def restrict(self, n, m, at):
        r = self.r
        if (at == "zero" and r <= 0) or (at == "inf" and r >= 0):
            return ZERO if at == "zero" else INF
        return scaled((m / n) ** (1.0 / r), PowerMean(r))

    def __str__(self):
        return f"pmean({self.r!r})"


@dataclass(frozen=True)
class NormA(Node):
    """(sum of squares)^{1/2}."""

    def ev(self, x, order=0):
        f = np.sqrt(np.sum(x * x, axis=1))
        grad = hess = None
        if order >= 1:
            grad = x / f[:, None]
        if order >= 2:
            n = x.shape[1]
            hess = (np.eye(n)[None] - grad[:, :, None] * grad[:, None, :]) / f[:, None, None]
        return f, grad, hess

    def restrict(self, n, m, at):
        return NormA() if at == "zero" else INF

    def __str__(self):
        return "named(norm_A)"


@dataclass(frozen=True)
class Example1(Node):
    """Sum over pairs of x_i x_j / sqrt(x_i^2 + x_j^2)."""

    def ev(self, x, order=0):
        m, n = x.shape
        f = np.zeros(m)
        grad = np.zeros((m, n)) if order >= 1 else None
        hess = np.zeros((m, n, n)) if order >= 2 else None
        for i in range(n):
            for j in range(i + 1, n):
                a, b = x[:, i], x[:, j]
                with np.errstate(divide="ignore", invalid="ignore"):
                    rho = np.sqrt(a * a + b * b)
                    f += a * b / rho
                    if order >= 1:
                        grad[:, i] += (b / rho) ** 3
                        grad[:, j] += (a / rho) ** 3
                    if order >= 2:
                        r5 = rho ** 5
                        hess[:, i, i] += -3 * a * b ** 3 / r5
                        hess[:, j, j] += -3 * b * a ** 3 / r5
                        hess[:, i, j] += 3 * a * a * b * b / r5
                        hess[:, j, i] += 3 * a * a * b * b / r5
        return f, grad, hess

    def restrict(self, n, m, at):
        inner = Example1() if m >= 2 else ZERO
        if at == "zero":
            return inner
        if n - m >= 2:
            return INF
        # one coordinate at infinity: each pair (x_i, inf) contributes x_i
        return linear([1.0, 1.0], [inner, scaled(float(m), ElemQuot(1, 0))])

    def __str__(self):
        return "named(example1)"


@dataclass(frozen=True)
class Linear(Node):
    """Weighted sum of children; ``kind`` records the grammar form."""
    weights: tuple
    children: tuple
    kind: str = "lin"

    def ev(self, x, order=0):
        m, n = x.shape
        f = np.zeros(m)
        grad = np.zeros((m, n)) if order >= 1 else None
        hess = np.zeros((m, n, n)) if order >= 2 else None
        for w, c in zip(self.weights, self.children):
            v, g, h = c.ev(x, order)
            f = f + w * v
            if order >= 1:
                grad = grad + w * g
            if order >= 2:
                hess = hess + w * h
        return f, grad, hess

    def dual(self, n):
        return Dual(self)

    def restrict(self, n, m, at):
        return linear(self.weights, [c.restrict(n, m, at) for c in self.children], self.kind)

    def __str__(self):
        body = ",".join(f"{w!r}:{c}" for w, c in zip(self.weights, self.children))
        return f"{self.kind}({body})"


def linear(weights, children, kind="lin") -> Node:
    ws, cs = [], []
    plus_inf = minus_inf = False
    for w, c in zip(weights, children):
        if w == 0 or _is_zero(c):
            continue
        if _is_inf(c):
            plus_inf |= w > 0
            minus_inf |= w < 0
            continue
        ws.append(float(w))
        cs.append(c)
    if plus_inf and minus_inf:
        raise SpeedError("boundary limit of the linear combination is undetermined")
    if plus_inf or minus_inf:
        return INF if plus_inf else Const(-np.inf)
    if not cs:
        return ZERO
    if len(cs) == 1:
        return scaled(ws[0], cs[0])
    return Linear(tuple(ws), tuple(cs), kind)


@dataclass(frozen=True)
class Geo(Node):
    """Weighted geometric mean of children."""
    weights: tuple
    children: tuple

    def ev(self, x, order=0):
        m, n = x.shape
        parts = [c.ev(x, order) for c in self.children]
        with np.errstate(divide="ignore", invalid="ignore"):
            f = np.ones(m)
            for w, (v, _, _) in zip(self.weights, parts):
                f = f * v ** w
            if order == 0:
                return f, None, None
            dL = np.zeros((m, n))
            ddL = np.zeros((m, n, n))
            for w, (v, g, h) in zip(self.weights, parts):
                d = g / v[:, None]
                dL = dL + w * d
                if order >= 2:
                    ddL = ddL + w * (h / v[:, None, None] - d[:, :, None] * d[:, None, :])
            grad = f[:, None] * dL
            hess = f[:, None, None] * (dL[:, :, None] * dL[:, None, :] + ddL) if order >= 2 else None
        return f, grad, hess

    def dual(self, n):
        return Geo(self.weights, tuple(c.dual(n) for c in self.children))

    def restrict(self, n, m, at):
        cs = [c.restrict(n, m, at) for c in self.children]
        zero = any(_is_zero(c) and w > 0 for w, c in zip(self.weights, cs))
        inf = any(_is_inf(c) and w > 0 for w, c in zip(self.weights, cs))
        if zero and inf:
            raise SpeedError("boundary limit of the geometric mean is undetermined")
        if zero:
            return ZERO
        if inf:
            return INF
        # constant factors fold into a scale
        c0 = 1.0
        ws, keep = [], []
        for w, c in zip(self.weights, cs):
            while isinstance(c, Scale):
                c0 *= c.c ** w
                c = c.child
            if isinstance(c, Const):
                c0 *= c.c ** w
            else:
                ws.append(w)
                keep.append(c)
        return scaled(c0, Geo(tuple(ws), tuple(keep)))

    def __str__(self):
        body = ",".join(f"{w!r}:{c}" for w, c in zip(self.weights, self.children))
        return f"geo({body})"


@dataclass(frozen=True)
class Dual(Node):
    """x -> 1 / child(1/x)."""
    child: Node

    def ev(self, x, order=0):
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            y = 1.0 / x
            g, gg, hh = self.child.ev(y, order)
            f = 1.0 / g
            if order == 0:
                return f, None, None
            y2 = y * y
            grad = gg * y2 / (g * g)[:, None]
            hess = None
            if order >= 2:
                a = gg * y2
                hess = (2.0 * a[:, :, None] * a[:, None, :] / (g ** 3)[:, None, None]
                        - hh * y2[:, :, None] * y2[:, None, :] / (g * g)[:, None, None]
                        - 2.0 * np.einsum("mi,ij->mij", gg * y2 * y, np.eye(x.shape[1]))
                        / (g * g)[:, None, None])
        return f, grad, hess

    def dual(self, n):
        return self.child

    def restrict(self, n, m, at):
        other = "inf" if at == "zero" else "zero"
        return self.child.restrict(n, m, other).dual(m)

    def __str__(self):
        return f"dual({self.child})"


# ---------------------------------------------------------------------------
# public types


@dataclass(frozen=True)
class SpeedSpec:
    """A normalized symmetric speed f in ``n`` variables and power ``alpha``.

    ``expr`` is the raw expression; the speed is ``expr / norm_factor``.
    ``monotone_verified`` is False for specs built with ``lin`` until a
    condition check clears it.
    """
    n: int
    alpha: float
    expr: Node
    norm_factor: float = 1.0
    text: str = ""
    monotone_verified: bool = True
    identically_zero: bool = False

    def __call__(self, kappa) -> np.ndarray:
        return eval_speed(self, kappa)

    def raw(self, x: np.ndarray, order: int = 0):
        """Batch evaluation on interior points; no boundary handling."""
        v, g, h = self.expr.ev(x, order)
        c = 1.0 / self.norm_factor
        return c * v, None if g is None else c * g, None if h is None else c * h

    def __str__(self):
        return self.text or str(self.expr)


@dataclass(frozen=True)
class ConePoint:
    kappa: np.ndarray
    location: str  # "interior", "boundary" or "exterior"
    zeros: tuple = ()


def cone_point(kappa: Sequence[float], tol: float = INTERIOR_TOL) -> ConePoint:
    k = np.asarray(kappa, dtype=float)
    if np.any(k < 0) or not np.all(np.isfinite(k)):
        return ConePoint(k, "exterior")
    zeros = tuple(int(i) for i in np.flatnonzero(k <= tol))
    if zeros:
        k = k.copy()
        k[list(zeros)] = 0.0
        return ConePoint(k, "boundary", zeros)
    return ConePoint(k, "interior")


@dataclass
class DerivativeBundle:
    value: float
    gradient: np.ndarray
    hessian: np.ndarray = field(repr=False)


# ---------------------------------------------------------------------------
# parser

_REAL = re.compile(r"[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?")
_INT = re.compile(r"[+-]?\d+")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
NAMED = {"example1": Example1, "norm_A": NormA}


class _Parser:
    def __init__(self, text: str, n: int):
        self.s = text
        self.i = 0
        self.n = n
        self.has_linear = False

    def ws(self):
        while self.i < len(self.s) and self.s[self.i].isspace():
            self.i += 1

    def eat(self, tok: str):
        self.ws()
        if not self.s.startswith(tok, self.i):
            raise SpeedSyntaxError(f"expected {tok!r}", self.i)
        self.i += len(tok)

    def peek(self, tok: str) -> bool:
        self.ws()
        return self.s.startswith(tok, self.i)

    def match(self, rx, what):
        self.ws()
        mt = rx.match(self.s, self.i)
        if not mt:
            raise SpeedSyntaxError(f"expected {what}", self.i)
        self.i = mt.end()
        return mt.group(0)

    def integer(self) -> int:
        return int(self.match(_INT, "integer"))

    def real(self) -> float:
        return float(self.match(_REAL, "real number"))

    def expr(self) -> Node:
        self.ws()
        start = self.i
        name = self.match(_IDENT, "primitive or combinator name")
        n = self.n
        if name == "E":
            self.eat("(")
            pos = self.i
            k = self.integer()
            self.eat(")")
            if not 1 <= k <= n:
                raise SpeedSyntaxError(f"E({k}) requires 1 <= k <= n={n}", pos)
            return ElemQuot(k, 0)
        if name == "pmean":
            self.eat("(")
            r = self.real()
            self.eat(")")
            return PowerMean(r)
        if name == "quot":
            self.eat("(")
            pos = self.i
            k = self.integer()
            self.eat(",")
            l = self.integer()
            self.eat(")")
            if not (0 <= k <= n and 0 <= l <= n) or k == l:
                raise SpeedSyntaxError(f"quot({k},{l}) requires 0 <= k, l <= n={n}, k != l", pos)
            return _elemquot(k, l)
        if name == "named":
            self.eat("(")
            pos = self.i
            ident = self.match(_IDENT, "identifier")
            self.eat(")")
            if ident not in NAMED:
                raise SpeedSyntaxError(f"unknown named speed {ident!r}", pos)
            return NAMED[ident]()
        if name in ("convex", "geo", "lin"):
            self.eat("(")
            ws, cs = [], []
            while True:
                ws.append(self.real())
                self.eat(":")
                cs.append(self.expr())
                if self.peek(","):
                    self.eat(",")
                    continue
                self.eat(")")
                break
            if name != "lin":
                if any(w < 0 for w in ws) or abs(sum(ws) - 1.0) > 1e-12:
                    raise SpeedSyntaxError(f"{name} weights must be nonnegative and sum to 1", start)
            else:
                self.has_linear = True
            if name == "geo":
                return Geo(tuple(ws), tuple(cs))
            return Linear(tuple(ws), tuple(cs), name)
        raise SpeedSyntaxError(f"unknown name {name!r}", start)


def parse_speed(text: str, n: int, alpha: float = 1.0) -> SpeedSpec:
    """Parse a speed expression and normalize it so that f(1,...,1) = 1."""
    if n < 2:
        raise SpeedError("dimension n must be at least 2")
    if not alpha > 0:
        raise SpeedError("alpha must be positive")
    p = _Parser(text, n)
    expr = p.expr()
    p.ws()
    if p.i != len(text):
        raise SpeedSyntaxError("trailing input", p.i)
    nf = float(expr.ev(np.ones((1, n)))[0][0])
    if not (isfinite(nf) and nf > 0):
        raise SpeedError(f"speed is not positive at (1,...,1): {nf}")
    return SpeedSpec(n=n, alpha=float(alpha), expr=expr, norm_factor=nf,
                     text=re.sub(r"\s+", "", text), monotone_verified=not p.has_linear)


def from_node(node: Node, n: int, alpha: float = 1.0, normalize: bool = True) -> SpeedSpec:
    nf = float(node.ev(np.ones((1, n)))[0][0]) if normalize else 1.0
    return SpeedSpec(n=n, alpha=float(alpha), expr=node, norm_factor=nf, text=str(node))


# ---------------------------------------------------------------------------
# evaluation


def boundary_limit(spec: SpeedSpec, kappa: np.ndarray, jmin: int = 10, jmax: int = 40,
                   rtol: float = 1e-10) -> np.ndarray:
    """lim_{s->0+} f(kappa + s) for a batch of points, by halving s.

    A sequence that keeps shrinking by a fixed factor (power-law decay) is
    extrapolated to 0; a growing sequence is reported as non-finite.
    """
    kappa = np.atleast_2d(np.asarray(kappa, dtype=float))
    s = 2.0 ** -np.arange(jmin, jmax + 1)
    pts = kappa[None, :, :] + s[:, None, None]
    vals = spec.raw(pts.reshape(-1, kappa.shape[1]))[0].reshape(len(s), -1)
    out = np.empty(kappa.shape[0])
    for j in range(kappa.shape[0]):
        v = vals[:, j]
        d = np.abs(np.diff(v))
        scale = np.maximum(np.abs(v[1:]), 1e-300)
        ok = np.flatnonzero(d <= rtol * scale)
        if ok.size:
            out[j] = v[ok[0] + 1]
            continue
        if np.all(np.isfinite(v)):
            # increments shrinking geometrically: extrapolate the tail
            dd = np.diff(v)[-8:]
            with np.errstate(divide="ignore", invalid="ignore"):
                q = dd[1:] / dd[:-1]
            if np.all(np.isfinite(q)) and np.all((q > 0) & (q < 0.9)) and np.ptp(q) < 1e-2:
                lim = v[-1] + dd[-1] * q[-1] / (1 - q[-1])
                if abs(lim) > 1e-6 * np.max(np.abs(v)):
                    out[j] = lim
                    continue
        if np.all(np.isfinite(v)) and v[-1] < 1e-300:
            out[j] = 0.0
            continue
        if np.all(np.isfinite(v)) and np.all(v > 0):
            # power-law decay v ~ c s^p with p > 0 has a geometric tail
            rate = v[-8:] / v[-9:-1]
            if np.all(rate < 1 - 1e-3) and np.ptp(rate) < 1e-3:
                out[j] = 0.0
                continue
        raise SpeedError(f"boundary limit does not exist at {kappa[j]}")
    return out


def eval_speed(spec: SpeedSpec, kappa, method: str = "auto") -> np.ndarray | float:
    """Evaluate f at one point or a batch of points (last axis = n).

    Boundary points use the limit of f(kappa + s) as s -> 0+.  With
    ``method='auto'`` a finite direct evaluation at a boundary point is
    accepted (f is continuous up to the boundary) and the limit is only
    taken where the closed form is indeterminate; ``method='limit'`` always
    takes the limit.
    """
    k = np.asarray(kappa, dtype=float)
    scalar = k.ndim == 1
    x = np.atleast_2d(k)
    if x.shape[1] != spec.n:
        raise SpeedError(f"expected {spec.n} curvatures, got {x.shape[1]}")
    if np.any(x < 0) or np.any(np.isnan(x)):
        raise SpeedError("point outside the closed positive cone")
    val = spec.raw(x)[0]
    bnd = np.any(x == 0, axis=1)
    redo = bnd & (~np.isfinite(val) if method == "auto" else True)
    if np.any(redo):
        val = val.copy()
        val[redo] = boundary_limit(spec, x[redo])
    return float(val[0]) if scalar else val


def derivatives(spec: SpeedSpec, kappa) -> DerivativeBundle:
    x = np.atleast_2d(np.asarray(kappa, dtype=float))
    v, g, h = spec.raw(x, 2)
    if not (np.all(np.isfinite(g)) and np.all(np.isfinite(h))):
        raise SpeedError(f"derivatives not finite at {x[0]} (pole of the expression)")
    return DerivativeBundle(float(v[0]), g[0], h[0])


def dualize(spec: SpeedSpec) -> SpeedSpec:
    """The dual speed f_*(x) = 1 / f(1/x)."""
    return replace(spec, expr=spec.expr.dual(spec.n), norm_factor=1.0 / spec.norm_factor,
                   text=f"dual({spec})")


def restrict_boundary(spec: SpeedSpec, k: int) -> SpeedSpec:
    """f(x_1, ..., x_k, 0, ..., 0) as a k-variable speed (not renormalized)."""
    if not 1 <= k < spec.n:
        raise SpeedError("face dimension must satisfy 1 <= k < n")
    node = spec.expr.restrict(spec.n, k, "zero")
    if _is_inf(node) or (isinstance(node, Const) and node.c < 0):
        raise SpeedError("boundary restriction is not finite")
    return replace(spec, n=k, expr=node, text=f"restrict({spec},{k})",
                   identically_zero=_is_zero(node))


def q_matrix(spec: SpeedSpec, kappa) -> np.ndarray:
    """Q[f]_ij = f_ij + (2/x_i) f_i delta_ij; PSD everywhere iff f is inverse-concave.

    Accepts a single point or a batch; returns (n, n) or (m, n, n).
    """
    k = np.asarray(kappa, dtype=float)
    x = np.atleast_2d(k)
    if np.any(x <= 0):
        raise SpeedError("q_matrix needs interior points")
    _, g, h = spec.raw(x, 2)
    q = h + np.einsum("mi,ij->mij", 2.0 * g / x, np.eye(x.shape[1]))
    return q[0] if k.ndim == 1 else q


def fhat(spec: SpeedSpec, x) -> np.ndarray:
    """f(x, 1, ..., 1) for an array of first arguments."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    pts = np.ones((x.size, spec.n))
    pts[:, 0] = x
    return eval_speed(spec, pts)


def is_psd(q: np.ndarray, rtol: float = 1e-8) -> tuple[bool, float]:
    """PSD test with min eigenvalue >= -rtol * ||Q||_inf; returns (ok, min eig)."""
    lam = np.linalg.eigvalsh(q)
    scale = np.max(np.sum(np.abs(q), axis=-1), axis=-1)
    lo = lam[..., 0]
    return bool(np.all(lo >= -rtol * scale)), float(np.min(lo))
