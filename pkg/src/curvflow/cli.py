"""Command-line front end: classify, flow, figure1, barrier, verify.

Every output file carries the canonical run configuration, so identical
configurations reproduce byte-identical files.  Exit codes: 0 success,
2 hypothesis violation (bad input, failed barrier hypothesis, violated
bound), 3 numeric failure (the last solver state is dumped).
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from . import axisym, barriers, classifier, io
from .speed_algebra import SpeedError, parse_speed

EXIT_OK, EXIT_HYPOTHESIS, EXIT_NUMERIC = 0, 2, 3
NUMERIC_FAILURES = ("step_collapse", "max_steps", "domain_exit")
REVERSAL_TOL = 1e-3   # relative size of a genuine tangent reversal (grid noise is ~1e-4)
BOUND_TOL = barriers.MARGIN_TOL


class InputError(ValueError):
    pass


# ---------------------------------------------------------------------------
# initial data


def _kv(text: str) -> dict:
    out = {}
    for item in filter(None, text.split(",")):
        if "=" not in item:
            raise InputError(f"expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = float(v)
    return out


def parse_init(text: str, n: int, grid: int, alpha: float) -> axisym.SupportProfile:
    """sphere:r | bump:theta0=..,h=.. or bump:theta1=..,theta2=..,h=.. |
    fourier:c0,c1,.. (s = sum c_k cos 2k theta) | cylinder:U=..,radius=.."""
    kind, _, rest = text.partition(":")
    try:
        if kind == "sphere":
            return axisym.sphere_profile(float(rest or 1.0), n, grid)
        if kind == "bump":
            kw = _kv(rest)
            return axisym.build_theorem1_data(alpha, n, N=grid, **kw)[0]
        if kind == "fourier":
            c = np.array([float(v) for v in rest.split(",")])
            th = np.linspace(0.0, np.pi / 2, grid + 1)
            s = np.cos(2 * np.outer(th, np.arange(c.size))) @ c
            prof = axisym.latitude_profile(s, n)
            r1, r2 = axisym.radii(prof)
            if min(r1.min(), r2.min()) <= 0:
                raise InputError("fourier data is not uniformly convex")
            return prof
        if kind == "cylinder":
            kw = _kv(rest)
            U = kw.pop("U", 3.0)
            radius = kw.pop("radius", 1.0)
            if kw:
                raise InputError(f"unknown cylinder parameters {sorted(kw)}")
            return axisym.cylinder_profile(np.full(grid + 1, radius), U, n)
    except (TypeError, ValueError) as exc:
        raise InputError(f"bad init {text!r}: {exc}") from exc
    raise InputError(f"unknown init kind {kind!r}")


# ---------------------------------------------------------------------------
# writers


def _write_trajectory(prefix, traj, cfg):
    grid = traj.profiles[0].grid
    name = "u" if traj.profiles[0].chart == "cylinder" else "theta"
    header = ["t"] + [f"{name}_{j}" for j in range(grid.size)]
    io.write_csv(f"{prefix}_trajectory.csv", header,
                 ([t, *p.values] for t, p in zip(traj.times, traj.profiles)), cfg,
                 comments=[f"chart={traj.profiles[0].chart} n={traj.profiles[0].n}",
                           "grid=" + ",".join(io.fmt(g) for g in grid)])
    io.write_csv(f"{prefix}_diagnostics.csv", ["t", *axisym.DIAG_KEYS],
                 ([t, *(d[k] for k in axisym.DIAG_KEYS)] for t, d in zip(traj.times, traj.diagnostics)),
                 cfg)


def _write_embedding(path, prof, t, cfg):
    th, x, y = axisym.embed(prof)
    io.write_csv(path, ["theta", "x", "y"], zip(th, x, y), cfg, comments=[f"t={io.fmt(t)}"])


def read_trajectory(path, spec) -> axisym.Trajectory:
    """Rebuild a latitude- or cylinder-chart trajectory from a trajectory CSV."""
    header, data, comments = io.read_csv(path)
    meta = dict(item.split("=", 1) for item in comments[-2].split())
    grid = np.array([float(v) for v in comments[-1].split("=", 1)[1].split(",")])
    data = np.atleast_2d(data)
    profs = [axisym.SupportProfile(meta["chart"], grid, row[1:], int(meta["n"])) for row in data]
    diags = [axisym.diagnostics(p, spec) for p in profs]
    traj = axisym.Trajectory(list(data[:, 0]), profs, diags)
    scale = np.max(profs[0].values)
    for t, p in zip(traj.times, profs):
        r1 = axisym.radii(p)[0]
        if r1.min() < -1e-9 * scale:
            traj.events.append({"kind": "r1_negative", "t": float(t)})
            break
    return traj


def _spec(args):
    return parse_speed(args.speed, args.n, args.alpha)


def _config(args, command, **extra) -> io.RunConfig:
    return io.RunConfig(command=command, speed=args.speed, n=args.n, alpha=float(args.alpha),
                        init=extra.get("init", getattr(args, "init", "") or ""),
                        grid=args.grid, t_end=None if args.tend is None else float(args.tend),
                        seed=args.seed, out=args.out, extend=args.extend,
                        kind=getattr(args, "kind", "") or "")


def _failed_bounds(report: barriers.BoundReport) -> list:
    return [r.name for r in report.records
            if r.checked and r.name != "upper_speed" and r.worst < -BOUND_TOL]


# ---------------------------------------------------------------------------
# commands


def cmd_classify(args) -> int:
    spec = _spec(args)
    cfg = _config(args, "classify")
    rep = classifier.classify(spec, count=args.samples, seed=args.seed)
    io.write_json(f"{args.out}_classify.json", rep, cfg)
    pred = rep["predictions"]
    print(f"flat sides: {pred['flat_side']['verdict']}")
    for k, v in pred["cylinder"].items():
        print(f"cylinder k={k}: {v['verdict']}")
    print(f"ridge: {pred['ridge']['verdict']}")
    return EXIT_OK


def _run_flow(args, spec, prof, cfg):
    t_end = 0.1 if args.tend is None else args.tend
    traj = axisym.evolve(prof, spec, t_end, extend=args.extend == "continue", n_store=args.store)
    if traj.profiles:
        _write_trajectory(args.out, traj, cfg)
    if traj.status in NUMERIC_FAILURES:
        # a failure on the initial data leaves nothing stored
        last = traj.profiles[-1] if traj.profiles else prof
        t_last = traj.times[-1] if traj.times else 0.0
        io.write_csv(f"{args.out}_state.csv", ["x", "value"], zip(last.grid, last.values), cfg,
                     comments=[f"t={io.fmt(t_last)} status={traj.status}", traj.message])
    return traj


def cmd_flow(args) -> int:
    spec = _spec(args)
    prof = parse_init(args.init, args.n, args.grid, args.alpha)
    cfg = _config(args, "flow")
    traj = _run_flow(args, spec, prof, cfg)
    if not traj.profiles:
        io.write_json(f"{args.out}_run.json", {"status": traj.status, "message": traj.message,
                                               "steps": 0, "events": traj.events}, cfg)
        print(f"status {traj.status} at t = 0: {traj.message}")
        return EXIT_NUMERIC
    if prof.chart == "latitude":
        _write_embedding(f"{args.out}_embedding.csv", traj.profiles[-1], traj.times[-1], cfg)
    out = {"status": traj.status, "message": traj.message, "steps": traj.steps,
           "events": traj.events, "t_final": traj.times[-1],
           "final_min": float(traj.profiles[-1].values.min()),
           "final_max": float(traj.profiles[-1].values.max())}
    code = EXIT_NUMERIC if traj.status in NUMERIC_FAILURES else EXIT_OK
    if prof.chart == "latitude" and code == EXIT_OK:
        rep = barriers.verify_trajectory(traj, spec)
        out["bounds"] = rep.to_dict()
        out["failed_bounds"] = _failed_bounds(rep)
    io.write_json(f"{args.out}_run.json", out, cfg)
    print(f"status {traj.status} at t = {io.fmt(traj.times[-1])}, steps {traj.steps}")
    for e in traj.events:
        print(f"event {e['kind']} at t = {io.fmt(e['t'])}")
    return code


def _tangent_turning(prof) -> np.ndarray:
    """Tangent of the embedded curve projected on (-sin, cos), by differences of the curve."""
    th, x, y = axisym.embed(prof, close=False)
    dx = np.roll(x, -1) - np.roll(x, 1)
    dy = np.roll(y, -1) - np.roll(y, 1)
    return (-np.sin(th) * dx + np.cos(th) * dy) / (2 * prof.h)


def reversal(prof, tol: float = REVERSAL_TOL) -> dict:
    """Orientation reversal of the embedded curve, by two routes."""
    tu = axisym.turning(prof)
    tt = _tangent_turning(prof)
    scale = np.abs(tu).max()
    return {"turning_min": float(tu.min() / scale), "tangent_min": float(tt.min() / scale),
            "reverses": bool(tu.min() < -tol * scale and tt.min() < -tol * scale)}


FIGURE_PRESETS = {
    0.5: {"bump": {"theta0": 0.63, "h": 1.0}, "t_end": 0.01},
    2.0: {"bump": {"theta1": 0.8, "theta2": 1.2}, "t_end": 3e-4},
}


def cmd_figure1(args) -> int:
    a = float(args.alpha)
    preset = FIGURE_PRESETS.get(a)
    if preset is None:
        preset = ({"bump": {"theta0": 0.63, "h": 1.0}, "t_end": 0.01} if a < 1
                  else {"bump": {"theta1": 0.8, "theta2": 1.2}, "t_end": 3e-4})
    speed = args.speed if args.speed_given else f"quot({args.n},{args.n - 1})"
    args.speed = speed
    spec = parse_speed(speed, args.n, a)
    if args.tend is None:
        args.tend = preset["t_end"]
    init = "bump:" + ",".join(f"{k}={v!r}" for k, v in preset["bump"].items())
    cfg = _config(args, "figure1", init=init)
    prof = axisym.build_theorem1_data(a, args.n, N=args.grid, **preset["bump"])[0]
    traj = axisym.evolve(prof, spec, args.tend, extend=True, n_store=args.store)
    _write_trajectory(args.out, traj, cfg)
    ev = traj.event("r1_negative")
    after = [i for i, t in enumerate(traj.times) if ev is not None and t >= ev["t"]]
    mins = traj.diag("min_r1")
    k = min(after, key=lambda i: mins[i]) if after else len(traj.times) - 1
    _write_embedding(f"{args.out}_embed_initial.csv", traj.profiles[0], 0.0, cfg)
    _write_embedding(f"{args.out}_embed_evolved.csv", traj.profiles[k], traj.times[k], cfg)
    th = traj.profiles[k].grid
    r1 = axisym.radii(traj.profiles[k])[0]
    io.write_csv(f"{args.out}_radius_evolved.csv", ["theta", "r1"], zip(th, r1), cfg,
                 comments=[f"t={io.fmt(traj.times[k])}"])
    out = {"status": traj.status, "events": traj.events, "evolved_t": traj.times[k],
           "initial": reversal(traj.profiles[0]), "evolved": reversal(traj.profiles[k]),
           "negative_arc": [float(th[r1 < 0].min()), float(th[r1 < 0].max())] if np.any(r1 < 0) else None}
    io.write_json(f"{args.out}_figure.json", out, cfg)
    print(f"r1_negative at t = {io.fmt(ev['t']) if ev else 'never'}; "
          f"evolved state t = {io.fmt(traj.times[k])}, reverses = {out['evolved']['reverses']}")
    if traj.status in NUMERIC_FAILURES:
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_barrier(args) -> int:
    cfg = _config(args, "barrier")
    kind = args.kind
    if kind == "flatside":
        bp = barriers.build_flat_subsolution(args.alpha, samples=args.samples or 10_000)
    else:
        spec = _spec(args)
        if kind == "cylinder":
            bp = barriers.build_cylindrical_subsolution(spec, samples=args.samples or 10_000)
        elif kind == "graph":
            t = 0.1 if args.tend is None else args.tend
            bp = barriers.build_graph_supersolution(spec, args.R_plus, 2 * args.R_plus / t,
                                                    samples=args.samples or 10_000)
        elif kind == "ridge":
            bp = barriers.build_ridge_supersolution(spec, samples=args.samples or 10_000)
        else:
            raise InputError(f"unknown barrier kind {kind!r}")
    io.write_csv(f"{args.out}_barrier.csv", ["x", "value", "margin"],
                 zip(bp.x, bp.value, bp.margin), cfg)
    scalars = {k: v for k, v in bp.params.items()
               if isinstance(v, (int, float, str, np.floating)) or v is None}
    io.write_json(f"{args.out}_barrier.json", {"kind": bp.kind, "certificate": bp.certificate,
                                                 "accepted": bp.accepted, "samples": bp.x.size,
                                                 "params": scalars}, cfg)
    print(f"{bp.kind}: certificate {io.fmt(bp.certificate)}, accepted = {bp.accepted}")
    for k in ("beta", "r0", "V", "sigma", "u1"):
        if bp.params.get(k) is not None:
            print(f"{k} = {io.fmt(bp.params[k])}")
    return EXIT_OK if bp.accepted else EXIT_HYPOTHESIS


def cmd_verify(args) -> int:
    spec = _spec(args)
    if args.traj:
        traj = read_trajectory(args.traj, spec)
        cfg = _config(args, "verify", init=f"traj:{args.traj}")
    else:
        prof = parse_init(args.init, args.n, args.grid, args.alpha)
        cfg = _config(args, "verify")
        traj = _run_flow(args, spec, prof, cfg)
        if traj.status in NUMERIC_FAILURES:
            return EXIT_NUMERIC
    rep = barriers.verify_trajectory(traj, spec)
    failed = _failed_bounds(rep)
    io.write_json(f"{args.out}_bounds.json", {**rep.to_dict(), "failed": failed}, cfg)
    for r in rep.records:
        state = "checked" if r.checked else "skipped"
        print(f"{r.name:20s} {state:8s} worst {io.fmt(r.worst)}")
    return EXIT_HYPOTHESIS if failed else EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--speed", default=None, help="speed expression (default E(1))")
    common.add_argument("--n", type=int, default=2, help="hypersurface dimension")
    common.add_argument("--alpha", type=float, default=1.0, help="power of the speed")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--grid", type=int, default=256, help="grid intervals on the chart")
    common.add_argument("--tend", type=float, default=None, help="final time")
    common.add_argument("--out", default="curvflow_out/run", help="output file prefix")
    common.add_argument("--extend", choices=("stop", "continue"), default="continue",
                        help="continue past the first negative radius or stop there")
    common.add_argument("--store", type=int, default=100, help="number of evenly stored steps")
    p = argparse.ArgumentParser(prog="curvflow", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    c = sub.add_parser("classify", parents=[common], help="conditions and predicted behaviour")
    c.add_argument("--samples", type=int, default=1000)
    f = sub.add_parser("flow", parents=[common], help="evolve axisymmetric initial data")
    f.add_argument("--init", default="sphere:1")
    sub.add_parser("figure1", parents=[common], help="negative-radius figure data")
    b = sub.add_parser("barrier", parents=[common], help="build a barrier and its certificate")
    b.add_argument("--kind", required=True, choices=("flatside", "cylinder", "graph", "ridge"))
    b.add_argument("--samples", type=int, default=None)
    b.add_argument("--R-plus", dest="R_plus", type=float, default=1.0)
    v = sub.add_parser("verify", parents=[common], help="a priori bounds along a trajectory")
    v.add_argument("--traj", default=None, help="trajectory CSV written by 'flow'")
    v.add_argument("--init", default="sphere:1")
    return p


COMMANDS = {"classify": cmd_classify, "flow": cmd_flow, "figure1": cmd_figure1,
            "barrier": cmd_barrier, "verify": cmd_verify}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    args.speed_given = args.speed is not None
    if args.speed is None:
        args.speed = "E(1)"
    try:
        return COMMANDS[args.command](args)
    except (SpeedError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except (axisym.DomainExit, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    raise SystemExit(main())
