"""Command-line workflows: forward, backward, expand, verify.

Every run writes the fully resolved config next to its outputs as
``config.ini``; feeding that file back reproduces the run byte for byte.
Exit status: 0 ok, 2 invalid config, 3 numerical failure, 4 failed checks.
"""

import argparse
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import analysis
from .ansatz import ScatteringData
from .config import ConfigError, read_config
from .grid import make_grid, norm
from .profiles import evaluate_preset
from .scatter import (extract, fit_rate, profile_error, rate_section, write_extracted,
                      write_summary)
from .series import (AsymSeries, SeriesContractError, evaluate_series, expand,
                     psi_of_series, write_series)
from .solver import (BlowUpError, ConvergenceError, ProfileState, StepControl, _Background,
                     constructed_profile, duhamel_iterate_high_order, march_sourced, mass,
                     nonlinear_difference, solve_forward)

log = logging.getLogger("modscat")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VERIFY = 0, 2, 3, 4


# --- helpers shared by the workflows


def _grid(cfg):
    return make_grid(cfg.grid.half_length, cfg.grid.n)


def _data(cfg, grid):
    y = grid.points
    return ScatteringData(grid, evaluate_preset(cfg.data.a, y), evaluate_preset(cfg.data.b, y),
                          cfg.equation.beta, cfg.equation.gamma)


def _snap_times(t0, t1, count):
    return tuple(float(t) for t in np.geomspace(t0, t1, count))


def initial_profile(grid, epsilon, preset, t0):
    """V(t0, y) for physical data v(t0, x) = epsilon f(x)."""
    y = grid.points
    f = evaluate_preset(preset, t0 * y)
    return np.sqrt(t0) * np.exp(-0.25j * t0 * y**2) * epsilon * f


def write_trajectory(path, states, label="V"):
    """One block per snapshot: a ``# s = ...`` line, a column header, the rows."""
    with open(path, "w") as fh:
        for st in states:
            fh.write(f"# s = {st.s:.17g}\n# y re({label}) im({label})\n")
            for y, z in zip(st.grid.points, st.V):
                fh.write(f"{y:.17g} {z.real:.17g} {z.imag:.17g}\n")
            fh.write("\n")


# the construction rate is fitted on [20, 500], a little under 1.5 decades
BACKWARD_MIN_DECADES = 1.3


def _fit_or_none(s, v, qmax, min_decades=1.5):
    if np.all(v == 0):
        return None
    return fit_rate(s, v, qmax, min_decades)


def forward_run(cfg, grid):
    f = cfg.forward
    beta, gamma = cfg.equation.beta, cfg.equation.gamma
    V = initial_profile(grid, f.epsilon, f.initial, f.t_start)
    ctl = StepControl(f.dt, snapshot_times=_snap_times(f.t_start, f.t_end, f.snapshots))
    return solve_forward(ProfileState(f.t_start, V, grid), f.t_end, ctl, beta, gamma)


def backward_run(cfg, grid):
    b = cfg.backward
    data = _data(cfg, grid)
    V_N = expand(data, b.order)[-1] if b.order > 0 else AsymSeries.leading(data)
    ctl = StepControl(b.dt, snapshot_times=_snap_times(b.t_min, b.t_max, b.snapshots))
    traj, ilog = duhamel_iterate_high_order(V_N, b.t_max, b.t_min, ctl, b.max_iters, b.tol)
    return data, V_N, traj, ilog


def backward_deviation(data, V_N, traj):
    """Physical ||v - v0||_inf + ||v - v0||_2 at each snapshot."""
    V0 = AsymSeries.leading(data)
    out = []
    for st in traj:
        D = evaluate_series(V_N, st.s) - evaluate_series(V0, st.s) + st.V
        out.append(norm(st.grid, D, "Linf") / np.sqrt(st.s) + norm(st.grid, D, "L2"))
    return np.array(out)


# --- workflows


def cmd_forward(cfg, out: Path, jobs=1):
    grid = _grid(cfg)
    f = cfg.forward
    beta, gamma = cfg.equation.beta, cfg.equation.gamma
    traj = forward_run(cfg, grid)
    write_trajectory(out / "trajectory.txt", traj)
    ext = extract(traj, beta, gamma, fit_window=(f.fit_min, f.fit_max))
    write_extracted(out / "extracted.txt", ext)
    summary = {
        "extraction": {"degenerate": str(ext.degenerate).lower(), "final_s": repr(ext.final_s),
                       "masked_points": int(ext.mask.sum())},
        "rate_modulus": rate_section(ext.rate_modulus),
        "rate_phase": rate_section(ext.rate_phase),
    }
    if not ext.degenerate:
        s = np.array([st.s for st in traj])
        sel = (s >= f.fit_min) & (s <= f.fit_max)
        err = profile_error(traj, ext.as_scattering_data(beta, gamma)) / np.sqrt(s)
        summary["residual_rate"] = rate_section(_fit_or_none(s[sel], err[sel], 0))
    else:
        summary["residual_rate"] = rate_section(None)
    write_summary(out / "summary.ini", summary)
    return EXIT_OK


def cmd_backward(cfg, out: Path, jobs=1):
    grid = _grid(cfg)
    b = cfg.backward
    data, V_N, traj, ilog = backward_run(cfg, grid)
    write_trajectory(out / "remainder.txt", traj, "W")
    rows = [(r["k"], r["sup_l2"], r["weighted_diff"], r["energy_ok"], r["derivative_energy_ok"],
             r["bound_ok"]) for r in ilog.records]
    np.savetxt(out / "iterations.txt", np.array(rows, float), fmt=["%d", "%.10e", "%.10e", "%d", "%d", "%d"],
               header="k sup_l2 weighted_diff energy_ok derivative_energy_ok bound_ok")
    s = np.array([st.s for st in traj])
    dev = backward_deviation(data, V_N, traj)
    # the remainder vanishes at t_max by construction, so that sample is left out
    sel = (s >= b.fit_min) & (s <= b.fit_max) & (s < b.t_max)
    fit = _fit_or_none(s[sel], dev[sel], b.log_power_max, BACKWARD_MIN_DECADES)
    np.savetxt(out / "deviation.txt", np.column_stack([s, dev]), fmt="%.17g", header="t |v-v0|_inf+|v-v0|_2")
    write_summary(out / "summary.ini", {
        "iteration": {"converged_at": ilog.converged_at, "measured_K": f"{ilog.K:.10g}",
                      "iterates": len(ilog.records)},
        "rate": rate_section(fit),
    })
    return EXIT_OK


def residual_table(Vs, s_min, s_max, samples, qmax):
    s = np.geomspace(s_min, s_max, samples)
    rows = []
    for n, V in enumerate(Vs):
        R = psi_of_series(V, 5 * n + 4)
        vals = np.array([np.max(np.abs(evaluate_series(R, si))) if R.terms else 0.0 for si in s])
        rows.append((n, _fit_or_none(s, vals, qmax)))
    return rows


def cmd_expand(cfg, out: Path, jobs=1):
    e = cfg.expand
    grid = _grid(cfg)
    data = _data(cfg, grid)
    Vs = expand(data, e.order, e.truncation or None)
    for n, V in enumerate(Vs):
        write_series(out / f"series_{n}.txt", V)
    rows = residual_table(Vs, e.s_min, e.s_max, e.samples, e.log_power_max)
    with open(out / "residual_rates.txt", "w") as fh:
        fh.write("# n exponent log_power residual_rms degenerate\n")
        for n, fit in rows:
            if fit is None:
                fh.write(f"{n} 0 0 0 1\n")
            else:
                fh.write(f"{n} {fit.exponent:.10g} {fit.log_power} {fit.residual_rms:.6g} 0\n")
    return EXIT_OK


# --- verify


def _chunks(n, parts):
    edges = np.linspace(0, n, parts + 1).astype(int)
    return [(a, b) for a, b in zip(edges, edges[1:]) if b > a]


def suite_reports(seed, count, jobs, beta, gamma):
    """Worst report per inequality over the random suite, plus violation counts."""
    grid, fields = analysis.random_suite(seed, count)

    def work(span):
        out = []
        for V in fields[span[0]:span[1]]:
            reps = [analysis.check_supnorm_bound(grid, V)]
            reps += [analysis.check_interpolation(grid, V, j, k) for j, k in analysis.INTERPOLATION_PAIRS]
            reps += analysis.check_source_bounds(grid, V, 10.0, beta, gamma)
            out.append(reps)
        return out

    spans = _chunks(len(fields), max(1, jobs))
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        results = [r for part in pool.map(work, spans) for r in part]
    worst, violations = {}, {}
    for reps in results:
        for r in reps:
            violations[r.name] = violations.get(r.name, 0) + (not r.satisfied)
            ratio = r.lhs / r.rhs if r.rhs > 0 else 0.0
            if r.name not in worst or ratio > worst[r.name][0]:
                worst[r.name] = (ratio, r)
    return {name: (violations[name], worst[name][1]) for name in sorted(worst)}


def energy_check(cfg, grid, dt):
    """Sourced remainder march around V0 over s in [t_min, t_min + 10]."""
    data = _data(cfg, grid)
    bg = _Background(AsymSeries.leading(data))
    beta, gamma = data.beta, data.gamma

    def source(s, W):
        Vb, R = bg(s)
        return (nonlinear_difference(Vb, W, beta / s, gamma / s**2) - R)

    s0 = cfg.backward.t_min
    t, ws, ss = march_sourced(grid, np.zeros(grid.n, complex), s0, s0 + 10.0, dt, source, profile=True)
    return analysis.energy_identity_mismatch(grid, t, ws, ss)


def splitting_error(grid, V, s0, s1, dt, beta, gamma, ref):
    end = solve_forward(ProfileState(s0, V, grid), s1, StepControl(dt), beta, gamma)[-1]
    return norm(grid, end.V - ref, "L2")


def cmd_verify(cfg, out: Path, jobs=1):
    grid = _grid(cfg)
    v = cfg.verify
    beta, gamma = cfg.equation.beta, cfg.equation.gamma
    checks = {}

    def record(name, value, limit, ok):
        checks[name] = {"value": f"{value:.6e}", "limit": f"{limit:.6e}", "pass": str(bool(ok)).lower()}

    for name, (nviol, worst) in suite_reports(cfg.run.seed, v.suite_count, jobs, beta, gamma).items():
        record(name, nviol, 0, nviol == 0)
        checks[name]["worst_ratio"] = f"{worst.lhs / worst.rhs if worst.rhs else 0.0:.6e}"

    e1 = energy_check(cfg, grid, v.energy_dt)
    e2 = energy_check(cfg, grid, 2 * v.energy_dt)
    record("energy_identity", e1, v.energy_tol, e1 <= v.energy_tol)
    record("energy_identity_order", e2 / e1 if e1 > 0 else 0.0, 4.0, 3.0 <= e2 / max(e1, 1e-300) <= 5.0)

    f = cfg.forward
    V1 = initial_profile(grid, f.epsilon, f.initial, f.t_start)
    traj = forward_run(cfg, grid)
    m = np.array([mass(grid, st.V) for st in traj])
    drift = float(np.max(np.abs(m / m[0] - 1))) if m[0] > 0 else 0.0
    record("mass", drift, v.mass_tol, drift <= v.mass_tol)

    # Strang order: errors against a fine reference at dt and dt/2
    s0, s1 = f.t_start, f.t_start + 1.0
    ref = solve_forward(ProfileState(s0, V1, grid), s1, StepControl(0.0125 / 8), beta, gamma)[-1].V
    ea = splitting_error(grid, V1, s0, s1, 0.025, beta, gamma, ref)
    eb = splitting_error(grid, V1, s0, s1, 0.0125, beta, gamma, ref)
    ratio = ea / eb if eb > 0 else 0.0
    record("splitting_order", ratio, 4.0, f.epsilon == 0 or 3.0 <= ratio <= 5.0)

    boot = analysis.bootstrap_monitor(traj, fit_min=min(10.0, f.t_end / 40))
    for key, val in boot["exponents"].items():
        checks.setdefault("bootstrap", {})[key] = f"{val:.6e}"
    boot_ok = boot["l2_ok"] and boot["d2_linf_ok"] and boot["linf_bounded"]
    checks["bootstrap"]["pass"] = str(boot_ok).lower()

    if v.closed_loop:
        data, V_N, btraj, _ = backward_run(cfg, grid)
        start = constructed_profile(V_N, btraj[:1])[0]
        t_min = start.s
        ctl = StepControl(v.forward_dt, snapshot_times=_snap_times(t_min, v.forward_end, 60))
        fw = solve_forward(start, v.forward_end, ctl, beta, gamma)
        ext = extract(fw, beta, gamma)
        da = float(np.max(np.abs(ext.a - data.a)))
        db = float(np.max(np.abs(ext.b - data.b)[ext.mask])) if ext.mask.any() else 0.0
        record("closed_loop_a", da, v.a_tol, da <= v.a_tol)
        record("closed_loop_b", db, v.b_tol, db <= v.b_tol)

    with open(out / "reports.txt", "w") as fh:
        fh.write("# check value limit pass\n")
        for name, body in checks.items():
            if "value" in body:
                fh.write(f"{name} {body['value']} {body['limit']} {body['pass']}\n")
    passed = all(body["pass"] == "true" for body in checks.values())
    checks["verdict"] = {"pass": str(passed).lower(), "seed": cfg.run.seed}
    write_summary(out / "summary.ini", checks)
    return EXIT_OK if passed else EXIT_VERIFY


COMMANDS = {"forward": cmd_forward, "backward": cmd_backward, "expand": cmd_expand, "verify": cmd_verify}


def build_parser():
    p = argparse.ArgumentParser(prog="modscat", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="config file (key = value with sections)")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--jobs", type=int, default=1, help="threads for independent sub-runs")
    p.add_argument("--seed", type=int, help="override [run] seed")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {("run", "seed"): args.seed} if args.seed is not None else None
    try:
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        cfg = read_config(args.config, overrides)
    except (ConfigError, OSError) as exc:
        print(f"modscat: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.ini").write_text(cfg.to_text())
    try:
        return COMMANDS[args.command](cfg, out, args.jobs)
    except ConvergenceError as exc:
        print(f"modscat: no convergence: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (BlowUpError, SeriesContractError, FloatingPointError) as exc:
        print(f"modscat: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"modscat: invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
