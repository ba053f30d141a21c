"""Command-line driver.

One subcommand per result class: `evolve` (time series), `sweep-jt`
(coupling/time grid), `sweep-rq` (peak curves), `open` (dissipative
ensemble), `analytic` (closed-form queries), `fiber` (channel coupling
estimate).  Every run writes CSV/JSON tables plus a resolved-config YAML
that reproduces it; outputs are byte-identical across re-runs with the
same config and seed.

Exit codes: 0 success, 1 configuration error, 2 numeric non-convergence,
3 I/O error.
"""

from __future__ import annotations

import math
import os
import sys

import click
import numpy as np

from . import __version__
from . import analytics
from .config import (ConfigError, RunSpec, load_config, resolved_yaml,
                     run_t_end, time_scale)
from .entanglement import PAIRS, concurrence_series
from .hilbert import Frame, Mode, TimeGrid, build_hamiltonian, initial_state, propagate
from .opensys import ConvergenceError, lindblad_solve, pseudomode_solve, qsd_ensemble
from .params import SystemParams, ValidationError, fiber_coupling_rate, channel_coupling, mhz_to_angular
from .results import (ResultTable, gnuplot_heatmap, gnuplot_series, write_csv,
                      write_json)

_FRAME = Frame.ROTATING_AT_OMEGA_Q


def _flatten(prefix: str, node, into: dict) -> None:
    if isinstance(node, dict):
        for k in node:
            _flatten(f"{prefix}.{k}" if prefix else str(k), node[k], into)
    else:
        into[prefix] = "null" if node is None else node


def _base_meta(spec: RunSpec) -> dict:
    meta = {"tool_version": __version__}
    _flatten("cfg", spec.resolved, meta)
    if spec.params is not None:
        p = spec.params
        meta.update({"param.g_m": p.g_m, "param.g_q": p.g_q, "param.J": p.J,
                     "param.Gamma_c": p.Gamma_c,
                     "param.delta": p.omega_c - p.omega_q})
    return meta


def _emit(spec: RunSpec, tables: dict[str, ResultTable], out_dir: str,
          base: str, plot: dict | None = None) -> list[str]:
    """Write tables in the selected formats plus the resolved config."""
    os.makedirs(out_dir, exist_ok=True)
    formats = spec.output.get("formats") or ["csv"]
    written = []
    for suffix, table in tables.items():
        stem = base if suffix == "" else f"{base}_{suffix}"
        if "csv" in formats:
            path = os.path.join(out_dir, stem + ".csv")
            write_csv(table, path)
            written.append(path)
        if "json" in formats:
            path = os.path.join(out_dir, stem + ".json")
            write_json(table, path)
            written.append(path)
    cfg_path = os.path.join(out_dir, base + ".resolved.yaml")
    with open(cfg_path, "w") as fh:
        fh.write(resolved_yaml(spec))
    written.append(cfg_path)
    if plot is not None and spec.output.get("plot_script"):
        main_csv = os.path.join(out_dir, base + ".csv")
        if "csv" not in formats:
            write_csv(tables[""], main_csv)
            written.append(main_csv)
        gp_path = os.path.join(out_dir, base + ".plot.gp")
        kind = plot.pop("kind")
        if kind == "heatmap":
            gnuplot_heatmap(main_csv, gp_path, **plot)
        else:
            gnuplot_series(main_csv, gp_path, **plot)
        written.append(gp_path)
    return written


def cmd_evolve(spec: RunSpec) -> dict[str, ResultTable]:
    """Closed-system concurrence time series for the requested pairs."""
    params = spec.params
    t_end = run_t_end(spec)
    n = int(spec.run.get("n_points", 2001))
    pairs = list(spec.run.get("pairs") or ["mm"])
    grid = TimeGrid.over_window(t_end, n=n)
    H = build_hamiltonian(params, _FRAME)
    traj = propagate(H, initial_state(Mode.Q1), grid)
    scale, unit = time_scale(spec)
    columns = ["t"] + [f"C_{p}" for p in pairs] + ["norm"]
    series = [concurrence_series(traj, *PAIRS[p]).values for p in pairs]
    norms = np.sum(np.abs(traj.amplitude_array()) ** 2, axis=1)
    ts = grid.times() / scale
    rows = [tuple([float(ts[k])] + [float(s[k]) for s in series]
                  + [float(norms[k])]) for k in range(n)]
    meta = _base_meta(spec)
    meta["time_unit"] = unit
    table = ResultTable(columns=tuple(columns), rows=tuple(rows), meta=meta)
    return {"": table}


def cmd_sweep_jt(spec: RunSpec) -> dict[str, ResultTable]:
    """Magnon-magnon concurrence over a (J, t) grid, plus its peak ridge.

    The ridge table tracks, for each J, the first-period peak; revivals at
    commensurate J reach the same height later, so the first period is
    what identifies the shortest-time optimum.  The refined optimum and
    the closed-form (J_opt, t_opt) go into the metadata.
    """
    sw = spec.sweep
    g_m, g_q = spec.params.g_m, spec.params.g_q
    js = np.linspace(float(sw["j_min"]), float(sw["j_max"]), int(sw["j_points"]))
    ts = np.linspace(0.0, float(sw["t_max"]), int(sw["t_points"]))
    rows = []
    ridge_rows = []
    for j in js:
        params = SystemParams(g_m=g_m, g_q=g_q, J=float(j))
        c_of_t = analytics._concurrence_evaluator(params, "mm")
        cs = c_of_t(ts)
        rows.extend((float(j), float(t), float(c)) for t, c in zip(ts, cs))
        period = 2.0 * math.pi / math.sqrt(4.0 * (g_m ** 2 + g_q ** 2) + j * j)
        peak = analytics.numeric_peak_search(params, "mm", (0.0, 1.1 * period))
        ridge_rows.append((float(j), peak.t_star, peak.c_star,
                           float(np.max(cs))))
    j_star, t_star, c_star = analytics.find_optimal_coupling(g_m, g_q, "mm")
    opt = analytics.resonant_optimum(g_m, g_q)
    meta = _base_meta(spec)
    meta.update({"optimum_J": j_star, "optimum_t": t_star, "optimum_C": c_star,
                 "J_opt_formula": opt.J_opt, "t_opt_formula": opt.t_opt})
    main = ResultTable(columns=("J", "t", "C_mm"), rows=tuple(rows), meta=meta)
    ridge = ResultTable(
        columns=("J", "t_first_peak", "C_first_peak", "C_max_grid"),
        rows=tuple(ridge_rows), meta=dict(meta))
    return {"": main, "ridge": ridge}


def cmd_sweep_rq(spec: RunSpec) -> dict[str, ResultTable]:
    """Peak concurrence of all four pairs against the coupling ratio."""
    sw = spec.sweep
    g_m = spec.params.g_m
    lo, hi = float(sw["rq_min"]), float(sw["rq_max"])
    if lo <= 0.0 or hi <= lo:
        raise ConfigError(f"need 0 < rq_min < rq_max, got [{lo}, {hi}]")
    rqs = np.power(10.0, np.linspace(math.log10(lo), math.log10(hi),
                                     int(sw["rq_points"])))
    extra = [float(v) for v in (sw.get("rq_extra") or [])]
    rqs = np.unique(np.concatenate([rqs, np.asarray(extra, dtype=float)]))
    if rqs[0] <= 0.0:
        raise ConfigError("rq_extra values must be positive")
    simulate = bool(sw.get("simulate", True))
    pairs = ("mm", "qq", "q1m2", "m1q2")
    columns = ["r_q"] + [f"C_{p}_formula" for p in pairs]
    if simulate:
        columns += [f"C_{p}_sim" for p in pairs]
    rows = []
    for rq in rqs:
        row = [float(rq)] + [analytics.PEAK_CURVES[p](float(rq)) for p in pairs]
        if simulate:
            row += [analytics.find_optimal_coupling(g_m, float(rq) * g_m, p)[2]
                    for p in pairs]
        rows.append(tuple(row))
    meta = _base_meta(spec)
    table = ResultTable(columns=tuple(columns), rows=tuple(rows), meta=meta)
    return {"": table}


def cmd_open(spec: RunSpec) -> dict[str, ResultTable]:
    """Dissipative magnon-magnon concurrence: closed, exact bath, ensemble.

    Runs the stochastic ensemble with the configured seed, then evaluates
    the auxiliary-mode exact solution and the closed system on the same
    output grid.  Non-convergence is recorded in the metadata and table;
    the caller decides the exit status after persisting the result.
    """
    params = spec.params
    bath = spec.bath
    if bath is None:
        raise ConfigError("open needs a bath section")
    t_end = run_t_end(spec)
    run = spec.run
    ens = qsd_ensemble(
        params, bath, t_end,
        n_traj=int(run.get("n_traj", 2000)),
        master_seed=int(run.get("master_seed", 12345)),
        depth=int(run.get("depth", 4)),
        output_points=int(run.get("output_points", 401)),
        frame=_FRAME,
        backend=run.get("backend"),
        n_threads=run.get("threads"),
        probe_count=int(run.get("probe_count", 10)),
        convergence_tol=float(run.get("convergence_tol", 1e-8)))
    grid = ens.grid
    closed = propagate(build_hamiltonian(params, _FRAME),
                       initial_state(Mode.Q1), grid)
    pm = pseudomode_solve(params, bath, grid, frame=_FRAME)
    A, B = PAIRS["mm"]
    c_closed = concurrence_series(closed, A, B).values
    c_pm = concurrence_series(pm, A, B).values
    c_qsd = concurrence_series(ens, A, B).values
    se_c = 2.0 * ens.se[:, int(A) + 1, int(B) + 1]
    scale, unit = time_scale(spec)
    ts = grid.times() / scale
    rows = [(float(ts[k]), float(c_closed[k]), float(c_pm[k]),
             float(c_qsd[k]), float(se_c[k])) for k in range(grid.n)]
    meta = _base_meta(spec)
    meta.update({"time_unit": unit,
                 "master_seed": ens.meta["master_seed"],
                 "n_traj": ens.meta["n_traj"],
                 "depth": ens.meta["depth"],
                 "converged": ens.meta["converged"],
                 "depth_delta": ens.meta["depth_delta"],
                 "backend": ens.meta["backend"],
                 "convention": ens.meta["convention"],
                 "matched_markov_rate": ens.meta["matched_markov_rate"],
                 "se_mc_max": ens.meta["se_mc_max"],
                 "se_trunc_max": ens.meta["se_trunc_max"]})
    table = ResultTable(
        columns=("t", "C_mm_closed", "C_mm_pseudomode", "C_mm_qsd",
                 "C_mm_qsd_se"),
        rows=tuple(rows), meta=meta)
    return {"": table}


_ANALYTIC_PARAMS = {
    "jopt": ("g_m", "g_q"), "topt": ("g_m", "g_q"),
    "tpeak": ("g_m", "g_q", "J", "n"), "g0": ("g_m", "g_q", "J"),
    "eta": ("r_q",), "cpeak-mm": ("r_q",), "cpeak-qq": ("r_q",),
    "cpeak-q1m2": ("r_q",), "cpeak-m1q2": ("r_q",), "rqmax": ("pair",),
    "fiber": ("L", "Gamma_c_mhz"), "channel": ("xi", "L", "Gamma_c_mhz"),
}


def _analytic_eval(query: str, kv: dict) -> list[tuple[str, float]]:
    if query == "jopt":
        return [("J_opt", analytics.resonant_optimum(kv["g_m"], kv["g_q"]).J_opt)]
    if query == "topt":
        return [("t_opt", analytics.resonant_optimum(kv["g_m"], kv["g_q"]).t_opt)]
    if query == "tpeak":
        r = analytics.resonant_optimum(kv["g_m"], kv["g_q"],
                                       n=int(kv.get("n", 1)), J=kv.get("J"))
        return [("t_peak", r.t_peak)]
    if query == "g0":
        r = analytics.resonant_optimum(kv["g_m"], kv["g_q"], J=kv.get("J"))
        return [("G0", r.G0)]
    if query == "eta":
        return [("eta", analytics.eta(kv["r_q"]))]
    if query.startswith("cpeak-"):
        pair = query[len("cpeak-"):]
        return [(f"C_peak_{pair}", analytics.PEAK_CURVES[pair](kv["r_q"]))]
    if query == "rqmax":
        r = analytics.maximize_over_rq(str(kv["pair"]))
        if not r.interior:
            raise ValidationError(
                [f"pair {r.pair!r} has no interior maximum: {r.note}"])
        return [("r_q_opt", r.r_q_opt), ("C_peak", r.c_peak)]
    if query == "fiber":
        jf = fiber_coupling_rate(kv["L"], mhz_to_angular(kv["Gamma_c_mhz"]))
        return [("J_f_rad_s", jf), ("J_f_mrad_s", jf / 1e6)]
    if query == "channel":
        jf = fiber_coupling_rate(kv["L"], mhz_to_angular(kv["Gamma_c_mhz"]))
        j = channel_coupling(kv["xi"], jf)
        return [("J_f_rad_s", jf), ("J_rad_s", j), ("J_mrad_s", j / 1e6)]
    raise ValidationError(
        [f"unknown quantity {query!r}; valid: {', '.join(sorted(_ANALYTIC_PARAMS))}"])


@click.group()
@click.version_option(version=__version__, prog_name="maglink")
def cli():
    """Remote magnon/qubit entanglement toolkit."""


def _common(fn):
    fn = click.option("--config", "config_path", type=click.Path(),
                      default=None, help="YAML config file.")(fn)
    fn = click.option("--out", "out_dir", default=None,
                      help="Output directory (default $MAGLINK_OUTDIR or '.').")(fn)
    fn = click.option("--format", "fmt", type=click.Choice(["csv", "json", "both"]),
                      default=None, help="Override output formats.")(fn)
    fn = click.option("--plot-script", is_flag=True, default=False,
                      help="Also emit a gnuplot script.")(fn)
    fn = click.option("--basename", default=None,
                      help="Stem for output file names.")(fn)
    fn = click.argument("overrides", nargs=-1)(fn)
    return fn


def _prepare(command: str, config_path, out_dir, fmt, plot_script, basename,
             overrides) -> tuple[RunSpec, str, str]:
    spec = load_config(command, config_path, overrides)
    if fmt is not None:
        spec.output["formats"] = ["csv", "json"] if fmt == "both" else [fmt]
        spec.resolved.setdefault("output", {})["formats"] = spec.output["formats"]
    if plot_script:
        spec.output["plot_script"] = True
        spec.resolved.setdefault("output", {})["plot_script"] = True
    out = out_dir or os.environ.get("MAGLINK_OUTDIR") or "."
    base = basename or spec.output.get("basename") or command.replace("-", "_")
    return spec, out, base


@cli.command("evolve")
@_common
def evolve_cmd(config_path, out_dir, fmt, plot_script, basename, overrides):
    """Concurrence time series for the closed system."""
    spec, out, base = _prepare("evolve", config_path, out_dir, fmt,
                               plot_script, basename, overrides)
    tables = cmd_evolve(spec)
    ys = [c for c in tables[""].columns if c.startswith("C_")]
    written = _emit(spec, tables, out, base,
                    plot={"kind": "series", "x": "t", "ys": ys,
                          "title": "closed-system concurrence",
                          "xlabel": f"t [{tables[''].meta['time_unit']}]",
                          "ylabel": "C"})
    click.echo("\n".join(written))


@cli.command("sweep-jt")
@_common
def sweep_jt_cmd(config_path, out_dir, fmt, plot_script, basename, overrides):
    """Magnon-magnon concurrence over the (J, t) plane."""
    spec, out, base = _prepare("sweep-jt", config_path, out_dir, fmt,
                               plot_script, basename, overrides)
    tables = cmd_sweep_jt(spec)
    sw = spec.sweep
    written = _emit(spec, tables, out, base,
                    plot={"kind": "heatmap", "x": "t", "y": "J", "z": "C_mm",
                          "title": "C_mm over (J, t)", "xlabel": "t",
                          "ylabel": "J", "nx": int(sw["t_points"]),
                          "ny": int(sw["j_points"])})
    click.echo("\n".join(written))
    m = tables[""].meta
    click.echo(f"optimum: J={m['optimum_J']:.6g} t={m['optimum_t']:.6g} "
               f"C={m['optimum_C']:.6g}")


@cli.command("sweep-rq")
@_common
def sweep_rq_cmd(config_path, out_dir, fmt, plot_script, basename, overrides):
    """Peak concurrence of the four pairs against r_q."""
    spec, out, base = _prepare("sweep-rq", config_path, out_dir, fmt,
                               plot_script, basename, overrides)
    tables = cmd_sweep_rq(spec)
    ys = [c for c in tables[""].columns if c.startswith("C_")]
    written = _emit(spec, tables, out, base,
                    plot={"kind": "series", "x": "r_q", "ys": ys,
                          "title": "peak concurrence vs r_q",
                          "xlabel": "r_q", "ylabel": "C_peak"})
    click.echo("\n".join(written))


@cli.command("open")
@_common
def open_cmd(config_path, out_dir, fmt, plot_script, basename, overrides):
    """Open-system ensemble against the exact and closed references."""
    spec, out, base = _prepare("open", config_path, out_dir, fmt,
                               plot_script, basename, overrides)
    tables = cmd_open(spec)
    written = _emit(spec, tables, out, base,
                    plot={"kind": "series", "x": "t",
                          "ys": ["C_mm_closed", "C_mm_pseudomode", "C_mm_qsd"],
                          "title": "open-system concurrence",
                          "xlabel": f"t [{tables[''].meta['time_unit']}]",
                          "ylabel": "C"})
    click.echo("\n".join(written))
    meta = tables[""].meta
    if not meta["converged"]:
        raise ConvergenceError(
            f"hierarchy depth {meta['depth']} not converged: "
            f"probe delta {meta['depth_delta']:.3e} (results written)")


@cli.command("analytic")
@click.argument("query")
@click.argument("assignments", nargs=-1)
@click.option("--out", "out_dir", default=None, help="Also write the table here.")
@click.option("--basename", default=None, help="Stem for written files.")
def analytic_cmd(query, assignments, out_dir, basename):
    """Closed-form quantities, e.g.: analytic jopt g_m=0.4 g_q=0.3"""
    kv = {}
    for text in assignments:
        key, sep, raw = text.lstrip("-").partition("=")
        if not sep:
            raise click.UsageError(f"expected key=value, got {text!r}")
        try:
            kv[key] = float(raw)
        except ValueError:
            kv[key] = raw
    results = _analytic_eval(query, kv)
    for name, value in results:
        click.echo(f"{name} = {value:.17g}" if isinstance(value, float)
                   else f"{name} = {value}")
    if out_dir is not None:
        meta = {"tool_version": __version__, "query": query}
        meta.update({f"arg.{k}": v for k, v in kv.items()})
        table = ResultTable(columns=tuple(n for n, _ in results),
                            rows=(tuple(v for _, v in results),), meta=meta)
        os.makedirs(out_dir, exist_ok=True)
        base = basename or f"analytic_{query}"
        write_csv(table, os.path.join(out_dir, base + ".csv"))
        write_json(table, os.path.join(out_dir, base + ".json"))


@cli.command("fiber")
@click.option("--length", "-L", "length", type=float, required=True,
              help="Fiber length in meters.")
@click.option("--gamma-c-mhz", type=float, required=True,
              help="Cavity decay rate as nu/2pi in MHz.")
@click.option("--xi", type=float, default=1.0,
              help="Converter efficiency factor.")
def fiber_cmd(length, gamma_c_mhz, xi):
    """Fiber-mediated channel coupling estimate."""
    jf = fiber_coupling_rate(length, mhz_to_angular(gamma_c_mhz))
    j = channel_coupling(xi, jf)
    click.echo(f"J_f = {jf:.17g} rad/s ({jf / 1e6:.6g} Mrad/s)")
    click.echo(f"J   = {j:.17g} rad/s ({j / 1e6:.6g} Mrad/s) at xi={xi:g}")


def main(argv=None) -> int:
    """Run the CLI with the documented exit-code contract."""
    try:
        cli.main(args=argv, prog_name="maglink", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return 1
    except (ConfigError, ValidationError) as exc:
        click.echo(f"config error: {exc}", err=True)
        return 1
    except ConvergenceError as exc:
        click.echo(f"non-convergence: {exc}", err=True)
        return 2
    except OSError as exc:
        click.echo(f"i/o error: {exc}", err=True)
        return 3
    return 0


def entry() -> None:
    sys.exit(main())
