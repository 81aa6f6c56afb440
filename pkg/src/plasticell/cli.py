"""Command-line front end: scenario in, data files out.

Every subcommand reads one JSON scenario (see ``config``), writes its
declared outputs into the output directory, and prints a one-line
summary. Exit codes: 0 success, 1 configuration problem, 2 numerical
failure. ``PLASTICELL_THREADS`` caps worker threads inside grid
experiments.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import analysis, experiments, serialize
from .config import RandomInitial, ScenarioConfig, load_config
from .dynamics import integrate
from .errors import ConfigError, PlasticellError
from .model import CellState, StimulusProfile, validate
from .servo import JointSpec, simulate_joint

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERIC = 2

COMMANDS = (
    "simulate",
    "equilibrium",
    "nullclines",
    "phase-portrait",
    "tau-heatmap",
    "pulse-demo",
    "opposition-surface",
    "capacity-map",
    "servo-demo",
    "validate",
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plasticell",
        description="Activator-inhibitor cellular plasticity toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="scenario JSON file")
        p.add_argument("--out", default=None, help="output directory (overrides config)")
        p.add_argument("--format", choices=("csv", "json"), default=None,
                       help="restrict output to one format")
        p.add_argument("--svg", action="store_true", help="also render SVG charts")
        p.add_argument("--seed", type=int, default=None,
                       help="seed for randomized helpers (random initial states)")
    return parser


def _outputs(cfg: ScenarioConfig, args) -> tuple[Path, set[str], bool]:
    out_dir = Path(args.out if args.out is not None else cfg.output.directory)
    out_dir.mkdir(parents=True, exist_ok=True)
    formats = {args.format} if args.format else set(cfg.output.formats)
    svg = bool(args.svg or cfg.output.svg)
    return out_dir, formats, svg


def _single_params(cfg: ScenarioConfig):
    return cfg.spec.factories[0]


def _consumption_vector(cfg: ScenarioConfig) -> np.ndarray:
    raw = cfg.experiment_params.get("consumption")
    if raw is not None:
        vec = np.atleast_1d(np.asarray(raw, dtype=float))
        if vec.shape != (cfg.spec.n,):
            raise ConfigError(
                [f"experiment.params.consumption: expected {cfg.spec.n} rates, got {vec.shape[0]}"]
            )
        return vec
    if cfg.stimulus is not None:
        return cfg.stimulus.rates_at(0.0)
    raise ConfigError(
        ["experiment.params.consumption: required when no stimulus block is present"]
    )


def _initial_state(cfg: ScenarioConfig, args, fallback: CellState | None = None) -> CellState:
    if isinstance(cfg.initial, CellState):
        return cfg.initial
    if isinstance(cfg.initial, RandomInitial):
        rng = np.random.default_rng(args.seed)
        return cfg.initial.draw(cfg.spec.n, rng)
    if fallback is not None:
        return fallback
    raise ConfigError(["initial: required for this command"])


def _cmd_simulate(cfg: ScenarioConfig, args) -> str:
    if cfg.stimulus is None:
        raise ConfigError(["stimulus: required for simulate"])
    fallback = None
    try:
        eq = analysis.multi_equilibrium(cfg.spec, cfg.stimulus.rates_at(0.0))
        fallback = CellState(eq.f_star, eq.p_star)
    except PlasticellError:
        pass
    initial = _initial_state(cfg, args, fallback)
    traj = integrate(cfg.spec, initial, cfg.stimulus, cfg.integrator)
    out_dir, formats, svg = _outputs(cfg, args)
    written = []
    if "csv" in formats:
        written.append(serialize.trajectory_csv(out_dir / "trajectory.csv", traj))
    if "json" in formats:
        written.append(serialize.trajectory_json(out_dir / "trajectory.json", traj))
    if svg:
        series = {}
        for i in range(cfg.spec.n):
            suffix = f"_{i + 1}" if cfg.spec.n > 1 else ""
            series[f"F{suffix}"] = traj.factory[:, i]
            series[f"P{suffix}"] = traj.product[:, i]
            series[f"C{suffix}"] = traj.stimulus[:, i]
        written.append(
            serialize.svg_line_chart(
                out_dir / "trajectory.svg", traj.times, series,
                title="cell trajectory", y_label="quantity",
            )
        )
    final = traj.final_state
    return (
        f"simulate: {len(traj.times)} samples to t={traj.times[-1]:g}, "
        f"final F={np.array2string(final.factory, precision=4)} "
        f"P={np.array2string(final.product, precision=4)} -> {', '.join(p.name for p in written)}"
    )


def _cmd_equilibrium(cfg: ScenarioConfig, args) -> str:
    c = _consumption_vector(cfg)
    out_dir, formats, _ = _outputs(cfg, args)
    written = []
    if cfg.spec.n == 1:
        report = analysis.classify(_single_params(cfg), float(c[0]))
        payload = report.to_dict()
        summary = (
            f"equilibrium: F={report.f_star:.6g} P={report.p_star:.6g} "
            f"trace={report.trace:.6g} det={report.det:.6g} class={report.stability_class}"
        )
        if "json" in formats or not formats:
            written.append(serialize.write_json(out_dir / "equilibrium.json", payload))
        if "csv" in formats:
            written.append(
                serialize.write_csv(
                    out_dir / "equilibrium.csv",
                    ["f_star", "p_star", "trace", "det", "discriminant", "class"],
                    [[report.f_star, report.p_star, report.trace, report.det,
                      report.discriminant, report.stability_class]],
                )
            )
    else:
        eq = analysis.multi_equilibrium(cfg.spec, c)
        written.append(serialize.equilibrium_json(out_dir / "equilibrium.json", eq))
        if "csv" in formats:
            rows = [[i + 1, eq.f_star[i], eq.p_star[i]] for i in range(cfg.spec.n)]
            written.append(
                serialize.write_csv(out_dir / "equilibrium.csv", ["factory", "f_star", "p_star"], rows)
            )
        summary = (
            f"equilibrium: total F={eq.f_star.sum():.6g} "
            f"({eq.record.iterations} iterations, residual {eq.record.residual:.2e})"
        )
    return summary + " -> " + ", ".join(p.name for p in written)


def _cmd_nullclines(cfg: ScenarioConfig, args) -> str:
    params = _single_params(cfg)
    c = float(_consumption_vector(cfg)[0])
    n = int(cfg.experiment_params.get("samples", 201))
    nc = analysis.nullclines(params, c, n=n)
    out_dir, formats, svg = _outputs(cfg, args)
    written = [serialize.nullclines_csv(out_dir / "nullclines.csv", nc)]
    if "json" in formats:
        written.append(
            serialize.write_json(
                out_dir / "nullclines.json",
                {"factory_level": nc.factory_level, "p": nc.product_p, "f": nc.product_f},
            )
        )
    if svg:
        written.append(
            serialize.svg_line_chart(
                out_dir / "nullclines.svg", nc.product_p,
                {"product nullcline F(P)": nc.product_f},
                title="nullclines", x_label="P", y_label="F",
            )
        )
    return f"nullclines: {len(nc.product_p)} samples, factory level P={nc.factory_level:.6g} -> " + ", ".join(
        p.name for p in written
    )


def _cmd_phase_portrait(cfg: ScenarioConfig, args) -> str:
    params = _single_params(cfg)
    c = float(_consumption_vector(cfg)[0])
    res = int(cfg.experiment_params.get("resolution", 25))
    f_star, p_star = analysis.single_equilibrium(params, c)
    f_max = float(cfg.experiment_params.get("f_max", max(2.0 * f_star, 1.0)))
    p_max = float(cfg.experiment_params.get("p_max", max(1.5 * params.p_lim, 1.0)))
    vf = analysis.vector_field(params, c, np.linspace(0.0, f_max, res), np.linspace(0.0, p_max, res))
    out_dir, _, _ = _outputs(cfg, args)
    written = [serialize.vector_field_csv(out_dir / "vector_field.csv", vf)]
    return (
        f"phase-portrait: {res}x{res} grid, equilibrium (F,P)=({f_star:.6g},{p_star:.6g}) -> "
        + ", ".join(p.name for p in written)
    )


def _cmd_tau_heatmap(cfg: ScenarioConfig, args) -> str:
    p = cfg.experiment_params
    grid = experiments.tau_ratio_heatmap(
        tuple(p.get("p_inf_range", (0.1, 5.0))),
        tuple(p.get("p_lim_range", (0.1, 5.0))),
        int(p.get("resolution", 50)),
        f_min_baseline=float(p.get("f_min_baseline", 0.1)),
        f_min_step=float(p.get("f_min_step", 1.0)),
        max_time=float(p.get("max_time", 500.0)),
    )
    out_dir, formats, svg = _outputs(cfg, args)
    written = [serialize.grid_csv(out_dir / "tau_ratio.csv", grid)]
    if "json" in formats:
        written.append(
            serialize.write_json(
                out_dir / "tau_ratio.json",
                {
                    "x": {"name": grid.x.name, "values": grid.x.values()},
                    "y": {"name": grid.y.name, "values": grid.y.values()},
                    "ratio": grid.values,
                    "markers": grid.markers.tolist(),
                    "tau_f": grid.extras["tau_f"],
                    "tau_p": grid.extras["tau_p"],
                    "tau_p_recovery": grid.extras["tau_p_recovery"],
                },
            )
        )
    if svg:
        written.append(
            serialize.svg_heatmap(out_dir / "tau_ratio.svg", grid, title="tau_f / tau_p")
        )
        written.append(
            serialize.svg_heatmap(
                out_dir / "tau_ratio_log.svg", grid, log_scale=True, title="log10 tau_f / tau_p"
            )
        )
    ok = grid.markers == ""
    osc = grid.markers == "oscillatory"
    return (
        f"tau-heatmap: {grid.x.count}x{grid.y.count} grid, {int(ok.sum())} measured, "
        f"{int(osc.sum())} oscillatory -> " + ", ".join(p.name for p in written)
    )


def _cmd_pulse_demo(cfg: ScenarioConfig, args) -> str:
    p = cfg.experiment_params
    res = experiments.pulse_transient(
        _single_params(cfg),
        c_base=float(p.get("c_base", 0.2)),
        pulse_height=float(p.get("pulse_height", 2.0)),
        short_span=float(p.get("short_span", 2.0)),
        long_span=float(p.get("long_span", 50.0)),
        short_start=float(p.get("short_start", 50.0)),
        long_start=float(p.get("long_start", 100.0)),
        tail=float(p.get("tail", 100.0)),
        cfg=cfg.integrator,
    )
    traj = res.trajectory
    out_dir, formats, svg = _outputs(cfg, args)
    header, rows = serialize.trajectory_rows(traj)
    header += ["F_min", "F_inf_target"]
    for s, row in enumerate(rows):
        row.extend([res.f_min_series[s], res.f_inf_series[s]])
    written = [serialize.write_csv(out_dir / "pulse.csv", header, rows)]
    if "json" in formats:
        written.append(
            serialize.write_json(
                out_dir / "pulse.json",
                {
                    "baseline_f": res.baseline_f,
                    "baseline_p": res.baseline_p,
                    "p_inf": res.p_inf,
                    "windows": res.windows,
                },
            )
        )
    if svg:
        written.append(
            serialize.svg_line_chart(
                out_dir / "pulse.svg",
                traj.times,
                {
                    "F": traj.factory[:, 0],
                    "P": traj.product[:, 0],
                    "C": traj.stimulus[:, 0],
                    "PR": traj.net_production[:, 0],
                    "F_min": res.f_min_series,
                    "F_inf": res.f_inf_series,
                },
                title="consumption pulse transient", y_label="quantity",
            )
        )
    peak = traj.factory[:, 0].max()
    return f"pulse-demo: peak F={peak:.4g} (baseline {res.baseline_f:.4g}) -> " + ", ".join(
        p.name for p in written
    )


def _cmd_opposition_surface(cfg: ScenarioConfig, args) -> str:
    p = cfg.experiment_params
    surf = experiments.opposition_surface(
        cfg.spec, tuple(p.get("c_range", (0.1, 1.0))), int(p.get("resolution", 50))
    )
    out_dir, formats, _ = _outputs(cfg, args)
    written = [serialize.opposition_csv(out_dir / "opposition_surface.csv", surf)]
    if "json" in formats:
        written.append(
            serialize.write_json(
                out_dir / "opposition_surface.json",
                {
                    "c1": surf.c1_axis.values(), "c2": surf.c2_axis.values(),
                    "f1": surf.f1, "f2": surf.f2, "p1": surf.p1, "p2": surf.p2,
                },
            )
        )
    return (
        f"opposition-surface: {surf.c1_axis.count}x{surf.c2_axis.count} grid, "
        f"all converged: {bool(surf.ok.all())} -> " + ", ".join(p.name for p in written)
    )


def _cmd_capacity_map(cfg: ScenarioConfig, args) -> str:
    p = cfg.experiment_params
    res = experiments.capacity_map(
        _single_params(cfg),
        opposition_rate=float(p.get("opposition_rate", 0.05)),
        c_range=tuple(p.get("c_range", (0.1, 1.0))),
        resolution=int(p.get("resolution", 50)),
    )
    out_dir, formats, svg = _outputs(cfg, args)
    written = [serialize.capacity_csv(out_dir / "capacity_map.csv", res)]
    if "json" in formats:
        written.append(
            serialize.write_json(
                out_dir / "capacity_map.json",
                {"c1": res.c1_axis.values(), "c2": res.c2_axis.values(),
                 "total": res.total, "totcon": res.totcon},
            )
        )
    if svg:
        grid = experiments.SweepGrid(
            x=res.c1_axis, y=res.c2_axis, metric="total_capacity",
            values=res.total, markers=np.where(res.ok, "", "failed").astype("<U16"),
        )
        written.append(serialize.svg_heatmap(out_dir / "capacity_map.svg", grid, title="total capacity"))
    totcon = p.get("contour_totcon")
    note = ""
    if totcon is not None:
        c1s, totals = experiments.capacity_along_contour(
            _single_params(cfg), float(p.get("opposition_rate", 0.05)), float(totcon)
        )
        written.append(
            serialize.write_csv(
                out_dir / "capacity_contour.csv", ["C_1", "total_capacity"],
                [[a, b] for a, b in zip(c1s, totals)],
            )
        )
        note = f", contour span {totals.min():.4g}..{totals.max():.4g}"
    return (
        f"capacity-map: center total {res.total[res.total.shape[0] // 2, res.total.shape[1] // 2]:.4g}"
        f"{note} -> " + ", ".join(p.name for p in written)
    )


def _cmd_servo_demo(cfg: ScenarioConfig, args) -> str:
    p = cfg.experiment_params
    perturbation = tuple(tuple(pair) for pair in p.get("perturbation", [[0.0, 0.0]]))
    spec = JointSpec(
        inertia=float(p.get("inertia", 1.0)),
        damping=float(p.get("damping", 0.5)),
        reference_angle=float(p.get("reference_angle", 0.0)),
        perturbation=perturbation,
        plasticity=_single_params(cfg),
        initial_angle=p.get("initial_angle"),
        initial_gain=float(p.get("initial_gain", 0.5)),
    )
    traj = simulate_joint(spec, float(p.get("duration", 200.0)), cfg.integrator)
    out_dir, formats, svg = _outputs(cfg, args)
    written = [serialize.servo_csv(out_dir / "servo.csv", traj)]
    if "json" in formats:
        written.append(
            serialize.write_json(
                out_dir / "servo.json",
                {"times": traj.times, "angle": traj.angle, "gain": traj.gain,
                 "product": traj.product, "torque_applied": traj.torque_applied},
            )
        )
    if svg:
        written.append(
            serialize.svg_line_chart(
                out_dir / "servo.svg", traj.times,
                {"angle": traj.angle, "gain F": traj.gain, "product P": traj.product,
                 "applied torque": traj.torque_applied},
                title="servo joint", y_label="value",
            )
        )
    return (
        f"servo-demo: final gain {traj.gain[-1]:.4g}, final angle {traj.angle[-1]:.4g} -> "
        + ", ".join(p.name for p in written)
    )


def _cmd_validate(cfg: ScenarioConfig, args) -> tuple[str, int]:
    report = validate(cfg.spec)
    extra: dict = {}
    p = cfg.experiment_params
    ordering_ok = True
    if p.get("tau_check") and report.ok:
        ok, tc = experiments.check_response_ordering(
            cfg.spec.factories[0],
            float(p.get("f_min_baseline", 0.1)),
            float(p.get("f_min_step", 1.0)),
        )
        ordering_ok = ok
        extra["tau_check"] = {
            "ok": ok, "tau_f": tc.tau_f, "tau_p": tc.tau_p, "ratio": tc.ratio,
        }
    out_dir, _, _ = _outputs(cfg, args)
    serialize.validation_json(out_dir / "validation.json", report, extra)
    if report.ok and ordering_ok:
        return "validate: ok -> validation.json", EXIT_OK
    issues = "; ".join(f"{i.location}: {i.message}" for i in report.issues)
    if not ordering_ok:
        issues = (issues + "; " if issues else "") + "tau_check: factory responds faster than product"
    return f"validate: INVALID ({issues}) -> validation.json", EXIT_CONFIG


_HANDLERS = {
    "simulate": _cmd_simulate,
    "equilibrium": _cmd_equilibrium,
    "nullclines": _cmd_nullclines,
    "phase-portrait": _cmd_phase_portrait,
    "tau-heatmap": _cmd_tau_heatmap,
    "pulse-demo": _cmd_pulse_demo,
    "opposition-surface": _cmd_opposition_surface,
    "capacity-map": _cmd_capacity_map,
    "servo-demo": _cmd_servo_demo,
}


def run_cli(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if cfg.experiment_name is not None and cfg.experiment_name != args.command:
            raise ConfigError(
                [f"experiment.name: scenario declares {cfg.experiment_name!r}, "
                 f"but the {args.command!r} command was invoked"]
            )
        if args.command == "validate":
            summary, code = _cmd_validate(cfg, args)
            print(summary)
            return code
        summary = _HANDLERS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PlasticellError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(summary)
    return EXIT_OK


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
