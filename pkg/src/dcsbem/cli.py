"""Command-line entry point: ``dcsbem <command> [options]``."""
import json
import logging
import sys

import click

from .config import SystemConfig, load_config
from .exceptions import ParameterError
from .harness import SweepError, SweepSpec, emit_results, run_sweep, run_trial, trial_to_dict
from .verify import run_checks

DEFAULT_POINTS = {
    "snr_db": [0, 5, 10, 15, 20, 25, 30],
    "doppler_norm": [0.02, 0.057, 0.1, 0.15, 0.2],
    "n_antennas": [4, 9, 16, 25],
}


def _base_config(config_path, seed, paper_scale, **overrides):
    raw = load_config(config_path) if config_path else {}
    base = raw.get("base", raw) if isinstance(raw, dict) else {}
    sweep_fields = {k: raw[k] for k in ("points", "trials", "pilot_rule") if k in raw}
    cfg = dict(base)
    if paper_scale:
        cfg.update(N=1024, G=96, n_antennas=16)
    if seed is not None:
        cfg["seed"] = seed
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    return SystemConfig.from_dict(cfg), sweep_fields


def common_options(f):
    options = [
        click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
                     help="JSON file with SystemConfig fields (optionally under 'base') and sweep fields."),
        click.option("--seed", type=int, default=None, help="Base RNG seed."),
        click.option("--paper-scale", is_flag=True, help="Use N=1024, G=96, 16 antennas instead of the desk-scale default."),
    ]
    for opt in reversed(options):
        f = opt(f)
    return f


def sweep_options(f):
    options = [
        click.option("--trials", type=int, default=None, help="Monte-Carlo trials per point."),
        click.option("--points", type=str, default=None, help="Comma-separated axis values."),
        click.option("--out", type=click.Path(dir_okay=False), default="results.csv", show_default=True),
        click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True),
        click.option("--plot", type=click.Path(dir_okay=False), default=None, help="Write a line chart here."),
        click.option("--jobs", type=int, default=1, show_default=True, help="Worker threads."),
        click.option("--pilot-rule", type=click.Choice(["fixed", "proportional"]), default=None),
    ]
    for opt in reversed(options):
        f = opt(f)
    return f


def _run_sweep_command(axis, config_path, seed, paper_scale, trials, points, out, fmt, plot, jobs,
                       pilot_rule, default_rule="fixed"):
    try:
        base, sweep_fields = _base_config(config_path, seed, paper_scale)
        if points:
            pts = [float(p) for p in points.split(",")]
        else:
            pts = sweep_fields.get("points", DEFAULT_POINTS[axis])
        spec = SweepSpec(
            base=base,
            axis=axis,
            points=pts,
            trials=trials or sweep_fields.get("trials", 200),
            pilot_rule=pilot_rule or sweep_fields.get("pilot_rule", default_rule),
        )
        result = run_sweep(spec, n_jobs=jobs)
    except (ParameterError, SweepError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    emit_results(result, fmt=fmt, path=out, plot=plot)
    for row in result.rows:
        click.echo(f"{axis}={row['axisValue']:g}  {row['estimator']:<20s} "
                   f"{row['meanNmseDb']:8.2f} dB  +/- {row['stderr']:.2f}")
    click.echo(f"wrote {out}")


@click.group()
@click.option("-v", "--verbose", is_flag=True)
def main(verbose):
    """Compressive doubly-selective channel estimation experiments."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING)


@main.command("sweep-snr")
@common_options
@sweep_options
def sweep_snr(**kw):
    """NMSE versus SNR."""
    _run_sweep_command("snr_db", **kw)


@main.command("sweep-doppler")
@common_options
@sweep_options
def sweep_doppler(**kw):
    """NMSE versus normalized Doppler."""
    _run_sweep_command("doppler_norm", **kw)


@main.command("sweep-antennas")
@common_options
@sweep_options
def sweep_antennas(**kw):
    """NMSE versus transmit antenna count (pilots proportional to antennas by default)."""
    _run_sweep_command("n_antennas", default_rule="proportional", **kw)


@main.command("trial")
@common_options
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write the result as JSON.")
def trial(config_path, seed, paper_scale, out):
    """Run a single trial and print its result."""
    try:
        cfg, _ = _base_config(config_path, seed, paper_scale)
    except ParameterError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    result = run_trial(cfg)
    text = json.dumps({"config": cfg.to_dict(), "result": trial_to_dict(result)}, indent=2)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    click.echo(text)
    if result.failed:
        sys.exit(1)


@main.command("verify")
@click.option("--seed", type=int, default=0)
def verify(seed):
    """Check the shift, selection and observation-model identities."""
    checks = run_checks(seed)
    for c in checks:
        click.echo(c.line())
    if not all(c.passed for c in checks):
        sys.exit(1)


if __name__ == "__main__":
    main()
