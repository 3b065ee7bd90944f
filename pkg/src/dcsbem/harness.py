"""Monte-Carlo experiments: single trials, parameter sweeps and result files."""
import csv
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from typing import Optional

import numpy as np

from . import __version__
from .channel import (
    add_noise,
    apply_channel_time,
    generate_bem_channel,
    generate_ds_channel,
    generate_support,
    ofdm_demodulate,
    ofdm_modulate,
    qpsk_symbols,
)
from .config import SystemConfig
from .exceptions import ParameterError, RecoveryError
from .metrics import nmse_db
from .pilots import assemble_frame, make_pilot_plan
from .recovery import DcsChannelEstimator, mutual_coherence
from .smoothing import LinearSmoother

logger = logging.getLogger(__name__)

ESTIMATORS = ("proposed", "proposed+smoothing", "ls")
AXES = ("snr_db", "doppler_norm", "n_antennas")
CSV_HEADER = ["axisValue", "estimator", "meanNmseDb", "stderr", "muPhi", "supportHitRate", "trials", "seed"]


class SweepError(RuntimeError):
    pass


@dataclass
class TrialResult:
    nmse_db: dict
    mu_phi: float
    support_hit: Optional[bool]
    seed: int
    error: Optional[str] = None

    @property
    def failed(self):
        return self.error is not None


def trial_seed(base_seed, point, trial):
    """Seed of one trial, independent of execution order."""
    ss = np.random.SeedSequence(entropy=base_seed, spawn_key=(point, trial))
    return int(ss.generate_state(1, np.uint64)[0])


def simulate_received(cfg, rng):
    """Draw channel, pilot plan and data, and propagate one OFDM symbol.

    Returns ``(Y, channel, plan)`` with ``Y`` the received frequency-domain symbol.
    """
    support = generate_support(cfg.L, cfg.K, rng)
    if cfg.bem_exact:
        ch, _ = generate_bem_channel(cfg, support, rng)
    else:
        ch = generate_ds_channel(cfg, support, rng)
    plan = make_pilot_plan(cfg.N, cfg.G, cfg.D, cfg.n_antennas, rng)
    n_data = plan.data_indices().size
    S = np.stack([assemble_frame(plan, qpsk_symbols(n_data, rng), a) for a in range(cfg.n_antennas)])
    y = apply_channel_time(ch, ofdm_modulate(S))
    reference = cfg.n_antennas if cfg.snr_reference == "nominal" else None
    y, _ = add_noise(y, cfg.snr_db, rng, signal_power=reference)
    return ofdm_demodulate(y), ch, plan


def run_trial(cfg, rng=None, seed=None):
    """One pass of the full link and all estimators.

    ``rng`` defaults to a generator seeded with ``seed`` (or ``cfg.seed``).
    A solver failure is recorded in ``TrialResult.error`` and the affected
    estimators report NaN.
    """
    if seed is None:
        seed = cfg.seed
    if rng is None:
        rng = np.random.default_rng(seed)
    Y, ch, plan = simulate_received(cfg, rng)

    nmse = dict.fromkeys(ESTIMATORS, math.nan)
    support_hit = None
    error = None
    est = DcsChannelEstimator(n_taps=cfg.L, sparsity=cfg.K, order=cfg.D)
    try:
        est.fit(Y, plan)
    except RecoveryError as exc:
        error = f"proposed: {exc}"
    else:
        nmse["proposed"] = nmse_db(est.channel_, ch)
        expected = (ch.support[None, :] + cfg.L * np.arange(cfg.n_antennas)[:, None]).ravel()
        support_hit = bool(np.array_equal(np.sort(expected), est.support_rows_))
        if cfg.smoothing_applicable:
            smoothed = LinearSmoother(n_strong=cfg.K, doppler_norm=cfg.doppler_norm).fit_transform(est.channel_)
            nmse["proposed+smoothing"] = nmse_db(smoothed, ch)

    ls = DcsChannelEstimator(n_taps=cfg.L, sparsity=cfg.K, order=cfg.D, solver="ls").fit(Y, plan)
    nmse["ls"] = nmse_db(ls.channel_, ch)
    mu = mutual_coherence(ls.phi_)
    return TrialResult(nmse_db=nmse, mu_phi=mu, support_hit=support_hit, seed=int(seed), error=error)


@dataclass
class SweepSpec:
    """A one-axis sweep over :class:`SystemConfig`.

    With ``pilot_rule="proportional"`` each point uses ``G = 3*K*n_antennas``
    nonzero pilots, i.e. ``3*K*n_antennas*(2D-1)`` pilot subcarriers in total.
    """

    base: SystemConfig
    axis: str
    points: list
    trials: int = 200
    pilot_rule: str = "fixed"

    def __post_init__(self):
        if self.axis not in AXES:
            raise ParameterError(f"axis must be one of {AXES}, got {self.axis!r}")
        if not self.points:
            raise ParameterError("a sweep needs at least one point")
        if self.trials < 1:
            raise ParameterError("trials must be at least 1")
        if self.pilot_rule not in ("fixed", "proportional"):
            raise ParameterError(f"unknown pilot rule {self.pilot_rule!r}")
        self.points = [int(p) if self.axis == "n_antennas" else float(p) for p in self.points]
        for i in range(len(self.points)):
            self.point_config(i)

    def point_config(self, index):
        value = self.points[index]
        changes = {self.axis: value}
        if self.pilot_rule == "proportional":
            n_ant = value if self.axis == "n_antennas" else self.base.n_antennas
            changes["G"] = 3 * self.base.K * n_ant
        return self.base.replace(**changes)

    def to_dict(self):
        return {
            "base": self.base.to_dict(),
            "axis": self.axis,
            "points": list(self.points),
            "trials": self.trials,
            "pilot_rule": self.pilot_rule,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            base=SystemConfig.from_dict(d["base"]),
            axis=d["axis"],
            points=d["points"],
            trials=d.get("trials", 200),
            pilot_rule=d.get("pilot_rule", "fixed"),
        )


@dataclass
class SweepResult:
    spec: SweepSpec
    rows: list = field(default_factory=list)
    trials: list = field(default_factory=list)

    def mean(self, estimator):
        """Mean NMSE per point for one estimator, in point order."""
        return [r["meanNmseDb"] for r in self.rows if r["estimator"] == estimator]


def _summarize(values):
    v = np.asarray([x for x in values if not math.isnan(x)], dtype=float)
    if v.size == 0:
        return math.nan, math.nan, 0
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
    return float(v.mean()), se, int(v.size)


def run_sweep(spec, n_jobs=1):
    """Run every trial of every point and aggregate mean NMSE per estimator.

    Trials are independent and seeded by position, so the result does not
    depend on ``n_jobs``. Raises :class:`SweepError` if all trials of a point fail.
    """
    jobs = []
    for p in range(len(spec.points)):
        cfg = spec.point_config(p)
        for t in range(spec.trials):
            jobs.append((p, cfg, trial_seed(spec.base.seed, p, t)))

    def work(job):
        _, cfg, seed = job
        return run_trial(cfg, seed=seed)

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(work, jobs))
    else:
        results = [work(j) for j in jobs]

    out = SweepResult(spec=spec)
    for p, value in enumerate(spec.points):
        trials = [r for (jp, _, _), r in zip(jobs, results) if jp == p]
        out.trials.append(trials)
        failed = [r for r in trials if r.failed]
        if len(failed) == len(trials):
            raise SweepError(
                f"all {len(trials)} trials failed at {spec.axis}={value}: {failed[0].error}"
            )
        if failed:
            logger.warning("%d of %d trials failed at %s=%s", len(failed), len(trials), spec.axis, value)
        mu = float(np.mean([r.mu_phi for r in trials]))
        hits = [r.support_hit for r in trials if r.support_hit is not None]
        for name in ESTIMATORS:
            mean, se, n = _summarize([r.nmse_db[name] for r in trials])
            out.rows.append({
                "axisValue": float(value),
                "estimator": name,
                "meanNmseDb": mean,
                "stderr": se,
                "muPhi": mu,
                "supportHitRate": float(np.mean(hits)) if hits and name != "ls" else math.nan,
                "trials": n,
                "seed": int(spec.base.seed),
            })
    return out


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(rows, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in rows:
            writer.writerow([_fmt(row[k]) for k in CSV_HEADER])


def read_csv(path):
    """Parse a results CSV back into row dicts with numeric fields restored."""
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            row = {k: float(v) for k, v in rec.items() if k not in ("estimator", "trials", "seed")}
            row["estimator"] = rec["estimator"]
            row["trials"] = int(rec["trials"])
            row["seed"] = int(rec["seed"])
            rows.append(row)
    return rows


def manifest_path(path):
    return f"{path}.manifest.json"


def emit_results(result, fmt="csv", path="results.csv", plot=None, timestamp=True):
    """Write the sweep table plus an adjacent ``<path>.manifest.json``.

    ``result`` is a :class:`SweepResult` or a plain list of row dicts. The
    manifest records the sweep spec (when known), package version and a
    UTC timestamp.
    """
    rows = result.rows if isinstance(result, SweepResult) else list(result)
    try:
        if fmt == "csv":
            write_csv(rows, path)
        elif fmt == "json":
            with open(path, "w") as fh:
                json.dump([{k: row[k] for k in CSV_HEADER} for row in rows], fh, indent=2)
                fh.write("\n")
        else:
            raise ParameterError(f"unknown output format {fmt!r}")
        manifest = {"version": __version__, "format": fmt}
        if isinstance(result, SweepResult):
            manifest["spec"] = result.spec.to_dict()
            manifest["failedTrials"] = [sum(r.failed for r in t) for t in result.trials]
            manifest["labels"] = {
                "ls": "minimum-norm least squares on the pilot observations",
                "proposed+smoothing": "NaN where normalized Doppler >= 0.2 (not applicable)",
            }
        if timestamp:
            manifest["timestamp"] = datetime.now(timezone.utc).isoformat()
        with open(manifest_path(path), "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"could not write results to {path}: {exc}") from exc
    if plot:
        plot_results(rows, plot, xlabel=result.spec.axis if isinstance(result, SweepResult) else "axis")


def plot_results(rows, path, xlabel="axis"):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for name in ESTIMATORS:
        pts = [(r["axisValue"], r["meanNmseDb"]) for r in rows if r["estimator"] == name]
        pts = [p for p in pts if not math.isnan(p[1])]
        if pts:
            x, y = zip(*pts)
            ax.plot(x, y, marker="o", label=name)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("NMSE (dB)")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def replay_manifest(path, n_jobs=1):
    """Re-run the sweep recorded in a manifest file."""
    with open(path) as fh:
        manifest = json.load(fh)
    return run_sweep(SweepSpec.from_dict(manifest["spec"]), n_jobs=n_jobs)


def trial_to_dict(result):
    d = asdict(result)
    d["nmse_db"] = {k: (None if math.isnan(v) else v) for k, v in result.nmse_db.items()}
    return d
