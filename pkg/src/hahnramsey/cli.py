"""Command-line interface.

Units at the boundary: times in microseconds, rates (lambda) in 1/us,
and frequencies (delta, gamma, rabi) in rad/us by default.  With
``--freq-unit cycles`` the frequency-like inputs are read in cycles/us
(MHz) and multiplied by 2 pi on ingest; lambda is a rate, never
converted.

Configuration precedence: flags > HRSIM_* environment variables > JSON
config file > defaults.  Every output file embeds a header comment with
a hash of the fully resolved configuration, and reruns with the same
configuration and seed are byte-identical at any worker count.

Exit codes: 0 success, 2 configuration/validation error, 3 runtime
failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import analysis, analytic, montecarlo, noise, spincore

ENV_PREFIX = "HRSIM_"

_SEQ = {
    "ramsey": spincore.SequenceKind.RAMSEY,
    "hahn_echo": spincore.SequenceKind.HAHN_ECHO,
    "hahn_ramsey": spincore.SequenceKind.HAHN_RAMSEY,
}


class ConfigError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"config field '{field}': {message}")
        self.field = field


@dataclasses.dataclass
class RunConfig:
    sequence: str = "hahn_ramsey"
    theta: float | None = None          # rad; exclusive with rabi+delta
    rabi: float | None = None
    tilt_convention: str = "geometric"  # or "nutation"
    delta: float = 0.0
    lam: float = 1.0
    gamma: float = 0.0
    noise_kind: str = "ou"              # ou | renewal | none
    tau_start: float = 0.0
    tau_stop: float = 1.0
    tau_count: int = 2
    engine: str = "analytic"            # analytic | montecarlo | both
    n_trajectories: int = 10000
    time_step: float = 0.01
    pulse_model: str = "instantaneous"
    seed: int = 12345
    out: str = "out"
    freq_unit: str = "rad"              # rad | cycles
    workers: int = 1

    def validate(self) -> None:
        if self.sequence not in _SEQ:
            raise ConfigError("sequence", f"unknown sequence '{self.sequence}'")
        if self.engine not in ("analytic", "montecarlo", "both"):
            raise ConfigError("engine", f"unknown engine '{self.engine}'")
        if self.freq_unit not in ("rad", "cycles"):
            raise ConfigError("freq_unit", "must be 'rad' or 'cycles'")
        if self.noise_kind not in ("ou", "renewal", "none"):
            raise ConfigError("noise_kind", "must be ou, renewal or none")
        if self.tilt_convention not in ("geometric", "nutation"):
            raise ConfigError("tilt_convention", "must be geometric or nutation")
        if self.tau_count < 2:
            raise ConfigError("tau_count", "grid needs at least 2 points")
        if not (self.tau_stop > self.tau_start >= 0):
            raise ConfigError("tau_stop", "need stop > start >= 0")
        if self.lam <= 0:
            raise ConfigError("lam", "correlation rate must be > 0")
        if self.gamma < 0:
            raise ConfigError("gamma", "noise strength must be >= 0")
        if self.n_trajectories < 1:
            raise ConfigError("n_trajectories", "must be >= 1")
        if self.time_step <= 0:
            raise ConfigError("time_step", "must be > 0")
        if self.workers < 1:
            raise ConfigError("workers", "must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed", "must be a non-negative integer")
        if self.pulse_model not in ("instantaneous", "finite"):
            raise ConfigError("pulse_model", "must be instantaneous or finite")
        if self.rabi is not None and self.rabi <= 0:
            raise ConfigError("rabi", "must be > 0")
        if self.pulse_model == "finite" and not self.rabi:
            raise ConfigError("rabi", "finite pulses need a rabi frequency")
        if self.theta is not None and not (0 < self.theta <= math.pi / 2):
            raise ConfigError("theta", "must lie in (0, pi/2]")
        if self.sequence == "hahn_echo":
            if self.delta != 0.0:
                raise ConfigError("delta", "hahn_echo is resonant, set delta = 0")
            if self.theta not in (None, math.pi / 2):
                raise ConfigError("theta", "hahn_echo uses theta = pi/2")

    def resolved_theta(self) -> float:
        if self.sequence == "hahn_echo":
            return math.pi / 2
        if self.theta is not None:
            return self.theta
        if self.rabi is not None:
            conv = (spincore.TiltConvention.GEOMETRIC
                    if self.tilt_convention == "geometric"
                    else spincore.TiltConvention.NUTATION)
            return spincore.tilt_angle(
                spincore.DrivingParams(self.rabi, self.delta), conv).theta
        if self.sequence == "ramsey":
            return math.pi / 2
        raise ConfigError("theta", "hahn_ramsey needs theta or rabi+delta")

    def noise_params(self) -> noise.NoiseParams:
        kind = {"ou": noise.NoiseKind.ORNSTEIN_UHLENBECK,
                "renewal": noise.NoiseKind.RENEWAL,
                "none": noise.NoiseKind.NONE}[self.noise_kind]
        gamma = 0.0 if kind is noise.NoiseKind.NONE else self.gamma
        return noise.NoiseParams(self.lam, gamma, kind)

    def taus(self) -> np.ndarray:
        return np.linspace(self.tau_start, self.tau_stop, self.tau_count)


_FREQ_FIELDS = ("delta", "gamma", "rabi")  # converted under --freq-unit cycles
_FLOAT_FIELDS = {"theta", "rabi", "delta", "lam", "gamma", "tau_start",
                 "tau_stop", "time_step"}
_INT_FIELDS = {"tau_count", "n_trajectories", "seed", "workers"}


def load_config(path: str | None, flags: dict) -> RunConfig:
    values: dict = {}
    if path:
        p = Path(path)
        if not p.exists():
            raise ConfigError("config", f"file not found: {path}")
        try:
            raw = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON at line {exc.lineno}: {exc.msg}")
        if not isinstance(raw, dict):
            raise ConfigError("config", "top level must be a JSON object")
        for key, val in raw.items():
            key = "lam" if key == "lambda" else key
            values[key] = val
    for field in dataclasses.fields(RunConfig):
        env = os.environ.get(ENV_PREFIX + field.name.upper())
        if env is not None:
            values[field.name] = env
    for key, val in flags.items():
        if val is not None:
            values[key] = val

    known = {f.name for f in dataclasses.fields(RunConfig)}
    cfg = RunConfig()
    for key, val in values.items():
        if key not in known:
            raise ConfigError(key, "unknown configuration key")
        try:
            if key in _FLOAT_FIELDS and val is not None:
                val = float(val)
            elif key in _INT_FIELDS:
                val = int(val)
            elif key in ("sequence", "engine", "freq_unit", "noise_kind",
                         "tilt_convention", "pulse_model", "out"):
                val = str(val)
        except (TypeError, ValueError):
            raise ConfigError(key, f"cannot parse value {val!r}")
        setattr(cfg, key, val)
    if cfg.freq_unit == "cycles":
        for name in _FREQ_FIELDS:
            v = getattr(cfg, name)
            if v is not None:
                setattr(cfg, name, 2 * math.pi * v)
        cfg.freq_unit = "rad"   # record post-conversion state
    cfg.validate()
    return cfg


def config_hash(cfg: RunConfig) -> str:
    """Hash of the resolved physics + seed configuration; placement
    (out) and scheduling (workers) do not change the result bytes and
    are excluded."""
    d = dataclasses.asdict(cfg)
    d.pop("out", None)
    d.pop("workers", None)
    blob = json.dumps(d, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _write_curve_csv(path, taus, values, comment):
    with open(path, "w") as fh:
        fh.write(f"# {comment}\n")
        fh.write("tau,signal\n")
        for t, v in zip(taus, values):
            fh.write(f"{t:.17g},{v:.17g}\n")


def read_curve_csv(path, tau_scale: float = 1.0) -> montecarlo.SignalCurve:
    """Read tau,signal[,stderr] (or tau,mean,stderr,n) data files.

    tau_scale converts the file's declared time unit to the working unit
    (microseconds): stored tau = file tau * tau_scale.
    """
    taus, means, errs = [], [], []
    n = 0
    with open(path) as fh:
        header = None
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if header is None:
                header = [c.strip().lower() for c in line.split(",")]
                continue
            cells = line.split(",")
            taus.append(float(cells[0]) * tau_scale)
            means.append(float(cells[1]))
            if len(cells) > 2 and len(header) > 2 and header[2] == "stderr":
                errs.append(float(cells[2]))
            if len(cells) > 3 and header[-1] == "n":
                n = int(cells[3])
    if header is None or len(taus) == 0:
        raise ConfigError("data", f"no data rows in {path}")
    errs = errs if len(errs) == len(taus) else [0.0] * len(taus)
    return montecarlo.SignalCurve(np.asarray(taus), np.asarray(means),
                                  np.asarray(errs), n)


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _analytic_curve(cfg: RunConfig, taus) -> np.ndarray:
    kind = _SEQ[cfg.sequence]
    p = cfg.noise_params()
    if kind is spincore.SequenceKind.RAMSEY:
        return np.asarray(analytic.ramsey_signal(cfg.delta, p, taus))
    if kind is spincore.SequenceKind.HAHN_ECHO:
        return np.asarray(analytic.hahn_echo_signal(p, taus))
    return np.asarray(analytic.hahn_ramsey_signal(cfg.resolved_theta(),
                                                  cfg.delta, p, taus))


def cmd_simulate(cfg: RunConfig, with_components: bool = False) -> int:
    if (cfg.sequence == "ramsey" and cfg.engine in ("analytic", "both")
            and cfg.resolved_theta() != math.pi / 2):
        raise ConfigError("theta", "analytic ramsey signal assumes theta = pi/2")
    if with_components and cfg.sequence != "hahn_ramsey":
        raise ConfigError("sequence",
                          "component columns exist only for hahn_ramsey")
    out = _out_dir(cfg)
    tag = config_hash(cfg)
    comment = f"config_sha256={tag}"
    taus = cfg.taus()
    kind = _SEQ[cfg.sequence]
    wrote = []
    an = mc = None
    if cfg.engine in ("analytic", "both"):
        an = _analytic_curve(cfg, taus)
        path = out / f"{cfg.sequence}_analytic.csv"
        if with_components:
            names = ("constant", "ramsey_like", "cos_delta", "cos_2delta")
            with open(path, "w") as fh:
                fh.write(f"# {comment}\n")
                fh.write("tau,signal," +
                         ",".join(f"component_{n}" for n in names) + "\n")
                for t, v in zip(taus, an):
                    c = analytic.signal_components(
                        cfg.resolved_theta(), cfg.delta, cfg.noise_params(),
                        float(t))
                    terms = (c.constant_term, c.ramsey_like_term,
                             c.cos_delta_term, c.cos_2delta_term)
                    fh.write(f"{t:.17g},{v:.17g}," +
                             ",".join(f"{x:.17g}" for x in terms) + "\n")
        else:
            _write_curve_csv(path, taus, an, comment)
        wrote.append(path)
    if cfg.engine in ("montecarlo", "both"):
        mcfg = montecarlo.McConfig(cfg.n_trajectories, cfg.seed, cfg.time_step,
                                   cfg.pulse_model, cfg.rabi, cfg.workers)
        runner = (montecarlo.run_mc_finite_pulses
                  if cfg.pulse_model == "finite" else montecarlo.run_mc)
        curve = runner(kind, cfg.resolved_theta(), cfg.delta,
                       cfg.noise_params(), taus, mcfg)
        path = out / f"{cfg.sequence}_montecarlo.csv"
        curve.to_csv(path, comment)
        wrote.append(path)
        mc = curve
    if cfg.engine == "both":
        path = out / f"{cfg.sequence}_compare.csv"
        with open(path, "w") as fh:
            fh.write(f"# {comment}\n")
            fh.write("tau,analytic,mc_mean,mc_stderr,zscore\n")
            for t, a, m, s in zip(taus, an, mc.means, mc.stderrs):
                if s > 0:
                    z = (m - a) / s
                else:
                    z = 0.0 if abs(m - a) < 1e-12 else math.inf
                fh.write(f"{t:.17g},{a:.17g},{m:.17g},{s:.17g},{z:.17g}\n")
        wrote.append(path)
    for p in wrote:
        print(p)
    return 0


def cmd_components(cfg: RunConfig, theta_count: int = 91) -> int:
    out = _out_dir(cfg)
    comment = f"config_sha256={config_hash(cfg)}"
    p = cfg.noise_params()
    taus = cfg.taus()
    path1 = out / "filter_exponents.csv"
    with open(path1, "w") as fh:
        fh.write(f"# {comment}\n")
        fh.write("tau,ramsey_like,half_period,hahn_like\n")
        for t in taus:
            vals = [noise.chi_filter(k, p, float(t)) for k in
                    (noise.FilterKind.RAMSEY_LIKE, noise.FilterKind.HALF_PERIOD,
                     noise.FilterKind.HAHN_LIKE)]
            fh.write(f"{t:.17g}," + ",".join(f"{v:.17g}" for v in vals) + "\n")
    path2 = out / "component_weights.csv"
    thetas = np.linspace(1e-3, math.pi / 2, theta_count)
    with open(path2, "w") as fh:
        fh.write(f"# {comment}\n")
        fh.write("theta,constant,ramsey_like,cos_delta,cos_2delta\n")
        for th in thetas:
            w = analytic.component_weights(float(th))
            fh.write(f"{th:.17g}," + ",".join(f"{v:.17g}" for v in w) + "\n")
    print(path1)
    print(path2)
    return 0


def cmd_fit(cfg: RunConfig, data_path: str, model: str,
            tau_scale: float = 1.0) -> int:
    curve = read_curve_csv(data_path, tau_scale)
    fm = (analysis.FitModel.GAUSSIAN_ENVELOPE if model == "gaussian"
          else analysis.FitModel.PLAIN_EXPONENTIAL)
    fit = analysis.fit_decay(curve, fm)
    payload = {"config_sha256": config_hash(cfg), "model": model,
               "data": str(data_path), **fit.to_dict()}
    out = _out_dir(cfg)
    path = out / f"fit_{Path(data_path).stem}.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print(json.dumps(payload, indent=2, sort_keys=True))
    print(path)
    return 0


def cmd_scan(cfg: RunConfig, data_paths, lam_spec, gamma_spec,
             tau_scale: float = 1.0) -> int:
    out = _out_dir(cfg)
    comment = f"config_sha256={config_hash(cfg)}"
    lam_grid = np.linspace(*lam_spec)
    gamma_grid = np.linspace(*gamma_spec)
    kind = _SEQ[cfg.sequence]
    theta = cfg.resolved_theta()
    for dp in data_paths:
        curve = read_curve_csv(dp, tau_scale)
        m = analysis.scan_noise_params(curve, kind, theta, cfg.delta,
                                       lam_grid, gamma_grid)
        path = out / f"scan_{Path(dp).stem}.csv"
        m.to_csv(path, comment)
        print(f"{path} argmin lambda={m.best[0]:.6g} gamma={m.best[1]:.6g}")
    return 0


def cmd_sensitivity(cfg: RunConfig, u: float, v: float, gamma_e: float) -> int:
    readout = analysis.ReadoutModel(u, v)
    theta = None
    if cfg.theta is not None or cfg.rabi is not None:
        theta = cfg.resolved_theta()
    res = analysis.sensitivity(cfg.noise_params(), readout, theta, gamma_e)
    payload = {"config_sha256": config_hash(cfg),
               "delta_b_min_gauss": res.delta_b_min,
               "optimal_tau": res.optimal_tau,
               "optimal_theta_rad": res.optimal_theta,
               "eta": res.eta,
               "t2": res.t2,
               "gamma_e": gamma_e, "u": u, "v": v}
    out = _out_dir(cfg)
    path = out / "sensitivity.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print(json.dumps(payload, indent=2, sort_keys=True))
    print(path)
    return 0


def cmd_bloch(cfg: RunConfig, tau: float, samples: int) -> int:
    out = _out_dir(cfg)
    pts = montecarlo.bloch_trajectory(_SEQ[cfg.sequence], cfg.resolved_theta(),
                                      cfg.delta, tau, samples)
    path = out / f"bloch_{cfg.sequence}.csv"
    montecarlo.bloch_to_csv(pts, path, f"config_sha256={config_hash(cfg)}")
    print(path)
    return 0


def _add_common(sub):
    sub.add_argument("--config", help="JSON config file")
    sub.add_argument("--seed", type=int)
    sub.add_argument("--out", help="output directory")
    sub.add_argument("--freq-unit", choices=["rad", "cycles"], dest="freq_unit")
    sub.add_argument("--sequence", choices=sorted(_SEQ))
    sub.add_argument("--theta", type=float, help="tilt angle in rad")
    sub.add_argument("--rabi", type=float)
    sub.add_argument("--tilt-convention", choices=["geometric", "nutation"],
                     dest="tilt_convention")
    sub.add_argument("--delta", type=float, help="fringe detuning")
    sub.add_argument("--lam", type=float, help="noise correlation rate (1/us)")
    sub.add_argument("--gamma", type=float, help="noise strength")
    sub.add_argument("--noise-kind", choices=["ou", "renewal", "none"],
                     dest="noise_kind")
    sub.add_argument("--tau-start", type=float, dest="tau_start")
    sub.add_argument("--tau-stop", type=float, dest="tau_stop")
    sub.add_argument("--tau-count", type=int, dest="tau_count")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="hahnramsey",
        description="Detuned spin-echo dephasing simulations and analysis "
                    "(times in us, frequencies in rad/us unless --freq-unit cycles)")
    subs = ap.add_subparsers(dest="command", required=True)

    sim = subs.add_parser("simulate", help="signal curves per engine")
    _add_common(sim)
    sim.add_argument("--engine", choices=["analytic", "montecarlo", "both"])
    sim.add_argument("--n-trajectories", type=int, dest="n_trajectories")
    sim.add_argument("--time-step", type=float, dest="time_step")
    sim.add_argument("--pulse-model", choices=["instantaneous", "finite"],
                     dest="pulse_model")
    sim.add_argument("--workers", type=int)
    sim.add_argument("--with-components", action="store_true",
                     help="append component_* columns to the analytic CSV")

    comp = subs.add_parser("components", help="filter exponents and weights")
    _add_common(comp)
    comp.add_argument("--theta-count", type=int, default=91)

    fit = subs.add_parser("fit", help="decay-envelope fit of a data file")
    _add_common(fit)
    fit.add_argument("--data", required=True)
    fit.add_argument("--model", choices=["gaussian", "exponential"],
                     default="gaussian")
    fit.add_argument("--tau-scale", type=float, default=1.0,
                     help="data file time unit in us (tau is multiplied by this)")

    scan = subs.add_parser("scan", help="(lambda, gamma) residual maps")
    _add_common(scan)
    scan.add_argument("--data", required=True, action="append")
    scan.add_argument("--tau-scale", type=float, default=1.0,
                      help="data file time unit in us (tau is multiplied by this)")
    scan.add_argument("--lambda-min", type=float, required=True)
    scan.add_argument("--lambda-max", type=float, required=True)
    scan.add_argument("--lambda-count", type=int, required=True)
    scan.add_argument("--gamma-min", type=float, required=True)
    scan.add_argument("--gamma-max", type=float, required=True)
    scan.add_argument("--gamma-count", type=int, required=True)

    sens = subs.add_parser("sensitivity", help="DC-field sensitivity report")
    _add_common(sens)
    sens.add_argument("--u", type=float, default=1.3,
                      help="bright-state mean counts per shot")
    sens.add_argument("--v", type=float, default=0.7,
                      help="dark-state mean counts per shot")
    sens.add_argument("--gamma-e", type=float,
                      default=analysis.GAMMA_E_PER_GAUSS,
                      help="gyromagnetic ratio, cycles/(us gauss)")

    bloch = subs.add_parser("bloch", help="noiseless Bloch-sphere trajectory")
    _add_common(bloch)
    bloch.add_argument("--tau", type=float, required=True)
    bloch.add_argument("--samples", type=int, default=60,
                       help="points per pulse/delay segment")

    return ap


_CFG_KEYS = {f.name for f in dataclasses.fields(RunConfig)}


def main(argv=None) -> int:
    ap = build_parser()
    ns = ap.parse_args(argv)
    flags = {k: v for k, v in vars(ns).items() if k in _CFG_KEYS}
    try:
        cfg = load_config(ns.config, flags)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        if ns.command == "simulate":
            return cmd_simulate(cfg, ns.with_components)
        if ns.command == "components":
            return cmd_components(cfg, ns.theta_count)
        if ns.command == "fit":
            if not Path(ns.data).exists():
                print(f"error: data file not found: {ns.data}", file=sys.stderr)
                return 2
            return cmd_fit(cfg, ns.data, ns.model, ns.tau_scale)
        if ns.command == "scan":
            for dp in ns.data:
                if not Path(dp).exists():
                    print(f"error: data file not found: {dp}", file=sys.stderr)
                    return 2
            return cmd_scan(cfg, ns.data,
                            (ns.lambda_min, ns.lambda_max, ns.lambda_count),
                            (ns.gamma_min, ns.gamma_max, ns.gamma_count),
                            ns.tau_scale)
        if ns.command == "sensitivity":
            return cmd_sensitivity(cfg, ns.u, ns.v, ns.gamma_e)
        if ns.command == "bloch":
            return cmd_bloch(cfg, ns.tau, ns.samples)
        raise ValueError(f"unknown command {ns.command}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:   # runtime failure
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


def entry() -> None:
    sys.exit(main())
