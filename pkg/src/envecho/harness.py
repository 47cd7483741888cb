"""Experiment runner behind the CLI: builds models from a config, sweeps the
time grid and produces one record per grid point."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import dephasing, oscillator, shorttime
from .config import ExperimentConfig, apply_axis
from .ensembles import gue, random_state
from .errors import ConfigError
from .linalg import DYNAMICAL_TOL, TRUNCATION_TOL

COLUMNS = (
    "t",
    "coherence_re",
    "coherence_im",
    "coherence_abs",
    "fidelity_re",
    "fidelity_im",
    "fidelity_abs",
    "identity_residual",
)
ABS_LIMIT = 1 + 1e-9


@dataclass
class RunResult:
    """Time series of one experiment.

    ``coherence`` is the central-system coherence from the brute-force (or
    Gaussian) route, ``fidelity`` the environment echo amplitude, and
    ``residual`` the distance between the coherence and the prediction
    built from the fidelity.
    """

    kind: str
    times: np.ndarray
    coherence: np.ndarray
    fidelity: np.ndarray
    residual: np.ndarray
    tolerance: float | None
    fitted_rate: float

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residual))

    def violations(self) -> list:
        problems = []
        if self.tolerance is not None and self.max_residual > self.tolerance:
            problems.append(f"identity residual {self.max_residual:.3e} exceeds tolerance {self.tolerance:.1e}")
        for name, col in (("coherence_abs", self.coherence), ("fidelity_abs", self.fidelity)):
            worst = float(np.max(np.abs(col)))
            if worst > ABS_LIMIT:
                problems.append(f"{name} reaches {worst!r} > 1")
        if not (np.all(np.isfinite(self.coherence)) and np.all(np.isfinite(self.fidelity))):
            problems.append("non-finite values in output")
        return problems

    def rows(self):
        for t, c, f, r in zip(self.times, self.coherence, self.fidelity, self.residual):
            yield (t, c.real, c.imag, abs(c), f.real, f.imag, abs(f), r)

    def summary(self) -> str:
        return (f"kind={self.kind} rows={self.times.size} max_residual={self.max_residual:.3e} "
                f"fitted_rate={self.fitted_rate:.6g}")


def fit_rate(times, values, t_min=None, t_max=None) -> float:
    """Decay rate ``-d/dt ln(|v(t)|^2 / |v(0)|^2)`` by least squares over a window."""
    times = np.asarray(times, dtype=float)
    mag = np.abs(np.asarray(values)) ** 2
    lo = -np.inf if t_min is None else t_min
    hi = np.inf if t_max is None else t_max
    sel = (times >= lo) & (times <= hi) & (mag > 0)
    if np.count_nonzero(sel) < 2 or mag[0] == 0:
        return math.nan
    slope = np.polyfit(times[sel], np.log(mag[sel] / mag[0]), 1)[0]
    return float(-slope)


def time_grid(cfg: ExperimentConfig) -> np.ndarray:
    return np.linspace(0.0, cfg.t_max, cfg.n_points)


def _central_amplitudes(p, n_c):
    a = np.full(n_c, 1 / np.sqrt(n_c)) if p["a"] is None else np.asarray(p["a"], dtype=complex)
    return a / np.linalg.norm(a)


def _dephasing_model(p, rng):
    n_c, d = p["n_c"], p["dim_env"]
    eps = np.arange(n_c, dtype=float) if p["eps"] is None else p["eps"]
    if p["coupling"] == "gue":
        return dephasing.gue_model(n_c, d, rng, eps, p["env_variance"], p["coupling_variance"])
    H_env = gue(d, rng, p["env_variance"])
    if p["coupling"] == "proportional":
        return dephasing.proportional_model(eps, H_env, p["f"])
    return dephasing.DephasingModel(eps, H_env, tuple(np.zeros((d, d)) for _ in range(n_c)))


def _run_dephasing(cfg, times):
    p = cfg.params
    rng = np.random.default_rng(cfg.seed)
    model = _dephasing_model(p, rng)
    a = _central_amplitudes(p, model.n_c)
    j, k = p["j"], p["k"]
    coh = np.zeros(times.size, dtype=complex)
    fid = np.zeros(times.size, dtype=complex)
    pred = np.zeros(times.size, dtype=complex)
    phase = np.exp(-1j * (model.eps[j] - model.eps[k]) * times)
    for _ in range(cfg.ensemble_samples):
        init = dephasing.InitialProduct(a, random_state(model.dim_env, rng))
        coh += dephasing.reduced_density_joint(model, init, times)[:, j, k]
        f = dephasing.echo_amplitude_series(model, init.chi0, j, k, times)
        fid += f
        pred += phase * f * init.rho0(j, k)
    n = cfg.ensemble_samples
    return coh / n, fid / n, np.abs(coh - pred) / n, DYNAMICAL_TOL


def _run_pipulse(cfg, times):
    p = cfg.params
    rng = np.random.default_rng(cfg.seed)
    model = _dephasing_model(p, rng)
    a = _central_amplitudes(p, 2)
    rho0 = a[0] * np.conj(a[1])
    coh = np.zeros(times.size, dtype=complex)
    fid = np.zeros(times.size, dtype=complex)
    for _ in range(cfg.ensemble_samples):
        init = dephasing.InitialProduct(a, random_state(model.dim_env, rng))
        coh += dephasing.pi_pulse_joint(model, init, times)[:, 0, 1]
        fid += np.array([dephasing.pi_pulse_coherence(model, init.chi0, t, a) for t in times]) / rho0
    n = cfg.ensemble_samples
    coh, fid = coh / n, fid / n
    return coh, fid, np.abs(coh - fid * rho0), DYNAMICAL_TOL


def _oscillator_spec(p):
    return oscillator.CatStateSpec(p["z1"], p["z2"])


def _run_oscillator(cfg, times):
    p = cfg.params
    model = oscillator.few_mode_bath(p["Omega"], p["omega"], p["g"], p["fock_cutoff"])
    spec = _oscillator_spec(p)
    coh = oscillator.cat_coherence_series(model, spec, times, p["dt"], p["normalization"])
    if p["fidelity_route"] == "fock":
        fid = oscillator.fock_oracle(model, spec, times)
    else:
        fid = np.array([oscillator.driven_echo_amplitude(model, spec, t, p["dt"]) for t in times])
    weight = oscillator._cat_weight(spec, p["normalization"])
    return coh, fid, np.abs(coh - weight * fid), TRUNCATION_TOL


def _run_markov(cfg, times):
    p = cfg.params
    model = oscillator.ohmic_flat_bath(p["L"], p["omega_min"], p["omega_max"], p["gamma"], p["Omega"])
    spec = _oscillator_spec(p)
    coh = oscillator.cat_coherence_series(model, spec, times, p["dt"])
    fid = oscillator.markov_reference(p["gamma"], spec, times)
    # the Markov law is a limit, not an identity: residual is reported, not enforced
    return coh, fid, np.abs(2 * coh - fid), None


def _run_shorttime(cfg, times):
    p = cfg.params
    rng = np.random.default_rng(cfg.seed)
    n_c, d = len(p["s"]), p["dim_env"]
    H_c = gue(n_c, rng, p["central_variance"]) if p["central_variance"] > 0 else np.zeros((n_c, n_c))
    model = shorttime.ShortTimeModel(H_c, np.diag(p["s"]), gue(d, rng, p["env_variance"]),
                                     gue(d, rng, p["coupling_variance"]))
    s, sp = p["s"][p["s_index"]], p["s"][p["s_prime_index"]]
    coh = np.zeros(times.size, dtype=complex)
    fid = np.zeros(times.size, dtype=complex)
    for _ in range(cfg.ensemble_samples):
        B0 = random_state(d, rng)
        coh += shorttime.exact_coherence(model, s, sp, B0, times)
        fid += np.array([2 * shorttime.shorttime_coherence(model, s, sp, B0, t) for t in times])
    n = cfg.ensemble_samples
    coh, fid = coh / n, fid / n
    # with H_c present the residual is the short-time validity diagnostic
    tol = DYNAMICAL_TOL if p["central_variance"] == 0 else None
    return coh, fid, np.abs(coh - 0.5 * fid), tol


_RUNNERS = {
    "dephasing": _run_dephasing,
    "dephasing-pipulse": _run_pipulse,
    "oscillator": _run_oscillator,
    "oscillator-markov": _run_markov,
    "shorttime": _run_shorttime,
}


def _fit_window(cfg):
    lo, hi = cfg.fit_t_min, cfg.fit_t_max
    if cfg.kind == "oscillator-markov":
        gamma = cfg.params["gamma"]
        # the Markov law holds for gamma t << 1
        if lo is None:
            lo = 0.01 / gamma if gamma > 0 else None
        if hi is None:
            hi = 0.05 / gamma if gamma > 0 else None
    return lo, hi


def run_experiment(cfg: ExperimentConfig) -> RunResult:
    times = time_grid(cfg)
    coh, fid, residual, tol = _RUNNERS[cfg.kind](cfg, times)
    if cfg.residual_tolerance is not None:
        tol = cfg.residual_tolerance
    rate = fit_rate(times, coh, *_fit_window(cfg))
    return RunResult(cfg.kind, times, np.asarray(coh), np.asarray(fid), np.asarray(residual), tol, rate)


def _fmt(x) -> str:
    return format(float(x), ".17g")


def write_csv(path, header, rows) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) if not isinstance(x, str) else x for x in row])


def write_records(path, result: RunResult) -> None:
    write_csv(path, COLUMNS, result.rows())


def run_sweep(cfg: ExperimentConfig, axis: str, values, out_dir) -> list:
    """Run one experiment per value of ``axis``; returns ``(value, result, csv_path)`` triples.

    Every config is validated before anything runs, so a bad value fails
    without partial output.
    """
    if not values:
        raise ConfigError("sweep needs at least one value")
    configs = [(v, apply_axis(cfg, axis, v)) for v in values]
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = axis.replace("[", "_").replace("]", "")
    done = []
    for i, (raw, c) in enumerate(configs):
        result = run_experiment(c)
        path = out_dir / f"{stem}_{i:03d}.csv"
        write_records(path, result)
        done.append((raw, result, path))
    write_csv(
        out_dir / "summary.csv",
        ("value", "fitted_rate", "max_residual"),
        ((raw.strip(), r.fitted_rate, r.max_residual) for raw, r, _ in done),
    )
    return done
