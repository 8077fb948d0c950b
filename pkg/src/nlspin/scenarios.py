"""Scenario execution: build runs from configs, write CSV and a manifest.

Every run writes plain CSV (UTF-8, LF, full double precision) plus a JSON
manifest with the resolved config, package version, wall-clock time and a
sha256 checksum per data file.  Rerunning with the same config and seed
reproduces the data files byte for byte.

CSV schemas (header names are stable):
  one-spin scenarios:  t,k_x,k_y,k_z
  two-spin scenarios:  t,s1_x,s1_y,s1_z,s2_x,s2_y,s2_z,purity,abs_E,R
Ensembles add member_*/ subdirectories and an aggregate.csv holding the
across-member mean and standard error of the time-averaged longitudinal
polarization (k.omega_hat for one spin, s1_z for two spins), averaged over
the second half of each member's samples.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .bloch import bloch_from_state, state_from_bloch
from .config import ScenarioConfig, system_dimension
from .dynamics import (
    EvolutionSettings,
    FixedTarget,
    SpinFlipTarget,
    Trajectory,
    evolve,
)
from .errors import IntegrationDivergedError
from .linalg import normalized, pauli_dot
from .noise import NoiseParams, NoiseRealization, NoisyHamiltonian, synthesize
from .twospin import (
    DrivenParams,
    butterfly_run,
    detect_limit_cycle,
    omega_matrix,
    random_state_with_entanglement,
    two_spin_observables,
)

ONE_SPIN_COLUMNS = ("t", "k_x", "k_y", "k_z")
TWO_SPIN_COLUMNS = ("t", "s1_x", "s1_y", "s1_z", "s2_x", "s2_y", "s2_z",
                    "purity", "abs_E", "R")

# Substream indices of the per-run seed: noise components occupy 0..5.
_INIT_STREAM = 101


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _write_csv(path: Path, header, columns) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(",".join(header) + "\n")
        for row in zip(*columns):
            f.write(",".join(_fmt(v) for v in row) + "\n")


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _settings(config: ScenarioConfig) -> EvolutionSettings:
    return EvolutionSettings(
        dt=config.integrator.dt,
        t_final=config.integrator.t_final,
        drive_rate=config.model["drive_rate"],
        renormalize_every_step=config.integrator.renormalize,
        singular_guard_eps=config.integrator.guard_eps,
        sample_stride=config.sample_stride,
    )


def _noise_realization(config: ScenarioConfig, seed: int) -> NoiseRealization | None:
    nc = config.noise
    if nc is None:
        return None
    params = NoiseParams(
        variance=nc.variance,
        correlation_time=nc.correlation_time,
        t_total=nc.t_total,
        n_grid=nc.n_grid,
        seed=seed,
        n_components=3 * len(nc.couple),
    )
    return synthesize(params)


def _coupling_map(config: ScenarioConfig) -> dict:
    couple = config.noise.couple
    return {spin: (3 * i, 3 * i + 1, 3 * i + 2) for i, spin in enumerate(couple)}


def _build_run(config: ScenarioConfig, seed: int):
    """Resolve (psi0, hamiltonian, rule) for one member run."""
    m = config.model
    scenario = config.scenario
    realization = _noise_realization(config, seed)

    if scenario in ("one_spin_fixed_point", "thermalization"):
        psi0 = state_from_bloch(np.asarray(m["initial_bloch"]))
        base = pauli_dot(m["omega"])
        rule = FixedTarget(state_from_bloch(np.asarray(m["target_axis"])))
        hamiltonian = base if realization is None else \
            NoisyHamiltonian(base, realization, _coupling_map(config))
        return psi0, hamiltonian, rule

    if scenario == "disentangle":
        if "initial_state" in m:
            psi0 = m["initial_state"]
        else:
            rng = np.random.default_rng(
                np.random.SeedSequence(seed, spawn_key=(_INIT_STREAM,))
            )
            psi0 = random_state_with_entanglement(m["initial_entanglement"], rng)
        return psi0, np.zeros((4, 4), dtype=complex), SpinFlipTarget()

    if scenario == "driven_lc":
        if "initial_state" in m:
            psi0 = m["initial_state"]
        else:
            ground = np.array([0, 0, 0, 1.0], dtype=complex)
            psi0 = normalized(ground + m["epsilon"] * m["psi_ref"])
        base = omega_matrix(DrivenParams(
            omega_a=m["omega_a"], omega_1=m["omega_1"],
            delta=m["delta"], g=m["g"],
        ))
        hamiltonian = base if realization is None else \
            NoisyHamiltonian(base, realization, _coupling_map(config))
        return psi0, hamiltonian, SpinFlipTarget()

    if scenario == "custom":
        psi0 = m["initial_state"]
        base = m["hamiltonian"]
        rule = FixedTarget(m["rule"]["target"]) if m["rule"]["type"] == "fixed" \
            else SpinFlipTarget()
        hamiltonian = base if realization is None else \
            NoisyHamiltonian(base, realization, _coupling_map(config))
        return psi0, hamiltonian, rule

    raise ValueError(f"unhandled scenario {scenario}")  # butterfly handled separately


def _csv_payload(config: ScenarioConfig, traj: Trajectory):
    if system_dimension(config) == 2:
        ks = np.array([bloch_from_state(v) for v in traj.states])
        return ONE_SPIN_COLUMNS, [traj.times, ks[:, 0], ks[:, 1], ks[:, 2]]
    obs = traj.observables
    return TWO_SPIN_COLUMNS, [traj.times] + [obs[c] for c in TWO_SPIN_COLUMNS[1:]]


def _longitudinal_average(config: ScenarioConfig, header, columns) -> float:
    """Time-averaged longitudinal polarization over the second half."""
    data = {name: np.asarray(col) for name, col in zip(header, columns)}
    half = len(data["t"]) // 2
    if system_dimension(config) == 2:
        omega = np.asarray(config.model["omega"], dtype=float)
        w = np.linalg.norm(omega)
        w_hat = omega / w if w > 0 else np.array([0.0, 0.0, 1.0])
        kpar = (data["k_x"] * w_hat[0] + data["k_y"] * w_hat[1]
                + data["k_z"] * w_hat[2])
        return float(kpar[half:].mean())
    return float(data["s1_z"][half:].mean())


def _run_member(config: ScenarioConfig, seed: int, out_dir: Path):
    """Run one trajectory, write its files; returns (files, summary)."""
    out_dir.mkdir(parents=True, exist_ok=True)
    files = {}
    summary = {"seed": seed}

    if config.scenario == "butterfly":
        m = config.model
        try:
            traj, report = butterfly_run(m["epsilon"], m["psi_p"], m["base"],
                                         _settings(config))
        except IntegrationDivergedError as exc:
            _write_failure(config, exc, out_dir, files)
            raise
        header, columns = _csv_payload(config, traj)
        _write_csv(out_dir / "trajectory.csv", header, columns)
        files["trajectory.csv"] = _sha256(out_dir / "trajectory.csv")
        rep = {
            "initial_s1": [float(x) for x in report.initial_s1],
            "initial_s2": [float(x) for x in report.initial_s2],
            "final_s1": [float(x) for x in report.final_s1],
            "final_s2": [float(x) for x in report.final_s2],
            "predicted_s1_plus": None if report.predicted_s1_plus is None else
                [report.predicted_s1_plus.real, report.predicted_s1_plus.imag],
            "predicted_s1_z": report.predicted_s1_z,
            "antiparallel_max_rad": report.antiparallel_max_rad,
            "direction_drift_rad": report.direction_drift_rad,
            "sz_drift": report.sz_drift,
            "guarded_stationary": report.guarded_stationary,
        }
        with open(out_dir / "report.json", "w", encoding="utf-8", newline="") as f:
            json.dump(rep, f, indent=2, sort_keys=True)
            f.write("\n")
        files["report.json"] = _sha256(out_dir / "report.json")
        summary["longitudinal_average"] = _longitudinal_average(config, header, columns)
        return files, summary

    psi0, hamiltonian, rule = _build_run(config, seed)
    observables = two_spin_observables() if system_dimension(config) == 4 else None
    try:
        traj = evolve(psi0, hamiltonian, rule, _settings(config),
                      observables=observables)
    except IntegrationDivergedError as exc:
        _write_failure(config, exc, out_dir, files)
        raise
    header, columns = _csv_payload(config, traj)
    _write_csv(out_dir / "trajectory.csv", header, columns)
    files["trajectory.csv"] = _sha256(out_dir / "trajectory.csv")
    summary["guarded_evals"] = traj.guarded_evals
    summary["longitudinal_average"] = _longitudinal_average(config, header, columns)

    if config.scenario == "driven_lc":
        s1z = np.asarray(traj.observables["s1_z"])
        n_post = len(s1z) - int(len(s1z) * 0.5)
        if n_post >= 4096:
            report = detect_limit_cycle(traj.times, s1z)
            lc = {
                "detected": report.detected,
                "period": report.period,
                "amplitude": report.amplitude,
                "transient_end": report.transient_end,
            }
        else:
            lc = {"detected": None,
                  "reason": "fewer than 4096 post-transient samples"}
        with open(out_dir / "limit_cycle.json", "w", encoding="utf-8", newline="") as f:
            json.dump(lc, f, indent=2, sort_keys=True)
            f.write("\n")
        files["limit_cycle.json"] = _sha256(out_dir / "limit_cycle.json")
        summary["limit_cycle"] = lc
    return files, summary


def _write_failure(config, exc, out_dir, files):
    partial = exc.trajectory
    if partial is not None and len(partial.times):
        header, columns = _csv_payload(config, partial)
        _write_csv(out_dir / "trajectory_partial.csv", header, columns)
        files["trajectory_partial.csv"] = _sha256(out_dir / "trajectory_partial.csv")
    marker = {"failed": True, "error": str(exc), "time": exc.time}
    with open(out_dir / "FAILED.json", "w", encoding="utf-8", newline="") as f:
        json.dump(marker, f, indent=2, sort_keys=True)
        f.write("\n")
    files["FAILED.json"] = _sha256(out_dir / "FAILED.json")


def member_seeds(master_seed: int, n: int):
    """Per-member seeds derived deterministically from the master seed."""
    state = np.random.SeedSequence(master_seed).generate_state(n, dtype=np.uint64)
    return [int(s) for s in state]


@dataclasses.dataclass
class RunResult:
    output_dir: Path
    files: dict
    manifest_path: Path
    summaries: list


def run_scenario(config: ScenarioConfig, output=None, jobs: int = 1) -> RunResult:
    """Execute a config (single run or ensemble) and write the manifest.

    Divergence failures still write partial outputs, a FAILED.json marker and
    the manifest before the IntegrationDivergedError propagates.
    """
    out = Path(output) if output is not None else \
        Path(config.output or f"runs/{config.scenario}")
    out.mkdir(parents=True, exist_ok=True)
    t_start = time.time()
    files = {}
    summaries = []
    failure = None

    if config.ensemble_size == 1:
        try:
            member_files, summary = _run_member(config, config.seed, out)
            files.update(member_files)
            summaries.append(summary)
        except IntegrationDivergedError as exc:
            for name in ("trajectory_partial.csv", "FAILED.json"):
                if (out / name).exists():
                    files[name] = _sha256(out / name)
            failure = exc
    else:
        seeds = member_seeds(config.seed, config.ensemble_size)
        tags = [f"member_{i:03d}" for i in range(config.ensemble_size)]
        jobs = max(1, jobs)
        results: list = [None] * config.ensemble_size
        if jobs == 1:
            for i, (tag, seed) in enumerate(zip(tags, seeds)):
                try:
                    results[i] = _run_member(config, seed, out / tag)
                except IntegrationDivergedError as exc:
                    results[i] = exc
        else:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                futures = [
                    pool.submit(_run_member, config, seed, out / tag)
                    for tag, seed in zip(tags, seeds)
                ]
                for i, fut in enumerate(futures):
                    try:
                        results[i] = fut.result()
                    except IntegrationDivergedError as exc:
                        results[i] = exc
        values = []
        for i, (tag, res) in enumerate(zip(tags, results)):
            if isinstance(res, IntegrationDivergedError):
                failure = res
                for name in ("trajectory_partial.csv", "FAILED.json"):
                    if (out / tag / name).exists():
                        files[f"{tag}/{name}"] = _sha256(out / tag / name)
                continue
            member_files, summary = res
            for name, digest in member_files.items():
                files[f"{tag}/{name}"] = digest
            summary["member"] = tag
            summaries.append(summary)
            values.append(summary["longitudinal_average"])
        metric = "kpar" if system_dimension(config) == 2 else "s1z"
        mean = float(np.mean(values)) if values else math.nan
        stderr = float(np.std(values, ddof=1) / math.sqrt(len(values))) \
            if len(values) > 1 else 0.0
        _write_csv(out / "aggregate.csv",
                   ("n_members", f"{metric}_mean", f"{metric}_stderr"),
                   [[len(values)], [mean], [stderr]])
        files["aggregate.csv"] = _sha256(out / "aggregate.csv")

    manifest = {
        "schema_version": 1,
        "package_version": __version__,
        "scenario": config.scenario,
        "seed": config.seed,
        "config": config.to_dict(),
        "wall_clock_seconds": time.time() - t_start,
        "files": files,
    }
    manifest_path = out / "run_manifest.json"
    with open(manifest_path, "w", encoding="utf-8", newline="") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    if failure is not None:
        raise failure
    return RunResult(output_dir=out, files=files,
                     manifest_path=manifest_path, summaries=summaries)
