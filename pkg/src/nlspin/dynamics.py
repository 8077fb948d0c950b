"""State-vector evolution with a norm-preserving nonlinear drive.

The equation of motion integrated here is

    d|psi>/dt = (-i H + drive_rate * M) |psi>,        hbar = 1,

where H is a (possibly time-dependent) Hermitian matrix in angular-frequency
units and M is a Hermitian operator rebuilt from the current state and a
target vector.  M has zero expectation in the current state, so the norm of
|psi> is conserved by the continuous dynamics; the integrator is a fixed-step
classic Runge-Kutta scheme with optional per-step renormalization to absorb
the residual discretization drift.

The drive prefactor diverges as the state approaches the target ray.  When
1 - <P> falls below a configurable guard threshold the drive is replaced by
zero for that evaluation and a counter is incremented, which makes runs that
start exactly on the target ray deterministic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from . import _kernels
from .errors import IntegrationDivergedError
from .linalg import as_state, spin_flip_target
from .noise import NoisyHamiltonian

# Dispatch integration to the jitted kernel when numba is importable; the
# pure-numpy loop below is the reference semantics either way.
_kernel_enabled = _kernels.HAVE_NUMBA


@dataclass(frozen=True, eq=False)
class FixedTarget:
    """Drive built from a fixed target vector.

    The vector need not be normalized; its norm enters the drive prefactor.
    """

    vector: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=complex)
        if v.ndim != 1 or v.shape[0] not in (2, 4):
            raise ValueError("target must be a complex vector of length 2 or 4")
        if np.vdot(v, v).real == 0.0:
            raise ValueError("target vector must be nonzero")
        object.__setattr__(self, "vector", v)


@dataclass(frozen=True)
class SpinFlipTarget:
    """Drive whose target is the both-spins-flipped image of the current
    state; valid for two-spin (dimension 4) states only."""


TargetRule = Union[FixedTarget, SpinFlipTarget]


def target_vector(rule: TargetRule, psi: np.ndarray) -> np.ndarray:
    """Resolve the target vector of a rule for the current state."""
    if isinstance(rule, FixedTarget):
        return rule.vector
    if isinstance(rule, SpinFlipTarget):
        if psi.shape[0] != 4:
            raise ValueError("spin-flip rule requires a two-spin state")
        return spin_flip_target(psi)
    raise TypeError(f"unknown target rule {rule!r}")


def _drive_scalars(target, psi):
    tn2 = np.vdot(target, target).real
    if tn2 == 0.0:
        raise ValueError("target vector must be nonzero")
    pn2 = np.vdot(psi, psi).real
    ov = np.vdot(target, psi)
    frac = (ov.real * ov.real + ov.imag * ov.imag) / (tn2 * pn2)
    return tn2, ov, frac


def _drive_apply(target, psi, guard_eps):
    """(M |psi>, guarded) without forming the matrix; used in hot loops."""
    tn2, ov, frac = _drive_scalars(target, psi)
    if 1.0 - frac < guard_eps:
        return np.zeros_like(psi), True
    pref = -math.sqrt(tn2 / (1.0 - frac))
    return pref * ((ov / tn2) * target - frac * psi), False


def drive_operator(target, psi, guard_eps: float = 1e-12) -> np.ndarray:
    """Hermitian drive generator for a target vector and the current state.

    Returns -sqrt(<T|T> / (1 - <P>)) (P - <P>), where P projects on the
    target ray and <.> is taken in psi.  By construction the operator has
    zero expectation in psi.  When 1 - <P> < guard_eps the zero matrix is
    returned instead (the prefactor diverges and the directional limit is
    ambiguous there).
    """
    target = np.asarray(target, dtype=complex)
    psi = np.asarray(psi, dtype=complex)
    if target.shape != psi.shape:
        raise ValueError("target and state dimensions differ")
    tn2, _, frac = _drive_scalars(target, psi)
    dim = psi.shape[0]
    if 1.0 - frac < guard_eps:
        return np.zeros((dim, dim), dtype=complex)
    pref = -math.sqrt(tn2 / (1.0 - frac))
    return pref * (np.outer(target, target.conj()) / tn2 - frac * np.eye(dim))


def state_rhs(psi, hamiltonian, rule: TargetRule, drive_rate: float,
              guard_eps: float = 1e-12) -> np.ndarray:
    """Right-hand side (-i H + drive_rate * M)|psi> of the state equation."""
    psi = np.asarray(psi, dtype=complex)
    h = np.asarray(hamiltonian, dtype=complex)
    if h.shape != (psi.shape[0], psi.shape[0]):
        raise ValueError("Hamiltonian and state dimensions differ")
    out = -1j * (h @ psi)
    if drive_rate != 0.0:
        vec, guarded = _drive_apply(target_vector(rule, psi), psi, guard_eps)
        if not guarded:
            out += drive_rate * vec
    return out


def density_rhs(rho, hamiltonian, drive, drive_rate: float) -> np.ndarray:
    """d rho/dt = [H, rho]/i + drive_rate (rho M + M rho) for pure rho."""
    rho = np.asarray(rho, dtype=complex)
    h = np.asarray(hamiltonian, dtype=complex)
    m = np.asarray(drive, dtype=complex)
    if rho.shape != h.shape or rho.shape != m.shape:
        raise ValueError("dimension mismatch between rho, H and drive")
    return -1j * (h @ rho - rho @ h) + drive_rate * (rho @ m + m @ rho)


def expectation_rate(obs, psi, hamiltonian, drive, drive_rate: float) -> float:
    """d<O>/dt = <[O, H]>/i + drive_rate <M O + O M> for time-independent O."""
    obs = np.asarray(obs, dtype=complex)
    psi = np.asarray(psi, dtype=complex)
    h = np.asarray(hamiltonian, dtype=complex)
    m = np.asarray(drive, dtype=complex)
    if obs.shape != (psi.shape[0], psi.shape[0]) or obs.shape != h.shape:
        raise ValueError("dimension mismatch")
    val = np.vdot(psi, (obs @ h - h @ obs) @ psi) / 1j
    val += drive_rate * np.vdot(psi, (m @ obs + obs @ m) @ psi)
    return float(val.real)


@dataclass(frozen=True)
class EvolutionSettings:
    """Fixed-step integrator settings.

    dt and t_final are in inverse angular-frequency units.  Guidance:
    dt <= 0.01 / max(|omega|, drive_rate, rabi frequency) keeps the local
    truncation error negligible for the runs in this package.
    """

    dt: float
    t_final: float
    drive_rate: float
    renormalize_every_step: bool = True
    singular_guard_eps: float = 1e-12
    sample_stride: int = 1

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.t_final < 0.0:
            raise ValueError("t_final must be nonnegative")
        if self.drive_rate < 0.0:
            raise ValueError("drive_rate must be nonnegative")
        if self.singular_guard_eps <= 0.0:
            raise ValueError("singular_guard_eps must be positive")
        if self.sample_stride < 1:
            raise ValueError("sample_stride must be at least 1")


@dataclass
class Trajectory:
    """Sampled output of one evolution run.

    times is strictly increasing; states holds one normalized state per
    sample (row-wise); observables maps a name to a real series evaluated at
    the sampled instants; guarded_evals counts right-hand-side evaluations
    where the singular guard replaced the drive by zero.
    """

    times: np.ndarray
    states: np.ndarray
    observables: dict = field(default_factory=dict)
    guarded_evals: int = 0


def evolve(psi0, hamiltonian, rule: TargetRule, settings: EvolutionSettings,
           observables: dict[str, Callable] | None = None) -> Trajectory:
    """Integrate the state equation with classic fourth-order Runge-Kutta.

    hamiltonian is either a constant matrix or a callable t -> matrix, which
    is sampled at the substep times t, t + dt/2 and t + dt.  Samples are
    recorded every sample_stride steps (the initial and final states always
    included).  observables, if given, maps names to callables f(t, psi)
    evaluated at the sampled instants.

    Raises IntegrationDivergedError when an amplitude turns non-finite; the
    exception carries the failing time and the partial trajectory.
    """
    psi = as_state(psi0).copy()
    dim = psi.shape[0]
    if isinstance(rule, SpinFlipTarget) and dim != 4:
        raise ValueError("spin-flip rule requires a two-spin state")
    if isinstance(rule, FixedTarget) and rule.vector.shape[0] != dim:
        raise ValueError("target and state dimensions differ")

    if callable(hamiltonian):
        h_of_t = hamiltonian
        h_const = None
    else:
        h_const = np.asarray(hamiltonian, dtype=complex)
        if h_const.shape != (dim, dim):
            raise ValueError("Hamiltonian and state dimensions differ")
        h_of_t = None
    if isinstance(hamiltonian, NoisyHamiltonian) and \
            settings.t_final > hamiltonian.realization.params.t_total + 1e-9:
        raise ValueError("t_final extends beyond the synthesized noise window")

    dt = settings.dt
    n_steps = int(round(settings.t_final / dt))
    stride = settings.sample_stride
    rate = settings.drive_rate
    eps = settings.singular_guard_eps
    fixed = isinstance(rule, FixedTarget)
    tgt = rule.vector if fixed else None
    guard_count = [0]
    obs_fns = observables or {}

    record_steps = [i for i in range(0, n_steps + 1, stride)]
    if record_steps[-1] != n_steps:
        record_steps.append(n_steps)
    times = np.array([i * dt for i in record_steps])
    states = np.empty((len(record_steps), dim), dtype=complex)
    obs_series = {name: np.empty(len(record_steps)) for name in obs_fns}

    kernel_ok = _kernel_enabled and (
        h_of_t is None or isinstance(hamiltonian, NoisyHamiltonian)
    )
    if kernel_ok:
        if h_of_t is None:
            h_base = h_const
            gens = np.zeros((0, dim, dim), dtype=complex)
            comp_idx = np.zeros(0, dtype=np.int64)
            noise_vals = np.zeros((1, 1))
            grid_dt = 1.0
            use_noise = False
        else:
            h_base = hamiltonian.base
            gens = hamiltonian._gens
            comp_idx = hamiltonian._comp_idx.astype(np.int64)
            noise_vals = hamiltonian.realization.values
            grid_dt = hamiltonian.realization.grid_dt
            use_noise = True
        target = tgt if fixed else np.zeros(dim, dtype=complex)
        rec_arr = np.asarray(record_steps, dtype=np.int64)
        guarded, fail_step, n_rec = _kernels.rk4_run(
            psi, h_base, gens, comp_idx, noise_vals, grid_dt, use_noise,
            fixed, target, rate, eps, dt, n_steps,
            settings.renormalize_every_step, rec_arr, states,
        )
        for name, fn in obs_fns.items():
            series = obs_series[name]
            for j in range(n_rec):
                series[j] = fn(times[j], states[j])
        if fail_step >= 0:
            raise IntegrationDivergedError(
                f"non-finite amplitudes at t = {fail_step * dt:g}",
                time=fail_step * dt,
                trajectory=Trajectory(
                    times=times[:n_rec],
                    states=states[:n_rec].copy(),
                    observables={k: v[:n_rec].copy() for k, v in obs_series.items()},
                    guarded_evals=guarded,
                ),
            )
        return Trajectory(times=times, states=states, observables=obs_series,
                          guarded_evals=guarded)

    def rhs(t, y):
        h = h_const if h_of_t is None else np.asarray(h_of_t(t), dtype=complex)
        out = -1j * (h @ y)
        if rate != 0.0:
            vec, guarded = _drive_apply(tgt if fixed else spin_flip_target(y), y, eps)
            if guarded:
                guard_count[0] += 1
            else:
                out += rate * vec
        return out

    def record(slot, step):
        states[slot] = psi
        if obs_fns:
            t = step * dt
            for name, fn in obs_fns.items():
                obs_series[name][slot] = fn(t, psi)

    def partial(upto_slot):
        return Trajectory(
            times=times[:upto_slot],
            states=states[:upto_slot].copy(),
            observables={k: v[:upto_slot].copy() for k, v in obs_series.items()},
            guarded_evals=guard_count[0],
        )

    slot = 0
    record(slot, 0)
    slot += 1
    next_record = 1

    half = 0.5 * dt
    sixth = dt / 6.0
    for step in range(n_steps):
        t = step * dt
        k1 = rhs(t, psi)
        k2 = rhs(t + half, psi + half * k1)
        k3 = rhs(t + half, psi + half * k2)
        k4 = rhs(t + dt, psi + dt * k3)
        psi = psi + sixth * (k1 + 2.0 * (k2 + k3) + k4)
        if settings.renormalize_every_step:
            psi = psi / np.linalg.norm(psi)
        if not np.all(np.isfinite(psi)):
            t_fail = (step + 1) * dt
            raise IntegrationDivergedError(
                f"non-finite amplitudes at t = {t_fail:g}",
                time=t_fail,
                trajectory=partial(slot),
            )
        if next_record < len(record_steps) and step + 1 == record_steps[next_record]:
            record(slot, step + 1)
            slot += 1
            next_record += 1

    return Trajectory(
        times=times,
        states=states,
        observables=obs_series,
        guarded_evals=guard_count[0],
    )
