"""One-spin reduced dynamics on the Bloch sphere.

For a pure qubit state the density operator is (1 + k.sigma)/2 with |k| = 1.
With a static precession vector omega and the drive target chosen as the +1
eigenstate of target_axis.sigma, the Bloch vector obeys

    dk/dt = 2 omega x k + drive_rate * ((s.k) k - s) / sqrt((1 - s.k)/2),

whose radial component vanishes on the sphere.  This module provides that
right-hand side, a matching fixed-step integrator (the cross-check oracle
for the full state-vector engine), the weak- and strong-drive fixed-point
approximations, and the noise-induced relaxation and thermal steady-state
formulas.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DegenerateGeometryError, SingularPointError


@dataclass(frozen=True, eq=False)
class OneSpinParams:
    """Static field, drive target axis and drive rate of a single spin."""

    omega: np.ndarray        # precession vector, angular frequency
    target_axis: np.ndarray  # unit vector s; the drive target is its +1 eigenstate
    drive_rate: float

    def __post_init__(self):
        w = np.asarray(self.omega, dtype=float)
        s = np.asarray(self.target_axis, dtype=float)
        if w.shape != (3,) or s.shape != (3,):
            raise ValueError("omega and target_axis must be real 3-vectors")
        if abs(np.linalg.norm(s) - 1.0) > 1e-12:
            raise ValueError("target_axis must be a unit vector")
        if self.drive_rate < 0.0:
            raise ValueError("drive_rate must be nonnegative")
        object.__setattr__(self, "omega", w)
        object.__setattr__(self, "target_axis", s)


@dataclass(frozen=True)
class ThermalParams:
    """Static field frequency plus fluctuating-field statistics."""

    omega_0: float
    variance: float          # stationary variance of each noise component
    correlation_time: float

    def __post_init__(self):
        if self.variance <= 0.0 or self.correlation_time <= 0.0:
            raise ValueError("variance and correlation_time must be positive")


def bloch_from_state(psi) -> np.ndarray:
    """Bloch vector (<sigma_x>, <sigma_y>, <sigma_z>) of a qubit state."""
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (2,):
        raise ValueError("bloch_from_state expects a 2-component state")
    z = psi[0].conjugate() * psi[1]
    return np.array([
        2.0 * z.real,
        2.0 * z.imag,
        (psi[0].real ** 2 + psi[0].imag ** 2) - (psi[1].real ** 2 + psi[1].imag ** 2),
    ])


def state_from_bloch(k) -> np.ndarray:
    """Qubit state (up to global phase) with the given unit Bloch vector."""
    k = np.asarray(k, dtype=float)
    if k.shape != (3,):
        raise ValueError("state_from_bloch expects a real 3-vector")
    if abs(np.linalg.norm(k) - 1.0) > 1e-10:
        raise ValueError("Bloch vector must have unit length")
    theta = math.acos(min(1.0, max(-1.0, k[2])))
    phi = math.atan2(k[1], k[0])
    return np.array([math.cos(0.5 * theta),
                     math.sin(0.5 * theta) * complex(math.cos(phi), math.sin(phi))],
                    dtype=complex)


def bloch_rhs(k, p: OneSpinParams, guard_eps: float = 1e-12) -> np.ndarray:
    """dk/dt at k; raises SingularPointError when k is at the target axis."""
    k = np.asarray(k, dtype=float)
    s = p.target_axis
    out = 2.0 * np.cross(p.omega, k)
    if p.drive_rate != 0.0:
        sk = float(s @ k)
        half = 0.5 * (1.0 - sk)
        if half < guard_eps:
            raise SingularPointError(
                "Bloch vector at the drive target axis; drive term singular"
            )
        out += p.drive_rate * (sk * k - s) / math.sqrt(half)
    return out


def _rhs_guarded(k, p, guard_eps):
    """bloch_rhs with the drive dropped inside the guard band, mirroring the
    state-vector integrator's singular guard."""
    out = 2.0 * np.cross(p.omega, k)
    if p.drive_rate != 0.0:
        sk = float(p.target_axis @ k)
        half = 0.5 * (1.0 - sk)
        if half >= guard_eps:
            out += p.drive_rate * (sk * k - p.target_axis) / math.sqrt(half)
    return out


def evolve_bloch(k0, p: OneSpinParams, dt: float, t_final: float,
                 sample_stride: int = 1, guard_eps: float = 1e-12,
                 renormalize: bool = True):
    """Integrate the Bloch equation with fixed-step RK4.

    Returns (times, ks) with ks of shape (n_samples, 3).  With renormalize
    the vector is projected back to the unit sphere after every step, which
    matches the state-vector engine's per-step renormalization.
    """
    k = np.asarray(k0, dtype=float).copy()
    if k.shape != (3,):
        raise ValueError("k0 must be a real 3-vector")
    n_steps = int(round(t_final / dt))
    record = list(range(0, n_steps + 1, sample_stride))
    if record[-1] != n_steps:
        record.append(n_steps)
    times = np.array([i * dt for i in record])
    ks = np.empty((len(record), 3))
    slot = 0
    ks[slot] = k
    slot += 1
    nxt = 1
    half_dt = 0.5 * dt
    for step in range(n_steps):
        k1 = _rhs_guarded(k, p, guard_eps)
        k2 = _rhs_guarded(k + half_dt * k1, p, guard_eps)
        k3 = _rhs_guarded(k + half_dt * k2, p, guard_eps)
        k4 = _rhs_guarded(k + dt * k3, p, guard_eps)
        k = k + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        if renormalize:
            k = k / np.linalg.norm(k)
        if nxt < len(record) and step + 1 == record[nxt]:
            ks[slot] = k
            slot += 1
            nxt += 1
    return times, ks


def relax_fixed_point(p: OneSpinParams, k0, dt: float | None = None,
                      max_time: float = 2000.0, tol: float = 1e-9) -> np.ndarray:
    """Damped relaxation to a stationary point of the Bloch equation.

    Integrates from k0 until ||dk/dt|| < tol and returns the stationary k.
    Raises ConvergenceError if stationarity is not reached by max_time.
    """
    if dt is None:
        dt = 0.01 / max(1.0, float(np.linalg.norm(p.omega)), p.drive_rate)
    k = np.asarray(k0, dtype=float).copy()
    k = k / np.linalg.norm(k)
    n_steps = int(round(max_time / dt))
    half_dt = 0.5 * dt
    for _ in range(n_steps):
        k1 = _rhs_guarded(k, p, 1e-12)
        if float(np.linalg.norm(k1)) < tol:
            return k
        k2 = _rhs_guarded(k + half_dt * k1, p, 1e-12)
        k3 = _rhs_guarded(k + half_dt * k2, p, 1e-12)
        k4 = _rhs_guarded(k + dt * k3, p, 1e-12)
        k = k + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        k = k / np.linalg.norm(k)
    raise ConvergenceError(
        f"no stationary point within t = {max_time:g} (||rhs|| >= {tol:g})"
    )


def fixed_point_weak(p: OneSpinParams):
    """First-order fixed points for drive_rate << |omega|.

    Returns the pair +-(w_hat + (drive_rate/|omega|) (2(1 - s.w_hat))**-0.5
    (s x w_hat)).
    """
    w = float(np.linalg.norm(p.omega))
    if w == 0.0:
        raise ValueError("weak-drive fixed points require a nonzero field")
    w_hat = p.omega / w
    s = p.target_axis
    denom = 2.0 * (1.0 - float(s @ w_hat))
    if denom < 1e-12:
        raise DegenerateGeometryError(
            "target axis parallel to the field; correction term diverges"
        )
    k = w_hat + (p.drive_rate / w) * np.cross(s, w_hat) / math.sqrt(denom)
    return k, -k


def fixed_point_strong(p: OneSpinParams) -> np.ndarray:
    """Fixed point -s + 2(|omega|/drive_rate) (s x w_hat), valid for
    drive_rate >> |omega|."""
    if p.drive_rate == 0.0:
        raise ValueError("strong-drive fixed point requires drive_rate > 0")
    w = float(np.linalg.norm(p.omega))
    if w == 0.0:
        return -p.target_axis.copy()
    w_hat = p.omega / w
    return -p.target_axis + 2.0 * (w / p.drive_rate) * np.cross(p.target_axis, w_hat)


def relaxation_rates(tp: ThermalParams):
    """Longitudinal and transverse relaxation rates (1/T1, 1/T2) induced by
    an exponentially correlated fluctuating field."""
    r1 = 2.0 * tp.variance * tp.correlation_time / (
        1.0 + (tp.omega_0 * tp.correlation_time) ** 2
    )
    r2 = 0.5 * r1 + tp.variance * tp.correlation_time
    return r1, r2


def thermal_steady_state(drive_rate: float, t1: float) -> float:
    """Steady-state longitudinal polarization -1 + 1/(1 + 2*drive_rate*T1)
    in the regime 1/T1 << drive_rate << |omega| with the target axis along
    the field."""
    if drive_rate < 0.0 or t1 < 0.0:
        raise ValueError("drive_rate and t1 must be nonnegative")
    x = 2.0 * drive_rate * t1
    if math.isinf(x):
        return -1.0
    return -1.0 + 1.0 / (1.0 + x)


def effective_temperature(omega_0: float, drive_rate: float, t1: float) -> float:
    """Effective temperature of the thermal steady state, in units of
    hbar*omega_0/k_B (omega_0 only fixes the unit).  Returns +inf when the
    steady polarization vanishes."""
    if omega_0 <= 0.0:
        raise ValueError("omega_0 must be positive")
    arg = 1.0 - 1.0 / (1.0 + 2.0 * drive_rate * t1)
    if arg <= 0.0:
        return math.inf
    return 1.0 / (2.0 * math.atanh(arg))


def augmented_kpar_rhs(k, p: OneSpinParams, t1: float,
                       guard_eps: float = 1e-12) -> float:
    """Longitudinal drift dk_par/dt for a field along z, plus the
    longitudinal relaxation term -k_par/T1 standing in for the fluctuating
    field.  Pass t1 = inf to drop the relaxation term."""
    w = float(np.linalg.norm(p.omega))
    if w == 0.0:
        raise ValueError("field must be nonzero")
    w_hat = p.omega / w
    if abs(w_hat[0]) > 1e-9 or abs(w_hat[1]) > 1e-9:
        raise ValueError("this form requires the field along +z")
    k = np.asarray(k, dtype=float)
    s = p.target_axis
    sk = float(s @ k)
    half = 0.5 * (1.0 - sk)
    if half < guard_eps:
        raise SingularPointError("Bloch vector at the drive target axis")
    drift = p.drive_rate * (
        (s[0] * k[0] + s[1] * k[1]) * k[2] + s[2] * (k[2] ** 2 - 1.0)
    ) / math.sqrt(half)
    if math.isinf(t1):
        return drift
    return drift - k[2] / t1
