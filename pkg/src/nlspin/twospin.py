"""Two-spin observables, entanglement bookkeeping and driven-system model.

Amplitudes follow the fixed basis |++>, |+->, |-+>, |--> = (a, b, c, d).
The quantity E = ad - bc determines the single-spin purity P = 1 - 2|E|^2
and the spin expectation lengths |<S1>|^2 = |<S2>|^2 = 1 - 4|E|^2; it is the
entanglement monitor used throughout.  The spin-flip drive target (built in
linalg) has overlap <T|psi> = 2E, so the nonlinear drive erases E over time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import EvolutionSettings, SpinFlipTarget, evolve
from .linalg import (
    PAULI,
    as_state,
    embed_spin1,
    embed_spin2,
    expectation,
    normalized,
    pauli_dot,
    spin_flip_target,  # re-exported: the two-spin drive target lives here logically
)

BELL_SINGLET = np.array([0.0, 1.0, -1.0, 0.0], dtype=complex) / math.sqrt(2.0)
BELL_TRIPLET = np.array([0.0, 1.0, 1.0, 0.0], dtype=complex) / math.sqrt(2.0)

SPIN1_OPS = tuple(embed_spin1(s) for s in PAULI)
SPIN2_OPS = tuple(embed_spin2(s) for s in PAULI)
# S1.S2 = sum_i kron(sigma_i, sigma_i)
SPIN_DOT_OP = sum(embed_spin1(s) @ embed_spin2(s) for s in PAULI)


def spin_projection_op(which: int, theta: float, phi: float) -> np.ndarray:
    """S_n . u for unit vector u(theta, phi), embedded in the two-spin space."""
    u = [math.sin(theta) * math.cos(phi),
         math.sin(theta) * math.sin(phi),
         math.cos(theta)]
    block = pauli_dot(u)
    if which == 1:
        return embed_spin1(block)
    if which == 2:
        return embed_spin2(block)
    raise ValueError("which must be 1 or 2")


def spin_expectations(psi):
    """(<S1>, <S2>) as real 3-vectors."""
    psi = np.asarray(psi, dtype=complex)
    s1 = np.array([expectation(op, psi) for op in SPIN1_OPS])
    s2 = np.array([expectation(op, psi) for op in SPIN2_OPS])
    return s1, s2


def entanglement_amplitude(psi) -> complex:
    """E = ad - bc; |E| <= 1/2 with equality for maximally entangled states."""
    a, b, c, d = np.asarray(psi, dtype=complex)
    return complex(a * d - b * c)


def purity(psi) -> float:
    """Single-spin purity P = 1 - 2|ad - bc|^2, bounded by 1/2 <= P <= 1."""
    e = entanglement_amplitude(psi)
    return 1.0 - 2.0 * (e.real * e.real + e.imag * e.imag)


def symmetric_state(theta_psi: float, phi_alpha: float, phi_beta: float) -> np.ndarray:
    """The family of states with <S1> = <S2> = 0 (all of them have E = 1/2)."""
    ct = math.cos(0.5 * theta_psi)
    st = math.sin(0.5 * theta_psi)
    ea = np.exp(-0.5j * phi_alpha)
    eb = np.exp(-0.5j * phi_beta)
    inv = 1.0 / math.sqrt(2.0)
    return np.array([
        ct * ea * inv,
        st * 1j * eb * inv,
        st * 1j * eb.conjugate() * inv,
        ct * ea.conjugate() * inv,
    ], dtype=complex)


def r_expectation(psi) -> float:
    """<R> = <S1.S2> - <S1>.<S2> via the closed form
    4(|ad|^2 - |bc|^2) - 4 Re((b*^2 + c*^2)(ad - bc))."""
    a, b, c, d = np.asarray(psi, dtype=complex)
    ad = a * d
    bc = b * c
    term = (b.conjugate() ** 2 + c.conjugate() ** 2) * (ad - bc)
    return float(4.0 * (abs(ad) ** 2 - abs(bc) ** 2) - 4.0 * term.real)


def r_expectation_from_operators(psi) -> float:
    """<R> evaluated directly from the operators (cross-check path)."""
    s1, s2 = spin_expectations(psi)
    return expectation(SPIN_DOT_OP, psi) - float(s1 @ s2)


def random_state_with_entanglement(e_abs: float, rng: np.random.Generator) -> np.ndarray:
    """Random normalized two-spin state with |ad - bc| exactly e_abs.

    Views the amplitudes as a 2x2 matrix A with det A = ad - bc and draws
    A = U diag(s1, s2) V with Haar-random U, V and singular values fixed by
    s1 s2 = e_abs, s1^2 + s2^2 = 1.
    """
    if not 0.0 <= e_abs <= 0.5:
        raise ValueError("e_abs must lie in [0, 1/2]")
    lam = math.sqrt(max(0.0, 1.0 - 4.0 * e_abs * e_abs))
    s1 = math.sqrt(0.5 * (1.0 + lam))
    s2 = math.sqrt(0.5 * (1.0 - lam))

    def haar2():
        z = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        q, r = np.linalg.qr(z)
        d = np.diagonal(r)
        return q * (d / np.abs(d))

    amp = haar2() @ np.diag([s1, s2]) @ haar2()
    return amp.reshape(4).astype(complex)


@dataclass(frozen=True)
class DrivenParams:
    """Rotating-frame model of a slow spin coupled to a driven spin."""

    omega_a: float   # slow-spin angular frequency (spin 1)
    omega_1: float   # drive amplitude on spin 2
    delta: float     # -delta is the drive detuning
    g: float         # coupling rate

    def __post_init__(self):
        for name in ("omega_a", "omega_1", "delta", "g"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


def omega_matrix(p: DrivenParams) -> np.ndarray:
    """Rotating-frame Hamiltonian (angular-frequency units) of the driven
    two-spin model, with spin a on index 1 and the driven spin on index 2."""
    wa, w1, d, g = p.omega_a, p.omega_1, p.delta, p.g
    return np.array([
        [0.5 * (wa + d), 0.5 * w1,        0.5 * g,          0.0],
        [0.5 * w1,       0.5 * (wa - d),  0.0,             -0.5 * g],
        [0.5 * g,        0.0,             0.5 * (-wa + d),  0.5 * w1],
        [0.0,           -0.5 * g,         0.5 * w1,         0.5 * (-wa - d)],
    ], dtype=complex)


def rabi_frequency(p: DrivenParams) -> float:
    """sqrt(omega_1^2 + delta^2)."""
    return math.hypot(p.omega_1, p.delta)


def hartmann_hahn_mismatch(p: DrivenParams) -> float:
    """omega_a - rabi_frequency; zero at the matching condition."""
    return p.omega_a - rabi_frequency(p)


def two_spin_observables() -> dict:
    """Standard named observables recorded along two-spin trajectories."""
    def s_fn(op):
        return lambda t, psi: expectation(op, psi)

    obs = {}
    for axis, op in zip("xyz", SPIN1_OPS):
        obs[f"s1_{axis}"] = s_fn(op)
    for axis, op in zip("xyz", SPIN2_OPS):
        obs[f"s2_{axis}"] = s_fn(op)
    obs["purity"] = lambda t, psi: purity(psi)
    obs["abs_E"] = lambda t, psi: abs(entanglement_amplitude(psi))
    obs["R"] = lambda t, psi: r_expectation(psi)
    return obs


def _angle(u, v) -> float:
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return math.acos(min(1.0, max(-1.0, float(u @ v) / (nu * nv))))


@dataclass
class ButterflyReport:
    """Summary of a perturbed maximally-entangled run.

    The first-order predictions apply to the singlet base and are None for
    the triplet base.  guarded_stationary flags runs that sat on the
    singular guard for every drive evaluation (the unperturbed case).
    """

    initial_s1: np.ndarray
    initial_s2: np.ndarray
    final_s1: np.ndarray
    final_s2: np.ndarray
    predicted_s1_plus: complex | None
    predicted_s1_z: float | None
    antiparallel_max_rad: float
    direction_drift_rad: float
    sz_drift: float
    guarded_stationary: bool


def butterfly_run(epsilon: float, psi_p, base: str,
                  settings: EvolutionSettings):
    """Evolve (|base> + epsilon |psi_p>) normalized, H = 0, spin-flip drive.

    base is "singlet" or "triplet".  Returns (trajectory, report); the
    trajectory carries the standard two-spin observables plus the total
    longitudinal spin s_z.  For the singlet base the report includes the
    first-order initial-value predictions <S1+> = 2^(1/2)(delta - alpha*) eps
    and <S1z> = 2^(-1/2)(beta + beta* + gamma + gamma*) eps.
    """
    if base == "singlet":
        base_state = BELL_SINGLET
    elif base == "triplet":
        base_state = BELL_TRIPLET
    else:
        raise ValueError('base must be "singlet" or "triplet"')
    if epsilon < 0.0:
        raise ValueError("epsilon must be nonnegative")
    psi_p = as_state(psi_p)
    psi0 = normalized(base_state + epsilon * psi_p)

    obs = two_spin_observables()
    obs["s_z"] = lambda t, psi: expectation(SPIN1_OPS[2] + SPIN2_OPS[2], psi)
    traj = evolve(psi0, np.zeros((4, 4), dtype=complex), SpinFlipTarget(),
                  settings, observables=obs)

    s1 = np.column_stack([traj.observables[f"s1_{ax}"] for ax in "xyz"])
    s2 = np.column_stack([traj.observables[f"s2_{ax}"] for ax in "xyz"])
    anti = max(_angle(s1[i], -s2[i]) for i in range(len(traj.times)))
    sz = traj.observables["s_z"]
    report = ButterflyReport(
        initial_s1=s1[0],
        initial_s2=s2[0],
        final_s1=s1[-1],
        final_s2=s2[-1],
        predicted_s1_plus=None,
        predicted_s1_z=None,
        antiparallel_max_rad=anti,
        direction_drift_rad=_angle(s1[0], s1[-1]),
        sz_drift=float(np.max(np.abs(sz - sz[0]))),
        guarded_stationary=(
            settings.drive_rate > 0.0
            and traj.guarded_evals == 4 * int(round(settings.t_final / settings.dt))
        ),
    )
    if base == "singlet":
        alpha, beta, gamma, delta = psi_p
        report.predicted_s1_plus = complex(
            math.sqrt(2.0) * (delta - alpha.conjugate()) * epsilon
        )
        report.predicted_s1_z = float(
            (beta + beta.conjugate() + gamma + gamma.conjugate()).real
            * epsilon / math.sqrt(2.0)
        )
    return traj, report


@dataclass
class LimitCycleReport:
    """Outcome of the sustained-oscillation test on one observable series."""

    detected: bool
    period: float
    amplitude: float       # peak to peak
    transient_end: float


def detect_limit_cycle(times, values, transient_fraction: float = 0.5,
                       amplitude_floor: float = 0.05,
                       agreement_tol: float = 0.2) -> LimitCycleReport:
    """Decide whether a series settles onto a sustained oscillation.

    The leading transient_fraction of the samples is discarded; the rest is
    split into two successive half-windows.  The series is declared a limit
    cycle when both half-window peak-to-peak amplitudes exceed
    amplitude_floor and agree within agreement_tol, and the dominant
    discrete-spectrum frequency is the same bin (within one) in both halves.
    The reported period comes from the dominant bin of the whole
    post-transient window; the amplitude is the mean peak-to-peak value.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.shape != values.shape or times.ndim != 1:
        raise ValueError("times and values must be equal-length 1-d arrays")
    if not 0.0 <= transient_fraction < 1.0:
        raise ValueError("transient_fraction must lie in [0, 1)")
    i0 = int(len(values) * transient_fraction)
    post = values[i0:]
    if post.size < 4096:
        raise ValueError("need at least 4096 post-transient samples")
    half = post.size // 2
    win_a = post[:half]
    win_b = post[half:2 * half]
    p2p_a = float(win_a.max() - win_a.min())
    p2p_b = float(win_b.max() - win_b.min())

    def dominant_bin(x):
        mag = np.abs(np.fft.rfft(x - x.mean()))
        return int(np.argmax(mag[1:]) + 1)

    bin_a = dominant_bin(win_a)
    bin_b = dominant_bin(win_b)
    dt_s = float(times[1] - times[0])
    k_full = dominant_bin(post)
    period = post.size * dt_s / k_full
    amp_ok = (
        min(p2p_a, p2p_b) > amplitude_floor
        and abs(p2p_a - p2p_b) <= agreement_tol * max(p2p_a, p2p_b)
    )
    detected = amp_ok and abs(bin_a - bin_b) <= 1
    return LimitCycleReport(
        detected=detected,
        period=period,
        amplitude=0.5 * (p2p_a + p2p_b),
        transient_end=float(times[i0]),
    )
