"""Dense complex linear algebra for 2- and 4-dimensional spin Hilbert spaces.

States are plain complex numpy vectors, operators are complex square
matrices; nothing here is wrapped in classes.  The two-spin basis is ordered
|++>, |+->, |-+>, |--> with amplitudes (a, b, c, d), spin 1 owning the slow
(leftmost) index.  A single-spin operator K therefore embeds as kron(K, I)
when it acts on spin 1 and as kron(I, K) when it acts on spin 2.
"""
from __future__ import annotations

import numpy as np

from .errors import NumericalError

# Tolerances used across the package: algebraic identities must hold to
# roundoff, time-discretized quantities only to integrator accuracy.
ATOL_ALGEBRAIC = 1e-12
ATOL_DYNAMICAL = 1e-8

SIGMA_0 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = (SIGMA_X, SIGMA_Y, SIGMA_Z)


def as_state(amplitudes) -> np.ndarray:
    """Validate and return a normalized state vector of dimension 2 or 4."""
    psi = np.asarray(amplitudes, dtype=complex)
    if psi.ndim != 1 or psi.shape[0] not in (2, 4):
        raise ValueError(
            f"state must be a complex vector of length 2 or 4, got shape {psi.shape}"
        )
    if abs(np.vdot(psi, psi).real - 1.0) > ATOL_ALGEBRAIC:
        raise ValueError("state vector is not normalized")
    return psi


def normalized(vec) -> np.ndarray:
    """Return vec scaled to unit norm; rejects the zero vector."""
    v = np.asarray(vec, dtype=complex)
    n = np.linalg.norm(v)
    if n == 0.0:
        raise ValueError("cannot normalize the zero vector")
    return v / n


def is_hermitian(m, atol: float = ATOL_ALGEBRAIC) -> bool:
    m = np.asarray(m)
    return bool(np.max(np.abs(m - m.conj().T)) <= atol)


def pauli_dot(v) -> np.ndarray:
    """v[0]*sigma_x + v[1]*sigma_y + v[2]*sigma_z for a real 3-vector v."""
    vx, vy, vz = float(v[0]), float(v[1]), float(v[2])
    return np.array([[vz, vx - 1j * vy], [vx + 1j * vy, -vz]], dtype=complex)


def expectation(op, psi) -> float:
    """<psi|op|psi> for Hermitian op; the imaginary residue is checked and
    discarded."""
    op = np.asarray(op, dtype=complex)
    psi = np.asarray(psi, dtype=complex)
    if op.ndim != 2 or op.shape != (psi.shape[0], psi.shape[0]):
        raise ValueError(f"dimension mismatch: op {op.shape} vs state {psi.shape}")
    val = np.vdot(psi, op @ psi)
    if abs(val.imag) > ATOL_ALGEBRAIC * max(1.0, abs(val.real)):
        raise NumericalError(
            f"expectation value has imaginary residue {val.imag:.3e}"
        )
    return float(val.real)


def kron(a, b) -> np.ndarray:
    """Kronecker product of two 2x2 operators (row-major convention, so the
    left factor owns the slow index and acts on spin 1)."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != (2, 2) or b.shape != (2, 2):
        raise ValueError("kron expects two 2x2 operators")
    return np.kron(a, b)


def embed_spin1(k) -> np.ndarray:
    """Lift a 2x2 operator to the two-spin space, acting on spin 1."""
    return kron(k, SIGMA_0)


def embed_spin2(k) -> np.ndarray:
    """Lift a 2x2 operator to the two-spin space, acting on spin 2."""
    return kron(SIGMA_0, k)


def projector(vec) -> np.ndarray:
    """|v><v| / <v|v> for a nonzero (not necessarily normalized) vector."""
    v = np.asarray(vec, dtype=complex)
    n2 = np.vdot(v, v).real
    if n2 == 0.0:
        raise ValueError("projector of the zero vector is undefined")
    return np.outer(v, v.conj()) / n2


def density(psi) -> np.ndarray:
    """Pure-state density operator |psi><psi| of a normalized state."""
    psi = as_state(psi)
    return np.outer(psi, psi.conj())


def partial_transpose(rho, subsystem: int) -> np.ndarray:
    """Transpose the indices of one spin of a 4x4 two-spin operator.

    For a pure state (a, b, c, d) the determinant of the result equals
    -|ad - bc|**4 for either choice of subsystem.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError("partial transpose is defined here for 4x4 operators")
    r = rho.reshape(2, 2, 2, 2)
    if subsystem == 1:
        r = r.transpose(2, 1, 0, 3)
    elif subsystem == 2:
        r = r.transpose(0, 3, 2, 1)
    else:
        raise ValueError("subsystem must be 1 or 2")
    return r.reshape(4, 4).copy()


_FLIP_SIGNS = np.array([1.0, -1.0, -1.0, 1.0])


def spin_flip_target(psi) -> np.ndarray:
    """Both-spins-flipped target vector of a two-spin state.

    For psi with amplitudes (a, b, c, d) the target has components
    (d*, -c*, -b*, a*), so its bra is d<++| - c<+-| - b<-+| + a<--| and the
    overlap <target|psi> equals 2(ad - bc).  The target is normalized
    whenever psi is.
    """
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (4,):
        raise ValueError("spin-flip target requires a two-spin state")
    return psi[::-1].conj() * _FLIP_SIGNS
