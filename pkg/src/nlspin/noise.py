"""Stationary Gaussian colored noise with exponential autocorrelation.

Each component is synthesized spectrally: the target autocovariance
variance * exp(-|t - t'| / correlation_time) has the Lorentzian power
spectrum S(W) = 2 * variance * correlation_time / (1 + W^2 correlation_time^2),
so independent complex Gaussian Fourier coefficients are drawn with variance
proportional to S at each grid frequency and inverse-transformed to a real
periodic series.  The zero-frequency coefficient is set to zero, which pins
the empirical mean of every realization at zero and removes a fraction
2*correlation_time/t_total (at most 2 percent at the enforced minimum
window) of the variance.

Components use independent, splittable substreams of one 64-bit seed
(stream index = component index), so extending the component count never
reshuffles existing components.  Evaluation between grid points is linear,
with periodic wrap-around in the last grid cell.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import SIGMA_X, SIGMA_Y, SIGMA_Z, embed_spin1, embed_spin2, pauli_dot


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class NoiseParams:
    """Synthesis parameters for one noise realization.

    The grid must resolve the correlation time (spacing <= correlation_time/20)
    and the window must be long enough (>= 100 correlation times) to keep
    periodization artifacts inside the stated statistical tolerances.
    """

    variance: float
    correlation_time: float
    t_total: float
    n_grid: int
    seed: int
    n_components: int = 3

    def __post_init__(self):
        if self.variance <= 0.0 or self.correlation_time <= 0.0:
            raise ValueError("variance and correlation_time must be positive")
        if self.t_total <= 0.0:
            raise ValueError("t_total must be positive")
        if not _is_pow2(self.n_grid) or self.n_grid < 256:
            raise ValueError("n_grid must be a power of two, at least 256")
        if self.n_components not in (3, 6):
            raise ValueError("n_components must be 3 (one spin) or 6 (two spins)")
        if self.t_total < 100.0 * self.correlation_time:
            raise ValueError("t_total must cover at least 100 correlation times")
        if self.t_total / self.n_grid > self.correlation_time / 20.0:
            raise ValueError("grid spacing must not exceed correlation_time/20")


class NoiseRealization:
    """Sampled noise components on a uniform periodic grid."""

    def __init__(self, params: NoiseParams, values: np.ndarray):
        self.params = params
        self.values = values
        self.grid_dt = params.t_total / params.n_grid
        self.times = np.arange(params.n_grid) * self.grid_dt

    def at(self, t: float) -> np.ndarray:
        """All component values at time t by linear interpolation.

        t must lie in [0, t_total]; there is no extrapolation.
        """
        if t < 0.0 or t > self.params.t_total:
            raise ValueError(
                f"t = {t:g} outside the synthesized window [0, {self.params.t_total:g}]"
            )
        x = t / self.grid_dt
        i = int(x)
        if i >= self.params.n_grid:
            i = 0
            frac = 0.0
        else:
            frac = x - i
        j = i + 1
        if j == self.params.n_grid:
            j = 0
        v = self.values
        return v[:, i] * (1.0 - frac) + v[:, j] * frac

    def component(self, index: int) -> np.ndarray:
        return self.values[index]

    def to_csv(self, path) -> None:
        """Audit dump: one row per grid point, t plus all components."""
        header = "t," + ",".join(f"c{i}" for i in range(self.params.n_components))
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(header + "\n")
            for j in range(self.params.n_grid):
                row = [format(self.times[j], ".17g")]
                row += [format(v, ".17g") for v in self.values[:, j]]
                f.write(",".join(row) + "\n")


def synthesize(params: NoiseParams) -> NoiseRealization:
    """Draw one realization of all components; deterministic per seed."""
    n = params.n_grid
    dt = params.t_total / n
    tau = params.correlation_time
    omegas = 2.0 * np.pi * np.fft.rfftfreq(n, d=dt)
    spectrum = 2.0 * params.variance * tau / (1.0 + (omegas * tau) ** 2)
    sigma = np.sqrt(n * spectrum / dt)
    values = np.empty((params.n_components, n))
    for comp in range(params.n_components):
        rng = np.random.default_rng(np.random.SeedSequence(params.seed, spawn_key=(comp,)))
        g = rng.standard_normal((2, sigma.size))
        coeff = (g[0] + 1j * g[1]) * (sigma / np.sqrt(2.0))
        coeff[0] = 0.0                      # pinned empirical mean
        coeff[-1] = g[0, -1] * sigma[-1]    # Nyquist coefficient is real
        values[comp] = np.fft.irfft(coeff, n=n)
    return NoiseRealization(params, values)


def autocovariance(realization: NoiseRealization, component: int, lag: float) -> float:
    """Sample autocovariance of one component at the nearest grid lag."""
    p = realization.params
    if lag < 0.0 or lag > p.t_total / 4.0:
        raise ValueError("lag must lie in [0, t_total/4]")
    ell = int(round(lag / realization.grid_dt))
    x = realization.values[component]
    xm = x.mean()
    n = x.size
    return float(np.dot(x[: n - ell] - xm, x[ell:] - xm) / (n - ell))


def noisy_hamiltonian(base, realization: NoiseRealization, t: float,
                      coupling: dict) -> np.ndarray:
    """Hamiltonian at time t: base plus the fluctuating field terms.

    coupling maps a spin number (1 or 2) to the triple of component indices
    feeding that spin's (x, y, z) axes.  For a 2-dimensional base only spin 1
    is meaningful; for a 4-dimensional base each coupled spin receives its
    own embedded field term.
    """
    base = np.asarray(base, dtype=complex)
    dim = base.shape[0]
    if base.shape != (dim, dim) or dim not in (2, 4):
        raise ValueError("base must be a 2x2 or 4x4 matrix")
    vals = realization.at(t)
    out = base.copy()
    for spin, axes in coupling.items():
        block = pauli_dot([vals[axes[0]], vals[axes[1]], vals[axes[2]]])
        if dim == 2:
            if spin != 1:
                raise ValueError("a 2-dimensional system has only spin 1")
            out += block
        elif spin == 1:
            out += embed_spin1(block)
        elif spin == 2:
            out += embed_spin2(block)
        else:
            raise ValueError("spin must be 1 or 2")
    return out


class NoisyHamiltonian:
    """Callable time-indexed provider equivalent to noisy_hamiltonian but
    with the embedded field generators precomputed (used in hot loops)."""

    def __init__(self, base, realization: NoiseRealization, coupling: dict):
        base = np.asarray(base, dtype=complex)
        dim = base.shape[0]
        if base.shape != (dim, dim) or dim not in (2, 4):
            raise ValueError("base must be a 2x2 or 4x4 matrix")
        gens = []
        comp_idx = []
        for spin in sorted(coupling):
            axes = coupling[spin]
            for pauli, comp in zip((SIGMA_X, SIGMA_Y, SIGMA_Z), axes):
                if dim == 2:
                    if spin != 1:
                        raise ValueError("a 2-dimensional system has only spin 1")
                    gens.append(pauli)
                elif spin == 1:
                    gens.append(embed_spin1(pauli))
                elif spin == 2:
                    gens.append(embed_spin2(pauli))
                else:
                    raise ValueError("spin must be 1 or 2")
                comp_idx.append(comp)
        self.base = base
        self.realization = realization
        self._gens = np.stack(gens)
        self._gens_flat = self._gens.reshape(len(gens), dim * dim)
        self._comp_idx = np.array(comp_idx)
        self._identity_order = (
            len(comp_idx) == realization.params.n_components
            and bool(np.array_equal(self._comp_idx, np.arange(len(comp_idx))))
        )
        self._dim = dim

    def __call__(self, t: float) -> np.ndarray:
        vals = self.realization.at(t)
        if not self._identity_order:
            vals = vals[self._comp_idx]
        return self.base + (vals @ self._gens_flat).reshape(self._dim, self._dim)
