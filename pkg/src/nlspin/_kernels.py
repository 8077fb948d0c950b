"""Jitted fixed-step RK4 kernel for the standard scenario right-hand sides.

The kernel reproduces the reference loop in dynamics.evolve step for step:
constant base Hamiltonian plus optional linearly interpolated noise
generators, fixed or spin-flip drive target, singular guard, optional
per-step renormalization, stride sampling and divergence detection.  When
numba is unavailable evolve falls back to the plain numpy loop; results
agree to roundoff.
"""
from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


@njit(cache=True)
def _rhs(t, psi, out, h_base, gens, comp_idx, noise_vals, grid_dt, use_noise,
         fixed_rule, target, tgt_buf, drive_rate, guard_eps):
    dim = psi.shape[0]
    n_gen = gens.shape[0]
    vals = np.empty(n_gen)
    if use_noise:
        n_grid = noise_vals.shape[1]
        x = t / grid_dt
        ii = int(x)
        if ii >= n_grid:
            ii = 0
            frac = 0.0
        else:
            frac = x - ii
        jj = ii + 1
        if jj == n_grid:
            jj = 0
        for m in range(n_gen):
            c = comp_idx[m]
            vals[m] = noise_vals[c, ii] * (1.0 - frac) + noise_vals[c, jj] * frac
    for r in range(dim):
        acc = 0.0 + 0.0j
        for c in range(dim):
            hrc = h_base[r, c]
            if use_noise:
                for m in range(n_gen):
                    hrc = hrc + vals[m] * gens[m, r, c]
            acc = acc + hrc * psi[c]
        out[r] = -1j * acc

    if drive_rate == 0.0:
        return 0

    if fixed_rule:
        for i in range(dim):
            tgt_buf[i] = target[i]
    else:
        tgt_buf[0] = psi[3].conjugate()
        tgt_buf[1] = -psi[2].conjugate()
        tgt_buf[2] = -psi[1].conjugate()
        tgt_buf[3] = psi[0].conjugate()
    tn2 = 0.0
    pn2 = 0.0
    ov = 0.0 + 0.0j
    for i in range(dim):
        tn2 += tgt_buf[i].real * tgt_buf[i].real + tgt_buf[i].imag * tgt_buf[i].imag
        pn2 += psi[i].real * psi[i].real + psi[i].imag * psi[i].imag
        ov += tgt_buf[i].conjugate() * psi[i]
    frac_p = (ov.real * ov.real + ov.imag * ov.imag) / (tn2 * pn2)
    if 1.0 - frac_p < guard_eps:
        return 1
    pref = -np.sqrt(tn2 / (1.0 - frac_p)) * drive_rate
    f1 = pref * (ov / tn2)
    f2 = pref * frac_p
    for i in range(dim):
        out[i] += f1 * tgt_buf[i] - f2 * psi[i]
    return 0


@njit(cache=True)
def rk4_run(psi0, h_base, gens, comp_idx, noise_vals, grid_dt, use_noise,
            fixed_rule, target, drive_rate, guard_eps, dt, n_steps,
            renormalize, record_steps, states_out):
    """Integrate n_steps; returns (guarded_evals, fail_step, n_recorded).

    fail_step is -1 on success, otherwise the 1-based step index at which a
    non-finite amplitude appeared (samples recorded before it stay valid).
    """
    dim = psi0.shape[0]
    psi = psi0.copy()
    tmp = np.empty(dim, np.complex128)
    k1 = np.empty(dim, np.complex128)
    k2 = np.empty(dim, np.complex128)
    k3 = np.empty(dim, np.complex128)
    k4 = np.empty(dim, np.complex128)
    tgt_buf = np.empty(dim, np.complex128)
    guarded = 0
    rec_i = 0
    n_rec = record_steps.shape[0]
    if n_rec > 0 and record_steps[0] == 0:
        for i in range(dim):
            states_out[0, i] = psi[i]
        rec_i = 1
    half = 0.5 * dt
    sixth = dt / 6.0
    for step in range(n_steps):
        t = step * dt
        guarded += _rhs(t, psi, k1, h_base, gens, comp_idx, noise_vals, grid_dt,
                        use_noise, fixed_rule, target, tgt_buf, drive_rate, guard_eps)
        for i in range(dim):
            tmp[i] = psi[i] + half * k1[i]
        guarded += _rhs(t + half, tmp, k2, h_base, gens, comp_idx, noise_vals, grid_dt,
                        use_noise, fixed_rule, target, tgt_buf, drive_rate, guard_eps)
        for i in range(dim):
            tmp[i] = psi[i] + half * k2[i]
        guarded += _rhs(t + half, tmp, k3, h_base, gens, comp_idx, noise_vals, grid_dt,
                        use_noise, fixed_rule, target, tgt_buf, drive_rate, guard_eps)
        for i in range(dim):
            tmp[i] = psi[i] + dt * k3[i]
        guarded += _rhs(t + dt, tmp, k4, h_base, gens, comp_idx, noise_vals, grid_dt,
                        use_noise, fixed_rule, target, tgt_buf, drive_rate, guard_eps)
        for i in range(dim):
            psi[i] = psi[i] + sixth * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i])
        if renormalize:
            nrm = 0.0
            for i in range(dim):
                nrm += psi[i].real * psi[i].real + psi[i].imag * psi[i].imag
            nrm = np.sqrt(nrm)
            for i in range(dim):
                psi[i] = psi[i] / nrm
        finite = True
        for i in range(dim):
            if not (np.isfinite(psi[i].real) and np.isfinite(psi[i].imag)):
                finite = False
        if not finite:
            return guarded, step + 1, rec_i
        if rec_i < n_rec and step + 1 == record_steps[rec_i]:
            for i in range(dim):
                states_out[rec_i, i] = psi[i]
            rec_i += 1
    return guarded, -1, rec_i
