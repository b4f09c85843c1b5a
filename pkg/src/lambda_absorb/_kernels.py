"""Compiled inner loops for the trajectory and master-equation integrators.

Operators arrive as dense matrices but are handed to the kernels as
(row, col, value) triplets of their nonzero entries.  At dimension <= 20 the
cascade operators have only a handful of nonzeros, and skipping the zeros is
what makes 10^4 trajectories affordable on one core.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

ENV_CONSTANT = 0
ENV_GAUSSIAN = 1

STATUS_END = 0
STATUS_JUMP = 1
STATUS_FROZEN = 2
STATUS_UNDERFLOW = -1
STATUS_NONFINITE = -2

UNDERFLOW = 1e-15


def triplets(m: np.ndarray):
    rows, cols = np.nonzero(m)
    return (rows.astype(np.int64), cols.astype(np.int64), np.ascontiguousarray(m[rows, cols], dtype=np.complex128))


@njit(cache=True)
def envelope(t, kind, omega0, tau, t0):
    if kind == ENV_CONSTANT:
        return 1.0
    x = (t - t0) / tau
    return omega0 * math.exp(-x * x)


@njit(cache=True)
def _spmv_into(out, rows, cols, vals, coef, psi):
    for k in range(rows.shape[0]):
        out[rows[k]] += coef * vals[k] * psi[cols[k]]


@njit(cache=True)
def _cmul(v, x):
    # plain complex product; the generic operator goes through an
    # Annex-G helper that dominates the inner loop
    return complex(v.real * x.real - v.imag * x.imag, v.real * x.imag + v.imag * x.real)


@njit(cache=True)
def _deriv_into(out, psi, c, a_r, a_c, a_v, b_r, b_c, b_v):
    out[:] = 0.0
    for q in range(a_r.shape[0]):
        out[a_r[q]] += _cmul(a_v[q], psi[a_c[q]])
    if c != 0.0:
        for q in range(b_r.shape[0]):
            out[b_r[q]] += c * _cmul(b_v[q], psi[b_c[q]])


@njit(cache=True)
def _rk4_into(out, psi, t, h, a_r, a_c, a_v, b_r, b_c, b_v, kind, om0, tau, t0, work):
    k1 = work[0]
    k2 = work[1]
    k3 = work[2]
    k4 = work[3]
    tmp = work[4]
    n = psi.shape[0]
    c0 = envelope(t, kind, om0, tau, t0)
    c1 = envelope(t + 0.5 * h, kind, om0, tau, t0)
    c2 = envelope(t + h, kind, om0, tau, t0)
    _deriv_into(k1, psi, c0, a_r, a_c, a_v, b_r, b_c, b_v)
    for i in range(n):
        tmp[i] = psi[i] + 0.5 * h * k1[i]
    _deriv_into(k2, tmp, c1, a_r, a_c, a_v, b_r, b_c, b_v)
    for i in range(n):
        tmp[i] = psi[i] + 0.5 * h * k2[i]
    _deriv_into(k3, tmp, c1, a_r, a_c, a_v, b_r, b_c, b_v)
    for i in range(n):
        tmp[i] = psi[i] + h * k3[i]
    _deriv_into(k4, tmp, c2, a_r, a_c, a_v, b_r, b_c, b_v)
    for i in range(n):
        out[i] = psi[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])


@njit(cache=True)
def rk4_state(psi, t, h, a_r, a_c, a_v, b_r, b_c, b_v, kind, om0, tau, t0):
    """One classical RK4 step of dpsi/dt = (A + envelope(t) B) psi."""
    out = np.empty_like(psi)
    work = np.empty((5, psi.shape[0]), dtype=np.complex128)
    _rk4_into(out, psi, t, h, a_r, a_c, a_v, b_r, b_c, b_v, kind, om0, tau, t0, work)
    return out


@njit(cache=True)
def _norm2(psi):
    s = 0.0
    for x in psi:
        s += x.real * x.real + x.imag * x.imag
    return s


@njit(cache=True)
def _all_zero(rows, cols, vals, psi, z):
    z[:] = 0.0
    _spmv_into(z, rows, cols, vals, 1.0, psi)
    for x in z:
        if x != 0.0:
            return False
    return True


def step_pattern(a: np.ndarray, b: np.ndarray):
    """Structural nonzeros of any RK4 step map built from A and B.

    The map is a polynomial of degree 4 in A(t), B, so its pattern is
    contained in that of (I + |A| + |B|)^4.
    """
    n = a.shape[0]
    g = (np.eye(n) + (a != 0) + (b != 0)) > 0
    reach = np.eye(n, dtype=bool)
    for _ in range(4):
        reach = (reach.astype(np.int64) @ g.astype(np.int64)) > 0
    rows, cols = np.nonzero(reach)
    return rows.astype(np.int64), cols.astype(np.int64)


@njit(cache=True)
def build_step_maps(n, rows, cols, dt, n_grid, t_end, a_r, a_c, a_v, b_r, b_c, b_v, kind, om0, tau, t0):
    """Values of the RK4 step map for every grid step, restricted to the pattern.

    Column j of the map is one RK4 step applied to the basis vector e_j.
    """
    nnz = rows.shape[0]
    maps = np.zeros((n_grid, nnz), dtype=np.complex128)
    e = np.zeros(n, dtype=np.complex128)
    col = np.empty(n, dtype=np.complex128)
    work = np.empty((5, n), dtype=np.complex128)
    t = 0.0
    for k in range(1, n_grid + 1):
        tk = min(k * dt, t_end)
        h = tk - t
        for j in range(n):
            e[:] = 0.0
            e[j] = 1.0
            _rk4_into(col, e, t, h, a_r, a_c, a_v, b_r, b_c, b_v, kind, om0, tau, t0, work)
            for q in range(nnz):
                if cols[q] == j:
                    maps[k - 1, q] = col[rows[q]]
        t = tk
    return maps


@njit(cache=True)
def _apply_map(out, psi, rows, cols, vals):
    out[:] = 0.0
    for q in range(rows.shape[0]):
        out[rows[q]] += _cmul(vals[q], psi[cols[q]])


@njit(cache=True)
def advance(psi, t, k, dt, n_grid, t_end, r, a_r, a_c, a_v, b_r, b_c, b_v, kind, om0, tau, t0, jump_tol,
            m_rows, m_cols, maps):
    """Integrate from time ``t`` until the squared norm falls to ``r``.

    Grid times are ``min(j * dt, t_end)`` for j = 0..n_grid; ``k`` is the
    index of the next grid time >= t.  Full grid steps use the precomputed
    step maps when ``maps`` has a row per step, otherwise RK4 directly;
    partial steps (after a jump, during bisection) always use RK4 directly.
    Returns (status, t, psi, k).  A state with A psi == 0 and B psi == 0
    exactly is returned as frozen: every later step would reproduce it.
    """
    n = psi.shape[0]
    psi = psi.copy()
    nxt = np.empty_like(psi)
    trial = np.empty_like(psi)
    work = np.empty((5, n), dtype=np.complex128)
    use_maps = maps.shape[0] == n_grid
    # smooth evolution never produces an exact zero, so checking once is enough
    if _all_zero(a_r, a_c, a_v, psi, trial) and _all_zero(b_r, b_c, b_v, psi, trial):
        return STATUS_FROZEN, t, psi, k
    while k <= n_grid:
        tk = min(k * dt, t_end)
        h = tk - t
        if h <= 0.0:
            k += 1
            continue
        full = abs(t - min((k - 1) * dt, t_end)) == 0.0
        if use_maps and full:
            _apply_map(nxt, psi, m_rows, m_cols, maps[k - 1])
        else:
            _rk4_into(nxt, psi, t, h, a_r, a_c, a_v, b_r, b_c, b_v, kind, om0, tau, t0, work)
        n2 = _norm2(nxt)
        if not math.isfinite(n2):
            return STATUS_NONFINITE, t, psi, k
        if n2 <= r:
            lo = 0.0
            hi = h
            while hi - lo > jump_tol:
                mid = 0.5 * (lo + hi)
                _rk4_into(trial, psi, t, mid, a_r, a_c, a_v, b_r, b_c, b_v, kind, om0, tau, t0, work)
                if _norm2(trial) <= r:
                    hi = mid
                else:
                    lo = mid
            if hi >= h:
                return STATUS_JUMP, tk, nxt, k + 1
            _rk4_into(trial, psi, t, hi, a_r, a_c, a_v, b_r, b_c, b_v, kind, om0, tau, t0, work)
            return STATUS_JUMP, t + hi, trial, k
        if n2 < UNDERFLOW:
            return STATUS_UNDERFLOW, t, psi, k
        psi[:] = nxt
        t = tk
        k += 1
    return STATUS_END, t, psi, k


@njit(cache=True)
def _herm_rhs(rho, t, h_r, h_c, h_v, d_r, d_c, d_v, kind, om0, tau, t0,
              k_r, k_c, k_v, c_off, c_r, c_c, c_v):
    """Lindblad right-hand side from triplets.

    h: static Hermitian part, d: drive (scaled by the envelope),
    k: sum of C^dagger C, c_*: concatenated collapse operators with offsets.
    """
    n = rho.shape[0]
    out = np.zeros_like(rho)
    coef = envelope(t, kind, om0, tau, t0)
    # -i [H, rho]
    for q in range(h_r.shape[0]):
        a, b, v = h_r[q], h_c[q], h_v[q]
        for j in range(n):
            out[a, j] += -1j * v * rho[b, j]
            out[j, b] += 1j * v * rho[j, a]
    if coef != 0.0:
        for q in range(d_r.shape[0]):
            a, b, v = d_r[q], d_c[q], coef * d_v[q]
            for j in range(n):
                out[a, j] += -1j * v * rho[b, j]
                out[j, b] += 1j * v * rho[j, a]
    # -1/2 {K, rho}
    for q in range(k_r.shape[0]):
        a, b, v = k_r[q], k_c[q], k_v[q]
        for j in range(n):
            out[a, j] -= 0.5 * v * rho[b, j]
            out[j, b] -= 0.5 * v * rho[j, a]
    # sum_k C rho C^dagger
    for m in range(c_off.shape[0] - 1):
        for p in range(c_off[m], c_off[m + 1]):
            a, i, u = c_r[p], c_c[p], c_v[p]
            for q in range(c_off[m], c_off[m + 1]):
                b, j, w = c_r[q], c_c[q], c_v[q]
                out[a, b] += u * rho[i, j] * np.conj(w)
    return out


@njit(cache=True)
def integrate_rho(rho, dt, n_grid, t_end, sample_every, h_r, h_c, h_v, d_r, d_c, d_v,
                  kind, om0, tau, t0, k_r, k_c, k_v, c_off, c_r, c_c, c_v):
    """RK4 over the grid with Hermitization after each step.

    Returns (sample_times, sample_rhos, rho_final); samples are taken at grid
    index 0, every ``sample_every`` steps, and at the final time.
    """
    n_samples = n_grid // sample_every + 1
    if n_grid % sample_every != 0:
        n_samples += 1
    times = np.zeros(n_samples)
    samples = np.zeros((n_samples,) + rho.shape, dtype=np.complex128)
    samples[0] = rho
    s = 1
    t = 0.0
    for k in range(1, n_grid + 1):
        tk = min(k * dt, t_end)
        h = tk - t
        k1 = _herm_rhs(rho, t, h_r, h_c, h_v, d_r, d_c, d_v, kind, om0, tau, t0, k_r, k_c, k_v, c_off, c_r, c_c, c_v)
        k2 = _herm_rhs(rho + 0.5 * h * k1, t + 0.5 * h, h_r, h_c, h_v, d_r, d_c, d_v, kind, om0, tau, t0,
                       k_r, k_c, k_v, c_off, c_r, c_c, c_v)
        k3 = _herm_rhs(rho + 0.5 * h * k2, t + 0.5 * h, h_r, h_c, h_v, d_r, d_c, d_v, kind, om0, tau, t0,
                       k_r, k_c, k_v, c_off, c_r, c_c, c_v)
        k4 = _herm_rhs(rho + h * k3, t + h, h_r, h_c, h_v, d_r, d_c, d_v, kind, om0, tau, t0,
                       k_r, k_c, k_v, c_off, c_r, c_c, c_v)
        rho = rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        rho = 0.5 * (rho + rho.conj().T)
        t = tk
        if k % sample_every == 0 or k == n_grid:
            times[s] = t
            samples[s] = rho
            s += 1
    return times[:s], samples[:s], rho
