"""Deterministic master-equation integration, the reference for the ensemble.

    drho/dt = -i [H_herm(t), rho] + sum_k (C_k rho C_k^+ - 1/2 {C_k^+ C_k, rho})

integrated with fixed-step RK4 and Hermitized after every step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .core import CompositeSpace
from .errors import DimensionMismatchError, IntegratorError
from .model import ScenarioModel
from .trajectory import IntegratorConfig

TRACE_DRIFT_MAX = 1e-6


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    space: CompositeSpace
    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex, copy=True)
        if m.shape != (self.space.dim, self.space.dim):
            raise DimensionMismatchError(f"density matrix of shape {m.shape} on a space of dim {self.space.dim}")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @classmethod
    def pure(cls, psi) -> "DensityMatrix":
        return cls(psi.space, np.outer(psi.amp, psi.amp.conj()))

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def expect(self, op) -> float:
        return float(np.trace(op.entries @ self.entries).real)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.entries + self.entries.conj().T))[0])

    def population(self, labels) -> float:
        i = self.space.basis_index(labels)
        return float(self.entries[i, i].real)


@dataclass(frozen=True, eq=False)
class MasterTrace:
    """Time series recorded during :func:`integrate_master`."""

    times: np.ndarray
    observables: dict[str, np.ndarray]
    trace_drift: np.ndarray
    min_eigenvalue: np.ndarray

    def at(self, name: str, t: float) -> float:
        """Observable at the recorded sample closest to ``t``."""
        i = int(np.argmin(np.abs(self.times - t)))
        return float(self.observables[name][i])


def lindblad_rhs(rho: DensityMatrix, t: float, model: ScenarioModel) -> np.ndarray:
    """Right-hand side as a dense array, written directly from the Lindblad form."""
    r = rho.entries
    h = model.h_herm(t).entries
    out = -1j * (h @ r - r @ h)
    for _, c in model.collapse_ops:
        c = c.entries
        cd = c.conj().T
        out = out + c @ r @ cd - 0.5 * (cd @ c @ r + r @ cd @ c)
    return out


class _Compiled:
    def __init__(self, model: ScenarioModel):
        self.h = K.triplets(model.h_static_herm.entries + model.h_cascade_herm.entries)
        self.d = K.triplets(model.h_drive.entries)
        self.k = K.triplets(model.decay_operator().entries)
        rows, cols, vals, off = [], [], [], [0]
        for _, c in model.collapse_ops:
            r_, c_, v_ = K.triplets(c.entries)
            rows.append(r_)
            cols.append(c_)
            vals.append(v_)
            off.append(off[-1] + r_.size)
        cat = lambda xs, dt: np.concatenate(xs).astype(dt) if xs else np.zeros(0, dt)  # noqa: E731
        self.c = (np.array(off, dtype=np.int64), cat(rows, np.int64), cat(cols, np.int64), cat(vals, np.complex128))
        env = model.envelope
        if env is None:
            self.env = (K.ENV_CONSTANT, 0.0, 1.0, 0.0)
        else:
            self.env = (K.ENV_GAUSSIAN, float(env.omega0), float(env.tau), float(env.t0))


def kernel_rhs(rho: DensityMatrix, t: float, model: ScenarioModel) -> np.ndarray:
    """The compiled right-hand side actually used by :func:`integrate_master`."""
    comp = _Compiled(model)
    return K._herm_rhs(np.array(rho.entries), float(t), *comp.h, *comp.d, *comp.env, *comp.k, *comp.c)


def flux_operator(model: ScenarioModel) -> np.ndarray:
    """(C1 + offset)^+ (C1 + offset) summed over the C1 channels."""
    chans = model.flux_channels("C1")
    eye = np.eye(model.space.dim)
    total = np.zeros((model.space.dim,) * 2, dtype=complex)
    for c in chans:
        shifted = c.entries + model.flux_offset * eye
        total += shifted.conj().T @ shifted
    return total


def integrate_master(
    model: ScenarioModel,
    cfg: IntegratorConfig,
    *,
    sample_every: int = 100,
    rho0: DensityMatrix | None = None,
) -> tuple[DensityMatrix, MasterTrace]:
    """Integrate the master equation from the model's initial state to ``cfg.t_end``.

    Records every projector expectation plus the "C1_flux" series every
    ``sample_every`` steps.
    """
    if rho0 is None:
        rho0 = DensityMatrix.pure(model.initial_state)
    comp = _Compiled(model)
    times, samples, final = K.integrate_rho(
        np.array(rho0.entries), cfg.dt, cfg.n_grid, cfg.t_end, max(1, int(sample_every)),
        *comp.h, *comp.d, *comp.env, *comp.k, *comp.c,
    )
    if not np.all(np.isfinite(final)):
        raise IntegratorError("master equation produced non-finite entries")
    observables = {
        name: np.einsum("ij,sji->s", p.entries, samples).real for name, p in model.projectors.items()
    }
    if model.flux_channels("C1"):
        observables["C1_flux"] = np.einsum("ij,sji->s", flux_operator(model), samples).real
    drift = np.abs(np.einsum("sii->s", samples) - 1.0)
    if drift.max() > TRACE_DRIFT_MAX:
        i = int(np.argmax(drift))
        raise IntegratorError(f"trace drift {drift[i]:.3e} at t={times[i]:.6g}; decrease dt")
    herm = 0.5 * (samples + np.conj(np.swapaxes(samples, 1, 2)))
    min_eig = np.linalg.eigvalsh(herm)[:, 0]
    trace = MasterTrace(times, observables, drift, min_eig)
    return DensityMatrix(model.space, final), trace


def c1_flux(trace: MasterTrace) -> np.ndarray:
    """Photon flux into the incoming mode, Tr(C1^+ C1 rho(t))."""
    return trace.observables["C1_flux"]


def final_observables(model: ScenarioModel, rho: DensityMatrix) -> dict[str, float]:
    return {name: rho.expect(p) for name, p in model.projectors.items()}


def steady_state_ok(model: ScenarioModel, rho: DensityMatrix, cfg: IntegratorConfig) -> bool:
    p = model.projectors.get("excited")
    return p is None or rho.expect(p) < cfg.ss_tol or math.isclose(rho.expect(p), 0.0)
