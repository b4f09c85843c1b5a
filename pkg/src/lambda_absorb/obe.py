"""Weak coherent drive of the target alone: closed forms and a time-domain model.

Drive convention: a coherent input of amplitude ``beta`` in the dipole mode
couples through ``L = sqrt(eta * gamma31) |1><3|`` and enters the target
Hamiltonian as ``H = i (beta* L - beta L^+) = Omega |3><1| + h.c.`` with
``Omega = -i beta sqrt(eta * gamma31)``.  The output field in the incoming
mode is ``beta + <L>``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .core import CompositeSpace, Operator, projector, sigma
from .errors import ConfigurationError
from .model import TARGET, ScenarioModel

TARGET_SPACE = CompositeSpace(((TARGET, ("1", "2", "3")),))


@dataclass(frozen=True)
class ObeParams:
    beta: complex = 0.01
    gamma31: float = 1.0
    gamma32: float = 1.0
    eta: float = 1.0

    def __post_init__(self):
        if not cmath.isfinite(complex(self.beta)):
            raise ConfigurationError(f"beta must be finite, got {self.beta}")
        for name in ("gamma31", "gamma32"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ConfigurationError(f"{name} must be finite and >= 0, got {v}")
        if not (math.isfinite(self.eta) and 0 <= self.eta <= 1):
            raise ConfigurationError(f"eta must lie in [0, 1], got {self.eta}")


def _total_rate(p: ObeParams) -> float:
    g = p.gamma31 + p.gamma32
    if g <= 0:
        raise ConfigurationError("gamma31 + gamma32 must be > 0 for a steady state to exist")
    return g


def drive_rabi(p: ObeParams) -> complex:
    return -1j * complex(p.beta) * math.sqrt(p.eta * p.gamma31)


def mean_output_field(p: ObeParams) -> complex:
    """Steady-state mean field in the incoming mode, to first order in beta."""
    return complex(p.beta) * (1.0 - 2.0 * p.eta * p.gamma31 / _total_rate(p))


def quasi_steady_coherence(p: ObeParams) -> complex:
    """<|1><3|> for weak drive, with the atom still essentially in |1>."""
    return -2j * drive_rabi(p) / _total_rate(p)


def output_field_from_coherence(p: ObeParams, coherence: complex) -> complex:
    return complex(p.beta) + math.sqrt(p.eta * p.gamma31) * coherence


def closed_form_flux(p: ObeParams) -> float:
    return abs(mean_output_field(p)) ** 2


def quasi_steady_window(p: ObeParams) -> tuple[float, float, float]:
    """(lower, upper, center) of gamma31^-1 << t << |Omega|^-1; center is the geometric mean."""
    om = abs(drive_rabi(p))
    if p.gamma31 <= 0 or om <= 0:
        raise ConfigurationError("window needs gamma31 > 0 and a non-zero drive")
    lo, hi = 1.0 / p.gamma31, 1.0 / om
    return lo, hi, math.sqrt(lo * hi)


def build_coherent_drive_model(p: ObeParams) -> ScenarioModel:
    """Target-only model under constant weak coherent drive from t = 0.

    The collapse operator "C1" is the bare atomic part ``L``; the input field
    enters through ``flux_offset = beta`` so that the recorded C1 flux is
    ``<(L + beta)^+ (L + beta)>``, the photon flux in the incoming mode.
    """
    space = TARGET_SPACE
    s = lambda i, j: sigma(space, TARGET, i, j)  # noqa: E731
    om = drive_rabi(p)
    h_drive = s(3, 1) * om + s(1, 3) * om.conjugate()
    ops = (
        ("C1", s(1, 3) * math.sqrt(p.gamma31 * p.eta)),
        ("C2", s(1, 3) * math.sqrt(p.gamma31 * (1.0 - p.eta))),
        ("C3", s(2, 3) * math.sqrt(p.gamma32)),
    )
    return ScenarioModel(
        name="coherent_obe",
        space=space,
        h_static_herm=space.zero(),
        h_drive=h_drive,
        h_cascade_herm=space.zero(),
        collapse_ops=ops,
        initial_state=space.basis([1]),
        projectors={
            "ground1": projector(space.basis([1])),
            "pumped": projector(space.basis([2])),
            "excited": projector(space.basis([3])),
        },
        envelope=None,
        flux_offset=complex(p.beta),
    )


def output_flux(p: ObeParams, rho: np.ndarray) -> float:
    """Bookkeeping form: coherent part |beta + <L>|^2 plus the incoherent remainder."""
    g = p.gamma31 * p.eta
    coh = complex(rho[2, 0])  # <|1><3|> = Tr(rho |1><3|) = rho_31
    field = output_field_from_coherence(p, coh)
    incoherent = g * (rho[2, 2].real - abs(coh) ** 2)
    return abs(field) ** 2 + incoherent


def coherence_operator() -> Operator:
    return sigma(TARGET_SPACE, TARGET, 1, 3)
