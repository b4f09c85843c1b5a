"""Source/target cascade: pulse, collapse operators, effective Hamiltonian.

Units: hbar = 1 and the target decay rate on 3 -> 1 sets the time unit, so
every rate below is a dimensionless multiple of it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from .core import CompositeSpace, Operator, StateVector, dagger, op_sum, projector, sigma
from .errors import ConfigurationError

SOURCE = "S"
TARGET = "T"

BASIC_SPACE = CompositeSpace(((SOURCE, ("0", "1", "3")), (TARGET, ("1", "2", "3"))))
ENTANGLEMENT_SPACE = CompositeSpace(
    ((SOURCE, ("0", "3", "1+", "1-")), (TARGET, ("1", "3+", "3-", "2+", "2-")))
)


@dataclass(frozen=True)
class PulseShape:
    """Gaussian drive envelope ``omega0 * exp(-(t - t0)**2 / tau**2)``."""

    omega0: float = 1.0
    tau: float = 10.0
    t0: float = 20.0

    def __post_init__(self):
        if not (math.isfinite(self.omega0) and self.omega0 >= 0):
            raise ConfigurationError(f"pulse.omega0 must be finite and >= 0, got {self.omega0}")
        if not (math.isfinite(self.tau) and self.tau > 0):
            raise ConfigurationError(f"pulse.tau must be finite and > 0, got {self.tau}")
        if not math.isfinite(self.t0):
            raise ConfigurationError(f"pulse.t0 must be finite, got {self.t0}")


def omega_L(t: float, pulse: PulseShape) -> float:
    return pulse.omega0 * math.exp(-((t - pulse.t0) ** 2) / pulse.tau**2)


@dataclass(frozen=True)
class CascadeParams:
    """Physical parameters; the defaults are the canonical single-photon setup."""

    gamma31_S: float = 10.0
    gamma30_S: float = 0.0
    gamma31_T: float = 1.0
    gamma32_T: float = 1.0
    gamma21_T: float = 0.0
    eta: float = 1.0
    eta_S: float = 1.0
    pulse: PulseShape = field(default_factory=PulseShape)

    def __post_init__(self):
        for name in ("gamma31_S", "gamma30_S", "gamma31_T", "gamma32_T", "gamma21_T"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ConfigurationError(f"{name} must be finite and >= 0, got {v}")
        for name in ("eta", "eta_S"):
            v = getattr(self, name)
            if not (math.isfinite(v) and 0 <= v <= 1):
                raise ConfigurationError(f"{name} must lie in [0, 1], got {v}")

    def with_(self, **changes) -> "CascadeParams":
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class ScenarioModel:
    """A fully assembled simulation problem.

    The time-dependent Hermitian Hamiltonian is
    ``h_static_herm + envelope(t) * h_drive + h_cascade_herm``; with no
    envelope the drive coefficient is 1.  ``flux_offset`` is a c-number added
    to the "C1" output channel when computing photon flux (non-zero only for
    a classical coherent input).
    """

    name: str
    space: CompositeSpace
    h_static_herm: Operator
    h_drive: Operator
    h_cascade_herm: Operator
    collapse_ops: tuple[tuple[str, Operator], ...]
    initial_state: StateVector
    projectors: Mapping[str, Operator]
    envelope: PulseShape | None = None
    flux_offset: complex = 0.0

    def __post_init__(self):
        for label, op in (("h_static_herm", self.h_static_herm), ("h_drive", self.h_drive),
                          ("h_cascade_herm", self.h_cascade_herm)):
            if op.space != self.space:
                raise ConfigurationError(f"{label} lives on a different space")
            if not op.is_hermitian(1e-12):
                raise ConfigurationError(f"{label} is not Hermitian (error {op.hermiticity_error():.2e})")
        labels = [l for l, _ in self.collapse_ops]
        if len(set(labels)) != len(labels):
            raise ConfigurationError(f"duplicate collapse labels {labels}")
        n2 = float(np.vdot(self.initial_state.amp, self.initial_state.amp).real)
        if abs(n2 - 1.0) > 1e-12:
            raise ConfigurationError(f"initial state not normalized (norm^2 = {n2})")
        for key, p in self.projectors.items():
            m = p.entries
            if not (p.is_hermitian(1e-12) and np.allclose(m @ m, m, rtol=0, atol=1e-12)):
                raise ConfigurationError(f"projector {key!r} is not an orthogonal projector")
        object.__setattr__(self, "collapse_ops", tuple(self.collapse_ops))
        object.__setattr__(self, "projectors", dict(self.projectors))

    def drive_coefficient(self, t: float) -> float:
        return 1.0 if self.envelope is None else omega_L(t, self.envelope)

    def decay_operator(self) -> Operator:
        """Sum of C_k^dagger C_k."""
        return op_sum((dagger(c) @ c for _, c in self.collapse_ops), self.space)

    def h_herm(self, t: float) -> Operator:
        return self.h_static_herm + self.h_drive * self.drive_coefficient(t) + self.h_cascade_herm

    def h_eff(self, t: float) -> Operator:
        return self.h_herm(t) - self.decay_operator() * 0.5j

    def collapse(self, label: str) -> Operator:
        for l, c in self.collapse_ops:
            if l == label:
                return c
        raise ConfigurationError(f"no collapse operator {label!r} in model {self.name!r}")

    def flux_channels(self, prefix: str = "C1") -> list[Operator]:
        return [c for l, c in self.collapse_ops if l == prefix or l.startswith(prefix + "+")
                or l.startswith(prefix + "-")]


def _require_basic(space: CompositeSpace) -> None:
    if space != BASIC_SPACE:
        raise ConfigurationError("operation needs the 3x3 source/target space")


def build_collapse_ops(params: CascadeParams, space: CompositeSpace = BASIC_SPACE):
    """Collapse operators C1..C5 of the basic cascade, as (label, Operator) pairs.

    C4 (source scattering 3 -> 0) and C5 (target ground-state dephasing) are
    only present when their rates are positive.
    """
    _require_basic(space)
    p = params
    s = lambda sub, i, j: sigma(space, sub, i, j)  # noqa: E731
    ops = [
        ("C1", s(SOURCE, 1, 3) * math.sqrt(p.gamma31_S) + s(TARGET, 1, 3) * math.sqrt(p.gamma31_T * p.eta)),
        ("C2", s(TARGET, 1, 3) * math.sqrt(p.gamma31_T * (1.0 - p.eta))),
        ("C3", s(TARGET, 2, 3) * math.sqrt(p.gamma32_T)),
    ]
    if p.gamma30_S > 0:
        ops.append(("C4", s(SOURCE, 0, 3) * math.sqrt(p.gamma30_S)))
    if p.gamma21_T > 0:
        ops.append(("C5", (s(TARGET, 2, 2) - s(TARGET, 1, 1)) * math.sqrt(p.gamma21_T / 2.0)))
    return ops


def _drive(space: CompositeSpace) -> Operator:
    return sigma(space, SOURCE, 0, 3) + sigma(space, SOURCE, 3, 0)


def _cascade_basic(params: CascadeParams, space: CompositeSpace) -> Operator:
    g = math.sqrt(params.gamma31_S * params.gamma31_T * params.eta)
    fwd = sigma(space, SOURCE, 1, 3) @ sigma(space, TARGET, 3, 1)
    return (dagger(fwd) - fwd) * (0.5j * g)


def build_h_eff(params: CascadeParams, space: CompositeSpace = BASIC_SPACE, t: float = 0.0) -> Operator:
    """Non-Hermitian cascaded Hamiltonian, written out term by term."""
    _require_basic(space)
    p = params
    s = lambda sub, i, j: sigma(space, sub, i, j)  # noqa: E731
    h = _drive(space) * omega_L(t, p.pulse)
    h = h - s(SOURCE, 3, 3) * (0.5j * (p.gamma31_S + p.gamma30_S))
    h = h - s(TARGET, 3, 3) * (0.5j * (p.gamma31_T + p.gamma32_T))
    h = h - (s(SOURCE, 1, 3) @ s(TARGET, 3, 1)) * (1j * math.sqrt(p.gamma31_S * p.gamma31_T * p.eta))
    if p.gamma21_T > 0:
        deph = s(TARGET, 2, 2) - s(TARGET, 1, 1)
        h = h - (deph @ deph) * (0.5j * p.gamma21_T / 2.0)
    return h


def build_h_herm(params: CascadeParams, space: CompositeSpace = BASIC_SPACE, t: float = 0.0) -> Operator:
    """Hermitian part left over once the decay term is split off."""
    _require_basic(space)
    return _drive(space) * omega_L(t, params.pulse) + _cascade_basic(params, space)


def _excited_projector(space: CompositeSpace, excited: Mapping[str, set[str]]) -> Operator:
    """Projector onto all basis states where any subsystem is in an excited level."""
    diag = np.zeros(space.dim)
    for k in range(space.dim):
        labels = space.basis_label(k)
        if any(l in excited.get(name, ()) for name, l in zip(space.names, labels)):
            diag[k] = 1.0
    return Operator(space, np.diag(diag))


def build_basic_model(params: CascadeParams) -> ScenarioModel:
    space = BASIC_SPACE
    absorbed = space.basis({SOURCE: 1, TARGET: 2})
    failed = space.basis({SOURCE: 1, TARGET: 1})
    return ScenarioModel(
        name="lambda_basic",
        space=space,
        h_static_herm=space.zero(),
        h_drive=_drive(space),
        h_cascade_herm=_cascade_basic(params, space),
        collapse_ops=tuple(build_collapse_ops(params, space)),
        initial_state=space.basis({SOURCE: 0, TARGET: 1}),
        projectors={
            "absorbed": projector(absorbed),
            "failed": projector(failed),
            "excited": _excited_projector(space, {SOURCE: {"3"}, TARGET: {"3"}}),
        },
        envelope=params.pulse,
    )


def build_entanglement_model(params: CascadeParams) -> ScenarioModel:
    """Polarization-resolved cascade: source Raman-scatters into 1+/1-, the
    target absorbs on 1 -> 3+/3- and ends in 2+/2-.

    Both target decays 3+ -> 2+ and 3- -> 2- emit a photon in the same mode,
    so they share the single collapse operator "C3"; separate operators
    would carry which-path information and destroy the spin coherence.
    """
    space = ENTANGLEMENT_SPACE
    p = params
    s = lambda sub, i, j: sigma(space, sub, i, j)  # noqa: E731
    gs = math.sqrt(p.gamma31_S / 2.0)
    gt = math.sqrt(p.gamma31_T * p.eta)
    cascade = space.zero()
    ops = []
    for pol in "+-":
        src = s(SOURCE, "1" + pol, "3") * gs
        tgt = s(TARGET, "1", "3" + pol) * gt
        ops.append(("C1" + pol, src + tgt))
        cascade = cascade + (dagger(src) @ tgt - dagger(tgt) @ src) * 0.5j
    for pol in "+-":
        ops.append(("C2" + pol, s(TARGET, "1", "3" + pol) * math.sqrt(p.gamma31_T * (1.0 - p.eta))))
    ops.append(("C3", (s(TARGET, "2+", "3+") + s(TARGET, "2-", "3-")) * math.sqrt(p.gamma32_T)))
    if p.gamma30_S > 0:
        ops.append(("C4", s(SOURCE, "0", "3") * math.sqrt(p.gamma30_S)))
    if p.gamma21_T > 0:
        deph = s(TARGET, "2+", "2+") + s(TARGET, "2-", "2-") - s(TARGET, "1", "1")
        ops.append(("C5", deph * math.sqrt(p.gamma21_T / 2.0)))

    pp = space.basis({SOURCE: "1+", TARGET: "2+"})
    mm = space.basis({SOURCE: "1-", TARGET: "2-"})
    bell = (pp + mm) * (1 / math.sqrt(2.0))
    failed = projector(space.basis({SOURCE: "1+", TARGET: "1"})) + projector(space.basis({SOURCE: "1-", TARGET: "1"}))
    return ScenarioModel(
        name="polarization_entanglement",
        space=space,
        h_static_herm=space.zero(),
        h_drive=s(SOURCE, "0", "3") + s(SOURCE, "3", "0"),
        h_cascade_herm=cascade,
        collapse_ops=tuple(ops),
        initial_state=space.basis({SOURCE: "0", TARGET: "1"}),
        projectors={
            "bell": projector(bell),
            "success": projector(pp) + projector(mm),
            "failed": failed,
            "excited": _excited_projector(space, {SOURCE: {"3"}, TARGET: {"3+", "3-"}}),
        },
        envelope=p.pulse,
    )


def conditional_bell_fidelity(bell: float, success: float) -> float:
    """Fidelity with the Bell state given that absorption succeeded."""
    if success <= 0:
        return 0.0
    return bell / success


def reported_success(params: CascadeParams, success: float) -> float:
    """Total entanglement success: the source collection efficiency is a classical factor."""
    return params.eta_S * success
