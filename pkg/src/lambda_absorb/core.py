"""Dense operator algebra on small composite Hilbert spaces.

Basis ordering is row-major over the subsystem order, i.e. the last
subsystem index runs fastest.  Every operator embedding goes through
:class:`CompositeSpace` so that there is exactly one basis convention.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, DegenerateStateError, DimensionMismatchError

NORMALIZE_MIN = 1e-15


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class CompositeSpace:
    """Tensor product of labelled subsystems.

    Parameters
    ----------
    subsystems : sequence of (name, levels)
        Subsystem names and their ordered level labels.  Labels are
        stored as strings, so ``("S", (0, 1, 3))`` and ``("S", ("0", "1", "3"))``
        describe the same space.
    """

    subsystems: tuple[tuple[str, tuple[str, ...]], ...]

    def __post_init__(self):
        subs = tuple((str(name), tuple(str(l) for l in levels)) for name, levels in self.subsystems)
        if not subs:
            raise ConfigurationError("a composite space needs at least one subsystem")
        names = [n for n, _ in subs]
        if len(set(names)) != len(names):
            raise ConfigurationError(f"duplicate subsystem names: {names}")
        for name, levels in subs:
            if not levels:
                raise ConfigurationError(f"subsystem {name!r} has no levels")
            if len(set(levels)) != len(levels):
                raise ConfigurationError(f"duplicate level labels in subsystem {name!r}")
        object.__setattr__(self, "subsystems", subs)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.subsystems)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(len(levels) for _, levels in self.subsystems)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    def levels(self, subsystem: str) -> tuple[str, ...]:
        for name, levels in self.subsystems:
            if name == subsystem:
                return levels
        raise ConfigurationError(f"unknown subsystem {subsystem!r}; have {self.names}")

    def position(self, subsystem: str) -> int:
        try:
            return self.names.index(subsystem)
        except ValueError:
            raise ConfigurationError(f"unknown subsystem {subsystem!r}; have {self.names}") from None

    def level_index(self, subsystem: str, level) -> int:
        levels = self.levels(subsystem)
        try:
            return levels.index(str(level))
        except ValueError:
            raise ConfigurationError(
                f"unknown level {level!r} in subsystem {subsystem!r}; have {levels}"
            ) from None

    def index(self, multi: Sequence[int]) -> int:
        """Multi-index (one integer per subsystem) to flat basis index."""
        if len(multi) != len(self.dims):
            raise DimensionMismatchError(f"expected {len(self.dims)} indices, got {len(multi)}")
        idx = 0
        for k, d in zip(multi, self.dims):
            if not 0 <= k < d:
                raise DimensionMismatchError(f"index {k} out of range for subsystem of size {d}")
            idx = idx * d + k
        return idx

    def multi_index(self, index: int) -> tuple[int, ...]:
        if not 0 <= index < self.dim:
            raise DimensionMismatchError(f"basis index {index} out of range [0, {self.dim})")
        out = []
        for d in reversed(self.dims):
            index, k = divmod(index, d)
            out.append(k)
        return tuple(reversed(out))

    def basis_index(self, labels: Mapping[str, object] | Sequence[object]) -> int:
        """Flat index of the product basis state given by level labels.

        ``labels`` is either a mapping subsystem name -> level or a sequence
        of levels in subsystem order.
        """
        if isinstance(labels, Mapping):
            if set(labels) != set(self.names):
                raise ConfigurationError(f"need a level for each of {self.names}, got {sorted(labels)}")
            labels = [labels[n] for n in self.names]
        if len(labels) != len(self.names):
            raise ConfigurationError(f"need {len(self.names)} level labels, got {len(labels)}")
        return self.index([self.level_index(n, l) for n, l in zip(self.names, labels)])

    def basis_label(self, index: int) -> tuple[str, ...]:
        return tuple(levels[k] for (_, levels), k in zip(self.subsystems, self.multi_index(index)))

    def basis(self, labels) -> "StateVector":
        amp = np.zeros(self.dim, dtype=complex)
        amp[self.basis_index(labels)] = 1.0
        return StateVector(self, amp)

    def identity(self) -> "Operator":
        return Operator(self, np.eye(self.dim, dtype=complex))

    def zero(self) -> "Operator":
        return Operator(self, np.zeros((self.dim, self.dim), dtype=complex))

    def factor(self, subsystem: str) -> "CompositeSpace":
        return CompositeSpace(((subsystem, self.levels(subsystem)),))


@dataclass(frozen=True, eq=False)
class StateVector:
    """Ket on a :class:`CompositeSpace`; the amplitude array is read-only."""

    space: CompositeSpace
    amp: np.ndarray = field(repr=False)

    def __post_init__(self):
        amp = _readonly(self.amp).reshape(-1)
        if amp.shape != (self.space.dim,):
            raise DimensionMismatchError(f"state of length {amp.shape[0]} on a space of dim {self.space.dim}")
        if not np.all(np.isfinite(amp)):
            raise ConfigurationError("state vector has non-finite amplitudes")
        object.__setattr__(self, "amp", amp)

    def __add__(self, other: "StateVector") -> "StateVector":
        return add(self, other)

    def __sub__(self, other: "StateVector") -> "StateVector":
        return add(self, scale(other, -1.0))

    def __mul__(self, c: complex) -> "StateVector":
        return scale(self, c)

    __rmul__ = __mul__

    def __neg__(self) -> "StateVector":
        return scale(self, -1.0)

    def ket(self, labels) -> complex:
        return complex(self.amp[self.space.basis_index(labels)])

    def allclose(self, other: "StateVector", atol: float = 1e-12) -> bool:
        _check_space(self.space, other.space)
        return bool(np.allclose(self.amp, other.amp, rtol=0.0, atol=atol))


@dataclass(frozen=True, eq=False)
class Operator:
    """Dense square matrix acting on a :class:`CompositeSpace`."""

    space: CompositeSpace
    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = _readonly(self.entries)
        d = self.space.dim
        if m.shape != (d, d):
            raise DimensionMismatchError(f"operator of shape {m.shape} on a space of dim {d}")
        if not np.all(np.isfinite(m)):
            raise ConfigurationError("operator has non-finite entries")
        object.__setattr__(self, "entries", m)

    def __add__(self, other: "Operator") -> "Operator":
        return add(self, other)

    def __sub__(self, other: "Operator") -> "Operator":
        return add(self, scale(other, -1.0))

    def __mul__(self, c: complex) -> "Operator":
        return scale(self, c)

    __rmul__ = __mul__

    def __neg__(self) -> "Operator":
        return scale(self, -1.0)

    def __matmul__(self, other):
        if isinstance(other, StateVector):
            return apply(self, other)
        _check_space(self.space, other.space)
        return Operator(self.space, self.entries @ other.entries)

    @property
    def dag(self) -> "Operator":
        return dagger(self)

    def element(self, bra, ket) -> complex:
        """Matrix element <bra|op|ket> for product-basis labels."""
        return complex(self.entries[self.space.basis_index(bra), self.space.basis_index(ket)])

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T), initial=0.0))

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return self.hermiticity_error() <= tol

    def allclose(self, other: "Operator", atol: float = 1e-12) -> bool:
        _check_space(self.space, other.space)
        return bool(np.allclose(self.entries, other.entries, rtol=0.0, atol=atol))


def _check_space(a: CompositeSpace, b: CompositeSpace) -> None:
    if a != b:
        raise DimensionMismatchError(f"operands live on different spaces: {a.subsystems} vs {b.subsystems}")


def sigma(space: CompositeSpace, subsystem: str, i, j) -> Operator:
    """``|i><j|`` on one subsystem, identity on all others."""
    pos = space.position(subsystem)
    a = space.level_index(subsystem, i)
    b = space.level_index(subsystem, j)
    factors = [np.eye(d, dtype=complex) for d in space.dims]
    local = np.zeros((space.dims[pos],) * 2, dtype=complex)
    local[a, b] = 1.0
    factors[pos] = local
    return Operator(space, reduce(np.kron, factors))


def projector(state: StateVector) -> Operator:
    """``|psi><psi|`` (no normalization)."""
    return Operator(state.space, np.outer(state.amp, state.amp.conj()))


def kron(a: Operator, b: Operator) -> Operator:
    """Kronecker product; the result lives on the concatenated space."""
    names_a, names_b = set(a.space.names), set(b.space.names)
    if names_a & names_b:
        raise DimensionMismatchError(f"subsystems {sorted(names_a & names_b)} appear in both factors")
    space = CompositeSpace(a.space.subsystems + b.space.subsystems)
    return Operator(space, np.kron(a.entries, b.entries))


def apply(op: Operator, psi: StateVector) -> StateVector:
    _check_space(op.space, psi.space)
    return StateVector(psi.space, op.entries @ psi.amp)


def expectation(psi: StateVector, op: Operator) -> complex:
    """<psi|op|psi>; the state is not normalized first."""
    _check_space(op.space, psi.space)
    return complex(np.vdot(psi.amp, op.entries @ psi.amp))


def dagger(op: Operator) -> Operator:
    return Operator(op.space, op.entries.conj().T)


def norm2(psi: StateVector) -> float:
    return float(np.vdot(psi.amp, psi.amp).real)


def normalize(psi: StateVector) -> StateVector:
    n2 = norm2(psi)
    if n2 < NORMALIZE_MIN:
        raise DegenerateStateError(f"cannot normalize a state with squared norm {n2:.3e}")
    return StateVector(psi.space, psi.amp / np.sqrt(n2))


def scale(x, c: complex):
    if isinstance(x, StateVector):
        return StateVector(x.space, x.amp * c)
    return Operator(x.space, x.entries * c)


def add(x, y):
    _check_space(x.space, y.space)
    if isinstance(x, StateVector) and isinstance(y, StateVector):
        return StateVector(x.space, x.amp + y.amp)
    if isinstance(x, Operator) and isinstance(y, Operator):
        return Operator(x.space, x.entries + y.entries)
    raise TypeError(f"cannot add {type(x).__name__} and {type(y).__name__}")


def op_sum(ops: Iterable[Operator], space: CompositeSpace) -> Operator:
    """Sum of operators; the zero operator for an empty iterable."""
    return reduce(add, ops, space.zero())
