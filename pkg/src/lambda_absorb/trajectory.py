"""Monte Carlo wavefunction unraveling of a :class:`ScenarioModel`.

Between jumps the unnormalized state follows ``dpsi/dt = -i H_eff(t) psi``
(classical RK4, fixed step).  A uniform number ``r`` is drawn; the jump fires
when the squared norm reaches ``r``, its instant located by bisection.  The
channel is drawn with probability proportional to ``||C_k psi||^2``.

Seeds: trajectory ``i`` of an ensemble with master seed ``m`` uses
``split_seed(m, i)``, the first 64-bit word of
``numpy.random.SeedSequence(m, spawn_key=(i,))``.  The stream for a given
seed is ``numpy.random.Generator(PCG64(seed))``.
"""

from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels as K
from .core import Operator, StateVector, expectation, normalize
from .errors import ConfigurationError, IntegratorError, JumpLogicError, NumericalInstabilityError
from .model import ScenarioModel

log = logging.getLogger(__name__)

# Above this many stored complex entries the step maps are not tabulated.
MAX_MAP_ENTRIES = 20_000_000


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float = 1e-3
    t_end: float = 100.0
    jump_time_tol: float = 1e-6
    ss_tol: float = 1e-8

    def __post_init__(self):
        for name in ("dt", "t_end", "jump_time_tol", "ss_tol"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigurationError(f"integrator.{name} must be finite and > 0, got {v!r}")

    @property
    def n_grid(self) -> int:
        """Number of steps; the last one is shortened to land on t_end."""
        return max(1, math.ceil(self.t_end / self.dt - 1e-9))


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    jumps: tuple[tuple[float, str], ...]
    final_state: StateVector
    seed: int


@dataclass(frozen=True, eq=False)
class EnsembleResult:
    n_traj: int
    observables: dict[str, tuple[float, float]]
    channel_counts: dict[str, int]
    records: list[TrajectoryRecord] | None = None
    horizon_warnings: int = 0
    master_seed: int | None = None

    def jump_fraction(self, label: str) -> float:
        total = sum(self.channel_counts.values())
        return self.channel_counts.get(label, 0) / total if total else 0.0


def split_seed(master_seed: int, index: int) -> int:
    """Counter-based per-trajectory seed, independent of execution order."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(index),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


class _Compiled:
    """Kernel-ready view of a model: triplets of the generator A + c(t) B."""

    def __init__(self, model: ScenarioModel):
        self.model = model
        h_static = model.h_static_herm.entries + model.h_cascade_herm.entries
        decay = model.decay_operator().entries
        self.a = K.triplets(-1j * h_static - 0.5 * decay)
        self.b = K.triplets(-1j * model.h_drive.entries)
        env = model.envelope
        if env is None:
            self.env = (K.ENV_CONSTANT, 0.0, 1.0, 0.0)
        else:
            self.env = (K.ENV_GAUSSIAN, float(env.omega0), float(env.tau), float(env.t0))
        self.labels = [l for l, _ in model.collapse_ops]
        self.cops = np.array([c.entries for _, c in model.collapse_ops])
        self.proj_names = list(model.projectors)
        self.projs = np.array([model.projectors[n].entries for n in self.proj_names])
        self.excited = model.projectors.get("excited")
        self._maps: dict = {}

    def step_maps(self, cfg: "IntegratorConfig"):
        """Per-step RK4 maps on the shared grid, or an empty table when too large."""
        key = (cfg.dt, cfg.t_end)
        if key not in self._maps:
            a_dense = _dense(self.a, self.model.space.dim)
            b_dense = _dense(self.b, self.model.space.dim)
            rows, cols = K.step_pattern(a_dense, b_dense)
            if cfg.n_grid * rows.size > MAX_MAP_ENTRIES:
                maps = np.zeros((0, rows.size), dtype=np.complex128)
            else:
                maps = K.build_step_maps(self.model.space.dim, rows, cols, cfg.dt, cfg.n_grid, cfg.t_end,
                                         *self.a, *self.b, *self.env)
            self._maps[key] = (rows, cols, maps)
        return self._maps[key]


def _dense(trip, n: int) -> np.ndarray:
    m = np.zeros((n, n), dtype=complex)
    m[trip[0], trip[1]] = trip[2]
    return m


def _pick(weights: np.ndarray, r2: float) -> int:
    total = float(np.sum(weights))
    if not total > 0:
        raise JumpLogicError("jump triggered but every channel has zero weight")
    cum = np.cumsum(weights) / total
    idx = int(np.searchsorted(cum, r2, side="right"))
    nonzero = np.flatnonzero(weights > 0)
    return min(idx, int(nonzero[-1]))


def select_jump_channel(psi: StateVector, collapse_ops: Sequence, r2: float) -> int:
    """Inverse-CDF draw of a jump channel (0-based index into ``collapse_ops``).

    ``collapse_ops`` holds either Operators or (label, Operator) pairs.
    """
    ops = [c[1] if isinstance(c, tuple) else c for c in collapse_ops]
    weights = np.array([expectation(psi, c.dag @ c).real for c in ops])
    return _pick(np.maximum(weights, 0.0), r2)


def _evolve(comp: _Compiled, cfg: IntegratorConfig, seed: int):
    rng = np.random.Generator(np.random.PCG64(seed))
    psi = np.array(comp.model.initial_state.amp, dtype=np.complex128)
    t, k = 0.0, 1
    jumps: list[tuple[float, str]] = []
    r = rng.random()
    a, b = comp.a, comp.b
    maps = comp.step_maps(cfg)
    while True:
        status, t, psi, k = K.advance(psi, t, k, cfg.dt, cfg.n_grid, cfg.t_end, r, *a, *b, *comp.env,
                                      cfg.jump_time_tol, *maps)
        if status == K.STATUS_JUMP:
            out = comp.cops @ psi
            weights = np.einsum("ki,ki->k", out.conj(), out).real
            ch = _pick(weights, rng.random())
            psi = out[ch] / math.sqrt(weights[ch])
            jumps.append((float(t), comp.labels[ch]))
            r = rng.random()
            continue
        if status == K.STATUS_UNDERFLOW:
            raise IntegratorError(f"norm underflow at t={t:.6g} without a jump; decrease dt (dt={cfg.dt})")
        if status == K.STATUS_NONFINITE:
            raise NumericalInstabilityError(f"non-finite amplitude at t={t:.6g}")
        break
    n2 = float(np.vdot(psi, psi).real)
    return jumps, psi / math.sqrt(n2)


def evolve_trajectory(model: ScenarioModel, cfg: IntegratorConfig, seed: int) -> TrajectoryRecord:
    jumps, psi = _evolve(_Compiled(model), cfg, seed)
    return TrajectoryRecord(tuple(jumps), StateVector(model.space, psi), int(seed))


def _run_chunk(model: ScenarioModel, cfg: IntegratorConfig, seeds: list[tuple[int, int]]):
    comp = _Compiled(model)
    out = []
    for index, seed in seeds:
        try:
            jumps, psi = _evolve(comp, cfg, seed)
        except (IntegratorError, JumpLogicError) as exc:
            raise type(exc)(f"trajectory {index} (seed {seed}): {exc}") from exc
        out.append((jumps, psi))
    return out


def run_ensemble(
    model: ScenarioModel,
    cfg: IntegratorConfig,
    n_traj: int,
    master_seed: int,
    *,
    workers: int = 1,
    keep_records: bool = False,
) -> EnsembleResult:
    """Average projector observables over ``n_traj`` independent trajectories.

    The result depends only on (model, cfg, n_traj, master_seed): trajectories
    are reduced in index order whatever the number of worker processes.
    """
    if n_traj < 1:
        raise ConfigurationError(f"n_traj must be >= 1, got {n_traj}")
    seeds = [(i, split_seed(master_seed, i)) for i in range(n_traj)]
    if workers <= 1:
        results = _run_chunk(model, cfg, seeds)
    else:
        chunks = [seeds[w::workers] for w in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, [model] * workers, [cfg] * workers, chunks))
        results = [None] * n_traj
        for w, part in enumerate(parts):
            for (index, _), res in zip(chunks[w], part):
                results[index] = res

    comp = _Compiled(model)
    finals = np.array([psi for _, psi in results])
    values = np.einsum("ni,pij,nj->np", finals.conj(), comp.projs, finals).real
    observables = {}
    for p, name in enumerate(comp.proj_names):
        col = values[:, p]
        se = float(np.std(col, ddof=1) / math.sqrt(n_traj)) if n_traj > 1 else 0.0
        observables[name] = (float(np.mean(col)), se)
    counts = {label: 0 for label in comp.labels}
    for jumps, _ in results:
        for _, label in jumps:
            counts[label] += 1

    horizon = 0
    if "excited" in comp.proj_names:
        horizon = int(np.sum(values[:, comp.proj_names.index("excited")] >= cfg.ss_tol))
        if horizon:
            warnings.warn(
                f"{horizon} of {n_traj} trajectories still excited at t_end={cfg.t_end}; extend the horizon",
                RuntimeWarning,
                stacklevel=2,
            )
    records = None
    if keep_records:
        records = [
            TrajectoryRecord(tuple(j), StateVector(model.space, psi), seed)
            for (j, psi), (_, seed) in zip(results, seeds)
        ]
    return EnsembleResult(n_traj, observables, counts, records, horizon, int(master_seed))


def absorption_probability(result: EnsembleResult) -> tuple[float, float]:
    """Estimate of the absorbed-state population with its standard error."""
    try:
        return result.observables["absorbed"]
    except KeyError:
        raise ConfigurationError("ensemble has no 'absorbed' observable") from None


def trajectory_observable(record: TrajectoryRecord, op: Operator) -> float:
    return expectation(normalize(record.final_state), op).real
