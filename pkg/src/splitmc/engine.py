"""The Gibbs sweep, baseline samplers (ULA, joint Langevin) and optimizer twins.

One sweep refreshes every auxiliary block from the previous master iterate
(simultaneously, so blocks stay exchangeable and may be drawn in parallel)
and then redraws the master parameter from its Gaussian conditional.

Randomness contract: every draw comes from a child stream keyed by
(root seed, sweep index, block index), so a chain is reproducible
bit-for-bit from (model, config, seed) regardless of thread scheduling.
"""

from __future__ import annotations

import math
import struct
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .conditionals import (
    DEFAULT_PROPOSAL_CAP,
    ThetaConditional,
    sample_z_rejection,
    warm_start_minimize,
)
from .errors import DimensionMismatch, NotSmooth
from .model import SplitModel

TRACE_MAGIC = b"SGS1"
_TRACE_HEADER = struct.Struct("<4sqq")


@dataclass
class ChainState:
    """One Markov-chain iterate: (theta, z_1..z_b) plus the seed it grew from."""

    theta: np.ndarray
    z_blocks: tuple
    sweep: int
    rng_seed_root: int

    def __post_init__(self):
        if self.sweep < 0:
            raise ValueError("sweep index must be nonnegative")


@dataclass(frozen=True)
class SamplerConfig:
    rho: float
    sweeps: int
    burn_in: int = 0
    parallel_z: bool = False
    record_every: int = 1
    carry_warm_start: bool = False
    proposal_cap: int = DEFAULT_PROPOSAL_CAP

    def __post_init__(self):
        if self.rho <= 0:
            raise ValueError("rho must be positive")
        if not 0 <= self.burn_in < self.sweeps:
            raise ValueError("burn_in must satisfy 0 <= burn_in < sweeps")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")


def initial_state(model: SplitModel, theta0: np.ndarray, seed: int) -> ChainState:
    theta0 = np.asarray(theta0, dtype=float)
    if theta0.shape != (model.d,):
        raise DimensionMismatch("theta0 has the wrong length")
    z0 = tuple(f.a @ theta0 for f in model.factors)
    return ChainState(theta=theta0, z_blocks=z0, sweep=0, rng_seed_root=int(seed))


def _block_rng(root: int, sweep: int, block: int):
    return np.random.default_rng(np.random.SeedSequence(root, spawn_key=(sweep, block)))


def _draw_block(model, state, config, i, rng):
    factor = model.factors[i]
    a_theta = factor.a @ state.theta
    if factor.conditional_sampler is not None:
        return factor.conditional_sampler(a_theta, config.rho, rng), None
    warm = state.z_blocks[i] if config.carry_warm_start else None
    return sample_z_rejection(factor, state.theta, config.rho, rng,
                              proposal_cap=config.proposal_cap, z_warm=warm)


def sgs_sweep(model: SplitModel, state: ChainState, config: SamplerConfig,
              theta_cond: ThetaConditional | None = None, rng_factory=None):
    """Advance the chain by one sweep; returns (new state, per-block reports).

    Reports are RejectionReport for blocks drawn by rejection, None for
    closed-form blocks. rng_factory(sweep, block) overrides the default
    seed-derived streams (block index b addresses the master-parameter draw);
    passing a factory of null generators turns the sweep into its
    deterministic conditional-mode twin on Gaussian models.
    """
    if theta_cond is None:
        theta_cond = ThetaConditional(model, config.rho)
    sweep = state.sweep + 1
    b = model.b
    if rng_factory is None:
        rng_factory = lambda s, i: _block_rng(state.rng_seed_root, s, i)
    if config.parallel_z and b > 1:
        with ThreadPoolExecutor(max_workers=min(b, 8)) as pool:
            results = list(pool.map(
                lambda i: _draw_block(model, state, config, i, rng_factory(sweep, i)),
                range(b)))
    else:
        results = [_draw_block(model, state, config, i, rng_factory(sweep, i))
                   for i in range(b)]
    z_new = tuple(z for z, _ in results)
    reports = [r for _, r in results]
    theta_new = theta_cond.sample(z_new, rng_factory(sweep, b))
    new_state = ChainState(theta=theta_new, z_blocks=z_new, sweep=sweep,
                           rng_seed_root=state.rng_seed_root)
    return new_state, reports


def sweep_conditional_modes(model: SplitModel, theta: np.ndarray, rho: float,
                            tol: float = 1e-10):
    """The deterministic twin of one sweep: conditional modes instead of draws."""
    z_new = []
    for factor in model.factors:
        a_theta = factor.a @ theta
        if factor.conditional_mode is not None:
            z_new.append(factor.conditional_mode(a_theta, rho))
        else:
            z, _, _ = warm_start_minimize(factor, a_theta, rho, target=tol)
            z_new.append(z)
    s = np.zeros(model.d)
    for f, z in zip(model.factors, z_new):
        s += f.a.T @ np.atleast_1d(z)
    return model.solve_gram(s), z_new


@dataclass
class RunReport:
    """Aggregated per-run diagnostics for downstream tables."""

    thetas: np.ndarray
    sweeps_run: int
    seed: int
    rho: float
    wall_time_s: float
    proposals_total: np.ndarray
    rejection_draws: np.ndarray
    gd_steps_total: np.ndarray
    final_state: ChainState = field(repr=False)

    @property
    def proposals_per_draw(self) -> np.ndarray:
        """Average proposals per accepted sample, per factor (nan for closed-form blocks)."""
        with np.errstate(invalid="ignore", divide="ignore"):
            return self.proposals_total / self.rejection_draws

    @property
    def max_avg_proposals(self) -> float:
        per = self.proposals_per_draw
        per = per[~np.isnan(per)]
        return float(per.max()) if per.size else float("nan")


def run_chain(model: SplitModel, config: SamplerConfig, seed: int,
              theta0: np.ndarray | None = None, callback=None,
              trace_path=None) -> RunReport:
    """Run a full chain; record theta every record_every sweeps after burn-in.

    callback(sweep, state, reports) may return False to stop early.
    When trace_path is given, recorded rows are also streamed to a binary
    trace file (see TraceWriter for the layout).
    """
    theta0 = np.zeros(model.d) if theta0 is None else theta0
    state = initial_state(model, theta0, seed)
    cond = ThetaConditional(model, config.rho)
    b = model.b
    proposals = np.zeros(b)
    rejection_draws = np.zeros(b)
    gd_steps = np.zeros(b)
    recorded = []
    writer = TraceWriter(trace_path, model.d) if trace_path is not None else None
    t0 = time.perf_counter()
    sweeps_run = 0
    try:
        for t in range(1, config.sweeps + 1):
            state, reports = sgs_sweep(model, state, config, cond)
            sweeps_run = t
            for i, rep in enumerate(reports):
                if rep is not None:
                    proposals[i] += rep.proposals_used
                    rejection_draws[i] += 1
                    gd_steps[i] += rep.warm_start_gd_steps
            if t > config.burn_in and (t - config.burn_in - 1) % config.record_every == 0:
                recorded.append(state.theta.copy())
                if writer is not None:
                    writer.append(state.theta)
            if callback is not None and callback(t, state, reports) is False:
                break
    finally:
        if writer is not None:
            writer.close()
    wall = time.perf_counter() - t0
    thetas = np.array(recorded) if recorded else np.empty((0, model.d))
    return RunReport(thetas=thetas, sweeps_run=sweeps_run, seed=int(seed),
                     rho=config.rho, wall_time_s=wall, proposals_total=proposals,
                     rejection_draws=rejection_draws, gd_steps_total=gd_steps,
                     final_state=state)


# ---------------------------------------------------------------------------
# Baseline samplers


def ula_step(model: SplitModel, theta: np.ndarray, h: float, rng) -> np.ndarray:
    """One unadjusted Langevin step: theta - h grad U(theta) + sqrt(2h) xi."""
    if not model.smooth():
        raise NotSmooth("Langevin steps need finite smoothness constants")
    theta = np.asarray(theta, dtype=float)
    return theta - h * model.gradient(theta) + math.sqrt(2.0 * h) * rng.standard_normal(model.d)


def extended_langevin_step(model: SplitModel, state: ChainState, rho: float,
                           h: float, rng) -> ChainState:
    """Euler step of the overdamped Langevin diffusion on the joint (theta, z) space.

    All blocks move simultaneously from the current iterate. Exploration
    baseline only; no accuracy guarantee is attached.
    """
    if not model.smooth():
        raise NotSmooth("Langevin steps need finite smoothness constants")
    theta = state.theta
    drift_theta = np.zeros(model.d)
    z_new = []
    for f, z in zip(model.factors, state.z_blocks):
        resid = f.a @ theta - z
        drift_theta += f.a.T @ resid / rho**2
        drift_z = (z - f.a @ theta) / rho**2 + np.asarray(f.potential.gradient(z), dtype=float)
        noise = math.sqrt(2.0 * h) * rng.standard_normal(f.dim) if h > 0 else 0.0
        z_new.append(z - h * drift_z + noise)
    noise = math.sqrt(2.0 * h) * rng.standard_normal(model.d) if h > 0 else 0.0
    theta_new = theta - h * drift_theta + noise
    return ChainState(theta=theta_new, z_blocks=tuple(z_new), sweep=state.sweep + 1,
                      rng_seed_root=state.rng_seed_root)


# ---------------------------------------------------------------------------
# Optimizer baselines


def am_solve(model: SplitModel, rho: float, iters: int,
             theta0: np.ndarray | None = None, inner_tol: float = 1e-10):
    """Alternating minimization of the quadratically penalized objective.

    Each iteration takes the conditional mode of every block (closed form
    when available, warm-start descent to inner_tol otherwise) and then the
    exact master-parameter mode. Deterministic counterpart of the sweep.
    """
    theta = np.zeros(model.d) if theta0 is None else np.array(theta0, dtype=float)
    z_blocks = None
    for _ in range(iters):
        theta, z_blocks = sweep_conditional_modes(model, theta, rho, tol=inner_tol)
    return theta, z_blocks


def admm_solve(model: SplitModel, rho: float, iters: int,
               theta0: np.ndarray | None = None, inner_tol: float = 1e-10):
    """Alternating direction method of multipliers on the same splitting.

    z-step: argmin U_i(z) + ||z - (A_i theta - u_i)||^2/(2 rho^2)
    theta-step: normal equations G theta = sum_i A_i^T (z_i + u_i)
    dual step: u_i += z_i - A_i theta
    """
    theta = np.zeros(model.d) if theta0 is None else np.array(theta0, dtype=float)
    duals = [np.zeros(f.dim) for f in model.factors]
    z_blocks = [f.a @ theta for f in model.factors]
    for _ in range(iters):
        for i, factor in enumerate(model.factors):
            anchor = factor.a @ theta - duals[i]
            if factor.conditional_mode is not None:
                z_blocks[i] = factor.conditional_mode(anchor, rho)
            else:
                z, _, _ = warm_start_minimize(factor, anchor, rho, target=inner_tol)
                z_blocks[i] = z
        s = np.zeros(model.d)
        for f, z, u in zip(model.factors, z_blocks, duals):
            s += f.a.T @ (np.atleast_1d(z) + u)
        theta = model.solve_gram(s)
        for i, factor in enumerate(model.factors):
            duals[i] = duals[i] + z_blocks[i] - factor.a @ theta
    return theta, z_blocks, duals


# ---------------------------------------------------------------------------
# Binary trace files


class TraceWriter:
    """Little-endian trace: header (magic 'SGS1', int64 d, int64 T), then T rows
    of d float64 each. T is patched on close."""

    def __init__(self, path, d: int):
        self.path = path
        self.d = int(d)
        self.rows = 0
        self._fh = open(path, "wb")
        self._fh.write(_TRACE_HEADER.pack(TRACE_MAGIC, self.d, 0))

    def append(self, theta: np.ndarray):
        row = np.ascontiguousarray(theta, dtype="<f8")
        if row.shape != (self.d,):
            raise DimensionMismatch("trace row has the wrong length")
        self._fh.write(row.tobytes())
        self.rows += 1

    def close(self):
        if self._fh is None:
            return
        self._fh.seek(4 + 8)
        self._fh.write(struct.pack("<q", self.rows))
        self._fh.close()
        self._fh = None


def read_trace(path) -> np.ndarray:
    """Load a trace file back as a (T, d) array."""
    with open(path, "rb") as fh:
        magic, d, t = _TRACE_HEADER.unpack(fh.read(_TRACE_HEADER.size))
        if magic != TRACE_MAGIC:
            raise ValueError(f"not a trace file: magic {magic!r}")
        data = np.frombuffer(fh.read(8 * d * t), dtype="<f8")
    return data.reshape(t, d)
