"""Monte Carlo verification engine for the exponential path functionals.

Paths are never materialised as an ensemble: each path m owns a
counter-based random stream keyed by (seed, m), so its increments are a
deterministic function of the seed and the path index alone.  Worker
threads fill disjoint slices of a per-path action array and every reduction
runs over that array in fixed index order, which makes all estimates
bit-identical regardless of the worker count.

Draw order within a path is part of the reproducibility contract:

* single action:     grid increments (N, d), then midpoint-bridge noise (N, d)
* self-pair action:  grid increments (N, d)
* cross-pair action: grid increments of X (N, d), then of Y (N, d)
* bipolaron action:  grid increments of X (N, d), then of Y (N, d)

Time discretisation: the single action uses midpoint times with the path
value sampled from the Brownian bridge between grid nodes (exact midpoint
law); double actions sum over grid-node pairs with the diagonal excluded.
Both choices bias the singular integrals low, so Monte Carlo means sit
slightly below their continuum targets, by O(dt^(1-theta/2)).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from numpy.random import Generator, Philox

from .errors import DomainError
from .schedule import CouplingFunction, evaluate

__all__ = [
    "ActionSpec",
    "MartingaleCheck",
    "MaximalityRow",
    "McEstimate",
    "PathEnsemble",
    "estimate",
    "fit_discretization_allowance",
    "martingale_lemma_check",
    "maximality_check",
    "sample_action",
    "summarize_actions",
]

_ACTION_KINDS = ("single", "self_double", "cross_double", "bipolaron")


@dataclass(frozen=True)
class PathEnsemble:
    """Recipe for M discretised d-dimensional Brownian paths on an N-step grid.

    Increments of path m at step i are N(0, (T/N) I_d), generated from a
    Philox stream keyed by (seed, m); evaluation order and worker count
    cannot affect them.
    """

    seed: int
    paths: int
    steps: int
    horizon: float
    dim: int

    def __post_init__(self):
        if self.paths < 1 or self.steps < 1:
            raise DomainError("ensemble needs at least one path and one step")
        if not self.horizon > 0:
            raise DomainError(f"horizon must be positive, got {self.horizon}")
        if self.dim < 1:
            raise DomainError(f"dimension must be >= 1, got {self.dim}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise DomainError("seed must fit in 64 bits")

    def generator(self, m: int) -> Generator:
        """The path-m random stream."""
        key = np.array([self.seed, m], dtype=np.uint64)
        return Generator(Philox(key=key))

    @property
    def dt(self) -> float:
        return self.horizon / self.steps


@dataclass(frozen=True)
class ActionSpec:
    """Which exponential functional to sample.

    ``offset`` shifts the singular center along the first coordinate axis:
    the starting-point offset x for the single action, the difference x - y
    for the cross-pair action.  ``epsilon`` mollifies the distance as
    (|z|^2 + epsilon^2)^(theta/2); zero means the raw singularity, in which
    case a path hitting an exact zero distance yields +inf for that path
    (counted, never clamped).
    """

    kind: str
    f: CouplingFunction
    theta: float
    d: int
    T: float
    offset: float = 0.0
    epsilon: float = 0.0

    def __post_init__(self):
        if self.kind not in _ACTION_KINDS:
            raise DomainError(f"unknown action kind {self.kind!r}")
        if not 0.0 <= self.theta <= 2.0:
            # theta = 0 and theta = 2 are degenerate but allowed for testing
            raise DomainError(f"theta must lie in [0, 2], got {self.theta}")
        if self.d < 1:
            raise DomainError(f"dimension must be >= 1, got {self.d}")
        if not self.T > 0:
            raise DomainError(f"horizon must be positive, got {self.T}")
        if self.epsilon < 0:
            raise DomainError(f"epsilon must be nonnegative, got {self.epsilon}")


@dataclass(frozen=True)
class McEstimate:
    """Log-domain Monte Carlo estimate of E[exp(action)].

    log_mean is the max-shifted log of the sample mean of exp(action);
    stderr_log its delta-method standard error from sqrt(M) batch means;
    action_mean/action_stderr summarise the plain sample of the action.
    Bit-exact reproducible from (spec, seed, paths, steps).
    """

    log_mean: float
    stderr_log: float
    action_mean: float
    action_stderr: float
    paths: int
    steps: int
    seed: int
    infinite_paths: int = 0

    def as_dict(self) -> dict:
        return {
            "log_mean": self.log_mean,
            "stderr_log": self.stderr_log,
            "action_mean": self.action_mean,
            "action_stderr": self.action_stderr,
            "paths": self.paths,
            "steps": self.steps,
            "seed": self.seed,
            "infinite_paths": self.infinite_paths,
        }


# ---------------------------------------------------------------------------
# per-path samplers
# ---------------------------------------------------------------------------

class _SingleSampler:
    def __init__(self, spec: ActionSpec, steps: int):
        dt = spec.T / steps
        self.dt = dt
        self.sq = math.sqrt(dt)
        self.steps = steps
        self.dim = spec.d
        tmid = (np.arange(steps) + 0.5) * dt
        self.fw = np.asarray(evaluate(spec.f, tmid), dtype=float) * dt
        self.eps2 = spec.epsilon ** 2
        self.theta = spec.theta
        self.offset = spec.offset

    def draw_mids(self, rng: Generator) -> np.ndarray:
        inc = self.sq * rng.standard_normal((self.steps, self.dim))
        bridge = rng.standard_normal((self.steps, self.dim))
        x = np.cumsum(inc, axis=0)
        return x - 0.5 * inc + (0.5 * self.sq) * bridge

    def eval_mids(self, mids: np.ndarray, offset: float) -> float:
        r2 = np.einsum("ij,ij->i", mids, mids)
        if offset != 0.0:
            r2 = r2 + 2.0 * offset * mids[:, 0] + offset * offset
        r2 = r2 + self.eps2
        with np.errstate(divide="ignore"):
            vals = r2 ** (-self.theta / 2.0)
        return float(np.dot(self.fw, vals))

    def __call__(self, rng: Generator) -> float:
        return self.eval_mids(self.draw_mids(rng), self.offset)


class _PairSampler:
    """Grid-node double sums over node pairs i > j, nodes at t = (k+1) dt."""

    def __init__(self, spec: ActionSpec, steps: int):
        dt = spec.T / steps
        self.sq = math.sqrt(dt)
        self.steps = steps
        self.dim = spec.d
        self.kind = spec.kind
        self.theta = spec.theta
        self.eps2 = spec.epsilon ** 2
        self.offset = spec.offset
        self.iu, self.ju = np.tril_indices(steps, -1)
        gaps = (self.iu - self.ju) * dt
        base = np.asarray(evaluate(spec.f, gaps), dtype=float) * dt * dt
        if spec.kind == "bipolaron":
            self.w_self = base
            self.w_cross = 2.0 * base
        else:
            self.w = base

    def _pair_pow(self, diff2: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return (diff2 + self.eps2) ** (-self.theta / 2.0)

    def _self_distances(self, x: np.ndarray) -> np.ndarray:
        g = x @ x.T
        sq = np.diagonal(g)
        d2 = sq[self.iu] + sq[self.ju] - 2.0 * g[self.iu, self.ju]
        return np.maximum(d2, 0.0)

    def _cross_distances(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        d = x[self.iu] - y[self.ju]
        if self.offset != 0.0:
            d = d.copy()
            d[:, 0] += self.offset
        return np.einsum("ij,ij->i", d, d)

    def __call__(self, rng: Generator) -> float:
        x = np.cumsum(self.sq * rng.standard_normal((self.steps, self.dim)), axis=0)
        if self.kind == "self_double":
            return float(np.dot(self.w, self._pair_pow(self._self_distances(x))))
        y = np.cumsum(self.sq * rng.standard_normal((self.steps, self.dim)), axis=0)
        if self.kind == "cross_double":
            return float(np.dot(self.w, self._pair_pow(self._cross_distances(x, y))))
        # bipolaron: cross term plus both self terms, shared coupling profile
        total = float(np.dot(self.w_cross, self._pair_pow(self._cross_distances(x, y))))
        total += float(np.dot(self.w_self, self._pair_pow(self._self_distances(x))))
        total += float(np.dot(self.w_self, self._pair_pow(self._self_distances(y))))
        return total


def _make_sampler(spec: ActionSpec, steps: int):
    if spec.kind == "single":
        return _SingleSampler(spec, steps)
    return _PairSampler(spec, steps)


def sample_action(spec: ActionSpec, ensemble: PathEnsemble, m: int) -> float:
    """The discretised action of path m (pure function of seed and m)."""
    if ensemble.horizon != spec.T or ensemble.dim != spec.d:
        raise DomainError("spec and ensemble disagree on (T, d)")
    if not 0 <= m < ensemble.paths:
        raise DomainError(f"path index {m} outside ensemble of {ensemble.paths}")
    sampler = _make_sampler(spec, ensemble.steps)
    return sampler(ensemble.generator(m))


def _fill_actions(sampler, ensemble: PathEnsemble, out: np.ndarray,
                  threads: int) -> None:
    M = ensemble.paths

    def work(m0: int, m1: int) -> None:
        for m in range(m0, m1):
            out[m] = sampler(ensemble.generator(m))

    if threads <= 1:
        work(0, M)
        return
    chunk = max(64, M // (threads * 8))
    ranges = [(m0, min(m0 + chunk, M)) for m0 in range(0, M, chunk)]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        list(ex.map(lambda r: work(*r), ranges))


# ---------------------------------------------------------------------------
# reductions
# ---------------------------------------------------------------------------

def summarize_actions(actions: np.ndarray, seed: int, steps: int) -> McEstimate:
    """Estimate from a per-path action array (fixed index order throughout)."""
    actions = np.asarray(actions, dtype=float)
    M = actions.size
    finite = np.isfinite(actions)
    n_inf = int(M - finite.sum())
    vals = actions[finite]
    if vals.size == 0:
        return McEstimate(math.inf, math.nan, math.nan, math.nan, M, steps, seed, n_inf)
    mx = float(vals.max())
    w = np.exp(vals - mx)
    mean_w = float(w.mean())
    log_mean = mx + math.log(mean_w)
    B = int(math.isqrt(vals.size))
    stderr_log = math.nan
    if B >= 2:
        bs = vals.size // B
        bm = w[: B * bs].reshape(B, bs).mean(axis=1)
        stderr_log = float(bm.std(ddof=1) / math.sqrt(B) / mean_w)
    action_mean = float(vals.mean())
    action_stderr = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else math.nan
    return McEstimate(log_mean, stderr_log, action_mean, action_stderr,
                      M, steps, seed, n_inf)


def estimate(spec: ActionSpec, paths: int, steps: int, seed: int,
             threads: int = 1) -> McEstimate:
    """Monte Carlo estimate of ln E[exp(action)] with error bars.

    Budget floor M >= 100, N >= 16 keeps the batch-means error estimate
    meaningful.  Paths that hit an exact singularity at epsilon = 0 come
    back +inf; they are excluded from the estimate and counted in
    ``infinite_paths``.
    """
    if paths < 100:
        raise DomainError(f"need at least 100 paths, got {paths}")
    if steps < 16:
        raise DomainError(f"need at least 16 steps, got {steps}")
    ensemble = PathEnsemble(seed=seed, paths=paths, steps=steps,
                            horizon=spec.T, dim=spec.d)
    sampler = _make_sampler(spec, steps)
    actions = np.empty(paths)
    _fill_actions(sampler, ensemble, actions, threads)
    return summarize_actions(actions, seed, steps)


# ---------------------------------------------------------------------------
# structured checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MaximalityRow:
    radius: float
    log_mean: float
    stderr_log: float
    gap_from_origin: float       # log_mean(0) - log_mean(radius)
    gap_stderr: float
    ok: bool

    def as_dict(self) -> dict:
        return {
            "radius": self.radius,
            "log_mean": self.log_mean,
            "stderr_log": self.stderr_log,
            "gap_from_origin": self.gap_from_origin,
            "gap_stderr": self.gap_stderr,
            "ok": self.ok,
        }


def maximality_check(spec: ActionSpec, offsets: Sequence[float], paths: int,
                     steps: int, seed: int, threads: int = 1) -> list:
    """Origin-maximality table for the single action.

    All offsets share each path's draws (common random numbers), so the
    gap log_mean(0) - log_mean(r) carries a paired batch-means error.  Each
    row asserts the gap >= -3 standard errors.
    """
    if spec.kind != "single":
        raise DomainError("maximality check applies to the single action")
    radii = [float(r) for r in offsets]
    ensemble = PathEnsemble(seed=seed, paths=paths, steps=steps,
                            horizon=spec.T, dim=spec.d)
    sampler = _SingleSampler(spec, steps)
    all_r = [0.0] + radii
    acts = np.empty((len(all_r), paths))

    def work(m0: int, m1: int) -> None:
        for m in range(m0, m1):
            mids = sampler.draw_mids(ensemble.generator(m))
            for k, r in enumerate(all_r):
                acts[k, m] = sampler.eval_mids(mids, r)

    if threads <= 1:
        work(0, paths)
    else:
        chunk = max(64, paths // (threads * 8))
        ranges = [(m0, min(m0 + chunk, paths)) for m0 in range(0, paths, chunk)]
        with ThreadPoolExecutor(max_workers=threads) as ex:
            list(ex.map(lambda rg: work(*rg), ranges))

    ests = [summarize_actions(acts[k], seed, steps) for k in range(len(all_r))]
    B = int(math.isqrt(paths))
    bs = paths // B
    rows = []
    mx = acts.max(axis=1, keepdims=True)
    logs_b = np.empty((len(all_r), B))
    for k in range(len(all_r)):
        w = np.exp(acts[k, : B * bs] - mx[k])
        logs_b[k] = np.log(w.reshape(B, bs).mean(axis=1)) + mx[k]
    for k, r in enumerate(radii, start=1):
        gaps = logs_b[0] - logs_b[k]
        gap = ests[0].log_mean - ests[k].log_mean
        gap_se = float(gaps.std(ddof=1) / math.sqrt(B))
        rows.append(MaximalityRow(
            radius=r,
            log_mean=ests[k].log_mean,
            stderr_log=ests[k].stderr_log,
            gap_from_origin=gap,
            gap_stderr=gap_se,
            ok=bool(gap >= -3.0 * gap_se),
        ))
    rows.insert(0, MaximalityRow(0.0, ests[0].log_mean, ests[0].stderr_log,
                                 0.0, 0.0, True))
    return rows


@dataclass(frozen=True)
class MartingaleCheck:
    """Exponential-moment identity for an action with constant stochastic
    derivative, against its martingale-estimate ceiling.

    The affine action lam * X_T^(1) has derivative identically lam, so the
    ceiling exp(E[action] + lam^2 T / 2) is attained exactly; truncating the
    action strictly reduces the exponential moment below the same ceiling.
    """

    lam: float
    T: float
    truncation: float
    log_mean: float
    stderr_log: float
    log_ceiling: float
    gap: float                  # log_ceiling - log_mean
    equality_within_3se: bool
    strictly_below_3se: bool

    def as_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "T": self.T,
            "truncation": self.truncation,
            "log_mean": self.log_mean,
            "stderr_log": self.stderr_log,
            "log_ceiling": self.log_ceiling,
            "gap": self.gap,
            "equality_within_3se": self.equality_within_3se,
            "strictly_below_3se": self.strictly_below_3se,
        }


def martingale_lemma_check(lam: float, T: float, d: int, paths: int, steps: int,
                           seed: int, truncation: float = None) -> MartingaleCheck:
    """Monte Carlo check of the martingale-estimate ceiling.

    With no truncation the estimate must match lam^2 T / 2 within three
    standard errors (equality case); with truncation the estimate must sit
    strictly below it.
    """
    ensemble = PathEnsemble(seed=seed, paths=paths, steps=steps, horizon=T, dim=d)
    sq = math.sqrt(ensemble.dt)
    actions = np.empty(paths)
    for m in range(paths):
        inc = sq * ensemble.generator(m).standard_normal((steps, d))
        x1 = float(inc[:, 0].sum())
        if truncation is not None:
            x1 = min(x1, truncation)
        actions[m] = lam * x1
    est = summarize_actions(actions, seed, steps)
    ceiling = lam * lam * T / 2.0
    gap = ceiling - est.log_mean
    se = est.stderr_log if math.isfinite(est.stderr_log) else 0.0
    return MartingaleCheck(
        lam=lam, T=T,
        truncation=math.nan if truncation is None else truncation,
        log_mean=est.log_mean, stderr_log=est.stderr_log,
        log_ceiling=ceiling, gap=gap,
        equality_within_3se=bool(abs(gap) <= 3.0 * se + 1e-12),
        strictly_below_3se=bool(gap > 3.0 * se),
    )


def fit_discretization_allowance(diffs: Mapping[int, float], T: float,
                                 exponent: float) -> float:
    """Coefficient C of the allowance model |bias(N)| ~ C (T/N)^exponent.

    ``diffs`` maps step counts to observed deviations from the continuum
    target on an N ladder; the returned C is the conservative (largest)
    fit, so C (T/N)^exponent dominates every observed point.
    """
    if not diffs:
        raise DomainError("allowance fit needs at least one ladder point")
    c = 0.0
    for n, diff in diffs.items():
        dt = T / int(n)
        c = max(c, abs(float(diff)) / dt ** exponent)
    return c


def ladder_allowance(spec: ActionSpec, paths: int, steps: int, seed: int,
                     exponent: float, threads: int = 1) -> dict:
    """Discretization allowance at ``steps``, fitted on an N ladder.

    Runs the estimator at steps/4 and steps/2, models the grid bias as
    C (T/N)^exponent, and solves for C from the successive differences of
    the action sample means (conservatively, the larger of the two rungs).
    The action mean carries the same leading-order grid bias as the
    log-domain estimate but with far smaller sampling noise, so it is the
    stable fit target; the allowance applies to both.
    """
    if steps < 64:
        raise DomainError("ladder fit needs at least 64 steps")
    ladder_steps = [steps // 4, steps // 2, steps]
    ests = {n: estimate(spec, paths, n, seed, threads=threads) for n in ladder_steps}
    c = 0.0
    for n_lo, n_hi in zip(ladder_steps, ladder_steps[1:]):
        gap = abs(ests[n_hi].action_mean - ests[n_lo].action_mean)
        dt_lo = spec.T / n_lo
        dt_hi = spec.T / n_hi
        denom = dt_lo ** exponent - dt_hi ** exponent
        if denom > 0:
            c = max(c, gap / denom)
    allowance = c * (spec.T / steps) ** exponent
    return {
        "allowance": allowance,
        "coefficient": c,
        "exponent": exponent,
        "ladder": {n: e.action_mean for n, e in ests.items()},
        "estimates": ests,
    }
