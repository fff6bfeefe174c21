"""Second-order quantities for Markov source/side-information pairs.

The pair sequence (X_i, S_i) forms an irreducible, aperiodic,
time-homogeneous Markov chain over K = |X| |S| joint states, started from
its stationary law.  All single-letter quantities (rate mu, tilted density
j, its stationary variance) are those of the i.i.d. instance with joint
law pi_XS; memory enters only through the lag covariances of j along the
chain:

    V_n    = lag0 + (2/n) sum_{k=1}^{n} (n - k) cov_k,
    V_inf  = lag0 + 2 sum_{k>=1} cov_k,

where cov_k decays geometrically for this chain class.  V_inf is computed
two ways — by truncating the covariance ladder and, for diagonalizable
transition matrices, by reweighting the eigenvalue lambda_i contributions
with (1 + lambda_i)/(1 - lambda_i) — and the two must agree.

Joint states are indexed as x * s_size + s throughout.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csgraph

from .coremath import gaussian_q_inv
from .exceptions import ValidationError
from .solver import CrdSolution, solve_crd
from .source import DistortionSpec, Instance, JointSource, SequencePair, validate
from .tilted import TiltedField, tilted_density

_LADDER_FLOOR = 1e-14
_LADDER_MAX_LAG = 10_000
_EIG_COND_LIMIT = 1e10


def stationary_law(xi) -> np.ndarray:
    """Unique stationary distribution of an irreducible row-stochastic matrix.

    Eigenvector extraction with a power-iteration fallback; the returned
    law satisfies pi @ xi = pi with residual below 1e-12.
    """
    xi = np.asarray(xi, dtype=float)
    _check_stochastic(xi)
    _check_irreducible(xi)
    vals, vecs = np.linalg.eig(xi.T)
    idx = int(np.argmin(np.abs(vals - 1.0)))
    pi = np.real(vecs[:, idx])
    pi = np.abs(pi)
    pi /= pi.sum()
    residual = np.abs(pi @ xi - pi).max()
    if residual > 1e-12:
        for _ in range(100_000):
            pi = pi @ xi
            pi /= pi.sum()
            residual = np.abs(pi @ xi - pi).max()
            if residual <= 1e-13:
                break
    if residual > 1e-12:
        raise ValidationError(
            f"stationary law did not converge: residual {residual:g}"
        )
    return pi


def _check_stochastic(xi):
    if xi.ndim != 2 or xi.shape[0] != xi.shape[1] or xi.size == 0:
        raise ValidationError("transition matrix must be square and non-empty")
    if np.any(xi < 0) or not np.all(np.isfinite(xi)):
        raise ValidationError("transition matrix entries must be finite and nonnegative")
    rows = xi.sum(axis=1)
    bad = np.flatnonzero(np.abs(rows - 1.0) > 1e-12)
    if bad.size:
        raise ValidationError(
            f"transition matrix row {bad[0]} sums to {rows[bad[0]]!r}, expected 1"
        )


def _check_irreducible(xi):
    n_comp, labels = csgraph.connected_components(xi > 0, directed=True,
                                                  connection="strong")
    if n_comp > 1:
        counts = np.bincount(labels)
        minority = np.flatnonzero(labels != np.argmax(counts))
        raise ValidationError(
            f"transition matrix is reducible; states {minority.tolist()} are not "
            "mutually reachable with the rest"
        )


def _period(xi) -> int:
    """Period of an irreducible chain via BFS level differences."""
    k = xi.shape[0]
    level = np.full(k, -1)
    level[0] = 0
    queue = [0]
    g = 0
    adj = [np.flatnonzero(xi[u] > 0) for u in range(k)]
    while queue:
        u = queue.pop()
        for v in adj[u]:
            if level[v] < 0:
                level[v] = level[u] + 1
                queue.append(v)
            else:
                g = math.gcd(g, level[u] + 1 - level[v])
    return abs(g) if g else 0


class MarkovModel:
    """Validated Markov source model over joint (x, s) states."""

    def __init__(self, xi, x_size: int, s_size: int, dist: DistortionSpec):
        xi = np.array(xi, dtype=float)
        if xi.shape != (x_size * s_size, x_size * s_size):
            raise ValidationError(
                f"transition matrix must be {x_size * s_size} x {x_size * s_size} "
                f"for x_size={x_size}, s_size={s_size}"
            )
        if not isinstance(dist, DistortionSpec):
            dist = DistortionSpec(dist)
        if dist.x_size != x_size:
            raise ValidationError(
                "distortion matrix rows must match the source alphabet size"
            )
        self.pi = stationary_law(xi)
        period = _period(xi)
        if period != 1:
            raise ValidationError(f"transition matrix is periodic with period {period}")
        xi.flags.writeable = False
        self.xi = xi
        self.x_size = x_size
        self.s_size = s_size
        self.dist = dist
        self.k = x_size * s_size

    def stationary_instance(self) -> Instance:
        """The i.i.d. instance with joint law pi_XS (single-letter quantities)."""
        pmf = self.pi.reshape(self.x_size, self.s_size)
        return validate(JointSource(pmf), self.dist)


def load_markov_model(path) -> MarkovModel:
    """Load the JSON Markov schema: x_size, s_size, xi (row-stochastic), d."""
    import json

    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON: {exc}") from exc
    for key in ("x_size", "s_size", "xi", "d"):
        if key not in obj:
            raise ValidationError(f"{path}: missing required key {key!r}")
    return MarkovModel(np.asarray(obj["xi"], dtype=float), int(obj["x_size"]),
                       int(obj["s_size"]), DistortionSpec(np.asarray(obj["d"], dtype=float)))


@dataclass(frozen=True)
class CovarianceLadder:
    """Lag covariances of the tilted density along the chain.

    tail_bound is the geometric-extrapolation remainder of the truncated
    series; decay_rate is the fitted ratio (below 1 for a mixing chain).
    """

    lag0: float
    covs: np.ndarray
    v_inf: float
    tail_bound: float
    decay_rate: float


@dataclass(frozen=True)
class MarkovTiltedQuantities:
    """Single-letter solution plus the covariance ladder of one model."""

    mu: float
    field: TiltedField
    solution: CrdSolution
    ladder: CovarianceLadder


def markov_tilted_quantities(model: MarkovModel, distortion: float,
                             tol: float = 1e-9,
                             max_lag: int = _LADDER_MAX_LAG) -> MarkovTiltedQuantities:
    """Rate and covariance ladder of the tilted density at the stationary law.

    Lag-k covariances are exact matrix computations,
    cov_k = sum_{u,v} pi(u) Xi^k(u, v) jt(u) jt(v) with jt centered, iterated
    by repeated multiplication; the ladder stops after five consecutive lags
    below 1e-14 or at max_lag.
    """
    inst = model.stationary_instance()
    solution = solve_crd(inst, distortion, tol=tol)
    field = tilted_density(solution)
    j = field.table.reshape(-1)          # index x * s_size + s matches the chain
    mu = field.mean
    jt = j - mu
    lag0 = float(model.pi @ (jt * jt))
    covs = []
    w = jt.copy()
    below = 0
    for _ in range(max_lag):
        w = model.xi @ w
        c = float(model.pi @ (jt * w))
        covs.append(c)
        below = below + 1 if abs(c) < _LADDER_FLOOR else 0
        if below >= 5:
            break
    covs = np.array(covs)
    decay_rate, tail = _geometric_tail(covs)
    v_inf = lag0 + 2.0 * float(covs.sum())
    ladder = CovarianceLadder(lag0=lag0, covs=covs, v_inf=v_inf,
                              tail_bound=tail, decay_rate=decay_rate)
    return MarkovTiltedQuantities(mu=mu, field=field, solution=solution, ladder=ladder)


def _geometric_tail(covs):
    """Fit |cov_k| <= A r^k and bound the truncated remainder."""
    mags = np.abs(covs)
    pos = np.flatnonzero(mags > 0)
    if pos.size < 2:
        return 0.0, 0.0
    k = pos + 1.0
    slope, intercept = np.polyfit(k, np.log(mags[pos]), 1)
    r = min(math.exp(slope), 0.999999)
    if r <= 0:
        return 0.0, 0.0
    a = math.exp(intercept)
    k_last = len(covs)
    tail = 2.0 * a * r ** (k_last + 1) / (1.0 - r)
    return r, tail


def v_n(ladder: CovarianceLadder, n: int) -> float:
    """Variance of the normalized n-letter tilted sum, exact given the ladder.

    V_n = lag0 + (2/n) sum_{k=1}^{n} (n - k) cov_k; lags beyond the ladder
    truncation contribute below its stated floor.
    """
    if n < 1:
        raise ValueError(f"blocklength must be >= 1, got {n}")
    k_max = min(n, len(ladder.covs))
    if k_max == 0:
        return ladder.lag0
    k = np.arange(1, k_max + 1)
    return ladder.lag0 + (2.0 / n) * float(((n - k) * ladder.covs[:k_max]).sum())


def v_inf_spectral(model: MarkovModel, distortion: float,
                   quantities: MarkovTiltedQuantities | None = None,
                   tol: float = 1e-9) -> float:
    """Asymptotic variance via the eigendecomposition of the transition matrix.

    For diagonalizable Xi with eigenvalues {1, lambda_2, ...}, the summed
    lag covariances reweight each eigencomponent by (1 + lambda)/(1 - lambda)
    (the unit eigenvalue keeps weight 1; the centered density has no mass on
    it).  Ill-conditioned eigenbases fall back to the covariance ladder with
    a warning.
    """
    if quantities is None:
        quantities = markov_tilted_quantities(model, distortion, tol=tol)
    jt = quantities.field.table.reshape(-1) - quantities.mu
    vals, vecs = np.linalg.eig(model.xi)
    cond = np.linalg.cond(vecs)
    if not np.isfinite(cond) or cond > _EIG_COND_LIMIT:
        warnings.warn(
            f"eigenbasis condition number {cond:g} exceeds the guard; "
            "falling back to the covariance ladder",
            RuntimeWarning,
        )
        return quantities.ladder.v_inf
    unit = int(np.argmin(np.abs(vals - 1.0)))
    weights = np.empty(len(vals), dtype=complex)
    for i, lam in enumerate(vals):
        weights[i] = 1.0 if i == unit else (1.0 + lam) / (1.0 - lam)
    coeff = np.linalg.solve(vecs, jt.astype(complex))
    weighted = vecs @ (weights * coeff)
    v = model.pi @ (jt * weighted)
    if abs(v.imag) > 1e-8 * max(1.0, abs(v.real)):
        warnings.warn("spectral variance has a non-trivial imaginary part; "
                      "falling back to the covariance ladder", RuntimeWarning)
        return quantities.ladder.v_inf
    return float(v.real)


def markov_second_order_rate(model: MarkovModel, distortion: float, n: int,
                             eps: float,
                             quantities: MarkovTiltedQuantities | None = None) -> float:
    """Second-order rate prediction mu + sqrt(V_inf / n) Q^{-1}(eps)."""
    if quantities is None:
        quantities = markov_tilted_quantities(model, distortion)
    return quantities.mu + math.sqrt(max(quantities.ladder.v_inf, 0.0) / n) \
        * gaussian_q_inv(eps)


def sample_markov(model: MarkovModel, n: int, seed=0) -> SequencePair:
    """Sample a stationary path of length n, deterministic given the seed."""
    if n < 1:
        raise ValueError(f"path length must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    cum_rows = np.cumsum(model.xi, axis=1)
    u = rng.random(n)
    states = np.empty(n, dtype=np.int64)
    states[0] = np.searchsorted(np.cumsum(model.pi), u[0], side="right")
    for i in range(1, n):
        states[i] = np.searchsorted(cum_rows[states[i - 1]], u[i], side="right")
    states = np.minimum(states, model.k - 1)
    return SequencePair(x=states // model.s_size, s=states % model.s_size)


def iid_kernel(pmf) -> np.ndarray:
    """Transition matrix whose rows all equal the flattened joint law.

    The resulting chain is i.i.d.; every lag covariance vanishes and the
    asymptotic variance collapses to the single-letter dispersion.
    """
    flat = np.asarray(pmf, dtype=float).ravel()
    flat = flat / flat.sum()
    return np.tile(flat, (flat.size, 1))
