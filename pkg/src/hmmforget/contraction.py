"""Contraction analysis of conditional hidden-chain transitions.

Total-variation distances, Dobrushin coefficients, the cluster-based
contraction constant, block counting along observation sequences, and the
Monte-Carlo experiments that verify exponential forgetting of smoothing
distributions empirically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    AssumptionAError,
    DegenerateDataError,
    DimensionMismatchError,
    NoValidRowsError,
    NotAProbabilityError,
    ZeroLikelihoodError,
)
from .model import (
    Cluster,
    HmmModel,
    SamplePath,
    _cluster_rho,
    build_model,
    detect_clusters,
    simulate,
    verify_assumption_a,
)
from .seeding import derive_seed
from .smoothing import smoothing_matrix, smoothing_vector

_SIMPLEX_TOL = 1e-9
_TV_FLOOR = 10 * np.finfo(float).eps
BOUND_SLACK = 1e-9


def _check_simplex(vec, label: str) -> np.ndarray:
    arr = np.asarray(vec, dtype=np.float64)
    if arr.ndim != 1:
        raise NotAProbabilityError(f"{label} must be a vector")
    if (arr < -_SIMPLEX_TOL).any() or abs(arr.sum() - 1.0) > _SIMPLEX_TOL:
        raise NotAProbabilityError(f"{label} is not a probability vector (sum={arr.sum()!r})")
    return arr


def tv_distance(p, q) -> float:
    """Total variation distance in the L1 convention, so values lie in [0, 2]."""
    p = _check_simplex(p, "p")
    q = _check_simplex(q, "q")
    if p.size != q.size:
        raise DimensionMismatchError(f"vector lengths differ: {p.size} vs {q.size}")
    return float(np.abs(p - q).sum())


def dobrushin(matrix) -> float:
    """Half the maximal L1 distance between rows; zero rows are skipped."""
    A = np.asarray(matrix, dtype=np.float64)
    if A.ndim != 2:
        raise DimensionMismatchError("expected a 2-d matrix")
    valid = A.sum(axis=1) > 0.0
    if not valid.any():
        raise NoValidRowsError("all rows are zero")
    B = A[valid]
    diffs = np.abs(B[:, None, :] - B[None, :, :]).sum(axis=2)
    return float(diffs.max() / 2.0)


def doeblin_check(matrix, lam, eps: float) -> bool:
    """True iff every entry (i, j) is at least eps * lam[j].

    When true, the Dobrushin coefficient of the matrix is at most 1 - eps.
    """
    A = np.asarray(matrix, dtype=np.float64)
    lam = _check_simplex(lam, "lam")
    if eps <= 0:
        raise ValueError("eps must be positive")
    return bool((A >= eps * lam[None, :]).all())


def rho_constant(model: HmmModel, cluster: Cluster) -> float:
    """Contraction constant of a verified cluster.

    One minus the min/max ratio of the r-th restricted block power times
    (eps / ceiling)^r, floored to stay inside (0, 1).
    """
    r = cluster.primitivity_exponent
    if r is None:
        raise AssumptionAError("cluster has no primitivity exponent; run verify_assumption_a first")
    return _cluster_rho(model, cluster, r)


def kappa(obs, cluster: Cluster, r: int | None = None) -> int:
    """Number of aligned length-r observation blocks inside the common support.

    The first element of `obs` is treated as time 1; block u covers times
    ur+2 .. (u+1)r+1 and only blocks fully inside the sequence with
    u < floor((t-2)/r) are counted.
    """
    profile = kappa_profile(obs, cluster, r=r)
    return int(profile[-1]) if profile.size else 0


def kappa_profile(obs, cluster: Cluster, r: int | None = None) -> np.ndarray:
    """kappa over every prefix: entry i is the block count of obs[:i+1]."""
    if r is None:
        r = cluster.primitivity_exponent
    if r is None:
        raise AssumptionAError("cluster has no primitivity exponent; run verify_assumption_a first")
    obs = np.asarray(obs, dtype=np.int64)
    L = obs.size
    out = np.zeros(L, dtype=np.int64)
    max_blocks = max((L - 2) // r, 0)
    if max_blocks == 0:
        return out
    in_support = np.isin(obs, np.asarray(cluster.common_support, dtype=np.int64))
    hits = in_support[1 : 1 + max_blocks * r].reshape(max_blocks, r).all(axis=1)
    cum = np.cumsum(hits)
    t = np.arange(1, L + 1)
    j = np.maximum((t - 2) // r, 0)
    out[j >= 1] = cum[j[j >= 1] - 1]
    return out


@dataclass(frozen=True)
class ForgettingSample:
    """One comparison of smoothing vectors on two nested observation windows."""

    t: int
    z1: int
    z2: int
    n: int
    tv: float
    kappa: int
    bound: float
    violation: bool


def forgetting_bound_check(
    model: HmmModel,
    cluster: Cluster,
    path: SamplePath,
    t: int,
    z1: int,
    z2: int,
    n: int,
) -> ForgettingSample:
    """Measure the smoothing-vector distance for two left endpoints against 2 rho^kappa."""
    if not (z2 <= z1 <= 1 <= t <= n):
        raise ValueError(f"need z2 <= z1 <= 1 <= t <= n, got z2={z2}, z1={z1}, t={t}, n={n}")
    if cluster.rho is None:
        raise AssumptionAError("cluster not verified; run verify_assumption_a first")
    pi1 = smoothing_vector(model, path.window(z1, n), t, origin=z1)
    pi2 = smoothing_vector(model, path.window(z2, n), t, origin=z2)
    tv = float(np.abs(pi1.probs - pi2.probs).sum())
    k = kappa(path.window(1, t), cluster)
    bound = 2.0 * cluster.rho**k
    return ForgettingSample(
        t=t, z1=z1, z2=z2, n=n, tv=tv, kappa=k, bound=bound,
        violation=bool(tv > bound + BOUND_SLACK),
    )


@dataclass(frozen=True)
class ForgettingConfig:
    """Replicated forgetting check over a grid of times on a fixed window pair."""

    replicates: int = 100
    n: int = 128
    t_values: tuple[int, ...] | None = None
    z1: int = 1
    z2: int = -16
    seed: int = 0

    def resolved_t_values(self) -> tuple[int, ...]:
        if self.t_values is not None:
            return self.t_values
        return tuple(range(1, self.n + 1, max(self.n // 32, 1)))


def run_forgetting_experiment(
    model: HmmModel, cluster: Cluster, config: ForgettingConfig
) -> list[tuple[int, int, ForgettingSample]]:
    """Lemma-style bound checks over many simulated paths.

    Returns (replicate, seed, sample) triples; shares the forward/backward
    tables of each window across all probed times, so the cost per
    replicate is linear in the window length.
    """
    if cluster.rho is None:
        raise AssumptionAError("cluster not verified; run verify_assumption_a first")
    if not (config.z2 <= config.z1 <= 1):
        raise ValueError("need z2 <= z1 <= 1")
    t_values = config.resolved_t_values()
    if min(t_values) < 1 or max(t_values) > config.n:
        raise ValueError("t values must lie in [1, n]")
    out = []
    for rep in range(config.replicates):
        seed = derive_seed(config.seed, rep)
        path = simulate(model, config.n - config.z2 + 1, origin_offset=config.z2, seed=seed)
        gamma1 = smoothing_matrix(model, path.window(config.z1, config.n), origin=config.z1)
        gamma2 = smoothing_matrix(model, path.window(config.z2, config.n), origin=config.z2)
        profile = kappa_profile(path.window(1, config.n), cluster)
        for t in t_values:
            tv = float(np.abs(gamma1[t - config.z1] - gamma2[t - config.z2]).sum())
            k = int(profile[t - 1])
            bound = 2.0 * cluster.rho**k
            out.append(
                (
                    rep,
                    seed,
                    ForgettingSample(
                        t=t, z1=config.z1, z2=config.z2, n=config.n,
                        tv=tv, kappa=k, bound=bound,
                        violation=bool(tv > bound + BOUND_SLACK),
                    ),
                )
            )
    return out


@dataclass(frozen=True)
class DecayConfig:
    """Settings for the empirical decay-rate fit."""

    replicates: int = 200
    t_min: int | None = None
    t_max: int = 200
    t_step: int = 1
    n_offsets: tuple[int, ...] = (0, 16, 64)
    z1: int = 1
    z2: int = -32
    seed: int = 0


@dataclass(frozen=True)
class DecayEstimate:
    """Fitted log-TV decay versus the ergodic-rate ceiling."""

    t_values: np.ndarray
    mean_log_tv: np.ndarray
    counts: np.ndarray
    slope: float
    slope_stderr: float
    theory_slope: float
    rho: float
    p_r: float
    r: int
    replicates: int

    def within_theory(self, n_stderr: float = 2.0) -> bool:
        return self.slope <= self.theory_slope + n_stderr * self.slope_stderr

    def to_json_dict(self) -> dict:
        return {
            "slope": self.slope,
            "slope_stderr": self.slope_stderr,
            "theory_slope": self.theory_slope,
            "p_r": self.p_r,
            "r": self.r,
            "rho": self.rho,
        }


def decay_rate_experiment(model: HmmModel, cluster: Cluster, config: DecayConfig) -> DecayEstimate:
    """Fit the decay rate of sup-over-n smoothing distances against the ceiling.

    For each replicate and probe time t, takes the largest distance over
    the sampled right endpoints, drops values at the numerical floor, and
    fits an ordinary least-squares line to the per-t mean of the logs.
    Raises DegenerateDataError when every distance is exactly zero
    (instant forgetting) or too few probe times survive censoring.
    """
    if cluster.rho is None or cluster.p_r is None:
        raise AssumptionAError("cluster not verified; run verify_assumption_a first")
    r = cluster.primitivity_exponent
    t_min = config.t_min if config.t_min is not None else r + 2
    t_values = np.arange(t_min, config.t_max + 1, config.t_step)
    if t_values.size < 3:
        raise ValueError("need at least 3 probe times")
    n_values = tuple(config.t_max + off for off in config.n_offsets)
    n_max = max(n_values)
    if not (config.z2 <= config.z1 <= 1):
        raise ValueError("need z2 <= z1 <= 1")

    sup_tv = np.zeros((config.replicates, t_values.size))
    for rep in range(config.replicates):
        seed = derive_seed(config.seed, rep)
        path = simulate(model, n_max - config.z2 + 1, origin_offset=config.z2, seed=seed)
        for n in n_values:
            gamma1 = smoothing_matrix(model, path.window(config.z1, n), origin=config.z1)
            gamma2 = smoothing_matrix(model, path.window(config.z2, n), origin=config.z2)
            tv = np.abs(
                gamma1[t_values - config.z1] - gamma2[t_values - config.z2]
            ).sum(axis=1)
            np.maximum(sup_tv[rep], tv, out=sup_tv[rep])

    if not (sup_tv > 0.0).any():
        raise DegenerateDataError("all sampled distances are exactly zero")
    uncensored = sup_tv > _TV_FLOOR
    counts = uncensored.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.where(uncensored, np.log(np.where(uncensored, sup_tv, 1.0)), 0.0)
    keep = counts >= max(2, config.replicates // 2)
    if keep.sum() < 3:
        raise DegenerateDataError("too few probe times above the numerical floor to fit a slope")
    mean_log = logs.sum(axis=0)[keep] / counts[keep]
    ts = t_values[keep].astype(np.float64)

    x = ts - ts.mean()
    y = mean_log - mean_log.mean()
    sxx = float((x * x).sum())
    slope = float((x * y).sum() / sxx)
    resid = y - slope * x
    dof = max(ts.size - 2, 1)
    stderr = float(np.sqrt((resid * resid).sum() / dof / sxx))
    theory = (cluster.p_r / r) * math.log(cluster.rho)
    return DecayEstimate(
        t_values=t_values[keep],
        mean_log_tv=mean_log,
        counts=counts[keep],
        slope=slope,
        slope_stderr=stderr,
        theory_slope=theory,
        rho=cluster.rho,
        p_r=cluster.p_r,
        r=r,
        replicates=config.replicates,
    )


def reverse_model(model: HmmModel) -> HmmModel:
    """Time-reversed chain: P'(i, j) = pi(j) P(j, i) / pi(i), same emissions."""
    pi = model.stationary
    reversed_transition = model.transition.T * pi[None, :] / pi[:, None]
    name = f"{model.name}-reversed" if model.name else None
    return build_model(reversed_transition, model.emission, name=name)


def cluster_for_states(model: HmmModel, states: tuple[int, ...]) -> Cluster:
    """Verified cluster of `model` with the given state set."""
    for cluster in detect_clusters(model):
        if cluster.states == tuple(states):
            return verify_assumption_a(model, cluster)
    raise AssumptionAError(f"no cluster with states {states}")


@dataclass(frozen=True)
class TwoSidedSample:
    """Distance of a windowed smoothing vector from the wide-window proxy."""

    t: int
    z: int
    n: int
    half_width: int
    tv: float
    kappa_fwd: int
    kappa_rev: int
    cert_fwd: float
    cert_rev: float

    @property
    def proxy_error_bound(self) -> float:
        return self.cert_fwd + self.cert_rev


def two_sided_approximation(
    model: HmmModel,
    cluster: Cluster,
    path: SamplePath,
    t: int,
    z: int,
    n: int,
    half_width: int,
    reversed_model: HmmModel | None = None,
    reversed_cluster: Cluster | None = None,
) -> TwoSidedSample:
    """Compare a windowed smoothing vector with the widest available window.

    The wide window [t-w, t+w] stands in for the two-sided limit; its own
    error is certified by one block-count bound per time direction, the
    reverse direction using the reversed model's contraction constant.
    """
    if cluster.rho is None:
        raise AssumptionAError("cluster not verified; run verify_assumption_a first")
    w = half_width
    if not (t - w <= z <= t <= n <= t + w):
        raise ValueError("need [z, n] inside [t - w, t + w] with z <= t <= n")
    if reversed_model is None:
        reversed_model = reverse_model(model)
    if reversed_cluster is None:
        reversed_cluster = cluster_for_states(reversed_model, cluster.states)

    pi_win = smoothing_vector(model, path.window(z, n), t, origin=z)
    pi_wide = smoothing_vector(model, path.window(t - w, t + w), t, origin=t - w)
    tv = float(np.abs(pi_win.probs - pi_wide.probs).sum())

    kappa_fwd = kappa(path.window(t - w, t), cluster)
    kappa_rev = kappa(path.window(t, t + w)[::-1], reversed_cluster)
    cert_fwd = 2.0 * cluster.rho**kappa_fwd
    cert_rev = 2.0 * reversed_cluster.rho**kappa_rev
    return TwoSidedSample(
        t=t, z=z, n=n, half_width=w, tv=tv,
        kappa_fwd=kappa_fwd, kappa_rev=kappa_rev,
        cert_fwd=cert_fwd, cert_rev=cert_rev,
    )


def margin_threshold(
    forward_cluster: Cluster,
    reverse_cluster: Cluster,
    target: float = 1e-6,
    safety: float = 1.0,
) -> int:
    """Smallest window margin whose certified proxy error drops below target.

    Uses the expected block count safety * p_r * floor((m-2)/r) per
    direction; with full common support (p_r = 1) and safety 1 the count
    is deterministic and the threshold is a hard certificate.
    """
    for c in (forward_cluster, reverse_cluster):
        if c.rho is None or c.p_r is None:
            raise AssumptionAError("clusters must be verified first")
    if not 0 < safety <= 1:
        raise ValueError("safety must lie in (0, 1]")

    def cert(m: int) -> float:
        total = 0.0
        for c in (forward_cluster, reverse_cluster):
            blocks = (m - 2) // c.primitivity_exponent
            k = safety * c.p_r * blocks
            total += 2.0 * c.rho**k
        return total

    for m in range(2, 10**7):
        if cert(m) <= target:
            return m
    raise RuntimeError("no margin below 1e7 certifies the target (rho too close to 1)")


@dataclass(frozen=True)
class TwoSidedConfig:
    """Settings for the wide-window approximation experiment."""

    replicates: int = 1000
    margins: tuple[int, ...] = field(default=())
    width_factor: int = 10
    target: float = 1e-6
    safety: float = 1.0
    seed: int = 0


def run_two_sided_experiment(
    model: HmmModel, cluster: Cluster, config: TwoSidedConfig
) -> tuple[int, list[tuple[int, int, TwoSidedSample]]]:
    """Symmetric-margin sweep of windowed-versus-proxy distances.

    Returns the certified margin threshold and (replicate, seed, sample)
    triples for every margin in the grid (default: eight steps up to the
    threshold).
    """
    rev_model = reverse_model(model)
    rev_cluster = cluster_for_states(rev_model, cluster.states)
    threshold = margin_threshold(cluster, rev_cluster, target=config.target, safety=config.safety)
    margins = config.margins or tuple(
        sorted({max(1, round(threshold * i / 8)) for i in range(1, 9)})
    )
    w = config.width_factor * threshold
    t = w + 1
    rows = []
    for rep in range(config.replicates):
        seed = derive_seed(config.seed, rep)
        path = simulate(model, 2 * w + 1, origin_offset=t - w, seed=seed)
        for m in margins:
            sample = two_sided_approximation(
                model, cluster, path, t, t - m, t + m, w,
                reversed_model=rev_model, reversed_cluster=rev_cluster,
            )
            rows.append((rep, seed, sample))
    return threshold, rows
