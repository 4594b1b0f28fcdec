"""Finite-alphabet hidden Markov models.

Construction and validation of (transition, emission) pairs, stationary
distributions, path simulation, and the cluster analysis that drives the
contraction bounds: a cluster is a state subset whose emission supports
share observation symbols that no outside state can produce, so seeing
one of those symbols certifies the chain was inside the subset.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, replace

import numpy as np
from scipy.sparse import csgraph, csr_matrix

from . import kernels
from .exceptions import (
    AssumptionAError,
    ConfigParseError,
    ModelValidationError,
    NotPrimitiveError,
    PeriodicChainError,
    ReducibleChainError,
    RowSumError,
    StationaryConvergenceError,
)

ROW_SUM_TOL = 1e-9
STATIONARY_RESIDUAL = 1e-12
STATIONARY_MAX_ITER = 10**6

_RHO_FLOOR = np.finfo(float).tiny


@dataclass(frozen=True, eq=False)
class HmmModel:
    """Validated HMM with row-stochastic transition and emission matrices."""

    num_states: int
    num_symbols: int
    transition: np.ndarray
    emission: np.ndarray
    stationary: np.ndarray
    name: str | None = None

    def log_matrices(self):
        """(log transition, log emission, log stationary) with log 0 = -inf."""
        with np.errstate(divide="ignore"):
            return (
                np.log(self.transition),
                np.log(self.emission),
                np.log(self.stationary),
            )

    def cum_matrices(self):
        """Row-wise cumulative sums used by inverse-CDF sampling."""
        return (
            np.cumsum(self.transition, axis=1),
            np.cumsum(self.emission, axis=1),
            np.cumsum(self.stationary),
        )


@dataclass(frozen=True)
class Cluster:
    """Maximal state subset with an exclusive common-support symbol set.

    `states` is the subset C, `common_support` the symbols every state in
    C emits with positive probability and no outside state emits at all.
    `eps_lower` / `density_ceiling` bound the emission mass on that set
    from below / above. The primitivity exponent r, contraction constant
    rho, and block probability p_r are filled by verify_assumption_a.
    """

    states: tuple[int, ...]
    common_support: tuple[int, ...]
    eps_lower: float
    density_ceiling: float
    primitivity_exponent: int | None = None
    rho: float | None = None
    p_r: float | None = None


@dataclass(frozen=True, eq=False)
class SamplePath:
    """A simulated (states, observations) pair over an absolute time window."""

    states: np.ndarray
    observations: np.ndarray
    origin_offset: int
    seed: int

    def __len__(self) -> int:
        return len(self.observations)

    @property
    def end(self) -> int:
        return self.origin_offset + len(self.observations) - 1

    def index_of(self, t: int) -> int:
        if not self.origin_offset <= t <= self.end:
            raise IndexError(f"time {t} outside path window [{self.origin_offset}, {self.end}]")
        return t - self.origin_offset

    def window(self, u: int, v: int) -> np.ndarray:
        """Observations x_u..x_v (absolute times)."""
        if u > v:
            raise IndexError(f"empty window [{u}, {v}]")
        return self.observations[self.index_of(u) : self.index_of(v) + 1]

    def state_window(self, u: int, v: int) -> np.ndarray:
        if u > v:
            raise IndexError(f"empty window [{u}, {v}]")
        return self.states[self.index_of(u) : self.index_of(v) + 1]


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    arr.setflags(write=False)
    return arr


def _chain_period(adjacency: np.ndarray) -> int:
    # gcd of (level[u] + 1 - level[v]) over edges, with BFS levels from node 0;
    # valid for irreducible chains.
    K = adjacency.shape[0]
    level = np.full(K, -1, dtype=np.int64)
    level[0] = 0
    queue = [0]
    order = []
    while queue:
        u = queue.pop(0)
        order.append(u)
        for v in np.flatnonzero(adjacency[u]):
            if level[v] < 0:
                level[v] = level[u] + 1
                queue.append(int(v))
    g = 0
    for u in range(K):
        for v in np.flatnonzero(adjacency[u]):
            g = math.gcd(g, int(level[u] + 1 - level[v]))
    return g


def build_model(transition, emission, name: str | None = None) -> HmmModel:
    """Validate matrices and return a model with its stationary distribution.

    Rows must sum to 1 within 1e-9 (they are renormalized exactly); the
    transition matrix must be irreducible and aperiodic. The stationary
    distribution is computed by power iteration to an L1 residual below
    1e-12.
    """
    P = np.ascontiguousarray(transition, dtype=np.float64)
    F = np.ascontiguousarray(emission, dtype=np.float64)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] < 1:
        raise ModelValidationError(f"transition must be a square matrix, got shape {P.shape}")
    K = P.shape[0]
    if F.ndim != 2 or F.shape[0] != K or F.shape[1] < 1:
        raise ModelValidationError(
            f"emission must have {K} rows and at least one column, got shape {F.shape}"
        )
    if not np.isfinite(P).all() or not np.isfinite(F).all():
        raise ModelValidationError("matrices must be finite")
    if (P < 0).any() or (F < 0).any():
        raise ModelValidationError("matrices must be nonnegative")
    for label, mat in (("transition", P), ("emission", F)):
        sums = mat.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > ROW_SUM_TOL)
        if bad.size:
            i = int(bad[0])
            raise RowSumError(f"{label} row {i} sums to {sums[i]!r}, expected 1 within {ROW_SUM_TOL}")
    P = P / P.sum(axis=1, keepdims=True)
    F = F / F.sum(axis=1, keepdims=True)

    adjacency = P > 0
    n_comp, _ = csgraph.connected_components(csr_matrix(adjacency), directed=True, connection="strong")
    if n_comp != 1:
        raise ReducibleChainError(f"transition matrix has {n_comp} strongly connected components")
    if _chain_period(adjacency) != 1:
        raise PeriodicChainError("transition matrix is periodic")

    pi = np.full(K, 1.0 / K)
    for _ in range(STATIONARY_MAX_ITER):
        nxt = pi @ P
        nxt /= nxt.sum()
        if np.abs(nxt - pi).sum() < STATIONARY_RESIDUAL:
            pi = nxt
            break
        pi = nxt
    else:
        raise StationaryConvergenceError(
            f"power iteration did not reach residual {STATIONARY_RESIDUAL} "
            f"in {STATIONARY_MAX_ITER} iterations"
        )
    pi = pi / pi.sum()

    return HmmModel(
        num_states=K,
        num_symbols=F.shape[1],
        transition=_freeze(P),
        emission=_freeze(F),
        stationary=_freeze(pi),
        name=name,
    )


def load_model(path) -> HmmModel:
    """Read a model from a JSON document with `transition` and `emission`."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(
            f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(doc, dict):
        raise ConfigParseError(f"{path}: expected a JSON object")
    for key in ("transition", "emission"):
        if key not in doc:
            raise ConfigParseError(f"{path}: missing required field {key!r}")
    return build_model(doc["transition"], doc["emission"], name=doc.get("name"))


def save_model(model: HmmModel, path) -> None:
    doc = {
        "transition": model.transition.tolist(),
        "emission": model.emission.tolist(),
    }
    if model.name is not None:
        doc["name"] = model.name
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def detect_clusters(model: HmmModel) -> list[Cluster]:
    """All state subsets satisfying the cluster condition.

    Every cluster equals, for some symbol x, the set of states that emit x;
    checking those candidate sets covers the whole subset lattice. Returned
    clusters may overlap; the list is sorted by state tuple.
    """
    supports = model.emission > 0
    found: dict[tuple[int, ...], Cluster] = {}
    for x in range(model.num_symbols):
        members = np.flatnonzero(supports[:, x])
        if members.size == 0:
            continue
        states = tuple(int(i) for i in members)
        if states in found:
            continue
        common = supports[members].all(axis=0)
        outside = np.setdiff1d(np.arange(model.num_states), members)
        if outside.size and supports[np.ix_(outside, np.flatnonzero(common))].any():
            continue
        sub = model.emission[np.ix_(members, np.flatnonzero(common))]
        found[states] = Cluster(
            states=states,
            common_support=tuple(int(x) for x in np.flatnonzero(common)),
            eps_lower=float(sub.min()),
            density_ceiling=float(sub.max()),
        )
    return [found[key] for key in sorted(found)]


def _restricted_block(model: HmmModel, cluster: Cluster) -> np.ndarray:
    idx = np.asarray(cluster.states)
    return model.transition[np.ix_(idx, idx)]


def _primitivity_exponent(R: np.ndarray) -> int:
    # Wielandt: a primitive k x k matrix has a strictly positive power
    # with exponent at most (k-1)^2 + 1.
    k = R.shape[0]
    cutoff = (k - 1) ** 2 + 1
    base = (R > 0).astype(np.float64)
    cur = base.copy()
    for r in range(1, cutoff + 1):
        if (cur > 0).all():
            return r
        cur = cur @ base
    raise NotPrimitiveError(
        f"restricted transition block is not primitive (no strictly positive power up to {cutoff})"
    )


def _cluster_rho(model: HmmModel, cluster: Cluster, r: int) -> float:
    R = _restricted_block(model, cluster)
    Rr = np.linalg.matrix_power(R, r)
    ratio = Rr.min() / Rr.max()
    rho = 1.0 - ratio * (cluster.eps_lower / cluster.density_ceiling) ** r
    return float(max(rho, _RHO_FLOOR))


def verify_assumption_a(model: HmmModel, cluster: Cluster) -> Cluster:
    """Check primitivity of the restricted block and enrich the cluster.

    Fills the least exponent r with a strictly positive block power, the
    contraction constant rho, and the block probability p_r. Raises
    NotPrimitiveError when no power within the Wielandt cutoff works.
    """
    R = _restricted_block(model, cluster)
    r = _primitivity_exponent(R)
    rho = _cluster_rho(model, cluster, r)
    enriched = replace(cluster, primitivity_exponent=r, rho=rho)
    return replace(enriched, p_r=compute_p_r(model, enriched))


def compute_p_r(model: HmmModel, cluster: Cluster, r: int | None = None) -> float:
    """Probability that r consecutive observations all land in the common support.

    Exact dynamic program under stationarity: with g(i) the per-state mass
    on the common-support set, p_r = sum_i pi(i) g(i) (P diag(g))^(r-1) 1.
    """
    if r is None:
        r = cluster.primitivity_exponent
    if r is None:
        raise AssumptionAError("cluster has no primitivity exponent; run verify_assumption_a first")
    support = np.asarray(cluster.common_support, dtype=np.int64)
    g = model.emission[:, support].sum(axis=1)
    v = model.stationary * g
    for _ in range(r - 1):
        v = (v @ model.transition) * g
    return float(v.sum())


def assumption_a_clusters(model: HmmModel) -> list[Cluster]:
    """Clusters passing the primitivity check, enriched with r, rho, p_r."""
    out = []
    for cluster in detect_clusters(model):
        try:
            out.append(verify_assumption_a(model, cluster))
        except NotPrimitiveError:
            continue
    return out


def best_cluster(model: HmmModel) -> Cluster:
    """The verified cluster with the smallest contraction constant rho."""
    candidates = assumption_a_clusters(model)
    if not candidates:
        raise AssumptionAError("no cluster with a primitive restricted block exists")
    return min(candidates, key=lambda c: (c.rho, c.states))


def simulate(model: HmmModel, length: int, origin_offset: int = 1, seed: int | None = None) -> SamplePath:
    """Draw a stationary path of the given length starting at origin_offset.

    Uses numpy's PCG64 generator: `length` uniforms for the state chain
    followed by `length` uniforms for the emissions, mapped through
    inverse CDFs, so a fixed seed reproduces the path bit-for-bit on any
    backend.
    """
    if length < 1:
        raise ValueError("length must be >= 1")
    if seed is None:
        seed = int.from_bytes(os.urandom(8), "little")
    rng = np.random.default_rng(seed)
    u_state = rng.random(length)
    u_obs = rng.random(length)
    cum_P, cum_F, cum_pi = model.cum_matrices()
    states, observations = kernels.simulate_path(cum_P, cum_F, cum_pi, u_state, u_obs)
    return SamplePath(states=states, observations=observations, origin_offset=origin_offset, seed=seed)
