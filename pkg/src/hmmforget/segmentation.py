"""Minimum-risk segmentation of hidden state sequences.

Pointwise conditional risks, the per-symbol minimum-risk (posterior mode
under 0/1 loss) classifier, Viterbi decoding as the reference, and the
Monte-Carlo estimator of the asymptotic per-symbol risks.
"""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .exceptions import LengthMismatchError, ZeroLikelihoodError
from .model import HmmModel, best_cluster, simulate
from .seeding import derive_seed
from .smoothing import smoothing_matrix, smoothing_vector


def zero_one_loss(num_states: int) -> np.ndarray:
    """The misclassification-count loss: 1 off the diagonal, 0 on it."""
    return 1.0 - np.eye(num_states)


def validate_loss(loss, num_states: int) -> np.ndarray:
    """Check a loss matrix: square, nonnegative, finite; warns on a nonzero diagonal."""
    L = np.asarray(loss, dtype=np.float64)
    if L.shape != (num_states, num_states):
        raise ValueError(f"loss must be {num_states}x{num_states}, got {L.shape}")
    if not np.isfinite(L).all() or (L < 0).any():
        raise ValueError("loss entries must be finite and nonnegative")
    if np.diag(L).any():
        warnings.warn("loss matrix has nonzero diagonal entries", stacklevel=2)
    return L


@dataclass(frozen=True, eq=False)
class RiskReport:
    """Risks of the minimum-risk labeling and the Viterbi reference on one window."""

    min_pointwise: np.ndarray
    labels: np.ndarray
    total_risk: float
    viterbi_path: np.ndarray
    viterbi_risk: float
    length: int
    seed: int | None = None


def pointwise_risk(model: HmmModel, obs, t: int, s: int, loss, origin: int = 1) -> float:
    """Expected loss of labeling time t with state s, given the whole window."""
    loss = validate_loss(loss, model.num_states)
    pi_t = smoothing_vector(model, obs, t, origin=origin)
    return float(loss[:, s] @ pi_t.probs)


def sequence_loss(truth, labels, loss) -> float:
    """Mean pointwise loss between two equal-length state sequences."""
    a = np.asarray(truth, dtype=np.int64)
    b = np.asarray(labels, dtype=np.int64)
    if a.shape != b.shape:
        raise LengthMismatchError(f"sequence lengths differ: {a.shape} vs {b.shape}")
    L = np.asarray(loss, dtype=np.float64)
    return float(L[a, b].mean())


def viterbi(model: HmmModel, obs) -> np.ndarray:
    """Most probable state path; ties go to the lowest state index."""
    obs = np.ascontiguousarray(obs, dtype=np.int64)
    log_P, log_F, log_pi = model.log_matrices()
    path, best = kernels.viterbi_path(log_P, log_F, log_pi, obs)
    if best == float("-inf"):
        raise ZeroLikelihoodError("observation window has zero likelihood")
    return path


def pmap_classify(
    model: HmmModel, obs, loss=None, seed: int | None = None
) -> tuple[np.ndarray, RiskReport]:
    """Per-symbol minimum-risk labeling plus a report with the Viterbi reference.

    The total risk is the exact minimum over all state sequences because
    the sequence risk is an average of per-symbol risks; ties at the
    per-symbol argmin go to the lowest state index.
    """
    loss = zero_one_loss(model.num_states) if loss is None else validate_loss(loss, model.num_states)
    gamma = smoothing_matrix(model, obs)
    risks = gamma @ loss
    labels = np.argmin(risks, axis=1)
    idx = np.arange(len(labels))
    min_pointwise = risks[idx, labels]
    vit = viterbi(model, obs)
    report = RiskReport(
        min_pointwise=min_pointwise,
        labels=labels,
        total_risk=float(min_pointwise.mean()),
        viterbi_path=vit,
        viterbi_risk=float(risks[idx, vit].mean()),
        length=len(labels),
        seed=seed,
    )
    return labels, report


@dataclass(frozen=True)
class RiskConfig:
    """Grid of sequence lengths and replicate counts for risk estimation."""

    lengths: tuple[int, ...] = (2**10, 2**12, 2**14, 2**16)
    replicates: int = 64
    seed: int = 0


@dataclass(frozen=True)
class RiskRow:
    n: int
    replicate: int
    seed: int
    pmap_risk: float
    viterbi_risk: float


@dataclass(frozen=True, eq=False)
class RiskTable:
    """Per-replicate risks with per-length aggregates and final estimates."""

    rows: tuple[RiskRow, ...]
    lengths: tuple[int, ...]
    replicates: int

    def per_length(self) -> dict[int, dict[str, float]]:
        out = {}
        for n in self.lengths:
            pm = np.array([r.pmap_risk for r in self.rows if r.n == n])
            vt = np.array([r.viterbi_risk for r in self.rows if r.n == n])
            out[n] = {
                "mean": float(pm.mean()),
                "stderr": float(pm.std(ddof=1) / np.sqrt(pm.size)) if pm.size > 1 else 0.0,
                "variance": float(pm.var(ddof=1)) if pm.size > 1 else 0.0,
                "viterbi_mean": float(vt.mean()),
                "viterbi_stderr": float(vt.std(ddof=1) / np.sqrt(vt.size)) if vt.size > 1 else 0.0,
            }
        return out

    def successive_differences(self) -> list[dict[str, float]]:
        per = self.per_length()
        return [
            {
                "n_small": float(a),
                "n_large": float(b),
                "abs_mean_difference": abs(per[a]["mean"] - per[b]["mean"]),
            }
            for a, b in zip(self.lengths, self.lengths[1:])
        ]

    def final_estimates(self) -> dict[str, float]:
        per = self.per_length()[self.lengths[-1]]
        return {
            "n": float(self.lengths[-1]),
            "risk": per["mean"],
            "risk_stderr": per["stderr"],
            "risk_ci95_halfwidth": 1.96 * per["stderr"],
            "viterbi_risk": per["viterbi_mean"],
            "viterbi_risk_stderr": per["viterbi_stderr"],
            "viterbi_risk_ci95_halfwidth": 1.96 * per["viterbi_stderr"],
        }

    def to_json_dict(self) -> dict:
        return {
            "per_length": {str(n): agg for n, agg in self.per_length().items()},
            "successive_differences": self.successive_differences(),
            "final": self.final_estimates(),
            "replicates": self.replicates,
        }


def _risk_replicate(args) -> RiskRow:
    model, loss, n, rep, seed = args
    path = simulate(model, n, seed=seed)
    _, report = pmap_classify(model, path.observations, loss=loss, seed=seed)
    return RiskRow(
        n=n, replicate=rep, seed=seed,
        pmap_risk=report.total_risk, viterbi_risk=report.viterbi_risk,
    )


def _worker_count() -> int:
    raw = os.environ.get("HMMFORGET_THREADS", "1")
    try:
        return max(int(raw), 1)
    except ValueError:
        return 1


def asymptotic_risk_estimate(model: HmmModel, loss, config: RiskConfig) -> RiskTable:
    """Monte-Carlo estimate of the limiting per-symbol risks.

    Simulates paths of increasing length, classifies each with the
    minimum-risk rule, and aggregates per-length means and standard
    errors; the largest length's mean is the estimate. Requires a cluster
    with a primitive restricted block so the risks actually converge.
    """
    loss = zero_one_loss(model.num_states) if loss is None else validate_loss(loss, model.num_states)
    best_cluster(model)  # raises AssumptionAError when the limit theorem does not apply
    tasks = []
    for n in config.lengths:
        seed_n = derive_seed(config.seed, n)
        for rep in range(config.replicates):
            tasks.append((model, loss, n, rep, derive_seed(seed_n, rep)))
    workers = _worker_count()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_risk_replicate, tasks, chunksize=4))
    else:
        rows = [_risk_replicate(t) for t in tasks]
    return RiskTable(rows=tuple(rows), lengths=tuple(config.lengths), replicates=config.replicates)
