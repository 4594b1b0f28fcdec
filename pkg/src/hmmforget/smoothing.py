"""Posterior (smoothing) computations over observation windows.

Forward and backward variables are stored max-norm scaled with accumulated
log scale factors, so that ratios of raw values at adjacent times, which
the conditional transition matrices need, stay exactly representable even
on windows far too long for unscaled recursions.

Time indices are absolute: a window (u, v) of observations may start at
any integer, matching sample paths whose origin is not 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .exceptions import DimensionMismatchError, ZeroLikelihoodError
from .model import HmmModel

SIMPLEX_TOL = 1e-10

# Fraction of probability mass a propagated vector may lose to zero rows
# before the product is considered degenerate.
_MASS_LOSS_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class SmoothingVector:
    """Posterior law of the hidden state at time t given a window of observations."""

    t: int
    window: tuple[int, int]
    probs: np.ndarray

    def __post_init__(self):
        u, v = self.window
        if not u <= self.t <= v:
            raise DimensionMismatchError(f"time {self.t} outside window [{u}, {v}]")
        s = self.probs.sum()
        if (self.probs < -SIMPLEX_TOL).any() or abs(s - 1.0) > SIMPLEX_TOL:
            raise ValueError(f"not a probability vector (sum={s!r})")


@dataclass(frozen=True, eq=False)
class ScaledForwardTable:
    """Max-norm scaled forward variables for one observation window.

    Row t - origin is proportional to the joint density of (x_u..x_t, Y_t),
    with the true value equal to vectors[i] * exp(log_scales[i]).
    """

    origin: int
    vectors: np.ndarray
    log_scales: np.ndarray

    def __len__(self) -> int:
        return len(self.log_scales)

    @property
    def end(self) -> int:
        return self.origin + len(self.log_scales) - 1

    def row(self, t: int) -> np.ndarray:
        return self.vectors[t - self.origin]

    def scale(self, t: int) -> float:
        return float(self.log_scales[t - self.origin])


@dataclass(frozen=True, eq=False)
class ScaledBackwardTable:
    """Max-norm scaled backward variables for one observation window.

    Row t - origin is proportional to the conditional density of
    x_{t+1}..x_v given Y_t (all-ones at t = v); rows that are exactly zero
    mark states from which the remaining observations are impossible.
    """

    origin: int
    vectors: np.ndarray
    log_scales: np.ndarray

    def __len__(self) -> int:
        return len(self.log_scales)

    @property
    def end(self) -> int:
        return self.origin + len(self.log_scales) - 1

    def row(self, t: int) -> np.ndarray:
        return self.vectors[t - self.origin]

    def scale(self, t: int) -> float:
        return float(self.log_scales[t - self.origin])


@dataclass(frozen=True, eq=False)
class ForwardSmoothingMatrix:
    """One-step transition of the hidden chain conditioned on future observations.

    Rows are stochastic except for states from which the remaining window
    is impossible; those rows are identically zero and listed in zero_rows.
    """

    k: int
    matrix: np.ndarray
    zero_rows: frozenset[int]


def _check_obs(model: HmmModel, obs) -> np.ndarray:
    arr = np.ascontiguousarray(obs, dtype=np.int64)
    if arr.ndim != 1 or arr.size < 1:
        raise DimensionMismatchError("observations must be a nonempty 1-d sequence")
    if (arr < 0).any() or (arr >= model.num_symbols).any():
        raise ValueError(f"observation symbols must lie in [0, {model.num_symbols})")
    return arr


def backward_table(model: HmmModel, obs, origin: int = 1) -> ScaledBackwardTable:
    obs = _check_obs(model, obs)
    vectors, log_scales = kernels.backward_pass(model.transition, model.emission, obs)
    return ScaledBackwardTable(origin=origin, vectors=vectors, log_scales=log_scales)


def forward_table(model: HmmModel, obs, origin: int = 1) -> ScaledForwardTable:
    obs = _check_obs(model, obs)
    vectors, log_scales = kernels.forward_pass(
        model.transition, model.emission, model.stationary, obs
    )
    return ScaledForwardTable(origin=origin, vectors=vectors, log_scales=log_scales)


def log_likelihood(model: HmmModel, obs, forward: ScaledForwardTable | None = None) -> float:
    """log p(x_u..x_v); -inf when the window is impossible under the model."""
    fwd = forward if forward is not None else forward_table(model, obs)
    last = fwd.vectors[-1]
    scale = fwd.log_scales[-1]
    total = last.sum()
    if not np.isfinite(scale) or total <= 0.0:
        return float("-inf")
    return float(scale + np.log(total))


def smoothing_vector(
    model: HmmModel,
    obs,
    t: int,
    origin: int = 1,
    forward: ScaledForwardTable | None = None,
    backward: ScaledBackwardTable | None = None,
) -> SmoothingVector:
    """Posterior of the hidden state at absolute time t given the window.

    Raises ZeroLikelihoodError when the window has zero likelihood.
    """
    obs = _check_obs(model, obs)
    v = origin + len(obs) - 1
    if not origin <= t <= v:
        raise DimensionMismatchError(f"time {t} outside window [{origin}, {v}]")
    fwd = forward if forward is not None else forward_table(model, obs, origin)
    bwd = backward if backward is not None else backward_table(model, obs, origin)
    raw = fwd.row(t) * bwd.row(t)
    total = raw.sum()
    if total <= 0.0:
        raise ZeroLikelihoodError(f"window [{origin}, {v}] has zero likelihood")
    return SmoothingVector(t=t, window=(origin, v), probs=raw / total)


def smoothing_matrix(model: HmmModel, obs, origin: int = 1) -> np.ndarray:
    """Posterior at every time of the window, one row per time index."""
    obs = _check_obs(model, obs)
    fwd = forward_table(model, obs, origin)
    bwd = backward_table(model, obs, origin)
    raw = fwd.vectors * bwd.vectors
    totals = raw.sum(axis=1)
    if (totals <= 0.0).any():
        raise ZeroLikelihoodError(
            f"window [{origin}, {origin + len(obs) - 1}] has zero likelihood"
        )
    return raw / totals[:, None]


def forward_smoothing_matrix(
    model: HmmModel,
    obs,
    k: int,
    origin: int = 1,
    backward: ScaledBackwardTable | None = None,
) -> ForwardSmoothingMatrix:
    """Conditional transition from Y_k to Y_{k+1} given observations after k.

    Row i is the one-step law of Y_{k+1} given Y_k = i and x_{k+1}..x_v;
    scale factors cancel because each row is normalized by its own sum,
    which equals the raw backward variable at (k, i). Rows with a zero
    backward variable are set identically to zero.
    """
    obs = _check_obs(model, obs)
    v = origin + len(obs) - 1
    if not origin <= k <= v - 1:
        raise DimensionMismatchError(f"matrix index {k} outside [{origin}, {v - 1}]")
    bwd = backward if backward is not None else backward_table(model, obs, origin)
    nxt = model.emission[:, obs[k + 1 - origin]] * bwd.row(k + 1)
    raw = model.transition * nxt[None, :]
    sums = raw.sum(axis=1)
    zero = sums <= 0.0
    out = np.zeros_like(raw)
    if (~zero).any():
        out[~zero] = raw[~zero] / sums[~zero, None]
    return ForwardSmoothingMatrix(
        k=k, matrix=out, zero_rows=frozenset(int(i) for i in np.flatnonzero(zero))
    )


def forward_smoothing_matrices(
    model: HmmModel, obs, origin: int = 1, start: int | None = None, stop: int | None = None
) -> list[ForwardSmoothingMatrix]:
    """Matrices F_k for k = start..stop (defaults: whole window)."""
    obs = _check_obs(model, obs)
    v = origin + len(obs) - 1
    start = origin if start is None else start
    stop = v - 1 if stop is None else stop
    bwd = backward_table(model, obs, origin)
    return [
        forward_smoothing_matrix(model, obs, k, origin=origin, backward=bwd)
        for k in range(start, stop + 1)
    ]


def propagate(pi_z: SmoothingVector, matrices: Sequence[ForwardSmoothingMatrix]) -> SmoothingVector:
    """Push a smoothing vector forward through consecutive conditional transitions.

    The matrices must be contiguous in k starting at pi_z.t; an empty
    sequence returns pi_z unchanged. Zero rows absorb mass; if more than a
    negligible fraction is lost the inputs were inconsistent (the source
    vector was not the smoothing vector of the same window) and a
    ZeroLikelihoodError is raised.
    """
    probs = np.array(pi_z.probs, dtype=np.float64)
    t = pi_z.t
    for F in matrices:
        if F.k != t:
            raise DimensionMismatchError(f"expected matrix at k={t}, got k={F.k}")
        if F.matrix.shape != (probs.size, probs.size):
            raise DimensionMismatchError(
                f"matrix at k={F.k} has shape {F.matrix.shape}, expected {(probs.size, probs.size)}"
            )
        probs = probs @ F.matrix
        t += 1
    total = probs.sum()
    if total < 1.0 - _MASS_LOSS_TOL:
        raise ZeroLikelihoodError(
            f"propagation lost {1.0 - total:.3g} probability mass to zero rows"
        )
    return SmoothingVector(t=t, window=pi_z.window, probs=probs / total)
