"""Shared test models."""

import numpy as np

from hmmforget import build_model


def two_state():
    """Positive transition entries, full-support informative emissions."""
    return build_model(
        [[0.9, 0.1], [0.2, 0.8]],
        [[0.75, 0.25], [0.25, 0.75]],
        name="two-state",
    )


def partial_overlap():
    """Two states whose emission supports overlap on a single symbol."""
    return build_model(
        [[0.9, 0.1], [0.2, 0.8]],
        [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5]],
        name="partial-overlap",
    )


def zero_transition():
    """A zero transition entry; single whole-state-space cluster with r = 2."""
    return build_model(
        [[0.0, 0.6, 0.4], [0.5, 0.3, 0.2], [0.5, 0.2, 0.3]],
        [[0.8, 0.2, 0.0], [0.1, 0.8, 0.1], [0.0, 0.2, 0.8]],
        name="zero-transition",
    )


def disjoint_support():
    """One-hot emissions: every observation exposes the state."""
    return build_model(
        [[0.9, 0.1], [0.2, 0.8]],
        [[1.0, 0.0], [0.0, 1.0]],
        name="disjoint-support",
    )


def uniform_emission():
    """Uninformative emissions; the posterior is the stationary law everywhere."""
    return build_model(
        [[0.7, 0.3], [0.4, 0.6]],
        [[0.5, 0.5], [0.5, 0.5]],
        name="uniform-emission",
    )


def weak_two_state():
    """Reversible symmetric chain with weakly informative emissions."""
    return build_model(
        [[0.6, 0.4], [0.4, 0.6]],
        [[0.6, 0.4], [0.4, 0.6]],
        name="weak-two-state",
    )


def three_state_informative():
    """Generic three-state model used for risk-convergence checks."""
    return build_model(
        [[0.8, 0.15, 0.05], [0.1, 0.8, 0.1], [0.05, 0.15, 0.8]],
        [[0.7, 0.2, 0.1], [0.15, 0.7, 0.15], [0.1, 0.2, 0.7]],
        name="three-state",
    )


def random_model(rng, K=None, M=None, zero_emission=False):
    """Random positive-transition model; optionally zero out one emission entry."""
    K = K if K is not None else int(rng.integers(2, 5))
    M = M if M is not None else int(rng.integers(2, 5))
    P = rng.gamma(1.0, 1.0, size=(K, K)) + 0.05
    P /= P.sum(axis=1, keepdims=True)
    F = rng.gamma(1.0, 1.0, size=(K, M)) + 0.05
    if zero_emission and M >= 2:
        F[int(rng.integers(0, K)), int(rng.integers(0, M))] = 0.0
    F /= F.sum(axis=1, keepdims=True)
    return build_model(P, F)


def random_simplex(rng, size):
    v = rng.gamma(1.0, 1.0, size=size) + 1e-12
    return v / v.sum(axis=-1, keepdims=True)
