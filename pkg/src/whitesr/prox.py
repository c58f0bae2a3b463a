"""Regulariser catalogue, proximity maps and the CEL0 penalty.

Pair-valued maps act on arrays of shape (2, ...) where ``q[0]`` is the
horizontal and ``q[1]`` the vertical difference at each pixel. Every map
computes ``argmin_t G(t) + (beta/2)||t - q||^2``.
"""

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter
from scipy.optimize import brentq

REGULARIZERS = ("TIK", "TVI", "TVA", "WTV", "WL1", "WL1_NONNEG")


def _check_beta(beta):
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")


def _group_shrink(q, thresh, norm):
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(norm > 0, np.maximum(1.0 - thresh / norm, 0.0), 0.0)
    return scale * q


def prox_tvi(q, beta):
    """Isotropic TV: shrink each pair by ``max(1 - 1/(beta ||q||_2), 0)``."""
    _check_beta(beta)
    q = np.asarray(q, dtype=np.float64)
    return _group_shrink(q, 1.0 / beta, np.sqrt(q[0] ** 2 + q[1] ** 2))


def prox_tva(q, beta, mode="exact"):
    """Anisotropic TV.

    ``mode="exact"`` soft-thresholds each component (the true proximity map of
    the l1 pair norm); ``mode="paper"`` applies the pair shrinkage with the l1
    norm in the denominator, kept for reproduction studies.
    """
    _check_beta(beta)
    q = np.asarray(q, dtype=np.float64)
    if mode == "exact":
        return np.sign(q) * np.maximum(np.abs(q) - 1.0 / beta, 0.0)
    if mode == "paper":
        return _group_shrink(q, 1.0 / beta, np.abs(q[0]) + np.abs(q[1]))
    raise ValueError(f"unknown mode {mode!r}")


def prox_wtv(q, beta, alpha):
    """Weighted isotropic TV with per-pixel weights ``alpha > 0``."""
    _check_beta(beta)
    alpha = np.asarray(alpha, dtype=np.float64)
    if np.any(alpha <= 0):
        raise ValueError("WTV weights must be strictly positive")
    q = np.asarray(q, dtype=np.float64)
    return _group_shrink(q, alpha / beta, np.sqrt(q[0] ** 2 + q[1] ** 2))


def prox_wl1(q, beta, w):
    """Weighted l1: ``sign(q) max(|q| - w/beta, 0)``."""
    _check_beta(beta)
    w = np.asarray(w, dtype=np.float64)
    if np.any(w <= 0):
        raise ValueError("WL1 weights must be strictly positive")
    q = np.asarray(q, dtype=np.float64)
    return np.sign(q) * np.maximum(np.abs(q) - w / beta, 0.0)


def prox_wl1_nonneg(q, beta, w, mode="exact"):
    """Weighted l1 plus the nonnegativity indicator.

    ``mode="exact"``: ``max(q - w/beta, 0)``. ``mode="paper"``:
    ``max(|q| - w/beta, 0)``, which maps large negative inputs to positive
    values and is therefore not the proximity map of the stated function.
    """
    _check_beta(beta)
    w = np.asarray(w, dtype=np.float64)
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    q = np.asarray(q, dtype=np.float64)
    if mode == "exact":
        return np.maximum(q - w / beta, 0.0)
    if mode == "paper":
        return np.maximum(np.abs(q) - w / beta, 0.0)
    raise ValueError(f"unknown mode {mode!r}")


def prox_tik(q, beta):
    """G(t) = ||t||^2: plain scaling by ``beta/(beta + 2)``."""
    _check_beta(beta)
    return np.asarray(q, dtype=np.float64) * (beta / (beta + 2.0))


@dataclass
class RegularizerKind:
    """A regulariser tag plus optional per-pixel weights (alpha for WTV, w for WL1 variants)."""

    tag: str
    weights: np.ndarray = None
    mode: str = "exact"

    def __post_init__(self):
        self.tag = self.tag.upper()
        if self.tag not in REGULARIZERS:
            raise ValueError(f"unknown regulariser {self.tag!r}")
        if self.weights is not None:
            self.weights = np.asarray(self.weights, dtype=np.float64)
            if self.tag == "WL1_NONNEG":
                if np.any(self.weights < 0):
                    raise ValueError("weights must be nonnegative")
            elif np.any(self.weights <= 0):
                raise ValueError("weights must be strictly positive")

    @property
    def operator_kind(self):
        return "identity" if self.tag.startswith("WL1") else "gradient"

    def _w(self, shape):
        return np.ones(shape) if self.weights is None else self.weights

    def prox(self, q, beta):
        if self.tag == "TIK":
            return prox_tik(q, beta)
        if self.tag == "TVI":
            return prox_tvi(q, beta)
        if self.tag == "TVA":
            return prox_tva(q, beta, self.mode)
        if self.tag == "WTV":
            return prox_wtv(q, beta, self._w(q.shape[1:]))
        if self.tag == "WL1":
            return prox_wl1(q, beta, self._w(q.shape))
        return prox_wl1_nonneg(q, beta, self._w(q.shape), self.mode)

    def value(self, t):
        """G(t) for a stacked t of shape (s, rows, cols)."""
        t = np.asarray(t, dtype=np.float64)
        if self.tag == "TIK":
            return float(np.sum(t**2))
        if self.tag == "TVI":
            return float(np.sum(np.sqrt(t[0] ** 2 + t[1] ** 2)))
        if self.tag == "TVA":
            return float(np.sum(np.abs(t)))
        if self.tag == "WTV":
            return float(np.sum(self._w(t.shape[1:]) * np.sqrt(t[0] ** 2 + t[1] ** 2)))
        if self.tag == "WL1_NONNEG" and np.any(t < 0):
            return np.inf
        return float(np.sum(self._w(t.shape) * np.abs(t)))


@dataclass(frozen=True)
class Cel0Params:
    mu: float
    col_norms: np.ndarray

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if np.any(np.asarray(self.col_norms) <= 0):
            raise ValueError("column norms must be strictly positive")

    @property
    def threshold(self):
        """|x| beyond which the penalty saturates at 1."""
        return np.sqrt(2.0 / self.mu) / np.asarray(self.col_norms, dtype=np.float64)


def cel0_phi(x, params):
    """Per-pixel CEL0 penalty values."""
    a = np.asarray(params.col_norms, dtype=np.float64)
    ax = np.abs(np.asarray(x, dtype=np.float64))
    thr = params.threshold
    inside = ax <= thr
    return 1.0 - 0.5 * params.mu * a**2 * np.where(inside, ax - thr, 0.0) ** 2


def cel0_penalty(x, params):
    return float(np.sum(cel0_phi(x, params)))


def cel0_weights(x, params):
    """Derivative of the CEL0 penalty in |x|: the IRL1 weights, zero past the threshold."""
    a = np.asarray(params.col_norms, dtype=np.float64)
    ax = np.abs(np.asarray(x, dtype=np.float64))
    w = params.mu * (np.sqrt(2.0 / params.mu) * a - a**2 * ax)
    return np.where(ax <= params.threshold, np.maximum(w, 0.0), 0.0)


class SmoothedGradientWeights:
    """Default WTV weight rule ``alpha = 1/(1 + kappa g)``.

    ``g`` is the Gaussian-smoothed (std ``smoothing`` px, periodic) gradient
    magnitude of the current iterate. When ``kappa`` is None it is calibrated
    on the first call so that the mean weight equals ``target_mean``.
    """

    def __init__(self, kappa=None, smoothing=1.0, target_mean=0.5):
        self.kappa = kappa
        self.smoothing = smoothing
        self.target_mean = target_mean

    def magnitude(self, x):
        x = np.asarray(x, dtype=np.float64)
        gh = np.roll(x, -1, axis=1) - x
        gv = np.roll(x, -1, axis=0) - x
        g = gaussian_filter(np.sqrt(gh**2 + gv**2), self.smoothing, mode="wrap")
        return np.maximum(g, 0.0)

    def calibrate(self, g):
        if not np.any(g > 0):
            return 0.0
        f = lambda k: np.mean(1.0 / (1.0 + k * g)) - self.target_mean  # noqa: E731
        hi = 1.0 / float(np.max(g))
        while f(hi) > 0:
            hi *= 2.0
            if hi > 1e300:
                # too few nonzero gradients to reach the target mean
                return hi
        return brentq(f, 0.0, hi, xtol=1e-14, rtol=1e-12)

    def __call__(self, x):
        g = self.magnitude(x)
        if self.kappa is None:
            self.kappa = self.calibrate(g)
        return 1.0 / (1.0 + self.kappa * g)


def wtv_alpha_update(x_current, strategy=None):
    """Per-pixel WTV weights from the current iterate using ``strategy`` (default rule if None)."""
    strategy = SmoothedGradientWeights() if strategy is None else strategy
    return strategy(x_current)
