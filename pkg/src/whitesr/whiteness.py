"""Residual whiteness: autocorrelation, the whiteness measure W and its minimisation.

W is computed in its frequency form ``sum |e~|^4 / (sum |e~|^2)^2`` over the
LR frequencies. With the unnormalised DFT the definition form
``||e * e||^2 / ||e||^4`` equals ``n`` times this value; the factor does not
move any argmin.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .grid import as_image
from .spectral import residual_norm_of_mu, residual_terms

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class WhitenessError(ArithmeticError):
    """Raised when W is undefined (all-zero residual) or not finite anywhere on a bracket."""


class UnattainableTarget(ValueError):
    """Raised when the discrepancy target lies outside the attainable residual range."""

    def __init__(self, target, low, high):
        super().__init__(
            f"discrepancy target {target:.6g} outside attainable residual range [{low:.6g}, {high:.6g}]"
        )
        self.target = target
        self.interval = (low, high)


def sample_autocorrelation(e):
    """Circular sample autocorrelation ``a[l, m] = (1/n) sum e[i,j] e[i+l, j+m]`` at lags l, m >= 0."""
    e = as_image(e)
    e_hat = np.fft.fft2(e)
    return np.fft.ifft2(np.abs(e_hat) ** 2).real / e.size


def spectral_whiteness(power):
    """sum p^2 / (sum p)^2 for a nonnegative power spectrum ``p = |e~|^2``."""
    power = np.asarray(power, dtype=np.float64)
    total = float(np.sum(power))
    if not total > 0 or not np.isfinite(total):
        raise WhitenessError("whiteness undefined for an all-zero residual")
    # scale first so the fourth powers stay in range
    p = power / total
    return float(np.sum(p * p))


def whiteness_of_image(e):
    """Frequency-form whiteness of an image; ``1/n`` for a flat spectrum, 1 for a constant."""
    e = as_image(e)
    return spectral_whiteness(np.abs(np.fft.fft2(e)) ** 2)


def whiteness_of_mu(cache, nu, mu):
    """Closed-form W(mu) of the LR residual of the l2-l2 problem defined by ``(cache, nu)``."""
    t = residual_terms(cache, nu, mu)
    return spectral_whiteness(np.abs(t) ** 2)


def whiteness_curve_values(cache, nu, mus):
    """Vectorised W over an array of mu values."""
    mus = np.asarray(mus, dtype=np.float64)
    diff2 = np.abs(nu - cache.rho) ** 2
    if not np.any(diff2 > 0):
        raise WhitenessError("whiteness undefined: residual spectrum vanishes for every mu")
    p = diff2[None, :] / (1.0 + cache.eta[None, :] * mus[:, None]) ** 2
    p = p / p.sum(axis=1, keepdims=True)
    return np.sum(p * p, axis=1)


@dataclass
class WhitenessMinimum:
    mu: float
    value: float
    boundary: bool
    bracket: tuple
    grid_mus: np.ndarray = field(repr=False, default=None)
    grid_values: np.ndarray = field(repr=False, default=None)


def _golden_section(f, lo, hi, rtol):
    """Minimise f(mu) on [lo, hi] by golden section in log(mu)."""
    a, b = math.log(lo), math.log(hi)
    c = b - GOLDEN * (b - a)
    e = a + GOLDEN * (b - a)
    fc, fe = f(math.exp(c)), f(math.exp(e))
    # log-width below log1p(rtol) means relative bracket width below rtol
    while b - a > math.log1p(rtol):
        if fc <= fe:
            b, e, fe = e, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(math.exp(c))
        else:
            a, c, fc = c, e, fe
            e = a + GOLDEN * (b - a)
            fe = f(math.exp(e))
    return (math.exp(c), fc) if fc <= fe else (math.exp(e), fe)


def minimize_scalar_log(f, bracket, grid_points=60, rtol=1e-6, vectorised=None):
    """Coarse log grid followed by golden-section refinement around the grid argmin.

    Ties on the grid go to the smallest mu. Returns a :class:`WhitenessMinimum`.
    """
    lo, hi = (float(b) for b in bracket)
    if not (0 < lo < hi):
        raise ValueError(f"need 0 < lo < hi, got {bracket}")
    mus = np.geomspace(lo, hi, grid_points)
    values = vectorised(mus) if vectorised is not None else np.array([f(m) for m in mus])
    values = np.where(np.isfinite(values), values, np.inf)
    if not np.any(np.isfinite(values)):
        raise WhitenessError(f"objective not finite anywhere on [{lo:g}, {hi:g}]")
    k = int(np.argmin(values))  # first occurrence: smallest mu
    if k == 0 or k == grid_points - 1:
        return WhitenessMinimum(float(mus[k]), float(values[k]), True, (lo, hi), mus, values)
    mu, val = _golden_section(f, mus[k - 1], mus[k + 1], rtol)
    if val > values[k]:
        mu, val = float(mus[k]), float(values[k])
    return WhitenessMinimum(float(mu), float(val), False, (lo, hi), mus, values)


@dataclass(frozen=True)
class SelectionConfig:
    """Search settings for the mu selection.

    ``rtol`` is the relative bracket width at which golden-section stops.
    """

    bracket: tuple = (1e-4, 1e4)
    grid_points: int = 60
    rtol: float = 1e-6
    dp_bracket: tuple = (1e-10, 1e10)
    dp_tol: float = 1e-6


def minimize_whiteness(cache, nu, bracket=None, config=SelectionConfig()):
    """RWP: mu* = argmin W(mu) on ``bracket`` (default ``config.bracket``)."""
    bracket = config.bracket if bracket is None else bracket
    return minimize_scalar_log(
        lambda m: whiteness_of_mu(cache, nu, m),
        bracket,
        grid_points=config.grid_points,
        rtol=config.rtol,
        vectorised=lambda ms: whiteness_curve_values(cache, nu, ms),
    )


def tau_star(residual_norm, n, sigma):
    """||r||_2 / (sqrt(n) sigma)."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    return float(residual_norm) / (math.sqrt(n) * sigma)


def solve_dp_mu(cache, nu, sigma, tau=1.0, config=SelectionConfig()):
    """Discrepancy principle: mu with ||r(mu)|| = tau sqrt(n) sigma, by log-bisection.

    Raises :class:`UnattainableTarget` when the target is outside the residual
    range over ``config.dp_bracket``.
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    n = cache.groups.n
    target = tau * math.sqrt(n) * sigma
    lo, hi = (math.log(b) for b in config.dp_bracket)
    r_lo = residual_norm_of_mu(cache, nu, math.exp(lo))
    r_hi = residual_norm_of_mu(cache, nu, math.exp(hi))
    if not (r_hi <= target <= r_lo):
        raise UnattainableTarget(target, r_hi, r_lo)
    # residual norm is nonincreasing in mu
    while hi - lo > config.dp_tol:
        mid = 0.5 * (lo + hi)
        if residual_norm_of_mu(cache, nu, math.exp(mid)) > target:
            lo = mid
        else:
            hi = mid
    return math.exp(0.5 * (lo + hi))


@dataclass
class WhitenessCurve:
    mus: np.ndarray
    W_values: np.ndarray
    tau_values: np.ndarray = None

    def __post_init__(self):
        self.mus = np.asarray(self.mus, dtype=np.float64)
        self.W_values = np.asarray(self.W_values, dtype=np.float64)
        if self.mus.shape != self.W_values.shape:
            raise ValueError("mus and W_values must have the same length")
        if self.tau_values is not None:
            self.tau_values = np.asarray(self.tau_values, dtype=np.float64)
            if self.tau_values.shape != self.mus.shape:
                raise ValueError("tau_values must match mus")

    def argmin(self):
        return float(self.mus[int(np.argmin(self.W_values))])

    def write_csv(self, path):
        taus = self.tau_values if self.tau_values is not None else np.full_like(self.mus, np.nan)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["mu", "tau", "W"])
            for row in zip(self.mus, taus, self.W_values):
                w.writerow([f"{v:.17g}" for v in row])

    @classmethod
    def read_csv(cls, path):
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        return cls(
            [float(r["mu"]) for r in rows],
            [float(r["W"]) for r in rows],
            [float(r["tau"]) for r in rows],
        )


def whiteness_curve(cache, nu, mus, sigma=None):
    """W (and tau when sigma is given) over a grid of mu values."""
    mus = np.asarray(mus, dtype=np.float64)
    W = whiteness_curve_values(cache, nu, mus)
    taus = None
    if sigma is not None:
        n = cache.groups.n
        taus = np.array([tau_star(residual_norm_of_mu(cache, nu, m), n, sigma) for m in mus])
    return WhitenessCurve(mus, W, taus)
