"""Exact RWP for TIK-L2 and the IRWP-ADMM iteration for non-quadratic regularisers.

The ADMM splits ``t = L x`` with penalty ``beta`` and dual ``lam``. Each
x-update is an l2-l2 problem with weight ``gamma = mu / beta`` and target
``v = t - lam/beta``; gamma is re-selected at every iteration by minimising
the closed-form residual whiteness (or by the discrepancy principle, or
held fixed).
"""

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import metrics
from .operators import build_regularizer
from .prox import RegularizerKind, SmoothedGradientWeights
from .spectral import (
    deconvolution_cache,
    deconvolution_solve,
    lowres_residual,
    nu_from_rhs,
    precompute_cache,
    regulariser_rhs,
    residual_norm_of_mu,
    solve_from_rhs,
)
from .whiteness import (
    SelectionConfig,
    UnattainableTarget,
    WhitenessError,
    minimize_scalar_log,
    minimize_whiteness,
    spectral_whiteness,
    solve_dp_mu,
    tau_star,
)

log = logging.getLogger(__name__)


@dataclass
class AdmmConfig:
    """ADMM settings.

    ``select`` is ``"rwp"``, ``"dp"`` (needs ``sigma``; uses ``tau``) or
    ``"fixed"`` (needs ``mu``). ``warm_start_after`` iterations in, the
    gamma bracket shrinks to ``warm_decades`` decades either side of the
    previous gamma.
    """

    beta: float = 1.0
    tol: float = 1e-5
    max_iter: int = 500
    select: str = "rwp"
    sigma: float = None
    tau: float = 1.0
    mu: float = None
    selection: SelectionConfig = field(default_factory=SelectionConfig)
    warm_start_after: int = 3
    warm_decades: float = 1.0
    alpha_strategy: object = None
    epsilon: float = None

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if self.select not in ("rwp", "dp", "fixed"):
            raise ValueError(f"unknown selection rule {self.select!r}")
        if self.select == "dp" and not (self.sigma and self.sigma > 0):
            raise ValueError("discrepancy selection needs a positive sigma")
        if self.select == "fixed" and not (self.mu and self.mu > 0):
            raise ValueError("fixed selection needs a positive mu")


@dataclass
class Problem:
    """Data, forward model and regulariser operator, with the spectral cache built once."""

    b: np.ndarray
    otf: np.ndarray
    dec: object
    reg_op: object
    cache: object

    @classmethod
    def build(cls, b, otf, dec, operator_kind="gradient", epsilon=None):
        rows, cols = np.shape(otf)
        reg_op = build_regularizer(operator_kind, rows, cols)
        cache = precompute_cache(otf, reg_op.diagonals, b, dec, epsilon)
        return cls(np.asarray(b, dtype=np.float64), np.asarray(otf), dec, reg_op, cache)

    @property
    def n(self):
        return self.b.size

    def residual(self, x):
        return lowres_residual(x, self.otf, self.dec, self.b)


@dataclass
class AdmmState:
    x: np.ndarray
    t: np.ndarray
    lam: np.ndarray
    beta: float
    k: int = 0
    gamma: float = None
    v: np.ndarray = None
    boundary: bool = False
    mu_trace: list = field(default_factory=list)
    change_trace: list = field(default_factory=list)
    violation_trace: list = field(default_factory=list)
    residual_trace: list = field(default_factory=list)


@dataclass
class ReconstructionReport:
    x_star: np.ndarray
    mu_star: float
    tau_star: float
    iterations: int
    converged: bool
    boundary_hit: bool
    traces: dict = field(default_factory=dict)
    t_star: np.ndarray = None
    state: AdmmState = None
    metadata: dict = field(default_factory=dict)

    def write_traces_csv(self, path):
        cols = ["k", "mu", "tau", "change"]
        has_metrics = "isnr" in self.traces
        if has_metrics:
            cols += ["isnr", "ssim"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for i in range(len(self.traces.get("k", []))):
                row = [str(self.traces["k"][i])]
                row += [f"{self.traces[c][i]:.17g}" for c in cols[1:]]
                w.writerow(row)


def _tau_or_nan(norm, n, sigma):
    return tau_star(norm, n, sigma) if sigma else math.nan


def exact_rwp_tik(b, otf, dec, config=SelectionConfig(), sigma=None, epsilon=None, problem=None):
    """TIK-L2 (gradient L, v = 0) with mu* = argmin W(mu); returns a report.

    ``sigma`` is only used to fill ``tau_star`` for evaluation.
    """
    problem = Problem.build(b, otf, dec, "gradient", epsilon) if problem is None else problem
    cache = problem.cache
    nu = np.zeros(cache.groups.n, dtype=np.complex128)
    found = minimize_whiteness(cache, nu, config=config)
    x = solve_from_rhs(cache, None, nu, found.mu)
    norm = residual_norm_of_mu(cache, nu, found.mu)
    return ReconstructionReport(
        x_star=x,
        mu_star=found.mu,
        tau_star=_tau_or_nan(norm, problem.n, sigma),
        iterations=1,
        converged=True,
        boundary_hit=found.boundary,
        traces={"k": [0], "mu": [found.mu], "tau": [_tau_or_nan(norm, problem.n, sigma)], "change": [0.0]},
        metadata={"W": found.value},
    )


def dp_tik(b, otf, dec, sigma, tau=1.0, config=SelectionConfig(), epsilon=None, problem=None):
    """TIK-L2 with mu chosen by the discrepancy principle."""
    problem = Problem.build(b, otf, dec, "gradient", epsilon) if problem is None else problem
    cache = problem.cache
    nu = np.zeros(cache.groups.n, dtype=np.complex128)
    mu = solve_dp_mu(cache, nu, sigma, tau, config)
    x = solve_from_rhs(cache, None, nu, mu)
    t = tau_star(residual_norm_of_mu(cache, nu, mu), problem.n, sigma)
    return ReconstructionReport(x, mu, t, 1, True, False, {"k": [0], "mu": [mu], "tau": [t], "change": [0.0]})


def exact_rwp_deconvolution(b, otf, config=SelectionConfig(), epsilon=None):
    """TIK-L2 restoration without decimation, selected by RWP on ungrouped spectra.

    Shares no alias-group code with :func:`exact_rwp_tik`; with d = 1 both
    must give the same mu* and x*.
    """
    b = np.asarray(b, dtype=np.float64)
    reg = build_regularizer("gradient", *b.shape)
    dc = deconvolution_cache(otf, reg.diagonals, b, epsilon)
    rho = dc["rho"].reshape(-1)
    eta = dc["eta"].reshape(-1)
    nu = np.zeros_like(rho)
    diff2 = np.abs(nu - rho) ** 2
    if not np.any(diff2 > 0):
        raise WhitenessError("whiteness undefined: residual spectrum vanishes for every mu")

    def curve(mus):
        p = diff2[None, :] / (1.0 + eta[None, :] * mus[:, None]) ** 2
        p = p / p.sum(axis=1, keepdims=True)
        return np.sum(p * p, axis=1)

    found = minimize_scalar_log(
        lambda m: spectral_whiteness(np.abs((nu - rho) / (1.0 + eta * m)) ** 2),
        config.bracket,
        grid_points=config.grid_points,
        rtol=config.rtol,
        vectorised=curve,
    )
    x = deconvolution_solve(dc, None, found.mu)
    return ReconstructionReport(
        x_star=x, mu_star=found.mu, tau_star=math.nan, iterations=1, converged=True,
        boundary_hit=found.boundary, metadata={"W": found.value},
    )


def tik_fixed(problem, mu):
    """x*(mu) for TIK-L2 at a given mu."""
    nu = np.zeros(problem.cache.groups.n, dtype=np.complex128)
    return solve_from_rhs(problem.cache, None, nu, mu)


def initial_state(problem, x0, beta):
    t0 = problem.reg_op.apply(x0)
    return AdmmState(x=x0.copy(), t=t0, lam=np.zeros_like(t0), beta=beta)


def select_gamma(problem, nu, config, previous=None, use_warm=False):
    """gamma for the current x-update; returns (gamma, boundary_flag)."""
    cache = problem.cache
    if config.select == "fixed":
        return config.mu / config.beta, False
    if config.select == "dp":
        try:
            return solve_dp_mu(cache, nu, config.sigma, config.tau, config.selection), False
        except UnattainableTarget as exc:
            # clip to the side of the attainable range closest to the target
            lo, hi = config.selection.dp_bracket
            log.warning("%s; clipping gamma to the bracket", exc)
            return (hi if exc.target < exc.interval[0] else lo), True
    full = config.selection.bracket
    if use_warm and previous is not None:
        f = 10.0**config.warm_decades
        warm = (max(previous / f, 1e-300), previous * f)
        found = minimize_whiteness(cache, nu, warm, config.selection)
        if not found.boundary:
            return found.mu, False
    found = minimize_whiteness(cache, nu, full, config.selection)
    return found.mu, found.boundary


def irwp_admm_step(state, problem, reg, config):
    """One IRWP-ADMM iteration, updating ``state`` in place and returning it."""
    beta = state.beta
    cache = problem.cache
    v = state.t - state.lam / beta
    rhs = regulariser_rhs(cache, v)
    nu = nu_from_rhs(cache, rhs)
    gamma, boundary = select_gamma(
        problem, nu, config, state.gamma, use_warm=state.k >= config.warm_start_after
    )
    x_new = solve_from_rhs(cache, rhs, nu, gamma)
    if reg.tag == "WTV":
        strategy = config.alpha_strategy
        if strategy is None:
            strategy = config.alpha_strategy = SmoothedGradientWeights()
        reg.weights = strategy(x_new)
    Lx = problem.reg_op.apply(x_new)
    t_new = reg.prox(Lx + state.lam / beta, beta)
    lam_new = state.lam - beta * (t_new - Lx)
    if not (np.all(np.isfinite(x_new)) and np.all(np.isfinite(t_new))):
        raise FloatingPointError(f"non-finite ADMM state at iteration {state.k + 1}")

    norm_x = np.linalg.norm(state.x)
    change = np.linalg.norm(x_new - state.x) / norm_x if norm_x > 0 else np.linalg.norm(x_new)
    state.x, state.t, state.lam = x_new, t_new, lam_new
    state.v = v
    state.gamma = gamma
    state.boundary = boundary
    state.k += 1
    state.mu_trace.append(gamma * beta)
    state.change_trace.append(float(change))
    state.violation_trace.append(float(np.max(np.abs(t_new - Lx))))
    state.residual_trace.append(residual_norm_of_mu(cache, nu, gamma))
    return state


def run_admm(problem, reg, state, config, truth=None, b_bar=None, sigma=None, max_iter=None):
    """Iterate :func:`irwp_admm_step` from ``state`` until the relative change drops below tol."""
    max_iter = config.max_iter if max_iter is None else max_iter
    traces = {"k": [], "mu": [], "tau": [], "change": [], "violation": []}
    if truth is not None:
        traces["isnr"], traces["ssim"] = [], []
    converged = False
    for _ in range(max_iter):
        irwp_admm_step(state, problem, reg, config)
        traces["k"].append(state.k)
        traces["mu"].append(state.mu_trace[-1])
        traces["tau"].append(_tau_or_nan(state.residual_trace[-1], problem.n, sigma))
        traces["change"].append(state.change_trace[-1])
        traces["violation"].append(state.violation_trace[-1])
        if truth is not None:
            traces["isnr"].append(metrics.isnr(truth, state.x, b_bar))
            traces["ssim"].append(metrics.ssim(truth, state.x))
        # a bracket-edge gamma pins x to v, so a small change there is not convergence
        if state.change_trace[-1] < config.tol and not state.boundary:
            converged = True
            break
    # early iterates often sit at the bracket edge; only the final selection matters
    return converged, state.boundary, traces


def irwp_admm_run(b, otf, dec, reg, config=None, truth=None, sigma=None, x0=None):
    """IRWP-ADMM: TIK-L2 initialisation, then ADMM with per-iteration gamma selection.

    ``reg`` is a :class:`RegularizerKind` or its tag. ``truth`` adds ISNR/SSIM
    traces; ``sigma`` (evaluation only, unless ``config.select == "dp"``)
    fills the tau traces.
    """
    config = AdmmConfig() if config is None else config
    reg = RegularizerKind(reg) if isinstance(reg, str) else reg
    if sigma is None and config.select == "dp":
        sigma = config.sigma
    if x0 is None:
        x0 = exact_rwp_tik(b, otf, dec, config.selection, epsilon=config.epsilon).x_star
    problem = Problem.build(b, otf, dec, reg.operator_kind, config.epsilon)
    state = initial_state(problem, x0, config.beta)
    b_bar = None
    if truth is not None:
        b_bar = metrics.bicubic_upsample(b, dec.dr, dec.dc)
    converged, boundary, traces = run_admm(problem, reg, state, config, truth, b_bar, sigma)
    mu = state.mu_trace[-1] if state.mu_trace else math.nan
    norm = float(np.linalg.norm(problem.residual(state.x)))
    return ReconstructionReport(
        x_star=state.x,
        mu_star=mu,
        tau_star=_tau_or_nan(norm, problem.n, sigma),
        iterations=state.k,
        converged=converged,
        boundary_hit=boundary,
        traces=traces,
        t_star=state.t,
        state=state,
        metadata={"problem": problem, "regularizer": reg.tag, "beta": config.beta},
    )


def reselect_gamma(report, config=None):
    """A-posteriori RWP on the last x-update target v, over the full bracket."""
    config = AdmmConfig() if config is None else config
    problem = report.metadata["problem"]
    nu = nu_from_rhs(problem.cache, regulariser_rhs(problem.cache, report.state.v))
    return minimize_whiteness(problem.cache, nu, config=config.selection).mu
