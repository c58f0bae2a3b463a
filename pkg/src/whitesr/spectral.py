"""Fast l2-l2 super-resolution solver in the alias-grouped Fourier domain.

Solves

    min_x  (mu/2) ||S K x - b||^2 + (1/2) ||L x - v||^2

with K, L circulant and S a binary decimation, i.e. the normal equations
``((mu/d) Lb^H Lb + sum_j G_j^H G_j + eps I) x~ = mu Lam^H b~_H + sum_j G_j^H v~_j``
where ``Lb`` sums the blur eigenvalues within each alias group. Per group
the system is diagonal plus rank one and is inverted with the Woodbury
scalar ``1/(d + mu*omega_g)``. Everything reduces to per-group arrays of
length n, so a solve costs a handful of FFTs.
"""

from dataclasses import dataclass

import numpy as np

from .grid import as_image, dft2, idft2
from .operators import AliasGroups, decimate, zero_interpolate


@dataclass(frozen=True)
class SpectralCache:
    """mu- and v-independent spectral quantities, stored in grouped (n, d) layout."""

    groups: AliasGroups
    lambda_hat: np.ndarray  # (n, d) complex, grouped blur OTF
    gamma_hat: np.ndarray  # (s, n, d) complex, grouped regulariser OTFs
    zeta: np.ndarray  # (n, d) sum_j |gamma|^2
    omega: np.ndarray  # (n,)
    eta: np.ndarray  # (n,) omega / d
    rho: np.ndarray  # (n,) sum over the group of b_hat_H
    b_hat_H: np.ndarray  # (n, d)
    epsilon: float

    @property
    def d(self):
        return self.groups.d

    @property
    def s(self):
        return self.gamma_hat.shape[0]

    @property
    def hr_shape(self):
        g = self.groups
        return (g.dr * g.nr, g.dc * g.nc)

    @property
    def lr_shape(self):
        return (self.groups.nr, self.groups.nc)


def default_epsilon(zeta):
    return 1e-10 * (float(np.max(zeta)) + 1.0)


def precompute_cache(otf, gammas, b, dec, epsilon=None):
    """Build the :class:`SpectralCache` for blur ``otf``, regulariser OTFs ``gammas`` and data ``b``.

    ``epsilon=None`` picks ``1e-10 * (max zeta + 1)``.
    """
    otf = np.asarray(otf, dtype=np.complex128)
    b = as_image(b, "b")
    hr_shape = otf.shape
    nr, nc = dec.lowres_shape(hr_shape)
    if b.shape != (nr, nc):
        raise ValueError(f"b has shape {b.shape}, expected {(nr, nc)} for HR {hr_shape} and {dec}")
    gammas = [np.asarray(g, dtype=np.complex128) for g in gammas]
    if not gammas or any(g.shape != hr_shape for g in gammas):
        raise ValueError("regulariser OTFs must be non-empty and match the blur OTF shape")

    groups = AliasGroups(nr, nc, dec.dr, dec.dc)
    lam = groups.group(otf)
    gam = np.stack([groups.group(g) for g in gammas])
    zeta = np.sum(np.abs(gam) ** 2, axis=0)
    if epsilon is None:
        epsilon = default_epsilon(zeta)
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    omega = np.sum(np.abs(lam) ** 2 / (zeta + epsilon), axis=1)
    b_hat_H = groups.group(dft2(zero_interpolate(b, dec)))
    return SpectralCache(
        groups=groups,
        lambda_hat=lam,
        gamma_hat=gam,
        zeta=zeta,
        omega=omega,
        eta=omega / groups.d,
        rho=b_hat_H.sum(axis=1),
        b_hat_H=b_hat_H,
        epsilon=float(epsilon),
    )


def _split_spectra(cache, v):
    """Grouped DFTs of the s components of v, shape (s, n, d)."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim == 2:
        v = v[None]
    if v.shape != (cache.s,) + cache.hr_shape:
        raise ValueError(f"v has shape {v.shape}, expected {(cache.s,) + cache.hr_shape}")
    return np.stack([cache.groups.group(np.fft.fft2(vj)) for vj in v])


def regulariser_rhs(cache, v):
    """sum_j conj(gamma_j) * v~_j in grouped layout, or None for v = 0."""
    if v is None:
        return None
    v_hat = _split_spectra(cache, v)
    return np.sum(np.conj(cache.gamma_hat) * v_hat, axis=0)


def compute_nu(cache, v):
    """Per-group nu_g = sum_l lambda * (sum_j conj(gamma_j) v~_j) / (zeta + eps)."""
    rhs = regulariser_rhs(cache, v)
    if rhs is None:
        return np.zeros(cache.groups.n, dtype=np.complex128)
    return nu_from_rhs(cache, rhs)


def nu_from_rhs(cache, rhs):
    return np.sum(cache.lambda_hat * rhs / (cache.zeta + cache.epsilon), axis=1)


def residual_terms(cache, nu, mu):
    """t_g = (nu_g - rho_g) / (1 + eta_g mu): d times the LR residual spectrum."""
    return (nu - cache.rho) / (1.0 + cache.eta * mu)


def _check_mu(mu):
    if not (np.isfinite(mu) and mu > 0):
        raise ValueError(f"mu must be positive and finite, got {mu}")


def solve_l2l2(cache, v, mu, return_spectrum=False):
    """Unique minimiser of ``(mu/2)||SKx-b||^2 + (1/2)||Lx-v||^2`` (with the eps I term).

    ``v`` may be None (zero), an (rows, cols) array when s == 1, or an
    (s, rows, cols) array. The Woodbury solution is evaluated as
    ``x~ = (sum_j conj(gamma_j) v~_j - (mu/d) conj(lambda) t_g) / (zeta + eps)``,
    algebraically identical to the textbook expansion but free of the
    cancellation it suffers where zeta vanishes.
    """
    _check_mu(mu)
    rhs = regulariser_rhs(cache, v)
    nu = np.zeros(cache.groups.n, dtype=np.complex128) if rhs is None else nu_from_rhs(cache, rhs)
    return solve_from_rhs(cache, rhs, nu, mu, return_spectrum)


def solve_from_rhs(cache, rhs, nu, mu, return_spectrum=False):
    """:func:`solve_l2l2` with the v-dependent pieces already computed."""
    _check_mu(mu)
    t = residual_terms(cache, nu, mu)
    num = -(mu / cache.d) * np.conj(cache.lambda_hat) * t[:, None]
    if rhs is not None:
        num = num + rhs
    x_hat = cache.groups.ungroup(num / (cache.zeta + cache.epsilon))
    if return_spectrum:
        return x_hat
    x = np.fft.ifft2(x_hat)
    scale = max(1.0, float(np.max(np.abs(x.real))))
    if not np.all(np.isfinite(x.real)):
        raise FloatingPointError("non-finite solution")
    if np.max(np.abs(x.imag)) > 1e-9 * scale:
        raise FloatingPointError("solution spectrum is not Hermitian; check operator symmetry")
    return x.real.copy()


def solve_l2l2_woodbury(cache, v, mu):
    """Textbook Woodbury evaluation, kept as a cross-check for :func:`solve_l2l2`."""
    _check_mu(mu)
    lam = cache.lambda_hat
    rhs = mu * np.conj(lam) * cache.b_hat_H
    reg = regulariser_rhs(cache, v)
    if reg is not None:
        rhs = rhs + reg
    psi = 1.0 / (cache.zeta + cache.epsilon)
    c = psi * rhs
    y = np.sum(lam * c, axis=1)
    z = y / (cache.d + mu * cache.omega)
    x_hat = c - mu * psi * np.conj(lam) * z[:, None]
    return np.fft.ifft2(cache.groups.ungroup(x_hat)).real


def residual_norm_of_mu(cache, nu, mu):
    """||S K x*(mu) - b||_2 from the closed form, no solve needed."""
    _check_mu(mu)
    t = residual_terms(cache, nu, mu)
    return float(np.sqrt(np.sum(np.abs(t) ** 2) / (cache.groups.N * cache.d)))


def lowres_residual(x, otf, dec, b):
    """r = S K x - b on the LR grid."""
    x = as_image(x)
    b = as_image(b, "b")
    if x.shape != np.shape(otf):
        raise ValueError(f"x shape {x.shape} does not match OTF shape {np.shape(otf)}")
    r = decimate(idft2(dft2(x) * otf), dec)
    if r.shape != b.shape:
        raise ValueError(f"b shape {b.shape} does not match LR shape {r.shape}")
    return r - b


def deconvolution_cache(otf, gammas, b, epsilon=None):
    """Restoration-only (S = I) spectral quantities, without any alias grouping.

    Returns a dict with ``eta``, ``rho`` and the raw OTFs; used together with
    :func:`deconvolution_nu` and :func:`deconvolution_solve`.
    """
    otf = np.asarray(otf, dtype=np.complex128)
    b = as_image(b, "b")
    gam = np.stack([np.asarray(g, dtype=np.complex128) for g in gammas])
    zeta = np.sum(np.abs(gam) ** 2, axis=0)
    if epsilon is None:
        epsilon = default_epsilon(zeta)
    return {
        "otf": otf,
        "gammas": gam,
        "zeta": zeta,
        "epsilon": float(epsilon),
        "eta": np.abs(otf) ** 2 / (zeta + epsilon),
        "rho": dft2(b),
    }


def deconvolution_nu(dc, v):
    if v is None:
        return np.zeros_like(dc["rho"])
    v = np.asarray(v, dtype=np.float64).reshape((-1,) + dc["rho"].shape)
    rhs = np.sum(np.conj(dc["gammas"]) * np.fft.fft2(v), axis=0)
    return dc["otf"] * rhs / (dc["zeta"] + dc["epsilon"])


def deconvolution_solve(dc, v, mu):
    """x*(mu) for the S = I problem: ``(mu conj(Lam) b~ + sum G^H v~) / (mu |Lam|^2 + zeta + eps)``."""
    _check_mu(mu)
    rhs = mu * np.conj(dc["otf"]) * dc["rho"]
    if v is not None:
        v = np.asarray(v, dtype=np.float64).reshape((-1,) + dc["rho"].shape)
        rhs = rhs + np.sum(np.conj(dc["gammas"]) * np.fft.fft2(v), axis=0)
    return idft2(rhs / (mu * np.abs(dc["otf"]) ** 2 + dc["zeta"] + dc["epsilon"]))
