"""Seeded degradation (blur, decimation, AWGN) and test phantoms."""

from dataclasses import dataclass, field

import numpy as np

from .grid import KernelSpec, as_image, build_kernel, idft2, dft2, kernel_to_otf
from .operators import Decimator, decimate


def rng(seed):
    """Counter-based generator: distinct seeds never share a stream."""
    return np.random.Generator(np.random.Philox(int(seed)))


@dataclass(frozen=True)
class DegradationSpec:
    """Camera blur, optional d_r x d_c pixel-integration blur, decimation and noise.

    Exactly one of ``sigma`` (absolute) or ``noise_percent`` (percent of the
    maximum of the noiseless LR image) is used; ``noise_percent`` wins when set.
    """

    kernel: KernelSpec = field(default_factory=lambda: KernelSpec("gaussian", 1, 1.0))
    dr: int = 1
    dc: int = 1
    pixel_blur: bool = True
    sigma: float = 0.0
    noise_percent: float = None
    seed: int = 0

    @property
    def decimator(self):
        return Decimator(self.dr, self.dc)

    def otf(self, hr_shape):
        """OTF of the composed blur: camera kernel times pixel kernel."""
        rows, cols = hr_shape
        otf = kernel_to_otf(build_kernel(self.kernel), rows, cols)
        if self.pixel_blur and (self.dr > 1 or self.dc > 1):
            pix = build_kernel(KernelSpec("uniform", dr=self.dr, dc=self.dc))
            otf = otf * kernel_to_otf(pix, rows, cols)
        return otf


def degrade(x, spec):
    """b = S K x + e with e ~ N(0, sigma^2) i.i.d.; returns ``(b, sigma_used)``."""
    x = as_image(x)
    dec = spec.decimator
    dec.lowres_shape(x.shape)
    otf = spec.otf(x.shape)
    # skip the FFT round trip for the identity blur so b == x holds exactly
    blurred = x if np.all(otf == 1) else idft2(dft2(x) * otf)
    clean = decimate(blurred, dec)
    if spec.noise_percent is not None:
        if spec.noise_percent < 0:
            raise ValueError("noise percent must be nonnegative")
        sigma = spec.noise_percent / 100.0 * float(np.max(clean))
    else:
        sigma = float(spec.sigma)
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    noise = rng(spec.seed).standard_normal(clean.shape)
    return clean + sigma * noise, sigma


def make_phantom(kind, size, seed=0, **params):
    """Synthetic HR test image.

    ``blocks``: random binary cells of side ``cell`` (default size // 16),
    qr-code-like. ``geometric``: ``count`` overlapping rectangles and disks of
    constant intensity. ``points``: ``k`` unit impulses at pairwise distance
    at least ``s_min``; returns ``(image, points)`` with points as (row, col).
    """
    rows, cols = (size, size) if np.isscalar(size) else tuple(size)
    g = rng(seed)
    if kind == "blocks":
        cell = int(params.get("cell", max(1, min(rows, cols) // 16)))
        if cell < 1:
            raise ValueError("cell size must be positive")
        cr, cc = -(-rows // cell), -(-cols // cell)
        cells = (g.random((cr, cc)) < params.get("fill", 0.5)).astype(np.float64)
        img = np.kron(cells, np.ones((cell, cell)))[:rows, :cols]
        return img.copy()
    if kind == "geometric":
        img = np.full((rows, cols), float(params.get("background", 0.0)))
        rr, cc = np.mgrid[0:rows, 0:cols]
        for _ in range(int(params.get("count", 12))):
            level = g.uniform(0.2, 1.0)
            if g.random() < 0.5:
                h, w = g.integers(rows // 10, rows // 3 + 1), g.integers(cols // 10, cols // 3 + 1)
                r0, c0 = g.integers(0, rows - h + 1), g.integers(0, cols - w + 1)
                img[r0 : r0 + h, c0 : c0 + w] = level
            else:
                rad = g.uniform(min(rows, cols) / 20, min(rows, cols) / 6)
                r0, c0 = g.uniform(rad, rows - rad), g.uniform(rad, cols - rad)
                img[(rr - r0) ** 2 + (cc - c0) ** 2 <= rad**2] = level
        return img
    if kind == "points":
        k = int(params.get("k", 5))
        s_min = float(params.get("s_min", 8.0))
        margin = int(params.get("margin", 0))
        pts = []
        for _ in range(int(params.get("attempts", 10000))):
            if len(pts) == k:
                break
            p = (int(g.integers(margin, rows - margin)), int(g.integers(margin, cols - margin)))
            if all(np.hypot(p[0] - q[0], p[1] - q[1]) >= s_min for q in pts):
                pts.append(p)
        if len(pts) < k:
            raise ValueError(f"could not place {k} points with separation {s_min} in {rows}x{cols}")
        img = np.zeros((rows, cols))
        for r, c in pts:
            img[r, c] = float(params.get("intensity", 1.0))
        return img, pts
    raise ValueError(f"unknown phantom kind {kind!r}")
