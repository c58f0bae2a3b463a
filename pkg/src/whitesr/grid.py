"""Image grids, the 2-D DFT convention and blur-kernel construction.

Images are plain 2-D float64 numpy arrays (rows, cols); spectra are complex128
arrays of the same shape in standard DFT ordering, frequency (u, v) at
``[u, v]``. The forward transform is unnormalised (the DC coefficient is the
sample sum) and the inverse carries the ``1/(rows*cols)`` factor, which is
numpy's default ``norm="backward"``.
"""

from dataclasses import dataclass

import numpy as np


def as_image(x, name="image"):
    """Return ``x`` as a 2-D float64 array, raising on anything else."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    return arr


def vectorise(x):
    """Row-major vectorisation of an image."""
    return as_image(x).reshape(-1).copy()


def unvectorise(data, rows, cols):
    """Inverse of :func:`vectorise`; the declared shape must match ``len(data)``."""
    data = np.asarray(data, dtype=np.float64).reshape(-1)
    if rows < 1 or cols < 1 or data.size != rows * cols:
        raise ValueError(f"cannot view {data.size} samples as {rows}x{cols}")
    return data.reshape(rows, cols).copy()


def dft2(x):
    """Unnormalised forward 2-D DFT of a real image."""
    return np.fft.fft2(as_image(x))


def idft2(spec, real=True):
    """Inverse 2-D DFT with the ``1/(rows*cols)`` factor.

    With ``real=True`` the imaginary part is dropped; callers that need to
    check it should pass ``real=False``.
    """
    spec = np.asarray(spec, dtype=np.complex128)
    if spec.ndim != 2:
        raise ValueError(f"spectrum must be 2-D, got shape {spec.shape}")
    out = np.fft.ifft2(spec)
    return out.real.copy() if real else out


@dataclass(frozen=True)
class KernelSpec:
    """Blur kernel description.

    ``kind="gaussian"`` uses ``band`` (odd side length) and ``sigma``;
    ``kind="uniform"`` uses the ``dr x dc`` support.
    """

    kind: str
    band: int = 1
    sigma: float = 1.0
    dr: int = 1
    dc: int = 1

    @classmethod
    def parse(cls, text):
        """Parse ``gaussian:BAND:SIGMA``, ``uniform:DRxDC`` or ``identity``."""
        parts = text.strip().lower().split(":")
        if parts[0] == "identity" and len(parts) == 1:
            return cls("gaussian", band=1, sigma=1.0)
        if parts[0] == "gaussian" and len(parts) == 3:
            return cls("gaussian", band=int(parts[1]), sigma=float(parts[2]))
        if parts[0] == "uniform" and len(parts) == 2:
            dr, dc = (int(p) for p in parts[1].split("x"))
            return cls("uniform", dr=dr, dc=dc)
        raise ValueError(f"bad kernel spec {text!r}")

    def __str__(self):
        if self.kind == "gaussian":
            return f"gaussian:{self.band}:{self.sigma!r}"
        return f"uniform:{self.dr}x{self.dc}"


def kernel_centre(shape):
    """Anchor of a kernel support: the middle sample for odd sides, centre-left for even ones."""
    return tuple(-(-s // 2) - 1 for s in shape)


def build_kernel(spec):
    """Build a unit-sum blur kernel from a :class:`KernelSpec`."""
    if spec.kind == "gaussian":
        if spec.band < 1 or spec.band % 2 == 0:
            raise ValueError(f"gaussian band must be odd and positive, got {spec.band}")
        if not spec.sigma > 0:
            raise ValueError(f"gaussian sigma must be positive, got {spec.sigma}")
        half = (spec.band - 1) // 2
        i = np.arange(-half, half + 1, dtype=np.float64)
        k = np.exp(-(i[:, None] ** 2 + i[None, :] ** 2) / (2.0 * spec.sigma**2))
        return k / k.sum()
    if spec.kind == "uniform":
        if spec.dr < 1 or spec.dc < 1:
            raise ValueError(f"uniform support must be positive, got {spec.dr}x{spec.dc}")
        return np.full((spec.dr, spec.dc), 1.0 / (spec.dr * spec.dc))
    raise ValueError(f"unknown kernel kind {spec.kind!r}")


def kernel_to_otf(kernel, rows, cols):
    """DFT diagonal of circular convolution with ``kernel`` on a rows x cols grid.

    The kernel is zero-embedded and circularly shifted so that its anchor
    (see :func:`kernel_centre`) lands on index (0, 0).
    """
    kernel = as_image(kernel, "kernel")
    kr, kc = kernel.shape
    if kr > rows or kc > cols:
        raise ValueError(f"kernel {kr}x{kc} does not fit in a {rows}x{cols} grid")
    padded = np.zeros((rows, cols))
    padded[:kr, :kc] = kernel
    cr, cc = kernel_centre(kernel.shape)
    padded = np.roll(padded, (-cr, -cc), axis=(0, 1))
    return np.fft.fft2(padded)


def apply_otf(x, otf):
    """Circular convolution of ``x`` via its OTF."""
    return idft2(dft2(x) * otf)
