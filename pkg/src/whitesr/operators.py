"""Decimation, alias grouping of frequencies and regularisation operators."""

from dataclasses import dataclass

import numpy as np

from .grid import as_image


@dataclass(frozen=True)
class Decimator:
    """Binary selection of the top-left pixel of every ``dr x dc`` cell."""

    dr: int = 1
    dc: int = 1

    def __post_init__(self):
        if self.dr < 1 or self.dc < 1:
            raise ValueError(f"decimation factors must be positive, got {self.dr}x{self.dc}")

    @property
    def d(self):
        return self.dr * self.dc

    @classmethod
    def parse(cls, text):
        dr, dc = (int(p) for p in text.lower().split("x"))
        return cls(dr, dc)

    def lowres_shape(self, hr_shape):
        nr, nc = hr_shape
        if nr % self.dr or nc % self.dc:
            raise ValueError(f"HR shape {hr_shape} not divisible by {self.dr}x{self.dc}")
        return nr // self.dr, nc // self.dc

    def __str__(self):
        return f"{self.dr}x{self.dc}"


def decimate(x, dec):
    """Apply S: keep ``x[i*dr, j*dc]``."""
    x = as_image(x)
    dec.lowres_shape(x.shape)
    return x[:: dec.dr, :: dec.dc].copy()


def zero_interpolate(b, dec, hr_shape=None):
    """Apply S^H: put ``b`` on the sampled positions, zeros elsewhere."""
    b = as_image(b)
    expected = (b.shape[0] * dec.dr, b.shape[1] * dec.dc)
    if hr_shape is not None and tuple(hr_shape) != expected:
        raise ValueError(f"LR shape {b.shape} does not match HR shape {hr_shape} for {dec}")
    out = np.zeros(expected)
    out[:: dec.dr, :: dec.dc] = b
    return out


@dataclass(frozen=True)
class AliasGroups:
    """Grouping of HR frequencies that fold onto the same LR frequency.

    HR frequency (u, v) = (u_lo + p*nr, v_lo + q*nc) goes to flat position
    ``g*d + o`` with ``g = u_lo*nc + v_lo`` and ``o = p*dc + q``; ``perm[k]``
    is the position of row-major HR index ``k``.
    """

    nr: int
    nc: int
    dr: int
    dc: int

    @property
    def d(self):
        return self.dr * self.dc

    @property
    def n(self):
        return self.nr * self.nc

    @property
    def N(self):
        return self.n * self.d

    @property
    def perm(self):
        hr_index = np.arange(self.N).reshape(self.dr * self.nr, self.dc * self.nc)
        order = self.group(hr_index).reshape(-1)
        perm = np.empty(self.N, dtype=np.int64)
        perm[order] = np.arange(self.N)
        return perm

    def group(self, spec):
        """View an HR-shaped array as (n, d): row g holds the d aliases of LR frequency g."""
        spec = np.asarray(spec)
        return (
            spec.reshape(self.dr, self.nr, self.dc, self.nc)
            .transpose(1, 3, 0, 2)
            .reshape(self.n, self.d)
        )

    def ungroup(self, grouped):
        """Inverse of :meth:`group`."""
        grouped = np.asarray(grouped)
        return (
            grouped.reshape(self.nr, self.nc, self.dr, self.dc)
            .transpose(2, 0, 3, 1)
            .reshape(self.dr * self.nr, self.dc * self.nc)
        )


def alias_permutation(nr, nc, dr, dc):
    if min(nr, nc, dr, dc) < 1:
        raise ValueError("all sizes must be positive")
    return AliasGroups(nr, nc, dr, dc)


def permutation_matrix(groups):
    """Dense P with (P y)[perm[k]] = y[k]; for tests on small grids only."""
    P = np.zeros((groups.N, groups.N))
    P[groups.perm, np.arange(groups.N)] = 1.0
    return P


def group_base(i, d):
    """First (1-based) index of the length-``d`` block containing 1-based ``i``."""
    if i < 1 or d < 1:
        raise ValueError(f"invalid index {i} or block size {d}")
    return 1 + ((i - 1) // d) * d


@dataclass(frozen=True)
class RegularizerOperator:
    """L as a stack of s circular-convolution operators given by their OTFs."""

    kind: str
    diagonals: tuple

    @property
    def s(self):
        return len(self.diagonals)

    def apply(self, x):
        """L x as an (s, rows, cols) array, computed with spatial stencils."""
        x = as_image(x)
        if self.kind == "identity":
            return x[None].copy()
        return np.stack([np.roll(x, -1, axis=1) - x, np.roll(x, -1, axis=0) - x])

    def adjoint(self, t):
        """L^H t for an (s, rows, cols) array."""
        t = np.asarray(t, dtype=np.float64)
        if self.kind == "identity":
            return t[0].copy()
        return (np.roll(t[0], 1, axis=1) - t[0]) + (np.roll(t[1], 1, axis=0) - t[1])


def build_regularizer(kind, rows, cols):
    """``identity`` (s=1) or ``gradient`` (periodic forward differences, s=2)."""
    if kind == "identity":
        return RegularizerOperator("identity", (np.ones((rows, cols), dtype=np.complex128),))
    if kind == "gradient":
        dh = np.zeros((rows, cols))
        dh[0, 0] = -1.0
        dh[0, -1 % cols] += 1.0
        dv = np.zeros((rows, cols))
        dv[0, 0] = -1.0
        dv[-1 % rows, 0] += 1.0
        return RegularizerOperator("gradient", (np.fft.fft2(dh), np.fft.fft2(dv)))
    raise ValueError(f"unknown regulariser kind {kind!r}")
