"""Quality metrics (PSNR, ISNR, SSIM, Jaccard) and the bicubic baseline."""

import math

import numpy as np
from scipy.ndimage import convolve1d

from .grid import as_image

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def psnr(x_true, x_est, peak="truth"):
    """``20 log10(sqrt(N) * peak / ||x - x*||)``; +inf for identical images.

    ``peak="truth"`` uses max(x); ``peak="both"`` uses max(x, x*), which
    rewards estimates that overshoot; a number is used as given.
    """
    x_true, x_est = as_image(x_true), as_image(x_est)
    if x_true.shape != x_est.shape:
        raise ValueError("shape mismatch")
    err = np.linalg.norm(x_true - x_est)
    if err == 0:
        return math.inf
    if peak == "truth":
        peak = float(x_true.max())
    elif peak == "both":
        peak = max(float(x_true.max()), float(x_est.max()))
    else:
        peak = float(peak)
    return 20.0 * math.log10(math.sqrt(x_true.size) * peak / err)


def isnr(x_true, x_est, b_bar):
    """Improvement over the baseline ``b_bar``: ``20 log10(||x - b_bar|| / ||x - x*||)``."""
    x_true, x_est, b_bar = as_image(x_true), as_image(x_est), as_image(b_bar)
    if not (x_true.shape == x_est.shape == b_bar.shape):
        raise ValueError("shape mismatch")
    err = np.linalg.norm(x_true - x_est)
    if err == 0:
        return math.inf
    return 20.0 * math.log10(np.linalg.norm(x_true - b_bar) / err)


def gaussian_window(size=SSIM_WINDOW, sigma=SSIM_SIGMA):
    """Normalised 1-D Gaussian taps; the 2-D window is their outer product."""
    i = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(i**2) / (2.0 * sigma**2))
    return g / g.sum()


def ssim(x_true, x_est, data_range=None):
    """Mean local SSIM over all fully-contained 11x11 Gaussian windows.

    ``data_range`` defaults to the dynamic range of ``x_true``.
    """
    x, y = as_image(x_true), as_image(x_est)
    if x.shape != y.shape:
        raise ValueError("shape mismatch")
    if min(x.shape) < SSIM_WINDOW:
        raise ValueError(f"images must be at least {SSIM_WINDOW}x{SSIM_WINDOW}")
    L = float(x.max() - x.min()) if data_range is None else float(data_range)
    if not L > 0:
        L = 1.0
    c1, c2 = (SSIM_K1 * L) ** 2, (SSIM_K2 * L) ** 2
    g = gaussian_window()
    h = SSIM_WINDOW // 2

    def filt(a):
        out = convolve1d(convolve1d(a, g, axis=0, mode="constant"), g, axis=1, mode="constant")
        return out[h:-h, h:-h]

    mx, my = filt(x), filt(y)
    sxx = filt(x * x) - mx * mx
    syy = filt(y * y) - my * my
    sxy = filt(x * y) - mx * my
    num = (2 * mx * my + c1) * (2 * sxy + c2)
    den = (mx * mx + my * my + c1) * (sxx + syy + c2)
    return float(np.mean(num / den))


def jaccard(truth_points, detected_points, delta):
    """TP / (TP + FN + FP) with greedy nearest-first one-to-one matching within ``delta``."""
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    truth = np.asarray(truth_points, dtype=np.float64).reshape(-1, 2)
    det = np.asarray(detected_points, dtype=np.float64).reshape(-1, 2)
    if len(truth) == 0 and len(det) == 0:
        return 1.0
    tp = 0
    if len(truth) and len(det):
        dist = np.linalg.norm(truth[:, None, :] - det[None, :, :], axis=2)
        ti, di = np.nonzero(dist <= delta)
        order = np.lexsort((di, ti, dist[ti, di]))
        used_t, used_d = set(), set()
        for k in order:
            a, b = int(ti[k]), int(di[k])
            if a not in used_t and b not in used_d:
                used_t.add(a)
                used_d.add(b)
        tp = len(used_t)
    fn = len(truth) - tp
    fp = len(det) - tp
    return tp / (tp + fn + fp)


def detections(x, threshold=0.0):
    """(row, col) of pixels strictly above ``threshold``."""
    return np.argwhere(as_image(x) > threshold)


def keys_kernel(s, a=-0.5):
    s = np.abs(s)
    out = np.zeros_like(s)
    near = s <= 1
    far = (s > 1) & (s < 2)
    out[near] = (a + 2) * s[near] ** 3 - (a + 3) * s[near] ** 2 + 1
    out[far] = a * s[far] ** 3 - 5 * a * s[far] ** 2 + 8 * a * s[far] - 4 * a
    return out


def _upsample_axis(b, factor, axis):
    n = b.shape[axis]
    pos = np.arange(n * factor) / factor
    base = np.floor(pos).astype(int)
    frac = pos - base
    out = 0.0
    for off in (-1, 0, 1, 2):
        w = keys_kernel(frac - off)
        idx = (base + off) % n
        taken = np.take(b, idx, axis=axis)
        shape = [1, 1]
        shape[axis] = -1
        out = out + taken * w.reshape(shape)
    return out


def bicubic_upsample(b, dr, dc=None):
    """Separable Keys cubic convolution (a = -0.5) with periodic extension.

    LR sample (i, j) sits at HR position (i*dr, j*dc), matching the decimation.
    """
    dc = dr if dc is None else dc
    if dr < 1 or dc < 1:
        raise ValueError("factors must be >= 1")
    b = as_image(b)
    return _upsample_axis(_upsample_axis(b, dr, 0), dc, 1)
