import itertools
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from whitesr.grid import KernelSpec, build_kernel, dft2, idft2, kernel_to_otf
from whitesr.operators import decimate
from whitesr.sim import DegradationSpec, degrade, make_phantom


def test_identity_degradation():
    x = np.random.default_rng(0).random((6, 6))
    b, s = degrade(x, DegradationSpec())
    np.testing.assert_array_equal(b, x)
    assert s == 0.0


def test_seeded_bytes_identical_across_threads():
    x = make_phantom("geometric", 32, seed=2)
    spec = DegradationSpec(KernelSpec("gaussian", 5, 1.0), 2, 2, sigma=0.1, seed=7)
    first = degrade(x, spec)[0].tobytes()
    with ThreadPoolExecutor(4) as pool:
        outs = list(pool.map(lambda _: degrade(x, spec)[0].tobytes(), range(8)))
    assert all(o == first for o in outs)
    assert degrade(x, DegradationSpec(spec.kernel, 2, 2, sigma=0.1, seed=8))[0].tobytes() != first


def test_noise_std_monte_carlo():
    x = make_phantom("blocks", 512, seed=1)
    spec = DegradationSpec(KernelSpec("gaussian", 5, 1.0), 2, 2, sigma=0.07, seed=3)
    b, s = degrade(x, spec)
    clean = decimate(idft2(dft2(x) * spec.otf(x.shape)), spec.decimator)
    assert b.shape == (256, 256)
    assert np.std(b - clean) == pytest.approx(0.07, rel=0.03)


def test_percent_noise_uses_clean_max():
    x = make_phantom("blocks", 32, seed=4)
    spec = DegradationSpec(KernelSpec("gaussian", 5, 1.0), 2, 2, noise_percent=2.0)
    clean = decimate(idft2(dft2(x) * spec.otf(x.shape)), spec.decimator)
    assert degrade(x, spec)[1] == pytest.approx(0.02 * clean.max())
    with pytest.raises(ValueError):
        degrade(x, DegradationSpec(noise_percent=-1.0))
    with pytest.raises(ValueError):
        degrade(x, DegradationSpec(sigma=-0.1))


def test_indivisible_shape_rejected():
    with pytest.raises(ValueError):
        degrade(np.zeros((5, 6)), DegradationSpec(dr=2, dc=2))


@pytest.mark.parametrize("dr,dc", [(2, 2), (4, 2), (3, 1)])
def test_pixel_blur_composition_commutes(dr, dc):
    x = np.random.default_rng(5).random((12, 12))
    camera = kernel_to_otf(build_kernel(KernelSpec("gaussian", 5, 1.2)), 12, 12)
    pixel = kernel_to_otf(build_kernel(KernelSpec("uniform", dr=dr, dc=dc)), 12, 12)
    spec = DegradationSpec(KernelSpec("gaussian", 5, 1.2), dr, dc)
    once = idft2(dft2(x) * spec.otf(x.shape))
    twice = idft2(dft2(idft2(dft2(x) * camera)) * pixel)
    np.testing.assert_allclose(once, twice, atol=1e-12)
    no_pixel = DegradationSpec(KernelSpec("gaussian", 5, 1.2), dr, dc, pixel_blur=False)
    np.testing.assert_allclose(no_pixel.otf(x.shape), camera)


def test_blocks_phantom():
    np.testing.assert_array_equal(np.unique(make_phantom("blocks", 16, seed=0, cell=16)).size, 1)
    img = make_phantom("blocks", 64, seed=1, cell=8)
    assert set(np.unique(img)) <= {0.0, 1.0}
    cells = img.reshape(8, 8, 8, 8)
    assert np.all(cells == cells[:, :1, :, :1])
    np.testing.assert_array_equal(img, make_phantom("blocks", 64, seed=1, cell=8))


def test_geometric_phantom():
    img = make_phantom("geometric", 48, seed=3)
    assert img.shape == (48, 48)
    assert 0.0 <= img.min() and img.max() <= 1.0
    assert np.unique(img).size > 2


def test_points_phantom():
    img, pts = make_phantom("points", 64, seed=0, k=0)
    assert not np.any(img) and pts == []
    img, pts = make_phantom("points", 64, seed=9, k=5, s_min=8)
    assert len(pts) == 5 and img.sum() == 5
    for p, q in itertools.combinations(pts, 2):
        assert np.hypot(p[0] - q[0], p[1] - q[1]) >= 8
    for r, c in pts:
        assert img[r, c] == 1.0


def test_phantom_errors():
    with pytest.raises(ValueError):
        make_phantom("points", 8, k=10, s_min=8, attempts=500)
    with pytest.raises(ValueError):
        make_phantom("spiral", 8)
    with pytest.raises(ValueError):
        make_phantom("blocks", 8, cell=0)
