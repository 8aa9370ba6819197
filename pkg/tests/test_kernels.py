import os
import subprocess
import sys

import numpy as np
import pytest

from kinval import kernels
from kinval.fixtures import named_shape, random_star
from kinval.kinematic import MotionFamily, _split_line_integral, moved_edges
from kinval import quadrature as quad

pytestmark = pytest.mark.skipif(kernels.BACKEND != "numba", reason="comparison needs numba")


@pytest.fixture(scope="module")
def batch():
    rng = np.random.default_rng(7)
    A = random_star(rng, 10, 1.0)
    X = named_shape("L")
    K = 500
    alpha = rng.uniform(0, 2 * np.pi, K)
    t = rng.uniform(-1.5, 1.5, (K, 2))
    a0, a1 = A.edges
    B0, B1 = moved_edges(X, alpha, t)
    return a0, a1, B0, B1, rng


def test_transverse_backends_agree(batch):
    a0, a1, B0, B1, _ = batch
    # include exact contacts so both outcomes occur
    B0 = B0.copy()
    B1 = B1.copy()
    B0[:5, 0] = a0[0]
    got = kernels.transverse_batch(a0, a1, B0, B1, backend="numba")
    ref = kernels.transverse_batch(a0, a1, B0, B1, backend="numpy")
    assert np.array_equal(got, ref) and not got[:5].any()


def test_crossings_backends_agree(batch):
    a0, a1, B0, B1, _ = batch
    got = kernels.crossings_batch(a0, a1, B0, B1, backend="numba")
    ref = kernels.crossings_batch(a0, a1, B0, B1, backend="numpy")
    order_g = np.lexsort(got[:3][::-1])
    order_r = np.lexsort(ref[:3][::-1])
    for g, r in zip(got, ref):
        assert np.allclose(np.asarray(g)[order_g], np.asarray(r)[order_r])


def test_inside_and_clip_backends_agree(batch):
    a0, a1, B0, B1, rng = batch
    K = B0.shape[0]
    pts = rng.uniform(-1.5, 1.5, (K, 2))
    grp = np.arange(K)
    assert np.array_equal(kernels.inside_batch(pts, grp, B0, B1, backend="numba"),
                          kernels.inside_batch(pts, grp, B0, B1, backend="numpy"))
    p0 = np.repeat(a0[None], K, 0).reshape(-1, 2)
    p1 = np.repeat(a1[None], K, 0).reshape(-1, 2)
    pg = np.repeat(grp, len(a0))
    got = kernels.clip_batch(p0, p1, pg, B0, B1, backend="numba")
    ref = kernels.clip_batch(p0, p1, pg, B0, B1, backend="numpy")
    key_g = np.lexsort((got[0][:, 1], got[0][:, 0], got[2]))
    key_r = np.lexsort((ref[0][:, 1], ref[0][:, 0], ref[2]))
    for g, r in zip(got, ref):
        assert np.allclose(np.asarray(g)[key_g], np.asarray(r)[key_r])


def test_line_integral_backends_agree():
    F = MotionFamily(2.0, 3.0, 1.0)
    rng = np.random.default_rng(3)
    q0 = rng.uniform(-3, 3, (400, 2))
    d = rng.uniform(-1, 1, (400, 2))
    radii, sx, sc, k_inf = F.band_table
    x, w = quad.gauss_legendre(64)
    got = kernels.line_h_loop(q0, d, radii, float(F.c), sx, sc, float(k_inf), x, w)
    ref = _split_line_integral(F, q0, d, F._h, 0.5 * F.c, 64)
    assert np.allclose(got, ref, rtol=1e-12, atol=1e-14)


def test_env_flag_selects_numpy_backend():
    env = dict(os.environ, KINVAL_DISABLE_NUMBA="1")
    code = ("from kinval import kernels, _accel; import sys; "
            "print(kernels.BACKEND, _accel.HAS_NUMBA, 'numba' in sys.modules)")
    res = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert res.stdout.split() == ["numpy", "False", "False"]


def test_numpy_backend_end_to_end():
    env = dict(os.environ, KINVAL_DISABLE_NUMBA="1")
    code = ("from kinval.kinematic import MotionFamily, kinematic_direct; from kinval.forms import lk0; "
            "from kinval.fixtures import named_shape; S = named_shape('square'); "
            "print(repr(kinematic_direct(MotionFamily(3.0, 3.5, 1.0, grid=(16, 16, 16)), S, lk0(), S)['mu']))")
    res = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    from kinval.forms import lk0
    from kinval.kinematic import kinematic_direct

    S = named_shape("square")
    ref = kinematic_direct(MotionFamily(3.0, 3.5, 1.0, grid=(16, 16, 16)), S, lk0(), S)["mu"]
    assert float(res.stdout) == pytest.approx(ref, rel=1e-12)
