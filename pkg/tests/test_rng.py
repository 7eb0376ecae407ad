import numpy as np

from edmimo import rng


def test_jit_and_numpy_twins_agree_bitwise():
    key = rng.derive_key(123, 4, 5)
    keys = rng.child_keys_np(key, np.arange(50, dtype=np.uint64))
    for t in (0, 7, 49):
        assert int(rng.child_key(key, t)) == int(keys[t])
    counters = np.arange(50, dtype=np.uint64)
    u = rng.uniforms_np(keys, counters)
    for t in (0, 13, 49):
        for j in (0, 5, 49):
            assert rng.uniform(keys[t], int(counters[j])) == u[t, j]
    z = rng.complex_normals_np(keys[:3], 0, 4, 1.5)
    for t in range(3):
        for j in range(4):
            a, b = rng.complex_normal(keys[t], j, 1.5)
            assert a == z[t, j].real and b == z[t, j].imag


def test_uniform_range_and_moments():
    keys = rng.child_keys_np(rng.derive_key(1), np.arange(200_000, dtype=np.uint64))
    u = rng.uniforms_np(keys, np.zeros(1, dtype=np.uint64))[:, 0]
    assert u.min() > 0.0 and u.max() <= 1.0
    assert abs(u.mean() - 0.5) < 0.005


def test_complex_normal_moments():
    s = rng.Stream(3, 1)
    z = s.complex_normal(200_000, 2.0)
    assert abs(np.mean(np.abs(z) ** 2) - 4.0) < 0.05
    assert abs(np.mean(z.real * z.imag)) < 0.02


def test_distinct_indices_give_distinct_streams():
    a = rng.Stream(7, 0, 1).uniform(8)
    b = rng.Stream(7, 1, 0).uniform(8)
    c = rng.Stream(7, 0, 1).uniform(8)
    assert not np.array_equal(a, b)
    np.testing.assert_array_equal(a, c)


def test_bare_seed_key_differs_from_child_keys():
    k = rng.derive_key(1)
    assert int(rng.child_key(k, 0)) != 0
    assert len({int(rng.derive_key(s, i)) for s in range(20) for i in range(20)}) == 400
