import mpmath
import numpy as np
import pytest

from deltachain import lyapunov, sampling
from deltachain.errors import InsufficientData, PreconditionError
from deltachain.transfer import ModelConfig, free_transfer


def test_no_disorder_gives_zero_exponents():
    cfg = ModelConfig((1.0, 0.0, 1.0), "lifted")
    spec = sampling.bernoulli(3, 0.0, 0.0)
    s = lyapunov.estimate_spectrum(cfg, 3.0, spec, 0, steps=20000, batches=10)
    assert np.abs(s.exponents).max() < 1e-3


def test_n1_matches_extended_precision_product():
    cfg = ModelConfig((1.0,))
    spec = sampling.bernoulli(1, 0.0, 1.0)
    steps = 10**4
    e = 0.8
    s = lyapunov.estimate_spectrum(cfg, e, spec, 3, steps=steps, batches=10)
    q = sampling.SampleStream(spec, 3).sample(steps)[:, 0]
    free = free_transfer(cfg, e)
    with mpmath.workdps(30):
        a = mpmath.matrix(free.tolist())
        v = mpmath.matrix([1, 0])
        for t in range(steps):
            v = a * v
            v[1] += mpmath.mpf(q[t]) * v[0]
        ref = mpmath.log(mpmath.norm(v)) / steps
    assert s.exponents[0] == pytest.approx(float(ref), abs=1e-9)
    assert s.exponents[0] + s.exponents[1] == pytest.approx(0.0, abs=1e-9)


def test_seed_reproducible_and_key_sensitive(certified):
    cfg, spec = certified
    a = lyapunov.estimate_spectrum(cfg, 1.6, spec, 9, steps=4000, batches=4)
    b = lyapunov.estimate_spectrum(cfg, 1.6, spec, 9, steps=4000, batches=4)
    c = lyapunov.estimate_spectrum(cfg, 1.6, spec, 9, steps=4000, batches=4, key=(1,))
    assert np.array_equal(a.exponents, b.exponents)
    assert not np.array_equal(a.exponents, c.exponents)


def test_backends_agree(certified):
    cfg, spec = certified
    out = [lyapunov.estimate_spectrum(cfg, 1.6, spec, 2, steps=5000, batches=5, backend=b).exponents
           for b in ("python", "cython")]
    assert np.allclose(out[0], out[1], atol=1e-12)


def test_schemes_agree_short(certified):
    cfg, spec = certified
    qr = lyapunov.estimate_spectrum(cfg, 1.6, spec, 4, steps=40000, batches=10)
    ex = lyapunov.estimate_spectrum(cfg, 1.6, spec, 4, steps=40000, batches=10, scheme="exterior")
    err = np.sqrt(qr.stderr ** 2 + ex.stderr ** 2)
    assert np.all(np.abs(qr.exponents[:3] - ex.exponents[:3]) <= 4 * err[:3] + 1e-3)
    assert np.allclose(ex.exponents[3:], -ex.exponents[2::-1])


def test_scan_independent_of_workers(certified):
    cfg, spec = certified
    grid = [1.5, 1.6, 1.7]
    one = lyapunov.scan_spectrum(cfg, spec, grid, 1, steps=2000, batches=4, workers=1)
    two = lyapunov.scan_spectrum(cfg, spec, grid, 1, steps=2000, batches=4, workers=2)
    for a, b in zip(one, two):
        assert np.array_equal(a.exponents, b.exponents)
    crn = lyapunov.scan_spectrum(cfg, spec, grid, 1, steps=2000, batches=4, common_random_numbers=True)
    assert all(s.key == () for s in crn)


def test_block_adapts_to_condition_bound(certified):
    cfg, spec = certified
    free = free_transfer(cfg, -6.0)
    assert lyapunov.adapted_block_size(free, np.ones(3), 10) < 10
    assert lyapunov.adapted_block_size(np.eye(6) * 0.5, np.zeros(3), 10) == 10


@pytest.mark.parametrize("kw", [dict(steps=999), dict(block_size=0), dict(block_size=101),
                                dict(scheme="svd"), dict(batches=1)])
def test_preconditions(certified, kw):
    cfg, spec = certified
    args = dict(steps=2000, batches=4)
    args.update(kw)
    with pytest.raises(PreconditionError):
        lyapunov.estimate_spectrum(cfg, 1.6, spec, 0, **args)


def test_holder_fit_recovers_exponent():
    e = np.linspace(0, 1, 201)
    fit = lyapunov.holder_exponent_fit(e, np.sqrt(e))
    assert fit.alpha == pytest.approx(0.5, abs=0.02)
    assert not fit.inconclusive
    lip = lyapunov.holder_exponent_fit(e, 3 * e)
    assert lip.alpha == pytest.approx(1.0, abs=1e-6) and lip.c == pytest.approx(3.0, rel=1e-6)


def test_holder_fit_noise_floor_and_small_samples():
    e = np.linspace(0, 1, 20)
    flat = lyapunov.holder_exponent_fit(e, 1e-9 * e, noise_floor=1e-6)
    assert flat.inconclusive
    with pytest.raises(InsufficientData):
        lyapunov.holder_exponent_fit(e[:5], e[:5])
