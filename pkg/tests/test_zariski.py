import numpy as np
import pytest
from scipy.optimize import brentq, minimize_scalar

from deltachain import sampling, zariski
from deltachain.errors import PreconditionError, RegimeError
from deltachain.transfer import SQRT2, ModelConfig, channel_levels

B0_DISPLAY = np.zeros((6, 6))
B0_DISPLAY[4, 1:3] = (2, 1)
B0_DISPLAY[5, 1] = 1
B1_DISPLAY = np.zeros((6, 6))
B1_DISPLAY[4, 2] = 1
B1_DISPLAY[5, 1:3] = (1, 2)


@pytest.mark.parametrize("potential", ["tridiagonal", "lifted"])
@pytest.mark.parametrize("energy", [-3.0, -0.5, 1.2, 1.6, 7.3])
def test_generators_in_sp3(potential, energy):
    for l in range(11):
        assert zariski.is_sp3(zariski.build_d1(energy, l, potential))
        assert zariski.is_sp3(zariski.build_d2(energy, l, potential))


def test_sp3_membership_rejects():
    m = np.zeros((6, 6))
    m[0, 3] = 1.0
    m[1, 3] = 2.0  # b1 not symmetric
    assert not zariski.is_sp3(m)
    assert not zariski.is_sp3(np.eye(3))


def test_threshold_rejected():
    with pytest.raises(RegimeError):
        zariski.build_d1(SQRT2, 1)


@pytest.mark.parametrize("energy", [1.5 + 1e-3, 1.6, 2.9, 6.0])
def test_brackets_match_displays(energy):
    b0, b1 = zariski.build_brackets(energy, "lifted")
    assert np.allclose(b0, B0_DISPLAY, atol=1e-12)
    assert np.allclose(b1, B1_DISPLAY, atol=1e-12)


def test_brackets_refuse_on_critical_set():
    with pytest.raises(PreconditionError):
        zariski.build_brackets(1.5, "lifted")


@pytest.mark.parametrize("potential", ["tridiagonal", "lifted"])
def test_det88_identity_all_regimes(potential):
    for e in np.concatenate([np.linspace(-4, -1.5, 7), np.linspace(-1.3, 1.3, 7), np.linspace(1.5, 12, 30)]):
        if np.min(np.abs(e - channel_levels(potential))) < 1e-3:
            continue
        num = zariski.det88(e, potential)
        cf = zariski.det88_closed_form(e, potential)
        scale = np.prod(np.linalg.norm(zariski.det88_matrix(e, potential), axis=0))
        assert abs(num - cf) <= 1e-7 * abs(cf) + 1e-13 * scale


def test_det88_extended_near_zero():
    # closed form is ~1e-38 near E = pi^2, where double precision only gives roundoff
    e = np.pi ** 2 + 1e-9
    cf = zariski.det88_closed_form(e)
    assert cf == pytest.approx(zariski.det88_extended(e), rel=1e-7)


def test_det1313_reference_value():
    v = zariski.det1313(1.6, "lifted")
    assert v < 0
    assert abs(v) == pytest.approx(3507.662, rel=1e-5)


def test_orthogonal_supports():
    d1 = [zariski.build_d1(1.6, l, "lifted") for l in range(8)]
    rest = list(zariski.build_brackets(1.6, "lifted")) + [zariski.build_d2(1.6, l, "lifted") for l in range(11)]
    for a in d1:
        for b in rest:
            assert abs(np.sum(a * b)) < 1e-12


def test_span_and_closure_dimensions():
    d1 = [zariski.build_d1(1.6, l, "lifted") for l in range(8)]
    res = zariski.lie_closure(d1)
    assert res.span_dim == 8
    assert res.dim == 21
    full = zariski.lie_closure(zariski.generator_family(1.6, "lifted"))
    assert full.span_dim == 21 and full.dim == 21 and full.gap > 1e6


def test_closure_of_subalgebra():
    # diagonal generators of sp_1 x sp_1 x sp_1 close on a 9-dim algebra
    gens = []
    for i in range(3):
        for a, b in ((i, i + 3), (i + 3, i)):
            m = np.zeros((6, 6))
            m[a, b] = 1.0
            gens.append(m)
    assert zariski.lie_closure(gens).dim == 9
    assert zariski.lie_closure_dim(gens[:1]) == 1


def _factor_roots(lo, hi, potential="lifted"):
    lv = np.array([1.0 if potential == "lifted" else 0.0, SQRT2, -SQRT2])

    def factors(e):
        a, b, g = np.sqrt(e - lv)
        ca, cb, cg = np.cos([a, b, g])
        x = -np.sin(2 * a) ** 2 + cb ** 2 + cg ** 2 + 2 * cb * cg * (1 - 2 * ca ** 2)
        return np.array([np.sin(a), np.sin(b), np.sin(g), cb - cg, ca ** 2 - cb ** 2, ca ** 2 - cg ** 2, x])

    grid = np.linspace(lo, hi, 20001)
    vals = np.array([factors(e) for e in grid])
    roots = []
    for k in range(vals.shape[1]):
        v = vals[:, k]
        for i in np.nonzero(np.sign(v[:-1]) * np.sign(v[1:]) < 0)[0]:
            roots.append(brentq(lambda e: factors(e)[k], grid[i], grid[i + 1], xtol=1e-13))
        # even-order roots of X touch zero without a sign change
        for i in range(1, v.size - 1):
            if abs(v[i]) < abs(v[i - 1]) and abs(v[i]) < abs(v[i + 1]) and abs(v[i]) < 1e-3:
                r = minimize_scalar(lambda e: abs(factors(e)[k]), bounds=(grid[i - 1], grid[i + 1]),
                                    method="bounded", options={"xatol": 1e-12})
                roots.append(r.x)
    roots = np.sort(roots)
    keep = np.concatenate([[True], np.diff(roots) > 1e-6])
    return roots[keep]


def test_scan_roots_match_closed_form_factors():
    lo, hi = 1.45, 10.0
    found = np.array(zariski.scan_critical_set((lo, hi), 0.01, zariski.DetKind.DET88, "lifted").zeros)
    expect = _factor_roots(lo, hi)
    assert found.size == expect.size
    assert np.abs(found - expect).max() < 1e-6


def test_scan_splits_at_thresholds():
    cs = zariski.scan_critical_set((0.5, 2.0), 0.05, zariski.DetKind.DET88, "lifted")
    assert 1.0 in cs.splits and any(abs(s - SQRT2) < 1e-12 for s in cs.splits)
    assert all(abs(z - 1.0) > 1e-7 and abs(z - SQRT2) > 1e-7 for z in cs.zeros)


def test_certificate_pass_and_undecided(certified):
    cfg, spec = certified
    c = zariski.certify_zariski_dense(1.6, cfg, spec)
    assert c.verdict == "PASS" and c.closure_dim == 21
    d = c.to_dict()
    assert set(d) >= {"E", "det88", "det1313", "closureDim", "verdict", "witnesses"}
    assert zariski.certify_zariski_dense(1.5, cfg, spec).verdict == "UNDECIDED"
    assert zariski.certify_zariski_dense(1.6, cfg, spec).witnesses == c.witnesses


def test_certificate_needs_jump_directions():
    cfg = ModelConfig((1.0, 0.0, 1.0), "lifted")
    only_first = sampling.bernoulli(3, frozen={1: 0.0, 2: 0.0})
    with pytest.raises(PreconditionError):
        zariski.certify_zariski_dense(1.6, cfg, only_first)
