from fractions import Fraction

import numpy as np
from numpy.polynomial import polynomial as P
import pytest
from scipy import signal as sps

from gridsysid.emulator import REFERENCE_PLANT
from gridsysid.errors import DegenerateLeadingCoefficient, PoleAtMinusOne, PoleAtNyquistWarp, ValidationError
from gridsysid.estimation import ArxModel, ModelOrder, simulate_free_run
from gridsysid.tf import (
    ContinuousTf,
    DiscreteTf,
    arx_to_continuous,
    arx_to_discrete_tf,
    continuous_to_arx,
    continuous_to_discrete,
    discrete_to_continuous,
    is_stable,
    poles_zeros,
    polynomial_roots,
    step_response,
)
from gridsysid.timeseries import Signal


def random_stable_continuous(rng, n=None):
    n = int(rng.integers(1, 5)) if n is None else n
    m = int(rng.integers(0, n + 1))
    poles = []
    while len(poles) < n:
        if n - len(poles) >= 2 and rng.random() < 0.5:
            re, im = -rng.uniform(0.1, 5.0), rng.uniform(0.1, 5.0)
            poles += [complex(re, im), complex(re, -im)]
        else:
            poles.append(-rng.uniform(0.1, 5.0))
    den = np.real(np.poly(poles))
    num = rng.normal(size=m + 1)
    return ContinuousTf(num, den)


def random_stable_discrete(rng, ts):
    n = int(rng.integers(1, 5))
    m = int(rng.integers(0, n + 1))
    roots = []
    while len(roots) < n:
        r, ang = rng.uniform(0.05, 0.95), rng.uniform(0.05, np.pi - 0.05)
        if n - len(roots) >= 2 and rng.random() < 0.5:
            roots += [r * np.exp(1j * ang), r * np.exp(-1j * ang)]
        else:
            roots.append(rng.uniform(-0.9, 0.95))
    return DiscreteTf(rng.normal(size=m + 1), np.real(np.poly(roots)), ts)


def test_construction_normalises():
    g = ContinuousTf([0, 2, 4], [2, 6, 4])
    np.testing.assert_array_equal(g.num, [1, 2])
    np.testing.assert_array_equal(g.den, [1, 3, 2])
    assert g.order == (2, 1)
    with pytest.raises(ValidationError):
        ContinuousTf([1, 0, 0], [1, 1])
    with pytest.raises(ValidationError):
        ContinuousTf([1], [0, 0])


def test_printable_form():
    assert str(REFERENCE_PLANT) == "(-0.02113 s - 0.0009334) / (s^2 + 2.104 s + 0.1133)"
    assert ContinuousTf.from_dict(REFERENCE_PLANT.to_dict()).to_dict() == REFERENCE_PLANT.to_dict()


def test_arx_to_discrete_first_order():
    h = arx_to_discrete_tf(ArxModel(ModelOrder(1, 1), [-0.5], [1.0], ts=0.1))
    np.testing.assert_allclose(h.num, [1.0])
    np.testing.assert_allclose(h.den, [1.0, -0.5])


def test_arx_pure_delay():
    h = arx_to_discrete_tf(ArxModel(ModelOrder(3, 2), [0, 0, 0], [1.0, 0.0], ts=1.0))
    np.testing.assert_allclose(h(np.array([2.0, 1j])), 1 / np.array([2.0, 1j]))
    assert h.dc_gain() == pytest.approx(1.0)


def test_impulse_response_matches_free_run(rng):
    model = ArxModel(ModelOrder(3, 2), [-0.9, 0.3, -0.02], [0.5, -0.2], ts=0.1)
    # the first lag_span outputs are seeded, so the impulse goes in right after them
    k0 = model.lag_span
    impulse = np.zeros(50 + k0)
    impulse[k0] = 1.0
    b, a = arx_to_discrete_tf(model).filter_coefficients()
    expected = sps.lfilter(b, a, impulse[k0:])
    got = simulate_free_run(model, Signal(impulse, 0.1), [0, 0, 0]).samples[k0:]
    np.testing.assert_allclose(got, expected, atol=1e-10)


def test_unity_maps_to_unity():
    g = discrete_to_continuous(DiscreteTf([1.0], [1.0], 0.1))
    h = continuous_to_discrete(ContinuousTf([1.0], [1.0]), 0.1)
    for tf in (g, h):
        np.testing.assert_array_equal(tf.num, [1.0])
        np.testing.assert_array_equal(tf.den, [1.0])


def test_first_order_pole_map():
    h = continuous_to_discrete(ContinuousTf([1.0], [1.0, 1.0]), 0.1)
    np.testing.assert_allclose(poles_zeros(h).poles.real, [0.95 / 1.05], rtol=1e-14)
    assert h.dc_gain() == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("seed", range(10))
def test_matches_scipy_bilinear(seed):
    rng = np.random.default_rng(seed)
    g = random_stable_continuous(rng)
    ts = rng.uniform(0.01, 0.5)
    h = continuous_to_discrete(g, ts)
    bz, az = sps.bilinear(g.num, g.den, fs=1 / ts)
    bz, az = bz / az[0], az / az[0]
    np.testing.assert_allclose(h.den, az, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(np.concatenate([np.zeros(az.size - h.num.size), h.num]), bz, rtol=1e-10, atol=1e-12)


def test_discrete_pole_map_oracle(rng):
    ts = 0.2
    for _ in range(20):
        h = random_stable_discrete(rng, ts)
        p = poles_zeros(h).poles
        expected = np.sort_complex((2 / ts) * (p - 1) / (p + 1))
        got = np.sort_complex(poles_zeros(discrete_to_continuous(h)).poles)
        np.testing.assert_allclose(got, expected, rtol=1e-8, atol=1e-10)


def test_round_trips(rng):
    for _ in range(200):
        ts = rng.uniform(0.01, 0.3)
        g = random_stable_continuous(rng)
        back = discrete_to_continuous(continuous_to_discrete(g, ts))
        np.testing.assert_allclose(back.den, g.den, rtol=1e-9, atol=1e-9 * np.abs(g.den).max())
        np.testing.assert_allclose(back.num, g.num, rtol=1e-9, atol=1e-9 * np.abs(g.num).max())
        h = random_stable_discrete(rng, ts)
        hb = continuous_to_discrete(discrete_to_continuous(h), ts)
        np.testing.assert_allclose(hb.den, h.den, atol=1e-9)
        num = np.concatenate([np.zeros(hb.num.size - h.num.size), h.num]) if hb.num.size > h.num.size else h.num
        np.testing.assert_allclose(hb.num[-num.size:], num, atol=1e-9)


def test_dc_gain_and_stability_preserved(rng):
    for _ in range(200):
        g = random_stable_continuous(rng)
        h = continuous_to_discrete(g, rng.uniform(0.01, 1.0))
        assert h.dc_gain() == pytest.approx(g.dc_gain(), abs=1e-10 * max(1.0, abs(g.dc_gain())))
        assert is_stable(g).stable and is_stable(h).stable
        assert is_stable(discrete_to_continuous(h)).stable


def test_singularities():
    with pytest.raises(PoleAtMinusOne):
        discrete_to_continuous(DiscreteTf([1.0], [1.0, 1.0], 0.1))
    with pytest.raises(PoleAtNyquistWarp):
        continuous_to_discrete(ContinuousTf([1.0], [1.0, -20.0]), 0.1)
    with pytest.raises(DegenerateLeadingCoefficient):
        polynomial_roots([0.0, 1.0])


def test_reference_plant_poles_and_zero():
    pz = poles_zeros(REFERENCE_PLANT)
    a1, a0 = 2.104, 0.1133
    disc = np.sqrt(a1 ** 2 - 4 * a0)
    oracle = np.array([(-a1 - disc) / 2, (-a1 + disc) / 2])
    np.testing.assert_allclose(pz.poles.real, oracle, rtol=1e-12)
    np.testing.assert_allclose(pz.poles.real, [-2.0486, -0.0553], atol=1e-3)
    np.testing.assert_allclose(pz.zeros.real, [-9.334e-4 / 0.02113], rtol=1e-12)
    assert pz.zeros.real[0] == pytest.approx(-0.04417, abs=1e-5)
    assert pz.gain == pytest.approx(-0.02113)
    assert is_stable(REFERENCE_PLANT).stable


def test_factored_roots_and_reexpansion(rng):
    np.testing.assert_allclose(polynomial_roots(np.convolve([1, 1], [1, 2])), [-2, -1], atol=1e-12)
    for _ in range(50):
        p = rng.normal(size=int(rng.integers(2, 7)))
        r = polynomial_roots(p)
        np.testing.assert_allclose(p[0] * np.real(np.poly(r)), p, rtol=1e-9, atol=1e-9 * np.abs(p).max())
        assert np.all(np.isin(np.round(r[r.imag != 0], 9), np.round(np.conj(r[r.imag != 0]), 9)))


def test_stability_margins():
    assert is_stable(ContinuousTf([1.0], [1.0, -1.0])) == (False, -1.0)
    st = is_stable(DiscreteTf([1.0], [1.0, -0.999], 0.1))
    assert st.stable and st.margin == pytest.approx(0.001, abs=1e-12)


def test_step_response_steady_state():
    y = step_response(REFERENCE_PLANT, 0.1, 300.0)
    assert y.samples[-1] == pytest.approx(-9.334e-4 / 0.1133, rel=5e-3)
    assert y.samples[-1] == pytest.approx(-8.239e-3, rel=5e-3)


def test_step_response_first_order():
    y = step_response(ContinuousTf([1.0], [1.0, 1.0]), 1e-3, 5.0)
    np.testing.assert_allclose(y.samples, 1 - np.exp(-y.time), atol=1e-3)


def test_step_response_of_zero():
    np.testing.assert_array_equal(step_response(ContinuousTf([0.0], [1.0, 2.0]), 0.1, 2.0).samples, 0.0)


def test_structured_arx_round_trip(rng):
    for _ in range(100):
        g = random_stable_continuous(rng, n=int(rng.integers(1, 5)))
        ts = rng.uniform(0.02, 0.2)
        arx = continuous_to_arx(g, ts)
        assert arx.structure == "bilinear" and arx.order == ModelOrder(*g.order)
        back = arx_to_continuous(arx)
        np.testing.assert_allclose(back.den, g.den, rtol=1e-9, atol=1e-9 * np.abs(g.den).max())
        np.testing.assert_allclose(back.num, g.num, rtol=1e-9, atol=1e-9 * np.abs(g.num).max())


def exact_inverse_tustin(h, ts, n):
    """Invert the bilinear map on the float coefficients of ``h`` in rational arithmetic."""
    w = [Fraction(1), Fraction(-1)]  # 1 - w, ascending powers of w

    def substitute(coeffs):
        deg = len(coeffs) - 1
        out = np.zeros(n + 1, dtype=object) * Fraction(0)
        for i, c in enumerate(coeffs):
            k = deg - i
            poly = P.polymul(P.polypow([Fraction(1), Fraction(1)], k), P.polypow(w, n - k))
            out[:len(poly)] += Fraction(float(c)) * poly
        half = Fraction(float(ts)) / 2
        return np.array([c * half ** j for j, c in enumerate(out)], dtype=object)[::-1]

    num, den = substitute(h.num), substitute(h.den)
    lead = next(c for c in den if c != 0)
    return num / lead, den / lead


def test_oversampled_round_trip_near_float_floor():
    # slow poles relative to the sampling rate crowd the discrete roots near z = 1,
    # so rounding the discrete coefficients alone costs ~1e-9 on the way back
    ts = 0.021
    g = ContinuousTf([0.7, 0.35], np.poly([-0.5, -1.0, -1.5, -2.2]))
    h = continuous_to_discrete(g, ts)
    num_x, den_x = exact_inverse_tustin(h, ts, 4)
    floor = max(
        max(abs(float(a) - b) / abs(b) for a, b in zip(den_x[-5:], g.den)),
        max(abs(float(a) - b) / abs(b) for a, b in zip(num_x[-2:], g.num)),
    )
    back = discrete_to_continuous(h)
    ours = max(np.max(np.abs(back.den - g.den) / np.abs(g.den)), np.max(np.abs(back.num - g.num) / np.abs(g.num)))
    assert floor > 1e-12
    assert ours < 10 * floor
