"""Acceptance criteria, each at its stated tolerance and time budget.

A summary line per criterion (PASS/FAIL plus the measured figures) is printed
at the end of the pytest run.
"""
import json
import time
import xml.etree.ElementTree as ET
from pathlib import Path

import jsonschema
import numpy as np
import pytest
from conftest import CLEAN, prbs_scenario
from scipy import signal as sps

from gridsysid import ContinuousTf, SweepConfig, end_to_end_roundtrip
from gridsysid.cli import main
from gridsysid.emulator import REFERENCE_PLANT
from gridsysid.estimation import ArxModel, ModelOrder, fit_arx, simulate_free_run
from gridsysid.metrics import FitScore, FpeScore, confidence_band, fpe, nrmse_fit
from gridsysid.order_search import FitReport, select_best
from gridsysid.preprocess import demean, detrend_linear, median_filter, sliding_rms
from gridsysid.schemas import SCHEMAS
from gridsysid.tf import continuous_to_arx, continuous_to_discrete, discrete_to_continuous, poles_zeros, step_response
from gridsysid.timeseries import Signal, SignalPair


def mls(n, rng):
    order = max(4, int(np.ceil(np.log2(n + 1))))
    state = rng.integers(0, 2, size=order)
    state[0] = 1
    return 2.0 * sps.max_len_seq(order, state=state, length=n)[0] - 1.0


def stable_denominator(n, rng, radius=0.95):
    roots = []
    while len(roots) < n:
        if n - len(roots) >= 2 and rng.random() < 0.5:
            z = radius * np.sqrt(rng.random()) * np.exp(1j * np.pi * rng.random())
            roots += [z, np.conj(z)]
        else:
            roots.append(rng.uniform(-radius, radius))
    return np.real(np.poly(roots))


def normalised_roots(k, rng, stable=True, lo=0.05, hi=1.5):
    """``k`` real or conjugate-pair roots ``lam`` with ``lo <= |Re lam|, |Im lam| <= hi``."""
    out = []
    while len(out) < k:
        sign = -1.0 if stable or rng.random() < 0.5 else 1.0
        if k - len(out) >= 2 and rng.random() < 0.5:
            re, im = rng.uniform(lo, hi), rng.uniform(lo, hi)
            out += [complex(sign * re, im), complex(sign * re, -im)]
        else:
            out.append(sign * rng.uniform(lo, hi))
    return np.array(out)


@pytest.mark.acceptance(1, "coefficient recovery on >= 100 random stable ARX models")
def test_ac1_coefficient_recovery(record_property):
    rng = np.random.default_rng(2024)
    started = time.perf_counter()
    worst, count = 0.0, 0
    for _ in range(150):
        n = int(rng.integers(1, 4))
        m = int(rng.integers(1, n + 1))
        a = stable_denominator(n, rng)[1:]
        b = rng.normal(size=m)
        u = mls(50 * (n + m), rng)
        y = sps.lfilter(np.concatenate([[0.0], b]), np.concatenate([[1.0], a]), u)
        model = fit_arx(SignalPair.from_arrays(u, y, ts=0.1), ModelOrder(n, m))
        worst = max(worst, np.max(np.abs(model.a - a)), np.max(np.abs(model.b - b)))
        count += 1
    elapsed = time.perf_counter() - started
    record_property("models", count)
    record_property("max_abs_err", f"{worst:.2e}")
    record_property("seconds", f"{elapsed:.2f}")
    assert count >= 100 and worst < 1e-6 and elapsed < 30


@pytest.mark.acceptance(2, "reference plant round trip through the full pipeline")
def test_ac2_reference_plant_round_trip(record_property):
    started = time.perf_counter()
    best = end_to_end_roundtrip(prbs_scenario(), CLEAN, SweepConfig(selection="best_fpe"))
    elapsed = time.perf_counter() - started
    rel = max(np.max(np.abs(best.continuous.num / REFERENCE_PLANT.num - 1)),
              np.max(np.abs(best.continuous.den / REFERENCE_PLANT.den - 1))) if best.order == ModelOrder(2, 1) else np.inf
    record_property("order", f"({best.order.n},{best.order.m})")
    record_property("max_rel_err", f"{rel:.2e}")
    record_property("seconds", f"{elapsed:.2f}")
    assert best.order == ModelOrder(2, 1) and rel < 1e-3 and elapsed < 10


@pytest.mark.acceptance(3, "selection on the published three-candidate table")
def test_ac3_published_candidates(record_property):
    rows = [
        ((2, 1), ContinuousTf([-0.02113, -9.334e-4], [1.0, 2.104, 0.1133]), 76.77, 74.24, 3.118e-4),
        ((3, 1), ContinuousTf([-0.06635, 1.6e-4], [1.0, 4.344, 6.701, 0.012222]), 74.2, 72.45, 3.85e-4),
        ((3, 2), ContinuousTf([-0.02651, -9.392e-3, -0.1478], [1.0, 3.024, 6.661, 14.69]), 76.17, 73.92, 3.28e-4),
    ]
    reports = []
    for order, cont, train, test, value in rows:
        order = ModelOrder(*order)
        reports.append(FitReport(
            order, continuous_to_arx(cont, 0.1), cont,
            FitScore(train / 100, train, 0.0, 1000), FitScore(test / 100, test, 0.0, 1000),
            FpeScore(value, order.n + order.m + 1, 1000), True, poles_zeros(cont)))
    chosen = {sel: select_best(reports[::-1], sel).order for sel in ("best_test_fit", "best_fpe")}
    record_property("selected", ", ".join(f"{k}->({v.n},{v.m})" for k, v in chosen.items()))
    assert all(o == ModelOrder(2, 1) for o in chosen.values())


@pytest.mark.acceptance(4, "metric identities")
def test_ac4_metric_identities(record_property):
    rng = np.random.default_rng(4)
    y = rng.standard_normal(100)
    assert nrmse_fit(y, y).fit_percent == 100.0
    assert abs(nrmse_fit(y, np.full_like(y, y.mean())).fit_percent) < 1e-12
    assert fpe(np.zeros(50), 3).fpe == 0.0
    e = rng.standard_normal(60)
    values = [fpe(e, d).fpe for d in range(1, 59)]
    assert all(b > a for a, b in zip(values, values[1:]))
    hand = fpe([1, -1, 1, -1], 1).fpe
    record_property("fpe_hand_case", repr(hand))
    assert abs(hand - 5 / 3) <= 1e-12


@pytest.mark.acceptance(5, "transfer-function algebra")
def test_ac5_tf_algebra(record_property):
    rng = np.random.default_rng(5)
    worst_rt, worst_dc = 0.0, 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 5))
        m = int(rng.integers(0, n + 1))
        ts = rng.uniform(0.01, 0.3)
        # poles and zeros drawn on the sampling scale, 0.05 <= |s| ts <= 1.5
        zeros = normalised_roots(m, rng, stable=False) / ts
        g = ContinuousTf(rng.normal() * np.real(np.poly(zeros)), np.real(np.poly(normalised_roots(n, rng) / ts)))
        h = continuous_to_discrete(g, ts)
        back = discrete_to_continuous(h)
        for got, ref in ((back.num, g.num), (back.den, g.den)):
            worst_rt = max(worst_rt, np.max(np.abs(got - ref) / np.abs(ref)))
        worst_dc = max(worst_dc, abs(h.dc_gain() - g.dc_gain()) / max(1.0, abs(g.dc_gain())))
    a1, a0 = 2.104, 0.1133
    disc = np.sqrt(a1 ** 2 - 4 * a0)
    oracle = np.array([(-a1 - disc) / 2, (-a1 + disc) / 2])
    poles = poles_zeros(REFERENCE_PLANT).poles.real
    steady = step_response(REFERENCE_PLANT, 0.1, 300.0).samples[-1]
    record_property("round_trip_rel", f"{worst_rt:.1e}")
    record_property("dc_gain_err", f"{worst_dc:.1e}")
    record_property("poles", np.array2string(poles, precision=4))
    record_property("steady_state", f"{steady:.5g}")
    assert worst_rt < 1e-9 and worst_dc < 1e-10
    assert np.max(np.abs(poles - oracle)) < 1e-3 and np.max(np.abs(poles - [-2.0486, -0.0553])) < 1e-3
    assert abs(steady / -8.239e-3 - 1) < 5e-3


@pytest.mark.acceptance(6, "preprocessing oracles")
def test_ac6_preprocessing(record_property):
    rng = np.random.default_rng(6)
    for _ in range(1000):
        n = int(rng.integers(1, 60))
        w = int(rng.choice([1, 3, 5, 7, 9]))
        if w > n:
            w = 1
        x = rng.standard_normal(n)
        h = w // 2
        padded = np.concatenate([np.full(h, x[0]), x, np.full(h, x[-1])])
        brute = np.array([sorted(padded[i:i + w])[h] for i in range(n)])
        assert np.array_equal(median_filter(Signal(x, 1.0), w).samples, brute)
    amp = 3.7
    t = np.arange(2000) / 6000.0
    rms = sliding_rms(Signal(amp * np.sin(2 * np.pi * 60 * t), 1 / 6000), 100).samples
    rms_err = np.max(np.abs(rms / (amp / np.sqrt(2)) - 1))
    tt = np.arange(500) * 0.01
    detrend_err = np.max(np.abs(detrend_linear(Signal(-4.2 * tt + 1.3, 0.01)).samples))
    s = Signal(rng.normal(5, 2, 300), 1.0)
    once = demean(s)
    record_property("rms_rel_err", f"{rms_err:.1e}")
    record_property("detrend_max", f"{detrend_err:.1e}")
    assert rms_err < 1e-3 and detrend_err < 1e-12
    assert np.allclose(demean(once).samples, once.samples, rtol=0, atol=1e-12)


@pytest.mark.acceptance(7, "confidence bands")
def test_ac7_confidence_bands(record_property):
    rng = np.random.default_rng(7)
    n = 800
    u = mls(n, rng)
    y = sps.lfilter([0.0, 0.5, 0.2], [1.0, -1.1, 0.3], u) + 0.05 * rng.standard_normal(n)
    model = fit_arx(SignalPair.from_arrays(u, y, ts=0.1), ModelOrder(2, 2))
    us, y0 = Signal(u, 0.1), y[:2]
    zero = ArxModel(model.order, model.a, model.b, model.ts)
    flat = confidence_band(zero, us, y0, draws=200)
    nominal = simulate_free_run(zero, us, y0).samples
    assert np.array_equal(flat.lower.samples, nominal) and np.array_equal(flat.upper.samples, nominal)
    b95 = confidence_band(model, us, y0, level=0.95, draws=500, seed=11)
    again = confidence_band(model, us, y0, level=0.95, draws=500, seed=11)
    b99 = confidence_band(model, us, y0, level=0.99, draws=500, seed=11)
    assert b95.lower.samples.tobytes() == again.lower.samples.tobytes()
    assert b95.upper.samples.tobytes() == again.upper.samples.tobytes()
    contained = np.all(b99.lower.samples <= b95.lower.samples) and np.all(b99.upper.samples >= b95.upper.samples)
    record_property("mean_width_95", f"{np.mean(b95.upper.samples - b95.lower.samples):.3g}")
    assert contained


@pytest.mark.acceptance(8, "noise degradation over 10 seeds")
def test_ac8_noise_degradation(record_property):
    # output step size: |G(0)| times the PRBS amplitude
    amplitude = prbs_scenario().excitation.amplitude
    step = abs(REFERENCE_PLANT.dc_gain()) * amplitude

    def fits(noise):
        return [end_to_end_roundtrip(prbs_scenario(noise_std=noise, seed=seed), CLEAN).test_fit.fit_percent
                for seed in range(10)]

    clean = np.mean(fits(0.0))
    low, high = np.mean(fits(0.01 * step)), np.mean(fits(0.1 * step))
    record_property("fit_noise_free", f"{clean:.3f}")
    record_property("fit_0.01", f"{low:.3f}")
    record_property("fit_0.1", f"{high:.3f}")
    assert clean > 99 and low > high


@pytest.mark.acceptance(9, "CLI emulate -> fit -> plot end to end")
def test_ac9_cli(tmp_path, monkeypatch, record_property):
    monkeypatch.chdir(tmp_path)
    Path("scenario.json").write_text(json.dumps(prbs_scenario(seed=1).to_dict()))
    Path("pre.json").write_text(json.dumps(CLEAN.to_dict()))

    def pipeline(out):
        codes = [
            main(["--quiet", "--out-dir", out, "emulate", "scenario.json", "--out", "data.csv"]),
            main(["--quiet", "--out-dir", out, "fit", f"{out}/data.csv", "--preprocess", "pre.json",
                  "--order", "2", "1"]),
            main(["--quiet", "--out-dir", out, "plot", f"{out}/fit.csv", "--out", "fit.svg"]),
        ]
        return codes

    started = time.perf_counter()
    codes = pipeline("run1")
    elapsed = time.perf_counter() - started
    assert codes == [0, 0, 0]
    for name, schema in [("model.json", "arx_model"), ("tf.json", "continuous_tf"), ("report.json", "fit_report"),
                         ("data.manifest.json", "manifest"), ("fit.manifest.json", "manifest"),
                         ("fit.svg.manifest.json", "manifest")]:
        jsonschema.validate(json.loads(Path("run1", name).read_text()), SCHEMAS[schema])
    ET.parse("run1/fit.svg")

    assert pipeline("run2") == [0, 0, 0]
    files = sorted(p.name for p in Path("run1").iterdir())
    assert files == sorted(p.name for p in Path("run2").iterdir())
    identical = []
    for name in files:
        a, b = Path("run1", name).read_bytes(), Path("run2", name).read_bytes()
        if name.endswith(".manifest.json"):
            # manifests record wall time and their own output paths; compare the rest
            da, db = json.loads(a), json.loads(b)
            for d in (da, db):
                d.pop("wall_time_s")
                d["outputs"] = [Path(p).name for p in d["outputs"]]
                d["inputs"] = {k: Path(v).name for k, v in d["inputs"].items()}
            identical.append(da == db)
        else:
            identical.append(a == b)
    record_property("files", len(files))
    record_property("seconds", f"{elapsed:.2f}")
    assert all(identical) and elapsed < 15
