from __future__ import annotations

import json
import math

import numpy as np
import pytest

from gari import _kernels as K
from gari.augment import build_correlated, build_gari
from gari.decoder import DecoderConfig, decode
from gari.dem import DemModel, DetectorTyping, ErrorMechanism
from gari.harness import (
    ExperimentConfig,
    _Sampler,
    ci99,
    compose_rounds,
    latency_projection,
    ler_per_round,
    run_experiment,
    run_shots,
    summarize,
)
from gari.rng import xoshiro_state
from gari.synthetic import random_correlated_dem
from oracles import wilson


def test_zero_priors_sample_nothing(toy):
    cm, _ = toy
    sam = _Sampler(cm)
    fired = np.empty(3, np.uint8)
    syn = np.empty(2, np.uint8)
    K.sample_errors(sam.col_ptr, sam.col_rows, np.zeros(3), 2, xoshiro_state(1)[0], fired, syn)
    assert not fired.any() and not syn.any()


def test_forced_y_fault(toy):
    cm, _ = toy
    sam = _Sampler(cm)
    sam.priors = np.array([0.0, 0.0, 1.0])
    fired, s_x, s_z, obs = sam.sample(3)
    assert fired.tolist() == [0, 0, 1]
    assert (s_x.tolist(), s_z.tolist(), obs) == ([1], [1], 1)


def test_firing_frequency():
    m = DemModel((ErrorMechanism(0.25, (0,), ()),), 1, 0,
                 DetectorTyping(np.array([0], dtype=np.int8)))
    sam = _Sampler(build_correlated(m))
    hits = sum(int(sam.sample(i)[0][0]) for i in range(100_000))
    assert 0.24 <= hits / 100_000 <= 0.26


def test_sampled_syndrome_is_consistent():
    cm = build_correlated(random_correlated_dem(np.random.default_rng(0), p_range=(0.2, 0.4)))
    sam = _Sampler(cm)
    for seed in range(20):
        fired, s_x, s_z, _ = sam.sample(seed)
        s = (cm.dxyz.csr @ fired.astype(np.int64)) % 2
        assert np.array_equal(s, np.concatenate([s_x, s_z]))


def tiny_model():
    m = DemModel((ErrorMechanism(1e-6, (0, 1), (0,)),), 2, 1,
                 DetectorTyping(np.array([0, 1], dtype=np.int8)))
    cm = build_correlated(m)
    return cm, build_gari(cm)


def test_quiet_model_and_reproducibility():
    cm, gm = tiny_model()
    cfg = ExperimentConfig(shots=100, seed=4)
    a = run_experiment(gm, cm, cfg, workers=1)
    b = run_experiment(gm, cm, cfg, workers=1)
    assert a.ler == 0.0 and a.to_json() == b.to_json()
    assert a.low_confidence


def test_report_invariants():
    cm = build_correlated(random_correlated_dem(np.random.default_rng(2), p_range=(0.05, 0.2)))
    gm = build_gari(cm)
    rep = run_experiment(gm, cm, ExperimentConfig(shots=500, seed=1, rounds=3,
                                                  decoder=DecoderConfig(max_iters=20)))
    assert rep.failures == rep.non_convergences + rep.mis_corrections
    assert rep.ler == rep.failures / rep.shots
    hist_mean = sum(k * v for k, v in rep.iteration_histogram.items()) / rep.shots
    assert rep.avg_iterations == hist_mean
    assert rep.ler_per_round == pytest.approx(ler_per_round(rep.ler, 3))
    assert rep.ci99[0] <= rep.ler <= rep.ci99[1]
    assert rep.ci99_per_round[0] <= rep.ler_per_round <= rep.ci99_per_round[1]
    d = json.loads(rep.to_json())
    assert d["config"]["rounds"] == 3
    csv = rep.to_csv().splitlines()
    assert csv[0] == "metric,value" and any(l.startswith("ler,") for l in csv)


def test_worker_count_does_not_change_records():
    cm = build_correlated(random_correlated_dem(np.random.default_rng(5), p_range=(0.05, 0.2)))
    gm = build_gari(cm)
    cfg = ExperimentConfig(shots=120, seed=8, ensemble_size=3)
    one = run_shots(gm, cm, cfg, workers=1)
    three = run_shots(gm, cm, cfg, workers=3)
    assert np.array_equal(one, three)
    assert summarize(one, cfg).to_json() == summarize(three, cfg).to_json()


def test_unsatisfiable_injection_is_all_non_convergent():
    m = DemModel((ErrorMechanism(0.01, (0,), ()), ErrorMechanism(0.01, (1, 2), (0,))), 3, 1,
                 DetectorTyping(np.array([0, 1, 1], dtype=np.int8)))
    gm = build_gari(build_correlated(m))
    cfg = ExperimentConfig(shots=10, decoder=DecoderConfig(max_iters=10))
    rows = []
    for seed in range(cfg.shots):
        r = decode(gm, [seed % 2], [1, 0], DecoderConfig(max_iters=10, seed=seed))
        rows.append((r.converged, r.iterations, 0, True))
    rep = summarize(np.array(rows, dtype=np.int64), cfg)
    assert rep.non_convergences == rep.shots == rep.failures


@pytest.mark.parametrize("r", [1, 3, 12])
def test_ler_per_round_fixed_points(r):
    assert ler_per_round(0.0, r) == 0.0
    assert ler_per_round(0.5, r) == 0.5


def test_ler_per_round_round_trip_example():
    assert ler_per_round(compose_rounds(0.01, 12), 12) == pytest.approx(0.01, abs=1e-14)


def test_ler_per_round_domain():
    with pytest.raises(ValueError):
        ler_per_round(0.6, 2)
    with pytest.raises(ValueError):
        ler_per_round(0.1, 0)


def test_ci99_examples():
    assert ci99(0, 100)[0] == 0.0
    lo, hi = ci99(50, 100)
    assert (lo + hi) / 2 == pytest.approx(0.5)
    lo, hi = ci99(100, 10**6)
    assert lo == pytest.approx(0.77e-4, abs=0.01e-4)
    assert hi == pytest.approx(1.30e-4, abs=0.01e-4)


@pytest.mark.parametrize("k, n", [(0, 10), (3, 50), (100, 10**6), (999, 1000), (7, 7)])
def test_ci99_matches_oracles(k, n):
    assert ci99(k, n) == pytest.approx(wilson(k, n), abs=1e-12)
    sm = pytest.importorskip("statsmodels.stats.proportion")
    lo, hi = sm.proportion_confint(k, n, alpha=0.01, method="wilson")
    assert ci99(k, n) == pytest.approx((lo, hi), abs=1e-5)


def test_latency_examples():
    lat = latency_projection(1.13, 2900, 12)
    assert lat["per_round_avg_ns"] == pytest.approx(273.08, abs=0.01)
    lat = latency_projection(1.0, 2900, 12, {1: 90, 2: 10}, 1000)
    assert lat["budget_iters"] == 4
    assert lat["fraction_within_budget"] == 1.0
    lat = latency_projection(1.0, 2900, 12, {1: 90, 5: 10}, 1000)
    assert lat["fraction_within_budget"] == 0.9


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(shots=0)
    with pytest.raises(ValueError):
        ExperimentConfig(shots=1, rounds=0)
    with pytest.raises(ValueError):
        ExperimentConfig(shots=1, output_format="xml")


def test_compose_round_trip_well_conditioned():
    worst = max(abs(ler_per_round(compose_rounds(p, r), r) - p)
                for p in np.geomspace(1e-6, 0.25, 60) for r in range(1, 21))
    assert worst < 1e-12


@pytest.mark.parametrize("p", [0.3, 0.35, 0.4])
@pytest.mark.parametrize("r", [1, 5, 10, 20])
def test_compose_round_trip_within_conditioning_bound(p, r):
    # near LER = 1/2 the inverse amplifies the rounding of LER by dp/dLER
    ler = compose_rounds(p, r)
    slope = (1 - 2 * ler) ** (1 / r - 1) / r if ler < 0.5 else math.inf
    bound = 4 * math.ulp(0.5) * slope + 1e-15
    assert abs(ler_per_round(ler, r) - p) <= bound
