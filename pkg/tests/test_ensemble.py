from __future__ import annotations

import dataclasses

import numpy as np
import pytest

from gari.augment import build_correlated, build_gari
from gari import ensemble as ens
from gari.decoder import DecodeOutcome, DecoderConfig, decode
from gari.dem import DemModel, DetectorTyping, ErrorMechanism, load_dem
from gari.ensemble import EnsembleConfig, ensemble_decode
from gari.harness import sample_shot
from gari.rng import mix_seed
from conftest import require_fixture


@pytest.fixture(scope="module")
def d6_hard():
    cm = build_correlated(load_dem(require_fixture(6, 0.006)))
    return cm, build_gari(cm)


def lockstep_oracle(gm, s_x, s_z, cfg):
    runs = [decode(gm, s_x, s_z, dataclasses.replace(cfg.decoder, seed=cfg.seed_of(k)))
            for k in range(cfg.size)]
    done = [(r.iterations, r.weight, k) for k, r in enumerate(runs) if r.converged]
    if not done:
        return 0, runs[0], runs
    _, _, k = min(done)
    return k, runs[k], runs


def test_size_one_is_plain_decode(toy):
    _, gm = toy
    cfg = EnsembleConfig(size=1, base_seed=9)
    out = ensemble_decode(gm, [1], [1], cfg)
    ref = decode(gm, [1], [1], DecoderConfig(seed=mix_seed(9, 0)))
    assert (out.converged, out.iterations, out.member) == (ref.converged, ref.iterations, 0)
    assert np.array_equal(out.ebar_hat, ref.ebar_hat)


def test_config_validation():
    with pytest.raises(ValueError):
        EnsembleConfig(size=0)
    with pytest.raises(ValueError):
        EnsembleConfig(size=2, member_seeds=[1])
    assert EnsembleConfig(size=2, member_seeds=[5, 6]).seed_of(1) == 6
    assert EnsembleConfig(base_seed=3).seed_of(4) == mix_seed(3, 4)


def test_identical_seeds_equal_single_decoder(d6_hard):
    cm, gm = d6_hard
    for shot in range(10):
        _, s_x, s_z, _ = sample_shot(cm, shot)
        out = ensemble_decode(gm, s_x, s_z, EnsembleConfig(size=4, member_seeds=[7] * 4))
        ref = decode(gm, s_x, s_z, DecoderConfig(seed=7))
        assert (out.converged, out.iterations, out.member) == (ref.converged, ref.iterations, 0)
        assert np.array_equal(out.ebar_hat, ref.ebar_hat)


def test_matches_lockstep_oracle_and_dominates(d6_hard):
    cm, gm = d6_hard
    cfg = EnsembleConfig(size=6, base_seed=11, decoder=DecoderConfig(max_iters=120))
    for shot in range(40):
        _, s_x, s_z, _ = sample_shot(cm, 1000 + shot)
        out = ensemble_decode(gm, s_x, s_z, cfg)
        k, ref, runs = lockstep_oracle(gm, s_x, s_z, cfg)
        assert out.member == k
        assert (out.converged, out.iterations) == (ref.converged, ref.iterations)
        assert np.array_equal(out.ebar_hat, ref.ebar_hat)
        if any(r.converged for r in runs):
            assert out.converged
            assert out.iterations == min(r.iterations for r in runs if r.converged)


def test_tie_goes_to_lower_weight_then_index():
    # two Z-side columns with the same footprint; members differ only by seed,
    # and every member converges at iteration 1 to the same lowest-weight fix
    m = DemModel((ErrorMechanism(0.01, (0,), ()), ErrorMechanism(0.02, (1,), ()),
                  ErrorMechanism(0.05, (1,), (0,))), 2, 1,
                 DetectorTyping(np.array([0, 1], dtype=np.int8)))
    gm = build_gari(build_correlated(m))
    out = ensemble_decode(gm, [0], [1], EnsembleConfig(size=5, base_seed=2))
    assert out.converged and out.iterations == 1
    assert out.member == 0
    # the heavier-prior column (obs L0) has the lower weight
    assert out.predicted_obs == 1


def test_no_convergence_returns_member_zero():
    m = DemModel((ErrorMechanism(0.01, (0,), ()), ErrorMechanism(0.01, (1, 2), (0,))), 3, 1,
                 DetectorTyping(np.array([0, 1, 1], dtype=np.int8)))
    gm = build_gari(build_correlated(m))
    out = ensemble_decode(gm, [0], [1, 0], EnsembleConfig(size=3, decoder=DecoderConfig(max_iters=5)))
    assert not out.converged and out.member == 0 and out.iterations == 5


def scripted(monkeypatch, plan):
    """Replace decode by per-seed (stop iteration, weight) scripts honouring the cap."""
    def fake(gm, s_x, s_z, cfg):
        t, w = plan[cfg.seed]
        ok = t <= cfg.max_iters
        return DecodeOutcome(ok, t if ok else cfg.max_iters, np.zeros(1, np.uint8), cfg.seed, w)
    monkeypatch.setattr(ens, "decode", fake)


def test_same_stop_picks_lowest_weight(monkeypatch):
    scripted(monkeypatch, {0: (3, 4.2), 1: (3, 3.1), 2: (4, 1.0)})
    out = ensemble_decode(None, None, None, EnsembleConfig(size=3, member_seeds=[0, 1, 2]))
    assert (out.member, out.iterations, out.weight) == (1, 3, 3.1)


def test_earlier_stop_beats_lighter_solution(monkeypatch):
    scripted(monkeypatch, {0: (5, 3.0), 1: (2, 8.0)})
    out = ensemble_decode(None, None, None, EnsembleConfig(size=2, member_seeds=[0, 1]))
    assert (out.member, out.iterations, out.weight) == (1, 2, 8.0)


def test_full_tie_goes_to_lowest_index(monkeypatch):
    scripted(monkeypatch, {0: (9, 2.0), 1: (4, 2.0), 2: (4, 2.0)})
    out = ensemble_decode(None, None, None, EnsembleConfig(size=3, member_seeds=[0, 1, 2]))
    assert out.member == 1
