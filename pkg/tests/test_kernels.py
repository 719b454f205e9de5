import math

import numpy as np
import pytest

from fennsim.fixedpoint import S1_14, S3_12, QFormat, RoundingMode
from fennsim.kernels import AdditiveMode, AlifParams, ConfigError, NumericConfig
from fennsim.kernels.alif import alif_oracle, run_alif
from fennsim.kernels.config import alif_constants
from fennsim.kernels.multiply import run_multiply
from fennsim.kernels.poisson import LambdaOutOfRange, chunks, limit_raw, poisson_oracle, run_poisson
from fennsim.kernels.rsnn import (RsnnTopology, check_events, random_events, random_topology, rsnn_oracle,
                                  run_rsnn)
from fennsim.fixedpoint import mul_raw
from fennsim.reference import chi_square_gof, poisson_pmf

RTN = RoundingMode.ROUND_TO_NEAREST
S7_8 = QFormat(8)


# ---- ALIF

def test_alif_zero_input_stays_at_rest():
    for mode in RoundingMode:
        r = run_alif(AlifParams(), NumericConfig(S3_12, rounding=mode), np.zeros(50), seed=2)
        assert not r.v.any() and not r.a.any() and not r.spikes.any()


def test_lif_first_spike_time():
    # pure LIF under constant drive: V[t] = I (1 - alpha^t) / (1 - alpha)
    p = AlifParams(tau_m=20.0, beta=0.0)
    drive = 0.05
    r = run_alif(p, NumericConfig(S3_12, rounding=RTN), np.full(60, drive))
    t_exact = math.ceil(math.log(1 - p.v_th * (1 - p.alpha) / drive) / math.log(p.alpha))
    t_sim = int(np.argmax(r.spikes[:, 0]))
    assert r.spikes[:, 0].any()
    assert abs(t_sim - t_exact) <= 1


def test_adaptation_slows_firing():
    drive = np.full(400, 0.08)
    num = NumericConfig(S3_12, adapt_format=S7_8, rounding=RTN)
    lif = run_alif(AlifParams(beta=0.0), num, drive).spikes[:, 0].sum()
    alif = run_alif(AlifParams(beta=0.05), num, drive).spikes[:, 0].sum()
    assert 0 < alif < lif


@pytest.mark.parametrize("mode", list(RoundingMode))
@pytest.mark.parametrize("additive", list(AdditiveMode))
def test_alif_simulator_matches_oracle(mode, additive):
    g = np.random.default_rng(4)
    num = NumericConfig(S3_12, rounding=mode, additive_mode=additive, adapt_format=S7_8)
    cur = g.uniform(-0.2, 0.3, (80, 32))
    sim = run_alif(AlifParams(), num, cur, seed=6)
    ref = alif_oracle(AlifParams(), num, cur, seed=6)
    assert np.array_equal(sim.v, ref.v) and np.array_equal(sim.a, ref.a)
    assert np.array_equal(sim.spikes, ref.spikes)


def test_alif_rejects_bad_input_shape():
    with pytest.raises(ConfigError):
        run_alif(AlifParams(), NumericConfig(S3_12), np.zeros((5, 16)))


def test_alif_constants_representable():
    c = alif_constants(AlifParams(), NumericConfig(S3_12))
    assert c is not None
    with pytest.raises(ConfigError):
        AlifParams(tau_m=0)


# ---- multiply kernel

def test_multiply_kernel_matches_host():
    g = np.random.default_rng(1)
    a = g.integers(-32767, 32768, 100)
    b = g.integers(-32767, 32768, 100)
    out = run_multiply(a, b, 15)
    assert out[RoundingMode.ROUND_TO_ZERO].tolist() == [mul_raw(int(x), int(y), 15, RoundingMode.ROUND_TO_ZERO)
                                                        for x, y in zip(a, b)]
    assert out[RTN].tolist() == [mul_raw(int(x), int(y), 15, RTN) for x, y in zip(a, b)]


# ---- Poisson

def test_poisson_tiny_lambda_gives_zeros():
    assert limit_raw(1e-6) == 0x7FFF
    assert not run_poisson(1e-6, 64, seed=1).counts.any()


def test_poisson_lambda_validation():
    for bad in (0.0, -1.0, float("nan"), 1000.0):
        with pytest.raises(LambdaOutOfRange):
            chunks(bad)
    assert chunks(5.0) == (1, 5.0)
    assert chunks(12.0) == (3, 4.0)


def test_poisson_limit_value():
    # e^-5 * 32768 = 220.79...
    assert limit_raw(5.0) == 221


@pytest.mark.parametrize("lam", [1.0, 5.0, 10.0])
def test_poisson_goodness_of_fit(lam):
    r = run_poisson(lam, 3200, seed=3)
    assert len(r.counts) == 3200
    gof = chi_square_gof(r.counts, lambda k: poisson_pmf(lam, k))
    assert gof.passed, gof


def test_poisson_simulator_matches_oracle():
    r = run_poisson(5.0, 320, seed=8)
    assert np.array_equal(r.counts, poisson_oracle(5.0, 320, seed=8))


def test_poisson_partial_vector_is_trimmed():
    assert len(run_poisson(3.0, 40, seed=1).counts) == 40


# ---- RSNN

def _empty(nh=32, n_in=4, n_out=3):
    return RsnnTopology(np.zeros((n_in, nh), np.int16), np.zeros((nh, nh), np.int16), np.zeros((nh, n_out), np.int16))


def test_rsnn_zero_weights_stay_silent():
    g = np.random.default_rng(0)
    top = _empty(64)
    r = run_rsnn(top, NumericConfig(S3_12), random_events(g, 4, 30, 0.5), 30)
    assert not r.v.any() and not r.spikes.any() and not r.y.any()


def test_rsnn_single_input_spike_delivers_weight():
    top = _empty()
    w = top.w_in.copy()
    w[1, 5] = 4096  # 0.25 in S1.14
    top = RsnnTopology(w, top.w_rec, top.w_out)
    r = run_rsnn(top, NumericConfig(S3_12, rounding=RTN), [(0, 1)], 3)
    assert r.v[0, 5] == 1024  # 0.25 in S3.12
    assert np.count_nonzero(r.v[0]) == 1
    assert r.v[1, 5] == mul_raw(1024, alif_constants(top.params, NumericConfig(S3_12)).alpha,
                                alif_constants(top.params, NumericConfig(S3_12)).alpha_shift, RTN)


@pytest.mark.parametrize("nh", [32, 64, 96])
def test_rsnn_simulator_matches_oracle(nh):
    g = np.random.default_rng(nh)
    num = NumericConfig(S3_12, adapt_format=S7_8)
    top = random_topology(g, 16, nh, 5, num)
    ev = random_events(g, 16, 40, 0.1)
    sim = run_rsnn(top, num, ev, 40, seed=3)
    assert sim.spikes.any()
    assert sim.same_trajectory(rsnn_oracle(top, num, ev, 40, seed=3))


def test_rsnn_event_checks():
    with pytest.raises(ConfigError):
        check_events([(5, 0)], 4, 5)
    with pytest.raises(ConfigError):
        check_events([(0, 4)], 4, 5)
    with pytest.raises(ConfigError):
        check_events([(2, 0), (1, 0)], 4, 5)
    assert check_events([], 4, 5).shape == (0, 2)


def test_rsnn_topology_checks():
    with pytest.raises(ConfigError):
        _empty(nh=40)
    with pytest.raises(ConfigError):
        RsnnTopology(np.zeros((2, 32)), np.zeros((32, 31)), np.zeros((32, 1)))
