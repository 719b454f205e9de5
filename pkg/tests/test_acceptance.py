"""The eleven acceptance criteria, each at its stated tolerance.

Every test records a one-line verdict (shown in the pytest terminal summary)
before asserting, so a failing criterion is still reported with its numbers.
"""

import math

import numpy as np
import pytest

from fennsim.assembler import DMEM_BASE
from fennsim.core import MachineConfig, load, run_checked
from fennsim.fixedpoint import RoundingMode, mul_raw
from fennsim.harness.experiments import DEFAULT_SEED, ExperimentSpec, run_experiment
from fennsim.isa import OP_INFO, decode, encode
from fennsim.kernels import AdditiveMode, NumericConfig
from fennsim.kernels.rsnn import random_events, random_topology, rsnn_oracle, run_rsnn

from conftest import record
from gen import random_instruction, straight_line_program
from rv32ref import RV32

pytestmark = pytest.mark.slow


def test_01_encode_decode_roundtrip():
    g = np.random.default_rng(101)
    n, bad, fmts = 100_000, 0, set()
    for _ in range(n):
        i = random_instruction(g)
        fmts.add(OP_INFO[i.op].fmt)
        if decode(encode(i)) != i:
            bad += 1
    all_fmts = {info.fmt for info in OP_INFO.values()}
    ok = bad == 0 and fmts == all_fmts
    record(1, "encode/decode round-trip", ok, f"{n - bad}/{n} exact, {len(fmts)}/{len(all_fmts)} formats")
    assert ok


def test_02_stochastic_rounding_exhaustive():
    g = np.random.default_rng(202)
    e = np.arange(1 << 15)
    worst = 0
    for _ in range(100):
        a, b = (int(v) for v in g.integers(-32768, 32768, 2))
        total = int(mul_raw(np.full(e.size, a), np.full(e.size, b), 15, RoundingMode.STOCHASTIC, e).sum())
        worst = max(worst, abs(total - a * b))  # mean * 2^15 against the exact product in 2^-30 units
    record(2, "stochastic rounding unbiased (exhaustive)", worst == 0, f"max |sum - a*b| = {worst} over 100 pairs")
    assert worst == 0


def test_03_rounding_histograms():
    r = run_experiment(ExperimentSpec("rounding-hist", DEFAULT_SEED))
    err = r.data["errors"]
    n = len(err["rtz"])
    rtz_ok = bool(np.all(err["rtz"] <= 0) and np.all(err["rtz"] > -1))
    rtn_ok = bool(np.all(np.abs(err["rtn"]) <= 0.5))
    sr = err["sr"]
    se = sr.std(ddof=1) / math.sqrt(sr.size)
    sr_ok = abs(sr.mean()) <= 3 * se
    ok = n == 21760 and rtz_ok and rtn_ok and sr_ok
    record(3, "rounding error histograms", ok,
           f"n={n}, rtz in [{err['rtz'].min():.4f}, {err['rtz'].max():.4f}], "
           f"rtn max |e| {np.abs(err['rtn']).max():.4f}, sr mean {sr.mean():+.4f} (3 SE {3 * se:.4f})")
    assert ok


@pytest.fixture(scope="module")
def poisson_result():
    return run_experiment(ExperimentSpec("poisson", DEFAULT_SEED))


def test_04_poisson_distribution(poisson_result):
    counts, gof = poisson_result.data["counts"], poisson_result.data["gof"]
    tol = 3 * math.sqrt(5 / 3200)
    mean = float(np.mean(counts))
    ok = len(counts) == 3200 and gof.passed and abs(mean - 5) <= tol
    record(4, "Poisson(5) distribution", ok, f"chi2 p={gof.p_value:.3f} (dof {gof.dof}), mean {mean:.4f} (5 +/- {tol:.3f})")
    assert ok


def test_05_poisson_throughput(poisson_result):
    cpv = poisson_result.data["cycles_per_vector"]
    ok = 65 <= cpv <= 100
    record(5, "Poisson cycles per 32 variates", ok, f"{cpv:.2f} in [65, 100]")
    assert ok


def _ratio_criterion(number, title, regime, num_name, den_name, bound, cmp):
    r = run_experiment(ExperimentSpec("alif-compare", DEFAULT_SEED, repeats=32, params={"regime": regime}))
    s = r.data["scores"]
    means = {k: s[k].mean(axis=0) for k in (num_name, den_name)}
    ratio_v = means[num_name][0] / means[den_name][0]
    ratio_a = means[num_name][1] / means[den_name][1]
    ok = cmp(ratio_v, bound) and cmp(ratio_a, bound)
    record(number, title, ok,
           f"{num_name}/{den_name} V {means[num_name][0]:.4f}/{means[den_name][0]:.4f} = {ratio_v:.3f}, "
           f"A {means[num_name][1]:.4f}/{means[den_name][1]:.4f} = {ratio_a:.3f} over {s[num_name].shape[0]} seeds")
    return ok


def test_06_alif_rounding_benefit():
    assert _ratio_criterion(6, "stochastic rounding vs round-to-zero (pause)", "pause", "sr", "rtz", 0.5,
                            lambda x, b: x <= b)


def test_07_saturation_rescue():
    assert _ratio_criterion(7, "wrapping vs saturating (staircase)", "staircase", "wrap", "saturate", 2.0,
                            lambda x, b: x >= b)


def test_08_rsnn_oracle_equivalence():
    g = np.random.default_rng(808)
    modes = list(RoundingMode)
    matches, sizes = 0, []
    for k in range(20):
        nh = (32, 64, 128)[k % 3]
        num = NumericConfig(rounding=modes[k % 3], additive_mode=list(AdditiveMode)[k // 10])
        top = random_topology(g, int(g.integers(8, 65)), nh, int(g.integers(1, 21)), num)
        events = random_events(g, top.n_in, 100, 0.05)
        seed = int(g.integers(0, 2 ** 32))
        sim = run_rsnn(top, num, events, 100, seed=seed)
        matches += sim.same_trajectory(rsnn_oracle(top, num, events, 100, seed=seed))
        sizes.append(nh)
    ok = matches == 20
    record(8, "RSNN bit-exact oracle equivalence", ok,
           f"{matches}/20 topologies identical (hidden sizes {sorted(set(sizes))}, 100 steps)")
    assert ok


@pytest.fixture(scope="module")
def rsnn_result():
    return run_experiment(ExperimentSpec("rsnn", DEFAULT_SEED))


def test_09_neuron_update_budget(rsnn_result):
    cpv = rsnn_result.data["metrics"]["neuron_update_cycles_per_vector"]
    ok = cpv <= 30
    record(9, "neuron update cycles per vector", ok, f"{cpv:.2f} <= 30")
    assert ok


def test_10_spike_processing_intensity(rsnn_result):
    run, top = rsnn_result.data["run"], rsnn_result.data["topology"]
    ratio = rsnn_result.data["metrics"]["spike_vmem_to_valu"]
    rate = float(run.spikes.mean())
    ok = top.n_hidden == 256 and 2 <= ratio <= 4 and 0 < rate < 0.5
    record(10, "spike-processing VMem:VALU ratio", ok,
           f"{ratio:.2f} in [2, 4] at 256 hidden, hidden firing rate {rate:.3f} per step")
    assert ok


def test_11_scalar_conformance():
    config = MachineConfig(imem_size=4096, dmem_size=4096, vmem_size=64)
    g = np.random.default_rng(1111)
    n, agree = 10_000, 0
    for _ in range(n):
        prog = straight_line_program(g, 50, DMEM_BASE + 2048)
        m = load(prog, config)
        run_checked(m)
        ref = RV32(prog.words, DMEM_BASE, config.dmem_size)
        ref.run()
        agree += m.x == ref.x and bytes(m.dmem) == bytes(ref.mem)
    ok = agree == n
    record(11, "scalar conformance vs independent RV32 interpreter", ok, f"{agree}/{n} programs of 50 instructions")
    assert ok
