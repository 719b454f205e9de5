"""Experiment drivers.  Each returns an ``ExperimentResult`` holding CSV-ready tables.

Every experiment is a pure function of its ``ExperimentSpec``: stimuli come
from ``numpy.random.default_rng(seed)`` and simulator RNG seeds are derived
from the same seed, so identical specs produce identical tables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import core
from ..fixedpoint import QFormat, RoundingMode, raw_to_real
from ..formats import load_events, load_weights
from ..kernels import alif as alif_k
from ..kernels import poisson as poisson_k
from ..kernels import rsnn as rsnn_k
from ..kernels.config import AdditiveMode, AlifParams, ConfigError, NumericConfig
from ..kernels.multiply import MODES, run_multiply
from ..reference import alif_reference, chi_square_gof, nrmse, poisson_pmf

DEFAULT_SEED = 1
M64 = (1 << 64) - 1
MODE_NAMES = {RoundingMode.ROUND_TO_ZERO: "rtz", RoundingMode.ROUND_TO_NEAREST: "rtn",
              RoundingMode.STOCHASTIC: "sr"}
MODE_BY_NAME = {v: k for k, v in MODE_NAMES.items()}

# ALIF comparison formats: V in S3.12, A in S7.8, synaptic input in S1.14
ALIF_V_FRAC, ALIF_A_FRAC, ALIF_W_FRAC = 12, 8, 14

# pause regime: high-rate windows around a long low-rate background
PAUSE_WINDOWS = (500, 1000, 500)
PAUSE_RATES = (1.0, 0.05)
PAUSE_WEIGHT = 0.03

# staircase regime: rates climb until V leaves S3.12, then fall back
STAIR_LEVELS = (2, 6, 10, 14, 18)
STAIR_LEN = 15
STAIR_TOP, STAIR_TOP_LEN = 22, 40
STAIR_TAIL_RATE, STAIR_TAIL_LEN = 1, 500
STAIR_WEIGHT = 0.05


@dataclass
class Table:
    header: list
    rows: list = field(default_factory=list)

    def column(self, name):
        i = self.header.index(name)
        return [r[i] for r in self.rows]


@dataclass
class ExperimentResult:
    name: str
    tables: dict            # file stem -> Table
    summary: list           # human-readable lines
    ok: bool = True         # False when a built-in self check failed
    data: dict = field(default_factory=dict)  # raw arrays for programmatic use


@dataclass(frozen=True)
class ExperimentSpec:
    experiment: str
    seed: int = DEFAULT_SEED
    repeats: int = 32
    params: dict = field(default_factory=dict)

    def param(self, key):
        return {**DEFAULT_PARAMS[self.experiment], **self.params}[key]


DEFAULT_PARAMS = {
    "rounding-hist": {"n_pairs": 21760, "bins_per_ulp": 16},
    "poisson": {"lambda": 5.0, "n": 3200},
    "alif-compare": {"regime": "pause"},
    "rsnn": {"n_in": 64, "n_hidden": 256, "n_out": 20, "steps": 100, "input_rate": 0.05,
             "in_scale": 0.5, "rec_scale": 0.1, "out_scale": 0.1, "rounding": "sr",
             "additive": "saturate", "weights": "", "events": "", "check_oracle": True},
}
DEFAULT_PARAMS["instr-mix"] = {**DEFAULT_PARAMS["rsnn"], "check_oracle": False}
EXPERIMENTS = tuple(DEFAULT_PARAMS)


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def run_seed(seed: int, r: int) -> int:
    return (seed + 1 + r) & M64


# ---------------------------------------------------------------- rounding

def run_rounding_hist(spec: ExperimentSpec) -> ExperimentResult:
    """Random S0.15 products on the simulator, error vs float64 in ulps."""
    n = int(spec.param("n_pairs"))
    per_ulp = int(spec.param("bins_per_ulp"))
    if n < 1 or per_ulp < 1:
        raise ConfigError("n_pairs and bins_per_ulp must be positive")
    g = np.random.default_rng(spec.seed)
    # -32768 is excluded so that |x| < 1 and the product cannot overflow
    a = g.integers(-32767, 32768, n)
    b = g.integers(-32767, 32768, n)
    products = run_multiply(a, b, 15, MODES, seed=run_seed(spec.seed, 0))
    exact = a * b / 32768.0
    edges = np.arange(-2 * per_ulp, 2 * per_ulp + 1) / per_ulp

    hist = Table(["mode", "bin_lo_ulp", "bin_hi_ulp", "count"])
    summ = Table(["mode", "n", "mean_error_ulp", "sd_error_ulp", "se_mean_ulp", "min_error_ulp", "max_error_ulp"])
    lines, errors = [], {}
    for mode in MODES:
        err = products[mode] - exact
        errors[MODE_NAMES[mode]] = err
        counts, _ = np.histogram(err, bins=edges)
        name = MODE_NAMES[mode]
        hist.rows += [[name, _fmt(lo), _fmt(hi), int(c)] for lo, hi, c in zip(edges[:-1], edges[1:], counts)]
        sd = float(err.std(ddof=1))
        se = sd / math.sqrt(n)
        summ.rows.append([name, n, _fmt(err.mean()), _fmt(sd), _fmt(se), _fmt(err.min()), _fmt(err.max())])
        lines.append(f"{name}: mean {err.mean():+.5f} ulp (se {se:.5f}), range [{err.min():.4f}, {err.max():.4f}]")
    return ExperimentResult("rounding-hist", {"rounding_hist": hist, "rounding_summary": summ}, lines,
                            data={"errors": errors})


# ---------------------------------------------------------------- poisson

def run_poisson(spec: ExperimentSpec) -> ExperimentResult:
    lam = float(spec.param("lambda"))
    n = int(spec.param("n"))
    res = poisson_k.run_poisson(lam, n, seed=spec.seed)
    gof = chi_square_gof(res.counts, lambda k: poisson_pmf(lam, k))
    kmax = int(res.counts.max())
    obs = np.bincount(res.counts, minlength=kmax + 1)
    hist = Table(["k", "observed_count", "observed_fraction", "pmf", "expected_count"])
    for k in range(kmax + 1):
        p = poisson_pmf(lam, k)
        hist.rows.append([k, int(obs[k]), _fmt(obs[k] / n), _fmt(p), _fmt(n * p)])
    mean = float(res.counts.mean())
    summ = Table(["lambda", "n", "sample_mean", "sample_variance", "chi2", "dof", "p_value", "gof_pass_at_0.001",
                  "generator_cycles", "vectors", "cycles_per_32_variates"])
    summ.rows.append([_fmt(lam), n, _fmt(mean), _fmt(res.counts.var(ddof=1)), _fmt(gof.statistic), gof.dof,
                      _fmt(gof.p_value), gof.passed, res.cycles, res.n_vectors, _fmt(res.cycles_per_vector)])
    lines = [f"lambda={lam}: mean {mean:.4f}, chi2 p={gof.p_value:.4f} ({'pass' if gof.passed else 'FAIL'}), "
             f"{res.cycles_per_vector:.2f} cycles per 32 variates"]
    return ExperimentResult("poisson", {"poisson_hist": hist, "poisson_summary": summ}, lines,
                            data={"counts": res.counts, "gof": gof, "cycles_per_vector": res.cycles_per_vector})


# ---------------------------------------------------------------- ALIF comparison

def pause_stimulus(seed: int) -> np.ndarray:
    """Poisson input: high-rate window, long low-rate pause, high-rate window."""
    hi, lo = PAUSE_RATES
    w1, w2, w3 = PAUSE_WINDOWS
    rates = np.r_[np.full(w1, hi), np.full(w2, lo), np.full(w3, hi)]
    return np.random.default_rng(seed).poisson(rates) * PAUSE_WEIGHT


def staircase_stimulus(seed: int, weight_format: QFormat = QFormat(ALIF_W_FRAC)) -> np.ndarray:
    """Poisson input whose rate climbs in steps past the state range, then drops."""
    rates = np.r_[np.repeat(STAIR_LEVELS, STAIR_LEN), np.full(STAIR_TOP_LEN, STAIR_TOP),
                  np.full(STAIR_TAIL_LEN, STAIR_TAIL_RATE)]
    cur = np.random.default_rng(seed).poisson(rates) * STAIR_WEIGHT
    # the synaptic accumulator saturates rather than exceeding its own format
    return np.clip(cur, weight_format.min_value, weight_format.max_value)


def alif_configs(regime: str) -> dict:
    base = dict(state_format=QFormat(ALIF_V_FRAC), weight_format=QFormat(ALIF_W_FRAC),
                adapt_format=QFormat(ALIF_A_FRAC))
    if regime == "pause":
        return {m: NumericConfig(rounding=MODE_BY_NAME[m], additive_mode=AdditiveMode.SATURATE, **base)
                for m in ("rtz", "rtn", "sr")}
    if regime == "staircase":
        return {m: NumericConfig(rounding=RoundingMode.STOCHASTIC, additive_mode=AdditiveMode(m), **base)
                for m in ("wrap", "saturate")}
    raise ConfigError(f"unknown regime {regime!r} (pause or staircase)")


def alif_scores(run: alif_k.AlifRun, num: NumericConfig, ref) -> tuple[float, float]:
    """Mean over lanes of NRMSE(V) and NRMSE(A)."""
    v, a = run.v_real(num), run.a_real(num)
    nv = np.mean([nrmse(v[:, i], ref.v) for i in range(v.shape[1])])
    na = np.mean([nrmse(a[:, i], ref.a) for i in range(a.shape[1])])
    return float(nv), float(na)


def run_alif_compare(spec: ExperimentSpec) -> ExperimentResult:
    """NRMSE of fixed-point ALIF simulations against the float64 reference.

    Repeat r draws its own stimulus and simulator RNG seed from
    ``run_seed(seed, r)``; a run's score is the mean over its 32 lanes (all
    lanes see the same input).  The trace table shows repeat 0.
    """
    regime = str(spec.param("regime"))
    if spec.repeats < 1:
        raise ConfigError("repeats must be positive")
    configs = alif_configs(regime)
    stimulus = pause_stimulus if regime == "pause" else staircase_stimulus
    params = AlifParams()
    wfmt = QFormat(ALIF_W_FRAC)
    trials = []
    for r in range(spec.repeats):
        cur = stimulus(run_seed(spec.seed, r))
        cur_q = raw_to_real(alif_k.quantize_input(cur, next(iter(configs.values())))[:, 0], wfmt)
        trials.append((cur, cur_q, alif_reference(params, cur_q)))

    summ = Table(["regime", "config", "rounding", "additive", "repeats", "nrmse_v_mean", "nrmse_v_sd",
                  "nrmse_a_mean", "nrmse_a_sd"])
    trace = Table(["step", "input", "v_reference", "a_reference"]
                  + [f"{k}_{c}" for c in configs for k in ("v", "a")])
    scores, traces = {}, {}
    for name, num in configs.items():
        per_run = []
        for r, (cur, _, ref) in enumerate(trials):
            run = alif_k.run_alif(params, num, cur, seed=run_seed(spec.seed, r))
            per_run.append(alif_scores(run, num, ref))
            if r == 0:
                traces[name] = (run.v_real(num)[:, 0], run.a_real(num)[:, 0])
        arr = np.array(per_run)
        scores[name] = arr
        sd = arr.std(axis=0, ddof=1) if len(arr) > 1 else np.zeros(2)
        summ.rows.append([regime, name, MODE_NAMES[num.rounding], num.additive_mode.value, spec.repeats,
                          _fmt(arr[:, 0].mean()), _fmt(sd[0]), _fmt(arr[:, 1].mean()), _fmt(sd[1])])
    _, cur_q, ref = trials[0]
    for t in range(len(cur_q)):
        row = [t, _fmt(cur_q[t]), _fmt(ref.v[t]), _fmt(ref.a[t])]
        for c in configs:
            row += [_fmt(traces[c][0][t]), _fmt(traces[c][1][t])]
        trace.rows.append(row)

    lines = [f"{regime}/{n}: NRMSE(V) {s[:, 0].mean():.4f}, NRMSE(A) {s[:, 1].mean():.4f}"
             for n, s in scores.items()]
    return ExperimentResult("alif-compare", {f"alif_{regime}": summ, f"alif_{regime}_trace": trace}, lines,
                            data={"scores": scores, "reference": ref})


# ---------------------------------------------------------------- RSNN

def _rsnn_inputs(spec: ExperimentSpec):
    g = np.random.default_rng(spec.seed)
    num = NumericConfig(rounding=MODE_BY_NAME[str(spec.param("rounding"))],
                        additive_mode=AdditiveMode(str(spec.param("additive"))))
    steps = int(spec.param("steps"))
    wdir = str(spec.param("weights"))
    if wdir:
        mats = {}
        for name in ("w_in", "w_rec", "w_out"):
            raw, frac = load_weights(Path(wdir) / f"{name}.bin")
            if frac != num.weight_format.frac_bits:
                raise ConfigError(f"{name}.bin has frac_bits={frac}, kernel expects "
                                  f"{num.weight_format.frac_bits}")
            mats[name] = raw
        top = rsnn_k.RsnnTopology(**mats)
    else:
        top = rsnn_k.random_topology(g, int(spec.param("n_in")), int(spec.param("n_hidden")),
                                     int(spec.param("n_out")), num=num,
                                     in_scale=float(spec.param("in_scale")),
                                     rec_scale=float(spec.param("rec_scale")),
                                     out_scale=float(spec.param("out_scale")))
    evfile = str(spec.param("events"))
    events = load_events(evfile) if evfile else rsnn_k.random_events(g, top.n_in, steps,
                                                                    float(spec.param("input_rate")))
    return top, num, events, steps


def mix_table(stats: core.Stats) -> Table:
    t = Table(["region", "op_class", "retired", "fraction_of_region", "region_cycles"])
    per_region = stats.by_region()
    for row in core.instruction_mix(stats):
        total = per_region[row.region]
        t.rows.append([row.region, row.op_class.value, row.count, _fmt(row.count / total if total else 0.0),
                       stats.region_cycles[row.region]])
    return t


def rsnn_metrics(stats: core.Stats, top: rsnn_k.RsnnTopology, steps: int) -> dict:
    sp = {cls.value: n for (reg, cls), n in stats.retired.items() if reg == "spike_processing"}
    vmem, valu = sp.get("VectorMemory", 0), sp.get("VectorALU", 0)
    return {
        "cycles": stats.cycles,
        "cycles_per_step": stats.cycles / steps,
        "neuron_update_cycles_per_vector": stats.region_cycles["neuron_update"] / (steps * top.nhv),
        "spike_vmem_to_valu": vmem / valu if valu else float("nan"),
    }


def run_rsnn(spec: ExperimentSpec) -> ExperimentResult:
    top, num, events, steps = _rsnn_inputs(spec)
    sim_seed = run_seed(spec.seed, 0)
    run = rsnn_k.run_rsnn(top, num, events, steps, seed=sim_seed)
    check = bool(spec.param("check_oracle"))
    match = run.same_trajectory(rsnn_k.rsnn_oracle(top, num, events, steps, seed=sim_seed)) if check else None
    met = rsnn_metrics(run.stats, top, steps)

    raster = Table(["step", "neuron"])
    for t, n in zip(*np.nonzero(run.spikes)):
        raster.rows.append([int(t), int(n)])
    y = raw_to_real(run.y, num.v_format)
    outputs = Table(["output", "final_y", "mean_y", "max_y"])
    for o in range(top.n_out):
        outputs.rows.append([o, _fmt(y[-1, o]), _fmt(y[:, o].mean()), _fmt(y[:, o].max())])
    rate = float(run.spikes.mean())
    summ = Table(["n_in", "n_hidden", "n_out", "steps", "input_events", "hidden_spike_rate", "cycles",
                  "cycles_per_step", "neuron_update_cycles_per_vector", "spike_vmem_to_valu", "oracle_match"])
    summ.rows.append([top.n_in, top.n_hidden, top.n_out, steps, len(events), _fmt(rate), met["cycles"],
                      _fmt(met["cycles_per_step"]), _fmt(met["neuron_update_cycles_per_vector"]),
                      _fmt(met["spike_vmem_to_valu"]), "" if match is None else match])
    lines = [f"{top.n_hidden} hidden, {steps} steps: {met['cycles_per_step']:.1f} cycles/step, "
             f"{met['neuron_update_cycles_per_vector']:.2f} cycles per neuron vector, "
             f"spike-processing VMem:VALU {met['spike_vmem_to_valu']:.2f}, hidden rate {rate:.3f}"]
    if match is not None:
        lines.append(f"oracle match: {'yes' if match else 'NO'}")
    return ExperimentResult("rsnn", {"rsnn_raster": raster, "rsnn_outputs": outputs, "rsnn_mix": mix_table(run.stats),
                                     "rsnn_summary": summ}, lines, ok=match is not False,
                            data={"run": run, "metrics": met, "topology": top})


def run_instr_mix(spec: ExperimentSpec) -> ExperimentResult:
    top, num, events, steps = _rsnn_inputs(spec)
    prog = rsnn_k.build_rsnn(top, num, events, steps, seed=run_seed(spec.seed, 0), record=False)
    m = core.load(prog)
    core.run_checked(m)
    stats = m.stats
    t = mix_table(stats)
    met = rsnn_metrics(stats, top, steps)
    lines = [f"{r[0]:>17} {r[1]:<18} {r[2]:>9} ({float(r[3]):.1%})" for r in t.rows if r[2]]
    lines.append(f"spike-processing VMem:VALU {met['spike_vmem_to_valu']:.2f}")
    return ExperimentResult("instr-mix", {"instr_mix": t}, lines, data={"stats": stats, "metrics": met})


RUNNERS = {
    "rounding-hist": run_rounding_hist,
    "poisson": run_poisson,
    "alif-compare": run_alif_compare,
    "rsnn": run_rsnn,
    "instr-mix": run_instr_mix,
}


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    if spec.experiment not in RUNNERS:
        raise ConfigError(f"unknown experiment {spec.experiment!r}")
    unknown = set(spec.params) - set(DEFAULT_PARAMS[spec.experiment])
    if unknown:
        raise ConfigError(f"unknown parameter(s) for {spec.experiment}: {', '.join(sorted(unknown))}")
    return RUNNERS[spec.experiment](spec)


def write_tables(result: ExperimentResult, out_dir) -> list[Path]:
    import csv

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for stem, table in result.tables.items():
        p = out / f"{stem}.csv"
        with p.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(table.header)
            w.writerows([[_fmt(x) for x in row] for row in table.rows])
        paths.append(p)
    return paths


def report(results: list[ExperimentResult], out_dir=None) -> str:
    """Plain-text summary of several experiments; also writes report.txt and their CSVs."""
    text = []
    for r in results:
        text.append(f"[{r.name}]{'' if r.ok else ' SELF-CHECK FAILED'}")
        text += [f"  {line}" for line in r.summary]
    body = "\n".join(text) + "\n"
    if out_dir is not None:
        for r in results:
            write_tables(r, out_dir)
        Path(out_dir, "report.txt").write_text(body)
    return body
