"""Config-driven experiment runner.

A run fans (replication, horizon) tasks out over a process pool.  Each task
owns the Philox stream keyed by ``(master_seed, replication, horizon index)``
and is simulated sequentially, so the rows it produces do not depend on the
worker count.  Rows are merged in (horizon, replication) order and written
to ``results.csv``; ``summary.json`` holds aggregates, goodness-of-fit
reports and verdicts recomputed from those rows; ``manifest.json`` records
the config digest, seed and derivation rule.
"""

import csv
import io
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from . import hawkes, maxima, processes, stats
from .counts import CountLaw
from .errors import CappedRealizationError, ConfigurationError
from .evt import adjust_sequences
from .marks import MarkModel, MarkWeight, make_law
from .rng import DERIVATION_RULE, derive_stream, stream_key

log = logging.getLogger(__name__)

OUT_ENV = "CLUSTERMAX_OUT"
TASK_CHUNK = 256
MIN_KS = 50

COLUMNS = {
    "tail-ratio": None,  # depends on the x grid
    "cluster-size-law": ("totalSize",),
    "hitting-time-equivalence": ("totalSize", "zeta"),
    "process-maxima": ("mT", "mTau", "hTau", "leftover", "jT", "tauT", "nPoints"),
    "hawkes-cross-check": ("countThinning", "countBranching"),
    "leftover-trend": ("jT", "jTOverT", "tauT"),
}


# -- model construction -----------------------------------------------------

def _law(params, prefix=""):
    fam = params.get(prefix + "family")
    if fam is None:
        raise ConfigurationError(f"missing {prefix}family")
    names = {"pareto": ("alpha",), "exponential": ("rate",), "uniform": ("theta",)}[fam]
    kwargs = {n: params[prefix + n] for n in names if prefix + n in params}
    return make_law(fam, **kwargs)


def _weight(name, law):
    if name in (None, "constant", "none"):
        return MarkWeight.constant()
    return MarkWeight.linear(law)


def _need(sec, key, section):
    if key not in sec:
        raise ConfigurationError(f"[{section}] needs {key!r}")
    return sec[key]


def _fertility(sec, law):
    kappa = _need(sec, "kappa", "fertility")
    weight = _weight(sec.get("weight"), law)
    if sec.get("kernel", "exponential") == "exponential":
        fert = hawkes.FertilityModel.exponential(kappa, sec.get("theta", 1.0), weight)
    else:
        fert = hawkes.FertilityModel.power(kappa, _need(sec, "beta", "fertility"), weight)
    return fert.validate(law)


def _mechanism(sec, law, cfg):
    kind = _need(sec, "kind", "mechanism")
    if kind == "hawkes":
        if "fertility" not in cfg.sections:
            raise ConfigurationError("hawkes mechanism needs a [fertility] section")
        try:
            fert = _fertility(cfg.section("fertility"), law)
        except ConfigurationError as exc:
            raise ConfigurationError(str(exc), cfg.line_of("fertility")) from None
        return hawkes.hawkes_mechanism(fert)
    if kind == "none":
        return processes.mixed_binomial(CountLaw.fixed(0), processes.ExponentialOffsets(1.0))
    size = sec.get("size", "poisson")
    if size == "fixed":
        size_law = CountLaw.fixed(_need(sec, "k", "mechanism"))
    elif size == "poisson":
        size_law = CountLaw.poisson(_need(sec, "mu", "mechanism"))
    elif size == "geometric":
        size_law = CountLaw.geometric(_need(sec, "p", "mechanism"))
    else:
        w = _weight(sec.get("weight", "linear"), law)
        w.validate(law)
        size_law = processes.MarkPoissonSize(_need(sec, "mu", "mechanism"), w)
    if sec.get("offsets", "exponential") == "exponential":
        ow = sec.get("offset_weight", "none")
        offsets = processes.ExponentialOffsets(sec.get("theta", 1.0),
                                               None if ow == "none" else _weight(ow, law))
    else:
        offsets = processes.LomaxOffsets(_need(sec, "beta", "mechanism"))
    return processes.ClusterMechanism(kind, size_law, offsets)


def _policy(sec):
    kind = _need(sec, "kind", "policy")
    cap = sec.get("cap", maxima.ITERATION_CAP) or None
    if kind == "deterministic":
        return maxima.Deterministic(_need(sec, "k", "policy"))
    if kind == "independent":
        count = sec.get("count", "poisson")
        if count == "poisson":
            law = CountLaw.poisson(_need(sec, "mu", "policy"))
        elif count == "geometric":
            law = CountLaw.geometric(_need(sec, "p", "policy"))
        else:
            law = CountLaw.fixed(_need(sec, "k", "policy"))
        return maxima.IndependentCount(law, cap)
    w_law = _law(sec, "w_") if "w_family" in sec else None
    if kind == "geometric-stopping":
        return maxima.GeometricStopping(w_law, sec.get("coupling", "independent"),
                                        sec.get("shift", 0.0), sec.get("shift_scale", 1.0), cap)
    if w_law is None:
        raise ConfigurationError("fixed-threshold policy needs w_family")
    return maxima.FixedThreshold(w_law, cap)


@dataclass
class Model:
    """Everything a task needs, built once per process."""

    experiment: str
    marks: MarkModel
    parent: object = None
    mechanism: object = None
    fertility: object = None
    policy: object = None
    adjusted: object = None
    unadjusted: object = None
    limit: object = None
    x: tuple = ()
    draws: int = 1
    asserted: bool = True


def build_model(cfg):
    """Validate every law and parameter; raises ConfigurationError with a line."""
    exp = cfg.experiment
    current = "marks"
    try:
        law = _law(cfg.section("marks"))
        marks = MarkModel(law)
        model = Model(exp, marks)
        seq, model.limit = law.sequences()
        if exp in ("process-maxima", "leftover-trend", "hawkes-cross-check"):
            current = "parent"
            p = cfg.section("parent")
            model.parent = processes.ParentProcess(p.get("nu", 1.0), p.get("law", "exponential"),
                                                   p.get("shape", 1.0))
        if exp in ("process-maxima", "leftover-trend"):
            current = "mechanism"
            model.mechanism = _mechanism(cfg.section("mechanism"), law, cfg)
            model.adjusted = adjust_sequences(seq, model.mechanism.mean_cluster_size(marks))
            model.unadjusted = adjust_sequences(seq, 1.0)
        elif exp != "tail-ratio":
            current = "fertility"
            model.fertility = _fertility(cfg.section("fertility"), law)
            if exp == "hawkes-cross-check" and model.parent.law != "exponential":
                current = "parent"
                raise ConfigurationError("hawkes-cross-check needs Poisson parents")
        else:
            current = "policy"
            sec = cfg.section("policy")
            model.policy = _policy(sec)
            if "mean_size" in sec:
                m = sec["mean_size"]
            elif isinstance(model.policy, maxima.FixedThreshold):
                # the mean of K may be infinite here; report on the raw scale
                m = 1.0
                model.asserted = False
            else:
                m = model.policy.mean_size(marks)
            model.adjusted = adjust_sequences(seq, m)
            current = None
            model.x = tuple(cfg.values.get("x", (0.5, 1.0, 2.0)))
            bad = [x for x in model.x if not model.limit.in_support(x)]
            if bad:
                raise ConfigurationError(f"x values {bad} outside the support of {model.limit.label()}")
            # for Weibull limits mu_G vanishes on [0, inf); nothing to estimate there
            bad = [x for x in model.x if not model.limit.tail_measure(x) > 0]
            if bad:
                raise ConfigurationError(f"x values {bad} carry no tail mass under {model.limit.label()}")
            model.draws = cfg.values.get("draws_per_replication", 1000)
    except ConfigurationError as exc:
        if exc.line is None:
            line = cfg.line_of(current, None) if current else cfg.line_of(None, "x")
            raise ConfigurationError(str(exc), line) from None
        raise
    return model


def columns_for(model):
    if model.experiment == "tail-ratio":
        return ("draws",) + tuple(f"exceed_{i}" for i in range(len(model.x)))
    return COLUMNS[model.experiment]


# -- tasks ------------------------------------------------------------------

def run_task(model, horizon, rng):
    exp = model.experiment
    if exp == "tail-ratio":
        n = horizon
        levels = model.adjusted.c(n) * np.asarray(model.x) + model.adjusted.d(n)
        h = model.policy.sample_blocks(model.marks, model.draws, rng).h
        return (model.draws,) + tuple(int(v) for v in (h[:, None] > levels).sum(axis=0))
    if exp == "cluster-size-law":
        c = hawkes.sample_hawkes_cluster(model.fertility, model.marks,
                                         model.marks.sample(rng), rng)
        return (c.total_size,)
    if exp == "hitting-time-equivalence":
        c = hawkes.sample_hawkes_cluster(model.fertility, model.marks,
                                         model.marks.sample(rng), rng)
        z = hawkes.hitting_times(model.fertility, model.marks, 1, rng)
        return (c.total_size, int(z[0]))
    if exp == "hawkes-cross-check":
        nu = model.parent.nu
        thin, _ = hawkes.simulate_hawkes_by_thinning(model.fertility, model.marks, nu,
                                                     horizon, rng)
        real = processes.simulate_process(model.parent, hawkes.hawkes_mechanism(model.fertility),
                                          model.marks, horizon, rng, keep_points=False)
        return (len(thin), real.n_points)
    real = processes.simulate_process(model.parent, model.mechanism, model.marks, horizon, rng,
                                      keep_points=False)
    if exp == "process-maxima":
        return (real.m_t, real.m_tau, real.h_tau, real.leftover, real.j_t, real.tau_t,
                real.n_points)
    return (real.j_t, real.j_t / horizon, real.tau_t)


_WORKER_MODEL = None


def _init_worker(cfg):
    global _WORKER_MODEL
    _WORKER_MODEL = build_model(cfg)


def _run_chunk(args):
    seed, tasks = args
    out = []
    for rep, hidx, horizon in tasks:
        rng = derive_stream(seed, rep, hidx)
        try:
            vals = run_task(_WORKER_MODEL, horizon, rng)
        except CappedRealizationError as exc:
            hi, lo = stream_key(seed, rep, hidx)
            raise CappedRealizationError(
                f"replication {rep}, horizon {horizon:g} (seed {hi}:{lo}): {exc}",
                {**exc.partial, "replication": rep, "horizon": horizon},
            ) from None
        out.append((hidx, rep, vals))
    return out


def simulate_rows(cfg, seed, workers=1):
    """Run every (replication, horizon) task; rows sorted by (horizon, rep)."""
    tasks = [(r, h, float(t)) for h, t in enumerate(cfg.horizons)
             for r in range(cfg.replications)]
    chunks = [(seed, tasks[i:i + TASK_CHUNK]) for i in range(0, len(tasks), TASK_CHUNK)]
    if workers <= 1:
        _init_worker(cfg)
        results = [_run_chunk(c) for c in chunks]
    else:
        with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(cfg,)) as pool:
            results = list(pool.map(_run_chunk, chunks))
    rows = [r for chunk in results for r in chunk]
    rows.sort(key=lambda r: (r[0], r[1]))
    return rows


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def rows_to_csv(cfg, model, rows, seed):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["experiment", "horizon", "replication", "seedHigh", "seedLow",
                *columns_for(model)])
    for hidx, rep, vals in rows:
        hi, lo = stream_key(seed, rep, hidx)
        w.writerow([cfg.experiment, _fmt(cfg.horizons[hidx]), rep, hi, lo,
                    *(_fmt(v) for v in vals)])
    return buf.getvalue()


def read_results_csv(path):
    """Parse results.csv back into (header, rows of floats keyed by column)."""
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        data = list(r)
    cols = {name: [row[i] for row in data] for i, name in enumerate(header)}
    out = {"experiment": cols["experiment"]}
    for name in header[1:]:
        if name in ("replication", "seedHigh", "seedLow"):
            # seeds use all 64 bits; floats would round them
            out[name] = np.array([int(v) for v in cols[name]], dtype=np.uint64)
        else:
            out[name] = np.array([float(v) for v in cols[name]])
    return header, out


# -- summaries --------------------------------------------------------------

def summarize(cfg, model, table):
    """Aggregate per-replication values into reports.

    ``table`` maps column names to arrays, as produced by ``_table`` or
    ``read_results_csv``; the summary is a pure function of it.
    """
    exp = model.experiment
    horizons = [float(h) for h in cfg.horizons]
    hcol = table["horizon"]
    checks = []
    agg = []

    def add(name, report, asserted=True):
        d = report.to_json() if isinstance(report, stats.GofReport) else report
        d = dict(d, name=name, asserted=bool(asserted))
        checks.append(d)

    if exp == "tail-ratio":
        trends = {i: [] for i in range(len(model.x))}
        for h in horizons:
            sel = hcol == h
            draws = table["draws"][sel].sum()
            for i, x in enumerate(model.x):
                k = table[f"exceed_{i}"][sel].sum()
                p = k / draws
                est = h * p
                se = h * np.sqrt(p * (1 - p) / draws)
                target = float(model.limit.tail_measure(x))
                z = abs(est - target) / se if se > 0 else np.inf
                agg.append({"horizon": h, "x": x, "estimate": est, "stderr": se,
                            "target": target, "exceedances": int(k), "draws": int(draws)})
                add(f"tail-ratio n={h:g} x={x:g}",
                    stats.GofReport(float(z), (int(draws),), 3.0, bool(z < 3.0),
                                    "|estimate - mu_G(x)| in standard errors"),
                    model.asserted)
                trends[i].append((h, est, se))
        if len(horizons) >= 3:
            for i, x in enumerate(model.x):
                verdict = stats.trend_report(trends[i])
                agg.append({"x": x, "trend": verdict})
                if not model.asserted:
                    add(f"divergence x={x:g}",
                        {"statistic": None, "pass": verdict == stats.INCREASING,
                         "verdict": verdict, "notes": "increasing tail ratio flags E[K] = inf"},
                        asserted=False)

    elif exp in ("cluster-size-law", "hitting-time-equivalence"):
        for h in horizons:
            sel = hcol == h
            size = table["totalSize"][sel].astype(np.int64)
            mean, se = stats.mean_se(size)
            target = model.fertility.mean_cluster_size()
            rel = abs(mean / target - 1.0)
            agg.append({"horizon": h, "meanSize": mean, "stderr": se, "target": target})
            add("mean cluster size within 1%",
                {"statistic": rel, "critical": 0.01, "pass": rel < 0.01, "n": [int(size.size)]})
            if model.fertility.weight.name == "constant":
                support = np.arange(1, 21)
                rep = stats.discrete_gof_samples(
                    size, lambda n: hawkes.borel_pmf(n, model.fertility.kappa), support)
                add("Borel chi-square", rep)
                tv = rep.extra["tv"]
                add("Borel total variation", {"statistic": tv, "critical": 0.01,
                                              "pass": tv < 0.01, "n": [int(size.size)]})
            if exp == "hitting-time-equivalence":
                zeta = table["zeta"][sel].astype(np.int64)
                add("zeta vs total size homogeneity",
                    stats.chi2_homogeneity(size, zeta, max_value=20))
                agg[-1]["meanZeta"] = float(zeta.mean())

    elif exp == "hawkes-cross-check":
        for h in horizons:
            sel = hcol == h
            a, b = table["countThinning"][sel], table["countBranching"][sel]
            target = model.parent.nu * h / (1 - model.fertility.kappa)
            agg.append({"horizon": h, "meanThinning": float(a.mean()),
                        "meanBranching": float(b.mean()), "varThinning": float(a.var(ddof=1)),
                        "varBranching": float(b.var(ddof=1)), "target": target})
            add("count means agree", stats.mean_two_sample(a, b))
            add("count variances agree", stats.variance_two_sample(a, b))
            for name, v in (("thinning", a), ("branching", b)):
                rel = abs(v.mean() / target - 1)
                add(f"{name} mean within 1% of nu t/(1-kappa)",
                    {"statistic": rel, "critical": 0.01, "pass": rel < 0.01, "n": [int(v.size)]})

    elif exp == "process-maxima":
        for h in horizons:
            sel = hcol == h
            m = table["mT"][sel]
            n_idx = np.floor(model.parent.nu * h)
            adj = model.adjusted.normalize(m, n_idx)
            raw = model.unadjusted.normalize(m, n_idx)
            if m.size < MIN_KS:
                add(f"KS t={h:g}", {"statistic": None, "pass": False,
                                    "notes": f"needs {MIN_KS} replications, got {m.size}"},
                    asserted=False)
                continue
            ks_adj = stats.ks_one_sample(adj, model.limit.cdf)
            ks_raw = stats.ks_one_sample(raw, model.limit.cdf)
            agg.append({"horizon": h, "ksAdjusted": ks_adj.statistic,
                        "ksUnadjusted": ks_raw.statistic,
                        "meanClusterSize": model.adjusted.mean_cluster_size,
                        "meanJt": float(table["jT"][sel].mean())})
            add(f"KS adjusted t={h:g}", ks_adj)
            add(f"KS unadjusted t={h:g}", ks_raw, asserted=False)
            add(f"adjustment reduces KS t={h:g}",
                {"statistic": ks_adj.statistic, "critical": ks_raw.statistic,
                 "pass": ks_adj.statistic < ks_raw.statistic})
            ok = np.all(table["mTau"][sel] == np.maximum.reduce(
                [table["mT"][sel], table["hTau"][sel], table["leftover"][sel]]))
            add(f"decomposition identity t={h:g}", {"statistic": None, "pass": bool(ok)})

    else:  # leftover-trend
        series = []
        for h in horizons:
            sel = hcol == h
            mean, se = stats.mean_se(table["jTOverT"][sel])
            series.append((h, mean, se))
            row = {"horizon": h, "meanJtOverT": mean, "stderr": se}
            closed = _closed_form_leftover(model, h)
            if closed is not None:
                mj, sj = stats.mean_se(table["jT"][sel])
                z = abs(mj - closed) / sj if sj > 0 else 0.0
                row.update(meanJt=mj, expectedJt=closed)
                add(f"E[J_t] closed form t={h:g}",
                    stats.GofReport(float(z), (int(sel.sum()),), 3.0, bool(z < 3.0),
                                    "|mean J_t - E[J_t]| in standard errors"))
            agg.append(row)
        if len(series) >= 3:
            verdict = stats.trend_report(series)
            agg.append({"trend": verdict})
            add("J_t/t decreasing", {"statistic": None, "verdict": verdict,
                                     "pass": verdict == stats.DECREASING},
                asserted=_light_tailed(model.mechanism))

    passed = all(c["pass"] for c in checks if c["asserted"])
    return {"experiment": exp, "aggregates": agg, "checks": checks, "pass": bool(passed)}


def _light_tailed(mech):
    # heavy delays: the trend is reported, no claim is made either way
    if isinstance(mech, hawkes.HawkesMechanism):
        return mech.fert.delay.light_tailed
    return mech.offsets.light_tailed


def _closed_form_leftover(model, horizon):
    mech = model.mechanism
    if (isinstance(mech, processes.ClusterMechanism) and mech.kind == processes.MIXED_BINOMIAL
            and model.parent.law == "exponential"
            and isinstance(mech.size, CountLaw) and mech.size.kind == "poisson"
            and isinstance(mech.offsets, processes.ExponentialOffsets)
            and mech.offsets.weight is None):
        return float(processes.expected_leftover_mixed_binomial(
            model.parent.nu, mech.size.mu, mech.offsets.theta, horizon))
    return None


def _table(cfg, model, rows):
    names = columns_for(model)
    table = {"horizon": np.array([float(cfg.horizons[h]) for h, _, _ in rows])}
    for i, name in enumerate(names):
        table[name] = np.array([float(v[i]) for _, _, v in rows])
    return table


def _plot_files(cfg, model, table, out):
    plots = out / "plots"
    plots.mkdir(exist_ok=True)
    if model.experiment == "process-maxima":
        for h in cfg.horizons:
            m = table["mT"][table["horizon"] == h]
            z = model.adjusted.normalize(m, np.floor(model.parent.nu * h))
            x, y = stats.EmpiricalDistribution(z).plot_data()
            np.savetxt(plots / f"ecdf_t{h:g}.dat", np.column_stack([x, y]), fmt="%.17g")
            grid = np.linspace(max(x.min(), -10), min(x.max(), 50), 400)
            np.savetxt(plots / f"target_t{h:g}.dat",
                       np.column_stack([grid, model.limit.cdf(grid)]), fmt="%.17g")
    elif model.experiment == "leftover-trend":
        pts = [(h, table["jTOverT"][table["horizon"] == h].mean()) for h in cfg.horizons]
        np.savetxt(plots / "trend.dat", np.array(pts), fmt="%.17g")
    elif model.experiment in ("cluster-size-law", "hitting-time-equivalence"):
        size = table["totalSize"].astype(np.int64)
        n = np.arange(1, 21)
        emp = np.array([(size == k).mean() for k in n])
        np.savetxt(plots / "size_pmf.dat", np.column_stack([n, emp]), fmt="%.17g")


# -- entry points -----------------------------------------------------------

def validate(cfg):
    build_model(cfg)
    return True


def run_experiment(cfg, out=None, seed=None, workers=1):
    """Run an experiment and write its artifacts.

    Returns ``(exit_code, summary)``; 0 if every asserted check passes, 1 if
    some check fails, 3 if a realization hit an iteration cap.
    """
    started = time.time()
    model = build_model(cfg)
    seed = cfg.master_seed if seed is None else int(seed)
    out = Path(out or os.environ.get(OUT_ENV) or cfg.values.get("output") or "results")
    out.mkdir(parents=True, exist_ok=True)
    try:
        rows = simulate_rows(cfg, seed, workers)
    except CappedRealizationError as exc:
        log.error("capped realization: %s", exc)
        (out / "error.txt").write_text(f"{exc}\n")
        return 3, {"error": str(exc), "partial": exc.partial}
    (out / "results.csv").write_text(rows_to_csv(cfg, model, rows, seed))
    table = _table(cfg, model, rows)
    summary = summarize(cfg, model, table)
    summary["masterSeed"] = seed
    (out / "summary.json").write_text(json.dumps(summary, indent=2, default=_json_default) + "\n")
    _plot_files(cfg, model, table, out)
    manifest = {
        "configHash": cfg.digest(),
        "masterSeed": seed,
        "toolVersion": __version__,
        "perReplicationSeeds": DERIVATION_RULE,
        "workers": workers,
        "started": started,
        "finished": time.time(),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return (0 if summary["pass"] else 1), summary


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(type(o))
