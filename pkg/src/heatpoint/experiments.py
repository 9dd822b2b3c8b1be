"""Configured experiment runs behind the command-line interface.

A run is a flat JSON config plus a task list. Each task writes its tables,
reports, and figures into the output directory and returns a structured
outcome; the driver assembles a manifest with per-task status and a
checksum inventory of every emitted file. Failures inside sweeps are data:
a point that exhausts its precision ladder becomes a flagged row and a
failure entry, never an abort.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import jsonschema
from mpmath import mp

from . import __version__
from .anchors import AnchorPoint, QuadraticIrrational, anchor_from_json, anchor_to_json
from .control import (
    biorthogonal_family,
    blowup_diagnostic,
    fattorini_norm_bound,
    hum_optimal_control,
    moment_control_interval,
    moment_control_point,
    rescale_and_average,
    simulated_residual,
)
from .errors import ConfigError, HeatpointError
from .minimal_time import estimate_minimal_time
from .observability import obs_constant, rate_fit
from .reporting import (
    file_inventory,
    fmt_num,
    new_figure,
    save_figure,
    write_csv,
    write_gnuplot_stub,
    write_json,
    write_plot_dat,
)
from .sequences import check_overlap_lower_bound, construct_eps_sequence
from .spectral import (
    DiracAt,
    ExpSumSignal,
    FourierState,
    IntervalIndicator,
    ScalarControl,
    _num,
)

__all__ = [
    "ExperimentConfig",
    "TaskOutcome",
    "CONFIG_SCHEMA",
    "TASK_NAMES",
    "run_classify",
    "run_obs_sweep",
    "run_control",
    "run_lemmas",
    "execute",
]

TASK_NAMES = ("classify", "obs-sweep", "control", "lemmas")

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "anchor": {"type": "object", "required": ["kind"]},
        "T": {"type": "number", "exclusiveMinimum": 0},
        "eps_start": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 0.5},
        "eps_ratio": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "eps_count": {"type": "integer", "minimum": 1},
        "N_start": {"type": "integer", "minimum": 1},
        "N_limit": {"type": "integer", "minimum": 1},
        "bits": {
            "type": "array",
            "items": {"type": "integer", "minimum": 64},
            "minItems": 1,
        },
        "datum": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "control_eps": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 0.5},
        "lemma_delta": {"type": "number", "exclusiveMinimum": 0},
        "lemma_levels": {"type": "integer", "minimum": 1},
        "lemma_modes": {"type": "integer", "minimum": 1},
        "residual_tol": {"type": "number", "exclusiveMinimum": 0},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
        "jobs": {"type": "integer", "minimum": 1},
        "out": {"type": "string", "minLength": 1},
    },
}


def _default_anchor() -> QuadraticIrrational:
    return QuadraticIrrational(-1, 1, 2, 1)  # sqrt(2) - 1


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat, schema-validated run configuration.

    The eps grid is geometric: eps_start * eps_ratio^k for k < eps_count,
    strictly decreasing since eps_ratio lies in (0,1). Sweeps double the
    truncation from N_start, never past N_limit. bits is the shared
    precision ladder.
    """

    anchor: AnchorPoint = field(default_factory=_default_anchor)
    T: float = 0.5
    eps_start: float = 0.125
    eps_ratio: float = 0.5
    eps_count: int = 5
    N_start: int = 4
    N_limit: int = 32
    bits: tuple = (128, 256, 512)
    datum: tuple = (1.0, 0.5)
    control_eps: float = 0.1
    lemma_delta: float = 0.05
    lemma_levels: int = 6
    lemma_modes: int = 40
    residual_tol: float = 1e-6
    seed: int = 0
    jobs: int = 1
    out: str = "heatpoint-out"

    def eps_grid(self) -> tuple:
        return tuple(self.eps_start * self.eps_ratio ** k for k in range(self.eps_count))

    def to_json(self) -> dict:
        return {
            "anchor": anchor_to_json(self.anchor),
            "T": self.T,
            "eps_start": self.eps_start,
            "eps_ratio": self.eps_ratio,
            "eps_count": self.eps_count,
            "N_start": self.N_start,
            "N_limit": self.N_limit,
            "bits": list(self.bits),
            "datum": list(self.datum),
            "control_eps": self.control_eps,
            "lemma_delta": self.lemma_delta,
            "lemma_levels": self.lemma_levels,
            "lemma_modes": self.lemma_modes,
            "residual_tol": self.residual_tol,
            "seed": self.seed,
            "jobs": self.jobs,
            "out": self.out,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ExperimentConfig":
        try:
            jsonschema.validate(obj, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise ConfigError("config rejected by schema: %s" % exc.message) from exc
        kwargs = {}
        if "anchor" in obj:
            try:
                kwargs["anchor"] = anchor_from_json(obj["anchor"])
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError("bad anchor: %s" % exc) from exc
        for name in ("T", "eps_start", "eps_ratio", "control_eps", "lemma_delta",
                     "residual_tol"):
            if name in obj:
                kwargs[name] = float(obj[name])
        for name in ("eps_count", "N_start", "N_limit", "lemma_levels",
                     "lemma_modes", "seed", "jobs"):
            if name in obj:
                kwargs[name] = int(obj[name])
        if "bits" in obj:
            kwargs["bits"] = tuple(int(b) for b in obj["bits"])
        if "datum" in obj:
            kwargs["datum"] = tuple(float(c) for c in obj["datum"])
        if "out" in obj:
            kwargs["out"] = str(obj["out"])
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        # cross-field constraints the schema cannot express
        if list(self.bits) != sorted(set(self.bits)):
            raise ConfigError("bits ladder must be strictly increasing")
        if self.N_start > self.N_limit:
            raise ConfigError("N_start exceeds N_limit")
        if len(self.datum) > self.N_limit:
            raise ConfigError("datum has more modes than N_limit")

    def override(self, **kwargs) -> "ExperimentConfig":
        kwargs = {k: v for k, v in kwargs.items() if v is not None}
        cfg = replace(self, **kwargs)
        cfg.validate()
        return cfg


@dataclass(frozen=True)
class TaskOutcome:
    name: str
    status: str  # ok | failed
    files: tuple = ()
    failures: tuple = ()  # structured dicts; non-empty means partial failure
    detail: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "files": list(self.files),
            "failures": list(self.failures),
            "detail": self.detail,
        }


def _failure(context: str, exc: Exception) -> dict:
    return {"context": context, "type": type(exc).__name__, "message": str(exc)}


# ---------------------------------------------------------------------------
# classify


def run_classify(cfg: ExperimentConfig, outdir: Path) -> TaskOutcome:
    n_max = max(cfg.N_limit, 8)
    try:
        est = estimate_minimal_time(cfg.anchor, n_max)
    except HeatpointError as exc:
        return TaskOutcome("classify", "failed", failures=(_failure("estimate", exc),))
    files = []
    doc = {"anchor": anchor_to_json(cfg.anchor), "N_max": n_max}
    doc.update(est.to_json())
    files.append(write_json(outdir / "classify.json", doc))
    rows = [(n + 1, e) for n, e in enumerate(est.per_n_exponents)]
    files.append(write_csv(outdir / "exponents.csv", ["n", "exponent"], rows))

    fig = new_figure()
    ax = fig.add_subplot(111)
    finite = [(n, float(e)) for n, e in rows if mp.isfinite(e)]
    if finite:
        ax.plot([n for n, _ in finite], [e for _, e in finite], "o-", ms=3)
    if mp.isfinite(est.t0_lower) and est.t0_lower > 0:
        ax.axhline(float(est.t0_lower), color="tab:red", ls="--",
                   label="t0 lower bound")
        ax.legend()
    ax.set_xlabel("mode n")
    ax.set_ylabel("log(1/|sin(n pi x0)|) / (n^2 pi^2)")
    ax.set_title("per-mode exponent trace (%s)" % est.method)
    files.append(save_figure(fig, outdir / "exponents.png"))

    detail = {"method": est.method, "resonant_n": est.resonant_n}
    return TaskOutcome("classify", "ok",
                       files=tuple(f.name for f in files), detail=detail)


# ---------------------------------------------------------------------------
# obs-sweep


def _sweep_point_worker(payload) -> dict:
    """One eps: double N until the N-vs-2N check stabilizes or N_limit bars.

    Runs in a worker process; everything in and out is plain picklable data
    (mp state is per-process).
    """
    anchor_json, T, eps, n_start, n_limit, bits, tol = payload
    anchor = anchor_from_json(anchor_json)
    try:
        where = IntervalIndicator(anchor, eps)
        n = n_start
        while True:
            res = obs_constant(T, where, n, tol=tol, bits_ladder=bits)
            if res.converged or 2 * n > n_limit:
                break
            n *= 2
        return {
            "eps": eps,
            "ok": True,
            "lambda_min": mp.nstr(res.lambda_min, 30),
            "sqrt_scale": mp.nstr(res.sqrt_scale, 30),
            "N_used": res.N_used,
            "converged": res.converged,
            "precision_bits": res.precision_bits,
        }
    except HeatpointError as exc:
        return {"eps": eps, "ok": False,
                "error_type": type(exc).__name__, "error": str(exc)}


def _map_ordered(fn, payloads, jobs: int):
    if jobs <= 1:
        return [fn(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, payloads))  # map preserves input order


def run_obs_sweep(cfg: ExperimentConfig, outdir: Path) -> TaskOutcome:
    anchor_json = anchor_to_json(cfg.anchor)
    payloads = [
        (anchor_json, cfg.T, eps, cfg.N_start, cfg.N_limit, cfg.bits, None)
        for eps in cfg.eps_grid()
    ]
    rows = _map_ordered(_sweep_point_worker, payloads, cfg.jobs)

    failures = tuple(
        _failure("eps=%s" % fmt_num(r["eps"]), HeatpointError(r["error"]))
        | {"type": r["error_type"]}
        for r in rows if not r["ok"]
    )
    table = [
        (r["eps"], mp.mpf(r["lambda_min"]), mp.mpf(r["sqrt_scale"]),
         r["N_used"], r["converged"], r["precision_bits"])
        for r in rows if r["ok"]
    ]
    files = [write_csv(
        outdir / "sweep.csv",
        ["eps", "lambda_min", "sqrt_scale", "N_used", "converged", "precision_bits"],
        table,
    )]

    fit_pts = [(e, s) for e, _, s, _, conv, _ in table if conv and s > 0]
    unconverged = [fmt_num(e) for e, _, _, _, conv, _ in table if not conv]
    if len(fit_pts) >= 4:
        fit = rate_fit(fit_pts)
        fit_doc = fit.to_json()
    else:
        fit, fit_doc = None, {
            "skipped": "need >= 4 converged positive points, have %d" % len(fit_pts)
        }
    files.append(write_json(outdir / "fit.json", {
        "fit": fit_doc,
        "unconverged_eps": unconverged,
        "failed_points": [f["context"] for f in failures],
    }))

    files.append(write_plot_dat(
        outdir / "plot.dat",
        ["eps", "sqrt_scale", "lambda_min", "converged"],
        [(e, s, lam, 1 if conv else 0) for e, lam, s, _, conv, _ in table],
    ))
    files.append(write_gnuplot_stub(
        outdir / "plot.gp", "plot.dat",
        "observability constant sweep", "eps", "sqrt_scale",
    ))

    fig = new_figure()
    ax = fig.add_subplot(111)
    conv_pts = [(float(e), float(s)) for e, _, s, _, c, _ in table if c and s > 0]
    rest_pts = [(float(e), float(s)) for e, _, s, _, c, _ in table if not c and s > 0]
    if conv_pts:
        ax.loglog(*zip(*conv_pts), "o", label="converged")
    if rest_pts:
        ax.loglog(*zip(*rest_pts), "x", label="unconverged")
    if fit is not None:
        xs = sorted(float(e) for e, _ in fit_pts)
        ax.loglog(xs, [float(mp.e ** fit.intercept) * x ** float(fit.slope) for x in xs],
                  "-", label="fit slope %.3f" % float(fit.slope))
    ax.set_xlabel("eps")
    ax.set_ylabel("sqrt_scale")
    ax.set_title("truncated observability constant vs window size")
    if conv_pts or rest_pts:
        ax.legend()
    files.append(save_figure(fig, outdir / "sweep.png"))

    detail = {"unconverged_eps": unconverged}
    return TaskOutcome("obs-sweep", "ok", files=tuple(f.name for f in files),
                       failures=failures, detail=detail)


# ---------------------------------------------------------------------------
# control


def _report_or_failure(doc: dict, failures: list, key: str, fn):
    try:
        rep = fn()
        doc[key] = rep.to_json()
        return rep
    except HeatpointError as exc:
        doc[key] = {"error": _failure(key, exc)}
        failures.append(_failure(key, exc))
        return None


def _sample_rows(named_signals, samples: int = 201):
    """Uniform time samples of scalar signals, one column per signal."""
    if not named_signals:
        return [], []
    T = _num(named_signals[0][1].horizon)
    header = ["t"] + [name for name, _ in named_signals]
    rows = []
    for i in range(samples):
        t = T * mp.mpf(i) / (samples - 1)
        rows.append([t] + [sig.eval(t) for _, sig in named_signals])
    return header, rows


def run_control(cfg: ExperimentConfig, outdir: Path) -> TaskOutcome:
    u0 = FourierState(tuple(mp.mpf(c) for c in cfg.datum))
    T, anchor = cfg.T, cfg.anchor
    n_modes = len(cfg.datum)
    doc: dict = {"datum": [fmt_num(c) for c in cfg.datum],
                 "anchor": anchor_to_json(anchor), "T": cfg.T}
    failures: list = []
    files = []

    family = None
    try:
        family = biorthogonal_family(T, max(n_modes, 4), bits=cfg.bits)
    except HeatpointError as exc:
        failures.append(_failure("biorthogonal-family", exc))
        doc["family"] = {"error": _failure("biorthogonal-family", exc)}

    mom_int = mom_pt = None
    if family is not None:
        mom_int = _report_or_failure(
            doc, failures, "moment_interval",
            lambda: moment_control_interval(u0, T, anchor, cfg.control_eps, family))
        mom_pt = _report_or_failure(
            doc, failures, "moment_point",
            lambda: moment_control_point(u0, T, anchor, family))

    n_hum = max(cfg.N_start, n_modes)
    hum_pt = _report_or_failure(
        doc, failures, "hum_point",
        lambda: hum_optimal_control(u0, T, DiracAt(anchor), n_hum, bits=cfg.bits))
    hum_int = _report_or_failure(
        doc, failures, "hum_interval",
        lambda: hum_optimal_control(
            u0, T, IntervalIndicator(anchor, cfg.control_eps), n_hum, bits=cfg.bits))

    # shrinking-window chain: HUM on each eps-window, averaged to a scalar
    # signal, then re-simulated as a pointwise control at the anchor
    chain = []
    chain_n = max(2 * n_modes, 6)
    for eps in cfg.eps_grid():
        entry = {"eps": fmt_num(eps)}
        try:
            rep = hum_optimal_control(
                u0, T, IntervalIndicator(anchor, eps), n_hum, bits=cfg.bits)
            avg = rescale_and_average(rep.control, eps)
            ctrl = ScalarControl.build(DiracAt(anchor), avg)
            res = simulated_residual(u0, ctrl, chain_n, cfg.bits[-1])
            entry["residual"] = fmt_num(res)
            entry["norm"] = fmt_num(ctrl.l2_norm)
        except HeatpointError as exc:
            entry["error"] = _failure("chain eps=%s" % fmt_num(eps), exc)
            failures.append(entry["error"])
        chain.append(entry)
    doc["averaged_chain"] = chain

    files.append(write_json(outdir / "control.json", doc))

    # scalar time signals, sampled for the table and the figure
    named = []
    if mom_int is not None:
        named.append(("moment_interval", mom_int.control.signal))
    if mom_pt is not None:
        named.append(("moment_point", mom_pt.control.signal))
    if hum_pt is not None:
        named.append(("hum_point", hum_pt.control.signal))
    if hum_int is not None:
        try:
            named.append(
                ("hum_interval_avg",
                 rescale_and_average(hum_int.control, cfg.control_eps)))
        except HeatpointError as exc:
            failures.append(_failure("hum_interval_avg", exc))
    header, rows = _sample_rows(named)
    files.append(write_csv(outdir / "signals.csv",
                           header or ["t"], rows))

    blow_rows = []
    try:
        diag = blowup_diagnostic(u0, T, anchor, cfg.eps_grid(), bits=cfg.bits[-1])
        for row in diag:
            blow_rows.append((row.eps, row.scaled_norm, row.residual_norm,
                              row.error or ""))
            if row.error:
                failures.append({"context": "blowup eps=%s" % fmt_num(row.eps),
                                 "type": "HeatpointError", "message": row.error})
    except HeatpointError as exc:
        failures.append(_failure("blowup", exc))
    files.append(write_csv(outdir / "blowup.csv",
                           ["eps", "scaled_norm", "residual_norm", "error"],
                           blow_rows))

    fig = new_figure()
    ax = fig.add_subplot(111)
    ts = [float(r[0]) for r in rows]
    for col, (name, _sig) in enumerate(named):
        ax.plot(ts, [float(r[1 + col]) for r in rows], label=name)
    ax.set_xlabel("t")
    ax.set_ylabel("control amplitude")
    ax.set_title("synthesized null-control signals")
    if named:
        ax.legend()
    files.append(save_figure(fig, outdir / "signals.png"))

    fig = new_figure()
    ax = fig.add_subplot(111)
    pts = [(float(e), float(s)) for e, s, _, err in blow_rows
           if not err and s is not None and float(s) > 0]
    if pts:
        ax.loglog(*zip(*pts), "o-")
    ax.set_xlabel("eps")
    ax.set_ylabel("eps^(1/2) * control norm")
    ax.set_title("scaled control norms under window shrinkage")
    files.append(save_figure(fig, outdir / "blowup.png"))

    produced = any(r is not None for r in (mom_int, mom_pt, hum_pt, hum_int))
    return TaskOutcome("control", "ok" if produced else "failed",
                       files=tuple(f.name for f in files),
                       failures=tuple(failures))


# ---------------------------------------------------------------------------
# lemmas


def _line_fit(xs, ys):
    n = len(xs)
    xbar = mp.fsum(xs) / n
    ybar = mp.fsum(ys) / n
    sxx = mp.fsum((x - xbar) ** 2 for x in xs)
    sxy = mp.fsum((x - xbar) * (y - ybar) for x, y in zip(xs, ys))
    return sxy / sxx


def run_lemmas(cfg: ExperimentConfig, outdir: Path) -> TaskOutcome:
    failures: list = []
    doc: dict = {}
    try:
        seq = construct_eps_sequence(
            cfg.lemma_delta, cfg.lemma_levels, cfg.lemma_modes, seed=cfg.seed)
        doc["sequence"] = seq.to_json()
    except HeatpointError as exc:
        failures.append(_failure("eps-sequence", exc))
        return TaskOutcome("lemmas", "failed", failures=tuple(failures))

    try:
        chk = check_overlap_lower_bound(
            cfg.anchor, seq, range(1, cfg.lemma_modes + 1))
        doc["overlap"] = chk.to_json()
    except (HeatpointError, ValueError) as exc:
        chk = None
        doc["overlap"] = {"error": _failure("overlap-check", exc)}
        failures.append(_failure("overlap-check", exc))

    # biorthogonal norm growth against the classical product yardstick,
    # always at unit horizon so runs with different T stay comparable
    growth_n = 10
    try:
        fam = biorthogonal_family(1, growth_n, bits=cfg.bits)
        ns = list(range(1, growth_n + 1))
        logn = [mp.log(fam.norms[j]) for j in range(growth_n)]
        slope = _line_fit(ns, logn)
        ref = [mp.log(fattorini_norm_bound(n)) for n in ns]
        ref_slope = _line_fit(ns, ref)
        doc["norm_growth"] = {
            "slope": fmt_num(slope),
            "fattorini_slope": fmt_num(ref_slope),
            "log_norms": [fmt_num(v) for v in logn],
            "family_residual": fmt_num(fam.residual),
        }
    except HeatpointError as exc:
        fam = None
        doc["norm_growth"] = {"error": _failure("norm-growth", exc)}
        failures.append(_failure("norm-growth", exc))

    files = [write_json(outdir / "lemmas.json", doc)]

    fig = new_figure(9.0, 4.5)
    ax = fig.add_subplot(121)
    ax.bar(range(len(seq.margins)), [float(m) for m in seq.margins])
    ax.axhline(1.0, color="tab:red", ls="--")
    ax.set_xlabel("level j")
    ax.set_ylabel("min distance / exclusion radius")
    ax.set_title("avoidance margins")
    ax2 = fig.add_subplot(122)
    if fam is not None:
        ax2.plot(ns, [float(v) for v in logn], "o-", label="family")
        ax2.plot(ns, [float(v) for v in ref], "s--", label="product bound")
        ax2.legend()
    ax2.set_xlabel("n")
    ax2.set_ylabel("log norm")
    ax2.set_title("biorthogonal norm growth")
    files.append(save_figure(fig, outdir / "lemmas.png"))

    return TaskOutcome("lemmas", "ok", files=tuple(f.name for f in files),
                       failures=tuple(failures))


# ---------------------------------------------------------------------------
# driver


_RUNNERS = {
    "classify": run_classify,
    "obs-sweep": run_obs_sweep,
    "control": run_control,
    "lemmas": run_lemmas,
}


def execute(cfg: ExperimentConfig, task_names, outdir) -> tuple:
    """Run the tasks, write manifest.json, return (exit_code, manifest).

    Exit code 0 when every task finished clean, 3 when any task failed or
    recorded partial failures. Unexpected exceptions propagate to the
    caller (the CLI maps them to a hard failure).
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    for name in task_names:
        if name not in _RUNNERS:
            raise ConfigError("unknown task %r" % name)

    write_json(outdir / "config.json", cfg.to_json())
    outcomes = []
    for name in task_names:
        outcomes.append(_RUNNERS[name](cfg, outdir))

    partial = any(o.status != "ok" or o.failures for o in outcomes)
    manifest = {
        "tool": "heatpoint %s" % __version__,
        "config": cfg.to_json(),
        "tasks": {o.name: o.to_json() for o in outcomes},
        "files": file_inventory(outdir),
    }
    write_json(outdir / "manifest.json", manifest)
    return (3 if partial else 0), manifest
