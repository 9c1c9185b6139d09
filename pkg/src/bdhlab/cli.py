"""Batch runner: INI experiment files in, fixed-schema CSV out.

Exit codes: 0 success, 2 configuration error, 3 internal invariant violation,
4 resource limit.
"""
from __future__ import annotations

import argparse
import ast
import configparser
import csv
import io
import math
import operator
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction

from .baseline import baseline_report
from .conditions import measure_profile
from .predictor import compare, corollary_prediction, theorem1_prediction, theorem2_prediction
from .sequences import generate
from .sieves import ResourceLimitError, build_factor_table
from .smooth import ht_estimate, smooth_context, smooth_variance
from .variance import InvariantViolation, in_theorem_range, variance_report

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT, EXIT_RESOURCE = 0, 2, 3, 4

VARIANCE_COLUMNS = [
    "x", "Q", "kind", "params", "v_direct", "v_expanded", "v_switched", "diagonal",
    "hl_term", "tail_term", "residual", "k_prog", "k_conc_2xQ", "k_hered", "k_int1",
    "k_int2", "k_int3", "main_1", "main_2", "main_3", "budget_total", "gap",
    "gap_over_main", "gap_over_budget", "seed", "wall_ms",
]
BASELINE_COLUMNS = [
    "x", "Q", "v_exact", "bernoulli_sum", "integral_value", "asymptotic_value",
    "variance_vs_sum", "sum_vs_integral", "integral_over_asymptotic", "wall_ms",
]
SMOOTH_COLUMNS = [
    "x", "y", "Q", "u", "alpha", "alpha_approx", "zeta_alpha_y", "psi", "ht_estimate",
    "v_structured", "v_generic", "main_1", "main_2", "budget_total", "gap",
    "gap_over_main", "gap_over_budget", "wall_ms",
]

ALLOWED = {
    "sequence": {"kind", "x", "y", "p", "alpha", "seed", "path"},
    "run": {"Q", "algorithms", "decomposition", "conditions", "H"},
    "predict": {"mode", "P", "R", "K2", "c", "C", "A"},
}
ALGORITHMS = ("direct", "expanded", "switched")


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


_OPS = {
    ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
    ast.Div: operator.truediv, ast.Pow: operator.pow, ast.USub: operator.neg,
    ast.UAdd: operator.pos,
}


def eval_expr(text: str, names: dict[str, float] | None = None) -> float:
    """Arithmetic on numbers and the given names; ``^`` means power."""
    names = names or {}
    tree = ast.parse(text.replace("^", "**"), mode="eval")

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return node.value
        if isinstance(node, ast.Name) and node.id in names:
            return names[node.id]
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        raise ValueError(f"unsupported expression {text!r}")

    v = ev(tree)
    if isinstance(v, complex) or not math.isfinite(v):
        raise ValueError(f"expression {text!r} is not a finite real")
    return v


def _is_integral(v: float) -> bool:
    return float(v).is_integer()


@dataclass
class ExperimentConfig:
    kind: str
    x: float
    params: dict
    Q: list[float]
    algorithms: tuple[str, ...] = ALGORITHMS
    decomposition: bool = False
    conditions: bool = False
    H: list[float] = field(default_factory=list)
    predict: dict | None = None
    seed: int | None = None

    def run_count(self) -> int:
        return len(self.Q)


def parse_config(text: str) -> ExperimentConfig:
    """Validate an experiment file; every problem found is reported at once."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"syntax: {exc}"]) from None
    errors: list[str] = []
    for sec in cp.sections():
        if sec not in ALLOWED:
            errors.append(f"unknown section [{sec}]")
            continue
        for key in cp[sec]:
            if key not in ALLOWED[sec]:
                errors.append(f"unknown key {sec}.{key}")
    seq = cp["sequence"] if cp.has_section("sequence") else {}
    run = cp["run"] if cp.has_section("run") else {}

    def number(sec, key, raw, names=None):
        try:
            return eval_expr(raw, names)
        except (ValueError, SyntaxError, ZeroDivisionError, OverflowError):
            errors.append(f"{sec}.{key}: malformed number {raw!r}")
            return None

    kind = seq.get("kind", "integers")
    x = None
    if "x" not in seq:
        errors.append("sequence.x: missing required field")
    else:
        x = number("sequence", "x", seq["x"])
    names = {"x": x} if x is not None else {}
    params: dict = {}
    seed = None
    if "seed" in seq:
        s = number("sequence", "seed", seq["seed"])
        if s is not None:
            if not _is_integral(s):
                errors.append("sequence.seed: must be an integer")
            else:
                seed = int(s)
    for key in ("y", "p", "alpha"):
        if key in seq:
            v = number("sequence", key, seq[key], names)
            if v is not None:
                params[key] = int(v) if key == "p" and _is_integral(v) else v
    if "path" in seq:
        params["path"] = seq["path"]
    need = {"smooth_indicator": ["y"], "multiples_indicator": ["p"],
            "bernoulli": ["alpha"], "custom_file": ["path"]}
    if kind not in ("integers", "von_mangoldt", *need):
        errors.append(f"sequence.kind: unknown kind {kind!r}")
    for key in need.get(kind, []):
        if key not in params and key not in seq:
            errors.append(f"sequence.{key}: missing required field for kind {kind}")
    if kind == "bernoulli" and seed is None:
        errors.append("sequence.seed: missing required field for kind bernoulli")
    Qs: list[float] = []
    if "Q" not in run:
        errors.append("run.Q: missing required field")
    else:
        for part in run["Q"].split(","):
            part = part.strip()
            if part:
                v = number("run", "Q", part, names)
                if v is not None:
                    Qs.append(v)
    algorithms = ALGORITHMS
    if "algorithms" in run:
        algorithms = tuple(a.strip() for a in run["algorithms"].split(",") if a.strip())
        for a in algorithms:
            if a not in ALGORITHMS:
                errors.append(f"run.algorithms: unknown algorithm {a!r}")

    def flag(key):
        if key not in run:
            return False
        v = run[key].strip().lower()
        if v in ("1", "true", "yes", "on"):
            return True
        if v in ("0", "false", "no", "off"):
            return False
        errors.append(f"run.{key}: expected a boolean, got {run[key]!r}")
        return False

    H = []
    if "H" in run:
        for part in run["H"].split(","):
            if part.strip():
                v = number("run", "H", part.strip(), names)
                if v is not None:
                    H.append(v)
    predict = None
    if cp.has_section("predict"):
        pr = cp["predict"]
        mode = pr.get("mode", "").strip()
        if mode not in ("theorem1", "theorem2", "corollary"):
            errors.append(f"predict.mode: expected theorem1, theorem2 or corollary, got {mode!r}")
        predict = {"mode": mode}
        for key in ("P", "R", "c", "C", "A"):
            if key in pr:
                predict[key] = number("predict", key, pr[key], names)
        if "K2" in pr:
            predict["K2"] = [number("predict", "K2", p.strip(), names)
                             for p in pr["K2"].split(",") if p.strip()]
        if mode == "theorem2":
            for key in ("P", "R"):
                if key not in pr:
                    errors.append(f"predict.{key}: missing required field for theorem2")
        if mode == "corollary" and kind != "smooth_indicator":
            errors.append("predict.mode: corollary needs sequence.kind = smooth_indicator")
    cfg = ExperimentConfig(kind, x if x is not None else 0.0, params, Qs, algorithms,
                           flag("decomposition"), flag("conditions"), H, predict, seed)
    if errors:
        raise ConfigError(errors)
    return cfg


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, int):
        return str(v)
    if isinstance(v, Fraction):
        v = float(v)
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, ".17g")


def emit_csv(rows: list[dict], columns: list[str], fh) -> None:
    w = csv.writer(fh, lineterminator="\r\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])


def _sequence(cfg: ExperimentConfig, t):
    params = dict(cfg.params)
    if cfg.kind == "bernoulli":
        params["seed"] = cfg.seed
    return generate(cfg.kind, cfg.x, t, **params)


def _params_text(cfg: ExperimentConfig) -> str:
    params = dict(cfg.params)
    if cfg.seed is not None and cfg.kind == "bernoulli":
        params["seed"] = cfg.seed
    return ";".join(f"{k}={v!r}" if isinstance(v, float) else f"{k}={v}"
                    for k, v in sorted(params.items()))


def run_experiment(cfg: ExperimentConfig, sub: str = "sweep", threads: int = 1,
                   timing: bool = False) -> tuple[list[dict], list[str]]:
    """Rows for one subcommand.  ``wall_ms`` is filled only when ``timing`` is set."""
    if sub == "baseline":
        return _run_baseline(cfg, threads, timing), BASELINE_COLUMNS
    if sub == "smooth":
        return _run_smooth(cfg, timing), SMOOTH_COLUMNS
    t = build_factor_table(max(math.floor(cfg.x), math.floor(max(cfg.Q, default=2)), 2))
    seq = _sequence(cfg, t)
    want_profile = sub in ("conditions", "predict") or (sub == "sweep" and (cfg.conditions or cfg.predict))
    want_predict = sub == "predict" or (sub == "sweep" and cfg.predict is not None)
    if sub == "predict" and cfg.predict is None:
        raise ConfigError(["predict: the [predict] section is required"])
    rows = []
    for Q in cfg.Q:
        start = time.perf_counter()
        row = {"x": cfg.x, "Q": Q, "kind": cfg.kind, "params": _params_text(cfg), "seed": cfg.seed}
        rep = variance_report(seq, Q, t, algorithms=cfg.algorithms,
                              decomposition=cfg.decomposition, workers=threads)
        row.update(v_direct=rep.value_direct, v_expanded=rep.value_expanded,
                   v_switched=rep.value_switched, diagonal=rep.diagonal)
        v = next(iter(rep.values().values()))
        dec = rep.decomposition
        if dec is not None:
            row.update(hl_term=dec.hl_term, tail_term=dec.tail_term, residual=dec.residual)
        in_range = in_theorem_range(cfg.x, Q)
        prof = None
        if want_profile and in_range:
            pr = cfg.predict or {}
            P, R = pr.get("P"), pr.get("R")
            prof = measure_profile(seq, Q, t, cfg.H, P, R, pr.get("K2"))
            row.update(k_prog=prof.k_prog, k_conc_2xQ=prof.k_conc[2 * cfg.x / Q], k_hered=prof.k_hered)
            if prof.k_int is not None:
                row.update(k_int1=prof.k_int1, k_int2=prof.k_int2, k_int3=prof.k_int3)
        if want_predict and in_range:
            pr = cfg.predict
            mode = pr["mode"]
            if mode == "theorem1":
                pred = theorem1_prediction(seq, Q, prof, t)
            elif mode == "theorem2":
                pred = theorem2_prediction(seq, Q, pr["P"], pr["R"], prof, t)
            else:
                pred = corollary_prediction(cfg.x, cfg.params["y"], Q, pr.get("A", 1.0), t=t,
                                            c=pr.get("c", 1.0), C=pr.get("C", 10.0))
            compare(pred, v)
            mains = list(pred.main_terms.values())
            for i, m in enumerate(mains[:3], 1):
                row[f"main_{i}"] = m
            row.update(budget_total=pred.budget_total, gap=pred.comparison["abs_gap"],
                       gap_over_main=pred.comparison["gap_over_main"],
                       gap_over_budget=pred.comparison["gap_over_budget"])
        if timing:
            row["wall_ms"] = round((time.perf_counter() - start) * 1000, 3)
        rows.append(row)
    return rows, VARIANCE_COLUMNS


def _run_baseline(cfg: ExperimentConfig, threads: int, timing: bool) -> list[dict]:
    t = build_factor_table(max(math.floor(cfg.x), math.floor(max(cfg.Q, default=2)), 2))
    rows = []
    for Q in cfg.Q:
        start = time.perf_counter()
        rep = baseline_report(cfg.x, Q, t, threads)
        row = {"x": cfg.x, "Q": Q, "v_exact": rep.v_exact, "bernoulli_sum": rep.bernoulli_sum,
               "integral_value": rep.integral_value, "asymptotic_value": rep.asymptotic_value,
               **rep.diff_ratios}
        if timing:
            row["wall_ms"] = round((time.perf_counter() - start) * 1000, 3)
        rows.append(row)
    return rows


def _run_smooth(cfg: ExperimentConfig, timing: bool) -> list[dict]:
    if "y" not in cfg.params:
        raise ConfigError(["sequence.y: missing required field for the smooth subcommand"])
    y = cfg.params["y"]
    x = cfg.x
    t = build_factor_table(max(math.floor(x), math.floor(max(cfg.Q, default=2)), 2))
    ctx = smooth_context(x, y, t)
    pr = cfg.predict or {}
    rows = []
    for Q in cfg.Q:
        start = time.perf_counter()
        v_s = smooth_variance(x, y, Q, t)
        v_g = smooth_variance(x, y, Q, t, method="generic")
        if v_s != v_g:
            raise InvariantViolation(f"smooth variance paths disagree at Q={Q}: {v_s} vs {v_g}")
        pred = compare(corollary_prediction(x, y, Q, pr.get("A", 1.0), ctx, t,
                                            pr.get("c", 1.0), pr.get("C", 10.0)), v_s)
        row = {"x": x, "y": y, "Q": Q, "u": ctx.u, "alpha": ctx.alpha,
               "alpha_approx": ctx.alpha_approx, "zeta_alpha_y": ctx.zeta_alpha_y,
               "psi": ctx.psi_exact, "ht_estimate": ht_estimate(x, min(y, x)),
               "v_structured": v_s, "v_generic": v_g,
               "main_1": pred.main_terms["diagonal"], "main_2": pred.main_terms["integral"],
               "budget_total": pred.budget_total, "gap": pred.comparison["abs_gap"],
               "gap_over_main": pred.comparison["gap_over_main"],
               "gap_over_budget": pred.comparison["gap_over_budget"]}
        if timing:
            row["wall_ms"] = round((time.perf_counter() - start) * 1000, 3)
        rows.append(row)
    return rows


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bdh-lab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("variance", "baseline", "smooth", "conditions", "predict", "sweep"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="experiment INI file")
        p.add_argument("--out", help="CSV output path (default: stdout)")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--seed", type=int, help="overrides sequence.seed")
        p.add_argument("--timing", action="store_true", help="fill the wall_ms column")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with open(args.config, encoding="utf-8") as fh:
            cfg = parse_config(fh.read())
        if args.seed is not None:
            cfg.seed = args.seed
        if args.threads < 1:
            raise ConfigError(["--threads must be >= 1"])
        rows, columns = run_experiment(cfg, args.command, args.threads, args.timing)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (ResourceLimitError, MemoryError) as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    buf = io.StringIO()
    emit_csv(rows, columns, buf)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK
