"""Command-line front end.

Subcommands: ``fn-curve``, ``threshold``, ``critical-line``, ``exponents``
and ``oracle-check``. Values resolve as flags, then a ``--config`` file of
``key=value`` lines (keys are flag names), then built-in defaults. The
resolved configuration is embedded in every artifact; the worker count is
left out because it never changes results.

Exit codes: 0 success, 1 oracle check failed, 2 usage error (nothing is
written), 3 analysis error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .critical import CLASSIFY_WINDOW, BracketError, bisect_threshold, trace_critical_line
from .engine import GrowthLimits, InsufficientDataError
from .models import ModelKind, ModelSpec, ParameterError
from .oracle import SizeLimitError, compare_mc_to_oracle
from .stats import (BETA_WINDOW, GAMMA_WINDOW, TAU_WINDOW, DomainError, estimate_f_infinity,
                    estimate_survival, measure_exponents)

COMMANDS = ("fn-curve", "threshold", "critical-line", "exponents", "oracle-check")

DEFAULTS = {
    "p": 0.0,
    "p_plus": 0.0,
    "p_minus": 0.0,
    "width": None,
    "height": None,
    "depth": 512,
    "realizations": 10**4,
    "size_cutoff": 10**5,
    "depth_cutoff": None,
    "tol": 5e-3,
    "seed": 42,
    "workers": None,
    "output": None,
    "format": None,
    "bracket": (0.0, 1.0),
    "varying": None,
    "grid": "0:0.05:0.25",
    "p_c": None,
    "source": None,
    "classify_window": CLASSIFY_WINDOW,
    "tau_window": TAU_WINDOW,
    "beta_window": BETA_WINDOW,
    "gamma_window": GAMMA_WINDOW,
    "z_threshold": 2.0,
}
DEFAULT_FORMAT = {"fn-curve": "csv", "threshold": "json", "critical-line": "csv",
                  "exponents": "json", "oracle-check": "json"}
DEFAULT_L = 512
COMMON_KEYS = ("command", "model", "p", "p_plus", "p_minus", "width", "height", "depth",
               "realizations", "size_cutoff", "depth_cutoff", "seed", "format")
COMMAND_KEYS = {
    "fn-curve": ("source",),
    "threshold": ("tol", "bracket", "varying", "classify_window", "z_threshold"),
    "critical-line": ("tol", "grid", "classify_window", "z_threshold"),
    "exponents": ("varying", "p_c", "tau_window", "beta_window", "gamma_window"),
    "oracle-check": ("source",),
}


class UsageError(Exception):
    """Bad flag or config value; carries the offending flag name."""


class _Parser(argparse.ArgumentParser):
    def __init__(self, *args, **kwargs):
        kwargs.setdefault("allow_abbrev", False)
        super().__init__(*args, **kwargs)

    def error(self, message):
        raise UsageError(message)


def _probability(text):
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"{text} is outside [0, 1]")
    return value


def _positive_int(text):
    value = int(float(text)) if "e" in text.lower() else int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"{text} must be >= 1")
    return value


def _positive_float(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"{text} must be > 0")
    return value


def _model(text):
    try:
        return ModelKind.parse(text).value
    except ParameterError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _grid(text):
    try:
        lo, step, hi = (float(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not start:step:stop") from None
    if step <= 0 or lo > hi:
        raise argparse.ArgumentTypeError(f"{text!r} is not an increasing range")
    return text


def grid_values(text: str) -> list[float]:
    """Inclusive ``start:step:stop`` range, rounded to kill float drift."""
    lo, step, hi = (float(x) for x in text.split(":"))
    count = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + i * step, 12) for i in range(count)]


def _add_common(p: argparse.ArgumentParser):
    S = argparse.SUPPRESS
    p.add_argument("--model", type=_model, default=S, required=False,
                   help="a-classical, a-ea, b-classical or b-ea")
    p.add_argument("--p", type=_probability, default=S, help="Model A placement probability")
    p.add_argument("--p-plus", type=_probability, default=S, help="Model B up/right probability")
    p.add_argument("--p-minus", type=_probability, default=S, help="Model B down/left probability")
    p.add_argument("--width", type=_positive_int, default=S,
                   help="lattice width (Model B side L, default 512; Model A default 2*depth+1)")
    p.add_argument("--height", type=_positive_int, default=S, help="Model B height (default: width)")
    p.add_argument("--depth", type=_positive_int, default=S, help="Model A layers (default 512)")
    p.add_argument("--realizations", type=_positive_int, default=S)
    p.add_argument("--size-cutoff", type=_positive_int, default=S)
    p.add_argument("--depth-cutoff", type=_positive_int, default=S)
    p.add_argument("--seed", type=int, default=S, help="master seed (fallback: $PERC_SEED, then 42)")
    p.add_argument("--workers", type=_positive_int, default=S)
    p.add_argument("--output", "-o", default=S, help="artifact path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default=S)
    p.add_argument("--config", default=S, help="key=value file; flags take precedence")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="percolab", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    S = argparse.SUPPRESS
    window = dict(nargs=2, type=float, metavar=("LO", "HI"), default=S)
    cmds = {}
    for name in COMMANDS:
        cmds[name] = sp = sub.add_parser(name)
        _add_common(sp)
    for name in ("threshold", "critical-line"):
        cmds[name].add_argument("--tol", type=_positive_float, default=S)
        cmds[name].add_argument("--classify-window", **window)
        cmds[name].add_argument("--z-threshold", type=_positive_float, default=S)
    cmds["threshold"].add_argument("--bracket", nargs=2, type=_probability, metavar=("LO", "HI"),
                                   default=S)
    for name in ("threshold", "exponents"):
        cmds[name].add_argument("--varying", choices=("p", "p_plus", "p_minus", "diagonal"), default=S)
    cmds["critical-line"].add_argument("--grid", type=_grid, default=S, help="start:step:stop")
    cmds["exponents"].add_argument("--p-c", type=_probability, default=S, required=False)
    for name in ("tau", "beta", "gamma"):
        cmds["exponents"].add_argument(f"--{name}-window", **window)
    for name in ("fn-curve", "oracle-check"):
        cmds[name].add_argument("--source", nargs=2, type=int, metavar=("X", "Y"), default=S)
    return parser


def _read_config(path: str, command: str, parser: argparse.ArgumentParser) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"--config: cannot read {path}: {exc.strerror}") from None
    tokens = [command]
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"--config line {lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        flag = "--" + key.replace("_", "-")
        if key in ("config", "command"):
            raise UsageError(f"--config line {lineno}: key {key!r} not allowed")
        tokens.append(flag)
        tokens.extend(value.split())
    try:
        ns = parser.parse_args(tokens)
    except UsageError as exc:
        raise UsageError(f"--config {path}: {exc}") from None
    out = vars(ns)
    out.pop("command")
    return out


def parse_config(argv, env=None) -> dict:
    """Resolve ``argv`` into a flat config dict (flags > config file > defaults)."""
    env = os.environ if env is None else env
    parser = build_parser()
    flags = vars(parser.parse_args(argv))
    command = flags.pop("command")
    from_file = _read_config(flags["config"], command, parser) if "config" in flags else {}
    cfg = dict(DEFAULTS)
    if "PERC_SEED" in env and "seed" not in flags and "seed" not in from_file:
        try:
            cfg["seed"] = int(env["PERC_SEED"])
        except ValueError:
            raise UsageError("PERC_SEED must be an integer") from None
    cfg.update(from_file)
    cfg.update(flags)
    cfg["command"] = command
    if "model" not in cfg:
        raise UsageError("--model is required")
    kind = ModelKind.parse(cfg["model"])
    if cfg["format"] is None:
        cfg["format"] = DEFAULT_FORMAT[command]
    if kind.is_a:
        if cfg["width"] is None:
            cfg["width"] = 2 * cfg["depth"] + 1
    elif cfg["width"] is None:
        cfg["width"] = DEFAULT_L
    if cfg["varying"] is None:
        cfg["varying"] = "p" if kind.is_a else "p_plus"
    for key in ("bracket", "classify_window", "tau_window", "beta_window", "gamma_window", "source"):
        if cfg[key] is not None:
            cfg[key] = [v for v in cfg[key]]
    if command == "threshold" and not cfg["bracket"][0] < cfg["bracket"][1]:
        raise UsageError("--bracket: LO must be below HI")
    if command == "exponents" and cfg["p_c"] is None:
        raise UsageError("--p-c is required for exponents")
    if command == "critical-line" and kind.is_a:
        raise UsageError("--model: critical-line needs a Model B kind")
    if kind.is_a and cfg["varying"] != "p":
        raise UsageError(f"--varying: {cfg['varying']} does not apply to Model A")
    if not kind.is_a and cfg["varying"] == "p":
        raise UsageError("--varying: p applies to Model A only")
    if cfg["workers"] is None:
        cfg["workers"] = os.cpu_count() or 1
    return cfg


def model_spec(cfg: dict) -> ModelSpec:
    try:
        return ModelSpec(cfg["model"], p=cfg["p"], p_plus=cfg["p_plus"], p_minus=cfg["p_minus"],
                         width=cfg["width"], depth=cfg["depth"], height=cfg["height"])
    except ParameterError as exc:
        raise UsageError(f"lattice: {exc}") from None


def growth_limits(cfg: dict) -> GrowthLimits:
    return GrowthLimits(cfg["size_cutoff"], cfg["depth_cutoff"])


def embedded(cfg: dict) -> dict:
    """Config keys that shape the result (workers and paths never do)."""
    keys = COMMON_KEYS + COMMAND_KEYS[cfg["command"]]
    return {k: cfg[k] for k in sorted(keys)}


def _check_output(path):
    if path is None:
        return
    parent = Path(path).resolve().parent
    if not parent.is_dir() or not os.access(parent, os.W_OK):
        raise UsageError(f"--output: cannot write to {path}")
    if Path(path).is_dir():
        raise UsageError(f"--output: {path} is a directory")


def _json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _fn_curve(cfg):
    spec = model_spec(cfg)
    source = tuple(cfg["source"]) if cfg["source"] is not None else None
    if source is not None and not spec.contains(source):
        raise UsageError(f"--source: {source} lies outside the lattice")
    limits = growth_limits(cfg)
    curve = estimate_survival(spec, cfg["seed"], cfg["realizations"], limits, source, cfg["workers"])
    f_inf, lo, hi = estimate_f_infinity(curve)
    if cfg["format"] == "csv":
        text = curve.to_csv({"config": embedded(cfg), "f_infinity": [f_inf, lo, hi]})
    else:
        doc = curve.to_dict()
        doc.update(config=embedded(cfg), f_infinity={"value": f_inf, "wilson_95": [lo, hi]})
        text = _json(doc)
    return text, f"F_inf={f_inf:.4f} [{lo:.4f}, {hi:.4f}] over {curve.total_realizations} clusters"


def _threshold(cfg):
    spec = model_spec(cfg)
    est = bisect_threshold(spec, cfg["varying"], cfg["bracket"], cfg["tol"], cfg["realizations"],
                           growth_limits(cfg), cfg["seed"], tuple(cfg["classify_window"]),
                           cfg["z_threshold"], workers=cfg["workers"])
    if cfg["format"] == "json":
        text = est.to_json(embedded(cfg))
    else:
        rows = [f"# config={json.dumps(embedded(cfg), sort_keys=True)}",
                f"# p_c={est.p_c!r} +- {est.uncertainty!r}", "step,low,high"]
        rows += [f"{i},{lo!r},{hi!r}" for i, (lo, hi) in enumerate(est.bracket_history)]
        text = "\n".join(rows) + "\n"
    return text, f"p_c={est.p_c:.5f} +- {est.uncertainty:.5f} ({est.steps} evaluations)"


def _critical_line(cfg):
    line = trace_critical_line(cfg["model"], grid_values(cfg["grid"]), cfg["tol"],
                               cfg["realizations"], growth_limits(cfg), cfg["seed"],
                               cfg["width"], tuple(cfg["classify_window"]), cfg["z_threshold"],
                               cfg["workers"])
    if cfg["format"] == "csv":
        text = line.to_csv({"config": embedded(cfg)})
    else:
        doc = {"config": embedded(cfg),
               "isotropy_point": {"p_c": line.isotropy_point.p_c,
                                  "uncertainty": line.isotropy_point.uncertainty},
               "points": [{"p_plus": q.p_plus, "p_minus_c": q.p_minus_c if q.reachable else None,
                           "uncertainty": q.uncertainty if q.reachable else None,
                           "steps": q.steps, "realizations": q.realizations,
                           "mirrored": q.mirrored}
                          for q in sorted(line.points, key=lambda q: (q.p_plus, q.p_minus_c))]}
        text = _json(doc)
    iso = line.isotropy_point
    return text, f"isotropy point {iso.p_c:.4f} +- {iso.uncertainty:.4f}"


def _exponents(cfg):
    spec = model_spec(cfg)
    res = measure_exponents(spec, cfg["varying"], cfg["p_c"], cfg["realizations"],
                            growth_limits(cfg), cfg["seed"], tuple(cfg["tau_window"]),
                            tuple(cfg["beta_window"]), tuple(cfg["gamma_window"]),
                            workers=cfg["workers"])
    if cfg["format"] == "json":
        text = res.to_json(embedded(cfg))
    else:
        rows = [f"# config={json.dumps(embedded(cfg), sort_keys=True)}",
                "exponent,value,stderr"]
        rows += [f"tau,{res.tau.value!r},{res.tau.stderr!r}",
                 f"beta_direct,{res.beta.value!r},{res.beta.stderr!r}",
                 f"beta_scaling,{res.beta_scaling!r},{res.beta_scaling_se!r}",
                 f"gamma,{res.gamma.value!r},{res.gamma.stderr!r}"]
        text = "\n".join(rows) + "\n"
    return text, (f"tau={res.tau.value:.4f} beta={res.beta.value:.4f} "
                  f"beta_scaling={res.beta_scaling:.4f} gamma={res.gamma.value:.4f}")


def _oracle(cfg):
    spec = model_spec(cfg)
    try:
        report = compare_mc_to_oracle(spec, cfg["source"], cfg["realizations"], cfg["seed"])
    except SizeLimitError as exc:
        raise UsageError(f"lattice: {exc}") from None
    if cfg["format"] == "json":
        text = report.to_json(embedded(cfg))
    else:
        rows = [f"# config={json.dumps(embedded(cfg), sort_keys=True)}", "statistic,target,exact,z"]
        for n, z in sorted(report.size_z.items()):
            rows.append(f"size_exceeds,{n},{report.exact.exceed_prob(n)!r},{z!r}")
        for (x, y), z in sorted(report.reach_z.items()):
            rows.append(f"reach,{x}:{y},{report.exact.reach_prob.get((x, y), 0.0)!r},{z!r}")
        text = "\n".join(rows) + "\n"
    status = "passed" if report.passed else "FAILED"
    return text, f"oracle {status}: max |z| = {report.max_abs_z:.2f}", report.passed


RUNNERS = {"fn-curve": _fn_curve, "threshold": _threshold, "critical-line": _critical_line,
           "exponents": _exponents, "oracle-check": _oracle}


def run(cfg: dict, stdout=None, stderr=None) -> int:
    """Execute a resolved config; write the artifact and a one-line summary."""
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    try:
        _check_output(cfg["output"])
        model_spec(cfg)
        out = RUNNERS[cfg["command"]](cfg)
    except UsageError as exc:
        print(f"percolab: usage error: {exc}", file=stderr)
        return 2
    except (InsufficientDataError, BracketError, DomainError) as exc:
        print(f"percolab: analysis error: {exc}", file=stderr)
        return 3
    text, summary = out[0], out[1]
    if cfg["output"] is None:
        stdout.write(text)
    else:
        Path(cfg["output"]).write_text(text)
    print(summary, file=stderr)
    return 0 if len(out) < 3 or out[2] else 1


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
    except UsageError as exc:
        print(f"percolab: usage error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
