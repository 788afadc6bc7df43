"""Command-line front end: machine-readable tables for every capability.

Subcommands: correlate | kernel | converge | oracle | verify.  All take
``--config <path>`` (JSON, validated against the shipped schema, unknown
keys rejected) plus ``--out``, ``--seed``, ``--only`` overrides.  CSV
output carries a provenance header (full config echo, seed, version) and
17-significant-digit floats so reruns diff byte-identically.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from importlib import resources

import numpy as np

from . import __version__
from . import finite as fin
from . import limits as lim
from .errors import DomainError, NonConvergenceError
from .model import FiniteNModel, MultitimeRequest
from .oracle import McConfig, correlation_quadrature, estimate_correlation, sample_density
from .verify import run_checks


class ConfigError(Exception):
    def __init__(self, path, message):
        super().__init__(f"config error at '{path}': {message}")
        self.path = path


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def _schema():
    with resources.files("ncbm").joinpath("config.schema.json").open() as fh:
        return json.load(fh)


_TYPES = {"int": (int,), "number": (int, float), "string": (str,),
          "bool": (bool,), "array": (list,), "object": (dict,)}


def _validate_fields(cfg: dict, fields: dict, schema: dict, path: str):
    for key in cfg:
        if key not in fields:
            raise ConfigError(f"{path}{key}", "unknown key")
    for key, rule in fields.items():
        if key not in cfg:
            if rule.get("required"):
                raise ConfigError(f"{path}{key}", "missing required key")
            continue
        val = cfg[key]
        t = rule.get("type", "object")
        if t == "model":
            if not isinstance(val, dict):
                raise ConfigError(f"{path}{key}", "expected an object")
            _validate_fields(val, schema["model"]["fields"], schema, f"{path}{key}.")
            continue
        if t in _TYPES:
            if t == "int" and isinstance(val, bool):
                raise ConfigError(f"{path}{key}", "expected an integer")
            if not isinstance(val, _TYPES[t]):
                raise ConfigError(f"{path}{key}", f"expected {t}")
        if "enum" in rule and val not in rule["enum"]:
            raise ConfigError(f"{path}{key}", f"must be one of {rule['enum']}")
        if t == "array" and rule.get("items") in ("number", "int"):
            for i, item in enumerate(val):
                want = _TYPES[rule["items"]]
                if not isinstance(item, want) or isinstance(item, bool):
                    raise ConfigError(f"{path}{key}[{i}]", f"expected {rule['items']}")
        if isinstance(rule.get("fields"), dict) and isinstance(val, dict):
            _validate_fields(val, rule["fields"], schema, f"{path}{key}.")


def _fill_defaults(cfg: dict, fields: dict) -> dict:
    out = dict(cfg)
    for key, rule in fields.items():
        if key not in out and "default" in rule:
            out[key] = rule["default"]
        if isinstance(rule.get("fields"), dict):
            sub = out.get(key)
            if isinstance(sub, dict):
                out[key] = _fill_defaults(sub, rule["fields"])
    return out


def _build_model(cfg: dict) -> FiniteNModel:
    times = list(cfg["times"])
    T = cfg["T"]
    if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
        raise ConfigError("model.times", "times must be strictly increasing")
    if times and abs(times[-1] - T) > 1e-12 * max(T, 1.0):
        # observation times not reaching the horizon: add an empty slot at T
        times = times + [T]
    return FiniteNModel(cfg["N"], T, times, kmax=cfg.get("kmax"))


def _provenance(command: str, cfg: dict, seed) -> list:
    echo = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return [f"# ncbm {__version__}",
            f"# command: {command}",
            f"# config: {echo}",
            f"# seed: {seed}"]


def _write_lines(out_path, lines):
    text = "\n".join(lines) + "\n"
    if out_path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out_path, "w") as fh:
            fh.write(text)


def _write_json(out_path, payload):
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if out_path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out_path, "w") as fh:
            fh.write(text)


# -- commands ----------------------------------------------------------------

def cmd_correlate(cfg, out, seed):
    if ("model" in cfg) == ("family" in cfg):
        raise ConfigError("", "provide exactly one of 'model' or 'family'")
    requests = cfg.get("requests")
    if requests is None:
        if "points" not in cfg:
            raise ConfigError("points", "missing (or provide 'requests')")
        requests = [cfg["points"]]
    lines = _provenance("correlate", cfg, seed)
    lines.append("request_index,n_points,value,points")
    for idx, pts in enumerate(requests):
        if "model" in cfg:
            model = _build_model(cfg["model"])
            while len(pts) < model.M + 1:
                pts = list(pts) + [[]]
            req = MultitimeRequest.from_points(model, pts)
            value = fin.correlation(req)
            labels = [(m, x) for m, p in enumerate(req.configs) for x in p.positions]
        else:
            s_values = cfg.get("s_values")
            if not s_values:
                raise ConfigError("s_values", "required for limit families")
            labels = [(m, float(x)) for m, p in enumerate(pts) for x in p]
            n = len(labels)
            a = np.empty((n, n))
            for i, (mi, xi) in enumerate(labels):
                for j, (nj, xj) in enumerate(labels):
                    if cfg["family"] == "sine":
                        a[i, j] = lim.sine_reduction_A(s_values[mi], xi, s_values[nj], xj)
                    else:
                        a[i, j] = lim.airy_reduction_a(s_values[mi], xi, s_values[nj], xj)
            value = float(np.linalg.det(a))
        pts_str = ";".join(f"{m}:{_fmt(x)}" for m, x in labels)
        lines.append(f"{idx},{len(labels)},{_fmt(value)},{pts_str}")
    _write_lines(out, lines)
    return 0


def cmd_kernel(cfg, out, seed):
    grid = cfg["grid"]
    xs = np.linspace(grid["min"], grid["max"], grid["steps"])
    fam = cfg["family"]
    lines = _provenance("kernel", cfg, seed)
    lines.append("x,y,Stilde,D,Itilde")
    if fam == "finite":
        if "model" not in cfg:
            raise ConfigError("model", "required for the finite family")
        model = _build_model(cfg["model"])
        m = cfg.get("m", 0)
        n = cfg.get("n", model.M)
        if not (0 <= m <= model.M and 0 <= n <= model.M):
            raise ConfigError("m", f"time indices must lie in 0..{model.M}")
        ev = fin.KernelEvaluator(model)
        conj = cfg.get("conjugated", False)
        for x in xs:
            for y in xs:
                kv = ev.entry(m, n, float(x), float(y), conjugated=conj)
                lines.append(",".join(_fmt(v) for v in (x, y, kv.Stilde, kv.D, kv.Itilde)))
    else:
        s = cfg.get("s")
        t = cfg.get("t")
        if s is None or t is None:
            raise ConfigError("s", "limit families need both 's' and 't'")
        for x in xs:
            for y in xs:
                if fam == "sine":
                    vals = (lim.sine_Stilde(s, x, t, y), lim.sine_D(s, x, t, y),
                            lim.sine_Itilde(s, x, t, y))
                else:
                    vals = (lim.airy_Stilde(s, x, t, y), lim.airy_D(s, x, t, y),
                            lim.airy_Itilde(s, x, t, y))
                lines.append(",".join(_fmt(v) for v in (x, y) + vals))
    _write_lines(out, lines)
    return 0


def cmd_converge(cfg, out, seed):
    n_list = cfg["N_list"]
    for i, n in enumerate(n_list):
        if n % 2 != 0:
            raise ConfigError(f"N_list[{i}]", "particle counts must be even")
    rows, verdict = lim.convergence_table(
        cfg["regime"], n_list,
        s_values=cfg.get("s_values"), grid=cfg.get("grid"))
    lines = _provenance("converge", cfg, seed)
    lines.append("N,entry,sup_error")
    for r in rows:
        lines.append(f"{r['N']},{r['entry']},{_fmt(r['sup_error'])}")
    lines.append("# monotone_decrease: " +
                 " ".join(f"{k}={v}" for k, v in sorted(verdict.items())))
    _write_lines(out, lines)
    return 0


def cmd_oracle(cfg, out, seed):
    model = _build_model(cfg["model"])
    if cfg.get("mode", "mcmc") == "quadrature":
        pts = cfg.get("points")
        if pts is None:
            raise ConfigError("points", "required in quadrature mode")
        while len(pts) < model.M + 1:
            pts = list(pts) + [[]]
        req = MultitimeRequest.from_points(model, pts)
        value = correlation_quadrature(req, force=True)
        _write_json(out, {"provenance": {"version": __version__, "config": cfg,
                                         "seed": seed},
                          "value": value})
        return 0
    mc_cfg = dict(cfg.get("mc", {}))
    mc_cfg.setdefault("seed", seed)
    mc = McConfig(**mc_cfg)
    samples = sample_density(model, mc)
    windows = cfg.get("windows")
    if not windows:
        raise ConfigError("windows", "at least one window set is required")
    estimates = []
    worst_rhat = 1.0
    for wset in windows:
        boxes = [(int(m), float(lo), float(hi)) for (m, lo, hi) in wset]
        est = estimate_correlation(samples, boxes)
        worst_rhat = max(worst_rhat, est.rhat)
        estimates.append({"windows": [list(b) for b in boxes], **est.to_dict()})
    if cfg.get("samples_csv"):
        rows = ["chain,step,m,i,x"]
        rows += [f"{c},{s},{m},{i},{_fmt(x)}" for (c, s, m, i, x) in samples.iter_rows()]
        _write_lines(cfg["samples_csv"], rows)
    _write_json(out, {"provenance": {"version": __version__, "config": cfg, "seed": seed},
                      "acceptance_rate": samples.acceptance_rate,
                      "estimates": estimates,
                      "rhat_warning": worst_rhat > 1.05})
    return 0


def cmd_verify(cfg, out, seed, only_cli=None):
    only = cfg.get("only") or only_cli
    rows, all_ok = run_checks(only=only, tolerance_scale=cfg.get("tolerance_scale", 1.0))
    if not rows:
        raise ConfigError("only", "no checks matched the filter")
    _write_json(out, {"provenance": {"version": __version__, "config": cfg, "seed": seed},
                      "checks": rows, "passed": bool(all_ok)})
    return 0 if all_ok else 1


COMMANDS = {"correlate": cmd_correlate, "kernel": cmd_kernel,
            "converge": cmd_converge, "oracle": cmd_oracle, "verify": cmd_verify}


def build_parser():
    p = argparse.ArgumentParser(
        prog="ncbm",
        description="Multitime correlations of non-colliding Brownian particles")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="path to a JSON configuration")
        sp.add_argument("--out", default="-", help="output path ('-' = stdout)")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--only", action="append", default=None,
                        help="verify: restrict to checks/modules (repeatable)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = {}
        if args.config:
            try:
                with open(args.config) as fh:
                    cfg = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError("<file>", str(exc))
        schema = _schema()
        fields = dict(schema["commands"][args.command]["fields"])
        _validate_fields(cfg, fields, schema, "")
        cfg = _fill_defaults(cfg, fields)
        seed = args.seed if args.seed is not None else cfg.get("seed", 20260808)
        cfg["seed"] = seed
        if args.command == "verify":
            return cmd_verify(cfg, args.out, seed, only_cli=args.only)
        return COMMANDS[args.command](cfg, args.out, seed)
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NonConvergenceError as exc:
        print(f"numerical non-convergence: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
