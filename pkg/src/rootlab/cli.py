"""Command-line interface.

    rootlab roots --poly p.json
    rootlab dist --a a.json --b b.json
    rootlab embed --tuple t.json
    rootlab track --family parabola_shift --n 16 --emit csv
    rootlab norms --curve c.json --q 1,1.2
    rootlab experiment weaknorm --d 2 --n 1,10,100

Exit codes: 0 success, 2 usage or validation error, 3 numerical failure.
With ``--out DIR`` results are written to files and stdout stays empty.
"""
from __future__ import annotations

import argparse
import inspect
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import polycore, sobolev
from .adspace import AlmgrenConfig, UnorderedTuple, almgren_embed, dist
from .errors import NonConvergence, RefinementLimit
from .lab import experiments as ex
from .lab.families import BUILTINS, INF, get_family
from .tracking import CoefficientCurve, RootCurve, holder_constants, track

EXPERIMENTS = ("convergence", "parameterized", "radical", "weaknorm", "bound-check",
               "almgren-equivalence")
DEFAULT_FAMILY = {"convergence": "parabola_shift", "parameterized": "sqrt_offset",
                  "radical": "parabola_shift", "bound-check": "parabola_shift",
                  "almgren-equivalence": "parabola_shift"}
EMITS = ("csv", "json", "svg")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    inputs: dict = field(default_factory=dict)
    experiment: str | None = None
    family: str | None = None
    params: dict = field(default_factory=dict)
    d: int | None = None
    q: list = field(default_factory=lambda: [1.0])
    n: list | None = None
    grid: int = 10_000
    tol: float = 1e-12
    slack: float | None = 1e-9
    out: Path | None = None
    emit: tuple = ("csv", "json")
    seed: list | None = None


# ----------------------------------------------------------------- codecs

def _complex(v) -> complex:
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise UsageError(f"complex number must be [re, im], got {v!r}")
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, (int, float)):
        return complex(v)
    raise UsageError(f"not a number: {v!r}")


def _pair(z: complex) -> list:
    return [float(z.real), float(z.imag)]


def _pairs(zs) -> list:
    return [_pair(z) for z in np.asarray(zs, dtype=complex).reshape(-1)]


def _load_json(path: Path):
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise UsageError(f"no such file: {path}") from None
    except json.JSONDecodeError as e:
        raise UsageError(f"{path}: malformed JSON ({e})") from None


def poly_from_json(obj) -> polycore.MonicPolynomial:
    if not isinstance(obj, dict) or "coeffs" not in obj:
        raise UsageError("polynomial JSON needs a 'coeffs' list")
    coeffs = [_complex(c) for c in obj["coeffs"]]
    d = obj.get("d", len(coeffs))
    if not isinstance(d, int) or d < 1:
        raise UsageError(f"degree must be an integer >= 1, got {d!r}")
    if len(coeffs) != d:
        raise UsageError(f"'d'={d} but {len(coeffs)} coefficients given")
    try:
        return polycore.MonicPolynomial(coeffs)
    except ValueError as e:
        raise UsageError(str(e)) from None


def tuple_from_json(obj, tol: float = 1e-12) -> UnorderedTuple:
    """Accepts tuple JSON ``{"d", "values"}`` or polynomial JSON (its roots)."""
    if isinstance(obj, dict) and "values" in obj:
        values = [_complex(v) for v in obj["values"]]
        d = obj.get("d", len(values))
        if not isinstance(d, int) or d < 1 or len(values) != d:
            raise UsageError(f"tuple JSON: 'd'={d!r} does not match {len(values)} values")
        try:
            return UnorderedTuple(values)
        except ValueError as e:
            raise UsageError(str(e)) from None
    return UnorderedTuple(polycore.roots(poly_from_json(obj), tol).roots)


def curve_from_json(obj) -> CoefficientCurve:
    try:
        grid = np.asarray(obj["grid"], dtype=float)
        samples = np.array([[_complex(c) for c in row] for row in obj["samples"]])
        derivs = None
        if obj.get("derivs") is not None:
            derivs = np.array([[[_complex(c) for c in row] for row in layer]
                               for layer in obj["derivs"]])
    except (KeyError, TypeError, ValueError) as e:
        raise UsageError(f"curve JSON: {e}") from None
    for key, idx in (("alpha", 0), ("beta", -1)):
        if key in obj and grid.size and not math.isclose(obj[key], grid[idx]):
            raise UsageError(f"curve JSON: {key}={obj[key]} disagrees with the grid")
    sampler, fam = None, obj.get("family")
    if fam:
        params = dict(fam.get("params", {}))
        n = _n_value(params.pop("n", "inf"))
        try:
            family = get_family(fam["name"], **params)
        except (KeyError, TypeError) as e:
            raise UsageError(f"curve JSON family: {e}") from None
        sampler = lambda xs: family.coeffs(xs, n)
    try:
        return CoefficientCurve(grid, samples, derivs, fam, sampler)
    except ValueError as e:
        raise UsageError(f"curve JSON: {e}") from None


def curve_to_json(c: CoefficientCurve) -> dict:
    out = {"alpha": c.alpha, "beta": c.beta, "grid": c.grid.tolist(),
           "samples": [_pairs(row) for row in c.samples]}
    if c.derivs is not None:
        out["derivs"] = [[_pairs(row) for row in layer] for layer in c.derivs]
    if c.family:
        out["family"] = c.family
    return out


def rootcurve_to_json(rc: RootCurve) -> dict:
    return {"d": rc.d, "grid": rc.grid.tolist(), "lambda": [_pairs(r) for r in rc.lam],
            "match_quality": rc.match_quality.tolist(),
            "holder_margin": rc.holder_margin.tolist(),
            "residual_max": float(rc.residual.max()), "bisections": rc.bisections,
            "interpolated": rc.interpolated}


def rootcurve_to_csv(rc: RootCurve) -> str:
    head = ["x"] + [f"{p}{i + 1}" for i in range(rc.d) for p in ("re", "im")]
    lines = [",".join(head)]
    for x, row in zip(rc.grid, rc.lam):
        vals = [f"{x:.17g}"] + [f"{v:.17g}" for z in row for v in (z.real, z.imag)]
        lines.append(",".join(vals))
    return "\n".join(lines) + "\n"


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# ----------------------------------------------------------------- parsing

def _n_value(tok):
    if isinstance(tok, (int, float)):
        return tok
    t = str(tok).strip().lower()
    if t in ("inf", "infinity", "∞"):
        return INF
    try:
        v = float(t)
    except ValueError:
        raise UsageError(f"bad n value {tok!r}") from None
    if v <= 0:
        raise UsageError(f"n must be positive, got {tok!r}")
    return int(v) if v.is_integer() else v


def _float_list(s: str, what: str) -> list[float]:
    try:
        return [float(t) for t in s.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"bad {what} list {s!r}") from None


def _params(items) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"--param expects k=v, got {item!r}")
        k, v = item.split("=", 1)
        try:
            out[k.strip()] = json.loads(v)
        except json.JSONDecodeError:
            out[k.strip()] = v
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--d", type=int)
    common.add_argument("--q", default="1", help="comma-separated exponents")
    common.add_argument("--n", help="comma-separated n values ('inf' allowed)")
    common.add_argument("--grid", type=int, default=10_000, help="number of grid points")
    common.add_argument("--family", help=f"builtin family: {', '.join(sorted(BUILTINS))}")
    common.add_argument("--param", action="append", metavar="K=V",
                        help="family parameter (JSON value), repeatable")
    common.add_argument("--tol", type=float, default=1e-12, help="root solver tolerance")
    common.add_argument("--slack", type=float, default=1e-9, help="assignment slack")
    common.add_argument("--out", type=Path, metavar="DIR")
    common.add_argument("--emit", default="csv,json", help="subset of csv,json,svg")

    ap = argparse.ArgumentParser(prog="rootlab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("roots", parents=[common], help="roots of a monic polynomial")
    p.add_argument("--poly", type=Path, required=True)
    p = sub.add_parser("dist", parents=[common], help="distance between unordered tuples")
    p.add_argument("--a", type=Path, required=True)
    p.add_argument("--b", type=Path, required=True)
    p = sub.add_parser("embed", parents=[common], help="Almgren embedding of a tuple")
    p.add_argument("--tuple", type=Path, required=True)
    for name, text in (("track", "track roots along a coefficient curve"),
                       ("norms", "Sobolev and metric norms of the tracked roots")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--curve", type=Path)
        p.add_argument("--seed", help="JSON list of [re, im] seed values")
    p = sub.add_parser("experiment", parents=[common], help="run a named experiment")
    p.add_argument("name", help=", ".join(EXPERIMENTS))
    return ap


def make_config(ns: argparse.Namespace) -> RunConfig:
    emit = tuple(e.strip() for e in ns.emit.split(",") if e.strip())
    bad = [e for e in emit if e not in EMITS]
    if bad:
        raise UsageError(f"unknown --emit value(s) {bad}; choose from {', '.join(EMITS)}")
    if ns.grid < 3:
        raise UsageError("--grid must be at least 3")
    if ns.tol <= 0 or ns.slack < 0:
        raise UsageError("--tol must be positive and --slack non-negative")
    inputs = {k: getattr(ns, k).resolve() for k in ("poly", "a", "b", "tuple", "curve")
              if getattr(ns, k, None) is not None}
    seed = None
    if getattr(ns, "seed", None):
        try:
            seed = [_complex(v) for v in json.loads(ns.seed)]
        except json.JSONDecodeError:
            raise UsageError(f"--seed is not JSON: {ns.seed!r}") from None
    cfg = RunConfig(
        command=ns.command, inputs=inputs, experiment=getattr(ns, "name", None),
        family=ns.family, params=_params(ns.param), d=ns.d,
        q=_float_list(ns.q, "q"), n=None if ns.n is None else [_n_value(t) for t in ns.n.split(",") if t.strip()],
        grid=ns.grid, tol=ns.tol, slack=ns.slack,
        out=None if ns.out is None else ns.out.resolve(), emit=emit or ("csv",), seed=seed,
    )
    if cfg.command == "experiment" and cfg.experiment not in EXPERIMENTS:
        raise UsageError(f"unknown experiment {cfg.experiment!r}; valid names: "
                         f"{', '.join(EXPERIMENTS)}")
    if cfg.d is not None and cfg.d < 1:
        raise UsageError(f"--d must be >= 1, got {cfg.d}")
    if any(q < 1 for q in cfg.q):
        raise UsageError("--q values must be >= 1")
    return cfg


# ----------------------------------------------------------------- output

def _write(cfg: RunConfig, files: dict[str, str], primary: str) -> None:
    if cfg.out is None:
        sys.stdout.write(files[primary])
        return
    cfg.out.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        with open(cfg.out / name, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _family(cfg: RunConfig, default: str | None = None):
    name = cfg.family or default
    if name is None:
        raise UsageError("--family (or --curve) is required")
    if name not in BUILTINS:
        raise UsageError(f"unknown family {name!r}; known: {', '.join(sorted(BUILTINS))}")
    params = dict(cfg.params)
    factory = BUILTINS[name]
    accepted = inspect.signature(factory).parameters
    if cfg.d is not None and "d" in accepted:
        params.setdefault("d", cfg.d)
    unknown = [k for k in params if k not in accepted]
    if unknown:
        raise UsageError(f"family {name!r} does not take parameter(s) {unknown}")
    try:
        fam = factory(**params)
    except (TypeError, ValueError) as e:
        raise UsageError(f"family {name!r}: {e}") from None
    if cfg.d is not None and fam.d != cfg.d:
        raise UsageError(f"family {name!r} has degree {fam.d}, not --d {cfg.d}")
    return fam


def _curve(cfg: RunConfig) -> CoefficientCurve:
    if "curve" in cfg.inputs:
        return curve_from_json(_load_json(cfg.inputs["curve"]))
    fam = _family(cfg)
    n = cfg.n[0] if cfg.n else INF
    return fam.curve(n, cfg.grid)


# ----------------------------------------------------------------- commands

def cmd_roots(cfg: RunConfig) -> int:
    p = poly_from_json(_load_json(cfg.inputs["poly"]))
    rm = polycore.roots(p, cfg.tol)
    body = {"d": p.d, "roots": _pairs(rm.roots), "residual": rm.residual,
            "cauchy_bound": polycore.cauchy_bound(p)}
    _write(cfg, {"roots.json": _dumps(body)}, "roots.json")
    return 0


def cmd_dist(cfg: RunConfig) -> int:
    a = tuple_from_json(_load_json(cfg.inputs["a"]), cfg.tol)
    b = tuple_from_json(_load_json(cfg.inputs["b"]), cfg.tol)
    if a.d != b.d:
        raise UsageError(f"degree mismatch: {a.d} vs {b.d}")
    _write(cfg, {"dist.json": _dumps({"d": a.d, "dist": dist(a, b)})}, "dist.json")
    return 0


def cmd_embed(cfg: RunConfig) -> int:
    t = tuple_from_json(_load_json(cfg.inputs["tuple"]), cfg.tol)
    c = AlmgrenConfig(t.d)
    body = {"d": t.d, "h": c.h, "N": c.N, "embedding": almgren_embed(t, c).tolist()}
    _write(cfg, {"embed.json": _dumps(body)}, "embed.json")
    return 0


def cmd_track(cfg: RunConfig) -> int:
    curve = _curve(cfg)
    rc = track(curve, cfg.tol, seed=cfg.seed)
    files = {}
    if "json" in cfg.emit:
        files["track.json"] = _dumps(rootcurve_to_json(rc))
    if "csv" in cfg.emit or not files:
        files["track.csv"] = rootcurve_to_csv(rc)
    _write(cfg, files, "track.csv" if "csv" in cfg.emit else "track.json")
    return 0


def cmd_norms(cfg: RunConfig) -> int:
    curve = _curve(cfg)
    rc = track(curve, cfg.tol, seed=cfg.seed)
    d = rc.d
    dl = sobolev.fd_derivative(rc)
    speed = sobolev.metric_speed(rc)
    H, H1 = holder_constants(curve)
    body = {"d": d, "grid": {"size": int(rc.grid.size), "alpha": curve.alpha,
                             "beta": curve.beta},
            "length": sobolev.length(rc), "holder": {"H": H, "H1": H1},
            "metric_speed_max": float(speed.values.max()), "q": {}}
    for q in cfg.q:
        body["q"][f"{q:g}"] = {"deriv_lq": sobolev.lq_norm(dl, q),
                               "energy": sobolev.q_energy(rc, q)}
    if d > 1:
        p = d / (d - 1)
        body["weak_lp_deriv"] = {"p": p, "value": max(
            sobolev.weak_lp((rc.grid, dl.values[:, i]), p) for i in range(d))}
    if curve.deriv_order >= d - 1:
        body["c_d-1_1"] = sobolev.ck_gamma_norm(curve, d - 1, 1.0).tolist()
    _write(cfg, {"norms.json": _dumps(body)}, "norms.json")
    return 0


def cmd_experiment(cfg: RunConfig) -> int:
    name = cfg.experiment
    n_list = cfg.n or [1, 2, 4, 8, 16, 32, 64, 128, INF]
    try:
        if name == "weaknorm":
            d = cfg.d if cfg.d is not None else int(cfg.params.get("d", 2))
            if d < 2:
                raise UsageError("weaknorm needs --d >= 2")
            rep = ex.run_weaknorm_example(d, cfg.params.get("p"),
                                          [n for n in n_list if not math.isinf(n)],
                                          max(cfg.grid, 3))
        else:
            fam = _family(cfg, DEFAULT_FAMILY[name])
            ex.check_q(fam.d, cfg.q)
            if name == "convergence":
                rep = ex.run_convergence(fam, cfg.q, n_list, cfg.grid, cfg.tol, cfg.slack)
            elif name == "parameterized":
                rep = ex.run_parameterized_convergence(fam, cfg.q, n_list, cfg.grid, cfg.tol)
            elif name == "radical":
                rep = ex.run_radical_convergence(fam.d, fam, cfg.q, n_list, cfg.grid, cfg.slack)
            elif name == "bound-check":
                rep = ex.run_bound_check(fam, cfg.q, n_list, cfg.grid, cfg.tol)
            else:
                rep = ex.run_almgren_equivalence(fam, cfg.q[0], n_list, cfg.grid, cfg.tol,
                                                 slack=cfg.slack)
    except ValueError as e:
        raise UsageError(str(e)) from None
    base = name.replace("-", "_")
    files = {}
    if "csv" in cfg.emit:
        files[f"{base}.csv"] = rep.to_csv()
    if "json" in cfg.emit:
        files[f"{base}.json"] = rep.to_json()
    if "svg" in cfg.emit:
        files[f"{base}.svg"] = rep.to_svg()
    primary = next(f for f in (f"{base}.csv", f"{base}.json", f"{base}.svg") if f in files)
    _write(cfg, files, primary)
    return 0


COMMANDS = {"roots": cmd_roots, "dist": cmd_dist, "embed": cmd_embed, "track": cmd_track,
            "norms": cmd_norms, "experiment": cmd_experiment}


def main(argv=None) -> int:
    ap = build_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        cfg = make_config(ns)
        if cfg.command in ("track", "norms") and "curve" not in cfg.inputs and not cfg.family:
            raise UsageError("give --curve FILE or --family NAME")
        return COMMANDS[cfg.command](cfg)
    except UsageError as e:
        print(f"rootlab: error: {e}", file=sys.stderr)
        return 2
    except (NonConvergence, RefinementLimit) as e:
        print(f"rootlab: numerical failure: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
