"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 numerical/runtime error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import algebra, verify
from .errors import ConfigError, EPHoloError
from .families import BUILTINS, family_from_dict, load_family
from .locator import Region, locate, write_grid_csv
from .tracker import ParameterLoop, sheet_surface, track

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3

CONFIG_KEYS = {
    "family", "region", "grid", "loop", "cycles", "track_vectors",
    "out", "format", "only", "axis", "no_precheck",
}
DEFAULT_GRID = {"locate": (200, 120), "surface": (175, 60)}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="epholo", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON run configuration; flags override it")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--format", choices=["json", "csv"])
        return p

    p = common(sub.add_parser("locate", help="find exceptional points in a region"))
    p.add_argument("--family", help=f"builtin ({', '.join(BUILTINS)}) or descriptor file")
    p.add_argument("--region", help="alpha_min,alpha_max,beta_min,beta_max")
    p.add_argument("--grid", help="NA,NB (default 200,120)")

    p = common(sub.add_parser("track", help="continue eigenvalues around a loop"))
    p.add_argument("--family")
    p.add_argument("--loop", help="loop descriptor file")
    p.add_argument("--cycles", type=int)
    p.add_argument("--track-vectors", action="store_true", default=None)
    p.add_argument("--no-precheck", action="store_true", default=None, help="skip the EP proximity scan")

    p = common(sub.add_parser("surface", help="export continued eigenvalue sheets as CSV"))
    p.add_argument("--family")
    p.add_argument("--region")
    p.add_argument("--grid", help="NA,NB (default 175,60)")
    p.add_argument("--axis", choices=["alpha", "beta"])

    p = common(sub.add_parser("algebra", help="print holonomy orderings tables"))

    p = common(sub.add_parser("verify", help="run the acceptance checks"))
    p.add_argument("--only", choices=sorted(verify.SUITES))
    p.add_argument("--family", help="validate this family descriptor first")
    return parser


def _normalize_argv(argv):
    # "--region -1,1,-1,1" would be parsed as an option; glue the value on
    out = []
    it = iter(argv)
    for tok in it:
        if tok in ("--region", "--grid"):
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def _floats(text, key, count):
    try:
        vals = [float(x) for x in (text.split(",") if isinstance(text, str) else text)]
    except (TypeError, ValueError):
        raise ConfigError(f"expected {count} comma-separated numbers, got {text!r}", key) from None
    if len(vals) != count:
        raise ConfigError(f"expected {count} values, got {len(vals)}", key)
    return vals


def _settings(args) -> dict:
    """Merge the config file (if any) with explicit flags; flags win."""
    cfg = {}
    if getattr(args, "config", None):
        try:
            cfg = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise ConfigError(str(exc), "config") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON ({exc})", "config") from None
        if not isinstance(cfg, dict):
            raise ConfigError("top level must be an object", "config")
        unknown = set(cfg) - CONFIG_KEYS
        if unknown:
            raise ConfigError("unknown configuration key", sorted(unknown)[0])
    for key in CONFIG_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def _family(cfg, default="paper3x3"):
    spec = cfg.get("family", default)
    if isinstance(spec, dict):
        return family_from_dict(spec)
    if not isinstance(spec, str):
        raise ConfigError("expected a builtin name, a path or a descriptor object", "family")
    return load_family(spec)


def _region(cfg, command):
    if "region" not in cfg:
        raise ConfigError("missing (alpha_min,alpha_max,beta_min,beta_max)", "region")
    a0, a1, b0, b1 = _floats(cfg["region"], "region", 4)
    na, nb = _floats(cfg.get("grid", DEFAULT_GRID[command]), "grid", 2)
    if na != int(na) or nb != int(nb):
        raise ConfigError("grid sizes must be integers", "grid")
    try:
        return Region(a0, a1, b0, b1, int(na), int(nb))
    except ValueError as exc:
        raise ConfigError(str(exc), "region") from None


def _loop(cfg):
    spec = cfg.get("loop")
    if spec is None:
        raise ConfigError("missing", "loop")
    if isinstance(spec, str):
        try:
            spec = json.loads(Path(spec).read_text())
        except OSError as exc:
            raise ConfigError(str(exc), "loop") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON ({exc})", "loop") from None
    loop = ParameterLoop.from_dict(spec)
    if "cycles" in cfg:
        if not isinstance(cfg["cycles"], int) or cfg["cycles"] < 1:
            raise ConfigError("expected a positive integer", "cycles")
        loop = loop.replace(cycles=cfg["cycles"])
    return loop


def _emit(text, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_locate(cfg) -> int:
    f = _family(cfg)
    region = _region(cfg, "locate")
    records = locate(f, region)
    if cfg.get("format") == "csv":
        if not cfg.get("out"):
            raise ConfigError("csv grid output needs --out", "out")
        write_grid_csv(cfg["out"], f, region)
    else:
        doc = {"family": f.kind, "region": [region.alpha_min, region.alpha_max, region.beta_min, region.beta_max],
               "eps": [r.to_dict() for r in records]}
        if cfg.get("out"):
            _emit(json.dumps(doc, indent=2) + "\n", cfg["out"])
    for r in records:
        a, b = r.location
        print(f"EP at ({a:.6f}, {b:.6f})  |D|={r.residual:.2e}  pair={r.coalescing_pair}  gap={r.min_gap:.2e}")
    if not cfg.get("out") and cfg.get("format") != "csv":
        print(json.dumps([r.to_dict() for r in records]))
    return EXIT_OK


def cmd_track(cfg) -> int:
    f = _family(cfg)
    loop = _loop(cfg)
    res = track(
        f,
        loop,
        track_vectors=bool(cfg.get("track_vectors", False)),
        precheck=not cfg.get("no_precheck", False),
    )
    if cfg.get("out"):
        _emit(res.to_json() + "\n", cfg["out"])
    print(res.summary())
    return EXIT_OK


def cmd_surface(cfg) -> int:
    f = _family(cfg)
    region = _region(cfg, "surface")
    surf = sheet_surface(f, region, cfg.get("axis", "alpha"))
    if cfg.get("out"):
        rows = surf.write_csv(cfg["out"])
    else:
        rows = surf.write_csv(sys.stdout)
    flagged = [int(i) for i in surf.flags.nonzero()[0]]
    msg = f"{rows} rows; flagged scanlines: {flagged if flagged else 'none'}"
    print(msg, file=sys.stderr if not cfg.get("out") else sys.stdout)
    return EXIT_OK


def cmd_algebra(cfg) -> int:
    g3 = algebra.paper_generators(3)
    tables = {
        "two EPs (M12, M23)": [g3["M12"], g3["M23"]],
        "three EPs (M12, M23, M13)": [g3["M12"], g3["M23"], g3["M13"]],
        "four modes chained (M12, M23, M34)": algebra.chained_generators(4),
        "single EP, signed (M12)": [algebra.generator(2, 0, 1, signed=True)],
    }
    names = {
        "two EPs (M12, M23)": ["M12", "M23"],
        "three EPs (M12, M23, M13)": ["M12", "M23", "M13"],
        "four modes chained (M12, M23, M34)": ["M12", "M23", "M34"],
        "single EP, signed (M12)": ["M12"],
    }
    doc = {}
    lines = []
    for title, gens in tables.items():
        rows = algebra.enumerate_orderings(gens)
        doc[title] = [
            {"ordering": [names[title][k] for k in idx], "product": p.to_dict(), "order": o,
             "spectrum_turns": [str(t) for t in algebra.spectrum_angles(p)]}
            for idx, p, o in rows
        ]
        lines.append(title)
        for idx, p, o in rows:
            label = " ".join(names[title][k] for k in idx)
            turns = ", ".join(str(t) for t in algebra.spectrum_angles(p))
            lines.append(f"  {label:<14} {algebra.render(p):<22} order {o}  spectrum (turns) {turns}")
    if cfg.get("format") == "json":
        _emit(json.dumps(doc, indent=2) + "\n", cfg.get("out"))
    else:
        _emit("\n".join(lines) + "\n", cfg.get("out"))
    return EXIT_OK


def cmd_verify(cfg) -> int:
    if "family" in cfg:
        _family(cfg)
    results = verify.run(cfg.get("only"))
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} checks passed")
    return EXIT_OK if passed == len(results) else EXIT_VERIFY


COMMANDS = {
    "locate": cmd_locate,
    "track": cmd_track,
    "surface": cmd_surface,
    "algebra": cmd_algebra,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    argv = _normalize_argv(sys.argv[1:] if argv is None else list(argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = _settings(args)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EPHoloError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
