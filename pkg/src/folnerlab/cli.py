"""Command-line front end.

Every subcommand is translated into a JSON configuration, validated against
the shipped schema and executed by :func:`run`.  ``folnerlab run CONFIG``
executes a configuration file directly.

Exit codes: 0 success, 2 invalid input or schema violation, 3 resource cap
exceeded, 4 verification failure.
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from typing import Optional


from . import groups
from .ergodic import (
    HullPoint,
    banach_density,
    convergence_experiment,
    letter_indicator,
    pattern_frequency,
    test_axioms,
    weight_count,
    weight_wf,
)
from .groups import (
    FolnerSequence,
    ResourceCapError,
    folner_defect,
    left_boundary,
    parse_group,
    right_boundary,
    word_ball,
)
from .heisenberg import mc_ball_volume
from .io import SchemaError, build_report, report_csv, report_json, validate
from .patterns import Coloring, Patch, build_coloring
from .repetitivity import repetitivity_portion
from .spectral import HoppingOperator, free_ids_z, ids_convergence
from .tiling import TilingError, quasi_tile, select_prototiles, verify_tiling

EXIT_OK, EXIT_SCHEMA, EXIT_CAP, EXIT_VERIFY = 0, 2, 3, 4

STOCHASTIC = {"heis-volume", "axioms"}
PCG64_NAME = "PCG64 (numpy.random.default_rng(seed))"


class VerificationFailure(RuntimeError):
    def __init__(self, message: str, report: Optional[dict] = None):
        super().__init__(message)
        self.report = report


# -- builders from config -----------------------------------------------------------------

def _group(cfg) -> groups.GroupModel:
    return parse_group(cfg.get("group", "z1"))


def _coloring(cfg) -> Coloring:
    spec = dict(cfg.get("coloring") or {"kind": "constant", "length": 1})
    kind = spec.pop("kind")
    return build_coloring(kind, group=_group(cfg), **spec)


def _folner(cfg) -> FolnerSequence:
    spec = cfg.get("folner") or {"kind": "balls"}
    if spec["kind"] == "intervals":
        if _group(cfg) != groups.Z1:
            raise ValueError("interval Følner sequences live on Z")
        return FolnerSequence.intervals()
    return FolnerSequence.balls(_group(cfg), spec.get("radii", "unit"))


def _params(cfg) -> dict:
    return cfg.get("params", {})


def _need(p, key):
    if key not in p:
        raise ValueError(f"missing parameter {key!r}")
    return p[key]


# -- commands -------------------------------------------------------------------------------

def _cmd_ball(cfg):
    G, p = _group(cfg), _params(cfg)
    radii = p.get("radii") or [_need(p, "radius")]
    unit = word_ball(G, 1)
    rows = []
    for r in radii:
        B = word_ball(G, r)
        rows.append({"radius": r, "size": len(B),
                     "defect_b1": folner_defect(unit, B) if len(B) else None})
    return ["radius", "size", "defect_b1"], rows, {"group": G.name}, max(radii)


def _cmd_boundary(cfg):
    G, p = _group(cfg), _params(cfg)
    K = word_ball(G, _need(p, "k_radius"))
    T = word_ball(G, _need(p, "t_radius"))
    side = p.get("side", "left")
    bd = left_boundary(K, T) if side == "left" else right_boundary(K, T)
    rows = [{"element": list(g)} for g in bd.sorted()]
    summary = {"side": side, "size": len(bd), "size_T": len(T), "defect": len(bd) / len(T)}
    return ["element"], rows, summary, p["t_radius"]


def _cmd_defect(cfg):
    G, p = _group(cfg), _params(cfg)
    K = word_ball(G, p.get("k_radius", 1))
    rows = []
    for r in _need(p, "radii"):
        T = word_ball(G, r)
        rows.append({"radius": r, "size": len(T),
                     "left": folner_defect(K, T, "left"), "right": folner_defect(K, T, "right")})
    return ["radius", "size", "left", "right"], rows, {"k_radius": p.get("k_radius", 1)}, max(p["radii"])


def _cmd_tile(cfg):
    G, p = _group(cfg), _params(cfg)
    eps = _need(p, "epsilon")
    F = _folner(cfg)
    P = select_prototiles(F, eps, p.get("n", 1), invariance=p.get("invariance"),
                          indices=p.get("tile_indices"))
    A = word_ball(G, _need(p, "region_radius"))
    with warnings.catch_warnings():
        # the measured defects go into the report instead
        warnings.simplefilter("ignore", RuntimeWarning)
        t = quasi_tile(A, P, check=False)
    rep = verify_tiling(t, eps)
    rows = []
    for i, (S, cs) in enumerate(zip(t.tiles, t.centers)):
        for k, c in enumerate(cs):
            rows.append({"type": i + 1, "center": list(c), "tile_size": len(S),
                         "trimmed_size": len(t.trimmed[i][k])})
    summary = {"prototiles": P.to_json(), "report": rep.to_json(),
               "preconditions": t.preconditions, "tiling": t.to_json()}
    verification = {"passed": rep.ok, "failed_clauses": rep.failures()}
    return ["type", "center", "tile_size", "trimmed_size"], rows, summary, p["region_radius"], verification


def _cmd_repetitivity(cfg):
    p = _params(cfg)
    c, F = _coloring(cfg), _folner(cfg)
    kw = {}
    if "threshold" in p:
        kw["threshold"] = p["threshold"]
    rep = repetitivity_portion(c, F, p.get("delta", 0.0), _need(p, "m_max"), **kw)
    ratios = [r for r in rep.ratios if r is not None]
    summary = {"portion": rep.portion, "tempered": rep.tempered, "threshold": rep.threshold,
               "delta": rep.delta, "window_size": rep.window_size, "folner": rep.folner,
               "ratio_trend": (ratios[-1] / ratios[0]) if len(ratios) > 1 else None}
    cols = ["m", "R", "size_m", "size_R", "ratio", "certified"]
    return cols, rep.rows(), summary, rep.window_radius


def _hull(c):
    return HullPoint.centered(c)


def _cmd_frequency(cfg):
    p = _params(cfg)
    c, F = _coloring(cfg), _folner(cfg)
    word = _need(p, "pattern")
    if c.group != groups.Z1:
        raise ValueError("word patterns are defined on Z")
    S = groups.Region.interval(0, len(word) - 1)
    E = Patch(S, {(i,): float(c.iota[ch]) for i, ch in enumerate(word)})
    rows = [{"m": m, "size": F.size(m), "frequency": pattern_frequency(c, E, F, m)} for m in _need(p, "m")]
    return ["m", "size", "frequency"], rows, {"pattern": word}, _hull(c).validity_radius()


def _cmd_density(cfg):
    p = _params(cfg)
    c, F = _coloring(cfg), _folner(cfg)
    x = _hull(c)
    rows = [{"m": r.m, "size": r.size, "upper": r.upper, "lower": r.lower, "gap": r.gap,
             "translates": r.translates} for r in banach_density(c, F, _need(p, "m"), x)]
    return ["m", "size", "upper", "lower", "gap", "translates"], rows, {}, x.validity_radius()


def _weight(cfg, c):
    p = _params(cfg)
    if p.get("weight", "count") == "count":
        return weight_count(c.sigma)
    return weight_wf(letter_indicator(c, _need(p, "letter")))


def _cmd_axioms(cfg):
    p = _params(cfg)
    c = _coloring(cfg)
    w = _weight(cfg, c)
    res = test_axioms(w, c, p.get("trials", 1000), cfg["seed"])
    rows = [r.to_json() for r in res]
    passed = all(r.passed for r in res)
    cols = ["axiom", "measured", "declared", "instances", "counterexamples", "passed", "note"]
    summary = {"weight": w.name, "rng_algorithm": PCG64_NAME}
    return cols, rows, summary, None, {"passed": passed}


def _cmd_converge(cfg):
    p = _params(cfg)
    c, F = _coloring(cfg), _folner(cfg)
    w = _weight(cfg, c)
    rep = convergence_experiment(w, c, F, _need(p, "m"))
    summary = {"I_w": rep.I_w, "error_bar": rep.error_bar, "cauchy": rep.cauchy, "weight": w.name}
    return ["m", "size", "sup", "inf", "spread", "translates"], rep.rows, summary, rep.certified_radius


def _cmd_ids(cfg):
    p = _params(cfg)
    op = p.get("operator", "adjacency")
    H = HoppingOperator.from_json(op if isinstance(op, dict) else {"kind": op})
    F = _folner(cfg)
    c = _coloring(cfg) if (cfg.get("coloring") or H.N > 0) else None
    if c is None and H.N > 0:
        raise ValueError("this operator reads colors; give a coloring")
    oracle = None
    if p.get("oracle", "none") == "free":
        if _group(cfg) != groups.Z1 or H.kind != "adjacency":
            raise ValueError("the free oracle is the Z adjacency IDS")
        oracle = free_ids_z
    rep = ids_convergence(H, c, F, _need(p, "m"), oracle, p.get("oracle"), cfg.get("threads", 1))
    cols = ["m", "size_F", "size_FR", "terminal", "sup_dist_prev"]
    if oracle is not None:
        cols.append("sup_dist_oracle")
    radius = _hull(c).validity_radius() if c is not None else None
    return cols, rep.rows, {"operator": H.to_json(), "oracle": p.get("oracle", "none")}, radius


def _cmd_heis(cfg):
    p = _params(cfg)
    est = mc_ball_volume(_need(p, "heis_radius"), p.get("samples", 10_000_000), cfg["seed"],
                         cfg.get("threads", 1))
    row = {"radius": est.radius, "samples": est.samples, "estimate": est.estimate,
           "stderr": est.stderr, "exact": est.exact, "rel_err": est.rel_err}
    return list(row), [row], {"rng_algorithm": est.algorithm}, None


COMMANDS = {
    "ball": _cmd_ball, "boundary": _cmd_boundary, "defect": _cmd_defect, "tile": _cmd_tile,
    "repetitivity": _cmd_repetitivity, "frequency": _cmd_frequency, "density": _cmd_density,
    "axioms": _cmd_axioms, "converge": _cmd_converge, "ids": _cmd_ids, "heis-volume": _cmd_heis,
}


def execute(config: dict) -> dict:
    """Validate and run a configuration, returning the report dict.

    Raises SchemaError, ValueError, ResourceCapError or VerificationFailure.
    """
    validate(config, "config")
    cmd = config["command"]
    if cmd in STOCHASTIC and "seed" not in config:
        raise SchemaError(f"'{cmd}' is stochastic and needs a seed")
    if "cap_elements" in config:
        groups.set_element_cap(config["cap_elements"])
    out = COMMANDS[cmd](config)
    cols, rows, summary, radius = out[:4]
    if config.get("coloring", {}).get("kind") == "random":
        summary.setdefault("rng_algorithm", PCG64_NAME)
    verification = out[4] if len(out) > 4 else None
    rep = build_report(cmd, config, cols, rows, summary, radius, verification)
    if verification is not None and not verification["passed"]:
        raise VerificationFailure(f"{cmd}: verification failed", rep)
    return rep


def _write(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", newline="") as fh:
        fh.write(text)


def run(config: dict, stdout: bool = True) -> int:
    """Execute a configuration and emit its outputs; returns the exit status."""
    cap = groups.get_element_cap()
    try:
        try:
            rep = execute(config)
            status = EXIT_OK
        except VerificationFailure as exc:
            rep, status = exc.report, EXIT_VERIFY
            print(f"error: {exc}", file=sys.stderr)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except ResourceCapError as exc:
        print(f"error: resource cap: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (TilingError,) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except (ValueError, KeyError, IndexError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    finally:
        groups.set_element_cap(cap)
    outs = config.get("outputs", {})
    # everything is computed and validated; only now touch the filesystem
    if "csv" in outs:
        _write(outs["csv"], report_csv(rep))
    if "json" in outs:
        _write(outs["json"], report_json(rep))
    if stdout and "json" not in outs and "csv" not in outs:
        sys.stdout.write(report_json(rep))
    return status


# -- argument parsing -------------------------------------------------------------------------

def _int_list(text: str) -> list:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _radii(text: str):
    return text if text in ("unit", "doubling") else _int_list(text)


def _add_global(p):
    g = p.add_argument_group("global")
    g.add_argument("--seed", type=int)
    g.add_argument("--threads", type=int)
    g.add_argument("--cap-elements", type=int, dest="cap_elements")
    g.add_argument("--config", help="JSON config file; command-line flags override its keys")
    g.add_argument("--out-csv", dest="out_csv", help="CSV report path ('-' for stdout)")
    g.add_argument("--out-json", dest="out_json", help="JSON report path ('-' for stdout)")


def _add_group(p):
    p.add_argument("--group", choices=["z1", "z2", "h3"])


def _add_coloring(p):
    g = p.add_argument_group("coloring")
    g.add_argument("--coloring", choices=["constant", "periodic", "fibonacci", "thue_morse", "random", "explicit"])
    g.add_argument("--length", type=int, help="Z window [0, length)")
    g.add_argument("--window-radius", type=int, dest="window_radius", help="ball window radius")
    g.add_argument("--word", help="periodic word")
    g.add_argument("--periods", type=_int_list)
    g.add_argument("--alphabet-size", type=int, dest="alphabet_size")
    g.add_argument("--coloring-seed", type=int, dest="coloring_seed")
    g.add_argument("--coloring-file", dest="coloring_file")
    g.add_argument("--iota", help='JSON map, e.g. {"a": 1, "b": 2}')


def _add_folner(p):
    g = p.add_argument_group("Følner sequence")
    g.add_argument("--folner", choices=["balls", "intervals"])
    g.add_argument("--radii", type=_radii, help="unit, doubling or a comma list")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="folnerlab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute a JSON configuration file")
    p.add_argument("config_file")
    _add_global(p)

    p = sub.add_parser("ball", help="word-ball sizes and B1-defects")
    _add_group(p); _add_global(p)
    p.add_argument("--radius", type=int)
    p.add_argument("--ball-radii", type=_int_list, dest="ball_radii")

    p = sub.add_parser("boundary", help="K-boundary of a ball")
    _add_group(p); _add_global(p)
    p.add_argument("--k-radius", type=int, dest="k_radius")
    p.add_argument("--t-radius", type=int, dest="t_radius")
    p.add_argument("--side", choices=["left", "right"])

    p = sub.add_parser("defect", help="Følner defects of balls")
    _add_group(p); _add_global(p)
    p.add_argument("--k-radius", type=int, dest="k_radius")
    p.add_argument("--ball-radii", type=_int_list, dest="ball_radii")

    p = sub.add_parser("tile", help="epsilon-quasi-tiling of a ball")
    _add_group(p); _add_global(p); _add_folner(p)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--region-radius", type=int, dest="region_radius")
    p.add_argument("--n", type=int)
    p.add_argument("--invariance", type=float)
    p.add_argument("--tile-indices", type=_int_list, dest="tile_indices")

    p = sub.add_parser("repetitivity", help="repetitivity index table and portion")
    _add_group(p); _add_global(p); _add_coloring(p); _add_folner(p)
    p.add_argument("--delta", type=float)
    p.add_argument("--m-max", type=int, dest="m_max")
    p.add_argument("--threshold", type=float)

    p = sub.add_parser("frequency", help="pattern frequency along a Følner sequence")
    _add_group(p); _add_global(p); _add_coloring(p); _add_folner(p)
    p.add_argument("--pattern")
    p.add_argument("--m", type=_int_list)

    p = sub.add_parser("density", help="upper and lower Banach density")
    _add_group(p); _add_global(p); _add_coloring(p); _add_folner(p)
    p.add_argument("--m", type=_int_list)

    p = sub.add_parser("axioms", help="randomised weight-function axiom battery")
    _add_group(p); _add_global(p); _add_coloring(p)
    p.add_argument("--weight", choices=["count", "letter"])
    p.add_argument("--letter")
    p.add_argument("--trials", type=int)

    p = sub.add_parser("converge", help="envelope convergence experiment")
    _add_group(p); _add_global(p); _add_coloring(p); _add_folner(p)
    p.add_argument("--weight", choices=["count", "letter"])
    p.add_argument("--letter")
    p.add_argument("--m", type=_int_list)

    p = sub.add_parser("ids", help="integrated density of states convergence")
    _add_group(p); _add_global(p); _add_coloring(p); _add_folner(p)
    p.add_argument("--operator", help="adjacency, potential, schrodinger, constant or a JSON file")
    p.add_argument("--m", type=_int_list)
    p.add_argument("--oracle", choices=["none", "free"])

    p = sub.add_parser("heis-volume", help="Monte-Carlo Heisenberg ball volume")
    _add_global(p)
    p.add_argument("--radius", type=float)
    p.add_argument("--samples", type=int)
    return ap


_PARAM_KEYS = ["k_radius", "t_radius", "side", "epsilon", "region_radius", "n", "invariance",
               "tile_indices", "delta", "m_max", "threshold", "pattern", "weight", "letter",
               "trials", "m", "oracle", "samples"]


def config_from_args(ns: argparse.Namespace) -> dict:
    """Merge a --config file (if any) with the explicit command-line flags."""
    cfg: dict = {}
    if getattr(ns, "config", None):
        with open(ns.config) as fh:
            cfg = json.load(fh)
    cmd = ns.command
    if cfg.get("command", cmd) != cmd:
        raise SchemaError(f"config is for {cfg['command']!r}, not {cmd!r}")
    cfg["command"] = cmd
    for key in ("seed", "threads", "cap_elements", "group"):
        v = getattr(ns, key, None)
        if v is not None:
            cfg[key] = v
    params = dict(cfg.get("params", {}))
    for key in _PARAM_KEYS:
        v = getattr(ns, key, None)
        if v is not None:
            params[key] = v
    if cmd in ("ball", "defect"):
        if getattr(ns, "ball_radii", None) is not None:
            params["radii"] = ns.ball_radii
    if cmd == "ball" and ns.radius is not None:
        params["radius"] = ns.radius
    if cmd == "heis-volume" and ns.radius is not None:
        params["heis_radius"] = ns.radius
    if cmd == "ids" and ns.operator is not None:
        op = ns.operator
        if op.endswith(".json"):
            with open(op) as fh:
                op = json.load(fh)
        params["operator"] = op
    if params:
        cfg["params"] = params
    # coloring
    if getattr(ns, "coloring", None) is not None:
        col = {"kind": ns.coloring}
        for src, dst in (("length", "length"), ("window_radius", "radius"), ("word", "word"),
                         ("periods", "periods"), ("alphabet_size", "alphabet_size"),
                         ("coloring_seed", "seed"), ("coloring_file", "path")):
            v = getattr(ns, src, None)
            if v is not None:
                col[dst] = v
        if ns.iota:
            col["iota"] = json.loads(ns.iota)
        cfg["coloring"] = col
    if getattr(ns, "folner", None) is not None or getattr(ns, "radii", None) is not None:
        fol = dict(cfg.get("folner", {"kind": "balls"}))
        if ns.folner is not None:
            fol["kind"] = ns.folner
        if ns.radii is not None:
            fol["radii"] = ns.radii
        cfg["folner"] = fol
    outs = dict(cfg.get("outputs", {}))
    if getattr(ns, "out_csv", None):
        outs["csv"] = ns.out_csv
    if getattr(ns, "out_json", None):
        outs["json"] = ns.out_json
    if outs:
        cfg["outputs"] = outs
    return cfg


def main(argv=None) -> int:
    ap = build_parser()
    ns = ap.parse_args(argv)
    try:
        if ns.command == "run":
            with open(ns.config_file) as fh:
                cfg = json.load(fh)
            for key in ("seed", "threads", "cap_elements"):
                v = getattr(ns, key, None)
                if v is not None:
                    cfg[key] = v
            outs = dict(cfg.get("outputs", {}))
            if ns.out_csv:
                outs["csv"] = ns.out_csv
            if ns.out_json:
                outs["json"] = ns.out_json
            if outs:
                cfg["outputs"] = outs
        else:
            cfg = config_from_args(ns)
    except (OSError, json.JSONDecodeError, SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
