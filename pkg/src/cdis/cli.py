"""Command-line entry point: ``cdis <command> ...``.

Exit codes: 0 success, 2 usage, 3 data or parse error, 4 algorithmic
conflict, 5 resource guard.  Vertex indices on the command line are 0-based;
target collections are written ``"0|1,2"`` (settings separated by ``|``, the
leading observational setting implicit, ``-`` for an empty target).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .ci import Dataset, OracleCi
from .discovery import cdis, cdis_from_data
from .equivalence import class_atlas, markov_equivalent
from .errors import CdisError, DataError, InvalidArgument
from .io import (graph_from_json, load_json, mixed_from_json, mixed_to_dot, mixed_to_json,
                 read_graph, twin_to_dot, write_atomic)
from .mag import mag_of_twin, twin_mag_general
from .metrics import compare, ground_truth_pag
from .simulate import ExperimentConfig, simulate_dataset
from .twin import TargetCollection, build_twin

log = logging.getLogger("cdis")


# ---------------------------------------------------------------------------
# helpers


def _file_digest(path: str | os.PathLike) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _provenance(command: str, seed, payload: dict) -> dict:
    canon = json.dumps({"command": command, **payload}, sort_keys=True, separators=(",", ":"))
    return {"tool": "cdis", "version": __version__, "command": command, "seed": seed,
            "config_hash": hashlib.sha256(canon.encode()).hexdigest()[:16]}


def _emit(args, text: str) -> None:
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        write_atomic(args.out, text)


def _json_text(prov: dict, body: dict) -> str:
    return json.dumps({"provenance": prov, **body}, indent=2, sort_keys=True) + "\n"


def _dot_comment(prov: dict) -> str:
    return " ".join(f"{k}={prov[k]}" for k in sorted(prov))


def _parse_target(text: str | None) -> frozenset[int]:
    if text is None or text.strip() in ("", "-"):
        return frozenset()
    try:
        return frozenset(int(x) for x in text.split(","))
    except ValueError as exc:
        raise InvalidArgument(f"bad target {text!r}; expected comma-separated indices") from exc


def _model_from_file(path: str) -> tuple:
    """A model file is graph JSON with an optional ``targets`` string."""
    obj = load_json(path)
    g = graph_from_json(obj)
    targets = TargetCollection.parse(obj.get("targets", "")) if isinstance(obj, dict) else TargetCollection.of()
    return g, targets


# ---------------------------------------------------------------------------
# commands


def cmd_twin(args) -> int:
    g = read_graph(args.graph)
    target = _parse_target(args.target)
    tw = build_twin(g, target)
    prov = _provenance("twin", None, {"graph": _file_digest(args.graph), "target": sorted(target)})
    if (args.format or "dot") == "dot":
        _emit(args, twin_to_dot(tw, comment=_dot_comment(prov)))
    else:
        body = {
            "target": sorted(target),
            "affected": sorted(tw.affected),
            "vertices": [{"index": v, "name": tw.graph.names[v], "kind": tw.graph.kinds[v].value}
                         for v in range(tw.graph.n)],
            "edges": [list(e) for e in tw.graph.sorted_edges()],
        }
        _emit(args, _json_text(prov, body))
    return 0


def cmd_mag(args) -> int:
    g = read_graph(args.graph)
    target = _parse_target(args.target)
    prov = _provenance("mag", None, {"graph": _file_digest(args.graph), "target": sorted(target),
                                     "method": args.method})
    specific = mag_of_twin(g, target) if args.method in ("specific", "both") else None
    general = twin_mag_general(g, target) if args.method in ("general", "both") else None
    m = specific if specific is not None else general
    status = 0
    body = {"mag": mixed_to_json(m)}
    if args.method == "both":
        agree = specific == general
        body["agreement"] = agree
        if agree:
            print("methods agree", file=sys.stderr)
        else:
            body["general"] = mixed_to_json(general)
            a, b = set(specific.edges()), set(general.edges())
            print("methods disagree", file=sys.stderr)
            for e in sorted(a - b):
                print(f"  specific only: {e[0]} {e[1]} {e[2].value} {e[3].value}", file=sys.stderr)
            for e in sorted(b - a):
                print(f"  general only:  {e[0]} {e[1]} {e[2].value} {e[3].value}", file=sys.stderr)
            status = 4
    if (args.format or "json") == "dot":
        _emit(args, mixed_to_dot(m, comment=_dot_comment(prov)))
    else:
        _emit(args, _json_text(prov, body))
    return status


def cmd_discover(args) -> int:
    if args.manifest is None and args.oracle is None:
        raise _Usage("discover needs a dataset manifest or --oracle GRAPH")
    payload = {"alpha": args.alpha}
    upstream: dict = {}
    if args.oracle is not None:
        g = read_graph(args.oracle)
        if args.targets is not None:
            targets = TargetCollection.parse(args.targets)
        elif args.manifest is not None:
            targets = _manifest_targets(args.manifest)
        else:
            raise _Usage("an oracle run needs --targets or a manifest listing every target")
        payload.update(oracle=_file_digest(args.oracle), targets=targets.format())
        result = cdis(OracleCi(g, targets), strict=True)
    else:
        if not Path(args.manifest).exists():
            raise _Usage(f"manifest {args.manifest} not found")
        ds = Dataset.from_manifest(args.manifest)
        manifest = load_json(args.manifest)
        payload.update(manifest=_file_digest(args.manifest),
                       data=[_file_digest(Path(args.manifest).parent / e["path"]) for e in manifest["settings"]])
        result = cdis_from_data(ds, args.alpha)
        upstream = manifest.get("provenance", {})
    seed = args.seed if args.seed is not None else upstream.get("seed")
    prov = _provenance("discover", seed, payload)
    if "config_hash" in upstream:
        prov["dataset_config_hash"] = upstream["config_hash"]
    if args.trace:
        write_atomic(args.trace, result.pag0.trace_jsonl())
    if args.dot:
        write_atomic(args.dot, mixed_to_dot(result.pag0, "pag0", comment=_dot_comment(prov)))
    if (args.format or "json") == "dot":
        _emit(args, mixed_to_dot(result.pag0, "pag0", comment=_dot_comment(prov)))
    else:
        _emit(args, _json_text(prov, result.to_json()))
    return 0


def _manifest_targets(path: str) -> TargetCollection:
    obj = load_json(path)
    entries = sorted(obj.get("settings", []), key=lambda e: int(e["k"]))
    if any("target" not in e for e in entries):
        raise _Usage("manifest does not list every target; pass --targets")
    return TargetCollection(tuple(frozenset(e["target"]) for e in entries))


def cmd_simulate(args) -> int:
    if args.out in (None, "-"):
        raise _Usage("simulate needs --out DIR")
    cfg_obj = load_json(args.config)
    if args.seed is not None:
        cfg_obj["seed"] = args.seed
    if args.alpha is not None:
        cfg_obj["alpha"] = args.alpha
    cfg = ExperimentConfig.from_json(cfg_obj)
    scm, ds = simulate_dataset(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    # write data files atomically, then the manifest that points at them
    tmp = out / ".staging"
    ds.to_csv(tmp)
    for k in range(ds.n_settings):
        os.replace(tmp / f"setting_{k}.csv", out / f"setting_{k}.csv")
    manifest = json.loads((tmp / "manifest.json").read_text())
    (tmp / "manifest.json").unlink()
    tmp.rmdir()
    prov = _provenance("simulate", cfg.seed, {"config": cfg.to_json()})
    prov["config_hash"] = cfg.config_hash()
    manifest["provenance"] = prov
    write_atomic(out / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    truth = {**scm.dag.to_json(), "targets": scm.targets().format()}
    write_atomic(out / "truth.json", json.dumps(truth, indent=2, sort_keys=True) + "\n")
    write_atomic(out / "scm.json", _json_text(prov, scm.to_json()))
    write_atomic(out / "config.json", cfg.dumps())
    print(f"wrote {ds.n_settings} settings to {out}", file=sys.stderr)
    return 0


def _pag_from_file(path: str):
    obj = load_json(path)
    if isinstance(obj, dict) and "pag0" in obj:
        return mixed_from_json(obj["pag0"]), obj.get("provenance", {})
    if isinstance(obj, dict) and "vertices" in obj:
        return mixed_from_json(obj), obj.get("provenance", {})
    g, targets = _model_from_file(path)
    return ground_truth_pag(g, targets).snapshot(), {}


def cmd_eval(args) -> int:
    est, prov_est = _pag_from_file(args.result)
    truth, _ = _pag_from_file(args.truth)
    if est.n != truth.n:
        raise InvalidArgument(f"result has {est.n} variables, truth has {truth.n}")
    report = compare(est, truth)
    seed = args.seed if args.seed is not None else prov_est.get("seed")
    prov = _provenance("eval", seed, {"result": _file_digest(args.result), "truth": _file_digest(args.truth)})
    row = {"config_hash": prov_est.get("dataset_config_hash", prov_est.get("config_hash", prov["config_hash"])),
           "seed": seed, **report.to_row()}
    buf = io.StringIO()
    buf.write(f"# {_dot_comment(prov)}\n")
    w = csv.DictWriter(buf, fieldnames=list(row), lineterminator="\n")
    w.writeheader()
    w.writerow(row)
    _emit(args, buf.getvalue())
    return 0


def cmd_equiv(args) -> int:
    g1, g2 = read_graph(args.g1), read_graph(args.g2)
    t1, t2 = TargetCollection.parse(args.t1), TargetCollection.parse(args.t2)
    verdict = markov_equivalent(g1, t1, g2, t2)
    prov = _provenance("equiv", None, {"g1": _file_digest(args.g1), "g2": _file_digest(args.g2),
                                       "t1": t1.format(), "t2": t2.format()})
    if args.format == "json":
        _emit(args, _json_text(prov, {"equivalent": verdict}))
    else:
        _emit(args, ("equivalent" if verdict else "not equivalent") + "\n")
    return 0


def cmd_enumerate(args) -> int:
    rows = class_atlas(args.d, args.t_max, args.k_max, jobs=args.jobs)
    prov = _provenance("enumerate", None, {"d": args.d, "t_max": args.t_max, "k_max": args.k_max})
    buf = io.StringIO()
    buf.write(f"# {_dot_comment(prov)}\n")
    cols = ["model_id", "targets", "class_id", "class_size", "identifiable_arrow_count"]
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    _emit(args, buf.getvalue())
    return 0


# ---------------------------------------------------------------------------
# parser


class _Usage(CdisError):
    exit_code = 2


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="seed recorded in (or driving) the run")
    common.add_argument("--alpha", type=float, default=None, help="significance level for data tests")
    common.add_argument("--jobs", type=int, default=1, help="worker processes where supported")
    common.add_argument("--out", default=None, help="output file or directory ('-' for stdout)")
    common.add_argument("--format", choices=("json", "dot", "csv"), default=None)

    p = argparse.ArgumentParser(prog="cdis", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"cdis {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("twin", parents=[common], help="build an interventional twin graph")
    s.add_argument("graph")
    s.add_argument("--target", default="", help="comma-separated target vertices")
    s.set_defaults(func=cmd_twin)

    s = sub.add_parser("mag", parents=[common], help="MAG of a twin graph")
    s.add_argument("graph")
    s.add_argument("--target", default="")
    s.add_argument("--method", choices=("general", "specific", "both"), default="specific")
    s.set_defaults(func=cmd_mag)

    s = sub.add_parser("discover", parents=[common], help="run discovery on data or an oracle")
    s.add_argument("manifest", nargs="?", default=None)
    s.add_argument("--oracle", default=None, help="graph JSON answering queries exactly")
    s.add_argument("--targets", default=None, help='target collection for --oracle, e.g. "0|1"')
    s.add_argument("--dot", default=None, help="also write the observational PAG as DOT")
    s.add_argument("--trace", default=None, help="write the orientation trace as JSONL")
    s.set_defaults(func=cmd_discover)

    s = sub.add_parser("simulate", parents=[common], help="generate a synthetic dataset")
    s.add_argument("config")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("eval", parents=[common], help="score a result against the truth")
    s.add_argument("result")
    s.add_argument("truth")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("equiv", parents=[common], help="decide Markov equivalence")
    s.add_argument("g1")
    s.add_argument("t1")
    s.add_argument("g2")
    s.add_argument("t2")
    s.set_defaults(func=cmd_equiv)

    s = sub.add_parser("enumerate", parents=[common], help="equivalence-class atlas of small models")
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--t-max", type=int, default=1)
    s.add_argument("--k-max", type=int, default=1)
    s.set_defaults(func=cmd_enumerate)
    return p


def _setup_logging() -> None:
    level = os.environ.get("CDIS_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CdisError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"error: {exc.filename}: file not found", file=sys.stderr)
        return 2
    except (KeyError, TypeError, ValueError) as exc:
        print(f"error: bad input: {exc}", file=sys.stderr)
        return DataError.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
