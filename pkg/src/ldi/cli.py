"""Command line interface: impute, eval, and explain subcommands.

Exit codes: 0 success, 1 usage error, 2 data error, 3 backend exhaustion.
A TOML or JSON config file can supply any option; explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import sys

try:
    import tomllib
except ModuleNotFoundError:  # 3.10
    import tomli as tomllib

from .attributes import DependencyConfig, SamplingConfig
from .backend import BackendConfig
from .errors import BackendError, DataError
from .pipeline import (
    PipelineConfig,
    build_experiment_report,
    build_report,
    run_experiment,
    run_pipeline,
)
from .table import dump_table, load_table

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_BACKEND = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", help="input CSV path")
    p.add_argument("--target", help="attribute to impute")
    p.add_argument("--k", type=int, help="examples per prompt (default 3)")
    p.add_argument("--p", type=float, help="group-support threshold (default 0.9)")
    p.add_argument("--q", type=float, help="within-group frequency threshold (default 0.9)")
    p.add_argument("--m", type=int, help="groups to sample (default 10)")
    p.add_argument("--n", type=int, help="rows per sampled group (default 10)")
    p.add_argument("--attr-mode", choices=["dependent", "all"])
    p.add_argument("--tuple-mode", choices=["diverse", "random"])
    p.add_argument("--backend", choices=["mock", "remote"])
    p.add_argument("--model", help="remote model name")
    p.add_argument("--endpoint", help="remote chat-completion URL")
    p.add_argument("--api-key-env", help="env var holding the API key")
    p.add_argument("--seed", type=int, help="base seed (default 42)")
    p.add_argument("--concurrency", type=int, help="parallel cells (default 4)")
    p.add_argument("--report", help="write the JSON explanation report here")
    p.add_argument("--audit", help="write a JSON-lines completion audit log here")
    p.add_argument("--config", help="TOML or JSON file with the same keys")


def _build_parser() -> _Parser:
    parser = _Parser(prog="ldi", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_impute = sub.add_parser("impute", help="fill missing target cells in a CSV")
    _add_run_options(p_impute)
    p_impute.add_argument("--out", help="write the imputed CSV here")

    p_eval = sub.add_parser("eval", help="mask, impute, and score repeatedly")
    _add_run_options(p_eval)
    p_eval.add_argument("--mask-rate", type=float, help="fraction to mask (default 0.1)")
    p_eval.add_argument("--repeats", type=int, help="seeded repeats (default 5)")

    p_explain = sub.add_parser("explain", help="pretty-print one imputation record")
    p_explain.add_argument("--report", required=True)
    p_explain.add_argument("--row", type=int, required=True)
    return parser


_DEFAULTS = {
    "k": 3,
    "p": 0.9,
    "q": 0.9,
    "m": 10,
    "n": 10,
    "attr_mode": "dependent",
    "tuple_mode": "diverse",
    "backend": "mock",
    "model": "",
    "endpoint": "",
    "api_key_env": "LDI_API_KEY",
    "seed": 42,
    "concurrency": 4,
    "mask_rate": 0.1,
    "repeats": 5,
}


def _load_config_file(path: str) -> dict:
    with open(path, "rb") as fh:
        data = fh.read()
    if path.endswith(".json"):
        return json.loads(data.decode("utf-8"))
    return tomllib.loads(data.decode("utf-8"))


def _effective(args: argparse.Namespace) -> dict:
    """Built-in defaults < config file < explicit CLI flags."""
    merged = dict(_DEFAULTS)
    if getattr(args, "config", None):
        file_conf = _load_config_file(args.config)
        unknown = set(file_conf) - set(_DEFAULTS) - {"input", "target", "out", "report", "audit"}
        if unknown:
            raise DataError(f"unknown config keys: {sorted(unknown)}")
        merged.update(file_conf)
    for key in list(_DEFAULTS) + ["input", "target", "out", "report", "audit"]:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    return merged


def _pipeline_config(opts: dict) -> PipelineConfig:
    if not opts.get("target"):
        raise DataError("--target is required")
    tuple_mode = {"diverse": "diverse-similarity", "random": "random"}[
        opts["tuple_mode"]
    ]
    backend_kind = {"mock": "mock", "remote": "remote-chat"}[opts["backend"]]
    return PipelineConfig(
        target=opts["target"],
        sampling=SamplingConfig(m=opts["m"], n=opts["n"], seed=opts["seed"]),
        dependency=DependencyConfig(p=opts["p"], q=opts["q"]),
        k=opts["k"],
        tuple_mode=tuple_mode,
        attr_mode=opts["attr_mode"],
        backend=BackendConfig(
            kind=backend_kind,
            endpoint=opts["endpoint"],
            model_name=opts["model"],
            api_key_env=opts["api_key_env"],
        ),
        seed=opts["seed"],
        concurrency=opts["concurrency"],
    )


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, ensure_ascii=False)
        fh.write("\n")


def _cmd_impute(args: argparse.Namespace) -> int:
    opts = _effective(args)
    if not opts.get("input"):
        raise DataError("--input is required")
    cfg = _pipeline_config(opts)
    table = load_table(opts["input"])
    run = run_pipeline(table, cfg, audit_path=opts.get("audit"))
    if opts.get("out"):
        dump_table(run.imputed_table, opts["out"])
    if opts.get("report"):
        _write_json(
            opts["report"],
            build_report(cfg, run.dependency_reports, run.records, run.summary),
        )
    done = sum(1 for r in run.records if not r.failed)
    print(f"imputed {done}/{len(run.records)} cells in {opts['target']!r}")
    if run.summary.fallback_used:
        print("note: no dependent attributes found; fell back to all attributes")
    if run.records and done == 0:
        print("error: the backend failed on every cell", file=sys.stderr)
        return EXIT_BACKEND
    return EXIT_OK


def _cmd_eval(args: argparse.Namespace) -> int:
    opts = _effective(args)
    if not opts.get("input"):
        raise DataError("--input is required")
    cfg = _pipeline_config(opts)
    table = load_table(opts["input"])
    audit_template = f"{opts['audit']}.{{repeat}}" if opts.get("audit") else None
    summary, runs, plans = run_experiment(
        table,
        cfg,
        mask_rate=opts["mask_rate"],
        repeats=opts["repeats"],
        audit_template=audit_template,
    )
    if opts.get("report"):
        _write_json(
            opts["report"], build_experiment_report(cfg, summary, runs, plans)
        )
    print(
        f"exact match {summary.accuracy_mean:.3f} ± {summary.accuracy_std:.3f}, "
        f"rouge1-f1 {summary.rouge_mean:.3f} ± {summary.rouge_std:.3f} "
        f"({summary.repeats} repeats, mask rate {summary.mask_rate})"
    )
    return EXIT_OK


def _format_record(record: dict, dependency_reports: list[dict]) -> str:
    lines = [f"row {record['row']}:"]
    lines.append(f"  predicted:    {record['predicted']!r}")
    if record.get("ground_truth") is not None:
        lines.append(f"  ground truth: {record['ground_truth']!r}")
    lines.append(f"  outcome:      {record['outcome']}")
    if record.get("failed"):
        lines.append(f"  failed:       {record['error']}")
    lines.append(f"  attributes:   {', '.join(record['attributes_used'])}")
    ex = record.get("example_set")
    if ex:
        lines.append(f"  examples (diverse={ex['diverse']}):")
        for e in ex["examples"]:
            score = "-" if e["score"] is None else f"{e['score']:.3f}"
            lines.append(f"    row {e['row']:>6}  score {score}  target {e['target']!r}")
    used = set(record["attributes_used"])
    for rep in dependency_reports:
        if rep["candidate"] in used and rep["verdict"]:
            witness_bits = [
                f"{g}: {', '.join(repr(w) for w in ws[:3])}"
                for g, ws in list(rep["witnesses"].items())[:5]
            ]
            lines.append(f"  evidence for {rep['candidate']!r}:")
            for bit in witness_bits:
                lines.append(f"    {bit}")
    stats = record.get("prompt_stats")
    if stats:
        lines.append(
            "  prompt: "
            f"{stats['actual_characters']} chars, "
            f"~{stats['total_estimate']:.0f} tokens "
            f"({stats['example_count']} examples x {stats['attribute_count']} attrs)"
        )
    return "\n".join(lines)


def _cmd_explain(args: argparse.Namespace) -> int:
    with open(args.report, "r", encoding="utf-8") as fh:
        report = json.load(fh)
    blocks = []
    if "runs" in report:
        blocks = [
            (run.get("records", []), run.get("dependency_reports", []))
            for run in report["runs"]
        ]
    else:
        blocks = [(report.get("records", []), report.get("dependency_reports", []))]
    for records, reports in blocks:
        for record in records:
            if record["row"] == args.row:
                print(_format_record(record, reports))
                return EXIT_OK
    raise DataError(f"no record for row {args.row} in {args.report}")


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "impute":
            return _cmd_impute(args)
        if args.command == "eval":
            return _cmd_eval(args)
        return _cmd_explain(args)
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
