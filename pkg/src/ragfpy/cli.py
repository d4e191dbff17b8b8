"""
Command-line interface.

::

    ragfpy run --data F --target NAME --description F --kb F --config F --out DIR
               [--replay F | --offline]
    ragfpy index --kb-dir D --out F [--dim N] [--embed-endpoint URL --embed-model M]
    ragfpy report --run DIR

Exit codes: 0 on success, 2 on usage, configuration or input errors, 3 on
transport errors (including an exhausted replay file).
"""
import json, logging, sys
from argparse import ArgumentParser
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import pandas as pd

from . import __version__
from .config import api_key, load_config
from .engine import ProvenanceWriter, RunResult, run
from .errors import OracleError, RagfError
from .knowledge import DEFAULT_DIM, HashEmbedder, KnowledgeBase, RemoteEmbedder, index, make_embedder
from .metrics import (
    MetricsReport,
    feature_correlations,
    render_correlations,
    render_report,
    write_metrics,
)
from .oracle import Gateway, HTTPChatTransport, ReplayTransport
from .tabular import load_csv, write_csv

LOG_FORMAT = "%(levelname)s:%(processName)s@%(module)s\t%(message)s"

METRICS_JSON = "metrics.json"
METRICS_TXT = "metrics.txt"
REPORT_JSON = "report.json"
PROVENANCE = "provenance.jsonl"
AUGMENTED_CSV = "augmented.csv"


@dataclass(frozen=True)
class RunManifest:
    """Everything one ``run`` invocation needs.

    `mode` is ``live``, ``replay`` (with `replay` set) or ``fallback``.
    """

    data: Path
    target: str
    description: Path
    kb: Path
    config: Path
    out: Path
    mode: str = "live"
    replay: Optional[Path] = None

    def check(self):
        for path in (self.data, self.description, self.kb, self.config, self.replay):
            if path is not None and not Path(path).exists():
                raise FileNotFoundError(f"{path} does not exist.")


def _make_gateway(manifest: RunManifest, settings) -> Gateway:
    if manifest.mode == "replay":
        return Gateway(ReplayTransport.from_file(manifest.replay))
    if manifest.mode == "fallback":
        return Gateway()
    transport = HTTPChatTransport(
        settings.llm_endpoint,
        settings.llm_model,
        api_key(),
        timeout=settings.llm_timeout,
        options=settings.llm_options,
    )
    return Gateway(transport)


def _make_query_embedder(kb: KnowledgeBase, settings):
    if kb.embedder_id.startswith("remote:"):
        return make_embedder(kb.embedder_id, settings.embed_endpoint, api_key())
    return make_embedder(kb.embedder_id)


def _correlations_dict(table: pd.DataFrame) -> dict:
    out = {}
    for g in table.index:
        out[g] = {o: (None if pd.isna(v) else float(v)) for o, v in table.loc[g].items()}
    return out


def run_report(result: RunResult) -> dict:
    """Machine-readable run summary, free of timestamps."""
    d = result.dataset
    original, generated = d.feature_counts()
    generated_names = [m.name for m in d.schema if m.generated]
    original_names = [m.name for m in d.schema if not m.generated]
    return {
        "ragfpy": __version__,
        "stop_reason": result.stop_reason,
        "base_score": result.base_score,
        "best_score": result.best_score,
        "original_features": original,
        "generated_features": generated,
        "features": [
            {"name": m.name, "kind": m.kind.value, "origin": m.origin, "formula": m.formula}
            for m in d.schema
        ],
        "info_gain_bits": result.info_gain_bits,
        "trajectory": [
            {
                "t": r.t,
                "decision": r.decision,
                "chosen": r.chosen.proposal.label if r.chosen else None,
                "chosen_score": r.chosen.score if r.chosen else None,
                "best_score": r.best_score,
                "info_gain_bits": r.info_gain_bits,
            }
            for r in result.iterations
        ],
        "held_out_rows": int(len(result.test_rows)),
        "base_test": result.base_test.to_dict() if result.base_test else None,
        "final_test": result.final_test.to_dict() if result.final_test else None,
        "correlations": _correlations_dict(
            feature_correlations(d, generated_names, original_names)
        ),
        "description": d.description,
    }


def write_outputs(result: RunResult, out: Path):
    report = run_report(result)
    with open(out / REPORT_JSON, "w", encoding="utf-8", newline="\n") as f:
        json.dump(report, f, indent=2, ensure_ascii=False)
        f.write("\n")
    write_metrics(out / METRICS_JSON, result.final_test, result.info_gain_bits)
    with open(out / METRICS_TXT, "w", encoding="utf-8", newline="\n") as f:
        f.write(render_report(result.base_test, "original features"))
        f.write("\n")
        f.write(render_report(result.final_test, "generated features"))
        f.write("\n")
        f.write(f"{'info_gain_bits':<16}{result.info_gain_bits:.4f}\n")
        f.write(f"{'stop_reason':<16}{result.stop_reason}\n")
    original, generated = result.dataset.feature_counts()
    write_csv(result.dataset, out / AUGMENTED_CSV, f"original {original}, generated {generated}")


def cmd_run(manifest: RunManifest) -> int:
    manifest.check()
    config, settings = load_config(manifest.config)
    description = Path(manifest.description).read_text(encoding="utf-8")
    d0 = load_csv(manifest.data, manifest.target, description)
    kb = KnowledgeBase.load(manifest.kb)
    gateway = _make_gateway(manifest, settings)
    embedder = _make_query_embedder(kb, settings)
    out = Path(manifest.out)
    out.mkdir(parents=True, exist_ok=True)
    logging.info(f"Running in {manifest.mode} mode on {d0}")
    with ProvenanceWriter(out / PROVENANCE, manifest.mode) as provenance:
        result = run(
            config,
            d0,
            kb,
            gateway,
            embedder=embedder,
            provenance=provenance,
            progress=logging.getLogger().isEnabledFor(logging.INFO),
        )
    write_outputs(result, out)
    logging.info(f"Wrote {out}")
    return 0


def cmd_index(kb_dir, out, dim: int = DEFAULT_DIM, embed_endpoint=None, embed_model=None) -> int:
    if embed_endpoint or embed_model:
        if not (embed_endpoint and embed_model):
            raise ValueError("--embed-endpoint and --embed-model go together.")
        embedder = RemoteEmbedder(embed_endpoint, embed_model, api_key())
    else:
        embedder = HashEmbedder(dim)
    kb = index(kb_dir, embedder)
    kb.save(out)
    logging.info(f"Wrote {len(kb)} documents to {out}")
    return 0


def cmd_report(run_dir) -> int:
    run_dir = Path(run_dir)
    if not run_dir.is_dir():
        raise FileNotFoundError(f"{run_dir} is not a run directory.")
    with open(run_dir / REPORT_JSON, "r", encoding="utf-8") as f:
        report = json.load(f)
    lines = [
        f"stop reason       {report['stop_reason']}",
        f"features          original {report['original_features']}, "
        f"generated {report['generated_features']}",
        f"cv score          {report['base_score']:.4f} -> {report['best_score']:.4f}",
        f"information gain  {report['info_gain_bits']:.4f} bits",
        "",
        f"{'t':>3}  {'decision':<9}{'best':>8}{'ig bits':>9}  chosen",
    ]
    for row in report["trajectory"]:
        chosen = row["chosen"] or "-"
        lines.append(
            f"{row['t']:>3}  {row['decision']:<9}{row['best_score']:>8.4f}"
            f"{row['info_gain_bits']:>9.4f}  {chosen}"
        )
    lines.append("")
    print("\n".join(lines))
    for key, title in (("base_test", "original features"), ("final_test", "generated features")):
        if report[key] is not None:
            print(render_report(MetricsReport.from_dict(report[key]), title))
    correlations = pd.DataFrame.from_dict(report["correlations"], orient="index", dtype=float)
    print("correlation of generated with original features")
    print(render_correlations(correlations), end="")
    return 0


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="ragfpy", description="Knowledge-grounded feature generation.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="log debug messages")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="log warnings and errors only")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="generate features for a dataset")
    p_run.add_argument("--data", required=True, type=Path, help="input table (CSV)")
    p_run.add_argument("--target", required=True, help="name of the class column")
    p_run.add_argument("--description", required=True, type=Path, help="dataset description (text)")
    p_run.add_argument("--kb", required=True, type=Path, help="knowledge-base index (JSON)")
    p_run.add_argument("--config", required=True, type=Path, help="run configuration (JSON)")
    p_run.add_argument("--out", required=True, type=Path, help="output directory")
    mode = p_run.add_mutually_exclusive_group()
    mode.add_argument("--replay", type=Path, help="answer gateway calls from a replay file")
    mode.add_argument(
        "--offline", action="store_true", help="no language model: templates and recipe documents"
    )

    p_index = sub.add_parser("index", help="embed a directory of documents")
    p_index.add_argument("--kb-dir", required=True, type=Path, help="directory of .txt/.md files")
    p_index.add_argument("--out", required=True, type=Path, help="index file to write")
    p_index.add_argument("--dim", type=int, default=DEFAULT_DIM, help="hash embedding dimension")
    p_index.add_argument("--embed-endpoint", help="remote embeddings endpoint")
    p_index.add_argument("--embed-model", help="remote embedding model")

    p_report = sub.add_parser("report", help="show the results of a run")
    p_report.add_argument("--run", required=True, type=Path, help="run output directory")
    return parser


def dispatch(args) -> int:
    if args.command == "run":
        if args.replay is not None:
            mode = "replay"
        elif args.offline:
            mode = "fallback"
        else:
            mode = "live"
        manifest = RunManifest(
            data=args.data,
            target=args.target,
            description=args.description,
            kb=args.kb,
            config=args.config,
            out=args.out,
            mode=mode,
            replay=args.replay,
        )
        return cmd_run(manifest)
    if args.command == "index":
        return cmd_index(args.kb_dir, args.out, args.dim, args.embed_endpoint, args.embed_model)
    return cmd_report(args.run)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(format=LOG_FORMAT, level=level)
    try:
        return dispatch(args)
    except OracleError as e:
        logging.error(f"{type(e).__name__}: {e}")
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 3
    except (RagfError, ValueError, OSError) as e:
        logging.error(f"{type(e).__name__}: {e}")
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
