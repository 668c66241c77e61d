"""Command-line interface.

Subcommands mirror the pipeline stages::

    tagbridge synth     --out DIR [--tags N --items N --noise S --seed N ...]
    tagbridge compose   --config cfg.json [overrides]
    tagbridge retrofit  --config cfg.json | --graph g.tsv --known emb.vec [...]
    tagbridge annotate  --config cfg.json [overrides]
    tagbridge evaluate  --config cfg.json [overrides]
    tagbridge pipeline  --config cfg.json [overrides]

Flags override config keys. Exit codes: 0 success, 2 validation/config
error, 3 feasibility error, 4 parse error.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from . import io as tbio
from .errors import (
    ConfigError,
    FeasibilityError,
    ParseError,
    TagBridgeError,
)
from .ontology import DEFAULT_RELATION_CLASSES, load_graph, load_relation_classes
from .pipeline import (
    PipelineConfig,
    run_annotate,
    run_compose,
    run_evaluate,
    run_pipeline,
    run_retrofit,
)
from .retrofit import direct_solve, jacobi_retrofit
from .synth import SynthConfig, generate_bundle
from .vectors import EmbeddingSet

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FEASIBILITY = 3
EXIT_PARSE = 4

logger = logging.getLogger(__name__)


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.handler(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except FeasibilityError as exc:
        print(f"feasibility error: {exc}", file=sys.stderr)
        return EXIT_FEASIBILITY
    except TagBridgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tagbridge",
        description="Cross-lingual tag annotation from embeddings and concept graphs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="generate a synthetic two-language bundle")
    synth.add_argument("--out", required=True, help="output directory")
    synth.add_argument("--tags", type=int, default=50)
    synth.add_argument("--items", type=int, default=200)
    synth.add_argument("--dimension", type=int, default=48)
    synth.add_argument("--noise", type=float, default=0.05)
    synth.add_argument("--seed", type=int, default=7)
    synth.add_argument("--alignment-fraction", type=float, default=1.0)
    synth.set_defaults(handler=_cmd_synth)

    for name, runner, doc in (
        ("compose", run_compose, "compose tag embeddings per language"),
        ("annotate", run_annotate, "score the corpus language pair"),
        ("evaluate", run_evaluate, "cross-validated macro-AUC report"),
        ("pipeline", run_pipeline, "run all stages in order"),
    ):
        cmd = sub.add_parser(name, help=doc)
        _add_config_options(cmd)
        cmd.set_defaults(handler=_make_config_handler(runner, name))

    retro = sub.add_parser("retrofit", help="refine embeddings against a graph")
    _add_config_options(retro)
    retro.add_argument("--graph", help="edge-list file (standalone mode)")
    retro.add_argument("--known", help="embedding file of initial vectors (standalone mode)")
    retro.add_argument("--relations", help="relation-class config file")
    retro.add_argument("--output", help="output embedding file (standalone mode)")
    retro.set_defaults(handler=_cmd_retrofit)

    return parser


def _add_config_options(cmd: argparse.ArgumentParser) -> None:
    cmd.add_argument("--config", help="pipeline config JSON")
    cmd.add_argument("--strategy", choices=("avg", "sif"))
    cmd.add_argument("--scorer", choices=("embedding", "translation", "geodesic"))
    cmd.add_argument("--retrofit-mode", dest="retrofit_mode",
                     choices=("off", "monolingual", "aligned"))
    cmd.add_argument("--mode", dest="solver", choices=("jacobi", "direct"),
                     help="linear-system solver")
    cmd.add_argument("--tol", type=float)
    cmd.add_argument("--max-iter", dest="max_iter", type=int)
    cmd.add_argument("--folds", type=int)
    cmd.add_argument("--seed", type=int)
    cmd.add_argument("--jobs", type=int)
    cmd.add_argument("--output-dir", dest="output_dir")


_OVERRIDE_KEYS = (
    "strategy", "scorer", "retrofit_mode", "solver", "tol", "max_iter",
    "folds", "seed", "jobs", "output_dir",
)


def _load_config(args) -> PipelineConfig:
    if not args.config:
        raise ConfigError("--config is required for this command")
    overrides = {k: getattr(args, k, None) for k in _OVERRIDE_KEYS}
    return PipelineConfig.from_json(args.config, overrides=overrides)


def _make_config_handler(runner, name):
    def handler(args) -> int:
        cfg = _load_config(args)
        result = runner(cfg)
        if name in ("evaluate", "pipeline"):
            print(
                f"macro-AUC {result.mean_macro_auc:.4f} ± {result.std_macro_auc:.4f} "
                f"over {cfg.folds} folds"
            )
        return EXIT_OK

    return handler


def _cmd_synth(args) -> int:
    cfg = SynthConfig(
        n_tags=args.tags,
        n_items=args.items,
        dimension=args.dimension,
        noise=args.noise,
        seed=args.seed,
        alignment_fraction=args.alignment_fraction,
    )
    bundle = generate_bundle(cfg, args.out)
    print(f"wrote synthetic bundle to {bundle.out_dir} (config: {bundle.config})")
    return EXIT_OK


def _cmd_retrofit(args) -> int:
    if args.graph or args.known:
        return _retrofit_standalone(args)
    cfg = _load_config(args)
    run_retrofit(cfg)
    return EXIT_OK


def _retrofit_standalone(args) -> int:
    """File-driven retrofit: --graph plus --known, no pipeline config.

    Identifiers with non-zero vectors in the --known file are the anchors;
    graph concepts absent from it are learned from scratch.
    """
    if not (args.graph and args.known):
        raise ConfigError("standalone retrofit needs both --graph and --known")
    relation_classes = (
        load_relation_classes(args.relations) if args.relations else DEFAULT_RELATION_CLASSES
    )
    graph = load_graph(args.graph, relation_classes)
    initial = tbio.load_embeddings(args.known)
    import numpy as np

    known = {c for c, v in initial.items() if np.any(v) and c in graph}
    tol = args.tol if args.tol is not None else 1e-6
    max_iter = args.max_iter if args.max_iter is not None else 1000
    if args.solver == "direct":
        learned = direct_solve(graph, initial, known)
        report = {"solver": "direct", "converged": True}
    else:
        learned, solver_report = jacobi_retrofit(graph, initial, known, tol=tol, max_iter=max_iter)
        report = dataclasses.asdict(solver_report) | {"solver": "jacobi"}

    output = Path(args.output) if args.output else Path(args.known).with_suffix(".retrofitted.vec")
    tbio.save_embeddings(learned, output)
    tbio.write_json(report, output.with_suffix(".report.json"))
    print(f"wrote {output}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
