"""Command-line front end: model training, corpus decoding, sweeps, and
self-verification against the brute-force oracles.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 I/O error.
Every output file gets a sidecar ``<name>.manifest.json`` recording the
command, configuration, input digests, and seed; identical manifests give
bit-identical outputs, so timing is deliberately kept out of the files.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import dataclasses
import hashlib
import json
import math
import os
import sys
from pathlib import Path

from . import __version__
from .evaluate import corpus_bleu, summarize_run
from .exceptions import ContractError, ModelFormatError, RegdecodeError
from .models import load_model, save_ngram_model, train_ngram
from .objectives import MAP_OBJECTIVE, Objective, RegularizerKind, parse_objective
from .randmodels import exactness_instance, set_limit_instance, tie_free_instance
from .search import (
    SearchConfig,
    beam_search,
    brute_force,
    brute_force_set,
    exact_search,
    greedy_search,
)

SEED_ENV_VAR = "REGDECODE_SEED"

EXACTNESS_LAMBDAS = (0.5, 2.0, 10.0)
LIMIT_LAMBDA = 1e6


@dataclasses.dataclass
class RunManifest:
    command: str
    config: dict
    model_digest: str | None
    input_digest: str | None
    seed: int
    versions: dict

    def write_next_to(self, out_path: Path) -> None:
        payload = dataclasses.asdict(self)
        manifest_path = out_path.with_name(out_path.name + ".manifest.json")
        manifest_path.write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )


def _digest(path: str | None) -> str | None:
    if path is None:
        return None
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _versions() -> dict:
    return {
        "regdecode": __version__,
        "python": ".".join(map(str, sys.version_info[:3])),
    }


def _default_seed() -> int:
    return int(os.environ.get(SEED_ENV_VAR, "0"))


def _read_token_lines(path: str) -> list[list[str]]:
    text = Path(path).read_text(encoding="utf-8")
    return [line.split() for line in text.splitlines()]


def _decode_one(decoder: str, model, source, objective, config):
    if decoder == "greedy":
        return greedy_search(model, source, config)
    if decoder == "beam":
        return beam_search(model, source, objective, config)
    if decoder == "exact":
        return exact_search(model, source, objective, config)
    if decoder == "brute":
        return brute_force(model, source, objective, config.n_max)
    raise ContractError(f"unknown decoder {decoder!r}")


def _decode_corpus(decoder, model, sources, objective, config, workers=1):
    if workers <= 1:
        return [_decode_one(decoder, model, src, objective, config) for src in sources]
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(_decode_one, decoder, model, src, objective, config)
            for src in sources
        ]
        return [f.result() for f in futures]  # input order regardless of completion


def _record_json(source: list[str], record) -> dict:
    best = record.best
    return {
        "source": " ".join(source),
        "text": " ".join(best.surface),
        "tokens": list(best.surface),
        "complete": best.complete,
        "log_prob": best.log_prob,
        "surprisals": list(best.trace),
        "penalties": dict(sorted(best.breakdown.penalties.items())),
        "length_term": best.breakdown.length_term,
        "total": best.breakdown.total,
        "nodes_expanded": record.nodes_expanded,
        "optimality_certificate": record.optimality_certificate,
    }


def cmd_train_ngram(args) -> int:
    corpus = _read_token_lines(args.corpus)
    model = train_ngram(corpus, args.order, args.add_k)
    out = Path(args.out)
    save_ngram_model(model, out)
    RunManifest(
        command="train-ngram",
        config={"order": args.order, "add_k": args.add_k, "corpus": args.corpus},
        model_digest=_digest(args.out),
        input_digest=_digest(args.corpus),
        seed=args.seed,
        versions=_versions(),
    ).write_next_to(out)
    print(f"trained order-{args.order} model on {len(corpus)} lines -> {args.out}")
    return 0


def cmd_decode(args) -> int:
    model = load_model(args.model)
    sources = _read_token_lines(args.input)
    objective = parse_objective(args.objective)
    if args.decoder in ("exact", "brute") and args.k is not None:
        print(f"note: --k is ignored by the {args.decoder} decoder", file=sys.stderr)
    if args.decoder == "greedy" and args.objective.strip():
        print("note: the greedy decoder ignores --objective", file=sys.stderr)
    config = SearchConfig(beam_width=1 if args.k is None else args.k, n_max=args.n_max)
    records = _decode_corpus(
        args.decoder, model, sources, objective, config, workers=args.workers
    )
    out = Path(args.out)
    with out.open("w", encoding="utf-8") as fh:
        for source, record in zip(sources, records):
            fh.write(json.dumps(_record_json(source, record), sort_keys=True) + "\n")
    RunManifest(
        command="decode",
        config={
            "decoder": args.decoder,
            "objective": objective.describe(),
            "k": args.k,
            "n_max": args.n_max,
            "workers": args.workers,
        },
        model_digest=_digest(args.model),
        input_digest=_digest(args.input),
        seed=args.seed,
        versions=_versions(),
    ).write_next_to(out)
    print(f"decoded {len(sources)} inputs -> {args.out}")
    return 0


def _parse_number_list(text: str, cast) -> list:
    try:
        return [cast(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ContractError(f"bad numeric list {text!r}") from None


def cmd_sweep(args) -> int:
    model = load_model(args.model)
    sources = _read_token_lines(args.input)
    references = _read_token_lines(args.refs)
    if len(sources) != len(references):
        raise ContractError(
            f"{len(sources)} inputs but {len(references)} references"
        )
    lambdas = _parse_number_list(args.lambdas, float)
    if not lambdas:
        raise ContractError("lambda list is empty")
    ks = _parse_number_list(args.ks, int) if args.ks else [1 if args.k is None else args.k]
    kind = args.objective_kind
    rows = []
    for lam in lambdas:
        if kind == "none" or lam == 0.0:
            objective = Objective()
        else:
            objective = Objective(((RegularizerKind(kind), lam),))
        for k in ks:
            config = SearchConfig(beam_width=k, n_max=args.n_max)
            records = _decode_corpus(
                args.decoder, model, sources, objective, config, workers=args.workers
            )
            rows.append(summarize_run(lam, k, records, references))
    out = Path(args.out)
    with out.open("w", encoding="utf-8") as fh:
        fh.write("lambda,k,bleu,mean_sigma,mean_len,empty_rate\n")
        for row in rows:
            fh.write(
                f"{row.lam!r},{row.k},{row.bleu!r},{row.mean_sigma!r},"
                f"{row.mean_len!r},{row.empty_rate!r}\n"
            )
    RunManifest(
        command="sweep",
        config={
            "decoder": args.decoder,
            "objective_kind": kind,
            "lambdas": lambdas,
            "ks": ks,
            "n_max": args.n_max,
        },
        model_digest=_digest(args.model),
        input_digest=_digest(args.input),
        seed=args.seed,
        versions=_versions(),
    ).write_next_to(out)
    print(f"swept {len(rows)} configurations -> {args.out}")
    return 0


def _suite_exactness(seed: int, trials: int):
    objectives = [("none", 0.0, Objective())]
    for kind in RegularizerKind:
        for lam in EXACTNESS_LAMBDAS:
            objectives.append((kind.value, lam, Objective(((kind, lam),))))
    checks = 0
    failures = []
    for i in range(trials):
        model, n_max = exactness_instance(seed * 1_000_003 + i)
        config = SearchConfig(beam_width=1, n_max=n_max)
        for kind, lam, objective in objectives:
            exact = exact_search(model, None, objective, config)
            brute = brute_force(model, None, objective, n_max)
            checks += 1
            if (
                exact.best.score != brute.best.score
                or exact.best.token_ids != brute.best.token_ids
            ):
                failures.append(
                    {
                        "trial": i,
                        "objective": f"{kind}={lam}",
                        "exact": list(exact.best.tokens),
                        "brute": list(brute.best.tokens),
                        "exact_score": exact.best.score,
                        "brute_score": brute.best.score,
                    }
                )
    return checks, failures


def _suite_thm1(seed: int, trials: int):
    objective = Objective(((RegularizerKind.GREEDY, LIMIT_LAMBDA),))
    checks = 0
    failures = []
    for i in range(trials):
        model, n_max = tie_free_instance(seed * 1_000_003 + i)
        config = SearchConfig(beam_width=1, n_max=n_max)
        exact = exact_search(model, None, objective, config)
        greedy = greedy_search(model, None, config)
        checks += 1
        if exact.best.token_ids != greedy.best.token_ids:
            failures.append(
                {
                    "trial": i,
                    "exact": list(exact.best.tokens),
                    "greedy": list(greedy.best.tokens),
                }
            )
    return checks, failures


def _suite_thm2(seed: int, trials: int):
    checks = 0
    failures = []
    for i in range(trials):
        model, k, n_max = set_limit_instance(seed * 1_000_003 + i)
        config = SearchConfig(beam_width=k, n_max=n_max)
        beam = beam_search(model, None, MAP_OBJECTIVE, config)
        chosen = brute_force_set(model, None, k, LIMIT_LAMBDA, n_max)
        checks += 1
        beam_ids = sorted(h.token_ids for h in beam.beam_set)
        set_ids = sorted(h.token_ids for h in chosen)
        if beam_ids != set_ids:
            failures.append(
                {
                    "trial": i,
                    "k": k,
                    "beam": [list(h.tokens) for h in beam.beam_set],
                    "set": [list(h.tokens) for h in chosen],
                }
            )
    return checks, failures


def _suite_bleu(seed: int, trials: int):
    del seed, trials
    failures = []
    corpus = [["the", "cat", "sat", "on", "the", "mat"], ["a", "stitch", "in", "time"]]
    if corpus_bleu(corpus, corpus).corpus_bleu != 100.0:
        failures.append({"check": "identity", "detail": "identity corpus != 100.0"})
    report = corpus_bleu([["the", "cat"]], [["the", "cat", "sat"]])
    if abs(report.corpus_bleu - 100.0 * math.exp(-0.5)) > 1e-6:
        failures.append({"check": "short-hypothesis", "got": report.corpus_bleu})
    if corpus_bleu([[], []], [["a"], ["b"]]).corpus_bleu != 0.0:
        failures.append({"check": "all-empty", "detail": "empty outputs != 0.0"})
    a = corpus_bleu(
        [["x", "y"], ["the", "cat"]], [["x", "z"], ["the", "cat", "sat"]]
    ).corpus_bleu
    b = corpus_bleu(
        [["the", "cat"], ["x", "y"]], [["the", "cat", "sat"], ["x", "z"]]
    ).corpus_bleu
    if a != b:
        failures.append({"check": "reorder-invariance", "got": [a, b]})
    return 4, failures


SUITES = {
    "exactness": (_suite_exactness, 200),
    "thm1": (_suite_thm1, 100),
    "thm2": (_suite_thm2, 50),
    "bleu": (_suite_bleu, 1),
}


def cmd_verify(args) -> int:
    runner, default_trials = SUITES[args.suite]
    trials = args.trials if args.trials is not None else default_trials
    checks, failures = runner(args.seed, trials)
    passed = checks - len(failures)
    print(f"{args.suite}: {passed}/{checks} checks passed (seed={args.seed})")
    for failure in failures[:10]:
        print(f"  FAIL {json.dumps(failure, sort_keys=True)}")
    if args.out:
        payload = {
            "suite": args.suite,
            "seed": args.seed,
            "trials": trials,
            "checks": checks,
            "passed": passed,
            "failures": failures,
            "versions": _versions(),
        }
        Path(args.out).write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    return 0 if not failures else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="regdecode",
        description="Decode locally normalized sequence models under "
        "surprisal-regularized objectives.",
    )
    parser.add_argument("--seed", type=int, default=_default_seed(),
                        help=f"global seed (default from ${SEED_ENV_VAR} or 0)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-ngram", help="train an add-k n-gram model from a corpus")
    p.add_argument("corpus", help="one whitespace-tokenized sequence per line")
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--add-k", type=float, default=1.0, dest="add_k")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_ngram)

    p = sub.add_parser("decode", help="decode a corpus to JSONL records")
    p.add_argument("model")
    p.add_argument("input")
    p.add_argument("--decoder", choices=["greedy", "beam", "exact", "brute"], default="beam")
    p.add_argument("--objective", default="",
                   help="e.g. 'greedy=5,square=2' or 'len=norm' (empty = plain log-probability)")
    p.add_argument("--k", type=int, default=None, help="beam width (beam decoder only)")
    p.add_argument("--n-max", type=int, default=50, dest="n_max")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("sweep", help="decode under a weight or width sweep, emit CSV")
    p.add_argument("model")
    p.add_argument("input")
    p.add_argument("refs")
    p.add_argument("--objective-kind", dest="objective_kind", default="greedy",
                   choices=["none"] + [k.value for k in RegularizerKind])
    p.add_argument("--lambdas", default="0", help="comma-separated weights")
    p.add_argument("--ks", default="", help="comma-separated beam widths (optional)")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--decoder", choices=["greedy", "beam", "exact", "brute"], default="exact")
    p.add_argument("--n-max", type=int, default=50, dest="n_max")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="run a self-check suite against the oracles")
    p.add_argument("--suite", choices=sorted(SUITES), required=True)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--out", default=None, help="write a JSON report")
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ContractError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ModelFormatError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    except RegdecodeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
