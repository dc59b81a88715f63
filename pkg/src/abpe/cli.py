"""Command-line interface: one subcommand per pipeline operation.

Data goes to --out when given, otherwise to stdout; diagnostics go to
stderr. Exit codes: 0 success, 1 data/format error, 2 usage error. Every
stochastic subcommand requires an explicit --seed.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import __version__
from .bpe import BpeModel, MERGES_VERSION
from .codec import tokens_to_unicode, unicode_to_tokens
from .corpus import (
    FEATURE_VERSION,
    Corpus,
    SynthSpec,
    dump_tokens,
    load_features,
    load_tokens,
    synth_corpus,
)
from .errors import FormatError
from .kmeans import KMEANS_VERSION, KMeansModel
from .metrics import (
    compression_stats,
    cross_entropy,
    shuffle_corrupt,
    syntax_accuracy,
    vert,
)
from .rescore import CandidateSet, rescore, topx_accuracy
from .slm import NGRAM_VERSION, NgramModel

_VERSION_TEXT = (
    f"abpe {__version__} (formats: tokens 1, features {FEATURE_VERSION}, "
    f"kmeans {KMEANS_VERSION}, merges {MERGES_VERSION}, ngram {NGRAM_VERSION})"
)


def _write_text(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _write_bytes(data: bytes, out: str | None) -> None:
    if out is None:
        sys.stdout.buffer.write(data)
    else:
        with open(out, "wb") as fh:
            fh.write(data)


def _fmt_value(v) -> str:
    return repr(float(v)) if isinstance(v, float) else str(v)


def _emit_metric(name: str, fields: dict, out: str | None) -> None:
    """One key=value record line plus an aligned two-column table."""
    record = " ".join([name] + [f"{k}={_fmt_value(v)}" for k, v in fields.items()])
    width = max(len(k) for k in fields)
    rows = []
    for k, v in fields.items():
        shown = f"{v:.4f}" if isinstance(v, float) else str(v)
        rows.append(f"{k:<{width}}  {shown}")
    text = record + "\n" + "\n".join(rows) + "\n"
    sys.stdout.write(text)
    if out is not None:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _read_unicode_corpus(path: str, vocab: int | None) -> Corpus:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    utterances = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            utterances.append(unicode_to_tokens(line))
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: {exc}") from None
    if not utterances:
        raise FormatError(f"{path}: no utterances")
    max_id = max(max(u) for u in utterances)
    if vocab is not None and vocab <= max_id:
        raise FormatError(f"{path}: vocab {vocab} does not cover max id {max_id}")
    return Corpus(utterances, max_id + 1 if vocab is None else vocab)


def _parse_prompt(text: str) -> list[int]:
    ids = []
    for tok in text.split():
        value = int(tok)
        if value < 0:
            raise ValueError(f"negative prompt id {value}")
        ids.append(value)
    return ids


def _cmd_synth(args) -> None:
    spec = SynthSpec(
        vocab_size=args.vocab,
        n_utts=args.utts,
        len_range=(args.len[0], args.len[1]),
        motif_count=args.motifs,
        motif_len_range=(args.motif_len[0], args.motif_len[1]),
        motif_rate=args.motif_rate,
        zipf_exponent=args.zipf,
        seed=args.seed,
    )
    _write_text(dump_tokens(synth_corpus(spec)), args.out)


def _cmd_kmeans_fit(args) -> None:
    features = load_features(args.infile)
    if args.sample_rows is not None:
        if args.sample_rows < args.k:
            raise ValueError("--sample-rows must be >= k")
        n = features.shape[0]
        if args.sample_rows < n:
            rng = np.random.default_rng(args.seed)
            idx = np.sort(rng.choice(n, size=args.sample_rows, replace=False))
            features = features[idx]
    model = KMeansModel.fit(
        features, args.k, seed=args.seed, max_iters=args.max_iters, tol=args.tol
    )
    print(
        f"fit k={model.k} dim={model.dim} iters={model.n_iter} "
        f"inertia={model.inertia:.6g}",
        file=sys.stderr,
    )
    _write_bytes(model.to_bytes(), args.out)


def _cmd_discretize(args) -> None:
    model = KMeansModel.load(args.model)
    ids = model.assign(load_features(args.infile))
    _write_text(dump_tokens(Corpus([ids], model.k)), args.out)


def _cmd_to_unicode(args) -> None:
    corpus = load_tokens(args.infile)
    lines = [tokens_to_unicode(u) for u in corpus.utterances]
    _write_text("\n".join(lines) + "\n", args.out)


def _cmd_from_unicode(args) -> None:
    corpus = _read_unicode_corpus(args.infile, args.vocab)
    _write_text(dump_tokens(corpus), args.out)


def _load_train_corpus(args) -> Corpus:
    if args.unicode:
        return _read_unicode_corpus(args.infile, None)
    return load_tokens(args.infile)


def _cmd_bpe_train(args) -> None:
    corpus = _load_train_corpus(args)
    model = BpeModel.train(corpus, args.vocab)
    print(
        f"trained {len(model.merges)} merges over base {model.base_size}",
        file=sys.stderr,
    )
    _write_text(model.dumps(), args.out)


def _cmd_bpe_encode(args) -> None:
    model = BpeModel.load(args.model)
    if args.unicode:
        corpus = _read_unicode_corpus(args.infile, model.base_size)
    else:
        corpus = load_tokens(args.infile)
    _write_text(dump_tokens(model.encode_corpus(corpus)), args.out)


def _cmd_bpe_decode(args) -> None:
    model = BpeModel.load(args.model)
    decoded = model.decode_corpus(load_tokens(args.infile))
    if args.unicode:
        lines = [tokens_to_unicode(u) for u in decoded.utterances]
        _write_text("\n".join(lines) + "\n", args.out)
    else:
        _write_text(dump_tokens(decoded), args.out)


def _cmd_slm_train(args) -> None:
    corpus = load_tokens(args.infile)
    weights = None
    if args.weights is not None:
        weights = [float(w) for w in args.weights.split(",")]
    model = NgramModel.train(
        corpus, order=args.order, add_k=args.add_k, interpolation_weights=weights
    )
    _write_bytes(model.to_bytes(), args.out)


def _cmd_score(args) -> None:
    model = NgramModel.load(args.model)
    corpus = load_tokens(args.infile)
    lines = [repr(model.logprob(u)) for u in corpus.utterances]
    _write_text("\n".join(lines) + "\n", args.out)


def _cmd_continue(args) -> None:
    model = NgramModel.load(args.model)
    prompt = _parse_prompt(args.prompt)
    sequences = []
    for i in range(args.num):
        sequences.append(
            model.generate(
                prompt,
                args.max_new,
                seed=args.seed + i,
                temperature=args.temperature,
                top_k=args.top_k,
            )
        )
    _write_text(dump_tokens(Corpus(sequences, model.vocab_size)), args.out)


def _read_manifest(path: str):
    """Parse the candidate manifest TSV into ordered per-case groups."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    cases: dict[str, list[tuple[str, str, int | None]]] = {}
    order: list[str] = []
    base = os.path.dirname(os.path.abspath(path))
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n").strip()
        if not line:
            continue
        cells = line.split("\t")
        if lineno == 1 and cells[0] == "case_id":
            continue
        if len(cells) not in (3, 4):
            raise FormatError(
                f"{path}:{lineno}: expected 3 or 4 tab-separated columns"
            )
        case_id, cand_id, token_path = cells[0], cells[1], cells[2]
        rank: int | None = None
        if len(cells) == 4 and cells[3] != "":
            try:
                rank = int(cells[3])
            except ValueError:
                raise FormatError(f"{path}:{lineno}: malformed rank {cells[3]!r}") from None
        if not os.path.isabs(token_path):
            token_path = os.path.join(base, token_path)
        if case_id not in cases:
            cases[case_id] = []
            order.append(case_id)
        cases[case_id].append((cand_id, token_path, rank))
    if not order:
        raise FormatError(f"{path}: empty manifest")
    return [(case_id, cases[case_id]) for case_id in order]


def _load_candidate(token_path: str) -> list[int]:
    corpus = load_tokens(token_path)
    if len(corpus) != 1:
        raise FormatError(
            f"{token_path}: candidate file must hold exactly one utterance"
        )
    return corpus.utterances[0]


def _cmd_rescore(args) -> None:
    model = NgramModel.load(args.model)
    bpe = BpeModel.load(args.bpe) if args.bpe else None
    cases = _read_manifest(args.manifest)
    out_lines = []
    results = []
    rank_sets = []
    all_ranked = True
    for case_id, rows in cases:
        cand_ids = [r[0] for r in rows]
        candidates = [_load_candidate(r[1]) for r in rows]
        ranks = [r[2] for r in rows]
        if any(r is None for r in ranks):
            all_ranked = False
            cand_set = CandidateSet(candidates)
        else:
            cand_set = CandidateSet(candidates, list(ranks))
        result = rescore(model, cand_set, length_norm=args.length_norm, bpe=bpe)
        results.append(result)
        if all_ranked:
            rank_sets.append(list(ranks))
        out_lines.append(
            f"case={case_id} best_index={result.best_index} "
            f"candidate={cand_ids[result.best_index]} "
            f"score={result.scores[result.best_index]!r}"
        )
    if all_ranked:
        max_x = min(len(rs) for rs in rank_sets)
        for x in range(1, max_x + 1):
            acc = topx_accuracy(results, rank_sets, x)
            out_lines.append(f"topx x={x} accuracy={acc!r}")
    else:
        print("ranks missing; top-x table skipped", file=sys.stderr)
    _write_text("\n".join(out_lines) + "\n", args.out)


def _cmd_metrics_compress(args) -> None:
    base = load_tokens(args.base)
    encoded = load_tokens(args.encoded)
    report = compression_stats(base, encoded, encoded.vocab_size)
    _emit_metric(
        "metrics-compress",
        {
            "avg_len_base": report.avg_len_base,
            "avg_len_encoded": report.avg_len_encoded,
            "ratio": report.ratio,
            "vocab_size": report.vocab_size,
        },
        args.out,
    )


def _cmd_metrics_vert(args) -> None:
    corpus = load_tokens(args.infile)
    report = vert(corpus.utterances, args.n)
    _emit_metric(
        "metrics-vert",
        {
            "n": report.n,
            "self_bleu": report.self_bleu,
            "auto_bleu": report.auto_bleu,
            "vert": report.vert,
        },
        args.out,
    )


def _cmd_metrics_syntax(args) -> None:
    model = NgramModel.load(args.model)
    corpus = load_tokens(args.infile)
    pairs = []
    skipped = 0
    for i, utt in enumerate(corpus.utterances):
        if len(utt) < 2 or len(utt) <= args.block:
            skipped += 1
            continue
        pairs.append((utt, shuffle_corrupt(utt, args.block, seed=args.seed + i)))
    if skipped:
        print(f"skipped {skipped} utterances too short to shuffle", file=sys.stderr)
    if not pairs:
        raise ValueError("no usable utterances for syntax pairs")
    acc = syntax_accuracy(model, pairs)
    _emit_metric(
        "metrics-syntax",
        {"pairs": len(pairs), "skipped": skipped, "accuracy": acc},
        args.out,
    )


def _cmd_metrics_xent(args) -> None:
    model = NgramModel.load(args.model)
    corpus = load_tokens(args.infile)
    report = cross_entropy(corpus.utterances, model)
    _emit_metric(
        "metrics-xent",
        {"n_samples": report.n_samples, "entropy": report.entropy},
        args.out,
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="abpe",
        description="Token-stream BPE, n-gram sequence modeling, and evaluation.",
    )
    parser.add_argument("--version", action="version", version=_VERSION_TEXT)
    sub = parser.add_subparsers(dest="command", required=True, metavar="subcommand")

    p = sub.add_parser("synth", help="generate a synthetic token corpus")
    p.add_argument("--vocab", type=int, required=True)
    p.add_argument("--utts", type=int, required=True)
    p.add_argument("--len", type=int, nargs=2, default=[30, 60], metavar=("LO", "HI"))
    p.add_argument("--motifs", type=int, default=0)
    p.add_argument(
        "--motif-len", type=int, nargs=2, default=[3, 6], metavar=("LO", "HI")
    )
    p.add_argument("--motif-rate", type=float, default=0.0)
    p.add_argument("--zipf", type=float, default=1.3)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("kmeans-fit", help="fit k-means centroids to features")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument(
        "--sample-rows",
        type=int,
        default=None,
        help="fit on a seeded without-replacement row subset of this size",
    )
    p.add_argument("--out")
    p.set_defaults(func=_cmd_kmeans_fit)

    p = sub.add_parser("discretize", help="map feature rows to centroid ids")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_discretize)

    p = sub.add_parser("to-unicode", help="token corpus to one-line-per-utterance text")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_to_unicode)

    p = sub.add_parser("from-unicode", help="inverse of to-unicode")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--vocab", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_from_unicode)

    p = sub.add_parser("bpe-train", help="learn a merge list from a corpus")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--vocab", type=int, required=True)
    p.add_argument("--unicode", action="store_true", help="input is unicode text")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_bpe_train)

    p = sub.add_parser("bpe-encode", help="apply merges to a base-token corpus")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--unicode", action="store_true", help="input is unicode text")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_bpe_encode)

    p = sub.add_parser("bpe-decode", help="expand encoded units to base tokens")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--unicode", action="store_true", help="emit unicode text")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_bpe_decode)

    p = sub.add_parser("slm-train", help="train the n-gram sequence model")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--order", type=int, default=4)
    p.add_argument("--add-k", type=float, default=0.1)
    p.add_argument("--weights", default=None, help="comma-separated, one per order")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_slm_train)

    p = sub.add_parser("score", help="log-probability of each utterance")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("continue", help="sample prompted continuations")
    p.add_argument("--model", required=True)
    p.add_argument("--prompt", required=True, help="space-separated ids; may be empty")
    p.add_argument("--max-new", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--top-k", type=int, default=None)
    p.add_argument("--num", type=int, default=1, help="continuations (seeds seed..seed+num-1)")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_continue)

    p = sub.add_parser("rescore", help="pick the best candidate per manifest case")
    p.add_argument("--model", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--bpe", default=None, help="encode raw base-token candidates first")
    p.add_argument("--length-norm", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_rescore)

    p = sub.add_parser("metrics-compress", help="sequence-length compression report")
    p.add_argument("--base", required=True)
    p.add_argument("--encoded", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_metrics_compress)

    p = sub.add_parser("metrics-vert", help="n-gram diversity report")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_metrics_vert)

    p = sub.add_parser("metrics-syntax", help="shuffled-pair discrimination accuracy")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--block", type=int, default=1)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_metrics_syntax)

    p = sub.add_parser("metrics-xent", help="cross-entropy of samples under a model")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_metrics_xent)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (FormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0
