"""``lexborrow`` command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error (parse, alignment, model
format). User-input errors are reported on stderr without a traceback.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from . import corpus, crf, evaluation
from .bio import RepairMode
from .corpus import ColumnSchema, ParseError
from .error_analysis import align_outputs, analysis_report, format_report
from .features import FeatureConfig, load_embeddings
from .selection import SelectionResources, detect_candidates, read_articles, select_articles


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _schema(args) -> ColumnSchema:
    delim = None if args.delimiter == "whitespace" else "\t"
    cols = ("token", "pos", "tag") if args.pos else ("token", "tag")
    return ColumnSchema(cols, delim)


def _load(path, args) -> corpus.Dataset:
    try:
        return corpus.load_conll(path, _schema(args), name=Path(path).stem)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from exc
    except ParseError as exc:
        raise DataError(f"{path}: {exc}") from exc


def _embeddings(path):
    if path is None:
        return None
    try:
        with open(path, "rb") as f:
            return load_embeddings(f)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from exc
    except ParseError as exc:
        raise DataError(f"{path}: {exc}") from exc


def _emit(args, payload: dict, table: str) -> None:
    if args.json:
        print(json.dumps(payload, ensure_ascii=False, indent=2))
    else:
        print(table)


def cmd_train(args) -> int:
    data = _load(args.corpus, args)
    config = FeatureConfig(window=args.window)
    tconf = crf.TrainConfig(c1=args.c1, c2=args.c2, max_iterations=args.max_iterations,
                            tolerance=args.tolerance, lbfgs_memory=args.memory)
    start = time.perf_counter()
    model, report = crf.train(data, config, tconf, _embeddings(args.embeddings))
    elapsed = time.perf_counter() - start
    crf.save_model_file(model, args.model)
    payload = {"iterations": report.iterations, "converged": report.converged,
               "message": report.message, "active_features": report.active_features,
               "attributes": report.n_attributes, "final_objective": report.objective_trace[-1],
               "seconds": round(elapsed, 2), "model": str(args.model)}
    table = "\n".join(f"{k:<18}{v}" for k, v in payload.items())
    _emit(args, payload, table)
    return 0


def cmd_tag(args) -> int:
    try:
        model = crf.load_model_file(args.model)
    except OSError as exc:
        raise DataError(f"cannot read {args.model}: {exc.strerror}") from exc
    except crf.ModelFormatError as exc:
        raise DataError(f"{args.model}: {exc}") from exc
    emb = _embeddings(args.embeddings)
    if args.pos:
        data = _load(args.input, args)
        tagged = crf.tag_dataset(model, data, emb)
    else:
        with open(args.input, "rb") as f:
            sentences = corpus.read_tokens(f)
        tags = crf.tag(model, sentences, emb)
        tagged = corpus.Dataset([corpus.LabeledSentence(s, t) for s, t in zip(sentences, tags)])
    out = corpus.write_conll(tagged, _schema(args))
    if args.output:
        Path(args.output).write_bytes(out)
    else:
        sys.stdout.write(out.decode("utf-8"))
    return 0


def cmd_evaluate(args) -> int:
    gold = _load(args.gold, args)
    mode = RepairMode(args.repair)
    if args.runs is not None and args.runs != len(args.pred):
        raise UsageError(f"--runs {args.runs} given but {len(args.pred)} prediction files")
    reports = []
    for path in args.pred:
        pred = _load(path, args)
        try:
            reports.append(evaluation.evaluate(gold, pred, mode))
        except evaluation.AlignmentError as exc:
            raise DataError(f"{path}: {exc}") from exc
    if len(reports) == 1:
        _emit(args, reports[0].to_dict(), reports[0].format_table())
    else:
        agg = evaluation.aggregate_runs(reports)
        payload = agg.to_dict()
        payload["per_run"] = [r.to_dict() for r in reports]
        _emit(args, payload, agg.format_table())
    return 0


def cmd_stats(args) -> int:
    reference = _load(args.reference, args) if args.reference else None
    rows = []
    datasets = [_load(p, args) for p in args.corpus]
    for d in datasets:
        try:
            rows.append((d.name, corpus.corpus_stats(d, reference)))
        except ValueError as exc:
            raise DataError(f"{d.name}: {exc}") from exc
    payload = {"splits": {name: s.to_dict() for name, s in rows}}
    if len(rows) > 1:
        total = corpus.corpus_stats(corpus.concat(datasets), reference)
        summed = sum(s.unique_borrowing_count for _, s in rows)
        payload["total"] = total.to_dict()
        payload["total"]["unique"] = summed
        payload["total"]["unique_distinct"] = total.unique_borrowing_count
        rows.append(("Total", total))
    lines = [f"{'Set':<14}{'Tokens':>10}{'ENG':>8}{'OTHER':>8}{'Unique':>8}"
             f"{'per 1000':>10}{'OOV uniq':>10}{'OOV span':>10}"]
    for name, s in rows:
        unique = payload["total"]["unique"] if name == "Total" else s.unique_borrowing_count
        pct = lambda v: "-" if v is None else f"{100 * v:.1f}%"
        lines.append(f"{name:<14}{s.token_count:>10,}{s.span_count_per_type[corpus.BorrowingType.ENG]:>8,}"
                     f"{s.span_count_per_type[corpus.BorrowingType.OTHER]:>8,}{unique:>8,}"
                     f"{s.density_per_1000:>10.2f}{pct(s.oov_unique_rate):>10}{pct(s.oov_span_rate):>10}")
    _emit(args, payload, "\n".join(lines))
    return 0


def cmd_select(args) -> int:
    wordlist = corpus.read_wordlist(args.wordlist) if args.wordlist else None
    vocab = corpus.vocabulary(_load(args.training, args)) if args.training else None
    model = crf.load_model_file(args.model) if args.model else None
    resources = SelectionResources(wordlist, vocab, model, _embeddings(args.embeddings),
                                   metadata={"wordlist": args.wordlist})
    with open(args.input, "rb") as f:
        articles = read_articles(f)
    if args.articles:
        selected = select_articles(articles, resources, args.threshold)
        payload = {"selected": selected, "total": len(articles), "count": len(selected),
                   "threshold": args.threshold, "wordlist": args.wordlist}
    else:
        sentences = [s for _, sents in articles for s in sents]
        reports = [detect_candidates(s, resources) for s in sentences]
        selected = [i for i, r in enumerate(reports) if r.count]
        payload = {"selected": selected, "total": len(sentences), "count": len(selected),
                   "candidates": sum(r.count for r in reports), "wordlist": args.wordlist}
    table = "\n".join(map(str, selected)) + ("\n" if selected else "")
    table += f"# selected {len(selected)} of {payload['total']}"
    _emit(args, payload, table)
    return 0


def cmd_compare(args) -> int:
    gold = _load(args.gold, args)
    preds = [_load(p, args) for p in args.pred]
    lexicon = corpus.read_wordlist(args.lexicon) if args.lexicon else frozenset()
    try:
        matrix = align_outputs(gold, preds, [Path(p).stem for p in args.pred])
    except evaluation.AlignmentError as exc:
        raise DataError(str(exc)) from exc
    report = analysis_report(matrix, lexicon)
    _emit(args, report, format_report(report))
    return 0


def cmd_kappa(args) -> int:
    a, b = _load(args.a, args), _load(args.b, args)
    try:
        k = evaluation.dataset_kappa(a, b)
    except evaluation.AlignmentError as exc:
        raise DataError(str(exc)) from exc
    _emit(args, {"kappa": k, "tokens": a.token_count}, f"kappa {k:.4f} over {a.token_count} tokens")
    return 0


def _scores(path) -> list[float]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from exc
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.strip():
            try:
                out.append(float(line))
            except ValueError:
                raise DataError(f"{path}: not a number at line {lineno}") from None
    if not out:
        raise DataError(f"{path}: no scores")
    return out


def cmd_significance(args) -> int:
    a, b = _scores(args.a), _scores(args.b)
    w, p = evaluation.wilcoxon_rank_sum(a, b)
    _emit(args, {"statistic": w, "p": p, "n_a": len(a), "n_b": len(b)},
          f"rank sum {w:g}  p = {p:.4g}  (n = {len(a)}, {len(b)})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lexborrow", description="Borrowing detection toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    common = _Parser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--pos", action="store_true", help="files have a token/POS/tag layout")
    common.add_argument("--delimiter", choices=["tab", "whitespace"], default="tab")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", parents=[common], help="train a CRF model")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", required=True, help="output model file")
    p.add_argument("--embeddings")
    p.add_argument("--window", type=int, default=2)
    p.add_argument("--c1", type=float, default=0.05)
    p.add_argument("--c2", type=float, default=0.01)
    p.add_argument("--max-iterations", type=int, default=200)
    p.add_argument("--tolerance", type=float, default=1e-5)
    p.add_argument("--memory", type=int, default=6)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("tag", parents=[common], help="tag tokenized text")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True, help="token-per-line file")
    p.add_argument("--output")
    p.add_argument("--embeddings")
    p.set_defaults(func=cmd_tag)

    p = sub.add_parser("evaluate", parents=[common], help="span-exact evaluation")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True, nargs="+")
    p.add_argument("--runs", type=int, help="expected number of prediction files")
    p.add_argument("--repair", choices=[m.value for m in RepairMode], default="conlleval")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("stats", parents=[common], help="corpus statistics")
    p.add_argument("--corpus", required=True, nargs="+")
    p.add_argument("--reference", help="training split for OOV rates")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("select", parents=[common], help="select sentences or articles")
    p.add_argument("--input", required=True,
                   help="one tokenized sentence per line, '# article: ID' headers")
    p.add_argument("--wordlist")
    p.add_argument("--training", help="training corpus supplying the known vocabulary")
    p.add_argument("--model")
    p.add_argument("--embeddings")
    p.add_argument("--articles", action="store_true", help="select articles instead of sentences")
    p.add_argument("--threshold", type=int, default=5)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("compare", parents=[common], help="cross-model error analysis")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True, nargs="+")
    p.add_argument("--lexicon", help="Spanish wordlist for homograph detection")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("kappa", parents=[common], help="Cohen's kappa between annotations")
    p.add_argument("a")
    p.add_argument("b")
    p.set_defaults(func=cmd_kappa)

    p = sub.add_parser("significance", parents=[common], help="Wilcoxon rank-sum test")
    p.add_argument("a", help="file with one score per line")
    p.add_argument("b")
    p.set_defaults(func=cmd_significance)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"lexborrow: error: {exc}", file=sys.stderr)
        return 1
    except (DataError, ParseError, crf.ModelFormatError, crf.TrainingError, ValueError) as exc:
        print(f"lexborrow: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"lexborrow: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
