"""Command-line pipelines: corpus synthesis, triplet building, training,
generation, evaluation, noise injection, and the HTTP server.

Every command prints a one-line JSON summary on success.  Exit codes:
0 success, 1 usage error, 2 data or validation error, 3 runtime failure.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .grammar import (
    ParseFailure,
    PcfgError,
    SampleError,
    gen_paraphrase_corpus,
    inject_label_noise,
    load_builtin_grammar,
    load_pcfg,
    read_corpus,
    resolve_transforms,
    write_corpus,
)
from .metrics import (
    MetricConfig,
    MetricError,
    beam_diversity,
    bleu,
    d_lex,
    d_syn,
    ibleu,
    interp_report,
)
from .model import (
    ModelError,
    NeuralConfig,
    load_model,
    save_model,
    train_count,
    train_neural,
)
from .search import (
    SearchConfig,
    SearchError,
    greedy_decode,
    induce_tree,
    read_trace_line,
    structural_beam_search,
    write_trace_line,
)
from .tree import (
    TreeError,
    normalize,
    parse_template,
    read_trees,
    write_trees,
)
from .triplet import (
    TripletError,
    corpus_triplets,
    read_triplets,
    write_triplets,
)

DEFAULT_LABELS = "NP,VP,PP,S,SBAR,ADJP,ADVP"

_DATA_ERRORS = (
    TreeError,
    PcfgError,
    TripletError,
    ModelError,
    MetricError,
    ParseFailure,
    FileNotFoundError,
    ValueError,
    json.JSONDecodeError,
)
_RUNTIME_ERRORS = (SearchError, SampleError, RuntimeError, OSError)


def _summary(**kwargs):
    click.echo(json.dumps(kwargs, sort_keys=True))


def _labels(ctx) -> set:
    return set(ctx.obj["labels"].split(","))


def _seed(ctx) -> int:
    seed = ctx.obj["seed"]
    if seed is None:
        raise click.UsageError("this command is stochastic; pass --seed")
    return seed


def _load_grammar(spec: str):
    path = Path(spec)
    if path.exists():
        return load_pcfg(path.read_text())
    return load_builtin_grammar(spec)


def _read_sentences(path) -> list:
    return [line.split() for line in Path(path).read_text().splitlines() if line.strip()]


@click.group()
@click.option("--seed", type=int, default=None, help="Seed for all randomness.")
@click.option("--labels", default=DEFAULT_LABELS, show_default=True,
              help="Comma-separated constituent label whitelist.")
@click.option("--quiet", is_flag=True, help="Suppress progress output.")
@click.pass_context
def cli(ctx, seed, labels, quiet):
    """Syntax-guided paraphrase generation toolkit."""
    ctx.obj = {"seed": seed, "labels": labels, "quiet": quiet}


@cli.command()
@click.option("--grammar", default="toy", show_default=True,
              help="Grammar file path or builtin name.")
@click.option("--out", required=True, help="Corpus file prefix.")
@click.option("--n", type=int, required=True, help="Number of records.")
@click.option("--transforms", default="identity,embed_report,adverbify,question",
              show_default=True)
@click.option("--mode", type=click.Choice(["choice", "all"]), default="choice",
              show_default=True)
@click.option("--max-depth", type=int, default=12, show_default=True)
@click.option("--distinct-sources", is_flag=True)
@click.pass_context
def synth(ctx, grammar, out, n, transforms, mode, max_depth, distinct_sources):
    """Sample a parallel paraphrase corpus from a grammar."""
    pcfg = _load_grammar(grammar)
    corpus = gen_paraphrase_corpus(
        pcfg,
        resolve_transforms(transforms.split(",")),
        n,
        _seed(ctx),
        max_depth=max_depth,
        mode=mode,
        distinct_sources=distinct_sources,
    )
    write_corpus(corpus, out)
    _summary(command="synth", out=out, n=len(corpus))


@cli.command("build-triplets")
@click.option("--corpus", required=True, help="Corpus file prefix.")
@click.option("--out", required=True, help="Triplet file.")
@click.pass_context
def build_triplets_cmd(ctx, corpus, out):
    """Decompose corpus trees into depth-indexed training triplets."""
    triplets = corpus_triplets(read_corpus(corpus), _labels(ctx))
    Path(out).write_text(write_triplets(triplets))
    _summary(command="build-triplets", out=out, n=len(triplets))


@cli.command()
@click.option("--triplets", required=True, help="Triplet file.")
@click.option("--out", required=True, help="Model file.")
@click.option("--kind", type=click.Choice(["count", "neural"]), default="count",
              show_default=True)
@click.option("--smoothing", type=float, default=1e-6, show_default=True)
@click.option("--steps", type=int, default=2000, show_default=True)
@click.option("--width", type=int, default=64, show_default=True)
@click.option("--batch-size", type=int, default=64, show_default=True)
@click.option("--lr", type=float, default=1e-3, show_default=True)
@click.option("--log-out", default=None, help="Training metrics log file.")
@click.pass_context
def train(ctx, triplets, out, kind, smoothing, steps, width, batch_size, lr, log_out):
    """Fit a score model on a triplet file."""
    data = read_triplets(Path(triplets).read_text())
    if kind == "count":
        model = train_count(data, smoothing=smoothing)
        log_lines = []
    else:
        cfg = NeuralConfig(
            width=width, ff_width=2 * width, steps=steps,
            batch_size=batch_size, lr=lr, seed=_seed(ctx),
        )
        quiet = ctx.obj["quiet"]
        log_lines = []

        def on_log(line):
            log_lines.append(line)
            if not quiet:
                click.echo(line, err=True)

        model = train_neural(data, cfg, log=on_log)
    if log_out:
        Path(log_out).write_text("".join(l + "\n" for l in log_lines))
    save_model(model, out)
    _summary(command="train", out=out, kind=kind, n_triplets=len(data),
             vocab_size=len(model.vocab))


@cli.command()
@click.option("--model", "model_path", required=True)
@click.option("--source", "source_path", required=True,
              help="Source sentences, one per line.")
@click.option("--out", required=True, help="Hypothesis file, one per line.")
@click.option("--mode", type=click.Choice(["greedy", "beam"]), default="beam",
              show_default=True)
@click.option("--k", type=int, default=5, show_default=True)
@click.option("--alpha", type=float, default=0.8, show_default=True)
@click.option("--gamma", type=float, default=0.32, show_default=True)
@click.option("--template", default=None, help="Bracketed label template.")
@click.option("--d-max", type=int, default=32, show_default=True)
@click.option("--t-max", type=int, default=128, show_default=True)
@click.option("--trace-out", default=None, help="Decode trace file (JSONL).")
@click.pass_context
def generate(ctx, model_path, source_path, out, mode, k, alpha, gamma, template,
             d_max, t_max, trace_out):
    """Decode paraphrases for every source sentence."""
    model = load_model(model_path)
    tpl = parse_template(template) if template else None
    config = SearchConfig(
        k=k, alpha=alpha, d_max=d_max, t_max=t_max, template=tpl,
        gamma=gamma, seed=ctx.obj["seed"] or 0,
    )
    sources = _read_sentences(source_path)
    hyp_lines = []
    trace_lines = []
    n_failed = 0
    for src in sources:
        if mode == "greedy":
            ranked = [greedy_decode(model, src, config)]
        else:
            ranked = structural_beam_search(model, src, config)
        best = ranked[0]
        if best.failed:
            n_failed += 1
        hyp_lines.append(" ".join(best.tokens()))
        trace_lines.append(write_trace_line(src, config, ranked))
    Path(out).write_text("".join(l + "\n" for l in hyp_lines))
    if trace_out:
        Path(trace_out).write_text("".join(l + "\n" for l in trace_lines))
    _summary(command="generate", out=out, mode=mode, n=len(sources),
             n_failed=n_failed)


def _trace_beams(trace_path, whitelist):
    """(tokens, induced normalized tree) per finished candidate per record."""
    beams = []
    for line in Path(trace_path).read_text().splitlines():
        if not line.strip():
            continue
        rec = read_trace_line(line)
        beam = []
        for cand in rec["candidates"]:
            if not cand.finished:
                continue
            tree = normalize(induce_tree(cand.trace), whitelist)
            beam.append((cand.tokens(), tree))
        beams.append(beam)
    return beams


@cli.command("eval")
@click.option("--hyps", required=True, help="Hypothesis file.")
@click.option("--refs", required=True, help="Reference file.")
@click.option("--srcs", default=None, help="Source file (for ibleu).")
@click.option("--hyp-trees", default=None, help="Bracketed hypothesis trees.")
@click.option("--ref-trees", default=None, help="Bracketed reference trees.")
@click.option("--traces", default=None, help="Decode traces (for beamdiv).")
@click.option("--metrics", "which", default="bleu", show_default=True,
              help="Comma-separated: bleu,ibleu,dlex,dsyn,beamdiv.")
@click.option("--r", "r_weight", type=float, default=0.7, show_default=True)
@click.option("--out", default=None, help="Report JSON file.")
@click.pass_context
def eval_cmd(ctx, hyps, refs, srcs, hyp_trees, ref_trees, traces, which,
             r_weight, out):
    """Score hypotheses against references."""
    config = MetricConfig(r=r_weight)
    hyp_toks = _read_sentences(hyps)
    ref_toks = _read_sentences(refs)
    ref_sets = [[r] for r in ref_toks]
    scores: dict = {}
    for name in which.split(","):
        if name == "bleu":
            scores["bleu"] = bleu(hyp_toks, ref_sets, config)
        elif name == "ibleu":
            if not srcs:
                raise click.UsageError("ibleu needs --srcs")
            scores["ibleu"] = ibleu(
                hyp_toks, ref_sets, _read_sentences(srcs), config
            )
        elif name == "dlex":
            vals = [d_lex(h, r) for h, r in zip(hyp_toks, ref_toks)]
            scores["d_lex"] = sum(vals) / len(vals)
        elif name == "dsyn":
            if not (hyp_trees and ref_trees):
                raise click.UsageError("dsyn needs --hyp-trees and --ref-trees")
            ht = read_trees(Path(hyp_trees).read_text())
            rt = read_trees(Path(ref_trees).read_text())
            vals = [d_syn(a, b) for a, b in zip(ht, rt)]
            scores["d_syn"] = sum(vals) / len(vals)
        elif name == "beamdiv":
            if not traces:
                raise click.UsageError("beamdiv needs --traces")
            div = beam_diversity(_trace_beams(traces, _labels(ctx)), ref_toks, config)
            scores["beam_d_lex"] = div.pairwise_d_lex
            scores["beam_d_syn"] = div.pairwise_d_syn
            scores["beam_bleu"] = div.avg_bleu
        else:
            raise click.UsageError(f"unknown metric {name!r}")
    if out:
        Path(out).write_text(json.dumps(scores) + "\n")
    _summary(command="eval", **scores)


@cli.command("interp-eval")
@click.option("--traces", required=True, help="Decode traces (JSONL).")
@click.option("--grammar", default="toy", show_default=True)
@click.option("--out", default=None, help="Report JSON file.")
@click.pass_context
def interp_eval(ctx, traces, grammar, out):
    """Span agreement between induced trees and an independent re-parse."""
    pcfg = _load_grammar(grammar)
    whitelist = _labels(ctx)
    trace_list = []
    for line in Path(traces).read_text().splitlines():
        if not line.strip():
            continue
        rec = read_trace_line(line)
        finished = [c for c in rec["candidates"] if c.finished]
        if finished:
            trace_list.append(finished[0].trace)
    report = interp_report(trace_list, pcfg, whitelist)
    result = {
        "precision": report.precision,
        "recall": report.recall,
        "f1": report.f1,
        "n_traces": report.n_traces,
        "n_rejected": report.n_rejected,
    }
    if out:
        Path(out).write_text(json.dumps(result) + "\n")
    _summary(command="interp-eval", **result)


@cli.command()
@click.option("--trees", "trees_path", required=True, help="Bracketed tree file.")
@click.option("--ratio", type=float, required=True)
@click.option("--out", required=True)
@click.pass_context
def noise(ctx, trees_path, ratio, out):
    """Relabel a fraction of internal nodes with wrong whitelist labels."""
    trees = read_trees(Path(trees_path).read_text())
    noisy = inject_label_noise(trees, ratio, _labels(ctx), _seed(ctx))
    Path(out).write_text(write_trees(noisy))
    _summary(command="noise", out=out, n=len(trees), ratio=ratio)


@cli.command()
@click.option("--model", "model_path", required=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--ttl", type=float, default=1800.0, show_default=True,
              help="Session idle timeout in seconds.")
@click.pass_context
def serve(ctx, model_path, host, port, ttl):
    """Run the interactive decoding service."""
    import uvicorn

    from .service import create_app

    model = load_model(model_path)
    app = create_app(model, _labels(ctx), ttl=ttl)
    _summary(command="serve", host=host, port=port, kind=model.kind)
    uvicorn.run(app, host=host, port=port, log_level="warning")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as e:
        return e.exit_code
    except (click.UsageError, click.ClickException) as e:
        click.echo(f"error: {e.format_message()}", err=True)
        return 1
    except _RUNTIME_ERRORS as e:
        if isinstance(e, _DATA_ERRORS):
            click.echo(f"data error: {e}", err=True)
            return 2
        click.echo(f"runtime error: {e}", err=True)
        return 3
    except _DATA_ERRORS as e:
        click.echo(f"data error: {e}", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
