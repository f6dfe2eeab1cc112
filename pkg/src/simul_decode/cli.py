"""Command-line front end: ``simul-decode decode|sweep|bench``."""
from __future__ import annotations

import argparse
import csv
import itertools
import os
import random
import statistics
import sys
import time
from concurrent.futures import ThreadPoolExecutor

from .core import EOS_ID, PolicyContractError, SimulDecodeError, VocabularyError
from .metrics import CSV_COLUMNS, corpus_bleu, sequence_logprob, trace_latency
from .policy import Schedule, ThresholdAdaptive, WaitK, load_schedule
from .sbs import SbsConfig, sbs_step, simul_decode
from .scorer import HashModel, TabularModel, available_backends, load_tabular_model

EX_OK = 0
EX_TOKEN = 2
EX_POLICY = 3
EX_USAGE = 64
EX_DATAERR = 65

MODES = {
    # cli name: (commit mode, whether --beam applies)
    "greedy": ("greedy", False),
    "beam": ("greedy", True),
    "sbs": ("sbs", True),
    "chunk-beam": ("chunk_beam", True),
    "chunk-sbs": ("chunk_sbs", True),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EX_USAGE)


class TokenInputError(Exception):
    def __init__(self, line, column, token):
        super().__init__(f"line {line}, column {column}: unknown token {token!r}")


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _str_list(text):
    return [x.strip() for x in text.split(",") if x.strip()]


def _add_model_args(p):
    g = p.add_argument_group("model")
    g.add_argument("--model", help="tabular model file")
    g.add_argument("--hash-seed", type=int, help="use a hash model with this seed "
                   "(default from SIMUL_DECODE_SEED)")
    g.add_argument("--vocab", type=int, default=8, help="hash model target vocab size")
    g.add_argument("--alpha", type=float, default=1.0, help="hash model sharpness")
    g.add_argument("--eos-weight", type=float, default=1.0)
    g.add_argument("--backend", choices=available_backends(), help="hash kernel backend")


def _add_decode_args(p):
    p.add_argument("--policy", choices=("wait-k", "schedule", "threshold"), default="wait-k")
    p.add_argument("--schedule", help="READ/WRITE schedule file for --policy schedule")
    p.add_argument("--rho", type=float, default=-1.0, help="threshold policy log-prob cut-off")
    p.add_argument("--allow-early-eos", action="store_true")
    p.add_argument("--max-len-ratio", type=float, default=2.0)
    p.add_argument("--max-len-offset", type=int, default=5)
    p.add_argument("--length-reward", type=float, default=0.0)
    p.add_argument("--input", default="-", help="source sentences, one per line ('-' = stdin)")


def build_parser():
    parser = _Parser(prog="simul-decode", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = sub.add_parser("decode", help="decode source sentences with a simultaneous policy")
    _add_model_args(d)
    _add_decode_args(d)
    d.add_argument("--k", type=int, default=3)
    d.add_argument("--mode", choices=tuple(MODES), default="sbs")
    d.add_argument("--beam", type=int, default=5)
    d.add_argument("--window", type=int, default=2)
    d.add_argument("--trace", help="write the decode trace (JSON lines) here")
    d.add_argument("--output", default="-")
    d.add_argument("--jobs", type=int, default=1, help="sentences decoded concurrently")

    s = sub.add_parser("sweep", help="metrics CSV over a (k, beam, window, mode) grid")
    _add_model_args(s)
    _add_decode_args(s)
    s.add_argument("--k-list", type=_int_list, default=[3])
    s.add_argument("--beam-list", type=_int_list, default=[5])
    s.add_argument("--window-list", type=_int_list, default=[2])
    s.add_argument("--mode-list", type=_str_list, default=["sbs"])
    s.add_argument("--refs", help="reference translations, one per source line")
    s.add_argument("--instances", type=int, default=20,
                   help="hash models: number of seeded instances (seed, seed+1, ...)")
    s.add_argument("--src-len", type=int, default=6, help="hash models: source length")
    s.add_argument("--csv", default="-")
    s.add_argument("--trace-dir", help="write one trace file per configuration")
    s.add_argument("--timing", action="store_true",
                   help="fill tokens_per_sec (makes the CSV non-reproducible)")

    b = sub.add_parser("bench", help="per-token latency of sbs_step on a hash model")
    b.add_argument("--vocab", type=int, default=1000)
    b.add_argument("--beam", type=int, default=10)
    b.add_argument("--window", type=int, default=5)
    b.add_argument("--steps", type=int, default=50)
    b.add_argument("--src-len", type=int, default=10)
    b.add_argument("--repeat", type=int, default=3)
    b.add_argument("--hash-seed", type=int)
    b.add_argument("--alpha", type=float, default=1.0)
    b.add_argument("--backend", choices=available_backends() + ["all"], default=None)
    b.add_argument("--csv", help="append a tokens_per_sec row to this CSV")
    return parser


# --- helpers ---------------------------------------------------------------


def _hash_seed(args):
    if args.hash_seed is not None:
        return args.hash_seed
    env = os.environ.get("SIMUL_DECODE_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"SIMUL_DECODE_SEED must be an integer, got {env!r}")
    return None


def load_model(args, seed_offset=0):
    if args.model:
        return load_tabular_model(args.model)
    seed = _hash_seed(args)
    if seed is None:
        raise UsageError("one of --model or --hash-seed is required")
    kw = {"backend": args.backend} if args.backend else {}
    return HashModel(seed + seed_offset, args.vocab, args.alpha, args.eos_weight, **kw)


def encode_line(model, line, lineno):
    """Source token ids for one input line; raises TokenInputError on unknown tokens."""
    ids = []
    col = 0
    for tok in line.split():
        col = line.index(tok, col)
        if isinstance(model, TabularModel):
            if tok not in model.src_vocab:
                raise TokenInputError(lineno, col + 1, tok)
            ids.append(model.src_vocab.id(tok))
        else:
            if not tok.isdigit():
                raise TokenInputError(lineno, col + 1, tok)
            ids.append(int(tok))
        col += len(tok)
    return ids


def render_output(model, ids):
    ids = [t for t in ids if t != EOS_ID]
    if isinstance(model, TabularModel):
        return " ".join(model.tgt_vocab.decode(ids))
    return " ".join(map(str, ids))


def make_config(args, mode, b, w):
    commit_mode, uses_beam = MODES[mode]
    return SbsConfig(b=b if uses_beam else 1, w=w, allow_early_eos=args.allow_early_eos,
                     commit_mode=commit_mode, max_len_ratio=args.max_len_ratio,
                     max_len_offset=args.max_len_offset, length_reward=args.length_reward)


def make_policy_factory(args, model, k):
    if args.policy == "wait-k":
        if k < 1:
            raise UsageError("--k must be >= 1")
        return lambda: WaitK(k)
    if args.policy == "schedule":
        if not args.schedule:
            raise UsageError("--policy schedule needs --schedule")
        actions = load_schedule(args.schedule)
        return lambda: Schedule(actions)
    return lambda: ThresholdAdaptive(model, args.rho)


def _read_lines(path):
    if path == "-":
        return sys.stdin.read().splitlines()
    with open(path, encoding="utf-8") as fh:
        return fh.read().splitlines()


def _open_out(path):
    if path == "-":
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline=""), True


# --- commands --------------------------------------------------------------


def cmd_decode(args):
    model = load_model(args)
    cfg = make_config(args, args.mode, args.beam, args.window)
    new_policy = make_policy_factory(args, model, args.k)
    sources = [encode_line(model, line, i) for i, line in enumerate(_read_lines(args.input), 1)]

    def run(src):
        return simul_decode(model, src, new_policy(), cfg) if src else None

    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        traces = list(pool.map(run, sources))

    out, close = _open_out(args.output)
    try:
        for tr in traces:
            out.write((render_output(model, tr.output) if tr else "") + "\n")
    finally:
        if close:
            out.close()
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            for tr in traces:
                if tr:
                    fh.write(tr.dumps())
    return EX_OK


def _sweep_instances(args):
    """(model, source ids, reference tokens or None) for every sweep instance."""
    if args.model or args.refs:
        model = load_model(args)
        lines = _read_lines(args.input)
        refs = _read_lines(args.refs) if args.refs else [None] * len(lines)
        if len(refs) != len(lines):
            raise UsageError("--refs must have one line per source line")
        return [(model, encode_line(model, line, i), ref.split() if ref is not None else None)
                for i, (line, ref) in enumerate(zip(lines, refs), 1) if line.strip()]
    if _hash_seed(args) is None:
        raise UsageError("one of --model or --hash-seed is required")
    out = []
    for i in range(args.instances):
        model = load_model(args, seed_offset=i)
        rng = random.Random(model.seed)
        src = [rng.randrange(1, max(2, args.vocab)) for _ in range(args.src_len)]
        out.append((model, src, None))
    return out


def _fmt(x):
    return "" if x is None else f"{x:.6f}"


def cmd_sweep(args):
    instances = _sweep_instances(args)
    for mode in args.mode_list:
        if mode not in MODES:
            raise UsageError(f"unknown mode {mode!r}; choose from {', '.join(MODES)}")
    ks = args.k_list if args.policy == "wait-k" else [None]
    rows = []
    seen = set()
    for k, b, w, mode in itertools.product(ks, args.beam_list, args.window_list, args.mode_list):
        cfg = make_config(args, mode, b, w)
        # greedy ignores --beam, so several grid points can collapse to one run
        if (k, cfg.b, w, mode) in seen:
            continue
        seen.add((k, cfg.b, w, mode))
        als, cws, logps, hyps, refs = [], [], [], [], []
        traces = []
        n_tokens = 0
        start = time.perf_counter()
        for model, src, ref in instances:
            tr = simul_decode(model, src, make_policy_factory(args, model, k or 1)(), cfg)
            traces.append(tr)
            al, cw = trace_latency(tr)
            als.append(al)
            cws.append(cw)
            logps.append(sequence_logprob(model, src, tr.output))
            n_tokens += len(tr.output)
            if ref is not None:
                hyps.append(render_output(model, tr.output).split())
                refs.append([ref])
        elapsed = time.perf_counter() - start
        bleu = corpus_bleu(hyps, refs) if refs else None
        rows.append({
            "policy": args.policy, "k": "" if k is None else k, "b": cfg.b, "w": w, "mode": mode,
            "AL": _fmt(statistics.fmean(als)), "CW": _fmt(statistics.fmean(cws)),
            "BLEU": _fmt(bleu), "mean_logprob": _fmt(statistics.fmean(logps)),
            "tokens_per_sec": _fmt(n_tokens / elapsed) if args.timing else "",
        })
        if args.trace_dir:
            os.makedirs(args.trace_dir, exist_ok=True)
            name = f"{args.policy}_k{k if k is not None else '-'}_b{cfg.b}_w{w}_{mode}.jsonl"
            with open(os.path.join(args.trace_dir, name), "w", encoding="utf-8") as fh:
                for tr in traces:
                    fh.write(tr.dumps())

    out, close = _open_out(args.csv)
    try:
        writer = csv.DictWriter(out, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if close:
            out.close()
    return EX_OK


def bench_sbs(vocab, beam, window, steps, src_len=10, seed=0, alpha=1.0, backend=None, repeat=3):
    """Time successive ``sbs_step`` commits; returns per-token latencies (seconds) per run."""
    kw = {"backend": backend} if backend else {}
    model = HashModel(seed, vocab, alpha, **kw)
    rng = random.Random(seed)
    src = [rng.randrange(1, vocab) for _ in range(src_len)]
    cfg = SbsConfig(b=beam, w=window)
    runs = []
    for _ in range(repeat):
        committed = []
        times = []
        for _ in range(steps):
            t0 = time.perf_counter()
            tok, _, _ = sbs_step(model, src, committed, cfg)
            times.append(time.perf_counter() - t0)
            committed.append(tok)
        runs.append(times)
    return runs


def _percentile(xs, q):
    xs = sorted(xs)
    return xs[min(len(xs) - 1, int(round(q * (len(xs) - 1))))]


def cmd_bench(args):
    seed = _hash_seed(args) or 0
    backends = available_backends() if args.backend == "all" else [args.backend]
    for backend in backends:
        runs = bench_sbs(args.vocab, args.beam, args.window, args.steps, args.src_len, seed,
                         args.alpha, backend, args.repeat)
        flat = [t for run in runs for t in run]
        median = statistics.median(flat)
        tps = 1.0 / median
        label = backend or HashModel(seed, 2).backend
        print(f"backend={label} vocab={args.vocab} b={args.beam} w={args.window} "
              f"tokens/sec={tps:.1f} p50={median * 1e3:.3f}ms "
              f"p90={_percentile(flat, 0.9) * 1e3:.3f}ms p99={_percentile(flat, 0.99) * 1e3:.3f}ms")
        if args.csv:
            new = not os.path.exists(args.csv) or os.path.getsize(args.csv) == 0
            with open(args.csv, "a", encoding="utf-8", newline="") as fh:
                writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
                if new:
                    writer.writeheader()
                writer.writerow({"policy": f"bench-{label}", "k": "", "b": args.beam,
                                 "w": args.window, "mode": "sbs", "AL": "", "CW": "", "BLEU": "",
                                 "mean_logprob": "", "tokens_per_sec": f"{tps:.1f}"})
    return EX_OK


COMMANDS = {"decode": cmd_decode, "sweep": cmd_sweep, "bench": cmd_bench}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"simul-decode: error: {exc}", file=sys.stderr)
        return EX_USAGE
    except TokenInputError as exc:
        print(f"simul-decode: {exc}", file=sys.stderr)
        return EX_TOKEN
    except VocabularyError as exc:
        print(f"simul-decode: {exc}", file=sys.stderr)
        return EX_DATAERR
    except PolicyContractError as exc:
        print(f"simul-decode: policy contract violation: {exc}", file=sys.stderr)
        return EX_POLICY
    except (SimulDecodeError, OSError) as exc:
        print(f"simul-decode: {exc}", file=sys.stderr)
        return EX_DATAERR


if __name__ == "__main__":
    sys.exit(main())
