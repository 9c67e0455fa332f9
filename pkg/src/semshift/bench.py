"""Seeded synthetic rule bases and inputs for timing compile and transfer.

Rules: ``k`` distinct source predicates (k = 1, 2, 3 with weights 6:3:1)
drawn uniformly from a vocabulary ``s0 .. s{V-1}``, sharing one label and
one event marker, each mapped to a target predicate drawn from
``g0 .. g{V-1}``.  Every
predicate whose index is divisible by four takes a second argument.  One
rule in ten carries a context condition on another predicate.

Inputs: 15 to 20 conditions in clusters of one to three predicates sharing
a label and marker, with predicates drawn from the same vocabulary.
Generation depends only on the seed, so runs are reproducible and inputs
are identical across rule-base sizes.
"""

from __future__ import annotations

import random
import statistics
import time
from dataclasses import dataclass

from .compiler import CompiledRuleSet, compile_rules
from .rules import Direction, parse_rule_file
from .runtime import FallbackPolicy, transfer
from .vit import SemSet, Vit
from .terms import Condition, Term

DEFAULT_VOCAB = 1000


def _arity(i: int) -> int:
    return 2 if i % 4 == 0 else 1


def _pattern(prefix: str, i: int, label: str) -> str:
    args = "E, X" if _arity(i) == 2 else "E"
    return f"{label}:{prefix}{i}({args})"


def synthetic_rules(n: int, vocab: int = DEFAULT_VOCAB, seed: int = 0) -> str:
    rng = random.Random(f"rules:{seed}:{vocab}")
    out = ["module synth."]
    for j in range(n):
        k = rng.choices((1, 2, 3), weights=(6, 3, 1))[0]
        preds = rng.sample(range(vocab), k)
        lhs = ", ".join(_pattern("s", i, "L") for i in preds)
        rhs = ", ".join(_pattern("g", rng.randrange(vocab) // 4 * 4 + i % 4, "L") for i in preds)
        conds = ""
        if rng.random() < 0.1:
            ctx = rng.randrange(vocab)
            conds = f", [{_pattern('s', ctx, 'L1')}]"
        out.append(f"x{j} :: [{lhs}]{conds} <-> [{rhs}].")
    return "\n".join(out) + "\n"


def synthetic_inputs(m: int, vocab: int = DEFAULT_VOCAB, seed: int = 0, lo: int = 15, hi: int = 20) -> list[Vit]:
    rng = random.Random(f"inputs:{seed}:{vocab}")
    vits = []
    for _ in range(m):
        size = rng.randint(lo, hi)
        conds: list[Condition] = []
        cluster = 0
        while len(conds) < size:
            cluster += 1
            k = min(rng.randint(1, 3), size - len(conds))
            label, marker = Term(f"l{cluster}"), Term(f"i{cluster}")
            for i in rng.sample(range(vocab), k):
                args = (marker, Term(f"i{rng.randint(1, cluster + 1)}")) if _arity(i) == 2 else (marker,)
                conds.append(Condition(label, Term(f"s{i}", args)))
        vits.append(Vit(SemSet(conds)))
    return vits


@dataclass
class BenchReport:
    n_rules: int
    n_compiled: int
    n_inputs: int
    mean_input_len: float
    compile_seconds: float
    mean_ms: float
    median_ms: float
    p95_ms: float
    fired: int
    fallbacks: int

    def lines(self) -> list[str]:
        return [
            f"rules: {self.n_rules} generated, {self.n_compiled} compiled",
            f"compile: {self.compile_seconds:.3f} s (target < 25 s)",
            f"inputs: {self.n_inputs} of mean length {self.mean_input_len:.1f}",
            f"transfer: mean {self.mean_ms:.3f} ms, median {self.median_ms:.3f} ms, p95 {self.p95_ms:.3f} ms (target ~30 ms)",
            f"rules fired: {self.fired}, fallbacks: {self.fallbacks}",
        ]


def compile_synthetic(n: int, vocab: int = DEFAULT_VOCAB, seed: int = 0) -> tuple[CompiledRuleSet, float]:
    text = synthetic_rules(n, vocab, seed)
    t0 = time.perf_counter()
    prog = compile_rules([parse_rule_file(text, "<synthetic>")], Direction.FWD)
    return prog, time.perf_counter() - t0


def time_transfers(prog: CompiledRuleSet, inputs: list[Vit], repeats: int = 3) -> list[float]:
    """Per-input best-of-``repeats`` latency in milliseconds."""
    times = []
    for v in inputs:
        best = float("inf")
        for _ in range(repeats):
            t0 = time.perf_counter()
            transfer(v, prog, policy=FallbackPolicy.COPY)
            best = min(best, time.perf_counter() - t0)
        times.append(best * 1000)
    return times


def run_bench(n_rules: int = 1700, n_inputs: int = 200, vocab: int = DEFAULT_VOCAB, seed: int = 0, repeats: int = 3) -> BenchReport:
    prog, compile_s = compile_synthetic(n_rules, vocab, seed)
    inputs = synthetic_inputs(n_inputs, vocab, seed)
    times = time_transfers(prog, inputs, repeats)
    fired = fallbacks = 0
    for v in inputs:
        st = transfer(v, prog).stats
        fired += st.rules_fired
        fallbacks += st.fallbacks
    times_sorted = sorted(times) or [0.0]
    p95 = times_sorted[min(len(times_sorted) - 1, int(round(0.95 * (len(times_sorted) - 1))))]
    return BenchReport(
        n_rules,
        len(prog.rules),
        len(inputs),
        statistics.fmean(len(v.sem) for v in inputs) if inputs else 0.0,
        compile_s,
        statistics.fmean(times) if times else 0.0,
        statistics.median(times) if times else 0.0,
        p95,
        fired,
        fallbacks,
    )
