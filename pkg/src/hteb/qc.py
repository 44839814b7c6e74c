"""Transformation quality control.

Ten output-error detectors, per-generator error rates, and the crossover
judge evaluation used to pick a transformation model: every candidate
generator also judges every generator's outputs, and candidates are
compared with paired bootstrap tests on per-sample mean scores.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, fields
from typing import Optional, Sequence, Union

import numpy as np

from .errors import EmptyInput, LengthMismatch, TooFew
from .gateway import ChatRequest, Gateway
from .langid import LanguageIdentifier
from .transforms import Transformation, TransformationSpec

# Flag order is the reporting order.
ERROR_TYPES = (
    "identical",
    "empty",
    "ellipsis",
    "json_fragment",
    "reasoning_leak",
    "prefix_leak",
    "wrong_language",
    "runaway",
    "truncated",
    "summary_too_long",
)

_REASONING_SUBSTRINGS = ("here are my reasoning", "let me think")
_REASONING_LINE_RE = re.compile(r"^\s*(i'll\b|step \d+:)", re.IGNORECASE)
_INSTRUCTION_PREFIXES = (
    "translated text:",
    "paraphrased text:",
    "summary:",
    "translation:",
    "paraphrase:",
)

# Length detectors do not apply where length change is the point.
_RUNAWAY_EXEMPT = {Transformation.EXPANSION, Transformation.SUMMARISED_EXPANSION}


@dataclass
class ErrorFlags:
    """Independent output-error indicators; several may fire at once."""

    identical: bool = False
    empty: bool = False
    ellipsis: bool = False
    json_fragment: bool = False
    reasoning_leak: bool = False
    prefix_leak: bool = False
    wrong_language: bool = False
    runaway: bool = False
    truncated: bool = False
    summary_too_long: bool = False

    def any(self) -> bool:
        return any(getattr(self, f.name) for f in fields(self))

    def names(self) -> list[str]:
        return [f.name for f in fields(self) if getattr(self, f.name)]


def word_count(text: str) -> int:
    """Whitespace-delimited token count on trimmed text."""
    return len(text.strip().split())


def classify_errors(
    original: str,
    output: str,
    transformation: Union[Transformation, TransformationSpec],
    expected_lang: Optional[str] = None,
    identifier: Optional[LanguageIdentifier] = None,
) -> ErrorFlags:
    """Classify one generation against the ten output-error detectors.

    `expected_lang` is the language the output should be in: the resolved
    target for translation-family steps, the input language otherwise.
    Language checking is conservative: it only fires when the identifier
    knows the expected language and detects a different one with
    confidence at or above its threshold.
    """
    if isinstance(transformation, TransformationSpec):
        transformation = transformation.id
    flags = ErrorFlags()
    stripped = output.strip()
    in_words = word_count(original)
    out_words = word_count(output)

    flags.empty = stripped == ""
    flags.identical = bool(stripped) and stripped.casefold() == original.strip().casefold()
    flags.ellipsis = (
        bool(stripped)
        and set(stripped) <= {".", "…"}
        and ("…" in stripped or len(stripped) >= 2)
    )
    flags.json_fragment = stripped.startswith(("{", "["))

    low = output.lower()
    flags.reasoning_leak = any(marker in low for marker in _REASONING_SUBSTRINGS) or any(
        _REASONING_LINE_RE.match(line) for line in output.splitlines()
    )
    flags.prefix_leak = any(stripped.lower().startswith(p) for p in _INSTRUCTION_PREFIXES)

    if expected_lang and identifier is not None and identifier.knows(expected_lang) and stripped:
        detected, confidence = identifier.detect(output)
        flags.wrong_language = (
            detected is not None
            and confidence >= identifier.confidence_threshold
            and detected.casefold() != expected_lang.casefold()
        )

    if in_words > 0:
        if transformation not in _RUNAWAY_EXEMPT:
            flags.runaway = out_words > 5 * in_words
        summarisation_exempt = transformation is Transformation.SUMMARISATION and in_words > 3
        if not summarisation_exempt:
            flags.truncated = out_words < 0.2 * in_words
    if transformation is Transformation.SUMMARISATION:
        flags.summary_too_long = out_words > in_words

    return flags


@dataclass
class ErrorRateReport:
    """Per-type error rates in percent plus the total.

    The total counts each record at most once, so it is at most the sum
    of the per-type rates.
    """

    rates: dict[str, float]
    total: float
    n: int


def error_report(flags: Sequence[ErrorFlags]) -> ErrorRateReport:
    if not flags:
        raise EmptyInput("no records")
    n = len(flags)
    rates = {
        name: 100.0 * sum(1 for f in flags if getattr(f, name)) / n for name in ERROR_TYPES
    }
    total = 100.0 * sum(1 for f in flags if f.any()) / n
    return ErrorRateReport(rates=rates, total=total, n=n)


def shortlist_generators(total_rates: dict[str, float], k: int = 5) -> list[str]:
    """The k candidates with the lowest total error rate (stable ties)."""
    ranked = sorted(total_rates.items(), key=lambda kv: (kv[1], kv[0]))
    return [name for name, _ in ranked[:k]]


JUDGE_PROMPT_TEMPLATE = (
    "You are rating the quality of a text transformation.\n"
    "\n"
    "Transformation instruction given to the system: {task}\n"
    "\n"
    "Original text:\n"
    "{original}\n"
    "\n"
    "Rate how well the text below performs the intended transformation "
    "while preserving the meaning of the original text. Use an integer "
    "scale from 1 (very poor) to 5 (excellent). Reply with the rating as "
    "a bare integer on the last line.\n"
    "\n"
    "Transformed text:"
)

_SCORE_RE = re.compile(r"(?<![\d.])([1-5])(?![\d.])")


def parse_judge_score(response: str) -> Optional[int]:
    """Last standalone integer in [1, 5], or None."""
    matches = _SCORE_RE.findall(response)
    return int(matches[-1]) if matches else None


@dataclass
class JudgeSample:
    """One probe text with every candidate generator's output for one
    transformation."""

    sample_id: str
    transformation: Transformation
    original: str
    outputs: dict[str, str]


@dataclass
class JudgeMatrix:
    judges: list[str]
    generators: list[str]
    cell_means: dict[tuple[str, str], float]
    cell_counts: dict[tuple[str, str], int]
    column_means: dict[str, float]
    sample_ids: list[str]
    sample_means: dict[str, list[float]]
    skipped: int

    def winner(self) -> str:
        return max(self.generators, key=lambda g: (self.column_means[g], g))


def judge_crossover(
    generators: Sequence[str],
    judges: Sequence[str],
    samples: Sequence[JudgeSample],
    gateway: Gateway,
    prompt_template: str = JUDGE_PROMPT_TEMPLATE,
    max_output_tokens: int = 256,
) -> JudgeMatrix:
    """Score every generator's outputs with every judge.

    Cell (judge, generator) is the mean parsed score over all samples and
    transformations; a generator's column mean averages over judges.
    Responses without a parsable score, and empty generator outputs that
    cannot be judged at all, are skipped and counted.
    """
    for sample in samples:
        missing = [g for g in generators if g not in sample.outputs]
        if missing:
            raise EmptyInput(f"sample {sample.sample_id!r} lacks outputs for {missing}")

    sums: dict[tuple[str, str], float] = {(j, g): 0.0 for j in judges for g in generators}
    counts: dict[tuple[str, str], int] = {(j, g): 0 for j in judges for g in generators}
    per_sample: dict[tuple[str, str], list[int]] = {}
    skipped = 0

    for sample in samples:
        task = _task_description(sample.transformation)
        for generator in generators:
            output = sample.outputs[generator]
            if not output.strip():
                skipped += len(judges)
                continue
            prompt = prompt_template.format(task=task, original=sample.original)
            for judge in judges:
                request = ChatRequest(
                    model_id=judge,
                    prompt=prompt,
                    input_text=output,
                    max_output_tokens=max_output_tokens,
                    request_tag=_judge_key(judge, generator, sample, prompt, output),
                )
                response = gateway.chat_complete(request, transformation_id="judge")
                score = parse_judge_score(response)
                if score is None:
                    skipped += 1
                    continue
                sums[(judge, generator)] += score
                counts[(judge, generator)] += 1
                per_sample.setdefault((generator, sample.sample_id), []).append(score)

    cell_means = {
        key: (sums[key] / counts[key]) if counts[key] else float("nan") for key in sums
    }
    column_means = {
        g: float(np.mean([cell_means[(j, g)] for j in judges])) for g in generators
    }
    sample_ids = sorted({s.sample_id for s in samples})
    sample_means = {
        g: [
            float(np.mean(per_sample.get((g, sid), [np.nan])))
            for sid in sample_ids
        ]
        for g in generators
    }
    return JudgeMatrix(
        judges=list(judges),
        generators=list(generators),
        cell_means=cell_means,
        cell_counts=counts,
        column_means=column_means,
        sample_ids=sample_ids,
        sample_means=sample_means,
        skipped=skipped,
    )


def _judge_key(judge: str, generator: str, sample: JudgeSample, prompt: str, output: str) -> str:
    from .cache import content_key

    return content_key(judge, "judge", 0, prompt, f"{generator}\x1f{sample.sample_id}\x1f{output}", 0)


def _task_description(transformation: Transformation) -> str:
    return {
        Transformation.PARAPHRASING: "rephrase the text while keeping its meaning",
        Transformation.BACKTRANSLATION: "translate to another language and back",
        Transformation.STYLE_CHANGE: "flip the register between formal and informal",
        Transformation.EXPANSION: "expand the text while preserving its core meaning",
        Transformation.SUMMARISATION: "summarise the text while keeping the same meaning",
        Transformation.SUMMARISED_EXPANSION: "expand the text, then summarise the expansion",
        Transformation.TRANSLATION: "translate the text to a given target language",
        Transformation.CROSS_TRANSLATION: "translate the text to a given target language",
    }[transformation]


def paired_bootstrap_compare(
    a: Sequence[float],
    b: Sequence[float],
    n_boot: int = 10_000,
    seed: int = 0,
) -> float:
    """Two-sided percentile bootstrap p-value for the mean paired
    difference between two per-sample score vectors.

    Sample indices are resampled with replacement n_boot times;
    p = 2 * min(share(mean <= 0), share(mean >= 0)), floored at 1/n_boot
    and capped at 1.
    """
    a = np.asarray(list(a), dtype=float)
    b = np.asarray(list(b), dtype=float)
    if len(a) != len(b):
        raise LengthMismatch("paired score vectors must have equal length")
    if len(a) < 2:
        raise TooFew("need at least two paired observations")
    if not (np.isfinite(a).all() and np.isfinite(b).all()):
        raise ValueError("paired score vectors must be finite")
    diffs = a - b
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, len(diffs), size=(n_boot, len(diffs)))
    means = diffs[idx].mean(axis=1)
    share_le = int((means <= 0).sum())
    share_ge = int((means >= 0).sum())
    p = 2.0 * min(share_le, share_ge) / n_boot
    return float(min(1.0, max(p, 1.0 / n_boot)))
