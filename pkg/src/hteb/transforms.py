"""The eight input transformations and their seeded application.

Each transformation is an ordered chain of one or two prompt steps with
a language-resolution policy. Target/intermediate languages are drawn
from a counter-based deterministic stream keyed on
(run seed, dataset, transformation, item index), so assignments are
independent of iteration order and parallelism.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

from .cache import content_key
from .errors import EmptyPool, MissingPlaceholder, TransportError
from .gateway import ChatRequest, Gateway

LANGUAGE_PLACEHOLDER = "{target_language}"

TRANSLATION_POOL = ["Spanish", "French", "German", "Turkish", "Arabic"]
BACKTRANSLATION_POOL = ["English", "Spanish", "French", "German", "Turkish", "Arabic"]

DEFAULT_RUN_SEEDS = (1337, 1338, 1339)


class Axis(str, Enum):
    LEXICAL_STYLISTIC = "lexical_stylistic"
    LENGTH = "length"
    LANGUAGE = "language"


class Transformation(str, Enum):
    PARAPHRASING = "paraphrasing"
    BACKTRANSLATION = "backtranslation"
    STYLE_CHANGE = "style_change"
    EXPANSION = "expansion"
    SUMMARISATION = "summarisation"
    SUMMARISED_EXPANSION = "summarised_expansion"
    TRANSLATION = "translation"
    CROSS_TRANSLATION = "cross_translation"


class LanguagePolicy(str, Enum):
    KEEP_SOURCE = "keep_source"
    BATCH_TARGET = "batch_target"
    PER_TEXT_TARGET = "per_text_target"
    INTERMEDIATE_THEN_SOURCE = "intermediate_then_source"


class LanguageRole(str, Enum):
    SOURCE = "source"
    SAMPLED_TARGET = "sampled_target"
    SAMPLED_INTERMEDIATE = "sampled_intermediate"


class SamplingScope(str, Enum):
    PER_BATCH = "per_batch"
    PER_TEXT = "per_text"


PARAPHRASING_PROMPT = (
    "Rephrase the following text while keeping its original meaning. "
    "IMPORTANT: You MUST answer in {target_language}. Do NOT translate the "
    "text to English or any other language. Only reply with the paraphrased "
    "text and only provide a single response -- no alternatives! Do not "
    "include explanations or notes."
)

STYLE_CHANGE_PROMPT = (
    "Change the style of the following text. If the text is casual or "
    "informal, rewrite it in a formal style. If the text is formal or "
    "scientific, rewrite it in a casual or informal style. Preserve the "
    "original meaning while changing only the tone, style, and vocabulary. "
    "IMPORTANT: You MUST answer in {target_language}. Do NOT translate the "
    "text to English or any other language. Only reply with the rewritten "
    "text -- no explanations or notes!"
)

EXPANSION_PROMPT = (
    "Expand the following text by adding more details, context, and "
    "elaboration while preserving the same core meaning. IMPORTANT: If the "
    "input is a question, your output must also be a question -- do NOT "
    "answer it. If the input is a statement, your output must also be a "
    "statement. IMPORTANT: You MUST answer in {target_language}. Do NOT "
    "translate the text to English or any other language. Use similar words "
    "and maintain the original message. Only reply with the expanded text -- "
    "no explanations or notes!"
)

SUMMARISATION_PROMPT = (
    "Your task is to SUMMARIZE the text below -- make it shorter while "
    "keeping the same meaning. DO NOT change the sentence type:\n"
    "- If input is a STATEMENT, output must be a STATEMENT\n"
    "- If input is a QUESTION, output must be a QUESTION (do NOT answer it!)\n"
    "\n"
    "Examples:\n"
    "- Statement 'I loved the movie' -> 'Enjoyed the movie' (NOT 'Did you "
    "enjoy the movie?')\n"
    "- Question 'Where is my card?' -> 'Card location?' (NOT 'Check your "
    "wallet')\n"
    "\n"
    "IMPORTANT: You MUST answer in {target_language}. Do NOT translate the "
    "text to English or any other language. Only output the summary, "
    "nothing else.\n"
    "\n"
    "Text to summarize:"
)

TRANSLATION_PROMPT = (
    "Translate the following text to {target_language}. Provide only the "
    "translation -- no explanations or notes!"
)


@dataclass(frozen=True)
class PromptStep:
    template: str
    language_role: LanguageRole

    def __post_init__(self):
        if LANGUAGE_PLACEHOLDER not in self.template:
            raise MissingPlaceholder("template lacks the {target_language} placeholder")


@dataclass(frozen=True)
class TransformationSpec:
    id: Transformation
    axis: Axis
    steps: tuple[PromptStep, ...]
    language_policy: LanguagePolicy

    def __post_init__(self):
        expected = 2 if self.id in (Transformation.BACKTRANSLATION, Transformation.SUMMARISED_EXPANSION) else 1
        if len(self.steps) != expected:
            raise ValueError(f"{self.id.value} must have exactly {expected} step(s)")


SPECS: dict[Transformation, TransformationSpec] = {
    Transformation.PARAPHRASING: TransformationSpec(
        Transformation.PARAPHRASING,
        Axis.LEXICAL_STYLISTIC,
        (PromptStep(PARAPHRASING_PROMPT, LanguageRole.SOURCE),),
        LanguagePolicy.KEEP_SOURCE,
    ),
    Transformation.BACKTRANSLATION: TransformationSpec(
        Transformation.BACKTRANSLATION,
        Axis.LEXICAL_STYLISTIC,
        (
            PromptStep(TRANSLATION_PROMPT, LanguageRole.SAMPLED_INTERMEDIATE),
            PromptStep(TRANSLATION_PROMPT, LanguageRole.SOURCE),
        ),
        LanguagePolicy.INTERMEDIATE_THEN_SOURCE,
    ),
    Transformation.STYLE_CHANGE: TransformationSpec(
        Transformation.STYLE_CHANGE,
        Axis.LEXICAL_STYLISTIC,
        (PromptStep(STYLE_CHANGE_PROMPT, LanguageRole.SOURCE),),
        LanguagePolicy.KEEP_SOURCE,
    ),
    Transformation.EXPANSION: TransformationSpec(
        Transformation.EXPANSION,
        Axis.LENGTH,
        (PromptStep(EXPANSION_PROMPT, LanguageRole.SOURCE),),
        LanguagePolicy.KEEP_SOURCE,
    ),
    Transformation.SUMMARISATION: TransformationSpec(
        Transformation.SUMMARISATION,
        Axis.LENGTH,
        (PromptStep(SUMMARISATION_PROMPT, LanguageRole.SOURCE),),
        LanguagePolicy.KEEP_SOURCE,
    ),
    Transformation.SUMMARISED_EXPANSION: TransformationSpec(
        Transformation.SUMMARISED_EXPANSION,
        Axis.LENGTH,
        (
            PromptStep(EXPANSION_PROMPT, LanguageRole.SOURCE),
            PromptStep(SUMMARISATION_PROMPT, LanguageRole.SOURCE),
        ),
        LanguagePolicy.KEEP_SOURCE,
    ),
    Transformation.TRANSLATION: TransformationSpec(
        Transformation.TRANSLATION,
        Axis.LANGUAGE,
        (PromptStep(TRANSLATION_PROMPT, LanguageRole.SAMPLED_TARGET),),
        LanguagePolicy.BATCH_TARGET,
    ),
    Transformation.CROSS_TRANSLATION: TransformationSpec(
        Transformation.CROSS_TRANSLATION,
        Axis.LANGUAGE,
        (PromptStep(TRANSLATION_PROMPT, LanguageRole.SAMPLED_TARGET),),
        LanguagePolicy.PER_TEXT_TARGET,
    ),
}

AXIS_TRANSFORMATIONS: dict[Axis, tuple[Transformation, ...]] = {
    Axis.LEXICAL_STYLISTIC: (
        Transformation.PARAPHRASING,
        Transformation.BACKTRANSLATION,
        Transformation.STYLE_CHANGE,
    ),
    Axis.LENGTH: (
        Transformation.EXPANSION,
        Transformation.SUMMARISATION,
        Transformation.SUMMARISED_EXPANSION,
    ),
    Axis.LANGUAGE: (
        Transformation.TRANSLATION,
        Transformation.CROSS_TRANSLATION,
    ),
}
# Translation and Cross-Translation share the axis with no third member;
# the Language axis is the mean of its two transformations.


@dataclass
class RunConfig:
    """Seeded execution parameters for one transformation run."""

    run_seed: int
    generator_id: str
    translation_pool: list[str] = field(default_factory=lambda: list(TRANSLATION_POOL))
    backtranslation_pool: list[str] = field(default_factory=lambda: list(BACKTRANSLATION_POOL))
    max_output_tokens: int = 2048


@dataclass
class TransformRecord:
    """Result of transforming one text field of one dataset item."""

    dataset_id: str
    item_id: str
    field_role: str
    transformation_id: str
    run_seed: int
    step_outputs: list[str]
    final_text: str
    sampled_languages: list[str]
    error: Optional[str] = None


def sample_target_language(
    source_lang: str,
    pool: Sequence[str],
    scope: SamplingScope,
    run_seed: int,
    dataset_id: str,
    transformation_id: str,
    item_index: int = 0,
) -> str:
    """Deterministically draw a target language, excluding the source.

    PER_BATCH draws depend only on (run_seed, dataset, transformation);
    PER_TEXT draws additionally on the item index. The source language is
    never returned when it appears in the pool.
    """
    allowed = [lang for lang in pool if lang.casefold() != source_lang.casefold()]
    if not allowed:
        raise EmptyPool(f"no candidate languages after excluding {source_lang!r}")
    parts = [str(run_seed), dataset_id, transformation_id, scope.value]
    if scope is SamplingScope.PER_TEXT:
        parts.append(str(item_index))
    digest = hashlib.sha256("\x1f".join(parts).encode("utf-8")).digest()
    return allowed[int.from_bytes(digest[:8], "big") % len(allowed)]


def render_prompt(step: PromptStep, language: str) -> str:
    """Substitute the target-language placeholder, changing nothing else."""
    if LANGUAGE_PLACEHOLDER not in step.template:
        raise MissingPlaceholder("template lacks the {target_language} placeholder")
    return step.template.replace(LANGUAGE_PLACEHOLDER, language)


def resolve_step_languages(
    spec: TransformationSpec,
    source_lang: str,
    cfg: RunConfig,
    dataset_id: str,
    item_index: int,
) -> list[str]:
    """Per-step language resolution under the transformation's policy."""
    if spec.language_policy is LanguagePolicy.KEEP_SOURCE:
        return [source_lang for _ in spec.steps]
    if spec.language_policy is LanguagePolicy.BATCH_TARGET:
        target = sample_target_language(
            source_lang, cfg.translation_pool, SamplingScope.PER_BATCH,
            cfg.run_seed, dataset_id, spec.id.value,
        )
        return [target for _ in spec.steps]
    if spec.language_policy is LanguagePolicy.PER_TEXT_TARGET:
        target = sample_target_language(
            source_lang, cfg.translation_pool, SamplingScope.PER_TEXT,
            cfg.run_seed, dataset_id, spec.id.value, item_index,
        )
        return [target for _ in spec.steps]
    # intermediate-then-source: step 1 samples, step 2 restores the source
    intermediate = sample_target_language(
        source_lang, cfg.backtranslation_pool, SamplingScope.PER_TEXT,
        cfg.run_seed, dataset_id, spec.id.value, item_index,
    )
    return [intermediate, source_lang]


def apply_transformation(
    text: str,
    source_lang: str,
    spec: TransformationSpec,
    cfg: RunConfig,
    gateway: Gateway,
    dataset_id: str,
    item_id: str = "",
    field_role: str = "text",
    item_index: int = 0,
) -> TransformRecord:
    """Chain the transformation's prompt steps over one text.

    Step i+1 consumes step i's output verbatim. An empty intermediate
    output short-circuits later steps (their outputs stay empty); that is
    flagged downstream, not raised. Transport failures after retries are
    captured in the record's error field.
    """
    if not text:
        raise ValueError("text must be non-empty")
    languages = resolve_step_languages(spec, source_lang, cfg, dataset_id, item_index)
    step_outputs: list[str] = []
    error: Optional[str] = None
    current = text
    for step_index, (step, language) in enumerate(zip(spec.steps, languages)):
        if not current.strip():
            step_outputs.append("")
            continue
        prompt = render_prompt(step, language)
        key = content_key(cfg.generator_id, spec.id.value, step_index, prompt, current, cfg.run_seed)
        request = ChatRequest(
            model_id=cfg.generator_id,
            prompt=prompt,
            input_text=current,
            max_output_tokens=cfg.max_output_tokens,
            seed=cfg.run_seed,
            request_tag=key,
        )
        try:
            current = gateway.chat_complete(request, transformation_id=spec.id.value)
        except TransportError as exc:
            error = str(exc)
            current = ""
        step_outputs.append(current)
    return TransformRecord(
        dataset_id=dataset_id,
        item_id=item_id,
        field_role=field_role,
        transformation_id=spec.id.value,
        run_seed=cfg.run_seed,
        step_outputs=step_outputs,
        final_text=step_outputs[-1] if step_outputs else "",
        sampled_languages=languages,
        error=error,
    )


def transform_dataset(
    dataset,
    spec: TransformationSpec,
    cfg: RunConfig,
    gateway: Gateway,
    max_workers: int = 1,
) -> "TransformedDataset":
    """Transform every evaluated text field of a dataset.

    Retrieval and reranking datasets only have their queries transformed;
    the corpus and candidate texts pass through untouched. Item ids,
    labels and relevance structure are preserved verbatim. Per-item
    failures become flagged records; the dataset is never aborted.
    """
    from .datasets import iter_transform_targets  # local import to avoid a cycle

    targets = iter_transform_targets(dataset)

    def run(target) -> TransformRecord:
        return apply_transformation(
            target.text,
            target.source_lang,
            spec,
            cfg,
            gateway,
            dataset_id=dataset.id,
            item_id=target.item_id,
            field_role=target.field_role,
            item_index=target.text_index,
        )

    if max_workers > 1 and len(targets) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            records = list(pool.map(run, targets))
    else:
        records = [run(t) for t in targets]
    return TransformedDataset(
        dataset_id=dataset.id,
        transformation_id=spec.id.value,
        run_seed=cfg.run_seed,
        records=records,
    )


@dataclass
class TransformedDataset:
    dataset_id: str
    transformation_id: str
    run_seed: int
    records: list[TransformRecord]

    def text_mapping(self) -> dict[tuple[str, str], str]:
        """(item_id, field_role) -> final transformed text."""
        return {(r.item_id, r.field_role): r.final_text for r in self.records}
