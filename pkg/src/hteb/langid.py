"""Heuristic language identification for transformation quality control.

Deliberately conservative: the detector reports a confidence, and callers
must treat anything below the configured threshold as "unknown" rather
than as evidence of a wrong-language output. Coverage is limited to the
translation pool languages plus the scripts and high-frequency function
words of the benchmark languages; anything else detects as unknown.
"""

from __future__ import annotations

import re
import unicodedata
from typing import Optional, Protocol

_WORD_RE = re.compile(r"[^\W\d_]+", re.UNICODE)

# High-frequency function words per Latin-script language.
STOPWORDS: dict[str, frozenset[str]] = {
    "English": frozenset(
        "the and is are was were of to in that it for on with as this at by "
        "from not be have has a an he she they you his her its".split()
    ),
    "Spanish": frozenset(
        "el la los las de que y en un una es del se por con para no su al lo "
        "como pero esta está más y".split()
    ),
    "French": frozenset(
        "le la les de des du et en un une est que qui dans pour pas ce sur au "
        "aux avec ne se il elle".split()
    ),
    "German": frozenset(
        "der die das und ist nicht ein eine zu den dem von mit auf für im sich "
        "des auch es an als sind wird einen einem".split()
    ),
    "Turkish": frozenset(
        "bir ve bu için ile de da ne gibi çok daha ama olarak var olan en "
        "sonra kadar değil mi bu şu o".split()
    ),
    "Italian": frozenset(
        "il la le di che e un una per non in sono con si del della da al è "
        "più nel alla".split()
    ),
    "Dutch": frozenset(
        "de het een en van is dat op te met voor niet zijn aan er ook als bij "
        "maar om dit".split()
    ),
    "Danish": frozenset(
        "og er det en et at den til på med for som der af ikke har de om kan "
        "var jeg".split()
    ),
    "Polish": frozenset(
        "i w na z do że się nie jest to jak po co tak za od ale czy przez być "
        "oraz".split()
    ),
    "Indonesian": frozenset(
        "yang dan di itu dengan untuk tidak ini dari dalam akan pada juga "
        "saya ke karena ada mereka sudah atau".split()
    ),
}

# Characters that only (or overwhelmingly) occur in one pool language.
_DIACRITIC_HINTS: dict[str, str] = {
    "Turkish": "ğışİ",
    "German": "ß",
    "Spanish": "ñ¿¡",
    "French": "çœ",
    "Polish": "łążźćśń",
    "Danish": "æøå",
}

_SCRIPT_LANGS = {
    "ARABIC": "Arabic",
    "HANGUL": "Korean",
    "HIRAGANA": "Japanese",
    "KATAKANA": "Japanese",
    "DEVANAGARI": "Hindi",
    "CJK": "Chinese",
    "ETHIOPIC": "Amharic",
}


class LanguageIdentifier(Protocol):
    """Pluggable language detector."""

    confidence_threshold: float

    def detect(self, text: str) -> tuple[Optional[str], float]:
        """Return (language name, confidence in [0, 1]); (None, 0) if unknown."""
        ...

    def knows(self, language: str) -> bool:
        ...


def _script_of(char: str) -> Optional[str]:
    try:
        name = unicodedata.name(char)
    except ValueError:
        return None
    for key in ("HIRAGANA", "KATAKANA", "HANGUL", "ARABIC", "DEVANAGARI", "ETHIOPIC"):
        if key in name:
            return key
    if "CJK" in name:
        return "CJK"
    if "LATIN" in name:
        return "LATIN"
    return None


class HeuristicLanguageIdentifier:
    """Character-script plus stopword language detector.

    Non-Latin scripts are identified by character ranges; Latin-script
    languages by stopword hits with diacritics as tie-breakers.
    Confidence is the winning hit share among tokens, halved when the
    winner does not lead strictly.
    """

    def __init__(self, confidence_threshold: float = 0.2):
        self.confidence_threshold = confidence_threshold

    def knows(self, language: str) -> bool:
        return language in STOPWORDS or language in set(_SCRIPT_LANGS.values())

    def detect(self, text: str) -> tuple[Optional[str], float]:
        text = text.strip()
        if not text:
            return None, 0.0

        letters = [c for c in text if c.isalpha()]
        if not letters:
            return None, 0.0
        script_counts: dict[str, int] = {}
        for c in letters:
            script = _script_of(c)
            if script:
                script_counts[script] = script_counts.get(script, 0) + 1
        total_letters = sum(script_counts.values())
        if total_letters == 0:
            return None, 0.0
        # Kana presence dominates CJK: mixed Japanese text contains kanji.
        if script_counts.get("HIRAGANA", 0) + script_counts.get("KATAKANA", 0) > 0:
            frac = (
                script_counts.get("HIRAGANA", 0)
                + script_counts.get("KATAKANA", 0)
                + script_counts.get("CJK", 0)
            ) / total_letters
            if frac > 0.5:
                return "Japanese", frac
        for script, lang in _SCRIPT_LANGS.items():
            frac = script_counts.get(script, 0) / total_letters
            if frac > 0.5:
                return lang, frac

        tokens = [t.lower() for t in _WORD_RE.findall(text)]
        if not tokens:
            return None, 0.0
        hits = {lang: sum(1 for t in tokens if t in words) for lang, words in STOPWORDS.items()}
        for lang, chars in _DIACRITIC_HINTS.items():
            hits[lang] = hits.get(lang, 0) + sum(1 for c in text if c in chars)
        ranked = sorted(hits.items(), key=lambda kv: (-kv[1], kv[0]))
        best_lang, best = ranked[0]
        runner = ranked[1][1] if len(ranked) > 1 else 0
        if best < 2:
            return None, 0.0
        confidence = min(1.0, best / len(tokens))
        if best == runner:
            confidence /= 2.0
        return best_lang, confidence
