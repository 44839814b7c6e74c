"""Output-error detection and judge-score parsing on crafted outputs.

    python demos/demo_quality_control.py
"""

from hteb import qc
from hteb.langid import HeuristicLanguageIdentifier
from hteb.transforms import Transformation

CASES = [
    ("verbatim echo", "Hello World", "hello world", Transformation.PARAPHRASING, "English"),
    ("refusal ellipsis", "A sentence about life.", "...", Transformation.PARAPHRASING, "English"),
    ("structured output", "The cat sat.", '{"text": "the cat"}', Transformation.PARAPHRASING, "English"),
    ("leaked reasoning", "The cat sat.", "Let me think about this. The cat sat down.", Transformation.PARAPHRASING, "English"),
    ("instruction prefix", "The cat sat.", "Translated text: el gato", Transformation.TRANSLATION, "Spanish"),
    ("stayed in English", "The cat sat on the mat.", "The cat is sitting on the mat now.", Transformation.TRANSLATION, "Spanish"),
    ("summary grew", "The cat sat down.", "The very large cat sat down on the warm mat.", Transformation.SUMMARISATION, "English"),
    ("clean paraphrase", "The cat sat on the mat.", "A cat rested on the mat.", Transformation.PARAPHRASING, "English"),
]


def main():
    identifier = HeuristicLanguageIdentifier()
    flags_list = []
    print(f"{'case':<20} {'flags'}")
    print("-" * 60)
    for name, original, output, transformation, lang in CASES:
        flags = qc.classify_errors(original, output, transformation, lang, identifier)
        flags_list.append(flags)
        print(f"{name:<20} {', '.join(flags.names()) or '-'}")

    report = qc.error_report(flags_list)
    print(f"\ntotal error rate: {report.total:.1f}% "
          "(each sample counted at most once, flags are not mutually exclusive)")
    print("per type:", {k: round(v, 1) for k, v in report.rates.items() if v})

    print("\njudge-score parsing (last standalone integer in 1-5):")
    for response in ("Score: 4 because the meaning is intact", "I'd say\n5", "no rating given"):
        print(f"  {response!r} -> {qc.parse_judge_score(response)}")


if __name__ == "__main__":
    main()
