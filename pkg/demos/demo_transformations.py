"""Walk a sentence pair through all eight transformations, offline.

The mock transport synthesises deterministic stand-in generations, so
this demonstrates the pipeline mechanics (prompt rendering, seeded
language sampling, step chaining, caching) without any model endpoint.

    python demos/demo_transformations.py
"""

import tempfile

from hteb.cache import TransformationCache
from hteb.gateway import Gateway
from hteb.mock import MockTransport
from hteb.transforms import SPECS, RunConfig, Transformation, apply_transformation

SENTENCE_1 = "A man is singing and playing a guitar."
SENTENCE_2 = "A man is playing a guitar."


def main():
    with tempfile.TemporaryDirectory() as cache_dir:
        transport = MockTransport()
        gateway = Gateway(transport, cache=TransformationCache(cache_dir))
        cfg = RunConfig(run_seed=1337, generator_id="demo-generator")

        for transformation in Transformation:
            spec = SPECS[transformation]
            print(f"\n== {transformation.value}  (axis: {spec.axis.value}, "
                  f"{len(spec.steps)} step{'s' if len(spec.steps) > 1 else ''})")
            for index, text in enumerate((SENTENCE_1, SENTENCE_2)):
                record = apply_transformation(
                    text, "English", spec, cfg, gateway,
                    dataset_id="demo", item_id="pair-0",
                    field_role=f"sentence{index + 1}", item_index=index,
                )
                langs = "/".join(record.sampled_languages)
                print(f"   [{langs}] {text!r}")
                for step, out in enumerate(record.step_outputs, start=1):
                    print(f"      step {step}: {out!r}")

        print(f"\ntransport chat calls: {transport.chat_calls} "
              "(rerunning this script against a persistent cache would issue zero)")


if __name__ == "__main__":
    main()
