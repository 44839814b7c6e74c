import sys
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(Path(__file__).resolve().parent))

TOY_DATASETS = REPO_ROOT / "benchmarks" / "toy" / "datasets"


def pytest_terminal_summary(terminalreporter):
    """Print the per-criterion acceptance table when the suite ran."""
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    width = max(len(criterion) for criterion, _ in results)
    terminalreporter.write_sep("=", "ACCEPTANCE CRITERIA")
    for criterion, status in results:
        terminalreporter.write_line(f"  {criterion.ljust(width)}  {status}")
    terminalreporter.write_sep("=")


@pytest.fixture
def toy_config_file(tmp_path):
    """A benchmark config over the bundled toy datasets, sandboxed into
    tmp_path for cache and outputs."""

    def make(seeds=(1337, 1338, 1339), datasets=("toy_sts", "toy_retrieval", "toy_classification"),
             name="config.toml", out_subdir="out"):
        manifest_lines = ",\n    ".join(
            f'"{(TOY_DATASETS / d / "manifest.json").as_posix()}"' for d in datasets
        )
        seed_list = ", ".join(str(s) for s in seeds)
        text = f"""
[generator]
id = "mock-generator"

[[embedding_models]]
id = "mock-embed-small"
dim = 24

[[embedding_models]]
id = "mock-embed-large"
dim = 48

[datasets]
manifests = [
    {manifest_lines}
]

[run]
seeds = [{seed_list}]
parallelism = 4

[paths]
cache_dir = "{(tmp_path / out_subdir / 'cache').as_posix()}"
output_dir = "{(tmp_path / out_subdir).as_posix()}"

[report]
n_splits = 100
split_seed = 0
min_datasets_for_inference = 3

[select_model]
candidates = ["mock-generator", "mock-generator-b"]
probe_manifest = "{(TOY_DATASETS / 'toy_sts' / 'manifest.json').as_posix()}"
shortlist_size = 2
max_items = 4
n_boot = 500
"""
        path = tmp_path / name
        path.write_text(text)
        return path

    return make
