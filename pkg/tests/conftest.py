import pytest

from tbert.pipeline import PipelineConfig
from tbert.synth import generate_fixture


@pytest.fixture(scope="session")
def fixture_dir(tmp_path_factory):
    """Seed-0 synthetic fixture shared by pipeline-level tests."""
    out = tmp_path_factory.mktemp("fixture")
    generate_fixture(out, seed=0)
    return out


@pytest.fixture(scope="session")
def fixture_config(fixture_dir) -> PipelineConfig:
    return PipelineConfig.from_file(fixture_dir / "config.json")
