from pathlib import Path

import pytest

from uqe.features import FeatureConfig
from uqe.glassbox import ToyLexicalModel, UnigramMLM

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def toy_model() -> ToyLexicalModel:
    return ToyLexicalModel.load(FIXTURES / "toy_model.json")


@pytest.fixture(scope="session")
def mlm() -> UnigramMLM:
    return UnigramMLM.load(FIXTURES / "mlm.json")


@pytest.fixture(scope="session")
def feature_config() -> FeatureConfig:
    return FeatureConfig.load(FIXTURES / "feature_config.json")
