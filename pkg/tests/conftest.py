from functools import lru_cache

import pytest
from hypothesis import settings

from holoqec.lego import build_code, inflate

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")

SEEDS = ("happy", "steane", "613", "scf")


@lru_cache(maxsize=None)
def holo(seed: str, layers: int):
    return build_code(inflate(seed, layers))


@pytest.fixture(scope="session")
def code_of():
    return holo
