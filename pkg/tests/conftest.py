import pytest

from searchenv.env import SearchEnv
from searchenv.index import build_index
from searchenv.synthetic import build_desk_corpus


@pytest.fixture(scope="session")
def desk():
    return build_desk_corpus(n_questions=120, seed=7)


@pytest.fixture(scope="session")
def desk_env(desk):
    return SearchEnv(build_index(desk.corpus))
