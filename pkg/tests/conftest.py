import pytest

from prophetsim import build_curveset, build_schedule, get_constants, load_corpus


@pytest.fixture(scope="session")
def consts():
    return get_constants()


@pytest.fixture(scope="session")
def corpus():
    return {inst.label: inst for inst in load_corpus()}


@pytest.fixture(scope="session")
def curve_cache(corpus):
    """Memoized curve sets: curve_cache(label, N=4096)."""
    cache = {}

    def get(label, N=4096):
        key = (label, N)
        if key not in cache:
            cache[key] = build_curveset(corpus[label], N)
        return cache[key]

    return get


@pytest.fixture(scope="session")
def sched_cache(curve_cache, consts):
    """Memoized schedules: sched_cache(label, gamma=None->gamma_sel, N=4096)."""
    cache = {}

    def get(label, gamma=None, N=4096):
        g = consts.gamma_sel if gamma is None else gamma
        key = (label, round(g, 14), N)
        if key not in cache:
            cache[key] = build_schedule(curve_cache(label, N), g)
        return cache[key]

    return get
