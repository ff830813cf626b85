import numpy as np
import pytest

from finslerlab import make_metric


def klein_config(n=2, scale=1.0):
    cfg = {"family": "klein_ball", "dimension": n}
    if scale != 1.0:
        cfg["scale"] = scale
    return cfg


def funk_config(n=2):
    return {"family": "funk_ball", "dimension": n}


def euclid_config(n=2):
    terms_one = [[1.0] + [0] * n]
    terms_zero = [[0.0] + [0] * n]
    metric = [
        [terms_one if i == j else terms_zero for j in range(n)] for i in range(n)
    ]
    return {"family": "riemannian", "dimension": n, "riemannian": {"metric": metric}}


@pytest.fixture(scope="session")
def klein2():
    return make_metric(klein_config(2))


@pytest.fixture(scope="session")
def klein3():
    return make_metric(klein_config(3))


@pytest.fixture(scope="session")
def funk2():
    return make_metric(funk_config(2))


@pytest.fixture(scope="session")
def funk3():
    return make_metric(funk_config(3))


@pytest.fixture(scope="session")
def euclid2():
    return make_metric(euclid_config(2))


@pytest.fixture(scope="session")
def interval1():
    return make_metric({"family": "interval_funk", "dimension": 1, "k": 1.0})


def ball_point(rng, n, radius=0.7):
    while True:
        x = rng.uniform(-radius, radius, size=n)
        if float(x @ x) < radius * radius:
            return x


def unit_direction(rng, n):
    v = rng.standard_normal(n)
    return v / np.linalg.norm(v)
