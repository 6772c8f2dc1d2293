import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cdmloc import KERNEL_NAMES, DomainError, KernelId, finalize, pair_term, parse_kernel, vector_metric
from cdmloc.metrics import ADDITIVE_KERNELS, ROOT_KERNELS, finalize_array, pair_terms

KERNELS = [KernelId(n) for n in KERNEL_NAMES] + [KernelId("minkowski", 3.0), KernelId("minkowski", 0.5)]
reals = st.floats(-120, 120, allow_nan=False) | st.sampled_from([0.0, 100.0, -110.0])


def table_metric(name, x, y, gamma, p=2.0):
    """Whole-vector formulas written out element by element."""
    d = len(x)
    pairs = list(zip(x, y))
    if name == "lorentzian":
        return sum(math.log(1 + abs(a - b)) for a, b in pairs)
    if name == "hamming":
        return sum(1 for a, b in pairs if a != b) / d
    if name == "jaccard":
        num = sum(1 for a, b in pairs if a != b and (a != gamma or b != gamma))
        den = sum(1 for a, b in pairs if a != gamma or b != gamma)
        return 0.0 if den == 0 else num / den
    if name == "wavehedges":
        return sum(0.0 if a == b == 0 else abs(a - b) / max(abs(a), abs(b)) for a, b in pairs)
    if name == "canberra":
        return sum(0.0 if a == b == 0 else abs(a - b) / (abs(a) + abs(b)) for a, b in pairs)
    if name == "clark":
        return math.sqrt(sum(0.0 if a == b == 0 else (abs(a - b) / (abs(a) + abs(b))) ** 2
                             for a, b in pairs))
    if name == "cityblock":
        return sum(abs(a - b) for a, b in pairs)
    return sum(abs(a - b) ** p for a, b in pairs) ** (1 / p)


def test_pair_term_examples():
    assert pair_term(KernelId("lorentzian"), -50, -60) == pytest.approx(2.397895272798371, rel=1e-12)
    assert pair_term(KernelId("wavehedges"), -50, -55) == pytest.approx(5 / 55, rel=1e-12)
    assert pair_term(KernelId("clark"), -50, -55) == pytest.approx(0.0022675736961451248, rel=1e-12)
    assert pair_term(KernelId("hamming"), -50, -55) == pair_term(KernelId("jaccard"), -50, -55) == 1.0
    assert pair_term(KernelId("minkowski", 3), 1, 3) == 8.0


@pytest.mark.parametrize("kernel", KERNELS, ids=str)
def test_pair_term_zero_forms(kernel):
    assert pair_term(kernel, 0.0, 0.0) == 0.0
    assert pair_term(kernel, -73.5, -73.5) == 0.0


def test_pair_term_rejects_non_finite():
    with pytest.raises(DomainError):
        pair_term(KernelId("cityblock"), float("inf"), 1.0)
    with pytest.raises(DomainError):
        pair_term(KernelId("lorentzian"), 1.0, float("nan"))


def test_finalize_examples():
    assert finalize(KernelId("minkowski"), 4125) == pytest.approx(64.22616289332565, rel=1e-12)
    assert finalize(KernelId("clark"), 0) == 0
    assert finalize(KernelId("cityblock"), 95) == 95
    with pytest.raises(DomainError):
        finalize(KernelId("clark"), -1)


@pytest.mark.parametrize("kernel", KERNELS, ids=str)
def test_finalize_monotone_on_grid(kernel):
    grid = np.concatenate([[0.0], np.logspace(-6, 8, 200)])
    out = [finalize(kernel, s) for s in grid]
    assert all(b >= a for a, b in zip(out, out[1:]))
    np.testing.assert_allclose(finalize_array(kernel, grid), out, rtol=1e-15)


def test_vector_metric_examples():
    assert vector_metric(KernelId("cityblock"), (-50, -60, -110), (-55, -110, -70), -110) == 95
    assert vector_metric(KernelId("hamming"), (1, 2, 3, 4), (1, 2, 0, 0), 100) == 0.5
    assert vector_metric(KernelId("jaccard"), (100, -50), (100, -50), 100) == 0
    assert vector_metric(KernelId("jaccard"), (100, -50), (-60, -50), 100) == 0.5
    assert vector_metric(KernelId("jaccard"), (100, 100), (100, 100), 100) == 0
    with pytest.raises(DomainError):
        vector_metric(KernelId("cityblock"), (1, 2), (1,), 100)


@pytest.mark.parametrize("kernel", KERNELS, ids=str)
@given(data=st.data())
def test_vector_metric_matches_table_formulas(kernel, data):
    n = data.draw(st.integers(1, 8))
    x = data.draw(st.lists(reals, min_size=n, max_size=n))
    y = data.draw(st.lists(reals, min_size=n, max_size=n))
    got = vector_metric(kernel, x, y, 100.0)
    want = table_metric(kernel.name, x, y, 100.0, kernel.p)
    assert got == pytest.approx(want, rel=1e-12, abs=1e-12)
    assert got == pytest.approx(vector_metric(kernel, y, x, 100.0), rel=1e-12, abs=1e-15)
    assert got >= 0
    assert vector_metric(kernel, x, x, 100.0) == 0


@pytest.mark.parametrize("kernel", KERNELS, ids=str)
@given(x=reals, y=reals)
def test_pair_term_symmetric_and_array_form(kernel, x, y):
    t = pair_term(kernel, x, y)
    assert t >= 0
    assert t == pair_term(kernel, y, x)
    assert pair_terms(kernel, x, y) == pytest.approx(t, rel=1e-14, abs=0)


@given(data=st.data())
def test_vector_metric_decomposes_into_pair_terms(data):
    n = data.draw(st.integers(1, 8))
    x = data.draw(st.lists(reals, min_size=n, max_size=n))
    y = data.draw(st.lists(reals, min_size=n, max_size=n))
    for name in ADDITIVE_KERNELS + ROOT_KERNELS:
        k = KernelId(name)
        total = finalize(k, math.fsum(pair_term(k, a, b) for a, b in zip(x, y)))
        assert vector_metric(k, x, y, 100.0) == pytest.approx(total, rel=1e-12, abs=1e-12)


def test_parse_kernel():
    assert parse_kernel("WaveHedges") == KernelId("wavehedges")
    assert parse_kernel("city-block") == KernelId("cityblock")
    assert parse_kernel("minkowski", 3).p == 3.0
    assert str(parse_kernel("minkowski")) == "minkowski(p=2)"
    with pytest.raises(DomainError):
        parse_kernel("cosine")
    with pytest.raises(DomainError):
        KernelId("minkowski", 0)
