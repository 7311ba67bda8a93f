import numpy as np
import pytest

from greedygossip.fields import DEFAULT_BUMPS, FieldError, FieldSpec, synthesize
from greedygossip.topology import Graph


def test_linear(grid5):
    x = synthesize(FieldSpec("linear"), grid5)
    assert np.allclose(x, grid5.locations.sum(axis=1))


def test_bumps_default(grid5):
    x = synthesize(FieldSpec("gaussian_bumps"), grid5)
    loc = grid5.locations
    ref = sum(a * np.exp(-((loc[:, 0] - cx) ** 2 + (loc[:, 1] - cy) ** 2) / (2 * w * w))
              for a, cx, cy, w in DEFAULT_BUMPS)
    assert np.allclose(x, ref)
    assert x.max() > 0 > x.min()


def test_spike_and_iid_deterministic(rgg50):
    s1 = synthesize(FieldSpec("spike", seed=4), rgg50)
    assert sorted(s1.tolist()) == [0.0] * 49 + [1.0]
    assert np.array_equal(s1, synthesize(FieldSpec("spike", seed=4), rgg50))
    g1 = synthesize(FieldSpec("iid_gaussian", seed=4), rgg50)
    assert np.array_equal(g1, synthesize(FieldSpec("iid_gaussian", seed=4), rgg50))
    assert not np.array_equal(g1, synthesize(FieldSpec("iid_gaussian", seed=5), rgg50))


def test_errors():
    with pytest.raises(FieldError):
        FieldSpec("nope")
    with pytest.raises(FieldError):
        FieldSpec("gaussian_bumps", bumps=((1.0, 0.5, 0.5, 0.0),))
    with pytest.raises(FieldError):
        synthesize(FieldSpec("linear"), Graph.from_edges(2, [(0, 1)]))
    # location-free kinds work without locations
    assert synthesize(FieldSpec("spike"), Graph.from_edges(2, [(0, 1)])).sum() == 1.0
