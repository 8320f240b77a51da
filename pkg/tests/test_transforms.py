import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seqdesign import Transformation, TransformationError

finite = st.floats(min_value=1e-6, max_value=1e6, allow_nan=False)


def test_kinds_and_unknown():
    for kind in ("identity", "sqrt", "log1p"):
        Transformation(kind)
    with pytest.raises(TransformationError):
        Transformation("cube")


@settings(max_examples=60, deadline=None)
@given(z=st.lists(finite, min_size=1, max_size=20))
def test_round_trip_all_kinds(z):
    z = np.asarray(z)
    for kind in ("identity", "sqrt", "log1p"):
        t = Transformation(kind)
        back = t.inverse(t.forward(z))
        assert np.allclose(back, z, rtol=1e-12, atol=0)


def test_sqrt_domain():
    with pytest.raises(TransformationError):
        Transformation("sqrt").forward([-0.5, 1.0])
    Transformation("sqrt").forward([0.0, 1.0])


def test_log1p_domain():
    with pytest.raises(TransformationError):
        Transformation("log1p").forward([-1.0])
    out = Transformation("log1p").forward([-0.5, 0.0, 3.0])
    assert out[1] == 0.0


def test_known_values():
    assert Transformation("sqrt").forward([4.0])[0] == 2.0
    assert Transformation("log1p").inverse([0.0])[0] == 0.0
