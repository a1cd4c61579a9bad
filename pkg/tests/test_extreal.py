import math

import pytest

from epidiff.errors import ExtRealError
from epidiff.extreal import INF, NEG_INF, ext_add, ext_scale, ext_sum, fmt, from_json, to_json


def test_addition_conventions():
    assert ext_add(INF, 3.0) == INF
    assert ext_add(NEG_INF, -1.0) == NEG_INF
    assert ext_sum([1.0, 2.0, INF]) == INF
    with pytest.raises(ExtRealError):
        ext_add(INF, NEG_INF)
    with pytest.raises(ExtRealError):
        ext_add(math.nan, 1.0)


def test_scaling_conventions():
    assert ext_scale(0.0, INF) == 0.0
    assert ext_scale(2.0, INF) == INF
    with pytest.raises(ExtRealError):
        ext_scale(-1.0, 1.0)


@pytest.mark.parametrize("a", [INF, NEG_INF, 0.0, 1.5, -2e-300])
def test_json_round_trip(a):
    assert from_json(to_json(a)) == a


def test_json_rejects_unknown_sentinels():
    with pytest.raises(ExtRealError):
        from_json("inf")


def test_fmt():
    assert (fmt(INF), fmt(NEG_INF), fmt(0.25)) == ("+inf", "-inf", "0.25")
