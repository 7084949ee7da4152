import pytest

from dtcnn import arch
from dtcnn.errors import ConstraintError
from dtcnn.nn import LayerKind

TCNN3_PARAMS = {"C1": 34944, "C2": 614656, "C3": 885120, "FC1": 1576960, "FC2": 16781312}
TCNN50_PARAMS = {"C1": 2496, "C2": 221440, "C3": 885120, "FC1": 1155000, "FC2": 9003000}


def _named_params(spec):
    per_layer, _ = arch.count_params(spec)
    named, zero = {}, []
    counters = {LayerKind.CONV: 0, LayerKind.FC: 0}
    for ls, n in zip(spec.layers, per_layer):
        if ls.kind in counters:
            counters[ls.kind] += 1
            named[("C" if ls.kind is LayerKind.CONV else "FC") + str(counters[ls.kind])] = n
        else:
            zero.append(n)
    return named, zero


def test_tcnn3_params():
    named, zero = _named_params(arch.build_tcnn3(3, 1000))
    assert {k: named[k] for k in TCNN3_PARAMS} == TCNN3_PARAMS
    assert named["FC3"] == 4097 * 1000
    assert set(zero) == {0}


@pytest.mark.parametrize("n", [9, 36, 50])
def test_tcnn50_params(n):
    named, zero = _named_params(arch.build_tcnn50(1, n))
    assert {k: named[k] for k in TCNN50_PARAMS} == TCNN50_PARAMS
    assert named["FC3"] == 3001 * n
    assert set(zero) == {0}


def test_total_is_sum():
    spec = arch.build_tcnn50(1, 36)
    per_layer, total = arch.count_params(spec)
    assert total == sum(per_layer) == sum(TCNN50_PARAMS.values()) + 3001 * 36


def _chain(spec):
    """Distinct spatial sides then vector widths along the network."""
    out = []
    for s in arch.infer_shapes(spec):
        v = s[0]
        if not out or out[-1] != v:
            out.append(v)
    return out


def test_tcnn3_shapes():
    shapes = arch.infer_shapes(arch.build_tcnn3(3, 1000))
    assert _chain(arch.build_tcnn3(3, 1000)) == [227, 55, 27, 13, 384, 4096, 1000]
    assert shapes[0] == (227, 227, 3) and shapes[-1] == (1000,)


def test_tcnn50_shapes():
    assert _chain(arch.build_tcnn50(1, 9)) == [48, 24, 12, 384, 3000, 9]


def test_micro_shapes():
    shapes = arch.infer_shapes(arch.build_tcnn50_micro(1, 3))
    assert shapes[0] == (48, 48, 1) and shapes[-1] == (3,)


@pytest.mark.parametrize("c,n", [(2, 10), (3, 1), (0, 5)])
def test_builder_constraints(c, n):
    with pytest.raises(ConstraintError):
        arch.build_tcnn50(c, n)


def test_build_by_name_and_digest():
    a = arch.build("tcnn50", 1, 9)
    assert a == arch.build_tcnn50(1, 9)
    assert a.digest() == arch.build_tcnn50(1, 9).digest()
    assert a.digest() != arch.build_tcnn50(1, 10).digest()
    with pytest.raises(ConstraintError):
        arch.build("vgg", 1, 9)


def test_format_table_lists_counts():
    text = arch.format_table(arch.build_tcnn3(3, 1000))
    for v in TCNN3_PARAMS.values():
        assert f"{v:,}" in text
    assert "96x55x55" in text and "Energy" in text
