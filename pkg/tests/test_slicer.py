import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dtcnn.errors import ConstraintError, ShapeError
from dtcnn.slicer import (PLANES, PlaneId, SliceConfig, VideoVolume, extract_all, extract_plane,
                          plane_indices, raw_slices, slice_indices)
from dtcnn.tensor import make_rng

from oracles import equal_spacing, naive_slices


@pytest.mark.parametrize("extent,m,expected", [
    (50, 5, [0, 12, 25, 37, 49]),
    (250, 10, [0, 28, 55, 83, 111, 138, 166, 194, 221, 249]),
    (7, 7, list(range(7))),
    (50, 1, [24]),
    (48, 2, [0, 47]),
])
def test_slice_indices_examples(extent, m, expected):
    assert slice_indices(extent, m) == expected


@given(st.integers(1, 400), st.data())
def test_slice_indices_match_fraction_oracle(extent, data):
    m = data.draw(st.integers(1, extent))
    idx = slice_indices(extent, m)
    assert idx == equal_spacing(extent, m)
    assert all(a <= b for a, b in zip(idx, idx[1:]))
    if m > 1:
        assert idx[0] == 0 and idx[-1] == extent - 1


@pytest.mark.parametrize("extent,m", [(5, 6), (3, 0)])
def test_slice_indices_constraint(extent, m):
    with pytest.raises(ConstraintError):
        slice_indices(extent, m)


def _volume(rng, h, w, d, c, dtype=np.float64):
    return VideoVolume(rng.random((h, w, d, c)).astype(dtype))


def test_volume_rejects_bad_channels():
    with pytest.raises(ShapeError):
        VideoVolume(np.zeros((4, 4, 4, 2)))


def test_slice_config_m_bound():
    v = _volume(make_rng(0), 10, 12, 6, 1)
    with pytest.raises(ConstraintError):
        extract_plane(v, PlaneId.XY, SliceConfig(m=7, n=8))
    # n above min(d, h, w) is allowed
    assert extract_plane(v, PlaneId.XY, SliceConfig(m=6, n=40)).shape == (40, 40, 6, 1)


def test_temporally_constant_volume():
    rng = make_rng(1)
    frame = rng.random((9, 11, 1))
    v = VideoVolume(np.repeat(frame[:, :, None, :], 8, axis=2))
    cfg = SliceConfig(m=4, n=16)
    xy = extract_plane(v, PlaneId.XY, cfg)
    assert all(np.array_equal(xy[:, :, 0], xy[:, :, i]) for i in range(4))
    for s in raw_slices(v, PlaneId.XT, 4):
        assert np.all(s == s[0:1])  # every time row is the same spatial line


def test_identity_resize_gives_frames():
    rng = make_rng(2)
    v = _volume(rng, 12, 12, 12, 3)
    stack = extract_plane(v, PlaneId.XY, SliceConfig(m=12, n=12))
    for i in range(12):
        assert np.array_equal(stack[:, :, i], v.data[:, :, i])


def test_time_ramp_xt_rows():
    d = 9
    ramp = np.arange(d) / (d - 1)
    vol = np.broadcast_to(ramp[None, None, :, None], (6, 7, d, 1)).copy()
    v = VideoVolume(vol)
    idx = plane_indices(v, PlaneId.XT, 3)
    for s, oracle in zip(raw_slices(v, PlaneId.XT, 3), naive_slices(vol, "xt", idx)):
        assert np.array_equal(s, oracle)
        for r in range(d):
            assert np.all(s[r] == r / (d - 1))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 16), st.integers(1, 16), st.integers(1, 16), st.sampled_from([1, 3]),
       st.integers(0, 2 ** 32 - 1), st.data())
def test_raw_slices_match_naive(h, w, d, c, seed, data):
    vol = make_rng(seed).integers(0, 256, (h, w, d, c)).astype(np.uint8)
    v = VideoVolume(vol)
    m = data.draw(st.integers(1, min(h, w, d)))
    for plane in PLANES:
        idx = plane_indices(v, plane, m)
        got = raw_slices(v, plane, m)
        for a, b in zip(got, naive_slices(vol, plane.value, idx)):
            assert a.shape == b.shape and np.array_equal(a, b)


def test_stacks_share_shape():
    v = _volume(make_rng(3), 10, 14, 8, 3)
    stacks = extract_all(v, SliceConfig(m=5, n=9))
    assert {s.shape for s in stacks.values()} == {(9, 9, 5, 3)}


def test_xy_commutes_with_channel_permutation():
    v = _volume(make_rng(4), 8, 10, 6, 3)
    perm = [2, 0, 1]
    cfg = SliceConfig(m=3, n=7)
    a = extract_plane(VideoVolume(v.data[..., perm]), PlaneId.XY, cfg)
    b = extract_plane(v, PlaneId.XY, cfg)[..., perm]
    assert np.array_equal(a, b)


def test_transpose_swaps_temporal_planes():
    v = _volume(make_rng(5), 8, 11, 6, 1)
    vt = VideoVolume(v.data.transpose(1, 0, 2, 3))
    m = 4
    for a, b in zip(raw_slices(v, PlaneId.XT, m), raw_slices(vt, PlaneId.YT, m)):
        assert np.array_equal(a, b)
    for a, b in zip(raw_slices(v, PlaneId.YT, m), raw_slices(vt, PlaneId.XT, m)):
        assert np.array_equal(a, b)
