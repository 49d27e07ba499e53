import struct

import numpy as np
import pytest

from Supervision.helper.container import (
    HEADER, MAGIC, decode_array, decode_fusion_params, decode_stack, encode_array,
    encode_fusion_params, encode_stack, load_container, load_fusion_params, save_container, save_fusion_params
)
from Supervision.helper.exceptions import BadMagic, ContainerError, TruncatedPayload, UnsupportedVersion
from Supervision.helper.heatmap import HeatmapStack
from Supervision.helper.pgfe import MATRIX_FIELDS, SCALAR_FIELDS, FusionParams


@pytest.fixture
def stack():
    values = np.random.default_rng(3).uniform(size=(3, 5, 7)).astype(np.float32)
    return HeatmapStack(values)


class TestHeatmapContainer:
    def test_layout(self, stack):
        data = encode_stack(stack)
        assert data[:4] == b"PGDH"
        assert struct.unpack_from("<IIII", data, 4) == (1, 3, 5, 7)
        assert len(data) == HEADER.size + 3 * 5 * 7 * 4

    def test_save_then_load_is_bit_identical(self, tmp_path, stack):
        save_container(tmp_path / "stack.pgdh", stack)
        loaded = load_container(tmp_path / "stack.pgdh")
        np.testing.assert_array_equal(loaded.values, stack.values)
        assert (tmp_path / "stack.pgdh").read_bytes() == encode_stack(loaded)

    def test_two_dimensional_arrays_get_one_channel(self):
        assert decode_array(encode_array(np.ones((2, 3)))).shape == (1, 2, 3)

    def test_bad_magic(self, stack):
        with pytest.raises(BadMagic):
            decode_stack(b"XXXX" + encode_stack(stack)[4:])

    def test_payload_shorter_than_header_declares(self, stack):
        with pytest.raises(TruncatedPayload):
            decode_stack(encode_stack(stack)[:-4])

    def test_short_header(self):
        with pytest.raises(TruncatedPayload):
            decode_stack(MAGIC + b"\x01\x00")

    def test_unsupported_version(self):
        with pytest.raises(UnsupportedVersion):
            decode_stack(HEADER.pack(MAGIC, 2, 1, 1, 1) + b"\x00" * 4)

    def test_trailing_bytes(self, stack):
        with pytest.raises(ContainerError):
            decode_stack(encode_stack(stack) + b"\x00")


class TestFusionParamsFile:
    def test_round_trip(self, tmp_path):
        params = FusionParams.initialize(4, 2, seed=1)
        save_fusion_params(tmp_path / "fusion.pgdf", params)
        loaded = load_fusion_params(tmp_path / "fusion.pgdf")
        for name in SCALAR_FIELDS:
            assert getattr(loaded, name) == getattr(params, name)
        for name in MATRIX_FIELDS:
            np.testing.assert_allclose(getattr(loaded, name), getattr(params, name), rtol=1e-6, atol=1e-7)
            assert getattr(loaded, name).shape == getattr(params, name).shape

    def test_bad_magic(self):
        data = encode_fusion_params(FusionParams.initialize(2, 2))
        with pytest.raises(BadMagic):
            decode_fusion_params(b"PGDH" + data[4:])

    def test_truncated_block(self):
        data = encode_fusion_params(FusionParams.initialize(2, 2))
        with pytest.raises(TruncatedPayload):
            decode_fusion_params(data[:-2])
