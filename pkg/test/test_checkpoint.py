"""Weight checkpoint file format and state dictionaries."""

import numpy as np
import pytest

from maskface_utils.exceptions import CheckpointError, FileFormatError
from maskface_utils.nn.backbone import Backbone, backbone_preset
from maskface_utils.tensor.checkpoint import load_weights, save_weights
from maskface_utils.tensor.engine import Tensor


@pytest.fixture
def small_backbone():
    return Backbone(backbone_preset("toy", input_size=16, dropblock_stages=set()), seed=0)


@pytest.fixture
def warmed_backbone(rng):
    """Same architecture after one training pass, so running statistics exist."""
    model = Backbone(backbone_preset("toy", input_size=16, dropblock_stages=set()), seed=0)
    model.train()
    model(Tensor(rng.normal(size=(2, 3, 16, 16))))
    return model


class TestWeightFile:
    def test_save_and_load_preserve_names_order_and_values(self, tmp_path, rng):
        tensors = {"b.weight": rng.normal(size=(2, 3)), "a.bias": rng.normal(size=4), "scalar": np.array(1.5)}
        path = tmp_path / "w.mfrw"
        save_weights(path, tensors)
        loaded = load_weights(path)
        assert list(loaded) == ["b.weight", "a.bias", "scalar"]
        for name, value in tensors.items():
            assert loaded[name].dtype == np.float32
            np.testing.assert_array_equal(loaded[name], value.astype(np.float32))

    def test_header_layout(self, tmp_path):
        path = tmp_path / "w.mfrw"
        save_weights(path, {"x": np.zeros(2)})
        raw = path.read_bytes()
        assert raw[:4] == b"MFRW"
        assert int.from_bytes(raw[4:8], "little") == 1
        assert int.from_bytes(raw[8:12], "little") == 1

    def test_bad_magic_and_version(self, tmp_path):
        path = tmp_path / "w.mfrw"
        save_weights(path, {"x": np.zeros(2)})
        raw = bytearray(path.read_bytes())
        bad = tmp_path / "bad.mfrw"
        bad.write_bytes(b"XXXX" + raw[4:])
        with pytest.raises(FileFormatError, match="magic"):
            load_weights(bad)
        raw[4] = 9
        bad.write_bytes(bytes(raw))
        with pytest.raises(FileFormatError, match="version"):
            load_weights(bad)

    def test_truncated_and_trailing_bytes(self, tmp_path):
        path = tmp_path / "w.mfrw"
        save_weights(path, {"x": np.arange(4.0)})
        raw = path.read_bytes()
        (tmp_path / "short.mfrw").write_bytes(raw[:-3])
        with pytest.raises(FileFormatError, match="end of file"):
            load_weights(tmp_path / "short.mfrw")
        (tmp_path / "long.mfrw").write_bytes(raw + b"\0")
        with pytest.raises(FileFormatError, match="trailing"):
            load_weights(tmp_path / "long.mfrw")


class TestStateDict:
    def test_round_trip_through_file_restores_outputs(self, tmp_path, rng, small_backbone):
        images = Tensor(rng.normal(size=(4, 3, 16, 16)))
        small_backbone.train()
        small_backbone(images)
        small_backbone.eval()
        expected = small_backbone(images).data

        path = tmp_path / "model.mfrw"
        save_weights(path, small_backbone.state_dict())
        restored = Backbone(small_backbone.cfg, seed=99)
        restored.load_state_dict(load_weights(path))
        restored.eval()
        np.testing.assert_allclose(restored(images).data, expected, rtol=1e-5, atol=1e-5)

    def test_names_are_hierarchical(self, small_backbone):
        names = [name for name, _ in small_backbone.named_parameters()]
        assert "stem.c1.conv.weight" in names
        assert "stage1.block0.conv1.weight" in names
        assert "features.weight" in names
        assert len(names) == len(set(names))

    def test_buffers_appear_after_a_training_pass(self, rng, small_backbone):
        assert not any(k.endswith("running_mean") for k in small_backbone.state_dict())
        small_backbone.train()
        small_backbone(Tensor(rng.normal(size=(2, 3, 16, 16))))
        assert "features.state.running_mean" in small_backbone.state_dict()

    def test_shape_mismatch_names_the_tensor(self, small_backbone):
        state = dict(small_backbone.state_dict())
        state["fc.weight"] = np.zeros((3, 3))
        with pytest.raises(CheckpointError, match="fc.weight"):
            small_backbone.load_state_dict(state)

    def test_missing_and_unexpected_tensors(self, warmed_backbone):
        state = dict(warmed_backbone.state_dict())
        del state["fc.bias"]
        with pytest.raises(CheckpointError, match="fc.bias"):
            warmed_backbone.load_state_dict(state)
        state = dict(warmed_backbone.state_dict())
        state["extra.weight"] = np.zeros(1)
        with pytest.raises(CheckpointError, match="extra.weight"):
            warmed_backbone.load_state_dict(state)
        warmed_backbone.load_state_dict(state, strict=False)

    def test_missing_running_statistics_fail_at_load(self, warmed_backbone, small_backbone):
        state = {k: v for k, v in warmed_backbone.state_dict().items() if not k.startswith("features.state.")}
        with pytest.raises(CheckpointError, match="features.state.running_mean"):
            small_backbone.load_state_dict(state)

        untrained = small_backbone.state_dict()
        with pytest.raises(CheckpointError, match="running_mean"):
            Backbone(small_backbone.cfg, seed=1).load_state_dict(untrained)

        lenient = Backbone(small_backbone.cfg, seed=1)
        lenient.load_state_dict(untrained, strict=False)
        np.testing.assert_array_equal(lenient.fc.weight.data, small_backbone.fc.weight.data)

    def test_one_of_a_statistics_pair_missing(self, warmed_backbone):
        state = dict(warmed_backbone.state_dict())
        del state["features.state.running_var"]
        with pytest.raises(CheckpointError, match="features.state.running_var"):
            warmed_backbone.load_state_dict(state, strict=False)
