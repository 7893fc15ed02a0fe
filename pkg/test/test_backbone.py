"""Backbone configuration, presets and forward contract."""

import numpy as np
import pytest

from maskface_utils.exceptions import ConfigurationError, DimensionError
from maskface_utils.nn.backbone import EMBEDDING_DIM, Backbone, BackboneConfig, backbone_preset
from maskface_utils.nn.blocks import DropBlockConfig, PlainStem, StemUnit
from maskface_utils.tensor.engine import Tensor


class TestBackboneConfig:
    def test_toy_defaults(self):
        cfg = BackboneConfig()
        assert cfg.stem == "dual"
        assert cfg.num_stages == 3
        assert cfg.final_spatial_size() == 7
        assert cfg.embedding_dim == EMBEDDING_DIM == 512

    def test_resnet34_preset(self):
        cfg = backbone_preset("resnet34")
        assert cfg.blocks == [3, 4, 6, 3]
        assert cfg.dropblock_stages == {3, 4}
        assert cfg.final_spatial_size() == 4

    def test_unknown_preset(self):
        with pytest.raises(ConfigurationError):
            backbone_preset("resnet1000")

    @pytest.mark.parametrize(
        "overrides",
        [
            {"dropblock_stages": {1}},
            {"embedding_dim": 256},
            {"input_size": 110},
            {"stem": "triple"},
            {"strides": [1, 3, 2]},
            {"blocks": [1, 1]},
            {"se_reduction": 5},
        ],
    )
    def test_invalid_overrides(self, overrides):
        with pytest.raises(ConfigurationError):
            backbone_preset("toy", **overrides)


class TestBackbone:
    def test_embeddings_shape(self, rng):
        model = Backbone(BackboneConfig(), seed=0)
        out = model(Tensor(rng.normal(size=(2, 3, 112, 112))))
        assert out.shape == (2, 512)
        assert isinstance(model.stem, StemUnit)

    def test_plain_stem_variant(self, rng):
        model = Backbone(backbone_preset("toy", stem="plain", input_size=32, dropblock_stages=set()), seed=0)
        assert isinstance(model.stem, PlainStem)
        assert model(Tensor(rng.normal(size=(2, 3, 32, 32)))).shape == (2, 512)

    def test_rejects_wrong_input_shape(self, rng):
        model = Backbone(backbone_preset("toy", input_size=16, dropblock_stages=set()))
        with pytest.raises(DimensionError):
            model(Tensor(rng.normal(size=(2, 3, 32, 32))))
        with pytest.raises(DimensionError):
            model(Tensor(rng.normal(size=(2, 1, 16, 16))))

    def test_seed_determines_initialization(self):
        cfg = backbone_preset("toy", input_size=16, dropblock_stages=set())
        a, b, c = Backbone(cfg, seed=1), Backbone(cfg, seed=1), Backbone(cfg, seed=2)
        for (name, pa), (_, pb), (_, pc) in zip(a.named_parameters(), b.named_parameters(), c.named_parameters()):
            np.testing.assert_array_equal(pa.data, pb.data)
        assert not np.array_equal(a.fc.weight.data, c.fc.weight.data)

    def test_dropblock_sites_follow_config(self):
        model = Backbone(BackboneConfig(dropblock_stages={3}))
        stages = model.stages()
        assert all(block.dropblock is None for block in stages[0].blocks() + stages[1].blocks())
        assert all(block.dropblock is not None for block in stages[2].blocks())


class TestEvalMode:
    @pytest.fixture
    def warmed(self, rng):
        """A DropBlock-enabled toy model after one training pass, plus an input batch."""
        model = Backbone(backbone_preset("toy", input_size=64), seed=0)
        model.train()
        model(Tensor(rng.normal(size=(4, 3, 64, 64))))
        return model, Tensor(rng.normal(size=(3, 3, 64, 64)))

    def test_repeated_eval_forwards_are_identical(self, warmed):
        model, images = warmed
        model.eval()
        first = model(images).data
        for _ in range(2):
            np.testing.assert_array_equal(model(images).data, first)

    def test_dropblock_settings_do_not_touch_eval_embeddings(self, warmed):
        model, images = warmed
        model.eval()
        expected = model(images).data
        heavy = Backbone(
            backbone_preset("toy", input_size=64, dropblock=DropBlockConfig(drop_prob=0.5, block_size=5)),
            seed=3,
        )
        heavy.load_state_dict(model.state_dict())
        heavy.eval()
        np.testing.assert_array_equal(heavy(images).data, expected)
