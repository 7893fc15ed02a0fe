"""Masked-share cap of per-epoch sample plans."""

import pytest

from maskface_utils.data.manifest import ManifestRecord
from maskface_utils.data.sampler import SamplerConfig, masked_allowance, plan_epoch
from maskface_utils.exceptions import ParameterError

POINTS = ((0.0, 0.0),) * 5


def make_records(unmasked: int, masked: int):
    records = [ManifestRecord(f"u{i}.ppm", i % 10, False, POINTS) for i in range(unmasked)]
    records += [ManifestRecord(f"m{i}.ppm", i % 10, True, POINTS) for i in range(masked)]
    return records


@pytest.fixture(scope="module")
def records():
    return make_records(900, 300)


class TestPlanEpoch:
    def test_cap_is_met_exactly_for_many_seeds(self, records):
        for seed in range(100):
            plan = plan_epoch(records, SamplerConfig(mask_ratio_cap=0.1, seed=seed))
            assert plan.masked_count == 100
            assert plan.unmasked_count == 900
            assert plan.masked_fraction <= 0.1
            assert len(plan) == 1000

    def test_every_unmasked_record_appears_once(self, records):
        plan = plan_epoch(records, SamplerConfig(seed=3), epoch=2)
        unmasked = [i for i in plan if not records[i].masked]
        assert sorted(unmasked) == list(range(900))
        masked = [i for i in plan if records[i].masked]
        assert len(set(masked)) == len(masked) == 100

    def test_same_seed_and_epoch_give_the_same_plan(self, records):
        cfg = SamplerConfig(seed=5)
        assert plan_epoch(records, cfg, 4).indices == plan_epoch(records, cfg, 4).indices
        assert plan_epoch(records, cfg, 4).indices != plan_epoch(records, cfg, 5).indices
        assert plan_epoch(records, cfg, 4).indices != plan_epoch(records, SamplerConfig(seed=6), 4).indices

    def test_epochs_draw_different_masked_subsets(self, records):
        cfg = SamplerConfig(seed=0)
        first = {i for i in plan_epoch(records, cfg, 0) if records[i].masked}
        second = {i for i in plan_epoch(records, cfg, 1) if records[i].masked}
        assert first != second

    def test_fewer_masked_than_allowed_keeps_them_all(self):
        records = make_records(900, 20)
        plan = plan_epoch(records, SamplerConfig(mask_ratio_cap=0.1))
        assert plan.masked_count == 20

    def test_zero_cap_drops_masked_faces(self, records):
        plan = plan_epoch(records, SamplerConfig(mask_ratio_cap=0.0))
        assert plan.masked_count == 0
        assert plan.masked_fraction == 0.0

    def test_no_shuffle_keeps_unmasked_first(self, records):
        plan = plan_epoch(records, SamplerConfig(shuffle=False))
        assert plan.indices[:900] == list(range(900))
        assert plan.indices[900:] == sorted(plan.indices[900:])

    def test_needs_unmasked_records(self):
        with pytest.raises(ParameterError):
            plan_epoch(make_records(0, 5), SamplerConfig())


class TestAllowance:
    @pytest.mark.parametrize("cap,unmasked,expected", [(0.1, 900, 100), (0.1, 9, 1), (0.1, 8, 0), (0.5, 7, 7),
                                                       (0.25, 30, 10), (0.0, 100, 0)])
    def test_exact_arithmetic(self, cap, unmasked, expected):
        assert masked_allowance(cap, unmasked) == expected

    @pytest.mark.parametrize("kwargs", [{"mask_ratio_cap": 1.0}, {"mask_ratio_cap": -0.1}, {"seed": -1}])
    def test_invalid_config(self, kwargs):
        with pytest.raises(ParameterError):
            SamplerConfig(**kwargs)
