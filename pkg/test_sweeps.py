#!/usr/bin/env python3
"""
Tests for the constant calibration
"""

import pytest

from commands.sweep_commands import INITIAL_CONSTANT, calibrate_constant
from core.decompositions import required_sample_size


def test_calibration_returns_first_accepted_constant():
    result = calibrate_constant([2, 3], eps=0.5, replicates=10, seed=1)

    assert result.history[-1]["accepted"]
    assert all(not entry["accepted"] for entry in result.history[:-1])
    assert result.c == pytest.approx(INITIAL_CONSTANT * 2 ** (len(result.history) - 1))
    for entry in result.history[-1]["dims"].values():
        assert entry["quantile_error"] <= 0.5


def test_calibration_is_reproducible():
    first = calibrate_constant([2, 4], eps=0.5, replicates=8, seed=3)
    second = calibrate_constant([2, 4], eps=0.5, replicates=8, seed=3)
    assert first.to_dict() == second.to_dict()


def test_large_starting_constant_is_accepted_at_once():
    result = calibrate_constant([2, 3], eps=0.5, replicates=5, start=64.0)

    assert len(result.history) == 1
    assert result.c == 64.0
    # gamma = d and ||A|| = 1 for the cross-polytope
    assert result.history[0]["dims"]["2"]["k"] == required_sample_size(2, 2, 1.0, 0.5, 64.0) == 710


@pytest.mark.parametrize("dims,quantile", [([4], 0.5), ([2, 4], 0.0), ([2, 4], 1.0)])
def test_calibration_rejects_bad_arguments(dims, quantile):
    with pytest.raises(ValueError):
        calibrate_constant(dims, eps=0.5, target_quantile=quantile, replicates=2)
