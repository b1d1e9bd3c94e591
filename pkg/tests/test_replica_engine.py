"""
Latticeworks v1.0 - Unit Tests
===============================
Test suite for the block runner and shared statistics
"""

import pytest
import os
import sys

import numpy as np

# Add parent directory to path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from replica_engine import (
    CancellationToken, autocorrelation_time, batch_means_se, binomial_estimate,
    block_rng, bootstrap_error, mean_and_se, run_blocks, split_blocks,
)
from validators import ValidationError

# === BLOCK TESTS ===

def test_split_blocks():
    """Test fixed blocks cover every item once"""
    assert split_blocks(25, 10) == [(0, 0, 10), (1, 10, 10), (2, 20, 5)]
    assert split_blocks(0, 10) == []

def test_block_rng_is_reproducible():
    """Test (seed, stream) fixes the generator"""
    a = block_rng(7, 3).random(5)
    b = block_rng(7, 3).random(5)
    c = block_rng(7, 4).random(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)

def draw_block(block, start, count):
    rng = block_rng(11, block)
    return rng.integers(0, 1000, size=count).tolist()

@pytest.mark.parametrize("workers", [1, 2, 4])
def test_results_independent_of_workers(workers):
    """Test block order and content do not depend on the thread count"""
    reference = run_blocks(draw_block, 95, block_size=10, workers=1)
    assert run_blocks(draw_block, 95, block_size=10, workers=workers) == reference

def test_invalid_workers():
    """Test worker count validation"""
    with pytest.raises(ValidationError, match="Workers out of range"):
        run_blocks(draw_block, 10, workers=0)

def test_cancellation():
    """Test a cancelled token stops the run"""
    token = CancellationToken()
    token.cancel()
    assert token.is_cancelled()
    with pytest.raises(InterruptedError):
        run_blocks(draw_block, 30, block_size=10, workers=2, token=token)
    token.reset()
    assert not token.is_cancelled()

def test_block_failure_propagates():
    """Test an exception inside a block reaches the caller"""
    def failing(block, start, count):
        if block == 1:
            raise RuntimeError("boom")
        return count

    with pytest.raises(RuntimeError, match="boom"):
        run_blocks(failing, 30, block_size=10, workers=2)

# === STATISTICS TESTS ===

def test_binomial_estimate():
    """Test p-hat and its standard error"""
    p_hat, se = binomial_estimate(25, 100)
    assert p_hat == pytest.approx(0.25)
    assert se == pytest.approx(np.sqrt(0.25 * 0.75 / 100))
    assert np.isnan(binomial_estimate(0, 0)[0])

def test_mean_and_se():
    """Test mean and standard error of independent values"""
    mean, se = mean_and_se([1.0, 2.0, 3.0, 4.0])
    assert mean == pytest.approx(2.5)
    assert se == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2)
    assert mean_and_se([5.0]) == (5.0, 0.0)

def test_batch_means_constant_series():
    """Test a constant chain has zero error"""
    mean, se = batch_means_se(np.full(400, 0.3))
    assert mean == pytest.approx(0.3)
    assert se == pytest.approx(0.0)

def test_batch_means_short_series_falls_back():
    """Test short series use the independent estimate"""
    assert batch_means_se([1.0, 3.0], n_batches=20) == mean_and_se([1.0, 3.0])

def test_bootstrap_error():
    """Test bootstrap mean equals the sample mean"""
    mean, err = bootstrap_error([0.0, 1.0] * 50, seed=3)
    assert mean == pytest.approx(0.5)
    assert 0 < err < 0.2

def test_autocorrelation_time():
    """Test independent noise has tau near 1/2 and a sticky chain a larger one"""
    rng = np.random.default_rng(0)
    noise = rng.random(2000)
    assert autocorrelation_time(noise) < 1.5
    sticky = np.repeat(rng.random(100), 20)
    assert autocorrelation_time(sticky) > 5
    assert autocorrelation_time(np.ones(10)) == 1.0

if __name__ == "__main__":
    pytest.main([__file__, "-v"])
