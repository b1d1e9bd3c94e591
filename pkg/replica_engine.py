"""
Latticeworks v1.0 - Replica Engine Module
==========================================
Block-parallel Monte Carlo runner and the statistics shared by the
estimators.

Зміни v1.0:
- Фіксовані блоки вибірки: потік RNG = індекс блоку, тож результат
  не залежить від кількості потоків
- Токен скасування (CancellationToken) для довгих прогонів
- Batch means для корельованих ланцюгів
"""

import concurrent.futures
import threading
from typing import Any, Callable, List, Optional, Sequence, Tuple

import numpy as np

import config
from logger import get_logger
from validators import validate_workers

logger = get_logger(__name__)


# === CANCELLATION TOKEN ===

class CancellationToken:
    """
    Простий токен скасування для довгих прогонів.
    Передається в executor, кожен блок перевіряє is_cancelled().
    """
    def __init__(self):
        self._cancelled = threading.Event()

    def cancel(self):
        self._cancelled.set()

    def is_cancelled(self) -> bool:
        return self._cancelled.is_set()

    def reset(self):
        self._cancelled.clear()


# === RANDOM STREAMS ===

def block_rng(seed: int, stream: int) -> np.random.Generator:
    """Independent generator for (seed, stream)"""
    return np.random.default_rng([int(seed), int(stream)])


# === BLOCK RUNNER ===

def split_blocks(n_items: int, block_size: int) -> List[Tuple[int, int, int]]:
    """(block index, first item, item count) covering range(n_items)"""
    blocks = []
    for b, start in enumerate(range(0, n_items, block_size)):
        blocks.append((b, start, min(block_size, n_items - start)))
    return blocks


def run_blocks(
    fn: Callable[[int, int, int], Any],
    n_items: int,
    block_size: int = config.SAMPLES_PER_BLOCK,
    workers: int = config.DEFAULT_WORKERS,
    token: Optional[CancellationToken] = None,
) -> List[Any]:
    """
    Run fn(block, start, count) over fixed blocks on a thread pool.

    Results come back in block order whatever the completion order.

    Raises:
        InterruptedError: якщо прогін скасовано через token
    """
    validate_workers(workers)
    blocks = split_blocks(n_items, block_size)
    results: List[Any] = [None] * len(blocks)

    def guarded(block: int, start: int, count: int) -> Any:
        if token and token.is_cancelled():
            raise InterruptedError(f"Run cancelled before block {block}")
        return fn(block, start, count)

    if workers == 1 or len(blocks) <= 1:
        for block, start, count in blocks:
            results[block] = guarded(block, start, count)
        return results

    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
        futures = {
            executor.submit(guarded, block, start, count): block
            for block, start, count in blocks
        }
        for fut in concurrent.futures.as_completed(futures):
            block = futures[fut]
            try:
                results[block] = fut.result()
                logger.debug(f"Block {block + 1}/{len(blocks)} done")
            except InterruptedError:
                for pending in futures:
                    pending.cancel()
                raise
            except Exception as e:
                logger.error(f"Block {block} failed: {e}", exc_info=True)
                for pending in futures:
                    pending.cancel()
                raise
    return results


# === STATISTICS ===

def binomial_estimate(successes: int, n: int) -> Tuple[float, float]:
    """p̂ and √(p̂(1−p̂)/n)"""
    if n <= 0:
        return float('nan'), float('nan')
    p_hat = successes / n
    return p_hat, float(np.sqrt(p_hat * (1.0 - p_hat) / n))


def mean_and_se(values: Sequence[float]) -> Tuple[float, float]:
    """Sample mean and its standard error for independent values"""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        return float('nan'), float('nan')
    if arr.size == 1:
        return float(arr[0]), 0.0
    return float(arr.mean()), float(arr.std(ddof=1) / np.sqrt(arr.size))


def batch_means_se(series: Sequence[float], n_batches: int = config.DEFAULT_BATCHES) -> Tuple[float, float]:
    """Mean and batch-means standard error of a correlated series"""
    arr = np.asarray(series, dtype=np.float64)
    if arr.size < 2 * n_batches:
        return mean_and_se(arr)
    usable = arr.size - arr.size % n_batches
    batches = arr[:usable].reshape(n_batches, -1).mean(axis=1)
    return float(arr.mean()), float(batches.std(ddof=1) / np.sqrt(n_batches))


def bootstrap_error(samples: Sequence[float], n_bootstrap: int = 200, seed: int = 0) -> Tuple[float, float]:
    """Return (mean, stderr) via bootstrap resampling."""
    arr = np.asarray(samples, dtype=np.float64)
    rng = np.random.default_rng(seed)
    n = arr.size
    means = np.empty(n_bootstrap)
    for b in range(n_bootstrap):
        idx = rng.integers(0, n, size=n)
        means[b] = np.mean(arr[idx])
    return float(np.mean(arr)), float(np.std(means))


def autocorrelation_time(series: Sequence[float]) -> float:
    """Integrated autocorrelation time via initial positive sequence estimator."""
    arr = np.asarray(series, dtype=np.float64)
    n = arr.size
    var = np.var(arr)
    if var == 0:
        return 1.0
    centered = arr - arr.mean()
    tau_int = 0.5
    for t in range(1, n // 2):
        c_t = np.mean(centered[: n - t] * centered[t:]) / var
        if c_t < 0:
            break
        tau_int += c_t
    return max(tau_int, 0.5)
