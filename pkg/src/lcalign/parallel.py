"""Optional multi-process candidate evaluation.

Results are independent of the worker count: each candidate's loss is
computed in isolation and the ordered loss array is reassembled before the
argmin reduction, so tie-breaking sees the same candidate order as the
serial path.
"""

from __future__ import annotations

import multiprocessing
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .geometry import euler_to_matrix
from .objective import ObjectiveEvaluator

_WORKER_EVALUATOR = None


def _init_worker(evaluator):
    global _WORKER_EVALUATOR
    _WORKER_EVALUATOR = evaluator


def _eval_chunk(args):
    eulers, translations = args
    out = np.empty(len(eulers))
    for i in range(len(eulers)):
        out[i] = _WORKER_EVALUATOR.evaluate(euler_to_matrix(eulers[i]), translations[i])
    return out


class ParallelBatchLoss:
    """Process-pool batch loss; drop-in for make_serial_batch_loss output."""

    def __init__(self, evaluator: ObjectiveEvaluator, workers: int):
        self._workers = max(1, int(workers))
        try:
            ctx = multiprocessing.get_context("fork")
        except ValueError:  # platforms without fork
            ctx = multiprocessing.get_context("spawn")
        self._pool = ProcessPoolExecutor(
            max_workers=self._workers,
            mp_context=ctx,
            initializer=_init_worker,
            initargs=(evaluator,),
        )

    def __call__(self, eulers: np.ndarray, translations: np.ndarray) -> np.ndarray:
        n = len(eulers)
        # a few chunks per worker amortizes dispatch without skewing load
        n_chunks = max(1, min(n, self._workers * 4))
        bounds = np.linspace(0, n, n_chunks + 1, dtype=int)
        chunks = [
            (eulers[a:b], translations[a:b]) for a, b in zip(bounds[:-1], bounds[1:]) if b > a
        ]
        return np.concatenate(list(self._pool.map(_eval_chunk, chunks)))

    def close(self) -> None:
        self._pool.shutdown()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
