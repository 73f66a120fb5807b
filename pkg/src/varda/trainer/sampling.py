"""Seeded minibatch and noise streams.

Batch ``i`` of a stream is a pure function of (seed, stream, i): positions
``i·M … i·M + M − 1`` of an endless sequence of per-epoch permutations. A
resumed or prefetching run therefore consumes exactly the batches an
uninterrupted one would.
"""

from __future__ import annotations

import logging
import queue
import threading
from collections.abc import Iterator
from dataclasses import dataclass

import numpy as np

from ..data import Split
from ..errors import ContractViolation

logger = logging.getLogger(__name__)

SOURCE_STREAM = 1
TARGET_STREAM = 2
NOISE_STREAM = 3


class EpochSampler:
    """Without-replacement index draws: every item once per epoch, reshuffled each epoch."""

    def __init__(self, size: int, seed: int, stream: int):
        if size < 1:
            raise ContractViolation("cannot sample from an empty split")
        self.size = size
        self.seed = seed
        self.stream = stream
        self._cache: tuple[int, np.ndarray] | None = None

    def permutation(self, epoch: int) -> np.ndarray:
        if self._cache is None or self._cache[0] != epoch:
            rng = np.random.default_rng([self.seed, self.stream, epoch])
            self._cache = (epoch, rng.permutation(self.size))
        return self._cache[1]

    def batch(self, iteration: int, batch_size: int) -> np.ndarray:
        out = np.empty(batch_size, dtype=np.int64)
        for j in range(batch_size):
            epoch, pos = divmod(iteration * batch_size + j, self.size)
            out[j] = self.permutation(epoch)[pos]
        return out


def draw_noise(
    seed: int, iteration: int, batch_size: int, samples: int, latent_dim: int
) -> tuple[np.ndarray, np.ndarray]:
    """ε for the source and the target batch of one iteration, each M×L×n."""
    rng = np.random.default_rng([seed, NOISE_STREAM, iteration])
    shape = (batch_size, samples, latent_dim)
    return rng.standard_normal(shape), rng.standard_normal(shape)


@dataclass
class Batch:
    iteration: int
    source_indices: np.ndarray
    target_indices: np.ndarray
    source_images: np.ndarray
    source_labels: np.ndarray
    target_images: np.ndarray
    eps_source: np.ndarray
    eps_target: np.ndarray


class BatchStream:
    """Iterates the batches of iterations ``start … stop − 1``.

    With ``prefetch > 0`` a worker thread assembles batches ahead into a
    bounded queue; the order is fixed by the iteration index either way.
    """

    def __init__(
        self,
        source: Split,
        target: Split,
        *,
        seed: int,
        batch_size: int,
        samples: int,
        latent_dim: int,
        dtype: np.dtype,
        prefetch: int = 0,
    ):
        if not source.has_labels:
            raise ContractViolation("the source split must carry labels")
        self.source = source
        self.target = target
        self.seed = seed
        self.batch_size = batch_size
        self.samples = samples
        self.latent_dim = latent_dim
        self.dtype = dtype
        self.prefetch = prefetch
        self._source_sampler = EpochSampler(len(source), seed, SOURCE_STREAM)
        self._target_sampler = EpochSampler(len(target), seed, TARGET_STREAM)

    def make(self, iteration: int) -> Batch:
        si = self._source_sampler.batch(iteration, self.batch_size)
        ti = self._target_sampler.batch(iteration, self.batch_size)
        eps_s, eps_t = draw_noise(
            self.seed, iteration, self.batch_size, self.samples, self.latent_dim
        )
        return Batch(
            iteration=iteration,
            source_indices=si,
            target_indices=ti,
            source_images=self.source.images(si).astype(self.dtype),
            source_labels=self.source.labels(si).astype(self.dtype),
            target_images=self.target.images(ti).astype(self.dtype),
            eps_source=eps_s.astype(self.dtype),
            eps_target=eps_t.astype(self.dtype),
        )

    def iterate(self, start: int, stop: int) -> Iterator[Batch]:
        if self.prefetch <= 0:
            for it in range(start, stop):
                yield self.make(it)
            return
        yield from self._prefetched(start, stop)

    def _prefetched(self, start: int, stop: int) -> Iterator[Batch]:
        batches: queue.Queue[Batch | Exception | None] = queue.Queue(maxsize=self.prefetch)
        stop_event = threading.Event()

        def offer(item: Batch | Exception | None) -> bool:
            while not stop_event.is_set():
                try:
                    batches.put(item, timeout=0.1)
                    return True
                except queue.Full:
                    continue
            return False

        def worker() -> None:
            try:
                for it in range(start, stop):
                    if not offer(self.make(it)):
                        return
            except Exception as err:
                offer(err)
                return
            offer(None)  # sentinel

        thread = threading.Thread(target=worker, name="varda-prefetch", daemon=True)
        thread.start()
        logger.debug(f"Prefetch worker started for iterations {start}..{stop - 1}")
        try:
            while True:
                item = batches.get()
                if item is None:
                    break
                if isinstance(item, Exception):
                    raise item
                yield item
        finally:
            stop_event.set()
            thread.join(timeout=5.0)
