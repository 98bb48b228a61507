"""
Monte Carlo simulation of the BICM chain and of the subset-decision event
the expurgated bounds are built on.

Every block draws from its own generator seeded with (seed, block index),
so results do not depend on how blocks are spread over worker processes.
Within a block the draws come in a fixed order: info bits, interleaver
permutation, noise, then fading.
"""
import csv
import dataclasses
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Iterable, List, Optional, Sequence, TextIO, Tuple

import numpy as np

from bicmbounds.constellation import Constellation
from bicmbounds.convcode import ConvCode, encode, viterbi
from bicmbounds.errors import ConfigurationError
from bicmbounds.pep import AWGN, ChannelSpec

logger = logging.getLogger(__name__)

Z95 = 1.96


@dataclass(frozen=True)
class SimConfig:
  """
  Attributes
  ----------
    constellation: Constellation
      signal set and labeling
    channel: ChannelSpec
    code: ConvCode
    block_length: int
      info bits per block
    blocks: int
      blocks per SNR point
    seed: int
    max_errors: int
      stop early once this many bit errors have been counted
    workers: int
      worker processes; 1 runs in-process
  """
  constellation: Constellation
  channel: ChannelSpec
  code: ConvCode = field(default_factory=ConvCode)
  block_length: int = 10000
  blocks: int = 200
  seed: int = 0
  max_errors: int = 10000
  workers: int = 1

  def __post_init__(self):
    for name in ('block_length', 'blocks', 'max_errors', 'workers'):
      if getattr(self, name) < 1:
        raise ConfigurationError('{} must be positive, got {}'.format(name.replace('_', ' '), getattr(self, name)))


@dataclass(frozen=True)
class BerEstimate:
  """
  Attributes
  ----------
    ber: float
      error frequency
    bits: int
      trials counted (info bits, or decision events for estimate_f)
    errors: int
    ci95: float
      half-width of the normal-approximation 95% interval
  """
  ber: float
  bits: int
  errors: int
  ci95: float

  @classmethod
  def from_counts(cls, errors: int, bits: int) -> 'BerEstimate':
    p = errors / bits if bits else 0.0
    return cls(p, bits, errors, Z95 * math.sqrt(p * (1.0 - p) / bits) if bits else 0.0)

  @property
  def std_error(self) -> float:
    return self.ci95 / Z95


def _draw_noise(rng: np.random.Generator, ch: ChannelSpec, shape) -> np.ndarray:
  sigma = math.sqrt(ch.n0 / 2.0)
  return sigma * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def _draw_fading(rng: np.random.Generator, ch: ChannelSpec, shape) -> np.ndarray:
  """unit mean-square complex Gaussian gains, all ones on the awgn channel"""
  if ch.model == AWGN:
    return np.ones(shape, dtype=complex)
  return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def bit_metrics(c: Constellation, y: np.ndarray, h: np.ndarray) -> np.ndarray:
  """
  Suboptimal bit metrics min over z in X_b^i of |y - h z|^2.

  Args:
    c: the constellation
    y: received samples
    h: fading gains, same shape as y
  Returns:
    (np.ndarray) shape (len(y), m, 2), [k, i - 1, b] for bit position i
  """
  dist = np.abs(y[:, None] - h[:, None] * c.array[None, :]) ** 2
  lam = np.empty((len(y), c.m, 2))
  for i in range(c.m):
    column = c.bit_matrix[:, i]
    for b in (0, 1):
      lam[:, i, b] = dist[:, column == b].min(axis=1)
  return lam


def simulate_block(cfg: SimConfig, block: int) -> Tuple[int, int]:
  """
  One coded block through interleaver, mapper, channel, metric computation,
  de-interleaver and Viterbi decoder.

  Returns:
    (int, int) info-bit errors and info bits
  """
  rng = np.random.default_rng([cfg.seed, block])
  c = cfg.constellation

  info = rng.integers(0, 2, cfg.block_length, dtype=np.int8)
  coded = encode(cfg.code, info)
  perm = rng.permutation(len(coded))

  # zero padding fills the last symbol and is dropped before decoding
  pad = (-len(coded)) % c.m
  bits = np.concatenate([coded[perm], np.zeros(pad, dtype=np.int8)]).reshape(-1, c.m)
  values = bits.astype(np.int64) @ (1 << np.arange(c.m - 1, -1, -1))
  x = c.array[c.label_index[values]]

  noise = _draw_noise(rng, cfg.channel, len(x))
  h = _draw_fading(rng, cfg.channel, len(x))
  y = h * x + noise

  lam = bit_metrics(c, y, h).reshape(-1, 2)[:len(coded)]
  metrics = np.empty_like(lam)
  metrics[perm] = lam

  decoded = viterbi(cfg.code, metrics)
  return int(np.count_nonzero(decoded != info)), cfg.block_length


def _batches(cfg: SimConfig) -> Iterable[List[Tuple[int, int]]]:
  if cfg.workers == 1:
    for block in range(cfg.blocks):
      yield [simulate_block(cfg, block)]
    return
  with ProcessPoolExecutor(max_workers=cfg.workers) as executor:
    for start in range(0, cfg.blocks, cfg.workers):
      blocks = range(start, min(start + cfg.workers, cfg.blocks))
      yield list(executor.map(partial(simulate_block, cfg), blocks))


def simulate_ber(cfg: SimConfig) -> BerEstimate:
  """
  Bit error rate of the coded chain at one SNR point.

  Blocks are accumulated in index order and the run stops after the first
  block that brings the error count to max_errors, whatever the number of
  workers.
  """
  errors = 0
  bits = 0
  blocks = 0
  for batch in _batches(cfg):
    for (block_errors, block_bits) in batch:
      errors += block_errors
      bits += block_bits
      blocks += 1
      if errors >= cfg.max_errors:
        break
    if errors >= cfg.max_errors:
      logger.info('%g dB: early stop after %d blocks with %d errors', cfg.channel.es_n0_db, blocks, errors)
      break
  estimate = BerEstimate.from_counts(errors, bits)
  logger.info('%s %s %s %g dB: ber %.3e (%d/%d)', cfg.constellation.name, cfg.constellation.labeling_name,
              cfg.channel.model, cfg.channel.es_n0_db, estimate.ber, errors, bits)
  return estimate


def sweep(cfg: SimConfig, snrs_db: Sequence[float]) -> List[Tuple[float, BerEstimate]]:
  """simulate_ber at every Es/N0 in snrs_db, channel model taken from cfg"""
  rows = []
  for snr in snrs_db:
    point = dataclasses.replace(cfg, channel=ChannelSpec(cfg.channel.model, snr))
    rows.append((snr, simulate_ber(point)))
  return rows


def estimate_f(c: Constellation, ch: ChannelSpec, d: int, trials: int, seed: int = 0, batch: int = 20000) -> BerEstimate:
  """
  Monte Carlo estimate of f(d), the probability that d independent symbol
  decisions between bit subsets favor the wrong subsets in sum.

  Each of the d positions draws a bit position and a point uniformly, which
  is the same as drawing (i, b) uniformly and then x uniformly in X_b^i. An
  error is counted when the summed best opposite-subset metric is no larger
  than the summed best own-subset metric.

  Args:
    c: the constellation
    ch: the channel
    d: Hamming distance, >= 1
    trials: number of events
    seed: generator seed
    batch: events drawn per vectorized step
  Returns:
    (BerEstimate) event frequency over `trials` events
  """
  if d < 1:
    raise ConfigurationError('Hamming distance must be at least 1, got {}'.format(d))
  if trials < 1:
    raise ConfigurationError('need at least one trial')

  rng = np.random.default_rng(seed)
  bits_by_position = c.bit_matrix.T
  errors = 0
  done = 0
  while done < trials:
    size = min(batch, trials - done)
    i = rng.integers(0, c.m, (size, d))
    k = rng.integers(0, len(c), (size, d))
    noise = _draw_noise(rng, ch, (size, d))
    h = _draw_fading(rng, ch, (size, d))
    y = h * c.array[k] + noise

    dist = np.abs(y[..., None] - h[..., None] * c.array) ** 2
    labels = bits_by_position[i]
    same = labels == labels[np.arange(size)[:, None], np.arange(d)[None, :], k][..., None]
    own = np.where(same, dist, np.inf).min(axis=-1).sum(axis=-1)
    opposite = np.where(same, np.inf, dist).min(axis=-1).sum(axis=-1)
    errors += int(np.count_nonzero(opposite <= own))
    done += size
  return BerEstimate.from_counts(errors, trials)


def write_results(out: TextIO, rows: Sequence[Tuple[float, BerEstimate]], header: Optional[str] = None):
  """Writes `snr_db,ber,bits,errors,ci95` rows"""
  if header:
    out.write(header + '\n')
  writer = csv.writer(out, lineterminator='\n')
  writer.writerow(['snr_db', 'ber', 'bits', 'errors', 'ci95'])
  for (snr, est) in rows:
    writer.writerow(['{:g}'.format(snr), '{:.6e}'.format(est.ber), est.bits, est.errors, '{:.6e}'.format(est.ci95)])
