"""
Rate-1/2 feedforward convolutional codes: encoding, weight spectrum,
Viterbi decoding on external bit metrics and the BER union bound.

Generators are octal with MSB-first taps: the most significant of the K
bits taps the current input and the least significant taps the input
K - 1 steps back. The encoder state holds the last K - 1 inputs with the
most recent one in its most significant bit.
"""
import csv
import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Dict, Optional, TextIO, Tuple

import numpy as np

from bicmbounds import trellis
from bicmbounds.errors import (ArgumentError, CatastrophicCodeError,
                               ConfigurationError)

logger = logging.getLogger(__name__)

# weight_spectrum refuses to enumerate beyond d_free + this
SPECTRUM_GUARD = 20
DEFAULT_SPAN = 14


@dataclass(frozen=True)
class ConvCode:
  """
  Attributes
  ----------
    generators: tuple[int, ...]
      generator polynomials, written in octal, one per coded bit
    constraint_length: int
      K; the code has 2^(K-1) states
  """
  generators: Tuple[int, ...] = (0o133, 0o171)
  constraint_length: int = 7

  def __post_init__(self):
    if self.constraint_length < 2:
      raise ConfigurationError('constraint length must be at least 2, got {}'.format(self.constraint_length))
    if len(self.generators) != 2:
      raise ConfigurationError('only rate-1/2 codes are supported, got {} generators'.format(len(self.generators)))
    for g in self.generators:
      if not 0 < g < 2 ** self.constraint_length:
        raise ConfigurationError('generator {:o} does not fit constraint length {}'.format(g, self.constraint_length))

  @property
  def memory(self) -> int:
    return self.constraint_length - 1

  @property
  def n_states(self) -> int:
    return 2 ** self.memory

  @property
  def n_outputs(self) -> int:
    return len(self.generators)

  @property
  def rate(self) -> float:
    return 1.0 / self.n_outputs

  @cached_property
  def taps(self) -> np.ndarray:
    """(n_outputs, K) tap matrix, column 0 multiplies the current input"""
    k = self.constraint_length
    return np.array([[(g >> (k - 1 - j)) & 1 for j in range(k)] for g in self.generators], dtype=np.int8)

  @cached_property
  def next_state(self) -> np.ndarray:
    """(n_states, 2) successor of each state under input 0 and 1"""
    table = np.empty((self.n_states, 2), dtype=np.int64)
    for state in range(self.n_states):
      for bit in (0, 1):
        table[state, bit] = (bit << (self.memory - 1)) | (state >> 1)
    table.setflags(write=False)
    return table

  @cached_property
  def outputs(self) -> np.ndarray:
    """(n_states, 2, n_outputs) coded bits of each branch"""
    table = np.empty((self.n_states, 2, self.n_outputs), dtype=np.int8)
    for state in range(self.n_states):
      for bit in (0, 1):
        register = (bit << self.memory) | state
        for (j, g) in enumerate(self.generators):
          table[state, bit, j] = bin(register & g).count('1') % 2
    table.setflags(write=False)
    return table

  def branch_symbol(self, state: int, bit: int) -> int:
    """Coded bits of a branch packed into an integer, first generator most significant"""
    value = 0
    for c in self.outputs[state, bit]:
      value = (value << 1) | int(c)
    return value

  def branch_weight(self, state: int, bit: int) -> int:
    return int(self.outputs[state, bit].sum())

  @classmethod
  def from_octal(cls, text: str) -> 'ConvCode':
    """Parses '133,171'; the constraint length is the bit length of the largest generator"""
    try:
      generators = tuple(int(g, 8) for g in text.split(','))
    except ValueError:
      raise ConfigurationError('generators must be comma-separated octal numbers, got {!r}'.format(text))
    return cls(generators, max(g.bit_length() for g in generators))


def encode(code: ConvCode, info_bits) -> np.ndarray:
  """
  Encodes from the zero state and appends K - 1 zero tail bits.

  Args:
    code: the convolutional code
    info_bits: sequence of 0/1
  Returns:
    (np.ndarray) coded bits, 2 * (len(info_bits) + K - 1) of them, the two
      outputs of each step adjacent
  """
  u = np.concatenate([np.asarray(info_bits, dtype=np.int64).ravel(), np.zeros(code.memory, dtype=np.int64)])
  coded = np.empty((len(u), code.n_outputs), dtype=np.int8)
  for (j, taps) in enumerate(code.taps):
    coded[:, j] = np.convolve(u, taps)[:len(u)] % 2
  return coded.ravel()


@dataclass(frozen=True)
class WeightSpectrum:
  """
  Attributes
  ----------
    d_free: int
      free distance
    entries: dict[int, tuple[int, int]]
      output weight d -> (A_d, W_I(d)) for every d in [d_free, d_max]
    d_max: int
      truncation weight
  """
  d_free: int
  entries: Dict[int, Tuple[int, int]]
  d_max: int

  def paths(self, d: int) -> int:
    return self.entries.get(d, (0, 0))[0]

  def info_weight(self, d: int) -> int:
    return self.entries.get(d, (0, 0))[1]


def weight_spectrum(code: ConvCode, d_max: Optional[int] = None) -> WeightSpectrum:
  """
  Detour counts and information weights up to output weight d_max.

  Breadth-first over (state, accumulated weight): each layer extends every
  surviving partial detour by one branch, merging those that share state and
  weight. Partial detours heavier than d_max are dropped.

  Args:
    code: the convolutional code
    d_max: truncation, default d_free + 14, at most d_free + 20
  Returns:
    (WeightSpectrum)
  """
  d_free = trellis.free_distance(code)
  if d_max is None:
    d_max = d_free + DEFAULT_SPAN
  if d_max > d_free + SPECTRUM_GUARD:
    raise ArgumentError('d_max={} exceeds d_free + {} = {}'.format(d_max, SPECTRUM_GUARD, d_free + SPECTRUM_GUARD))

  counts = {d: 0 for d in range(d_free, d_max + 1)}
  info = {d: 0 for d in range(d_free, d_max + 1)}

  # (state, weight) -> (number of partial detours, their total info weight)
  frontier = {}
  first = (int(code.next_state[0, 1]), code.branch_weight(0, 1))
  if first[1] <= d_max:
    frontier[first] = (1, 1)

  max_layers = code.n_states * (d_max + 1)
  layers = 0
  while frontier:
    layers += 1
    if layers > max_layers:
      raise CatastrophicCodeError('detours of weight <= {} do not terminate'.format(d_max))
    extended = {}
    for ((state, weight), (n, w_info)) in frontier.items():
      for bit in (0, 1):
        nextstate = int(code.next_state[state, bit])
        new_weight = weight + code.branch_weight(state, bit)
        if new_weight > d_max:
          continue
        new_info = w_info + bit * n
        if nextstate == 0:
          counts[new_weight] += n
          info[new_weight] += new_info
        else:
          old_n, old_info = extended.get((nextstate, new_weight), (0, 0))
          extended[(nextstate, new_weight)] = (old_n + n, old_info + new_info)
    frontier = extended

  logger.debug('weight spectrum of %s up to d=%d after %d layers',
               ','.join('{:o}'.format(g) for g in code.generators), d_max, layers)
  entries = {d: (counts[d], info[d]) for d in range(d_free, d_max + 1)}
  return WeightSpectrum(d_free, entries, d_max)


def viterbi(code: ConvCode, metrics) -> np.ndarray:
  """
  Minimum-metric path through the zero-tail trellis.

  Args:
    code: the convolutional code
    metrics: (N, 2) array with N the coded length; metrics[k, b] is the cost
      of coded bit k being b, smaller is more likely
  Returns:
    (np.ndarray) decoded info bits without the tail

  On equal path metrics the survivor comes from the smaller predecessor
  state, so all-equal metrics decode to all zeros.
  """
  metrics = np.asarray(metrics, dtype=float)
  n = code.n_outputs
  if metrics.ndim != 2 or metrics.shape[1] != 2 or metrics.shape[0] % n:
    raise ArgumentError('metrics must be an (N, 2) array with N a multiple of {}, got shape {}'.format(n, metrics.shape))
  steps = metrics.shape[0] // n
  if steps < code.memory:
    raise ArgumentError('{} steps cannot hold the {}-bit tail'.format(steps, code.memory))

  mask = code.n_states - 1
  targets = np.arange(code.n_states)
  # the input bit that leads into each state, and its two predecessors
  bit_in = targets >> (code.memory - 1)
  pred0 = (targets << 1) & mask
  pred1 = pred0 | 1

  # branch metrics of every (step, state, input)
  per_bit = metrics.reshape(steps, n, 2)
  branch = per_bit[:, np.arange(n)[None, None, :], code.outputs].sum(axis=-1)

  path = np.full(code.n_states, np.inf)
  path[0] = 0.0
  decisions = np.empty((steps, code.n_states), dtype=bool)
  for t in range(steps):
    cand0 = path[pred0] + branch[t, pred0, bit_in]
    cand1 = path[pred1] + branch[t, pred1, bit_in]
    take1 = cand1 < cand0
    decisions[t] = take1
    path = np.where(take1, cand1, cand0)

  bits = np.empty(steps, dtype=np.int8)
  state = 0
  for t in range(steps - 1, -1, -1):
    bits[t] = state >> (code.memory - 1)
    state = ((state << 1) & mask) | int(decisions[t, state])
  return bits[:steps - code.memory]


def ber_union_bound(spectrum: WeightSpectrum, f: Callable[[int], float]) -> Tuple[float, float]:
  """
  Union bound on the bit error rate, sum of W_I(d) f(d) over the spectrum.

  Returns:
    (float, float) the bound and the share of its last nonzero term, a
      truncation diagnostic
  """
  terms = []
  for d in range(spectrum.d_free, spectrum.d_max + 1):
    w_info = spectrum.info_weight(d)
    if w_info:
      terms.append(w_info * f(d))
  total = math.fsum(terms)
  if total <= 0.0:
    return 0.0, 0.0
  return total, terms[-1] / total


def write_spectrum(out: TextIO, spectrum: WeightSpectrum, header: Optional[str] = None):
  """Writes `d,A_d,W_I` rows"""
  if header:
    out.write(header + '\n')
  writer = csv.writer(out, lineterminator='\n')
  writer.writerow(['d', 'A_d', 'W_I'])
  for d in range(spectrum.d_free, spectrum.d_max + 1):
    writer.writerow([d, spectrum.paths(d), spectrum.info_weight(d)])
