"""
OpenFST view of a convolutional code trellis.

Labels are shifted by one because 0 is epsilon: an input label is
info bit + 1 and an output label is branch symbol + 1, where the branch
symbol packs the coded bits of one step MSB-first (first generator first).
Weights live in the tropical semiring.
"""
import logging
from typing import TYPE_CHECKING, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pynini

from bicmbounds.errors import ArgumentError, BicmError, CatastrophicCodeError

if TYPE_CHECKING:
  from bicmbounds.convcode import ConvCode

logger = logging.getLogger(__name__)


def _check(fst: pynini.Fst) -> pynini.Fst:
  if not fst.verify():
    raise BicmError('FST malformed')
  return fst


def trellis_fst(code: 'ConvCode', weighted: bool = False) -> pynini.Fst:
  """
  Returns the trellis as a cyclic transducer from info bits to branch symbols

  Args:
    code: the convolutional code
    weighted: put the Hamming weight of each branch output on its arc
  Returns:
    (Fst) state k is encoder state k; state 0 is both start and final
  """
  fst = pynini.Fst()
  fst.add_states(code.n_states)
  fst.set_start(0)
  fst.set_final(0)
  for state in range(code.n_states):
    for bit in (0, 1):
      weight = float(code.branch_weight(state, bit)) if weighted else 0.0
      arc = pynini.Arc(bit + 1, code.branch_symbol(state, bit) + 1, weight, int(code.next_state[state, bit]))
      fst.add_arc(state, arc)
  return _check(fst)


def detour_fst(code: 'ConvCode') -> pynini.Fst:
  """
  Paths that leave the zero state once and return to it once.

  State 0 is the departure, states 1..n_states-1 are the nonzero encoder
  states and the extra last state is the return. Arc weights are branch
  output weights, so a path weighs its codeword's Hamming weight.
  """
  fst = pynini.Fst()
  fst.add_states(code.n_states + 1)
  arrival = code.n_states
  fst.set_start(0)
  fst.set_final(arrival)

  def add(state, bit):
    nextstate = int(code.next_state[state, bit])
    arc = pynini.Arc(bit + 1, code.branch_symbol(state, bit) + 1, float(code.branch_weight(state, bit)),
                     arrival if nextstate == 0 else nextstate)
    fst.add_arc(state, arc)

  add(0, 1)
  for state in range(1, code.n_states):
    for bit in (0, 1):
      add(state, bit)
  return _check(fst)


def free_distance(code: 'ConvCode') -> int:
  """Minimum Hamming weight over all detours, the shortest distance through detour_fst"""
  fst = detour_fst(code)
  distances = pynini.shortestdistance(fst, reverse=True)
  d_free = float(distances[fst.start()])
  if not np.isfinite(d_free) or d_free <= 0:
    raise CatastrophicCodeError('the code has a detour of weight {}'.format(d_free))
  return int(round(d_free))


def enumerate_detours(code: 'ConvCode', max_weight: int, max_length: Optional[int] = None) -> List[Tuple[Tuple[int, ...], int]]:
  """
  Every detour of output weight <= max_weight, by exhaustive depth-first
  search over the arcs of detour_fst.

  Args:
    code: the convolutional code
    max_weight: largest output weight kept
    max_length: longest detour in branches; by default n_states * (max_weight + 1),
      beyond which a path must repeat a (state, weight) pair
  Returns:
    (list) (info bits, output weight) per detour, tail bits included
  """
  fst = detour_fst(code)
  arrival = code.n_states
  guarded = max_length is None
  if guarded:
    max_length = code.n_states * (max_weight + 1)

  detours = []
  stack = [(fst.start(), (), 0)]
  while stack:
    state, bits, weight = stack.pop()
    if state == arrival:
      detours.append((bits, weight))
      continue
    if len(bits) >= max_length:
      if guarded:
        raise CatastrophicCodeError('a detour of weight <= {} runs past {} branches'.format(max_weight, max_length))
      continue
    for arc in fst.arcs(state):
      new_weight = weight + int(round(float(arc.weight)))
      if new_weight <= max_weight:
        stack.append((arc.nextstate, bits + (arc.ilabel - 1,), new_weight))
  return detours


def spectrum_from_detours(detours: Sequence[Tuple[Tuple[int, ...], int]]) -> Dict[int, Tuple[int, int]]:
  """Aggregates detours into {weight: (path count, total info weight)}"""
  entries = {}
  for (bits, weight) in detours:
    count, info = entries.get(weight, (0, 0))
    entries[weight] = (count + 1, info + sum(bits))
  return entries


def _lattice(code: 'ConvCode', metrics: np.ndarray) -> pynini.Fst:
  # linear acceptor over branch symbols weighted by the summed bit metrics of each step
  n = code.n_outputs
  steps = metrics.shape[0] // n
  fst = pynini.Fst()
  fst.add_states(steps + 1)
  fst.set_start(0)
  fst.set_final(steps)
  for t in range(steps):
    for symbol in range(2 ** n):
      bits = [(symbol >> (n - 1 - j)) & 1 for j in range(n)]
      weight = float(sum(metrics[n * t + j, bits[j]] for j in range(n)))
      fst.add_arc(t, pynini.Arc(symbol + 1, symbol + 1, weight, t + 1))
  return _check(fst)


def shortest_path_decode(code: 'ConvCode', metrics) -> Tuple[np.ndarray, float]:
  """
  Maximum-likelihood decoding by composing the trellis with a lattice of
  branch metrics and taking the shortest path.

  Args:
    code: the convolutional code
    metrics: (N, 2) array, metrics[k, b] is the cost of coded bit k being b
  Returns:
    (np.ndarray, float) decoded info bits without the tail, and the path metric
  """
  metrics = np.asarray(metrics, dtype=float)
  if metrics.ndim != 2 or metrics.shape[1] != 2 or metrics.shape[0] % code.n_outputs:
    raise ArgumentError('metrics must be an (N, 2) array with N a multiple of {}'.format(code.n_outputs))
  steps = metrics.shape[0] // code.n_outputs
  if steps < code.memory:
    raise ArgumentError('{} steps cannot hold the {}-bit tail'.format(steps, code.memory))

  trellis = trellis_fst(code)
  trellis.arcsort(sort_type='olabel')
  lattice = _lattice(code, metrics)
  lattice.arcsort(sort_type='ilabel')
  best = pynini.shortestpath(pynini.compose(trellis, lattice))
  if best.start() < 0:
    raise ArgumentError('no trellis path matches the lattice')

  bits = []
  total = 0.0
  state = best.start()
  while best.num_arcs(state):
    arc = next(iter(best.arcs(state)))
    bits.append(arc.ilabel - 1)
    total += float(arc.weight)
    state = arc.nextstate
  total += float(best.final(state))
  logger.debug('shortest path decode of %d steps: metric %g', steps, total)
  return np.asarray(bits[:steps - code.memory], dtype=np.int8), total
