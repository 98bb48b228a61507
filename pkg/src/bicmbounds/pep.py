"""
Pairwise error probabilities and the expurgated-bound kernels.

The metric difference for a pair at squared distance d2 is
Delta = |y - h z|^2 - |y - h x|^2 and an error occurs when Delta <= 0.
Its Laplace transform phi(s) = E[exp(-s Delta)] is

  awgn:          exp(-s d2 + s^2 d2 N0)
  rayleigh-csi:  1 / (1 + d2 s (1 - s N0))

and f(d) = P(Delta_1 + ... + Delta_d <= 0) is recovered by inverting
Phi(s) / s along Re s = 1 / (2 N0).
"""
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, List, Sequence, Tuple

import numpy as np
from scipy import integrate, special

from bicmbounds.errors import (ArgumentError, ConfigurationError, DomainError,
                               NumericalFailureError)

logger = logging.getLogger(__name__)

AWGN = 'awgn'
RAYLEIGH = 'rayleigh-csi'
MODELS = (AWGN, RAYLEIGH)

EXPANSION_CAP = 12

# atoms closer than this in squared distance are merged
_MERGE_DIGITS = 10


@dataclass(frozen=True)
class ChannelSpec:
  """
  Channel model and noise level.

  Attributes
  ----------
    model: str
      'awgn' or 'rayleigh-csi' (i.i.d. unit-mean-square Rayleigh fading per
      symbol, known at the receiver)
    es_n0_db: float
      Es/N0 in dB; +inf means noiseless
  """
  model: str = RAYLEIGH
  es_n0_db: float = 10.0

  def __post_init__(self):
    if self.model not in MODELS:
      raise ConfigurationError('unknown channel model {!r}; choose from {}'.format(self.model, MODELS))

  @property
  def n0(self) -> float:
    """complex noise variance under unit symbol energy"""
    if math.isinf(self.es_n0_db) and self.es_n0_db > 0:
      return 0.0
    return 10.0 ** (-self.es_n0_db / 10.0)

  @classmethod
  def noiseless(cls, model: str = RAYLEIGH) -> 'ChannelSpec':
    return cls(model, math.inf)


def saddlepoint(ch: ChannelSpec) -> float:
  return 1.0 / (2.0 * ch.n0)


def phi_delta(ch: ChannelSpec, d2: float, s):
  """
  Laplace transform of the metric difference of one pair.

  Args:
    ch: the channel
    d2: squared distance; math.inf stands for the aleph target
    s: complex argument, scalar or array
  Returns:
    complex value(s) of phi at s
  """
  s = np.asarray(s, dtype=complex)
  if math.isinf(d2):
    return np.zeros_like(s) if s.ndim else complex(0.0)

  g = s * (1.0 - s * ch.n0)
  if ch.model == AWGN:
    # same as exp(-s d2 + s^2 d2 N0)
    value = np.exp(-d2 * g)
  else:
    if np.any(np.real(g) * d2 <= -1.0):
      raise DomainError('s is outside the convergence strip for d2={}'.format(d2))
    value = 1.0 / (1.0 + d2 * g)
  return value if s.ndim else complex(value)


def q_function(x):
  return 0.5 * special.erfc(np.asarray(x) / math.sqrt(2.0))


def _check_distances(d2_list: Sequence[float]) -> List[float]:
  d2_list = [float(d2) for d2 in d2_list]
  if not d2_list:
    raise ArgumentError('need at least one squared distance')
  if any(d2 < 0 or math.isnan(d2) or math.isinf(d2) for d2 in d2_list):
    raise ArgumentError('squared distances must be finite and non-negative')
  return d2_list


def pep_exact(ch: ChannelSpec, d2_list: Sequence[float]) -> float:
  """
  Exact pairwise error probability of a sequence pair whose symbols differ
  at the given squared distances.

  Args:
    ch: the channel
    d2_list: squared distance of every differing symbol
  Returns:
    (float) probability in [0, 1/2]
  """
  d2_list = _check_distances(d2_list)
  total = math.fsum(d2_list)
  if total == 0.0:
    return 0.5
  if ch.n0 == 0.0:
    return 0.0

  if ch.model == AWGN:
    return float(q_function(math.sqrt(total / (2.0 * ch.n0))))

  c = np.asarray([d2 / (4.0 * ch.n0) for d2 in d2_list if d2 > 0])

  def integrand(theta):
    s2 = math.sin(theta) ** 2
    return float(np.prod(s2 / (s2 + c)))

  value, _ = integrate.quad(integrand, 0.0, math.pi / 2, epsabs=1e-14, epsrel=1e-12, limit=200)
  return value / math.pi


def chernoff_bound(ch: ChannelSpec, d2_list: Sequence[float]) -> float:
  """Product of the pair transforms at the saddlepoint"""
  d2_list = _check_distances(d2_list)
  if ch.n0 == 0.0:
    return 0.0 if any(d2_list) else 1.0
  if ch.model == AWGN:
    return math.exp(-math.fsum(d2_list) / (4.0 * ch.n0))
  return float(np.prod([1.0 / (1.0 + d2 / (4.0 * ch.n0)) for d2 in d2_list]))


@dataclass(frozen=True)
class DistanceMixture:
  """
  Squared-distance atoms of an expurgated bound.

  Every (bit position, bit value, point) slot has weight 1/(m 2^m) and
  contributes the sum of the transforms of its targets, so each target is an
  atom of that weight. The aleph target is the atom at d2 = inf, whose
  transform is zero.

  Attributes
  ----------
    atoms: tuple[tuple[float, float], ...]
      (d2, weight) with distinct d2 in increasing order
  """
  atoms: Tuple[Tuple[float, float], ...]

  def __post_init__(self):
    for (d2, w) in self.atoms:
      if w < 0 or d2 < 0:
        raise ArgumentError('mixture atoms need non-negative distance and weight')

  @classmethod
  def from_terms(cls, terms: Iterable[Tuple[float, float]]) -> 'DistanceMixture':
    """Aggregates (d2, weight) terms; equal distances are merged in first-seen order"""
    merged = {}
    representative = {}
    for (d2, w) in terms:
      key = math.inf if math.isinf(d2) else round(d2, _MERGE_DIGITS)
      representative.setdefault(key, d2)
      merged[key] = merged.get(key, 0.0) + w
    return cls(tuple((representative[k], merged[k]) for k in sorted(merged)))

  @property
  def total_weight(self) -> float:
    return math.fsum(w for (_, w) in self.atoms)

  @property
  def aleph_weight(self) -> float:
    return math.fsum(w for (d2, w) in self.atoms if math.isinf(d2))

  @property
  def finite_atoms(self) -> Tuple[Tuple[float, float], ...]:
    return tuple((d2, w) for (d2, w) in self.atoms if not math.isinf(d2) and w > 0)

  def inverse_harmonic(self) -> float:
    """sum of w / d2, i.e. the inverse of the harmonic mean squared distance"""
    return math.fsum(w / d2 for (d2, w) in self.finite_atoms)

  def transform(self, ch: ChannelSpec, s):
    s = np.asarray(s, dtype=complex)
    total = np.zeros_like(s)
    for (d2, w) in self.finite_atoms:
      total = total + w * phi_delta(ch, d2, s)
    return total


def inversion_estimate(mix: DistanceMixture, ch: ChannelSpec, d: int, nodes: int) -> float:
  """
  Gauss-Chebyshev estimate of f(d) with `nodes` nodes on s = c (1 + j tau),
  tau_k = tan((2k - 1) pi / (2 nodes)); conjugate symmetry halves the sum.
  """
  c = saddlepoint(ch)
  k = np.arange(1, nodes // 2 + 1)
  tau = np.tan((2 * k - 1) * math.pi / (2 * nodes))
  phi = mix.transform(ch, c * (1.0 + 1j * tau)) ** d
  return float(np.sum(phi.real + tau * phi.imag) / nodes)


def f_bound(mix: DistanceMixture, ch: ChannelSpec, d: int, nodes: int = 64, max_nodes: int = 2 ** 14, rtol: float = 1e-9) -> float:
  """
  Expurgated bound f(d) by numerical Laplace inversion.

  The node count doubles until two successive estimates agree to `rtol`.

  Args:
    mix: distance mixture of the bound
    ch: the channel
    d: Hamming distance, >= 1
  Returns:
    (float) the bound
  """
  if d < 1:
    raise ArgumentError('Hamming distance must be at least 1, got {}'.format(d))
  if ch.n0 == 0.0:
    return 0.0

  previous = inversion_estimate(mix, ch, d, nodes)
  while True:
    nodes *= 2
    current = inversion_estimate(mix, ch, d, nodes)
    change = abs(current - previous)
    if change <= rtol * abs(current) or change < 1e-300:
      logger.debug('f(%d) at %g dB converged with %d nodes', d, ch.es_n0_db, nodes)
      return current
    if nodes >= max_nodes:
      raise NumericalFailureError(
        'Laplace inversion did not converge for d={} at {} dB'.format(d, ch.es_n0_db),
        {'nodes': nodes, 'previous': previous, 'current': current,
         'relative_change': change / abs(current) if current else math.inf})
    previous = current


def _compositions(total: int, parts: int) -> Iterator[Tuple[int, ...]]:
  if parts == 1:
    yield (total,)
    return
  for first in range(total, -1, -1):
    for rest in _compositions(total - first, parts - 1):
      yield (first,) + rest


def f_bound_expansion(mix: DistanceMixture, ch: ChannelSpec, d: int) -> float:
  """
  f(d) by explicit expansion over the mixture atoms: the multinomial sum of
  exact pairwise error probabilities. Sequences that use the aleph target
  have zero probability and drop out.
  """
  if d < 1:
    raise ArgumentError('Hamming distance must be at least 1, got {}'.format(d))
  if d > EXPANSION_CAP:
    raise ArgumentError('expansion is capped at d={}; use f_bound for d={}'.format(EXPANSION_CAP, d))

  atoms = mix.finite_atoms
  if not atoms:
    return 0.0
  terms = []
  for counts in _compositions(d, len(atoms)):
    coefficient = math.factorial(d)
    weight = 1.0
    d2_list = []
    for ((d2, w), k) in zip(atoms, counts):
      coefficient //= math.factorial(k)
      weight *= w ** k
      d2_list.extend([d2] * k)
    terms.append(coefficient * weight * pep_exact(ch, d2_list))
  return math.fsum(terms)


def f_asymptotic(dhc2: float, ch: ChannelSpec, d: int) -> float:
  """High-SNR Rayleigh-fading asymptote binomial(2d-1, d) (N0 / dhc2)^d"""
  if ch.model != RAYLEIGH:
    raise ArgumentError('the asymptote applies to the rayleigh-csi channel only')
  return math.comb(2 * d - 1, d) * (ch.n0 / dhc2) ** d
