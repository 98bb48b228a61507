import math
from dataclasses import dataclass
from functools import cached_property
from typing import List, Optional, Tuple

import numpy as np

from bicmbounds.errors import ArgumentError, ConfigurationError

ENERGY_TOL = 1e-12

# components smaller than this are rounding residue of cos/sin at multiples of pi/2
_SNAP = 1e-15


def gray(k: int) -> int:
  """Reflected binary Gray code of k"""
  return k ^ (k >> 1)


def _bits(value: int, width: int) -> str:
  return format(value, '0{}b'.format(width))


def bits_of(label: str) -> Tuple[int, ...]:
  """'0110' -> (0, 1, 1, 0), bit position 1 first"""
  return tuple(int(ch) for ch in label)


def _snap(z: complex) -> complex:
  re = 0.0 if abs(z.real) < _SNAP else z.real
  im = 0.0 if abs(z.imag) < _SNAP else z.imag
  return complex(re, im)


@dataclass(frozen=True)
class Geometry:
  """
  Shape class of a signal set.

  Attributes
  ----------
    kind: str
      'rect-lattice', 'circle' or 'custom'
    spacing: float, optional
      lattice half-spacing delta; axis coordinates are odd multiples of it
    sizes: tuple[int, int], optional
      number of levels on the in-phase and quadrature axes
    radius: float, optional
      circle radius
  """
  kind: str
  spacing: Optional[float] = None
  sizes: Optional[Tuple[int, int]] = None
  radius: Optional[float] = None


@dataclass(frozen=True)
class Constellation:
  """
  A labeled signal set with 2^m points.

  Labels are bit strings read MSB-first: bit position i (1-based) is the
  i-th character of the label.

  Attributes
  ----------
    name: str
      display name such as '16QAM'
    m: int
      bits per symbol
    points: tuple[complex, ...]
      signal points, indexed 0..2^m-1
    labels: tuple[str, ...]
      label of each point
    geometry: Geometry
    labeling_name: str
      'gray', 'sp' or 'custom'
    standard: bool
      standard sets are held to unit average energy
  """
  name: str
  m: int
  points: Tuple[complex, ...]
  labels: Tuple[str, ...]
  geometry: Geometry
  labeling_name: str
  standard: bool = True

  def __post_init__(self):
    size = 2 ** self.m
    if self.m < 1:
      raise ConfigurationError('need at least one bit per symbol')
    if len(self.points) != size or len(self.labels) != size:
      raise ConfigurationError('a constellation with m={} needs exactly {} points and labels'.format(self.m, size))
    if len(set(self.labels)) != size:
      raise ConfigurationError('labels must be distinct')
    for label in self.labels:
      if len(label) != self.m or set(label) - {'0', '1'}:
        raise ConfigurationError('label {!r} is not a bit string of length {}'.format(label, self.m))

    if self.standard and abs(self.average_energy() - 1.0) > ENERGY_TOL:
      raise ConfigurationError('average energy is {}, expected 1'.format(self.average_energy()))

    if self.geometry.kind == 'circle':
      for p in self.points:
        if abs(abs(p) - self.geometry.radius) > ENERGY_TOL:
          raise ConfigurationError('point {} is off the circle of radius {}'.format(p, self.geometry.radius))
    elif self.geometry.kind == 'rect-lattice':
      delta = self.geometry.spacing
      for p in self.points:
        for coord in (p.real, p.imag):
          # odd multiple of delta
          k = (coord / delta - 1) / 2
          if abs(k - round(k)) > 1e-9:
            raise ConfigurationError('point {} is not on the declared lattice'.format(p))

  def __len__(self) -> int:
    return len(self.points)

  def average_energy(self) -> float:
    return float(np.mean(np.abs(np.asarray(self.points)) ** 2))

  @cached_property
  def array(self) -> np.ndarray:
    """Points as a read-only complex array"""
    a = np.asarray(self.points, dtype=complex)
    a.setflags(write=False)
    return a

  @cached_property
  def bit_matrix(self) -> np.ndarray:
    """(2^m, m) array of label bits, column i-1 holds bit position i"""
    a = np.array([bits_of(label) for label in self.labels], dtype=np.int8)
    a.setflags(write=False)
    return a

  @cached_property
  def label_index(self) -> np.ndarray:
    """Maps the integer value of a label to the index of its point"""
    lookup = np.empty(len(self), dtype=np.int64)
    for index, label in enumerate(self.labels):
      lookup[int(label, 2)] = index
    lookup.setflags(write=False)
    return lookup

  def index_of(self, label: str) -> int:
    try:
      return self.labels.index(label)
    except ValueError:
      raise ArgumentError('no point carries label {!r}'.format(label))

  def bit(self, index: int, i: int) -> int:
    """Value of bit position i (1-based) in the label of point `index`"""
    return int(self.labels[index][i - 1])


@dataclass(frozen=True)
class BitSubset:
  """The points whose label has value b at position i"""
  i: int
  b: int
  members: Tuple[int, ...]


def subset(c: Constellation, i: int, b: int) -> BitSubset:
  """
  Returns the subset X_b^i of a constellation

  Args:
    c: the constellation
    i: bit position, 1..m
    b: bit value, 0 or 1
  Returns:
    (BitSubset) the member point indices in increasing order
  """
  if not 1 <= i <= c.m:
    raise ArgumentError('bit position {} is out of range 1..{}'.format(i, c.m))
  if b not in (0, 1):
    raise ArgumentError('bit value must be 0 or 1, got {}'.format(b))
  members = tuple(k for k in range(len(c)) if c.bit(k, i) == b)
  return BitSubset(i, b, members)


def _sp_lattice_label(a: int, b: int, m: int) -> str:
  # Ungerboeck chain Z^2 / RZ^2 / 2Z^2 / 2RZ^2 / ...: even levels split the
  # current coset into checkerboards, odd levels split by the in-phase index
  levels = []
  scale = 1
  while len(levels) < m:
    levels.append(((a // scale) + (b // scale)) % 2)
    if len(levels) < m:
      levels.append((a // scale) % 2)
    scale *= 2
  # first partition level is the least significant bit
  return ''.join(str(v) for v in reversed(levels))


def build_square_qam(order: int, labeling: str = 'gray') -> Constellation:
  """
  Square QAM with unit average energy.

  Axis coordinates are (2a - L + 1) * delta for a = 0..L-1, L = sqrt(order).
  Gray: reflected Gray code per axis, the first m/2 label bits on the
  in-phase axis. SP: Ungerboeck set partitioning, first partition level in
  the last label bit.

  Args:
    order: 4, 16 or 64
    labeling: 'gray' or 'sp'
  Returns:
    (Constellation) with point index a * L + b for in-phase index a and
      quadrature index b
  """
  if order not in (4, 16, 64):
    raise ConfigurationError('unsupported QAM order {}'.format(order))
  if labeling not in ('gray', 'sp'):
    raise ConfigurationError('unsupported labeling {!r}'.format(labeling))

  m = int(round(math.log2(order)))
  side = int(round(math.sqrt(order)))
  half = m // 2
  delta = math.sqrt(3.0 / (2.0 * (order - 1)))

  points = []
  labels = []
  for a in range(side):
    for b in range(side):
      points.append(complex((2 * a - side + 1) * delta, (2 * b - side + 1) * delta))
      if labeling == 'gray':
        labels.append(_bits(gray(a), half) + _bits(gray(b), half))
      else:
        labels.append(_sp_lattice_label(a, b, m))

  return Constellation(
    name='{}QAM'.format(order),
    m=m,
    points=tuple(points),
    labels=tuple(labels),
    geometry=Geometry('rect-lattice', spacing=delta, sizes=(side, side)),
    labeling_name=labeling,
  )


def build_psk(n_points: int, labeling: str = 'gray') -> Constellation:
  """
  PSK on the unit circle, point k at angle 2*pi*k/n.
  Gray labels follow the cyclic reflected Gray sequence, SP labels are
  natural binary counterclockwise.
  """
  if n_points not in (4, 8):
    raise ConfigurationError('unsupported PSK size {}'.format(n_points))
  if labeling not in ('gray', 'sp'):
    raise ConfigurationError('unsupported labeling {!r}'.format(labeling))

  m = int(round(math.log2(n_points)))
  points = tuple(_snap(complex(np.exp(2j * np.pi * k / n_points))) for k in range(n_points))
  if labeling == 'gray':
    labels = tuple(_bits(gray(k), m) for k in range(n_points))
  else:
    labels = tuple(_bits(k, m) for k in range(n_points))

  return Constellation(
    name='{}PSK'.format(n_points),
    m=m,
    points=points,
    labels=labels,
    geometry=Geometry('circle', radius=1.0),
    labeling_name=labeling,
  )


def build_theorem1_variant(theta: float = 30.0) -> Constellation:
  """
  Gray QPSK with point 01 moved along the unit circle toward 00.

  Labels 00, 01, 11, 10 sit at 0, 90 - theta, 180 and 270 degrees.
  theta = 0 gives ordinary Gray QPSK, the control case.

  Args:
    theta: displacement in degrees, 0 <= theta < 90
  Returns:
    (Constellation) with the points in the label order 00, 01, 11, 10
  """
  if not 0.0 <= theta < 90.0:
    raise ConfigurationError('theta must lie in [0, 90) degrees, got {}'.format(theta))
  angles = (0.0, 90.0 - theta, 180.0, 270.0)
  points = tuple(_snap(complex(np.exp(1j * math.radians(a)))) for a in angles)
  return Constellation(
    name='modified-QPSK',
    m=2,
    points=points,
    labels=('00', '01', '11', '10'),
    geometry=Geometry('circle', radius=1.0),
    labeling_name='gray',
  )


def load_custom(path: str, name: str = 'custom') -> Constellation:
  """
  Reads a constellation from a text file with one `re im label` triple per
  line; '#' starts a comment. Points are scaled to unit average energy.
  """
  points: List[complex] = []
  labels: List[str] = []
  with open(path) as f:
    for line in f:
      line = line.split('#', 1)[0].strip()
      if not line:
        continue
      fields = line.split()
      if len(fields) != 3:
        raise ConfigurationError('expected `re im label`, got {!r}'.format(line))
      points.append(complex(float(fields[0]), float(fields[1])))
      labels.append(fields[2])
  if not points:
    raise ConfigurationError('no points in {}'.format(path))

  m = len(labels[0])
  scale = math.sqrt(np.mean(np.abs(np.asarray(points)) ** 2))
  return Constellation(
    name=name,
    m=m,
    points=tuple(p / scale for p in points),
    labels=tuple(labels),
    geometry=Geometry('custom'),
    labeling_name='custom',
  )


NAMED = {
  '4psk': lambda labeling: build_psk(4, labeling),
  '8psk': lambda labeling: build_psk(8, labeling),
  '4qam': lambda labeling: build_square_qam(4, labeling),
  '16qam': lambda labeling: build_square_qam(16, labeling),
  '64qam': lambda labeling: build_square_qam(64, labeling),
}


def named(modulation: str, labeling: str = 'gray') -> Constellation:
  """Builds one of the NAMED signal sets, e.g. named('16qam', 'gray')"""
  try:
    builder = NAMED[modulation.lower()]
  except KeyError:
    raise ConfigurationError('unknown modulation {!r}; choose from {}'.format(modulation, sorted(NAMED)))
  return builder(labeling)
