"""
Neighbor selection for the expurgated bounds and the harmonic mean squared
distances they induce.

orig  keeps the unique nearest opposite-subset point.
I     keeps the nearest opposite point and, when its half-plane leaves part
      of the error region uncovered, the nearest opposite point on the other
      side of x.
II    reflects x across the nearest error-region boundary on each side that
      needs covering, so the pairwise boundaries coincide with the decoder's.

A side that needs no covering gets ALEPH, whose pairwise error probability
is zero.
"""
import csv
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, TextIO, Tuple

import numpy as np

from bicmbounds.constellation import (Constellation, build_psk,
                                      build_square_qam, subset)
from bicmbounds.errors import ArgumentError, UnsupportedGeometryError
from bicmbounds.geometry import (TIE_TOL, ErrorRegion, GridSpec, HalfPlane,
                                 error_points)
from bicmbounds.pep import DistanceMixture

logger = logging.getLogger(__name__)

VARIANTS = ('orig', 'I', 'II')

# scan grid for the greedy cover on 2-D subsets
GENERALIZED_GRID = GridSpec(-3.0, 3.0, 0.05)

_SAME_POINT = 1e-9
_ANGLE_TOL = 1e-12
_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Target:
  """
  A competitor for a transmitted point.

  Attributes
  ----------
    kind: str
      'point' (a constellation point), 'extended' (a point outside the
      signal set) or 'aleph'
    index: int, optional
      point index when kind is 'point'
    position: complex, optional
      location, None for aleph
  """
  kind: str
  index: Optional[int] = None
  position: Optional[complex] = None

  @property
  def is_aleph(self) -> bool:
    return self.kind == 'aleph'

  def distance2(self, x: complex) -> float:
    if self.is_aleph:
      return math.inf
    return abs(self.position - x) ** 2


ALEPH = Target('aleph')


def _as_target(c: Constellation, position: complex) -> Target:
  for (k, p) in enumerate(c.points):
    if abs(p - position) < _SAME_POINT:
      return Target('point', k, p)
  return Target('extended', None, complex(position))


def _point(c: Constellation, k: int) -> Target:
  return Target('point', k, c.points[k])


def _nearest(c: Constellation, x_index: int, candidates) -> int:
  x = c.points[x_index]
  return min(candidates, key=lambda k: (abs(c.points[k] - x) ** 2, k))


def lattice_axis(c: Constellation, i: int) -> Optional[str]:
  """
  'I' when bit i is constant along every column of a rectangular lattice,
  'Q' when constant along every row, None otherwise.
  """
  if c.geometry.kind != 'rect-lattice':
    return None
  delta = c.geometry.spacing
  for (axis, coordinate) in (('I', lambda p: p.real), ('Q', lambda p: p.imag)):
    values = {}
    if all(values.setdefault(int(round(coordinate(p) / delta)), c.bit(k, i)) == c.bit(k, i)
           for (k, p) in enumerate(c.points)):
      return axis
  return None


def _lattice_targets(c: Constellation, x_index: int, i: int, variant: str, axis: str) -> Tuple[Target, ...]:
  # 1-D problem along `axis`, coordinates in units of delta (odd integers)
  delta = c.geometry.spacing
  x = c.points[x_index]
  b = c.bit(x_index, i)

  def level(p):
    return int(round((p.real if axis == 'I' else p.imag) / delta))

  u = level(x)
  values = {}
  for (k, p) in enumerate(c.points):
    values[level(p)] = c.bit(k, i)
  levels = sorted(values)
  boundaries = [(l0 + l1) / 2.0 for (l0, l1) in zip(levels, levels[1:]) if values[l0] != values[l1]]
  boundary = {'left': max([g for g in boundaries if g < u], default=None),
              'right': min([g for g in boundaries if g > u], default=None)}
  opposite_level = {'left': max([l for l in levels if values[l] != b and l < u], default=None),
                    'right': min([l for l in levels if values[l] != b and l > u], default=None)}

  z1 = _nearest(c, x_index, subset(c, i, 1 - b).members)
  if variant == 'orig':
    return (_point(c, z1),)

  first = 'left' if level(c.points[z1]) < u else 'right'
  other = 'right' if first == 'left' else 'left'

  def in_row(lev):
    # the point at level `lev` on the line through x
    for (k, p) in enumerate(c.points):
      if level(p) == lev and abs((p.imag if axis == 'I' else p.real) - (x.imag if axis == 'I' else x.real)) < _SAME_POINT:
        return k
    raise UnsupportedGeometryError('lattice has no point at level {} on the line through x'.format(lev))

  def mirror(g):
    along = (2.0 * g - u) * delta
    return complex(along, x.imag) if axis == 'I' else complex(x.real, along)

  # the half-line beyond one boundary never covers the other side, so the
  # second target is needed exactly when the other side has error region
  if variant == 'I':
    second = _point(c, in_row(opposite_level[other])) if opposite_level[other] is not None else ALEPH
    return (_point(c, z1), second)

  second = _as_target(c, mirror(boundary[other])) if boundary[other] is not None else ALEPH
  return (_as_target(c, mirror(boundary[first])), second)


def _merge(intervals: List[Tuple[float, float]]) -> List[Tuple[float, float]]:
  merged = []
  for (lo, hi) in sorted(intervals):
    if merged and lo <= merged[-1][1] + _ANGLE_TOL:
      merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
    else:
      merged.append((lo, hi))
  return merged


def _arcs_cover(error: List[Tuple[float, float]], arcs: List[Tuple[float, float]]) -> bool:
  union = _merge(arcs)
  return all(any(lo >= a - _ANGLE_TOL and hi <= b + _ANGLE_TOL for (a, b) in union) for (lo, hi) in error)


def _circle_targets(c: Constellation, x_index: int, i: int, variant: str) -> Tuple[Target, ...]:
  # angular problem: offsets are counterclockwise angles from x in [0, 2pi)
  x = c.points[x_index]
  alpha = math.atan2(x.imag, x.real)
  radius = abs(x)
  b = c.bit(x_index, i)

  offset = {k: (math.atan2(p.imag, p.real) - alpha) % _TWO_PI for (k, p) in enumerate(c.points) if k != x_index}
  order = sorted(offset, key=lambda k: (offset[k], k))
  owned = []
  for (j, k) in enumerate(order):
    before = offset[order[j - 1]] if j > 0 else 0.0
    after = offset[order[j + 1]] if j + 1 < len(order) else _TWO_PI
    if c.bit(k, i) != b:
      owned.append(((before + offset[k]) / 2.0, (offset[k] + after) / 2.0))
  error = _merge(owned)

  def arc(beta):
    # the half-plane of a target at offset beta covers offsets [beta/2, beta/2 + pi]
    return (beta / 2.0, beta / 2.0 + math.pi)

  z1 = _nearest(c, x_index, subset(c, i, 1 - b).members)
  if variant == 'orig':
    return (_point(c, z1),)

  first = 'ccw' if offset[z1] <= math.pi else 'cw'
  other = 'cw' if first == 'ccw' else 'ccw'

  def on_side(k, side):
    return (0.0 < offset[k] <= math.pi) if side == 'ccw' else (offset[k] > math.pi)

  def mirror(side):
    # reflection of x across the nearest error boundary on `side`
    g = error[0][0] if side == 'ccw' else error[-1][1]
    beta = 2.0 * g if side == 'ccw' else 2.0 * g - _TWO_PI
    if not 0.0 < beta < _TWO_PI:
      raise UnsupportedGeometryError('no reflection of x on the {} side'.format(side))
    return beta, _as_target(c, radius * complex(math.cos(alpha + beta), math.sin(alpha + beta)))

  if variant == 'I':
    betas = [offset[z1]]
    targets = [_point(c, z1)]
  else:
    beta, t = mirror(first)
    betas = [beta]
    targets = [t]

  if _arcs_cover(error, [arc(beta) for beta in betas]):
    return (targets[0], ALEPH)

  if variant == 'I':
    candidates = [k for k in subset(c, i, 1 - b).members if on_side(k, other)]
    if not candidates:
      raise UnsupportedGeometryError('no opposite point on the {} side of x'.format(other))
    z2 = _nearest(c, x_index, candidates)
    betas.append(offset[z2])
    targets.append(_point(c, z2))
  else:
    beta, t = mirror(other)
    betas.append(beta)
    targets.append(t)

  if not _arcs_cover(error, [arc(beta) for beta in betas]):
    raise UnsupportedGeometryError('two targets do not cover the error region of point {}'.format(x_index))
  return tuple(targets)


def _first_crossing(region: ErrorRegion, x: complex, z: complex) -> complex:
  """First point on the segment x -> z that lies in the error region"""
  ts = np.linspace(0.0, 1.0, 401)
  inside = region.contains(x + ts * (z - x))
  j = int(np.argmax(inside))
  if j == 0:
    return x
  lo, hi = ts[j - 1], ts[j]
  for _ in range(60):
    mid = (lo + hi) / 2.0
    if region.contains(x + mid * (z - x)):
      hi = mid
    else:
      lo = mid
  return x + hi * (z - x)


def _generalized_targets(c: Constellation, x_index: int, i: int, variant: str, grid: GridSpec) -> Tuple[Target, ...]:
  """
  Greedy cover for subsets that are not unions of rows or columns: walk the
  opposite points by distance and keep those whose half-plane covers some
  still uncovered error-region grid point. Variant II first tries the
  reflection of x across the error boundary met on the way to each point.
  """
  x = c.points[x_index]
  b = c.bit(x_index, i)
  region = ErrorRegion.for_bit(c, i, b)
  uncovered = error_points(region, grid)
  opposite = sorted(subset(c, i, 1 - b).members, key=lambda k: (abs(c.points[k] - x) ** 2, k))

  candidates = []
  if variant == 'II':
    candidates.extend(2.0 * _first_crossing(region, x, c.points[k]) - x for k in opposite)
  candidates.extend(c.points[k] for k in opposite)

  targets = []
  for position in candidates:
    if len(uncovered) == 0:
      break
    hit = HalfPlane(x, position).contains(uncovered, TIE_TOL)
    if np.any(hit):
      targets.append(_as_target(c, position))
      uncovered = uncovered[~hit]
  if len(uncovered):
    raise UnsupportedGeometryError('greedy cover failed for point {} bit {}'.format(x_index, i))
  logger.debug('greedy cover of point %d bit %d (%s): %d targets', x_index, i, variant, len(targets))
  return tuple(targets)


def select_neighbors(c: Constellation, x_index: int, i: int, variant: str, generalized: bool = False,
                     grid: GridSpec = GENERALIZED_GRID) -> Tuple[Target, ...]:
  """
  Targets of point x for bit position i.

  Args:
    c: the constellation
    x_index: index of the transmitted point
    i: bit position, 1..m
    variant: 'orig', 'I' or 'II'
    generalized: allow the greedy grid cover when the subsets of bit i are
      two-dimensional
    grid: scan grid of the greedy cover
  Returns:
    (tuple[Target, ...]) one target for orig; for I and II two targets where
      the second may be ALEPH (the greedy cover may return more)
  """
  if variant not in VARIANTS:
    raise ArgumentError('unknown variant {!r}; choose from {}'.format(variant, VARIANTS))
  if not 1 <= i <= c.m:
    raise ArgumentError('bit position {} is out of range 1..{}'.format(i, c.m))

  if variant == 'orig':
    b = c.bit(x_index, i)
    return (_point(c, _nearest(c, x_index, subset(c, i, 1 - b).members)),)

  axis = lattice_axis(c, i)
  if axis is not None:
    return _lattice_targets(c, x_index, i, variant, axis)
  if c.geometry.kind == 'circle':
    return _circle_targets(c, x_index, i, variant)
  if generalized:
    return _generalized_targets(c, x_index, i, variant, grid)
  raise UnsupportedGeometryError('bit {} of {} {} has two-dimensional subsets'.format(i, c.name, c.labeling_name))


def uses_generalized_rule(c: Constellation, i: int) -> bool:
  return lattice_axis(c, i) is None and c.geometry.kind != 'circle'


@dataclass(frozen=True)
class NeighborAssignment:
  """
  Targets of every (point, bit position) pair.

  Attributes
  ----------
    constellation: Constellation
    variant: str
    targets: dict[tuple[int, int], tuple[Target, ...]]
      keyed by (point index, bit position)
    nonstandard: bool
      some bit position needed the greedy cover
  """
  constellation: Constellation
  variant: str
  targets: Dict[Tuple[int, int], Tuple[Target, ...]]
  nonstandard: bool = False

  def slots(self):
    """(i, b, x_index, targets) in the fixed summation order i, b, x"""
    c = self.constellation
    for i in range(1, c.m + 1):
      for b in (0, 1):
        for x_index in subset(c, i, b).members:
          yield (i, b, x_index, self.targets[(x_index, i)])


def assign_neighbors(c: Constellation, variant: str, generalized: bool = False) -> NeighborAssignment:
  targets = {}
  for i in range(1, c.m + 1):
    for x_index in range(len(c)):
      targets[(x_index, i)] = select_neighbors(c, x_index, i, variant, generalized)
  nonstandard = variant != 'orig' and any(uses_generalized_rule(c, i) for i in range(1, c.m + 1))
  return NeighborAssignment(c, variant, targets, nonstandard)


def distance_mixture(assignment: NeighborAssignment) -> DistanceMixture:
  """One atom of weight 1/(m 2^m) per target, aleph included"""
  c = assignment.constellation
  weight = 1.0 / (c.m * len(c))
  terms = []
  for (_, _, x_index, targets) in assignment.slots():
    for t in targets:
      terms.append((t.distance2(c.points[x_index]), weight))
  return DistanceMixture.from_terms(terms)


def harmonic_distance(c: Constellation, variant: str, generalized: bool = False) -> float:
  """
  Harmonic mean squared distance: d_h^2 for orig, d_hc^2 for I and II.

  Args:
    c: the constellation
    variant: 'orig', 'I' or 'II'
    generalized: allow the greedy cover on two-dimensional subsets
  Returns:
    (float) [ (1 / (m 2^m)) sum over (i, b, x, target) of 1/|x - z|^2 ]^-1
  """
  assignment = assign_neighbors(c, variant, generalized)
  terms = []
  for (_, _, x_index, targets) in assignment.slots():
    for t in targets:
      if not t.is_aleph:
        terms.append(1.0 / t.distance2(c.points[x_index]))
  return (c.m * len(c)) / math.fsum(terms)


# published harmonic distances (d_h^2, d_hc^I^2, d_hc^II^2) the computed table is compared with
REFERENCE_TABLE1 = {
  ('4PSK', 'gray'): (2.0, 2.0, 2.0),
  ('4PSK', 'sp'): (2.0, 1.333, 1.333),
  ('8PSK', 'gray'): (0.7665, 0.637, 0.750),
  ('8PSK', 'sp'): (0.664, 0.436, 0.468),
  ('16QAM', 'gray'): (0.492, 0.457, 0.497),
  ('16QAM', 'sp'): (0.441, 0.261, 0.270),
  ('64QAM', 'gray'): (0.144, 0.129, 0.147),
}


@dataclass(frozen=True)
class Table1Row:
  constellation: str
  labeling: str
  dh2: float
  dhc1_2: float
  dhc2_2: float
  flags: str = ''
  reference: Optional[Tuple[float, float, float]] = None


def table1() -> List[Table1Row]:
  """Harmonic mean squared distances of the standard signal sets"""
  sets = [
    build_psk(4, 'gray'), build_psk(4, 'sp'),
    build_psk(8, 'gray'), build_psk(8, 'sp'),
    build_square_qam(16, 'gray'), build_square_qam(16, 'sp'),
    build_square_qam(64, 'gray'),
  ]
  rows = []
  for c in sets:
    values = [harmonic_distance(c, variant, generalized=True) for variant in VARIANTS]
    nonstandard = any(uses_generalized_rule(c, i) for i in range(1, c.m + 1))
    reference = REFERENCE_TABLE1.get((c.name, c.labeling_name))
    row = Table1Row(c.name, c.labeling_name, *values, flags='nonstandard' if nonstandard else '', reference=reference)
    if nonstandard:
      logger.info('%s %s uses the greedy cover: d_hc^2 = %.4f / %.4f (reference %s / %s)', c.name, c.labeling_name,
                  row.dhc1_2, row.dhc2_2, reference[1], reference[2])
    rows.append(row)
  return rows


def write_table(out: TextIO, rows: List[Table1Row], header: Optional[str] = None):
  """Writes `constellation,labeling,dh2,dhc1_2,dhc2_2,flags`"""
  if header:
    out.write(header + '\n')
  writer = csv.writer(out, lineterminator='\n')
  writer.writerow(['constellation', 'labeling', 'dh2', 'dhc1_2', 'dhc2_2', 'flags'])
  for row in rows:
    writer.writerow([row.constellation, row.labeling, '{:.3f}'.format(row.dh2),
                     '{:.3f}'.format(row.dhc1_2), '{:.3f}'.format(row.dhc2_2), row.flags])
