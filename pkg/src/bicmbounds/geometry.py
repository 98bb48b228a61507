"""
Decision-region computations on a grid of received points.

All tests compare squared distances. A grid point counts as covered by a
half-plane when it is inside up to TIE_TOL, so every reported witness is a
strict interior point of the uncovered part of an error region.
"""
import csv
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Iterator, List, Optional, Sequence, TextIO, Tuple

import numpy as np

from bicmbounds.constellation import (Constellation, build_square_qam,
                                      build_theorem1_variant, subset)
from bicmbounds.errors import ArgumentError, VerificationInconclusiveError

logger = logging.getLogger(__name__)

TIE_TOL = 1e-9


@dataclass(frozen=True)
class GridSpec:
  """
  Square grid [lo, hi]^2 of received points at the given resolution.
  Default: [-4, 4]^2 at 0.005 in units of the normalized signal set.
  """
  lo: float = -4.0
  hi: float = 4.0
  resolution: float = 0.005

  def __post_init__(self):
    if not self.resolution > 0 or not self.hi >= self.lo:
      raise ArgumentError('empty grid: [{}, {}] at resolution {}'.format(self.lo, self.hi, self.resolution))

  @property
  def n(self) -> int:
    """points per axis"""
    return int(math.floor((self.hi - self.lo) / self.resolution + 1e-9)) + 1

  @property
  def size(self) -> int:
    return self.n * self.n

  def axis(self) -> np.ndarray:
    return self.lo + self.resolution * np.arange(self.n)

  def chunks(self, rows: int = 200) -> Iterator[np.ndarray]:
    """Yields the grid as flat complex arrays, a band of rows at a time, in a fixed order"""
    axis = self.axis()
    for start in range(0, self.n, rows):
      re, im = np.meshgrid(axis, axis[start:start + rows])
      yield (re + 1j * im).ravel()


def _min_dist2(y: np.ndarray, points: Sequence[complex]) -> np.ndarray:
  best = np.full(y.shape, np.inf)
  for p in points:
    best = np.minimum(best, np.abs(y - p) ** 2)
  return best


@dataclass(frozen=True)
class HalfPlane:
  """
  Pairwise decision region of competitor z against reference x:
  {y : |y - z|^2 <= |y - x|^2}, bounded by the perpendicular bisector of x-z.
  """
  x: complex
  z: complex

  def contains(self, y, tol: float = 0.0):
    y = np.asarray(y)
    return np.abs(y - self.z) ** 2 <= np.abs(y - self.x) ** 2 + tol

  def margin(self, y):
    """Signed distance from the bisector, positive outside the half-plane"""
    y = np.asarray(y)
    return (np.abs(y - self.z) ** 2 - np.abs(y - self.x) ** 2) / (2.0 * abs(self.z - self.x))


@dataclass(frozen=True)
class ErrorRegion:
  """
  Received points whose nearest opposite-subset point is at least as close
  as the nearest same-subset point. Ties count as errors.
  """
  same: Tuple[complex, ...]
  opposite: Tuple[complex, ...]

  def __post_init__(self):
    if not self.same or not self.opposite:
      raise ArgumentError('an error region needs non-empty same and opposite point sets')

  @classmethod
  def for_bit(cls, c: Constellation, i: int, b: int) -> 'ErrorRegion':
    """Error region when a point of X_b^i is sent"""
    same = subset(c, i, b).members
    opposite = subset(c, i, 1 - b).members
    return cls(tuple(c.points[k] for k in same), tuple(c.points[k] for k in opposite))

  def contains(self, y):
    y = np.asarray(y)
    return _min_dist2(y, self.opposite) <= _min_dist2(y, self.same)


def in_error_region(r: ErrorRegion, y: complex) -> bool:
  return bool(r.contains(y))


@lru_cache(maxsize=8)
def error_points(region: ErrorRegion, grid: GridSpec) -> np.ndarray:
  parts = [chunk[region.contains(chunk)] for chunk in grid.chunks()]
  pts = np.concatenate(parts) if parts else np.empty(0, dtype=complex)
  pts.setflags(write=False)
  return pts


@dataclass(frozen=True)
class CoverageReport:
  """
  Attributes
  ----------
    covered: bool
      True iff no error-region grid point is left uncovered
    witnesses: np.ndarray
      uncovered error-region grid points in scan order
    grid: GridSpec
    uncovered_fraction: float
      share of the error-region grid points that are uncovered
    best_witness: complex, optional
      the witness farthest from its nearest covering half-plane
    robustness: float
      that distance (0.0 when there are no witnesses)
  """
  covered: bool
  witnesses: np.ndarray = field(repr=False, compare=False)
  grid: GridSpec
  uncovered_fraction: float
  best_witness: Optional[complex] = None
  robustness: float = 0.0


def coverage_check(region: ErrorRegion, x: complex, targets: Sequence[complex], grid: GridSpec = GridSpec()) -> CoverageReport:
  """
  Checks that the half-planes of `targets` against x cover the error region.

  Args:
    region: the decoder error region
    x: transmitted point
    targets: competitor points (real or extended), may be empty
    grid: grid to scan
  Returns:
    (CoverageReport)
  """
  if grid.size == 0:
    raise ArgumentError('empty grid')

  err = error_points(region, grid)
  covered = np.zeros(err.shape, dtype=bool)
  planes = [HalfPlane(x, z) for z in targets]
  for plane in planes:
    covered |= plane.contains(err, TIE_TOL)

  witnesses = err[~covered]
  witnesses.setflags(write=False)
  fraction = float(len(witnesses)) / len(err) if len(err) else 0.0

  best = None
  robustness = 0.0
  if len(witnesses):
    if planes:
      margins = np.min(np.stack([plane.margin(witnesses) for plane in planes]), axis=0)
      k = int(np.argmax(margins))
      robustness = float(margins[k])
    else:
      k = 0
    best = complex(witnesses[k])

  return CoverageReport(
    covered=len(witnesses) == 0,
    witnesses=witnesses,
    grid=grid,
    uncovered_fraction=fraction,
    best_witness=best,
    robustness=robustness,
  )


def check_premise(x: complex, z: complex, z1: complex, z2: complex, grid: GridSpec = GridSpec()) -> bool:
  """Grid check of Gamma(x, z) being contained in Gamma(x, z1) union Gamma(x, z2)"""
  pair = HalfPlane(x, z)
  first, second = HalfPlane(x, z1), HalfPlane(x, z2)
  for chunk in grid.chunks():
    inside = chunk[pair.contains(chunk)]
    if not np.all(first.contains(inside, TIE_TOL) | second.contains(inside, TIE_TOL)):
      return False
  return True


@dataclass(frozen=True)
class TransmittedCase:
  """Outcome for one transmitted point of the modified-QPSK check"""
  label: str
  region_name: str
  premise_holds: bool
  report: CoverageReport

  @property
  def confirmed(self) -> bool:
    return self.premise_holds and not self.report.covered


@dataclass(frozen=True)
class Theorem1Result:
  theta: float
  cases: Tuple[TransmittedCase, ...]

  @property
  def premise_holds(self) -> bool:
    return all(case.premise_holds for case in self.cases)

  @property
  def covered_after_expurgation(self) -> bool:
    return all(case.report.covered for case in self.cases)

  @property
  def confirmed(self) -> bool:
    return all(case.confirmed for case in self.cases)

  @property
  def witnesses(self) -> List[Tuple[complex, str]]:
    return [(complex(w), case.region_name) for case in self.cases for w in case.report.witnesses]


# (transmitted x, neglected z, same-subset z1, kept z2, shading of the uncovered part)
_THEOREM1_CASES = (
  ('00', '11', '01', '10', 'dark'),
  ('01', '10', '00', '11', 'light'),
)


def verify_theorem1(theta: float = 30.0, grid: GridSpec = GridSpec()) -> Theorem1Result:
  """
  Checks the single-neighbor expurgation on the modified QPSK set.

  Bit 1 is sent with value 0, so X_0^1 = {00, 01}. For each transmitted point
  the pairwise region of the opposite point z is inside the union of the
  regions of z1 and z2, so it would be neglected, leaving only z2. The
  expurgation fails when the decoder error region is not covered by z2 alone.

  Args:
    theta: displacement of point 01 in degrees
    grid: scan grid; must resolve the uncovered sliver, whose angular width
      is theta / 2
  Returns:
    (Theorem1Result) one case per transmitted point
  """
  if theta > 0 and grid.resolution > math.radians(theta) / 10:
    raise VerificationInconclusiveError(
      'grid resolution {} is too coarse for theta={} (need <= {:.4g})'.format(
        grid.resolution, theta, math.radians(theta) / 10))

  c = build_theorem1_variant(theta)
  region = ErrorRegion.for_bit(c, 1, 0)
  point = {label: c.points[c.index_of(label)] for label in c.labels}

  cases = []
  for (x, z, z1, z2, name) in _THEOREM1_CASES:
    premise = check_premise(point[x], point[z], point[z1], point[z2], grid)
    report = coverage_check(region, point[x], [point[z2]], grid)
    logger.info('theta=%g x=%s: premise %s, %d uncovered witnesses', theta, x,
                'holds' if premise else 'fails', len(report.witnesses))
    cases.append(TransmittedCase(x, name, premise, report))
  return Theorem1Result(theta, tuple(cases))


@dataclass(frozen=True)
class Theorem2Result:
  """Outcome of the nearest-neighbor-only expurgation on Gray 16QAM"""
  x_index: int
  label: str
  bit: int
  kept: Tuple[int, ...]
  report: CoverageReport

  @property
  def covered_after_expurgation(self) -> bool:
    return self.report.covered

  @property
  def confirmed(self) -> bool:
    return not self.report.covered

  @property
  def witnesses(self) -> List[Tuple[complex, str]]:
    return [(complex(w), 'dark') for w in self.report.witnesses]


def verify_theorem2(grid: GridSpec = GridSpec()) -> Theorem2Result:
  """
  Gray 16QAM, bit 2 (the in-phase bit whose subsets are column pairs), x in
  an inner column. Only the unique nearest opposite point is kept; the far
  outer column is then left uncovered.

  Every uncovered grid point is a witness: about 1.1 million at the default
  0.005 grid, tens of megabytes once written as CSV.
  """
  c = build_square_qam(16, 'gray')
  bit = 2
  # inner columns carry bit value 1 at this position
  x_index = subset(c, bit, 1).members[0]
  x = c.points[x_index]
  opposite = subset(c, bit, 0).members
  nearest = min(opposite, key=lambda k: (abs(c.points[k] - x) ** 2, k))

  region = ErrorRegion.for_bit(c, bit, 1)
  report = coverage_check(region, x, [c.points[nearest]], grid)
  logger.info('16QAM x=%s: %d uncovered witnesses', c.labels[x_index], len(report.witnesses))
  return Theorem2Result(x_index, c.labels[x_index], bit, (nearest,), report)


def write_witnesses(out: TextIO, witnesses: Iterable[Tuple[complex, str]], header: Optional[str] = None):
  """Writes witness rows `re,im,region`"""
  if header:
    out.write(header + '\n')
  writer = csv.writer(out, lineterminator='\n')
  writer.writerow(['re', 'im', 'region'])
  for (w, region_name) in witnesses:
    writer.writerow(['{:.6g}'.format(w.real), '{:.6g}'.format(w.imag), region_name])
