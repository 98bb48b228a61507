from bicmbounds.constellation import build_psk, build_square_qam
from bicmbounds.errors import ArgumentError, VerificationInconclusiveError
from bicmbounds.geometry import (ErrorRegion, GridSpec, HalfPlane, check_premise,
                                 coverage_check, error_points, in_error_region, verify_theorem1,
                                 verify_theorem2, write_witnesses)
import pytest
import math
import io

# grids coarse enough to keep the suite quick, fine enough for the slivers
FINE = GridSpec(-2.0, 2.0, 0.01)
COARSE = GridSpec(-2.0, 2.0, 0.02)

def angle(y: complex) -> float:
  return math.degrees(math.atan2(y.imag, y.real)) % 360

def test_grid_spec():
  grid = GridSpec(-1.0, 1.0, 0.5)
  assert grid.n == 5
  assert grid.size == 25
  assert list(grid.axis()) == [-1.0, -0.5, 0.0, 0.5, 1.0]
  assert sum(len(chunk) for chunk in grid.chunks(rows=2)) == 25

def test_empty_grid_raises():
  with pytest.raises(ArgumentError):
    GridSpec(1.0, -1.0, 0.1)
  with pytest.raises(ArgumentError):
    GridSpec(-1.0, 1.0, 0.0)

def test_half_plane():
  plane = HalfPlane(1 + 0j, -1 + 0j)
  assert plane.contains(-0.5 + 3j)
  assert not plane.contains(0.5 - 3j)
  # the bisector itself belongs to the competitor
  assert plane.contains(2j)
  assert math.isclose(float(plane.margin(0.5 + 0j)), 0.5)
  assert math.isclose(float(plane.margin(-0.25 + 0j)), -0.25)

def test_error_region_of_gray_qpsk():
  c = build_psk(4, 'gray')
  # bit 1 = 0 on the points at 0 and 90 degrees
  region = ErrorRegion.for_bit(c, 1, 0)
  assert in_error_region(region, -1 - 1j)
  assert not in_error_region(region, 1 + 1j)
  # equidistant points count as errors
  assert in_error_region(region, 1 - 1j)

def test_coverage_without_targets_reports_every_error_point():
  c = build_psk(4, 'gray')
  region = ErrorRegion.for_bit(c, 1, 0)
  report = coverage_check(region, c.points[0], [], COARSE)
  assert not report.covered
  assert report.uncovered_fraction == 1.0
  assert report.best_witness is not None

def test_nearest_neighbor_covers_gray_qpsk():
  c = build_psk(4, 'gray')
  region = ErrorRegion.for_bit(c, 1, 0)
  report = coverage_check(region, c.points[0], [c.points[3]], COARSE)
  assert report.covered
  assert len(report.witnesses) == 0
  assert report.uncovered_fraction == 0.0

def test_check_premise():
  x, z = 1 + 0j, -1 + 0j
  assert check_premise(x, z, 1j, -1j, COARSE)
  # two competitors on the same side leave the lower part of Gamma(x, z) uncovered
  assert not check_premise(x, z, 1j, complex(math.cos(0.5), math.sin(0.5)), COARSE)

def test_theorem1_counterexample_at_30_degrees():
  result = verify_theorem1(30.0, FINE)
  assert result.premise_holds
  assert not result.covered_after_expurgation
  assert result.confirmed
  names = {name for (_, name) in result.witnesses}
  assert names == {'dark', 'light'}
  for case in result.cases:
    assert case.confirmed
    assert case.report.robustness > 0

def test_theorem1_witnesses_lie_in_the_slivers():
  result = verify_theorem1(30.0, FINE)
  for (w, name) in result.witnesses:
    if name == 'dark':
      # between the 11/10 error boundary at 120 degrees and the bisector at 135
      assert 120.0 <= angle(w) <= 135.0
    else:
      assert 300.0 <= angle(w) <= 315.0

def test_theorem1_control_is_not_a_counterexample():
  result = verify_theorem1(0.0, FINE)
  assert result.premise_holds
  assert result.covered_after_expurgation
  assert not result.confirmed
  assert result.witnesses == []

def test_theorem1_coarse_grid_is_inconclusive():
  with pytest.raises(VerificationInconclusiveError) as excinfo:
    verify_theorem1(30.0, GridSpec(-2.0, 2.0, 0.1))
  assert 'too coarse' in str(excinfo.value)

def test_theorem2_counterexample():
  result = verify_theorem2(COARSE)
  c = build_square_qam(16, 'gray')
  delta = c.geometry.spacing
  assert result.bit == 2
  assert c.points[result.x_index].real < 0
  assert result.confirmed
  assert len(result.witnesses) > 0
  # everything left uncovered is in the far outer column
  for (w, name) in result.witnesses:
    assert w.real > 2 * delta - 1e-9
    assert name == 'dark'

def test_write_witnesses():
  out = io.StringIO()
  write_witnesses(out, [(0.5 - 0.25j, 'dark'), (1.0 + 2.0j, 'light')], header='# test')
  assert out.getvalue() == '# test\nre,im,region\n0.5,-0.25,dark\n1,2,light\n'

def test_error_points_cache_is_small():
  # one entry at the default grid holds tens of megabytes
  assert error_points.cache_info().maxsize == 8
  region = ErrorRegion.for_bit(build_square_qam(4, 'gray'), 1, 0)
  first = error_points(region, COARSE)
  assert error_points(region, COARSE) is first
  assert not first.flags.writeable
