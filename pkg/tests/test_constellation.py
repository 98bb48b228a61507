from bicmbounds.constellation import (NAMED, bits_of, build_psk, build_square_qam,
                                      build_theorem1_variant, gray, load_custom,
                                      named, subset)
from bicmbounds.errors import ArgumentError, ConfigurationError
import pytest
import math
import itertools

# helpers
def hamming(a: str, b: str) -> int:
  return sum(x != y for (x, y) in zip(a, b))

def min_distance2(points) -> float:
  return min(abs(p - q) ** 2 for (p, q) in itertools.combinations(points, 2))

@pytest.mark.parametrize('modulation', sorted(NAMED))
@pytest.mark.parametrize('labeling', ['gray', 'sp'])
def test_named_sets_have_unit_energy(modulation, labeling):
  c = named(modulation, labeling)
  assert math.isclose(c.average_energy(), 1.0, abs_tol=1e-12)
  assert len(c) == 2 ** c.m
  assert len(set(c.labels)) == len(c)

def test_gray_code():
  assert [gray(k) for k in range(8)] == [0, 1, 3, 2, 6, 7, 5, 4]

def test_bits_of_reads_position_one_first():
  assert bits_of('0110') == (0, 1, 1, 0)

def test_16qam_gray_layout():
  c = build_square_qam(16, 'gray')
  delta = 1 / math.sqrt(10)
  assert math.isclose(c.geometry.spacing, delta)
  # index a * 4 + b sits at ((2a - 3) delta, (2b - 3) delta)
  assert math.isclose(c.points[0].real, -3 * delta) and math.isclose(c.points[0].imag, -3 * delta)
  assert math.isclose(c.points[10].real, delta) and math.isclose(c.points[10].imag, delta)
  assert c.labels[0] == '0000'
  assert c.labels[10] == '1111'
  assert c.labels[15] == '1010'

@pytest.mark.parametrize('order', [4, 16, 64])
def test_gray_qam_nearest_neighbors_differ_in_one_bit(order):
  c = build_square_qam(order, 'gray')
  d2 = 4 * c.geometry.spacing ** 2
  for (j, k) in itertools.combinations(range(len(c)), 2):
    if math.isclose(abs(c.points[j] - c.points[k]) ** 2, d2):
      assert hamming(c.labels[j], c.labels[k]) == 1

def test_gray_8psk_neighbors_differ_in_one_bit():
  c = build_psk(8, 'gray')
  for k in range(8):
    assert hamming(c.labels[k], c.labels[(k + 1) % 8]) == 1

def test_sp_psk_is_natural_binary():
  c = build_psk(4, 'sp')
  assert c.labels == ('00', '01', '10', '11')
  assert c.points[1] == 1j

def test_sp_16qam_last_bit_splits_into_checkerboards():
  c = build_square_qam(16, 'sp')
  delta = c.geometry.spacing
  for b in (0, 1):
    members = [c.points[k] for k in subset(c, 4, b).members]
    assert math.isclose(min_distance2(members), 8 * delta ** 2)
  # one level further the in-phase index splits the checkerboard again
  both = [c.points[k] for k in range(len(c)) if c.labels[k][2:] == '00']
  assert math.isclose(min_distance2(both), 16 * delta ** 2)

def test_subsets():
  c = build_square_qam(16, 'gray')
  for i in range(1, 5):
    zeros = subset(c, i, 0).members
    ones = subset(c, i, 1).members
    assert len(zeros) == len(ones) == 8
    assert sorted(zeros + ones) == list(range(16))
  assert subset(c, 1, 1).members == tuple(range(8, 16))

def test_subset_out_of_range():
  c = build_psk(4, 'gray')
  with pytest.raises(ArgumentError) as excinfo:
    subset(c, 3, 0)
  assert 'out of range' in str(excinfo.value)
  with pytest.raises(ArgumentError):
    subset(c, 1, 2)

def test_label_index():
  c = build_square_qam(64, 'gray')
  for (k, label) in enumerate(c.labels):
    assert c.label_index[int(label, 2)] == k
  assert c.index_of(c.labels[17]) == 17
  assert c.bit_matrix.shape == (64, 6)
  assert tuple(c.bit_matrix[17]) == bits_of(c.labels[17])

def test_theorem1_variant():
  c = build_theorem1_variant(30)
  assert c.labels == ('00', '01', '11', '10')
  assert math.isclose(math.degrees(math.atan2(c.points[1].imag, c.points[1].real)), 60.0)
  control = build_theorem1_variant(0)
  assert control.points == (1, 1j, -1, -1j)

@pytest.mark.parametrize('theta', [-1, 90, 120])
def test_theorem1_variant_rejects_theta(theta):
  with pytest.raises(ConfigurationError):
    build_theorem1_variant(theta)

def test_unsupported_builds():
  with pytest.raises(ConfigurationError):
    build_square_qam(32)
  with pytest.raises(ConfigurationError):
    build_psk(16)
  with pytest.raises(ConfigurationError):
    build_psk(8, 'natural')
  with pytest.raises(ConfigurationError) as excinfo:
    named('256qam')
  assert 'unknown modulation' in str(excinfo.value)

def test_load_custom(tmp_path):
  path = tmp_path / 'qpsk.txt'
  path.write_text('# rotated QPSK\n2 0 00\n0 2 01\n-2 0 11\n0 -2 10\n')
  c = load_custom(str(path))
  assert c.m == 2
  assert c.geometry.kind == 'custom'
  assert math.isclose(c.average_energy(), 1.0)
  assert c.points[c.index_of('11')] == -1

def test_load_custom_rejects_bad_lines(tmp_path):
  path = tmp_path / 'bad.txt'
  path.write_text('1 0\n')
  with pytest.raises(ConfigurationError):
    load_custom(str(path))
