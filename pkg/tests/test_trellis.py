from bicmbounds.convcode import ConvCode, encode
from bicmbounds.errors import ArgumentError, CatastrophicCodeError
from bicmbounds.trellis import (detour_fst, enumerate_detours, free_distance,
                                shortest_path_decode, spectrum_from_detours, trellis_fst)
import pytest
import math
import numpy as np

# helpers
def hard_metrics(coded) -> np.ndarray:
  """cost 0 for the transmitted bit, 1 for the other"""
  coded = np.asarray(coded)
  return np.stack([coded, 1 - coded], axis=1).astype(float)

def catastrophic() -> ConvCode:
  # both generators 1 + D, so the all-ones input leaves state 1 at weight 0
  return ConvCode((0o3, 0o3), 2)

def test_trellis_shape():
  code = ConvCode()
  fst = trellis_fst(code)
  assert fst.num_states() == 64
  assert sum(fst.num_arcs(q) for q in fst.states()) == 128
  assert fst.start() == 0

def test_trellis_arcs_follow_the_encoder():
  code = ConvCode()
  fst = trellis_fst(code, weighted=True)
  for state in fst.states():
    for arc in fst.arcs(state):
      bit = arc.ilabel - 1
      assert arc.nextstate == code.next_state[state, bit]
      assert arc.olabel - 1 == code.branch_symbol(state, bit)
      assert math.isclose(float(arc.weight), code.branch_weight(state, bit))

def test_detour_shape():
  fst = detour_fst(ConvCode())
  assert fst.num_states() == 65
  # the departure only takes input 1
  assert [arc.ilabel for arc in fst.arcs(0)] == [2]

def test_free_distance():
  assert free_distance(ConvCode()) == 10
  assert free_distance(ConvCode.from_octal('5,7')) == 5

def test_enumerate_detours_at_free_distance():
  detours = enumerate_detours(ConvCode(), 10)
  assert len(detours) == 11
  assert all(weight == 10 for (_, weight) in detours)
  assert sum(sum(bits) for (bits, _) in detours) == 36
  # every detour starts with a 1 and ends with the six-bit zero tail
  for (bits, _) in detours:
    assert bits[0] == 1
    assert bits[-6:] == (0,) * 6

def test_spectrum_from_detours():
  entries = spectrum_from_detours(enumerate_detours(ConvCode(), 12))
  assert entries == {10: (11, 36), 12: (38, 211)}

def test_detours_of_a_small_code():
  entries = spectrum_from_detours(enumerate_detours(ConvCode.from_octal('5,7'), 7))
  assert entries == {5: (1, 1), 6: (2, 4), 7: (4, 12)}

def test_catastrophic_code():
  code = catastrophic()
  assert free_distance(code) == 4
  with pytest.raises(CatastrophicCodeError):
    enumerate_detours(code, 4)
  # an explicit length cap turns the guard off
  detours = enumerate_detours(code, 4, max_length=5)
  assert ((1, 0), 4) in detours

def test_shortest_path_decode_noiseless():
  code = ConvCode()
  rng = np.random.default_rng(3)
  info = rng.integers(0, 2, 40)
  bits, total = shortest_path_decode(code, hard_metrics(encode(code, info)))
  assert list(bits) == list(info)
  assert math.isclose(total, 0.0, abs_tol=1e-5)

def test_shortest_path_decode_corrects_errors():
  code = ConvCode()
  info = np.array([1, 0, 1, 1, 0, 0, 1, 0, 1, 1, 1, 0])
  coded = encode(code, info)
  coded[[3, 14]] ^= 1
  bits, total = shortest_path_decode(code, hard_metrics(coded))
  assert list(bits) == list(info)
  assert math.isclose(total, 2.0, abs_tol=1e-5)

def test_shortest_path_decode_rejects_bad_metrics():
  code = ConvCode()
  with pytest.raises(ArgumentError):
    shortest_path_decode(code, np.zeros((15, 2)))
  with pytest.raises(ArgumentError):
    shortest_path_decode(code, np.zeros((10, 2)))
  with pytest.raises(ArgumentError):
    shortest_path_decode(code, np.zeros((16, 3)))
