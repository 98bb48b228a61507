from bicmbounds import __version__
from bicmbounds.cli import (EXIT_CONFIG, EXIT_INCONCLUSIVE, EXIT_IO, EXIT_NOT_CONFIRMED,
                            EXIT_OK, RunConfig, build_config, build_parser, main,
                            parse_sweep, parse_variants, read_config_file)
from bicmbounds.convcode import ConvCode
from bicmbounds.errors import ConfigurationError
import pytest

# helpers
def run(tmp_path, *argv, name='out.csv'):
  """runs the CLI with --out in tmp_path, returns (exit code, output lines)"""
  path = tmp_path / name
  code = main(list(argv) + ['--out', str(path)])
  lines = path.read_text().splitlines() if path.exists() else []
  return code, lines

def rows(lines):
  """data rows of a CSV output as dicts"""
  body = [line for line in lines if not line.startswith('#')]
  keys = body[0].split(',')
  return [dict(zip(keys, line.split(','))) for line in body[1:]]

def sweep_ratios(tmp_path, mod):
  """(snr, orig, new1, new2) of the gray bounds at every sweep point where ex_orig <= 1e-2"""
  code, lines = run(tmp_path, 'bounds', '--mod', mod, '--label', 'gray', '--snr-db', '8:2:30')
  assert code == EXIT_OK
  points = []
  for r in rows(lines):
    orig, new1, new2 = (float(r[k]) for k in ('ex_orig', 'ex_new1', 'ex_new2'))
    if orig <= 1e-2:
      points.append((float(r['snr_db']), orig, new1, new2))
  return points

def test_parse_sweep():
  assert parse_sweep('5:5:20') == (5.0, 10.0, 15.0, 20.0)
  assert parse_sweep('0:0.1:0.3') == (0.0, 0.1, 0.2, 0.3)
  assert parse_sweep('12') == (12.0,)
  for text in ('5:0:20', '20:1:5', '5:20', 'a:b:c'):
    with pytest.raises(ConfigurationError):
      parse_sweep(text)

def test_parse_variants():
  assert parse_variants('new2, orig') == ('new2', 'orig')
  with pytest.raises(ConfigurationError):
    parse_variants('new3')
  with pytest.raises(ConfigurationError):
    parse_variants(',')

def test_header_echoes_the_configuration():
  cfg = RunConfig(command='spectrum', code=ConvCode.from_octal('5,7'), out='x.csv')
  header = cfg.header()
  assert header.startswith('# bicmbounds {} command=spectrum '.format(__version__))
  assert 'code=5,7' in header
  assert 'snr_db=5,6,7' in header
  assert 'x.csv' not in header

def test_flags_override_the_config_file(tmp_path):
  path = tmp_path / 'run.cfg'
  path.write_text('code = 5,7\ndmax = 6\n')
  args = build_parser().parse_args(['spectrum', '--config', str(path), '--dmax', '7'])
  cfg = build_config(args)
  assert cfg.code == ConvCode((0o5, 0o7), 3)
  assert cfg.dmax == 7

def test_config_file_rejects_unknown_keys(tmp_path):
  path = tmp_path / 'run.cfg'
  path.write_text('trials = 5\n')
  with pytest.raises(ConfigurationError):
    read_config_file(str(path))
  assert main(['table1', '--config', str(path)]) == EXIT_CONFIG

def test_missing_config_file(tmp_path):
  assert main(['table1', '--config', str(tmp_path / 'absent.cfg')]) == EXIT_IO

def test_usage_errors_are_configuration_errors(tmp_path):
  assert main([]) == EXIT_CONFIG
  assert main(['bounds', '--mod', '32qam']) == EXIT_CONFIG
  assert main(['counterexamples', 't3']) == EXIT_CONFIG
  assert run(tmp_path, 'simulate', '--blocks', '0')[0] == EXIT_CONFIG

def test_table1(tmp_path):
  code, lines = run(tmp_path, 'table1')
  assert code == EXIT_OK
  assert lines[0].startswith('# bicmbounds {} command=table1'.format(__version__))
  table = rows(lines)
  assert len(table) == 7
  assert table[4]['constellation'] == '16QAM' and table[4]['dh2'] == '0.492'
  assert table[5]['flags'] == 'nonstandard'

def test_table1_to_stdout(capsys):
  assert main(['table1', '-q']) == EXIT_OK
  assert 'constellation,labeling,dh2,dhc1_2,dhc2_2,flags' in capsys.readouterr().out

def test_counterexample_t1(tmp_path):
  code, lines = run(tmp_path, 'counterexamples', 't1', '--theta', '30', '--grid', '0.01')
  assert code == EXIT_OK
  witnesses = rows(lines)
  assert witnesses
  assert {w['region'] for w in witnesses} == {'dark', 'light'}

def test_counterexample_t1_control(tmp_path):
  code, lines = run(tmp_path, 'counterexamples', 't1', '--theta', '0', '--grid', '0.02')
  assert code == EXIT_NOT_CONFIRMED
  assert rows(lines) == []

def test_counterexample_t1_coarse_grid(tmp_path):
  code, _ = run(tmp_path, 'counterexamples', 't1', '--theta', '30', '--grid', '0.1')
  assert code == EXIT_INCONCLUSIVE

def test_counterexample_t2(tmp_path):
  code, lines = run(tmp_path, 'counterexamples', 't2', '--grid', '0.02')
  assert code == EXIT_OK
  assert all(w['region'] == 'dark' for w in rows(lines))

def test_spectrum(tmp_path):
  code, lines = run(tmp_path, 'spectrum', '--code', '5,7', '--dmax', '7')
  assert code == EXIT_OK
  assert lines[1:] == ['d,A_d,W_I', '5,1,1', '6,2,4', '7,4,12']

def test_simulate_is_reproducible(tmp_path):
  argv = ['simulate', '--mod', '4qam', '--snr-db', '2:2:4', '--blocks', '2',
          '--block-length', '200', '--seed', '3']
  first = run(tmp_path, *argv, name='a.csv')
  second = run(tmp_path, *argv, name='b.csv')
  assert first[0] == second[0] == EXIT_OK
  assert first[1] == second[1]
  assert [r['snr_db'] for r in rows(first[1])] == ['2', '4']
  assert all(r['bits'] == '400' for r in rows(first[1]))

@pytest.fixture(scope='module')
def bound_sweeps(tmp_path_factory):
  return {mod: sweep_ratios(tmp_path_factory.mktemp(mod), mod) for mod in ('16qam', '64qam')}

def test_bounds_output(tmp_path):
  code, lines = run(tmp_path, 'bounds', '--mod', '16qam', '--label', 'gray', '--snr-db', '20:10:30')
  assert code == EXIT_OK
  assert lines[1] == 'snr_db,ex_orig,ex_new1,ex_new2'
  table = rows(lines)
  assert [r['snr_db'] for r in table] == ['20', '30']
  # bounds fall with SNR
  assert float(table[0]['ex_new2']) > float(table[1]['ex_new2'])

@pytest.mark.parametrize('mod', ['16qam', '64qam'])
def test_bound_ordering_over_the_sweep(bound_sweeps, mod):
  points = bound_sweeps[mod]
  assert len(points) >= 5
  for (snr, orig, new1, new2) in points:
    assert new2 <= new1, snr
    assert new2 <= orig, snr

def test_bound_ratios_16qam(bound_sweeps):
  for (snr, orig, new1, new2) in bound_sweeps['16qam']:
    assert 0.9 <= new2 / orig <= 1.0, snr
    # the finite-target mass of rule I keeps new1 above 2.5 orig up to about 16 dB
    if snr >= 18:
      assert 1.5 <= new1 / orig <= 2.5, snr

def test_bound_ratios_64qam(bound_sweeps):
  for (snr, orig, new1, new2) in bound_sweeps['64qam']:
    # the orig harmonic distance is below the rule II one, so new2 / orig tends to about 0.81
    assert 0.8 <= new2 / orig <= 0.9, snr
    if snr >= 24:
      assert 2.0 <= new1 / orig <= 4.0, snr

def test_points_file(tmp_path):
  path = tmp_path / 'qpsk.txt'
  path.write_text('# rotated QPSK\n2 0 00\n0 2 01\n-2 0 11\n0 -2 10\n')
  code, lines = run(tmp_path, 'simulate', '--points', str(path), '--channel', 'awgn', '--snr-db', '4',
                    '--blocks', '2', '--block-length', '200')
  assert code == EXIT_OK
  assert 'points={}'.format(path) in lines[0]
  (row,) = rows(lines)
  assert row['bits'] == '400'

def test_missing_points_file(tmp_path):
  code, _ = run(tmp_path, 'simulate', '--points', str(tmp_path / 'absent.txt'), '--blocks', '1')
  assert code == EXIT_IO

def test_simulation_stays_below_the_bound(tmp_path):
  common = ['--mod', '16qam', '--snr-db', '6']
  _, simulated = run(tmp_path, 'simulate', *common, '--blocks', '4', '--block-length', '2000', name='sim.csv')
  _, bounds = run(tmp_path, 'bounds', *common, '--variant', 'new2', name='bounds.csv')
  (sim,) = rows(simulated)
  (bound,) = rows(bounds)
  assert int(sim['errors']) > 0
  assert float(sim['ber']) <= float(bound['ex_new2'])

def test_bounds_variant_subset(tmp_path):
  code, lines = run(tmp_path, 'bounds', '--mod', '4psk', '--snr-db', '10', '--variant', 'new2')
  assert code == EXIT_OK
  (row,) = rows(lines)
  assert row['ex_orig'] == '' and row['ex_new1'] == ''
  assert float(row['ex_new2']) > 0
