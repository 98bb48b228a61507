"""
Command-line front end.

  bicmbounds table1
  bicmbounds bounds --mod 16qam --label gray --snr-db 5:1:20 --variant orig,new1,new2
  bicmbounds simulate --mod 16qam --snr-db 5:1:15 --seed 1 --blocks 200
  bicmbounds counterexamples t1 --theta 30
  bicmbounds spectrum --code 133,171 --dmax 24

Every command writes CSV to --out (stdout by default) after a comment line
that echoes the version and the normalized configuration.
"""
import argparse
import configparser
import contextlib
import dataclasses
import logging
import math
import sys
from dataclasses import dataclass
from typing import Optional, Sequence, TextIO, Tuple

from bicmbounds import __version__
from bicmbounds.constellation import NAMED, Constellation, load_custom, named
from bicmbounds.convcode import (ConvCode, ber_union_bound, weight_spectrum,
                                 write_spectrum)
from bicmbounds.errors import (BicmError, ConfigurationError,
                               NumericalFailureError,
                               VerificationInconclusiveError)
from bicmbounds.expurgation import (assign_neighbors, distance_mixture,
                                    table1, write_table)
from bicmbounds.geometry import (GridSpec, verify_theorem1, verify_theorem2,
                                 write_witnesses)
from bicmbounds.pep import AWGN, RAYLEIGH, ChannelSpec, f_bound
from bicmbounds.simulator import SimConfig, sweep, write_results

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NOT_CONFIRMED = 2
EXIT_IO = 3
EXIT_NUMERICAL = 4
EXIT_INCONCLUSIVE = 5

COMMANDS = ('table1', 'bounds', 'simulate', 'counterexamples', 'spectrum')

# bound column -> neighbor rule
VARIANT_RULES = {'orig': 'orig', 'new1': 'I', 'new2': 'II'}
CHANNELS = {'awgn': AWGN, 'rayleigh': RAYLEIGH}

TRUNCATION_WARNING = 0.01


def parse_sweep(text: str) -> Tuple[float, ...]:
  """'a:s:b' -> (a, a + s, ..., b) in dB; a single number is a one-point sweep"""
  parts = text.split(':')
  try:
    values = [float(p) for p in parts]
  except ValueError:
    raise ConfigurationError('SNR sweep must look like start:step:stop, got {!r}'.format(text))
  if len(values) == 1:
    return (values[0],)
  if len(values) != 3:
    raise ConfigurationError('SNR sweep must look like start:step:stop, got {!r}'.format(text))
  start, step, stop = values
  if not step > 0:
    raise ConfigurationError('SNR step must be positive, got {}'.format(step))
  if stop < start:
    raise ConfigurationError('empty SNR sweep {!r}'.format(text))
  count = int(math.floor((stop - start) / step + 1e-9)) + 1
  return tuple(round(start + k * step, 10) for k in range(count))


def parse_variants(text: str) -> Tuple[str, ...]:
  variants = tuple(v.strip() for v in text.split(',') if v.strip())
  if not variants:
    raise ConfigurationError('need at least one variant')
  for v in variants:
    if v not in VARIANT_RULES:
      raise ConfigurationError('unknown variant {!r}; choose from {}'.format(v, ', '.join(VARIANT_RULES)))
  return variants


def _positive_int(name):
  def convert(text):
    try:
      value = int(text)
    except ValueError:
      raise ConfigurationError('{} must be an integer, got {!r}'.format(name, text))
    if value < 1:
      raise ConfigurationError('{} must be positive, got {}'.format(name, value))
    return value
  return convert


def _integer(name):
  def convert(text):
    try:
      return int(text)
    except ValueError:
      raise ConfigurationError('{} must be an integer, got {!r}'.format(name, text))
  return convert


def _real(name):
  def convert(text):
    try:
      return float(text)
    except ValueError:
      raise ConfigurationError('{} must be a number, got {!r}'.format(name, text))
  return convert


def _choice(name, choices):
  def convert(text):
    if text not in choices:
      raise ConfigurationError('{} must be one of {}, got {!r}'.format(name, ', '.join(choices), text))
    return text
  return convert


# config key -> converter from text, shared by flags and config file
CONVERTERS = {
  'mod': _choice('mod', sorted(NAMED)),
  'label': _choice('label', ['gray', 'sp']),
  'points': str,
  'channel': _choice('channel', list(CHANNELS)),
  'snr_db': parse_sweep,
  'variant': parse_variants,
  'code': ConvCode.from_octal,
  'dmax': _positive_int('dmax'),
  'seed': _integer('seed'),
  'theta': _real('theta'),
  'grid': _real('grid'),
  'out': str,
  'blocks': _positive_int('blocks'),
  'block_length': _positive_int('block length'),
  'workers': _positive_int('workers'),
}


@dataclass(frozen=True)
class RunConfig:
  """
  Normalized configuration of one run, after flags and config file are merged.
  """
  command: str
  mod: str = '16qam'
  label: str = 'gray'
  points: Optional[str] = None
  channel: str = 'rayleigh'
  snr_db: Tuple[float, ...] = parse_sweep('5:1:20')
  variant: Tuple[str, ...] = ('orig', 'new1', 'new2')
  code: ConvCode = ConvCode()
  dmax: Optional[int] = None
  seed: int = 1
  theta: float = 30.0
  grid: float = 0.005
  out: str = '-'
  blocks: int = 200
  block_length: int = 10000
  workers: int = 1
  which: Optional[str] = None

  def describe(self) -> str:
    """key=value pairs of every setting but the output path, in field order"""
    items = []
    for f in dataclasses.fields(self):
      if f.name == 'out':
        continue
      value = getattr(self, f.name)
      if f.name == 'code':
        value = ','.join('{:o}'.format(g) for g in value.generators)
      elif f.name == 'snr_db':
        value = ','.join('{:g}'.format(v) for v in value)
      elif f.name == 'variant':
        value = ','.join(value)
      items.append('{}={}'.format(f.name, value))
    return ' '.join(items)

  def header(self) -> str:
    return '# bicmbounds {} {}'.format(__version__, self.describe())


def read_config_file(path: str) -> dict:
  """
  Reads `key = value` lines; keys are the long flag names with
  underscores. Returns the converted values.
  """
  parser = configparser.ConfigParser(interpolation=None)
  try:
    with open(path) as f:
      parser.read_string('[run]\n' + f.read(), source=path)
  except configparser.Error as e:
    raise ConfigurationError('cannot parse config file {}: {}'.format(path, e))
  values = {}
  for (key, text) in parser['run'].items():
    key = key.replace('-', '_')
    if key not in CONVERTERS:
      raise ConfigurationError('unknown config key {!r} in {}'.format(key, path))
    values[key] = CONVERTERS[key](text.strip())
  return values


class _Parser(argparse.ArgumentParser):
  # usage errors are configuration errors (exit 1), not argparse's exit 2
  def error(self, message):
    raise ConfigurationError(message)


def build_parser() -> argparse.ArgumentParser:
  common = argparse.ArgumentParser(add_help=False)
  common.add_argument('--config', help='file of `key = value` lines; flags take precedence')
  common.add_argument('--out', help='output CSV path, - for stdout')
  common.add_argument('-v', '--verbose', action='store_true', help='debug logging')
  common.add_argument('-q', '--quiet', action='store_true', help='warnings only')

  signal = argparse.ArgumentParser(add_help=False)
  signal.add_argument('--mod', help='modulation: {}'.format(', '.join(sorted(NAMED))))
  signal.add_argument('--label', help='labeling: gray or sp')
  signal.add_argument('--points', help='custom constellation file of `re im label` lines; overrides --mod and --label')
  signal.add_argument('--channel', help='awgn or rayleigh (fully known Rayleigh fading)')
  signal.add_argument('--snr-db', dest='snr_db', help='Es/N0 sweep start:step:stop in dB')
  signal.add_argument('--code', help='octal generators, e.g. 133,171')

  parser = _Parser(prog='bicmbounds', description='Expurgated union bounds for BICM')
  parser.add_argument('--version', action='version', version='%(prog)s {}'.format(__version__))
  commands = parser.add_subparsers(dest='command', parser_class=_Parser)
  commands.required = True

  commands.add_parser('table1', parents=[common], help='harmonic mean squared distances of the standard sets')

  bounds = commands.add_parser('bounds', parents=[common, signal], help='BER bound curves')
  bounds.add_argument('--variant', help='comma-separated subset of orig,new1,new2')
  bounds.add_argument('--dmax', help='spectrum truncation weight')

  simulate = commands.add_parser('simulate', parents=[common, signal], help='Monte Carlo BER of the coded chain')
  simulate.add_argument('--seed')
  simulate.add_argument('--blocks', help='blocks per SNR point')
  simulate.add_argument('--block-length', dest='block_length', help='info bits per block')
  simulate.add_argument('--workers', help='worker processes')

  counter = commands.add_parser('counterexamples', parents=[common], help='grid check of the neighbor-selection counterexamples')
  counter.add_argument('which', choices=['t1', 't2'])
  counter.add_argument('--theta', help='displacement of point 01 in degrees (t1)')
  counter.add_argument('--grid', help='grid resolution')

  spectrum = commands.add_parser('spectrum', parents=[common], help='weight spectrum of the code')
  spectrum.add_argument('--code', help='octal generators, e.g. 133,171')
  spectrum.add_argument('--dmax', help='spectrum truncation weight')
  return parser


def build_config(args: argparse.Namespace) -> RunConfig:
  """flags > config file > defaults"""
  values = read_config_file(args.config) if args.config else {}
  for key in CONVERTERS:
    flag = getattr(args, key, None)
    if flag is not None:
      values[key] = CONVERTERS[key](flag)
  if args.command == 'counterexamples':
    values['which'] = args.which
  return RunConfig(command=args.command, **values)


@contextlib.contextmanager
def _output(path: str):
  if path == '-':
    yield sys.stdout
    sys.stdout.flush()
  else:
    with open(path, 'w', newline='') as f:
      yield f


def _constellation(cfg: RunConfig) -> Constellation:
  if cfg.points:
    return load_custom(cfg.points)
  return named(cfg.mod, cfg.label)


def cmd_table1(cfg: RunConfig, out: TextIO) -> int:
  write_table(out, table1(), cfg.header())
  return EXIT_OK


def cmd_bounds(cfg: RunConfig, out: TextIO) -> int:
  c = _constellation(cfg)
  spectrum = weight_spectrum(cfg.code, cfg.dmax)
  mixtures = {}
  for name in cfg.variant:
    assignment = assign_neighbors(c, VARIANT_RULES[name], generalized=True)
    if assignment.nonstandard:
      logger.warning('%s %s %s uses the greedy neighbor cover', c.name, c.labeling_name, name)
    mixtures[name] = distance_mixture(assignment)

  out.write(cfg.header() + '\n')
  out.write('snr_db,ex_orig,ex_new1,ex_new2\n')
  for snr in cfg.snr_db:
    ch = ChannelSpec(CHANNELS[cfg.channel], snr)
    row = {}
    for (name, mix) in mixtures.items():
      try:
        bound, tail = ber_union_bound(spectrum, lambda d: f_bound(mix, ch, d))
      except NumericalFailureError as e:
        diagnostics = ' '.join('{}={}'.format(k, v) for (k, v) in sorted(e.diagnostics.items()))
        out.write('# numerical failure: snr_db={:g} variant={} {} {}\n'.format(snr, name, e, diagnostics))
        logger.error('%s', e)
        return EXIT_NUMERICAL
      if tail > TRUNCATION_WARNING:
        logger.warning('%g dB %s: last spectrum term is %.1f%% of the bound; raise --dmax', snr, name, 100 * tail)
      row[name] = '{:.6e}'.format(bound)
    out.write(','.join(['{:g}'.format(snr)] + [row.get(name, '') for name in VARIANT_RULES]) + '\n')
    logger.info('%g dB: %s', snr, ' '.join('{}={}'.format(k, v) for (k, v) in row.items()))
  return EXIT_OK


def cmd_simulate(cfg: RunConfig, out: TextIO) -> int:
  sim = SimConfig(
    constellation=_constellation(cfg),
    channel=ChannelSpec(CHANNELS[cfg.channel], cfg.snr_db[0]),
    code=cfg.code,
    block_length=cfg.block_length,
    blocks=cfg.blocks,
    seed=cfg.seed,
    workers=cfg.workers,
  )
  write_results(out, sweep(sim, cfg.snr_db), cfg.header())
  return EXIT_OK


def cmd_counterexamples(cfg: RunConfig, out: TextIO) -> int:
  grid = GridSpec(resolution=cfg.grid)
  if cfg.which == 't1':
    result = verify_theorem1(cfg.theta, grid)
    if not result.premise_holds:
      logger.warning('theta=%g: the neglected pairwise region is not inside the kept ones', cfg.theta)
  else:
    result = verify_theorem2(grid)
  write_witnesses(out, result.witnesses, cfg.header())
  logger.info('%s: %s with %d witnesses', cfg.which, 'confirmed' if result.confirmed else 'not confirmed',
              len(result.witnesses))
  return EXIT_OK if result.confirmed else EXIT_NOT_CONFIRMED


def cmd_spectrum(cfg: RunConfig, out: TextIO) -> int:
  write_spectrum(out, weight_spectrum(cfg.code, cfg.dmax), cfg.header())
  return EXIT_OK


HANDLERS = {
  'table1': cmd_table1,
  'bounds': cmd_bounds,
  'simulate': cmd_simulate,
  'counterexamples': cmd_counterexamples,
  'spectrum': cmd_spectrum,
}


def _configure_logging(args: argparse.Namespace):
  level = logging.INFO
  if getattr(args, 'verbose', False):
    level = logging.DEBUG
  elif getattr(args, 'quiet', False):
    level = logging.WARNING
  logging.basicConfig(level=level, format='%(asctime)s [%(levelname)s] %(name)s: %(message)s', stream=sys.stderr)
  logging.getLogger('bicmbounds').setLevel(level)


def main(argv: Optional[Sequence[str]] = None) -> int:
  """
  Runs one command.

  Returns:
    (int) 0 success or confirmed, 1 invalid configuration, 2 counterexample
      not confirmed, 3 I/O failure, 4 numerical failure, 5 inconclusive
  """
  try:
    args = build_parser().parse_args(argv)
    _configure_logging(args)
    cfg = build_config(args)
  except ConfigurationError as e:
    print('bicmbounds: {}'.format(e), file=sys.stderr)
    return EXIT_CONFIG
  except OSError as e:
    print('bicmbounds: cannot read config: {}'.format(e), file=sys.stderr)
    return EXIT_IO

  try:
    with _output(cfg.out) as out:
      return HANDLERS[cfg.command](cfg, out)
  except ConfigurationError as e:
    logger.error('invalid configuration: %s', e)
    return EXIT_CONFIG
  except VerificationInconclusiveError as e:
    logger.error('inconclusive: %s', e)
    return EXIT_INCONCLUSIVE
  except NumericalFailureError as e:
    logger.error('numerical failure: %s', e)
    return EXIT_NUMERICAL
  except OSError as e:
    logger.error('I/O failure: %s', e)
    return EXIT_IO
  except BicmError as e:
    logger.error('%s', e)
    return EXIT_CONFIG


if __name__ == '__main__':
  sys.exit(main())
