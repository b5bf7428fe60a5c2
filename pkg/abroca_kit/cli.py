#!/usr/bin/env python3
# Copyright (c) 2026 abroca_power_kit contributors
"""
コマンドラインから各機能を使う。

    python abroca.py test     scores.csv --n-iter-test 1000
    python abroca.py power    --preset imbalance --svg
    python abroca.py gen-null --ratio-group 0.9 --ratio-pos-case 0.9
    python abroca.py fit      out/null_abroca.csv

設定の優先順位: 既定値 < --config のファイル < コマンドラインの引数
終了コード: 0 成功 / 1 使い方・設定の誤り / 2 データの誤り / 3 数値計算の失敗
"""

import argparse
import csv
import json
import logging
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import colored_traceback
import colorlog
import numpy as np
import yaml
from omegaconf import DictConfig, OmegaConf

from abroca_kit.dataset import read_csv
from abroca_kit.distfit import (
    FAMILIES,
    PARAM_NAMES,
    fit_all,
    null_abroca_samples,
    qq_points,
    sample_skewness,
)
from abroca_kit.errors import AbrocaKitError, ConfigError, DataError, NumericalError
from abroca_kit.generator import SimConfig, cell_counts
from abroca_kit.manifest import RunManifest, write_manifest
from abroca_kit.permutation_test import (
    P_CONVENTIONS,
    TestConfig,
    randomization_test,
    read_samples_csv,
    write_null_csv,
    write_samples_csv,
)
from abroca_kit.power import (
    DEFAULT_BASELINE_AUC,
    DEFAULT_N_ITER_POWER,
    PowerConfig,
    SweepGrid,
    SweepSummary,
    curves_to_rows,
    imbalance_grid,
    power_sweep,
    required_n_total,
    sample_size_grid,
    write_power_csv,
)
from abroca_kit.svg_plot import TARGET_POWER, write_power_svg

COMMON_DEFAULTS = {'seed': 0, 'threads': 1, 'out_dir': 'out', 'format': 'csv'}
SECTION_DEFAULTS = {
    'test': {
        'n_iter_test': 1000,
        'p_convention': 'smoothed',
        'max_resample': 100,
        'exhaustive': False,
        'null_out': None,
    },
    'power': {
        'preset': 'sample-size',
        # None のときはプリセットの値を使う
        'n_total': None,
        'auc_diff': None,
        'ratio_group': None,
        'ratio_pos_case': None,
        'baseline_auc': DEFAULT_BASELINE_AUC,
        'n_iter_power': DEFAULT_N_ITER_POWER,
        'n_iter_test': 1000,
        'alpha': 0.05,
        'p_convention': 'smoothed',
        'max_resample': 100,
        'svg': False,
    },
    'gen_null': {
        'auc_1': 0.75,
        'auc_2': 0.75,
        'n_total': 1000,
        'ratio_group': 0.5,
        'ratio_pos_case': 0.5,
        'ratio_pos_case_2': None,
        'n_draws': 5000,
        'allow_alt': False,
    },
    'fit': {
        'families': list(FAMILIES),
    },
}
SECTIONS = {'test': 'test', 'power': 'power', 'gen-null': 'gen_null', 'fit': 'fit'}
PRESETS = {'sample-size': sample_size_grid, 'imbalance': imbalance_grid}
INPUT_KEYS = ('csv_path', 'samples_path')
FORMATS = ('csv', 'json')


class KitArgumentParser(argparse.ArgumentParser):
    """使い方の誤りは終了コード 1 で終える。"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f'{self.prog}: error: {message}\n')


def _add_test_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--n-iter-test', type=int, help='number of permutations per test')
    parser.add_argument('--p-convention', choices=P_CONVENTIONS, help='p-value convention')
    parser.add_argument(
        '--max-resample', type=int, help='redraws allowed when a permutation is single-class'
    )


def _add_n_total_argument(parser: argparse.ArgumentParser, **kwargs) -> None:
    parser.add_argument(
        '--n-total',
        '--n-total-sample',
        '--test-set-size',
        dest='n_total',
        help='total number of instances in the holdout test set',
        **kwargs,
    )


def get_parser() -> argparse.ArgumentParser:
    suppress = argparse.SUPPRESS
    common = KitArgumentParser(add_help=False, argument_default=suppress)
    common.add_argument('--config', help='YAML or JSON config file')
    common.add_argument('--seed', type=int, help='master seed')
    common.add_argument('--threads', type=int, help='number of worker processes')
    common.add_argument('--out-dir', help='output directory')
    common.add_argument('--format', choices=FORMATS, help='output file format')
    common.add_argument('--quiet', action='store_true', help='hide progress bars and info logs')
    common.add_argument('--debug', action='store_true', help='raise errors with tracebacks')

    parser = KitArgumentParser(
        prog='abroca.py', description='ABROCA significance testing and power analysis'
    )
    subparsers = parser.add_subparsers(dest='command', required=True)

    # test
    sub = subparsers.add_parser(
        'test', parents=[common], argument_default=suppress, help='randomization test on a CSV'
    )
    sub.add_argument('csv_path', help='CSV file with columns score,label,group')
    _add_test_arguments(sub)
    sub.add_argument('--exhaustive', action='store_true', help='enumerate every assignment')
    sub.add_argument('--null-out', help='write the null ABROCA samples to this CSV')

    # power
    sub = subparsers.add_parser(
        'power', parents=[common], argument_default=suppress, help='Monte Carlo power sweep'
    )
    sub.add_argument('--preset', choices=tuple(PRESETS), help='grid preset')
    _add_n_total_argument(sub, nargs='+')
    sub.add_argument('--auc-diff', nargs='+', help='AUC differences (list or start:stop:step)')
    sub.add_argument('--ratio-group', nargs='+', help='share of group 0')
    sub.add_argument('--ratio-pos-case', nargs='+', help='share of positives in each group')
    sub.add_argument('--baseline-auc', type=float, help='AUC midway between the two groups')
    sub.add_argument('--n-iter-power', type=int, help='replicates per grid cell')
    sub.add_argument('--alpha', type=float, help='significance level')
    _add_test_arguments(sub)
    sub.add_argument('--svg', action='store_true', help='also render power_curve.svg')

    # gen-null
    sub = subparsers.add_parser(
        'gen-null', parents=[common], argument_default=suppress, help='draw null ABROCA samples'
    )
    sub.add_argument('--auc-1', type=float, help='population AUC of group 0')
    sub.add_argument('--auc-2', type=float, help='population AUC of group 1')
    _add_n_total_argument(sub, type=int)
    sub.add_argument('--ratio-group', type=float, help='share of group 0')
    sub.add_argument('--ratio-pos-case', type=float, help='share of positives in each group')
    sub.add_argument('--ratio-pos-case-2', type=float, help='share of positives in group 1')
    sub.add_argument('--n-draws', type=int, help='number of simulated datasets')
    sub.add_argument('--allow-alt', action='store_true', help='allow auc_1 != auc_2')

    # fit
    sub = subparsers.add_parser(
        'fit', parents=[common], argument_default=suppress, help='fit distributions to samples'
    )
    sub.add_argument('samples_path', help='CSV (column "abroca") or JSON of ABROCA samples')
    sub.add_argument('--families', nargs='+', choices=FAMILIES, help='families to fit')
    return parser


# 設定 -----------------------------------------------------------------------
def load_config_file(path_config: str | Path) -> dict:
    """設定ファイルを読んで、知らないキーがないか確認する。"""
    try:
        loaded = OmegaConf.load(path_config)
    except (OSError, yaml.YAMLError) as e:
        raise ConfigError(f'Cannot read config file {path_config}: {e}') from e
    if not isinstance(loaded, DictConfig):
        raise ConfigError(f'Config file {path_config} must hold a mapping.')
    data = OmegaConf.to_container(loaded, resolve=True)

    unknown = sorted(set(data) - set(COMMON_DEFAULTS) - set(SECTION_DEFAULTS))
    if unknown:
        raise ConfigError(f'Unknown config key(s): {", ".join(map(str, unknown))}')
    for name, defaults in SECTION_DEFAULTS.items():
        part = data.get(name) or {}
        if not isinstance(part, dict):
            raise ConfigError(f'Config section "{name}" must be a mapping.')
        unknown = sorted(set(part) - set(defaults))
        if unknown:
            raise ConfigError(
                f'Unknown key(s) in config section "{name}": {", ".join(map(str, unknown))}'
            )
        data[name] = part
    return data


def resolve_config(command: str, cli_args: dict, path_config: str | Path | None = None) -> dict:
    """
    既定値・設定ファイル・コマンドライン引数を重ねる。
    返り値は `{共通キー..., セクション名: {...}}` の形で、そのまま設定ファイルとして使える。
    """
    section = SECTIONS[command]
    defaults = OmegaConf.create({**COMMON_DEFAULTS, section: SECTION_DEFAULTS[section]})
    file_data = load_config_file(path_config) if path_config is not None else {}
    file_part = {k: v for k, v in file_data.items() if k in COMMON_DEFAULTS}
    file_part[section] = file_data.get(section, {})
    cli_part = {k: v for k, v in cli_args.items() if k in COMMON_DEFAULTS}
    cli_part[section] = {k: v for k, v in cli_args.items() if k not in COMMON_DEFAULTS}
    config = OmegaConf.to_container(OmegaConf.merge(defaults, file_part, cli_part), resolve=True)

    if not isinstance(config['seed'], int) or config['seed'] < 0:
        raise ConfigError(f'seed must be a non-negative integer, got {config["seed"]!r}')
    if not isinstance(config['threads'], int) or config['threads'] < 1:
        raise ConfigError(f'threads must be a positive integer, got {config["threads"]!r}')
    if config['format'] not in FORMATS:
        raise ConfigError(f'format must be one of {FORMATS}, got {config["format"]!r}')
    return config


def _cast(name: str, token: str, cast: type):
    try:
        return cast(token)
    except ValueError:
        message = f'Grid axis "{name}": cannot read {token!r} as {cast.__name__}'
        raise ConfigError(message) from None


def _expand_range(name: str, token: str, cast: type) -> list:
    """start:stop:step を stop も含めて展開する。"""
    parts = token.split(':')
    if len(parts) != 3:  # noqa: PLR2004
        raise ConfigError(f'Grid axis "{name}": range must be start:stop:step, got {token!r}')
    start, stop, step = (_cast(name, part, cast) for part in parts)
    if step <= 0 or stop < start:
        raise ConfigError(f'Grid axis "{name}": invalid range {token!r}')
    n_steps = math.floor((stop - start) / step + 1e-9)
    return [cast(round(start + i * step, 12)) for i in range(n_steps + 1)]


def parse_axis(name: str, value, cast: type) -> tuple:
    """
    グリッドの軸を読む。リスト、カンマ区切り、start:stop:step の範囲を受け付ける。
    """
    items = value if isinstance(value, list | tuple) else [value]
    values = []
    for item in items:
        for token in str(item).replace(',', ' ').split():
            if ':' in token:
                values.extend(_expand_range(name, token, cast))
            else:
                values.append(_cast(name, token, cast))
    if not values:
        raise ConfigError(f'Grid axis "{name}" is empty.')
    return tuple(values)


def resolve_grid(section: dict) -> SweepGrid:
    """プリセットの軸を、明示された軸で上書きする。"""
    if section['preset'] not in PRESETS:
        raise ConfigError(f'preset must be one of {tuple(PRESETS)}, got {section["preset"]!r}')
    preset = PRESETS[section['preset']]()
    axes = {
        'n_totals': ('n_total', int, preset.n_totals),
        'auc_diffs': ('auc_diff', float, preset.auc_diffs),
        'ratio_groups': ('ratio_group', float, preset.ratio_groups),
        'ratio_pos_cases': ('ratio_pos_case', float, preset.ratio_pos_cases),
    }
    kwargs = {}
    for field_name, (key, cast, preset_values) in axes.items():
        value = section[key]
        kwargs[field_name] = preset_values if value is None else parse_axis(key, value, cast)
    return SweepGrid(**kwargs)


# ログ -----------------------------------------------------------------------
class WarningCollector(logging.Handler):
    """manifest に載せる警告を集める"""

    def __init__(self):
        super().__init__(level=logging.WARNING)
        self.messages: list[str] = []

    def emit(self, record):
        self.messages.append(record.getMessage())


def setup_logging(out_dir: Path, *, quiet: bool = False) -> WarningCollector:
    """標準エラー (色付き) と <out_dir>/abroca.log の両方に出力する。"""
    stream_handler = logging.StreamHandler()
    stream_handler.setFormatter(
        colorlog.ColoredFormatter('%(log_color)s[%(levelname)s]%(reset)s %(message)s')
    )
    stream_handler.setLevel(logging.WARNING if quiet else logging.INFO)
    file_handler = logging.FileHandler(out_dir / 'abroca.log', mode='w', encoding='utf-8')
    file_handler.setFormatter(logging.Formatter('%(asctime)s [%(levelname)s] %(message)s'))
    collector = WarningCollector()
    logging.basicConfig(
        level=logging.INFO, handlers=[stream_handler, file_handler, collector], force=True
    )
    return collector


def close_logging() -> None:
    root = logging.getLogger()
    for handler in root.handlers[:]:
        handler.close()
        root.removeHandler(handler)


# 出力 -----------------------------------------------------------------------
@dataclass
class RunContext:
    command: str
    config: dict
    inputs: dict = field(default_factory=dict)
    collector: WarningCollector = field(default_factory=WarningCollector)
    started: float = field(default_factory=time.perf_counter)
    progress: bool = True

    @property
    def section(self) -> dict:
        return self.config[SECTIONS[self.command]]

    @property
    def out_dir(self) -> Path:
        return Path(self.config['out_dir'])

    @property
    def as_json(self) -> bool:
        return self.config['format'] == 'json'

    def output_path(self, stem: str, suffix: str | None = None) -> Path:
        return self.out_dir / f'{stem}.{suffix or self.config["format"]}'

    def finish(self, path_output: Path) -> None:
        """出力ファイル1つにつき manifest を1つ書く。"""
        manifest = RunManifest(
            subcommand=self.command,
            config=self.config,
            master_seed=self.config['seed'],
            wall_clock_seconds=time.perf_counter() - self.started,
            warnings=list(self.collector.messages),
            inputs=self.inputs,
        )
        write_manifest(manifest, path_output)
        print(f'Saved {path_output}')


def write_json(obj, path: Path) -> None:
    with open(path, mode='w', encoding='utf-8', newline='\n') as fj:
        json.dump(obj, fj, indent=2, ensure_ascii=False)
        fj.write('\n')


def write_row_csv(columns, rows, path: Path) -> None:
    with open(path, mode='w', encoding='utf-8', newline='\n') as fc:
        writer = csv.writer(fc, lineterminator='\n')
        writer.writerow(columns)
        writer.writerows(rows)


def _format_value(value) -> str:
    if value is None:
        return ''
    if isinstance(value, float):
        return repr(value)
    return str(value)


def read_samples(path: Path) -> np.ndarray:
    """gen-null の出力 (CSV か JSON) を読む。"""
    if path.suffix.lower() != '.json':
        return read_samples_csv(path)
    with open(path, encoding='utf-8') as fj:
        try:
            data = json.load(fj)
        except json.JSONDecodeError as e:
            raise DataError(f'{path}: invalid JSON ({e})') from e
    values = data.get('abroca') if isinstance(data, dict) else data
    try:
        return np.asarray(values, dtype=np.float64).ravel()
    except (TypeError, ValueError) as e:
        raise DataError(f'{path}: expected a list of numbers under "abroca"') from e


# サブコマンド ---------------------------------------------------------------
def _test_config(section: dict, seed: int, *, exhaustive: bool = False) -> TestConfig:
    return TestConfig(
        n_iter_test=section['n_iter_test'],
        p_convention=section['p_convention'],
        max_resample=section['max_resample'],
        seed=seed,
        exhaustive=exhaustive,
    )


def cmd_test(ctx: RunContext) -> int:
    section = ctx.section
    ds, metadata = read_csv(ctx.inputs['csv_path'])
    cfg = _test_config(section, ctx.config['seed'], exhaustive=section['exhaustive'])
    result = randomization_test(ds, cfg)
    summary = {**result.to_dict(), 'n_instances': len(ds)}
    for key, value in summary.items():
        print(f'{key:>24}: {value}')

    path = ctx.output_path('test_result')
    if ctx.as_json:
        write_json({**summary, **metadata.to_dict()}, path)
    else:
        write_row_csv(summary.keys(), [[_format_value(v) for v in summary.values()]], path)
    ctx.finish(path)

    if section['null_out']:
        path_null = Path(section['null_out'])
        write_null_csv(result, path_null)
        ctx.finish(path_null)
    return 0


def cmd_power(ctx: RunContext) -> int:
    section = ctx.section
    grid = resolve_grid(section)
    # manifest には展開後の軸を残す
    section['n_total'] = list(grid.n_totals)
    section['auc_diff'] = list(grid.auc_diffs)
    section['ratio_group'] = list(grid.ratio_groups)
    section['ratio_pos_case'] = list(grid.ratio_pos_cases)

    base = PowerConfig(
        sim=SimConfig(),
        test=_test_config(section, ctx.config['seed']),
        n_iter_power=section['n_iter_power'],
        alpha=section['alpha'],
        master_seed=ctx.config['seed'],
    )
    print(f'Power sweep over {len(grid.cells())} cells')
    curve = power_sweep(
        base, grid, section['baseline_auc'], ctx.config['threads'], progress=ctx.progress
    )

    path = ctx.output_path('power_curve')
    if ctx.as_json:
        write_json({'rows': curves_to_rows(curve)}, path)
    else:
        write_power_csv(curve, path)
    ctx.finish(path)
    if section['svg']:
        path_svg = ctx.output_path('power_curve', 'svg')
        write_power_svg(curve, path_svg, alpha=section['alpha'])
        ctx.finish(path_svg)

    summary = SweepSummary(target=TARGET_POWER, required=required_n_total(curve, TARGET_POWER))
    for line in summary.lines():
        print(line)
    if all(row.error for row in curve.rows):
        logging.error('Every sweep cell failed.')
        return 3
    return 0


def cmd_gen_null(ctx: RunContext) -> int:
    section = ctx.section
    if section['auc_1'] != section['auc_2'] and not section['allow_alt']:
        raise ConfigError(
            'gen-null draws under the null hypothesis, so auc_1 must equal auc_2 '
            '(pass --allow-alt to draw under an alternative).'
        )
    if not isinstance(section['n_draws'], int) or section['n_draws'] < 1:
        raise ConfigError(f'n_draws must be a positive integer, got {section["n_draws"]!r}')
    cfg = SimConfig(
        auc_1=section['auc_1'],
        auc_2=section['auc_2'],
        n_total=section['n_total'],
        ratio_group=section['ratio_group'],
        ratio_pos_case=section['ratio_pos_case'],
        ratio_pos_case_2=section['ratio_pos_case_2'],
        seed=ctx.config['seed'],
    )
    for note in cell_counts(cfg).notes:
        logging.warning('%s', note)

    values = null_abroca_samples(
        cfg, section['n_draws'], ctx.config['seed'], ctx.config['threads'], progress=ctx.progress
    )
    path = ctx.output_path('null_abroca')
    if ctx.as_json:
        write_json({'abroca': values.tolist()}, path)
    else:
        write_samples_csv(values, path)
    print(f'{len(values)} draws, mean ABROCA = {values.mean():.6f}, sd = {values.std():.6f}')
    ctx.finish(path)
    return 0


def cmd_fit(ctx: RunContext) -> int:
    section = ctx.section
    families = list(section['families'])
    if not families:
        raise ConfigError('families must not be empty.')
    unknown = [family for family in families if family not in FAMILIES]
    if unknown:
        raise ConfigError(f'Unknown family: {unknown}. Choose from {FAMILIES}')

    samples = read_samples(Path(ctx.inputs['samples_path']))
    fits, failures = fit_all(samples, families, seed=ctx.config['seed'])
    try:
        skewness = sample_skewness(samples)
    except DataError as e:
        logging.warning('Skewness not available: %s', e)
        skewness = None

    path = ctx.output_path('fits')
    failure_messages = {family: f'{type(e).__name__}: {e}' for family, e in failures.items()}
    if ctx.as_json:
        write_json(
            {
                'n_samples': len(samples),
                'sample_skewness': skewness,
                'fits': {family: fit.to_dict() for family, fit in fits.items()},
                'failures': failure_messages,
            },
            path,
        )
    else:
        rows = []
        for family in families:
            if family in fits:
                fit = fits[family]
                params = ';'.join(
                    f'{name}={value!r}'
                    for name, value in zip(PARAM_NAMES[family], fit.params, strict=True)
                )
                values = [params, fit.log_likelihood, fit.ks_statistic, fit.ks_p_value]
                rows.append([family, *map(_format_value, values), _format_value(skewness), ''])
            else:
                empty = [''] * 4
                rows.append([family, *empty, _format_value(skewness), failure_messages[family]])
        columns = (
            'family',
            'params',
            'log_likelihood',
            'ks_statistic',
            'ks_p_value',
            'sample_skewness',
            'error',
        )
        write_row_csv(columns, rows, path)
    ctx.finish(path)

    for family, fit in fits.items():
        print(f'{family:>10}: D = {fit.ks_statistic:.4f}, p = {fit.ks_p_value:.4g}')
        path_qq = ctx.output_path(f'qq_{family}', 'csv')
        write_row_csv(
            ('theoretical', 'sample'),
            [[repr(t), repr(s)] for t, s in qq_points(samples, fit.ppf)],
            path_qq,
        )
        ctx.finish(path_qq)
    if not fits:
        return exit_code(next(iter(failures.values())))
    return 0


COMMANDS = {'test': cmd_test, 'power': cmd_power, 'gen-null': cmd_gen_null, 'fit': cmd_fit}


def exit_code(error: BaseException) -> int:
    if isinstance(error, ConfigError):
        return 1
    if isinstance(error, DataError | OSError):
        return 2
    if isinstance(error, NumericalError):
        return 3
    return 1


def main(argv: list[str] | None = None) -> int:
    """終了コードを返す。"""
    try:
        args = vars(get_parser().parse_args(argv))
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 1
    command = args.pop('command')
    path_config = args.pop('config', None)
    quiet = args.pop('quiet', False)
    debug = args.pop('debug', False)
    inputs = {key: args.pop(key) for key in INPUT_KEYS if key in args}
    if debug:
        colored_traceback.add_hook()

    started = time.perf_counter()
    try:
        config = resolve_config(command, args, path_config)
        out_dir = Path(config['out_dir'])
        out_dir.mkdir(parents=True, exist_ok=True)
    except (ConfigError, OSError) as e:
        if debug:
            raise
        print(f'abroca.py: error: {e}', file=sys.stderr)
        return exit_code(e)

    collector = setup_logging(out_dir, quiet=quiet)
    ctx = RunContext(
        command=command,
        config=config,
        inputs=inputs,
        collector=collector,
        started=started,
        progress=not quiet,
    )
    try:
        return COMMANDS[command](ctx)
    except (AbrocaKitError, OSError) as e:
        if debug:
            raise
        logging.error('%s: %s', type(e).__name__, e)  # noqa: TRY400
        return exit_code(e)
    finally:
        close_logging()
