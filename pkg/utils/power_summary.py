#! /usr/bin/env python3
# Copyright (c) 2026 abroca_power_kit contributors
"""
power サブコマンドが出力した power_curve.csv を集めて、
条件ごとに目標の検出力に届いた最小の n_total を表示する。
"""

import argparse
import csv
import sys
from glob import glob
from os.path import dirname, isdir, join

from natsort import natsorted

sys.path.append(join(dirname(__file__), '..'))

from abroca_kit.power import SweepSummary, read_power_csv, required_n_total  # noqa: E402


def find_power_csvs(path: str) -> list[str]:
    """フォルダなら中の power_curve.csv を再帰的に探す。"""
    if isdir(path):
        return natsorted(glob(f'{path}/**/power_curve.csv', recursive=True))
    return [path]


def summarize(path_csv: str, target: float) -> SweepSummary:
    curve = read_power_csv(path_csv)
    return SweepSummary(target=target, required=required_n_total(curve, target))


def write_summary_csv(summaries: dict[str, SweepSummary], path_csv_out: str) -> None:
    with open(path_csv_out, mode='w', encoding='utf-8', newline='\n') as fc:
        writer = csv.writer(fc, lineterminator='\n')
        writer.writerow(
            ['source', 'auc_diff', 'ratio_group', 'ratio_pos_case', 'target', 'n_total']
        )
        for source, summary in summaries.items():
            for (auc_diff, ratio_group, ratio_pos_case), n_total in summary.required.items():
                writer.writerow(
                    [source, auc_diff, ratio_group, ratio_pos_case, summary.target, n_total or '']
                )


def get_parser():
    parser = argparse.ArgumentParser(description='Summarize power_curve.csv files')
    parser.add_argument('path', nargs='?', help='power_curve.csv or a folder containing them')
    parser.add_argument('--target', type=float, default=0.8, help='target power')
    parser.add_argument('--out', help='also write the summary to this CSV')
    return parser


def main():
    args = get_parser().parse_args(sys.argv[1:])
    path = args.path or input('path_power_csv_or_dir: ').strip('"')
    list_path_csv = find_power_csvs(path)
    if not list_path_csv:
        print(f'No power_curve.csv found in {path}')
        return 1

    summaries = {}
    for path_csv in list_path_csv:
        summaries[path_csv] = summarize(path_csv, args.target)
        print(f'[{path_csv}]')
        for line in summaries[path_csv].lines():
            print(f'  {line}')
    if args.out:
        write_summary_csv(summaries, args.out)
        print(f'Saved {args.out}')
    return 0


if __name__ == '__main__':
    sys.exit(main())
