#!/usr/bin/env python3
# Copyright (c) 2026 abroca_power_kit contributors
"""
出力ファイルごとに書き出す実行記録 (<出力ファイル>.manifest.json)。
config はそのまま --config に渡せば同じ出力が再現できる形で保存する。
"""

import json
import tomllib
from dataclasses import asdict, dataclass, field
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

PACKAGE_NAME = 'abroca_power_kit'
PATH_PYPROJECT = Path(__file__).resolve().parents[1] / 'pyproject.toml'


def get_kit_version(path_toml: Path = PATH_PYPROJECT) -> str:
    """
    インストール済みならそのメタデータから、そうでなければ pyproject.toml からバージョンを取得する。
    """
    try:
        return version(PACKAGE_NAME)
    except PackageNotFoundError:
        pass
    try:
        with open(path_toml, 'rb') as f:
            toml_dict = tomllib.load(f)
    except OSError:
        return 'unknown'
    return toml_dict['project']['version']


@dataclass
class RunManifest:
    subcommand: str
    config: dict
    master_seed: int
    version: str = field(default_factory=get_kit_version)
    wall_clock_seconds: float = 0.0
    warnings: list[str] = field(default_factory=list)
    inputs: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def manifest_path(path_output: Path | str) -> Path:
    path_output = Path(path_output)
    return path_output.with_name(f'{path_output.name}.manifest.json')


def write_manifest(manifest: RunManifest, path_output: Path | str) -> Path:
    """path_output の隣に manifest を書き出し、そのパスを返す。"""
    path_manifest = manifest_path(path_output)
    with open(path_manifest, mode='w', encoding='utf-8', newline='\n') as fj:
        json.dump(manifest.to_dict(), fj, indent=2, ensure_ascii=False)
        fj.write('\n')
    return path_manifest


def read_manifest(path_manifest: Path | str) -> dict:
    with open(path_manifest, encoding='utf-8') as fj:
        return json.load(fj)
