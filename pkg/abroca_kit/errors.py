#!/usr/bin/env python3
# Copyright (c) 2026 abroca_power_kit contributors
"""
例外クラスの一覧。

CLI はこの階層で終了コードを決める。
- ConfigError   : 1 (使い方・設定の誤り)
- DataError     : 2 (入力データの不具合)
- NumericalError: 3 (数値計算の失敗)
"""


class AbrocaKitError(Exception):
    """このパッケージが送出する例外の基底クラス"""


# データの不具合 -------------------------------------------------------------
class DataError(AbrocaKitError, ValueError):
    """入力データが不正なときの例外"""


class LengthMismatch(DataError):
    def __init__(self, lengths: tuple[int, ...]):
        self.lengths = lengths
        super().__init__(f'Column lengths do not match: {lengths}')


class EmptyGroup(DataError):
    def __init__(self, group: int):
        self.group = group
        super().__init__(f'Group {group} has no instances.')


class SingleClassGroup(DataError):
    def __init__(self, group: int):
        self.group = group
        super().__init__(f'Group {group} contains only one label class; its ROC is undefined.')


class NonFiniteScore(DataError):
    def __init__(self, row: int):
        self.row = row
        super().__init__(f'Score at row {row} is not a finite real number.')


class InvalidCode(DataError):
    def __init__(self, row: int, column: str):
        self.row = row
        self.column = column
        super().__init__(f'Value of "{column}" at row {row} must be 0 or 1.')


class CsvFormatError(DataError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f'line {line}: {message}')


class SingleClass(DataError):
    def __init__(self):
        super().__init__(
            'Labels contain only one class; need at least one positive and one negative.'
        )


class NonPositiveSample(DataError):
    def __init__(self, family: str):
        self.family = family
        super().__init__(f'Family "{family}" needs strictly positive samples.')


class TooFewSamples(DataError):
    def __init__(self, n: int, minimum: int):
        self.n = n
        self.minimum = minimum
        super().__init__(f'Need at least {minimum} samples, got {n}.')


class ZeroVariance(DataError):
    def __init__(self):
        super().__init__('Samples have zero variance.')


# 設定の誤り -----------------------------------------------------------------
class ConfigError(AbrocaKitError, ValueError):
    """設定値が不正なときの例外"""


class DomainError(ConfigError):
    pass


class InfeasibleConfig(ConfigError):
    pass


# 数値計算の失敗 -------------------------------------------------------------
class NumericalError(AbrocaKitError, ArithmeticError):
    """数値計算が収束しない・帰無分布が作れないときの例外"""


class DegenerateNull(NumericalError):
    pass


class NonConvergence(NumericalError):
    def __init__(self, family: str, detail: str = ''):
        self.family = family
        message = f'Fit of "{family}" did not converge.'
        if detail:
            message += f' ({detail})'
        super().__init__(message)
