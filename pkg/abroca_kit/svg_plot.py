#!/usr/bin/env python3
# Copyright (c) 2026 abroca_power_kit contributors
"""
検出力曲線 (n_total に対する検出力) を SVG で出力する。

数値は固定桁で書き出すので、同じ PowerCurve からは同じバイト列ができる。
"""

from xml.sax.saxutils import escape

from abroca_kit.power import PowerCurve

WIDTH = 720
HEIGHT = 480
MARGIN_LEFT = 70
MARGIN_RIGHT = 230
MARGIN_TOP = 30
MARGIN_BOTTOM = 60
TARGET_POWER = 0.8

# 色覚多様性に配慮した Okabe-Ito 配色
PALETTE = (
    '#0072B2',
    '#E69F00',
    '#009E73',
    '#D55E00',
    '#CC79A7',
    '#56B4E9',
    '#F0E442',
    '#000000',
)


def _fmt(value: float) -> str:
    return f'{value:.2f}'


class _Frame:
    """データ座標から SVG 座標への変換"""

    def __init__(self, x_min: float, x_max: float):
        if x_max <= x_min:
            x_min, x_max = x_min - 1, x_max + 1
        self.x_min = x_min
        self.x_max = x_max
        self.left = MARGIN_LEFT
        self.right = WIDTH - MARGIN_RIGHT
        self.top = MARGIN_TOP
        self.bottom = HEIGHT - MARGIN_BOTTOM

    def x(self, value: float) -> float:
        share = (value - self.x_min) / (self.x_max - self.x_min)
        return self.left + share * (self.right - self.left)

    def y(self, power: float) -> float:
        return self.bottom - power * (self.bottom - self.top)


def _x_ticks(x_min: float, x_max: float, n_ticks: int = 5) -> list[float]:
    if x_max <= x_min:
        return [x_min]
    step = (x_max - x_min) / n_ticks
    return [x_min + i * step for i in range(n_ticks + 1)]


def _axes(frame: _Frame) -> list[str]:
    out = [
        f'<line x1="{_fmt(frame.left)}" y1="{_fmt(frame.bottom)}" '
        f'x2="{_fmt(frame.right)}" y2="{_fmt(frame.bottom)}" stroke="black"/>',
        f'<line x1="{_fmt(frame.left)}" y1="{_fmt(frame.top)}" '
        f'x2="{_fmt(frame.left)}" y2="{_fmt(frame.bottom)}" stroke="black"/>',
    ]
    for tick in _x_ticks(frame.x_min, frame.x_max):
        x = frame.x(tick)
        out.append(
            f'<line x1="{_fmt(x)}" y1="{_fmt(frame.bottom)}" x2="{_fmt(x)}" '
            f'y2="{_fmt(frame.bottom + 5)}" stroke="black"/>'
        )
        out.append(
            f'<text x="{_fmt(x)}" y="{_fmt(frame.bottom + 20)}" font-size="12" '
            f'text-anchor="middle">{tick:.0f}</text>'
        )
    for i in range(6):
        power = i / 5
        y = frame.y(power)
        out.append(
            f'<line x1="{_fmt(frame.left - 5)}" y1="{_fmt(y)}" x2="{_fmt(frame.left)}" '
            f'y2="{_fmt(y)}" stroke="black"/>'
        )
        out.append(
            f'<text x="{_fmt(frame.left - 8)}" y="{_fmt(y + 4)}" font-size="12" '
            f'text-anchor="end">{power:.1f}</text>'
        )
    out.append(
        f'<text x="{_fmt((frame.left + frame.right) / 2)}" y="{_fmt(HEIGHT - 15)}" '
        'font-size="14" text-anchor="middle">n_total</text>'
    )
    out.append(
        f'<text x="20" y="{_fmt((frame.top + frame.bottom) / 2)}" font-size="14" '
        f'text-anchor="middle" transform="rotate(-90 20 {_fmt((frame.top + frame.bottom) / 2)})">'
        'power</text>'
    )
    return out


def _reference_line(frame: _Frame, power: float, label: str) -> list[str]:
    y = frame.y(power)
    return [
        f'<line x1="{_fmt(frame.left)}" y1="{_fmt(y)}" x2="{_fmt(frame.right)}" y2="{_fmt(y)}" '
        'stroke="gray" stroke-dasharray="6,4"/>',
        f'<text x="{_fmt(frame.right - 4)}" y="{_fmt(y - 4)}" font-size="11" '
        f'text-anchor="end" fill="gray">{escape(label)}</text>',
    ]


def condition_label(condition: tuple[float, float, float]) -> str:
    auc_diff, ratio_group, ratio_pos_case = condition
    return f'Δ={auc_diff:g}, group={ratio_group:g}, pos={ratio_pos_case:g}'


def render_power_svg(curve: PowerCurve, alpha: float = 0.05) -> str:
    """条件ごとに1本の折れ線を描いた SVG の文字列を返す。失敗したセルは飛ばす。"""
    n_totals = [row.n_total for row in curve.rows]
    frame = _Frame(min(n_totals, default=0), max(n_totals, default=1))

    body = _axes(frame)
    body += _reference_line(frame, TARGET_POWER, f'power {TARGET_POWER:g}')
    body += _reference_line(frame, alpha, f'α = {alpha:g}')

    legend_x = WIDTH - MARGIN_RIGHT + 15
    for i, condition in enumerate(curve.conditions()):
        colour = PALETTE[i % len(PALETTE)]
        rows = [row for row in curve.series(condition) if row.power is not None]
        points = ' '.join(
            f'{_fmt(frame.x(row.n_total))},{_fmt(frame.y(row.power))}' for row in rows
        )
        if points:
            body.append(
                f'<polyline points="{points}" fill="none" stroke="{colour}" stroke-width="2"/>'
            )
        legend_y = MARGIN_TOP + 10 + 20 * i
        body.append(
            f'<line x1="{_fmt(legend_x)}" y1="{_fmt(legend_y)}" x2="{_fmt(legend_x + 20)}" '
            f'y2="{_fmt(legend_y)}" stroke="{colour}" stroke-width="2"/>'
        )
        body.append(
            f'<text x="{_fmt(legend_x + 26)}" y="{_fmt(legend_y + 4)}" font-size="11">'
            f'{escape(condition_label(condition))}</text>'
        )

    header = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">'
    )
    background = f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>'
    return '\n'.join([header, background, *body, '</svg>']) + '\n'


def write_power_svg(curve: PowerCurve, path, alpha: float = 0.05) -> None:
    with open(path, mode='w', encoding='utf-8', newline='\n') as fs:
        fs.write(render_power_svg(curve, alpha))
