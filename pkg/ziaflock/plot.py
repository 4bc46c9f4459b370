''' SVG plots of trajectories and MAE curves '''
from __future__ import annotations
from typing import Optional, Sequence, Union
from pathlib import Path
import math
import xml.etree.ElementTree as ET

import numpy as np
import ziafont as zf
from ziafont.glyph import fmt

from .geometry import Vec2, asarray
from .formations import target_positions
from .transcript import Transcript, read_transcript
from .config import config
from .errors import ValidationError, ZiaflockError

MAE_MARGIN = .2


def nice_ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    ''' Round tick values covering [lo, hi] '''
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    first = math.ceil(lo / step) * step
    ticks = list(np.arange(first, hi + step*1E-6, step))
    return [round(t, 10) + 0. for t in ticks]


class Axes:
    ''' Map data coordinates into a pixel box (y up)

        Args:
            xlim: Data range in x
            ylim: Data range in y
            box: Pixel box (left, top, width, height)
            equal: Keep one data unit the same length in x and y
    '''
    def __init__(self, xlim: tuple[float, float], ylim: tuple[float, float],
                 box: tuple[float, float, float, float], equal: bool = False):
        x0, x1 = xlim
        y0, y1 = ylim
        if x1 <= x0:
            x0, x1 = x0 - 1, x1 + 1
        if y1 <= y0:
            y0, y1 = y0 - 1, y1 + 1
        left, top, width, height = box
        if equal:
            scale = min(width / (x1 - x0), height / (y1 - y0))
            xc, yc = (x0 + x1) / 2, (y0 + y1) / 2
            x0, x1 = xc - width/scale/2, xc + width/scale/2
            y0, y1 = yc - height/scale/2, yc + height/scale/2
        self.xlim = (x0, x1)
        self.ylim = (y0, y1)
        self.box = box

    def px(self, x: float, y: float) -> tuple[float, float]:
        left, top, width, height = self.box
        x0, x1 = self.xlim
        y0, y1 = self.ylim
        return (left + (x - x0) / (x1 - x0) * width,
                top + height - (y - y0) / (y1 - y0) * height)

    def contains(self, x: float, y: float) -> bool:
        return (self.xlim[0] <= x <= self.xlim[1]) and (self.ylim[0] <= y <= self.ylim[1])


def _svg(width: float, height: float) -> ET.Element:
    svg = ET.Element('svg')
    svg.attrib['width'] = fmt(width)
    svg.attrib['height'] = fmt(height)
    svg.attrib['xmlns'] = 'http://www.w3.org/2000/svg'
    if not zf.config.svg2:
        svg.attrib['xmlns:xlink'] = 'http://www.w3.org/1999/xlink'
    svg.attrib['viewBox'] = f'0 0 {fmt(width)} {fmt(height)}'
    bg = ET.SubElement(svg, 'rect')
    bg.attrib.update({'x': '0', 'y': '0', 'width': fmt(width), 'height': fmt(height),
                      'fill': config.plot.background})
    return svg


def _text(svg: ET.Element, s: str, x: float, y: float, halign: str = 'left',
          size: Optional[float] = None) -> None:
    txt = zf.Text(s, size=size if size else config.plot.fontsize, color=config.plot.textcolor)
    width, _ = txt.getsize()
    xshift = {'center': -width/2, 'right': -width}.get(halign, 0)
    txt.drawon(svg, x + xshift, y)


def _frame(svg: ET.Element, ax: Axes, xlabel: str, ylabel: str) -> None:
    ''' Box, grid lines, tick labels, and axis labels '''
    style = config.plot
    left, top, width, height = ax.box
    for x in nice_ticks(*ax.xlim):
        px, _ = ax.px(x, ax.ylim[0])
        line = ET.SubElement(svg, 'path')
        line.attrib.update({'d': f'M {fmt(px)} {fmt(top)} V {fmt(top+height)}',
                            'stroke': style.gridcolor, 'stroke-width': '1', 'fill': 'none'})
        _text(svg, f'{x:g}', px, top + height + style.fontsize + 2, 'center')
    for y in nice_ticks(*ax.ylim):
        _, py = ax.px(ax.xlim[0], y)
        line = ET.SubElement(svg, 'path')
        line.attrib.update({'d': f'M {fmt(left)} {fmt(py)} H {fmt(left+width)}',
                            'stroke': style.gridcolor, 'stroke-width': '1', 'fill': 'none'})
        _text(svg, f'{y:g}', left - 4, py + style.fontsize/3, 'right')
    box = ET.SubElement(svg, 'rect')
    box.attrib.update({'x': fmt(left), 'y': fmt(top), 'width': fmt(width), 'height': fmt(height),
                       'fill': 'none', 'stroke': style.textcolor, 'stroke-width': '1'})
    _text(svg, xlabel, left + width/2, top + height + 2*style.fontsize + 6, 'center')
    _text(svg, ylabel, left, top - 6, 'left')


def _color(k: int) -> str:
    colors = config.plot.colors
    return colors[k % len(colors)]


def trajectory_bounds(t: Transcript, overlay: Sequence[Vec2] = ()) -> tuple[float, float, float, float]:
    ''' (xmin, xmax, ymin, ymax) of every position in the episode and the overlay '''
    pts = np.concatenate([asarray(p) for p in t.trajectory()] +
                         ([asarray(overlay)] if len(overlay) else []))
    return (float(pts[:, 0].min()), float(pts[:, 0].max()),
            float(pts[:, 1].min()), float(pts[:, 1].max()))


def target_overlay(t: Transcript) -> list[Vec2]:
    ''' Ideal formation placed at the final centroid, or nothing if the shape
        does not fit the agent count
    '''
    final = asarray(t.trajectory()[-1])
    try:
        return target_positions(t.config.formation_spec, Vec2.of(final.mean(axis=0)))
    except ValidationError:
        return []


def trajectory_svg(t: Transcript) -> ET.Element:
    ''' Per-agent paths with round markers and the target formation overlay '''
    style = config.plot
    overlay = target_overlay(t)
    xmin, xmax, ymin, ymax = trajectory_bounds(t, overlay)
    padx = max(xmax - xmin, 1) * .05
    pady = max(ymax - ymin, 1) * .05
    m = style.margin
    ax = Axes((xmin - padx, xmax + padx), (ymin - pady, ymax + pady),
              (m, m, style.width - 1.5*m, style.height - 2*m), equal=True)
    svg = _svg(style.width, style.height)
    _frame(svg, ax, 'x', 'y')

    for p in overlay:
        cx, cy = ax.px(p.x, p.y)
        circ = ET.SubElement(svg, 'circle')
        circ.attrib.update({'cx': fmt(cx), 'cy': fmt(cy), 'r': fmt(style.marker*2),
                            'fill': 'none', 'stroke': style.target_color,
                            'stroke-dasharray': '3 2', 'stroke-width': '1'})

    trajectory = t.trajectory()
    for k, agent in enumerate(t.config.agent_ids):
        color = _color(k)
        pts = [ax.px(rnd[k].x, rnd[k].y) for rnd in trajectory]
        path = ET.SubElement(svg, 'polyline')
        path.attrib.update({'points': ' '.join(f'{fmt(x)},{fmt(y)}' for x, y in pts),
                            'fill': 'none', 'stroke': color, 'stroke-width': fmt(style.strokewidth)})
        path.attrib['data-agent'] = str(agent)
        for x, y in pts[:-1]:
            dot = ET.SubElement(svg, 'circle')
            dot.attrib.update({'cx': fmt(x), 'cy': fmt(y), 'r': fmt(style.marker/2), 'fill': color})
        x, y = pts[-1]
        if agent in t.stationary:
            end = ET.SubElement(svg, 'rect')
            end.attrib.update({'x': fmt(x - style.marker), 'y': fmt(y - style.marker),
                               'width': fmt(2*style.marker), 'height': fmt(2*style.marker), 'fill': color})
        else:
            end = ET.SubElement(svg, 'circle')
            end.attrib.update({'cx': fmt(x), 'cy': fmt(y), 'r': fmt(style.marker), 'fill': color})
        _text(svg, str(agent), x + style.marker + 2, y - style.marker - 2, size=style.fontsize*.8)

    _text(svg, f'{t.config.name}, round {len(t.rounds)}', style.width/2, style.fontsize + 4, 'center')
    return svg


def mae_svg(t: Transcript) -> ET.Element:
    ''' MAE against round with the dashed success margin '''
    style = config.plot
    mae = t.series().mae
    top = max(max(mae) if mae else 0, 2*MAE_MARGIN) * 1.05
    m = style.margin
    ax = Axes((0, max(len(mae) - 1, 1)), (0, top), (m, m, style.width - 1.5*m, style.height - 2*m))
    svg = _svg(style.width, style.height)
    _frame(svg, ax, 'Round', 'MAE')

    left, _, width, _ = ax.box
    _, py = ax.px(0, MAE_MARGIN)
    line = ET.SubElement(svg, 'path')
    line.attrib.update({'d': f'M {fmt(left)} {fmt(py)} H {fmt(left+width)}', 'fill': 'none',
                        'stroke': style.margin_color, 'stroke-dasharray': '6 4', 'stroke-width': '1'})
    _text(svg, f'desired MAE ({MAE_MARGIN:g} margin)', left + width - 4, py - 4, 'right')

    pts = [ax.px(k, v) for k, v in enumerate(mae)]
    curve = ET.SubElement(svg, 'polyline')
    curve.attrib.update({'points': ' '.join(f'{fmt(x)},{fmt(y)}' for x, y in pts),
                         'fill': 'none', 'stroke': _color(0), 'stroke-width': fmt(style.strokewidth)})
    label = t.outcome.label if t.outcome else t.status
    _text(svg, f'{t.config.name}: {label}', style.width/2, style.fontsize + 4, 'center')
    return svg


def plot_paths(out: Union[str, Path]) -> tuple[Path, Path]:
    ''' <stem>-trajectory.svg and <stem>-mae.svg beside out '''
    out = Path(out)
    stem = out.with_suffix('') if out.suffix == '.svg' else out
    return (stem.with_name(f'{stem.name}-trajectory.svg'), stem.with_name(f'{stem.name}-mae.svg'))


def plot(transcript: Union[Transcript, str, Path], out: Union[str, Path]) -> tuple[Path, Path]:
    ''' Write the trajectory and MAE plots of a transcript. Returns both paths. '''
    t = transcript if isinstance(transcript, Transcript) else read_transcript(transcript)
    paths = plot_paths(out)
    for path, svg in zip(paths, (trajectory_svg(t), mae_svg(t))):
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(ET.tostring(svg, encoding='unicode'), encoding='utf-8')
        except OSError as exc:
            raise ZiaflockError(f'Cannot write plot {path}: {exc}') from exc
    return paths
