"""Optical-size derivation (EW, EW squared) and unslanting, for metrics and outlines."""

import logging
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Dict, List, NamedTuple, Sequence, Tuple, Union

import numpy as np

from metricmux.errors import OverlappingZonesAfterScale, ParamsOutOfRange
from metricmux.fixword import UNIT, ZERO, FixWord, round_half_even
from metricmux.ligkern import normalize_ligkern
from metricmux.metrics import CharDim, FontMetrics
from metricmux.tfm import with_checksum
from metricmux.type1 import Contour, CurveTo, Glyph, LineTo, Stem

logger = logging.getLogger(__name__)

Ratio = Union[int, float, str, Fraction]

SCALE_RANGE = (Fraction(1, 2), Fraction(2))
DELTA_LIMIT = 200
QUAD = 6


def _ratio(value: Ratio) -> Fraction:
    # str() first so that 1.07 means 107/100, not the nearest double
    if isinstance(value, Fraction):
        return value
    return Fraction(str(value))


@dataclass(frozen=True)
class OpticalParams:
    """Stem and width ratios plus side-bearing deltas in thousandths of an em."""
    vstem_scale: Fraction = Fraction(108, 100)
    width_scale: Fraction = Fraction(107, 100)
    lsb_delta: Fraction = Fraction(0)
    rsb_delta: Fraction = Fraction(0)
    scale_kerns: bool = True

    def __post_init__(self):
        for name in ("vstem_scale", "width_scale", "lsb_delta", "rsb_delta"):
            object.__setattr__(self, name, _ratio(getattr(self, name)))
        low, high = SCALE_RANGE
        for name in ("vstem_scale", "width_scale"):
            value = getattr(self, name)
            if not low < value < high:
                raise ParamsOutOfRange(f"{name} {float(value)} is outside ({float(low)}, {float(high)})")
        for name in ("lsb_delta", "rsb_delta"):
            value = getattr(self, name)
            if not -DELTA_LIMIT <= value <= DELTA_LIMIT:
                raise ParamsOutOfRange(f"{name} {float(value)} is outside [-{DELTA_LIMIT}, {DELTA_LIMIT}]")

    @property
    def side_delta(self) -> Fraction:
        return self.lsb_delta + self.rsb_delta

    def replace(self, **changes) -> "OpticalParams":
        return replace(self, **changes)


class Preset(NamedTuple):
    params: OpticalParams
    iterations: int


PRESETS: Dict[str, Preset] = {
    "ew": Preset(OpticalParams(), 1),
    "ew2": Preset(OpticalParams(), 2),
    "observed7pt": Preset(OpticalParams(lsb_delta=30, rsb_delta=20), 1),
    "observed5pt": Preset(OpticalParams(lsb_delta=30, rsb_delta=20), 2),
}


# Metrics

def ew_width(width: FixWord, p: OpticalParams) -> FixWord:
    if not width:
        return width
    raw = round_half_even(p.width_scale * width.raw + p.side_delta * UNIT / 1000)
    return FixWord(raw)


def ew_metrics(m: FontMetrics, p: OpticalParams = OpticalParams()) -> FontMetrics:
    """One EW step: widths widened, italic corrections and kerns scaled, quad scaled."""
    ws = p.width_scale
    chars = {
        slot: CharDim(ew_width(dim.width, p), dim.height, dim.depth,
                      dim.italic.scaled(ws), dim.tag, dim.remainder)
        for slot, dim in m.chars.items()
    }
    out = m.replace(chars=chars)
    if p.scale_kerns and m.kerns:
        out = normalize_ligkern(out.replace(kerns=tuple(k.scaled(ws) for k in m.kerns)))
    if len(m.params) >= QUAD:
        out = out.with_param(QUAD, m.param(QUAD).scaled(ws))
    return with_checksum(out)


def ew_squared(m: FontMetrics, p: OpticalParams = OpticalParams()) -> FontMetrics:
    return ew_metrics(ew_metrics(m, p), p)


def apply_preset(m: FontMetrics, name: str) -> FontMetrics:
    preset = PRESETS[name]
    for _ in range(preset.iterations):
        m = ew_metrics(m, preset.params)
    return m


def unslant(m: FontMetrics) -> FontMetrics:
    if m.params:
        m = m.with_param(1, ZERO)
    return with_checksum(m)


# Outlines

def _map_contours(contours: Sequence[Contour], fx) -> Tuple[Contour, ...]:
    mapped = []
    for c in contours:
        segments = []
        for seg in c.segments:
            if isinstance(seg, LineTo):
                segments.append(LineTo(fx(seg.x, seg.y), seg.y))
            else:
                segments.append(CurveTo(fx(seg.x1, seg.y1), seg.y1, fx(seg.x2, seg.y2), seg.y2,
                                        fx(seg.x3, seg.y3), seg.y3))
        mapped.append(Contour((fx(*c.start), c.start[1]), tuple(segments)))
    return tuple(mapped)


def merge_zones(stems: Sequence[Stem]) -> List[Tuple[Fraction, Fraction]]:
    zones: List[List[Fraction]] = []
    for stem in sorted(stems, key=lambda s: (s.position, s.end)):
        if zones and stem.position <= zones[-1][1]:
            zones[-1][1] = max(zones[-1][1], stem.end)
        else:
            zones.append([stem.position, stem.end])
    return [(Fraction(a), Fraction(b)) for a, b in zones if b > a]


class XRemap:
    """Increasing piecewise-linear map fixing x = 0; slope vstem_scale inside zones."""

    def __init__(self, zones: Sequence[Tuple[Fraction, Fraction]], p: OpticalParams):
        breaks = sorted({Fraction(0)} | {x for zone in zones for x in zone})
        inside = [any(a <= lo and hi <= b for a, b in zones)
                  for lo, hi in zip(breaks, breaks[1:])]
        slopes = [p.vstem_scale if z else p.width_scale for z in inside]
        images = [Fraction(0)]
        for (lo, hi), slope in zip(zip(breaks, breaks[1:]), slopes):
            images.append(images[-1] + slope * (hi - lo))
        origin = images[breaks.index(0)]
        images = [y - origin for y in images]
        # segments left of the first break and right of the last use width_scale
        self.breaks = np.array(breaks, dtype=object)
        self.images = np.array(images, dtype=object)
        self.slopes = np.array([p.width_scale] + slopes + [p.width_scale], dtype=object)
        self._keys = np.array([float(b) for b in breaks])

    def __call__(self, x):
        k = int(np.searchsorted(self._keys, float(x), side="right"))
        if k == 0:
            return self.images[0] + self.slopes[0] * (x - self.breaks[0])
        return self.images[k - 1] + self.slopes[k] * (x - self.breaks[k - 1])


def ew_outline(g: Glyph, p: OpticalParams = OpticalParams(), upem: int = 1000) -> Glyph:
    """EW on a glyph outline: stems widened by vstem_scale, everything else by width_scale."""
    remap = XRemap(merge_zones(g.vstems), p)
    shift = p.lsb_delta * upem / 1000

    def fx(x, _y):
        return remap(x) + shift

    advance = remap(g.advance) + p.side_delta * upem / 1000
    vstems = tuple(
        Stem(fx(s.position, 0), remap(s.end) - remap(s.position), s.edge, s.replaced)
        for s in g.vstems
    )
    for stem, before in zip(vstems, g.vstems):
        if stem.end > advance and before.end <= g.advance:
            raise OverlappingZonesAfterScale(
                f"{g.name}: stem zone ends at {float(stem.end):g}, past the advance {float(advance):g}"
            )
    if not g.vstems:
        logger.debug("%s: no vertical stems, scaling uniformly", g.name)
    return replace(
        g,
        sidebearing_x=fx(g.sidebearing_x, 0),
        advance=advance,
        contours=_map_contours(g.contours, fx),
        vstems=vstems,
    )


def _shear(g: Glyph, slant: Fraction) -> Glyph:
    if slant == 0:
        return g
    before = g.bounds()
    contours = _map_contours(g.contours, lambda x, y: x + slant * y)
    sheared = replace(g, contours=contours)
    after = sheared.bounds()
    if before is None:
        return sheared
    return replace(
        sheared,
        sidebearing_x=g.sidebearing_x + (after[0] - before[0]),
        advance=g.advance + (after[2] - before[2]),
    )


def unslant_outline(g: Glyph, slant: Ratio) -> Glyph:
    """Shear x' = x - slant*y; side bearing and advance follow the x extrema."""
    return _shear(g, -_ratio(slant))


def shear_by(g: Glyph, slant: Ratio) -> Glyph:
    return _shear(g, _ratio(slant))


def parse_params(text: str) -> OpticalParams:
    """A preset name, or `key=value` pairs such as `width_scale=1.05 lsb_delta=30`."""
    text = text.strip()
    if not text:
        return OpticalParams()
    if text in PRESETS:
        return PRESETS[text].params
    values = {}
    for item in text.replace(",", " ").split():
        key, sep, value = item.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in ("vstem_scale", "width_scale", "lsb_delta", "rsb_delta", "scale_kerns"):
            raise ParamsOutOfRange(f"unknown optical parameter {item!r}")
        if key == "scale_kerns":
            values[key] = value.lower() in ("1", "true", "yes")
        else:
            try:
                values[key] = Fraction(value)
            except ValueError:
                raise ParamsOutOfRange(f"{key} needs a number, not {value!r}") from None
    return OpticalParams(**values)
