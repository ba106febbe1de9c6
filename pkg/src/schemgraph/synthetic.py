"""Procedural circuit renderer for fixtures, demos, and benchmarks.

Draws axis-aligned circuits with known ground truth: symbol glyphs inside
annotated boxes, 3-px wires meeting ports dead-on, junction dots,
crossings with crossover annotations, and text scribbles. The generator
records the exact netlist (as polygon-index/port-name terminals) and the
refinement kind every annotation must come out with, so pipeline output
can be compared structurally, not just eyeballed.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

import numpy as np

from .annotations import (
    BBoxAnnotation,
    CROSSOVER_CLASS,
    ImageAnnotationSet,
    JUNCTION_CLASS,
    Refinement,
    TEXT_CLASS,
)
from .geometry import BoundingBox
from .raster import BinaryMap, GrayImage

STROKE_VALUE = 45
BACKGROUND_VALUE = 255

# prototype port names at unit-frame x=0 / x=1 per class used here
WEST_PORT = {"resistor": "left", "inductor": "left", "capacitor.unpolarized": "left",
             "diode": "anode", "voltage.battery": "plus"}
EAST_PORT = {"resistor": "right", "inductor": "right", "capacitor.unpolarized": "right",
             "diode": "cathode", "voltage.battery": "minus"}
SPLIT_GLYPHS = frozenset({"capacitor.unpolarized", "voltage.battery"})
SOLID_LABELS = ("resistor", "inductor", "diode")
ALL_LABELS = SOLID_LABELS + tuple(sorted(SPLIT_GLYPHS))

SYMBOL_SIZE = 40


@dataclass
class SyntheticCircuit:
    image_id: str
    image: GrayImage
    binary: BinaryMap
    annotations: ImageAnnotationSet
    expected_nets: set[frozenset[tuple[int, str]]]
    expected_refinements: dict[int, Refinement]
    n_symbols: int


@dataclass
class _Builder:
    width: int
    height: int
    canvas: np.ndarray = None
    bboxes: list[BBoxAnnotation] = field(default_factory=list)
    nets: set[frozenset[tuple[int, str]]] = field(default_factory=set)
    refinements: dict[int, Refinement] = field(default_factory=dict)
    n_symbols: int = 0

    def __post_init__(self):
        self.canvas = np.full((self.height, self.width), BACKGROUND_VALUE, np.uint8)

    # -- stroke primitives (inclusive pixel coordinates) --

    def hwire(self, x0: int, x1: int, y: int, half: int = 1) -> None:
        lo, hi = (x0, x1) if x0 <= x1 else (x1, x0)
        self.canvas[y - half:y + half + 1, lo:hi + 1] = STROKE_VALUE

    def vwire(self, y0: int, y1: int, x: int, half: int = 1) -> None:
        lo, hi = (y0, y1) if y0 <= y1 else (y1, y0)
        self.canvas[lo:hi + 1, x - half:x + half + 1] = STROKE_VALUE

    def block(self, x0: int, y0: int, x1: int, y1: int) -> None:
        self.canvas[y0:y1 + 1, x0:x1 + 1] = STROKE_VALUE

    def disk(self, cx: int, cy: int, r: int) -> None:
        yy, xx = np.ogrid[:self.height, :self.width]
        self.canvas[(yy - cy) ** 2 + (xx - cx) ** 2 <= r * r] = STROKE_VALUE

    # -- annotated elements --

    def add_symbol(self, label: str, x0: int, y0: int, rotation: int):
        """40x40 symbol; returns (annotation index, wire anchors per port name).

        Anchors are the pixel the connecting wire must reach to touch the
        glyph. Rotation 90 puts the unit-frame x=0 port at the top.
        """
        x1, y1 = x0 + SYMBOL_SIZE, y0 + SYMBOL_SIZE
        xc, yc = x0 + SYMBOL_SIZE // 2, y0 + SYMBOL_SIZE // 2
        split = label in SPLIT_GLYPHS
        if rotation == 0:
            if split:
                self.block(xc - 5, yc - 12, xc - 2, yc + 12)
                self.block(xc + 2, yc - 12, xc + 5, yc + 12)
                anchors = {WEST_PORT[label]: (xc - 5, yc), EAST_PORT[label]: (xc + 5, yc)}
            else:
                self.block(x0 + 10, yc - 12, x1 - 11, yc + 12)
                anchors = {WEST_PORT[label]: (x0 + 10, yc), EAST_PORT[label]: (x1 - 11, yc)}
        elif rotation == 90:
            if split:
                self.block(xc - 12, yc - 5, xc + 12, yc - 2)
                self.block(xc - 12, yc + 2, xc + 12, yc + 5)
                anchors = {WEST_PORT[label]: (xc, yc - 5), EAST_PORT[label]: (xc, yc + 5)}
            else:
                self.block(xc - 12, y0 + 10, xc + 12, y1 - 11)
                anchors = {WEST_PORT[label]: (xc, y0 + 10), EAST_PORT[label]: (xc, y1 - 11)}
        else:
            raise ValueError(f"unsupported fixture rotation {rotation}")
        idx = len(self.bboxes)
        self.bboxes.append(BBoxAnnotation(label, BoundingBox(x0, y0, x1, y1),
                                          rotation=float(rotation)))
        self.refinements[idx] = Refinement.HULL_FALLBACK if split else Refinement.REFINED
        self.n_symbols += 1
        return idx, anchors

    def add_junction(self, jx: int, jy: int) -> int:
        self.disk(jx, jy, 4)
        idx = len(self.bboxes)
        self.bboxes.append(BBoxAnnotation(JUNCTION_CLASS,
                                          BoundingBox(jx - 6, jy - 6, jx + 7, jy + 7)))
        self.refinements[idx] = Refinement.REFINED
        return idx

    def add_crossover(self, cx: int, cy: int) -> int:
        # the crossing strokes themselves are the glyph
        idx = len(self.bboxes)
        self.bboxes.append(BBoxAnnotation(CROSSOVER_CLASS,
                                          BoundingBox(cx - 6, cy - 6, cx + 7, cy + 7)))
        self.refinements[idx] = Refinement.REFINED
        return idx

    def add_text(self, x0: int, y0: int) -> int:
        # connected S-shaped scribble, 30x20 box
        self.hwire(x0 + 4, x0 + 25, y0 + 4)
        self.vwire(y0 + 4, y0 + 15, x0 + 24)
        self.hwire(x0 + 4, x0 + 25, y0 + 15)
        idx = len(self.bboxes)
        self.bboxes.append(BBoxAnnotation(TEXT_CLASS, BoundingBox(x0, y0, x0 + 30, y0 + 20),
                                          text_content="note"))
        self.refinements[idx] = Refinement.REFINED
        return idx

    def expect_net(self, terminals) -> None:
        self.nets.add(frozenset(terminals))

    def finish(self, image_id: str) -> SyntheticCircuit:
        image = GrayImage(self.canvas)
        binary = BinaryMap((self.canvas < 128).astype(np.uint8))
        anns = ImageAnnotationSet(image_id, self.width, self.height,
                                  bboxes=tuple(self.bboxes))
        return SyntheticCircuit(image_id, image, binary, anns, set(self.nets),
                                dict(self.refinements), self.n_symbols)


# ---------------------------------------------------------------------------
# patterns; each returns its footprint (width, height) relative to (x, y)
# ---------------------------------------------------------------------------

def _hchain(b: _Builder, x: int, y: int, labels) -> tuple[int, int]:
    yc = y + SYMBOL_SIZE // 2
    placed = []
    for i, label in enumerate(labels):
        placed.append((label, *b.add_symbol(label, x + i * 80, y, rotation=0)))
    for (la, ia, aa), (lb, ib, ab) in zip(placed, placed[1:]):
        b.hwire(aa[EAST_PORT[la]][0], ab[WEST_PORT[lb]][0], yc)
        b.expect_net({(ia, EAST_PORT[la]), (ib, WEST_PORT[lb])})
    return 80 * len(labels) - 40, SYMBOL_SIZE


def _vchain(b: _Builder, x: int, y: int, labels) -> tuple[int, int]:
    xc = x + SYMBOL_SIZE // 2
    placed = []
    for i, label in enumerate(labels):
        placed.append((label, *b.add_symbol(label, x, y + i * 80, rotation=90)))
    for (la, ia, aa), (lb, ib, ab) in zip(placed, placed[1:]):
        b.vwire(aa[EAST_PORT[la]][1], ab[WEST_PORT[lb]][1], xc)
        b.expect_net({(ia, EAST_PORT[la]), (ib, WEST_PORT[lb])})
    return SYMBOL_SIZE, 80 * len(labels) - 40


def _tee(b: _Builder, x: int, y: int, labels) -> tuple[int, int]:
    """Three symbols joined at a junction dot: left, right, below."""
    la, lb, lc = labels
    jx, jy = x + 70, y + SYMBOL_SIZE // 2
    ia, aa = b.add_symbol(la, x, y, rotation=0)
    ib, ab = b.add_symbol(lb, x + 100, y, rotation=0)
    ic, ac = b.add_symbol(lc, jx - 20, y + 60, rotation=90)
    b.hwire(aa[EAST_PORT[la]][0], jx, jy)
    b.hwire(jx, ab[WEST_PORT[lb]][0], jy)
    b.vwire(jy, ac[WEST_PORT[lc]][1], jx)
    b.add_junction(jx, jy)
    b.expect_net({(ia, EAST_PORT[la]), (ib, WEST_PORT[lb]), (ic, WEST_PORT[lc])})
    return 140, 100


def _cross(b: _Builder, x: int, y: int, labels) -> tuple[int, int]:
    """Two wires crossing without connection: W-E and N-S pairs."""
    lw, le, ln, ls = labels
    cx, cy = x + 75, y + 75
    iw, aw = b.add_symbol(lw, x, cy - 20, rotation=0)
    ie, ae = b.add_symbol(le, cx + 35, cy - 20, rotation=0)
    inn, an = b.add_symbol(ln, cx - 20, y, rotation=90)
    is_, as_ = b.add_symbol(ls, cx - 20, cy + 35, rotation=90)
    b.hwire(aw[EAST_PORT[lw]][0], ae[WEST_PORT[le]][0], cy)
    b.vwire(an[EAST_PORT[ln]][1], as_[WEST_PORT[ls]][1], cx)
    b.add_crossover(cx, cy)
    b.expect_net({(iw, EAST_PORT[lw]), (ie, WEST_PORT[le])})
    b.expect_net({(inn, EAST_PORT[ln]), (is_, WEST_PORT[ls])})
    return 150, 150


def random_circuit(seed: int) -> SyntheticCircuit:
    """Deterministic random circuit with 2..10 symbols.

    Seeds cycle through plain chains, junction tees, crossover crosses,
    and chain+tee combinations; some fixtures add a text scribble.
    """
    rng = random.Random(seed)
    kind = seed % 4
    margin = 20

    def pick(n):
        return [rng.choice(ALL_LABELS) for _ in range(n)]

    plans = []
    if kind == 0:
        plans.append(("hchain", pick(rng.randint(2, 4))))
    elif kind == 1:
        plans.append(("tee", pick(3)))
    elif kind == 2:
        plans.append(("cross", pick(4)))
    else:
        plans.append(("hchain", pick(rng.randint(2, 3))))
        plans.append(("tee", pick(3)))
    if rng.random() < 0.5:
        plans.append(("vchain", pick(2)))
    with_text = rng.random() < 0.5

    sizes = {"hchain": lambda labels: (80 * len(labels) - 40, 40),
             "vchain": lambda labels: (40, 80 * len(labels) - 40),
             "tee": lambda labels: (140, 100),
             "cross": lambda labels: (150, 150)}
    width = max(sizes[name](labels)[0] for name, labels in plans) + 2 * margin
    if with_text:
        width += 50
    height = margin
    tops = []
    for name, labels in plans:
        tops.append(height)
        height += sizes[name](labels)[1] + margin
    b = _Builder(width, height)
    makers = {"hchain": _hchain, "vchain": _vchain, "tee": _tee, "cross": _cross}
    for (name, labels), top in zip(plans, tops):
        makers[name](b, margin, top, labels)
    if with_text:
        b.add_text(width - 45, margin)
    return b.finish(f"syn{seed:03d}")


def fixture_corpus(count: int) -> list[SyntheticCircuit]:
    return [random_circuit(seed) for seed in range(count)]


def keypoint_fixture(n_wires: int, stroke_half: int = 2) -> tuple[BinaryMap, BoundingBox]:
    """One fat-stroked symbol with 1..4 attached wires, for keypoint oracles.

    Wires are (2*stroke_half + 1) px thick so erosion radii up to
    ``stroke_half`` still leave a core crossing the symbol border. Returns
    the map and the symbol's box; the wires attach W, E, N, S in order.
    """
    if not 1 <= n_wires <= 4:
        raise ValueError("n_wires must be 1..4")
    b = _Builder(160, 160)
    x0 = y0 = 55
    x1 = y1 = 105  # 50x50 box
    b.block(x0 + 12, y0 + 12, x1 - 13, y1 - 13)  # glyph well inside
    cx = cy = 80
    if n_wires >= 1:
        b.hwire(10, x0 + 12, cy, half=stroke_half)
    if n_wires >= 2:
        b.hwire(x1 - 13, 150, cy, half=stroke_half)
    if n_wires >= 3:
        b.vwire(10, y0 + 12, cx, half=stroke_half)
    if n_wires >= 4:
        b.vwire(y1 - 13, 150, cx, half=stroke_half)
    binary = BinaryMap((b.canvas < 128).astype(np.uint8))
    return binary, BoundingBox(x0, y0, x1, y1)
