"""Golden zero-location tables and reference constants.

The tables ship as picture commands (``\\put``/``\\multiput`` of filled and
hollow circles). A dot's offset from the centre of its box says which
subclass of (p mod 2^L) holds the zero:

* centre: one zero in the class itself
* left/right of centre: one zero in the child p or p + 2^L mod 2^(L+1)
* above/below on one side: zeros in both children mod 2^(L+2) of that side
* a "2" label: two zeros 2^t x + 32 + p and 2^t x + 2^(t-1) + 32 + p
"""

import json
import logging
import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from .errors import GoldenDataError
from .verify import SKIP, CheckRecord, check
from .zeros import CongruenceClass, ZeroRecord

logger = logging.getLogger("sb_stirling.golden")

DATA_PACKAGE = "sb_stirling.data"
REFERENCE_FILE = "reference_values.json"
EXPANSION_FILE = "limit_expansions.json"

DEF_RE = re.compile(r"\\def\\(\w+)\{(.*)\}\s*$")
MACRO_RE = re.compile(r"\\([A-Za-z]+)")
PUT_RE = re.compile(r"\\put\((-?\d+),(-?\d+)\)\{(.*)\}\s*$")
MULTIPUT_RE = re.compile(r"\\multiput\((-?\d+),(-?\d+)\)\((-?\d+),(-?\d+)\)\{(\d+)\}\{(.*)\}\s*$")

FILLED = "filled"
HOLLOW = "hollow"
LABEL = "label"


@dataclass(frozen=True, slots=True)
class PictureLayout:
    """Where the boxes of one picture sit.

    ``x0``/``y_top`` are the centre of box (first n, p = 0); rows go down
    by ``step`` as n increases, columns go right as p increases.
    """

    name: str
    filename: str
    log_modulus: int
    n_first: int
    n_last: int
    x0: int
    y_top: int
    step: int = 20
    offset: int = 5

    @property
    def half(self) -> int:
        return self.step // 2

    @property
    def n_values(self) -> range:
        return range(self.n_first, self.n_last + 1)

    def locate(self, x: int, y: int) -> Optional[Tuple[int, int]]:
        """(n, p) of the box containing (x, y), or None outside the grid."""
        p = (x - self.x0 + self.half) // self.step
        row = (self.y_top + self.half - y) // self.step
        n = self.n_first + row
        if not 0 <= p < (1 << self.log_modulus) or n not in self.n_values:
            return None
        return n, p

    def centre(self, n: int, p: int) -> Tuple[int, int]:
        return self.x0 + self.step * p, self.y_top - self.step * (n - self.n_first)


LAYOUTS: Dict[str, PictureLayout] = {
    "mod8": PictureLayout("mod8", "zeros_mod8.tex", 3, 17, 32, x0=40, y_top=310),
    "mod16": PictureLayout("mod16", "zeros_mod16.tex", 4, 33, 64, x0=30, y_top=630),
}


@dataclass(frozen=True, slots=True)
class Mark:
    x: int
    y: int
    kind: str


@dataclass(frozen=True, slots=True)
class GoldenZero:
    cls: CongruenceClass
    filled: Optional[bool] = None


@dataclass(slots=True)
class GoldenTable:
    layout: PictureLayout
    boxes: Dict[Tuple[int, int], List[GoldenZero]] = field(default_factory=dict)

    @property
    def name(self) -> str:
        return self.layout.name

    def zeros(self, n: int) -> List[GoldenZero]:
        result = []
        for p in range(1 << self.layout.log_modulus):
            result.extend(self.boxes.get((n, p), []))
        return result

    def zero_count(self, n: int) -> int:
        return len(self.zeros(n))


def _read_data(filename: str) -> str:
    try:
        return resources.files(DATA_PACKAGE).joinpath(filename).read_text(encoding="utf-8")
    except (FileNotFoundError, ModuleNotFoundError) as e:
        raise GoldenDataError(f"Missing data file {filename}: {e}") from e


@lru_cache(maxsize=None)
def load_reference() -> Dict[str, Any]:
    """The shipped reference constants (zero-count exceptions, corrections, ...)."""
    try:
        return json.loads(_read_data(REFERENCE_FILE))
    except json.JSONDecodeError as e:
        raise GoldenDataError(f"Malformed {REFERENCE_FILE}: {e}") from e


@lru_cache(maxsize=None)
def load_expansion_reference() -> Dict[str, Any]:
    try:
        return json.loads(_read_data(EXPANSION_FILE))
    except json.JSONDecodeError as e:
        raise GoldenDataError(f"Malformed {EXPANSION_FILE}: {e}") from e


def deep_pair_exponents() -> Dict[int, int]:
    return {int(n): t for n, t in load_reference()["deep_pairs"].items()}


def _expand_macros(line: str, macros: Mapping[str, str]) -> str:
    return MACRO_RE.sub(lambda m: macros.get(m.group(1), m.group(0)), line)


def _classify_object(body: str) -> Optional[str]:
    body = body.strip()
    if body.startswith("\\circle*"):
        return FILLED
    if body.startswith("\\circle"):
        return HOLLOW
    if body == "$2$":
        return LABEL
    return None


def parse_picture(text: str) -> List[Mark]:
    """Expand macros and multiputs into individual marks.

    Lines, axis text and comments are dropped. When a filled and a hollow
    circle are drawn at the same spot the filled one is kept.

    Raises:
        GoldenDataError: a put command that cannot be parsed
    """
    macros: Dict[str, str] = {}
    placed: Dict[Tuple[int, int, bool], str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        definition = DEF_RE.match(line)
        if definition:
            macros[definition.group(1)] = definition.group(2)
            continue
        line = _expand_macros(line, macros)
        if line.startswith("\\multiput"):
            match = MULTIPUT_RE.match(line)
            if not match:
                raise GoldenDataError(f"Malformed multiput at line {lineno}: {raw}")
            x, y, dx, dy, count = (int(match.group(i)) for i in range(1, 6))
            body = match.group(6)
            points = [(x + i * dx, y + i * dy) for i in range(count)]
        elif line.startswith("\\put"):
            match = PUT_RE.match(line)
            if not match:
                raise GoldenDataError(f"Malformed put at line {lineno}: {raw}")
            points = [(int(match.group(1)), int(match.group(2)))]
            body = match.group(3)
        else:
            continue
        kind = _classify_object(body)
        if kind is None:
            continue
        for point in points:
            key = (point[0], point[1], kind == LABEL)
            if placed.get(key) == FILLED:
                continue
            placed[key] = kind
    return [Mark(x, y, kind) for (x, y, _), kind in sorted(placed.items())]


def _dot_class(layout: PictureLayout, n: int, p: int, mark: Mark) -> CongruenceClass:
    cx, cy = layout.centre(n, p)
    dx, dy = mark.x - cx, mark.y - cy
    L = layout.log_modulus
    if dx == 0 and dy == 0:
        return CongruenceClass(L, p)
    if dx == 0 or abs(dx) != layout.offset or abs(dy) not in (0, layout.offset):
        raise GoldenDataError(f"Dot at ({mark.x},{mark.y}) does not fit box ({n},{p}) of {layout.name}")
    base = p + ((1 << L) if dx > 0 else 0)
    if dy == 0:
        return CongruenceClass(L + 1, base)
    return CongruenceClass(L + 2, base + ((1 << (L + 1)) if dy > 0 else 0))


def decode_picture(layout: PictureLayout, text: str, deep_pairs: Optional[Mapping[int, int]] = None) -> GoldenTable:
    """Turn picture commands into the zero classes of every box.

    Raises:
        GoldenDataError: a dot outside its box pattern, or a "2" label on a
            row with no recorded exponent t
    """
    deep_pairs = deep_pair_exponents() if deep_pairs is None else deep_pairs
    table = GoldenTable(layout)
    for mark in parse_picture(text):
        located = layout.locate(mark.x, mark.y)
        if located is None:
            if mark.kind == LABEL:
                continue
            raise GoldenDataError(f"Dot at ({mark.x},{mark.y}) lies outside the {layout.name} grid")
        n, p = located
        zeros = table.boxes.setdefault((n, p), [])
        if mark.kind == LABEL:
            t = deep_pairs.get(n)
            if t is None:
                raise GoldenDataError(f"'2' label for n={n} without a recorded exponent")
            zeros.append(GoldenZero(CongruenceClass(t, 32 + p)))
            zeros.append(GoldenZero(CongruenceClass(t, (1 << (t - 1)) + 32 + p)))
        else:
            zeros.append(GoldenZero(_dot_class(layout, n, p, mark), mark.kind == FILLED))
    for zeros in table.boxes.values():
        zeros.sort(key=lambda z: (z.cls.log_modulus, z.cls.residue))
    logger.debug(f"Decoded {layout.name}: {sum(len(z) for z in table.boxes.values())} zeros")
    return table


def load_golden(name: str, path: Optional[Union[str, Path]] = None) -> GoldenTable:
    """Decode a shipped table by name, or a picture file laid out like it.

    Raises:
        GoldenDataError: unknown name, missing or malformed file
    """
    if name not in LAYOUTS:
        raise GoldenDataError(f"Unknown golden set '{name}', expected one of {sorted(LAYOUTS)}")
    layout = LAYOUTS[name]
    if path is None:
        text = _read_data(layout.filename)
    else:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise GoldenDataError(f"Cannot read golden file {path}: {e}") from e
    return decode_picture(layout, text)


GOLDEN_ALIASES = {"t2": "mod8", "t3": "mod16"}


def golden_sets(selection: str) -> List[str]:
    selection = GOLDEN_ALIASES.get(selection, selection)
    if selection == "all":
        return list(LAYOUTS)
    if selection not in LAYOUTS:
        raise GoldenDataError(f"Unknown golden set '{selection}'")
    return [selection]


def _zero_in(zero: ZeroRecord, cls: CongruenceClass) -> bool:
    if cls.log_modulus > zero.witness_depth:
        return False
    return cls.contains(zero.zero_bits.residue)


def compare_with_golden(
    table: GoldenTable,
    zeros_by_n: Mapping[int, Sequence[ZeroRecord]],
    known_constants: Optional[Iterable[Mapping[str, int]]] = None,
) -> List[CheckRecord]:
    """Check an atlas against a decoded table.

    Per n: each decoded class holds exactly one atlas zero and each box
    holds as many atlas zeros as dots. Rows the atlas lacks are skipped.
    Known constants c are matched on the record extracted in exactly that
    class.
    """
    layout = table.layout
    L = layout.log_modulus
    records = []
    for n in layout.n_values:
        if n not in zeros_by_n:
            records.append(CheckRecord("golden", {"n": n, "table": table.name}, SKIP, "n not in atlas"))
            continue
        atlas_zeros = zeros_by_n[n]
        problems = []
        for p in range(1 << L):
            box = CongruenceClass(L, p)
            expected = table.boxes.get((n, p), [])
            found = [z for z in atlas_zeros if _zero_in(z, box)]
            if len(found) != len(expected):
                problems.append(f"box {p}: atlas {len(found)} golden {len(expected)}")
            for golden in expected:
                hits = sum(1 for z in found if _zero_in(z, golden.cls))
                if hits != 1:
                    problems.append(f"class {golden.cls}: {hits} atlas zeros")
        records.append(check("golden", not problems, "; ".join(problems), n=n, table=table.name))

    if known_constants is None:
        known_constants = load_reference()["known_constants"]
    for known in known_constants:
        n = known["n"]
        if n not in layout.n_values or n not in zeros_by_n:
            continue
        cls = CongruenceClass(known["log_modulus"], known["residue"])
        match = [z for z in zeros_by_n[n] if z.cls == cls]
        got = match[0].c if match else None
        records.append(
            check(
                "golden:constant",
                got == known["c"],
                f"atlas c={got} expected {known['c']}",
                n=n,
                log_modulus=cls.log_modulus,
                residue=cls.residue,
            )
        )
    failed = sum(1 for r in records if not r.ok)
    if failed:
        logger.warning(f"Golden comparison against {table.name}: {failed} differences")
    return records
