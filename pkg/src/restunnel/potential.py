"""Piecewise-constant potentials with compact support on [0, l].

A potential is an ordered staircase of segments; outside [0, l] it is zero.
Text files use a small line-oriented format::

    # double barrier
    mass 1.0
    hbar 1.0
    repeat 2 {
        segment width=0.3 V=1.0
        segment width=0.5 V=0.0
    }
    segment width=0.3 V=1.0
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable

MAX_REPEAT_DEPTH = 4


class PotentialParseError(ValueError):
    """Raised for malformed potential files or invalid potential parameters."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Segment:
    width: float
    height: float

    def __post_init__(self):
        object.__setattr__(self, "width", float(self.width))
        object.__setattr__(self, "height", float(self.height))
        if not math.isfinite(self.width) or self.width <= 0:
            raise ValueError(f"segment width must be positive, got {self.width!r}")
        if not math.isfinite(self.height):
            raise ValueError(f"segment height must be finite, got {self.height!r}")


@dataclass(frozen=True)
class PotentialSpec:
    """Ordered segments plus particle mass and hbar (defaults: 1)."""

    segments: tuple[Segment, ...]
    mass: float = 1.0
    hbar: float = 1.0
    _length: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        segs = tuple(self.segments)
        if not segs:
            raise ValueError("potential needs at least one segment")
        if not all(isinstance(s, Segment) for s in segs):
            raise TypeError("segments must be Segment instances")
        for name in ("mass", "hbar"):
            value = float(getattr(self, name))
            object.__setattr__(self, name, value)
            if not math.isfinite(value) or value <= 0:
                raise ValueError(f"{name} must be positive, got {value!r}")
        object.__setattr__(self, "segments", segs)
        object.__setattr__(self, "_length", math.fsum(s.width for s in segs))

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[float, float]], mass: float = 1.0,
                   hbar: float = 1.0) -> "PotentialSpec":
        """Build a spec from ``(width, height)`` pairs."""
        return cls(tuple(Segment(float(w), float(v)) for w, v in pairs), mass, hbar)

    @property
    def length(self) -> float:
        return self._length

    @property
    def boundaries(self) -> list[float]:
        """Segment boundary positions, starting at 0 and ending at l."""
        xs = [0.0]
        for s in self.segments:
            xs.append(xs[-1] + s.width)
        # pin the last node to the compensated sum
        xs[-1] = self._length
        return xs

    def reversed(self) -> "PotentialSpec":
        return PotentialSpec(self.segments[::-1], self.mass, self.hbar)

    def __call__(self, x: float) -> float:
        """V(x); zero outside [0, l]. Boundary points take the right-hand segment."""
        if x < 0 or x > self._length:
            return 0.0
        edge = 0.0
        for s in self.segments:
            edge += s.width
            if x < edge:
                return s.height
        return self.segments[-1].height


def total_length(spec: PotentialSpec) -> float:
    return spec.length


def repeat_cell(cell: PotentialSpec, n: int) -> PotentialSpec:
    """Finite periodic potential made of ``n`` copies of ``cell``."""
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise ValueError(f"repeat count must be a positive integer, got {n!r}")
    return PotentialSpec(cell.segments * int(n), cell.mass, cell.hbar)


def is_inversion_symmetric(spec: PotentialSpec, tol: float = 0.0) -> bool:
    """True if the segment list equals its reversal within ``tol``."""
    if tol < 0:
        raise ValueError("tol must be non-negative")
    segs = spec.segments
    for a, b in zip(segs, reversed(segs)):
        if abs(a.width - b.width) > tol or abs(a.height - b.height) > tol:
            return False
    return True


# ---------------------------------------------------------------------------
# text format

_KV = re.compile(r"^([A-Za-z_]+)=(\S+)$")


def _number(text: str, what: str, lineno: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise PotentialParseError(f"invalid number for {what}: {text!r}", lineno) from None
    if not math.isfinite(value):
        raise PotentialParseError(f"{what} must be finite, got {text!r}", lineno)
    return value


def _statements(text: str) -> list[tuple[int, str]]:
    """Split text into (lineno, statement) with braces as their own statements."""
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0]
        for piece in re.split(r"([{}])", line):
            piece = piece.strip()
            if piece:
                out.append((lineno, piece))
    return out


def parse_potential(text: str) -> PotentialSpec:
    """Parse potential-file content into a flat, validated PotentialSpec."""
    stmts = _statements(text)
    headers: dict[str, float] = {}
    pos = 0

    def block(depth: int) -> list[Segment]:
        nonlocal pos
        segs: list[Segment] = []
        while pos < len(stmts):
            lineno, stmt = stmts[pos]
            words = stmt.split()
            head = words[0]
            if stmt == "}":
                if depth == 0:
                    raise PotentialParseError("unmatched '}'", lineno)
                pos += 1
                return segs
            if stmt == "{":
                raise PotentialParseError("'{' without repeat", lineno)
            pos += 1
            if head in ("mass", "hbar"):
                if depth > 0 or segs_seen[0]:
                    raise PotentialParseError(f"'{head}' must precede all segments", lineno)
                if head in headers:
                    raise PotentialParseError(f"duplicate '{head}' header", lineno)
                if len(words) != 2:
                    raise PotentialParseError(f"expected '{head} <value>'", lineno)
                value = _number(words[1], head, lineno)
                if value <= 0:
                    raise PotentialParseError(f"{head} must be positive", lineno)
                headers[head] = value
            elif head == "segment":
                segs.append(_segment(words[1:], lineno))
                segs_seen[0] = True
            elif head == "repeat":
                if len(words) != 2:
                    raise PotentialParseError("expected 'repeat <count> {'", lineno)
                try:
                    count = int(words[1])
                except ValueError:
                    raise PotentialParseError(
                        f"repeat count must be an integer, got {words[1]!r}", lineno) from None
                if count < 1:
                    raise PotentialParseError("repeat count must be positive", lineno)
                if depth + 1 > MAX_REPEAT_DEPTH:
                    raise PotentialParseError(
                        f"repeat nesting deeper than {MAX_REPEAT_DEPTH}", lineno)
                if pos >= len(stmts) or stmts[pos][1] != "{":
                    raise PotentialParseError("expected '{' after repeat count", lineno)
                pos += 1
                inner = block(depth + 1)
                if not inner:
                    raise PotentialParseError("empty repeat block", lineno)
                segs.extend(inner * count)
            else:
                raise PotentialParseError(f"unknown directive {head!r}", lineno)
        if depth > 0:
            raise PotentialParseError("unterminated repeat block (missing '}')",
                                      stmts[-1][0] if stmts else None)
        return segs

    segs_seen = [False]
    segments = block(0)
    if not segments:
        raise PotentialParseError("potential has no segments")
    return PotentialSpec(tuple(segments), headers.get("mass", 1.0), headers.get("hbar", 1.0))


def _segment(args: list[str], lineno: int) -> Segment:
    values = {}
    for arg in args:
        m = _KV.match(arg)
        if not m or m.group(1) not in ("width", "V"):
            raise PotentialParseError(f"bad segment field {arg!r}", lineno)
        if m.group(1) in values:
            raise PotentialParseError(f"duplicate segment field {m.group(1)!r}", lineno)
        values[m.group(1)] = _number(m.group(2), m.group(1), lineno)
    missing = {"width", "V"} - values.keys()
    if missing:
        raise PotentialParseError(f"segment missing {', '.join(sorted(missing))}", lineno)
    if values["width"] <= 0:
        raise PotentialParseError(
            f"non-positive width {values['width']!r}", lineno)
    return Segment(values["width"], values["V"])


def load_potential(path) -> PotentialSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_potential(fh.read())


def serialize_potential(spec: PotentialSpec) -> str:
    """Flat text form; ``parse_potential`` of the result reproduces ``spec``."""
    lines = [f"mass {spec.mass!r}", f"hbar {spec.hbar!r}"]
    lines += [f"segment width={s.width!r} V={s.height!r}" for s in spec.segments]
    return "\n".join(lines) + "\n"
