"""ABC notation for reels: parsing, slot-grid normalization, semitone encoding.

Only the subset of ABC that melody transcriptions of 4/4 reels use is
accepted.  Decorations (``~``, ``.``, ``!trill!``), grace groups ``{...}``,
quoted chord symbols, slurs and ties are dropped while tokenizing.  Anything
else outside the subset raises :class:`UnparsableToken` with its position.

The normalized form of a tune is a grid of 128 equal slots, one per eighth
note over 16 bars of 4/4:

* a note lasting ``n`` eighths fills ``n`` slots (``g3`` -> g g g),
* a triplet fills two slots with its first and third notes,
* each written part is played once (repeat signs are ignored, only the last
  of alternate endings is kept), and a short tail after the final repeat
  sign is removed.
"""

from dataclasses import dataclass, field
from fractions import Fraction
import re

from .errors import (
    MissingHeaderField,
    OutOfRangePitch,
    UnparsableToken,
    UnsupportedRhythm,
    WrongSlotCount,
)

__all__ = [
    "KeySignature",
    "NoteToken",
    "TuneScore",
    "GridSlot",
    "NoteGrid",
    "SemitoneSequence",
    "parse_key",
    "parse_abc",
    "normalize_to_grid",
    "encode_semitones",
    "SLOTS",
]

SLOTS = 128
SLOT_LENGTH = Fraction(1, 8)  # an eighth note
MIN_SEMITONE, MAX_SEMITONE = -24, 48
BAR_PART = 8  # bars per part of a reel

NATURAL_SEMITONES = {"C": 0, "D": 2, "E": 4, "F": 5, "G": 7, "A": 9, "B": 11}
SHARP_ORDER = "FCGDAEB"
FLAT_ORDER = "BEADGCF"
MAJOR_FIFTHS = {"F": -1, "C": 0, "G": 1, "D": 2, "A": 3, "E": 4, "B": 5}
MODE_SHIFT = {"major": 0, "mixolydian": -1, "dorian": -2, "minor": -3}
MODE_ALIASES = {
    "": "major",
    "maj": "major",
    "major": "major",
    "ion": "major",
    "ionian": "major",
    "m": "minor",
    "min": "minor",
    "minor": "minor",
    "aeo": "minor",
    "aeolian": "minor",
    "dor": "dorian",
    "dorian": "dorian",
    "mix": "mixolydian",
    "mixolydian": "mixolydian",
}
ACCIDENTALS = {"^^": 2, "^": 1, "=": 0, "_": -1, "__": -2}
DECORATION_CHARS = set("~.HLMOPSTuvJR")


@dataclass(frozen=True)
class KeySignature:
    tonic: str  # letter with optional '#' or 'b'
    mode: str  # major | minor | dorian | mixolydian
    accidentals: dict = field(default_factory=dict, compare=False)  # letter -> +1 / -1

    @property
    def name(self):
        return f"{self.tonic}{self.mode}"

    def offset(self, letter):
        return self.accidentals.get(letter.upper(), 0)


def parse_key(text):
    """Parse a K: value such as ``Gmaj``, ``E dorian``, ``Bb``, ``Amix``."""
    m = re.fullmatch(r"\s*([A-Ga-g])([#b]?)\s*([A-Za-z]*)\s*", text.split("%")[0].split(" clef")[0])
    if not m:
        raise ValueError(f"unrecognized key {text!r}")
    letter, acc, mode_text = m.group(1).upper(), m.group(2), m.group(3).lower()
    mode = MODE_ALIASES.get(mode_text)
    if mode is None:
        # thesession writes e.g. "Gmajor", ABC allows any prefix of >= 3 letters
        for alias, full in MODE_ALIASES.items():
            if len(mode_text) >= 3 and alias.startswith(mode_text[:3]) and len(alias) >= 3:
                mode = full
                break
    if mode is None:
        raise ValueError(f"unsupported mode {m.group(3)!r}")
    fifths = MAJOR_FIFTHS[letter] + {"#": 7, "b": -7, "": 0}[acc] + MODE_SHIFT[mode]
    if not -7 <= fifths <= 7:
        raise ValueError(f"key {text!r} needs more than 7 accidentals")
    if fifths >= 0:
        accidentals = {ch: 1 for ch in SHARP_ORDER[:fifths]}
    else:
        accidentals = {ch: -1 for ch in FLAT_ORDER[:-fifths]}
    return KeySignature(letter + acc, mode, accidentals)


@dataclass(frozen=True)
class NoteToken:
    letter: str  # A-G / a-g, empty for rests
    octave: int = 0  # apostrophes minus commas
    accidental: int = None  # written accidental, None if absent
    length: Fraction = Fraction(1)  # multiple of the unit note length
    triplet: int = 0  # 1..3 inside a triplet, else 0
    rest: bool = False
    line: int = 0
    column: int = 0

    def with_length(self, length):
        return NoteToken(self.letter, self.octave, self.accidental, length,
                         self.triplet, self.rest, self.line, self.column)


@dataclass
class TuneScore:
    title: str
    rhythm: str
    meter: Fraction
    unit_length: Fraction
    key: KeySignature
    bars: list  # list of lists of NoteToken
    repeat_markers: list = field(default_factory=list)  # (bar_index, "start"|"end")
    endings: dict = field(default_factory=dict)  # bar_index -> ending number
    index: int = None  # X: field


@dataclass(frozen=True)
class GridSlot:
    letter: str = ""
    octave: int = 0
    accidental: int = None

    @property
    def rest(self):
        return not self.letter

    def __str__(self):
        if self.rest:
            return "z"
        acc = {None: "", 2: "^^", 1: "^", 0: "=", -1: "_", -2: "__"}[self.accidental]
        marks = "'" * self.octave if self.octave > 0 else "," * -self.octave
        return f"{acc}{self.letter}{marks}"


REST = GridSlot()


@dataclass
class NoteGrid:
    slots: list  # exactly SLOTS GridSlot entries

    def __len__(self):
        return len(self.slots)

    def __iter__(self):
        return iter(self.slots)

    def letters(self):
        return [str(s) for s in self.slots]


@dataclass
class SemitoneSequence:
    values: list  # int or None per slot

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)


# Parsing

_FIELD_RE = re.compile(r"^([A-Za-z]):(.*)$")


def _parse_fraction(text, field_name, line):
    text = text.strip()
    if text == "C":
        return Fraction(4, 4)
    if text == "C|":
        return Fraction(2, 2)
    m = re.fullmatch(r"(\d+)\s*/\s*(\d+)", text)
    if not m:
        raise UnparsableToken(text, line, 1, f"is not a valid {field_name}: value")
    return Fraction(int(m.group(1)), int(m.group(2)))


def parse_abc(text):
    """Parse ABC text into a :class:`TuneScore`."""
    if not text or not text.strip():
        raise MissingHeaderField("K", "empty input")
    headers = {}
    body = []  # (line_number, text)
    in_body = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip()
        stripped = line.strip()
        if not stripped or stripped.startswith("%"):
            continue
        m = _FIELD_RE.match(stripped)
        if not in_body:
            if not m:
                raise MissingHeaderField("K", f"body text on line {lineno} before the K: header")
            name, value = m.group(1), m.group(2).strip()
            headers.setdefault(name, (value, lineno))
            if name == "K":
                in_body = True
            continue
        if m and not stripped.startswith("|"):
            name = m.group(1)
            if name in "KLMQ":
                raise UnparsableToken(stripped, lineno, 1, "changes a tune field mid-tune")
            continue  # lyrics, notes, parts: no slot weight
        body.append((lineno, line))

    if "M" not in headers:
        raise MissingHeaderField("M")
    if "K" not in headers:
        raise MissingHeaderField("K")
    meter = _parse_fraction(headers["M"][0], "M", headers["M"][1])
    if "L" in headers:
        unit = _parse_fraction(headers["L"][0], "L", headers["L"][1])
    else:
        unit = Fraction(1, 16) if meter < Fraction(3, 4) else Fraction(1, 8)
    key_text, key_line = headers["K"]
    try:
        key = parse_key(key_text)
    except ValueError as exc:
        raise UnparsableToken(key_text, key_line, 3, str(exc)) from None
    index = None
    if "X" in headers and headers["X"][0].strip().isdigit():
        index = int(headers["X"][0].strip())

    bars, repeats, endings = _tokenize_body(body)
    return TuneScore(
        title=headers.get("T", ("", 0))[0],
        rhythm=headers.get("R", ("", 0))[0],
        meter=meter,
        unit_length=unit,
        key=key,
        bars=bars,
        repeat_markers=repeats,
        endings=endings,
        index=index,
    )


_NOTE_RE = re.compile(r"(\^\^|\^|__|_|=)?([A-Ga-g])([',]*)(\d*)((?:/+\d*)*)")
_REST_RE = re.compile(r"([zx])(\d*)((?:/+\d*)*)")


def _length(digits, slashes):
    num = int(digits) if digits else 1
    length = Fraction(num)
    for part in re.findall(r"/+\d*", slashes or ""):
        count = len(part) - len(part.lstrip("/"))
        rest = part.lstrip("/")
        if rest:
            length /= int(rest) * (2 ** (count - 1))
        else:
            length /= 2**count
    return length


class _BodyTokenizer:
    def __init__(self):
        self.bars = []
        self.current = []
        self.repeats = []
        self.endings = {}
        self.pending_ending = None
        self.triplet_left = 0
        self.broken = None  # pending broken-rhythm factor for the next note

    def close_bar(self):
        if self.current:
            self.bars.append(self.current)
            self.current = []

    def add(self, token):
        if self.pending_ending is not None and not self.current:
            self.endings[len(self.bars)] = self.pending_ending
            self.pending_ending = None
        if self.triplet_left:
            token = NoteToken(token.letter, token.octave, token.accidental, token.length,
                              4 - self.triplet_left, token.rest, token.line, token.column)
            self.triplet_left -= 1
        if self.broken is not None:
            token = token.with_length(token.length * self.broken)
            self.broken = None
        self.current.append(token)

    def barline(self, symbol, line, col):
        ends = symbol.startswith(":")
        starts = symbol.endswith(":") and symbol != ":"
        if symbol == "::":
            ends = starts = True
        if self.triplet_left:
            raise UnparsableToken(symbol, line, col, "interrupts a triplet")
        self.close_bar()
        if ends and self.bars:
            self.repeats.append((len(self.bars) - 1, "end"))
        if starts:
            self.repeats.append((len(self.bars), "start"))


def _tokenize_body(body):
    tok = _BodyTokenizer()
    for lineno, line in body:
        i, n = 0, len(line)
        while i < n:
            ch = line[i]
            col = i + 1
            if ch in " \t`y-)":
                i += 1
            elif ch == "%":
                break
            elif ch == "\\" and line[i + 1 :].strip() == "":
                break
            elif ch in "\"{!+":
                close = {"\"": "\"", "{": "}", "!": "!", "+": "+"}[ch]
                j = line.find(close, i + 1)
                if j < 0:
                    raise UnparsableToken(line[i:], lineno, col, "is never closed")
                i = j + 1
            elif ch in DECORATION_CHARS:
                i += 1
            elif ch == "(":
                m = re.match(r"\((\d)(?::\d*){0,2}", line[i:])
                if m:
                    if m.group(0) != "(3":
                        raise UnparsableToken(m.group(0), lineno, col, "tuplet not supported (only (3)")
                    if tok.triplet_left:
                        raise UnparsableToken(m.group(0), lineno, col, "nested tuplet")
                    tok.triplet_left = 3
                    i += len(m.group(0))
                else:
                    i += 1  # slur
            elif ch in "|:" or line.startswith("[|", i):
                m = re.match(r"\[?[|:\]]+", line[i:])
                symbol = m.group(0).lstrip("[")
                if symbol == ":" and not line.startswith("::", i):
                    raise UnparsableToken(":", lineno, col)
                tok.barline(symbol, lineno, col)
                i += len(m.group(0))
                d = re.match(r"(\d)(?:[,-]\d)*", line[i:])
                if d and not symbol.endswith("]"):
                    tok.pending_ending = int(d.group(1))
                    i += len(d.group(0))
            elif ch == "[":
                if re.match(r"\[\d", line[i:]):
                    d = re.match(r"\[(\d)(?:[,-]\d)*", line[i:])
                    tok.close_bar()
                    tok.pending_ending = int(d.group(1))
                    i += len(d.group(0))
                elif re.match(r"\[[A-Za-z]:", line[i:]):
                    j = line.find("]", i)
                    raise UnparsableToken(line[i : j + 1 if j >= 0 else n], lineno, col,
                                          "inline fields are not supported")
                else:
                    i = _chord(tok, line, i, lineno)
            elif ch in "<>":
                m = re.match(r"[<>]+", line[i:])
                run = m.group(0)
                if not tok.current or len(set(run)) != 1:
                    raise UnparsableToken(run, lineno, col)
                dots = len(run)
                short = Fraction(1, 2**dots)
                long_ = 2 - short
                first, second = (long_, short) if run[0] == ">" else (short, long_)
                prev = tok.current[-1]
                tok.current[-1] = prev.with_length(prev.length * first)
                tok.broken = second
                i += dots
            else:
                m = _NOTE_RE.match(line, i)
                if m:
                    acc = ACCIDENTALS[m.group(1)] if m.group(1) else None
                    octave = m.group(3).count("'") - m.group(3).count(",")
                    tok.add(NoteToken(m.group(2), octave, acc, _length(m.group(4), m.group(5)),
                                      line=lineno, column=col))
                    i = m.end()
                    continue
                m = _REST_RE.match(line, i)
                if m:
                    tok.add(NoteToken("", 0, None, _length(m.group(2), m.group(3)), rest=True,
                                      line=lineno, column=col))
                    i = m.end()
                    continue
                raise UnparsableToken(ch, lineno, col)
    if tok.triplet_left:
        raise UnparsableToken("(3", body[-1][0] if body else 0, 0, "triplet is incomplete")
    tok.close_bar()
    return tok.bars, tok.repeats, tok.endings


def _chord(tok, line, i, lineno):
    """Keep the first note of a ``[...]`` chord; the chord's length follows ``]``."""
    j = line.find("]", i)
    if j < 0:
        raise UnparsableToken(line[i:], lineno, i + 1, "chord is never closed")
    m = _NOTE_RE.match(line, i + 1)
    if not m or m.start() != i + 1:
        raise UnparsableToken(line[i : j + 1], lineno, i + 1)
    acc = ACCIDENTALS[m.group(1)] if m.group(1) else None
    octave = m.group(3).count("'") - m.group(3).count(",")
    length = _length(m.group(4), m.group(5))
    tail = re.match(r"(\d*)((?:/+\d*)*)", line[j + 1 :])
    length *= _length(tail.group(1), tail.group(2))
    tok.add(NoteToken(m.group(2), octave, acc, length, line=lineno, column=i + 1))
    return j + 1 + len(tail.group(0))


# Normalization

def _is_reel(score):
    return score.rhythm.strip().lower() in ("", "reel")


def _played_bars(score):
    """Bars in playing order when every written part is played once."""
    keep = [True] * len(score.bars)
    ends = sorted(b for b, kind in score.repeat_markers if kind == "end")

    # Alternate endings: keep only the last ending of each group.
    ending_starts = sorted(score.endings)
    for k, start in enumerate(ending_starts):
        number = score.endings[start]
        later = [s for s in ending_starts[k + 1 :] if score.endings[s] > number]
        if not later:
            continue
        stop = later[0]
        for b in range(start, stop):
            keep[b] = False

    if ends:
        last_end = ends[-1]
        tail = list(range(last_end + 1, len(score.bars)))
        # a final alternate ending after the last repeat sign is not a tail
        in_ending = any(start > last_end for start in ending_starts)
        if 0 < len(tail) < BAR_PART and not in_ending:
            for b in tail:
                keep[b] = False
    return [bar for bar, k in zip(score.bars, keep) if k]


def normalize_to_grid(score):
    """Flatten a reel into exactly 128 equal slots."""
    if not _is_reel(score):
        raise UnsupportedRhythm(f"rhythm {score.rhythm!r} is not a reel")
    if score.meter != Fraction(4, 4):
        raise UnsupportedRhythm(f"meter {score.meter} is not 4/4")
    slot_units = SLOT_LENGTH / score.unit_length  # slot length in unit lengths

    events = []  # (start, end, GridSlot) in unit lengths
    t = Fraction(0)
    for bar in _played_bars(score):
        carried = {}  # (letter, octave) -> accidental, persists to the bar end
        triplet = []
        for token in bar:
            if token.rest:
                slot = REST
            else:
                pitch = (token.letter, token.octave)
                if token.accidental is not None:
                    carried[pitch] = token.accidental
                slot = GridSlot(token.letter, token.octave, carried.get(pitch))
            if token.triplet:
                triplet.append((token, slot))
                if token.triplet == 3:
                    total = sum(tk.length for tk, _ in triplet) * Fraction(2, 3)
                    half = total / 2
                    events.append((t, t + half, triplet[0][1]))
                    events.append((t + half, t + total, triplet[2][1]))
                    t += total
                    triplet = []
                continue
            events.append((t, t + token.length, slot))
            t += token.length

    # Sample the note sounding at each slot onset.
    slots = []
    k = 0
    pos = Fraction(0)
    while pos < t:
        while events[k][1] <= pos:
            k += 1
        slots.append(events[k][2])
        pos += slot_units
    if len(slots) != SLOTS:
        raise WrongSlotCount(len(slots), SLOTS)
    return NoteGrid(slots)


def semitone(slot, key):
    """Semitones above middle C for one grid slot (None for a rest)."""
    if slot.rest:
        return None
    value = NATURAL_SEMITONES[slot.letter.upper()]
    if slot.letter.islower():
        value += 12
    value += 12 * slot.octave
    value += slot.accidental if slot.accidental is not None else key.offset(slot.letter)
    return value


def encode_semitones(grid, key):
    values = []
    for i, slot in enumerate(grid.slots):
        v = semitone(slot, key)
        if v is not None and not MIN_SEMITONE <= v <= MAX_SEMITONE:
            raise OutOfRangePitch(v, i)
        values.append(v)
    return SemitoneSequence(values)


def abc_to_semitones(text):
    """parse -> normalize -> encode in one call."""
    score = parse_abc(text)
    return encode_semitones(normalize_to_grid(score), score.key)
