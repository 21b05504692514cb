"""String-valued tables with explicit missing cells: CSV I/O, masking, grouping.

Every cell is either text or the ``MISSING`` sentinel; there is no type
coercion. Tables are immutable after construction, so they can be shared
freely across threads.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import IO, Iterable, Union

from .errors import DataError, ParseError, SchemaError

__all__ = [
    "MISSING",
    "Cell",
    "Table",
    "GroupIndex",
    "MaskPlan",
    "DEFAULT_MISSING_TOKENS",
    "load_table",
    "loads_table",
    "dump_table",
    "dumps_table",
    "mask_cells",
    "group_by_target",
    "casefold_cells",
]

DEFAULT_MISSING_TOKENS = ("", "NA", "N/A", "null")


class _MissingType:
    """Singleton marker for an absent cell, distinct from the empty string."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "MISSING"

    def __bool__(self) -> bool:
        return False

    def __deepcopy__(self, memo):
        return self

    def __copy__(self):
        return self


MISSING = _MissingType()

Cell = Union[str, _MissingType]


@dataclass(frozen=True)
class Table:
    """An ordered relation of text cells addressed by (row index, attribute name)."""

    schema: tuple[str, ...]
    rows: tuple[tuple[Cell, ...], ...]

    def __post_init__(self):
        seen = set()
        for name in self.schema:
            if not name:
                raise SchemaError("attribute names must be non-empty")
            if name in seen:
                raise SchemaError(f"duplicate attribute name: {name!r}")
            seen.add(name)
        width = len(self.schema)
        for i, row in enumerate(self.rows):
            if len(row) != width:
                raise SchemaError(
                    f"row {i} has {len(row)} cells, expected {width}"
                )

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def column_index(self, attr: str) -> int:
        try:
            return self.schema.index(attr)
        except ValueError:
            raise SchemaError(f"no such attribute: {attr!r}") from None

    def cell(self, row: int, attr: str) -> Cell:
        return self.rows[row][self.column_index(attr)]

    def column(self, attr: str) -> list[Cell]:
        j = self.column_index(attr)
        return [row[j] for row in self.rows]

    def missing_rows(self, attr: str) -> list[int]:
        """Row indices whose cell in ``attr`` is MISSING."""
        j = self.column_index(attr)
        return [i for i, row in enumerate(self.rows) if row[j] is MISSING]

    def with_cell(self, row: int, attr: str, value: Cell) -> "Table":
        """Return a copy with one cell replaced."""
        j = self.column_index(attr)
        new_rows = list(self.rows)
        cells = list(new_rows[row])
        cells[j] = value
        new_rows[row] = tuple(cells)
        return Table(self.schema, tuple(new_rows))

    def with_cells(self, updates: Iterable[tuple[int, str, Cell]]) -> "Table":
        new_rows = [list(r) for r in self.rows]
        for row, attr, value in updates:
            new_rows[row][self.column_index(attr)] = value
        return Table(self.schema, tuple(tuple(r) for r in new_rows))


@dataclass(frozen=True)
class GroupIndex:
    """Rows partitioned by their (non-missing) value in the target attribute.

    ``worklist`` holds the rows whose target cell is MISSING; they belong to
    no group and are the cells the pipeline will impute.
    """

    target: str
    groups: dict[str, list[int]]
    worklist: list[int] = field(default_factory=list)

    def group_keys(self) -> list[str]:
        return list(self.groups.keys())


@dataclass(frozen=True)
class MaskPlan:
    """Ground truth for cells that were deliberately blanked out."""

    target: str
    masked: tuple[tuple[int, str], ...]
    rate: float
    seed: int

    def truth(self) -> dict[int, str]:
        return {row: value for row, value in self.masked}

    def to_json_dict(self) -> dict:
        return {
            "target": self.target,
            "rate": self.rate,
            "seed": self.seed,
            "masked": [{"row": r, "value": v} for r, v in self.masked],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "MaskPlan":
        return cls(
            target=d["target"],
            masked=tuple((m["row"], m["value"]) for m in d["masked"]),
            rate=d["rate"],
            seed=d["seed"],
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json_dict(), ensure_ascii=False)


# --- CSV parsing -------------------------------------------------------------
#
# The stdlib csv module cannot tell a quoted empty field ("") from a bare one,
# but we need that distinction: a bare empty field is MISSING while a quoted
# one is the empty string. Hence a small RFC-4180 state machine of our own.


def _parse_csv(text: str) -> list[list[tuple[str, bool]]]:
    """Parse CSV text into rows of (field, was_quoted) pairs."""
    rows: list[list[tuple[str, bool]]] = []
    fields: list[tuple[str, bool]] = []
    buf: list[str] = []
    quoted = False
    in_quotes = False
    i = 0
    n = len(text)
    line_no = 1

    def end_field():
        fields.append(("".join(buf), quoted))
        buf.clear()

    while i < n:
        ch = text[i]
        if in_quotes:
            if ch == '"':
                if i + 1 < n and text[i + 1] == '"':
                    buf.append('"')
                    i += 2
                    continue
                in_quotes = False
                i += 1
                continue
            if ch == "\n":
                line_no += 1
            buf.append(ch)
            i += 1
            continue
        if ch == '"':
            if buf:
                raise ParseError(f"line {line_no}: quote inside unquoted field")
            quoted = True
            in_quotes = True
            i += 1
            continue
        if ch == ",":
            end_field()
            quoted = False
            i += 1
            continue
        if ch == "\r" and i + 1 < n and text[i + 1] == "\n":
            end_field()
            quoted = False
            rows.append(fields)
            fields = []
            line_no += 1
            i += 2
            continue
        if ch in ("\n", "\r"):
            end_field()
            quoted = False
            rows.append(fields)
            fields = []
            line_no += 1
            i += 1
            continue
        buf.append(ch)
        i += 1
    if in_quotes:
        raise ParseError(f"line {line_no}: unterminated quoted field")
    if buf or quoted or fields:
        end_field()
        rows.append(fields)
    return rows


def loads_table(
    text: str,
    missing_tokens: Iterable[str] = DEFAULT_MISSING_TOKENS,
) -> Table:
    """Parse CSV text (header row required) into a Table.

    Bare fields matching one of ``missing_tokens`` become MISSING; quoted
    fields are always kept verbatim, so ``""`` loads as the empty string.
    """
    raw = _parse_csv(text)
    if not raw:
        raise ParseError("empty input: a header row is required")
    tokens = set(missing_tokens)
    header = [f for f, _ in raw[0]]
    schema = tuple(header)
    width = len(schema)
    rows: list[tuple[Cell, ...]] = []
    for lineno, fields in enumerate(raw[1:], start=2):
        if len(fields) != width:
            raise ParseError(
                f"row {lineno}: expected {width} fields, got {len(fields)}"
            )
        cells: list[Cell] = []
        for value, was_quoted in fields:
            if not was_quoted and value in tokens:
                cells.append(MISSING)
            else:
                cells.append(value)
        rows.append(tuple(cells))
    return Table(schema, tuple(rows))


def load_table(
    source: Union[str, bytes, IO],
    fmt: str = "csv",
    missing_tokens: Iterable[str] = DEFAULT_MISSING_TOKENS,
) -> Table:
    """Load a Table from a path, byte stream, or text stream (UTF-8 CSV)."""
    if fmt != "csv":
        raise DataError(f"unsupported format: {fmt!r}")
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        with open(source, "rb") as fh:
            text = fh.read().decode("utf-8")
    else:
        data = source.read()
        text = data.decode("utf-8") if isinstance(data, bytes) else data
    return loads_table(text, missing_tokens=missing_tokens)


def _write_field(value: Cell, missing_tokens: set[str]) -> str:
    if value is MISSING:
        return ""
    needs_quote = (
        value in missing_tokens
        or '"' in value
        or "," in value
        or "\n" in value
        or "\r" in value
    )
    if needs_quote:
        return '"' + value.replace('"', '""') + '"'
    return value


def dumps_table(
    t: Table, missing_tokens: Iterable[str] = DEFAULT_MISSING_TOKENS
) -> str:
    """Serialize to CSV. MISSING becomes a bare empty field; any text value
    that collides with a missing token (including "") is quoted so it
    survives a reload."""
    tokens = set(missing_tokens)
    lines = [",".join(_write_field(name, tokens) for name in t.schema)]
    for row in t.rows:
        lines.append(",".join(_write_field(c, tokens) for c in row))
    return "\n".join(lines) + "\n"


def dump_table(
    t: Table,
    path: str,
    missing_tokens: Iterable[str] = DEFAULT_MISSING_TOKENS,
) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(dumps_table(t, missing_tokens=missing_tokens))


# --- masking and grouping ----------------------------------------------------


def mask_cells(
    t: Table, target: str, rate: float, seed: int
) -> tuple[Table, MaskPlan]:
    """Blank out ``round(rate * #non-missing)`` target cells, recording originals.

    Deterministic for a fixed seed; never touches an already-missing cell.
    """
    if not 0 < rate <= 1:
        raise DataError(f"mask rate must be in (0, 1], got {rate}")
    j = t.column_index(target)
    eligible = [i for i, row in enumerate(t.rows) if row[j] is not MISSING]
    if not eligible:
        raise DataError(f"no non-missing cells to mask in {target!r}")
    count = round(rate * len(eligible))
    rng = random.Random(seed)
    chosen = sorted(rng.sample(eligible, count))
    masked = tuple((i, t.rows[i][j]) for i in chosen)
    new_rows = list(t.rows)
    for i in chosen:
        cells = list(new_rows[i])
        cells[j] = MISSING
        new_rows[i] = tuple(cells)
    plan = MaskPlan(target=target, masked=masked, rate=rate, seed=seed)
    return Table(t.schema, tuple(new_rows)), plan


def group_by_target(t: Table, target: str) -> GroupIndex:
    """Partition rows by exact (case-sensitive) target value.

    Rows with a MISSING target go to the worklist, not to any group.
    """
    j = t.column_index(target)
    groups: dict[str, list[int]] = {}
    worklist: list[int] = []
    for i, row in enumerate(t.rows):
        value = row[j]
        if value is MISSING:
            worklist.append(i)
        else:
            groups.setdefault(value, []).append(i)
    return GroupIndex(target=target, groups=groups, worklist=worklist)


def casefold_cells(t: Table, attrs: Iterable[str] | None = None) -> Table:
    """Opt-in preprocessing: casefold text cells in the given columns (all by default)."""
    cols = list(attrs) if attrs is not None else list(t.schema)
    idxs = {t.column_index(a) for a in cols}
    new_rows = tuple(
        tuple(
            c.casefold() if j in idxs and c is not MISSING else c
            for j, c in enumerate(row)
        )
        for row in t.rows
    )
    return Table(t.schema, new_rows)
