"""Extended-XYZ reader and writer.

Frames are the usual two header lines (atom count, then a key=value
comment) followed by one row per atom.  ``Lattice`` holds nine floats,
row-major, one lattice vector per row; ``Properties`` declares the
per-atom columns.  Unrecognized comment keys are kept as raw strings on
``Structure.info`` and written back untouched.  Floats are emitted with
17 significant digits so a write/read cycle reproduces values exactly.
"""

from __future__ import annotations

import numpy as np

from .errors import ParseError
from .geometry import Dataset, Structure

__all__ = ["read_extxyz", "write_extxyz"]

_TRUE_TOKENS = {"T", "true", "True", "TRUE", "1"}
_FALSE_TOKENS = {"F", "false", "False", "FALSE", "0"}


def _split_comment(line: str) -> list[str]:
    """Split a comment line into tokens, keeping quoted spans intact."""
    items = []
    i, n = 0, len(line)
    while i < n:
        if line[i].isspace():
            i += 1
            continue
        start = i
        in_quote = False
        while i < n and (in_quote or not line[i].isspace()):
            if line[i] == '"':
                in_quote = not in_quote
            i += 1
        items.append(line[start:i])
    return items


def _unquote(raw: str) -> str:
    if len(raw) >= 2 and raw[0] == '"' and raw[-1] == '"':
        return raw[1:-1]
    return raw


def _parse_comment(line: str, lineno: int):
    """Split the known keys out of a comment line.

    Returns (cell, pbc, energy, columns, info) where ``info`` maps
    unknown keys to their raw value text (None for bare flags).
    """
    cell = None
    pbc = None
    energy = None
    columns = None
    info: dict[str, str | None] = {}
    for item in _split_comment(line):
        key, sep, raw = item.partition("=")
        if not sep:
            info[key] = None
            continue
        lower = key.lower()
        if lower == "lattice":
            fields = _unquote(raw).split()
            if len(fields) != 9:
                raise ParseError(
                    f"Lattice needs 9 numbers, got {len(fields)}", line=lineno
                )
            try:
                cell = np.array([float(f) for f in fields]).reshape(3, 3)
            except ValueError:
                raise ParseError(f"bad Lattice value in {raw!r}", line=lineno) from None
        elif lower == "properties":
            columns = _parse_properties(_unquote(raw), lineno)
        elif lower == "pbc":
            tokens = _unquote(raw).split()
            if len(tokens) == 1:
                tokens = tokens * 3
            if len(tokens) != 3:
                raise ParseError(f"pbc needs 3 flags, got {raw!r}", line=lineno)
            flags = []
            for tok in tokens:
                if tok in _TRUE_TOKENS:
                    flags.append(True)
                elif tok in _FALSE_TOKENS:
                    flags.append(False)
                else:
                    raise ParseError(f"bad pbc flag {tok!r}", line=lineno)
            pbc = np.array(flags)
        elif lower == "energy":
            try:
                energy = float(_unquote(raw))
            except ValueError:
                raise ParseError(f"bad energy value {raw!r}", line=lineno) from None
        else:
            info[key] = raw
    return cell, pbc, energy, columns, info


def _parse_properties(text: str, lineno: int) -> list[tuple[str, str, int]]:
    parts = text.split(":")
    if len(parts) % 3 != 0 or not parts:
        raise ParseError(f"malformed Properties string {text!r}", line=lineno)
    columns = []
    for i in range(0, len(parts), 3):
        name, kind, width = parts[i], parts[i + 1], parts[i + 2]
        try:
            width = int(width)
        except ValueError:
            raise ParseError(
                f"bad column width in Properties entry {name!r}", line=lineno
            ) from None
        if width < 1:
            raise ParseError(
                f"bad column width in Properties entry {name!r}", line=lineno
            )
        columns.append((name, kind, width))
    return columns


_DEFAULT_COLUMNS = [("species", "S", 1), ("pos", "R", 3)]


def read_extxyz(path) -> Dataset:
    """Parse every frame of an extended-XYZ file into a Dataset.

    Files without a Properties key fall back to plain xyz columns
    (species then x y z).  ``forces`` and ``force`` columns both map to
    Structure.forces.  Malformed input raises ParseError naming the line.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()

    structures = []
    lineno = 0
    while lineno < len(lines):
        if not lines[lineno].strip():  # blank padding between frames
            lineno += 1
            continue
        try:
            natoms = int(lines[lineno].strip())
        except ValueError:
            raise ParseError(
                f"expected an atom count, got {lines[lineno]!r}", line=lineno + 1
            ) from None
        if natoms < 1:
            raise ParseError(f"atom count must be positive, got {natoms}", line=lineno + 1)
        if lineno + 1 >= len(lines):
            raise ParseError("missing comment line", line=lineno + 2)
        cell, pbc, energy, columns, info = _parse_comment(lines[lineno + 1], lineno + 2)
        if columns is None:
            columns = list(_DEFAULT_COLUMNS)
        if lineno + 1 + natoms >= len(lines):
            raise ParseError(
                f"frame declares {natoms} atoms but the file ends early",
                line=len(lines) + 1,
            )

        total_width = sum(width for _, _, width in columns)
        species = []
        positions = np.empty((natoms, 3))
        forces = None
        for a in range(natoms):
            row_line = lineno + 2 + a
            fields = lines[row_line].split()
            if len(fields) != total_width:
                raise ParseError(
                    f"expected {total_width} columns, got {len(fields)}",
                    line=row_line + 1,
                )
            col = 0
            for name, kind, width in columns:
                chunk = fields[col : col + width]
                col += width
                lower = name.lower()
                if lower == "species":
                    species.append(chunk[0])
                    continue
                if lower not in ("pos", "forces", "force"):
                    continue  # consume unrecognized columns, keep alignment
                try:
                    numbers = [float(f) for f in chunk]
                except ValueError:
                    raise ParseError(
                        f"bad numeric value in column {name!r}", line=row_line + 1
                    ) from None
                if lower == "pos":
                    if width != 3:
                        raise ParseError("pos must have 3 columns", line=row_line + 1)
                    positions[a] = numbers
                else:
                    if width != 3:
                        raise ParseError(
                            f"{name} must have 3 columns", line=row_line + 1
                        )
                    if forces is None:
                        forces = np.empty((natoms, 3))
                    forces[a] = numbers

        if not any(name.lower() == "pos" for name, _, _ in columns):
            raise ParseError("Properties has no pos column", line=lineno + 2)
        if not any(name.lower() == "species" for name, _, _ in columns):
            raise ParseError("Properties has no species column", line=lineno + 2)
        if cell is None:
            cell = np.zeros((3, 3))
            if pbc is None:
                pbc = np.zeros(3, dtype=bool)
        elif pbc is None:
            pbc = np.ones(3, dtype=bool)
        structures.append(
            Structure(
                cell=cell,
                pbc=pbc,
                positions=positions,
                species=tuple(species),
                forces=forces,
                energy=energy,
                info=info,
            )
        )
        lineno += 2 + natoms

    if not structures:
        raise ParseError("no structures found", line=1)
    return Dataset(structures=tuple(structures))


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_extxyz(dataset: Dataset, path, selection=None) -> None:
    """Write structures (all, or the given indices in order) as extended-XYZ."""
    indices = range(len(dataset)) if selection is None else selection
    with open(path, "w", encoding="utf-8") as fh:
        for idx in indices:
            s = dataset[int(idx)]
            parts = []
            if s.pbc.any() or np.any(s.cell != 0):
                flat = " ".join(_fmt(v) for v in s.cell.ravel())
                parts.append(f'Lattice="{flat}"')
            props = "species:S:1:pos:R:3"
            if s.forces is not None:
                props += ":forces:R:3"
            parts.append(f"Properties={props}")
            parts.append('pbc="{} {} {}"'.format(*["T" if p else "F" for p in s.pbc]))
            if s.energy is not None:
                parts.append(f"energy={_fmt(s.energy)}")
            for key, raw in s.info.items():
                parts.append(key if raw is None else f"{key}={raw}")
            fh.write(f"{len(s)}\n")
            fh.write(" ".join(parts) + "\n")
            for a in range(len(s)):
                row = [s.species[a]] + [_fmt(v) for v in s.positions[a]]
                if s.forces is not None:
                    row += [_fmt(v) for v in s.forces[a]]
                fh.write(" ".join(row) + "\n")
