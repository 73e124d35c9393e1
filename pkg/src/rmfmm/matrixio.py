"""Text formats for masked matrices and factor matrices.

Masked matrix: a header line "m n", then m whitespace-separated rows where the
token NA marks an unobserved entry. Factor matrix: same layout, no NA allowed.
Values are written with 17 significant digits so save/load round-trips are
bit-exact; scientific notation is accepted on load. Files are UTF-8 with LF
line endings.
"""
from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .errors import NonFiniteValue, ParseError, ShapeHeaderMismatch
from .model import FactorPair, MaskedMatrix

NA_TOKEN = "NA"


def _format_value(x: float) -> str:
    return format(float(x), ".17g")


def _read_lines(path) -> list[str]:
    text = Path(path).read_text(encoding="utf-8")
    lines = text.split("\n")
    while lines and lines[-1] == "":
        lines.pop()
    return lines


def _parse_header(lines: list[str], path) -> tuple[int, int]:
    if not lines:
        raise ParseError(f"{path}: empty file", line=1)
    tokens = lines[0].split()
    if len(tokens) != 2:
        raise ParseError(f"{path}: header must be 'rows cols'", line=1)
    try:
        m, n = int(tokens[0]), int(tokens[1])
    except ValueError as exc:
        raise ParseError(f"{path}: non-integer header token", line=1) from exc
    if m < 1 or n < 1:
        raise ParseError(f"{path}: header dimensions must be positive", line=1)
    return m, n


def _parse_token(token: str, path, line: int, column: int) -> float:
    try:
        value = float(token)
    except ValueError as exc:
        raise ParseError(f"{path}: bad value {token!r}", line=line, column=column) from exc
    if not math.isfinite(value):
        raise NonFiniteValue(f"{path}: non-finite value {token!r}", line=line, column=column)
    return value


def _parse_body(lines: list[str], m: int, n: int, path, allow_na: bool):
    if len(lines) - 1 != m:
        raise ShapeHeaderMismatch(
            f"{path}: header says {m} rows, file has {len(lines) - 1}", line=1
        )
    values = np.zeros((m, n))
    mask = np.ones((m, n))
    for i in range(m):
        tokens = lines[i + 1].split()
        if len(tokens) != n:
            raise ShapeHeaderMismatch(
                f"{path}: header says {n} columns, row has {len(tokens)}", line=i + 2
            )
        for j, token in enumerate(tokens):
            if token == NA_TOKEN:
                if not allow_na:
                    raise ParseError(f"{path}: NA not allowed here", line=i + 2, column=j + 1)
                mask[i, j] = 0.0
            else:
                values[i, j] = _parse_token(token, path, line=i + 2, column=j + 1)
    return values, mask


def save_masked_matrix(path, data: MaskedMatrix) -> None:
    m, n = data.shape
    rows = [f"{m} {n}"]
    for i in range(m):
        rows.append(
            " ".join(
                _format_value(data.values[i, j]) if data.mask[i, j] == 1.0 else NA_TOKEN
                for j in range(n)
            )
        )
    Path(path).write_text("\n".join(rows) + "\n", encoding="utf-8", newline="\n")


def load_masked_matrix(path) -> MaskedMatrix:
    lines = _read_lines(path)
    m, n = _parse_header(lines, path)
    values, mask = _parse_body(lines, m, n, path, allow_na=True)
    return MaskedMatrix(values, mask)


def save_factor_matrix(path, a: np.ndarray) -> None:
    a = np.asarray(a, dtype=float)
    m, n = a.shape
    rows = [f"{m} {n}"]
    for i in range(m):
        rows.append(" ".join(_format_value(a[i, j]) for j in range(n)))
    Path(path).write_text("\n".join(rows) + "\n", encoding="utf-8", newline="\n")


def load_factor_matrix(path) -> np.ndarray:
    lines = _read_lines(path)
    m, n = _parse_header(lines, path)
    values, _ = _parse_body(lines, m, n, path, allow_na=False)
    return values


def save_factors(u_path, v_path, factors: FactorPair) -> None:
    save_factor_matrix(u_path, factors.u)
    save_factor_matrix(v_path, factors.v)


def load_factors(u_path, v_path) -> FactorPair:
    return FactorPair(load_factor_matrix(u_path), load_factor_matrix(v_path))
