"""Plain-text file formats and the key-value config parser.

Traces:       ``n m sigma2`` header, then n lines of m reals.
Population:   ``n sigma2`` header, a line of n means, then ``u v rho`` lines.
Permutation:  one line of n indices; user u is reported as row forward[u].

Reals are written with 17 significant digits so files round-trip exactly.
"""

from __future__ import annotations

import csv
import io as _io
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Sequence, Tuple

import numpy as np

from .core import AnonymizedTraceSet, AssociationGraph, Permutation, PopulationParams, TraceSet


class FormatError(ValueError):
    """A file did not match its expected layout."""


def fmt_real(x: float) -> str:
    return format(float(x), ".17g")


def _write_lines(path, lines: Iterable[str]) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for line in lines:
            fh.write(line)
            fh.write("\n")


def write_traces(path, traces: TraceSet, sigma2: float) -> None:
    def lines():
        yield f"{traces.n} {traces.m} {fmt_real(sigma2)}"
        for row in traces.data:
            yield " ".join(fmt_real(v) for v in row)

    _write_lines(path, lines())


def read_traces(path, anonymized: bool = True) -> Tuple[TraceSet, float]:
    path = Path(path)
    with open(path, encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) != 3:
            raise FormatError(f"{path}:1: expected header 'n m sigma2'")
        try:
            n, m, sigma2 = int(header[0]), int(header[1]), float(header[2])
        except ValueError as exc:
            raise FormatError(f"{path}:1: {exc}") from None
        data = np.empty((n, m))
        for i in range(n):
            line = fh.readline()
            try:
                row = np.array(line.split(), dtype=float)
            except ValueError as exc:
                raise FormatError(f"{path}:{i + 2}: {exc}") from None
            if row.shape != (m,):
                raise FormatError(f"{path}:{i + 2}: expected {m} values, found {row.size}")
            data[i] = row
        if fh.read().strip():
            raise FormatError(f"{path}: trailing data after {n} rows")
    cls = AnonymizedTraceSet if anonymized else TraceSet
    return cls(data), sigma2


def write_population(path, p: PopulationParams) -> None:
    def lines():
        yield f"{p.n} {fmt_real(p.sigma2)}"
        yield " ".join(fmt_real(mu) for mu in p.means)
        for (u, v) in sorted(p.correlation_coeffs):
            yield f"{u} {v} {fmt_real(p.correlation_coeffs[(u, v)])}"

    _write_lines(path, lines())


def read_population(path) -> PopulationParams:
    path = Path(path)
    lines = path.read_text(encoding="ascii").splitlines()
    if len(lines) < 2:
        raise FormatError(f"{path}: expected a header line and a means line")
    try:
        n_str, s2_str = lines[0].split()
        n, sigma2 = int(n_str), float(s2_str)
    except ValueError:
        raise FormatError(f"{path}:1: expected header 'n sigma2'") from None
    try:
        means = np.array(lines[1].split(), dtype=float)
    except ValueError as exc:
        raise FormatError(f"{path}:2: {exc}") from None
    if means.shape != (n,):
        raise FormatError(f"{path}:2: expected {n} means, found {means.size}")
    coeffs = {}
    for lineno, line in enumerate(lines[2:], start=3):
        if not line.strip():
            continue
        parts = line.split()
        try:
            u, v, rho = int(parts[0]), int(parts[1]), float(parts[2])
            if len(parts) != 3:
                raise ValueError
        except (ValueError, IndexError):
            raise FormatError(f"{path}:{lineno}: expected 'u v rho'") from None
        coeffs[(min(u, v), max(u, v))] = rho
    try:
        graph = AssociationGraph.from_edges(n, coeffs.keys())
        return PopulationParams(graph, means, coeffs, sigma2)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None


def write_permutation(path, p: Permutation) -> None:
    _write_lines(path, [" ".join(str(int(i)) for i in p.forward)])


def read_permutation(path) -> Permutation:
    path = Path(path)
    try:
        fwd = [int(tok) for tok in path.read_text(encoding="ascii").split()]
        return Permutation(np.array(fwd))
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None


# ---------------------------------------------------------------- config files


def parse_scalar_list(text: str, cast: Callable[[str], Any]) -> List[Any]:
    return [cast(tok) for tok in text.replace(",", " ").split()]


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def read_keyvalue(path, schema: Dict[str, Callable[[str], Any]]) -> Dict[str, Any]:
    """Parse ``key = value`` lines; ``#`` starts a comment.

    Every key must appear in ``schema``; errors carry the line number.
    """
    path = Path(path)
    out: Dict[str, Any] = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in schema:
            raise FormatError(f"{path}:{lineno}: unknown key {key!r}")
        if key in out:
            raise FormatError(f"{path}:{lineno}: duplicate key {key!r}")
        try:
            out[key] = schema[key](value)
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: bad value for {key!r}: {exc}") from None
    return out


def ints(text):
    return tuple(parse_scalar_list(text, int))


def floats(text):
    return tuple(parse_scalar_list(text, float))


def pair(text):
    vals = floats(text)
    if len(vals) != 2:
        raise ValueError(f"expected two numbers, got {len(vals)}")
    return vals


def strs(text):
    return tuple(parse_scalar_list(text, str))


GENERATOR_SCHEMA = {
    "n": int,
    "s": int,
    "group_sizes": ints,
    "rho_range": pair,
    "mean_interval": pair,
    "sigma2": float,
    "topology": str,
    "psd_min_eigenvalue": float,
    "max_psd_retries": int,
    "extra_edge_prob": float,
    "allow_negative": _bool,
    "fixed_means": floats,
    "m": int,
    "seed": int,
}

SWEEP_SCHEMA = {
    "regime": strs,
    "n": ints,
    "s": ints,
    "alpha": floats,
    "c": floats,
    "trials": int,
    "seed": int,
    "jobs": int,
    "m": int,
    "rho_range": pair,
    "mean_interval": pair,
    "sigma2": float,
    "topology": str,
    "target_user": int,
    "edge_threshold_exponent": float,
    "max_group_size_for_matching": int,
}

CSV_HEADER = ("regime", "n", "s", "alpha", "c", "m", "trials", "failures", "pe_hat", "ci_low", "ci_high", "ambiguity_rate", "seed")


def sweep_csv(rows) -> str:
    """Render sweep rows; errored cells keep their row with empty statistics."""
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for row in rows:
        cell, e = row.cell, row.estimate
        try:
            m = str(cell.observations)
        except ValueError:
            m = ""
        head = [cell.regime.value, cell.n, cell.s, fmt_real(cell.alpha), fmt_real(cell.c), m]
        if e is None:
            w.writerow(head + ["0", "0", "", "", "", "", str(row.seed)])
        else:
            w.writerow(
                head
                + [
                    str(e.trials),
                    str(e.failures),
                    fmt_real(e.p_e_hat),
                    fmt_real(e.ci_low),
                    fmt_real(e.ci_high),
                    fmt_real(e.ambiguity_rate),
                    str(row.seed),
                ]
            )
    return buf.getvalue()


EDGE_CSV_HEADER = ("trial", "seed", "true_edges", "found_edges", "correct_edges", "precision", "recall", "f1")


def edge_recovery_csv(records) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(EDGE_CSV_HEADER)
    for t, r in enumerate(records):
        w.writerow(
            [t, r.seed, r.true_edges, r.found_edges, r.correct_edges, fmt_real(r.precision), fmt_real(r.recall), fmt_real(r.f1)]
        )
    return buf.getvalue()


def gnuplot_script(csv_path: str, regimes: Sequence[str]) -> str:
    name = Path(csv_path).name
    stem = Path(csv_path).stem
    plots = []
    for i, regime in enumerate(regimes):
        sel = f'(strcol(1) eq "{regime}" ? $2 : 1/0)'
        plots.append(f'"{name}" using {sel}:9:10:11 with yerrorlines lt {i + 1} title "{regime}"')
    return "\n".join(
        [
            "set datafile separator ','",
            "set key autotitle columnhead",
            "set logscale x",
            "set xlabel 'n (users)'",
            "set ylabel 'estimated P_e'",
            "set yrange [0:1]",
            "set terminal pngcairo size 900,600",
            f"set output '{stem}.png'",
            "plot " + ", \\\n     ".join(plots),
            "",
        ]
    )
