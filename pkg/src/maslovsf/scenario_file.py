"""Line-oriented scenario files.

    # comment
    [system]
    name = sphere
    dimension = 1
    metric = 1
    curvature = constant
    r_matrix = -22.206609902322342

    [focal]
    p_basis = 1
    second_fundamental = 0

    [analysis]
    grid = 256
    basis = sine
    basis_size = 32
    tol_rank = 1e-08

Payloads:

* ``r_matrix``: n*n reals, row-major (curvature = constant);
* ``r_diag``: n reals (constant), or for curvature = diagonal one
  semicolon-separated group of ascending polynomial coefficients per axis;
* ``samples``: semicolon-separated rows ``t, R_11, R_12, ..., R_nn``
  (curvature = sampled).
* ``p_basis``: n*p reals, row-major n x p; empty for a point.

Floats are written with repr, so parse(serialize(s)) is bit-exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bilinear import DEFAULT_TOL
from .focal import DegenerateSubmanifoldError, FocalBoundary
from .index_form import DEFAULT_GRID, DEFAULT_SIZE
from .morse_sturm import CurvatureCurve, MetricForm, MorseSturmError, MorseSturmSystem
from .scenarios import Scenario

SECTIONS = {
    "system": {"name", "dimension", "metric", "curvature", "r_diag", "r_matrix", "samples"},
    "focal": {"p_basis", "second_fundamental"},
    "analysis": {"grid", "basis", "basis_size", "tol_rank"},
}


class ScenarioFileError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str = "<scenario>"):
        where = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(where + message)
        self.line = line


@dataclass(frozen=True)
class AnalysisOptions:
    grid: int = DEFAULT_GRID
    basis: str = "sine"
    basis_size: int = DEFAULT_SIZE
    tol_rank: float = DEFAULT_TOL


@dataclass
class _Entry:
    value: str
    line: int


def _floats(text: str) -> list[float]:
    text = text.strip()
    if not text:
        return []
    return [float(x) for x in text.split(",")]


def _read_sections(text: str, source: str) -> dict[str, dict[str, _Entry]]:
    sections: dict[str, dict[str, _Entry]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if current not in SECTIONS:
                raise ScenarioFileError(f"unknown section [{current}]", lineno, source)
            if current in sections:
                raise ScenarioFileError(f"duplicate section [{current}]", lineno, source)
            sections[current] = {}
            continue
        if current is None:
            raise ScenarioFileError("key outside of any section", lineno, source)
        if "=" not in line:
            raise ScenarioFileError(f"expected 'key = value', got {line!r}", lineno, source)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in SECTIONS[current]:
            raise ScenarioFileError(f"unknown key {key!r} in [{current}]", lineno, source)
        if key in sections[current]:
            raise ScenarioFileError(f"duplicate key {key!r}", lineno, source)
        sections[current][key] = _Entry(value, lineno)
    return sections


def _need(sec: dict[str, _Entry], key: str, section: str, source: str, line: int | None) -> _Entry:
    if key not in sec:
        raise ScenarioFileError(f"missing required key {key!r} in [{section}]", line, source)
    return sec[key]


def _parse_system(sec: dict[str, _Entry], source: str, header: int | None) -> tuple[str, MorseSturmSystem]:
    def number_list(entry: _Entry) -> list[float]:
        try:
            return _floats(entry.value)
        except ValueError as exc:
            raise ScenarioFileError(f"bad number: {exc}", entry.line, source) from None

    dim_entry = _need(sec, "dimension", "system", source, header)
    try:
        n = int(dim_entry.value)
    except ValueError:
        raise ScenarioFileError(f"dimension must be an integer, got {dim_entry.value!r}", dim_entry.line, source) from None
    if n < 1:
        raise ScenarioFileError("dimension must be positive", dim_entry.line, source)

    met_entry = _need(sec, "metric", "system", source, header)
    metric_vals = number_list(met_entry)
    if len(metric_vals) != n:
        raise ScenarioFileError(
            f"dimension mismatch: metric has {len(metric_vals)} entries, dimension is {n}", met_entry.line, source
        )
    try:
        metric = MetricForm(metric_vals)
    except MorseSturmError as exc:
        raise ScenarioFileError(str(exc), met_entry.line, source) from None

    kind_entry = _need(sec, "curvature", "system", source, header)
    kind = kind_entry.value
    payload_keys = [k for k in ("r_diag", "r_matrix", "samples") if k in sec]
    if len(payload_keys) != 1:
        raise ScenarioFileError(
            "exactly one of r_diag, r_matrix, samples is required", kind_entry.line, source
        )
    pkey = payload_keys[0]
    entry = sec[pkey]

    if kind == "constant":
        if pkey == "samples":
            raise ScenarioFileError("constant curvature takes r_diag or r_matrix", entry.line, source)
        vals = number_list(entry)
        if pkey == "r_diag":
            if len(vals) != n:
                raise ScenarioFileError(f"dimension mismatch: r_diag has {len(vals)} entries, expected {n}", entry.line, source)
            curv = CurvatureCurve.constant(np.diag(vals))
        else:
            if len(vals) != n * n:
                raise ScenarioFileError(
                    f"dimension mismatch: r_matrix has {len(vals)} entries, expected {n * n}", entry.line, source
                )
            curv = CurvatureCurve.constant(np.array(vals).reshape(n, n))
    elif kind == "diagonal":
        if pkey != "r_diag":
            raise ScenarioFileError("diagonal curvature takes r_diag", entry.line, source)
        groups = [g for g in entry.value.split(";")]
        if len(groups) != n:
            raise ScenarioFileError(f"dimension mismatch: r_diag has {len(groups)} groups, expected {n}", entry.line, source)
        try:
            coeffs = [_floats(g) for g in groups]
        except ValueError as exc:
            raise ScenarioFileError(f"bad number: {exc}", entry.line, source) from None
        if any(not c for c in coeffs):
            raise ScenarioFileError("empty coefficient group", entry.line, source)
        curv = CurvatureCurve.diagonal(coeffs)
    elif kind == "sampled":
        if pkey != "samples":
            raise ScenarioFileError("sampled curvature takes samples", entry.line, source)
        try:
            rows = [_floats(r) for r in entry.value.split(";") if r.strip()]
        except ValueError as exc:
            raise ScenarioFileError(f"bad number: {exc}", entry.line, source) from None
        if any(len(r) != 1 + n * n for r in rows):
            raise ScenarioFileError(f"dimension mismatch: each sample needs 1 + {n * n} numbers", entry.line, source)
        arr = np.array(rows)
        try:
            curv = CurvatureCurve.sampled(arr[:, 0], arr[:, 1:].reshape(-1, n, n))
        except MorseSturmError as exc:
            raise ScenarioFileError(str(exc), entry.line, source) from None
    else:
        raise ScenarioFileError(
            f"curvature must be constant, diagonal or sampled, got {kind!r}", kind_entry.line, source
        )

    system = MorseSturmSystem(metric, curv)
    try:
        system.validate()
    except MorseSturmError as exc:
        raise ScenarioFileError(f"curvature is not g-symmetric: {exc}", entry.line, source) from None
    name = sec["name"].value if "name" in sec else Path(source).stem
    return name, system


def _parse_focal(sec: dict[str, _Entry], metric: MetricForm, source: str, header: int) -> FocalBoundary:
    n = metric.n
    pb = _need(sec, "p_basis", "focal", source, header)
    try:
        pvals = _floats(pb.value)
    except ValueError as exc:
        raise ScenarioFileError(f"bad number: {exc}", pb.line, source) from None
    if len(pvals) % n:
        raise ScenarioFileError(f"dimension mismatch: p_basis has {len(pvals)} entries, not a multiple of {n}", pb.line, source)
    p = len(pvals) // n
    sf_entry = sec.get("second_fundamental")
    try:
        svals = _floats(sf_entry.value) if sf_entry else [0.0] * (p * p)
    except ValueError as exc:
        raise ScenarioFileError(f"bad number: {exc}", sf_entry.line, source) from None
    if len(svals) != p * p:
        line = sf_entry.line if sf_entry else header
        raise ScenarioFileError(f"dimension mismatch: second_fundamental needs {p * p} entries", line, source)
    try:
        focal = FocalBoundary(np.array(pvals).reshape(n, p), np.array(svals).reshape(p, p))
        return focal.validate(metric)
    except DegenerateSubmanifoldError as exc:
        raise ScenarioFileError(str(exc), pb.line, source) from None


def _parse_analysis(sec: dict[str, _Entry], source: str) -> AnalysisOptions:
    out = {}
    casts = {"grid": int, "basis": str, "basis_size": int, "tol_rank": float}
    for key, entry in sec.items():
        try:
            out[key] = casts[key](entry.value)
        except ValueError:
            raise ScenarioFileError(f"bad value for {key}: {entry.value!r}", entry.line, source) from None
    if out.get("basis", "sine") not in ("sine", "fem"):
        raise ScenarioFileError(f"basis must be sine or fem, got {out['basis']!r}", sec["basis"].line, source)
    return AnalysisOptions(**out)


def loads(text: str, source: str = "<scenario>") -> tuple[Scenario, AnalysisOptions]:
    sections = _read_sections(text, source)
    if "system" not in sections:
        raise ScenarioFileError("missing [system] section", None, source)
    header_lines = {k: min((e.line for e in v.values()), default=None) for k, v in sections.items()}
    name, system = _parse_system(sections["system"], source, header_lines["system"])
    focal = None
    if "focal" in sections:
        focal = _parse_focal(sections["focal"], system.metric, source, header_lines["focal"])
    options = _parse_analysis(sections.get("analysis", {}), source)
    return Scenario(name, system, focal), options


def parse_scenario(path) -> Scenario:
    return load(path)[0]


def load(path) -> tuple[Scenario, AnalysisOptions]:
    path = Path(path)
    return loads(path.read_text(encoding="utf-8"), str(path))


def _fmt(values) -> str:
    return ", ".join(repr(float(v)) for v in np.ravel(values))


def dumps(scenario: Scenario, options: AnalysisOptions | None = None) -> str:
    sysm = scenario.system
    curv = sysm.curvature
    lines = [
        "[system]",
        f"name = {scenario.name}",
        f"dimension = {sysm.n}",
        f"metric = {_fmt(sysm.metric.diag)}",
        f"curvature = {curv.kind}",
    ]
    if curv.kind == "constant":
        lines.append(f"r_matrix = {_fmt(curv.payload[0])}")
    elif curv.kind == "diagonal":
        lines.append("r_diag = " + "; ".join(_fmt(c) for c in curv.payload))
    else:
        times, samples = curv.payload
        rows = [_fmt(np.concatenate([[t], s.ravel()])) for t, s in zip(times, samples)]
        lines.append("samples = " + "; ".join(rows))
    if scenario.focal is not None:
        lines += [
            "",
            "[focal]",
            f"p_basis = {_fmt(scenario.focal.p_basis)}",
            f"second_fundamental = {_fmt(scenario.focal.second_fundamental)}",
        ]
    if options is not None:
        lines += [
            "",
            "[analysis]",
            f"grid = {options.grid}",
            f"basis = {options.basis}",
            f"basis_size = {options.basis_size}",
            f"tol_rank = {options.tol_rank!r}",
        ]
    return "\n".join(lines) + "\n"


def serialize(scenario: Scenario, path, options: AnalysisOptions | None = None) -> None:
    Path(path).write_text(dumps(scenario, options), encoding="utf-8")


def same_scenario(a: Scenario, b: Scenario) -> bool:
    """Bit-for-bit equality of the data defining two scenarios."""
    if a.name != b.name or a.system.metric != b.system.metric:
        return False
    ca, cb = a.system.curvature, b.system.curvature
    if ca.kind != cb.kind or len(ca.payload) != len(cb.payload):
        return False
    if not all(np.array_equal(x, y) and x.shape == y.shape for x, y in zip(ca.payload, cb.payload)):
        return False
    if (a.focal is None) != (b.focal is None):
        return False
    if a.focal is not None:
        return np.array_equal(a.focal.p_basis, b.focal.p_basis) and np.array_equal(
            a.focal.second_fundamental, b.focal.second_fundamental
        )
    return True
