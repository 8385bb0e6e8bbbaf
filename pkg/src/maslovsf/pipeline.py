"""Analysis chain: flow, instants, Maslov index, Galerkin spectral flow,
identity checks and bifurcation certificates; report and CSV output."""

from __future__ import annotations

import json
import logging
import os
import tempfile
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .bilinear import DEFAULT_TOL, inertia
from .focal import initial_lagrangian
from .index_form import (
    DEFAULT_GRID,
    DEFAULT_SIZE,
    BasisSpec,
    SpectralFlowResult,
    focal_relative_index,
    path_spectral_flow,
    relative_index_numeric,
)
from .maslov import DegenerateCrossingError, crossing_form, maslov_index_geodesic
from .morse_sturm import ConjugateInstant, find_conjugate_instants, integrate_flow
from .scenarios import Scenario

log = logging.getLogger(__name__)

CERTIFIED = "bifurcation-certified"
NO_CERTIFICATE = "no-certificate"
INTERVAL = "interval-certified"
UNCERTAIN = "uncertain"

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_IDENTITY = 2
EXIT_UNCERTAIN = 3


@dataclass(frozen=True)
class RunOptions:
    grid: int = DEFAULT_GRID
    basis: str = "sine"
    basis_size: int = DEFAULT_SIZE
    tol_rank: float = DEFAULT_TOL
    steps: int = 2048
    causal: bool = False

    @property
    def basis_spec(self) -> BasisSpec:
        return BasisSpec(self.basis, self.basis_size)


@dataclass(frozen=True)
class InstantRow:
    t0: float
    multiplicity: int
    signature: int
    nondegenerate: bool
    certificate: str
    uncertain: bool = False
    interval: tuple[float, float] | None = None


@dataclass
class AnalysisReport:
    name: str
    focal: bool
    instants: list[InstantRow]
    maslov: int | None
    spectral_flow: int
    tracked_flow: int
    relative_index: int
    relative_index_agree: bool
    n_minus_end: int
    dim_h_minus: int
    correction: int
    options: RunOptions
    failures: list[str] = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    det_curve: tuple = field(default=(), repr=False)
    eigen_table: np.ndarray | None = field(default=None, repr=False)

    @property
    def identity_checked(self) -> bool:
        return self.maslov is not None

    @property
    def identity_ok(self) -> bool:
        return self.identity_checked and not self.failures

    @property
    def any_uncertain(self) -> bool:
        return any(r.certificate == UNCERTAIN or r.uncertain for r in self.instants)

    @property
    def exit_code(self) -> int:
        if self.identity_checked and self.failures:
            return EXIT_IDENTITY
        if not self.identity_checked or self.any_uncertain:
            return EXIT_UNCERTAIN
        return EXIT_OK

    def summary(self) -> dict:
        return {
            "scenario": self.name,
            "focal": self.focal,
            "instants": [asdict(r) for r in self.instants],
            "maslov": self.maslov,
            "spectral_flow": self.spectral_flow,
            "tracked_flow": self.tracked_flow,
            "relative_index": self.relative_index,
            "relative_index_agree": self.relative_index_agree,
            "n_minus_end": self.n_minus_end,
            "dim_h_minus": self.dim_h_minus,
            "correction": self.correction,
            "identity_ok": self.identity_ok,
            "failures": list(self.failures),
            "options": asdict(self.options),
            "timings": dict(self.timings),
        }


def _n_minus_at(sf: SpectralFlowResult, i: int, tol: float) -> tuple[int, bool]:
    st = inertia(sf.path.matrices[i], tol)
    return st.n_minus, st.n_zero == 0


def _interval_jump(sf: SpectralFlowResult, lo: float, hi: float, tol: float):
    """Change of n_-(I_s) across [lo, hi], using the nearest regular grid samples
    just outside; that is the Maslov index over the sub-interval."""
    s = sf.path.s_grid
    left = [i for i in range(len(s)) if s[i] < lo]
    right = [i for i in range(len(s)) if s[i] > hi]
    a = next((i for i in reversed(left) if _n_minus_at(sf, i, tol)[1]), None)
    b = next((i for i in right if _n_minus_at(sf, i, tol)[1]), None)
    if a is None or b is None:
        return None
    jump = _n_minus_at(sf, b, tol)[0] - _n_minus_at(sf, a, tol)[0]
    return float(s[a]), float(s[b]), jump


def assign_certificates(
    instants: list[ConjugateInstant],
    degenerate: list[bool],
    sf: SpectralFlowResult,
    metric_index: int,
    causal: bool,
    tol: float,
) -> list[InstantRow]:
    rows = []
    for c, deg in zip(instants, degenerate):
        if c.uncertain or deg:
            cert = UNCERTAIN
        elif c.signature != 0:
            cert = CERTIFIED
        else:
            cert = NO_CERTIFICATE
        rows.append(InstantRow(c.t0, c.multiplicity, c.signature, c.nondegenerate and not deg, cert, c.uncertain))

    # clusters of consecutive uncertain instants: certify the interval when
    # the index jumps across it
    i = 0
    while i < len(rows):
        if rows[i].certificate != UNCERTAIN:
            i += 1
            continue
        j = i
        while j + 1 < len(rows) and rows[j + 1].certificate == UNCERTAIN:
            j += 1
        lo = rows[i].t0 - 1e-6
        hi = rows[j].t0 + 1e-6
        res = _interval_jump(sf, lo, hi, tol)
        if res is not None:
            a, b, jump = res
            inside = [r for r in rows if a < r.t0 < b]
            if jump != 0 and all(r.certificate == UNCERTAIN for r in inside):
                for k in range(i, j + 1):
                    rows[k] = _replace(rows[k], certificate=INTERVAL, interval=(a, b))
        i = j + 1

    if metric_index == 0 or (metric_index == 1 and causal):
        rows = [r if r.uncertain else _replace(r, certificate=CERTIFIED) for r in rows]
    return rows


def _replace(row: InstantRow, **kw) -> InstantRow:
    d = asdict(row)
    d.update(kw)
    return InstantRow(**d)


def run(scenario: Scenario, options: RunOptions | None = None) -> AnalysisReport:
    """Run the full chain on one scenario.

    Raises EndpointConjugateError (with the sub-interval result) when t = 1
    is conjugate or focal.
    """
    options = options or RunOptions()
    tol = options.tol_rank
    system, focal = scenario.system, scenario.focal
    timings = {}
    t_begin = time.perf_counter()

    system.validate()
    seed = initial_lagrangian(system.metric, focal).frame if focal is not None else None
    flow = integrate_flow(system, options.steps, seed=seed)
    instants = find_conjugate_instants(system, flow, tol)
    timings["flow"] = time.perf_counter() - t_begin

    degenerate = []
    failures = []
    for c in instants:
        rep = crossing_form(system, flow, c, tol)
        degenerate.append(rep.degenerate)
    try:
        maslov = maslov_index_geodesic(system, flow, instants, tol)
    except DegenerateCrossingError as exc:
        log.warning("%s", exc)
        maslov = None

    t_gal = time.perf_counter()
    basis = options.basis_spec
    sf = path_spectral_flow(system, basis, options.grid, tol, focal=focal, strict=False)
    if focal is not None:
        rel = focal_relative_index(system, focal, basis, tol, strict=False)
        correction = focal.correction(system.metric, tol)
    else:
        rel = relative_index_numeric(system, basis, tol, strict=False)
        correction = 0
    timings["galerkin"] = time.perf_counter() - t_gal

    tracked = sum(b.jump for b in sf.brackets)
    if tracked != sf.spectral_flow:
        failures.append(f"tracked crossings {tracked} != endpoint inertia difference {sf.spectral_flow}")
    if not rel.agree:
        failures.append(f"relative index definition {rel.definition} != formula {rel.formula}")
    if maslov is not None:
        if sf.spectral_flow != -maslov:
            failures.append(f"spectral flow {sf.spectral_flow} != -maslov {-maslov}")
        if rel.value - correction != maslov:
            failures.append(f"relative index {rel.value} - correction {correction} != maslov {maslov}")
        if focal is None and sf.endpoint_index != maslov:
            failures.append(f"n_-(I_1) - dim H^- = {sf.endpoint_index} != maslov {maslov}")

    rows = assign_certificates(instants, degenerate, sf, system.metric.index, options.causal, tol)
    timings["total"] = time.perf_counter() - t_begin
    return AnalysisReport(
        name=scenario.name,
        focal=focal is not None,
        instants=rows,
        maslov=maslov,
        spectral_flow=sf.spectral_flow,
        tracked_flow=tracked,
        relative_index=rel.value,
        relative_index_agree=rel.agree,
        n_minus_end=sf.n_minus_end,
        dim_h_minus=sf.dim_h_minus,
        correction=correction,
        options=options,
        failures=failures,
        timings=timings,
        det_curve=flow.det_curve(),
        eigen_table=sf.path.eigenvalue_table(),
    )


# ---------------------------------------------------------------------------
# output


def _num(x) -> str:
    return format(float(x), ".17g")


def _write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def det_curve_csv(report: AnalysisReport) -> str:
    t, det, sigma = report.det_curve
    lines = ["t,detJ,sigma_min"]
    lines += [f"{_num(a)},{_num(b)},{_num(c)}" for a, b, c in zip(t, det, sigma)]
    return "\n".join(lines) + "\n"


def eigen_path_csv(report: AnalysisReport) -> str:
    table = report.eigen_table
    dim = table.shape[1] - 1
    lines = ["s," + ",".join(f"lambda_{i}" for i in range(1, dim + 1))]
    lines += [",".join(_num(x) for x in row) for row in table]
    return "\n".join(lines) + "\n"


def crossings_csv(report: AnalysisReport) -> str:
    lines = ["t0,multiplicity,signature,nondegenerate,certificate"]
    for r in report.instants:
        lines.append(
            f"{_num(r.t0)},{r.multiplicity},{r.signature},{str(r.nondegenerate).lower()},{r.certificate}"
        )
    return "\n".join(lines) + "\n"


def report_text(report: AnalysisReport) -> str:
    o = report.options
    kind = "P-focal" if report.focal else "conjugate"
    lines = [
        f"scenario: {report.name}",
        f"case: {kind}",
        "",
        "instants:",
    ]
    if not report.instants:
        lines.append("  (none)")
    for r in report.instants:
        extra = f" on [{r.interval[0]:.6f}, {r.interval[1]:.6f}]" if r.interval else ""
        lines.append(
            f"  t0 = {r.t0:.12f}  mult {r.multiplicity}  sgn {r.signature:+d}  "
            f"{'nondegenerate' if r.nondegenerate else 'degenerate'}  {r.certificate}{extra}"
        )
    maslov = "unavailable (degenerate crossing)" if report.maslov is None else str(report.maslov)
    lines += [
        "",
        f"maslov index: {maslov}",
        f"spectral flow: {report.spectral_flow}",
        f"relative index: {report.relative_index}",
        f"n_-(I_1): {report.n_minus_end}   dim H^-: {report.dim_h_minus}",
    ]
    if report.focal:
        lines.append(f"correction n_-(g|P): {report.correction}")
    lines += [
        f"identity: {'ok' if report.identity_ok else 'FAILED' if report.identity_checked else 'not checked'}",
    ]
    lines += [f"  - {f}" for f in report.failures]
    lines += [
        "",
        "tolerances:",
        f"  rank/inertia tol: {o.tol_rank!r} (relative to spectral radius)",
        f"  flow steps: {o.steps}",
        f"  galerkin basis: {o.basis} x {o.basis_size}, s grid {o.grid}",
        f"  causal upgrade: {'on' if o.causal else 'off'}",
    ]
    return "\n".join(lines) + "\n"


def emit(report: AnalysisReport, out_dir, fmt: str = "text") -> list[Path]:
    """Write the report and the three CSV tables into ``out_dir``."""
    out = Path(out_dir)
    files = {
        "det_curve.csv": det_curve_csv(report),
        "eigen_path.csv": eigen_path_csv(report),
        "crossings.csv": crossings_csv(report),
    }
    if fmt == "json":
        files["report.json"] = json.dumps(report.summary(), indent=2) + "\n"
    elif fmt == "text":
        files["report.txt"] = report_text(report)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    written = []
    for name, text in files.items():
        _write_atomic(out / name, text)
        written.append(out / name)
    return written
