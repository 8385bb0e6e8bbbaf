"""Builtin Morse-Sturm scenarios with closed-form expected results.

Constant diagonal curvature R = diag(-L_a^2) decouples into scalar equations
J'' = -L^2 J.  With J(0) = 0 the component vanishes at t = m pi / L; with the
focal condition J'(0) = 0 at t = (m + 1/2) pi / L.  The signature of each
instant is the sign of g on the axis that vanishes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .focal import FocalBoundary
from .geodesics import BifurcationWitness, SurfaceOfRevolution, find_bifurcation_witness, shoot_geodesic  # noqa: F401
from .morse_sturm import CurvatureCurve, MetricForm, MorseSturmSystem

PI = np.pi


@dataclass(frozen=True)
class ExpectedInstant:
    t0: float
    multiplicity: int
    signature: int
    nondegenerate: bool = True


@dataclass(frozen=True)
class Expected:
    """Ground truth; ``provenance`` maps field name to TRIVIAL or DERIVED."""

    instants: tuple[ExpectedInstant, ...]
    maslov: int
    spectral_flow: int
    correction: int = 0
    certificates: tuple[str, ...] = ()
    provenance: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class Scenario:
    name: str
    system: MorseSturmSystem
    focal: FocalBoundary | None = None
    expected: Expected | None = None
    description: str = ""

    def __post_init__(self):
        self.system.validate()
        if self.focal is not None:
            self.focal.validate(self.system.metric)

    @property
    def is_focal(self) -> bool:
        return self.focal is not None


def _diag(metric, lengths) -> MorseSturmSystem:
    return MorseSturmSystem(
        MetricForm(metric), CurvatureCurve.constant(np.diag([-(l * l) for l in lengths]))
    )


def flat() -> Scenario:
    return Scenario(
        "flat",
        MorseSturmSystem(MetricForm([-1.0, 1.0]), CurvatureCurve.constant(np.zeros((2, 2)))),
        expected=Expected((), 0, 0, provenance={"maslov": "TRIVIAL"}),
        description="R = 0 with a Lorentzian metric: J(t) = t g^-1 never degenerates",
    )


def sphere() -> Scenario:
    return Scenario(
        "sphere",
        _diag([1.0], [1.5 * PI]),
        expected=Expected(
            (ExpectedInstant(2.0 / 3.0, 1, 1),),
            1,
            -1,
            certificates=("bifurcation-certified",),
            provenance={"instants": "DERIVED", "maslov": "DERIVED"},
        ),
        description="scalar g = 1, R = -(1.5 pi)^2: sin(1.5 pi t) vanishes at 2/3",
    )


def split_lorentzian() -> Scenario:
    return Scenario(
        "split-lorentzian",
        _diag([-1.0, 1.0], [1.5 * PI, 2.5 * PI]),
        expected=Expected(
            (
                ExpectedInstant(0.4, 1, 1),
                ExpectedInstant(2.0 / 3.0, 1, -1),
                ExpectedInstant(0.8, 1, 1),
            ),
            1,
            -1,
            certificates=("bifurcation-certified",) * 3,
            provenance={"instants": "DERIVED", "maslov": "DERIVED"},
        ),
        description="g = diag(-1, 1), R = diag(-(1.5 pi)^2, -(2.5 pi)^2)",
    )


def degenerate_signature() -> Scenario:
    return Scenario(
        "degenerate-signature",
        _diag([-1.0, 1.0], [1.5 * PI, 1.5 * PI]),
        expected=Expected(
            (ExpectedInstant(2.0 / 3.0, 2, 0),),
            0,
            0,
            certificates=("no-certificate",),
            provenance={"instants": "DERIVED", "maslov": "DERIVED"},
        ),
        description="both axes vanish together at 2/3; g on the kernel is diag(-1, 1)",
    )


def equator_focal() -> Scenario:
    return Scenario(
        "equator-focal",
        _diag([1.0], [0.75 * PI]),
        FocalBoundary(np.eye(1), np.zeros((1, 1))),
        expected=Expected(
            (ExpectedInstant(2.0 / 3.0, 1, 1),),
            1,
            -1,
            certificates=("bifurcation-certified",),
            provenance={"instants": "DERIVED", "maslov": "DERIVED"},
        ),
        description="totally geodesic initial submanifold: cos(0.75 pi t) vanishes at 2/3",
    )


def timelike_focal() -> Scenario:
    return Scenario(
        "timelike-focal",
        _diag([-1.0, 1.0], [0.75 * PI, 0.5 * PI]),
        FocalBoundary(np.array([[1.0], [0.0]]), np.zeros((1, 1))),
        expected=Expected(
            (ExpectedInstant(2.0 / 3.0, 1, -1),),
            -1,
            1,
            correction=1,
            certificates=("bifurcation-certified",),
            provenance={"instants": "DERIVED", "maslov": "DERIVED", "correction": "TRIVIAL"},
        ),
        description="initial submanifold tangent to the timelike axis: g on it is -1",
    )


BUILTINS = {
    "flat": flat,
    "sphere": sphere,
    "split-lorentzian": split_lorentzian,
    "degenerate-signature": degenerate_signature,
    "equator-focal": equator_focal,
    "timelike-focal": timelike_focal,
}


def builtin_scenarios() -> list[Scenario]:
    return [make() for make in BUILTINS.values()]


def builtin(name: str) -> Scenario:
    try:
        return BUILTINS[name]()
    except KeyError:
        raise KeyError(f"unknown builtin {name!r}; choose from {', '.join(BUILTINS)}") from None

