# -*- coding: utf-8 -*-

import math
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from typing import Any, Dict, List, Literal, Optional, Tuple

from dataclasses_json import dataclass_json, DataClassJsonMixin

from ldg2of.common.errors import InvalidEscapeConfig, InvalidParams


@dataclass_json
@dataclass(frozen=True)
class MaterialParams(DataClassJsonMixin):
    """Bulk coefficients a^2, b^2, c^2 and the elastic scale eps. The bulk
    potential is f = -(a2/2)|Q|^2 - (b2/3) tr Q^3 + (c2/4)|Q|^4."""
    a2: float = 1.0
    b2: float = 1.0
    c2: float = 1.0
    eps: float = 0.1

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.a2, self.b2, self.c2, self.eps)):
            raise InvalidParams(f"material parameters must be finite: {self}")
        if self.c2 <= 0.0:
            raise InvalidParams(f"c2 must be positive, got {self.c2}")
        if self.eps <= 0.0:
            raise InvalidParams(f"eps must be positive, got {self.eps}")
        if self.a2 < 0.0 or self.b2 < 0.0:
            raise InvalidParams(f"a2 and b2 must be nonnegative, got a2={self.a2} b2={self.b2}")

    @property
    def s_plus(self) -> float:
        return (self.b2 + math.sqrt(self.b2 ** 2 + 24.0 * self.a2 * self.c2)) / (4.0 * self.c2)

    @property
    def mu(self) -> float:
        return self.b2 * self.s_plus

    @property
    def nu(self) -> float:
        return self.b2 * self.s_plus / 3.0 + 2.0 * self.a2

    @property
    def f_star(self) -> float:
        s = self.s_plus
        return -self.a2 * s ** 2 / 3.0 - 2.0 * self.b2 * s ** 3 / 27.0 + self.c2 * s ** 4 / 9.0

    @property
    def hessian_bound(self) -> float:
        """Spectral bound of the bulk Hessian used for the explicit step limit."""
        s = self.s_plus
        return 2.0 * self.a2 + 3.0 * self.b2 * s + 6.0 * self.c2 * s ** 2

    def with_eps(self, eps: float) -> "MaterialParams":
        return replace(self, eps=eps)


@dataclass_json
@dataclass(frozen=True)
class DomainDescriptor(DataClassJsonMixin):
    """One of the supported simply connected domains, centred at the origin.
    The square is [-1/2, 1/2]^2; the ellipse has semi-axes rx, ry."""
    kind: Literal["disk", "square", "ellipse"] = "disk"
    rx: float = 1.0
    ry: float = 1.0

    @property
    def tag(self) -> int:
        return {"disk": 0, "square": 1, "ellipse": 2}[self.kind]

    @property
    def params(self) -> Tuple[float, float, float, float]:
        return (self.rx, self.ry, 0.0, 0.0)


@dataclass_json
@dataclass
class EscapeConfig(DataClassJsonMixin):
    """Escape points of a conformal director field of degree m."""
    m: int
    points: List[Tuple[float, float]] = field(default_factory=list)
    alpha: float = 0.0
    orientation: Literal["north", "south"] = "north"

    def __post_init__(self):
        self.points = [(float(p[0]), float(p[1])) for p in self.points]
        if self.m == 0:
            raise InvalidEscapeConfig("degree m must be nonzero")
        if len(self.points) != abs(self.m):
            raise InvalidEscapeConfig(
                f"escape point count {len(self.points)} does not match |m| = {abs(self.m)}")
        if self.orientation not in ("north", "south"):
            raise InvalidEscapeConfig(f"unknown orientation '{self.orientation}'")

    @property
    def complex_points(self) -> List[complex]:
        return [complex(x, y) for x, y in self.points]

    def points_text(self) -> str:
        return ";".join(f"{x!r},{y!r}" for x, y in self.points)


@dataclass_json
@dataclass
class FlowConfig(DataClassJsonMixin):
    """Iteration controls shared by the harmonic map and LdG gradient flows.

    A flow is converged when the residual drops below residual_tol, or below
    residual_rtol times its initial value, or when the energy decreased by less
    than energy_tol (relative) over the last `window` accepted steps."""
    step_policy: Literal["fixed", "adaptive"] = "adaptive"
    tau: Optional[float] = None
    max_iterations: int = 20000
    energy_tol: float = 1e-10
    window: int = 100
    residual_tol: float = 0.0
    residual_rtol: float = 1e-6
    initializer: Literal["corrected", "uniaxial", "lift", "input"] = "corrected"
    # Pseudo-time budget of an LdG solve: the step budget becomes
    # max(max_iterations, flow_time / tau_max)
    flow_time: Optional[float] = None
    history_every: int = 10
    checkpoint: Optional[str] = None
    checkpoint_every: int = 100


@dataclass_json
@dataclass
class SolveReport(DataClassJsonMixin):
    """Outcome of one flow. energy_history is decimated every history_every
    accepted steps and always ends with the final energy."""
    solver: str
    iterations: int = 0
    final_energy: float = math.nan
    final_residual: float = math.nan
    initial_residual: float = math.nan
    energy_history: List[float] = field(default_factory=list)
    wall_time: float = 0.0
    converged: bool = False
    status: str = "running"
    rejected_steps: int = 0
    tau_final: float = math.nan
    max_gradient: Optional[float] = None
    sign_definite: Optional[bool] = None


@dataclass_json
@dataclass
class EnergyBreakdown(DataClassJsonMixin):
    """Elastic and bulk parts of E_eps; renormalized = (total - reference) / eps^2."""
    elastic: float
    bulk: float
    total: float
    eps: float
    reference: Optional[float] = None
    renormalized: Optional[float] = None


@dataclass_json
@dataclass
class HEpsDecomposition(DataClassJsonMixin):
    """The three terms of the renormalized energy split and the mismatch to the
    directly computed value."""
    director_term: float
    h_eps_term: float
    gradient_term: float
    g_eps: float
    reconstruction_error: float


@dataclass_json
@dataclass
class ScalingFit(DataClassJsonMixin):
    """Least-squares fit over an eps ladder. exponent/residual come from the
    log-log fit of |values| against eps; coefficient is observable specific."""
    observable: str
    eps: List[float] = field(default_factory=list)
    values: List[float] = field(default_factory=list)
    exponent: float = math.nan
    coefficient: float = math.nan
    residual: float = math.nan
    note: str = ""
    prediction: Optional[float] = None
    relative_error: Optional[float] = None


@dataclass_json
@dataclass
class AcceptanceCheck(DataClassJsonMixin):
    name: str
    value: float
    target: Optional[float]
    tolerance: Optional[float]
    passed: bool
    note: str = ""


@dataclass_json
@dataclass
class ExpansionReport(DataClassJsonMixin):
    """Everything measured by one run of the eps ladder."""
    regime: Literal["b2>0", "b2=0"]
    material: MaterialParams
    eps: List[float] = field(default_factory=list)
    energies: List[float] = field(default_factory=list)
    reference_energy: float = math.nan
    prediction: float = math.nan
    branch: str = "north"
    fits: Dict[str, ScalingFit] = field(default_factory=dict)
    measurements: Dict[str, List[float]] = field(default_factory=dict)
    solves: List[SolveReport] = field(default_factory=list)
    checks: List[AcceptanceCheck] = field(default_factory=list)
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


@dataclass_json
@dataclass
class SweepRow(DataClassJsonMixin):
    cfg_id: int
    m: int
    points: str
    E0: float
    W_ldg: float
    E_eps: List[float] = field(default_factory=list)
    fit_coeff: Optional[float] = None
    fit_exponent: Optional[float] = None


@dataclass_json
@dataclass
class RunManifest(DataClassJsonMixin):
    """Provenance written next to every output file."""
    command: str
    parameters: Dict[str, Any] = field(default_factory=dict)
    domain: Optional[DomainDescriptor] = None
    resolution: Optional[int] = None
    material: Optional[MaterialParams] = None
    inputs: List[str] = field(default_factory=list)
    outputs: List[str] = field(default_factory=list)
    code_version: str = ""
    wall_time: float = 0.0
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"))
    results: Dict[str, Any] = field(default_factory=dict)


@dataclass_json
@dataclass
class LowerBound(DataClassJsonMixin):
    """A leading-order energy bound as derived here next to the printed constant."""
    derived: float
    printed: float
    note: str = ""
