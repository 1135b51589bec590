"""Data models."""

from datetime import datetime, timezone
from typing import List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, Field, computed_field, model_validator

from .carnot import CarnotPoint, GeodesicIVP, StratifiedAlgebra2, new_algebra
from .config import DEFAULT_SEED, Tolerances
from .helical import (
    CanonicalDecomposition,
    HelicalCR,
    MarkedHelicalCR,
    Q0Curve,
    Q1Curve,
)
from .skewlin import validate_skew


class MatrixModel(BaseModel):
    """Row-major matrix."""

    rows: int = Field(ge=0)
    cols: int = Field(ge=0)
    data: List[float]

    @model_validator(mode="after")
    def check_size(self) -> "MatrixModel":
        if self.rows * self.cols != len(self.data):
            raise ValueError(f"{self.rows}x{self.cols} matrix needs {self.rows * self.cols} entries, got {len(self.data)}")
        return self

    def to_array(self) -> np.ndarray:
        return np.array(self.data, dtype=float).reshape(self.rows, self.cols)

    @classmethod
    def from_array(cls, a) -> "MatrixModel":
        a = np.atleast_2d(np.asarray(a, dtype=float))
        return cls(rows=a.shape[0], cols=a.shape[1], data=a.ravel().tolist())


def _floats(x) -> List[float]:
    return np.asarray(x, dtype=float).ravel().tolist()


class HelicalModel(BaseModel):
    """Helical structure, optionally marked by (v, v0, w0)."""

    A: MatrixModel
    w: List[float] = Field(default_factory=list)
    basis: Optional[MatrixModel] = None
    v: Optional[List[float]] = None
    v0: Optional[List[float]] = None
    w0: Optional[List[float]] = None

    @property
    def marked(self) -> bool:
        return self.v is not None

    def to_domain(self) -> HelicalCR:
        basis = self.basis.to_array() if self.basis is not None else None
        return HelicalCR(validate_skew(self.A.to_array()), self.w, basis)

    def to_marked(self) -> MarkedHelicalCR:
        if self.v is None:
            raise ValueError("marked structure needs v")
        h = self.to_domain()
        v0 = self.v0 if self.v0 is not None else np.zeros(2 * h.n)
        w0 = self.w0 if self.w0 is not None else np.zeros(h.p)
        return MarkedHelicalCR(h, self.v, v0, w0)

    @classmethod
    def from_domain(cls, h: Union[HelicalCR, MarkedHelicalCR]) -> "HelicalModel":
        if isinstance(h, MarkedHelicalCR):
            return cls(
                **cls.from_domain(h.base).model_dump(exclude={"v", "v0", "w0"}),
                v=_floats(h.v),
                v0=_floats(h.v0),
                w0=_floats(h.w0),
            )
        basis = None if np.array_equal(h.basis, np.eye(h.d)) else MatrixModel.from_array(h.basis)
        return cls(A=MatrixModel.from_array(h.A.array), w=_floats(h.w), basis=basis)


class CurveModel(BaseModel):
    """Q0 curve, or Q1 curve when v0 is present."""

    A: MatrixModel
    v: List[float]
    w: List[float] = Field(default_factory=list)
    v0: Optional[List[float]] = None
    w0: Optional[List[float]] = None
    basis: Optional[MatrixModel] = None

    @property
    def kind(self) -> Literal["Q0", "Q1"]:
        return "Q0" if self.v0 is None else "Q1"

    def to_domain(self) -> Union[Q0Curve, Q1Curve]:
        basis = self.basis.to_array() if self.basis is not None else None
        h = HelicalCR(validate_skew(self.A.to_array()), self.w, basis)
        if self.v0 is None:
            return Q0Curve(h, self.v)
        return Q1Curve(h, self.v, self.v0, self.w0 if self.w0 is not None else np.zeros(h.p))

    @classmethod
    def from_domain(cls, c: Union[Q0Curve, Q1Curve]) -> "CurveModel":
        h = c.structure
        fields = HelicalModel.from_domain(h).model_dump(include={"A", "w", "basis"})
        if isinstance(c, Q1Curve):
            return cls(**fields, v=_floats(c.v), v0=_floats(c.v0), w0=_floats(c.w0))
        return cls(**fields, v=_floats(c.v))


class AlgebraModel(BaseModel):
    m: int = Field(ge=1)
    p: int = Field(ge=1)
    C: List[MatrixModel]

    @model_validator(mode="after")
    def check_shapes(self) -> "AlgebraModel":
        if len(self.C) != self.p:
            raise ValueError(f"p={self.p} but {len(self.C)} structure matrices given")
        if any(c.rows != self.m or c.cols != self.m for c in self.C):
            raise ValueError(f"structure matrices must be {self.m}x{self.m}")
        return self

    def to_domain(self) -> StratifiedAlgebra2:
        return new_algebra([c.to_array() for c in self.C])

    @classmethod
    def from_domain(cls, g: StratifiedAlgebra2) -> "AlgebraModel":
        return cls(m=g.m, p=g.p, C=[MatrixModel.from_array(c) for c in g.C])


class CarnotPointModel(BaseModel):
    x: List[float]
    t: List[float]

    def to_domain(self) -> CarnotPoint:
        return CarnotPoint(self.x, self.t)

    @classmethod
    def from_domain(cls, P: CarnotPoint) -> "CarnotPointModel":
        return cls(x=_floats(P.x), t=_floats(P.t))


class IVPModel(BaseModel):
    x0: List[float]
    t0: List[float]
    xi0: List[float]
    tau0: List[float]

    def to_domain(self) -> GeodesicIVP:
        return GeodesicIVP(self.x0, self.t0, self.xi0, self.tau0)

    @classmethod
    def from_domain(cls, ivp: GeodesicIVP) -> "IVPModel":
        return cls(x0=_floats(ivp.x0), t0=_floats(ivp.t0), xi0=_floats(ivp.xi0), tau0=_floats(ivp.tau0))


class InjectivityReport(BaseModel):
    """Verdict of the periodicity test; injective is None when inconclusive."""

    injective: Optional[bool] = None
    period: Optional[float] = None
    detail: Optional[str] = None


class DecompositionReport(BaseModel):
    n: int
    p: int
    frequencies: List[float]
    amplitudes: List[float]
    v: List[float]
    w: List[float]
    Q: MatrixModel
    degenerate: bool = False
    injectivity: InjectivityReport = Field(default_factory=InjectivityReport)
    fit_residual: Optional[float] = None

    @classmethod
    def from_domain(
        cls, dec: CanonicalDecomposition, injectivity: Optional[InjectivityReport] = None
    ) -> "DecompositionReport":
        return cls(
            n=len(dec.frequencies),
            p=dec.vertical_dim,
            frequencies=_floats(dec.frequencies),
            amplitudes=_floats(dec.amplitudes),
            v=_floats(dec.v),
            w=_floats(dec.w),
            Q=MatrixModel.from_array(dec.change_of_basis),
            degenerate=dec.degenerate,
            injectivity=injectivity or InjectivityReport(),
        )


class SuiteResult(BaseModel):
    name: str
    passed: bool
    cases: int = Field(0, ge=0)
    max_residual: float = 0.0
    failures: List[str] = Field(default_factory=list)


class VerificationReport(BaseModel):
    id: Optional[str] = None
    seed: int = DEFAULT_SEED
    quick: bool = False
    created_at: str = Field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
    tolerances: Tolerances = Field(default_factory=Tolerances)
    suites: List[SuiteResult] = Field(default_factory=list)

    @computed_field
    @property
    def passed(self) -> bool:
        return all(s.passed for s in self.suites)


class SRange(BaseModel):
    """start:end:samples."""

    start: float
    end: float
    samples: int = Field(ge=2)

    @model_validator(mode="after")
    def check_order(self) -> "SRange":
        if not self.start < self.end:
            raise ValueError(f"range start {self.start} must be below end {self.end}")
        return self

    @classmethod
    def parse(cls, text: str) -> "SRange":
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"range must look like a:b:n, got {text!r}")
        return cls(start=float(parts[0]), end=float(parts[1]), samples=int(parts[2]))

    def grid(self) -> np.ndarray:
        return np.linspace(self.start, self.end, self.samples)


CorrespondenceMode = Literal[
    "helical-to-group",
    "group-to-helical",
    "tuple-to-group",
    "group-to-tuple",
    "marked-to-geodesic",
    "geodesic-to-marked",
]


class RunConfig(BaseModel):
    command: Literal["gamma", "geodesic", "decompose", "correspond", "verify"]
    inputs: List[str] = Field(default_factory=list)
    out: Optional[str] = None
    s_range: Optional[SRange] = None
    tolerances: Tolerances = Field(default_factory=Tolerances)
    seed: int = DEFAULT_SEED
    mode: Optional[CorrespondenceMode] = None
    check: bool = False


# Request bodies


class GeodesicRequest(BaseModel):
    algebra: AlgebraModel
    ivp: IVPModel
    s_range: SRange = Field(default_factory=lambda: SRange(start=0.0, end=2 * np.pi, samples=65))


class DecomposeRequest(BaseModel):
    """Either a generator A with initial point u0, or sampled points."""

    A: Optional[MatrixModel] = None
    u0: Optional[List[float]] = None
    s: Optional[List[float]] = None
    points: Optional[List[List[float]]] = None
    max_freqs: int = Field(4, ge=1)

    @model_validator(mode="after")
    def check_source(self) -> "DecomposeRequest":
        generator = self.A is not None and self.u0 is not None
        sampled = self.s is not None and self.points is not None
        if generator == sampled:
            raise ValueError("give exactly one of (A, u0) or (s, points)")
        if sampled and len(self.s) != len(self.points):
            raise ValueError("s and points differ in length")
        return self


class VerifyRequest(BaseModel):
    seed: int = DEFAULT_SEED
    quick: bool = True
    suites: Optional[List[str]] = None
    tolerances: Optional[Tolerances] = None
