"""Command implementations shared by the CLI and the HTTP routes."""

import logging
import warnings
from contextlib import contextmanager
from typing import Any, Dict, Iterator, List, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike

from .carnot import (
    algebra_to_helical,
    algebra_to_tuple,
    assemble_from_tuple,
    helical_to_algebra,
)
from .errors import DegenerateHorizontal, HelicalError, Inconclusive, SingularATau, UnnormalizedTau
from .geodesic import (
    NormalGeodesic,
    geodesic_to_marked_helical,
    marked_helical_to_geodesic,
    trajectory_table,
)
from .helical import (
    ambient_generator,
    decompose,
    equivalent,
    eval_q0,
    fit_from_samples,
    is_injective,
)
from .homcurves import gamma_m_samples
from .models import (
    AlgebraModel,
    CorrespondenceMode,
    CurveModel,
    DecompositionReport,
    HelicalModel,
    InjectivityReport,
    IVPModel,
    MatrixModel,
    SRange,
)
from .skewlin import imaginary_spectrum, validate_skew

logger = logging.getLogger(__name__)

Table = Tuple[List[str], np.ndarray]
Notes = List[Dict[str, str]]


@contextmanager
def collect_notes(*categories: type) -> Iterator[Notes]:
    """Turn warnings of the given categories into {"warning", "message"} notes."""
    notes: Notes = []
    with warnings.catch_warnings(record=True) as caught:
        for category in categories:
            warnings.simplefilter("always", category)
        yield notes
    notes.extend(
        {"warning": type(w.message).__name__, "message": str(w.message)}
        for w in caught
        if issubclass(w.category, categories)
    )


def gamma_table(m: int, s_range: SRange) -> Table:
    """Columns s, gamma0..gamma{m}."""
    grid = s_range.grid()
    header = ["s"] + [f"gamma{j}" for j in range(m + 1)]
    return header, np.column_stack([grid, gamma_m_samples(m, grid)])


def geodesic_table(
    algebra: AlgebraModel, ivp: IVPModel, s_range: SRange
) -> Tuple[List[str], np.ndarray, Notes]:
    """Trajectory table plus structured warnings raised while solving."""
    g = algebra.to_domain()
    with collect_notes(SingularATau) as notes:
        geodesic = NormalGeodesic(g, ivp.to_domain())
    header, rows = trajectory_table(geodesic, s_range.grid())
    logger.info(f"geodesic case {geodesic.case.value}, {len(rows)} rows")
    return header, rows, notes


def _injectivity(target) -> InjectivityReport:
    try:
        verdict = is_injective(target)
    except Inconclusive as exc:
        return InjectivityReport(detail=str(exc))
    except DegenerateHorizontal as exc:
        return InjectivityReport(detail=str(exc))
    return InjectivityReport(injective=verdict.injective, period=verdict.period)


def decompose_generator(A: ArrayLike, u0: ArrayLike) -> DecompositionReport:
    dec, _ = decompose(validate_skew(A), u0)
    return DecompositionReport.from_domain(dec, _injectivity(dec))


def decompose_samples(samples: Sequence[Tuple[float, ArrayLike]], max_freqs: int = 4) -> DecompositionReport:
    curve = fit_from_samples(samples, max_freqs=max_freqs)
    dec, _ = decompose(ambient_generator(curve), eval_q0(curve, 0.0))
    residual = float(
        np.sqrt(np.mean([np.sum((eval_q0(curve, s) - np.asarray(p)) ** 2) for s, p in samples]))
    )
    report = DecompositionReport.from_domain(dec, _injectivity(dec))
    report.fit_residual = residual
    return report


# Correspondences


def _max_gap(pairs) -> float:
    gaps = [float(np.abs(np.asarray(a) - np.asarray(b)).max()) for a, b in pairs if np.size(a)]
    return max(gaps, default=0.0)


def _helical_to_group(document: Dict[str, Any], check: bool) -> Dict[str, Any]:
    h = HelicalModel(**document).to_domain()
    g, embedding = helical_to_algebra(h)
    result: Dict[str, Any] = {"algebra": AlgebraModel.from_domain(g).model_dump(), "axis": embedding.axis.tolist()}
    if check:
        back = algebra_to_helical(g, h.w)
        same, lam = equivalent(h, back)
        spectra = _max_gap([(imaginary_spectrum(h.A), imaginary_spectrum(back.A))])
        result["residual"] = max(_max_gap([(h.A.array, back.A.array)]), spectra)
        result["equivalent"] = same and lam is not None and abs(lam - 1.0) <= 1e-9
    return result


def _group_to_helical(document: Dict[str, Any], check: bool) -> Dict[str, Any]:
    g = AlgebraModel(**document["algebra"]).to_domain()
    h = algebra_to_helical(g, document["w"])
    result: Dict[str, Any] = {"helical": HelicalModel.from_domain(h).model_dump()}
    if check:
        back, _ = helical_to_algebra(h)
        # C^1 may have a kernel, so compare frequencies rather than matrices
        result["residual"] = _max_gap(
            [(g.structure(0).spectral.frequencies, back.structure(0).spectral.frequencies)]
        )
    return result


def _tuple_to_group(document: Dict[str, Any], check: bool) -> Dict[str, Any]:
    curves = [CurveModel(**c).to_domain() for c in document["curves"]]
    assembled = assemble_from_tuple(curves)
    result: Dict[str, Any] = {
        "algebra": AlgebraModel.from_domain(assembled.algebra).model_dump(),
        "ivps": [IVPModel.from_domain(ivp).model_dump() for ivp in assembled.ivps],
        "vertical_basis": MatrixModel.from_array(assembled.vertical_basis).model_dump(),
    }
    if check:
        back = algebra_to_tuple(assembled.algebra, assembled.ivps)
        result["residual"] = _max_gap(
            [(c.structure.A.array, b.structure.A.array) for c, b in zip(curves, back)]
            + [(c.v, b.v) for c, b in zip(curves, back)]
            + [(c.v0, b.v0) for c, b in zip(curves, back)]
        )
    return result


def _group_to_tuple(document: Dict[str, Any], check: bool) -> Dict[str, Any]:
    g = AlgebraModel(**document["algebra"]).to_domain()
    ivps = [IVPModel(**i).to_domain() for i in document["ivps"]]
    curves = algebra_to_tuple(g, ivps)
    result: Dict[str, Any] = {"curves": [CurveModel.from_domain(c).model_dump() for c in curves]}
    if check:
        try:
            back = assemble_from_tuple(curves)
        except HelicalError as exc:
            logger.warning(f"round trip not available: {exc}")
            result["residual"] = None
            result["residual_detail"] = f"{type(exc).__name__}: {exc}"
        else:
            if back.algebra.C.shape != g.C.shape:
                detail = f"structure matrices have kernels; round trip gives type ({back.algebra.m}, {back.algebra.p})"
                logger.warning(detail)
                result["residual"] = None
                result["residual_detail"] = detail
            else:
                result["residual"] = _max_gap([(g.C, back.algebra.C)])
    return result


def _marked_to_geodesic(document: Dict[str, Any], check: bool) -> Dict[str, Any]:
    mh = HelicalModel(**document).to_marked()
    g, ivp = marked_helical_to_geodesic(mh)
    result: Dict[str, Any] = {
        "algebra": AlgebraModel.from_domain(g).model_dump(),
        "ivp": IVPModel.from_domain(ivp).model_dump(),
    }
    if check:
        back = geodesic_to_marked_helical(g, ivp, mh.base.w)
        result["residual"] = _max_gap([(mh.v, back.v), (mh.u0, back.u0)])
    return result


def _geodesic_to_marked(document: Dict[str, Any], check: bool) -> Dict[str, Any]:
    g = AlgebraModel(**document["algebra"]).to_domain()
    ivp = IVPModel(**document["ivp"]).to_domain()
    with collect_notes(UnnormalizedTau) as notes:
        mh = geodesic_to_marked_helical(g, ivp, document["w"])
    result: Dict[str, Any] = {"helical": HelicalModel.from_domain(mh).model_dump(), "warnings": notes}
    if check:
        _, back = marked_helical_to_geodesic(mh)
        if len(back.x0) != len(ivp.x0):
            detail = "C^1 has a kernel; the marked structure lives on its coimage"
            logger.warning(detail)
            result["residual"] = None
            result["residual_detail"] = detail
        else:
            result["residual"] = _max_gap([(ivp.x0, back.x0), (ivp.t0, back.t0), (ivp.xi0, back.xi0)])
    return result


_CORRESPONDENCES = {
    "helical-to-group": _helical_to_group,
    "group-to-helical": _group_to_helical,
    "tuple-to-group": _tuple_to_group,
    "group-to-tuple": _group_to_tuple,
    "marked-to-geodesic": _marked_to_geodesic,
    "geodesic-to-marked": _geodesic_to_marked,
}


def correspond(mode: CorrespondenceMode, document: Dict[str, Any], check: bool = False) -> Dict[str, Any]:
    """Run one correspondence; with check, add the round-trip residual."""
    result = _CORRESPONDENCES[mode](document, check)
    result["mode"] = mode
    if check and result.get("residual") is not None:
        logger.info(f"{mode} round-trip residual {result['residual']:.3e}")
    return result


def correspondence_modes() -> List[str]:
    return list(_CORRESPONDENCES)
