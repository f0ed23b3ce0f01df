from fractions import Fraction
from typing import Any, Dict, Iterable, List, Sequence, Tuple

from .frobenius_lab import FitModel, KummerCounts, MomentReport, ResidualReport, TraceTable


def render_value(value: Any) -> str:
    """
    Exact rendering: integers as digits, rationals as num/den.
    """
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, Fraction):
        return str(value)
    return str(value)


def render_mapping(title: str, mapping: Dict[str, Any]) -> List[str]:
    """
    One indented line per entry; float entries are skipped so reports stay exact.
    """
    lines = [title]
    for key, value in mapping.items():
        if isinstance(value, float):
            continue
        lines.append(f"  {key}: {render_value(value)}")
    return lines


def render_polynomial(coefficients: Sequence[int], variable: str = "T") -> str:
    """
    Integer coefficients of 1, T, T^2, ... as "1 - 2*T + 5*T^2".
    """
    pieces: List[str] = []
    for degree, c in enumerate(coefficients):
        if c == 0:
            continue
        monomial = "" if degree == 0 else (variable if degree == 1 else f"{variable}^{degree}")
        magnitude = abs(c)
        body = str(magnitude) if not monomial else (monomial if magnitude == 1 else f"{magnitude}*{monomial}")
        if not pieces:
            pieces.append(body if c > 0 else f"-{body}")
        else:
            pieces.append(("+ " if c > 0 else "- ") + body)
    return " ".join(pieces) if pieces else "0"


def render_table(table: TraceTable) -> List[str]:
    lines = [f"family {table.family_id} p={table.p} fibres={len(table.records)}",
             "param count a singular"]
    for record in table.records:
        lines.append(f"{record.param} {record.count} {record.trace} {render_value(record.singular)}")
    return lines


def render_moment(report: MomentReport) -> List[str]:
    return [
        f"family {report.family_id} p={report.p} r={report.exponent}: "
        f"M={report.total} M_smooth={report.smooth} singular_fibres={report.singular_fibres} "
        f"fibres={report.fibres}"
    ]


def render_model(model: FitModel) -> List[str]:
    lines = [f"model {model.family_id} r={model.exponent} form {model.newform_label}",
             "  fit primes: " + ",".join(str(p) for p in model.fit_primes)]
    for name, c in zip(model.basis, model.coefficients):
        lines.append(f"  {name}: {render_value(c)}")
    return lines


def render_residuals(report: ResidualReport) -> List[str]:
    lines = [f"residuals {report.family_id}"]
    for p, residual in report.residuals:
        moment_text = f" M={report.moments[p]}" if p in report.moments else ""
        lines.append(f"  p={p}{moment_text} residual={render_value(residual)}")
    lines.append("  all zero: " + render_value(report.success))
    return lines


def render_kummer(A: int, B: int, p: int, counts: KummerCounts, oracle: Tuple[int, int]) -> List[str]:
    return [
        f"kummer A={A} B={B} p={p}",
        f"  a: {counts.a}",
        f"  f2: {counts.f2}",
        f"  singular quotient: {counts.singular_quotient_count} (orbits {oracle[0]})",
        f"  smooth model: {counts.smooth_model_count} (orbits {oracle[1]})",
    ]


def join_report(lines: Iterable[str]) -> str:
    return "\n".join(lines) + "\n"
