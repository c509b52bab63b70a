"""Machine- and human-readable run reports with stable, reproducible bytes."""

from __future__ import annotations

import json
from dataclasses import dataclass

FORMATS = ("json", "csv", "text")


def _sig6(x: float) -> float:
    """Round to 6 significant digits; survives a json round-trip losslessly."""
    return float(f"{x:.6g}")


def _fmt(x: float | None) -> str:
    return "" if x is None else f"{x:.6g}"


@dataclass(frozen=True)
class Variable:
    """One reported quantity with its acceptance target.

    ``passed`` is None for purely informational rows; those never fail a run.
    """

    name: str
    mean: float
    se: float | None = None
    target: float | None = None
    tolerance: float | None = None
    passed: bool | None = None

    @classmethod
    def checked(
        cls, name: str, mean: float, se: float | None, target: float, tolerance: float
    ) -> Variable:
        return cls(name, mean, se, target, tolerance, abs(mean - target) <= tolerance)

    @classmethod
    def info(cls, name: str, mean: float, se: float | None = None) -> Variable:
        return cls(name, mean, se, None, None, None)


@dataclass
class RunReport:
    command: str
    config: dict[str, object]
    variables: list[Variable]
    catalog_size: int | None = None
    duration_s: float | None = None  # reported on stderr only, never in the body

    @property
    def all_passed(self) -> bool:
        return all(v.passed is not False for v in self.variables)


def emit_report(report: RunReport, fmt: str) -> str:
    """Render a report for stdout; bytes depend only on the report content."""
    if fmt == "json":
        return _emit_json(report)
    if fmt == "csv":
        return _emit_csv(report)
    if fmt == "text":
        return _emit_text(report)
    raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")


def _variable_dict(v: Variable) -> dict[str, object]:
    return {
        "variable": v.name,
        "mean": _sig6(v.mean),
        "se": None if v.se is None else _sig6(v.se),
        "target": None if v.target is None else _sig6(v.target),
        "tolerance": None if v.tolerance is None else _sig6(v.tolerance),
        "pass": v.passed,
    }


def _emit_json(report: RunReport) -> str:
    body = {
        "command": report.command,
        "config": {k: report.config[k] for k in sorted(report.config)},
        "catalog_size": report.catalog_size,
        "variables": [_variable_dict(v) for v in report.variables],
        "all_passed": report.all_passed,
    }
    return json.dumps(body, indent=2)


def _emit_csv(report: RunReport) -> str:
    lines = ["variable,mean,se,target,tolerance,pass"]
    for v in report.variables:
        passed = "" if v.passed is None else str(v.passed).lower()
        lines.append(
            f"{v.name},{_fmt(v.mean)},{_fmt(v.se)},{_fmt(v.target)},{_fmt(v.tolerance)},{passed}"
        )
    return "\n".join(lines)


def _emit_text(report: RunReport) -> str:
    lines = [f"# {report.command}"]
    for key in sorted(report.config):
        lines.append(f"  {key} = {report.config[key]}")
    if report.catalog_size is not None:
        lines.append(f"  catalog size = {report.catalog_size}")
    if not report.variables:
        lines.append("(no variables)")
        return "\n".join(lines)
    rows = [("variable", "mean", "se", "target", "tolerance", "pass")]
    for v in report.variables:
        passed = "-" if v.passed is None else ("pass" if v.passed else "FAIL")
        rows.append((v.name, _fmt(v.mean), _fmt(v.se), _fmt(v.target), _fmt(v.tolerance), passed))
    widths = [max(len(r[i]) for r in rows) for i in range(6)]
    for r in rows:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(r)).rstrip())
    lines.append("result: " + ("PASS" if report.all_passed else "FAIL"))
    return "\n".join(lines)
