"""Command-line front door: run experiments, emit reports, check acceptance.

Every option is a flag with a documented default; stdout carries only the
report (json, csv or text), stderr carries diagnostics such as timing.  Exit
codes: 0 all targets met, 1 a target failed, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import acceptance as acceptance_suite
from . import experiments, pom
from .experiments import (
    CHSH_SETTING_NAMES,
    CONTEXT_TARGETS,
    TSIRELSON_BOUND,
    MerminPeresSquare,
    prepare_cabello,
    prepare_chsh,
)
from .linalg import DensityOperator, HermitianOperator, pauli
from .model import new_catalog, resolve_target
from .pom import QUANTUM_SUCCESS_RATE, UNWRAPPED_PARITY_RATE
from .report import FORMATS, RunReport, Variable, emit_report
from .stats import Tally

DEFAULT_SHOTS = 100_000
DEFAULT_SEED = 0
DEFAULT_EPSILON = 1e-3
CHUNK_SIZE = 10_000

_CHUNK_FNS = {
    "cabello-single": experiments.cabello_single_chunk,
    "cabello-sequential": experiments.cabello_sequential_chunk,
    "chsh-toy": experiments.chsh_chunk,
    "mixture": experiments.mixture_chunk,
    "pom-quantum": pom.quantum_chunk,
    "pom-classical": pom.classical_chunk,
    "pom-box": pom.box_chunk,
}


def _chunk_entry(task: tuple) -> Tally:
    name, params, lo, hi = task
    return _CHUNK_FNS[name](params, lo, hi)


def _run_tally(name: str, params: dict, shots: int, workers: int) -> Tally:
    """Run a shot loop, optionally fanned out over a process pool.

    Chunk boundaries are fixed (independent of pool size) and all tallied
    values are integer-valued, so the merged result is bit-identical for any
    worker count.
    """
    if workers <= 1:
        return _CHUNK_FNS[name](params, 0, shots)
    spans = [(lo, min(lo + CHUNK_SIZE, shots)) for lo in range(0, shots, CHUNK_SIZE)]
    tasks = [(name, params, lo, hi) for lo, hi in spans]
    merged = Tally()
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for tally in pool.map(_chunk_entry, tasks):
            merged.merge(tally)
    return merged


def _cabello_rho(state_name: str) -> DensityOperator:
    if state_name == "maximally-mixed":
        return DensityOperator.maximally_mixed(4)
    vec = np.zeros(4, dtype=complex)
    vec[0] = 1.0
    return DensityOperator.pure(vec)


def _cabello_variables(result: experiments.CabelloResult) -> list[Variable]:
    out = []
    for name, mean, se in zip(result.context_names, result.expectations, result.standard_errors):
        band = max(4.0 * se, 0.02)
        out.append(Variable.checked(f"E_{name}", mean, se, CONTEXT_TARGETS[name], band))
    out.append(
        Variable.checked(
            "cabello_sum",
            result.cabello_sum,
            result.cabello_sum_se,
            6.0,
            max(4.0 * result.cabello_sum_se, 0.02),
        )
    )
    out.append(Variable.checked("product_violations", float(result.product_violations), None, 0.0, 0.0))
    return out


def _handle_cabello_single(args) -> tuple[list[Variable], int]:
    rho = _cabello_rho(args.state)
    params = {
        "epsilon": args.epsilon,
        "catalog_seed": args.seed,
        "rho": rho.matrix,
        "seed": args.seed,
    }
    tally = _run_tally("cabello-single", params, args.shots, args.parallel)
    cat = new_catalog(4, args.epsilon, args.seed)
    prepare_cabello(cat, MerminPeresSquare.standard())
    result = experiments._finalize_cabello(tally, args.shots, len(cat))
    return _cabello_variables(result), len(cat)


def _handle_cabello_sequential(args) -> tuple[list[Variable], int]:
    rho = _cabello_rho(args.state)
    collapse = not args.no_collapse
    params = {
        "epsilon": args.epsilon,
        "catalog_seed": args.seed,
        "rho": rho.matrix,
        "seed": args.seed,
        "collapse": collapse,
        "ordering": experiments._SEQUENTIAL_ORDER,
    }
    tally = _run_tally("cabello-sequential", params, args.shots, args.parallel)
    cat = new_catalog(4, args.epsilon, args.seed)
    prepare_cabello(cat, MerminPeresSquare.standard())
    result = experiments._finalize_cabello(tally, args.shots, len(cat))
    agreement = tally.mean("a11_agree")
    variables = _cabello_variables(result)
    if collapse:
        variables.append(Variable.checked("a11_agreement_rate", agreement, None, 1.0, 0.001))
    else:
        variables.append(Variable.info("a11_agreement_rate", agreement))
    return variables, len(cat)


def _handle_chsh(args) -> tuple[list[Variable], int]:
    params = {"epsilon": args.epsilon, "catalog_seed": args.seed, "seed": args.seed}
    tally = _run_tally("chsh-toy", params, args.shots, args.parallel)
    cat = new_catalog(9, args.epsilon, args.seed)
    prepare_chsh(cat)
    result = experiments._finalize_chsh(tally, args.shots, len(cat))
    targets = {"AB": 1.0, "ABp": 1.0, "ApB": 1.0, "ApBp": -1.0}
    variables = []
    for name, mean, se in zip(CHSH_SETTING_NAMES, result.correlators, result.standard_errors):
        variables.append(Variable.checked(f"E_{name}", mean, se, targets[name], max(4.0 * se, 0.02)))
    variables.append(Variable.checked("chsh_value", result.chsh_value, result.chsh_se, 4.0, 0.02))
    margin = result.chsh_value - TSIRELSON_BOUND
    variables.append(Variable("tsirelson_margin", margin, None, None, None, margin > 0.0))
    return variables, len(cat)


def _mixture_projectors() -> tuple[HermitianOperator, HermitianOperator]:
    p1 = HermitianOperator(np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex))
    p2 = HermitianOperator(np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex))
    return p1, p2


def _handle_mixture(args) -> tuple[list[Variable], int]:
    p1, p2 = _mixture_projectors()
    params = {
        "dim": 2,
        "epsilon": args.epsilon,
        "catalog_seed": args.seed,
        "p1": p1.matrix,
        "p2": p2.matrix,
        "seed": args.seed,
    }
    tally = _run_tally("mixture", params, args.shots, args.parallel)
    overlap = float(np.trace(p1.matrix @ p2.matrix).real)
    cat = new_catalog(2, args.epsilon, args.seed)
    experiments.mixture_setup(cat, p1, p2)
    result = experiments._finalize_mixture(tally, overlap, args.shots, len(cat))
    variables = [
        Variable.checked(
            "joint_rho", result.empirical_lhs, result.empirical_lhs_se,
            result.analytic_lhs, 4.0 * result.empirical_lhs_se,
        ),
        Variable.checked(
            "joint_mixture", result.empirical_rhs, result.empirical_rhs_se,
            result.analytic_rhs, 4.0 * result.empirical_rhs_se,
        ),
    ]
    for idx in range(2):
        m_rho, se_rho = result.rho_marginals[idx]
        m_mix, se_mix = result.mixture_marginals[idx]
        gap_se = math.sqrt(se_rho**2 + se_mix**2)
        variables.append(
            Variable.checked(f"marginal_gap_{idx + 1}", m_rho - m_mix, gap_se, 0.0, 4.0 * gap_se)
        )
    return variables, len(cat)


def _pom_variables(result: pom.PomRunResult, success_target: float, parity_target: float,
                   exact_success: bool = False) -> list[Variable]:
    success_band = 0.0 if exact_success else 4.0 * result.success_se
    return [
        Variable.checked("success_rate", result.success_rate, result.success_se,
                         success_target, success_band),
        Variable.checked("parity_guess_rate", result.parity_guess_rate, result.parity_guess_se,
                         parity_target, 4.0 * result.parity_guess_se),
    ]


def _handle_pom_quantum(args) -> tuple[list[Variable], int]:
    params = {
        "via_mkc": args.via_mkc,
        "epsilon": args.epsilon,
        "catalog_seed": args.seed,
        "seed": args.seed,
    }
    tally = _run_tally("pom-quantum", params, args.shots, args.parallel)
    catalog_size = 0
    if args.via_mkc:
        cat = new_catalog(2, args.epsilon, args.seed)
        resolve_target(cat, pauli("x"))
        resolve_target(cat, pauli("y"))
        catalog_size = len(cat)
    result = pom._finalize_pom(tally, "quantum", args.shots, catalog_size)
    return _pom_variables(result, QUANTUM_SUCCESS_RATE, 0.5), catalog_size


def _handle_pom_classical(args) -> tuple[list[Variable], int]:
    params = {"seed": args.seed, "wrapped_in_box": args.boxed}
    tally = _run_tally("pom-classical", params, args.shots, args.parallel)
    protocol = "classical-boxed" if args.boxed else "classical-unwrapped"
    result = pom._finalize_pom(tally, protocol, args.shots)
    parity_target = 0.5 if args.boxed else UNWRAPPED_PARITY_RATE
    return _pom_variables(result, QUANTUM_SUCCESS_RATE, parity_target), 0


def _handle_pom_box(args) -> tuple[list[Variable], int]:
    params = {"seed": args.seed}
    tally = _run_tally("pom-box", params, args.shots, args.parallel)
    result = pom._finalize_pom(tally, "direct-box", args.shots)
    return _pom_variables(result, 1.0, 0.5, exact_success=True), 0


_AUDIT_TARGETS = {
    "quantum": 0.5,
    "classical-unwrapped": UNWRAPPED_PARITY_RATE,
    "classical-boxed": 0.5,
    "direct-box": 0.5,
}


def _handle_pom_audit(args) -> tuple[list[Variable], int]:
    rate = pom.audit_parity_obliviousness(args.protocol, args.shots, args.seed)
    se = math.sqrt(max(rate * (1.0 - rate), 0.0) / args.shots)
    target = _AUDIT_TARGETS[args.protocol]
    return [Variable.checked("parity_guess_rate", rate, se, target, 4.0 * se)], 0


def _handle_ks_check(args) -> tuple[list[Variable], int]:
    obstructed = experiments.ks_obstruction_check()
    return [Variable.checked("obstruction", 1.0 if obstructed else 0.0, None, 1.0, 0.0)], 0


def _handle_classical_bound(args) -> tuple[list[Variable], int]:
    bound, maximisers = experiments.classical_bound_bruteforce()
    return [
        Variable.checked("bound", bound, None, 4.0, 0.0),
        Variable.info("maximizing_assignments", float(len(maximisers))),
    ], 0


def _handle_acceptance(args) -> tuple[list[Variable], int]:
    return acceptance_suite.run_acceptance(args.seed)


_HANDLERS = {
    "cabello-single": _handle_cabello_single,
    "cabello-sequential": _handle_cabello_sequential,
    "chsh-toy": _handle_chsh,
    "ks-check": _handle_ks_check,
    "classical-bound": _handle_classical_bound,
    "mixture": _handle_mixture,
    "pom-quantum": _handle_pom_quantum,
    "pom-classical": _handle_pom_classical,
    "pom-box": _handle_pom_box,
    "pom-audit": _handle_pom_audit,
    "acceptance": _handle_acceptance,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mkc-lab",
        description="Hidden-variable model laboratory: Born statistics, contextuality "
        "inequalities, and parity-oblivious multiplexing.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--shots", type=int, default=DEFAULT_SHOTS, help="number of shots (default 100000)")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help="master seed (default 0)")
    common.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON,
                        help="catalog precision radius (default 1e-3)")
    common.add_argument("--format", choices=FORMATS, default="text", help="report format (default text)")
    common.add_argument("--parallel", type=int, default=1, help="worker processes (default 1)")

    sub = parser.add_subparsers(dest="command", required=True)
    state_kwargs = dict(choices=("maximally-mixed", "pure-product"), default="maximally-mixed",
                        help="prepared state (default maximally-mixed)")

    p = sub.add_parser("cabello-single", parents=[common],
                       help="six-context inequality, one context per prepared system")
    p.add_argument("--state", **state_kwargs)

    p = sub.add_parser("cabello-sequential", parents=[common],
                       help="all six contexts measured in sequence on each system")
    p.add_argument("--state", **state_kwargs)
    p.add_argument("--no-collapse", action="store_true",
                   help="diagnostic: skip the projection between measurements")

    sub.add_parser("chsh-toy", parents=[common], help="event-triggered dynamics reaching CHSH = 4")
    sub.add_parser("ks-check", parents=[common], help="exhaustive value-assignment obstruction check")
    sub.add_parser("classical-bound", parents=[common], help="brute-force classical bound (= 4)")
    sub.add_parser("mixture", parents=[common], help="non-convexity of the hidden-state measures")

    p = sub.add_parser("pom-quantum", parents=[common], help="qubit multiplexing protocol")
    p.add_argument("--via-mkc", action="store_true", help="route measurements through a catalog")

    p = sub.add_parser("pom-classical", parents=[common], help="classical-table multiplexing protocol")
    p.add_argument("--boxed", action="store_true", help="seal the bits in a booby-trapped box")

    sub.add_parser("pom-box", parents=[common], help="direct booby-box protocol")

    p = sub.add_parser("pom-audit", parents=[common], help="best parity decoder for one protocol")
    p.add_argument("--protocol", required=True, choices=pom.PROTOCOLS)

    sub.add_parser("acceptance", parents=[common], help="run the full acceptance suite")
    return parser


def _config_echo(args) -> dict[str, object]:
    # Pool size is an execution detail, not an experiment parameter: leaving it
    # out keeps stdout byte-identical across degrees of parallelism.
    skip = {"command", "parallel"}
    return {k.replace("_", "-"): v for k, v in sorted(vars(args).items()) if k not in skip}


def main(argv: list[str] | None = None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else int(exc.code or 0)

    if args.shots < 1 or args.parallel < 1 or args.epsilon <= 0.0:
        print("error: shots and parallel must be >= 1, epsilon > 0", file=sys.stderr)
        return 2

    started = time.perf_counter()
    try:
        variables, catalog_size = _HANDLERS[args.command](args)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    duration = time.perf_counter() - started

    report = RunReport(
        command=args.command,
        config=_config_echo(args),
        variables=variables,
        catalog_size=catalog_size,
        duration_s=duration,
    )
    print(emit_report(report, args.format))
    print(f"[{args.command}] finished in {duration:.2f}s", file=sys.stderr)
    return 0 if report.all_passed else 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
