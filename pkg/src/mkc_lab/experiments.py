"""Contextuality experiments: Mermin-Peres/Cabello, CHSH toy dynamics, mixtures.

Each experiment is a shot loop over independent hidden states.  Shot seeds are
keyed on the absolute shot index and every observable is resolved into the
catalog in a canonical order before the loop starts, so a loop over [lo, hi)
produces the same numbers whether it runs in one piece or chunked across
workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .linalg import (
    DensityOperator,
    HermitianOperator,
    identity,
    operator_norm,
    pauli,
    spin1_component,
    tensor,
)
from .model import (
    COMMUTE_TOL,
    DEFAULT_EPSILON,
    BasisCatalog,
    _measure_resolved,
    new_catalog,
    resolve_context,
    resolve_target,
    sample_hidden_state,
    value_of,
)
from .stats import Tally, derive_seed, keyed_uniform, mean_and_se

CONTEXT_NAMES = ("R1", "R2", "R3", "C1", "C2", "C3")
CONTEXT_TARGETS = {"R1": 1.0, "R2": 1.0, "R3": 1.0, "C1": 1.0, "C2": 1.0, "C3": -1.0}

TSIRELSON_BOUND = 2.0 * math.sqrt(2.0)

# Seed-derivation namespaces, one per independent stream family.
_TAG_CABELLO_SHOT = 100
_TAG_SEQUENTIAL_SHOT = 101
_TAG_CHSH_SHOT = 102
_TAG_MIX_RHO = 103
_TAG_MIX_ENSEMBLE = 104
_TAG_MIX_COIN = 105


@dataclass(frozen=True, eq=False)
class MerminPeresSquare:
    """The 3x3 grid of two-qubit observables with commuting rows and columns."""

    entries: tuple[tuple[HermitianOperator, ...], ...]

    def __post_init__(self) -> None:
        eye = np.eye(4)
        for triple in list(self.entries) + [self.column_entries(k) for k in range(3)]:
            for op in triple:
                if operator_norm(op.matrix @ op.matrix - eye) > 1e-12:
                    raise ValueError("square entry does not square to the identity")
            for i in range(3):
                for j in range(i + 1, 3):
                    comm = triple[i].matrix @ triple[j].matrix - triple[j].matrix @ triple[i].matrix
                    if operator_norm(comm) > 1e-12:
                        raise ValueError("row/column triple is not commuting")

    @classmethod
    def standard(cls) -> MerminPeresSquare:
        sx, sy, sz = pauli("x"), pauli("y"), pauli("z")
        one = identity(2)
        grid = (
            (tensor(sx, one), tensor(one, sx), tensor(sx, sx)),
            (tensor(one, sy), tensor(sy, one), tensor(sy, sy)),
            (tensor(sx, sy), tensor(sy, sx), tensor(sz, sz)),
        )
        return cls(grid)

    def row_entries(self, k: int) -> tuple[HermitianOperator, ...]:
        return self.entries[k]

    def column_entries(self, k: int) -> tuple[HermitianOperator, ...]:
        return tuple(self.entries[i][k] for i in range(3))

    def context(self, name: str) -> tuple[HermitianOperator, ...]:
        kind, index = name[0], int(name[1]) - 1
        return self.row_entries(index) if kind == "R" else self.column_entries(index)


def _assignment_products(bits: tuple[int, ...]) -> dict[str, int]:
    a = bits
    return {
        "R1": a[0] * a[1] * a[2],
        "R2": a[3] * a[4] * a[5],
        "R3": a[6] * a[7] * a[8],
        "C1": a[0] * a[3] * a[6],
        "C2": a[1] * a[4] * a[7],
        "C3": a[2] * a[5] * a[8],
    }


def classical_bound_bruteforce() -> tuple[float, list[tuple[int, ...]]]:
    """Maximum of the six-context sum over all 512 non-contextual assignments.

    Returns the bound (4) together with every maximising assignment, entries
    ordered row-major A11..A33.
    """
    best = -math.inf
    argmax: list[tuple[int, ...]] = []
    for bits in product((-1, 1), repeat=9):
        p = _assignment_products(bits)
        total = p["R1"] + p["R2"] + p["R3"] + p["C1"] + p["C2"] - p["C3"]
        if total > best:
            best = total
            argmax = [bits]
        elif total == best:
            argmax.append(bits)
    return float(best), argmax


def ks_obstruction_check() -> bool:
    """True iff no +-1 assignment satisfies all six row/column product constraints."""
    for bits in product((-1, 1), repeat=9):
        p = _assignment_products(bits)
        if all(p[name] == CONTEXT_TARGETS[name] for name in CONTEXT_NAMES):
            return False
    return True


# ---------------------------------------------------------------------------
# Cabello runs


@dataclass(frozen=True)
class CabelloResult:
    context_names: tuple[str, ...]
    expectations: tuple[float, ...]
    standard_errors: tuple[float, ...]
    cabello_sum: float
    cabello_sum_se: float
    shots: int
    product_violations: int
    catalog_size: int


def prepare_cabello(cat: BasisCatalog, square: MerminPeresSquare) -> None:
    """Resolve the six contexts in canonical order (fixes catalog layout)."""
    for name in CONTEXT_NAMES:
        resolve_context(cat, square.context(name))


def _context_stats(tally: Tally) -> tuple[tuple[float, ...], tuple[float, ...]]:
    means, ses = [], []
    for name in CONTEXT_NAMES:
        if tally.count(name) >= 2:
            m, se = mean_and_se(tally, name)
        else:
            m, se = tally.mean(name), 0.0
        means.append(m)
        ses.append(se)
    return tuple(means), tuple(ses)


def _finalize_cabello(tally: Tally, shots: int, catalog_size: int) -> CabelloResult:
    means, ses = _context_stats(tally)
    by_name = dict(zip(CONTEXT_NAMES, means))
    total = (
        by_name["R1"] + by_name["R2"] + by_name["R3"] + by_name["C1"] + by_name["C2"] - by_name["C3"]
    )
    total_se = math.sqrt(sum(se * se for se in ses))
    violations = int(round(tally.mean("violation") * tally.count("violation"))) if tally.count("violation") else 0
    return CabelloResult(
        context_names=CONTEXT_NAMES,
        expectations=means,
        standard_errors=ses,
        cabello_sum=total,
        cabello_sum_se=total_se,
        shots=shots,
        product_violations=violations,
        catalog_size=catalog_size,
    )


def _cabello_single_loop(
    cat: BasisCatalog, square: MerminPeresSquare, rho: DensityOperator, seed: int, lo: int, hi: int
) -> Tally:
    tally = Tally()
    resolved = [resolve_context(cat, square.context(name)) for name in CONTEXT_NAMES]
    for s in range(lo, hi):
        which = s % 6
        state = sample_hidden_state(cat, rho, derive_seed(seed, _TAG_CABELLO_SHOT, s))
        records = _measure_resolved(state, *resolved[which])
        prod = records[0].value * records[1].value * records[2].value
        tally.add(CONTEXT_NAMES[which], prod)
        tally.add("violation", 0.0 if prod == CONTEXT_TARGETS[CONTEXT_NAMES[which]] else 1.0)
    return tally


def run_cabello_single_shot(
    cat: BasisCatalog, rho: DensityOperator, shots: int, seed: int
) -> CabelloResult:
    """One context per freshly prepared system, contexts scheduled round-robin."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    square = MerminPeresSquare.standard()
    prepare_cabello(cat, square)
    tally = _cabello_single_loop(cat, square, rho, seed, 0, shots)
    return _finalize_cabello(tally, shots, len(cat))


def cabello_single_chunk(params: dict, lo: int, hi: int) -> Tally:
    """Worker entry: rebuilds the catalog deterministically and runs [lo, hi)."""
    cat = new_catalog(4, params["epsilon"], params["catalog_seed"])
    square = MerminPeresSquare.standard()
    prepare_cabello(cat, square)
    rho = DensityOperator(np.asarray(params["rho"]))
    return _cabello_single_loop(cat, square, rho, params["seed"], lo, hi)


_SEQUENTIAL_ORDER = ("R1", "C1", "R2", "R3", "C2", "C3")


def _shared_entry(square: MerminPeresSquare, first: str, second: str) -> tuple[int, int]:
    ctx1, ctx2 = square.context(first), square.context(second)
    for i, a in enumerate(ctx1):
        for j, b in enumerate(ctx2):
            if a.matrix.tobytes() == b.matrix.tobytes():
                return i, j
    raise ValueError(f"contexts {first} and {second} share no entry")


def _cabello_sequential_loop(
    cat: BasisCatalog,
    square: MerminPeresSquare,
    rho: DensityOperator,
    seed: int,
    lo: int,
    hi: int,
    collapse: bool,
    ordering: tuple[str, ...],
) -> Tally:
    tally = Tally()
    resolved = {name: resolve_context(cat, square.context(name)) for name in CONTEXT_NAMES}
    shared = _shared_entry(square, ordering[0], ordering[1])
    for s in range(lo, hi):
        state = sample_hidden_state(cat, rho, derive_seed(seed, _TAG_SEQUENTIAL_SHOT, s))
        first = _measure_resolved(state, *resolved[ordering[0]], collapse)
        second = _measure_resolved(state, *resolved[ordering[1]], collapse)
        agree = first[shared[0]].value == second[shared[1]].value
        tally.add("a11_agree", 1.0 if agree else 0.0)
        for name, records in ((ordering[0], first), (ordering[1], second)):
            prod = records[0].value * records[1].value * records[2].value
            tally.add(name, prod)
            tally.add("violation", 0.0 if prod == CONTEXT_TARGETS[name] else 1.0)
        for name in ordering[2:]:
            records = _measure_resolved(state, *resolved[name], collapse)
            prod = records[0].value * records[1].value * records[2].value
            tally.add(name, prod)
            tally.add("violation", 0.0 if prod == CONTEXT_TARGETS[name] else 1.0)
    return tally


def run_cabello_sequential(
    cat: BasisCatalog,
    rho: DensityOperator,
    shots: int,
    seed: int,
    *,
    collapse: bool = True,
    ordering: tuple[str, ...] = _SEQUENTIAL_ORDER,
) -> tuple[CabelloResult, float]:
    """All six contexts measured in sequence on each prepared system.

    The first two contexts of ``ordering`` must share an entry; the fraction of
    shots where that entry reports the same value in both contexts is returned
    as the agreement rate.  ``collapse=False`` is the diagnostic mode where the
    state is never projected between measurements (fresh coloring each epoch),
    which visibly decorrelates the shared entry.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if sorted(ordering) != sorted(CONTEXT_NAMES):
        raise ValueError(f"ordering must be a permutation of {CONTEXT_NAMES}")
    square = MerminPeresSquare.standard()
    prepare_cabello(cat, square)
    tally = _cabello_sequential_loop(cat, square, rho, seed, 0, shots, collapse, tuple(ordering))
    result = _finalize_cabello(tally, shots, len(cat))
    agreement = tally.mean("a11_agree")
    return result, agreement


def cabello_sequential_chunk(params: dict, lo: int, hi: int) -> Tally:
    cat = new_catalog(4, params["epsilon"], params["catalog_seed"])
    square = MerminPeresSquare.standard()
    prepare_cabello(cat, square)
    rho = DensityOperator(np.asarray(params["rho"]))
    return _cabello_sequential_loop(
        cat, square, rho, params["seed"], lo, hi, params["collapse"], tuple(params["ordering"])
    )


# ---------------------------------------------------------------------------
# CHSH toy model


CHSH_SETTING_NAMES = ("AB", "ABp", "ApB", "ApBp")
_CHSH_PAIRS = (("A", "B"), ("A", "Bp"), ("Ap", "B"), ("Ap", "Bp"))


@dataclass(frozen=True)
class ChshToyResult:
    setting_names: tuple[str, ...]
    correlators: tuple[float, ...]
    standard_errors: tuple[float, ...]
    chsh_value: float
    chsh_se: float
    shots: int
    catalog_size: int


def _squared_spin_pm(axis: str) -> HermitianOperator:
    # Q_r = 2 S_r^2 - 1 has spectrum {-1, +1}; its -1 eigenstate is the S_r = 0 state.
    s = spin1_component({"x": (1, 0, 0), "y": (0, 1, 0), "z": (0, 0, 1)}[axis])
    return HermitianOperator(2.0 * (s.matrix @ s.matrix) - np.eye(3))


def _zero_spin_state(axis: str) -> np.ndarray:
    s = spin1_component({"x": (1, 0, 0), "y": (0, 1, 0), "z": (0, 0, 1)}[axis])
    evals, evecs = np.linalg.eigh(s.matrix)
    return evecs[:, int(np.argmin(np.abs(evals)))]


def chsh_observables() -> dict[str, HermitianOperator]:
    """The four two-particle settings A, A', B, B' on the 9-dimensional space."""
    qx, qy = _squared_spin_pm("x"), _squared_spin_pm("y")
    one = identity(3)
    return {
        "A": tensor(qx, one),
        "Ap": tensor(qy, one),
        "B": tensor(one, qx),
        "Bp": tensor(one, qy),
    }


def chsh_states() -> tuple[DensityOperator, DensityOperator]:
    """(rho_zz, rho_yy): both particles in the zero-spin state along z resp. y."""
    psi_z, psi_y = _zero_spin_state("z"), _zero_spin_state("y")
    return (
        DensityOperator.pure(np.kron(psi_z, psi_z)),
        DensityOperator.pure(np.kron(psi_y, psi_y)),
    )


def prepare_chsh(cat: BasisCatalog) -> dict[str, object]:
    observables = chsh_observables()
    return {name: resolve_target(cat, observables[name]) for name in ("A", "Ap", "B", "Bp")}


def _chsh_loop(
    cat: BasisCatalog,
    handles: dict[str, object],
    rho_zz: DensityOperator,
    rho_yy: DensityOperator,
    seed: int,
    lo: int,
    hi: int,
) -> Tally:
    tally = Tally()
    for s in range(lo, hi):
        which = s % 4
        first, second = _CHSH_PAIRS[which]
        state = sample_hidden_state(cat, rho_zz, derive_seed(seed, _TAG_CHSH_SHOT, s))
        v_first = value_of(state, handles[first])
        if first == "Ap":
            state.resample(rho_yy)
        v_second = value_of(state, handles[second])
        if second == "Bp":
            state.resample(rho_yy)
        tally.add(CHSH_SETTING_NAMES[which], v_first * v_second)
    return tally


def _finalize_chsh(tally: Tally, shots: int, catalog_size: int) -> ChshToyResult:
    means, ses = [], []
    for name in CHSH_SETTING_NAMES:
        if tally.count(name) >= 2:
            m, se = mean_and_se(tally, name)
        else:
            m, se = tally.mean(name), 0.0
        means.append(m)
        ses.append(se)
    value = means[0] + means[1] + means[2] - means[3]
    return ChshToyResult(
        setting_names=CHSH_SETTING_NAMES,
        correlators=tuple(means),
        standard_errors=tuple(ses),
        chsh_value=value,
        chsh_se=math.sqrt(sum(se * se for se in ses)),
        shots=shots,
        catalog_size=catalog_size,
    )


def run_chsh_toy(
    shots: int,
    seed: int,
    *,
    epsilon: float = DEFAULT_EPSILON,
    cat: BasisCatalog | None = None,
) -> ChshToyResult:
    """Event-triggered dynamics on two spin-1 particles reaching a CHSH value of 4.

    Every trial prepares a fresh hidden state from the measure of rho_zz and
    measures one round-robin setting pair, the A side first.  Measuring A or B
    leaves the state untouched; measuring A' or B' makes it jump to a fresh
    coloring drawn from the measure of rho_yy.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if cat is None:
        cat = new_catalog(9, epsilon, seed)
    handles = prepare_chsh(cat)
    rho_zz, rho_yy = chsh_states()
    tally = _chsh_loop(cat, handles, rho_zz, rho_yy, seed, 0, shots)
    return _finalize_chsh(tally, shots, len(cat))


def chsh_chunk(params: dict, lo: int, hi: int) -> Tally:
    cat = new_catalog(9, params["epsilon"], params["catalog_seed"])
    handles = prepare_chsh(cat)
    rho_zz, rho_yy = chsh_states()
    return _chsh_loop(cat, handles, rho_zz, rho_yy, params["seed"], lo, hi)


# ---------------------------------------------------------------------------
# mixture non-convexity


@dataclass(frozen=True)
class MixtureResult:
    analytic_lhs: float
    analytic_rhs: float
    empirical_lhs: float
    empirical_lhs_se: float
    empirical_rhs: float
    empirical_rhs_se: float
    rho_marginals: tuple[tuple[float, float], ...]
    mixture_marginals: tuple[tuple[float, float], ...]
    shots: int
    catalog_size: int


def _mixture_loop(
    cat: BasisCatalog,
    h1,
    h2,
    rho: DensityOperator,
    part1: DensityOperator,
    part2: DensityOperator,
    seed: int,
    lo: int,
    hi: int,
) -> Tally:
    tally = Tally()
    coin_seed = derive_seed(seed, _TAG_MIX_COIN)
    for s in range(lo, hi):
        state = sample_hidden_state(cat, rho, derive_seed(seed, _TAG_MIX_RHO, s))
        v1, v2 = value_of(state, h1), value_of(state, h2)
        tally.add("rho_joint", 1.0 if (v1 == 1.0 and v2 == 1.0) else 0.0)
        tally.add("rho_m1", 1.0 if v1 == 1.0 else 0.0)
        tally.add("rho_m2", 1.0 if v2 == 1.0 else 0.0)

        component = part1 if keyed_uniform(coin_seed, (s,)) < 0.5 else part2
        state = sample_hidden_state(cat, component, derive_seed(seed, _TAG_MIX_ENSEMBLE, s))
        v1, v2 = value_of(state, h1), value_of(state, h2)
        tally.add("mix_joint", 1.0 if (v1 == 1.0 and v2 == 1.0) else 0.0)
        tally.add("mix_m1", 1.0 if v1 == 1.0 else 0.0)
        tally.add("mix_m2", 1.0 if v2 == 1.0 else 0.0)
    return tally


def _check_rank1_projector(op: HermitianOperator, name: str) -> None:
    if operator_norm(op.matrix @ op.matrix - op.matrix) > 1e-9:
        raise ValueError(f"{name} is not idempotent")
    if abs(np.trace(op.matrix).real - 1.0) > 1e-9:
        raise ValueError(f"{name} is not rank-1")


def _finalize_mixture(
    tally: Tally, t: float, shots: int, catalog_size: int
) -> MixtureResult:
    lhs, lhs_se = mean_and_se(tally, "rho_joint")
    rhs, rhs_se = mean_and_se(tally, "mix_joint")
    return MixtureResult(
        analytic_lhs=(0.5 + 0.5 * t) ** 2,
        analytic_rhs=t,
        empirical_lhs=lhs,
        empirical_lhs_se=lhs_se,
        empirical_rhs=rhs,
        empirical_rhs_se=rhs_se,
        rho_marginals=tuple(mean_and_se(tally, n) for n in ("rho_m1", "rho_m2")),
        mixture_marginals=tuple(mean_and_se(tally, n) for n in ("mix_m1", "mix_m2")),
        shots=shots,
        catalog_size=catalog_size,
    )


def mixture_setup(
    cat: BasisCatalog, p1: HermitianOperator, p2: HermitianOperator
) -> tuple:
    """Validate the projector pair and resolve both handles (canonical order)."""
    if p1.dim != p2.dim:
        raise ValueError("projectors must share a dimension")
    _check_rank1_projector(p1, "p1")
    _check_rank1_projector(p2, "p2")
    comm = p1.matrix @ p2.matrix - p2.matrix @ p1.matrix
    if operator_norm(comm) <= COMMUTE_TOL:
        raise ValueError("projectors commute; the two measures coincide and the demo is degenerate")
    h1 = resolve_target(cat, p1)
    h2 = resolve_target(cat, p2)
    rho = DensityOperator((p1.matrix + p2.matrix) / 2.0)
    return h1, h2, rho, DensityOperator(p1.matrix), DensityOperator(p2.matrix)


def mixture_nonconvexity_demo(
    p1: HermitianOperator,
    p2: HermitianOperator,
    shots: int,
    seed: int,
    *,
    epsilon: float = DEFAULT_EPSILON,
    cat: BasisCatalog | None = None,
) -> MixtureResult:
    """Joint coloring statistics distinguishing rho = (P1+P2)/2 from the even mixture.

    Queries both projector handles on the same coloring without collapsing —
    this compares the two measures on hidden states, not outcomes of a
    physically admissible simultaneous measurement (the projectors do not
    commute).  Single-handle marginals of the two ensembles agree; the joint
    event separates them: (1/2 + Tr(P1P2)/2)^2 versus Tr(P1P2).
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if cat is None:
        cat = new_catalog(p1.dim, epsilon, seed)
    h1, h2, rho, part1, part2 = mixture_setup(cat, p1, p2)
    t = float(np.trace(p1.matrix @ p2.matrix).real)
    tally = _mixture_loop(cat, h1, h2, rho, part1, part2, seed, 0, shots)
    return _finalize_mixture(tally, t, shots, len(cat))


def mixture_chunk(params: dict, lo: int, hi: int) -> Tally:
    cat = new_catalog(params["dim"], params["epsilon"], params["catalog_seed"])
    p1 = HermitianOperator(np.asarray(params["p1"]))
    p2 = HermitianOperator(np.asarray(params["p2"]))
    h1, h2, rho, part1, part2 = mixture_setup(cat, p1, p2)
    return _mixture_loop(cat, h1, h2, rho, part1, part2, params["seed"], lo, hi)
