"""Parity-oblivious multiplexing: qubit protocol, classical table, booby box.

Alice holds two uniform bits (a1, a2); Bob, given a uniform b in {1, 2}, must
guess a_b from whatever Alice sends, under the constraint that the transmission
carries no information about the parity a1 xor a2.  Three carriers are
implemented: a qubit measured along x or y, a pair of classical bits drawn
from a tuned table, and a booby-trapped two-compartment box that destroys the
unread compartment.  The auditor bounds what any decoder could learn about the
parity by exhaustive search over the finite observation alphabet.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from .linalg import DensityOperator, pauli
from .model import (
    DEFAULT_EPSILON,
    BasisCatalog,
    new_catalog,
    resolve_target,
    sample_hidden_state,
    value_of,
)
from .stats import RngKey, Tally, derive_seed, mean_and_se

#: Best per-bit guessing rate of the qubit protocol and of the tuned table.
QUANTUM_SUCCESS_RATE = 0.5 + math.sqrt(2.0) / 4.0
#: Parity leak of the unwrapped classical table.
UNWRAPPED_PARITY_RATE = 0.75

PROTOCOLS = ("quantum", "classical-unwrapped", "classical-boxed", "direct-box")

_TAG_QUANTUM_SHOT = 200
_TAG_QUANTUM_STATE = 201
_TAG_CLASSICAL_SHOT = 202
_TAG_BOX_SHOT = 203


class BoobyTrapViolation(RuntimeError):
    """Both compartments of a booby-trapped box were accessed."""


class BoobyBox:
    """Two sealed bits; reading either compartment incinerates the other."""

    __slots__ = ("_values", "opened")

    def __init__(self, first: int, second: int) -> None:
        self._values = (int(first), int(second))
        self.opened: int | None = None

    def open(self, compartment: int) -> int:
        """Read compartment 1 or 2.  Any second access trips the booby trap."""
        if compartment not in (1, 2):
            raise ValueError("compartment must be 1 or 2")
        if self.opened is not None:
            raise BoobyTrapViolation(
                f"compartment {self.opened} was already opened; the other is destroyed"
            )
        self.opened = compartment
        return self._values[compartment - 1]


def pom_states() -> dict[tuple[int, int], DensityOperator]:
    """The four pure qubit states indexed by (a1, a2); rho00+rho11 = rho10+rho01."""
    s = math.sqrt(2.0) / 2.0
    grid = {
        (0, 0): [[1.0, s * (1 - 1j)], [s * (1 + 1j), 1.0]],
        (0, 1): [[1.0, s * (1 + 1j)], [s * (1 - 1j), 1.0]],
        (1, 0): [[1.0, -s * (1 + 1j)], [-s * (1 - 1j), 1.0]],
        (1, 1): [[1.0, -s * (1 - 1j)], [-s * (1 + 1j), 1.0]],
    }
    return {bits: DensityOperator(0.5 * np.array(mat)) for bits, mat in grid.items()}


def classical_table() -> np.ndarray:
    """Row (a1,a2) -> distribution over (lambda1, lambda2), both coded as 2*first+second.

    Rows sum to 1 and every marginal P[lambda_b = a_b] equals 1/2 + sqrt(2)/4;
    the parity of (lambda1, lambda2) matches the parity of (a1, a2) with
    probability 3/4.
    """
    hi = 3.0 / 8.0 + math.sqrt(2.0) / 4.0
    lo = 3.0 / 8.0 - math.sqrt(2.0) / 4.0
    q = 1.0 / 8.0
    return np.array(
        [
            [hi, q, q, lo],
            [q, hi, lo, q],
            [q, lo, hi, q],
            [lo, q, q, hi],
        ]
    )


@dataclass(frozen=True)
class PomRunResult:
    protocol: str
    shots: int
    success_rate: float
    success_se: float
    parity_guess_rate: float
    parity_guess_se: float
    catalog_size: int = 0


def _observation_counts(tally: Tally) -> dict[str, tuple[int, int]]:
    counts: dict[str, tuple[int, int]] = {}
    for name in tally.variables():
        if name.startswith("obs["):
            symbol, parity = name[4:].rsplit("]p", 1)
            even, odd = counts.get(symbol, (0, 0))
            if parity == "0":
                even += tally.count(name)
            else:
                odd += tally.count(name)
            counts[symbol] = (even, odd)
    return counts


def _best_decoder_rate(tally: Tally, shots: int) -> tuple[float, float]:
    """Empirical success of the best deterministic parity decoder.

    Decoders map observation symbols independently, so the maximum over all
    2^|alphabet| decoders equals the sum of per-symbol majority counts — the
    exhaustive search collapses to one pass over the counts.
    """
    best = sum(max(even, odd) for even, odd in _observation_counts(tally).values())
    rate = best / shots
    return rate, math.sqrt(max(rate * (1.0 - rate), 0.0) / shots)


def _finalize_pom(tally: Tally, protocol: str, shots: int, catalog_size: int = 0) -> PomRunResult:
    success, success_se = mean_and_se(tally, "success")
    parity_rate, parity_se = _best_decoder_rate(tally, shots)
    return PomRunResult(
        protocol=protocol,
        shots=shots,
        success_rate=success,
        success_se=success_se,
        parity_guess_rate=parity_rate,
        parity_guess_se=parity_se,
        catalog_size=catalog_size,
    )


def _quantum_loop(
    seed: int,
    lo: int,
    hi: int,
    via_mkc: bool,
    cat: BasisCatalog | None,
    handles: dict[str, object] | None,
) -> Tally:
    tally = Tally()
    states = pom_states()
    sigma = {1: pauli("x"), 2: pauli("y")}
    for s in range(lo, hi):
        gen = RngKey(seed, (_TAG_QUANTUM_SHOT, s)).generator()
        a1, a2, b_draw = (int(v) for v in gen.integers(0, 2, size=3))
        b = b_draw + 1
        rho = states[(a1, a2)]
        if via_mkc:
            assert cat is not None and handles is not None
            state = sample_hidden_state(cat, rho, derive_seed(seed, _TAG_QUANTUM_STATE, s))
            outcome = value_of(state, handles["x" if b == 1 else "y"])
        else:
            p_plus = 0.5 * (1.0 + np.trace(rho.matrix @ sigma[b].matrix).real)
            outcome = 1.0 if gen.random() < p_plus else -1.0
        guess = 0 if outcome == 1.0 else 1
        target_bit = a1 if b == 1 else a2
        tally.add("success", 1.0 if guess == target_bit else 0.0)
        tally.add(f"obs[{outcome:+.0f}]p{(a1 + a2) % 2}", 1.0)
    return tally


def run_quantum_pom(
    shots: int,
    seed: int,
    via_mkc: bool = False,
    *,
    epsilon: float = DEFAULT_EPSILON,
    cat: BasisCatalog | None = None,
) -> PomRunResult:
    """Qubit protocol: Bob measures sigma_x (b=1) or sigma_y (b=2) and decodes the sign.

    With ``via_mkc`` the measurement goes through a hidden-state catalog instead
    of direct Born sampling; the two routes are distributionally identical.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    handles = None
    if via_mkc:
        if cat is None:
            cat = new_catalog(2, epsilon, seed)
        handles = {"x": resolve_target(cat, pauli("x")), "y": resolve_target(cat, pauli("y"))}
    tally = _quantum_loop(seed, 0, shots, via_mkc, cat, handles)
    return _finalize_pom(tally, "quantum", shots, 0 if cat is None else len(cat))


def quantum_chunk(params: dict, lo: int, hi: int) -> Tally:
    via_mkc = params["via_mkc"]
    cat = handles = None
    if via_mkc:
        cat = new_catalog(2, params["epsilon"], params["catalog_seed"])
        handles = {"x": resolve_target(cat, pauli("x")), "y": resolve_target(cat, pauli("y"))}
    return _quantum_loop(params["seed"], lo, hi, via_mkc, cat, handles)


def _classical_loop(seed: int, lo: int, hi: int, wrapped_in_box: bool) -> Tally:
    tally = Tally()
    cdf_rows = [tuple(np.cumsum(row)) for row in classical_table()]
    for s in range(lo, hi):
        gen = RngKey(seed, (_TAG_CLASSICAL_SHOT, s)).generator()
        a1, a2, b_draw = (int(v) for v in gen.integers(0, 2, size=3))
        b = b_draw + 1
        cdf = cdf_rows[2 * a1 + a2]
        code = min(bisect_right(cdf, gen.random()), 3)
        lam1, lam2 = code >> 1, code & 1
        parity = (a1 + a2) % 2
        if wrapped_in_box:
            box = BoobyBox(lam1, lam2)
            seen = box.open(b)
            guess = seen
            tally.add(f"obs[{seen}]p{parity}", 1.0)
        else:
            guess = lam1 if b == 1 else lam2
            tally.add(f"obs[{lam1}{lam2}]p{parity}", 1.0)
        target_bit = a1 if b == 1 else a2
        tally.add("success", 1.0 if guess == target_bit else 0.0)
    return tally


def run_classical_table_pom(
    shots: int, seed: int, wrapped_in_box: bool = False
) -> PomRunResult:
    """Classical bit pair drawn from the tuned table, optionally sealed in a booby box.

    Unwrapped, Bob sees both bits: per-bit guessing matches the quantum rate
    but the pair leaks the parity at rate 3/4.  Boxed, only compartment b is
    readable and the parity leak vanishes.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    tally = _classical_loop(seed, 0, shots, wrapped_in_box)
    protocol = "classical-boxed" if wrapped_in_box else "classical-unwrapped"
    return _finalize_pom(tally, protocol, shots)


def classical_chunk(params: dict, lo: int, hi: int) -> Tally:
    return _classical_loop(params["seed"], lo, hi, params["wrapped_in_box"])


def _box_loop(seed: int, lo: int, hi: int) -> Tally:
    tally = Tally()
    for s in range(lo, hi):
        gen = RngKey(seed, (_TAG_BOX_SHOT, s)).generator()
        a1, a2, b_draw = (int(v) for v in gen.integers(0, 2, size=3))
        b = b_draw + 1
        box = BoobyBox(a1, a2)
        seen = box.open(b)
        target_bit = a1 if b == 1 else a2
        tally.add("success", 1.0 if seen == target_bit else 0.0)
        tally.add(f"obs[{seen}]p{(a1 + a2) % 2}", 1.0)
    return tally


def run_direct_box_pom(shots: int, seed: int) -> PomRunResult:
    """Alice stores (a1, a2) themselves in the box: certain per-bit success, no parity leak."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    return _finalize_pom(_box_loop(seed, 0, shots), "direct-box", shots)


def box_chunk(params: dict, lo: int, hi: int) -> Tally:
    return _box_loop(params["seed"], lo, hi)


def audit_parity_obliviousness(protocol: str, shots: int, seed: int) -> float:
    """Best achievable empirical parity-guess rate for one protocol.

    Exhausts every deterministic decoder from Bob's observation alphabet
    (measurement outcome, opened bit, or unwrapped bit pair) to a parity guess
    and returns the maximum success rate.
    """
    if protocol == "quantum":
        return run_quantum_pom(shots, seed).parity_guess_rate
    if protocol == "classical-unwrapped":
        return run_classical_table_pom(shots, seed, wrapped_in_box=False).parity_guess_rate
    if protocol == "classical-boxed":
        return run_classical_table_pom(shots, seed, wrapped_in_box=True).parity_guess_rate
    if protocol == "direct-box":
        return run_direct_box_pom(shots, seed).parity_guess_rate
    raise ValueError(f"unknown protocol {protocol!r}; expected one of {PROTOCOLS}")
