"""Growable catalogs of totally incompatible bases, colorings, and collapse.

The model realises a hidden-variable scheme at desk scale: observables live in
the abelian algebras of a finite, growable set of pairwise totally incompatible
orthonormal bases, hidden states are lazily sampled colorings (one outcome per
basis, product-independent with Born weights), and measurement projects the
quantum state and resamples the coloring.

Targets handed to ``resolve_target`` are treated as aimed-for operators: the
catalog answers with an observable whose basis sits within ``epsilon`` of the
target's eigenbasis, minting a slightly perturbed copy when nothing close
enough exists yet.  The perturbation keeps the target's exact spectrum and
makes freshly minted bases generic, hence totally incompatible with the rest
of the catalog.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .linalg import (
    EIGENVALUE_MERGE_TOL,
    DensityOperator,
    HermitianOperator,
    OrthonormalBasis,
    operator_norm,
    round_near_integers,
    spectral_decomposition,
)
from .stats import RngKey, keyed_uniform

DEFAULT_EPSILON = 1e-3
COMMUTE_TOL = 1e-9
INCOMPATIBILITY_TOL = 1e-9
SCALAR_TOL = 1e-10
IMPOSSIBLE_OUTCOME_TOL = 1e-15
MINT_ATTEMPTS = 32

# Purpose tags keeping the catalog's keyed streams disjoint.
_TAG_OUTCOME = 0
_TAG_MINT = 1
_TAG_REFINE = 2
_TAG_BATCH = 3

# Fixed irrational ratios used to combine a commuting family into a single
# generically split joint observable.
_CONTEXT_COEFFS = (
    1.0,
    math.pi / 7.0,
    math.e / 13.0,
    math.sqrt(2.0) / 17.0,
    math.sqrt(3.0) / 19.0,
    math.sqrt(5.0) / 23.0,
    math.sqrt(7.0) / 29.0,
    math.sqrt(11.0) / 31.0,
    math.sqrt(13.0) / 37.0,
)
_CONTEXT_COEFFS_ALT = tuple(c * math.sqrt(17.0) / 4.0 for c in _CONTEXT_COEFFS)


class CatalogSaturationError(RuntimeError):
    """Minting kept colliding with existing bases; epsilon is too large for this session."""


class ImpossibleOutcomeError(RuntimeError):
    """A recorded outcome has (numerically) zero Born weight in the current state."""


@dataclass(frozen=True)
class Scalar:
    """Observable c·1; measuring it reveals c and never disturbs anything."""

    value: float


@dataclass(frozen=True)
class InBasis:
    """Observable sum_i a_i P_i over catalog basis ``basis_index``.

    ``eigenvalues[i]`` is the value revealed when the coloring picks vector i.
    """

    basis_index: int
    eigenvalues: tuple[float, ...]


ObservableHandle = Scalar | InBasis


@dataclass(frozen=True)
class MeasurementRecord:
    handle: ObservableHandle
    value: float
    epoch_before: int
    epoch_after: int


def apply_function(handle: ObservableHandle, fn) -> ObservableHandle:
    """Borel-function image of an observable: g(A) stays in A's basis algebra."""
    if isinstance(handle, Scalar):
        return Scalar(fn(handle.value))
    return InBasis(handle.basis_index, tuple(fn(a) for a in handle.eigenvalues))


# ---------------------------------------------------------------------------
# total incompatibility and basis distance


def _subset_masks(dim: int) -> np.ndarray:
    """Indicator rows for every nontrivial subset of {0..dim-1}, shape (2^dim - 2, dim)."""
    masks = np.arange(1, 2**dim - 1)
    return ((masks[:, None] >> np.arange(dim)[None, :]) & 1).astype(float)


def is_totally_incompatible(b1: OrthonormalBasis, b2: OrthonormalBasis) -> bool:
    """True iff no nontrivial projectors from the two bases commute.

    Exhaustive over the 2^dim - 2 subset projectors per basis.  Commutator
    Frobenius norms come from the projector identity
    ||[P,Q]||_F^2 = 2(Tr(PQ) - Tr(PQPQ)), evaluated for all subset pairs from
    the basis overlap matrix; since ||X||_2 >= ||X||_F / sqrt(dim) this screens
    genuinely non-commuting pairs, and only near-zero cases (where the identity
    is cancellation-limited) fall through to an exact operator norm.
    """
    if b1.dim != b2.dim:
        raise ValueError(f"dimension mismatch: {b1.dim} vs {b2.dim}")
    dim = b1.dim
    bits = _subset_masks(dim)
    overlap = b1.vectors.conj() @ b2.vectors.T  # overlap[i, j] = <v_i, w_j>
    tr_pq = bits @ (np.abs(overlap) ** 2) @ bits.T
    # K[(i,i'),(j,j')] = M_ij conj(M_i'j) M_i'j' conj(M_ij')
    kernel = np.einsum("ij,pj,pq,iq->ipjq", overlap, overlap.conj(), overlap, overlap.conj())
    pair1 = np.einsum("si,sp->sip", bits, bits).reshape(bits.shape[0], -1)
    pair2 = np.einsum("tj,tq->tjq", bits, bits).reshape(bits.shape[0], -1)
    tr_pqpq = (pair1 @ kernel.reshape(dim * dim, dim * dim) @ pair2.T).real
    fro_sq = 2.0 * (tr_pq - tr_pqpq)

    # The identity loses ~1e-15 of absolute accuracy to cancellation, far above
    # (sqrt(dim)*tol)^2; anything below a loose cutoff gets the exact check.
    cutoff = max(dim * INCOMPATIBILITY_TOL**2, 1e-12)
    suspects = np.argwhere(fro_sq <= cutoff)
    if suspects.size:
        rank1_1 = b1.rank1_projectors()
        rank1_2 = b2.rank1_projectors()
        for s, t in suspects:
            p = np.einsum("i,iab->ab", bits[s], rank1_1)
            q = np.einsum("j,jab->ab", bits[t], rank1_2)
            if operator_norm(p @ q - q @ p) <= INCOMPATIBILITY_TOL:
                return False
    return True


def _projector_distances(rows1: np.ndarray, rows2: np.ndarray) -> np.ndarray:
    # For rank-1 projectors ||P_v - P_w|| = sqrt(1 - |<v,w>|^2).  Gaps below
    # 1e-14 are float dust from |<v,w>|^2 ~ 1 and mean identical projectors.
    overlap = np.abs(rows1.conj() @ rows2.T) ** 2
    gap = np.clip(1.0 - overlap, 0.0, None)
    gap[gap < 1e-14] = 0.0
    return np.sqrt(gap)


def _bottleneck_matching(dist: np.ndarray) -> tuple[float, tuple[int, ...]]:
    """Matching minimising the largest matched distance.

    Exhaustive for dim <= 4; greedy assignment plus pairwise-swap refinement
    for larger dimensions.  Returns (bottleneck, match) with match[i] the
    column assigned to row i.
    """
    dim = dist.shape[0]
    if dim <= 4:
        best: tuple[float, tuple[int, ...]] | None = None
        for perm in permutations(range(dim)):
            width = max(dist[i, perm[i]] for i in range(dim))
            if best is None or width < best[0]:
                best = (width, perm)
        assert best is not None
        return best

    match: list[int] = [-1] * dim
    taken = [False] * dim
    order = np.dstack(np.unravel_index(np.argsort(dist, axis=None), dist.shape))[0]
    assigned_rows = [False] * dim
    for i, j in order:
        if not assigned_rows[i] and not taken[j]:
            match[i] = j
            assigned_rows[i] = True
            taken[j] = True
    improved = True
    while improved:
        improved = False
        width, worst = max((dist[i, match[i]], i) for i in range(dim))
        for k in range(dim):
            if k == worst:
                continue
            swapped = max(dist[worst, match[k]], dist[k, match[worst]])
            if swapped < width:
                match[worst], match[k] = match[k], match[worst]
                improved = True
                break
    width = max(dist[i, match[i]] for i in range(dim))
    return float(width), tuple(match)


def basis_distance(b1: OrthonormalBasis, b2: OrthonormalBasis) -> float:
    """min over matchings of the largest projector distance between paired vectors.

    Symmetric, phase-invariant, and zero exactly when the two bases define the
    same rank-1 projectors.
    """
    if b1.dim != b2.dim:
        raise ValueError(f"dimension mismatch: {b1.dim} vs {b2.dim}")
    width, _ = _bottleneck_matching(_projector_distances(b1.vectors, b2.vectors))
    return width


# ---------------------------------------------------------------------------
# catalog


class BasisCatalog:
    """Append-only list of pairwise totally incompatible bases plus resolution caches.

    Single-writer contract: mints mutate the catalog, concurrent readers are
    safe between mints.  Construction is deterministic per (dim, epsilon,
    seed): replaying the same resolve sequence reproduces the catalog bit for
    bit.
    """

    def __init__(self, dim: int, epsilon: float, seed: int) -> None:
        if not 2 <= dim <= 9:
            raise ValueError(f"dimension {dim} outside supported range 2..9")
        if not epsilon > 0.0:
            raise ValueError("epsilon must be positive")
        self.dim = dim
        self.epsilon = float(epsilon)
        self.seed = int(seed)
        self.bases: list[OrthonormalBasis] = []
        gen = RngKey(self.seed, (_TAG_REFINE,)).generator()
        self._refine_operator = _random_hermitian(gen, dim)
        self._resolve_cache: dict[bytes, ObservableHandle] = {}
        self._context_cache: dict[
            tuple[bytes, ...], tuple[InBasis | None, tuple[ObservableHandle, ...]]
        ] = {}
        self._born_cache: dict[tuple[bytes, int], tuple[np.ndarray, tuple[float, ...]]] = {}

    def __len__(self) -> int:
        return len(self.bases)

    def born_weights(self, rho: DensityOperator, basis_index: int) -> np.ndarray:
        """Outcome probabilities Tr(rho P_i) for one basis, cached per state."""
        return self._born(rho, basis_index)[0]

    def _born(self, rho: DensityOperator, basis_index: int) -> tuple[np.ndarray, tuple[float, ...]]:
        key = (rho.matrix.tobytes(), basis_index)
        hit = self._born_cache.get(key)
        if hit is None:
            rows = self.bases[basis_index].vectors
            w = np.einsum("id,de,ie->i", rows.conj(), rho.matrix, rows).real
            w = np.clip(w, 0.0, None)
            w /= w.sum()
            w.setflags(write=False)
            cdf = tuple(np.cumsum(w))
            if len(self._born_cache) > 100_000:
                self._born_cache.clear()
            hit = (w, cdf)
            self._born_cache[key] = hit
        return hit


def new_catalog(dim: int, epsilon: float, seed: int) -> BasisCatalog:
    """Empty catalog; bases are minted on demand by resolve_target."""
    return BasisCatalog(dim, epsilon, seed)


def _random_hermitian(gen: np.random.Generator, dim: int) -> np.ndarray:
    g = gen.standard_normal((dim, dim)) + 1j * gen.standard_normal((dim, dim))
    h = (g + g.conj().T) / 2.0
    return h / operator_norm(h)


def _unitary_exp(scale: float, hermitian: np.ndarray) -> np.ndarray:
    # exp(i·scale·H) for Hermitian H, exact via eigendecomposition.
    w, v = np.linalg.eigh(hermitian)
    return (v * np.exp(1j * scale * w)) @ v.conj().T


def _eigensystem(cat: BasisCatalog, target: HermitianOperator) -> tuple[np.ndarray, np.ndarray]:
    """Eigenbasis rows and per-row exact eigenvalues, degeneracies refined.

    Degenerate eigenspaces have no preferred internal basis; they are split by
    diagonalising the catalog's fixed seeded Hermitian operator inside each
    eigenspace, which keeps resolution total and deterministic.
    """
    evals, evecs = np.linalg.eigh(target.matrix)
    values = np.empty(len(evals))
    start = 0
    for stop in range(1, len(evals) + 1):
        if stop == len(evals) or evals[stop] - evals[stop - 1] > EIGENVALUE_MERGE_TOL:
            rep = float(round_near_integers(np.array([evals[start:stop].mean()]))[0])
            values[start:stop] = rep
            if stop - start > 1:
                block = evecs[:, start:stop]
                small = block.conj().T @ cat._refine_operator @ block
                small = (small + small.conj().T) / 2.0
                _, rot = np.linalg.eigh(small)
                evecs[:, start:stop] = block @ rot
            start = stop
    return evecs.T.copy(), values


def resolve_target(cat: BasisCatalog, target: HermitianOperator) -> ObservableHandle:
    """Map an aimed-for operator to an observable the catalog actually carries.

    Scalar multiples of the identity resolve to ``Scalar``.  Anything else
    resolves to the catalog basis closest to the target's eigenbasis if one
    lies within ``epsilon`` (eigenvalues assigned by projector matching), and
    otherwise mints a new basis: the eigenbasis is rotated by exp(i·s·H) with a
    seeded random Hermitian H, scaled so the basis moves by at most epsilon/10,
    then verified totally incompatible against every existing basis.  The
    returned observable carries the target's exact spectrum either way.
    """
    if target.dim != cat.dim:
        raise ValueError(f"dimension mismatch: target {target.dim}, catalog {cat.dim}")
    key = target.matrix.tobytes()
    cached = cat._resolve_cache.get(key)
    if cached is not None:
        return cached

    trace_over_dim = np.trace(target.matrix).real / cat.dim
    if np.max(np.abs(target.matrix - trace_over_dim * np.eye(cat.dim))) <= SCALAR_TOL:
        handle: ObservableHandle = Scalar(float(trace_over_dim))
        cat._resolve_cache[key] = handle
        return handle

    rows, values = _eigensystem(cat, target)

    best_index = -1
    best_width = math.inf
    best_match: tuple[int, ...] = ()
    for k, basis in enumerate(cat.bases):
        width, match = _bottleneck_matching(_projector_distances(rows, basis.vectors))
        if width < best_width:
            best_index, best_width, best_match = k, width, match
    if best_index >= 0 and best_width <= cat.epsilon:
        assigned = [0.0] * cat.dim
        for i, j in enumerate(best_match):
            assigned[j] = float(values[i])
        handle = InBasis(best_index, tuple(assigned))
        cat._resolve_cache[key] = handle
        return handle

    delta = cat.epsilon / 10.0
    for attempt in range(MINT_ATTEMPTS):
        gen = RngKey(cat.seed, (_TAG_MINT, len(cat.bases), attempt)).generator()
        hermitian = _random_hermitian(gen, cat.dim)
        scale = 0.8 * delta
        perturbed = rows
        for _ in range(8):
            perturbed = rows @ _unitary_exp(scale, hermitian).T
            moved = float(
                np.sqrt(
                    np.clip(1.0 - np.abs(np.einsum("id,id->i", rows.conj(), perturbed)) ** 2, 0.0, None)
                ).max()
            )
            if moved <= delta:
                break
            scale *= 0.9 * delta / moved
        else:
            continue
        candidate = OrthonormalBasis(perturbed)
        if all(is_totally_incompatible(candidate, basis) for basis in cat.bases):
            cat.bases.append(candidate)
            handle = InBasis(len(cat.bases) - 1, tuple(float(v) for v in values))
            cat._resolve_cache[key] = handle
            return handle
    raise CatalogSaturationError(
        f"{MINT_ATTEMPTS} mint attempts collided with existing bases; "
        f"epsilon={cat.epsilon:g} is too large for this session's basis density"
    )


def resolve_context(
    cat: BasisCatalog, targets: list[HermitianOperator] | tuple[HermitianOperator, ...]
) -> tuple[InBasis | None, tuple[ObservableHandle, ...]]:
    """Resolve a commuting family onto one shared catalog basis.

    Returns the joint observable (a generic combination sum_i c_i T_i whose
    eigenbasis refines every target's) plus one per-target observable in the
    same basis algebra, whose eigenvalue tuple lists the target's exact
    eigenvalue on each joint eigenvector.  Scalar targets resolve to Scalar
    handles; the joint observable is None when every target is scalar.
    """
    targets = tuple(targets)
    if not targets:
        raise ValueError("context needs at least one target")
    if len(targets) > len(_CONTEXT_COEFFS):
        raise ValueError(f"contexts of more than {len(_CONTEXT_COEFFS)} targets are unsupported")
    cache_key = tuple(t.matrix.tobytes() for t in targets)
    cached = cat._context_cache.get(cache_key)
    if cached is not None:
        return cached

    for a_idx in range(len(targets)):
        for b_idx in range(a_idx + 1, len(targets)):
            comm = targets[a_idx].matrix @ targets[b_idx].matrix
            comm = comm - targets[b_idx].matrix @ targets[a_idx].matrix
            if operator_norm(comm) > COMMUTE_TOL:
                raise ValueError(f"targets {a_idx} and {b_idx} do not commute within 1e-9")

    if not any(_is_not_scalar(t) for t in targets):
        handles = tuple(resolve_target(cat, t) for t in targets)
        result: tuple[InBasis | None, tuple[ObservableHandle, ...]] = (None, handles)
        cat._context_cache[cache_key] = result
        return result

    joint = _resolve_joint(cat, targets, _CONTEXT_COEFFS)
    if joint is None:
        # Pathological coefficient cancellation; retry with the alternate set.
        joint = _resolve_joint(cat, targets, _CONTEXT_COEFFS_ALT)
    if joint is None:
        raise ValueError("context collapses to a scalar under generic coefficients")

    rows = cat.bases[joint.basis_index].vectors
    per_target: list[ObservableHandle] = []
    for t in targets:
        if not _is_not_scalar(t):
            per_target.append(Scalar(float(np.trace(t.matrix).real / t.dim)))
            continue
        spectrum = sorted({v for v, _ in spectral_decomposition(t)})
        diag = np.einsum("id,de,ie->i", rows.conj(), t.matrix, rows).real
        assigned = []
        for raw in diag:
            snapped = min(spectrum, key=lambda s: abs(s - raw))
            if abs(snapped - raw) > 1e-6:
                raise ValueError(
                    "joint eigenbasis failed to diagonalise a context target; "
                    "targets are too close to non-commuting"
                )
            assigned.append(snapped)
        per_target.append(InBasis(joint.basis_index, tuple(assigned)))

    result = (joint, tuple(per_target))
    cat._context_cache[cache_key] = result
    return result


def _resolve_joint(
    cat: BasisCatalog, targets: tuple[HermitianOperator, ...], coeffs: tuple[float, ...]
) -> InBasis | None:
    combined = sum(c * t.matrix for c, t in zip(coeffs, targets))
    handle = resolve_target(cat, HermitianOperator(combined))
    return handle if isinstance(handle, InBasis) else None


def _is_not_scalar(op: HermitianOperator) -> bool:
    c = np.trace(op.matrix).real / op.dim
    return bool(np.max(np.abs(op.matrix - c * np.eye(op.dim))) > SCALAR_TOL)


# ---------------------------------------------------------------------------
# hidden states


class HiddenState:
    """One coloring in force between collapses.

    Outcomes materialise lazily, one per basis, drawn with Born weights from a
    stream keyed on (seed, epoch, basis index) — order of queries is
    irrelevant, and distinct epochs use disjoint streams.  Exclusively owned
    by one execution context; measurement mutates it.
    """

    __slots__ = ("catalog", "rho", "seed", "epoch", "outcomes")

    def __init__(self, catalog: BasisCatalog, rho: DensityOperator, seed: int) -> None:
        self.catalog = catalog
        self.rho = rho
        self.seed = seed
        self.epoch = 0
        self.outcomes: dict[int, int] = {}

    def outcome(self, basis_index: int) -> int:
        """Index of the coloring's pick for one basis (0-based), drawn on first query."""
        picked = self.outcomes.get(basis_index)
        if picked is None:
            _, cdf = self.catalog._born(self.rho, basis_index)
            u = keyed_uniform(self.seed, (_TAG_OUTCOME, self.epoch, basis_index))
            picked = min(bisect_right(cdf, u), len(cdf) - 1)
            self.outcomes[basis_index] = picked
        return picked

    def resample(self, rho: DensityOperator) -> None:
        """Jump to a fresh coloring drawn from the measure of ``rho``."""
        self.rho = rho
        self.epoch += 1
        self.outcomes.clear()

    def _advance_epoch(self) -> None:
        self.epoch += 1
        self.outcomes.clear()


def sample_hidden_state(cat: BasisCatalog, rho: DensityOperator, seed: int) -> HiddenState:
    """A fresh hidden state distributed as the product Born measure of ``rho``."""
    if rho.dim != cat.dim:
        raise ValueError(f"dimension mismatch: state {rho.dim}, catalog {cat.dim}")
    return HiddenState(cat, rho, seed)


def value_of(state: HiddenState, handle: ObservableHandle) -> float:
    """The value the coloring assigns to an observable; stable within an epoch."""
    if isinstance(handle, Scalar):
        return handle.value
    if handle.basis_index >= len(state.catalog.bases):
        raise ValueError(f"handle references basis {handle.basis_index} outside the catalog")
    return handle.eigenvalues[state.outcome(handle.basis_index)]


def _collapse(state: HiddenState, handle: InBasis, picked: int) -> None:
    values = handle.eigenvalues
    observed = values[picked]
    weights = state.catalog._born(state.rho, handle.basis_index)[0]
    rows = state.catalog.bases[handle.basis_index].vectors
    members = [i for i, v in enumerate(values) if v == observed]
    weight = float(weights[picked]) if len(members) == 1 else float(weights[members].sum())
    if weight < IMPOSSIBLE_OUTCOME_TOL:
        raise ImpossibleOutcomeError(
            f"outcome {picked} of basis {handle.basis_index} has Born weight {weight:g}"
        )
    if len(members) == 1:
        # Rank-1 projection lands exactly on the basis vector.
        vec = rows[picked]
        collapsed = np.outer(vec, vec.conj())
    else:
        block = rows[members]
        proj = block.T @ block.conj()
        collapsed = proj @ state.rho.matrix @ proj / weight
        collapsed = (collapsed + collapsed.conj().T) / 2.0
    state.rho = DensityOperator._trusted(collapsed)
    state.epoch += 1
    state.outcomes.clear()


def measure(state: HiddenState, handle: ObservableHandle) -> MeasurementRecord:
    """Reveal the coloring's value, then project the state and start a new epoch.

    The projection uses the spectral projector of the observable for the
    observed value (Lueders rule), so a degenerate outcome keeps coherence
    inside its eigenspace.  Scalar observables disturb nothing.
    """
    if isinstance(handle, Scalar):
        return MeasurementRecord(handle, handle.value, state.epoch, state.epoch)
    epoch_before = state.epoch
    picked = state.outcome(handle.basis_index)
    value = handle.eigenvalues[picked]
    _collapse(state, handle, picked)
    return MeasurementRecord(handle, value, epoch_before, state.epoch)


def measure_context(
    state: HiddenState,
    targets: list[HermitianOperator] | tuple[HermitianOperator, ...],
    *,
    collapse: bool = True,
) -> list[MeasurementRecord]:
    """Measure a commuting family simultaneously through one shared basis.

    One outcome is drawn for the joint eigenbasis; each target's record
    reports its exact eigenvalue on the realised joint eigenvector, and the
    state collapses once.  ``collapse=False`` is a diagnostic mode that skips
    the projection but still starts a fresh epoch.
    """
    joint, per_target = resolve_context(state.catalog, targets)
    return _measure_resolved(state, joint, per_target, collapse)


def _measure_resolved(
    state: HiddenState,
    joint: InBasis | None,
    per_target: tuple[ObservableHandle, ...],
    collapse: bool = True,
) -> list[MeasurementRecord]:
    """Measurement body for an already-resolved context (hot path for shot loops)."""
    epoch_before = state.epoch
    if joint is None:
        return [
            MeasurementRecord(h, h.value, epoch_before, epoch_before)  # type: ignore[union-attr]
            for h in per_target
        ]
    picked = state.outcome(joint.basis_index)
    records = [
        MeasurementRecord(
            h,
            h.value if isinstance(h, Scalar) else h.eigenvalues[picked],
            epoch_before,
            epoch_before + 1,
        )
        for h in per_target
    ]
    if collapse:
        _collapse(state, joint, picked)
    else:
        state._advance_epoch()
    return records


def sample_values(
    cat: BasisCatalog, rho: DensityOperator, handle: ObservableHandle, n: int, seed: int
) -> np.ndarray:
    """Values of one observable across ``n`` independent hidden states, vectorised.

    Distributionally identical to querying n freshly sampled states one by one
    (coloring coordinates are independent across bases), but draws the whole
    batch from a single keyed stream.
    """
    if isinstance(handle, Scalar):
        return np.full(n, handle.value)
    if rho.dim != cat.dim:
        raise ValueError(f"dimension mismatch: state {rho.dim}, catalog {cat.dim}")
    weights = cat.born_weights(rho, handle.basis_index)
    gen = RngKey(seed, (_TAG_BATCH, handle.basis_index)).generator()
    picks = gen.choice(cat.dim, size=n, p=weights / weights.sum())
    return np.asarray(handle.eigenvalues)[picks]
