import math
from itertools import combinations

import numpy as np
import pytest

import mkc_lab.model as model
from mkc_lab.linalg import (
    DensityOperator,
    HermitianOperator,
    OrthonormalBasis,
    born_expectation,
    identity,
    operator_norm,
    pauli,
)
from mkc_lab.model import (
    CatalogSaturationError,
    ImpossibleOutcomeError,
    InBasis,
    Scalar,
    apply_function,
    basis_distance,
    is_totally_incompatible,
    measure,
    measure_context,
    new_catalog,
    resolve_context,
    resolve_target,
    sample_hidden_state,
    sample_values,
    value_of,
)

SQ2 = math.sqrt(2.0)


def hadamard_basis() -> OrthonormalBasis:
    return OrthonormalBasis(np.array([[1, 1], [1, -1]], dtype=complex) / SQ2)


def random_hermitian(gen, dim) -> HermitianOperator:
    g = gen.standard_normal((dim, dim)) + 1j * gen.standard_normal((dim, dim))
    return HermitianOperator((g + g.conj().T) / 2)


def brute_force_incompatible(b1: OrthonormalBasis, b2: OrthonormalBasis) -> bool:
    """Reference oracle: explicit subset projectors, explicit commutator norms."""
    dim = b1.dim
    stacks = []
    for basis in (b1, b2):
        rank1 = basis.rank1_projectors()
        subs = []
        for mask in range(1, 2**dim - 1):
            members = [i for i in range(dim) if mask >> i & 1]
            subs.append(rank1[members].sum(axis=0))
        stacks.append(subs)
    for p in stacks[0]:
        for q in stacks[1]:
            if operator_norm(p @ q - q @ p) <= 1e-9:
                return False
    return True


# ---------------------------------------------------------------------------
# total incompatibility


def test_identical_bases_are_compatible():
    b = OrthonormalBasis.computational(3)
    assert is_totally_incompatible(b, b) is False


def test_computational_vs_hadamard_dim2():
    comp = OrthonormalBasis.computational(2)
    had = hadamard_basis()
    assert is_totally_incompatible(comp, had) is True
    # direct commutator oracle: the only nontrivial projectors are rank 1
    p0 = comp.projector(0)
    pp = had.projector(0)
    assert operator_norm(p0 @ pp - pp @ p0) > 1e-9


def test_shared_projector_dim4_counterexample():
    comp = OrthonormalBasis.computational(4)
    mixed = np.eye(4, dtype=complex)
    mixed[2] = np.array([0, 0, 1, 1]) / SQ2
    mixed[3] = np.array([0, 0, 1, -1]) / SQ2
    assert is_totally_incompatible(comp, OrthonormalBasis(mixed)) is False


def test_incompatibility_dim_mismatch():
    with pytest.raises(ValueError):
        is_totally_incompatible(OrthonormalBasis.computational(2), OrthonormalBasis.computational(3))


@pytest.mark.parametrize("dim", [2, 3, 4])
def test_fast_path_matches_brute_force(dim):
    gen = np.random.Generator(np.random.Philox(key=dim + 40))
    for trial in range(6):
        bases = []
        for _ in range(2):
            g = gen.standard_normal((dim, dim)) + 1j * gen.standard_normal((dim, dim))
            q, _ = np.linalg.qr(g)
            bases.append(OrthonormalBasis(q.T))
        assert is_totally_incompatible(*bases) == brute_force_incompatible(*bases)
    comp = OrthonormalBasis.computational(dim)
    assert is_totally_incompatible(comp, comp) == brute_force_incompatible(comp, comp) == False


# ---------------------------------------------------------------------------
# basis distance


def test_distance_zero_on_self():
    b = hadamard_basis()
    assert basis_distance(b, b) == 0.0


def test_distance_computational_vs_hadamard():
    d = basis_distance(OrthonormalBasis.computational(2), hadamard_basis())
    assert d == pytest.approx(1 / SQ2, abs=1e-12)


def test_distance_phase_invariant_and_symmetric():
    gen = np.random.Generator(np.random.Philox(key=5))
    g = gen.standard_normal((3, 3)) + 1j * gen.standard_normal((3, 3))
    q, _ = np.linalg.qr(g)
    b1 = OrthonormalBasis(q.T)
    phases = np.exp(1j * gen.uniform(0, 2 * np.pi, size=3))
    b2 = OrthonormalBasis(q.T * phases[:, None])
    assert basis_distance(b1, b2) == pytest.approx(0.0, abs=1e-12)
    comp = OrthonormalBasis.computational(3)
    assert basis_distance(b1, comp) == pytest.approx(basis_distance(comp, b1), abs=1e-12)
    with pytest.raises(ValueError):
        basis_distance(b1, OrthonormalBasis.computational(2))


def test_distance_large_dim_greedy_refine():
    # permuted identity must still be recognised as the same projector set
    perm = np.eye(6, dtype=complex)[[3, 0, 5, 1, 4, 2]]
    assert basis_distance(OrthonormalBasis(np.eye(6, dtype=complex)), OrthonormalBasis(perm)) == 0.0


# ---------------------------------------------------------------------------
# catalog and resolution


def test_new_catalog_contract():
    cat = new_catalog(3, 1e-3, 42)
    assert len(cat) == 0
    with pytest.raises(ValueError):
        new_catalog(1, 1e-3, 0)
    with pytest.raises(ValueError):
        new_catalog(10, 1e-3, 0)
    with pytest.raises(ValueError):
        new_catalog(3, 0.0, 0)


def test_catalog_determinism_bit_for_bit():
    gen = np.random.Generator(np.random.Philox(key=90))
    targets = [random_hermitian(gen, 3) for _ in range(8)]
    cats = [new_catalog(3, 1e-3, 123), new_catalog(3, 1e-3, 123)]
    for cat in cats:
        for t in targets:
            resolve_target(cat, t)
    assert len(cats[0]) == len(cats[1]) == 8
    for b1, b2 in zip(cats[0].bases, cats[1].bases):
        assert b1.vectors.tobytes() == b2.vectors.tobytes()


def test_resolve_scalar():
    cat = new_catalog(3, 1e-3, 1)
    handle = resolve_target(cat, HermitianOperator(2.5 * np.eye(3)))
    assert handle == Scalar(2.5)
    assert len(cat) == 0


def test_resolve_sigma_z_mints_near_computational():
    cat = new_catalog(2, 1e-3, 7)
    handle = resolve_target(cat, pauli("z"))
    assert isinstance(handle, InBasis)
    assert handle.basis_index == 0
    assert handle.eigenvalues == (-1.0, 1.0)
    assert basis_distance(cat.bases[0], OrthonormalBasis.computational(2)) <= 1e-4

    again = resolve_target(cat, pauli("z"))
    assert again == handle
    assert len(cat) == 1


def test_resolve_nearby_target_reuses_basis():
    cat = new_catalog(2, 1e-3, 7)
    resolve_target(cat, pauli("z"))
    nearby = HermitianOperator(np.diag([1.0 + 3e-5, -1.0]).astype(complex))
    handle = resolve_target(cat, nearby)
    assert isinstance(handle, InBasis)
    assert handle.basis_index == 0
    assert len(cat) == 1
    assert handle.eigenvalues[0] == -1.0
    assert handle.eigenvalues[1] == pytest.approx(1.0 + 3e-5, abs=1e-12)


def test_resolve_far_target_mints_new_basis():
    cat = new_catalog(2, 1e-3, 7)
    resolve_target(cat, pauli("z"))
    hx = resolve_target(cat, pauli("x"))
    assert hx.basis_index == 1
    assert len(cat) == 2
    assert is_totally_incompatible(cat.bases[0], cat.bases[1])


def test_resolve_degenerate_keeps_exact_spectrum():
    cat = new_catalog(4, 1e-3, 3)
    from mkc_lab.linalg import tensor

    target = tensor(pauli("x"), identity(2))
    handle = resolve_target(cat, target)
    assert sorted(handle.eigenvalues) == [-1.0, -1.0, 1.0, 1.0]


def test_resolve_dim_mismatch():
    cat = new_catalog(3, 1e-3, 0)
    with pytest.raises(ValueError):
        resolve_target(cat, pauli("x"))


def test_catalog_saturation_error(monkeypatch):
    cat = new_catalog(2, 1e-3, 0)
    resolve_target(cat, pauli("z"))
    monkeypatch.setattr(model, "is_totally_incompatible", lambda *_: False)
    with pytest.raises(CatalogSaturationError):
        resolve_target(cat, pauli("x"))


# ---------------------------------------------------------------------------
# hidden states and measurement


def test_aligned_pure_state_is_certain():
    cat = new_catalog(2, 1e-3, 11)
    handle = resolve_target(cat, pauli("z"))
    aligned = DensityOperator(cat.bases[0].projector(0))
    for seed in range(30):
        state = sample_hidden_state(cat, aligned, seed)
        assert state.outcome(0) == 0


def test_uniform_outcomes_frequencies():
    cat = new_catalog(3, 1e-3, 13)
    gen = np.random.Generator(np.random.Philox(key=1))
    handle = resolve_target(cat, random_hermitian(gen, 3))
    mixed = DensityOperator.maximally_mixed(3)
    values = sample_values(cat, mixed, handle, 100_000, 99)
    band = 4 * math.sqrt((1 / 3) * (2 / 3) / len(values))
    for v in handle.eigenvalues:
        assert abs(np.mean(values == v) - 1 / 3) < band


def test_same_seed_same_outcomes():
    cat = new_catalog(3, 1e-3, 13)
    gen = np.random.Generator(np.random.Philox(key=2))
    for _ in range(4):
        resolve_target(cat, random_hermitian(gen, 3))
    mixed = DensityOperator.maximally_mixed(3)
    s1 = sample_hidden_state(cat, mixed, 555)
    s2 = sample_hidden_state(cat, mixed, 555)
    assert [s1.outcome(k) for k in range(len(cat))] == [s2.outcome(k) for k in range(len(cat))]
    with pytest.raises(ValueError):
        sample_hidden_state(cat, DensityOperator.maximally_mixed(2), 0)


def test_epochs_use_disjoint_streams():
    cat = new_catalog(4, 1e-3, 17)
    gen = np.random.Generator(np.random.Philox(key=3))
    for _ in range(12):
        resolve_target(cat, random_hermitian(gen, 4))
    mixed = DensityOperator.maximally_mixed(4)
    fresh = sample_hidden_state(cat, mixed, 2024)
    jumped = sample_hidden_state(cat, mixed, 2024)
    jumped.resample(mixed)
    assert jumped.epoch == 1
    first = [fresh.outcome(k) for k in range(12)]
    second = [jumped.outcome(k) for k in range(12)]
    assert first != second


def test_value_of_scalar_and_spectrum_membership():
    cat = new_catalog(3, 1e-3, 19)
    state = sample_hidden_state(cat, DensityOperator.maximally_mixed(3), 1)
    assert value_of(state, Scalar(3.0)) == 3.0
    gen = np.random.Generator(np.random.Philox(key=4))
    handle = resolve_target(cat, random_hermitian(gen, 3))
    assert value_of(state, handle) in handle.eigenvalues
    with pytest.raises(ValueError):
        value_of(state, InBasis(99, (1.0, 2.0, 3.0)))


def test_functional_coloring_law_exact():
    cat = new_catalog(3, 1e-3, 23)
    gen = np.random.Generator(np.random.Philox(key=6))
    mixed = DensityOperator.maximally_mixed(3)
    for trial in range(25):
        handle = resolve_target(cat, random_hermitian(gen, 3))
        state = sample_hidden_state(cat, mixed, trial)
        c = gen.standard_normal(4)

        def g(x, c=c):
            return c[0] + x * (c[1] + x * (c[2] + x * c[3]))

        assert value_of(state, apply_function(handle, g)) == g(value_of(state, handle))
    assert apply_function(Scalar(2.0), lambda x: x * x) == Scalar(4.0)


def test_value_of_born_mean():
    cat = new_catalog(3, 1e-3, 29)
    gen = np.random.Generator(np.random.Philox(key=8))
    g = gen.standard_normal((3, 3)) + 1j * gen.standard_normal((3, 3))
    rho = DensityOperator(g @ g.conj().T / np.trace(g @ g.conj().T).real)
    target = random_hermitian(gen, 3)
    handle = resolve_target(cat, target)
    values = sample_values(cat, rho, handle, 100_000, 4321)
    se = values.std(ddof=1) / math.sqrt(len(values))
    assert abs(values.mean() - born_expectation(rho, target)) < 4 * se


def test_measure_repeat_same_value():
    cat = new_catalog(2, 1e-3, 31)
    handle = resolve_target(cat, pauli("z"))
    state = sample_hidden_state(cat, DensityOperator.maximally_mixed(2), 77)
    first = measure(state, handle)
    second = measure(state, handle)
    assert first.value == second.value
    assert (first.epoch_before, first.epoch_after) == (0, 1)
    assert (second.epoch_before, second.epoch_after) == (1, 2)


def test_measure_scalar_no_collapse():
    cat = new_catalog(2, 1e-3, 31)
    state = sample_hidden_state(cat, DensityOperator.maximally_mixed(2), 1)
    record = measure(state, Scalar(2.0))
    assert record.value == 2.0
    assert state.epoch == 0


def test_measure_own_projector_certain():
    cat = new_catalog(2, 1e-3, 37)
    proj = HermitianOperator(np.array([[1, 0], [0, 0]], dtype=complex))
    handle = resolve_target(cat, proj)
    psi = DensityOperator(proj.matrix)
    for seed in range(20):
        state = sample_hidden_state(cat, psi, seed)
        record = measure(state, handle)
        assert abs(record.value - 1.0) < 1e-6


def test_impossible_outcome_error():
    cat = new_catalog(2, 1e-3, 41)
    handle = resolve_target(cat, pauli("z"))
    aligned = DensityOperator(cat.bases[0].projector(0))
    state = sample_hidden_state(cat, aligned, 5)
    state.outcomes[0] = 1  # forced zero-weight outcome
    with pytest.raises(ImpossibleOutcomeError):
        measure(state, handle)


# ---------------------------------------------------------------------------
# contexts


def square_row1():
    from mkc_lab.linalg import tensor

    sx, one = pauli("x"), identity(2)
    return [tensor(sx, one), tensor(one, sx), tensor(sx, sx)]


def square_col3():
    from mkc_lab.linalg import tensor

    sx, sy, sz = pauli("x"), pauli("y"), pauli("z")
    return [tensor(sx, sx), tensor(sy, sy), tensor(sz, sz)]


def test_context_products_exact():
    cat = new_catalog(4, 1e-3, 43)
    mixed = DensityOperator.maximally_mixed(4)
    row, col = square_row1(), square_col3()
    for seed in range(200):
        state = sample_hidden_state(cat, mixed, seed)
        records = measure_context(state, row)
        assert records[0].value * records[1].value * records[2].value == 1.0
        records = measure_context(state, col)
        assert records[0].value * records[1].value * records[2].value == -1.0


def test_single_element_context_reduces_to_measure():
    from mkc_lab.linalg import tensor

    degenerate = tensor(pauli("x"), identity(2))
    cat1 = new_catalog(4, 1e-3, 47)
    cat2 = new_catalog(4, 1e-3, 47)
    mixed = DensityOperator.maximally_mixed(4)
    s1 = sample_hidden_state(cat1, mixed, 9)
    s2 = sample_hidden_state(cat2, mixed, 9)
    rec_ctx = measure_context(s1, [degenerate])[0]
    rec_direct = measure(s2, resolve_target(cat2, degenerate))
    assert rec_ctx.value == rec_direct.value
    assert np.allclose(s1.rho.matrix, s2.rho.matrix, atol=1e-12)
    assert s1.epoch == s2.epoch == 1


def test_non_commuting_context_rejected():
    cat = new_catalog(2, 1e-3, 53)
    state = sample_hidden_state(cat, DensityOperator.maximally_mixed(2), 0)
    with pytest.raises(ValueError):
        measure_context(state, [pauli("x"), pauli("z")])


def test_scalar_contexts():
    cat = new_catalog(2, 1e-3, 59)
    state = sample_hidden_state(cat, DensityOperator.maximally_mixed(2), 0)
    records = measure_context(state, [HermitianOperator(2.0 * np.eye(2))])
    assert records[0].value == 2.0
    assert state.epoch == 0
    mixed_ctx = measure_context(state, [HermitianOperator(3.0 * np.eye(2)), pauli("z")])
    assert mixed_ctx[0].value == 3.0
    assert mixed_ctx[1].value in (-1.0, 1.0)
    assert state.epoch == 1


def test_resolve_context_caches_and_validated():
    cat = new_catalog(4, 1e-3, 61)
    row = square_row1()
    first = resolve_context(cat, row)
    second = resolve_context(cat, row)
    assert first is second
    with pytest.raises(ValueError):
        resolve_context(cat, [])


# ---------------------------------------------------------------------------
# session-level catalog integrity


@pytest.mark.parametrize("dim", [3, 4])
def test_catalog_integrity_after_fifty_mints(dim):
    cat = new_catalog(dim, 1e-3, 1000 + dim)
    gen = np.random.Generator(np.random.Philox(key=dim))
    while len(cat) < 50:
        resolve_target(cat, random_hermitian(gen, dim))
    for i, j in combinations(range(50), 2):
        assert is_totally_incompatible(cat.bases[i], cat.bases[j])
