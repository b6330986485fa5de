import itertools

import numpy as np
import pytest

from hybridiq.channel import apply, completeness_defect
from hybridiq.classical import counting_space
from hybridiq.errors import (
    DimensionMismatch,
    IncompleteInstrument,
    NotAState,
    RecordSpaceTooLarge,
    ShapeMismatch,
)
from hybridiq.locc import (
    LoccProtocol,
    LoccRound,
    as_hybrid_channels,
    branch_operators,
    complete_record_space,
    initial_record_state,
    is_ppt,
    run,
    run_steering,
    separable_from_ensemble,
    steer_to_separable,
)
from hybridiq.rand import random_density, random_kraus_set, random_probability_vector
from hybridiq.state import quantum_marginal

BELL = np.zeros((4, 4), dtype=complex)
for _i in (0, 3):
    for _j in (0, 3):
        BELL[_i, _j] = 0.5

P0 = np.diag([1.0, 0.0]).astype(complex)
P1 = np.diag([0.0, 1.0]).astype(complex)


def random_instrument(d, outcomes, rng):
    return random_kraus_set(d, outcomes, rng)


def random_protocol(rng, dims=(2, 2), max_rounds=3, max_outcomes=2):
    n_rounds = int(rng.integers(1, max_rounds + 1))
    outcome_counts = [int(rng.integers(1, max_outcomes + 1)) for _ in range(n_rounds)]
    rounds = []
    for r in range(n_rounds):
        side = 1 if r % 2 == 0 else 2
        d_side = dims[side - 1]
        instrument = {
            history: random_instrument(d_side, outcome_counts[r], rng)
            for history in itertools.product(*(range(1, outcome_counts[s] + 1) for s in range(r)))
        }
        rounds.append(LoccRound(outcome_counts[r], instrument, side))
    return LoccProtocol(dims, tuple(rounds))


def test_single_round_identity():
    proto = LoccProtocol((2, 2), (LoccRound(1, {(): [np.eye(2)]}),))
    rho = random_density(4, np.random.default_rng(0))
    state, lam = run(proto, rho)
    assert state.space.size == 1
    assert np.allclose(state.masses[0], rho, atol=1e-12)
    assert np.allclose(lam, rho, atol=1e-12)


def test_bell_measurement_example():
    proto = LoccProtocol((2, 2), (LoccRound(2, {(): [P0, P1]}, side=1),))
    state, lam = run(proto, BELL)

    expected_0 = np.zeros((4, 4), dtype=complex)
    expected_0[0, 0] = 0.5
    expected_3 = np.zeros((4, 4), dtype=complex)
    expected_3[3, 3] = 0.5
    assert state.space.labels == ((1,), (2,))
    assert np.abs(state.masses[0] - expected_0).max() <= 1e-12
    assert np.abs(state.masses[1] - expected_3).max() <= 1e-12
    assert np.abs(lam - (expected_0 + expected_3)).max() <= 1e-12
    assert is_ppt(lam, 2, 2)
    assert not is_ppt(BELL, 2, 2)


def test_run_matches_record_enumeration_oracle():
    rng = np.random.default_rng(1)
    proto = random_protocol(rng, max_rounds=2)
    rho = random_density(4, rng)
    state, lam = run(proto, rho)

    # enumerate every record by brute force
    oracle = {}
    counts = [rnd.outcomes for rnd in proto.rounds]
    for record in itertools.product(*(range(1, c + 1) for c in counts)):
        w = np.eye(4, dtype=complex)
        for r, rnd in enumerate(proto.rounds):
            v = rnd.instrument[record[:r]][record[r] - 1]
            lifted = np.kron(v, np.eye(2)) if rnd.side == 1 else np.kron(np.eye(2), v)
            w = lifted @ w
        oracle[record] = w @ rho @ w.conj().T
    for i, record in enumerate(state.space.labels):
        assert np.abs(state.masses[i] - oracle[record]).max() <= 1e-12
    assert np.abs(lam - sum(oracle.values())).max() <= 1e-12
    assert np.trace(lam).real == pytest.approx(1.0, abs=1e-9)
    assert np.linalg.eigvalsh((lam + lam.conj().T) / 2)[0] >= -1e-9


def test_w_operators_factor_across_sides():
    rng = np.random.default_rng(2)
    for _ in range(10):
        proto = random_protocol(rng)
        for branch in branch_operators(proto):
            assert np.abs(branch.w - np.kron(branch.w_side1, branch.w_side2)).max() <= 1e-12


def test_missing_instrument_raises_or_prunes():
    # round 2 has no entry for history (2,): reachable with Bell input -> error
    proto = LoccProtocol(
        (2, 2),
        (
            LoccRound(2, {(): [P0, P1]}, side=1),
            LoccRound(1, {(1,): [np.eye(2)]}, side=2),
        ),
    )
    with pytest.raises(IncompleteInstrument):
        run(proto, BELL)
    # but with input having no mass on the (2,) branch the protocol runs
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = 1.0
    state, lam = run(proto, rho)
    assert np.trace(lam).real == pytest.approx(1.0, abs=1e-12)


def test_incomplete_instrument_rejected_at_construction():
    with pytest.raises(IncompleteInstrument):
        LoccProtocol((2, 2), (LoccRound(2, {(): [P0, 0.5 * P1]}, side=1),))


def test_protocol_shape_validation():
    with pytest.raises(ShapeMismatch):
        LoccProtocol((2, 0), (LoccRound(1, {(): [np.eye(2)]}),))
    with pytest.raises(ShapeMismatch):
        LoccProtocol((2, 2), (LoccRound(1, {(1,): [np.eye(2)]}),))


def test_default_side_alternation():
    proto = LoccProtocol(
        (2, 3),
        (
            LoccRound(1, {(): [np.eye(2)]}),
            LoccRound(1, {(1,): [np.eye(3)]}),
            LoccRound(1, {(1, 1): [np.eye(2)]}),
        ),
    )
    assert [rnd.side for rnd in proto.rounds] == [1, 2, 1]


def test_as_hybrid_channels_single_round_identity():
    proto = LoccProtocol((2, 2), (LoccRound(1, {(): [np.eye(2)]}, side=1),))
    channels = as_hybrid_channels(proto)
    assert len(channels) == 1
    ch = channels[0]
    assert ch.src_space.labels == ((0,), (1,))
    assert (1, 0) in ch.blocks and (1, 1) in ch.blocks
    assert completeness_defect(ch) <= 1e-12


def test_as_hybrid_channels_bell_measurement():
    proto = LoccProtocol((2, 2), (LoccRound(2, {(): [P0, P1]}, side=1),))
    state = initial_record_state(proto, BELL)
    (channel,) = as_hybrid_channels(proto)
    final = apply(channel, state)
    direct, lam = run(proto, BELL)
    by_record = dict(zip(final.space.labels, final.masses))
    assert np.abs(by_record[(0,)]).max() <= 1e-12
    assert np.abs(by_record[(1,)] - direct.masses[0]).max() <= 1e-12
    assert np.abs(by_record[(2,)] - direct.masses[1]).max() <= 1e-12
    assert np.abs(quantum_marginal(final) - lam).max() <= 1e-12


def test_as_hybrid_channels_reproduce_run():
    rng = np.random.default_rng(3)
    for _ in range(10):
        proto = random_protocol(rng)
        rho = random_density(4, rng)
        state = initial_record_state(proto, rho)
        for ch in as_hybrid_channels(proto):
            assert completeness_defect(ch) <= 1e-9
            state = apply(ch, state)
        direct, lam = run(proto, rho)
        by_record = {rec: state.masses[i] for i, rec in enumerate(state.space.labels)}
        complete = set(direct.space.labels)
        for rec, mass in by_record.items():
            if rec in complete:
                i = direct.space.labels.index(rec)
                assert np.abs(mass - direct.masses[i]).max() <= 1e-10
            else:
                assert np.abs(mass).max() <= 1e-12
        assert np.abs(quantum_marginal(state) - lam).max() <= 1e-10


def test_record_space_limit():
    # lazy instruments make construction legal; lowering must still refuse the
    # 10^6-cell record space
    proto = LoccProtocol((2, 2), tuple(LoccRound(9, {}, side=1) for _ in range(6)))
    with pytest.raises(RecordSpaceTooLarge):
        as_hybrid_channels(proto)


def test_separable_from_ensemble():
    space = counting_space(1)
    rng = np.random.default_rng(6)
    a, b = random_density(2, rng), random_density(3, rng)
    rho = separable_from_ensemble(space, [1.0], [a], [b])
    assert np.allclose(rho, np.kron(a, b), atol=1e-12)

    space2 = counting_space(2)
    classically_correlated = separable_from_ensemble(
        space2, [0.5, 0.5], [P0, P1], [P0, P1]
    )
    assert is_ppt(classically_correlated, 2, 2)
    with pytest.raises(NotAState):
        separable_from_ensemble(space2, [0.7, 0.5], [P0, P1], [P0, P1])


def test_separable_states_are_always_ppt():
    rng = np.random.default_rng(7)
    for _ in range(20):
        n = int(rng.integers(1, 17))
        space = counting_space(n)
        f = random_probability_vector(n, rng)
        d1, d2 = int(rng.integers(2, 4)), int(rng.integers(2, 4))
        eta1 = [random_density(d1, rng) for _ in range(n)]
        eta2 = [random_density(d2, rng) for _ in range(n)]
        rho = separable_from_ensemble(space, f, eta1, eta2)
        assert is_ppt(rho, d1, d2)


def test_is_ppt_validation():
    with pytest.raises(DimensionMismatch):
        is_ppt(np.eye(4) / 4, 3, 2)


def test_locc_preserves_ppt_on_separable_inputs():
    rng = np.random.default_rng(8)
    for _ in range(25):
        n = int(rng.integers(1, 9))
        space = counting_space(n)
        rho = separable_from_ensemble(
            space,
            random_probability_vector(n, rng),
            [random_density(2, rng) for _ in range(n)],
            [random_density(2, rng) for _ in range(n)],
        )
        proto = random_protocol(rng)
        _, lam = run(proto, rho)
        assert is_ppt(lam, 2, 2)


def test_steering_bell_to_pure_product():
    space = counting_space(1)
    script = steer_to_separable(space, [1.0], [P0], [P0])
    final = run_steering(script, BELL)
    assert np.abs(quantum_marginal(final) - np.kron(P0, P0)).max() <= 1e-12


def test_steering_reaches_classically_correlated_target():
    rng = np.random.default_rng(9)
    space = counting_space(2)
    script = steer_to_separable(space, [0.5, 0.5], [P0, P1], [P0, P1])
    rho_in = random_density(4, rng)
    final = run_steering(script, rho_in)
    target = separable_from_ensemble(space, [0.5, 0.5], [P0, P1], [P0, P1])
    assert np.abs(quantum_marginal(final) - target).max() <= 1e-9


def test_steering_random_targets():
    rng = np.random.default_rng(10)
    for _ in range(10):
        n = int(rng.integers(1, 9))
        space = counting_space(n)
        f = random_probability_vector(n, rng)
        d1, d2 = int(rng.integers(2, 4)), int(rng.integers(2, 4))
        eta1 = [random_density(d1, rng) for _ in range(n)]
        eta2 = [random_density(d2, rng) for _ in range(n)]
        script = steer_to_separable(space, f, eta1, eta2)
        for ch in script.channels:
            assert completeness_defect(ch) <= 1e-9
        rho_in = random_density(d1 * d2, rng)
        final = run_steering(script, rho_in)
        target = separable_from_ensemble(space, f, eta1, eta2)
        assert np.abs(quantum_marginal(final) - target).max() <= 1e-9


def test_complete_record_space_labels():
    proto = LoccProtocol(
        (2, 2),
        (
            LoccRound(2, {(): [P0, P1]}, side=1),
            LoccRound(1, {(1,): [np.eye(2)], (2,): [np.eye(2)]}, side=2),
        ),
    )
    space = complete_record_space(proto)
    assert space.labels == ((1, 1), (2, 1))
