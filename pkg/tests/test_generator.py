"""Generator assembly: transition rules, block structure, queue blocks."""

import numpy as np
import pytest
from scipy.sparse.csgraph import connected_components

from dynpbft import (
    ModelParams,
    StateClass,
    VotingState,
    build_queue_blocks,
    build_voting_generator,
    classify,
    dump_triplets,
    transition_rules,
)


def make_params(**overrides):
    base = dict(mu=1.0, theta=1.0, gamma=10.0, beta=1.0, p=0.7, L=1, N=1)
    base.update(overrides)
    return ModelParams(**base)


PARAM_GRID = [
    make_params(),
    make_params(L=1, N=2, mu=2.0, theta=2.0, gamma=10.0, beta=2.0, p=0.5),
    make_params(L=2, N=3, mu=0.5, theta=1.5, gamma=4.0, beta=0.3, p=0.35),
]


class TestTransitionRules:
    def test_boundary_top(self):
        params = make_params()
        got = dict(transition_rules(params, VotingState(2, 0, 0)))
        assert got == {VotingState(3, 0, 0): params.mu, VotingState(1, 0, 0): params.theta}

    def test_boundary_bottom(self):
        params = make_params(L=2, N=2)
        got = dict(transition_rules(params, VotingState(0, 0, 0)))
        assert got == {VotingState(1, 0, 0): params.mu}

    def test_decided_top_level(self):
        params = make_params()
        got = dict(transition_rules(params, VotingState(5, 4, 0)))
        assert got == {
            VotingState(4, 4, 0): params.theta,
            VotingState(5, 5, 0): params.gamma * params.p,
            VotingState(5, 4, 1): params.gamma * params.q,
            VotingState(5, 0, 0): params.beta,
        }

    def test_fully_voted_block_at_quorum_floor(self):
        params = make_params()
        got = dict(transition_rules(params, VotingState(3, 3, 0)))
        assert got == {VotingState(4, 3, 0): params.mu, VotingState(3, 0, 0): params.beta}

    def test_no_departure_from_mid_vote_quorum_floor(self):
        params = make_params()
        targets = [t for t, _ in transition_rules(params, VotingState(3, 1, 0))]
        assert VotingState(2, 1, 0) not in targets
        # the vote-free floor state does depart
        targets = [t for t, _ in transition_rules(params, VotingState(3, 0, 0))]
        assert VotingState(2, 0, 0) in targets

    def test_no_departure_from_fully_voted(self):
        params = make_params(L=1, N=2)
        targets = [t for t, _ in transition_rules(params, VotingState(5, 2, 3))]
        assert VotingState(4, 2, 3) not in targets

    def test_invalid_state(self):
        with pytest.raises(ValueError):
            transition_rules(make_params(), VotingState(2, 1, 0))

    @pytest.mark.parametrize("params", PARAM_GRID)
    def test_all_targets_stay_in_space(self, params):
        gen = build_voting_generator(params)
        for s in gen.space.states:
            for target, rate in transition_rules(params, s):
                assert rate > 0
                assert target in gen.space.index


class TestVotingGenerator:
    @pytest.mark.parametrize("params", PARAM_GRID)
    def test_conservation_and_signs(self, params):
        Q = build_voting_generator(params).Q.toarray()
        assert np.abs(Q.sum(axis=1)).max() <= 1e-12
        off = Q - np.diag(np.diag(Q))
        assert off.min() >= 0.0
        assert np.diag(Q).max() < 0.0

    @pytest.mark.parametrize("params", PARAM_GRID)
    def test_block_tridiagonal(self, params):
        gen = build_voting_generator(params)
        levels = gen.space.levels
        for i, li in enumerate(levels):
            for j, lj in enumerate(levels):
                if abs(i - j) >= 2:
                    assert not gen.block(li, lj).any(), (li, lj)

    @pytest.mark.parametrize("params", PARAM_GRID)
    def test_irreducible(self, params):
        Q = build_voting_generator(params).Q
        ncomp, _ = connected_components(Q, directed=True, connection="strong")
        assert ncomp == 1

    def test_diagonal_cases_exhaustive(self):
        params = make_params(L=1, N=2, mu=2.0, theta=2.0, gamma=10.0, beta=2.0, p=0.5)
        gen = build_voting_generator(params)
        mu, th, ga, be = params.mu, params.theta, params.gamma, params.beta
        lo, hi = params.n_min, params.n_max
        diag = gen.Q.diagonal()
        for i, s in enumerate(gen.space.states):
            n, m, k = s
            if n == 0:
                want = -mu
            elif n < lo:
                want = -(mu + th)
            else:
                full = m + k == n
                decided = classify(params, s) in (
                    StateClass.BLOCK_DECIDED, StateClass.ORPHAN_DECIDED)
                if n == hi:
                    want = -be if full else (-(ga + th + be) if decided else -(ga + th))
                elif full:
                    want = -(mu + be)
                elif n == lo:
                    if (m, k) == (0, 0):
                        want = -(ga + mu + th)
                    else:
                        want = -(ga + mu + be) if decided else -(ga + mu)
                else:
                    want = -(ga + mu + th + be) if decided else -(ga + mu + th)
            assert diag[i] == pytest.approx(want, abs=1e-12), (s, diag[i], want)

    def test_block_extraction_shapes(self):
        gen = build_voting_generator(make_params(L=1, N=1))
        assert gen.q1(0).shape == (3, 3)
        assert gen.q0(0).shape == (3, 10)
        assert gen.q2(3).shape == (10, 3)
        assert gen.q1(4).shape == (15, 15)
        assert gen.q0(4).shape == (15, 21)

    def test_triplet_dump(self, tmp_path):
        gen = build_voting_generator(make_params())
        path = tmp_path / "q.txt"
        dump_triplets(gen, str(path))
        rebuilt = np.zeros((gen.space.size, gen.space.size))
        for line in path.read_text().splitlines():
            i, j, v = line.split()
            rebuilt[int(i), int(j)] = float(v)
        assert np.array_equal(rebuilt, gen.Q.toarray())


class TestLevelBlockStructures:
    """Blocks rebuilt entry by entry from their structural definitions,
    independently of the transition-rule code path."""

    def setup_method(self):
        self.params = make_params()  # L=1, N=1: levels 3, 4, 5
        self.gen = build_voting_generator(self.params)

    def test_top_level_diagonal_block(self):
        # top level l=5: phases r=0..5 of sizes 6..1; thresholds m>=4, k>=2;
        # no entries (node cap), departures only while votes stay open
        mu, th, ga, be = 1.0, 1.0, 10.0, 1.0
        p, q = 0.7, 0.3
        l, k_min, m_min = 5, 2, 4
        size = (l + 1) * (l + 2) // 2
        off = [0]
        for r in range(l + 1):
            off.append(off[-1] + (l + 1 - r))
        Q1 = np.zeros((size, size))

        def put(rp, cp, i, j, val):
            Q1[off[rp] + i, off[cp] + j] += val

        for r in range(l):  # approvals move one phase right
            for i in range(l - r):
                put(r, r + 1, i, i, ga * p)
        for r in range(l + 1):
            n_phase = l + 1 - r
            for i in range(n_phase):
                k = i
                full = r + k == l
                decided = r >= m_min or k >= k_min
                if decided:
                    put(r, 0, i, 0, be)  # settle: tallies reset within the level
                exit_rate = be * decided + (ga + th) * (not full)
                put(r, r, i, i, -exit_rate)
                if not full:  # refusals move one slot right within the phase
                    put(r, r, i, i + 1, ga * q)
        assert np.abs(Q1 - self.gen.q1(5)).max() <= 1e-14

    def test_interior_up_block(self):
        # entries keep the tallies: phase-aligned mu diagonals, one wider per phase
        Q0 = np.zeros((15, 21))
        off4 = [0, 5, 9, 12, 14]   # phase starts at level 4 (sizes 5..1)
        off5 = [0, 6, 11, 15, 18]  # phase starts at level 5 (sizes 6..2)
        for r in range(5):
            for i in range(5 - r):
                Q0[off4[r] + i, off5[r] + i] = 1.0
        assert np.abs(Q0 - self.gen.q0(4)).max() <= 1e-14

    def test_interior_down_block(self):
        # departures keep the tallies but drop fully voted rows
        Q2 = np.zeros((15, 10))
        off4 = [0, 5, 9, 12, 14]
        off3 = [0, 4, 7, 9]
        for r in range(4):
            for i in range(4 - r):
                Q2[off4[r] + i, off3[r] + i] = 1.0
        assert np.abs(Q2 - self.gen.q2(4)).max() <= 1e-14

    def test_quorum_floor_down_block(self):
        # only the vote-free floor state may lose a node
        Q2 = np.zeros((10, 3))
        Q2[0, 2] = 1.0
        assert np.abs(Q2 - self.gen.q2(3)).max() <= 1e-14

    def test_boundary_up_block(self):
        # only the last boundary state feeds the first voting level
        Q0 = np.zeros((3, 10))
        Q0[2, 0] = 1.0
        assert np.abs(Q0 - self.gen.q0(0)).max() <= 1e-14


class TestQueueBlocks:
    def test_b2_example(self):
        blocks = build_queue_blocks(1.0, 2, 0.7, 0.1)
        assert np.allclose(blocks.a0, [[0.1, 0.0], [1.0, 0.1]])
        assert np.allclose(blocks.a2, [[0.7, 0.0], [0.0, 0.7]])
        assert np.allclose(blocks.a1, [[-1.8, 1.0], [0.0, -1.8]])
        assert np.allclose(blocks.b1_0, [[-1.1, 1.0], [0.0, -1.1]])

    def test_b1_scalars(self):
        lam, r1, r2 = 0.2, 0.7, 0.1
        blocks = build_queue_blocks(lam, 1, r1, r2)
        assert np.allclose(blocks.b1_0, [[-(lam + r2)]], atol=1e-15)
        assert np.allclose(blocks.a0, [[lam + r2]], atol=1e-15)
        assert np.allclose(blocks.a1, [[-(lam + r1 + r2)]], atol=1e-15)
        assert np.allclose(blocks.a2, [[r1]], atol=1e-15)

    @pytest.mark.parametrize("b", [1, 2, 5, 17])
    def test_conservation(self, b):
        blocks = build_queue_blocks(1.3, b, 0.7, 0.05)
        boundary = blocks.b1_0 + blocks.a0
        interior = blocks.a2 + blocks.a1 + blocks.a0
        assert np.abs(boundary.sum(axis=1)).max() <= 1e-12
        assert np.abs(interior.sum(axis=1)).max() <= 1e-12

    def test_validation(self):
        with pytest.raises(ValueError):
            build_queue_blocks(0.0, 2, 0.7, 0.1)
        with pytest.raises(ValueError):
            build_queue_blocks(1.0, 0, 0.7, 0.1)
        with pytest.raises(ValueError):
            build_queue_blocks(1.0, 2, -0.7, 0.1)
        with pytest.raises(ValueError):
            build_queue_blocks(1.0, 2, 0.7, -0.1)
