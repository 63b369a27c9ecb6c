"""Voting-process measures: identities, degenerate cases, parameter trends."""

import numpy as np
import pytest

from dynpbft import (
    ModelParams,
    StateClass,
    build_voting_generator,
    dense_oracle,
    enumerate_states,
    solve_voting,
    voting_measures,
)
from dynpbft.measures import VOTING_CSV_COLUMNS, voting_csv_row
from dynpbft.qbd import StationaryDistribution


def make_params(**overrides):
    base = dict(mu=1.0, theta=1.0, gamma=10.0, beta=1.0, p=0.7, L=1, N=1)
    base.update(overrides)
    return ModelParams(**base)


PARAM_GRID = [
    make_params(),
    make_params(p=0.4, beta=3.0),
    make_params(L=1, N=2, mu=2.0, theta=2.0, gamma=10.0, beta=2.0, p=0.5),
    make_params(L=2, N=3, mu=0.5, theta=1.5, gamma=4.0, beta=0.3, p=0.35),
]


class TestIdentities:
    @pytest.mark.parametrize("params", PARAM_GRID)
    def test_partition_of_unity(self, params):
        _, m = solve_voting(params)
        assert m.completed == pytest.approx(m.zeta1 + m.zeta2, abs=1e-15)
        assert m.completed + m.no_quorum + m.voting == pytest.approx(1.0, abs=1e-12)
        assert 0.0 <= m.zeta1 <= 1.0 and 0.0 <= m.zeta2 <= 1.0
        assert m.r1 == pytest.approx(params.beta * m.zeta1, abs=1e-15)
        assert m.r2 == pytest.approx(params.beta * m.zeta2, abs=1e-15)

    @pytest.mark.parametrize("params", PARAM_GRID)
    def test_rate_ratio(self, params):
        _, m = solve_voting(params)
        if m.zeta2 > 0:
            assert m.r1 / m.r2 == pytest.approx(m.zeta1 / m.zeta2, rel=1e-12)

    def test_sums_follow_classifier(self):
        params = make_params(L=1, N=2, p=0.55)
        dist, m = solve_voting(params)
        codes = dist.space.class_codes
        assert m.zeta1 == pytest.approx(
            dist.pi[codes == StateClass.BLOCK_DECIDED].sum(), abs=1e-15)
        assert m.no_quorum == pytest.approx(
            dist.pi[codes == StateClass.BELOW_THRESHOLD].sum(), abs=1e-15)


class TestDegenerate:
    def test_mass_on_boundary_only(self):
        params = make_params()
        space = enumerate_states(params)
        pi = np.zeros(space.size)
        pi[: 3 * params.L] = 1.0 / (3 * params.L)
        m = voting_measures(StationaryDistribution(space=space, pi=pi))
        assert (m.zeta1, m.zeta2, m.completed, m.no_quorum, m.voting) == (
            0.0, 0.0, 0.0, 1.0, 0.0)


class TestFrozenValues:
    def test_reference_instance(self):
        # pinned from the dense-oracle solve of the 49-state instance
        _, m = solve_voting(make_params())
        assert m.zeta1 == pytest.approx(0.3839783746168997, abs=1e-10)
        assert m.zeta2 == pytest.approx(0.3300098934302876, abs=1e-10)
        assert m.no_quorum == pytest.approx(0.021529441367579814, abs=1e-10)

    def test_reference_instance_against_dense_path(self):
        gen = build_voting_generator(make_params())
        m = voting_measures(dense_oracle(gen))
        assert m.zeta1 == pytest.approx(0.3839783746168997, abs=1e-10)


class TestParameterTrends:
    def test_block_rate_grows_with_approval(self):
        grid = np.linspace(0.4, 0.7, 7)
        z1 = []
        for p in grid:
            _, m = solve_voting(make_params(mu=2.0, theta=2.0, gamma=10.0,
                                            beta=2.0, p=float(p), L=1, N=2))
            z1.append(m.zeta1)
        assert all(a <= b + 1e-12 for a, b in zip(z1, z1[1:]))
        assert z1[-1] > z1[0]

    def test_settlement_rates_grow_with_beta(self):
        for p in (0.4, 0.55, 0.7):
            r1s, r2s = [], []
            for beta in (2.5, 3.0, 3.5):
                _, m = solve_voting(make_params(mu=2.0, theta=2.0, gamma=10.0,
                                                beta=beta, p=p, L=1, N=2))
                r1s.append(m.r1)
                r2s.append(m.r2)
            assert r1s == sorted(r1s)
            assert r2s == sorted(r2s)


class TestCsv:
    def test_row_matches_columns(self):
        params = make_params()
        _, m = solve_voting(params)
        row = voting_csv_row(params, m)
        assert len(row) == len(VOTING_CSV_COLUMNS)
        assert float(row[VOTING_CSV_COLUMNS.index("r1")]) == m.r1
        a = float(row[VOTING_CSV_COLUMNS.index("A")])
        assert a == m.completed
