import numpy as np
import pytest

from implab import LavaursMap, lavaurs_eval, lavaurs_functional_check
from oned import lavaurs_1d


@pytest.fixture(scope="module")
def L(engine):
    return LavaursMap(0.0, 0.0, engine)


class TestLavaursEval:
    def test_invariant_line_stays_exact(self, L):
        x, y = lavaurs_eval(L, (-0.4, 0.0))
        assert y == 0

    def test_matches_1d_oracle_spotwise(self, L):
        for x0 in (-0.45, -0.42, -0.4):
            got = lavaurs_eval(L, (x0, 0.0))
            want = lavaurs_1d(x0, 0.0)
            assert abs(got[0] - want) <= 1e-6

    def test_sigma_shift(self, engine, fam):
        from implab.family import evaluate

        L0 = LavaursMap(0.3, 0.0, engine)
        L1 = LavaursMap(1.3, 0.0, engine)
        for z in [(-0.45, 1e-7), (-0.41, -2e-7)]:
            a = evaluate(fam, 0.0, lavaurs_eval(L0, z))
            b = lavaurs_eval(L1, z)
            assert abs(a[0] - b[0]) <= 1e-7
            assert abs(a[1] - b[1]) <= 1e-7


class TestFunctionalCheck:
    def test_empty_sample(self, L):
        rep = lavaurs_functional_check(L, [])
        assert rep.empty
        assert rep.sup_commute == 0.0 and rep.sup_shift == 0.0

    def test_model_samples(self, engine):
        xs = np.linspace(-0.47, -0.44, 12)
        pts = [(complex(x), 1e-7 + 0j) for x in xs]
        for sigma, q in [(0.0, 0.0), (0.5, 0.3 + 0.1j)]:
            rep = lavaurs_functional_check(LavaursMap(sigma, q, engine), pts)
            assert rep.sup_commute <= 1e-6
            assert rep.sup_shift <= 1e-6
            assert len(rep.per_point) == len(pts)

    def test_q_zero_reduces_to_1d(self, engine):
        rep = lavaurs_functional_check(
            LavaursMap(0.0, 0.0, engine), [(-0.44, 0.0), (-0.46, 0.0)]
        )
        # on the invariant line the residual is the 1-D one: also tiny
        assert rep.sup_shift <= 1e-6


class TestYTwist:
    def test_tangential_linearity_deep_in_petal(self, engine):
        # t(x, l y)/t(x, y) -> l once Re(-1/x) >= 100
        x = np.array([-0.008 + 0j, -0.006 + 0j])
        y = np.array([1e-10 + 0j, 1e-10j])
        lam = 0.7 - 0.2j
        _, T1 = engine.incoming_batch(x, y)
        _, T2 = engine.incoming_batch(x, lam * y)
        assert np.max(np.abs(T2 / T1 - lam)) <= 1e-3
