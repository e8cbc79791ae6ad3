import numpy as np
import pytest

from qpdecouple.decoupler import Verdict, decouple
from qpdecouple.errors import InvalidDimension, InvalidParameter
from qpdecouple.gaussian import preset_cccstate, preset_twomode, random_state, vacuum
from qpdecouple.matcore import is_unitary
from qpdecouple.oracle import mesh_unitary, oracle_agreement, oracle_min_residual


class TestMesh:
    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_unitary_and_identity(self, n):
        assert np.allclose(mesh_unitary(np.zeros(n * n), n), np.eye(n))
        x = np.random.default_rng(n).uniform(-np.pi, np.pi, n * n)
        assert is_unitary(mesh_unitary(x, n))


class TestOracle:
    def test_twomode_reaches_zero(self):
        res = oracle_min_residual(preset_twomode(2, 1, 0.5, 0.5), restarts=8)
        assert res.min_residual <= 1e-7
        assert is_unitary(res.best_E.E)

    def test_vacuum(self):
        assert oracle_min_residual(vacuum(2), restarts=1).min_residual <= 1e-12

    def test_cccstate_floor(self):
        res = oracle_min_residual(preset_cccstate(), restarts=10)
        assert res.min_residual >= 0.01
        assert res.restarts_used == 10

    def test_warm_start_never_worse_than_decoupler(self):
        s = preset_twomode(3, 1, 0.2, 0.7)
        rep = decouple(s)
        res = oracle_min_residual(s, restarts=1, warm_start=rep.passive_op)
        assert res.min_residual <= rep.residual + 1e-9

    def test_monotone_in_restarts(self):
        s = preset_cccstate()
        floors = [oracle_min_residual(s, restarts=r, seed=3).min_residual for r in (1, 3, 6)]
        assert floors[0] >= floors[1] >= floors[2]

    def test_jobs_deterministic(self):
        s = random_state(2, 9)
        a = oracle_min_residual(s, restarts=4, seed=1, jobs=1)
        b = oracle_min_residual(s, restarts=4, seed=1, jobs=3)
        assert a.min_residual == b.min_residual and a.restarts_used == b.restarts_used

    def test_minimax_lowers_floor(self):
        s = preset_cccstate()
        plain = oracle_min_residual(s, restarts=4, minimax=False).min_residual
        assert oracle_min_residual(s, restarts=4).min_residual <= plain + 1e-12

    def test_limits(self):
        with pytest.raises(InvalidDimension):
            oracle_min_residual(vacuum(7))
        with pytest.raises(InvalidParameter):
            oracle_min_residual(vacuum(1), restarts=0)


class TestAgreement:
    def test_decoupled(self):
        a = oracle_agreement(random_state(3, 2, decouplable=True))
        assert a.verdict is Verdict.DECOUPLED and a.agree
        assert a.status == "agree-Decoupled"

    def test_not_decouplable(self):
        a = oracle_agreement(preset_cccstate(), restarts=8)
        assert a.verdict is Verdict.NOT_DECOUPLABLE and a.agree
        assert a.oracle_residual >= a.threshold
