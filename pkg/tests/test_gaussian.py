import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qpdecouple.errors import (
    DimensionMismatch,
    InvalidParameter,
    MalformedInput,
    NonPhysicalStructure,
    NonPositiveParameter,
    NotUnitary,
)
from qpdecouple.gaussian import (
    GROUPED,
    INTERLEAVED,
    ComplexCov,
    PassiveOp,
    QuadCov,
    SymplecticOp,
    add_displacement_noise,
    apply_passive,
    apply_symplectic,
    beamsplitter,
    complex_to_quad,
    cross_corr_block,
    cross_corr_norm,
    is_physical,
    omega,
    passive_to_symplectic,
    phase_shifter,
    preset_cccstate,
    preset_twomode,
    quad_to_complex,
    random_passive,
    random_pure_state,
    random_state,
    simulate_cccstate_scheme,
    squeezer,
    symplectic_eigenvalues,
    vacuum,
    xy_blocks,
)

CCC = 0.5 * np.array([[3, 0.5, 1, 0], [0.5, 0.75, 0.5, 0], [1, 0.5, 2, 0], [0, 0, 0, 1]])


class TestQuadCov:
    def test_validation(self):
        with pytest.raises(MalformedInput):
            QuadCov(np.eye(3))
        with pytest.raises(MalformedInput):
            QuadCov(np.array([[1, 2], [0, 1]]))
        with pytest.raises(MalformedInput):
            QuadCov(np.array([[np.inf, 0], [0, 1]]))

    def test_read_only(self):
        s = vacuum(1)
        with pytest.raises(ValueError):
            s.M[0, 0] = 3.0

    def test_ordering_round_trip(self):
        s = preset_cccstate()
        g = s.to("qqpp")
        assert g.ordering == GROUPED
        # grouped order lists q1 q2 p1 p2
        assert g.M[0, 1] == s.M[0, 2] and g.M[0, 2] == s.M[0, 1]
        assert np.array_equal(g.to(INTERLEAVED).M, s.M)

    def test_symplectic_form(self):
        w = omega(2)
        assert np.array_equal(w @ w, -np.eye(4))


class TestBasisChange:
    def test_twomode_blocks(self):
        b = xy_blocks(preset_twomode(2, 1, 0.5, 0.5))
        assert np.allclose(b.X, np.diag([2, 1]))
        assert np.allclose(b.Y, [[0, 0.5], [0.5, 0.5j]])

    def test_vacuum_blocks(self):
        b = xy_blocks(vacuum(3))
        assert np.allclose(b.X, 0.5 * np.eye(3)) and np.allclose(b.Y, 0)

    @pytest.mark.parametrize("ordering", ["qpqp", "qqpp"])
    def test_round_trip(self, ordering):
        for seed in range(20):
            s = random_state(1 + seed % 4, seed).to(ordering)
            back = complex_to_quad(quad_to_complex(s), ordering)
            assert np.max(np.abs(back.M - s.M)) <= 1e-12

    def test_structure_check(self):
        with pytest.raises(NonPhysicalStructure):
            ComplexCov(np.array([[1, 0.3], [0.2, 1]]))


class TestOperations:
    def test_passive_symplectic_agree(self, rng):
        for n in (1, 2, 3):
            s = random_state(n, int(rng.integers(1000)))
            p = random_passive(n, rng)
            via_blocks = apply_passive(xy_blocks(s), p)
            via_quad = xy_blocks(apply_symplectic(s, passive_to_symplectic(p)))
            assert np.allclose(via_blocks.X, via_quad.X, atol=1e-12)
            assert np.allclose(via_blocks.Y, via_quad.Y, atol=1e-12)

    def test_passive_is_orthogonal_symplectic(self, rng):
        T = passive_to_symplectic(random_passive(3, rng)).T
        assert np.allclose(T @ T.T, np.eye(6), atol=1e-12)

    def test_identities(self):
        assert np.allclose(squeezer(0.0).T, np.eye(2))
        assert np.allclose(beamsplitter(1.0).T, np.eye(4))
        assert np.allclose(phase_shifter(0.0).T, np.eye(2))

    def test_squeezer_scales_variances(self):
        s = apply_symplectic(vacuum(1), squeezer(0.3))
        assert np.allclose(np.diag(s.M), [0.5 * np.exp(-0.6), 0.5 * np.exp(0.6)])

    def test_phase_shifter_quarter_turn(self):
        # q -> -p, p -> q
        T = phase_shifter(np.pi / 2).T
        assert np.allclose(T, [[0, -1], [1, 0]], atol=1e-15)

    def test_beamsplitter_mixes_q_and_p_alike(self):
        T = beamsplitter(0.3).T
        a, b = np.sqrt(0.3), np.sqrt(0.7)
        assert np.allclose(T[0::2, 0::2], [[a, b], [-b, a]])
        assert np.allclose(T[1::2, 1::2], [[a, b], [-b, a]])
        assert np.allclose(T[0::2, 1::2], 0)

    def test_noise_is_rank_one(self):
        s = add_displacement_noise(vacuum(2), 1, "p", 0.7)
        diff = s.M - vacuum(2).M
        assert diff[3, 3] == pytest.approx(0.7) and np.count_nonzero(diff) == 1

    def test_bad_parameters(self):
        with pytest.raises(InvalidParameter):
            beamsplitter(1.5)
        with pytest.raises(InvalidParameter):
            add_displacement_noise(vacuum(1), 0, "q", -1.0)
        with pytest.raises(InvalidParameter):
            add_displacement_noise(vacuum(1), 0, "x", 1.0)
        with pytest.raises(InvalidParameter):
            SymplecticOp(np.diag([2.0, 2.0]))
        with pytest.raises(NotUnitary):
            PassiveOp(np.diag([1.0, 2.0]))
        with pytest.raises(DimensionMismatch):
            apply_passive(xy_blocks(vacuum(2)), PassiveOp(np.eye(3)))

    def test_composition(self, rng):
        p, q = random_passive(2, rng), random_passive(2, rng)
        lhs = passive_to_symplectic(p @ q).T
        rhs = (passive_to_symplectic(p) @ passive_to_symplectic(q)).T
        assert np.allclose(lhs, rhs, atol=1e-12)


class TestCorrelations:
    def test_vacuum(self):
        assert cross_corr_norm(vacuum(3)) == 0.0

    def test_cccstate(self):
        assert cross_corr_norm(preset_cccstate()) == 0.25

    def test_twomode_scan(self):
        # the only q-p entry of the two-mode family is cov(q2, p2) = s
        s = preset_twomode(2, 1, 0.5, 0.3)
        assert np.allclose(cross_corr_block(s), [[0, 0], [0, 0.3]])
        assert cross_corr_norm(s) == 0.3

    def test_ordering_independent(self):
        s = preset_cccstate()
        assert cross_corr_norm(s.to("qqpp")) == cross_corr_norm(s)


class TestPhysicality:
    def test_vacuum(self):
        assert np.allclose(symplectic_eigenvalues(vacuum(2)), [0.5, 0.5])
        assert is_physical(vacuum(2))

    def test_below_vacuum(self):
        assert not is_physical(QuadCov(0.25 * np.eye(2)))

    def test_squeezed_vacuum_pure(self):
        r = 0.8
        s = QuadCov(0.5 * np.diag([np.exp(-2 * r), np.exp(2 * r)]))
        assert np.allclose(symplectic_eigenvalues(s), [0.5])

    def test_cccstate_against_direct_eigensolver(self):
        s = preset_cccstate()
        ref = np.sort(np.abs(np.linalg.eigvals(1j * omega(2) @ s.M)))[0::2]
        assert np.allclose(symplectic_eigenvalues(s), ref, atol=1e-12)
        assert np.all(ref >= 0.5 - 1e-9) and is_physical(s)

    def test_random_states_physical(self):
        for seed in range(30):
            n = 1 + seed % 4
            assert np.allclose(symplectic_eigenvalues(random_pure_state(n, seed)), 0.5, atol=1e-8)
            assert is_physical(random_state(n, seed))
            assert is_physical(random_state(n, seed, decouplable=True))

    def test_deterministic(self):
        assert np.array_equal(random_state(3, 5).M, random_state(3, 5).M)


class TestPresets:
    def test_cccstate_literal(self):
        s = preset_cccstate()
        assert np.array_equal(s.M, CCC)
        assert s.M[0, 0] == 1.5

    def test_twomode_entries(self):
        s = preset_twomode(2, 1, 0.5, 0.5)
        assert s.M[0, 2] == 0.5 and s.M[1, 3] == -0.5

    def test_twomode_rejects_nonpositive(self):
        with pytest.raises(NonPositiveParameter):
            preset_twomode(1, 1, 0, 0)

    def test_scheme_reproduces_literal(self):
        s = simulate_cccstate_scheme()
        assert np.max(np.abs(s.M - CCC)) < 1e-12


class TestInvariants:
    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 4), st.integers(0, 2**31))
    def test_passive_conserves_trace_and_spectrum(self, n, seed):
        rng = np.random.default_rng(seed)
        s = random_state(n, seed)
        p = random_passive(n, rng)
        b = xy_blocks(s)
        out = apply_passive(b, p)
        assert abs(np.trace(out.X) - np.trace(b.X)) <= 1e-9
        after = apply_symplectic(s, passive_to_symplectic(p))
        assert np.allclose(np.linalg.eigvalsh(after.M), np.linalg.eigvalsh(s.M), atol=1e-9)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 3), st.integers(0, 2**31))
    def test_symplectic_spectrum_invariant(self, n, seed):
        rng = np.random.default_rng(seed)
        s = random_state(n, seed)
        op = passive_to_symplectic(random_passive(n, rng))
        for k in range(n):
            op = squeezer(rng.uniform(-0.5, 0.5), k, n) @ op
        out = apply_symplectic(s, op)
        assert np.allclose(symplectic_eigenvalues(out), symplectic_eigenvalues(s), atol=1e-9)
