import numpy as np
import pytest
from scipy.linalg import expm, sqrtm

import oracles
from lhsep.metrology import IndeterminateRatioError, qfi, qfi_variance_gap, squeezing_ratio
from lhsep.quantum_core import (
    HermitianObservable,
    QuantumState,
    QubitLayout,
    basis_ket,
    collective_spin,
    maximally_mixed,
    pure_state,
    random_density_matrix,
    random_pure_state,
    variance,
)

LAY2 = QubitLayout(("1", "2"))


def bures_qfi(rho, h, dt=1e-4):
    """Finite-difference oracle: F_Q = 8 (1 - sqrt(fidelity)) / dt^2."""
    u = expm(-1j * dt * h)
    moved = u @ rho @ u.conj().T
    s = sqrtm(rho)
    fid = np.real(np.trace(sqrtm(s @ moved @ s)))
    return 8 * (1 - fid) / dt**2


def test_commuting_generator_gives_zero():
    assert qfi(maximally_mixed(LAY2), collective_spin(LAY2, "z")).value == 0


@pytest.mark.parametrize("sign", [1, -1])
def test_bell_states(sign):
    phi = (basis_ket("dd") + sign * basis_ket("uu")) / np.sqrt(2)
    assert qfi(pure_state(LAY2, phi), collective_spin(LAY2, "z")).value == pytest.approx(4, abs=1e-12)


def test_ghz4():
    lay = QubitLayout(tuple("1234"))
    ghz = (basis_ket("uuuu") + basis_ket("dddd")) / np.sqrt(2)
    jz = collective_spin(lay, "z")
    expected = oracles.qfi_pure(ghz, jz.matrix)
    assert expected == pytest.approx(16)
    assert qfi(pure_state(lay, ghz), jz).value == pytest.approx(expected, abs=1e-8)


def test_cutoff_recorded():
    val = qfi(maximally_mixed(LAY2), collective_spin(LAY2, "x"))
    assert val.spectral_cutoff_used == 1e-12


def test_matches_finite_difference_on_mixed_states(rng):
    lay = QubitLayout(("1", "2"))
    for _ in range(5):
        rho = random_density_matrix(lay, rng)
        h = collective_spin(lay, "z")
        assert qfi(rho, h).value == pytest.approx(bures_qfi(rho.matrix, h.matrix), rel=1e-4, abs=1e-6)


class TestSqueezingRatio:
    def test_commuting(self):
        jz = collective_spin(LAY2, "z")
        assert squeezing_ratio(pure_state(LAY2, basis_ket("ud")), jz, jz) == 0

    def test_coherent_state_along_x(self):
        lay = QubitLayout(tuple("1234"))
        plus = np.array([1, 1]) / np.sqrt(2)
        vec = plus
        for _ in range(3):
            vec = np.kron(vec, plus)
        state = pure_state(lay, vec)
        jz, jy, jx = (oracles.spin_op(4, p) for p in (oracles.SZ, oracles.SY, oracles.SX))
        comm = jz @ jy - jy @ jz
        num = abs(np.vdot(vec, comm @ vec)) ** 2
        oracle = num / oracles.variance(state.matrix, jy)
        assert oracle == pytest.approx(4)
        ratio = squeezing_ratio(state, collective_spin(lay, "z"), collective_spin(lay, "y"))
        assert ratio == pytest.approx(oracle, abs=1e-12)
        assert ratio <= qfi(state, collective_spin(lay, "z")).value + 1e-8

    def test_coherent_state_along_z_is_blind(self):
        lay = QubitLayout(tuple("1234"))
        state = pure_state(lay, basis_ket("uuuu"))
        assert squeezing_ratio(state, collective_spin(lay, "z"), collective_spin(lay, "y")) == pytest.approx(0)

    def test_bell_state_chain(self):
        phi = (basis_ket("dd") + basis_ket("uu")) / np.sqrt(2)
        state = pure_state(LAY2, phi)
        ratio = squeezing_ratio(state, collective_spin(LAY2, "z"), collective_spin(LAY2, "y"))
        assert 0 <= ratio <= 4 + 1e-8

    def test_indeterminate(self):
        lay = QubitLayout(("1",))
        eps = 1e-7
        state = pure_state(lay, [np.cos(eps), 1j * np.sin(eps)])
        h = HermitianObservable(lay, 1e6 * oracles.SX)
        m = HermitianObservable(lay, oracles.SZ / 2)
        assert variance(state, m) < 1e-12
        with pytest.raises(IndeterminateRatioError):
            squeezing_ratio(state, h, m)

    def test_never_exceeds_qfi(self, rng):
        for n in (1, 2, 3):
            lay = QubitLayout(tuple(str(i) for i in range(n)))
            for _ in range(30):
                rho = random_density_matrix(lay, rng, rank=int(rng.integers(1, 2**n + 1)))
                dirs = rng.normal(size=(2, 3))
                h, m = (collective_spin(lay, d / np.linalg.norm(d)) for d in dirs)
                assert squeezing_ratio(rho, h, m) <= qfi(rho, h).value + 1e-8


class TestGap:
    def test_pure(self, rng):
        for n in (1, 2, 3):
            lay = QubitLayout(tuple(str(i) for i in range(n)))
            assert abs(qfi_variance_gap(random_pure_state(lay, rng), collective_spin(lay, "x"))) <= 1e-8

    def test_maximally_mixed_qubit(self):
        lay = QubitLayout(("1",))
        assert qfi_variance_gap(maximally_mixed(lay), collective_spin(lay, "z")) == pytest.approx(1)

    def test_diagonal_mixture(self):
        rho = QuantumState(LAY2, 0.5 * np.diag([1, 0, 0, 1]))
        assert qfi_variance_gap(rho, collective_spin(LAY2, "z")) == pytest.approx(4)


class TestProperties:
    def test_pure_state_identity(self, rng):
        for _ in range(300):
            n = int(rng.integers(1, 5))
            lay = QubitLayout(tuple(str(i) for i in range(n)))
            state = random_pure_state(lay, rng)
            h = random_density_matrix(lay, rng).matrix * rng.normal()
            gen = HermitianObservable(lay, h)
            assert abs(qfi(state, gen).value - 4 * variance(state, gen)) <= 1e-8

    def test_convexity_and_concavity(self, rng):
        for _ in range(100):
            n = int(rng.integers(1, 4))
            lay = QubitLayout(tuple(str(i) for i in range(n)))
            r1 = random_density_matrix(lay, rng, rank=int(rng.integers(1, 2**n + 1)))
            r2 = random_density_matrix(lay, rng, rank=int(rng.integers(1, 2**n + 1)))
            t = rng.uniform()
            mix = QuantumState(lay, t * r1.matrix + (1 - t) * r2.matrix)
            h = collective_spin(lay, "z")
            assert qfi(mix, h).value <= t * qfi(r1, h).value + (1 - t) * qfi(r2, h).value + 1e-8
            assert variance(mix, h) >= t * variance(r1, h) + (1 - t) * variance(r2, h) - 1e-8

    def test_heisenberg_limit(self, rng):
        for n in (1, 2, 3, 4):
            lay = QubitLayout(tuple(str(i) for i in range(n)))
            for _ in range(20):
                rho = random_density_matrix(lay, rng, rank=int(rng.integers(1, 3)))
                assert qfi(rho, collective_spin(lay, "z")).value <= n * n + 1e-6
