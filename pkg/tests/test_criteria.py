import numpy as np
import pytest

import oracles
from lhsep.assemblage import AXIS_SETTINGS, MeasurementSetting, SettingSearch
from lhsep.criteria import (
    DECISION_TOL,
    CriterionReport,
    assisted_entanglement_test,
    lambda_sep_test,
    reduced_sep_test,
    reid_sep_test,
    steering_test,
    wh_sep_test,
)
from lhsep.partitions import enumerate_partitions, parse_partition, trivial_partition
from lhsep.quantum_core import (
    LayoutError,
    QubitLayout,
    basis_ket,
    collective_spin,
    maximally_mixed,
    partial_trace,
    pure_state,
    random_density_matrix,
    tensor,
)
from lhsep.scenarios import GhzParams, build_noisy_ghz
from test_assemblage import lhs_state

X, Y, Z = AXIS_SETTINGS
BOB2 = QubitLayout(("B1", "B2"))
SPLIT = parse_partition("B1|B2")


def product_abb(rng):
    parts = [random_density_matrix(QubitLayout((p,)), rng) for p in ("A", "B1", "B2")]
    return tensor(tensor(parts[0], parts[1]), parts[2])


class TestLambdaSep:
    def test_bell_counterexample(self, bell):
        r = lambda_sep_test(bell, "A", SPLIT, "z")
        assert r.lhs == pytest.approx(4, abs=1e-9)
        assert r.rhs == pytest.approx(2, abs=1e-9)
        assert r.violated and r.margin == r.lhs - r.rhs
        assert "B1|B2" in r.conclusion

    def test_bell_trivial_partition(self, bell):
        r = lambda_sep_test(bell, "A", parse_partition("B1,B2"), "z")
        assert r.lhs == pytest.approx(4, abs=1e-9)
        assert r.rhs == pytest.approx(4, abs=1e-9)
        assert not r.violated

    def test_product_never_violated(self, rng, coarse):
        for _ in range(5):
            rho = product_abb(rng)
            for part in enumerate_partitions(["B1", "B2"]):
                for d in ("x", "z"):
                    assert not lambda_sep_test(rho, "A", part, d, coarse).violated

    def test_partition_must_cover_bob(self, bell):
        with pytest.raises(LayoutError):
            lambda_sep_test(bell, "A", parse_partition("B1"), "z")

    def test_non_unit_direction(self, bell):
        with pytest.raises(ValueError):
            lambda_sep_test(bell, "A", SPLIT, (1, 1, 1))


class TestSteering:
    def test_pure_ghz(self):
        rho = build_noisy_ghz(GhzParams(4, 1.0))
        r = steering_test(rho, "A", "z")
        assert r.lhs == pytest.approx(16, abs=1e-9)
        assert r.rhs == pytest.approx(0, abs=1e-9)
        assert r.violated
        assert r.witnesses["qcfi"].startswith("sigma_x")
        assert r.witnesses["qcv[B1,B2,B3,B4]"].startswith("sigma_z")

    def test_bell_counterexample(self, bell):
        assert not steering_test(bell, "A", "z").violated

    def test_maximally_mixed(self, coarse):
        r = steering_test(maximally_mixed(QubitLayout(("A", "B1", "B2"))), "A", "z", coarse)
        assert r.lhs == 0 and not r.violated

    def test_equals_trivial_lambda_sep(self, rng, coarse):
        for _ in range(5):
            rho = random_density_matrix(QubitLayout(("A", "B1", "B2")), rng, rank=2)
            s = steering_test(rho, "A", "x", coarse)
            t = lambda_sep_test(rho, "A", trivial_partition(["B1", "B2"]), "x", coarse)
            for field in ("lhs", "rhs", "margin", "violated", "witnesses", "inputs_digest", "conclusion"):
                assert getattr(s, field) == getattr(t, field)

    def test_steering_does_not_force_partition_violation(self):
        # summed block variances can exceed the collective one (negative
        # covariances), so a steering violation need not carry over
        rng = np.random.default_rng(1)
        search = SettingSearch(16, 16)
        found = False
        for _ in range(60):
            rho = random_density_matrix(QubitLayout(("A", "B1", "B2")), rng, rank=int(rng.integers(1, 3)))
            if steering_test(rho, "A", "z", search).violated and not lambda_sep_test(rho, "A", SPLIT, "z", search).violated:
                found = True
                break
        assert found


class TestReducedSep:
    def test_bell_counterexample_marginal(self, bell):
        r = reduced_sep_test(partial_trace(bell, ["B1", "B2"]), SPLIT, "z")
        assert r.lhs == pytest.approx(0, abs=1e-12)
        assert r.rhs == pytest.approx(2, abs=1e-12)
        assert not r.violated

    def test_bell_state(self):
        phi = pure_state(BOB2, (basis_ket("uu") + basis_ket("dd")) / np.sqrt(2))
        r = reduced_sep_test(phi, SPLIT, "z")
        assert (r.lhs, r.rhs) == pytest.approx((4, 2), abs=1e-12)
        assert r.violated

    def test_eigenstate(self):
        r = reduced_sep_test(pure_state(BOB2, basis_ket("uu")), SPLIT, "z")
        assert (r.lhs, r.rhs) == (0, 0)
        assert not r.violated

    def test_weakening_chain(self, rng, coarse):
        # reduced-state violation implies the assisted criterion is violated too
        phi = pure_state(BOB2, (basis_ket("uu") + basis_ket("dd")) / np.sqrt(2))
        cases = [tensor(random_density_matrix(QubitLayout(("A",)), rng), phi)]
        while len(cases) < 8:
            rho = random_density_matrix(QubitLayout(("A", "B1", "B2")), rng, rank=1)
            if reduced_sep_test(partial_trace(rho, ["B1", "B2"]), SPLIT, "x").violated:
                cases.append(rho)
        for rho in cases:
            for d in ("x", "z"):
                if reduced_sep_test(partial_trace(rho, ["B1", "B2"]), SPLIT, d).violated:
                    assert lambda_sep_test(rho, "A", SPLIT, d, SettingSearch.only(Y)).violated
                    assert lambda_sep_test(rho, "A", SPLIT, d, coarse).violated


def direct_reid(rho, h, m, settings):
    """Reid product ``QCV[H] * QCV[M]`` by explicit projection for each setting."""
    def cond_var(op):
        best = np.inf
        for s in settings:
            total = 0.0
            for ket in oracles.bloch_ket(s.direction):
                p, st = oracles.conditional_states(rho.matrix, 3, 0, ket)
                if p > 1e-12:
                    total += p * oracles.variance(st, op)
            best = min(best, total)
        return best

    rho_b = oracles.ptrace_loops(rho.matrix, 3, [1, 2])
    comm = h @ m - m @ h
    lhs = abs(np.trace(rho_b @ comm)) ** 2 / 4
    return lhs, cond_var(h) * cond_var(m)


class TestReid:
    def test_commuting_is_trivial(self, bell):
        r = reid_sep_test(bell, "A", SPLIT, "z", collective_spin(BOB2, "z"))
        assert r.lhs == 0 and r.trivial and not r.violated

    def test_trivial_partition_is_reid(self, rng):
        grid = SettingSearch(5, 4, refine=False)
        theta, phi = grid.angles()
        settings = [MeasurementSetting(t, p) for t, p in zip(theta, phi)]
        h, m = collective_spin(BOB2, "z"), collective_spin(BOB2, "y")
        for _ in range(6):
            rho = random_density_matrix(QubitLayout(("A", "B1", "B2")), rng, rank=int(rng.integers(1, 3)))
            r = reid_sep_test(rho, "A", trivial_partition(["B1", "B2"]), "z", m, grid)
            lhs, rhs = direct_reid(rho, h.matrix, m.matrix, settings)
            assert r.lhs == pytest.approx(lhs, abs=1e-10)
            assert r.rhs == pytest.approx(rhs, abs=1e-10)

    def test_bell_counterexample_is_blind(self, bell):
        r = reid_sep_test(bell, "A", SPLIT, "z", collective_spin(BOB2, "y"))
        assert r.lhs == 0 and not r.violated

    def test_commutator_uses_unconditioned_marginal(self):
        rho = build_noisy_ghz(GhzParams(2, 1.0))
        bob = QubitLayout(("B1", "B2"))
        r = reid_sep_test(rho, "A", trivial_partition(bob.parties), "z", collective_spin(bob, "y"), SettingSearch(9, 8))
        assert r.lhs == 0  # GHZ marginal has <J_x> = 0
        plus = np.array([1, 1]) / np.sqrt(2)
        coh = tensor(pure_state(QubitLayout(("A",)), basis_ket("u")), pure_state(bob, np.kron(plus, plus)))
        r = reid_sep_test(coh, "A", SPLIT, "z", collective_spin(bob, "y"), SettingSearch(9, 8))
        assert r.lhs == pytest.approx(0.25, abs=1e-12)  # |<J_x>|^2 / 4 with <J_x> = 1
        assert not r.violated

    def test_observable_layout(self, bell):
        with pytest.raises(LayoutError):
            reid_sep_test(bell, "A", SPLIT, "z", collective_spin(QubitLayout(("B1",)), "y"))


class TestWhSep:
    def test_bell(self, bell):
        r = wh_sep_test(bell, "A", 1, 2)
        assert r.lhs == pytest.approx(4, abs=1e-9) and r.rhs == 2 and r.violated
        r = wh_sep_test(bell, "A", 2, 1)
        assert r.rhs == 4 and not r.violated

    def test_pure_ghz(self):
        r = wh_sep_test(build_noisy_ghz(GhzParams(4, 1.0)), "A", 1, 4)
        assert r.lhs == pytest.approx(16, abs=1e-9) and r.rhs == 4 and r.violated

    def test_out_of_range(self, bell):
        with pytest.raises(ValueError):
            wh_sep_test(bell, "A", 3, 1)


class TestAssisted:
    def test_bell(self, bell):
        r = assisted_entanglement_test(bell, "A", ["B1"])
        assert r.lhs == pytest.approx(0.5, abs=1e-9) and r.violated
        assert r.conclusion == "no separable LHS model exists"

    def test_product(self, rng, coarse):
        r = assisted_entanglement_test(product_abb(rng), "A", ["B1"], coarse)
        assert r.lhs <= 1e-12 and not r.violated

    def test_noisy_ghz(self):
        p = 0.9
        rho = build_noisy_ghz(GhzParams(2, p))
        # sigma_x leaves p |GHZ><GHZ| + (1-p) 1/4; sigma_z leaves a classical mixture
        cond = p * np.outer(*(2 * [(basis_ket("dd") + basis_ket("uu")) / np.sqrt(2)])) + (1 - p) * np.eye(4) / 4
        spectrum = np.linalg.eigvalsh(oracles.partial_transpose_loops(cond, 2, [1]))
        oracle = -spectrum[spectrum < 0].sum()
        assert oracle == pytest.approx((3 * p - 1) / 4)
        assert assisted_entanglement_test(rho, "A", ["B1"], SettingSearch.only(X)).lhs == pytest.approx(oracle, abs=1e-12)
        assert assisted_entanglement_test(rho, "A", ["B1"], SettingSearch.only(Z)).lhs == pytest.approx(0, abs=1e-12)
        r = assisted_entanglement_test(rho, "A", ["B1"])
        assert r.lhs > 0 and r.violated

    def test_sound_on_separable_lhs(self, rng, coarse):
        for n_b in (2, 3):
            for _ in range(5):
                rho, _, _ = lhs_state(rng, n_b, int(rng.integers(1, 4)))
                assert assisted_entanglement_test(rho, "A", ["B1"], coarse).lhs <= 1e-8


def test_report_text(bell):
    r = lambda_sep_test(bell, "A", SPLIT, "z", SettingSearch.only(Z))
    text = r.to_text()
    fields = dict(line.split(": ", 1) for line in text.strip().splitlines())
    assert fields["criterion"] == "lambda-sep"
    assert fields["violated"] == "true"
    assert float(fields["lhs"]) == r.lhs and float(fields["margin"]) == r.margin
    assert fields["witness.qcfi"].startswith("sigma_z")


def test_decision_tolerance():
    r = CriterionReport.build("x", 1 + DECISION_TOL / 2, 1, conclusion_if_violated="c")
    assert not r.violated
    r = CriterionReport.build("x", 1 + 2 * DECISION_TOL, 1, conclusion_if_violated="c")
    assert r.violated and r.conclusion == "c"
