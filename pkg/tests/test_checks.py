import math

import numpy as np
import pytest

from onticlab.checks import (
    INCONCLUSIVE,
    PSI_EPISTEMIC,
    PSI_ONTIC,
    SATISFIED,
    VIOLATED,
    OmegaWitness,
    audit_implication_chain,
    check_born_reproduction,
    check_max_psi_epistemic,
    check_measurement_noncontextuality,
    check_outcome_determinism,
    check_preparation_noncontextuality,
    classify_ontology,
    ensemble_distribution,
    find_omega_witness,
    overlap_integral,
)
from onticlab.errors import PreconditionError
from onticlab.integrate import McConfig, McEstimate, QuadratureGrid, sphere_quadrature
from onticlab.models import (
    KochenSpeckerModel,
    SingleBatch,
    StateCatalog,
    default_catalog,
    make_model,
)
from onticlab.qubit import (
    MINUS_X,
    MINUS_Z,
    PLUS_X,
    PLUS_Y,
    PLUS_Z,
    Ensemble,
    MeasurementBasis,
    born_probability,
    half_half_mixture,
)

CFG = McConfig(n_samples=50_000, seed=19)
GRID = QuadratureGrid()
CATALOG = default_catalog()
X_BASIS = MeasurementBasis((PLUS_X, MINUS_X), "x")

KS = make_model("ks")
BM = make_model("bell-mermin")
CONST = make_model("const-half")
READER = make_model("label-reader")


class TestBornReproduction:
    def test_physical_models_reproduce(self):
        for model in (KS, BM):
            rep = check_born_reproduction(model, CATALOG, CFG)
            assert rep.verdict == SATISFIED
            assert len(rep.estimates) == 36

    def test_constant_response_fails_on_certain_outcomes(self):
        rep = check_born_reproduction(CONST, CATALOG, CFG)
        assert rep.verdict == VIOLATED
        by_label = {e.label: e for e in rep.estimates}
        row = by_label["+z|z|+z"]
        assert row.mean == 0.5 and row.std_error == 0.0   # Born probability is 1 here

    def test_label_reader_fails(self):
        assert check_born_reproduction(READER, CATALOG, CFG).verdict == VIOLATED

    def test_reports_are_reproducible(self):
        a = check_born_reproduction(KS, CATALOG, CFG)
        b = check_born_reproduction(KS, CATALOG, CFG)
        assert a == b

    def test_undersampled_runs_are_inconclusive(self):
        rep = check_born_reproduction(KS, CATALOG, McConfig(n_samples=10_000, seed=3), tol=1e-6)
        assert rep.verdict == INCONCLUSIVE


class TestOutcomeDeterminism:
    def test_step_valued_models_pass(self):
        for model in (KS, BM, READER):
            rep = check_outcome_determinism(model, CATALOG, CFG)
            assert rep.verdict == SATISFIED
            assert rep.estimates[0].mean == 0.0

    def test_constant_response_fails(self):
        rep = check_outcome_determinism(CONST, CATALOG, CFG)
        assert rep.verdict == VIOLATED
        assert rep.estimates[0].mean == 1.0


class TestMeasurementNoncontextuality:
    def test_state_only_responses_pass(self):
        for model in (KS, BM, CONST):
            assert check_measurement_noncontextuality(model, CATALOG, CFG).verdict == SATISFIED

    def test_label_reader_fails(self):
        rep = check_measurement_noncontextuality(READER, CATALOG, CFG)
        assert rep.verdict == VIOLATED
        assert rep.estimates[0].mean > 0.0


class TestOverlapIntegral:
    def test_own_support(self):
        est = overlap_integral(KS, PLUS_Z, PLUS_Z, CFG)
        assert est.mean == 1.0 and est.std_error == 0.0

    def test_cap_model_overlap_equals_born(self):
        est = overlap_integral(KS, PLUS_Z, PLUS_X, CFG)
        assert abs(est.mean - 0.5) <= 5 * est.std_error
        quad = sphere_quadrature(
            lambda p: KS.in_support_batch(PLUS_X, SingleBatch(p)).astype(float)
            * KS.density_batch(PLUS_Z, SingleBatch(p)),
            GRID,
        )
        assert abs(quad - 0.5) <= 1e-3

    def test_pair_model_overlap_vanishes(self):
        est = overlap_integral(BM, PLUS_Z, PLUS_X, CFG)
        assert est.mean == 0.0 and est.std_error == 0.0

    def test_orthogonal_pair_overlap_vanishes(self):
        for model in (KS, BM):
            est = overlap_integral(model, PLUS_Z, MINUS_Z, CFG)
            assert est.mean == 0.0

    def test_bounded_by_born_for_reproducing_models(self):
        for model in (KS, BM):
            for psi in CATALOG.states:
                for phi in CATALOG.states:
                    est = overlap_integral(model, psi, phi, McConfig(n_samples=20_000, seed=5))
                    assert est.mean <= born_probability(phi, psi) + 5 * est.std_error


class TestMaxPsiEpistemic:
    def test_cap_model_is_maximally_epistemic(self):
        assert check_max_psi_epistemic(KS, CATALOG, CFG).verdict == SATISFIED

    def test_pair_model_deficit_equals_born(self):
        rep = check_max_psi_epistemic(BM, CATALOG, CFG)
        assert rep.verdict == VIOLATED
        by_label = {e.label: e for e in rep.estimates}
        assert by_label["+z->+x"].mean == 0.0
        assert "deficit 0.5" in rep.details

    def test_orthogonal_only_catalog_vacuously_satisfied(self):
        cat = StateCatalog((PLUS_Z, MINUS_Z), (MeasurementBasis((PLUS_Z, MINUS_Z), "z"),))
        for model in (KS, BM, CONST):
            assert check_max_psi_epistemic(model, cat, CFG).verdict == SATISFIED


class TestClassifyOntology:
    def test_cap_model_is_epistemic(self):
        rep = classify_ontology(KS, CATALOG, CFG)
        assert rep.verdict == PSI_EPISTEMIC

    def test_pair_model_is_ontic(self):
        rep = classify_ontology(BM, CATALOG, CFG)
        assert rep.verdict == PSI_ONTIC

    def test_fixtures_are_ontic(self):
        for model in (CONST, READER):
            assert classify_ontology(model, CATALOG, CFG).verdict == PSI_ONTIC


class TestEnsembleDistribution:
    def test_singleton_matches_component_sampler(self):
        dist = ensemble_distribution(KS, Ensemble(((1.0, PLUS_Y),)))
        a = dist.sample_batch(8, 0, 1000)
        b = KS.prepare_batch(PLUS_Y, 8, 0, 1000)
        np.testing.assert_array_equal(a.points, b.points)

    def test_z_mixture_density_vanishes_on_equator(self):
        dist = ensemble_distribution(KS, half_half_mixture(PLUS_Z))
        angles = 2 * np.pi * np.arange(100) / 100
        equator = np.stack([np.cos(angles), np.sin(angles), np.zeros(100)], axis=1)
        np.testing.assert_array_equal(dist.density_batch(SingleBatch(equator)), np.zeros(100))

    def test_x_mixture_density_at_plus_x(self):
        dist = ensemble_distribution(KS, half_half_mixture(PLUS_X))
        val = dist.density_batch(SingleBatch(np.array([[1.0, 0.0, 0.0]])))[0]
        assert val == 0.5 / np.pi

    def test_mixture_density_normalizes(self):
        dist = ensemble_distribution(KS, half_half_mixture(PLUS_X))
        total = sphere_quadrature(lambda p: dist.density_batch(SingleBatch(p)), GRID)
        assert abs(total - 1.0) <= 1e-3

    def test_sampler_matches_density(self):
        dist = ensemble_distribution(KS, half_half_mixture(PLUS_Z))
        from onticlab.integrate import mc_expectation

        g = lambda p: (p[:, 2] > 0.5).astype(float)
        est = mc_expectation(lambda b: g(b.points), dist.sample_batch, CFG)
        quad = sphere_quadrature(lambda p: g(p) * dist.density_batch(SingleBatch(p)), GRID)
        assert abs(est.mean - quad) <= 5 * est.std_error + 1e-4

    def test_scalar_sample_agrees_with_batch(self):
        dist = ensemble_distribution(BM, half_half_mixture(PLUS_Z))
        batch = dist.sample_batch(4, 0, 6)
        for i in range(6):
            lam = dist.sample(4, i)
            np.testing.assert_array_equal(lam.first.as_array(), batch.first[i])
            np.testing.assert_array_equal(lam.second.as_array(), batch.second[i])

    def test_pair_mixture_density_absent(self):
        dist = ensemble_distribution(BM, half_half_mixture(PLUS_Z))
        assert dist.density_batch(dist.sample_batch(1, 0, 10)) is None


class TestPreparationNoncontextuality:
    def test_cap_model_is_contextual(self):
        rep = check_preparation_noncontextuality(
            KS, half_half_mixture(PLUS_Z), half_half_mixture(PLUS_X), CFG
        )
        assert rep.verdict == VIOLATED
        tv = rep.estimates[0].mean
        assert tv > 0.1
        assert abs(tv - (math.sqrt(2.0) - 1.0)) <= 1e-3

    def test_same_ensemble_is_noncontextual(self):
        for model in (KS, BM):
            rep = check_preparation_noncontextuality(
                model, half_half_mixture(PLUS_Z), half_half_mixture(PLUS_Z), CFG
            )
            assert rep.verdict == SATISFIED
            if model is KS:
                assert rep.estimates[0].mean == 0.0

    def test_pair_model_support_witness(self):
        rep = check_preparation_noncontextuality(
            BM, half_half_mixture(PLUS_Z), half_half_mixture(PLUS_X), CFG
        )
        assert rep.verdict == VIOLATED
        assert rep.estimates[0].mean == 1.0   # witness under its own ensemble
        assert rep.estimates[1].mean == 0.0   # witness under the other ensemble
        assert "support-witness" in rep.details

    def test_density_operator_precondition(self):
        with pytest.raises(PreconditionError):
            check_preparation_noncontextuality(
                KS, half_half_mixture(PLUS_Z), Ensemble(((1.0, PLUS_Z),)), CFG
            )


class TestOmegaWitness:
    def test_pair_model_mass_is_cap_fraction(self):
        # closed form: P(x-component of uniform point > 0) = 1/2
        w = find_omega_witness(BM, PLUS_Z, PLUS_X, X_BASIS, CFG)
        assert abs(w.mu_psi_mass.mean - 0.5) <= 5 * w.mu_psi_mass.std_error
        assert abs(w.response_mass.mean - 0.5) <= 5 * w.response_mass.std_error
        assert 0 < len(w.sample_points) <= 10

    def test_cap_model_mass_vanishes(self):
        w = find_omega_witness(KS, PLUS_Z, PLUS_X, X_BASIS, CFG)
        assert w.mu_psi_mass.mean == 0.0
        assert w.sample_points == ()

    def test_orthogonal_outcome_never_responds(self):
        z_basis = MeasurementBasis((PLUS_Z, MINUS_Z), "z")
        for model in (KS, BM):
            w = find_omega_witness(model, PLUS_Z, MINUS_Z, z_basis, CFG)
            assert w.response_mass.mean == 0.0

    def test_mass_decomposition_recovers_born(self):
        for model in (KS, BM):
            w = find_omega_witness(model, PLUS_Z, PLUS_X, X_BASIS, CFG)
            overlap = overlap_integral(model, PLUS_Z, PLUS_X, CFG)
            se = math.hypot(w.response_mass.std_error, overlap.std_error)
            assert abs(w.response_mass.mean + overlap.mean - 0.5) <= 5 * se + 1e-12

    def test_phi_must_be_an_outcome(self):
        with pytest.raises(PreconditionError):
            find_omega_witness(KS, PLUS_Z, PLUS_Y, X_BASIS, CFG)

    def test_invariant_guard(self):
        good = McEstimate(mean=0.5, std_error=0.0, n=100, seed=0)
        bad = McEstimate(mean=0.9, std_error=0.0, n=100, seed=0)
        with pytest.raises(ValueError):
            OmegaWitness((PLUS_Z, PLUS_X), good, bad, ())


class TestImplicationChainAudit:
    @pytest.mark.parametrize("name", ["ks", "bell-mermin", "const-half", "label-reader"])
    def test_chain_consistent_on_all_models(self, name):
        rep = audit_implication_chain(make_model(name), CATALOG, CFG)
        assert rep.verdict == SATISFIED
        assert "chain=consistent" in rep.details

    def test_expected_subverdicts(self):
        details = audit_implication_chain(KS, CATALOG, CFG).details
        assert "prep-nc=violated" in details
        assert "max-epistemic=satisfied" in details
        details = audit_implication_chain(BM, CATALOG, CFG).details
        assert "prep-nc=violated" in details
        assert "max-epistemic=violated" in details

    def test_theorem_contrapositive_on_negative_controls(self):
        # a model failing determinism or noncontextuality must fail maximal epistemicity
        for model in (CONST, READER):
            det = check_outcome_determinism(model, CATALOG, CFG)
            mnc = check_measurement_noncontextuality(model, CATALOG, CFG)
            assert VIOLATED in (det.verdict, mnc.verdict)
            assert check_max_psi_epistemic(model, CATALOG, CFG).verdict == VIOLATED

    def test_deficit_implies_preparation_contextuality(self):
        for model in (BM, CONST, READER):
            rep = check_preparation_noncontextuality(
                model, half_half_mixture(PLUS_Z), half_half_mixture(PLUS_X), CFG
            )
            assert rep.verdict == VIOLATED

    def test_requires_complement_closed_catalog(self):
        cat = StateCatalog(
            (PLUS_Z, MINUS_Z, PLUS_X), (MeasurementBasis((PLUS_Z, MINUS_Z), "z"),)
        )
        with pytest.raises(PreconditionError):
            audit_implication_chain(KS, cat, CFG)
