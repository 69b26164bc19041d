"""Property checkers for hidden-variable models, emitting machine-readable reports.

Verdict semantics for statistical comparisons: a discrepancy within the
tolerance is "satisfied"; one that exceeds the tolerance but sits inside the
5-sigma resolution of the estimate is "inconclusive" (insufficient power to
call it either way); anything beyond both is "violated".
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError
from .integrate import (
    McConfig,
    McEstimate,
    QuadratureGrid,
    mc_expectation,
    mc_expectations,
    substream_key,
    tv_distance,
    uniform_blocks,
)
from .models import (
    RELABEL_MARK,
    Batch,
    OnticState,
    OntologicalModel,
    PairBatch,
    SingleBatch,
    StateCatalog,
)
from .qubit import (
    Ensemble,
    MeasurementBasis,
    PureState,
    born_probability,
    density_operators_equal,
    ensemble_density_operator,
    half_half_mixture,
)

SATISFIED = "satisfied"
VIOLATED = "violated"
INCONCLUSIVE = "inconclusive"
PSI_ONTIC = "psi-ontic"
PSI_EPISTEMIC = "psi-epistemic"

ORTHO_TOL = 1e-12
DENSITY_OP_TOL = 1e-12


@dataclass(frozen=True)
class LabeledEstimate:
    label: str
    mean: float
    std_error: float


@dataclass(frozen=True)
class CheckReport:
    """Outcome of one checker run, reproducible bit-for-bit given (seed, cfg)."""

    check_name: str
    model_name: str
    verdict: str
    estimates: tuple[LabeledEstimate, ...]
    tolerance: float
    n_samples: int
    seed: int
    details: str = ""
    duration_ms: float = 0.0


def triage_verdict(discrepancy: float, tol: float, std_error: float) -> str:
    """Classify a |estimate - target| discrepancy against tolerance and resolution."""
    if discrepancy <= tol:
        return SATISFIED
    if discrepancy <= 5.0 * std_error:
        return INCONCLUSIVE
    return VIOLATED


def _combine(verdicts) -> str:
    if VIOLATED in verdicts:
        return VIOLATED
    if INCONCLUSIVE in verdicts:
        return INCONCLUSIVE
    return SATISFIED


def _prepare_sampler(model: OntologicalModel, psi: PureState):
    return lambda seed, start, count: model.prepare_batch(psi, seed, start, count)


def check_born_reproduction(
    model: OntologicalModel, catalog: StateCatalog, cfg: McConfig, tol: float = 1e-2
) -> CheckReport:
    """Compare E[response] under every preparation against the Born probability.

    Samples for one preparation are shared across all of its (basis, outcome)
    triples; each estimate stays unbiased and the whole table is deterministic.
    """
    rows: list[LabeledEstimate] = []
    verdicts: list[str] = []
    worst_label, worst_disc = "", -1.0
    for psi in catalog.states:
        fs, targets, labels = [], [], []
        for basis in catalog.bases:
            for idx in (0, 1):
                outcome = basis.outcomes[idx]
                fs.append(lambda b, basis=basis, idx=idx: model.response_batch(basis, idx, b))
                targets.append(born_probability(outcome, psi))
                labels.append(f"{psi.describe()}|{basis.describe()}|{outcome.describe()}")
        for est, target, label in zip(mc_expectations(fs, _prepare_sampler(model, psi), cfg), targets, labels):
            disc = abs(est.mean - target)
            verdicts.append(triage_verdict(disc, tol, est.std_error))
            rows.append(LabeledEstimate(label, est.mean, est.std_error))
            if disc > worst_disc:
                worst_label, worst_disc = label, disc
    return CheckReport(
        check_name="born",
        model_name=model.name,
        verdict=_combine(verdicts),
        estimates=tuple(rows),
        tolerance=tol,
        n_samples=cfg.n_samples,
        seed=cfg.seed,
        details=f"{len(rows)} (state, basis, outcome) triples; worst {worst_label} off by {worst_disc:.3e}",
    )


def _sample_sources(model: OntologicalModel, catalog: StateCatalog):
    sources = [(f"mu({s.describe()})", _prepare_sampler(model, s)) for s in catalog.states]
    sources.append(("reference", model.reference_batch))
    return sources


def _iter_batches(sampler, n: int, batch_size: int, seed: int):
    for start in range(0, n, batch_size):
        yield sampler(seed, start, min(batch_size, n - start))


def check_outcome_determinism(model: OntologicalModel, catalog: StateCatalog, cfg: McConfig) -> CheckReport:
    """Assert every evaluated response value is exactly 0 or 1."""
    sources = _sample_sources(model, catalog)
    n_per = max(100, cfg.n_samples // len(sources))
    checked = 0
    bad = 0
    first_offense = ""
    for source_label, sampler in sources:
        for batch in _iter_batches(sampler, n_per, cfg.batch_size, cfg.seed):
            for basis in catalog.bases:
                for idx in (0, 1):
                    vals = model.response_batch(basis, idx, batch)
                    off = (vals != 0.0) & (vals != 1.0)
                    checked += len(vals)
                    if off.any():
                        bad += int(off.sum())
                        if not first_offense:
                            first_offense = (
                                f"; first offense {source_label}|{basis.describe()} value {vals[off][0]!r}"
                            )
    fraction = bad / checked if checked else 0.0
    return CheckReport(
        check_name="determinism",
        model_name=model.name,
        verdict=SATISFIED if bad == 0 else VIOLATED,
        estimates=(LabeledEstimate("non_binary_fraction", fraction, 0.0),),
        tolerance=0.0,
        n_samples=cfg.n_samples,
        seed=cfg.seed,
        details=f"{checked} response values over {n_per * len(sources)} sampled ontic states{first_offense}",
    )


def _descriptor_variants(basis: MeasurementBasis) -> list[tuple[MeasurementBasis, int, int]]:
    """Synthesized descriptors sharing outcome states with `basis`.

    Returns (variant, index in variant, index in basis) for every outcome of
    the swapped-order and relabeled copies.  For a qubit no two genuinely
    distinct bases share an outcome, so noncontextuality is probed through
    descriptor relabeling and permutation instead.
    """
    swapped = MeasurementBasis((basis.outcomes[1], basis.outcomes[0]), basis.label)
    relabeled = MeasurementBasis(basis.outcomes, (basis.label or "M") + RELABEL_MARK)
    return [
        (swapped, 0, 1),
        (swapped, 1, 0),
        (relabeled, 0, 0),
        (relabeled, 1, 1),
    ]


def check_measurement_noncontextuality(
    model: OntologicalModel, catalog: StateCatalog, cfg: McConfig
) -> CheckReport:
    """Assert responses depend only on the outcome state, not its descriptor."""
    sources = _sample_sources(model, catalog)
    n_per = max(100, cfg.n_samples // len(sources))
    compared = 0
    mismatches = 0
    first_offense = ""
    for source_label, sampler in sources:
        for batch in _iter_batches(sampler, n_per, cfg.batch_size, cfg.seed):
            for basis in catalog.bases:
                base_vals = [model.response_batch(basis, idx, batch) for idx in (0, 1)]
                for variant, v_idx, b_idx in _descriptor_variants(basis):
                    vals = model.response_batch(variant, v_idx, batch)
                    diff = vals != base_vals[b_idx]
                    compared += len(vals)
                    if diff.any():
                        mismatches += int(diff.sum())
                        if not first_offense:
                            first_offense = (
                                f"; first mismatch {source_label}|{basis.describe()}"
                                f" vs descriptor {variant.describe()}"
                            )
    fraction = mismatches / compared if compared else 0.0
    return CheckReport(
        check_name="measurement-nc",
        model_name=model.name,
        verdict=SATISFIED if mismatches == 0 else VIOLATED,
        estimates=(LabeledEstimate("mismatch_fraction", fraction, 0.0),),
        tolerance=0.0,
        n_samples=cfg.n_samples,
        seed=cfg.seed,
        details=f"{compared} descriptor comparisons{first_offense}",
    )


def overlap_integral(model: OntologicalModel, psi: PureState, phi: PureState, cfg: McConfig) -> McEstimate:
    """Probability that a mu_psi draw lands in the support of mu_phi."""
    f = lambda b: model.in_support_batch(phi, b).astype(float)
    return mc_expectation(f, _prepare_sampler(model, psi), cfg)


def _overlap_table(model: OntologicalModel, catalog: StateCatalog, cfg: McConfig):
    """All ordered (psi, phi) pairs with overlap estimate and Born probability."""
    table = []
    for psi in catalog.states:
        fs = [
            (lambda b, phi=phi: model.in_support_batch(phi, b).astype(float))
            for phi in catalog.states
        ]
        ests = mc_expectations(fs, _prepare_sampler(model, psi), cfg)
        for phi, est in zip(catalog.states, ests):
            table.append((psi, phi, est, born_probability(phi, psi)))
    return table


def _max_epistemic_from_table(model, table, cfg, tol) -> CheckReport:
    rows, verdicts = [], []
    worst = ("", -1.0, 0.0)
    for psi, phi, est, born in table:
        disc = abs(est.mean - born)
        verdicts.append(triage_verdict(disc, tol, est.std_error))
        rows.append(LabeledEstimate(f"{psi.describe()}->{phi.describe()}", est.mean, est.std_error))
        if disc > worst[1]:
            worst = (f"{psi.describe()}->{phi.describe()}", disc, born - est.mean)
    return CheckReport(
        check_name="max-epistemic",
        model_name=model.name,
        verdict=_combine(verdicts),
        estimates=tuple(rows),
        tolerance=tol,
        n_samples=cfg.n_samples,
        seed=cfg.seed,
        details=f"worst pair {worst[0]} deficit {worst[2]:.6f} (|overlap - born| = {worst[1]:.3e})",
    )


def check_max_psi_epistemic(
    model: OntologicalModel, catalog: StateCatalog, cfg: McConfig, tol: float = 1e-2
) -> CheckReport:
    """Check overlap_integral(psi, phi) = born_probability(phi, psi) for all pairs."""
    return _max_epistemic_from_table(model, _overlap_table(model, catalog, cfg), cfg, tol)


def _classify_from_table(model, table, cfg) -> CheckReport:
    rows = []
    epistemic_witness = None
    max_overlap = 0.0
    for psi, phi, est, born in table:
        if psi.bloch == phi.bloch:
            continue
        rows.append(LabeledEstimate(f"{psi.describe()}->{phi.describe()}", est.mean, est.std_error))
        if born <= ORTHO_TOL:
            continue
        max_overlap = max(max_overlap, est.mean)
        if est.mean > 5.0 * est.std_error and est.mean > 0.0 and epistemic_witness is None:
            epistemic_witness = f"{psi.describe()}->{phi.describe()}"
    if epistemic_witness is not None:
        verdict = PSI_EPISTEMIC
        details = f"positive overlap for nonorthogonal pair {epistemic_witness}"
    else:
        verdict = PSI_ONTIC
        details = f"all nonorthogonal overlaps consistent with 0 (max {max_overlap:.3e})"
    return CheckReport(
        check_name="classify",
        model_name=model.name,
        verdict=verdict,
        estimates=tuple(rows),
        tolerance=0.0,
        n_samples=cfg.n_samples,
        seed=cfg.seed,
        details=details,
    )


def classify_ontology(model: OntologicalModel, catalog: StateCatalog, cfg: McConfig) -> CheckReport:
    """Label the model psi-ontic or psi-epistemic from its support overlaps."""
    return _classify_from_table(model, _overlap_table(model, catalog, cfg), cfg)


@dataclass(frozen=True)
class EnsembleDistribution:
    """Ontic distribution of a mixed preparation: draw j ~ p, then lambda ~ mu_{psi_j}.

    The component choice uses a stream independent of every component sampler,
    so the classical randomness never correlates with the ontic draw.
    """

    model: OntologicalModel
    ensemble: Ensemble

    def _choice_key(self, seed: int) -> int:
        payload = b"".join(
            np.array([w], dtype="<f8").tobytes() + s.vec().astype("<f8").tobytes()
            for w, s in self.ensemble.entries
        )
        return substream_key(seed, "ensemble-choice", self.model.name, payload)

    def _choices(self, seed: int, start: int, count: int) -> np.ndarray:
        u = uniform_blocks(self._choice_key(seed), start, count)[:, 0]
        cum = np.cumsum(self.ensemble.weights())
        return np.minimum(np.searchsorted(cum, u, side="right"), len(self.ensemble.entries) - 1)

    def sample_batch(self, seed: int, start: int, count: int) -> Batch:
        entries = self.ensemble.entries
        if len(entries) == 1:
            return self.model.prepare_batch(entries[0][1], seed, start, count)
        j = self._choices(seed, start, count)
        parts = [self.model.prepare_batch(s, seed, start, count) for _, s in entries]
        if isinstance(parts[0], SingleBatch):
            pts = parts[0].points.copy()
            for k in range(1, len(parts)):
                mask = j == k
                pts[mask] = parts[k].points[mask]
            return SingleBatch(pts)
        first = parts[0].first.copy()
        second = parts[0].second.copy()
        for k in range(1, len(parts)):
            mask = j == k
            first[mask] = parts[k].first[mask]
            second[mask] = parts[k].second[mask]
        # per-row preparation tags are dropped here; support checks on
        # mixture batches rely on the exact-vector distance fallback
        return PairBatch(first, second, None)

    def sample(self, seed: int, index: int) -> OnticState:
        entries = self.ensemble.entries
        if len(entries) == 1:
            return self.model.sample_prepared(entries[0][1], seed, index)
        k = int(self._choices(seed, index, 1)[0])
        return self.model.sample_prepared(entries[k][1], seed, index)

    def density_batch(self, batch: Batch) -> np.ndarray | None:
        total = None
        for w, s in self.ensemble.entries:
            part = self.model.density_batch(s, batch)
            if part is None:
                return None
            total = w * part if total is None else total + w * part
        return total

    def support_batch(self, batch: Batch) -> np.ndarray:
        member = None
        for _, s in self.ensemble.entries:
            cur = self.model.in_support_batch(s, batch)
            member = cur if member is None else member | cur
        return member


def ensemble_distribution(model: OntologicalModel, ensemble: Ensemble) -> EnsembleDistribution:
    """The mixture distribution mu_E = sum_j p_j mu_{psi_j} with sampler and density."""
    return EnsembleDistribution(model, ensemble)


def check_preparation_noncontextuality(
    model: OntologicalModel,
    e1: Ensemble,
    e2: Ensemble,
    cfg: McConfig,
    tol: float = 1e-2,
    grid: QuadratureGrid | None = None,
) -> CheckReport:
    """Compare the ontic distributions of two preparations of the same density operator.

    With densities available the comparison is the total-variation distance on
    the quadrature grid; otherwise a support-membership witness is evaluated
    under both ensembles.  Verdict "violated" means preparation contextual.
    """
    if not density_operators_equal(
        ensemble_density_operator(e1), ensemble_density_operator(e2), DENSITY_OP_TOL
    ):
        raise PreconditionError(
            "ensembles prepare different density operators; the comparison is meaningless"
        )
    d1 = EnsembleDistribution(model, e1)
    d2 = EnsembleDistribution(model, e2)
    pair = f"{e1.describe()} vs {e2.describe()}"
    if model.has_density:
        grid = grid or QuadratureGrid()
        dist = tv_distance(
            lambda pts: d1.density_batch(SingleBatch(pts)),
            lambda pts: d2.density_batch(SingleBatch(pts)),
            grid,
        )
        return CheckReport(
            check_name="prep-nc",
            model_name=model.name,
            verdict=VIOLATED if dist > tol else SATISFIED,
            estimates=(LabeledEstimate("tv_distance", dist, 0.0),),
            tolerance=tol,
            n_samples=cfg.n_samples,
            seed=cfg.seed,
            details=f"density route: total variation {dist:.6f} for {pair}",
        )
    witness = lambda b: d1.support_batch(b).astype(float)
    m1 = mc_expectation(witness, d1.sample_batch, cfg)
    m2 = mc_expectation(witness, d2.sample_batch, cfg)
    disc = abs(m1.mean - m2.mean)
    se = math.hypot(m1.std_error, m2.std_error)
    return CheckReport(
        check_name="prep-nc",
        model_name=model.name,
        verdict=triage_verdict(disc, tol, se),
        estimates=(
            LabeledEstimate("witness_under_e1", m1.mean, m1.std_error),
            LabeledEstimate("witness_under_e2", m2.mean, m2.std_error),
        ),
        tolerance=tol,
        n_samples=cfg.n_samples,
        seed=cfg.seed,
        details=f"support-witness route: expectations differ by {disc:.6f} for {pair}",
    )


@dataclass(frozen=True)
class OmegaWitness:
    """Mass reached by mu_psi outside the support of mu_phi where phi still responds."""

    pair: tuple[PureState, PureState]
    mu_psi_mass: McEstimate
    response_mass: McEstimate
    sample_points: tuple[OnticState, ...]

    def __post_init__(self):
        combined = 5.0 * math.hypot(self.mu_psi_mass.std_error, self.response_mass.std_error)
        if not (-1e-12 <= self.response_mass.mean <= self.mu_psi_mass.mean + combined):
            raise ValueError("response mass exceeds the witness-set mass beyond resolution")


def find_omega_witness(
    model: OntologicalModel,
    psi: PureState,
    phi: PureState,
    basis_containing_phi: MeasurementBasis,
    cfg: McConfig,
    max_examples: int = 10,
) -> OmegaWitness:
    """Estimate the mass of Omega = {lambda outside supp(mu_phi) with response(phi) > 0}."""
    outcome_index = None
    for idx in (0, 1):
        if basis_containing_phi.outcomes[idx].bloch == phi.bloch:
            outcome_index = idx
            break
    if outcome_index is None:
        raise PreconditionError("phi is not an outcome of the given basis")

    n = cfg.n_samples
    s1_omega = s2_omega = s1_resp = s2_resp = 0.0
    examples: list[OnticState] = []
    for start in range(0, n, cfg.batch_size):
        count = min(cfg.batch_size, n - start)
        batch = model.prepare_batch(psi, cfg.seed, start, count)
        resp = model.response_batch(basis_containing_phi, outcome_index, batch)
        omega = (~model.in_support_batch(phi, batch)) & (resp > 0.0)
        masked = resp * omega
        s1_omega += float(omega.sum())
        s2_omega += float(omega.sum())          # indicator: squares equal values
        s1_resp += float(masked.sum())
        s2_resp += float((masked * masked).sum())
        if len(examples) < max_examples:
            for i in np.flatnonzero(omega)[: max_examples - len(examples)]:
                examples.append(batch.item(int(i)))

    def finish(s1: float, s2: float) -> McEstimate:
        mean = s1 / n
        var = max(0.0, (s2 - n * mean * mean) / (n - 1))
        return McEstimate(mean=mean, std_error=float(np.sqrt(var / n)), n=n, seed=cfg.seed)

    return OmegaWitness(
        pair=(psi, phi),
        mu_psi_mass=finish(s1_omega, s2_omega),
        response_mass=finish(s1_resp, s2_resp),
        sample_points=tuple(examples),
    )


def _chain_pair(table, catalog: StateCatalog, tol: float):
    """Pick the (psi, phi) pair for the preparation-contextuality construction.

    The pair with the largest significant overlap deficit, if any; otherwise
    the first distinct nonorthogonal pair in catalog order.
    """
    best = None
    best_disc = 0.0
    for psi, phi, est, born in table:
        if psi.bloch == phi.bloch:
            continue
        disc = abs(est.mean - born)
        if triage_verdict(disc, tol, est.std_error) == VIOLATED and disc > best_disc:
            best, best_disc = (psi, phi), disc
    if best is not None:
        return best
    for psi in catalog.states:
        for phi in catalog.states:
            if psi.bloch != phi.bloch and born_probability(phi, psi) > ORTHO_TOL:
                return psi, phi
    raise PreconditionError("catalog has no distinct nonorthogonal pair")


def audit_implication_chain(
    model: OntologicalModel,
    catalog: StateCatalog,
    cfg: McConfig,
    tol: float = 1e-2,
    grid: QuadratureGrid | None = None,
) -> CheckReport:
    """Run every checker and test the two-step implication chain on the observed verdicts.

    The chain is: preparation noncontextual => maximally psi-epistemic =>
    outcome deterministic and measurement noncontextual.  The verdict is
    "violated" only when the observed verdicts form a counterexample to one
    of the implications.  This audits instantiations on the model under test,
    not the general statements.
    """
    if not catalog.closed_under_complements():
        raise PreconditionError("audit requires a catalog closed under orthogonal complements")
    born = check_born_reproduction(model, catalog, cfg, tol)
    det = check_outcome_determinism(model, catalog, cfg)
    mnc = check_measurement_noncontextuality(model, catalog, cfg)
    table = _overlap_table(model, catalog, cfg)
    maxe = _max_epistemic_from_table(model, table, cfg, tol)
    cls = _classify_from_table(model, table, cfg)
    psi, phi = _chain_pair(table, catalog, tol)
    prep = check_preparation_noncontextuality(
        model, half_half_mixture(psi), half_half_mixture(phi), cfg, tol, grid
    )

    if det.verdict == VIOLATED or mnc.verdict == VIOLATED:
        ks_nc = VIOLATED
    elif det.verdict == SATISFIED and mnc.verdict == SATISFIED:
        ks_nc = SATISFIED
    else:
        ks_nc = INCONCLUSIVE

    counterexample = (prep.verdict == SATISFIED and maxe.verdict == VIOLATED) or (
        maxe.verdict == SATISFIED and ks_nc == VIOLATED
    )
    sub = [born, det, mnc, maxe, prep, cls]
    if counterexample:
        verdict = VIOLATED
    elif INCONCLUSIVE in {r.verdict for r in sub} or ks_nc == INCONCLUSIVE:
        verdict = INCONCLUSIVE
    else:
        verdict = SATISFIED

    details = "; ".join(
        [
            f"born={born.verdict}",
            f"determinism={det.verdict}",
            f"measurement-nc={mnc.verdict}",
            f"max-epistemic={maxe.verdict}",
            f"prep-nc={prep.verdict}",
            f"classify={cls.verdict}",
            f"ks-noncontextual={ks_nc}",
            f"pair={psi.describe()}->{phi.describe()}",
            "chain=" + ("counterexample" if counterexample else "consistent"),
        ]
    )
    return CheckReport(
        check_name="audit",
        model_name=model.name,
        verdict=verdict,
        estimates=prep.estimates,
        tolerance=tol,
        n_samples=cfg.n_samples,
        seed=cfg.seed,
        details=details,
    )
