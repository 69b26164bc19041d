"""Entangled-pair steering and the remote-preparation nonlocality witness.

Alice measures her half of a maximally entangled pair; the basis choice
steers Bob's marginal into one of two ensembles with the same density
operator.  A model in which those two ensembles carry different ontic
distributions makes Bob's hidden state depend on Alice's choice.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .checks import CheckReport, check_born_reproduction, check_preparation_noncontextuality
from .errors import PreconditionError
from .integrate import McConfig, QuadratureGrid
from .models import OntologicalModel, StateCatalog
from .qubit import (
    DensityOperator,
    Ensemble,
    MeasurementBasis,
    PureState,
    amplitudes_to_bloch,
    bloch_to_amplitudes,
    orthogonal_complement,
)

STEER_VERIFY_TOL = 1e-10
MIN_OUTCOME_PROB = 1e-12


@dataclass(frozen=True, eq=False)
class BipartiteState:
    """Two-qubit state vector in the (A tensor B) basis order 00, 01, 10, 11."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (4,):
            raise ValueError("bipartite state needs 4 amplitudes")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"bipartite state norm-squared {norm!r} differs from 1")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)


def make_max_entangled(psi: PureState) -> BipartiteState:
    """(|psi>|psi> + |psi_perp>|psi_perp>) / sqrt(2)."""
    a = bloch_to_amplitudes(psi)
    b = bloch_to_amplitudes(orthogonal_complement(psi))
    return BipartiteState((np.kron(a, a) + np.kron(b, b)) / np.sqrt(2.0))


def bob_reduced_density(state: BipartiteState) -> DensityOperator:
    """Bob's marginal density operator (partial trace over Alice)."""
    v = state.amplitudes.reshape(2, 2)
    return DensityOperator(v.T @ v.conj())


@dataclass(frozen=True)
class SteeredEnsemble:
    """Bob's conditional states and probabilities for one Alice basis."""

    alice_basis: MeasurementBasis
    outcomes: tuple[tuple[float, PureState], ...]

    def __post_init__(self):
        total = sum(p for p, _ in self.outcomes)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"steered probabilities sum to {total!r}, expected 1")

    def as_ensemble(self) -> Ensemble:
        return Ensemble(self.outcomes)


def steer(state: BipartiteState, alice_basis: MeasurementBasis) -> SteeredEnsemble:
    """Collapse Bob's side for each Alice outcome via the partial inner product."""
    results = []
    for outcome in alice_basis.outcomes:
        a = bloch_to_amplitudes(outcome)
        v = np.conj(a[0]) * state.amplitudes[:2] + np.conj(a[1]) * state.amplitudes[2:]
        p = float(np.vdot(v, v).real)
        if p < MIN_OUTCOME_PROB:
            raise PreconditionError(
                f"Alice outcome {outcome.describe()} has probability {p:.3e}; Bob state undefined"
            )
        results.append((p, PureState(amplitudes_to_bloch(v / np.sqrt(p)))))
    return SteeredEnsemble(alice_basis, tuple(results))


def steering_basis(psi: PureState, phi: PureState) -> MeasurementBasis:
    """Alice basis steering Bob to {phi, phi_perp} with probability 1/2 each.

    Alice's first outcome is the conjugate of |phi> written in the
    {psi, psi_perp} amplitude coordinates.  The construction is verified at
    runtime by steering and comparing against phi directly.
    """
    pa = bloch_to_amplitudes(psi)
    qa = bloch_to_amplitudes(orthogonal_complement(psi))
    fa = bloch_to_amplitudes(phi)
    c = np.vdot(pa, fa)
    d = np.vdot(qa, fa)
    alice_amps = np.conj(c) * pa + np.conj(d) * qa
    alice = PureState(amplitudes_to_bloch(alice_amps / np.linalg.norm(alice_amps)))
    basis = MeasurementBasis(
        (alice, orthogonal_complement(alice)),
        f"steer({psi.describe()}->{phi.describe()})",
    )
    steered = steer(make_max_entangled(psi), basis)
    (p0, bob0), (p1, bob1) = steered.outcomes
    errs = (
        abs(p0 - 0.5),
        abs(p1 - 0.5),
        float(np.abs(bob0.vec() - phi.vec()).max()),
        float(np.abs(bob1.vec() + phi.vec()).max()),
    )
    if max(errs) > STEER_VERIFY_TOL:
        raise ValueError(
            f"steering basis verification failed for {psi.describe()}->{phi.describe()}"
            f" (worst error {max(errs):.3e})"
        )
    return basis


def nonlocality_witness(
    model: OntologicalModel,
    psi: PureState,
    phi: PureState,
    cfg: McConfig,
    tol: float = 1e-2,
    grid: QuadratureGrid | None = None,
) -> CheckReport:
    """Check whether Bob's ontic distribution depends on Alice's basis choice.

    Builds the two steered ensembles for Alice bases aimed at {psi, psi_perp}
    and {phi, phi_perp} and delegates to the preparation-noncontextuality
    checker; verdict "violated" means the witness fires.
    """
    states = []
    for s in (psi, orthogonal_complement(psi), phi, orthogonal_complement(phi)):
        if all(s.bloch != t.bloch for t in states):
            states.append(s)
    bases = [MeasurementBasis((psi, orthogonal_complement(psi)), "steer-psi")]
    if phi.bloch != psi.bloch and phi.bloch != orthogonal_complement(psi).bloch:
        bases.append(MeasurementBasis((phi, orthogonal_complement(phi)), "steer-phi"))
    born = check_born_reproduction(model, StateCatalog(tuple(states), tuple(bases)), cfg, tol)
    if born.verdict != "satisfied":
        raise PreconditionError(
            f"model {model.name} does not reproduce the Born rule on the steering states"
            f" (verdict {born.verdict})"
        )
    entangled = make_max_entangled(psi)
    basis1 = steering_basis(psi, psi)
    basis2 = steering_basis(psi, phi)
    e1 = steer(entangled, basis1).as_ensemble()
    e2 = steer(entangled, basis2).as_ensemble()
    report = check_preparation_noncontextuality(model, e1, e2, cfg, tol, grid)
    return replace(
        report,
        check_name="nonlocality",
        details=f"Alice bases {basis1.describe()} vs {basis2.describe()}; " + report.details,
    )
