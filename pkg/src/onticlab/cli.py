"""Command-line entry point: pick a model and checks, emit reports, exit by verdict.

Exit codes: 0 when every verdict matches the expected pattern shipped for the
model, 1 on unexpected verdicts, 2 on configuration or input errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import dataclass, replace
from importlib import resources

from .bell import nonlocality_witness
from .checks import (
    CheckReport,
    LabeledEstimate,
    audit_implication_chain,
    check_born_reproduction,
    check_max_psi_epistemic,
    check_measurement_noncontextuality,
    check_outcome_determinism,
    check_preparation_noncontextuality,
    classify_ontology,
    find_omega_witness,
    triage_verdict,
)
from .errors import PreconditionError
from .integrate import McConfig, QuadratureGrid
from .models import MODEL_NAMES, StateCatalog, catalog_from_states, default_catalog, make_model
from .qubit import (
    MeasurementBasis,
    born_probability,
    half_half_mixture,
    orthogonal_complement,
    state_from_catalog_entry,
)

MIN_SAMPLES = 100
OUTPUT_FORMATS = ("json", "csv", "text")


@dataclass(frozen=True)
class RunConfig:
    model_name: str
    check_names: tuple[str, ...] = ("audit",)
    samples: int = 1_000_000
    seed: int = 42
    tolerance: float = 1e-2
    quad_polar: int = 128
    quad_azimuth: int = 256
    catalog_path: str | None = None
    output_format: str = "text"


def _canonical_pair(catalog: StateCatalog):
    for psi in catalog.states:
        for phi in catalog.states:
            if psi.bloch != phi.bloch and born_probability(phi, psi) > 1e-12:
                return psi, phi
    raise PreconditionError("catalog has no distinct nonorthogonal pair of states")


def _basis_containing(catalog: StateCatalog, phi) -> MeasurementBasis:
    for basis in catalog.bases:
        if any(outcome.bloch == phi.bloch for outcome in basis.outcomes):
            return basis
    return MeasurementBasis((phi, orthogonal_complement(phi)), phi.describe())


def _run_prep_nc(model, catalog, cfg, tol, grid):
    psi, phi = _canonical_pair(catalog)
    return check_preparation_noncontextuality(
        model, half_half_mixture(psi), half_half_mixture(phi), cfg, tol, grid
    )


def _run_omega(model, catalog, cfg, tol, grid):
    psi, phi = _canonical_pair(catalog)
    witness = find_omega_witness(model, psi, phi, _basis_containing(catalog, phi), cfg)
    mass = witness.mu_psi_mass
    return CheckReport(
        check_name="omega",
        model_name=model.name,
        verdict=triage_verdict(mass.mean, tol, mass.std_error),
        estimates=(
            LabeledEstimate("mu_psi_mass", mass.mean, mass.std_error),
            LabeledEstimate("response_mass", witness.response_mass.mean, witness.response_mass.std_error),
        ),
        tolerance=tol,
        n_samples=cfg.n_samples,
        seed=cfg.seed,
        details=(
            f"pair {psi.describe()}->{phi.describe()};"
            f" {len(witness.sample_points)} exemplar ontic states collected"
        ),
    )


def _run_nonlocality(model, catalog, cfg, tol, grid):
    psi, phi = _canonical_pair(catalog)
    return nonlocality_witness(model, psi, phi, cfg, tol, grid)


CHECK_RUNNERS = {
    "born": lambda model, catalog, cfg, tol, grid: check_born_reproduction(model, catalog, cfg, tol),
    "determinism": lambda model, catalog, cfg, tol, grid: check_outcome_determinism(model, catalog, cfg),
    "measurement-nc": lambda model, catalog, cfg, tol, grid: check_measurement_noncontextuality(
        model, catalog, cfg
    ),
    "max-epistemic": lambda model, catalog, cfg, tol, grid: check_max_psi_epistemic(
        model, catalog, cfg, tol
    ),
    "classify": lambda model, catalog, cfg, tol, grid: classify_ontology(model, catalog, cfg),
    "prep-nc": _run_prep_nc,
    "omega": _run_omega,
    "nonlocality": _run_nonlocality,
    "audit": lambda model, catalog, cfg, tol, grid: audit_implication_chain(
        model, catalog, cfg, tol, grid
    ),
}


def expected_patterns() -> dict:
    text = resources.files("onticlab").joinpath("expected_patterns.json").read_text("utf-8")
    return json.loads(text)


def load_catalog(path: str) -> StateCatalog:
    with open(path, encoding="utf-8") as fh:
        entries = json.load(fh)
    if not isinstance(entries, list) or not entries:
        raise ValueError("catalog file must hold a non-empty JSON array of state entries")
    return catalog_from_states([state_from_catalog_entry(e) for e in entries])


def report_as_dict(report: CheckReport) -> dict:
    return {
        "check_name": report.check_name,
        "model_name": report.model_name,
        "verdict": report.verdict,
        "estimates": [
            {"label": e.label, "mean": e.mean, "std_error": e.std_error} for e in report.estimates
        ],
        "tolerance": report.tolerance,
        "n_samples": report.n_samples,
        "seed": report.seed,
        "duration_ms": report.duration_ms,
        "details": report.details,
    }


def emit_report(reports: list[CheckReport], output_format: str) -> str:
    if output_format == "json":
        return json.dumps([report_as_dict(r) for r in reports], indent=2, sort_keys=True) + "\n"
    if output_format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(
            ["check_name", "model_name", "verdict", "label", "mean", "std_error",
             "tolerance", "n_samples", "seed"]
        )
        for r in reports:
            rows = r.estimates or (LabeledEstimate("", float("nan"), float("nan")),)
            for e in rows:
                writer.writerow(
                    [r.check_name, r.model_name, r.verdict, e.label, repr(e.mean),
                     repr(e.std_error), repr(r.tolerance), r.n_samples, r.seed]
                )
        return buf.getvalue()
    if output_format == "text":
        lines = [f"{'CHECK':<16} {'MODEL':<13} {'VERDICT':<14} {'N':>9} {'SEED':>6}  DETAILS"]
        for r in reports:
            detail = r.details if len(r.details) <= 100 else r.details[:97] + "..."
            lines.append(
                f"{r.check_name:<16} {r.model_name:<13} {r.verdict:<14}"
                f" {r.n_samples:>9} {r.seed:>6}  {detail}"
            )
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown output format {output_format!r}; valid: {', '.join(OUTPUT_FORMATS)}")


def run(config: RunConfig) -> tuple[int, list[CheckReport]]:
    """Execute the configured checks; exit code 0 only for fully expected verdicts."""
    reports: list[CheckReport] = []
    try:
        model = make_model(config.model_name)
        for name in config.check_names:
            if name not in CHECK_RUNNERS:
                raise ValueError(
                    f"unknown check {name!r}; valid names: {', '.join(sorted(CHECK_RUNNERS))}"
                )
        if config.output_format not in OUTPUT_FORMATS:
            raise ValueError(
                f"unknown output format {config.output_format!r}; valid: {', '.join(OUTPUT_FORMATS)}"
            )
        catalog = load_catalog(config.catalog_path) if config.catalog_path else default_catalog()
        samples = config.samples
        if samples < MIN_SAMPLES:
            print(f"note: samples raised to the minimum of {MIN_SAMPLES}", file=sys.stderr)
            samples = MIN_SAMPLES
        cfg = McConfig(n_samples=samples, seed=config.seed)
        grid = QuadratureGrid(config.quad_polar, config.quad_azimuth)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2, reports

    patterns = expected_patterns().get(config.model_name, {})
    exit_code = 0
    for name in config.check_names:
        started = time.perf_counter()
        try:
            report = CHECK_RUNNERS[name](model, catalog, cfg, config.tolerance, grid)
        except (PreconditionError, ValueError) as exc:
            print(f"error: check {name!r}: {exc}", file=sys.stderr)
            return 2, reports
        report = replace(report, duration_ms=(time.perf_counter() - started) * 1e3)
        reports.append(report)
        expected = patterns.get(name)
        if report.verdict != expected:
            exit_code = 1
            print(
                f"unexpected verdict for {config.model_name}/{name}:"
                f" got {report.verdict!r}, expected {expected!r}",
                file=sys.stderr,
            )
    return exit_code, reports


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="onticlab",
        description="Run property checks on hidden-variable models of a qubit.",
    )
    parser.add_argument("--model", required=True, help=f"model name ({', '.join(MODEL_NAMES)})")
    parser.add_argument(
        "--check",
        action="append",
        metavar="NAME",
        help=f"check to run, repeatable ({', '.join(sorted(CHECK_RUNNERS))}); default: audit",
    )
    parser.add_argument("--samples", type=int, default=1_000_000, help="Monte Carlo sample count")
    parser.add_argument("--seed", type=int, default=42, help="base seed for all sampling")
    parser.add_argument("--tol", type=float, default=1e-2, help="verdict tolerance")
    parser.add_argument("--quad-polar", type=int, default=128, help="quadrature polar order per hemisphere")
    parser.add_argument("--quad-azimuth", type=int, default=256, help="quadrature azimuth count")
    parser.add_argument("--catalog", default=None, help="path to a JSON state-catalog file")
    parser.add_argument("--format", default="text", choices=OUTPUT_FORMATS, help="report format")
    args = parser.parse_args(argv)

    config = RunConfig(
        model_name=args.model,
        check_names=tuple(args.check) if args.check else ("audit",),
        samples=args.samples,
        seed=args.seed,
        tolerance=args.tol,
        quad_polar=args.quad_polar,
        quad_azimuth=args.quad_azimuth,
        catalog_path=args.catalog,
        output_format=args.format,
    )
    code, reports = run(config)
    if reports:
        sys.stdout.write(emit_report(reports, config.output_format))
    return code


if __name__ == "__main__":
    raise SystemExit(main())
