"""Command-line interface.

Subcommands: decompose | solve | effective | bound | evolve | reproduce |
scaling.  Exit codes: 0 on success, 1 on numerical failure, 2 on usage
errors (including unreadable or malformed model files).
"""

from __future__ import annotations

import dataclasses
import json
import sys

import click
import numpy as np

from . import bench, liouville, spectral
from .bloch import kantorovich_report, solve_blocks
from .effective import eternal_bound, verify_similarity
from .errors import AdiablochError
from .liouville import LindbladModel, build_superop, gkls_decompose


def _load_model(path: str) -> LindbladModel:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise click.UsageError(f"cannot read model file {path}: {exc}") from exc
    try:
        return LindbladModel.from_json(text)
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise click.UsageError(f"malformed model file {path}: {exc}") from exc


def _with_gamma(model: LindbladModel, gamma: float | None) -> LindbladModel:
    if gamma is None:
        return model
    return dataclasses.replace(model, gamma=float(gamma))


def _emit(text: str, out: str | None) -> None:
    if out is None:
        click.echo(text)
    else:
        with open(out, "w", encoding="utf-8") as handle:
            handle.write(text if text.endswith("\n") else text + "\n")


def _matrix_json(m) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


model_option = click.option(
    "--model", "model_path", required=True, type=click.Path(), help="Model JSON file."
)
gamma_option = click.option(
    "--gamma", type=float, default=None, help="Override the model coupling."
)
out_option = click.option(
    "--out", type=click.Path(), default=None, help="Output file (default: stdout)."
)
norm_option = click.option(
    "--norm", "norm_kind", type=click.Choice(["spectral", "trace", "frobenius"]),
    default="spectral", show_default=True,
)
tol_option = click.option(
    "--tol", type=float, default=1e-12, show_default=True, help="Solver residual tolerance."
)
format_option = click.option(
    "--format", "fmt", type=click.Choice(["json", "csv"]), default="json",
    show_default=True,
)


@click.group()
def main():
    """Effective adiabatic generators for strongly driven open systems."""


@main.command()
@model_option
@click.option("--cluster-tol", type=float, default=None, help="Eigenvalue clustering tolerance.")
@click.option("--matrices", is_flag=True, help="Include projection/resolvent matrices.")
@out_option
def decompose(model_path, cluster_tol, matrices, out):
    """Spectral decomposition of the strong generator."""
    model = _load_model(model_path)
    strong = build_superop(model, "strong")
    try:
        if cluster_tol is not None:
            dec = spectral.decompose(strong.matrix, cluster_tol)
        else:
            dec = bench.robust_decompose(strong.matrix)
    except AdiablochError as exc:
        _fail(str(exc))
    payload = {
        "dim": model.dim,
        "cluster_tol": dec.cluster_tol,
        "residuals": dec.residuals,
        "blocks": [
            {
                "eigenvalue": [blk.eigenvalue.real, blk.eigenvalue.imag],
                "rank": blk.rank,
                "index": blk.index,
                **(
                    {
                        "projection": _matrix_json(blk.projection),
                        "nilpotent": _matrix_json(blk.nilpotent),
                        "resolvent": _matrix_json(blk.resolvent),
                    }
                    if matrices
                    else {}
                ),
            }
            for blk in dec.blocks
        ],
    }
    _emit(json.dumps(payload, indent=2), out)


@main.command()
@model_option
@gamma_option
@tol_option
@click.option("--method", type=click.Choice(["newton", "fixed_point"]), default="newton",
              show_default=True)
@click.option("--matrices", is_flag=True, help="Include solution matrices.")
@out_option
def solve(model_path, gamma, tol, method, matrices, out):
    """Solve the adiabatic Bloch equations on every block."""
    model = _with_gamma(_load_model(model_path), gamma)
    strong = build_superop(model, "strong")
    weak = build_superop(model, "weak")
    try:
        dec = bench.robust_decompose(strong.matrix)
    except AdiablochError as exc:
        _fail(str(exc))
    reports = [
        kantorovich_report(dec, weak.matrix, model.gamma, ell)
        for ell in range(len(dec.blocks))
    ]
    uncertified = [r for r in reports if not r.solvable]
    note = (
        " Newton-Kantorovich certificate inapplicable on "
        f"{len(uncertified)} of {len(reports)} blocks (gamma below the "
        f"certified threshold max gamma_l = {max(r.gamma_min for r in reports):.6g})."
        if uncertified
        else ""
    )
    try:
        sols = solve_blocks(dec, weak.matrix, model.gamma, method=method, tol=tol)
    except AdiablochError as exc:
        _fail(f"{exc}{note}")
    # an uncertified run must at least land on the adiabatic branch, i.e.
    # a small deformation of the unperturbed projections
    implausible = [
        s.ell
        for s in sols
        if not s.certified and s.residuals["wave_deformation"] >= 1.0
    ]
    if implausible:
        _fail(
            f"solution on blocks {implausible} is not a small deformation of "
            f"the unperturbed projections (||U - P|| >= 1); the adiabatic "
            f"branch is not reachable at gamma = {model.gamma:.6g}.{note}"
        )
    payload = {
        "gamma": model.gamma,
        "blocks": [
            {
                "ell": s.ell,
                "eigenvalue": [
                    dec.blocks[s.ell].eigenvalue.real,
                    dec.blocks[s.ell].eigenvalue.imag,
                ],
                "method": s.method,
                "iterations": s.iterations,
                "residuals": s.residuals,
                "certified": s.certified,
                "kantorovich": dataclasses.asdict(s.report),
                **(
                    {
                        "omega": _matrix_json(s.omega),
                        "omega_conj": _matrix_json(s.omega_conj),
                        "wave": _matrix_json(s.wave),
                        "wave_conj": _matrix_json(s.wave_conj),
                    }
                    if matrices
                    else {}
                ),
            }
            for s in sols
        ],
    }
    _emit(json.dumps(payload, indent=2), out)


@main.command()
@model_option
@gamma_option
@tol_option
@out_option
def effective(model_path, gamma, tol, out):
    """GKLS data of the symmetrized effective generator."""
    model = _with_gamma(_load_model(model_path), gamma)
    try:
        pipe = bench.compute_effective(model, tol=tol)
        form = gkls_decompose(pipe.generators.schrieffer_wolff, tol=1e-8)
        sim = verify_similarity(
            pipe.generators,
            pipe.decomposition,
            pipe.strong.matrix,
            pipe.weak.matrix,
            model.gamma,
            list(pipe.solutions),
        )
    except AdiablochError as exc:
        _fail(str(exc))
    payload = {
        "gamma": model.gamma,
        "rates": list(form.rates),
        "hamiltonian": _matrix_json(form.hamiltonian),
        "verdicts": form.verdicts,
        "min_rate": min(form.rates),
        "similarity_residuals": sim,
    }
    _emit(json.dumps(payload, indent=2), out)


@main.command()
@model_option
@gamma_option
@norm_option
@click.option("--unitary", is_flag=True, help="Also evaluate the unitary-case bound.")
@out_option
def bound(model_path, gamma, norm_kind, unitary, out):
    """Per-block coupling thresholds and uniform-in-time error bounds."""
    model = _with_gamma(_load_model(model_path), gamma)
    strong = build_superop(model, "strong")
    weak = build_superop(model, "weak")
    try:
        dec = bench.robust_decompose(strong.matrix)
        report = eternal_bound(dec, weak.matrix, model.gamma, norm_kind, unitary=unitary)
    except AdiablochError as exc:
        _fail(str(exc))
    _emit(json.dumps(dataclasses.asdict(report), indent=2), out)


@main.command()
@model_option
@gamma_option
@click.option("--order", default="inf", show_default=True,
              help="Truncation order, or 'inf' for the nonperturbative generator.")
@norm_option
@format_option
@out_option
def evolve(model_path, gamma, order, norm_kind, fmt, out):
    """Distance between the true and effective evolutions over the time grid."""
    model = _with_gamma(_load_model(model_path), gamma)
    if order == "inf":
        k = None
    else:
        try:
            k = int(order)
        except ValueError as exc:
            raise click.UsageError(f"--order must be an integer or 'inf': {order}") from exc
    try:
        curve = bench.distance_curve(model, order=k, norm_kind=norm_kind)
    except AdiablochError as exc:
        _fail(str(exc))
    if fmt == "csv":
        _emit(curve.to_csv(), out)
    else:
        payload = {
            "order": "inf" if k is None else k,
            "norm": norm_kind,
            "times": [float(t) for t in curve.times],
            "distances": [float(d) for d in curve.distances],
            "envelope": [float(e) for e in curve.envelope],
        }
        _emit(json.dumps(payload, indent=2), out)


@main.command()
@click.argument("case", type=click.Choice(list(bench.CASES) + ["all"]))
@format_option
@out_option
def reproduce(case, fmt, out):
    """Re-derive the printed reference data of the built-in examples."""
    cases = bench.CASES if case == "all" else (case,)
    try:
        reports = [bench.reproduce(c) for c in cases]
    except AdiablochError as exc:
        _fail(str(exc))
    if fmt == "csv":
        lines = ["case,name,expected,computed,provenance,tol,pass"]
        for rep in reports:
            for item in rep.items:
                lines.append(
                    f"{rep.case},{item.name},{item.expected},{item.computed},"
                    f"{item.provenance},{item.tol:.17g},{item.passed}"
                )
        _emit("\n".join(lines), out)
    else:
        payload = [rep.to_dict() for rep in reports]
        _emit(json.dumps(payload[0] if len(payload) == 1 else payload, indent=2), out)
    for rep in reports:
        status = "pass" if rep.passed else "FAIL"
        click.echo(f"{rep.case}: {status}", err=True)
    if not all(rep.passed for rep in reports):
        sys.exit(1)


@main.command()
@model_option
@click.option("--gammas", default="10,20,40", show_default=True,
              help="Comma-separated couplings for the sweep.")
@click.option("--orders", default="0,1,2", show_default=True,
              help="Comma-separated truncation orders.")
@norm_option
@out_option
def scaling(model_path, gammas, orders, norm_kind, out):
    """Breakaway-time scaling of the truncated approximations."""
    model = _load_model(model_path)
    try:
        gamma_list = [float(g) for g in gammas.split(",") if g]
        order_list = [int(k) for k in orders.split(",") if k]
    except ValueError as exc:
        raise click.UsageError(f"bad --gammas/--orders: {exc}") from exc
    try:
        report = bench.scaling_check(model, gamma_list, order_list, norm_kind=norm_kind)
    except AdiablochError as exc:
        _fail(str(exc))
    payload = dataclasses.asdict(report)
    payload["breakaway"] = {
        str(k): {str(g): t for g, t in d.items()} for k, d in report.breakaway.items()
    }
    payload["plateau"] = {str(g): v for g, v in report.plateau.items()}
    payload["slopes"] = {str(k): v for k, v in report.slopes.items()}
    payload["lower_bound_only"] = {str(k): v for k, v in report.lower_bound_only.items()}
    _emit(json.dumps(payload, indent=2), out)


if __name__ == "__main__":
    main()
