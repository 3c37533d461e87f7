"""Command-line front end: synthesize, reconstruct, verify, and report.

Subcommands
-----------
synth        build a synthetic mixed state plus a measurement dataset
reconstruct  run the iterative eigenpair extraction on a dataset file
verify       run the randomized optimality-bound checks over a state corpus
figdata      emit cost-comparison and entropy grids as CSV

Exit codes: 0 success, 1 runtime failure, 2 usage error, 3 verification
failure.  Every command writes a ``manifest.json`` with the resolved flags;
re-running the recorded argv reproduces all outputs byte-identically in
exact mode.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
import time

import numpy as np

from . import __version__, figures, jsonio, measurement, propositions, reconstruction
from .costs import CostSpec
from .states import (
    eigendecompose,
    fidelity,
    load_density_matrix,
    load_state_vector,
    pure_fidelity,
    save_density_matrix,
    save_state_vector,
)
from .training import TrainConfig

BELL_SPECTRUM = (0.9, 0.09, 0.009, 0.001)

REPORT_COLUMNS = (
    "n_qubits",
    "p1",
    "p2",
    "kappa2",
    "p3",
    "overlap1",
    "p1b",
    "overlap2",
    "p2b",
    "fidelity",
    "relative_fidelity",
    "fidelity_target",
    "overlap1_target",
)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def _resolve_threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("EIGENTOMO_THREADS")
    return max(1, int(env)) if env else 1


def _write_manifest(args, command, argv, inputs, outputs, started) -> None:
    flags = {
        key: value
        for key, value in sorted(vars(args).items())
        if key not in ("func", "threads")
    }
    manifest = {
        "command": command,
        "version": __version__,
        "argv": argv,
        "flags": flags,
        "threads": _resolve_threads(args),
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "duration_s": time.monotonic() - started,
    }
    jsonio.dump(manifest, os.path.join(args.out_dir, "manifest.json"))


def _out_path(args, name: str) -> str:
    os.makedirs(args.out_dir, exist_ok=True)
    return os.path.join(args.out_dir, name)


def cmd_synth(args) -> int:
    started = time.monotonic()
    if args.preset == "bell-mixture":
        rho = measurement.bell_mixture(BELL_SPECTRUM)
        target = measurement.bell_states()[0]
        argv = ["synth", "--preset", "bell-mixture"]
    else:
        if args.spectrum is None:
            raise ValueError("--spectrum is required with --w")
        spectrum = [float(x) for x in args.spectrum.split(",")]
        rho = measurement.make_w_mixture(
            args.w, spectrum, seed=args.seed, perturbation=args.perturbation
        )
        target = measurement.w_state(args.w)
        argv = [
            "synth",
            "--w",
            str(args.w),
            "--spectrum",
            args.spectrum,
            "--perturbation",
            str(args.perturbation),
        ]
    argv += [
        "--bases",
        args.bases,
        "--shots",
        str(args.shots),
        "--seed",
        str(args.seed),
        "--out-dir",
        args.out_dir,
    ]

    bases = measurement.generate_basis_set(rho.n_qubits, args.bases, args.seed)
    if args.shots > 0:
        dataset = measurement.sample_dataset(rho, bases, args.shots, args.seed)
    else:
        dataset = measurement.exact_dataset(rho, bases)

    state_path = _out_path(args, "state.json")
    target_path = _out_path(args, "target.json")
    dataset_path = _out_path(args, "dataset.jsonl")
    save_density_matrix(state_path, rho)
    save_state_vector(target_path, target)
    dataset.save_jsonl(dataset_path)
    _write_manifest(
        args, "synth", argv, [], [state_path, target_path, dataset_path], started
    )
    print(
        f"synth: {rho.n_qubits} qubits, {len(bases)} bases, "
        f"{dataset.n_records} records -> {args.out_dir}"
    )
    return 0


def _table_row(args, approx, report, truth, target) -> dict:
    row: dict = {key: None for key in REPORT_COLUMNS}
    row["n_qubits"] = approx.n_qubits
    accepted = [s for s in report.steps if s.accepted]
    if accepted:
        row["p1b"] = accepted[0].weight
        row["overlap1"] = accepted[0].eigenstate_fidelity
    if len(accepted) > 1:
        row["p2b"] = accepted[1].weight
        row["overlap2"] = accepted[1].eigenstate_fidelity
    if truth is not None:
        spectrum = eigendecompose(truth)
        row["p1"] = float(spectrum.eigenvalues[0])
        if spectrum.dim > 1:
            row["p2"] = float(spectrum.eigenvalues[1])
            row["kappa2"] = spectrum.leading_weight(2)
        if spectrum.dim > 2:
            row["p3"] = float(spectrum.eigenvalues[2])
        row["fidelity"] = fidelity(truth, approx.density_matrix())
        row["relative_fidelity"] = reconstruction.relative_fidelity(truth, approx)
        if target is not None:
            row["fidelity_target"] = pure_fidelity(truth, target)
    if target is not None and approx.pairs:
        row["overlap1_target"] = float(
            abs(target.overlap(approx.pairs[0].state)) ** 2
        )
    return row


def cmd_reconstruct(args) -> int:
    started = time.monotonic()
    dataset = measurement.MeasurementDataset.load_jsonl(args.dataset)
    truth = load_density_matrix(args.truth) if args.truth else None
    target = load_state_vector(args.target) if args.target else None
    config = TrainConfig(
        cost=CostSpec(kind=args.cost),
        learning_rate=args.lr,
        max_epochs=args.epochs,
        batch_bases=args.batch_bases,
        seed=args.seed,
        restarts=args.restarts,
    )
    approx, report = reconstruction.reconstruct(
        dataset,
        args.max_rank,
        config,
        floor=args.floor,
        true_rho=truth,
        n_threads=_resolve_threads(args),
    )

    result_path = _out_path(args, "result.json")
    report_doc = report.as_dict()
    jsonio.dump(
        {
            "pairs": [
                {
                    "p": pair.weight,
                    "state": {
                        "n_qubits": pair.state.n_qubits,
                        "re": pair.state.amplitudes.real.tolist(),
                        "im": pair.state.amplitudes.imag.tolist(),
                    },
                }
                for pair in approx.pairs
            ],
            "report": report_doc["steps"],
            "notes": report_doc["notes"],
        },
        result_path,
    )

    row = _table_row(args, approx, report, truth, target)
    report_path = _out_path(args, "report.csv")
    with open(report_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_COLUMNS)
        writer.writerow([_fmt(row[key]) for key in REPORT_COLUMNS])

    argv = [
        "reconstruct",
        "--dataset",
        args.dataset,
        "--max-rank",
        str(args.max_rank),
        "--floor",
        str(args.floor),
        "--cost",
        args.cost,
        "--lr",
        str(args.lr),
        "--epochs",
        str(args.epochs),
        "--restarts",
        str(args.restarts),
        "--seed",
        str(args.seed),
        "--out-dir",
        args.out_dir,
    ]
    if args.truth:
        argv += ["--truth", args.truth]
    if args.target:
        argv += ["--target", args.target]
    if args.batch_bases:
        argv += ["--batch-bases", str(args.batch_bases)]
    inputs = [args.dataset] + [p for p in (args.truth, args.target) if p]
    _write_manifest(
        args, "reconstruct", argv, inputs, [result_path, report_path], started
    )
    summary = ", ".join(
        f"p{s.step}={s.weight:.4f}" for s in report.steps if s.accepted
    )
    print(f"reconstruct: rank {approx.rank} ({summary}) -> {args.out_dir}")
    return 0


def cmd_verify(args) -> int:
    started = time.monotonic()
    dims = tuple(int(d) for d in args.dims.split(","))
    corpus = propositions.default_corpus(
        seed=args.seed, states_per_dim=args.states_per_dim, dims=dims
    )
    fidelity_fn = None
    pure_fidelity_fn = None
    if args.inject_faulty_fidelity:
        fidelity_fn = lambda a, b: fidelity(a, b) + 0.02  # noqa: E731
        pure_fidelity_fn = lambda a, b: pure_fidelity(a, b) + 0.02  # noqa: E731
    result = propositions.run_corpus(
        corpus,
        trials=args.trials,
        seed=args.seed,
        fidelity_fn=fidelity_fn,
        pure_fidelity_fn=pure_fidelity_fn,
    )

    report_path = _out_path(args, "verify_report.json")
    doc = {
        "passed": result.passed,
        "max_violation": result.max_violation(),
        "n_states": len(corpus),
        "checks": {},
    }
    for name, reports in result.reports.items():
        doc["checks"][name] = {
            "n": len(reports),
            "max_violation": max((rep.max_violation for rep in reports), default=0.0),
            "all_passed": all(rep.passed for rep in reports),
            "notes": sorted({rep.note for rep in reports if getattr(rep, "note", "")}),
        }
    jsonio.dump(doc, report_path)

    argv = [
        "verify",
        "--dims",
        args.dims,
        "--trials",
        str(args.trials),
        "--states-per-dim",
        str(args.states_per_dim),
        "--seed",
        str(args.seed),
        "--out-dir",
        args.out_dir,
    ]
    _write_manifest(args, "verify", argv, [], [report_path], started)
    status = "pass" if result.passed else "FAIL"
    print(
        f"verify: {len(corpus)} states, max violation "
        f"{result.max_violation():.3e} -> {status}"
    )
    return 0 if result.passed else 3


def cmd_figdata(args) -> int:
    started = time.monotonic()
    rho = load_density_matrix(args.state)
    bases = measurement.generate_basis_set(rho.n_qubits, args.bases, args.seed)
    outputs = []
    if args.mode == "fig3":
        rows, correlations = figures.cost_comparison_grid(
            rho,
            bases,
            args.perturbations,
            args.seed,
            strength_min=args.strength_min,
            strength_max=args.strength_max,
            floor=args.floor,
        )
        grid_path = _out_path(args, "fig3.csv")
        with open(grid_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                [
                    "index",
                    "strength",
                    "fidelity",
                    "eps_fidelity",
                    "p1_estimate",
                    "eps_p1",
                ]
                + [f"cost_{kind}" for kind in figures.GRID_COSTS]
            )
            for row in rows:
                writer.writerow(
                    [
                        row.index,
                        _fmt(row.strength),
                        _fmt(row.fidelity),
                        _fmt(row.eps_fidelity),
                        _fmt(row.p1_estimate),
                        _fmt(row.eps_p1),
                    ]
                    + [_fmt(row.costs[kind]) for kind in figures.GRID_COSTS]
                )
        summary_path = _out_path(args, "fig3_summary.json")
        jsonio.dump(
            {
                "n_perturbations": len(rows),
                "spearman_vs_infidelity": correlations,
            },
            summary_path,
        )
        outputs = [grid_path, summary_path]
        print(
            "figdata fig3: spearman "
            + ", ".join(f"{k}={v:.3f}" for k, v in correlations.items())
        )
    else:
        entropy_rows, probability_rows = figures.entropy_tables(rho, bases)
        entropy_path = _out_path(args, "fig4_entropy.csv")
        with open(entropy_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["basis", "entropy_mixed", "entropy_pure"])
            for basis, h_mixed, h_pure in entropy_rows:
                writer.writerow([basis, _fmt(h_mixed), _fmt(h_pure)])
        prob_path = _out_path(args, "fig4_probabilities.csv")
        with open(prob_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["basis", "outcome", "p_mixed", "p_pure"])
            for basis, outcome, p_mixed, p_pure in probability_rows:
                writer.writerow([basis, outcome, _fmt(p_mixed), _fmt(p_pure)])
        outputs = [entropy_path, prob_path]
        reduced = sum(1 for _, hm, hp in entropy_rows if hp <= hm)
        print(
            f"figdata fig4: entropy reduced in {reduced}/{len(entropy_rows)} bases"
        )

    argv = [
        "figdata",
        "--mode",
        args.mode,
        "--state",
        args.state,
        "--bases",
        args.bases,
        "--perturbations",
        str(args.perturbations),
        "--strength-min",
        str(args.strength_min),
        "--strength-max",
        str(args.strength_max),
        "--floor",
        str(args.floor),
        "--seed",
        str(args.seed),
        "--out-dir",
        args.out_dir,
    ]
    _write_manifest(args, "figdata", argv, [args.state], outputs, started)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="base random seed")
    common.add_argument(
        "--out-dir", default=".", help="directory for output files and the manifest"
    )
    common.add_argument(
        "--threads",
        type=int,
        default=None,
        help="worker threads (default: EIGENTOMO_THREADS or 1)",
    )

    parser = argparse.ArgumentParser(
        prog="eigentomo",
        description="Iterative low-rank tomography of mixed quantum states.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser(
        "synth", parents=[common], help="synthesize a state and a dataset"
    )
    group = p_synth.add_mutually_exclusive_group(required=True)
    group.add_argument(
        "--preset", choices=["bell-mixture"], help="named reference mixture"
    )
    group.add_argument("--w", type=int, help="qubit count of a synthetic W mixture")
    p_synth.add_argument(
        "--spectrum", help="comma-separated leading eigenvalues for --w"
    )
    p_synth.add_argument(
        "--perturbation",
        type=float,
        default=0.25,
        help="rotation angle bound applied to the W eigenbasis",
    )
    p_synth.add_argument(
        "--bases", choices=["full", "compressed"], default="full",
        help="measurement bases: all 3^n or a random subset",
    )
    p_synth.add_argument(
        "--shots",
        type=int,
        default=0,
        help="shots per basis for sampled statistics (0 = exact probabilities)",
    )
    p_synth.set_defaults(func=cmd_synth)

    p_rec = sub.add_parser(
        "reconstruct", parents=[common], help="run the iterative reconstruction"
    )
    p_rec.add_argument("--dataset", required=True, help="dataset file (JSON lines)")
    p_rec.add_argument("--truth", help="ground-truth density-matrix file (optional)")
    p_rec.add_argument("--target", help="target pure-state file (optional)")
    p_rec.add_argument("--max-rank", type=int, default=2)
    p_rec.add_argument(
        "--floor",
        type=float,
        default=reconstruction.DEFAULT_FLOOR,
        help="denominator floor for the eigenvalue estimate",
    )
    p_rec.add_argument("--cost", choices=["l1", "l15", "kl1", "kl2"], default="l15")
    p_rec.add_argument("--lr", type=float, default=0.05)
    p_rec.add_argument("--epochs", type=int, default=20000)
    p_rec.add_argument("--restarts", type=int, default=3)
    p_rec.add_argument("--batch-bases", type=int, default=None)
    p_rec.set_defaults(func=cmd_reconstruct)

    p_ver = sub.add_parser(
        "verify", parents=[common], help="verify the optimality bounds"
    )
    p_ver.add_argument("--dims", default="2,4,8,16", help="comma-separated dimensions")
    p_ver.add_argument("--trials", type=int, default=500)
    p_ver.add_argument("--states-per-dim", type=int, default=25)
    p_ver.add_argument(
        "--inject-faulty-fidelity",
        action="store_true",
        help=argparse.SUPPRESS,
    )
    p_ver.set_defaults(func=cmd_verify)

    p_fig = sub.add_parser(
        "figdata", parents=[common], help="emit report grids as CSV"
    )
    p_fig.add_argument("--mode", choices=["fig3", "fig4"], required=True)
    p_fig.add_argument("--state", required=True, help="density-matrix file")
    p_fig.add_argument("--bases", choices=["full", "compressed"], default="full")
    p_fig.add_argument("--perturbations", type=int, default=50)
    p_fig.add_argument("--strength-min", type=float, default=0.01)
    p_fig.add_argument("--strength-max", type=float, default=0.5)
    p_fig.add_argument(
        "--floor", type=float, default=reconstruction.DEFAULT_FLOOR
    )
    p_fig.set_defaults(func=cmd_figdata)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
