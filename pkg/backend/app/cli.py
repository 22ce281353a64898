"""
hgtib command line: spectral data, single recoveries and ladder experiments.

    hgtib spectrum --signal chirped_sech --A 5.2 --C 4 --out left.json
    hgtib recover --left left.json --right right.json --scheme G6 --M 4096 --out q.csv
    hgtib convergence --scheme TIB,G6,G6d --ladder 1024,2048,4096,8192 --out results
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import ValidationError

from app.core.config import settings
from app.core.exceptions import ConfigurationError, HgtibError
from app.core.logging_config import setup_logging
from app.models.enums import (
    Dispersion,
    KernelMode,
    ScatterMethod,
    SchemeFamily,
    Side,
    SignalKind,
    SplitMode,
    SweepMode,
)
from app.models.scheme import GridConfig
from app.schemas.experiment import ExperimentConfig, SignalConfig
from app.schemas.spectral import load_spectral_data, save_spectral_data
from app.services.experiments import (
    build_spectra,
    failed_cells,
    run_convergence,
    run_pareto,
    run_pointwise,
    write_table,
)
from app.services.glme import recover, write_potential_csv
from app.services.spectral import time_reverse
from app.services.zs_oracle import left_spectrum, make_signal

logger = logging.getLogger(__name__)


def _csv_list(value: str) -> List[str]:
    return [item.strip() for item in value.split(",") if item.strip()]


def _int_list(value: str) -> List[int]:
    try:
        return [int(item) for item in _csv_list(value)]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {value!r}") from e


def _add_signal_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--signal", choices=[k.value for k in SignalKind], help="Test signal")
    parser.add_argument("--A", type=float, help="Signal amplitude")
    parser.add_argument("--C", type=float, help="Chirp factor")
    parser.add_argument("--dispersion", choices=[d.value for d in Dispersion])
    parser.add_argument("--L", type=float, help="Signal interval length")
    parser.add_argument("--Mxi", type=int, help="Spectral subintervals")
    parser.add_argument("--Lxi", type=float, help="Spectral domain length")
    parser.add_argument("--method", choices=[m.value for m in ScatterMethod])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hgtib", description="High-order GLME inverse NFT")
    parser.add_argument("--log-level", default=None, help="Logging level")
    parser.add_argument("--log-json", action="store_true", help="Emit JSON log records")
    subparsers = parser.add_subparsers(dest="command", help="Command to run")

    spectrum = subparsers.add_parser("spectrum", help="Signal -> spectral data JSON")
    _add_signal_arguments(spectrum)
    spectrum.add_argument("--M", type=int, default=None, help="Signal subintervals")
    spectrum.add_argument("--side", choices=[s.value for s in Side], default=Side.LEFT.value)
    spectrum.add_argument("--out", required=True, help="Output JSON path")

    rec = subparsers.add_parser("recover", help="Spectral data JSON -> potential CSV")
    rec.add_argument("--left", required=True, help="Left spectral data JSON")
    rec.add_argument("--right", help="Right spectral data JSON (split mode)")
    rec.add_argument(
        "--scheme", default=SchemeFamily.G6.value, choices=[s.value for s in SchemeFamily]
    )
    rec.add_argument("--M", type=int, required=True, help="Output subintervals M_out")
    rec.add_argument("--L", type=float, default=None, help="Signal interval length")
    rec.add_argument("--split", choices=[s.value for s in SplitMode], default=None)
    rec.add_argument(
        "--sweep-mode", choices=[s.value for s in SweepMode], default=SweepMode.INCREMENTAL.value
    )
    rec.add_argument(
        "--kernel-mode", choices=[k.value for k in KernelMode], default=KernelMode.ON_DEMAND.value
    )
    rec.add_argument(
        "--signal", choices=[k.value for k in SignalKind], help="Attach this exact reference"
    )
    rec.add_argument("--A", type=float)
    rec.add_argument("--C", type=float)
    rec.add_argument("--out", required=True, help="Output CSV path")

    for name, text in (
        ("convergence", "RMSE and order per scheme and M"),
        ("pareto", "Accuracy versus wall time"),
        ("pointwise", "eps(t) and per-t order"),
    ):
        experiment = subparsers.add_parser(name, help=text)
        experiment.add_argument("--config", help="Experiment JSON file")
        _add_signal_arguments(experiment)
        experiment.add_argument("--scheme", type=_csv_list, help="Comma-separated schemes")
        experiment.add_argument("--ladder", type=_int_list, help="Comma-separated M values")
        experiment.add_argument("--split", choices=[s.value for s in SplitMode])
        experiment.add_argument("--out", help="Output directory")
        experiment.add_argument("--seed", type=int)
        experiment.add_argument("--workers", type=int)
    return parser


def experiment_config(args: argparse.Namespace) -> ExperimentConfig:
    """Settings < config file < command-line flags."""
    base = ExperimentConfig.build(args.config)
    payload: Dict[str, Any] = base.model_dump()
    signal = {
        key: value
        for key, value in {"kind": args.signal, "amplitude": args.A, "chirp": args.C}.items()
        if value is not None
    }
    payload["signal"] = {**payload["signal"], **signal}
    flags = {
        "dispersion": args.dispersion,
        "schemes": args.scheme,
        "ladder": args.ladder,
        "M_xi": args.Mxi,
        "L_xi": args.Lxi,
        "L": args.L,
        "split": args.split,
        "scatter_method": args.method,
        "output_dir": args.out,
        "seed": args.seed,
        "workers": args.workers,
    }
    payload.update({key: value for key, value in flags.items() if value is not None})
    try:
        return ExperimentConfig.model_validate(payload)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid experiment options: {e}") from e


def cmd_spectrum(args: argparse.Namespace) -> int:
    signal_config = SignalConfig(
        **{
            k: v
            for k, v in {"kind": args.signal, "amplitude": args.A, "chirp": args.C}.items()
            if v is not None
        }
    )
    L = args.L or settings.SIGNAL_LENGTH
    M = args.M or max(settings.DEFAULT_LADDER)
    dispersion = Dispersion(args.dispersion or Dispersion.ANOMALOUS.value)
    method = ScatterMethod(args.method or ScatterMethod.TRANSFER_MATRIX.value)
    samples = make_signal(signal_config.to_closed_form(), L, M)

    def oracle(signal, disp):
        return left_spectrum(signal, disp, M_xi=args.Mxi, L_xi=args.Lxi, method=method)

    if Side(args.side) is Side.RIGHT:
        data = time_reverse(samples, dispersion, oracle)
    else:
        data = oracle(samples, dispersion)
    path = save_spectral_data(data, args.out)
    logger.info(f"Wrote {args.side} spectral data with {len(data.discrete)} eigenvalues to {path}")
    return 0


def cmd_recover(args: argparse.Namespace) -> int:
    left = load_spectral_data(args.left)
    right = load_spectral_data(args.right) if args.right else None
    split = SplitMode(args.split) if args.split else (
        SplitMode.SPLIT_AT_ZERO if right is not None else SplitMode.LEFT_ONLY
    )
    grid = GridConfig(L=args.L or settings.SIGNAL_LENGTH, M_out=args.M, split=split)

    reference = None
    if args.signal:
        signal_config = SignalConfig(
            **{
                k: v
                for k, v in {"kind": args.signal, "amplitude": args.A, "chirp": args.C}.items()
                if v is not None
            }
        )
        reference = signal_config.to_closed_form()(grid.t_grid)

    potential = recover(
        left,
        right,
        grid,
        args.scheme,
        sweep_mode=SweepMode(args.sweep_mode),
        kernel_mode=KernelMode(args.kernel_mode),
        reference=reference,
    )
    path = write_potential_csv(potential, args.out)
    if reference is not None:
        logger.info(f"{args.scheme} M_out={args.M}: RMSE {potential.rmse():.3e}")
    logger.info(f"Wrote recovered potential to {path}")
    return 0


def cmd_experiment(args: argparse.Namespace) -> int:
    cfg = experiment_config(args)
    out = Path(cfg.output_dir)
    spectra = build_spectra(cfg)
    tag = f"{cfg.signal.kind.value}_{cfg.dispersion.value}"

    if args.command == "convergence":
        frame = run_convergence(cfg, spectra)
        write_table(frame, out / f"convergence_{tag}.csv")
        failed = failed_cells(frame)
    elif args.command == "pareto":
        frame, summary = run_pareto(cfg, spectra)
        write_table(frame, out / f"pareto_{tag}.csv")
        (out / f"pareto_{tag}.json").write_text(json.dumps(summary, indent=2))
        failed = failed_cells(frame)
    else:
        errors, orders = run_pointwise(cfg, spectra)
        write_table(errors, out / f"pointwise_eps_{tag}.csv")
        write_table(orders, out / f"pointwise_order_{tag}.csv")
        expected = len(cfg.schemes) * len(cfg.ladder)
        failed = expected - errors.groupby(["scheme", "M"]).ngroups if len(errors) else expected

    if failed:
        logger.error(f"{failed} cell(s) failed")
        return 1
    return 0


COMMANDS = {
    "spectrum": cmd_spectrum,
    "recover": cmd_recover,
    "convergence": cmd_experiment,
    "pareto": cmd_experiment,
    "pointwise": cmd_experiment,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level, json_output=True if args.log_json else None)

    handler = COMMANDS.get(args.command)
    if handler is None:
        parser.print_help()
        return 1
    try:
        return handler(args)
    except HgtibError as e:
        logger.error(f"{args.command} failed: {json.dumps(e.to_dict(), default=str)}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
