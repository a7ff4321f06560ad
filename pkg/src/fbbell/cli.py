"""Command-line front end: synth, measure, tomo, sense, pipeline.

Every command reads one JSON config (all fields defaulted, see
config.DEFAULT_CONFIG), accepts a few overrides, and writes machine-readable
artifacts into --out.  Exit codes: 0 success, 2 config/input error,
3 degenerate physics, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import datetime
import hashlib
import io
import json
import sys
from pathlib import Path

import numpy as np

from .config import DEFAULT_CONFIG, RunConfig, load_config, validate_config
from .core import TwoQubitState, canonical_bell, fidelity
from .errors import (
    ConfigError,
    ContractViolation,
    DegenerateStateError,
    FbbellError,
    NumericalError,
    OutOfModelError,
)
from .measurement import (
    MeasurementBasis,
    car,
    coincidence_probs,
    jsi_ratio,
    read_count_table,
    simulate_counts,
    write_count_table,
)
from .sensing import ScanConfig, fit_fringe, scan, write_scan_csv
from .synthesis import (
    apply_mask,
    bell_phase,
    compensate,
    contamination_ratio,
    eoim_output,
    synthesize,
)
from .tomography import sample_posterior

_STAGE_MEASURE_ZZ = 0
_STAGE_MEASURE_XX = 1
_STAGE_TOMO = 2
_STAGE_SCAN = 3


def _stage_seed(cfg: RunConfig, stage: int):
    return np.random.SeedSequence(cfg.seed).spawn(4)[stage]


def _dump_json(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def _write(out_dir: Path, name: str, text: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    path.write_text(text, encoding="utf-8")
    return path


def synthesize_target(cfg: RunConfig):
    """Pump -> SPDC -> phase compensation; returns (state, report dict)."""
    pump = eoim_output(cfg.eoim)
    raw = synthesize(pump, cfg.beta).normalize()
    cls = cfg.target.correlation_class
    measured = bell_phase(raw, cls)
    mask = compensate(cfg.target, measured)
    state = apply_mask(raw, mask).normalize()
    contamination = contamination_ratio(state, cls)
    report = {
        "target": cfg.target.value,
        "correlation_class": cls,
        "measured_phase_rad": measured,
        "compensation_phase_rad": float(mask.phase[1]),
        "contamination_power_ratio": contamination,
        "desired_to_undesired_ratio": (
            float("inf") if contamination == 0 else 1.0 / contamination
        ),
        "fidelity_to_canonical": fidelity(
            state.density_matrix(), canonical_bell(cfg.target)
        ),
    }
    return state, report


def _measure_tables(cfg: RunConfig, state: TwoQubitState, bases):
    tables = {}
    for kind in bases:
        basis = MeasurementBasis.zz() if kind == "ZZ" else MeasurementBasis.xx()
        probs = coincidence_probs(state, basis)
        stage = _STAGE_MEASURE_ZZ if kind == "ZZ" else _STAGE_MEASURE_XX
        tables[kind] = simulate_counts(
            probs, cfg.noise, basis, cfg.integration_s, _stage_seed(cfg, stage)
        )
    return tables


def _load_run_config(args) -> RunConfig:
    data = {}
    if args.config is not None:
        cfg = load_config(args.config)
        data = dict(cfg.raw)
    if getattr(args, "target", None):
        data["target"] = args.target
    if getattr(args, "seed", None) is not None:
        data["seed"] = args.seed
    if getattr(args, "extinction_db", None) is not None:
        eoim = dict(data.get("eoim", {}))
        eoim["extinction_db"] = args.extinction_db
        data["eoim"] = eoim
    cfg = validate_config(data)
    if getattr(args, "counts", None) is not None:
        if args.counts <= 0:
            raise ConfigError("--counts must be positive")
        rate = cfg.noise.pair_flux * cfg.noise.detector_efficiency**2
        if rate <= 0:
            raise ConfigError("--counts needs nonzero pair flux and efficiency")
        cfg = dataclasses.replace(cfg, integration_s=args.counts / rate)
    return cfg


def cmd_synth(args) -> int:
    cfg = _load_run_config(args)
    state, report = synthesize_target(cfg)
    out = Path(args.out)
    _write(out, "state.json", _dump_json(state.to_json_dict()))
    _write(out, "synthesis_report.json", _dump_json(report))
    print(
        f"synthesized {cfg.target.value}: desired/undesired power ratio "
        f"{report['desired_to_undesired_ratio']:.4g}"
    )
    return 0


def cmd_measure(args) -> int:
    cfg = _load_run_config(args)
    state, _ = synthesize_target(cfg)
    kinds = {"zz": ["ZZ"], "xx": ["XX"], "both": ["ZZ", "XX"]}[args.basis]
    tables = _measure_tables(cfg, state, kinds)
    out = Path(args.out)
    for kind, table in tables.items():
        buf = io.StringIO()
        write_count_table(table, buf)
        _write(out, f"counts_{kind.lower()}.csv", buf.getvalue())
        line = f"{kind}: total {table.total()} coincidences"
        if kind == "ZZ":
            cls = cfg.target.correlation_class
            line += (
                f", JSI ratio {jsi_ratio(table, cls, subtract_accidentals=True):.4g}"
                f", CAR {car(table, cls):.4g}"
            )
        print(line)
    return 0


def cmd_tomo(args) -> int:
    cfg = _load_run_config(args)
    tables = []
    for path in args.count_files:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                tables.append(read_count_table(fh))
        except OSError as exc:
            raise ConfigError(f"count file {path}: {exc}") from None
        except ContractViolation as exc:
            raise ConfigError(f"count file {path}: {exc}") from None
    summary = sample_posterior(
        tables,
        canonical_bell(cfg.target),
        n_samples=cfg.chain.n_samples,
        burn_in=cfg.chain.burn_in,
        thin=cfg.chain.thin,
        step_scale=cfg.chain.step_scale,
        seed=_stage_seed(cfg, _STAGE_TOMO),
        subtract=cfg.chain.subtract_accidentals,
    )
    out = Path(args.out)
    _write(out, "tomography.json", _dump_json(summary.to_json_dict()))
    lo, hi = summary.fidelity_ci
    print(
        f"posterior fidelity to {cfg.target.value}: {summary.fidelity_mean:.4f} "
        f"(90% CI [{lo:.4f}, {hi:.4f}], acceptance {summary.acceptance_rate:.2f})"
    )
    return 0


def cmd_sense(args) -> int:
    cfg = _load_run_config(args)
    mode = args.mode or cfg.scan.mode
    scan_cfg = ScanConfig(
        state_label=cfg.target,
        mode=mode,
        phase_grid=cfg.scan.phase_grid(),
        counts_per_point=(args.counts or cfg.scan.counts_per_point),
        seed=_stage_seed(cfg, _STAGE_SCAN),
    )
    table = scan(scan_cfg, cfg.noise)
    out = Path(args.out)
    buf = io.StringIO()
    write_scan_csv(table, buf)
    _write(out, "scan.csv", buf.getvalue())
    fits = {}
    for k in (0, 1):
        for l in (0, 1):
            fit = fit_fringe(table.phases, table.column(k, l))
            fits[f"{k}{l}"] = fit.to_json_dict()
    _write(out, "fringe_fits.json", _dump_json({"mode": mode, "fits": fits}))
    f00 = fits["00"]
    if f00["flat"]:
        print(f"{cfg.target.value} {mode} scan: flat (state does not respond)")
    else:
        print(
            f"{cfg.target.value} {mode} scan: fringe frequency "
            f"{f00['angular_frequency']:.4f}, visibility {f00['visibility']:.3f}"
        )
    return 0


def cmd_pipeline(args) -> int:
    cfg = _load_run_config(args)
    out = Path(args.out)
    artifacts = []

    state, report = synthesize_target(cfg)
    artifacts.append(_write(out, "state.json", _dump_json(state.to_json_dict())))
    artifacts.append(_write(out, "synthesis_report.json", _dump_json(report)))

    tables = _measure_tables(cfg, state, ["ZZ", "XX"])
    for kind, table in tables.items():
        buf = io.StringIO()
        write_count_table(table, buf)
        artifacts.append(_write(out, f"counts_{kind.lower()}.csv", buf.getvalue()))

    summary = sample_posterior(
        [tables["ZZ"], tables["XX"]],
        canonical_bell(cfg.target),
        n_samples=cfg.chain.n_samples,
        burn_in=cfg.chain.burn_in,
        thin=cfg.chain.thin,
        step_scale=cfg.chain.step_scale,
        seed=_stage_seed(cfg, _STAGE_TOMO),
        subtract=cfg.chain.subtract_accidentals,
    )
    artifacts.append(_write(out, "tomography.json", _dump_json(summary.to_json_dict())))

    scan_cfg = ScanConfig(
        state_label=cfg.target,
        mode=cfg.scan.mode,
        phase_grid=cfg.scan.phase_grid(),
        counts_per_point=cfg.scan.counts_per_point,
        seed=_stage_seed(cfg, _STAGE_SCAN),
    )
    table = scan(scan_cfg, cfg.noise)
    buf = io.StringIO()
    write_scan_csv(table, buf)
    artifacts.append(_write(out, "scan.csv", buf.getvalue()))
    fits = {
        f"{k}{l}": fit_fringe(table.phases, table.column(k, l)).to_json_dict()
        for k in (0, 1)
        for l in (0, 1)
    }
    artifacts.append(
        _write(out, "fringe_fits.json", _dump_json({"mode": cfg.scan.mode, "fits": fits}))
    )

    manifest = {
        "seed": cfg.seed,
        "config": cfg.raw,
        "artifacts": {
            p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in artifacts
        },
    }
    _write(out, "manifest.json", _dump_json(manifest))
    _write(
        out,
        "metadata.json",
        _dump_json(
            {"created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat()}
        ),
    )
    print(
        f"pipeline complete: {cfg.target.value}, posterior fidelity "
        f"{summary.fidelity_mean:.4f}, artifacts in {out}"
    )
    return 0


def cmd_print_config(args) -> int:
    if args.config is not None:
        cfg = load_config(args.config)
        print(_dump_json(cfg.raw), end="")
    else:
        print(_dump_json(DEFAULT_CONFIG), end="")
    return 0


def _add_common(sub, out_default: str):
    sub.add_argument("--config", type=Path, default=None, help="JSON run config")
    sub.add_argument("--seed", type=int, default=None, help="override master seed")
    sub.add_argument("--out", type=Path, default=Path(out_default), help="output directory")
    sub.add_argument("--target", default=None, help="Bell label: psi+ psi- phi+ phi-")
    sub.add_argument(
        "--extinction-db",
        dest="extinction_db",
        type=float,
        default=None,
        help="override EOIM carrier extinction (dB)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fbbell",
        description="Frequency-bin Bell-state synthesizer simulator and analysis",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize a Bell state, report leakage")
    _add_common(p, "fbbell_synth")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("measure", help="simulate ZZ/XX coincidence tables")
    _add_common(p, "fbbell_measure")
    p.add_argument("--basis", choices=["zz", "xx", "both"], default="both")
    p.add_argument(
        "--counts", type=float, default=None, help="target total ZZ coincidences"
    )
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("tomo", help="Bayesian tomography from count CSVs")
    _add_common(p, "fbbell_tomo")
    p.add_argument("count_files", nargs="+", type=Path, help="count table CSVs")
    p.set_defaults(func=cmd_tomo)

    p = sub.add_parser("sense", help="delay-sensing interferogram scan and fit")
    _add_common(p, "fbbell_sense")
    p.add_argument("--mode", choices=["common", "differential"], default=None)
    p.add_argument(
        "--counts", type=float, default=None, help="expected counts at fringe maximum"
    )
    p.set_defaults(func=cmd_sense)

    p = sub.add_parser("pipeline", help="synth + measure + tomo + sense in one run dir")
    _add_common(p, "fbbell_run")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("print-config", help="print the (resolved) configuration")
    p.add_argument("--config", type=Path, default=None)
    p.set_defaults(func=cmd_print_config)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ContractViolation, OutOfModelError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except DegenerateStateError as exc:
        print(f"degenerate state: {exc}", file=sys.stderr)
        return 3
    except (NumericalError, FbbellError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
