"""Command-line front end: config parsing, dispatch, bit-stable serialization.

Config files are plain ``key = value [unit]`` lines; every dimensional
quantity must carry its unit.  Results go to a CSV table with a fixed header
shared by all commands, plus a JSON manifest recording the fully resolved
configuration (with units), the pinned physical constants and a digest that
changes iff any resolved value changes.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time

from . import __version__
from .constants import CODATA_VERSION, ELECTRON_MASS, HBAR, K_B
from .engine import (QUENCH_FREEZE, QUENCH_PROJECT, CycleConfig, EngineError,
                     default_config, run_cycle)
from .lindblad import COHERENCE_DROP, COHERENCE_EXACT_PHASE
from .state import IntegrityError
from .sweep import SweepRecord, contour_grid, sweep_r, sweep_sigma, worker_count

CSV_HEADER = ("r,sigma,W_over_kTc,eta,P_attowatts,Q_ins_J,Q_hc_J,Q_rem_J,Q_ch_J,"
              "n_steps,leakage,engine_flag")

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_INTEGRITY = 3
EXIT_NO_ENGINE = 4
EXIT_IO = 5


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


_LENGTH_UNITS = {"m": 1.0, "nm": 1e-9}
_MASS_UNITS = {"kg": 1.0}

# key -> (kind, unit table or None)
_KEYS = {
    "T_h": ("temperature", None),
    "T_c": ("temperature", None),
    "a": ("quantity", _LENGTH_UNITS),
    "m": ("mass", _MASS_UNITS),
    "n_max": ("int", None),
    "gamma_divisor": ("float", None),
    "tau_divisor": ("float", None),
    "sigma": ("float", None),
    "r": ("int", None),
    "gap_tolerance": ("float", None),
    "coherence_mode": ("enum", (COHERENCE_EXACT_PHASE, COHERENCE_DROP)),
    "quench_model": ("enum", (QUENCH_FREEZE, QUENCH_PROJECT)),
    "n_steps_cap": ("int", None),
}


def _parse_number(token: str, line: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise ConfigError(f"cannot parse number {token!r}", line) from None


def parse_config(text: str) -> CycleConfig:
    """Parse a key/value document; unset keys fall back to the reference values."""
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
        key, _, rest = line.partition("=")
        key = key.strip()
        rest = rest.strip()
        if key not in _KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        kind, table = _KEYS[key]
        tokens = rest.split()
        if not tokens:
            raise ConfigError(f"missing value for {key!r}", lineno)
        if kind == "temperature":
            if len(tokens) != 2 or tokens[1] != "K":
                raise ConfigError(f"{key} must carry a unit, e.g. '{key} = 0.1 K'", lineno)
            values[key] = _parse_number(tokens[0], lineno)
        elif kind in ("quantity", "mass"):
            if tokens == ["electron"] and kind == "mass":
                values[key] = ELECTRON_MASS
                continue
            if len(tokens) != 2 or tokens[1] not in table:
                units = "|".join(table) + ("|electron" if kind == "mass" else "")
                raise ConfigError(f"{key} must carry a unit ({units})", lineno)
            values[key] = _parse_number(tokens[0], lineno) * table[tokens[1]]
        elif kind == "int":
            if len(tokens) != 1:
                raise ConfigError(f"{key} takes a single integer", lineno)
            num = _parse_number(tokens[0], lineno)
            if num != int(num):
                raise ConfigError(f"{key} must be an integer, got {tokens[0]}", lineno)
            values[key] = int(num)
        elif kind == "float":
            if len(tokens) != 1:
                raise ConfigError(f"{key} takes a single number", lineno)
            values[key] = _parse_number(tokens[0], lineno)
        elif kind == "enum":
            if len(tokens) != 1 or tokens[0] not in table:
                raise ConfigError(f"{key} must be one of {table}", lineno)
            values[key] = tokens[0]
    if "T_h" in values and not values["T_h"] > 0:
        raise ConfigError(f"T_h must be positive, got {values['T_h']}")
    if "T_c" in values and not values["T_c"] > 0:
        raise ConfigError(f"T_c must be positive, got {values['T_c']}")
    T_h = values.get("T_h", 0.1)
    T_c = values.get("T_c", 0.05)
    if T_c >= T_h:
        raise ConfigError(f"need T_c < T_h, got T_c={T_c}, T_h={T_h}")
    try:
        return default_config(**values)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def serialize_config(config: CycleConfig) -> str:
    """Render a config document that reparses to an identical config."""
    lines = [
        f"T_h = {config.T_h!r} K",
        f"T_c = {config.T_c!r} K",
        f"a = {config.model.a!r} m",
        f"m = {config.model.m!r} kg",
        f"n_max = {config.model.n_max}",
        f"gamma_divisor = {config.dissipator.gamma_divisor!r}",
        f"tau_divisor = {config.tau_divisor!r}",
        f"sigma = {config.sigma!r}",
        f"r = {config.r}",
        f"gap_tolerance = {config.gap_tolerance!r}",
        f"coherence_mode = {config.dissipator.coherence_mode}",
        f"quench_model = {config.quench_model}",
        f"n_steps_cap = {config.n_steps_cap}",
    ]
    return "\n".join(lines) + "\n"


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    return format(value, ".17g")


def records_to_csv(records: list[SweepRecord]) -> str:
    rows = [CSV_HEADER]
    for rec in records:
        rows.append(",".join([
            _fmt(rec.r), _fmt(rec.sigma), _fmt(rec.W_over_kTc), _fmt(rec.eta),
            _fmt(rec.P_attowatts), _fmt(rec.Q_ins), _fmt(rec.Q_hc), _fmt(rec.Q_rem),
            _fmt(rec.Q_ch), _fmt(rec.n_steps), _fmt(rec.leakage),
            _fmt(rec.engine_flag)]))
    return "\n".join(rows) + "\n"


def resolved_config_dict(config: CycleConfig) -> dict:
    """Every physical quantity with its unit, after defaulting."""
    return {
        "T_h": {"value": config.T_h, "unit": "K"},
        "T_c": {"value": config.T_c, "unit": "K"},
        "a": {"value": config.model.a, "unit": "m"},
        "m": {"value": config.model.m, "unit": "kg"},
        "n_max": config.model.n_max,
        "gamma_divisor": config.dissipator.gamma_divisor,
        "tau_divisor": config.tau_divisor,
        "delta_tau": {"value": config.dissipator.delta_tau, "unit": "s"},
        "sigma": config.sigma,
        "r": config.r,
        "gap_tolerance": config.gap_tolerance,
        "coherence_mode": config.dissipator.coherence_mode,
        "quench_model": config.quench_model,
        "n_steps_cap": config.n_steps_cap,
        "kB_Tc": {"value": config.model.kB * config.T_c, "unit": "J"},
    }


def config_digest(config: CycleConfig) -> str:
    canon = json.dumps(resolved_config_dict(config), sort_keys=True,
                       separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


GAP_TOLERANCE_NOTE = (
    "The number of quench steps per stroke scales as 1/gap_tolerance, so power "
    "scales roughly linearly with gap_tolerance at fixed r while the work output "
    "saturates; the source figures' absolute power values are reproducible only "
    "up to this unstated cutoff."
)


def build_manifest(config: CycleConfig, command: str, input_text: str | None,
                   started: float, finished: float) -> dict:
    return {
        "artifact": {"name": "qstirling", "version": __version__},
        "command": command,
        "config": resolved_config_dict(config),
        "config_digest": config_digest(config),
        "input_digest": hashlib.sha256((input_text or "").encode()).hexdigest(),
        "constants": {
            "codata": CODATA_VERSION,
            "hbar": {"value": HBAR, "unit": "J s"},
            "kB": {"value": K_B, "unit": "J/K"},
            "electron_mass": {"value": ELECTRON_MASS, "unit": "kg"},
        },
        "workers": worker_count(),
        "started": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(started)),
        "finished": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(finished)),
        "notes": {"gap_tolerance_sensitivity": GAP_TOLERANCE_NOTE},
    }


def _single_cycle_record(config: CycleConfig) -> SweepRecord:
    ledger = run_cycle(config)
    kTc = config.model.kB * config.T_c
    return SweepRecord(
        r=config.r, sigma=config.sigma,
        W_over_kTc=ledger.W_total / kTc, eta=ledger.eta,
        P_attowatts=ledger.P / 1e-18,
        Q_ins=ledger.Q_ins, Q_hc=ledger.Q_hc, Q_rem=ledger.Q_rem, Q_ch=ledger.Q_ch,
        n_steps=ledger.n_steps, leakage=ledger.leakage,
        engine_flag=ledger.engine_flag)


def _parse_int_list(raw: str) -> list[int]:
    return [int(tok) for tok in raw.replace(",", " ").split()]


def _parse_float_list(raw: str) -> list[float]:
    return [float(tok) for tok in raw.replace(",", " ").split()]


def run(command: str, config: CycleConfig, out_path: str,
        r_values: list[int] | None = None, sigma_values: list[float] | None = None,
        allow_long_running: bool = False, input_text: str | None = None) -> int:
    """Execute one command and write the CSV table plus its manifest."""
    started = time.time()
    status = EXIT_OK
    try:
        if command == "cycle":
            records = [_single_cycle_record(config)]
        elif command == "sweep-r":
            if not r_values:
                print("sweep-r requires --r", file=sys.stderr)
                return EXIT_PARSE
            records = sweep_r(config, r_values)
        elif command == "sweep-sigma":
            if not sigma_values:
                print("sweep-sigma requires --sigma", file=sys.stderr)
                return EXIT_PARSE
            r_lo, r_hi = (r_values[0], r_values[-1]) if r_values else (10, 20000)
            records = sweep_sigma(config, sigma_values, r_lo, r_hi,
                                  allow_long_running=allow_long_running)
            if all(rec.error for rec in records):
                status = EXIT_NO_ENGINE
        elif command == "contour":
            if not r_values or not sigma_values:
                print("contour requires --r and --sigma", file=sys.stderr)
                return EXIT_PARSE
            grid = contour_grid(config, r_values, sigma_values)
            records = [rec for row in grid for rec in row]
        else:
            print(f"unknown command {command!r}", file=sys.stderr)
            return EXIT_PARSE
    except IntegrityError as exc:
        print(f"integrity abort: {exc}", file=sys.stderr)
        return EXIT_INTEGRITY
    except EngineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_ENGINE

    csv_text = records_to_csv(records)
    manifest = build_manifest(config, command, input_text, started, time.time())
    try:
        with open(out_path, "w", newline="\n") as fh:
            fh.write(csv_text)
        with open(out_path + ".manifest.json", "w", newline="\n") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    return status


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="qstirling",
        description="Finite-time quantum Stirling engine simulator")
    parser.add_argument("command", choices=["cycle", "sweep-r", "sweep-sigma", "contour"])
    parser.add_argument("--config", help="config file (key = value lines)")
    parser.add_argument("--out", required=True, help="output CSV path")
    parser.add_argument("--r", help="r values (sweep-r/contour) or bracket (sweep-sigma)")
    parser.add_argument("--sigma", help="sigma values (sweep-sigma/contour)")
    parser.add_argument("--allow-long-running", action="store_true",
                        help="permit the sigma < 4 regime (very large r)")
    args = parser.parse_args(argv)

    input_text = None
    if args.config:
        try:
            with open(args.config) as fh:
                input_text = fh.read()
        except OSError as exc:
            print(f"cannot read config: {exc}", file=sys.stderr)
            return EXIT_IO
    try:
        config = parse_config(input_text or "")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_PARSE

    r_values = _parse_int_list(args.r) if args.r else None
    sigma_values = _parse_float_list(args.sigma) if args.sigma else None
    return run(args.command, config, args.out, r_values=r_values,
               sigma_values=sigma_values, allow_long_running=args.allow_long_running,
               input_text=input_text)


if __name__ == "__main__":
    sys.exit(main())
