"""Command line front end: JSON-configured experiments with CSV results.

Every subcommand reads a JSON config file, writes a CSV result file plus a
JSON sidecar (``<out>.meta.json``) echoing the config, library version and
seed, and is bit-reproducible for a fixed seed regardless of ``--threads``.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .channel import ChannelModel, NoiseSpec, propagate
from .effective import effective_numeric, heff_closed_form
from .errors import ConfigurationError
from .grid import FrameConfig, PrefixKind
from .metrics import spectral_efficiency_factor, tx_power
from .rfcp import PilotSpec, build_rfcp, pilot_frame, rfcp_pilot_readout
from .sim import SweepSpec, run_equivalence, run_sweep


class ConfigError(Exception):
    """Raised for malformed experiment config files; carries a field path."""


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.12e}"
    return str(x)


def _write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_sidecar(out_path, command, doc, seed):
    meta = {
        "command": command,
        "version": __version__,
        "seed": seed,
        "config": doc,
    }
    with open(str(out_path) + ".meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)


def _field(doc, name, kinds, where, default=_fmt):
    """Fetch and type-check one config field; ``default=_fmt`` marks it
    required (any sentinel other than a plausible value works)."""
    if name not in doc:
        if default is _fmt:
            raise ConfigError(f"{where}: missing required field '{name}'")
        return default
    val = doc[name]
    if kinds is not None and not isinstance(val, kinds):
        raise ConfigError(
            f"{where}.{name}: expected {kinds}, got {type(val).__name__}"
        )
    return val


def _parse_frame(doc, where="frame") -> FrameConfig:
    if not isinstance(doc, dict):
        raise ConfigError(f"{where}: expected an object")
    kind_name = _field(doc, "kind", str, where)
    try:
        kind = PrefixKind(kind_name)
    except ValueError:
        names = ", ".join(k.value for k in PrefixKind)
        raise ConfigError(f"{where}.kind: '{kind_name}' is not one of {names}")
    try:
        return FrameConfig(
            kind=kind,
            M=_field(doc, "M", int, where),
            N=_field(doc, "N", int, where),
            L_cp=_field(doc, "L_cp", int, where, 0),
            L_zs=_field(doc, "L_zs", int, where, 0),
        )
    except ConfigurationError as exc:
        raise ConfigError(f"{where}: {exc}")


def _parse_frames(doc, where="configs"):
    lst = _field(doc, "configs", list, "config")
    if not lst:
        raise ConfigError(f"{where}: must contain at least one frame")
    return tuple(_parse_frame(f, f"{where}[{i}]") for i, f in enumerate(lst))


def _parse_channel(doc, where="channel") -> ChannelModel:
    if not isinstance(doc, dict):
        raise ConfigError(f"{where}: expected an object")
    try:
        return ChannelModel.from_json(json.dumps(doc))
    except (KeyError, ValueError, TypeError, ConfigurationError) as exc:
        raise ConfigError(f"{where}: {exc}")


def _number_list(doc, name, where="config"):
    lst = _field(doc, name, list, where)
    for i, v in enumerate(lst):
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise ConfigError(f"{where}.{name}[{i}]: expected a number")
    return tuple(float(v) for v in lst)


_BER_HEADER = ("config", "M", "N", "Lcp", "Lzs", "detector", "snr_db",
               "ber", "ber_stderr", "trials", "seed")


def _cmd_ber_sweep(doc, out, seed, threads):
    pool = doc.get("doppler_cycles_pool")
    if pool is not None:
        pool = tuple(_number_list(doc, "doppler_cycles_pool"))
    try:
        spec = SweepSpec(
            configs=_parse_frames(doc),
            snrs_db=_number_list(doc, "snrs_db"),
            detectors=tuple(_field(doc, "detectors", list, "config",
                                   ["zf", "mmse", "mp"])),
            n_frames=_field(doc, "n_frames", int, "config", 1000),
            frames_per_channel=_field(doc, "frames_per_channel", int,
                                      "config", 10),
            n_taps=_field(doc, "n_taps", int, "config", 4),
            k_max=_field(doc, "k_max", int, "config", 4),
            max_delay=_field(doc, "max_delay", int, "config", None),
            qam_order=_field(doc, "qam_order", int, "config", 4),
            doppler_cycles_pool=pool,
            detector_csi=_field(doc, "detector_csi", str, "config", "exact"),
        )
    except ConfigurationError as exc:
        raise ConfigError(f"config: {exc}")
    points = run_sweep(spec, seed=seed, threads=threads)
    rows = [
        (p.config, p.M, p.N, p.Lcp, p.Lzs, p.detector, p.snr_db,
         p.ber, p.ber_stderr, p.trials, p.seed)
        for p in points
    ]
    _write_csv(out, _BER_HEADER, rows)


def _cmd_capacity_table(doc, out, seed, threads):
    frames = _parse_frames(doc)
    gammas = _number_list(doc, "gamma_db")
    rows = []
    for cfg in frames:
        for gdb in gammas:
            gamma = 10.0 ** (gdb / 10.0)
            factor = spectral_efficiency_factor(cfg)
            rows.append((cfg.kind.value, cfg.M, cfg.N, cfg.L_cp, cfg.L_zs,
                         gdb, factor, factor * float(np.log2(1.0 + gamma))))
    _write_csv(out, ("config", "M", "N", "Lcp", "Lzs", "gamma_db",
                     "spectral_factor", "capacity"), rows)


def _cmd_power_table(doc, out, seed, threads):
    frames = _parse_frames(doc)
    ps = float(_field(doc, "symbol_power", (int, float), "config", 1.0))
    rows = [
        (cfg.kind.value, cfg.M, cfg.N, cfg.L_cp, cfg.L_zs, ps,
         tx_power(cfg, ps))
        for cfg in frames
    ]
    _write_csv(out, ("config", "M", "N", "Lcp", "Lzs", "symbol_power",
                     "tx_power"), rows)


def _cmd_cir_dump(doc, out, seed, threads):
    cfg = _parse_frame(_field(doc, "frame", dict, "config"))
    if cfg.kind is not PrefixKind.RFCP:
        raise ConfigError("config.frame.kind: cir_dump needs an RFCP frame")
    model = _parse_channel(_field(doc, "channel", dict, "config"))
    pdoc = _field(doc, "pilot", dict, "config")
    pos = _field(pdoc, "position", list, "config.pilot")
    if len(pos) != 2 or not all(isinstance(v, int) for v in pos):
        raise ConfigError("config.pilot.position: expected [delay, doppler]")
    try:
        pilot = PilotSpec(
            position=(pos[0], pos[1]),
            amplitude=float(_field(pdoc, "amplitude", (int, float),
                                   "config.pilot", 1.0)),
            guard_delay=_field(pdoc, "guard_delay", int, "config.pilot", 0),
            guard_doppler=_field(pdoc, "guard_doppler", int,
                                 "config.pilot", 0),
        )
        snr_db = _field(doc, "snr_db", (int, float), "config", None)
        noise = NoiseSpec(snr_db=float(snr_db)) if snr_db is not None else None
        s = build_rfcp(pilot_frame(pilot, cfg.M, cfg.N), cfg)
        r = propagate(s, model, cfg, noise=noise, seed=seed)
        est = rfcp_pilot_readout(r, cfg, pilot)
    except ConfigurationError as exc:
        raise ConfigError(f"config: {exc}")
    rows = [
        (float(np.real(t.gain)), float(np.imag(t.gain)), t.delay, t.doppler)
        for t in est.taps
    ]
    _write_csv(out, ("gain_re", "gain_im", "delay", "doppler"), rows)
    with open(str(out) + ".cir.json", "w") as fh:
        fh.write(est.to_json())


def _cmd_matrix_dump(doc, out, seed, threads):
    cfg = _parse_frame(_field(doc, "frame", dict, "config"))
    model = _parse_channel(_field(doc, "channel", dict, "config"))
    try:
        if model.has_integer_doppler:
            heff = heff_closed_form(model, cfg)
        else:
            heff = effective_numeric(model, cfg)
    except ConfigurationError as exc:
        raise ConfigError(f"config: {exc}")
    heff.save_csv(out)


def _cmd_equivalence_check(doc, out, seed, threads):
    cfg = _parse_frame(_field(doc, "frame", dict, "config"))
    n_models = _field(doc, "n_models", int, "config", 50)
    n_taps = _field(doc, "n_taps", int, "config", 4)
    k_max = _field(doc, "k_max", int, "config", 8)
    try:
        resid = run_equivalence(cfg, n_models, seed=seed,
                                n_taps=n_taps, k_max=k_max)
    except ConfigurationError as exc:
        raise ConfigError(f"config: {exc}")
    _write_csv(out, ("config", "M", "N", "Lcp", "Lzs", "n_models",
                     "max_residual", "seed"),
               [(cfg.kind.value, cfg.M, cfg.N, cfg.L_cp, cfg.L_zs,
                 n_models, resid, seed)])


_COMMANDS = {
    "ber_sweep": _cmd_ber_sweep,
    "capacity_table": _cmd_capacity_table,
    "power_table": _cmd_power_table,
    "cir_dump": _cmd_cir_dump,
    "matrix_dump": _cmd_matrix_dump,
    "equivalence_check": _cmd_equivalence_check,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="otfs-sim",
        description="OTFS prefix/suffix simulation experiments",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True,
                       help="JSON experiment description")
        p.add_argument("--out", required=True, help="CSV output path")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=1,
                       help="worker processes; results do not depend on it")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with open(args.config) as fh:
            doc = json.load(fh)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"error: config is not valid JSON: {exc}", file=sys.stderr)
        return 2
    if not isinstance(doc, dict):
        print("error: config: top level must be a JSON object",
              file=sys.stderr)
        return 2
    if args.threads < 1:
        print("error: --threads must be positive", file=sys.stderr)
        return 2
    try:
        _COMMANDS[args.command](doc, args.out, args.seed, args.threads)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _write_sidecar(args.out, args.command, doc, args.seed)
    return 0


if __name__ == "__main__":
    sys.exit(main())
