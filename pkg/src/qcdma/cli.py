"""Command-line front end: ``qcdma simulate|codes|coupler|mc``.

Exit codes: 0 success, 2 invalid configuration, 3 numerical validation
failure (details as JSON on stderr).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .codes import (
    SCHEMA_VERSION,
    Code,
    CodeMismatchError,
    PartitionResolutionError,
    code_inner_product,
    gaussian_quantile_partition,
    partition_equal_energy,
    random_binary_code,
    stream,
    walsh_hadamard_code,
)
from .coupler import CouplerMatrix, NonUnitaryError, make_coupler
from .experiments import (
    ConfigurationError,
    OokScenario,
    energy_check,
    mc_peak_stats,
    mc_receiver_mean,
    run_ook,
    spreading_samples,
)
from .qstate import (
    Fock,
    GenericPure,
    Glauber,
    NetworkSpec,
    NetworkValidationError,
    TransmitterSpec,
    all_receiver_traces,
    peak_reference,
)
from .wavepacket import FrequencyGrid, GridMismatchError, gaussian_spectral

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


class ConfigError(ValueError):
    pass


def fmt(x: float) -> str:
    """Shortest round-trip decimal."""
    return repr(float(x))


def _dump_json(doc: dict, path: Path) -> None:
    path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def _write_csv(path: Path, times: np.ndarray, values: np.ndarray) -> None:
    header = "t," + ",".join(f"I_{r}" for r in range(values.shape[0]))
    lines = [header]
    for j, t in enumerate(times):
        lines.append(",".join([fmt(t)] + [fmt(v) for v in values[:, j]]))
    path.write_text("\n".join(lines) + "\n")


def svg_polylines(times: np.ndarray, values: np.ndarray, width: int = 800, height: int = 300) -> str:
    """One polyline per row of ``values``, scaled to fill the canvas."""
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    t_lo, t_hi = float(times[0]), float(times[-1])
    v_hi = float(np.max(values)) or 1.0
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    # stride keeps files small; plots are for viewing only
    stride = max(1, times.size // 2000)
    for r, row in enumerate(values):
        xs = (times[::stride] - t_lo) / (t_hi - t_lo or 1.0) * width
        ys = height - row[::stride] / v_hi * (height - 10)
        pts = " ".join(f"{x:.6f},{y:.6f}" for x, y in zip(xs, ys))
        parts.append(
            f'<polyline fill="none" stroke="{colors[r % len(colors)]}" '
            f'stroke-width="1" points="{pts}"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# --------------------------------------------------------------------------
# config parsing


def _grid(doc: dict) -> FrequencyGrid:
    try:
        return FrequencyGrid(**doc.get("grid", {}))
    except TypeError as exc:
        raise ConfigError(f"bad grid section: {exc}") from None


def _complex(x) -> complex:
    if isinstance(x, (list, tuple)):
        if len(x) != 2:
            raise ConfigError(f"complex numbers are [re, im] pairs, got {x!r}")
        return complex(float(x[0]), float(x[1]))
    return complex(float(x))


def _code(spec: dict, n_chips: int, seed: int, user: int) -> Code:
    kind = spec.get("kind", "random")
    if kind == "walsh":
        return walsh_hadamard_code(n_chips, int(spec["index"]))
    if kind == "random":
        rng = stream(int(spec["seed"])) if "seed" in spec else stream(seed, user)
        return random_binary_code(n_chips, rng, f"user{user}")
    if kind == "phases":
        code = Code.from_dict({"phases_over_pi": spec["phases_over_pi"]})
        if code.n_chips != n_chips:
            raise ConfigError(f"user {user} code has {code.n_chips} chips, expected {n_chips}")
        return code
    raise ConfigError(f"unknown code kind {kind!r}")


def _coupler(spec, m: int) -> CouplerMatrix:
    if isinstance(spec, str):
        spec = {"kind": spec}
    if "entries" in spec:
        return CouplerMatrix.from_dict(spec)
    return make_coupler(spec.get("kind", "balanced2x2"), int(spec.get("m", m)))


def _state(spec: dict):
    kind = spec.get("state", "glauber")
    if kind == "glauber":
        return Glauber(_complex(spec.get("alpha", 1.0)))
    if kind == "fock":
        return Fock(int(spec.get("n", 1)))
    if kind == "generic":
        fm = spec.get("field_mean")
        if fm is not None:
            fm = np.array([_complex(z) for z in fm])
        return GenericPure(float(spec["mean_intensity"]), fm)
    raise ConfigError(f"unknown state {kind!r}")


def build_network(doc: dict, seed: int) -> tuple[NetworkSpec, int]:
    grid = _grid(doc)
    n_chips = int(doc.get("n_chips", 8))
    tx_docs = doc.get("transmitters")
    if not tx_docs:
        raise ConfigError("network config needs a non-empty 'transmitters' list")
    m = len(tx_docs)
    base = gaussian_spectral(grid)
    if doc.get("partition", "gaussian_quantile") == "equal_energy":
        partition = partition_equal_energy(base, n_chips)
    else:
        partition = gaussian_quantile_partition(grid, n_chips)
    txs = []
    for s, t in enumerate(tx_docs):
        wp = gaussian_spectral(grid, float(t.get("t0", 0.0)))
        code = _code(t.get("code", {}), n_chips, seed, s)
        txs.append(TransmitterSpec(_state(t), wp, code, float(t.get("t_offset", 0.0))))
    decode = doc.get("decode", list(range(m)))
    net = NetworkSpec(_coupler(doc.get("coupler", "balanced2x2"), m), tuple(txs), tuple(decode), partition)
    return net, int(doc.get("oversample", 1))


def build_ook(doc: dict, seed: int) -> OokScenario:
    codes = doc.get("codes", {"kind": "random"})
    return OokScenario(
        bits=tuple(tuple(b) for b in doc["bits"]),
        n_chips=int(doc.get("n_chips", 63)),
        bit_period=doc.get("bit_period"),
        code_kind=codes.get("kind", "random"),
        code_seed=int(codes.get("seed", seed)),
        walsh_indices=tuple(codes["indices"]) if "indices" in codes else None,
        state_kind=doc.get("state", "fock"),
        coupler_kind=doc.get("coupler", "balanced2x2"),
        async_offsets=bool(doc.get("async", False)),
        seed=seed,
        allow_overlap=bool(doc.get("allow_overlap", False)),
        oversample=int(doc.get("oversample", 4)),
        grid=_grid(doc),
    )


def load_config(path: str) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version!r}")
    return doc


# --------------------------------------------------------------------------
# commands


def _simulate_network(doc: dict, seed: int) -> tuple[np.ndarray, np.ndarray, dict]:
    net, oversample = build_network(doc, seed)
    traces = all_receiver_traces(net, oversample=oversample)
    ref = peak_reference(gaussian_spectral(net.partition.grid))
    summary = {
        "kind": "network",
        "n_chips": net.partition.n_chips,
        "coupler": net.coupler.to_dict(),
        "codes": [tx.code.to_dict() for tx in net.transmitters],
        "decode": list(net.decode_assignment),
        "receiver_energy": [float(e) for e in traces.energy()],
        "receiver_peak_normalized": [float(v) for v in traces.values.max(axis=1) / ref],
        "energy_residual": energy_check(net),
    }
    return traces.times, traces.values, summary


def _simulate_ook(doc: dict, seed: int) -> tuple[np.ndarray, np.ndarray, dict]:
    s = build_ook(doc, seed)
    res = run_ook(s)
    summary = {
        "kind": "ook",
        "n_chips": s.n_chips,
        "bits": [list(b) for b in s.bits],
        "state": s.state_kind,
        "bit_period": res.period,
        "offsets": [float(o) for o in res.offsets],
        "codes": [c.to_dict() for c in res.codes],
        "slot_peak_normalized": res.slot_peaks.tolist(),
        "slot_energy": res.slot_energies.tolist(),
        "launched_energy": res.launched_energy,
        "captured_energy": res.captured_energy,
    }
    return res.trace.times, res.trace.values, summary


def cmd_simulate(args) -> int:
    doc = load_config(args.config)
    seed = int(args.seed if args.seed is not None else doc.get("seed", 0))
    kind = doc.get("kind", "network")
    if kind == "network":
        times, values, summary = _simulate_network(doc, seed)
    elif kind == "ook":
        times, values, summary = _simulate_ook(doc, seed)
    else:
        raise ConfigError(f"unknown config kind {kind!r}")
    summary["schema_version"] = SCHEMA_VERSION
    summary["seed"] = seed
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    formats = set(args.format or ["csv", "json"])
    if "csv" in formats:
        _write_csv(out / "traces.csv", times, values)
    if "json" in formats:
        _dump_json(summary, out / "summary.json")
    if "svg" in formats:
        (out / "plot.svg").write_text(svg_polylines(times, values))
    return EXIT_OK


def cmd_codes(args) -> int:
    n = args.nc
    if args.kind == "walsh":
        codes = [walsh_hadamard_code(n, i) for i in range(n)]
        chosen = codes[args.index] if args.index is not None else None
        table = [[int(code_inner_product(a, b).real) for b in codes] for a in codes]
        for row in table:
            print(" ".join(f"{v:3d}" for v in row))
        doc = {"codes": [c.to_dict() for c in codes], "inner_products": table}
        if chosen is not None:
            doc["selected"] = chosen.to_dict()
    else:
        seed = args.seed if args.seed is not None else 0
        doc = {"code": random_binary_code(n, seed).to_dict()}
    doc["schema_version"] = SCHEMA_VERSION
    _emit(doc, args.out, "codes.json")
    return EXIT_OK


def cmd_coupler(args) -> int:
    doc = make_coupler(args.kind, args.m).to_dict()
    _emit(doc, args.out, "coupler.json")
    return EXIT_OK


def _gate(mean: float, se: float, target: float, k: float = 3.0) -> bool:
    return bool(abs(mean - target) <= k * se)


def cmd_mc(args) -> int:
    seed = args.seed if args.seed is not None else 0
    trials = args.trials
    if args.stat == "peak":
        st = mc_peak_stats(args.nc, trials, seed)
        doc = st.to_dict()
        doc["checks"] = {
            "ratio_vs_nominal": _gate(st.ratio_mean, st.ratio_se, st.ratio_nominal),
            "ratio_vs_exact": _gate(st.ratio_mean, st.ratio_se, st.ratio_exact),
            "x_mean_zero": _gate(st.x_mean_re, st.x_se_re, 0.0),
        }
    elif args.stat == "receiver":
        st = mc_receiver_mean(args.nc, trials, seed, args.state)
        doc = st.to_dict()
        doc["checks"] = {
            "i1_vs_nominal": _gate(st.i1_mean, st.i1_se, st.nominal),
            "i2_vs_nominal": _gate(st.i2_mean, st.i2_se, st.nominal),
        }
    else:
        x = spreading_samples(args.nc, range(seed, seed + trials))
        inside = (x >= 0.3 * args.nc) & (x <= 3.0 * args.nc)
        doc = {
            "n_chips": args.nc,
            "trials": trials,
            "seed": seed,
            "mean": float(x.mean()),
            "se": float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else float("nan"),
            "fraction_within_band": float(inside.mean()),
            "checks": {"band_fraction_ge_0.95": bool(inside.mean() >= 0.95)},
        }
    doc["stat"] = args.stat
    doc["schema_version"] = SCHEMA_VERSION
    _emit(doc, args.out, "summary.json")
    return EXIT_OK


def _emit(doc: dict, out: str | None, default_name: str) -> None:
    if out is None:
        print(json.dumps(doc, sort_keys=True, indent=2))
        return
    path = Path(out)
    if path.suffix != ".json":
        path.mkdir(parents=True, exist_ok=True)
        path = path / default_name
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
    _dump_json(doc, path)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qcdma", description="Spectrally encoded quantum CDMA simulator")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a network or OOK scenario from a JSON config")
    sim.add_argument("--config", required=True)
    sim.add_argument("--out", required=True)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--format", action="append", choices=["csv", "json", "svg"],
                     help="outputs to write (repeatable; default csv and json)")
    sim.set_defaults(func=cmd_simulate)

    codes = sub.add_parser("codes", help="emit spreading codes")
    codes.add_argument("--nc", type=int, required=True)
    codes.add_argument("--kind", choices=["walsh", "random"], default="walsh")
    codes.add_argument("--index", type=int)
    codes.add_argument("--seed", type=int)
    codes.add_argument("--out")
    codes.set_defaults(func=cmd_codes)

    coup = sub.add_parser("coupler", help="emit a star-coupler matrix")
    coup.add_argument("--m", type=int, default=2)
    coup.add_argument("--kind", choices=["balanced2x2", "dft", "hadamard"], default="balanced2x2")
    coup.add_argument("--out")
    coup.set_defaults(func=cmd_coupler)

    mc = sub.add_parser("mc", help="Monte-Carlo statistics")
    mc.add_argument("stat", choices=["peak", "receiver", "spreading"])
    mc.add_argument("--nc", type=int, default=63)
    mc.add_argument("--trials", type=int, default=2000)
    mc.add_argument("--seed", type=int)
    mc.add_argument("--state", choices=["glauber", "fock"], default="glauber")
    mc.add_argument("--out")
    mc.set_defaults(func=cmd_mc)
    return p


def _fail(code: int, error: str, message: str, **extra) -> int:
    doc = {"error": error, "message": message, **extra}
    print(json.dumps(doc, sort_keys=True), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NonUnitaryError as exc:
        return _fail(EXIT_NUMERIC, "non_unitary_coupler", str(exc), residual=exc.residual)
    except (ConfigError, ConfigurationError, NetworkValidationError, GridMismatchError,
            CodeMismatchError, PartitionResolutionError, KeyError, TypeError, ValueError) as exc:
        msg = f"missing key {exc}" if isinstance(exc, KeyError) else str(exc)
        return _fail(EXIT_CONFIG, "invalid_config", msg)


if __name__ == "__main__":
    sys.exit(main())
