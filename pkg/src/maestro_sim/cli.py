"""Command-line front end.

Every subcommand takes its parameters from built-in defaults, then an
optional JSON ``--config`` file, then explicit flags. The resolved config
is written into each primary artifact under ``"config"``; feeding that
object back through ``--config`` reproduces the run. Wall-clock metadata
goes only to ``meta.json``.

Exit codes: 0 success, 2 config error, 3 numerical-threshold failure,
4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import io as mio
from .calibration import fft_thresholds, load_calibration, run_calibration, wus_thresholds

EXIT_OK, EXIT_CONFIG, EXIT_THRESHOLD, EXIT_IO = 0, 2, 3, 4
THREADS_ENV = "MAESTRO_SIM_THREADS"
ARTIFACT_VERSION = 1


class ConfigError(Exception):
    pass


class ThresholdFailure(Exception):
    pass


# schema: key -> (type, default, help); type is int, float, str, bool, list or dict
SCHEMAS = {
    "fft": {
        "points": (int, 1024, "FFT size (power of two)"),
        "width": (str, "c32", "complex width: c32 or c64"),
        "input": (str, "impulse", "impulse, ones, random, or a .bin/.csv sample file"),
        "seed": (int, 0, "seed for random input"),
        "direction": (str, "forward", "forward or inverse"),
        "fused": (bool, True, "use the fused dual-output dot product"),
        "compare_oracle": (bool, False, "diff against an FP64 FFT of the same input"),
    },
    "gemm": {
        "m": (int, 96, "rows of X and Z"),
        "n": (int, 64, "columns of W and Z"),
        "k": (int, 0, "inner dimension (0 means k = n)"),
        "fmt": (str, "fp16", "input format"),
        "acc_fmt": (str, "", "accumulator format (empty means fp16)"),
        "engine": (str, "vtu", "vtu or vau"),
        "seed": (int, 0, "seed for random operands"),
        "check": (bool, True, "compare bit-exactly against the sequential FMA reference"),
    },
    "wus": {
        "frames": (int, 1, "number of frames"),
        "seed": (int, 0, "seed of the first frame"),
        "scenario": (dict, {}, "scenario overrides (JSON object or file)"),
        "preproc": (dict, {}, "preprocessing overrides (JSON object or file)"),
        "model": (str, "", "weights file; empty means a random model"),
        "model_seed": (int, 0, "seed of the random model"),
        "channels": (list, [32, 64, 128], "conv block widths of the random model"),
        "n_classes": (int, 10, "classes of the random model"),
        "oracle": (bool, False, "per-stage error table against the FP64 pipeline"),
        "op_point": (str, "210mhz", "operating point preset"),
        "power_mw": (float, 12.0, "average power for the lifetime and energy summary"),
        "efficiency": (float, 0.95, "battery efficiency derating"),
    },
    "buffers": {
        "json": (bool, False, "print JSON instead of the table"),
    },
    "lifetime": {
        "capacity_mah": (float, 320.0, "battery capacity"),
        "voltage": (float, 3.7, "battery voltage"),
        "power_mw": (list, [12.0, 14.0], "average power values"),
        "efficiency": (float, 0.95, "efficiency derating"),
    },
    "sweep": {
        "fmt": (str, "fp16", "fp16 or fp32"),
        "count": (int, 10000, "random five-tuples"),
        "seed": (int, 0, "RNG seed"),
    },
    "calibrate": {
        "fft_trials": (int, 1000, "random vectors per FFT case"),
        "wus_frames": (int, 16, "frames for the pipeline stage errors"),
        "install": (bool, False, "overwrite the packaged calibration file"),
    },
}


def _coerce(key: str, typ, value):
    if typ is bool:
        if isinstance(value, bool):
            return value
        raise ConfigError(f"{key}: expected true/false, got {value!r}")
    if typ is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return value
    if typ is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected a number, got {value!r}")
        return float(value)
    if typ is str:
        if not isinstance(value, str):
            raise ConfigError(f"{key}: expected a string, got {value!r}")
        return value
    if typ is list:
        if not isinstance(value, list):
            value = [value]
        return list(value)
    if typ is dict:
        if isinstance(value, str):
            value = _read_json(value, key)
        if not isinstance(value, dict):
            raise ConfigError(f"{key}: expected an object, got {value!r}")
        return value
    raise AssertionError(typ)


def _read_json(path: str, what: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise OSError(f"cannot read {what} file {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{what} file {path}: invalid JSON ({exc})") from None


def resolve_config(command: str, file_cfg: dict | None, overrides: dict) -> dict:
    """Merge defaults, config file and explicit flags; reject unknown keys."""
    schema = SCHEMAS[command]
    cfg = {k: (list(d) if isinstance(d, list) else dict(d) if isinstance(d, dict) else d)
           for k, (_, d, _) in schema.items()}
    for source in (file_cfg or {}, overrides):
        unknown = sorted(set(source) - set(schema))
        if unknown:
            raise ConfigError(f"unknown {command} config keys: {', '.join(unknown)}")
        for k, v in source.items():
            cfg[k] = _coerce(k, schema[k][0], v)
    return cfg


def thread_cap() -> int:
    raw = os.environ.get(THREADS_ENV, "")
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


class Artifacts:
    """Writes primary artifacts into ``out`` (or stdout when ``out`` is None)."""

    def __init__(self, out: str | None, command: str, config: dict):
        self.out = Path(out) if out else None
        self.command = command
        self.config = config
        self.written: list[str] = []
        if self.out:
            self.out.mkdir(parents=True, exist_ok=True)

    def envelope(self, payload: dict) -> dict:
        return {"command": self.command, "artifact_version": ARTIFACT_VERSION,
                "config": self.config, **payload}

    def json(self, name: str, payload: dict, echo: bool = True) -> None:
        text = json.dumps(self.envelope(payload), indent=2, sort_keys=True) + "\n"
        self.text(name, text, echo)

    def text(self, name: str, text: str, echo: bool = False) -> None:
        if self.out:
            (self.out / name).write_text(text)
            self.written.append(name)
        elif echo:
            sys.stdout.write(text)

    def binary(self, name: str, data: bytes) -> None:
        if self.out:
            (self.out / name).write_bytes(data)
            self.written.append(name)

    def finish(self, argv) -> None:
        if not self.out:
            return
        from . import __version__
        meta = {"command": self.command, "argv": list(argv), "version": __version__,
                "timestamp_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
                "artifacts": sorted(self.written)}
        (self.out / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def _float_list(values) -> list:
    return [float(v) for v in np.asarray(values).reshape(-1)]


# subcommands

def cmd_fft(cfg: dict, art: Artifacts) -> int:
    from .fft import MAX_POINTS, FftJob, fft, quantize_complex
    from .fft.engine import FORWARD, INVERSE
    from .fft.twiddle import normalize_width

    try:
        width = normalize_width(cfg["width"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    n = cfg["points"]
    if cfg["direction"] not in (FORWARD, INVERSE):
        raise ConfigError("direction must be forward or inverse")
    src = cfg["input"]
    if src == "impulse":
        x = np.zeros(n, dtype=np.complex128)
        x[0] = 1.0
    elif src == "ones":
        x = np.ones(n, dtype=np.complex128)
    elif src == "random":
        rng = np.random.default_rng(cfg["seed"])
        x = rng.uniform(-1, 1, n) + 1j * rng.uniform(-1, 1, n)
    else:
        path = Path(src)
        if path.suffix.lower() == ".csv":
            x = mio.samples_from_csv(path.read_text())
        elif path.suffix.lower() == ".bin":
            x = mio.samples_from_bytes(path.read_bytes(), width)
        else:
            raise ConfigError(f"input must be impulse, ones, random, or a .bin/.csv file: {src!r}")
    x = quantize_complex(x, width)
    job = FftJob(n, width, x, cfg["direction"])
    res = fft(job, fused=cfg["fused"])
    payload = {"trace": res.trace.to_dict(), "points": n, "width": width}
    status = EXIT_OK
    if cfg["compare_oracle"]:
        ref = np.fft.fft(x) if job.direction == FORWARD else np.fft.ifft(x)
        err = float(np.linalg.norm(res.output - ref) / np.linalg.norm(ref))
        # smaller sizes are held to the calibrated full-size limit
        fwd_t, rt_t = fft_thresholds(width, MAX_POINTS[width], load_calibration())
        limit = fwd_t if job.direction == FORWARD else rt_t
        payload["oracle"] = {"rel_l2": err, "threshold": limit, "pass": err <= limit}
        rows = ["bin,re,im,ref_re,ref_im,abs_err"]
        for i, (a, b) in enumerate(zip(res.output, ref)):
            rows.append(f"{i},{a.real!r},{a.imag!r},{b.real!r},{b.imag!r},{abs(a - b)!r}")
        art.text("oracle_diff.csv", "\n".join(rows) + "\n")
        if err > limit:
            status = EXIT_THRESHOLD
    art.binary("spectrum.bin", mio.samples_to_bytes(res.output, width))
    art.text("spectrum.csv", mio.samples_to_csv(res.output))
    art.json("fft.json", payload)
    return status


def cmd_gemm(cfg: dict, art: Artifacts) -> int:
    from .mpfloat import quantize
    from .vtu.gemm import GemmShape, reference_gemm, vau_gemm, vtu_gemm

    k = cfg["k"] or cfg["n"]
    if cfg["engine"] not in ("vtu", "vau"):
        raise ConfigError("engine must be vtu or vau")
    shape = GemmShape(cfg["m"], cfg["n"], k, cfg["fmt"], cfg["acc_fmt"] or "fp16")
    rng = np.random.default_rng(cfg["seed"])
    x = quantize(rng.uniform(-1, 1, (shape.m, k)), shape.in_format)
    w = quantize(rng.uniform(-1, 1, (k, shape.n)), shape.in_format)
    y = quantize(rng.uniform(-1, 1, (shape.m, shape.n)), shape.acc_format)
    run = vtu_gemm if cfg["engine"] == "vtu" else vau_gemm
    z, trace = run(x, w, y, shape)
    payload = {"trace": trace.to_dict(), "utilization": trace.utilization}
    status = EXIT_OK
    if cfg["check"]:
        ref = reference_gemm(x, w, y, shape)
        exact = bool(np.array_equal(ref, z, equal_nan=True))
        f64 = x @ w + y
        payload["check"] = {"bit_exact_vs_sequential_fma": exact,
                            "max_abs_err_vs_fp64": float(np.max(np.abs(z - f64)))}
        if not exact:
            status = EXIT_THRESHOLD
    art.binary("z.bin", mio.matrix_to_bytes(z, shape.acc_format))
    art.text("z.csv", mio.matrix_to_csv(z))
    art.json("gemm.json", payload)
    return status


def _load_model(cfg: dict):
    from .wus import random_model
    from .wus.cnn import CnnModel

    if cfg["model"]:
        data = Path(cfg["model"]).read_bytes()
        try:
            return CnnModel.from_tensors(mio.weights_from_bytes(data))
        except mio.FormatError:
            raise
        except ValueError as exc:
            raise mio.FormatError(f"model file {cfg['model']}: {exc}") from None
    if not cfg["channels"] or any(not isinstance(c, int) or c < 1 for c in cfg["channels"]):
        raise ConfigError("channels must be a list of positive integers")
    if cfg["n_classes"] < 1:
        raise ConfigError("n_classes must be positive")
    return random_model(cfg["model_seed"], tuple(cfg["channels"]), cfg["n_classes"])


def cmd_wus(cfg: dict, art: Artifacts) -> int:
    from .perf import BatteryModel, OperatingPoint, battery_lifetime, energy_interpretations, report
    from .wus import PreprocConfig, Scenario, oracle_errors, run_seed
    from .wus.frames import FRAME_RATE_HZ

    if cfg["frames"] < 1:
        raise ConfigError("frames must be at least 1")
    try:
        scenario = Scenario.from_dict(cfg["scenario"])
        known = {f.name for f in fields(PreprocConfig)}
        bad = sorted(set(cfg["preproc"]) - known)
        if bad:
            raise ValueError(f"unknown preproc keys: {', '.join(bad)}")
        pre = PreprocConfig(**cfg["preproc"])
        op = OperatingPoint.preset(cfg["op_point"])
        battery = BatteryModel(avg_power_mw=cfg["power_mw"], efficiency=cfg["efficiency"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    model = _load_model(cfg)
    seeds = [cfg["seed"] + i for i in range(cfg["frames"])]
    with ThreadPoolExecutor(max_workers=min(thread_cap(), len(seeds))) as pool:
        runs = list(pool.map(lambda s: run_seed(s, model, scenario, pre), seeds))

    stream = []
    for s, r in zip(seeds, runs):
        d = r.result.to_dict()
        d.update(seed=s, digest=r.digest())
        stream.append(json.dumps(d, sort_keys=True))
    art.text("results.jsonl", "\n".join(stream) + "\n")

    stages = [st for r in runs for st in r.stages]
    rep = report([], op, stages=stages)
    art.text("perf.json", rep.to_json())
    art.text("perf.txt", rep.to_text())

    per_frame_cycles = sum(r.cycles for r in runs) / len(runs)
    latency_s = per_frame_cycles / op.frequency_hz
    payload = {
        "frames": len(runs),
        "labels": [r.result.label for r in runs],
        "digests": [r.digest() for r in runs],
        "total_cycles": sum(r.cycles for r in runs),
        "total_flops": sum(r.flops for r in runs),
        "stage_cycles": rep.stages,
        "latency_s_per_frame": latency_s,
        "battery": {"lifetime_h": battery_lifetime(battery), "power_mw": battery.avg_power_mw,
                    "efficiency": battery.efficiency},
        "energy_mj": energy_interpretations(battery.avg_power_mw, FRAME_RATE_HZ, latency_s),
    }
    status = EXIT_OK
    if cfg["oracle"]:
        limits = wus_thresholds()
        table = ["frame,stage,rel_l2,threshold,pass"]
        worst: dict = {}
        for s, r in zip(seeds, runs):
            errs = oracle_errors(r, model, pre)
            errs.pop("argmax_match")
            for stage, e in errs.items():
                ok = e <= limits[stage]
                worst[stage] = max(worst.get(stage, 0.0), e)
                table.append(f"{s},{stage},{e!r},{limits[stage]!r},{int(ok)}")
                if not ok:
                    status = EXIT_THRESHOLD
        art.text("oracle_errors.csv", "\n".join(table) + "\n")
        payload["oracle"] = {"max_rel_l2": worst, "thresholds": limits,
                             "pass": status == EXIT_OK}
    art.json("wus.json", payload)
    return status


def cmd_buffers(cfg: dict, art: Artifacts) -> int:
    from .vtu.buffers import buffer_accounting, format_table

    rep = buffer_accounting()
    if cfg["json"] and not art.out:
        sys.stdout.write(json.dumps(rep, indent=2, sort_keys=True, ensure_ascii=False) + "\n")
    else:
        table = format_table(rep) + "\n"
        if art.out:
            art.text("buffers.txt", table)
            art.json("buffers.json", {"buffers": rep}, echo=False)
        else:
            sys.stdout.write(table)
    return EXIT_OK


def cmd_lifetime(cfg: dict, art: Artifacts) -> int:
    from .perf import BatteryModel, battery_lifetime

    rows = []
    try:
        for p in cfg["power_mw"]:
            m = BatteryModel(cfg["capacity_mah"], cfg["voltage"], float(p), cfg["efficiency"])
            rows.append({"power_mw": float(p), "lifetime_h": battery_lifetime(m)})
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    text = "".join(f"{r['power_mw']:g} mW -> {r['lifetime_h']:.1f} h\n" for r in rows)
    art.text("lifetime.txt", text)
    if art.out:
        art.json("lifetime.json", {"lifetimes": rows}, echo=False)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_sweep(cfg: dict, art: Artifacts) -> int:
    from .mpfloat import FP16, FP32, decode, encode, get_format
    from .mpfloat import oracle, vec

    fmt = get_format(cfg["fmt"])
    if fmt not in (FP16, FP32):
        raise ConfigError("sweep format must be fp16 or fp32")
    if cfg["count"] < 1:
        raise ConfigError("count must be positive")
    pair = vec.SAME_FP16 if fmt == FP16 else vec.SAME_FP32
    rng = np.random.default_rng(cfg["seed"])
    bits = rng.integers(0, 1 << fmt.width, (5, cfg["count"]), dtype=np.uint64)
    mods = rng.integers(0, 2, cfg["count"])
    vals = [decode(b, fmt) for b in bits]
    s, d = vec.do_sdotp(*vals, mods, pair)
    s, d = encode(s, fmt), encode(d, fmt)
    bad = ["a,b,c,d,e,mod,sum,diff,oracle_sum,oracle_diff"]
    for i in range(cfg["count"]):
        args = [int(b[i]) for b in bits]
        os_, od = oracle.exact_do_sdotp(*args, int(mods[i]), fmt, fmt)
        if os_ != int(s[i]) or od != int(d[i]):
            bad.append(",".join(hex(v) for v in (*args, int(mods[i]), int(s[i]), int(d[i]), os_, od)))
    mismatches = len(bad) - 1
    art.text("mismatches.csv", "\n".join(bad) + "\n")
    art.json("sweep.json", {"count": cfg["count"], "mismatches": mismatches})
    return EXIT_THRESHOLD if mismatches else EXIT_OK


def cmd_calibrate(cfg: dict, art: Artifacts) -> int:
    from .calibration import CALIBRATION_FILE

    if art.out is None and not cfg["install"]:
        raise ConfigError("calibrate needs --out or --install")
    target = CALIBRATION_FILE if cfg["install"] else art.out / "calibration.json"
    data = run_calibration(target, cfg["fft_trials"], cfg["wus_frames"])
    if target.parent == art.out:
        art.written.append(target.name)
    sys.stdout.write(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


COMMANDS = {"fft": cmd_fft, "gemm": cmd_gemm, "wus": cmd_wus, "buffers": cmd_buffers,
            "lifetime": cmd_lifetime, "sweep": cmd_sweep, "calibrate": cmd_calibrate}

HELP = {
    "fft": "run one FFT job on the accelerator model",
    "gemm": "run a GEMM on the VTU or the VAU baseline",
    "wus": "run the ultrasound gesture pipeline over synthetic frames",
    "buffers": "print the tensor-unit buffer accounting",
    "lifetime": "battery lifetime for given average powers",
    "sweep": "differential DO-SDOTP sweep against the exact oracle",
    "calibrate": "record oracle-ensemble error maxima and derive thresholds",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="maestro-sim", description="Vector-tensor SoC simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, schema in SCHEMAS.items():
        p = sub.add_parser(name, help=HELP[name])
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--out", help="output directory for artifacts")
        for key, (typ, default, text) in schema.items():
            flag = "--" + key.replace("_", "-")
            if typ is bool:
                p.add_argument(flag, dest=key, action=argparse.BooleanOptionalAction,
                               default=None, help=f"{text} (default {default})")
            elif typ is list:
                p.add_argument(flag, dest=key, nargs="+", type=json.loads, default=None,
                               help=f"{text} (default {default})")
            elif typ is dict:
                p.add_argument(flag, dest=key, default=None, help=f"{text}")
            else:
                p.add_argument(flag, dest=key, type=typ, default=None,
                               help=f"{text} (default {default!r})")
    return parser


def _dict_flag(value: str):
    value = value.strip()
    if value.startswith("{"):
        try:
            return json.loads(value)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid inline JSON: {exc}") from None
    return value


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    schema = SCHEMAS[args.command]
    try:
        overrides = {}
        for k, (typ, _, _) in schema.items():
            v = getattr(args, k)
            if v is not None:
                overrides[k] = _dict_flag(v) if typ is dict else v
        file_cfg = _read_json(args.config, "config") if args.config else None
        if file_cfg is not None and not isinstance(file_cfg, dict):
            raise ConfigError("config file must hold a JSON object")
        cfg = resolve_config(args.command, file_cfg, overrides)
        art = Artifacts(args.out, args.command, cfg)
        status = COMMANDS[args.command](cfg, art)
        art.finish(argv)
        return status
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except mio.FormatError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        # shape / length / format errors raised by the engines
        print(f"config error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
