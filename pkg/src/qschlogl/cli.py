"""Command-line front end.

Every subcommand reads an optional JSON config, applies command-line
overrides (flags win), and writes CSV/JSON files into the output directory.
Exit codes: 0 success, 1 validation, 2 solver failure, 3 I/O.
"""

from __future__ import annotations

import argparse
import copy
import dataclasses
import hashlib
import json
import logging
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Callable

from . import __version__
from .cme import build_generator, system_from_mapping, write_matrix_csv
from .errors import DomainError, SolverError
from .experiments import SweepRow, minimal_exact_depth, sweep_metrics, sweep_point, truncation_study, volume_grid
from .hermitize import block_embed, spd_form, unitary_of, write_complex_csv
from .pauli import Ordering, decompose
from .qpe import QPEConfig, qpe_run
from .qsim import AnsatzSpec, Rotation
from .variational import GradientMode, Init, Optimizer, VQDConfig, vqd, vqd_exact0
from .vqsvd import VQSVDConfig, steady_state_pipeline

log = logging.getLogger("qschlogl")

EXIT_OK, EXIT_VALIDATION, EXIT_SOLVER, EXIT_IO = 0, 1, 2, 3
OUTPUT_ENV = "QSCHLOGL_OUTPUT_DIR"
DEFAULT_OUTPUT = "qschlogl-out"


class UsageError(DomainError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------- config


def _set(cfg: dict, dotted: str, value: Any) -> None:
    node = cfg
    *parents, leaf = dotted.split(".")
    for key in parents:
        node = node.setdefault(key, {})
    node[leaf] = value


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise UsageError(f"config {path}: top level must be an object")
    return data


# flag destination -> dotted config key
_OVERRIDES = {
    "preset": "system.preset",
    "volume": "system.V",
    "n_trunc": "system.N_trunc",
    "k1": "system.k1",
    "k2": "system.k2",
    "k3": "system.k3",
    "k4": "system.k4",
    "a": "system.a",
    "b": "system.b",
    "v_start": "volumes.start",
    "v_stop": "volumes.stop",
    "v_step": "volumes.step",
    "seed": "seed",
    "qubits": "vqd.n_qubits",
    "reps": "vqd.reps",
    "k": "vqd.k",
    "max_iters": "vqd.max_iters",
    "gradient": "vqd.gradient",
    "optimizer": "vqd.optimizer",
    "precision_qubits": "qpe.precision_qubits",
    "shots": "qpe.shots",
    "learning_rate": "vqsvd.learning_rate",
    "iterations": "vqsvd.iterations",
    "circuit_depth": "vqsvd.circuit_depth",
    "strategies": "truncation.strategies",
    "keeps": "truncation.keeps",
    "method": "truncation.method",
}


def merged_config(args: argparse.Namespace) -> dict:
    cfg = copy.deepcopy(_load_config(args.config))
    for dest, key in _OVERRIDES.items():
        value = getattr(args, dest, None)
        if value is not None:
            _set(cfg, key, value)
    if getattr(args, "noiseless", False):
        _set(cfg, "qpe.shots", None)
    return cfg


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def _system(cfg: dict, **defaults):
    data = {"preset": "bistable", **defaults, **cfg.get("system", {})}
    return system_from_mapping(data)


def _volumes(cfg: dict, fallback: float) -> list[float]:
    spec = cfg.get("volumes")
    if spec is None:
        return [float(cfg.get("system", {}).get("V", fallback))]
    if isinstance(spec, list):
        if not spec:
            raise UsageError("volume list is empty")
        vols = [float(v) for v in spec]
        if any(v <= 0 for v in vols):
            raise UsageError("volumes must be positive")
        return vols
    try:
        return volume_grid(float(spec["start"]), float(spec["stop"]), float(spec["step"]))
    except KeyError as exc:
        raise UsageError(f"volume grid needs start, stop and step (missing {exc})") from None


def _ansatz(block: dict, default_reps: int = 1) -> AnsatzSpec:
    n = int(block.get("n_qubits", 2))
    return AnsatzSpec(n, reps=int(block.get("reps", default_reps)), rotation=Rotation(block.get("rotation", "ry")))


def _vqd_config(block: dict, seed: int, init: Init = Init.RANDOM) -> VQDConfig:
    betas = block.get("betas")
    return VQDConfig(
        k=int(block.get("k", 2)),
        betas=None if betas is None else tuple(betas),
        optimizer=Optimizer(block.get("optimizer", Optimizer.QUASI_NEWTON_BOUNDED.value)),
        max_iters=int(block.get("max_iters", 5000)),
        gradient=GradientMode(block.get("gradient", GradientMode.PARAMETER_SHIFT.value)),
        seed=seed,
        init=init,
    )


def _qpe_config(block: dict, seed: int) -> QPEConfig:
    shots = block.get("shots", 500_000)
    return QPEConfig(
        precision_qubits=int(block.get("precision_qubits", 7)),
        shots=None if shots is None else int(shots),
        seed=seed,
    )


def _vqsvd_config(block: dict, seed: int, dim: int) -> VQSVDConfig:
    weights = block.get("weights", [24, 21, 18, 15, 12, 9, 6, 3][:dim])
    return VQSVDConfig(
        rank=int(block.get("rank", len(weights))),
        weights=tuple(weights),
        learning_rate=float(block.get("learning_rate", 0.02)),
        iterations=int(block.get("iterations", 200)),
        circuit_depth=int(block.get("circuit_depth", 55)),
        seed=seed,
    )


# ---------------------------------------------------------------- output


class Output:
    """Atomic writer into one directory; refuses to clobber files unless forced."""

    def __init__(self, directory: Path, force: bool, header: str):
        self.dir = directory
        self.force = force
        self.header = header
        self.written: list[Path] = []

    def prepare(self, names: list[str]) -> None:
        self.dir.mkdir(parents=True, exist_ok=True)
        clash = [n for n in names if (self.dir / n).exists()]
        if clash and not self.force:
            raise FileExistsError(f"refusing to overwrite {', '.join(clash)} in {self.dir} (use --force)")

    def write(self, name: str, writer: Callable[[Path], None]) -> Path:
        target = self.dir / name
        fd, tmp = tempfile.mkstemp(prefix=f".{name}.", dir=self.dir)
        os.close(fd)
        try:
            writer(Path(tmp))
            os.replace(tmp, target)
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise
        self.written.append(target)
        return target

    def text(self, name: str, content: str) -> Path:
        return self.write(name, lambda p: p.write_text(content, encoding="utf-8"))

    def json(self, name: str, data: dict) -> Path:
        return self.text(name, json.dumps(data, indent=2, sort_keys=True) + "\n")

    def csv(self, name: str, columns: list[str], rows: list[list]) -> Path:
        def fmt(v):
            return f"{v:.17g}" if isinstance(v, float) else str(v)

        lines = [f"# {line}" for line in self.header.splitlines()]
        lines.append(",".join(columns))
        lines += [",".join(fmt(v) for v in row) for row in rows]
        return self.text(name, "\n".join(lines) + "\n")


def _output(args, cfg: dict) -> Output:
    directory = args.out or os.environ.get(OUTPUT_ENV) or cfg.get("output_dir") or DEFAULT_OUTPUT
    header = f"qschlogl {__version__} {args.command}\nconfig-sha256: {config_hash(cfg)}"
    return Output(Path(directory), args.force, header)


# ---------------------------------------------------------------- commands


def cmd_build_q(args, cfg) -> None:
    sys_ = _system(cfg)
    q = build_generator(sys_)
    out = _output(args, cfg)
    out.prepare(["Q.csv", "Q_H.csv", "Q_spd.csv", "metadata.json"])
    out.write("Q.csv", lambda p: write_matrix_csv(p, q.entries, out.header))
    out.write("Q_H.csv", lambda p: write_complex_csv(p, block_embed(q).entries, out.header))
    out.write("Q_spd.csv", lambda p: write_complex_csv(p, spd_form(q).entries, out.header))
    out.json(
        "metadata.json",
        {
            "system": sys_.to_mapping(),
            "is_equilibrium": sys_.is_equilibrium(),
            "balance_ratio": sys_.balance_ratio,
            "dim": q.dim,
            "config_sha256": config_hash(cfg),
        },
    )


def _sweep_task(payload: tuple) -> dict:
    system_data, ansatz_data, vqd_data, seed = payload
    sys_ = system_from_mapping(system_data)
    ansatz = None if ansatz_data is None else _ansatz(ansatz_data)
    vcfg = None if vqd_data is None else _vqd_config(vqd_data, seed)
    return sweep_point(sys_, ansatz, vcfg).as_dict()


def cmd_sweep_eigs(args, cfg) -> None:
    vqd_block = cfg.get("vqd")
    with_vqd = bool(args.with_vqd or (vqd_block and vqd_block.get("enabled", True)))
    defaults = {"N_trunc": 127}
    ansatz_data = None
    if with_vqd:
        vqd_block = dict(vqd_block or {})
        n = int(vqd_block.get("n_qubits", 2))
        ansatz_data = {"n_qubits": n, "reps": vqd_block.get("reps", 1), "rotation": vqd_block.get("rotation", "ry")}
        defaults["N_trunc"] = 2**n - 1
    base = _system(cfg, **defaults)
    if with_vqd:
        _ansatz(ansatz_data)
        if base.dim != 2 ** ansatz_data["n_qubits"]:
            raise UsageError(f"VQD on {ansatz_data['n_qubits']} qubits needs N_trunc = {2 ** ansatz_data['n_qubits'] - 1}")
    volumes = _volumes(cfg, base.volume)
    seed = int(cfg.get("seed", 0))
    out = _output(args, cfg)
    out.prepare(["sweep.csv", "sweep_metrics.json"])

    payloads = []
    for v in volumes:
        data = base.with_volume(v).to_mapping()
        payloads.append((data, ansatz_data, vqd_block if with_vqd else None, seed))

    points_dir = out.dir / "points"
    points_dir.mkdir(exist_ok=True)
    point_out = Output(points_dir, True, out.header)
    workers = args.workers or os.cpu_count() or 1
    rows: list[dict] = []
    if workers > 1 and len(payloads) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(payloads))) as pool:
            results = list(pool.map(_sweep_task, payloads))
    else:
        results = [_sweep_task(p) for p in payloads]
    for i, r in enumerate(results):
        point_out.json(f"point_{i:04d}.json", r)
    for i in range(len(payloads)):
        rows.append(json.loads((points_dir / f"point_{i:04d}.json").read_text(encoding="utf-8")))

    columns = [f.name for f in dataclasses.fields(SweepRow)]
    out.csv("sweep.csv", columns, [[r[c] for c in columns] for r in rows])
    metrics = sweep_metrics([SweepRow(**r) for r in rows]) if len(rows) > 1 else {"points": len(rows)}
    metrics["config_sha256"] = config_hash(cfg)
    out.json("sweep_metrics.json", metrics)


def cmd_truncation_study(args, cfg) -> None:
    block = cfg.get("truncation", {})
    n = int(block.get("n_qubits", args.trunc_qubits or 2))
    sys_ = _system(cfg, V=8.5).for_qubits(n)
    strategies = [Ordering(s) for s in block.get("strategies", [o.value for o in Ordering])]
    keeps = block.get("keeps")
    method = block.get("method", "exact")
    if method not in ("exact", "vqd"):
        raise UsageError(f"truncation method must be 'exact' or 'vqd', got {method!r}")
    ansatz = vcfg = None
    if method == "vqd":
        vblock = dict(cfg.get("vqd", {}))
        vblock.setdefault("n_qubits", n)
        ansatz = _ansatz(vblock, default_reps=max(1, n - 1))
        vcfg = _vqd_config(vblock, int(cfg.get("seed", 0)))
    out = _output(args, cfg)
    out.prepare(["truncation.csv", "truncation_summary.json"])
    rows = truncation_study(sys_, strategies, keeps, ansatz, vcfg)
    columns = ["strategy", "keep", "n_terms", "lambda0", "lambda1", "lambda0_abs_error", "lambda1_pct_error"]
    out.csv("truncation.csv", columns, [[getattr(r, c) for c in columns] for r in rows])
    summary = {
        s.value: {"min_exact_keep_lambda0": minimal_exact_depth(rows, s, 0), "min_exact_keep_lambda1": minimal_exact_depth(rows, s, 1)}
        for s in strategies
    }
    out.json("truncation_summary.json", {"volume": sys_.volume, "n_qubits": n, "strategies": summary})


def _run_vqd(args, cfg, exact0: bool) -> None:
    block = dict(cfg.get("vqd", {}))
    n = int(block.get("n_qubits", 2))
    block.setdefault("n_qubits", n)
    sys_ = _system(cfg, V=8.5).for_qubits(n)
    ansatz = _ansatz(block, default_reps=max(1, n - 1))
    seed = int(cfg.get("seed", 0))
    init = Init.CONSTANT_STATE_EXACT if exact0 else Init.RANDOM
    vcfg = _vqd_config(block, seed, init)
    p = decompose(spd_form(build_generator(sys_)))
    out = _output(args, cfg)
    out.prepare(["vqd_report.json", "vqd_trace.csv"])
    report = (vqd_exact0 if exact0 else vqd)(p, ansatz, vcfg)
    data = report.to_dict()
    data.update(volume=sys_.volume, n_qubits=n, total_iterations=report.total_iterations, config_sha256=config_hash(cfg))
    out.json("vqd_report.json", data)
    out.write("vqd_trace.csv", lambda path: report.write_trace_csv(path, out.header))


def cmd_vqd(args, cfg) -> None:
    _run_vqd(args, cfg, exact0=False)


def cmd_vqd_exact0(args, cfg) -> None:
    _run_vqd(args, cfg, exact0=True)


def cmd_qpe(args, cfg) -> None:
    sys_ = _system(cfg, V=1.1)
    qcfg = _qpe_config(cfg.get("qpe", {}), int(cfg.get("seed", 0)))
    u = unitary_of(block_embed(build_generator(sys_)))
    out = _output(args, cfg)
    out.prepare(["qpe_result.json", "qpe_histogram.csv"])
    result = qpe_run(u, qcfg)
    data = result.to_dict()
    data.update(volume=sys_.volume, config_sha256=config_hash(cfg))
    out.json("qpe_result.json", data)
    out.write("qpe_histogram.csv", lambda p: result.write_histogram_csv(p, out.header))


def cmd_zeromode(args, cfg) -> None:
    if args.config is not None:
        for block in ("qpe", "vqsvd"):
            if block not in cfg:
                raise UsageError(f"config is missing the '{block}' block")
    base = _system(cfg, V=1.1)
    seed = int(cfg.get("seed", 0))
    qcfg = _qpe_config(cfg.get("qpe", {}), seed)
    svd_cfg = _vqsvd_config(cfg.get("vqsvd", {}), seed, min(8, 2 * base.dim))
    volumes = _volumes(cfg, base.volume)
    out = _output(args, cfg)
    names = []
    for v in volumes:
        names += [f"zeromode_V{v:g}.csv", f"zeromode_V{v:g}.json"]
    out.prepare(names)
    for v in volumes:
        report = steady_state_pipeline(base.with_volume(v), qcfg, svd_cfg)
        data = report.to_dict()
        data.update(volume=v, config_sha256=config_hash(cfg))
        out.json(f"zeromode_V{v:g}.json", data)
        out.write(f"zeromode_V{v:g}.csv", lambda p: report.write_csv(p, out.header))
        log.info("V=%g rmsd=%.3f%% <Q_H>=%.3g", v, report.rmsd_percent, report.qh_expectation)


COMMANDS = {
    "build-q": (cmd_build_q, "write Q, Q_H and Q_spd as CSV"),
    "sweep-eigs": (cmd_sweep_eigs, "λ0/λ1 over a volume grid (optionally with VQD)"),
    "truncation-study": (cmd_truncation_study, "λ0/λ1 errors of truncated Pauli expansions"),
    "vqd": (cmd_vqd, "VQD on Q Q^†"),
    "vqd-exact0": (cmd_vqd_exact0, "VQD with the analytic level 0"),
    "qpe": (cmd_qpe, "phase estimation on exp(-i Q_H)"),
    "zeromode": (cmd_zeromode, "steady state via QPE + VQSVD"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qschlogl", description="Quantum algorithms for the Schlögl master equation.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override its values")
    common.add_argument("--out", help=f"output directory (env {OUTPUT_ENV}, default {DEFAULT_OUTPUT})")
    common.add_argument("--force", action="store_true", help="overwrite existing output files")
    common.add_argument("--seed", type=int)
    common.add_argument("--preset", choices=["monostable", "bistable"])
    common.add_argument("--volume", "-V", type=float)
    common.add_argument("--n-trunc", type=int)
    for name in ("k1", "k2", "k3", "k4", "a", "b"):
        common.add_argument(f"--{name}", type=float)
    common.add_argument("-v", "--verbose", action="store_true")

    grid = _Parser(add_help=False)
    grid.add_argument("--v-start", type=float)
    grid.add_argument("--v-stop", type=float)
    grid.add_argument("--v-step", type=float)

    vqd_flags = _Parser(add_help=False)
    vqd_flags.add_argument("--qubits", type=int)
    vqd_flags.add_argument("--reps", type=int)
    vqd_flags.add_argument("--k", type=int)
    vqd_flags.add_argument("--max-iters", type=int)
    vqd_flags.add_argument("--gradient", choices=[g.value for g in GradientMode])
    vqd_flags.add_argument("--optimizer", choices=[o.value for o in Optimizer])

    qpe_flags = _Parser(add_help=False)
    qpe_flags.add_argument("--precision-qubits", type=int)
    qpe_flags.add_argument("--shots", type=int)
    qpe_flags.add_argument("--noiseless", action="store_true", help="use exact outcome probabilities")

    for name, (_, help_text) in COMMANDS.items():
        parents = [common]
        if name in ("sweep-eigs", "zeromode"):
            parents.append(grid)
        if name in ("sweep-eigs", "vqd", "vqd-exact0", "truncation-study"):
            parents.append(vqd_flags)
        if name in ("qpe", "zeromode"):
            parents.append(qpe_flags)
        p = sub.add_parser(name, parents=parents, help=help_text)
        if name == "sweep-eigs":
            p.add_argument("--with-vqd", action="store_true", help="add a VQD column (N_trunc = 2**qubits - 1)")
            p.add_argument("--workers", type=int, help="worker processes (default: CPU count)")
        if name == "truncation-study":
            p.add_argument("--trunc-qubits", type=int, help="qubit count of the truncated operator")
            p.add_argument("--strategies", nargs="+", choices=[o.value for o in Ordering])
            p.add_argument("--keeps", nargs="+", type=int)
            p.add_argument("--method", choices=["exact", "vqd"])
        if name == "zeromode":
            p.add_argument("--learning-rate", type=float)
            p.add_argument("--iterations", type=int)
            p.add_argument("--circuit-depth", type=int)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "truncation-study" and args.trunc_qubits is None and getattr(args, "qubits", None) is not None:
        args.trunc_qubits = args.qubits
    func = COMMANDS[args.command][0]
    try:
        cfg = merged_config(args)
        func(args, cfg)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
