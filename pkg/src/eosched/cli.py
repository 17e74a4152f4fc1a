"""Command line entry point: ``eosched <command> ...``.

Commands: gen-windows, train, validate, baseline, compare. Exit codes are
0 (success / valid), 1 (invalid schedule), 2 (runtime failure) and
64 (usage error).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import sys
import time
from pathlib import Path

from . import baselines, environment as env, geometry, ppo_engine
from .instance_model import (
    REFERENCE_ORBIT,
    InstanceError,
    Instance,
    OrbitElements,
    SatelliteConfig,
    parse_instance,
    parse_targets,
    serialize_instance,
    _parse_epoch,
)

EXIT_OK, EXIT_INVALID, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2, 64

SAT_KEYS = {f.name: f.type for f in dataclasses.fields(SatelliteConfig)}
TRAIN_KEYS = {f.name: f.type for f in dataclasses.fields(ppo_engine.TrainConfig)}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _coerce(value: str, default):
    if isinstance(default, bool):
        if value.lower() in ("1", "true", "yes", "on"):
            return True
        if value.lower() in ("0", "false", "no", "off"):
            return False
        raise UsageError(f"expected a boolean, got {value!r}")
    return type(default)(value)


def read_config(path: str | None) -> dict[str, str]:
    """key=value lines; ``#`` comments."""
    if path is None:
        return {}
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key = key.strip()
        if key not in SAT_KEYS and key not in TRAIN_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
        out[key] = value.strip()
    return out


def _override(obj, config: dict[str, str]):
    changes = {}
    for f in dataclasses.fields(obj):
        if f.name in config:
            try:
                changes[f.name] = _coerce(config[f.name], getattr(obj, f.name))
            except ValueError as exc:
                raise UsageError(f"config {f.name}: {exc}") from None
    return dataclasses.replace(obj, **changes) if changes else obj


def _load_instance(args, config) -> Instance:
    if not args.instance:
        raise UsageError("--instance is required")
    path = Path(args.instance)
    try:
        inst = parse_instance(path.read_text())
    except InstanceError as exc:
        raise InstanceError(f"{path}: {exc}") from None
    sat = _override(inst.satellite, config)
    if sat != inst.satellite:
        inst = dataclasses.replace(inst, satellite=sat)
    return inst


def _train_config(args, config) -> ppo_engine.TrainConfig:
    cfg = _override(ppo_engine.TrainConfig(), config)
    if getattr(args, "episodes", None) is not None:
        cfg = dataclasses.replace(cfg, episodes=args.episodes)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    return cfg


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    path.write_text(buf.getvalue(), newline="\n")


def _write_manifest(out_dir: Path, command: str, argv: list[str], args, config: dict,
                    outputs: list[Path], started: float) -> Path:
    manifest = {
        "command": command,
        "argv": argv,
        "instance": getattr(args, "instance", None),
        "config": config,
        "seed": args.seed,
        "outputs": [str(p) for p in outputs],
        "wall_clock_s": round(time.perf_counter() - started, 6),
    }
    path = out_dir / f"{command}.manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


# -- commands --------------------------------------------------------------------

def cmd_gen_windows(args, config) -> tuple[int, list[Path]]:
    targets_path = Path(args.targets)
    try:
        targets = parse_targets(targets_path.read_text())
    except InstanceError as exc:
        raise InstanceError(f"{targets_path}:{exc.line}: {exc}" if exc.line else f"{targets_path}: {exc}") from None
    orbit = OrbitElements(args.a, args.e, args.inc, args.raan, args.argp, args.ta,
                          _parse_epoch(args.epoch))
    sat = _override(SatelliteConfig(ltw_scaling_factor=float(args.horizon[1] - args.horizon[0])), config)
    horizon = (args.horizon[0], args.horizon[1])
    plan = geometry.DownloadPlan(args.download_interval, args.download_duration, args.download_memory)
    tasks = geometry.build_tasks(orbit, sat, targets, horizon, plan, args.observation_memory)
    inst = Instance(orbit, sat, tuple(tasks), horizon, tuple(targets))
    out = Path(args.output) if args.output else Path(args.out_dir) / "instance.txt"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(serialize_instance(inst))

    by_id = {t.id: t for t in tasks}
    print(f"{'target':>6} {'reward':>6} {'start':>6} {'end':>6} {'roll':>9}")
    for target in targets:
        t = by_id.get(target.id)
        if t is None:
            print(f"{target.id:>6} {target.reward:>6} {'-':>6} {'-':>6} {'dropped':>9}")
        else:
            print(f"{target.id:>6} {target.reward:>6} {t.window_start:>6} {t.window_end:>6} {t.roll_angle:>9.3f}")
    n_obs = sum(t.kind == "observation" for t in tasks)
    print(f"wrote {out}: {n_obs} observation tasks, {len(tasks) - n_obs} download tasks")
    return EXIT_OK, [out]


def cmd_train(args, config) -> tuple[int, list[Path]]:
    inst = _load_instance(args, config)
    cfg = _train_config(args, config)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = ppo_engine.train(inst, cfg)
    sched = out_dir / "best.sched"
    sched.write_text(env.format_decisions(inst, result.best_decisions))
    curve = out_dir / "curve.csv"
    _write_csv(curve, ["episode", "return"], [[i + 1, r] for i, r in enumerate(result.reward_curve)])
    params = out_dir / "params.bin"
    params.write_bytes(ppo_engine.params_to_bytes(result.actor))
    critic = out_dir / "critic.bin"
    critic.write_bytes(ppo_engine.params_to_bytes(result.critic))
    print(f"best reward {result.best_reward} (episode {result.best_episode + 1} of {cfg.episodes})")
    print("accepted: " + " ".join(map(str, result.best_accepted)))
    return EXIT_OK, [sched, curve, params, critic]


def cmd_validate(args, config) -> tuple[int, list[Path]]:
    inst = _load_instance(args, config)
    decisions = env.parse_decisions(Path(args.schedule).read_text(), inst)
    report = env.validate_schedule(inst, decisions)
    print(report.render())
    return (EXIT_OK if report.valid else EXIT_INVALID), []


def _run_method(name: str, inst: Instance, seed: int, args, config) -> tuple[list[int], int, int]:
    if name == "ppo":
        cfg = dataclasses.replace(_train_config(args, config), seed=seed)
        res = ppo_engine.train(inst, cfg)
        return res.best_decisions, res.best_reward, cfg.episodes
    if name == "random":
        res = baselines.random_policy(inst, seed)
    else:
        res = baselines.METHODS[name](inst)
    return res.decisions, res.reward, res.steps


def cmd_baseline(args, config) -> tuple[int, list[Path]]:
    inst = _load_instance(args, config)
    if args.method not in baselines.METHODS:
        raise UsageError(f"unknown method {args.method!r}")
    decisions, reward, steps = _run_method(args.method, inst, args.seed or 0, args, config)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sched = out_dir / f"{args.method}.sched"
    sched.write_text(env.format_decisions(inst, decisions))
    print(f"{args.method}: reward {reward}, steps {steps}")
    return EXIT_OK, [sched]


SEEDED = ("ppo", "random")


def cmd_compare(args, config) -> tuple[int, list[Path]]:
    inst = _load_instance(args, config)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in baselines.METHODS and m != "ppo":
            raise UsageError(f"unknown method {m!r}")
    base = args.seed or 0
    seeds = list(range(base, base + args.seeds))
    rows = []
    for m in methods:
        for seed in (seeds if m in SEEDED else [None]):
            t0 = time.perf_counter()
            _, reward, steps = _run_method(m, inst, seed if seed is not None else 0, args, config)
            rows.append([m, "" if seed is None else seed, reward, f"{time.perf_counter() - t0:.3f}", steps])
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    table = out_dir / "compare.csv"
    _write_csv(table, ["method", "seed", "reward", "runtime_s", "steps"], rows)
    print(f"{'method':<14} {'seed':>5} {'reward':>7} {'runtime_s':>10} {'steps':>7}")
    for m, seed, reward, runtime, steps in rows:
        print(f"{m:<14} {str(seed):>5} {reward:>7} {runtime:>10} {steps:>7}")
    return EXIT_OK, [table]


COMMANDS = {
    "gen-windows": cmd_gen_windows,
    "train": cmd_train,
    "validate": cmd_validate,
    "baseline": cmd_baseline,
    "compare": cmd_compare,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--instance", help="instance file")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out-dir", default="eosched-out")
    common.add_argument("--config", help="key=value file overriding satellite/training defaults")

    parser = _Parser(prog="eosched", description="Agile satellite observation scheduling")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-windows", parents=[common], help="targets file -> instance file")
    p.add_argument("targets")
    p.add_argument("--output", "-o")
    p.add_argument("--a", type=float, default=REFERENCE_ORBIT.semi_major_axis)
    p.add_argument("--e", type=float, default=REFERENCE_ORBIT.eccentricity)
    p.add_argument("--inc", type=float, default=REFERENCE_ORBIT.inclination)
    p.add_argument("--raan", type=float, default=REFERENCE_ORBIT.raan)
    p.add_argument("--argp", type=float, default=REFERENCE_ORBIT.arg_perigee)
    p.add_argument("--ta", type=float, default=REFERENCE_ORBIT.true_anomaly)
    p.add_argument("--epoch", default=REFERENCE_ORBIT.epoch.strftime("%Y-%m-%dT%H:%M:%SZ"))
    p.add_argument("--horizon", type=int, nargs=2, default=[0, 1800], metavar=("START", "END"))
    p.add_argument("--download-interval", type=int, default=300)
    p.add_argument("--download-duration", type=int, default=30)
    p.add_argument("--download-memory", type=int, default=-4)
    p.add_argument("--observation-memory", type=int, default=1)

    p = sub.add_parser("train", parents=[common], help="PPO search on an instance")
    p.add_argument("--episodes", type=int, default=None)

    p = sub.add_parser("validate", parents=[common], help="check a schedule file")
    p.add_argument("schedule")

    p = sub.add_parser("baseline", parents=[common], help="run one reference scheduler")
    p.add_argument("--method", default="fcfs", choices=sorted(baselines.METHODS))

    p = sub.add_parser("compare", parents=[common], help="reward table over methods and seeds")
    p.add_argument("--methods", default="fcfs,greedy,random,ppo")
    p.add_argument("--seeds", type=int, default=10, help="number of seeds for seeded methods")
    p.add_argument("--episodes", type=int, default=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    started = time.perf_counter()
    try:
        config = read_config(args.config)
        code, outputs = COMMANDS[args.command](args, config)
    except UsageError as exc:
        print(f"eosched: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ppo_engine.TrainingDivergence as exc:
        print(f"eosched: training diverged: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except (InstanceError, ValueError, KeyError, OSError, geometry.PropagationError) as exc:
        print(f"eosched: error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_manifest(out_dir, args.command, argv, args, config, outputs, started)
    return code


def rerun_manifest(path: str | Path) -> int:
    """Re-execute the command recorded in a manifest."""
    manifest = json.loads(Path(path).read_text())
    return main(manifest["argv"])


if __name__ == "__main__":
    sys.exit(main())
