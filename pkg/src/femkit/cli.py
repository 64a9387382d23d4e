"""Command-line front end.

Every subcommand resolves its settings as defaults < ``--config`` JSON <
explicit flags, writes its outputs plus a ``manifest.json`` (resolved
config, SHA-256 input digests, package version) into ``--out``, and exits
0 on success, 1 on bad input or configuration, 2 on numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .constants import DEFAULT_TEMPERATURE
from .evaluation import kl_divergence_2d
from .exceptions import NumericalError, ValidationError
from .freeenergy import (boltzmann_invert, energy_correction, fit_marginals,
                         load_targets, mean_energy_grid, save_grid_csv,
                         save_targets)
from .msm import MarkovStateModel
from .potential import (PriorTerm, RbfNetPotential, ReferenceLandscape,
                        LANDSCAPE_KINDS)
from .sampler import CompositeSystem, LangevinConfig, SimulationResult, simulate
from .tica import TICA
from .trajectory import (load_energy_record, load_force_record, load_trajectory,
                         pairwise_distance_features, save_force_record,
                         save_trajectory)
from .training import LossConfig, TrainingSet, train


class _Parser(argparse.ArgumentParser):
    """Argument parser that exits 1 (not 2) on bad usage."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# dest -> (default, help); used for parser construction, config-key
# validation, and the flag/field parity tests
COMMAND_SPECS: dict[str, dict] = {
    "featurize": {
        "input": (None, "trajectory of (x,y,z) site coordinates"),
        "output": ("features.femk", "output file name (within --out)"),
        "fmt": (None, "input format override: csv or bin"),
    },
    "tica": {
        "trajectory": (None, "input trajectory file(s)"),
        "lag": (10, "lag time in frames"),
        "components": (2, "number of slow components to keep"),
        "ridge": (None, "covariance regularization (default 1e-6 relative)"),
        "output": ("tica.json", "model file name (within --out)"),
    },
    "targets": {
        "trajectory": (None, "input trajectory file(s)"),
        "tica": (None, "fitted TICA model JSON"),
        "kind": ("histogram", "density estimator: histogram or kde"),
        "bins": (100, "histogram bin count per component"),
        "temperature": (DEFAULT_TEMPERATURE, "temperature in K"),
        "components": (None, "number of TICA components (default: all in model)"),
        "prior_energy": (None, "optional FEME prior-energy file for delta_e"),
        "floor_epsilon": (1e-12, "density floor before the log"),
        "output": ("targets.feme", "output file name (within --out)"),
    },
    "train": {
        "forces": (None, "FEMF file(s) with configs and target forces"),
        "targets": (None, "FEME free-energy target file"),
        "lambda_force": (None, "force-loss weight (default 1 - lambda_energy)"),
        "lambda_energy": (0.0, "energy-loss weight"),
        "batch_size": (256, "mini-batch size"),
        "max_epochs": (500, "epoch cap"),
        "learning_rate": (1e-3, "optimizer step size"),
        "seed": (0, "shuffling / init seed"),
        "n_basis": (24, "RBF basis functions"),
        "n_hidden": (32, "hidden layer width"),
        "prior_stiffness": (0.0, "harmonic prior stiffness (0 = no prior)"),
        "output": ("model.json", "model file name (within --out)"),
    },
    "sample": {
        "model": (None, "trained model JSON (from `train`)"),
        "system": (None, f"reference landscape: {', '.join(LANDSCAPE_KINDS)}"),
        "steps": (100000, "integration steps per chain"),
        "dt": (1e-3, "integration time step"),
        "gamma": (1.0, "friction coefficient"),
        "temperature": (DEFAULT_TEMPERATURE, "temperature in K"),
        "stride": (10, "record every this many steps"),
        "seed": (0, "noise seed"),
        "chains": (2, "number of chains (used with default starts)"),
        "initial_positions": (None, "start positions 'x,y;x,y;...' (overrides --chains)"),
        "prefix": ("chain", "output file prefix (within --out)"),
    },
    "evaluate": {
        "truth": (None, "ground-truth trajectory file(s)"),
        "model_data": (None, "model trajectory file(s)"),
        "tica": (None, "TICA model fitted on ground truth"),
        "bins": (100, "grid bins per axis"),
        "epsilon": (0.5, "smoothing pseudo-count per bin"),
        "output": ("kl_report.json", "report file name (within --out)"),
    },
    "landscape": {
        "trajectory": (None, "input trajectory file(s)"),
        "tica": (None, "fitted TICA model JSON"),
        "targets": (None, "FEME target file supplying per-frame values"),
        "bins": (100, "grid bins per axis"),
        "output": ("landscape.csv", "grid CSV name (within --out)"),
    },
    "msm": {
        "trajectory": (None, "input trajectory file(s)"),
        "tica": (None, "fitted TICA model JSON"),
        "n_states": (50, "number of microstates"),
        "lag": (10, "transition lag in frames"),
        "components": (2, "TICA components to cluster in"),
        "seed": (0, "clustering seed"),
        "temperature": (DEFAULT_TEMPERATURE, "temperature in K"),
        "output": ("msm.json", "model file name (within --out)"),
    },
    "pipeline": {
        "system": ("double_well_2d", f"toy system: {', '.join(LANDSCAPE_KINDS)}"),
        "lambda_energy": (0.0, "energy-loss weight"),
        "lambda_force": (None, "force-loss weight (default 1 - lambda_energy)"),
        "seed": (0, "global seed"),
        "temperature": (DEFAULT_TEMPERATURE, "temperature in K"),
        "steps": (150000, "truth/model integration steps per chain"),
        "dt": (2e-3, "integration time step"),
        "gamma": (1.0, "friction coefficient"),
        "stride": (10, "record every this many steps"),
        "chains": (16, "chains per ensemble (balanced diverse starts)"),
        "lag": (10, "TICA lag in frames"),
        "components": (2, "TICA components"),
        "kind": ("kde", "density estimator for targets: kde or histogram"),
        "bins": (100, "evaluation grid bins per axis"),
        "epsilon": (0.5, "KL smoothing pseudo-count"),
        "batch_size": (256, "training mini-batch size"),
        "max_epochs": (60, "training epoch cap"),
        "learning_rate": (2e-3, "optimizer step size"),
        "n_basis": (24, "RBF basis functions"),
        "n_hidden": (32, "hidden layer width"),
        "prior_stiffness": (0.5, "harmonic prior stiffness"),
    },
}

_MULTI_VALUE = {"trajectory", "truth", "model_data", "forces"}
_INT_KEYS = {"lag", "components", "bins", "batch_size", "max_epochs", "seed",
             "steps", "stride", "chains", "n_states", "n_basis", "n_hidden"}


def _flag(dest: str) -> str:
    if dest == "steps":
        return "--steps"
    return "--" + dest.replace("_", "-")


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="femkit",
                     description="Free-energy matching pipeline tools")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for command, spec in COMMAND_SPECS.items():
        p = sub.add_parser(command, help=f"run the {command} step",
                           description=f"femkit {command}")
        p.add_argument("--config", default=None,
                       help="JSON file of settings (flags override)")
        p.add_argument("--out", default="femkit_out",
                       help="output directory (default: femkit_out)")
        for dest, (default, help_text) in spec.items():
            kwargs: dict = {"dest": dest, "default": argparse.SUPPRESS,
                            "help": f"{help_text} (default: {default})"}
            if dest in _MULTI_VALUE:
                kwargs["nargs"] = "+"
            elif dest in _INT_KEYS:
                kwargs["type"] = int
            elif isinstance(default, float) or dest in (
                    "ridge", "lambda_force", "lambda_energy", "floor_epsilon",
                    "prior_stiffness", "dt", "gamma", "temperature", "epsilon",
                    "learning_rate"):
                kwargs["type"] = float
            p.add_argument(_flag(dest), **kwargs)
    return parser


def _resolve_config(command: str, args: argparse.Namespace) -> dict:
    spec = COMMAND_SPECS[command]
    resolved = {dest: default for dest, (default, _) in spec.items()}
    if args.config is not None:
        with open(args.config, "r", encoding="utf-8") as fh:
            file_cfg = json.load(fh)
        if not isinstance(file_cfg, dict):
            raise ValidationError(f"{args.config}: config must be a JSON object")
        unknown = sorted(set(file_cfg) - set(spec))
        if unknown:
            raise ValidationError(
                f"{args.config}: unknown config keys for '{command}': {unknown}"
            )
        resolved.update(file_cfg)
    for dest in spec:
        if hasattr(args, dest):
            resolved[dest] = getattr(args, dest)
    return resolved


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(out_dir: Path, command: str, config: dict,
                    inputs: dict, outputs: list[str]) -> None:
    manifest = {
        "command": command,
        "version": __version__,
        "config": config,
        "inputs": {str(k): _sha256(k) for k in inputs},
        "outputs": sorted(outputs),
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _require(cfg: dict, command: str, *keys: str) -> None:
    missing = [k for k in keys if cfg.get(k) is None]
    if missing:
        raise ValidationError(
            f"'{command}' requires {', '.join(_flag(k) for k in missing)}"
        )


def _load_trajectories(paths, fmt=None) -> list:
    return [load_trajectory(p, fmt) for p in paths]


def _check_tica_compatible(tica_model: TICA, traj, path) -> None:
    if traj.feature_names != tica_model.feature_names_:
        raise ValidationError(
            f"feature names in {path} {list(traj.feature_names)} do not match "
            f"the TICA model's {list(tica_model.feature_names_)}"
        )


def _project_files(tica_model: TICA, paths, k: int | None = None) -> np.ndarray:
    parts = []
    for path in paths:
        traj = load_trajectory(path)
        _check_tica_compatible(tica_model, traj, path)
        kk = tica_model.eigenvalues_.shape[0] if k is None else k
        parts.append(tica_model.project(traj, kk))
    return np.vstack(parts)


# ---------------------------------------------------------------------------
# subcommand bodies: take the resolved config and the output dir,
# return (inputs, outputs) for the manifest
# ---------------------------------------------------------------------------

def _cmd_featurize(cfg: dict, out: Path) -> tuple[dict, list[str]]:
    _require(cfg, "featurize", "input")
    traj = load_trajectory(cfg["input"], cfg["fmt"])
    feats = pairwise_distance_features(traj.frames, dt=traj.dt,
                                       source_id=traj.source_id)
    save_trajectory(feats, out / cfg["output"])
    return {cfg["input"]: None}, [cfg["output"]]


def _cmd_tica(cfg: dict, out: Path) -> tuple[dict, list[str]]:
    _require(cfg, "tica", "trajectory")
    trajs = _load_trajectories(cfg["trajectory"])
    model = TICA(lag_frames=cfg["lag"], n_components=cfg["components"],
                 ridge=cfg["ridge"]).fit(trajs)
    model.to_json(out / cfg["output"])
    return {p: None for p in cfg["trajectory"]}, [cfg["output"]]


def _cmd_targets(cfg: dict, out: Path) -> tuple[dict, list[str]]:
    _require(cfg, "targets", "trajectory", "tica")
    tica_model = TICA.from_json(cfg["tica"])
    k = cfg["components"]
    y = _project_files(tica_model, cfg["trajectory"], k)
    density = fit_marginals(y, kind=cfg["kind"], n_bins=cfg["bins"],
                            floor_epsilon=cfg["floor_epsilon"])
    targets = boltzmann_invert(density, y, cfg["temperature"])
    inputs = {p: None for p in cfg["trajectory"]}
    inputs[cfg["tica"]] = None
    if cfg["prior_energy"] is not None:
        prior = load_energy_record(cfg["prior_energy"])
        targets = energy_correction(targets, prior)
        inputs[cfg["prior_energy"]] = None
    save_targets(targets, out / cfg["output"])
    return inputs, [cfg["output"]]


def _cmd_train(cfg: dict, out: Path) -> tuple[dict, list[str]]:
    _require(cfg, "train", "forces")
    lam_e = cfg["lambda_energy"]
    lam_f = 1.0 - lam_e if cfg["lambda_force"] is None else cfg["lambda_force"]
    loss_cfg = LossConfig(lambda_force=lam_f, lambda_energy=lam_e,
                          batch_size=cfg["batch_size"],
                          max_epochs=cfg["max_epochs"],
                          learning_rate=cfg["learning_rate"], seed=cfg["seed"])
    records = [load_force_record(p) for p in cfg["forces"]]
    configs = np.vstack([r.configs for r in records])
    forces = np.vstack([r.forces for r in records])
    inputs = {p: None for p in cfg["forces"]}
    g_total = None
    if cfg["targets"] is not None:
        targets = load_targets(cfg["targets"])
        if targets.n_frames != configs.shape[0]:
            raise ValidationError(
                f"targets have {targets.n_frames} frames, forces have "
                f"{configs.shape[0]}"
            )
        g_total = targets.g_total
        inputs[cfg["targets"]] = None
    elif lam_e > 0.0:
        raise ValidationError("lambda_energy > 0 requires --targets")
    if cfg["prior_stiffness"] > 0.0:
        prior = PriorTerm(kind="harmonic",
                          center=np.zeros(configs.shape[1]),
                          stiffness=cfg["prior_stiffness"])
    else:
        prior = PriorTerm(kind="none")
    data = TrainingSet(configs=configs, forces=forces, g_total=g_total)
    model, report = train(data, loss_cfg, prior=prior,
                          n_basis=cfg["n_basis"], n_hidden=cfg["n_hidden"])
    doc = {"potential": model.to_dict(), "prior": prior.to_dict(),
           "loss_config": {"lambda_force": lam_f, "lambda_energy": lam_e}}
    with open(out / cfg["output"], "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")
    report.to_csv(out / "train_report.csv")
    report.to_json(out / "train_report.json")
    return inputs, [cfg["output"], "train_report.csv", "train_report.json"]


def _load_model_document(path) -> CompositeSystem:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    model = RbfNetPotential.from_dict(doc["potential"])
    prior = PriorTerm.from_dict(doc["prior"])
    return CompositeSystem(model, prior)


def _parse_positions(text: str) -> np.ndarray:
    rows = []
    for part in text.split(";"):
        part = part.strip()
        if part:
            rows.append([float(v) for v in part.split(",")])
    if not rows:
        raise ValidationError(f"no positions parsed from {text!r}")
    return np.array(rows)


def _cmd_sample(cfg: dict, out: Path) -> tuple[dict, list[str]]:
    if (cfg["model"] is None) == (cfg["system"] is None):
        raise ValidationError("'sample' needs exactly one of --model or --system")
    inputs: dict = {}
    if cfg["model"] is not None:
        system = _load_model_document(cfg["model"])
        inputs[cfg["model"]] = None
        if cfg["initial_positions"] is None:
            raise ValidationError(
                "--initial-positions is required when sampling a trained model"
            )
        starts = _parse_positions(cfg["initial_positions"])
    else:
        system = ReferenceLandscape.by_name(cfg["system"])
        starts = (_parse_positions(cfg["initial_positions"])
                  if cfg["initial_positions"] is not None
                  else system.default_starts(cfg["chains"]))
    sim_cfg = LangevinConfig(n_steps=cfg["steps"], initial_positions=starts,
                             dt=cfg["dt"], gamma=cfg["gamma"],
                             temperature=cfg["temperature"],
                             stride=cfg["stride"], seed=cfg["seed"])
    result = simulate(system, sim_cfg)
    outputs = []
    for i, (traj, rec) in enumerate(zip(result.trajectories, result.force_records)):
        tname = f"{cfg['prefix']}{i:03d}.femk"
        fname = f"{cfg['prefix']}{i:03d}.femf"
        save_trajectory(traj, out / tname)
        save_force_record(rec, out / fname, dt=traj.dt)
        outputs.extend([tname, fname])
    return inputs, outputs


def _cmd_evaluate(cfg: dict, out: Path) -> tuple[dict, list[str]]:
    _require(cfg, "evaluate", "truth", "model_data", "tica")
    tica_model = TICA.from_json(cfg["tica"])
    truth_y = _project_files(tica_model, cfg["truth"], k=2)
    model_y = _project_files(tica_model, cfg["model_data"], k=2)
    report = kl_divergence_2d(truth_y, model_y, nx=cfg["bins"], ny=cfg["bins"],
                              epsilon=cfg["epsilon"])
    report.to_json(out / cfg["output"])
    truth_grid = mean_energy_grid(truth_y, np.ones(truth_y.shape[0]),
                                  nx=cfg["bins"], ny=cfg["bins"])
    model_grid = mean_energy_grid(model_y, np.ones(model_y.shape[0]),
                                  nx=cfg["bins"], ny=cfg["bins"])
    save_grid_csv(truth_grid, out / "truth_density.csv")
    save_grid_csv(model_grid, out / "model_density.csv")
    inputs = {p: None for p in cfg["truth"] + cfg["model_data"]}
    inputs[cfg["tica"]] = None
    return inputs, [cfg["output"], "truth_density.csv", "model_density.csv"]


def _cmd_landscape(cfg: dict, out: Path) -> tuple[dict, list[str]]:
    _require(cfg, "landscape", "trajectory", "tica", "targets")
    tica_model = TICA.from_json(cfg["tica"])
    y = _project_files(tica_model, cfg["trajectory"], k=2)
    targets = load_targets(cfg["targets"])
    if targets.n_frames != y.shape[0]:
        raise ValidationError(
            f"targets have {targets.n_frames} frames, trajectories have {y.shape[0]}"
        )
    grid = mean_energy_grid(y, targets.g_total, nx=cfg["bins"], ny=cfg["bins"])
    save_grid_csv(grid, out / cfg["output"])
    inputs = {p: None for p in cfg["trajectory"]}
    inputs[cfg["tica"]] = None
    inputs[cfg["targets"]] = None
    return inputs, [cfg["output"]]


def _cmd_msm(cfg: dict, out: Path) -> tuple[dict, list[str]]:
    _require(cfg, "msm", "trajectory", "tica")
    tica_model = TICA.from_json(cfg["tica"])
    ys = []
    for path in cfg["trajectory"]:
        traj = load_trajectory(path)
        _check_tica_compatible(tica_model, traj, path)
        ys.append(tica_model.project(traj, cfg["components"]))
    model = MarkovStateModel(n_states=cfg["n_states"], lag_frames=cfg["lag"],
                             seed=cfg["seed"],
                             temperature=cfg["temperature"]).fit(ys)
    model.to_json(out / cfg["output"])
    inputs = {p: None for p in cfg["trajectory"]}
    inputs[cfg["tica"]] = None
    return inputs, [cfg["output"]]


def _cmd_pipeline(cfg: dict, out: Path) -> tuple[dict, list[str]]:
    lam_e = cfg["lambda_energy"]
    lam_f = 1.0 - lam_e if cfg["lambda_force"] is None else cfg["lambda_force"]
    landscape = ReferenceLandscape.by_name(cfg["system"])
    outputs: list[str] = []

    # 1. ground-truth ensemble from the reference landscape
    starts = landscape.default_starts(cfg["chains"])
    truth_cfg = LangevinConfig(n_steps=cfg["steps"], initial_positions=starts,
                               dt=cfg["dt"], gamma=cfg["gamma"],
                               temperature=cfg["temperature"],
                               stride=cfg["stride"], seed=cfg["seed"])
    truth = simulate(landscape, truth_cfg)
    (out / "truth").mkdir(exist_ok=True)
    for i, (traj, rec) in enumerate(zip(truth.trajectories, truth.force_records)):
        save_trajectory(traj, out / "truth" / f"chain{i:03d}.femk")
        save_force_record(rec, out / "truth" / f"chain{i:03d}.femf", dt=traj.dt)
        outputs.extend([f"truth/chain{i:03d}.femk", f"truth/chain{i:03d}.femf"])

    # 2. slow coordinates from the truth ensemble
    k = min(cfg["components"], landscape.input_dim)
    tica_model = TICA(lag_frames=cfg["lag"], n_components=k).fit(truth.trajectories)
    tica_model.to_json(out / "tica.json")
    outputs.append("tica.json")

    # 3. Boltzmann-inverted marginal free-energy targets
    configs, forces = truth.concatenated()
    y = np.vstack([tica_model.transform(t) for t in truth.trajectories])
    density = fit_marginals(y, kind=cfg["kind"], n_bins=cfg["bins"])
    targets = boltzmann_invert(density, y, cfg["temperature"])
    save_targets(targets, out / "targets.feme")
    outputs.append("targets.feme")

    # 4. train the potential with the requested loss mix
    loss_cfg = LossConfig(lambda_force=lam_f, lambda_energy=lam_e,
                          batch_size=cfg["batch_size"],
                          max_epochs=cfg["max_epochs"],
                          learning_rate=cfg["learning_rate"], seed=cfg["seed"])
    prior = (PriorTerm(kind="harmonic", center=np.zeros(landscape.input_dim),
                       stiffness=cfg["prior_stiffness"])
             if cfg["prior_stiffness"] > 0.0 else PriorTerm(kind="none"))
    data = TrainingSet(configs=configs, forces=forces, g_total=targets.g_total)
    model, report = train(data, loss_cfg, prior=prior,
                          n_basis=cfg["n_basis"], n_hidden=cfg["n_hidden"])
    doc = {"potential": model.to_dict(), "prior": prior.to_dict(),
           "loss_config": {"lambda_force": lam_f, "lambda_energy": lam_e}}
    with open(out / "model.json", "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")
    report.to_csv(out / "train_report.csv")
    report.to_json(out / "train_report.json")
    outputs.extend(["model.json", "train_report.csv", "train_report.json"])

    # 5. inference ensemble from the learned potential
    model_cfg = LangevinConfig(n_steps=cfg["steps"], initial_positions=starts,
                               dt=cfg["dt"], gamma=cfg["gamma"],
                               temperature=cfg["temperature"],
                               stride=cfg["stride"], seed=cfg["seed"] + 1000)
    inference = simulate(CompositeSystem(model, prior), model_cfg)
    (out / "model_sample").mkdir(exist_ok=True)
    for i, traj in enumerate(inference.trajectories):
        save_trajectory(traj, out / "model_sample" / f"chain{i:03d}.femk")
        outputs.append(f"model_sample/chain{i:03d}.femk")

    # 6. KL divergence on the first two slow components + landscape grid
    k_eval = min(2, k)
    truth_y = np.vstack([tica_model.project(t, k_eval) for t in truth.trajectories])
    model_y = np.vstack([tica_model.project(t, k_eval)
                         for t in inference.trajectories])
    if k_eval == 1:
        truth_y = np.column_stack([truth_y, np.zeros(truth_y.shape[0])])
        model_y = np.column_stack([model_y, np.zeros(model_y.shape[0])])
    kl = kl_divergence_2d(truth_y, model_y, nx=cfg["bins"], ny=cfg["bins"],
                          epsilon=cfg["epsilon"])
    kl.to_json(out / "kl_report.json")
    grid = mean_energy_grid(truth_y, targets.g_total, nx=cfg["bins"], ny=cfg["bins"])
    save_grid_csv(grid, out / "landscape.csv")
    outputs.extend(["kl_report.json", "landscape.csv"])
    return {}, outputs


_COMMANDS = {
    "featurize": _cmd_featurize,
    "tica": _cmd_tica,
    "targets": _cmd_targets,
    "train": _cmd_train,
    "sample": _cmd_sample,
    "evaluate": _cmd_evaluate,
    "landscape": _cmd_landscape,
    "msm": _cmd_msm,
    "pipeline": _cmd_pipeline,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _resolve_config(args.command, args)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        inputs, outputs = _COMMANDS[args.command](cfg, out)
        _write_manifest(out, args.command, cfg, inputs, outputs)
    except SystemExit as exc:
        return int(exc.code or 0)
    except NumericalError as exc:
        print(f"femkit: numerical failure: {exc}", file=sys.stderr)
        return 2
    except (ValidationError, FileNotFoundError, IsADirectoryError,
            PermissionError, json.JSONDecodeError) as exc:
        print(f"femkit: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
