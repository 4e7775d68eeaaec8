"""Command-line entry point tying the library into reproducible runs.

Subcommands: fom-run, train, train-lasdi, predict, eval-grid, speedup.
Exit codes: 0 success, 1 config/validation error, 2 partial failure,
3 numerical nonconvergence or divergence.

Checkpoints, audit logs, loss histories, and heatmap CSVs are bit-identical
across reruns of the same (config, seed); wall-clock readings and host
details go only into the separate metadata and timing files.
"""

from __future__ import annotations

import argparse
import csv
import json
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import burgers, greedy, rom
from .checkpoint import load_checkpoint, save_checkpoint
from .config import RunConfig, load_config
from .errors import ConfigError, DivergenceError, NonConvergenceError
from .mlp import encode, init_mlp
from .training import DbEntry, TrainingDatabase, train_lasdi_baseline
from .dynamics import DiModel, integrate_latent, interpolate_coeffs

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_PARTIAL = 2
EXIT_NUMERICAL = 3


def _parse_mu(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")], dtype=float)
    except ValueError:
        raise ConfigError(f"--mu expects comma-separated floats, got {text!r}") from None


def _check_mu(mu: np.ndarray, cfg: RunConfig) -> np.ndarray:
    if mu.shape != (cfg.space.dim,):
        raise ConfigError(f"--mu needs {cfg.space.dim} components, got {mu.size}")
    lo, hi = cfg.space.bounds[:, 0], cfg.space.bounds[:, 1]
    if np.any(mu < lo) or np.any(mu > hi):
        raise ConfigError(f"mu {mu.tolist()} outside the parameter domain")
    return mu


def _write_loss_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "loss", "loss_recon", "loss_zdot", "loss_udot"])
        for epoch, total, recon, zdot, udot in rows:
            writer.writerow([int(epoch), repr(float(total)), repr(float(recon)),
                             repr(float(zdot)), repr(float(udot))])


def _write_metadata(outdir: Path, cfg: RunConfig, command: str,
                    wall_seconds: float, extra: dict | None = None) -> None:
    doc = {
        "command": command,
        "resolved_config": cfg.raw,
        "wall_seconds": wall_seconds,
        "host": {
            "platform": platform.platform(),
            "python": platform.python_version(),
            "machine": platform.machine(),
        },
    }
    doc.update(extra or {})
    (outdir / "run_metadata.json").write_text(json.dumps(doc, indent=2))


def _load_compatible_checkpoint(path, cfg: RunConfig):
    enc, dec, models = load_checkpoint(path)
    if enc.in_dim != cfg.fom.n_u or dec.out_dim != cfg.fom.n_u:
        raise ConfigError(
            f"checkpoint state dimension {enc.in_dim} does not match config "
            f"2*nx*ny = {cfg.fom.n_u}")
    if any(np.asarray(m.owner_mu).size != cfg.space.dim for m in models):
        raise ConfigError("checkpoint anchor dimension does not match parameter space")
    return enc, dec, models


# --- subcommands -------------------------------------------------------------

def cmd_fom_run(cfg: RunConfig, args) -> int:
    mu = _check_mu(_parse_mu(args.mu), cfg)
    t0 = time.perf_counter()
    traj = burgers.simulate(mu, cfg.fom)
    elapsed = time.perf_counter() - t0
    out = Path(args.out or f"fom_{args.mu.replace(',', '_')}.glsd")
    burgers.save_trajectory(traj, out)
    print(f"wrote {out}: {traj.snapshots.shape[0]} snapshots of length "
          f"{traj.n_u}, dt={traj.dt:g}, solve {elapsed:.2f} s")
    return EXIT_OK


def cmd_train(cfg: RunConfig, args) -> int:
    outdir = Path(args.out) if args.out else cfg.output_dir
    outdir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    enc, dec, state = greedy.greedy_train(
        cfg.space, cfg.fom, cfg.arch, cfg.basis, cfg.train, cfg.greedy,
        cfg.seed, k=cfg.k, p=cfg.p, activation=cfg.activation,
        log=lambda msg: print(msg, file=sys.stderr))
    wall = time.perf_counter() - t0
    save_checkpoint(outdir / "checkpoint.json", enc, dec, state.db.di_models)
    with open(outdir / "audit.jsonl", "w") as fh:
        for record in state.audit:
            fh.write(json.dumps(record) + "\n")
    _write_loss_csv(outdir / "loss_history.csv", state.loss_history)
    _write_metadata(outdir, cfg, "train", wall,
                    {"n_sampled": len(state.db),
                     "sampled_mus": [np.asarray(m).tolist() for m in state.sampled]})
    print(f"trained with {len(state.db)} samples -> {outdir}")
    return EXIT_OK


def _uniform_samples(cfg: RunConfig) -> list[np.ndarray]:
    axes = [np.linspace(lo, hi, n)
            for (lo, hi), n in zip(cfg.space.bounds, cfg.lasdi_grid)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return list(np.stack([m.ravel() for m in mesh], axis=1))


def cmd_train_lasdi(cfg: RunConfig, args) -> int:
    outdir = Path(args.out) if args.out else cfg.output_dir
    outdir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    root = np.random.SeedSequence(cfg.seed)
    ss_enc, ss_dec, _, ss_batch = root.spawn(4)
    enc = init_mlp(cfg.arch, cfg.activation, seed=ss_enc)
    dec = init_mlp(list(reversed(cfg.arch)), cfg.activation, seed=ss_dec)
    n_z = cfg.arch[-1]
    db = TrainingDatabase()
    cache = outdir / "fom_cache" if args.cache else None
    for mu in _uniform_samples(cfg):
        print(f"simulating training sample {mu.tolist()}", file=sys.stderr)
        traj = rom.fom_solution(mu, cfg.fom, cache)
        xi0 = np.zeros((cfg.basis.n_basis(n_z), n_z))
        db.add(DbEntry(mu=mu, trajectory=traj,
                       di=DiModel(xi=xi0, spec=cfg.basis, owner_mu=mu)))
    history = train_lasdi_baseline(db, enc, dec, cfg.train,
                                   cfg.lasdi_recon_epochs, np.random.default_rng(ss_batch))
    wall = time.perf_counter() - t0
    save_checkpoint(outdir / "checkpoint.json", enc, dec, db.di_models)
    _write_loss_csv(outdir / "loss_history.csv", history)
    _write_metadata(outdir, cfg, "train-lasdi", wall,
                    {"n_sampled": len(db),
                     "sampled_mus": [np.asarray(e.mu).tolist() for e in db.entries]})
    print(f"baseline trained with {len(db)} samples -> {outdir}")
    return EXIT_OK


def cmd_predict(cfg: RunConfig, args) -> int:
    mu = _check_mu(_parse_mu(args.mu), cfg)
    enc, dec, models = _load_compatible_checkpoint(args.checkpoint, cfg)
    traj = rom.predict(mu, enc, dec, models, cfg.space, cfg.fom, cfg.k, cfg.p)
    out = Path(args.out or f"rom_{args.mu.replace(',', '_')}.glsd")
    burgers.save_trajectory(traj, out)
    print(f"wrote {out}: {traj.snapshots.shape[0]} snapshots")
    if args.latent_out:
        truth = rom.fom_solution(mu, cfg.fom, args.cache_dir)
        z_enc = encode(truth.snapshots, enc)
        model = interpolate_coeffs(mu, models, min(cfg.k, len(models)),
                                   cfg.p, cfg.space)
        z_di = integrate_latent(z_enc[0], model, cfg.fom.dt, cfg.fom.n_t)
        _write_latent_csv(args.latent_out, cfg.fom.dt, z_enc, z_di)
        print(f"wrote {args.latent_out}")
    return EXIT_OK


def _write_latent_csv(path, dt, z_enc, z_di) -> None:
    n_z = z_enc.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + [f"z{i + 1}" for i in range(n_z)]
                        + [f"zhat{i + 1}" for i in range(n_z)])
        for n in range(z_enc.shape[0]):
            writer.writerow([repr(n * dt)]
                            + [repr(float(v)) for v in z_enc[n]]
                            + [repr(float(v)) for v in z_di[n]])


def cmd_eval_grid(cfg: RunConfig, args) -> int:
    enc, dec, models = _load_compatible_checkpoint(args.checkpoint, cfg)
    cache = args.cache_dir or (cfg.output_dir / "fom_cache")
    table = rom.evaluate_grid(enc, dec, models, cfg.space, cfg.fom,
                              cfg.k, cfg.p, cache_dir=cache,
                              n_ts_fraction=cfg.greedy.n_ts_fraction,
                              window=cfg.greedy.indicator_window,
                              log=lambda msg: print(msg, file=sys.stderr))
    out = Path(args.out or "heatmap.csv")
    table.to_csv(out)
    print(f"wrote {out}: {table.mus.shape[0]} points, grid max error "
          f"{table.grid_max_error:.4g}, {len(table.failed)} failures")
    return EXIT_PARTIAL if table.failed else EXIT_OK


def cmd_speedup(cfg: RunConfig, args) -> int:
    mu = _check_mu(_parse_mu(args.mu), cfg)
    enc, dec, models = _load_compatible_checkpoint(args.checkpoint, cfg)
    report = rom.measure_speedup(mu, enc, dec, models, cfg.space, cfg.fom,
                                 n_trials=args.n_trials, k=cfg.k, p=cfg.p)
    report["host"] = {"platform": platform.platform(),
                      "python": platform.python_version()}
    out = Path(args.out or "timing.json")
    out.write_text(json.dumps(report, indent=2))
    print(f"wrote {out}: speedup {report['speedup']:.1f}x "
          f"(fom {report['fom_median_seconds']:.3f} s, "
          f"rom {report['rom_median_seconds']:.4f} s)")
    return EXIT_OK


# --- driver -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latentrom",
        description="Adaptive-greedy latent-dynamics surrogate for 2D Burgers")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, **flags):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="run configuration JSON")
        if flags.get("mu"):
            p.add_argument("--mu", required=True, help="parameter as 'a,w'")
        if flags.get("checkpoint"):
            p.add_argument("--checkpoint", required=True)
        p.add_argument("--out", default=None)
        p.set_defaults(func=func)
        return p

    add("fom-run", cmd_fom_run, mu=True)
    add("train", cmd_train)
    p = add("train-lasdi", cmd_train_lasdi)
    p.add_argument("--cache", action="store_true",
                   help="cache training FOM solves under the output directory")
    p = add("predict", cmd_predict, mu=True, checkpoint=True)
    p.add_argument("--latent-out", default=None,
                   help="also write an encoder-vs-integrated latent CSV")
    p.add_argument("--cache-dir", default=None)
    p = add("eval-grid", cmd_eval_grid, checkpoint=True)
    p.add_argument("--cache-dir", default=None)
    p = add("speedup", cmd_speedup, mu=True, checkpoint=True)
    p.add_argument("--n-trials", type=int, default=5)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        return args.func(cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NonConvergenceError, DivergenceError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
