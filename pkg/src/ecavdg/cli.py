"""Batch driver: run one experiment or a convergence study from a YAML config.

Usage::

    ecavdg run config.yaml [--override key=value ...]
    ecavdg converge config.yaml [--override key=value ...]

Relative output directories are placed under ``$ECAVDG_OUTPUT_ROOT`` when it
is set. Exit codes: 0 success, 2 configuration error, 3 simulation failure.
"""

from __future__ import annotations

import argparse
import copy
import csv
import dataclasses
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import yaml

from . import __version__, euler, problems, solver
from .dg import DGSpace
from .reference import FilterKernel, build_reference_element, filter_diagonal
from .viscosity import MODEL_KINDS, ViscosityModelSpec

logger = logging.getLogger(__name__)

ENV_OUTPUT_ROOT = "ECAVDG_OUTPUT_ROOT"
FLOAT_FMT = "%.17g"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FAILURE = 3


class ConfigError(ValueError):
    """Invalid run configuration."""


@dataclass
class ControllerConfig:
    abs_tol: float = 1e-6
    rel_tol: float = 1e-4
    # None disables the convective step cap
    cfl: Optional[float] = None


@dataclass
class ConvergenceConfig:
    N: list = field(default_factory=lambda: [1, 2, 3, 4])
    h: list = field(default_factory=lambda: [1 / 8, 1 / 16, 1 / 32])


@dataclass
class RunConfig:
    """Fully resolved run configuration.

    ``models`` holds one dict per viscosity model, ``{"kind": ...}`` plus
    ``"filter"`` and ``"cutoff"`` for SVV. ``cells`` is an int in 1D and a
    ``[nx, ny]`` list in 2D.
    """

    problem: str
    N: int
    cells: object
    models: list
    t_end: float
    output_dir: str
    snapshot_interval: Optional[float]
    controller: ControllerConfig
    gamma: float
    seed: int
    convergence: ConvergenceConfig

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data):
        return resolve_config(data)

    def model_specs(self):
        out = []
        for m in self.models:
            kernel = FilterKernel(m["filter"], m["cutoff"]) if m["kind"] == "svv" else None
            out.append(ViscosityModelSpec(m["kind"], kernel))
        return out

    def problem_spec(self):
        return dataclasses.replace(problems.get_problem(self.problem), gamma=self.gamma)


# config parsing -------------------------------------------------------------

_TOP_KEYS = {"problem", "N", "cells", "models", "t_end", "output_dir", "snapshot_interval",
             "controller", "gamma", "seed", "convergence"}


def _number(value, name, positive=True, allow_none=False):
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value) or (positive and value <= 0):
        raise ConfigError(f"{name} must be a positive finite number, got {value!r}")
    return value


def _integer(value, name, lo=1):
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    if value < lo:
        raise ConfigError(f"{name} must be >= {lo}, got {value}")
    return int(value)


def _resolve_models(raw, N):
    if raw is None:
        raw = ["laplacian"]
    if not isinstance(raw, list) or not raw:
        raise ConfigError("models must be a non-empty list")
    out = []
    for m in raw:
        if isinstance(m, str):
            m = {"kind": m}
        if not isinstance(m, dict) or "kind" not in m:
            raise ConfigError(f"model entries need a 'kind', got {m!r}")
        extra = set(m) - {"kind", "filter", "cutoff"}
        if extra:
            raise ConfigError(f"unknown model keys {sorted(extra)}")
        kind = m["kind"]
        if kind not in MODEL_KINDS:
            raise ConfigError(f"unknown viscosity model {kind!r}; expected one of {MODEL_KINDS}")
        if kind != "svv":
            if m.get("filter") is not None or m.get("cutoff") is not None:
                raise ConfigError(f"filter settings only apply to svv, not {kind!r}")
            out.append({"kind": kind})
            continue
        spec = ViscosityModelSpec("svv").resolved(N)
        filt = m.get("filter") or spec.kernel.kind
        cutoff = m.get("cutoff")
        cutoff = spec.kernel.cutoff if cutoff is None else _integer(cutoff, "cutoff", lo=0)
        try:
            kernel = FilterKernel(filt, cutoff)
            filter_diagonal(kernel, N)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        out.append({"kind": "svv", "filter": kernel.kind, "cutoff": kernel.cutoff})
    return out


def _resolve_output_dir(path, problem):
    if path is None:
        path = os.path.join("runs", problem)
    if not isinstance(path, str) or not path:
        raise ConfigError("output_dir must be a non-empty string")
    root = os.environ.get(ENV_OUTPUT_ROOT)
    if root and not os.path.isabs(path):
        path = os.path.join(root, path)
    return path


def resolve_config(raw):
    """Validate a config mapping and fill in problem defaults.

    Raises
    ------
    ConfigError
        On unknown keys, bad values or a mismatch with the problem dimension.
    """
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    name = raw.get("problem")
    if name not in problems.PROBLEMS:
        raise ConfigError(f"unknown problem {name!r}; expected one of {sorted(problems.PROBLEMS)}")
    pb = problems.get_problem(name)

    N = _integer(raw.get("N", 3), "N")
    if N > 40:
        raise ConfigError("N must be <= 40")

    cells = raw.get("cells", 16 if pb.dim == 1 else [16, 16])
    if pb.dim == 1:
        if isinstance(cells, list):
            if len(cells) != 1:
                raise ConfigError(f"{name} is 1D; cells must be a single integer")
            cells = cells[0]
        cells = _integer(cells, "cells")
    else:
        if not isinstance(cells, list):
            cells = [cells, cells]
        if len(cells) != pb.dim:
            raise ConfigError(f"{name} is {pb.dim}D; cells needs {pb.dim} entries")
        cells = [_integer(c, "cells") for c in cells]

    models = _resolve_models(raw.get("models"), N)
    t_end = raw.get("t_end")
    t_end = _number(pb.t_end if t_end is None else t_end, "t_end")
    snap = _number(raw.get("snapshot_interval"), "snapshot_interval", allow_none=True)

    ctrl_raw = raw.get("controller") or {}
    if not isinstance(ctrl_raw, dict):
        raise ConfigError("controller must be a mapping")
    extra = set(ctrl_raw) - {"abs_tol", "rel_tol", "cfl"}
    if extra:
        raise ConfigError(f"unknown controller keys {sorted(extra)}")
    ctrl = ControllerConfig(
        abs_tol=_number(ctrl_raw.get("abs_tol", 1e-6), "controller.abs_tol"),
        rel_tol=_number(ctrl_raw.get("rel_tol", 1e-4), "controller.rel_tol"),
        cfl=_number(ctrl_raw["cfl"], "controller.cfl", allow_none=True) if "cfl" in ctrl_raw else pb.cfl,
    )

    gamma = _number(raw.get("gamma", pb.gamma), "gamma")
    if gamma <= 1:
        raise ConfigError("gamma must exceed 1")
    seed = _integer(raw.get("seed", 0), "seed", lo=0)

    conv_raw = raw.get("convergence") or {}
    if not isinstance(conv_raw, dict) or set(conv_raw) - {"N", "h"}:
        raise ConfigError("convergence takes only 'N' and 'h' lists")
    conv = ConvergenceConfig()
    if "N" in conv_raw:
        if not isinstance(conv_raw["N"], list) or not conv_raw["N"]:
            raise ConfigError("convergence.N must be a non-empty list")
        conv.N = [_integer(n, "convergence.N") for n in conv_raw["N"]]
    if "h" in conv_raw:
        if not isinstance(conv_raw["h"], list) or not conv_raw["h"]:
            raise ConfigError("convergence.h must be a non-empty list")
        conv.h = [_number(h, "convergence.h") for h in conv_raw["h"]]

    return RunConfig(
        problem=name, N=N, cells=cells, models=models, t_end=t_end,
        output_dir=_resolve_output_dir(raw.get("output_dir"), name),
        snapshot_interval=snap, controller=ctrl, gamma=gamma, seed=seed, convergence=conv,
    )


def apply_overrides(raw, overrides):
    """Apply ``dotted.key=value`` overrides; values are parsed as YAML scalars/lists."""
    raw = copy.deepcopy(raw)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, value = item.split("=", 1)
        try:
            parsed = yaml.safe_load(value)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse override {item!r}: {exc}") from None
        parts = key.strip().split(".")
        node = raw
        for p in parts[:-1]:
            if not isinstance(node.get(p), dict):
                node[p] = {}
            node = node[p]
        node[parts[-1]] = parsed
    return raw


def load_config(path, overrides=()):
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path!r}: {exc}") from None
    return resolve_config(apply_overrides(raw or {}, overrides))


# output ---------------------------------------------------------------------

def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    return FLOAT_FMT % value


def write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row.get(c)) for c in columns])


def _write_json(path, data):
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def snapshot_name(t):
    return f"snapshot_{t:.6f}.csv"


def write_snapshot(path, space, u, report, labels, gamma):
    """Per-node snapshot; element quantities are repeated on each node."""
    x = space.x
    cols, data = [], []
    if space.dim == 1:
        cols.append("x")
        data.append(x.ravel())
    else:
        cols += ["x", "y"]
        data += [x[..., 0].ravel(), x[..., 1].ravel()]
    cols.append("element")
    data.append(np.repeat(np.arange(space.K), space.Np).astype(float))
    mom = ("momentum_x", "momentum_y")[: space.dim]
    cols += ["rho", *mom, "energy", "pressure", "temperature"]
    data.append(u[..., 0].ravel())
    data += [u[..., 1 + i].ravel() for i in range(space.dim)]
    data.append(u[..., -1].ravel())
    data.append(euler.pressure(u, gamma).ravel())
    data.append(problems.temperature(u, gamma).ravel())
    cols.append("delta")
    data.append(np.repeat(report.delta, space.Np))
    for j, lab in enumerate(labels):
        cols.append(f"eps_{lab}")
        data.append(np.repeat(report.eps[:, j], space.Np))
    np.savetxt(path, np.column_stack(data), fmt=FLOAT_FMT, delimiter=",",
               header=",".join(cols), comments="")


def _manifest(cfg, command, **extra):
    out = {"software": "ecavdg", "version": __version__, "command": command, "config": cfg.to_dict()}
    out.update(extra)
    return out


# commands -------------------------------------------------------------------

def build_space(pb, N, cells):
    return DGSpace(pb.mesh(cells), build_reference_element(N))


def make_controller(cfg):
    c = cfg.controller
    return solver.StepController(abs_tol=c.abs_tol, rel_tol=c.rel_tol, cfl=c.cfl)


def run(cfg):
    """Execute one run and write its files. Returns an exit code."""
    pb = cfg.problem_spec()
    space = build_space(pb, cfg.N, cfg.cells)
    models = cfg.model_specs()
    labels = solver.model_labels([m.kind for m in models])
    os.makedirs(cfg.output_dir, exist_ok=True)

    t0 = 0.0
    errors = []

    def on_sample(t, state, report):
        if pb.exact is not None:
            err = problems.l2_error(state.values, pb.exact_state(space.x, t), space)
            errors.append(float(err[0]))
        if cfg.snapshot_interval is not None or t == t0 or t >= cfg.t_end:
            write_snapshot(os.path.join(cfg.output_dir, snapshot_name(t)), space,
                           state.values, report, labels, pb.gamma)
        return False

    def write_diagnostics(rows):
        cols = list(rows[0]) if rows else ["time", "dt"]
        if pb.exact is not None:
            cols.append("l2_error_rho")
            for row, e in zip(rows, errors):
                row["l2_error_rho"] = e
        write_csv(os.path.join(cfg.output_dir, "diagnostics.csv"), cols, rows)

    u0 = solver.State(pb.initial_on(space), t0)
    manifest_path = os.path.join(cfg.output_dir, "run.json")
    try:
        res = solver.integrate(u0, cfg.t_end, space, models, controller=make_controller(cfg),
                               gamma=pb.gamma, callbacks=[on_sample],
                               sample_interval=cfg.snapshot_interval)
    except solver.SimulationFailure as exc:
        write_diagnostics(exc.diagnostics)
        record = exc.record()
        _write_json(manifest_path, _manifest(cfg, "run", status="failed", failure=record))
        print(json.dumps({"status": "failed", **record}, sort_keys=True), file=sys.stderr)
        return EXIT_FAILURE

    write_diagnostics(res.diagnostics)
    summary = {
        "final_time": res.state.time,
        "n_steps": res.n_steps,
        "n_rejected": res.n_rejected,
        "max_eps": {lab: float(res.max_eps[j]) for j, lab in enumerate(labels)},
    }
    if errors:
        summary["l2_error_rho"] = errors[-1]
    _write_json(manifest_path, _manifest(cfg, "run", status="ok", failure=None, summary=summary))
    return EXIT_OK


def convergence_rows(cfg):
    """Density L2 errors at ``t_end`` for each (N, h); failed rows carry ``None``."""
    pb = cfg.problem_spec()
    models = cfg.model_specs()
    rows = []
    for N in cfg.convergence.N:
        prev = None
        for h in cfg.convergence.h:
            space = build_space(pb, N, pb.cells_for(h))
            try:
                res = solver.integrate(solver.State(pb.initial_on(space)), cfg.t_end, space,
                                       models, controller=make_controller(cfg), gamma=pb.gamma)
                err = float(problems.l2_error(res.state.values, pb.exact_state(space.x, cfg.t_end), space)[0])
            except (solver.SimulationFailure, RuntimeError) as exc:
                logger.warning("N=%d h=%g failed: %s", N, h, exc)
                err = None
            rate = None
            if prev is not None and err is not None and prev[1] is not None:
                rate = math.log(prev[1] / err) / math.log(prev[0] / h)
            rows.append({"N": N, "h": h, "L2_error": err, "rate": rate})
            prev = (h, err)
    return rows


def converge(cfg):
    pb = cfg.problem_spec()
    if pb.exact is None:
        raise ConfigError(f"problem {cfg.problem!r} has no exact solution to converge against")
    os.makedirs(cfg.output_dir, exist_ok=True)
    rows = convergence_rows(cfg)
    write_csv(os.path.join(cfg.output_dir, "convergence.csv"), ["N", "h", "L2_error", "rate"], rows)
    failed = [r for r in rows if r["L2_error"] is None]
    _write_json(os.path.join(cfg.output_dir, "run.json"),
                _manifest(cfg, "converge", status="failed" if failed else "ok",
                          failure=[{"N": r["N"], "h": r["h"]} for r in failed] or None))
    return EXIT_FAILURE if failed else EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="ecavdg", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (("run", "run one experiment"), ("converge", "run a convergence study")):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("config", help="YAML configuration file")
        sp.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config entry (dotted keys, YAML values); repeatable")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args.override)
        if args.command == "run":
            return run(cfg)
        return converge(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
