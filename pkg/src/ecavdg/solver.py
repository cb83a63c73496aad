"""Semi-discrete DGSEM right-hand side and adaptive SSPRK(4,3) time stepping."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import euler
from .viscosity import compute_all, parse_models

logger = logging.getLogger(__name__)


@dataclass
class State:
    """Nodal conservative variables, shape ``(K, Np, n_vars)``, at ``time``."""

    values: np.ndarray
    time: float = 0.0

    def copy(self):
        return State(self.values.copy(), self.time)


class SimulationFailure(RuntimeError):
    """Unrecoverable inadmissible state during time integration."""

    def __init__(self, cause, time, diagnostics=None):
        self.cause = cause
        self.time = time
        self.diagnostics = diagnostics or []
        super().__init__(f"simulation failed at t={time:.6e}: {cause}")

    def record(self):
        rec = self.cause.record() if hasattr(self.cause, "record") else {"reason": str(self.cause)}
        rec["time"] = float(self.time)
        return rec


def convective_rhs(u, space, gamma=euler.GAMMA):
    """Weak-form DGSEM residual with LLF interface fluxes.

    ``du/dt = sum_i M^{-1} D_i^T M f_i(u) - M^{-1} <f*_n, w>``.
    """
    p = euler.pressure(u, gamma)
    euler.check_admissible(u, gamma)
    out = 0.0
    for i in range(space.dim):
        out = out + space.weak_deriv(euler.flux(u, i, gamma, p), i)
    uf = space.face_values(u)
    fstar = euler.llf_flux(uf, space.exterior(uf), space.normals[None, :, None, :], gamma)
    return out - space.lift(fstar)


def full_rhs(u, space, models, gamma=euler.GAMMA):
    """Convective residual plus all entropy-correction viscous terms.

    Returns ``(rhs, report)``.
    """
    rhs = convective_rhs(u, space, gamma)
    report, g = compute_all(models, u, space, gamma)
    return rhs + g, report


# time integration ---------------------------------------------------------

# error weights b - b_hat; b_hat = (1/4, 1/4, 1/4, 1/4) is second order
_ERR_WEIGHTS = (1 / 6 - 1 / 4, 1 / 6 - 1 / 4, 1 / 6 - 1 / 4, 1 / 2 - 1 / 4)


def ssprk43_step(u, dt, rhs_fn, k1=None):
    """One step of the four-stage third-order SSP Runge-Kutta method.

    Returns ``(u_new, err)`` where ``err`` is the difference between the
    third-order solution and an embedded second-order solution built from
    the same stages. ``k1`` may pass a precomputed ``rhs_fn(u)``.
    """
    if k1 is None:
        k1 = rhs_fn(u)
    u1 = u + 0.5 * dt * k1
    k2 = rhs_fn(u1)
    u2 = u1 + 0.5 * dt * k2
    k3 = rhs_fn(u2)
    u3 = (2.0 / 3.0) * u + (1.0 / 3.0) * u2 + (dt / 6.0) * k3
    k4 = rhs_fn(u3)
    u_new = u3 + 0.5 * dt * k4
    a, b, c, d = _ERR_WEIGHTS
    err = dt * (a * k1 + b * k2 + c * k3 + d * k4)
    return u_new, err


@dataclass
class StepController:
    """PI step-size control on the weighted RMS error of the embedded pair.

    ``cfl`` optionally caps every step at
    ``cfl * h / ((2N+1) max wavespeed)`` evaluated on the current state;
    ``None`` leaves the step purely error controlled. A nonphysical stage
    that would push the step below ``stall_ratio`` times the convective
    step of the initial state counts as a hard failure: repeated halvings
    that each succeed once would otherwise crawl indefinitely (the
    current convective step is no reference, it collapses with the
    density).
    """

    abs_tol: float = 1e-6
    rel_tol: float = 1e-4
    safety: float = 0.9
    beta1: float = 0.7
    beta2: float = 0.4
    max_growth: float = 5.0
    max_shrink: float = 0.2
    dt_min: float = 1e-14
    dt_max: float = math.inf
    dt: float | None = None
    max_retries: int = 10
    cfl: float | None = None
    stall_ratio: float = 1e-4
    _err_prev: float = field(default=1.0, repr=False)

    # embedded estimator has order 2
    order: int = 3

    def error_norm(self, u, u_new, err):
        scale = self.abs_tol + self.rel_tol * np.maximum(np.abs(u), np.abs(u_new))
        return float(np.sqrt(np.mean((err / scale) ** 2)))

    def accept(self, err_norm):
        e = max(err_norm, 1e-10)
        fac = self.safety * e ** (-self.beta1 / self.order) * self._err_prev ** (self.beta2 / self.order)
        self._err_prev = max(err_norm, 1e-4)
        return min(self.max_growth, max(self.max_shrink, fac))

    def reject(self, err_norm):
        return max(self.max_shrink, self.safety * err_norm ** (-1.0 / self.order))


def convective_dt(u, space, gamma=euler.GAMMA):
    """``h / ((2N+1) max wavespeed)`` with ``h`` the smallest element width."""
    h = min(space.mesh.h)
    return h / ((2 * space.ref.degree + 1) * euler.max_wavespeed(u, gamma))


def initial_dt(u, space, gamma=euler.GAMMA):
    """``0.5 h / ((2N+1) max wavespeed)``."""
    return 0.5 * convective_dt(u, space, gamma)


def diagnostics_row(u, space, report, gamma=euler.GAMMA, labels=None):
    """Integrated conservation/entropy quantities and per-model coefficient stats."""
    tot = space.total(u)
    row = {"mass": float(tot[0])}
    names = ("momentum_x", "momentum_y")
    for i in range(space.dim):
        row[names[i]] = float(tot[1 + i])
    row["energy"] = float(tot[-1])
    row["entropy"] = float(space.total(euler.entropy(u, gamma)))
    if report is not None:
        labels = labels or model_labels(report.kinds)
        for j, lab in enumerate(labels):
            row[f"eps_max_{lab}"] = float(report.eps[:, j].max())
            row[f"eps_mean_{lab}"] = float(report.eps[:, j].mean())
    return row


def model_labels(kinds):
    """Unique column labels: the model kind, suffixed with its index if repeated."""
    kinds = list(kinds)
    return [k if kinds.count(k) == 1 else f"{k}{j}" for j, k in enumerate(kinds)]


@dataclass
class IntegrationResult:
    state: State
    diagnostics: list
    report: object
    max_eps: np.ndarray
    n_steps: int = 0
    n_rejected: int = 0
    stopped: bool = False


def integrate(state, t_end, space, models, controller=None, gamma=euler.GAMMA,
              callbacks=(), sample_interval=None, max_steps=10_000_000):
    """Advance ``state`` to ``t_end`` with adaptive SSPRK(4,3).

    Diagnostics are sampled at the initial time, every ``sample_interval``
    time units (steps are clipped to land on sample times) and at ``t_end``;
    with ``sample_interval=None`` every accepted step is sampled. Each
    callback is invoked as ``cb(time, state, report)`` at every sample and
    may return ``True`` to stop the run.

    Raises
    ------
    SimulationFailure
        If a nonphysical state persists after ``controller.max_retries``
        consecutive step halvings.
    """
    if not t_end > state.time:
        raise ValueError(f"t_end={t_end} must exceed the current time {state.time}")
    models = parse_models(models)
    ctrl = controller or StepController()
    labels = model_labels([m.kind for m in models])

    def rhs_with_report(u):
        return full_rhs(u, space, models, gamma)

    u = state.values.copy()
    t = float(state.time)
    try:
        k1, report = rhs_with_report(u)
    except euler.NonPhysicalState as exc:
        raise SimulationFailure(exc.with_time(t), t) from exc
    def dt_cap(u):
        cap = ctrl.dt_max
        if ctrl.cfl is not None:
            cap = min(cap, ctrl.cfl * convective_dt(u, space, gamma))
        return cap

    dt_floor = max(ctrl.dt_min, ctrl.stall_ratio * convective_dt(u, space, gamma))
    dt = ctrl.dt or initial_dt(u, space, gamma)
    dt = min(dt, dt_cap(u))

    max_eps = report.eps.max(axis=0).copy()
    diagnostics = []
    next_sample = t + sample_interval if sample_interval else None

    def sample(t, u, report, dt_used):
        row = {"time": t, "dt": dt_used}
        row.update(diagnostics_row(u, space, report, gamma, labels))
        diagnostics.append(row)
        cur = State(u, t)
        return any(bool(cb(t, cur, report)) for cb in callbacks)

    stopped = sample(t, u, report, 0.0)
    n_steps = n_rejected = 0
    retries = 0
    while t < t_end and not stopped:
        if n_steps >= max_steps:
            raise RuntimeError(f"exceeded {max_steps} steps at t={t}")
        target = t_end if next_sample is None else min(t_end, next_sample)
        remaining = target - t
        clipped = dt >= remaining * (1 - 1e-12)
        h = remaining if clipped else dt
        try:
            stage = lambda w: rhs_with_report(w)[0]
            u_new, err = ssprk43_step(u, h, stage, k1)
            k1_new, report_new = rhs_with_report(u_new)
        except euler.NonPhysicalState as exc:
            retries += 1
            n_rejected += 1
            if retries > ctrl.max_retries or h * 0.5 < dt_floor:
                raise SimulationFailure(exc.with_time(t), t, diagnostics) from exc
            logger.debug("nonphysical stage at t=%.6e, halving dt=%.3e", t, h)
            dt = 0.5 * h
            continue

        en = ctrl.error_norm(u, u_new, err)
        if not np.isfinite(en):
            en = 1e10
        if en > 1.0:
            n_rejected += 1
            dt = max(ctrl.dt_min, h * ctrl.reject(en))
            continue

        retries = 0
        n_steps += 1
        t = target if clipped else t + h
        u, k1, report = u_new, k1_new, report_new
        np.maximum(max_eps, report.eps.max(axis=0), out=max_eps)
        grow = ctrl.accept(en)
        dt = min(dt_cap(u), (max(dt, h) if clipped else h) * grow)

        at_sample = next_sample is None or (clipped and target == next_sample) or t >= t_end
        if at_sample:
            stopped = sample(t, u, report, h)
        if next_sample is not None and t >= next_sample:
            next_sample = next_sample + sample_interval

    ctrl.dt = dt
    return IntegrationResult(
        state=State(u, t), diagnostics=diagnostics, report=report,
        max_eps=max_eps, n_steps=n_steps, n_rejected=n_rejected, stopped=stopped,
    )
