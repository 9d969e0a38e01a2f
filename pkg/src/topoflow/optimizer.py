"""Vanilla and diffeomorphic gradient descent on topological losses.

The epoch loop follows the subsampled scheme: draw a uniform subsample,
compute the vanilla gradient there, then either write it back to the sampled
indices (vanilla) or interpolate it into a smooth field and displace the whole
cloud (diffeo). Each diffeo step is recorded so the flow can be re-applied to
new points or inverted.

Randomness: stream (seed, 0) drives the per-epoch training subsample, stream
(seed, 1) the validation subsamples; one training draw per epoch, K validation
draws per validation epoch, in that order. Identical seed and config give
bit-identical runs.
"""
from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .diffeo import Interpolant, SingularKernelError, evaluate, fit, lipschitz_bound
from .gradient import SparseGradient, consolidate, pullback
from .losses import Cotangent, LossSpec, box_regularization, pers_k, topological_loss
from .rips import (Diagram, PointCloud, as_point_cloud, build_filtration,
                   compute_persistence, enclosing_radius)

MODES = ("vanilla", "diffeo")
STOP_RULES = ("threshold", "ema", "augment-increase", "none")
INVERT_MAX_ITER = 50
INVERT_TOL = 1e-10


@dataclass(frozen=True)
class OptimConfig:
    """Knobs of a descent run; defaults mirror the standard circle setup."""

    mode: str = "diffeo"
    lr: float = 0.1
    sigma: float = 0.1
    subsample: Optional[int] = None
    epochs: int = 250
    stop_rule: str = "threshold"
    stop_eps: float = 0.0
    ema_decay: float = 0.9
    stop_delta: float = 3.0
    val_reps: Optional[int] = None      # K; default ceil(n / s)
    val_every: int = 1
    seed: int = 0
    auto_radius: bool = True
    simplex_budget: Optional[int] = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.stop_rule not in STOP_RULES:
            raise ValueError(f"unknown stop rule {self.stop_rule!r}")
        if not self.lr > 0:
            raise ValueError("lr must be positive")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.subsample is not None and self.subsample < 1:
            raise ValueError("subsample size must be >= 1")
        if self.val_every < 1:
            raise ValueError("val_every must be >= 1")
        if not 0.0 < self.ema_decay < 1.0:
            raise ValueError("ema_decay must lie in (0, 1)")


@dataclass(frozen=True)
class FlowStep:
    field: Interpolant
    lr: float


@dataclass
class Flow:
    """Ordered per-epoch displacement fields discretizing the learned flow."""

    steps: list[FlowStep] = field(default_factory=list)
    dim: int = 0

    def __len__(self) -> int:
        return len(self.steps)


@dataclass(frozen=True)
class TraceRecord:
    epoch: int
    train_loss: float
    val_loss: float
    support: int
    kappa: float
    lip_bound: float
    seconds: float


TRACE_HEADER = "epoch,train_loss,val_loss,support,kappa,lip_bound,seconds"


@dataclass
class RunResult:
    cloud: PointCloud
    flow: Flow
    trace: list[TraceRecord]
    stop_reason: str
    epochs_run: int
    final_val_loss: float


@dataclass(frozen=True)
class LossPipeline:
    """LossSpec plus the filtration policy needed to evaluate it on a cloud."""

    spec: LossSpec
    auto_radius: bool = True
    simplex_budget: Optional[int] = None

    @property
    def complex_dim(self) -> int:
        return max(self.spec.hom_dims) + 1

    def diagram(self, X: PointCloud) -> Diagram:
        radius = enclosing_radius(X) if self.auto_radius else None
        C = build_filtration(X, self.complex_dim, max_radius=radius,
                             budget=self.simplex_budget)
        return compute_persistence(C, self.spec.hom_dims)

    def loss_parts(self, X: PointCloud) -> tuple[float, Cotangent, Diagram]:
        D = self.diagram(X)
        value, cot = topological_loss(D, self.spec)
        return value, cot, D

    def loss(self, X: PointCloud) -> float:
        value, _, _ = self.loss_parts(X)
        if self.spec.box is not None:
            reg, _ = box_regularization(X, self.spec.box)
            value += self.spec.box_weight * reg
        return value


def _as_pipeline(pipeline: Union[LossSpec, LossPipeline]) -> LossPipeline:
    if isinstance(pipeline, LossPipeline):
        return pipeline
    return LossPipeline(pipeline)


def vanilla_step(X, pipeline: Union[LossSpec, LossPipeline], lr: float) -> PointCloud:
    """One full-cloud vanilla update: only critical points move."""
    if not lr > 0:
        raise ValueError("lr must be positive")
    pipe = _as_pipeline(pipeline)
    X = as_point_cloud(X)
    _, cot, D = pipe.loss_parts(X)
    grad = pullback(D, cot, X)
    coords = X.coords.copy()
    if len(grad):
        coords[grad.indices] -= lr * grad.vectors
    if pipe.spec.box is not None:
        _, reg_grad = box_regularization(X, pipe.spec.box)
        coords -= lr * pipe.spec.box_weight * reg_grad
    return PointCloud(coords)


def diffeo_step(X, pipeline: Union[LossSpec, LossPipeline], lr: float,
                sigma: float) -> tuple[PointCloud, Optional[Interpolant]]:
    """One full-cloud diffeomorphic update: every point feels the field."""
    if not lr > 0:
        raise ValueError("lr must be positive")
    pipe = _as_pipeline(pipeline)
    X = as_point_cloud(X)
    _, cot, D = pipe.loss_parts(X)
    grad = pullback(D, cot, X)
    if len(grad) == 0:
        return X, None
    centers, vectors = consolidate(grad, X)
    if len(centers) == 0:
        return X, None
    interp = fit(centers, vectors, sigma)
    coords = X.coords - lr * evaluate(interp, X.coords)
    if pipe.spec.box is not None:
        _, reg_grad = box_regularization(X, pipe.spec.box)
        coords -= lr * pipe.spec.box_weight * reg_grad
    return PointCloud(coords), interp


def validation_loss(X, pipeline: Union[LossSpec, LossPipeline], s: Optional[int],
                    K: int, rng: np.random.Generator) -> float:
    """Mean loss over K independent uniform s-subsamples (exact when s >= n)."""
    if K < 1:
        raise ValueError("K must be >= 1")
    pipe = _as_pipeline(pipeline)
    X = as_point_cloud(X)
    if s is None or s >= X.n:
        return pipe.loss(X)
    total = 0.0
    for _ in range(K):
        idx = np.sort(rng.choice(X.n, size=s, replace=False))
        total += pipe.loss(PointCloud(X.coords[idx]))
    return total / K


def run(X0, spec: LossSpec, cfg: OptimConfig) -> RunResult:
    """Alg-1 style descent loop with stopping, tracing, and flow recording.

    The stopping rule is checked before each update, so a triggered rule
    leaves the cloud of the previous epoch untouched; the trace has one row
    per completed (updating) epoch.
    """
    X = as_point_cloud(X0)
    n, d = X.n, X.d
    s = cfg.subsample
    if s is not None and s > n:
        raise ValueError(f"subsample size {s} exceeds cloud size {n}")
    if s is not None and s == n:
        s = None
    pipe = LossPipeline(spec, cfg.auto_radius, cfg.simplex_budget)
    rng_train = np.random.default_rng([cfg.seed, 0])
    rng_val = np.random.default_rng([cfg.seed, 1])
    K = cfg.val_reps if cfg.val_reps is not None else (math.ceil(n / s) if s else 1)

    coords = X.coords.copy()
    flow = Flow([], d)
    trace: list[TraceRecord] = []
    ema: Optional[float] = None
    prev_top: Optional[float] = None
    val = math.nan
    stop_reason = f"max epochs ({cfg.epochs}) reached"
    epochs_run = 0

    for epoch in range(1, cfg.epochs + 1):
        t_start = time.perf_counter()
        if s is not None:
            sub = np.sort(rng_train.choice(n, size=s, replace=False))
            Xsub = PointCloud(coords[sub])
        else:
            sub = None
            Xsub = PointCloud(coords)

        top_loss, cot, D = pipe.loss_parts(Xsub)
        train_loss = top_loss
        if spec.box is not None:
            reg_val, _ = box_regularization(Xsub, spec.box)
            train_loss += spec.box_weight * reg_val

        if s is None:
            val = train_loss
        elif epoch == 1 or epoch % cfg.val_every == 0:
            val = validation_loss(PointCloud(coords), pipe, s, K, rng_val)

        if cfg.stop_rule == "threshold":
            if val <= cfg.stop_eps:
                stop_reason = (f"validation loss {val:.6g} <= threshold "
                               f"{cfg.stop_eps:.6g} at epoch {epoch}")
                break
        elif cfg.stop_rule == "ema":
            ema = train_loss if ema is None else (
                cfg.ema_decay * ema + (1.0 - cfg.ema_decay) * train_loss)
            if ema <= cfg.stop_eps:
                stop_reason = (f"EMA loss {ema:.6g} <= threshold "
                               f"{cfg.stop_eps:.6g} at epoch {epoch}")
                break
        elif cfg.stop_rule == "augment-increase":
            if prev_top is not None and top_loss - prev_top >= cfg.stop_delta:
                stop_reason = (f"topological loss increased by "
                               f"{top_loss - prev_top:.6g} >= {cfg.stop_delta:.6g} "
                               f"at epoch {epoch}")
                break
            prev_top = top_loss

        grad = pullback(D, cot, Xsub)
        support = len(grad)
        kappa = math.nan
        lip = math.nan

        if cfg.mode == "vanilla":
            # both gradient parts taken at the pre-update cloud
            reg_grad = None
            if spec.box is not None:
                at = coords if sub is None else coords[sub]
                _, reg_grad = box_regularization(at, spec.box)
            if support:
                target = grad.indices if sub is None else sub[grad.indices]
                coords[target] -= cfg.lr * grad.vectors
            if reg_grad is not None:
                if sub is None:
                    coords -= cfg.lr * spec.box_weight * reg_grad
                else:
                    coords[sub] -= cfg.lr * spec.box_weight * reg_grad
        else:
            reg_grad = None
            if spec.box is not None:
                _, reg_grad = box_regularization(coords, spec.box)
            if support:
                centers, vectors = consolidate(grad, Xsub)
                if len(centers):
                    try:
                        interp = fit(centers, vectors, cfg.sigma)
                    except SingularKernelError as exc:
                        raise SingularKernelError(f"epoch {epoch}: {exc}") from exc
                    disp = evaluate(interp, coords)
                    kappa = interp.kappa
                    if len(cot):
                        lip = lipschitz_bound(kappa, cfg.sigma, d, pers_k(D, len(cot)))
                    coords -= cfg.lr * disp
                    flow.steps.append(FlowStep(interp, cfg.lr))
            if reg_grad is not None:
                coords -= cfg.lr * spec.box_weight * reg_grad

        epochs_run = epoch
        trace.append(TraceRecord(epoch, train_loss, val, support, kappa, lip,
                                 time.perf_counter() - t_start))

    final = PointCloud(coords)
    if s is None:
        final_val = pipe.loss(final)
    else:
        final_val = validation_loss(final, pipe, s, K, rng_val)
    return RunResult(final, flow, trace, stop_reason, epochs_run, final_val)


def apply_flow(f: Flow, points) -> np.ndarray:
    """Push points through the recorded displacement steps in order."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64)).copy()
    if f.steps and pts.shape[1] != f.dim:
        raise ValueError(f"points have dimension {pts.shape[1]}, flow has {f.dim}")
    for step in f.steps:
        pts -= step.lr * evaluate(step.field, pts)
    return pts


def invert_flow(f: Flow, points, max_iter: int = INVERT_MAX_ITER,
                tol: float = INVERT_TOL) -> np.ndarray:
    """Run the recorded steps backward.

    Each step solves p = q - lr * v(q) for q by fixed-point iteration from p;
    if the iteration has not reached tol in max_iter sweeps (the step is not a
    contraction, lr * Lip >= 1) a warning is issued and the explicit estimate
    p + lr * v(p) is used for that step.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64)).copy()
    if f.steps and pts.shape[1] != f.dim:
        raise ValueError(f"points have dimension {pts.shape[1]}, flow has {f.dim}")
    for k in range(len(f.steps) - 1, -1, -1):
        step = f.steps[k]
        prev = pts.copy()
        converged = False
        for _ in range(max_iter):
            nxt = pts + step.lr * evaluate(step.field, prev)
            delta = float(np.max(np.abs(nxt - prev))) if nxt.size else 0.0
            prev = nxt
            if delta < tol:
                converged = True
                break
        if not converged:
            warnings.warn(
                f"flow step {k} is not a contraction (lr * Lip >= 1); "
                "using the explicit first-order inverse", RuntimeWarning)
            prev = pts + step.lr * evaluate(step.field, pts)
        pts = prev
    return pts
