"""End-to-end training of the unrolled network.

Smooth-l1 loss against ideal TFDs with amplitude alignment: the prediction
is divided by the observation backprojection's peak and the target by its
own peak.  Quadratic TFDs concentrate ~N times the ideal ridge amplitude,
so without this alignment the initial iterate overshoots the target by two
orders of magnitude and the optimizer immediately drives every threshold
into the all-clamped region, where the soft threshold's gradient vanishes
identically and training freezes.  With it, ridge amplitudes match at
initialization and the threshold gradients are local (up on cross-terms,
down on ridges).  Adam at the configured learning rate; per-epoch
train/val CSV log; exports the learned weights as a `.uwb` bundle.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F

from .data import Dataset, load_dataset
from .model import UnrolledNet
from .uwb import write_uwb


@dataclass
class TrainConfig:
    epochs: int = 100
    learning_rate: float = 1e-3
    batch_size: int = 8
    k: int = 5
    seed: int = 0
    val_fraction: float = 0.2
    huber_delta: float = 1.0
    freeze_unets: bool = False  # train only the step scalars
    zero_unets: bool = False    # start the U-Nets from all-zero weights
    shrink_leak: float = 0.1    # clamped-branch backward leak (forward stays exact)

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not (0.0 < self.val_fraction < 1.0):
            raise ValueError("val_fraction must be in (0, 1)")


def _batches(indices: np.ndarray, batch_size: int):
    for start in range(0, indices.size, batch_size):
        yield indices[start : start + batch_size]


class _Batcher:
    """Stacks samples and caches the per-sample alignment scales."""

    def __init__(self, dataset: Dataset, model: UnrolledNet):
        self.dataset = dataset
        self.a = torch.from_numpy(np.stack([s.a_block for s in dataset.samples]))
        self.ideal = torch.from_numpy(np.stack([s.ideal for s in dataset.samples]))
        with torch.no_grad():
            backproj = model.op.adjoint(self.a)
        self.pred_scale = backproj.abs().flatten(1).max(dim=1).values.clamp(min=1e-12).view(-1, 1, 1)
        self.targ_scale = self.ideal.flatten(1).max(dim=1).values.clamp(min=1e-12).view(-1, 1, 1)

    def __call__(self, idx: np.ndarray):
        idx = torch.as_tensor(np.ascontiguousarray(idx))
        return self.a[idx], self.ideal[idx], self.pred_scale[idx], self.targ_scale[idx]


def _loss(model: UnrolledNet, batch, delta: float) -> torch.Tensor:
    a, ideal, pred_scale, targ_scale = batch
    pred = model(a)
    return F.smooth_l1_loss(pred / pred_scale, ideal / targ_scale, beta=delta)


def evaluate(model: UnrolledNet, batcher: _Batcher, idx: np.ndarray, cfg: TrainConfig) -> float:
    model.eval()
    total, count = 0.0, 0
    with torch.no_grad():
        for batch_idx in _batches(idx, cfg.batch_size):
            total += float(_loss(model, batcher(batch_idx), cfg.huber_delta)) * batch_idx.size
            count += batch_idx.size
    return total / count


def train(dataset_dir: str | Path, out_dir: str | Path, cfg: TrainConfig | None = None,
          log_every: int = 1) -> dict:
    """Returns {"weights": path, "log": path, "epochs": [...rows...]}."""
    cfg = cfg or TrainConfig()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    dataset = load_dataset(dataset_dir)
    if len(dataset) < 2:
        raise ValueError("need at least 2 samples to split train/val")

    rng = np.random.default_rng(cfg.seed)
    perm = rng.permutation(len(dataset))
    n_val = max(1, int(round(cfg.val_fraction * len(dataset))))
    val_idx, train_idx = perm[:n_val], perm[n_val:]

    torch.manual_seed(cfg.seed)
    model = UnrolledNet(k=cfg.k, n=dataset.n, d_nu=dataset.d_nu, d_tau=dataset.d_tau,
                        shrink_leak=cfg.shrink_leak)
    if cfg.zero_unets:
        with torch.no_grad():
            for net in model.unets:
                for p in net.parameters():
                    p.zero_()
    params = [model.t] if cfg.freeze_unets else list(model.parameters())
    if cfg.freeze_unets:
        for net in model.unets:
            for p in net.parameters():
                p.requires_grad_(False)
    optimizer = torch.optim.Adam(params, lr=cfg.learning_rate)
    batcher = _Batcher(dataset, model)

    rows = [{"epoch": 0,
             "train_loss": evaluate(model, batcher, train_idx, cfg),
             "val_loss": evaluate(model, batcher, val_idx, cfg)}]
    for epoch in range(1, cfg.epochs + 1):
        model.train()
        order = rng.permutation(train_idx)
        running, seen = 0.0, 0
        for batch_idx in _batches(order, cfg.batch_size):
            optimizer.zero_grad()
            loss = _loss(model, batcher(batch_idx), cfg.huber_delta)
            if not torch.isfinite(loss):
                raise FloatingPointError(f"non-finite loss at epoch {epoch}")
            loss.backward()
            optimizer.step()
            running += float(loss.detach()) * batch_idx.size
            seen += batch_idx.size
        row = {"epoch": epoch, "train_loss": running / seen,
               "val_loss": evaluate(model, batcher, val_idx, cfg)}
        rows.append(row)
        if log_every and epoch % log_every == 0:
            print(f"epoch {epoch:4d}  train {row['train_loss']:.6f}  val {row['val_loss']:.6f}",
                  flush=True)

    weights_path = out_dir / "weights.uwb"
    unets = [{name: tensor.numpy() for name, tensor in model.layer_tensors(k).items()}
             for k in range(cfg.k)]
    write_uwb(weights_path, unets, [float(v) for v in model.t.detach()], n_hint=dataset.n,
              channels=model.channels)

    log_path = out_dir / "train_log.csv"
    with open(log_path, "w") as fh:
        fh.write("epoch,train_loss,val_loss\n")
        for row in rows:
            fh.write(f"{row['epoch']},{row['train_loss']:.8f},{row['val_loss']:.8f}\n")
    return {"weights": weights_path, "log": log_path, "epochs": rows, "model": model,
            "train_idx": train_idx, "val_idx": val_idx}


def finite_difference_gradcheck(model: UnrolledNet, a_block: torch.Tensor,
                                ideal: torch.Tensor, n_params: int = 10, seed: int = 0,
                                eps: float = 1e-5) -> float:
    """Max relative error between autograd and central differences.

    Runs in float64 so the finite differences are not drowned by rounding;
    the computation graph is the same one used in float32 training.
    """
    model = model.double()
    a_block = a_block.to(torch.complex128)
    ideal = ideal.double()
    with torch.no_grad():
        pred_scale = model.op.adjoint(a_block).abs().flatten(1).max(dim=1).values.clamp(min=1e-12).view(-1, 1, 1)
    targ_scale = ideal.flatten(1).max(dim=1).values.clamp(min=1e-12).view(-1, 1, 1)

    def loss_value() -> torch.Tensor:
        return F.smooth_l1_loss(model(a_block) / pred_scale, ideal / targ_scale, beta=1.0)

    loss = loss_value()
    loss.backward()
    flat_params = [p for p in model.parameters() if p.grad is not None]
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_params):
        p = flat_params[rng.integers(len(flat_params))]
        idx = tuple(rng.integers(s) for s in p.shape)
        analytic = float(p.grad[idx])
        with torch.no_grad():
            orig = float(p[idx])
            p[idx] = orig + eps
            up = float(loss_value())
            p[idx] = orig - eps
            down = float(loss_value())
            p[idx] = orig
        numeric = (up - down) / (2 * eps)
        denom = max(abs(analytic), abs(numeric), 1e-8)
        worst = max(worst, abs(analytic - numeric) / denom)
    return worst
