"""Training loop: azimuth-sorted labels, the multi-task objective, gradient
clipping, linear warm-up and best-on-validation checkpointing."""

from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import dataclass

import numpy as np
import torch

from labnet.checkpoint import load_checkpoint, save_checkpoint
from labnet.errors import InvalidInputError, TrainingDivergedError
from labnet.objectives import doa_loss, multitask_loss, sort_by_azimuth, wsdr_loss
from labnet.profiles import RunConfig
from labnet.runtime import tune_allocator
from labnet.spatial import encode_spatial_spectrum

log = logging.getLogger("labnet.training")

LAST_CHECKPOINT = "last.ckpt"
BEST_CHECKPOINT = "best.ckpt"
HISTORY_FILE = "history.jsonl"
DIVERGENCE_FILE = "divergence.json"


@dataclass
class PreparedExample:
    example_id: str
    mixture: torch.Tensor  # [L, M]
    references: torch.Tensor  # [S, L], azimuth-sorted, reference channel
    doa_targets: torch.Tensor | None  # [S, N, bins]


def observer_angles(location, observers: int) -> list[float]:
    """Ground-truth angles per observer: both outermost mics, or the centroid
    alone when only one observer is configured."""
    if observers == 2:
        return [location.doas[0], location.doas[1]]
    return [location.doa_centroid]


def prepare_example(example, cfg: RunConfig, train_mode: bool = True) -> PreparedExample:
    """Tensorize one example; training sorts the labels by ascending azimuth."""
    labels = [
        (example.references[i], example.metadata.source_locations[i])
        for i in range(len(example.references))
    ]
    if train_mode:
        labels = sort_by_azimuth(labels)
    refs = torch.stack([seg.samples[:, 0].float() for seg, _ in labels])
    targets = None
    if cfg.model.use_locator:
        rows = []
        for _, location in labels:
            spectra = [
                encode_spatial_spectrum(angle, cfg.codec)
                for angle in observer_angles(location, cfg.codec.observers)
            ]
            rows.append(np.stack(spectra))
        targets = torch.from_numpy(np.stack(rows)).float()
    return PreparedExample(
        example_id=example.metadata.example_id,
        mixture=example.mixture.samples.float(),
        references=refs,
        doa_targets=targets,
    )


class Trainer:
    """Drives optimization of one model over an in-memory dataset."""

    def __init__(self, cfg: RunConfig, out_dir):
        tune_allocator()
        self.cfg = cfg
        self.out_dir = out_dir
        os.makedirs(out_dir, exist_ok=True)
        self.model = None
        self.optimizer = None
        self.epoch = 0
        self.steps_done = 0
        self.best_val = math.inf

    # -- state ----------------------------------------------------------

    def _build(self):
        self.model = self.cfg.build_model()
        self.optimizer = torch.optim.Adam(
            self.model.parameters(), lr=self.cfg.train.learning_rate
        )

    def _checkpoint_path(self, name: str):
        return os.path.join(self.out_dir, name)

    def _save(self, name: str):
        save_checkpoint(
            self._checkpoint_path(name),
            self.model,
            self.cfg.to_dict(),
            train_state={
                "epoch": self.epoch,
                "steps_done": self.steps_done,
                "best_val": self.best_val,
                "optimizer": self.optimizer.state_dict(),
                "torch_rng": torch.get_rng_state(),
            },
        )

    def _restore(self):
        payload = load_checkpoint(self._checkpoint_path(LAST_CHECKPOINT))
        self._build()
        self.model.load_state_dict(payload["state_dict"])
        state = payload["train_state"]
        self.optimizer.load_state_dict(state["optimizer"])
        self.epoch = state["epoch"]
        self.steps_done = state["steps_done"]
        self.best_val = state["best_val"]
        torch.set_rng_state(state["torch_rng"].to(torch.uint8))

    # -- objective ------------------------------------------------------

    def _batch_loss(self, prepared: list[PreparedExample], epoch: int):
        mix = torch.stack([p.mixture for p in prepared])  # [B, L, M]
        refs = torch.stack([p.references for p in prepared])  # [B, S, L]
        out = self.model(mix)
        mix_ref = mix[..., 0]
        sources = refs.shape[1]
        wsdr_terms = [
            wsdr_loss(mix_ref, refs[:, s], out.waveforms[:, s]).mean()
            for s in range(sources)
        ]
        if self.cfg.model.use_locator:
            targets = torch.stack([p.doa_targets for p in prepared])  # [B, S, N, bins]
            frames = out.spectrums.shape[3]
            doa_terms = [
                doa_loss(
                    out.spectrums[:, s],  # [B, N, T, bins]
                    targets[:, s].unsqueeze(2).expand(-1, -1, frames, -1),
                )
                for s in range(sources)
            ]
        else:
            doa_terms = [torch.zeros((), dtype=mix.dtype) for _ in range(sources)]
        total = multitask_loss(doa_terms, wsdr_terms, self.cfg.train.loss_weights, epoch)
        return total, wsdr_terms, doa_terms

    def train_step(self, prepared: list[PreparedExample], epoch: int, step_in_epoch: int,
                   steps_per_epoch: int) -> dict:
        """One optimizer step; returns the step record. Gradients are left in
        place after the update so callers can inspect the clipped norms."""
        total, wsdr_terms, doa_terms = self._batch_loss(prepared, epoch)
        if not torch.isfinite(total):
            ids = [p.example_id for p in prepared]
            with open(os.path.join(self.out_dir, DIVERGENCE_FILE), "w", encoding="utf-8") as fh:
                json.dump({"epoch": epoch, "step": step_in_epoch, "example_ids": ids}, fh)
            raise TrainingDivergedError(
                f"non-finite loss at epoch {epoch} step {step_in_epoch}", ids
            )
        self.optimizer.zero_grad()
        total.backward()
        torch.nn.utils.clip_grad_norm_(self.model.parameters(), self.cfg.train.grad_clip_norm)
        lr = self._warmup_lr(epoch, step_in_epoch, steps_per_epoch)
        for group in self.optimizer.param_groups:
            group["lr"] = lr
        self.optimizer.step()
        self.steps_done += 1
        return {
            "loss": float(total.detach()),
            "wsdr": [float(t.detach()) for t in wsdr_terms],
            "doa": [float(t.detach()) for t in doa_terms],
            "lr": lr,
        }

    def _warmup_lr(self, epoch: int, step_in_epoch: int, steps_per_epoch: int) -> float:
        base = self.cfg.train.learning_rate
        warmup = self.cfg.train.warmup_epochs
        if warmup <= 0 or epoch > warmup:
            return base
        k = (epoch - 1) * steps_per_epoch + step_in_epoch  # 1-based global warmup step
        return base * k / (warmup * steps_per_epoch)

    def _validate(self, prepared: list[PreparedExample], epoch: int,
                  batch_size: int) -> float:
        if not prepared:
            return math.nan
        losses = []
        with torch.no_grad():
            for i in range(0, len(prepared), batch_size):
                total, _, _ = self._batch_loss(prepared[i : i + batch_size], epoch)
                losses.append(float(total))
        return float(np.mean(losses))

    # -- loop -------------------------------------------------------------

    def fit(self, train_examples, val_examples, resume: bool = False) -> list[dict]:
        cfg = self.cfg.train
        if resume:
            self._restore()
            log.info("resumed from epoch %d (%d steps)", self.epoch, self.steps_done)
        else:
            self._build()
        if not train_examples:
            raise InvalidInputError("training requires at least one example")
        train_prep = [prepare_example(ex, self.cfg, train_mode=True) for ex in train_examples]
        val_prep = [prepare_example(ex, self.cfg, train_mode=True) for ex in val_examples]
        steps_per_epoch = math.ceil(len(train_prep) / cfg.batch_size)

        history = []
        prev_alpha_beta = None
        while self.epoch < cfg.epochs:
            if cfg.max_steps is not None and self.steps_done >= cfg.max_steps:
                break
            epoch = self.epoch + 1
            alpha, beta = cfg.loss_weights.at_epoch(epoch)
            if prev_alpha_beta is not None and prev_alpha_beta != (alpha, beta):
                log.info("loss weights switch at epoch %d: alpha=%g beta=%g", epoch, alpha, beta)
            prev_alpha_beta = (alpha, beta)

            order = np.random.default_rng((cfg.seed, epoch)).permutation(len(train_prep))
            step_records = []
            for step, start in enumerate(range(0, len(order), cfg.batch_size), start=1):
                batch = [train_prep[i] for i in order[start : start + cfg.batch_size]]
                step_records.append(self.train_step(batch, epoch, step, steps_per_epoch))
            self.epoch = epoch

            val_loss = self._validate(val_prep, epoch, cfg.batch_size)
            record = {
                "epoch": epoch,
                "steps_done": self.steps_done,
                "alpha": alpha,
                "beta": beta,
                "train_loss": float(np.mean([r["loss"] for r in step_records])),
                "val_loss": val_loss,
                "lr": step_records[-1]["lr"],
                "step_losses": [r["loss"] for r in step_records],
            }
            history.append(record)
            with open(os.path.join(self.out_dir, HISTORY_FILE), "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, sort_keys=True) + "\n")
            log.info(
                "epoch %d: train %.5f val %.5f (lr %.2e)",
                epoch, record["train_loss"], val_loss, record["lr"],
            )
            self._save(LAST_CHECKPOINT)
            if not math.isnan(val_loss) and val_loss < self.best_val:
                self.best_val = val_loss
                self._save(BEST_CHECKPOINT)
        return history
