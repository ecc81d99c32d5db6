"""Versioned checkpoint files.

A checkpoint is a torch-serialized dict with a header string, the resolved
run configuration, the named parameter map and a shape/dtype manifest that is
validated on load.
"""

from __future__ import annotations

import os

import torch

from labnet.errors import CheckpointError

CHECKPOINT_HEADER = "labnet-ckpt-v1"


def _manifest(state_dict: dict) -> dict:
    return {
        name: {"shape": list(tensor.shape), "dtype": str(tensor.dtype)}
        for name, tensor in state_dict.items()
    }


def save_checkpoint(path, model, run_config: dict, train_state: dict | None = None) -> None:
    state_dict = model.state_dict()
    payload = {
        "header": CHECKPOINT_HEADER,
        "run_config": run_config,
        "state_dict": state_dict,
        "manifest": _manifest(state_dict),
        "train_state": train_state or {},
    }
    torch.save(payload, path)


def load_checkpoint(path) -> dict:
    if not os.path.exists(path):
        raise CheckpointError(f"checkpoint not found: {path}")
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except Exception as exc:
        raise CheckpointError(f"failed to read checkpoint {path}: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("header") != CHECKPOINT_HEADER:
        raise CheckpointError(
            f"{path} is not a {CHECKPOINT_HEADER} checkpoint "
            f"(header: {payload.get('header') if isinstance(payload, dict) else None!r})"
        )
    state = payload.get("state_dict", {})
    manifest = payload.get("manifest", {})
    if set(state) != set(manifest):
        raise CheckpointError(f"{path}: manifest does not list the stored parameters")
    for name, tensor in state.items():
        meta = manifest[name]
        if list(tensor.shape) != meta["shape"] or str(tensor.dtype) != meta["dtype"]:
            raise CheckpointError(
                f"{path}: parameter {name} is {list(tensor.shape)}/{tensor.dtype}, "
                f"manifest says {meta['shape']}/{meta['dtype']}"
            )
    return payload


def model_from_checkpoint(payload: dict):
    """Rebuild the network described by a loaded checkpoint."""
    from labnet.profiles import RunConfig

    cfg = RunConfig.from_dict(payload["run_config"])
    model = cfg.build_model()
    try:
        model.load_state_dict(payload["state_dict"])
    except RuntimeError as exc:
        raise CheckpointError(f"checkpoint does not match its embedded config: {exc}") from exc
    model.eval()
    return model, cfg
