"""Sequence encoding shared by the learners: squeezed records become
recurrent-net inputs of (observation, previous macro one-hot) pairs, with one
extra step appended per sample so the net also yields values for the
next-history positions used in bootstrap targets."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .buffers import PaddedBatch


def onehot(ids: np.ndarray, n: int) -> np.ndarray:
    """One-hot encode along a new trailing axis; negative ids give zeros."""
    out = np.zeros(ids.shape + (n,))
    valid = ids >= 0
    if valid.any():
        flat = out.reshape(-1, n)
        fid = ids.reshape(-1)
        rows = np.flatnonzero(valid.reshape(-1))
        flat[rows, fid[rows]] = 1.0
    return out


def _lengths(batch: PaddedBatch) -> np.ndarray:
    return batch.mask.sum(axis=0).astype(np.int64)


def dec_inputs(batch: PaddedBatch, n_macros: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-agent inputs: (z_k, one-hot of the macro preceding record k), plus
    the extension step (z'_{K-1}, one-hot m_{K-1}) at each sample's end.

    Returns (inputs [K+1, B, w + n_macros], mask [K+1, B], lengths [B]).
    """
    K, B = batch.m.shape
    lengths = _lengths(batch)
    prev = onehot(batch.prev_m, n_macros)
    core = np.concatenate([batch.z, prev], axis=2)
    width = core.shape[2]
    inputs = np.zeros((K + 1, B, width))
    inputs[:K] = core
    emask = np.zeros((K + 1, B))
    emask[:K] = batch.mask
    for b in range(B):
        k = int(lengths[b])
        if k == 0:
            continue
        inputs[k, b] = np.concatenate(
            [batch.z_next[k - 1, b], onehot(batch.m[k - 1, b : b + 1], n_macros)[0]]
        )
        emask[k, b] = 1.0
    return inputs, emask, lengths


def joint_inputs(
    batch: PaddedBatch,
    catalog_sizes: Sequence[int],
    use_state: bool = False,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Joint inputs: (joint observation or centralized features, per-agent
    one-hots of the previous joint macro), with the extension step."""
    K, B = batch.m.shape
    lengths = _lengths(batch)
    obs = batch.x if use_state else batch.z
    obs_next = batch.x_next if use_state else batch.z_next
    prev_parts = [
        onehot(batch.prev_m_comp[:, :, i], n) for i, n in enumerate(catalog_sizes)
    ]
    core = np.concatenate([obs] + prev_parts, axis=2)
    width = core.shape[2]
    inputs = np.zeros((K + 1, B, width))
    inputs[:K] = core
    emask = np.zeros((K + 1, B))
    emask[:K] = batch.mask
    for b in range(B):
        k = int(lengths[b])
        if k == 0:
            continue
        parts = [obs_next[k - 1, b]]
        for i, n in enumerate(catalog_sizes):
            parts.append(onehot(batch.m_comp[k - 1, b : b + 1, i], n)[0])
        inputs[k, b] = np.concatenate(parts)
        emask[k, b] = 1.0
    return inputs, emask, lengths


def gather_actions(q: np.ndarray, actions: np.ndarray) -> np.ndarray:
    """q [K, B, A] gathered at actions [K, B] -> [K, B]."""
    K, B = actions.shape
    return np.take_along_axis(
        q, actions.reshape(K, B, 1), axis=2
    ).reshape(K, B)


def allowed_next_mask(batch: PaddedBatch, comp_table: np.ndarray) -> np.ndarray:
    """Joint macro-actions consistent with the agents still running at each
    record's end (they keep their component).  comp_table [A, n] maps product
    ids to components.  Returns bool [K, B, A]."""
    match = comp_table[None, None, :, :] == batch.m_comp[:, :, None, :]
    return (batch.flags[:, :, None, :] | match).all(axis=3)


def comp_table(catalog_sizes: Sequence[int]) -> np.ndarray:
    from .core import decode_joint, joint_catalog_size

    total = joint_catalog_size(catalog_sizes)
    return np.array(
        [decode_joint(a, catalog_sizes) for a in range(total)], dtype=np.int64
    )
