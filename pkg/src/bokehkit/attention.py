"""Reference implementation of focus-masked self-attention.

Certifies the mask semantics at toy scale: tokens from the in-focus region
may only attend to in-focus tokens, defocused tokens only to defocused ones,
and an all-ones focus mask degenerates to ordinary dense attention (the
additive mask becomes all-zero, the convention the restoration phase uses).

The additive mask is added to the raw scores *before* the 1/sqrt(d) scaling.
Adding it after scaling is the more common formulation; both zero out
exactly the same weights under softmax, since the sentinel dominates either
way. Minus infinity is realized as a finite sentinel and masked weights are
zeroed exactly after the softmax, so "cross-region weight == 0" is literally
assertable.
"""

from __future__ import annotations

import numpy as np

from .defocus import FocusMask

NEG_SENTINEL = -1e9


def build_mask(mask: FocusMask) -> np.ndarray:
    """Flatten a focus mask into an n x n additive attention mask.

    Entry (i, j) is 0 when tokens i and j come from the same region and the
    negative sentinel otherwise. The diagonal is always 0: a token attends to
    itself no matter what.
    """
    regions = mask.values.reshape(-1)
    same = regions[:, None] == regions[None, :]
    out = np.where(same, 0.0, NEG_SENTINEL)
    np.fill_diagonal(out, 0.0)
    return out.astype(np.float64)


def masked_attention(q: np.ndarray, k: np.ndarray, v: np.ndarray,
                     mask: np.ndarray) -> np.ndarray:
    """softmax((Q K^T + M) / sqrt(d)) V with exact post-softmax zeroing.

    Rows of the weight matrix are convex combinations over same-region
    tokens only; each row sums to 1 (the diagonal guarantees at least one
    unmasked entry per row).
    """
    q = _validate_tokens(q, "q")
    k = _validate_tokens(k, "k")
    v = _validate_tokens(v, "v")
    if q.shape != k.shape or q.shape[0] != v.shape[0]:
        raise ValueError(f"token shapes disagree: q {q.shape}, k {k.shape}, v {v.shape}")
    n, dim = q.shape
    mask = np.asarray(mask, dtype=np.float64)
    if mask.shape != (n, n):
        raise ValueError(f"mask must be ({n}, {n}), got {mask.shape}")

    scores = (q @ k.T + mask) / np.sqrt(dim)
    blocked = mask <= NEG_SENTINEL / 2
    scores = scores - scores.max(axis=1, keepdims=True)
    weights = np.exp(scores)
    weights[blocked] = 0.0
    weights /= weights.sum(axis=1, keepdims=True)
    return weights @ v


def attention_weights(q: np.ndarray, k: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """The row-stochastic weight matrix of :func:`masked_attention`."""
    q = _validate_tokens(q, "q")
    k = _validate_tokens(k, "k")
    n, dim = q.shape
    mask = np.asarray(mask, dtype=np.float64)
    scores = (q @ k.T + mask) / np.sqrt(dim)
    blocked = mask <= NEG_SENTINEL / 2
    scores = scores - scores.max(axis=1, keepdims=True)
    weights = np.exp(scores)
    weights[blocked] = 0.0
    weights /= weights.sum(axis=1, keepdims=True)
    return weights


def _validate_tokens(t: np.ndarray, name: str) -> np.ndarray:
    arr = np.asarray(t, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] < 1:
        raise ValueError(f"{name} must be (n, dim) with dim >= 1, got {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite values")
    return arr
