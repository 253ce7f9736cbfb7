"""Differentiable layers.

Every function accepts plain arrays or tape :class:`~numkit.tape.Variable`
objects and returns the same kind: with no Variable among the inputs nothing is
recorded and a plain array comes back.
"""

from __future__ import annotations

from typing import Mapping

import numpy as np

from app_core.errors import DimensionError

from .tape import ArrayLike, emit, tape_of, unpack

GRU_BLOCKS = ("W_z", "U_z", "b_z", "W_r", "U_r", "b_r", "W_h", "U_h", "b_h")


def _reduce_to(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to ``shape``."""

    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _check_broadcast(a: np.ndarray, b: np.ndarray, op: str) -> tuple[int, ...]:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError as exc:
        raise DimensionError(f"{op}: shapes {a.shape} and {b.shape} do not broadcast") from exc


def add(a: ArrayLike, b: ArrayLike) -> ArrayLike:
    av, avar = unpack(a)
    bv, bvar = unpack(b)
    _check_broadcast(av, bv, "add")
    return emit(av + bv, (avar, bvar), lambda g: (_reduce_to(g, av.shape), _reduce_to(g, bv.shape)))


def sub(a: ArrayLike, b: ArrayLike) -> ArrayLike:
    av, avar = unpack(a)
    bv, bvar = unpack(b)
    _check_broadcast(av, bv, "sub")
    return emit(av - bv, (avar, bvar), lambda g: (_reduce_to(g, av.shape), _reduce_to(-g, bv.shape)))


def mul(a: ArrayLike, b: ArrayLike) -> ArrayLike:
    av, avar = unpack(a)
    bv, bvar = unpack(b)
    _check_broadcast(av, bv, "mul")
    return emit(
        av * bv,
        (avar, bvar),
        lambda g: (_reduce_to(g * bv, av.shape), _reduce_to(g * av, bv.shape)),
    )


def linear(x: ArrayLike, W: ArrayLike) -> ArrayLike:
    """``W·x`` for a vector ``x`` or row-wise for a batch ``x`` of shape (B, in)."""

    xv, xvar = unpack(x)
    Wv, Wvar = unpack(W)
    if Wv.ndim != 2 or xv.ndim not in (1, 2) or xv.shape[-1] != Wv.shape[1]:
        raise DimensionError(f"linear: x {xv.shape} does not fit W {Wv.shape}")
    out = xv @ Wv.T

    def backward(g: np.ndarray):
        gx = g @ Wv
        gW = np.outer(g, xv) if xv.ndim == 1 else g.T @ xv
        return gx, gW

    return emit(out, (xvar, Wvar), backward)


def affine(x: ArrayLike, W: ArrayLike, b: ArrayLike) -> ArrayLike:
    """``W·x + b``."""

    Wv, _ = unpack(W)
    bv, _ = unpack(b)
    if bv.ndim != 1 or Wv.ndim != 2 or bv.shape[0] != Wv.shape[0]:
        raise DimensionError(f"affine: bias {bv.shape} does not fit W {Wv.shape}")
    return add(linear(x, W), b)


def tanh(x: ArrayLike) -> ArrayLike:
    xv, xvar = unpack(x)
    y = np.tanh(xv)
    return emit(y, (xvar,), lambda g: (g * (1.0 - y * y),))


def sigmoid(x: ArrayLike) -> ArrayLike:
    xv, xvar = unpack(x)
    y = 0.5 * (1.0 + np.tanh(0.5 * xv))
    return emit(y, (xvar,), lambda g: (g * y * (1.0 - y),))


def relu(x: ArrayLike) -> ArrayLike:
    xv, xvar = unpack(x)
    tape = tape_of((xvar,))
    if tape is not None:
        tape.note_kink(xv)
    active = xv > 0.0
    return emit(np.where(active, xv, 0.0), (xvar,), lambda g: (g * active,))


def softmax(v: ArrayLike) -> ArrayLike:
    """Softmax along the last axis."""

    vv, vvar = unpack(v)
    if vv.ndim == 0 or vv.shape[-1] == 0:
        raise DimensionError("softmax of an empty vector")
    shifted = vv - np.max(vv, axis=-1, keepdims=True)
    e = np.exp(shifted)
    y = e / np.sum(e, axis=-1, keepdims=True)

    def backward(g: np.ndarray):
        return (y * (g - np.sum(g * y, axis=-1, keepdims=True)),)

    return emit(y, (vvar,), backward)


def log_softmax(v: ArrayLike) -> ArrayLike:
    vv, vvar = unpack(v)
    if vv.ndim == 0 or vv.shape[-1] == 0:
        raise DimensionError("log_softmax of an empty vector")
    shifted = vv - np.max(vv, axis=-1, keepdims=True)
    log_z = np.log(np.sum(np.exp(shifted), axis=-1, keepdims=True))
    y = shifted - log_z
    probs = np.exp(y)

    def backward(g: np.ndarray):
        return (g - probs * np.sum(g, axis=-1, keepdims=True),)

    return emit(y, (vvar,), backward)


def repeat_blocks(x: ArrayLike, factor: int) -> ArrayLike:
    """Replica broadcast: each entry of the last axis repeated ``factor`` times."""

    xv, xvar = unpack(x)
    if factor < 1:
        raise DimensionError(f"repeat factor must be >= 1, got {factor}")
    y = np.repeat(xv, factor, axis=-1)
    return emit(y, (xvar,), lambda g: (g.reshape(*xv.shape, factor).sum(axis=-1),))


def block_sum(x: ArrayLike, factor: int) -> ArrayLike:
    """Sum consecutive blocks of ``factor`` entries along the last axis."""

    xv, xvar = unpack(x)
    if factor < 1 or xv.shape[-1] % factor:
        raise DimensionError(f"width {xv.shape[-1]} is not a multiple of block {factor}")
    y = xv.reshape(*xv.shape[:-1], xv.shape[-1] // factor, factor).sum(axis=-1)
    return emit(y, (xvar,), lambda g: (np.repeat(g, factor, axis=-1),))


def take_along_actions(q: ArrayLike, actions: np.ndarray) -> ArrayLike:
    """``q[i, actions[i]]`` for a (B, N) batch."""

    qv, qvar = unpack(q)
    actions = np.asarray(actions, dtype=np.int64)
    if qv.ndim != 2 or actions.shape != (qv.shape[0],):
        raise DimensionError(f"take_along_actions: q {qv.shape} vs actions {actions.shape}")
    rows = np.arange(qv.shape[0])
    y = qv[rows, actions]

    def backward(g: np.ndarray):
        grad = np.zeros_like(qv)
        np.add.at(grad, (rows, actions), g)
        return (grad,)

    return emit(y, (qvar,), backward)


def mean(x: ArrayLike) -> ArrayLike:
    xv, xvar = unpack(x)
    if xv.size == 0:
        raise DimensionError("mean of an empty array")
    return emit(np.asarray(xv.mean()), (xvar,), lambda g: (np.full_like(xv, float(g) / xv.size),))


def gru_cell(x: ArrayLike, h: ArrayLike, params: Mapping[str, ArrayLike]) -> ArrayLike:
    """One gated recurrent step.

    Convention: ``z = σ(W_z x + U_z h + b_z)``, ``r = σ(W_r x + U_r h + b_r)``,
    ``ĥ = tanh(W_h x + U_h (r ⊙ h) + b_h)`` and ``h' = (1 - z) ⊙ h + z ⊙ ĥ``.
    ``x`` and ``h`` share the cell width ``d``; all ``W_*``/``U_*`` are d×d.
    """

    xv, _ = unpack(x)
    hv, _ = unpack(h)
    missing = [name for name in GRU_BLOCKS if name not in params]
    if missing:
        raise DimensionError(f"gru_cell: missing parameter blocks {missing}")
    width = unpack(params["b_z"])[0].shape[0]
    if xv.shape[-1] != width or hv.shape[-1] != width:
        raise DimensionError(f"gru_cell: x {xv.shape} / h {hv.shape} do not match cell width {width}")
    for name in GRU_BLOCKS:
        shape = unpack(params[name])[0].shape
        expected = (width,) if name.startswith("b_") else (width, width)
        if shape != expected:
            raise DimensionError(f"gru_cell: {name} has shape {shape}, expected {expected}")

    z = sigmoid(add(affine(x, params["W_z"], params["b_z"]), linear(h, params["U_z"])))
    r = sigmoid(add(affine(x, params["W_r"], params["b_r"]), linear(h, params["U_r"])))
    candidate = tanh(add(affine(x, params["W_h"], params["b_h"]), linear(mul(r, h), params["U_h"])))
    return add(h, mul(z, sub(candidate, h)))


__all__ = [
    "GRU_BLOCKS",
    "add",
    "affine",
    "block_sum",
    "gru_cell",
    "linear",
    "log_softmax",
    "mean",
    "mul",
    "relu",
    "repeat_blocks",
    "sigmoid",
    "softmax",
    "sub",
    "take_along_actions",
    "tanh",
]
