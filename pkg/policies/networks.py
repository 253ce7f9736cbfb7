"""Parameter layouts and forward passes of π₀ and the failure-aware networks.

Every network reads a flat name -> array/Variable mapping so the same code
serves inference (plain arrays) and training (tape Variables). Parameter names
carry their role as a prefix:

``obs_encoder.*``   π₀ trunk (two affine+tanh layers), shared and frozen in FA training
``base_decoder.*``  π₀ head (affine to N, softmax), shared and frozen in FA training
``obs_projection.*`` FMP-1 projected embedding
``mem_encoder.*``   learned memory encoder (FMP-1.5, FMP-2)
``decoder.*``       failure-aware decoder (Q-values)
``recurrent.*``     FMP-2 gated recurrent cell
"""

from __future__ import annotations

import math
from typing import Literal, Mapping, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict

from app_core.errors import ArgumentError, DimensionError
from numkit.layers import (
    GRU_BLOCKS,
    add,
    affine,
    block_sum,
    gru_cell,
    mul,
    relu,
    repeat_blocks,
    softmax,
    tanh,
)
from numkit.params import ParamSet
from numkit.rng import Rng
from numkit.tape import ArrayLike, unpack, value_of

SHARED_PREFIXES = ("obs_encoder.", "base_decoder.")

Architecture = Literal["base", "fmp1", "fmp2"]
EmbeddingKind = Literal["affordance", "projected"]
MemEncoderKind = Literal["identity", "replica", "learned"]
DecoderKind = Literal["identity", "mlp"]


class ArchitectureSpec(BaseModel):
    """Shape and variant choices; stored in every checkpoint."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    architecture: Architecture = "base"
    observation_dim: int
    action_count: int
    hidden: int = 64
    embedding: EmbeddingKind = "affordance"
    mem_encoder: MemEncoderKind = "replica"
    decoder: DecoderKind = "mlp"
    replica: int = 1
    emit_first: bool = False

    @property
    def embedding_width(self) -> int:
        return self.action_count * self.replica


def _xavier(rng: Rng, fan_in: int, fan_out: int) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform_array((fan_out, fan_in), -limit, limit)


def _dense(prefix: str, suffix: str, rng: Rng, fan_in: int, fan_out: int, *, zero: bool = False) -> dict:
    weight = np.zeros((fan_out, fan_in)) if zero else _xavier(rng, fan_in, fan_out)
    return {f"{prefix}.w{suffix}": weight, f"{prefix}.b{suffix}": np.zeros(fan_out)}


# ----------------------------------------------------------------------
# π₀
# ----------------------------------------------------------------------
def init_base_params(spec: ArchitectureSpec, rng: Rng) -> ParamSet:
    arrays = {}
    arrays.update(_dense("obs_encoder", "1", rng.fork("obs_encoder.1"), spec.observation_dim, spec.hidden))
    arrays.update(_dense("obs_encoder", "2", rng.fork("obs_encoder.2"), spec.hidden, spec.hidden))
    arrays.update(_dense("base_decoder", "", rng.fork("base_decoder"), spec.hidden, spec.action_count))
    return ParamSet(arrays)


def check_observation(o: ArrayLike, p: Mapping[str, ArrayLike]) -> None:
    width = unpack(p["obs_encoder.w1"])[0].shape[1]
    ov = unpack(o)[0]
    if ov.ndim not in (1, 2) or ov.shape[-1] != width:
        raise DimensionError(f"observation of shape {ov.shape} does not match encoder input width {width}")


def trunk(o: ArrayLike, p: Mapping[str, ArrayLike]) -> ArrayLike:
    check_observation(o, p)
    hidden = tanh(affine(o, p["obs_encoder.w1"], p["obs_encoder.b1"]))
    return tanh(affine(hidden, p["obs_encoder.w2"], p["obs_encoder.b2"]))


def base_logits(o: ArrayLike, p: Mapping[str, ArrayLike]) -> ArrayLike:
    return affine(trunk(o, p), p["base_decoder.w"], p["base_decoder.b"])


def base_probs(o: ArrayLike, p: Mapping[str, ArrayLike]) -> ArrayLike:
    return softmax(base_logits(o, p))


# ----------------------------------------------------------------------
# FMP-1 / FMP-1.5
# ----------------------------------------------------------------------
def init_fmp1_params(spec: ArchitectureSpec, rng: Rng) -> dict[str, np.ndarray]:
    width = spec.embedding_width
    arrays: dict[str, np.ndarray] = {}
    if spec.embedding == "projected":
        arrays.update(_dense("obs_projection", "", rng.fork("obs_projection"), spec.hidden, width))
        # positive bias keeps the initial ReLU embedding away from zero
        arrays["obs_projection.b"] = np.full(width, 0.1)
    if spec.mem_encoder == "learned":
        arrays.update(_dense("mem_encoder", "1", rng.fork("mem_encoder.1"), spec.action_count, spec.hidden))
        arrays.update(_dense("mem_encoder", "2", rng.fork("mem_encoder.2"), spec.hidden, spec.hidden))
        arrays.update(_dense("mem_encoder", "3", rng.fork("mem_encoder.3"), spec.hidden, width))
        arrays["mem_encoder.b3"] = np.full(width, 0.1)
    if spec.decoder == "mlp":
        arrays.update(_dense("decoder", "1", rng.fork("decoder.1"), width, spec.hidden))
        arrays.update(_dense("decoder", "2", rng.fork("decoder.2"), spec.hidden, spec.action_count, zero=True))
    return arrays


def observation_embedding(o: ArrayLike, p: Mapping[str, ArrayLike], spec: ArchitectureSpec) -> ArrayLike:
    if spec.embedding == "affordance":
        return repeat_blocks(base_probs(o, p), spec.replica)
    if spec.embedding == "projected":
        return relu(affine(trunk(o, p), p["obs_projection.w"], p["obs_projection.b"]))
    raise ArgumentError(f"unknown embedding kind {spec.embedding!r}")


def memory_embedding(m: ArrayLike, p: Mapping[str, ArrayLike], spec: ArchitectureSpec) -> ArrayLike:
    if spec.mem_encoder == "identity":
        return m
    if spec.mem_encoder == "replica":
        return repeat_blocks(m, spec.replica)
    if spec.mem_encoder == "learned":
        hidden = tanh(affine(m, p["mem_encoder.w1"], p["mem_encoder.b1"]))
        hidden = tanh(affine(hidden, p["mem_encoder.w2"], p["mem_encoder.b2"]))
        return relu(affine(hidden, p["mem_encoder.w3"], p["mem_encoder.b3"]))
    raise ArgumentError(f"unknown memory encoder kind {spec.mem_encoder!r}")


def decode(e: ArrayLike, p: Mapping[str, ArrayLike], spec: ArchitectureSpec) -> ArrayLike:
    base = block_sum(e, spec.replica)
    if spec.decoder == "identity":
        return base
    if spec.decoder == "mlp":
        hidden = tanh(affine(e, p["decoder.w1"], p["decoder.b1"]))
        return add(base, affine(hidden, p["decoder.w2"], p["decoder.b2"]))
    raise ArgumentError(f"unknown decoder kind {spec.decoder!r}")


def fmp1_q(o: ArrayLike, m: ArrayLike, p: Mapping[str, ArrayLike], spec: ArchitectureSpec) -> ArrayLike:
    """``D(E_o(o) ⊙ E_m(m))`` for one row or a batch of rows."""

    e_o = observation_embedding(o, p, spec)
    e_m = memory_embedding(m, p, spec)
    width_o = unpack(e_o)[0].shape[-1]
    width_m = unpack(e_m)[0].shape[-1]
    if width_o != width_m:
        raise DimensionError(f"observation embedding width {width_o} != memory embedding width {width_m}")
    return decode(mul(e_o, e_m), p, spec)


# ----------------------------------------------------------------------
# FMP-2
# ----------------------------------------------------------------------
def init_fmp2_params(spec: ArchitectureSpec, base: ParamSet, rng: Rng) -> dict[str, np.ndarray]:
    width = spec.hidden
    arrays: dict[str, np.ndarray] = {}
    cell_rng = rng.fork("recurrent")
    for block in GRU_BLOCKS:
        if block.startswith("b_"):
            arrays[f"recurrent.{block}"] = np.zeros(width)
        else:
            arrays[f"recurrent.{block}"] = _xavier(cell_rng.fork(block), width, width)
    arrays.update(_dense("mem_encoder", "1", rng.fork("mem_encoder.1"), spec.action_count, width))
    arrays.update(_dense("mem_encoder", "2", rng.fork("mem_encoder.2"), width, width))
    # the Q head starts from a copy of the π₀ head
    arrays["decoder.w"] = np.array(base["base_decoder.w"])
    arrays["decoder.b"] = np.array(base["base_decoder.b"])
    return arrays


def _cell(p: Mapping[str, ArrayLike]) -> dict[str, ArrayLike]:
    return {block: p[f"recurrent.{block}"] for block in GRU_BLOCKS}


def fmp2_memory_input(m: ArrayLike, p: Mapping[str, ArrayLike]) -> ArrayLike:
    hidden = tanh(affine(m, p["mem_encoder.w1"], p["mem_encoder.b1"]))
    return tanh(affine(hidden, p["mem_encoder.w2"], p["mem_encoder.b2"]))


def fmp2_seed(o: ArrayLike, p: Mapping[str, ArrayLike], h: Optional[ArrayLike] = None) -> ArrayLike:
    """Hidden state after consuming ``E_o(o)`` from a zero (or given) state."""

    x = trunk(o, p)
    if h is None:
        h = np.zeros(unpack(x)[0].shape)
    return gru_cell(x, h, _cell(p))


def fmp2_step(m: ArrayLike, h: ArrayLike, p: Mapping[str, ArrayLike]) -> ArrayLike:
    return gru_cell(fmp2_memory_input(m, p), h, _cell(p))


def fmp2_head(h: ArrayLike, p: Mapping[str, ArrayLike]) -> ArrayLike:
    return affine(h, p["decoder.w"], p["decoder.b"])


def fmp2_q_unrolled(
    o: ArrayLike,
    memories: np.ndarray,
    lengths: np.ndarray,
    p: Mapping[str, ArrayLike],
) -> ArrayLike:
    """Batched masked unroll: seed from ``o`` then feed ``memories[:, j]`` for ``j < lengths``.

    ``memories`` has shape (B, T, N); rows shorter than T keep their hidden state
    once their own sequence ends.
    """

    memories = np.asarray(memories, dtype=np.float64)
    lengths = np.asarray(lengths, dtype=np.int64)
    if memories.ndim != 3 or lengths.shape != (memories.shape[0],):
        raise DimensionError(f"memories {memories.shape} / lengths {lengths.shape} are not a (B, T, N) batch")
    h = fmp2_seed(o, p)
    for step in range(memories.shape[1]):
        active = (lengths > step).astype(np.float64)[:, None]
        if not active.any():
            break
        stepped = fmp2_step(memories[:, step, :], h, p)
        h = add(mul(active, stepped), mul(1.0 - active, h))
    return fmp2_head(h, p)


def hidden_width(p: Mapping[str, ArrayLike]) -> int:
    return int(value_of(p["recurrent.b_z"]).shape[0])


__all__ = [
    "ArchitectureSpec",
    "SHARED_PREFIXES",
    "base_logits",
    "base_probs",
    "check_observation",
    "decode",
    "fmp1_q",
    "fmp2_head",
    "fmp2_q_unrolled",
    "fmp2_seed",
    "fmp2_step",
    "hidden_width",
    "init_base_params",
    "init_fmp1_params",
    "init_fmp2_params",
    "memory_embedding",
    "observation_embedding",
    "trunk",
]
