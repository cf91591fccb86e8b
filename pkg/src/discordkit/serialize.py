"""JSON and CSV interchange formats.

Complex matrices are encoded as row-major flat lists of ``[re, im]``
pairs.  State files carry ``{"dims": [dA, dB] or [d], "matrix": ...}``;
channel files carry ``{"type": "kraus"|"choi", "d_in": ..., "d_out": ...,
"data": ...}``.  The channel writer always emits the canonical form:
Kraus operators extracted from the Choi eigendecomposition in descending
eigenvalue order.  Readers enforce the physical invariants and raise
:class:`FileFormatError` naming the offending field.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .annihilators import (
    DAChannelSpec,
    Entry,
    IdentityAction,
    MultiEntry,
    PointTo,
    Rank1Entry,
)
from .channels import InvalidChannelError, QuantumChannel, canonicalize
from .cqsets import BothEntry, ConvexCQSubsetSpec, FixedEntry, PointEntry, validate_spec
from .discord import DiscordResult
from .states import BipartiteState, DensityOperator, InvalidStateError


class FileFormatError(ValueError):
    """Malformed input file; the message names the field at fault."""

    def __init__(self, field: str, problem: str):
        self.field = field
        super().__init__(f"{field}: {problem}")


def encode_matrix(m: np.ndarray) -> list:
    flat = np.asarray(m, dtype=complex).reshape(-1)
    return [[float(z.real), float(z.imag)] for z in flat]


def decode_matrix(data, shape: tuple[int, int], field: str) -> np.ndarray:
    if not isinstance(data, list):
        raise FileFormatError(field, f"expected a list of [re, im] pairs, got {type(data).__name__}")
    expected = shape[0] * shape[1]
    if len(data) != expected:
        raise FileFormatError(field, f"expected {expected} entries for shape {shape}, got {len(data)}")
    out = np.empty(expected, dtype=complex)
    for idx, pair in enumerate(data):
        if (
            not isinstance(pair, (list, tuple))
            or len(pair) != 2
            or not all(isinstance(x, (int, float)) for x in pair)
        ):
            raise FileFormatError(f"{field}[{idx}]", f"expected an [re, im] pair, got {pair!r}")
        out[idx] = complex(pair[0], pair[1])
    return out.reshape(shape)


def decode_vector(data, dim: int, field: str) -> np.ndarray:
    return decode_matrix(data, (dim, 1), field).reshape(-1)


def _load_json(source) -> dict:
    if isinstance(source, dict):
        return source
    path = Path(source)
    try:
        payload = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FileFormatError(str(path), f"invalid JSON ({exc})") from exc
    if not isinstance(payload, dict):
        raise FileFormatError(str(path), "top-level value must be an object")
    return payload


# -- states ---------------------------------------------------------------------


def state_to_json(state: DensityOperator | BipartiteState) -> dict:
    if isinstance(state, BipartiteState):
        return {"dims": [state.dim_a, state.dim_b], "matrix": encode_matrix(state.matrix)}
    return {"dims": [state.dim], "matrix": encode_matrix(state.matrix)}


def load_state(source) -> DensityOperator | BipartiteState:
    payload = _load_json(source)
    if "dims" not in payload:
        raise FileFormatError("dims", "missing")
    dims = payload["dims"]
    if not isinstance(dims, list) or len(dims) not in (1, 2) or not all(
        isinstance(d, int) and d >= 1 for d in dims
    ):
        raise FileFormatError("dims", f"expected [d] or [dA, dB] of positive integers, got {dims!r}")
    total = int(np.prod(dims))
    if "matrix" not in payload:
        raise FileFormatError("matrix", "missing")
    m = decode_matrix(payload["matrix"], (total, total), "matrix")
    try:
        op = DensityOperator.from_matrix(m, name="matrix")
    except InvalidStateError as exc:
        raise FileFormatError("matrix", str(exc)) from exc
    if len(dims) == 2:
        return BipartiteState(dims[0], dims[1], op)
    return op


def save_state(state, path):
    Path(path).write_text(json.dumps(state_to_json(state), indent=2) + "\n")


# -- channels --------------------------------------------------------------------


def channel_to_json(channel: QuantumChannel) -> dict:
    canonical = canonicalize(channel)
    return {
        "type": "kraus",
        "d_in": canonical.dim_in,
        "d_out": canonical.dim_out,
        "data": [encode_matrix(k) for k in canonical.kraus],
    }


def load_channel(source, *, cp_tol: float = 1e-9) -> QuantumChannel:
    payload = _load_json(source)
    kind = payload.get("type")
    if kind not in ("kraus", "choi"):
        raise FileFormatError("type", f"expected 'kraus' or 'choi', got {kind!r}")
    for key in ("d_in", "d_out"):
        if not isinstance(payload.get(key), int) or payload[key] < 1:
            raise FileFormatError(key, f"expected a positive integer, got {payload.get(key)!r}")
    din, dout = payload["d_in"], payload["d_out"]
    data = payload.get("data")
    try:
        if kind == "kraus":
            if not isinstance(data, list) or not data:
                raise FileFormatError("data", "expected a non-empty list of Kraus matrices")
            ops = [
                decode_matrix(item, (dout, din), f"data[{i}]") for i, item in enumerate(data)
            ]
            return QuantumChannel.from_kraus(ops, din, dout)
        d = din * dout
        j = decode_matrix(data, (d, d), "data")
        return QuantumChannel.from_choi(j, din, dout, cp_tol=cp_tol)
    except InvalidChannelError as exc:
        raise FileFormatError("data", str(exc)) from exc


def save_channel(channel: QuantumChannel, path):
    Path(path).write_text(json.dumps(channel_to_json(channel), indent=2) + "\n")


# -- annihilating-channel specs ----------------------------------------------------


def _action_to_json(action) -> dict:
    if isinstance(action, PointTo):
        return {"type": "point", "state": encode_matrix(action.state.matrix)}
    return {"type": "identity"}


def da_spec_to_json(spec: DAChannelSpec) -> dict:
    entries = []
    for entry in spec.entries:
        if isinstance(entry, Rank1Entry):
            entries.append(
                {
                    "kind": "rank1",
                    "vector": encode_matrix(np.asarray(entry.vector).reshape(-1, 1)),
                    "action": _action_to_json(entry.action),
                }
            )
        else:
            entries.append(
                {
                    "kind": "multi",
                    "projector": encode_matrix(entry.projector),
                    "action": _action_to_json(entry.action),
                }
            )
    payload = {"dims": [spec.dim_a, spec.dim_b], "entries": entries}
    if spec.pre_channel is not None:
        payload["pre_channel"] = channel_to_json(spec.pre_channel)
    return payload


def _action_from_json(data, dim_b: int, field: str):
    if not isinstance(data, dict) or data.get("type") not in ("point", "identity"):
        raise FileFormatError(field, "expected an action of type 'point' or 'identity'")
    if data["type"] == "identity":
        return IdentityAction()
    m = decode_matrix(data.get("state"), (dim_b, dim_b), f"{field}.state")
    try:
        return PointTo(DensityOperator.from_matrix(m, name=f"{field}.state"))
    except InvalidStateError as exc:
        raise FileFormatError(f"{field}.state", str(exc)) from exc


def load_da_spec(source) -> DAChannelSpec:
    from .annihilators import InvalidDASpecError

    payload = _load_json(source)
    dims = payload.get("dims")
    if (
        not isinstance(dims, list)
        or len(dims) != 2
        or not all(isinstance(d, int) and d >= 1 for d in dims)
    ):
        raise FileFormatError("dims", f"expected [dA, dB] of positive integers, got {dims!r}")
    dim_a, dim_b = dims
    raw_entries = payload.get("entries")
    if not isinstance(raw_entries, list) or not raw_entries:
        raise FileFormatError("entries", "expected a non-empty list")
    entries: list[Entry] = []
    for i, item in enumerate(raw_entries):
        field = f"entries[{i}]"
        if not isinstance(item, dict):
            raise FileFormatError(field, "expected an object")
        kind = item.get("kind")
        action = _action_from_json(item.get("action"), dim_b, f"{field}.action")
        if kind == "rank1":
            vec = decode_vector(item.get("vector"), dim_a, f"{field}.vector")
            entries.append(Rank1Entry(vector=vec, action=action))
        elif kind == "multi":
            if isinstance(action, IdentityAction):
                raise FileFormatError(
                    f"{field}.action",
                    "a multi-dimensional subspace requires a point action "
                    "(the identity is only allowed on rank-1 entries)",
                )
            proj = decode_matrix(item.get("projector"), (dim_a, dim_a), f"{field}.projector")
            entries.append(MultiEntry(projector=proj, action=action))
        else:
            raise FileFormatError(f"{field}.kind", f"expected 'rank1' or 'multi', got {kind!r}")
    pre = None
    if "pre_channel" in payload:
        pre = load_channel(payload["pre_channel"])
    try:
        return DAChannelSpec.make(dim_a, dim_b, entries, pre_channel=pre)
    except InvalidDASpecError as exc:
        raise FileFormatError("entries", str(exc)) from exc


# -- convex CQ subset specs ----------------------------------------------------------


def cq_subset_spec_to_json(spec: ConvexCQSubsetSpec) -> dict:
    return {
        "dims": [spec.dim_a, spec.dim_b],
        "both": [
            {
                "vector": encode_matrix(np.asarray(e.vector).reshape(-1, 1)),
                "state": encode_matrix(e.state.matrix),
            }
            for e in spec.both_entries
        ],
        "fixed": [
            {
                "vector": encode_matrix(np.asarray(e.vector).reshape(-1, 1)),
                "generators": None
                if e.generators is None
                else [encode_matrix(g.matrix) for g in e.generators],
            }
            for e in spec.fixed_entries
        ],
        "point": [
            {
                "projector": encode_matrix(e.projector),
                "state": encode_matrix(e.state.matrix),
            }
            for e in spec.point_entries
        ],
    }


def _state_field(data, dim: int, field: str) -> DensityOperator:
    m = decode_matrix(data, (dim, dim), field)
    try:
        return DensityOperator.from_matrix(m, name=field)
    except InvalidStateError as exc:
        raise FileFormatError(field, str(exc)) from exc


def load_cq_subset_spec(source) -> ConvexCQSubsetSpec:
    payload = _load_json(source)
    dims = payload.get("dims")
    if (
        not isinstance(dims, list)
        or len(dims) != 2
        or not all(isinstance(d, int) and d >= 1 for d in dims)
    ):
        raise FileFormatError("dims", f"expected [dA, dB] of positive integers, got {dims!r}")
    dim_a, dim_b = dims
    both, fixed, point = [], [], []
    for i, item in enumerate(payload.get("both", [])):
        field = f"both[{i}]"
        both.append(
            BothEntry(
                vector=decode_vector(item.get("vector"), dim_a, f"{field}.vector"),
                state=_state_field(item.get("state"), dim_b, f"{field}.state"),
            )
        )
    for i, item in enumerate(payload.get("fixed", [])):
        field = f"fixed[{i}]"
        raw = item.get("generators")
        if raw is None:
            generators = None
        elif isinstance(raw, list) and raw:
            generators = tuple(
                _state_field(g, dim_b, f"{field}.generators[{j}]") for j, g in enumerate(raw)
            )
        else:
            raise FileFormatError(f"{field}.generators", "expected null or a non-empty list")
        fixed.append(
            FixedEntry(
                vector=decode_vector(item.get("vector"), dim_a, f"{field}.vector"),
                generators=generators,
            )
        )
    for i, item in enumerate(payload.get("point", [])):
        field = f"point[{i}]"
        point.append(
            PointEntry(
                projector=decode_matrix(item.get("projector"), (dim_a, dim_a), f"{field}.projector"),
                state=_state_field(item.get("state"), dim_b, f"{field}.state"),
            )
        )
    spec = ConvexCQSubsetSpec(
        dim_a=dim_a,
        dim_b=dim_b,
        both_entries=tuple(both),
        fixed_entries=tuple(fixed),
        point_entries=tuple(point),
    )
    diag = validate_spec(spec)
    if not diag:
        raise FileFormatError("entries", diag.message)
    return spec


# -- results -------------------------------------------------------------------------


def discord_result_to_json(result: DiscordResult) -> dict:
    meas = result.optimal_measurement
    if meas.dim == 2:
        measurement = {
            "type": "bloch",
            "vector": [float(x) for x in meas.bloch_vector()],
        }
    else:
        columns = []
        for proj in meas.projectors:
            eigvals, eigvecs = np.linalg.eigh(proj)
            columns.append(encode_matrix(eigvecs[:, -1].reshape(-1, 1)))
        measurement = {"type": "unitary-columns", "columns": columns}
    return {
        "discord": result.value,
        "mutual_information": result.mutual_information,
        "classical_correlation": result.classical_correlation,
        "measurement": measurement,
        "optimizer": {
            "restarts": result.trace.restarts,
            "best_values": list(result.trace.best_values),
        },
    }


def verdict_to_json(verdict) -> dict:
    payload = {"kind": verdict.kind, "residual": verdict.residual, "notes": verdict.notes}
    if verdict.witness is not None:
        payload["witness"] = _jsonify(verdict.witness)
    return payload


def _jsonify(value):
    if isinstance(value, dict):
        return {k: _jsonify(v) for k, v in value.items()}
    if isinstance(value, (DensityOperator, BipartiteState)):
        return state_to_json(value)
    if isinstance(value, np.ndarray):
        return encode_matrix(value.reshape(-1, 1)) if value.ndim == 1 else encode_matrix(value)
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value
