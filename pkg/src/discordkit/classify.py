"""Decision procedures for discord-destroying channel families.

Point channels (the only channels on B that break discord), quantum-
classical measure-and-prepare channels (the only ones on A that do),
entanglement breaking via the PPT criterion, and the combined classifier
with its tetrahedron sweep over unital qubit channels.  Every negative
verdict carries a witness that can be re-checked independently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .annihilators import CertificationReport, MatchResult, apply_and_certify, structural_match
from .channels import (
    QuantumChannel,
    TransferAnalysis,
    analyze_transfer,
    choi_distance,
    extend,
    make_qc_channel,
    make_unital_qubit,
    UnitalQubitParams,
)
from .discord import Hybrid, discord, is_cq_exact
from .states import (
    BipartiteState,
    DensityOperator,
    as_rng,
    basis_ket,
    bell_state,
    partial_trace_matrix,
    random_density,
)

POINT_TOL = 1e-8
QC_TOL = 1e-8
PPT_TOL = 1e-9
WITNESS_BUDGET = 500


@dataclass(frozen=True, eq=False)
class Verdict:
    """Yes/no/unknown answer with a re-checkable witness on the negative side."""

    kind: str  # "yes" | "no" | "unknown"
    residual: float
    witness: dict | None = None
    notes: str = ""
    details: dict | None = None


# -- witness probe states -----------------------------------------------------


def _fourier_ket(dim: int, k: int) -> np.ndarray:
    phases = np.exp(2j * np.pi * k * np.arange(dim) / dim)
    return phases / np.sqrt(dim)


def witness_probe_states(dim_a: int, dim_b: int, budget: int = WITNESS_BUDGET, seed: int = 137):
    """Deterministic probe family: entangled states, product extremes and
    noncommuting classical mixtures first, then seeded random states."""
    states: list[BipartiteState] = []
    if dim_a == 2 and dim_b == 2:
        states.extend(bell_state(k) for k in range(4))
    elif min(dim_a, dim_b) >= 2:
        states.append(_embedded_max_entangled(dim_a, dim_b))
    for i in range(min(dim_a, 2)):
        for j in range(min(dim_b, 2)):
            states.append(
                BipartiteState(
                    dim_a,
                    dim_b,
                    DensityOperator.pure(np.kron(basis_ket(dim_a, i), basis_ket(dim_b, j))),
                )
            )
    plus_a = _fourier_ket(dim_a, 1) if dim_a > 1 else basis_ket(1, 0)
    plus_b = _fourier_ket(dim_b, 1) if dim_b > 1 else basis_ket(1, 0)
    zero_a, zero_b = basis_ket(dim_a, 0), basis_ket(dim_b, 0)
    half = 0.5
    mixtures = [
        half * np.kron(np.outer(zero_a, zero_a.conj()), np.outer(zero_b, zero_b.conj()))
        + half * np.kron(np.outer(plus_a, plus_a.conj()), np.outer(plus_b, plus_b.conj())),
        half * np.kron(np.outer(zero_a, zero_a.conj()), np.outer(zero_b, zero_b.conj()))
        + half
        * np.kron(
            np.outer(plus_a, plus_a.conj()),
            np.outer(basis_ket(dim_b, dim_b - 1), basis_ket(dim_b, dim_b - 1).conj()),
        ),
    ]
    for m in mixtures:
        states.append(BipartiteState.from_matrix(m, dim_a, dim_b))
    rng = as_rng(seed)
    while len(states) < budget:
        states.append(
            BipartiteState(dim_a, dim_b, random_density(dim_a * dim_b, "hilbert-schmidt", rng))
        )
    return states[:budget]


def _embedded_max_entangled(dim_a: int, dim_b: int) -> BipartiteState:
    m = min(dim_a, dim_b)
    v = np.zeros(dim_a * dim_b, dtype=complex)
    for i in range(m):
        v[i * dim_b + i] = 1.0
    return BipartiteState(dim_a, dim_b, DensityOperator.pure(v))


def _hermitian_probe_inputs(dim: int) -> list[np.ndarray]:
    """Density matrices spanning the Hermitian operators on a ``dim`` space."""
    probes = [np.outer(basis_ket(dim, i), basis_ket(dim, i).conj()) for i in range(dim)]
    for i in range(dim):
        for j in range(i + 1, dim):
            plus = (basis_ket(dim, i) + basis_ket(dim, j)) / np.sqrt(2)
            plusi = (basis_ket(dim, i) + 1j * basis_ket(dim, j)) / np.sqrt(2)
            probes.append(np.outer(plus, plus.conj()))
            probes.append(np.outer(plusi, plusi.conj()))
    return probes


# -- family tests --------------------------------------------------------------


def is_point_channel(channel: QuantumChannel, tol: float = POINT_TOL) -> Verdict:
    """Is the channel constant, ``X -> tr[X] sigma``?

    Tested on the Choi matrix: a point channel has ``J = 1 (x) sigma``
    with ``sigma = tr_in J / dim_in``.
    """
    j = channel.choi
    sigma = partial_trace_matrix(j, channel.dim_in, channel.dim_out, "B") / channel.dim_in
    target = np.kron(np.eye(channel.dim_in, dtype=complex), sigma)
    residual = float(np.linalg.norm(j - target))
    threshold = tol * max(1.0, float(np.linalg.norm(j)))
    if residual <= threshold:
        return Verdict(
            kind="yes",
            residual=residual,
            details={"fixed_state": DensityOperator.from_matrix(sigma, name="point target")},
        )
    best = None
    best_dist = 0.0
    probes = _hermitian_probe_inputs(channel.dim_in)
    images = [channel.apply_matrix(p) for p in probes]
    for a in range(len(probes)):
        for b in range(a + 1, len(probes)):
            dist = float(np.linalg.norm(images[a] - images[b]))
            if dist > best_dist:
                best_dist = dist
                best = (probes[a], probes[b])
    witness = {
        "kind": "distinct-outputs",
        "input_a": DensityOperator.from_matrix(best[0], name="witness input"),
        "input_b": DensityOperator.from_matrix(best[1], name="witness input"),
        "distance": best_dist,
    }
    return Verdict(kind="no", residual=residual, witness=witness)


def is_qc_channel(channel: QuantumChannel, tol: float = QC_TOL) -> Verdict:
    """Is the channel measure-and-prepare into a fixed orthonormal basis?

    The Choi matrix of such a channel, read as a bipartite in (x) out
    operator, is classical on the output slot; the test runs the exact
    CQ check on the slot-swapped normalised Choi and, on success, extracts
    the POVM ``F_k = dim_in * (conditional input block)^T`` and basis.
    """
    from .discord import cq_decompose

    din, dout = channel.dim_in, channel.dim_out
    j = channel.choi
    swapped = (
        j.reshape(din, dout, din, dout).transpose(1, 0, 3, 2).reshape(din * dout, din * dout)
    )
    nu = BipartiteState.from_matrix(swapped / din, dout, din, name="swapped Choi")
    check = is_cq_exact(nu, tol)
    if check:
        decomp = cq_decompose(nu, tol)
        povm = []
        kets = []
        for k in range(dout):
            povm.append(din * decomp.probs[k] * decomp.conditional_states[k].matrix.T)
            kets.append(decomp.basis[:, k])
        rebuilt = make_qc_channel(povm, kets)
        residual = choi_distance(rebuilt, channel) / max(1.0, float(np.linalg.norm(j)))
        if residual <= tol:
            return Verdict(
                kind="yes",
                residual=residual,
                details={"povm": povm, "basis": kets},
            )
        return Verdict(
            kind="no",
            residual=residual,
            notes="Choi is classical on the output slot but the extracted form "
            "does not reproduce the channel",
            witness=_noncommuting_output_witness(channel),
        )
    return Verdict(kind="no", residual=check.residual, witness=_noncommuting_output_witness(channel))


def _noncommuting_output_witness(channel: QuantumChannel) -> dict:
    probes = _hermitian_probe_inputs(channel.dim_in)
    images = [channel.apply_matrix(p) for p in probes]
    best = None
    best_norm = 0.0
    for a in range(len(probes)):
        for b in range(a + 1, len(probes)):
            comm = float(np.linalg.norm(images[a] @ images[b] - images[b] @ images[a]))
            if comm > best_norm:
                best_norm = comm
                best = (probes[a], probes[b])
    return {
        "kind": "noncommuting-outputs",
        "input_a": DensityOperator.from_matrix(best[0], name="witness input"),
        "input_b": DensityOperator.from_matrix(best[1], name="witness input"),
        "commutator_norm": best_norm,
    }


def recheck_witness(channel: QuantumChannel, witness: dict) -> float:
    """Re-evaluate a witness residual from scratch; used to validate verdicts."""
    kind = witness["kind"]
    if kind == "distinct-outputs":
        out_a = channel.apply_matrix(witness["input_a"].matrix)
        out_b = channel.apply_matrix(witness["input_b"].matrix)
        return float(np.linalg.norm(out_a - out_b))
    if kind == "noncommuting-outputs":
        out_a = channel.apply_matrix(witness["input_a"].matrix)
        out_b = channel.apply_matrix(witness["input_b"].matrix)
        return float(np.linalg.norm(out_a @ out_b - out_b @ out_a))
    if kind == "npt-eigenvector":
        vec = witness["vector"]
        din, dout = channel.dim_in, channel.dim_out
        nu = channel.choi / din
        pt = nu.reshape(din, dout, din, dout).transpose(0, 3, 2, 1).reshape(nu.shape)
        return -float(np.real(vec.conj() @ pt @ vec))
    if kind == "discordant-output":
        raise ValueError("re-check discordant-output witnesses against the extended channel")
    raise ValueError(f"unknown witness kind {kind!r}")


def is_entanglement_breaking(channel: QuantumChannel) -> Verdict:
    """PPT test on the normalised Choi matrix.

    A negative partial-transpose eigenvalue certifies "no" with the
    eigenvector as witness.  PPT is conclusive only for 2x2, 2x3 and 3x2
    in/out dimensions; elsewhere a PPT channel is reported "unknown".
    """
    din, dout = channel.dim_in, channel.dim_out
    nu = channel.choi / din
    pt = nu.reshape(din, dout, din, dout).transpose(0, 3, 2, 1).reshape(nu.shape)
    eigvals, eigvecs = np.linalg.eigh(pt)
    if eigvals[0] < -PPT_TOL:
        witness = {
            "kind": "npt-eigenvector",
            "eigenvalue": float(eigvals[0]),
            "vector": eigvecs[:, 0],
        }
        return Verdict(kind="no", residual=float(-eigvals[0]), witness=witness)
    if (din, dout) in {(2, 2), (2, 3), (3, 2)}:
        return Verdict(kind="yes", residual=float(max(0.0, -eigvals[0])))
    marg_in = partial_trace_matrix(nu, din, dout, "A")
    marg_out = partial_trace_matrix(nu, din, dout, "B")
    if np.linalg.norm(nu - np.kron(marg_in, marg_out)) <= 1e-9:
        return Verdict(
            kind="yes",
            residual=float(max(0.0, -eigvals[0])),
            notes="Choi matrix is a product state, hence separable in any dimension",
        )
    return Verdict(
        kind="unknown",
        residual=float(max(0.0, -eigvals[0])),
        notes="PPT holds but is not sufficient for separability in these dimensions",
    )


# -- combined classification -----------------------------------------------------


@dataclass(frozen=True)
class ActsOnA:
    dim_b: int


@dataclass(frozen=True)
class ActsOnB:
    dim_a: int


@dataclass(frozen=True)
class ActsOnAB:
    dim_a: int
    dim_b: int


Context = ActsOnA | ActsOnB | ActsOnAB


@dataclass(frozen=True, eq=False)
class ClassificationReport:
    context: Context
    label: str
    db_verdict: Verdict | None = None
    eb_verdict: Verdict | None = None
    witness: dict | None = None
    transfer: TransferAnalysis | None = None
    certification: CertificationReport | None = None
    match: MatchResult | None = None


def _discordant_output_witness(
    channel: QuantumChannel, side: str, dim_other: int, seed: int = 137
) -> dict | None:
    extended = extend(channel, side, dim_other)
    dims = (channel.dim_in, dim_other) if side == "A" else (dim_other, channel.dim_in)
    for state in witness_probe_states(dims[0], dims[1], seed=seed):
        output = extended.apply(state)
        check = is_cq_exact(output)
        if not check:
            return {
                "kind": "discordant-output",
                "input": state,
                "output": output,
                "cq_residual": check.residual,
            }
    return None


def classify_channel(
    channel: QuantumChannel,
    context: Context,
    *,
    seed: int = 0,
    samples: int = 200,
    cq_tol: float = 1e-8,
) -> ClassificationReport:
    """Classify a channel in its acting context.

    On A the discord-breaking channels are exactly the measure-and-prepare
    (quantum-classical) channels; on B exactly the point channels.  On the
    joint system the classifier combines the rank screening of the real
    transfer matrix, image certification on random inputs, and structural
    recovery of the annihilating form.
    """
    if isinstance(context, ActsOnA):
        verdict = is_qc_channel(channel)
        eb = is_entanglement_breaking(channel)
        witness = None
        if verdict.kind != "yes":
            witness = _discordant_output_witness(channel, "A", context.dim_b, seed=137 + seed)
        label = "db-a" if verdict.kind == "yes" else "not-db-a"
        return ClassificationReport(
            context=context, label=label, db_verdict=verdict, eb_verdict=eb, witness=witness
        )
    if isinstance(context, ActsOnB):
        verdict = is_point_channel(channel)
        eb = is_entanglement_breaking(channel)
        witness = None
        if verdict.kind != "yes":
            witness = _discordant_output_witness(channel, "B", context.dim_a, seed=137 + seed)
        label = "db-b" if verdict.kind == "yes" else "not-db-b"
        return ClassificationReport(
            context=context, label=label, db_verdict=verdict, eb_verdict=eb, witness=witness
        )
    if isinstance(context, ActsOnAB):
        dim_a, dim_b = context.dim_a, context.dim_b
        analysis = analyze_transfer(channel)
        certification = apply_and_certify(
            channel, dim_a, dim_b, n_samples=samples, seed=seed, tol=cq_tol
        )
        if not certification.passed:
            witness = {
                "kind": "discordant-output",
                "input": certification.failing_input,
                "cq_residual": certification.failing_residual,
            }
            return ClassificationReport(
                context=context,
                label="not-da",
                transfer=analysis,
                certification=certification,
                witness=witness,
            )
        match = structural_match(channel, dim_a, dim_b, seed=seed)
        label = "da" if match.matched else "inconclusive"
        return ClassificationReport(
            context=context,
            label=label,
            transfer=analysis,
            certification=certification,
            match=match,
            witness=None,
        )
    raise TypeError(f"unsupported context {context!r}")


# -- tetrahedron sweep ------------------------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    l1: float
    l2: float
    l3: float
    is_db: bool
    is_eb: bool
    max_discord: float


def sweep_probe_states(side: str, dim_other: int, n: int, seed: int = 71) -> list[BipartiteState]:
    """Probe inputs for sweep diagnostics, on 2 (x) dim_other or its mirror."""
    dims = (2, dim_other) if side.upper() == "A" else (dim_other, 2)
    return witness_probe_states(dims[0], dims[1], budget=n, seed=seed)


def tetrahedron_sweep(
    step: float,
    side: str,
    dim_other: int = 2,
    n_probe_states: int = 0,
    seed: int = 42,
) -> list[SweepRow]:
    """Classify the unital-qubit CPTP tetrahedron on a regular grid.

    Each grid point is classified structurally (measure-and-prepare when
    acting on A, point when acting on B) along with its entanglement-
    breaking verdict; when ``n_probe_states`` is positive the maximal
    discord over the probe outputs of the extended channel is reported,
    otherwise NaN.  Rows are ordered by grid index.
    """
    if not 0.0 < step <= 1.0:
        raise ValueError(f"step must lie in (0, 1], got {step}")
    side = side.upper()
    if side not in ("A", "B"):
        raise ValueError(f"side must be 'A' or 'B', got {side!r}")
    n = int(round(2.0 / step))
    values = -1.0 + step * np.arange(n + 1)
    probes = sweep_probe_states(side, dim_other, n_probe_states, seed) if n_probe_states else []
    rows = []
    for l1 in values:
        for l2 in values:
            for l3 in values:
                params = UnitalQubitParams(float(l1), float(l2), float(l3))
                if not params.in_cptp_tetrahedron():
                    continue
                channel = make_unital_qubit(params)
                if side == "A":
                    is_db = is_qc_channel(channel).kind == "yes"
                else:
                    is_db = is_point_channel(channel).kind == "yes"
                is_eb = is_entanglement_breaking(channel).kind == "yes"
                max_discord = float("nan")
                if probes:
                    extended = extend(channel, side, dim_other)
                    best = 0.0
                    for probe in probes:
                        result = discord(extended.apply(probe), Hybrid())
                        best = max(best, result.value)
                    max_discord = best
                rows.append(
                    SweepRow(
                        l1=params.l1,
                        l2=params.l2,
                        l3=params.l3,
                        is_db=is_db,
                        is_eb=is_eb,
                        max_discord=max_discord,
                    )
                )
    return rows


def sweep_to_csv(rows: list[SweepRow]) -> str:
    lines = ["l1,l2,l3,is_db,is_eb,max_discord"]
    for row in rows:
        lines.append(
            f"{row.l1:.9g},{row.l2:.9g},{row.l3:.9g},"
            f"{str(row.is_db).lower()},{str(row.is_eb).lower()},{row.max_discord:.9g}"
        )
    return "\n".join(lines) + "\n"
