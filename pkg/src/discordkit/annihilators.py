"""Discord-annihilating channels: construction, certification and recovery.

A discord-annihilating channel on AB factors as an arbitrary pre-channel
followed by a pinch into mutually orthogonal A subspaces with a
conditional action on B: rank-1 subspaces may keep B untouched or send it
to a fixed state, while subspaces of rank two or more must send B to a
fixed state.  :func:`build_da_channel` realises that form,
:func:`apply_and_certify` samples its image, and :func:`structural_match`
recovers the partition of a channel that is annihilating.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import (
    QuantumChannel,
    choi_distance,
    compose,
    make_point_channel,
    random_channel,
)
from .cqsets import BothEntry, ConvexCQSubsetSpec, FixedEntry, PointEntry
from .discord import is_cq_exact
from .states import (
    BipartiteState,
    DensityOperator,
    as_rng,
    basis_ket,
    hermitian_basis,
    random_density,
    random_unitary,
)

COMPLETENESS_TOL = 1e-10
POINT_SPREAD_TOL = 1e-7


class InvalidDASpecError(ValueError):
    """The partition violates the annihilating-channel structure."""


@dataclass(frozen=True, eq=False)
class PointTo:
    """Conditional action on B: prepare this fixed state."""

    state: DensityOperator


@dataclass(frozen=True)
class IdentityAction:
    """Conditional action on B: leave it untouched."""


Action = PointTo | IdentityAction


@dataclass(frozen=True, eq=False)
class Rank1Entry:
    vector: np.ndarray
    action: Action


@dataclass(frozen=True, eq=False)
class MultiEntry:
    projector: np.ndarray
    action: PointTo


Entry = Rank1Entry | MultiEntry


@dataclass(frozen=True, eq=False)
class DAChannelSpec:
    """Pre-channel plus a complete orthogonal partition of A with conditional B actions."""

    dim_a: int
    dim_b: int
    pre_channel: QuantumChannel | None
    entries: tuple[Entry, ...]

    @classmethod
    def make(cls, dim_a, dim_b, entries, pre_channel=None) -> "DAChannelSpec":
        entries = tuple(entries)
        total = np.zeros((dim_a, dim_a), dtype=complex)
        for i, entry in enumerate(entries):
            proj = _entry_projector(entry, dim_a, index=i)
            if isinstance(entry, MultiEntry):
                if not isinstance(entry.action, PointTo):
                    raise InvalidDASpecError(
                        f"entry {i}: a subspace of rank >= 2 must point to a fixed B state"
                    )
                rank = int(round(np.trace(proj).real))
                if rank < 2:
                    raise InvalidDASpecError(
                        f"entry {i}: multi-dimensional entry has rank {rank}"
                    )
            if np.linalg.norm(total @ proj) > COMPLETENESS_TOL:
                raise InvalidDASpecError(f"entry {i}: subspace overlaps earlier entries")
            total += proj
        if np.linalg.norm(total - np.eye(dim_a)) > COMPLETENESS_TOL:
            raise InvalidDASpecError(
                "partition does not resolve the identity on A "
                "(required for trace preservation)"
            )
        if pre_channel is not None:
            d = dim_a * dim_b
            if (pre_channel.dim_in, pre_channel.dim_out) != (d, d):
                raise InvalidDASpecError(
                    f"pre-channel acts on dimension {pre_channel.dim_in}, expected {d}"
                )
        for entry in entries:
            if isinstance(entry.action, PointTo) and entry.action.state.dim != dim_b:
                raise InvalidDASpecError("point target dimension does not match dim_b")
        return cls(dim_a=dim_a, dim_b=dim_b, pre_channel=pre_channel, entries=entries)


def _entry_projector(entry: Entry, dim_a: int, *, index: int = -1) -> np.ndarray:
    if isinstance(entry, Rank1Entry):
        v = np.asarray(entry.vector, dtype=complex).reshape(-1)
        if v.size != dim_a:
            raise InvalidDASpecError(f"entry {index}: vector has dimension {v.size}")
        v = v / np.linalg.norm(v)
        return np.outer(v, v.conj())
    p = np.asarray(entry.projector, dtype=complex)
    if p.shape != (dim_a, dim_a):
        raise InvalidDASpecError(f"entry {index}: projector has shape {p.shape}")
    if np.linalg.norm(p @ p - p) > COMPLETENESS_TOL:
        raise InvalidDASpecError(f"entry {index}: matrix is not an orthogonal projector")
    return p


def build_da_channel(spec: DAChannelSpec) -> QuantumChannel:
    """Kraus realisation of the pinch-then-conditional-action channel.

    Identity entries contribute ``Q_i (x) 1``; point entries contribute
    ``Q_i (x) L`` over the Kraus operators ``L`` of the point channel on B.
    The union is trace-preserving exactly when the partition is complete.
    """
    ops = []
    eye_b = np.eye(spec.dim_b, dtype=complex)
    for i, entry in enumerate(spec.entries):
        proj = _entry_projector(entry, spec.dim_a, index=i)
        if isinstance(entry.action, IdentityAction):
            ops.append(np.kron(proj, eye_b))
        else:
            point = make_point_channel(entry.action.state)
            for kraus in point.kraus:
                ops.append(np.kron(proj, kraus))
    stage = QuantumChannel(ops)
    if spec.pre_channel is None:
        return stage
    return compose(stage, spec.pre_channel)


def induced_cq_subset(spec: DAChannelSpec) -> ConvexCQSubsetSpec:
    """The convex classical-quantum subset containing the channel's image."""
    both, fixed, point = [], [], []
    for entry in spec.entries:
        if isinstance(entry, Rank1Entry):
            v = np.asarray(entry.vector, dtype=complex).reshape(-1)
            v = v / np.linalg.norm(v)
            if isinstance(entry.action, PointTo):
                both.append(BothEntry(vector=v, state=entry.action.state))
            else:
                fixed.append(FixedEntry(vector=v, generators=None))
        else:
            point.append(PointEntry(projector=np.asarray(entry.projector), state=entry.action.state))
    return ConvexCQSubsetSpec(
        dim_a=spec.dim_a,
        dim_b=spec.dim_b,
        both_entries=tuple(both),
        fixed_entries=tuple(fixed),
        point_entries=tuple(point),
    )


def random_da_spec(
    dim_a: int,
    dim_b: int,
    rng,
    *,
    pre_kraus_rank: int | None = None,
) -> DAChannelSpec:
    """Random partition (rank-1 entries with either action, larger ones pinned)
    over a Haar-random A basis, with a random CPTP pre-channel."""
    rng = as_rng(rng)
    sizes = []
    remaining = dim_a
    while remaining > 0:
        if remaining == 1:
            size = 1
        else:
            choices = [1, 1] + list(range(2, remaining + 1))
            size = int(rng.choice(choices))
        sizes.append(size)
        remaining -= size
    frame = random_unitary(dim_a, rng)
    entries = []
    col = 0
    for size in sizes:
        block = frame[:, col : col + size]
        col += size
        if size == 1:
            if rng.uniform() < 0.5:
                entries.append(Rank1Entry(vector=block[:, 0], action=IdentityAction()))
            else:
                target = random_density(dim_b, "hilbert-schmidt", rng)
                entries.append(Rank1Entry(vector=block[:, 0], action=PointTo(target)))
        else:
            target = random_density(dim_b, "hilbert-schmidt", rng)
            entries.append(
                MultiEntry(projector=block @ block.conj().T, action=PointTo(target))
            )
    d = dim_a * dim_b
    rank = pre_kraus_rank if pre_kraus_rank is not None else int(rng.integers(2, 5))
    pre = random_channel(d, d, rank, rng)
    return DAChannelSpec.make(dim_a, dim_b, entries, pre_channel=pre)


# -- certification ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CertificationReport:
    n_checked: int
    worst_residual: float
    failing_input: BipartiteState | None
    failing_residual: float | None

    @property
    def passed(self) -> bool:
        return self.failing_input is None


def _boundary_inputs(dim_a: int, dim_b: int, rng) -> list[BipartiteState]:
    states = []
    pure_a = basis_ket(dim_a, 0)
    pure_b = basis_ket(dim_b, 0)
    states.append(
        BipartiteState(dim_a, dim_b, DensityOperator.pure(np.kron(pure_a, pure_b)))
    )
    va = rng.standard_normal(dim_a) + 1j * rng.standard_normal(dim_a)
    vb = rng.standard_normal(dim_b) + 1j * rng.standard_normal(dim_b)
    states.append(BipartiteState(dim_a, dim_b, DensityOperator.pure(np.kron(va, vb))))
    m = min(dim_a, dim_b)
    if m >= 2:
        v = np.zeros(dim_a * dim_b, dtype=complex)
        for i in range(m):
            v[i * dim_b + i] = 1.0
        states.append(BipartiteState(dim_a, dim_b, DensityOperator.pure(v)))
    d = dim_a * dim_b
    if d >= 2:
        states.append(
            BipartiteState(dim_a, dim_b, random_density(d, "rank", rng, rank=max(1, d // 2)))
        )
    return states


def apply_and_certify(
    channel: QuantumChannel,
    dim_a: int,
    dim_b: int,
    n_samples: int = 200,
    seed: int = 0,
    tol: float = 1e-8,
) -> CertificationReport:
    """Apply the channel to random and boundary inputs, requiring CQ outputs.

    Each random input uses a generator seeded from (seed, index), so any
    reported witness is reproducible.  The report carries the worst CQ
    residual over all outputs and the first failing input, if any.
    """
    d = dim_a * dim_b
    if (channel.dim_in, channel.dim_out) != (d, d):
        raise ValueError(f"channel acts on dimension {channel.dim_in}, expected {d}")
    inputs = _boundary_inputs(dim_a, dim_b, as_rng([seed, 0xB0]))
    for index in range(n_samples):
        inputs.append(
            BipartiteState(
                dim_a, dim_b, random_density(d, "hilbert-schmidt", as_rng([seed, index]))
            )
        )
    worst = 0.0
    for state in inputs:
        output = channel.apply(state)
        check = is_cq_exact(output, tol)
        worst = max(worst, check.residual)
        if not check:
            return CertificationReport(
                n_checked=len(inputs),
                worst_residual=worst,
                failing_input=state,
                failing_residual=check.residual,
            )
    return CertificationReport(
        n_checked=len(inputs), worst_residual=worst, failing_input=None, failing_residual=None
    )


# -- structural recovery -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MatchResult:
    spec: DAChannelSpec | None
    residual: float | None
    counterexample: BipartiteState | None
    notes: str = ""

    @property
    def matched(self) -> bool:
        return self.spec is not None


def _commutant_element(generators, dim: int, rng) -> np.ndarray:
    """Random Hermitian element commuting with every generator."""
    basis = hermitian_basis(dim).elements
    rows = []
    for g in generators:
        cols = [(b @ g - g @ b).reshape(-1) for b in basis]
        m = np.column_stack(cols)
        rows.append(m.real)
        rows.append(m.imag)
    stacked = np.vstack(rows)
    _, svals, vt = np.linalg.svd(stacked)
    cutoff = 1e-7 * max(svals[0], 1e-300)
    null = vt[len(svals) :].tolist()
    null += [vt[i] for i in range(len(svals)) if svals[i] <= cutoff]
    coeffs = np.zeros(dim * dim)
    for direction in null:
        coeffs += rng.standard_normal() * np.asarray(direction)
    x = sum(c * b for c, b in zip(coeffs, basis))
    return (x + x.conj().T) / 2.0


def _eigen_clusters(x: np.ndarray, gap: float = 1e-6) -> list[np.ndarray]:
    """Group eigenvectors of a Hermitian matrix by clustered eigenvalues."""
    eigvals, eigvecs = np.linalg.eigh(x)
    scale = max(1.0, float(np.max(np.abs(eigvals))))
    groups = []
    start = 0
    for k in range(1, eigvals.size + 1):
        if k == eigvals.size or eigvals[k] - eigvals[k - 1] > gap * scale:
            groups.append(eigvecs[:, start:k])
            start = k
    return groups


def _canonical_vector(v: np.ndarray) -> np.ndarray:
    pivot = int(np.argmax(np.abs(v)))
    phase = v[pivot] / abs(v[pivot])
    return v / phase


def _canonical_entries(entries: list[Entry], dim_a: int) -> tuple[Entry, ...]:
    """Sort by subspace rank, then lexicographically on the rounded support."""

    def key(entry: Entry):
        proj = _entry_projector(entry, dim_a)
        rank = int(round(np.trace(proj).real))
        flat = np.round(proj.reshape(-1), 9)
        return (rank, tuple(flat.real) + tuple(flat.imag))

    return tuple(sorted(entries, key=key))


def structural_match(
    channel: QuantumChannel,
    dim_a: int,
    dim_b: int,
    *,
    seed: int = 23,
    certify_samples: int = 60,
    point_spread_tol: float = POINT_SPREAD_TOL,
    rebuild_tol: float = 1e-6,
    retries: int = 3,
) -> MatchResult:
    """Recover an annihilating-channel partition, or report a counterexample.

    Probes the channel with the maximally mixed state and ``4 dim_a**2``
    perturbed inputs; the A partition is the joint block structure of all
    probe-output B blocks, extracted as the eigenspaces of a random element
    of their commutant.  Per-block B behaviour is classified as pinned when
    the conditional states agree across probes within ``point_spread_tol``.
    The recovered spec reuses the channel itself as pre-channel, which is
    exact for any channel of the annihilating form, and the Choi residual
    between the rebuilt channel and the original certifies the match.
    """
    report = apply_and_certify(channel, dim_a, dim_b, n_samples=certify_samples, seed=seed)
    if not report.passed:
        return MatchResult(
            spec=None,
            residual=None,
            counterexample=report.failing_input,
            notes=f"certification failed (residual {report.failing_residual:.3e})",
        )
    d = dim_a * dim_b
    rng = as_rng([seed, 0xA1])
    probes = [BipartiteState(dim_a, dim_b, DensityOperator.maximally_mixed(d))]
    for _ in range(4 * dim_a * dim_a):
        mixed = DensityOperator.maximally_mixed(d).matrix
        noise = random_density(d, "hilbert-schmidt", rng).matrix
        probes.append(BipartiteState.from_matrix((mixed + noise) / 2.0, dim_a, dim_b))
    outputs = []
    for probe in probes:
        out = channel.apply(probe)
        if not is_cq_exact(out):
            return MatchResult(
                spec=None,
                residual=None,
                counterexample=probe,
                notes="probe output is not classical-quantum",
            )
        outputs.append(out)
    generators = []
    for out in outputs:
        r4 = out.matrix.reshape(dim_a, dim_b, dim_a, dim_b)
        for i in range(dim_b):
            for j in range(dim_b):
                generators.append(np.ascontiguousarray(r4[:, i, :, j]))

    scale = max(1.0, float(np.linalg.norm(channel.choi)))
    notes = ""
    for _ in range(retries):
        x = _commutant_element(generators, dim_a, rng)
        groups = _eigen_clusters(x)
        entries = []
        consistent = True
        for vecs in groups:
            rank = vecs.shape[1]
            conditionals = []
            for out in outputs:
                r4 = out.matrix.reshape(dim_a, dim_b, dim_a, dim_b)
                block = np.einsum("ae,abcd,cf->ebfd", vecs.conj(), r4, vecs)
                block = block.reshape(rank * dim_b, rank * dim_b)
                weight = float(np.trace(block).real)
                if weight < 1e-9:
                    continue
                sub = block.reshape(rank, dim_b, rank, dim_b)
                conditionals.append(np.trace(sub, axis1=0, axis2=2) / weight)
            if conditionals:
                mean = sum(conditionals) / len(conditionals)
                spread = max(float(np.linalg.norm(c - mean)) for c in conditionals)
            else:
                mean = np.eye(dim_b, dtype=complex) / dim_b
                spread = 0.0
            pinned = spread <= point_spread_tol
            if rank == 1:
                vec = _canonical_vector(vecs[:, 0])
                if pinned:
                    target = DensityOperator.from_matrix(mean, name="recovered point target")
                    entries.append(Rank1Entry(vector=vec, action=PointTo(target)))
                else:
                    entries.append(Rank1Entry(vector=vec, action=IdentityAction()))
            else:
                if not pinned:
                    consistent = False
                    notes = f"rank-{rank} block has input-dependent B conditional"
                    break
                target = DensityOperator.from_matrix(mean, name="recovered point target")
                entries.append(
                    MultiEntry(projector=vecs @ vecs.conj().T, action=PointTo(target))
                )
        if not consistent:
            continue
        spec = DAChannelSpec.make(
            dim_a, dim_b, _canonical_entries(entries, dim_a), pre_channel=channel
        )
        residual = choi_distance(build_da_channel(spec), channel) / scale
        if residual <= rebuild_tol:
            return MatchResult(spec=spec, residual=residual, counterexample=None)
        notes = f"rebuilt channel differs (residual {residual:.3e})"
    return MatchResult(spec=None, residual=None, counterexample=None, notes=notes)


# -- local channels -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LocalDAVerdict:
    kind: str  # "da-via-a" | "da-via-b" | "not-da"
    witness: BipartiteState | None = None
    residual: float | None = None

    def __bool__(self) -> bool:
        return self.kind != "not-da"


def is_local_da(
    channel_a: QuantumChannel,
    channel_b: QuantumChannel,
    *,
    seed: int = 5,
    budget: int = 200,
) -> LocalDAVerdict:
    """Decide whether a product channel annihilates discord.

    This holds exactly when the A factor is a measure-and-prepare channel
    diagonal in a fixed basis, or the B factor is a point channel.  When
    neither holds, a witness input with a non-CQ output is searched for.
    """
    from .classify import is_point_channel, is_qc_channel, witness_probe_states

    if is_qc_channel(channel_a).kind == "yes":
        return LocalDAVerdict(kind="da-via-a")
    if is_point_channel(channel_b).kind == "yes":
        return LocalDAVerdict(kind="da-via-b")
    from .channels import extend

    dim_a, dim_b = channel_a.dim_in, channel_b.dim_in
    product = compose(extend(channel_b, "B", channel_a.dim_out), extend(channel_a, "A", dim_b))
    worst_state = None
    worst_residual = 0.0
    for state in witness_probe_states(dim_a, dim_b, budget=budget, seed=seed):
        out = product.apply(state)
        check = is_cq_exact(out)
        if not check:
            return LocalDAVerdict(kind="not-da", witness=state, residual=check.residual)
        if check.residual > worst_residual:
            worst_residual = check.residual
            worst_state = state
    return LocalDAVerdict(kind="not-da", witness=worst_state, residual=worst_residual)
