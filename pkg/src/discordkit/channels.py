"""CPTP channel representations and constructors.

A :class:`QuantumChannel` is stored as a Kraus set and converts on demand
to a Choi matrix or a real transfer matrix.  Conversions are cached on the
instance and never recomputed differently.

Choi convention
---------------
``J(Phi) = sum_ij |i><j| (x) Phi(|i><j|)`` with the *input* slot first and
no normalisation, i.e. the channel applied to the second half of the
unnormalised maximally entangled operator.  Trace preservation reads
``tr_out J = identity_in`` and complete positivity reads ``J >= 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .states import (
    BipartiteState,
    DensityOperator,
    as_rng,
    eig_hermitian,
    hermitian_basis,
    partial_trace_matrix,
    random_unitary,
)

TP_TOL = 1e-9
CP_TOL = 1e-9
RANK_THRESHOLD = 1e-8


class InvalidChannelError(ValueError):
    """A map failed the CPTP (or construction-specific) requirements."""


class QuantumChannel:
    """Completely positive trace-preserving map held as a Kraus set."""

    def __init__(self, kraus, dim_in: int | None = None, dim_out: int | None = None):
        ops = tuple(np.asarray(k, dtype=complex) for k in kraus)
        if not ops:
            raise InvalidChannelError("a channel needs at least one Kraus operator")
        rows, cols = ops[0].shape
        dim_out = rows if dim_out is None else dim_out
        dim_in = cols if dim_in is None else dim_in
        for i, op in enumerate(ops):
            if op.shape != (dim_out, dim_in):
                raise InvalidChannelError(
                    f"Kraus operator {i} has shape {op.shape}, expected ({dim_out}, {dim_in})"
                )
        completeness = sum(op.conj().T @ op for op in ops)
        defect = float(np.linalg.norm(completeness - np.eye(dim_in)))
        if defect > TP_TOL * max(1.0, dim_in):
            raise InvalidChannelError(
                f"Kraus set is not trace-preserving (defect {defect:.3e})"
            )
        for op in ops:
            op.setflags(write=False)
        self.dim_in = dim_in
        self.dim_out = dim_out
        self.kraus = ops
        self._choi: np.ndarray | None = None
        self._transfer: np.ndarray | None = None

    # -- constructors -----------------------------------------------------

    @classmethod
    def from_kraus(cls, kraus, dim_in: int | None = None, dim_out: int | None = None):
        return cls(kraus, dim_in, dim_out)

    @classmethod
    def from_choi(cls, choi, dim_in: int, dim_out: int, *, cp_tol: float = CP_TOL):
        """Build a channel from a Choi matrix (input slot first).

        The matrix must be PSD within ``-cp_tol`` and satisfy
        ``tr_out J = identity`` within 1e-9; Kraus operators are extracted
        from the eigendecomposition in descending eigenvalue order.
        """
        j = np.asarray(choi, dtype=complex)
        d = dim_in * dim_out
        if j.shape != (d, d):
            raise InvalidChannelError(f"Choi matrix has shape {j.shape}, expected ({d}, {d})")
        scale = max(1.0, float(np.linalg.norm(j)))
        if np.linalg.norm(j - j.conj().T) > 1e-9 * scale:
            raise InvalidChannelError("Choi matrix is not Hermitian")
        j = (j + j.conj().T) / 2.0
        marginal = partial_trace_matrix(j, dim_in, dim_out, "A")
        tp_defect = float(np.linalg.norm(marginal - np.eye(dim_in)))
        if tp_defect > TP_TOL * max(1.0, dim_in):
            raise InvalidChannelError(
                f"Choi matrix is not trace-preserving (tr_out defect {tp_defect:.3e})"
            )
        eigvals, eigvecs = np.linalg.eigh(j)
        if eigvals[0] < -cp_tol * max(1.0, abs(eigvals[-1])):
            raise InvalidChannelError(
                f"Choi matrix is not PSD (min eigenvalue {eigvals[0]:.3e})"
            )
        cutoff = 1e-12 * max(1.0, eigvals[-1])
        ops = []
        for idx in range(d - 1, -1, -1):
            if eigvals[idx] <= cutoff:
                break
            vec = eigvecs[:, idx] * np.sqrt(eigvals[idx])
            ops.append(vec.reshape(dim_in, dim_out).T)
        channel = cls(ops, dim_in, dim_out)
        channel._choi = j
        return channel

    @classmethod
    def identity(cls, dim: int) -> "QuantumChannel":
        return cls([np.eye(dim, dtype=complex)])

    # -- representations --------------------------------------------------

    @property
    def choi(self) -> np.ndarray:
        """Choi matrix, input slot first, unnormalised."""
        if self._choi is None:
            d = self.dim_in * self.dim_out
            j = np.zeros((d, d), dtype=complex)
            for op in self.kraus:
                vec = op.T.reshape(-1)
                j += np.outer(vec, vec.conj())
            self._choi = j
        return self._choi

    def transfer(self) -> np.ndarray:
        """Real transfer matrix ``T[a, b] = tr[G_a Phi(G_b)]``.

        ``G`` are the orthonormal Hermitian bases of the output and input
        spaces; the matrix is ``dim_out**2 x dim_in**2`` and real because
        the channel is Hermiticity-preserving.
        """
        if self._transfer is None:
            basis_in = hermitian_basis(self.dim_in).elements
            basis_out = hermitian_basis(self.dim_out).elements
            t = np.empty((len(basis_out), len(basis_in)))
            for b, g_in in enumerate(basis_in):
                image = self.apply_matrix(g_in)
                for a, g_out in enumerate(basis_out):
                    t[a, b] = np.trace(g_out @ image).real
            self._transfer = t
            self._transfer.setflags(write=False)
        return self._transfer

    # -- action ------------------------------------------------------------

    def apply_matrix(self, m: np.ndarray) -> np.ndarray:
        """Linear action on an arbitrary operator, no state validation."""
        out = np.zeros((self.dim_out, self.dim_out), dtype=complex)
        for op in self.kraus:
            out += op @ m @ op.conj().T
        return out

    def apply(self, rho: DensityOperator | BipartiteState):
        """Apply to a state, validating the output (same wrapper type back)."""
        if isinstance(rho, BipartiteState):
            if rho.state.dim != self.dim_in or self.dim_in != self.dim_out:
                raise InvalidChannelError(
                    f"channel ({self.dim_in} -> {self.dim_out}) cannot act in place "
                    f"on a {rho.dim_a} (x) {rho.dim_b} state"
                )
            out = DensityOperator.from_matrix(self.apply_matrix(rho.matrix), name="channel output")
            return BipartiteState(rho.dim_a, rho.dim_b, out)
        if rho.dim != self.dim_in:
            raise InvalidChannelError(
                f"channel input dimension {self.dim_in} does not match state dimension {rho.dim}"
            )
        return DensityOperator.from_matrix(self.apply_matrix(rho.matrix), name="channel output")


def compose(second: QuantumChannel, first: QuantumChannel) -> QuantumChannel:
    """Channel composition ``second o first`` with Kraus products."""
    if first.dim_out != second.dim_in:
        raise InvalidChannelError(
            f"cannot compose: inner dimensions {first.dim_out} and {second.dim_in} differ"
        )
    ops = [k2 @ k1 for k2 in second.kraus for k1 in first.kraus]
    return QuantumChannel(ops, first.dim_in, second.dim_out)


def extend(channel: QuantumChannel, side: str, dim_other: int) -> QuantumChannel:
    """Tensor the channel with the identity on the other subsystem.

    ``side`` names the subsystem the channel acts on: ``"A"`` produces
    ``Phi (x) id`` and ``"B"`` produces ``id (x) Phi``, in the shared
    B-fastest basis ordering.
    """
    eye = np.eye(dim_other, dtype=complex)
    side = side.upper()
    if side == "A":
        ops = [np.kron(op, eye) for op in channel.kraus]
    elif side == "B":
        ops = [np.kron(eye, op) for op in channel.kraus]
    else:
        raise ValueError(f"side must be 'A' or 'B', got {side!r}")
    return QuantumChannel(ops)


def mix_channels(weighted: list[tuple[float, QuantumChannel]]) -> QuantumChannel:
    """Convex mixture of channels, realised as a weighted Kraus union."""
    total = sum(w for w, _ in weighted)
    if abs(total - 1.0) > 1e-9:
        raise InvalidChannelError(f"mixture weights sum to {total!r}, expected 1")
    dims = {(c.dim_in, c.dim_out) for _, c in weighted}
    if len(dims) != 1:
        raise InvalidChannelError(f"cannot mix channels with differing dimensions {dims}")
    ops = [np.sqrt(w) * op for w, c in weighted for op in c.kraus]
    return QuantumChannel(ops)


def canonicalize(channel: QuantumChannel) -> QuantumChannel:
    """Re-extract a minimal Kraus set from the Choi eigendecomposition."""
    return QuantumChannel.from_choi(channel.choi, channel.dim_in, channel.dim_out)


def choi_distance(a: QuantumChannel, b: QuantumChannel) -> float:
    """Frobenius distance between Choi matrices (representation-free equality)."""
    if (a.dim_in, a.dim_out) != (b.dim_in, b.dim_out):
        raise InvalidChannelError("cannot compare channels with different dimensions")
    return float(np.linalg.norm(a.choi - b.choi))


@dataclass(frozen=True)
class TransferAnalysis:
    """Spectral summary of a real transfer matrix.

    The determinant is reported through the singular values,
    ``sign * exp(sum log sigma_i)``, with the sign taken from an LU
    factorisation; a matrix is flagged rank deficient when
    ``sigma_min < 1e-8 * sigma_max``, in which case the determinant is
    reported as exactly zero.
    """

    matrix: np.ndarray
    singular_values: np.ndarray
    sigma_min: float
    sigma_max: float
    rank: int
    rank_deficient: bool
    det_sign: float
    log_abs_det: float
    det: float


def min_singular_value(transfer: np.ndarray) -> float:
    s = np.linalg.svd(np.asarray(transfer, dtype=float), compute_uv=False)
    return float(s[-1])


def analyze_transfer(channel: QuantumChannel) -> TransferAnalysis:
    t = channel.transfer()
    s = np.linalg.svd(t, compute_uv=False)
    sigma_max = float(s[0])
    sigma_min = float(s[-1])
    rank = int(np.sum(s > RANK_THRESHOLD * max(sigma_max, 1e-300)))
    deficient = sigma_min < RANK_THRESHOLD * sigma_max
    if t.shape[0] == t.shape[1]:
        sign, _ = np.linalg.slogdet(t)
        sign = float(sign)
    else:
        sign = 0.0
    if deficient or sigma_min <= 0.0 or sign == 0.0:
        log_abs = -np.inf
        det = 0.0
    else:
        log_abs = float(np.sum(np.log(s)))
        det = sign * float(np.exp(log_abs))
    return TransferAnalysis(
        matrix=t,
        singular_values=s,
        sigma_min=sigma_min,
        sigma_max=sigma_max,
        rank=rank,
        rank_deficient=deficient,
        det_sign=sign,
        log_abs_det=log_abs,
        det=det,
    )


# -- named constructors ----------------------------------------------------


def make_point_channel(sigma: DensityOperator, dim_in: int | None = None) -> QuantumChannel:
    """Constant channel ``X -> tr[X] sigma``.

    Kraus operators are ``sqrt(mu_m) |v_m><n|`` over the eigenpairs of
    ``sigma`` and the input basis kets ``|n>``.
    """
    dim_in = sigma.dim if dim_in is None else dim_in
    eigvals, eigvecs = eig_hermitian(sigma.matrix)
    ops = []
    for m in range(sigma.dim):
        if eigvals[m] <= 1e-14:
            continue
        col = np.sqrt(eigvals[m]) * eigvecs[:, m]
        for n in range(dim_in):
            op = np.zeros((sigma.dim, dim_in), dtype=complex)
            op[:, n] = col
            ops.append(op)
    return QuantumChannel(ops, dim_in, sigma.dim)


def make_qc_channel(povm, basis) -> QuantumChannel:
    """Measure-and-prepare channel ``X -> sum_k tr[F_k X] |k><k|``.

    ``povm`` is a sequence of PSD operators summing to the identity and
    ``basis`` the matching orthonormal output kets.  Outputs of the
    resulting channel are diagonal in ``basis`` and therefore mutually
    commute.
    """
    effects = [np.asarray(f, dtype=complex) for f in povm]
    kets = [np.asarray(k, dtype=complex).reshape(-1) for k in basis]
    if len(effects) != len(kets):
        raise InvalidChannelError(
            f"got {len(effects)} POVM elements but {len(kets)} basis vectors"
        )
    if not effects:
        raise InvalidChannelError("POVM must be non-empty")
    dim_in = effects[0].shape[0]
    dim_out = kets[0].size
    total = np.zeros((dim_in, dim_in), dtype=complex)
    for idx, f in enumerate(effects):
        if f.shape != (dim_in, dim_in):
            raise InvalidChannelError(f"POVM element {idx} has shape {f.shape}")
        if np.linalg.norm(f - f.conj().T) > 1e-9 * max(1.0, np.linalg.norm(f)):
            raise InvalidChannelError(f"POVM element {idx} is not Hermitian")
        low = np.linalg.eigvalsh(f)[0]
        if low < -1e-9:
            raise InvalidChannelError(
                f"POVM element {idx} is not PSD (min eigenvalue {low:.3e})"
            )
        total += f
    if np.linalg.norm(total - np.eye(dim_in)) > 1e-9 * max(1.0, dim_in):
        raise InvalidChannelError("POVM elements do not sum to the identity")
    for a in range(len(kets)):
        for b in range(a, len(kets)):
            overlap = np.vdot(kets[a], kets[b])
            expected = 1.0 if a == b else 0.0
            if abs(overlap - expected) > 1e-9:
                raise InvalidChannelError(
                    f"output basis is not orthonormal: <{a}|{b}> = {overlap:.3e}"
                )
    ops = []
    for f, k in zip(effects, kets):
        eigvals, eigvecs = np.linalg.eigh((f + f.conj().T) / 2.0)
        for m in range(dim_in):
            if eigvals[m] <= 1e-14:
                continue
            ops.append(np.sqrt(eigvals[m]) * np.outer(k, eigvecs[:, m].conj()))
    return QuantumChannel(ops, dim_in, dim_out)


@dataclass(frozen=True)
class UnitalQubitParams:
    """Bloch contraction factors of a unital qubit channel.

    The CPTP region is the tetrahedron with vertices (1,1,1), (1,-1,-1),
    (-1,1,-1) and (-1,-1,1), characterised by ``|l1 +- l2| <= 1 +- l3``.
    """

    l1: float
    l2: float
    l3: float

    def in_cptp_tetrahedron(self, tol: float = 1e-12) -> bool:
        return (
            abs(self.l1 + self.l2) <= 1.0 + self.l3 + tol
            and abs(self.l1 - self.l2) <= 1.0 - self.l3 + tol
        )


def make_unital_qubit(params: UnitalQubitParams) -> QuantumChannel:
    """Unital qubit channel with transfer matrix diag(1, l1, l2, l3).

    Built through the Choi matrix in the Pauli frame so every point of the
    CPTP tetrahedron (including the non-unitary extreme points) is valid.
    """
    if not params.in_cptp_tetrahedron():
        raise InvalidChannelError(
            f"({params.l1}, {params.l2}, {params.l3}) lies outside the CPTP tetrahedron"
        )
    lam = (params.l1, params.l2, params.l3)
    paulis = hermitian_basis(2).elements[1:]  # X, Y, Z over sqrt(2)

    def image(unit: np.ndarray) -> np.ndarray:
        out = np.trace(unit) * np.eye(2, dtype=complex) / 2.0
        for l_i, g in zip(lam, paulis):
            out += l_i * np.trace(g @ unit) * g
        return out

    blocks = [[None, None], [None, None]]
    for i in range(2):
        for j in range(2):
            unit = np.zeros((2, 2), dtype=complex)
            unit[i, j] = 1.0
            blocks[i][j] = image(unit)
    choi = np.block(blocks)
    return QuantumChannel.from_choi(choi, 2, 2)


def random_channel(
    dim_in: int,
    dim_out: int,
    kraus_rank: int,
    rng,
) -> QuantumChannel:
    """Random CPTP channel from a sliced Haar isometry with ``kraus_rank`` blocks."""
    rng = as_rng(rng)
    if kraus_rank * dim_out < dim_in:
        raise InvalidChannelError(
            f"kraus_rank {kraus_rank} too small for a {dim_in} -> {dim_out} isometry"
        )
    u = random_unitary(dim_out * kraus_rank, rng)
    iso = u[:, :dim_in]
    ops = [iso[m * dim_out : (m + 1) * dim_out, :] for m in range(kraus_rank)]
    return QuantumChannel(ops, dim_in, dim_out)
