"""Quantum discord and exact classical-quantum structure tests.

Discord is computed as ``D = I(A:B) - J(B|A)`` where the classical
correlation ``J`` is maximised over rank-1 projective measurements on A.
The optimiser returns a certified lower bound on ``J`` (it is evaluated
exactly at the returned measurement), so the reported discord is an upper
bound on the true value.  Zero-discord certification therefore never uses
the optimiser: :func:`is_cq_exact` tests the block-commutation structure
of the state directly, which is exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .states import (
    BipartiteState,
    DensityOperator,
    PAULIS,
    as_rng,
    entropy_from_eigenvalues,
    partial_trace,
    partial_trace_matrix,
    random_unitary,
    von_neumann_entropy,
)

PROBABILITY_CUTOFF = 1e-12
CQ_DEFAULT_TOL = 1e-8


class DecompositionError(ValueError):
    """Raised when a classical-quantum decomposition cannot be extracted."""


# -- measurements ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ProjectiveMeasurement:
    """Complete von Neumann measurement: rank-1 orthogonal projectors summing to 1."""

    dim: int
    projectors: tuple[np.ndarray, ...]

    @classmethod
    def from_vectors(cls, vectors) -> "ProjectiveMeasurement":
        vecs = [np.asarray(v, dtype=complex).reshape(-1) for v in vectors]
        dim = vecs[0].size
        projs = []
        for v in vecs:
            v = v / np.linalg.norm(v)
            projs.append(np.outer(v, v.conj()))
        meas = cls(dim=dim, projectors=tuple(projs))
        meas._check()
        return meas

    @classmethod
    def from_unitary(cls, unitary: np.ndarray) -> "ProjectiveMeasurement":
        u = np.asarray(unitary, dtype=complex)
        return cls.from_vectors([u[:, a] for a in range(u.shape[1])])

    @classmethod
    def from_bloch(cls, theta: float, phi: float) -> "ProjectiveMeasurement":
        """Qubit measurement along the Bloch direction (theta, phi)."""
        n = bloch_direction(theta, phi)
        nm = n[0] * PAULIS[0] + n[1] * PAULIS[1] + n[2] * PAULIS[2]
        eye = np.eye(2, dtype=complex)
        return cls(dim=2, projectors=((eye + nm) / 2.0, (eye - nm) / 2.0))

    def _check(self, tol: float = 1e-10):
        total = np.zeros((self.dim, self.dim), dtype=complex)
        for a, pa in enumerate(self.projectors):
            for b, pb in enumerate(self.projectors):
                target = pa if a == b else 0.0
                if np.linalg.norm(pa @ pb - target) > tol:
                    raise ValueError(f"projectors {a} and {b} are not orthogonal idempotents")
            total += pa
        if np.linalg.norm(total - np.eye(self.dim)) > tol:
            raise ValueError("projectors do not resolve the identity")

    def bloch_vector(self) -> np.ndarray:
        """Bloch direction of the first projector (qubit measurements only)."""
        if self.dim != 2:
            raise ValueError("Bloch vector is defined for qubit measurements only")
        p0 = self.projectors[0]
        return np.array([np.trace(p0 @ s).real for s in PAULIS])


def bloch_direction(theta: float, phi: float) -> np.ndarray:
    return np.array(
        [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)]
    )


# -- optimisation strategies -------------------------------------------------


@dataclass(frozen=True)
class Grid:
    """Exhaustive Bloch-angle grid for qubit A; theta_k = pi k / n_theta
    (k = 0..n_theta) and phi_k = 2 pi k / n_phi, so doubling both counts
    refines the grid in place."""

    n_theta: int = 32
    n_phi: int = 64


@dataclass(frozen=True)
class MultiStart:
    """Seeded local searches over Givens-parametrised measurement unitaries."""

    restarts: int = 20


@dataclass(frozen=True)
class Hybrid:
    """Coarse grid followed by simplex refinement from the best grid points."""

    n_theta: int = 32
    n_phi: int = 64
    refine_top: int = 5


Strategy = Grid | MultiStart | Hybrid


@dataclass(frozen=True)
class OptimizerTrace:
    restarts: int
    best_values: tuple[float, ...]


@dataclass(frozen=True, eq=False)
class DiscordResult:
    value: float
    mutual_information: float
    classical_correlation: float
    optimal_measurement: ProjectiveMeasurement
    trace: OptimizerTrace


# -- entropic quantities -----------------------------------------------------


def mutual_information(rho: BipartiteState) -> float:
    """Quantum mutual information S(A) + S(B) - S(AB) in bits."""
    s_a = von_neumann_entropy(partial_trace_matrix(rho.matrix, rho.dim_a, rho.dim_b, "A"))
    s_b = von_neumann_entropy(partial_trace_matrix(rho.matrix, rho.dim_a, rho.dim_b, "B"))
    s_ab = von_neumann_entropy(rho.state)
    return s_a + s_b - s_ab


def measure_and_condition(
    rho: BipartiteState, measurement: ProjectiveMeasurement
) -> list[tuple[float, DensityOperator]]:
    """Outcome probabilities and conditional B states for a measurement on A.

    Outcomes with probability below 1e-12 are omitted.
    """
    if measurement.dim != rho.dim_a:
        raise ValueError(
            f"measurement dimension {measurement.dim} does not match dim_a {rho.dim_a}"
        )
    eye_b = np.eye(rho.dim_b, dtype=complex)
    outcomes = []
    for proj in measurement.projectors:
        big = np.kron(proj, eye_b)
        block = big @ rho.matrix @ big
        p = float(np.trace(block).real)
        if p < PROBABILITY_CUTOFF:
            continue
        cond = partial_trace_matrix(block, rho.dim_a, rho.dim_b, "B") / p
        outcomes.append((p, DensityOperator.from_matrix(cond, name="conditional state")))
    return outcomes


def _holevo_like_value(rho: BipartiteState, measurement: ProjectiveMeasurement) -> float:
    """S(B) minus the average conditional entropy at one measurement."""
    s_b = von_neumann_entropy(partial_trace(rho, "B"))
    avg = 0.0
    for p, cond in measure_and_condition(rho, measurement):
        avg += p * von_neumann_entropy(cond)
    return s_b - avg


# -- fast qubit evaluation ---------------------------------------------------


def _qubit_correlation_ops(rho: BipartiteState):
    """Reduced B operators (T0; T1, T2, T3) with T_i = tr_A[(sigma_i (x) 1) rho]."""
    r4 = rho.matrix.reshape(2, rho.dim_b, 2, rho.dim_b)
    t0 = np.trace(r4, axis1=0, axis2=2)
    ts = np.stack([np.einsum("ac,cbad->bd", s, r4) for s in PAULIS])
    return t0, ts


def _batch_entropy(matrices: np.ndarray) -> np.ndarray:
    w = np.linalg.eigvalsh(matrices)
    w = np.clip(w, 0.0, None)
    logs = np.where(w > PROBABILITY_CUTOFF, np.log2(np.where(w > 0, w, 1.0)), 0.0)
    return -np.sum(w * logs, axis=-1)


def _qubit_scores(t0, ts, s_b, directions: np.ndarray) -> np.ndarray:
    """Classical-correlation values for a batch of Bloch directions (N, 3)."""
    correlated = np.tensordot(directions, ts, axes=(1, 0))  # (N, db, db)
    plus = 0.5 * (t0[None, :, :] + correlated)
    minus = 0.5 * (t0[None, :, :] - correlated)
    p_plus = np.trace(plus, axis1=1, axis2=2).real
    p_minus = np.trace(minus, axis1=1, axis2=2).real
    avg = np.zeros(directions.shape[0])
    for p, block in ((p_plus, plus), (p_minus, minus)):
        safe = np.clip(p, PROBABILITY_CUTOFF, None)
        cond = block / safe[:, None, None]
        ent = _batch_entropy(cond)
        avg += np.where(p > PROBABILITY_CUTOFF, p * ent, 0.0)
    return s_b - avg


def _grid_directions(n_theta: int, n_phi: int) -> np.ndarray:
    thetas = np.pi * np.arange(n_theta + 1) / n_theta
    phis = 2.0 * np.pi * np.arange(n_phi) / n_phi
    tt, pp = np.meshgrid(thetas, phis, indexing="ij")
    angles = np.column_stack([tt.ravel(), pp.ravel()])
    dirs = np.column_stack(
        [
            np.sin(angles[:, 0]) * np.cos(angles[:, 1]),
            np.sin(angles[:, 0]) * np.sin(angles[:, 1]),
            np.cos(angles[:, 0]),
        ]
    )
    return angles, dirs


def _optimize_qubit(rho: BipartiteState, strategy: Grid | Hybrid):
    t0, ts = _qubit_correlation_ops(rho)
    s_b = von_neumann_entropy(partial_trace(rho, "B"))
    angles, dirs = _grid_directions(strategy.n_theta, strategy.n_phi)
    scores = _qubit_scores(t0, ts, s_b, dirs)
    best_idx = int(np.argmax(scores))
    best_angles = angles[best_idx]
    trace_values = [float(scores[best_idx])]

    if isinstance(strategy, Grid):
        return best_angles, OptimizerTrace(restarts=0, best_values=tuple(trace_values))

    def negative(x):
        d = bloch_direction(x[0], x[1])[None, :]
        return -float(_qubit_scores(t0, ts, s_b, d)[0])

    order = np.argsort(scores)[::-1]
    starts = angles[order[: strategy.refine_top]]
    best_val = float(scores[best_idx])
    refined = []
    for start in starts:
        res = minimize(
            negative,
            x0=start,
            method="Nelder-Mead",
            options={"xatol": 1e-6, "fatol": 1e-12, "maxiter": 250},
        )
        refined.append(-float(res.fun))
        if -res.fun > best_val + 1e-15:
            best_val = -float(res.fun)
            best_angles = res.x
    return best_angles, OptimizerTrace(restarts=len(starts), best_values=tuple(refined))


# -- general-dimension evaluation --------------------------------------------


def _givens_pairs(dim: int):
    return [(i, j) for i in range(dim) for j in range(i + 1, dim)]


def _givens_unitary(params: np.ndarray, dim: int) -> np.ndarray:
    """Product of complex Givens rotations, two parameters (theta, phi) per pair."""
    u = np.eye(dim, dtype=complex)
    pairs = _givens_pairs(dim)
    for idx, (i, j) in enumerate(pairs):
        theta, phi = params[2 * idx], params[2 * idx + 1]
        c, s = np.cos(theta), np.sin(theta)
        g = np.eye(dim, dtype=complex)
        g[i, i] = c
        g[j, j] = c
        g[i, j] = -np.exp(-1j * phi) * s
        g[j, i] = np.exp(1j * phi) * s
        u = u @ g
    return u


def _unitary_score(r4: np.ndarray, s_b: float, u: np.ndarray) -> float:
    total = 0.0
    for a in range(u.shape[1]):
        col = u[:, a]
        block = np.einsum("a,abcd,c->bd", col.conj(), r4, col)
        p = float(np.trace(block).real)
        if p < PROBABILITY_CUTOFF:
            continue
        total += p * entropy_from_eigenvalues(np.linalg.eigvalsh(block / p))
    return s_b - total


def _optimize_multistart(rho: BipartiteState, restarts: int, seed):
    rng = as_rng(seed)
    dim_a = rho.dim_a
    r4 = rho.matrix.reshape(dim_a, rho.dim_b, dim_a, rho.dim_b)
    s_b = von_neumann_entropy(partial_trace(rho, "B"))
    n_params = 2 * len(_givens_pairs(dim_a))

    rho_a = partial_trace_matrix(rho.matrix, dim_a, rho.dim_b, "A")
    _, eigbasis = np.linalg.eigh((rho_a + rho_a.conj().T) / 2.0)
    frames = [eigbasis] + [random_unitary(dim_a, rng) for _ in range(restarts)]

    best_u = None
    best_val = -np.inf
    per_start = []
    for frame in frames:

        def negative(x, frame=frame):
            return -_unitary_score(r4, s_b, frame @ _givens_unitary(x, dim_a))

        res = minimize(
            negative,
            x0=np.zeros(n_params),
            method="Nelder-Mead",
            options={"xatol": 1e-5, "fatol": 1e-11, "maxiter": 400 * n_params},
        )
        val = -float(res.fun)
        per_start.append(val)
        if val > best_val:
            best_val = val
            best_u = frame @ _givens_unitary(res.x, dim_a)
    trace = OptimizerTrace(restarts=len(frames), best_values=tuple(per_start))
    return best_u, trace


# -- public optimisation API ---------------------------------------------------


def classical_correlation(
    rho: BipartiteState,
    strategy: Strategy = Hybrid(),
    seed: int | np.random.Generator = 42,
) -> tuple[float, ProjectiveMeasurement]:
    """Maximal classical correlation J(B|A) over rank-1 projective measurements.

    The returned value is evaluated exactly at the returned measurement
    (a certified lower bound on the true maximum); ties between candidate
    measurements fall to the lowest grid or restart index.
    """
    value, meas, _ = _classical_correlation_traced(rho, strategy, seed)
    return value, meas


def _classical_correlation_traced(rho, strategy, seed):
    if isinstance(strategy, Grid) and rho.dim_a != 2:
        raise ValueError("Grid strategy is only defined for dim_a = 2")
    if rho.dim_a == 2 and isinstance(strategy, (Grid, Hybrid)):
        angles, trace = _optimize_qubit(rho, strategy)
        meas = ProjectiveMeasurement.from_bloch(angles[0], angles[1])
    else:
        restarts = strategy.restarts if isinstance(strategy, MultiStart) else 20
        u, trace = _optimize_multistart(rho, restarts, seed)
        meas = ProjectiveMeasurement.from_unitary(u)
    value = _holevo_like_value(rho, meas)
    return value, meas, trace


def discord(
    rho: BipartiteState,
    strategy: Strategy = Hybrid(),
    seed: int | np.random.Generator = 42,
) -> DiscordResult:
    """Quantum discord D(A) = I(A:B) - J(B|A), in bits.

    Because J is a lower bound on the true maximum, the returned value is
    an upper bound on the discord; use :func:`is_cq_exact` to certify zero
    discord rather than testing this value against zero.
    """
    info = mutual_information(rho)
    j_value, meas, trace = _classical_correlation_traced(rho, strategy, seed)
    return DiscordResult(
        value=info - j_value,
        mutual_information=info,
        classical_correlation=j_value,
        optimal_measurement=meas,
        trace=trace,
    )


# -- exact classical-quantum structure ----------------------------------------


def cq_commutator_residual(rho: BipartiteState) -> float:
    """Relative norm of [rho, rho_A (x) 1]; zero for classical-quantum states.

    This is a necessary condition only.  States with a degenerate A
    marginal (the Bell states, for instance) can have zero residual while
    still being discordant, so treat this as a fast pre-filter.
    """
    rho_a = partial_trace_matrix(rho.matrix, rho.dim_a, rho.dim_b, "A")
    big = np.kron(rho_a, np.eye(rho.dim_b, dtype=complex))
    comm = rho.matrix @ big - big @ rho.matrix
    return float(np.linalg.norm(comm) / max(1.0, np.linalg.norm(rho.matrix)))


def _b_blocks(rho: BipartiteState) -> np.ndarray:
    """Array blk[i, j] = <i|_B rho |j>_B of A-side operators, shape (dB, dB, dA, dA)."""
    r4 = rho.matrix.reshape(rho.dim_a, rho.dim_b, rho.dim_a, rho.dim_b)
    return r4.transpose(1, 3, 0, 2)


@dataclass(frozen=True)
class CQCheck:
    """Outcome of the exact classical-quantum test.

    ``residual`` is the worst commutator or normality defect among the
    B-indexed blocks, relative to the Frobenius norm of the state, and
    ``worst`` labels the offending block pair."""

    is_cq: bool
    residual: float
    worst: tuple | None
    tol: float

    def __bool__(self) -> bool:
        return self.is_cq


def is_cq_exact(rho: BipartiteState, tol: float = CQ_DEFAULT_TOL) -> CQCheck:
    """Exact zero-discord (classical-quantum) test via block commutation.

    The state is CQ iff the blocks ``A_ij = <i|_B rho |j>_B`` are mutually
    commuting normal operators; both defects are measured in Frobenius
    norm against ``tol * ||rho||_F``.
    """
    blocks = _b_blocks(rho)
    db = rho.dim_b
    scale = float(np.linalg.norm(rho.matrix))
    worst = None
    worst_val = 0.0
    labels = [(i, j) for i in range(db) for j in range(db)]
    flat = [blocks[i, j] for i, j in labels]
    for x, (i, j) in enumerate(labels):
        a_ij = flat[x]
        defect = float(np.linalg.norm(a_ij @ a_ij.conj().T - a_ij.conj().T @ a_ij))
        if defect > worst_val:
            worst_val = defect
            worst = ("normality", (i, j))
        for y in range(x + 1, len(labels)):
            a_kl = flat[y]
            comm = float(np.linalg.norm(a_ij @ a_kl - a_kl @ a_ij))
            if comm > worst_val:
                worst_val = comm
                worst = ("commutator", (i, j), labels[y])
    residual = worst_val / max(scale, 1e-300)
    return CQCheck(is_cq=residual <= tol, residual=residual, worst=worst, tol=tol)


@dataclass(frozen=True, eq=False)
class CQDecomposition:
    """Witness of zero discord: basis on A, weights and conditional B states."""

    dim_a: int
    dim_b: int
    basis: np.ndarray  # columns are the |psi_k>
    probs: np.ndarray
    conditional_states: tuple[DensityOperator, ...]

    def reconstruct(self) -> BipartiteState:
        m = np.zeros((self.dim_a * self.dim_b,) * 2, dtype=complex)
        for k in range(self.dim_a):
            proj = np.outer(self.basis[:, k], self.basis[:, k].conj())
            m += self.probs[k] * np.kron(proj, self.conditional_states[k].matrix)
        return BipartiteState.from_matrix(m, self.dim_a, self.dim_b)


def cq_decompose(
    rho: BipartiteState,
    tol: float = CQ_DEFAULT_TOL,
    *,
    retries: int = 5,
    seed: int = 11,
) -> CQDecomposition:
    """Extract the classical basis and conditional states of a CQ state.

    The common eigenbasis of the (commuting, normal) blocks is found by
    diagonalising a random real combination of their Hermitian and
    anti-Hermitian parts; degenerate draws are retried with fresh
    coefficients up to ``retries`` times.
    """
    check = is_cq_exact(rho, tol)
    if not check:
        raise DecompositionError(
            f"state is not classical-quantum (residual {check.residual:.3e}, "
            f"worst {check.worst})"
        )
    blocks = _b_blocks(rho)
    da, db = rho.dim_a, rho.dim_b
    scale = max(1.0, float(np.linalg.norm(rho.matrix)))
    rng = as_rng(seed)
    last_residual = np.inf
    for _ in range(retries):
        combined = np.zeros((da, da), dtype=complex)
        for i in range(db):
            for j in range(db):
                a_ij = blocks[i, j]
                herm = (a_ij + a_ij.conj().T) / 2.0
                skew = (a_ij - a_ij.conj().T) / 2j
                combined += rng.standard_normal() * herm + rng.standard_normal() * skew
        _, basis = np.linalg.eigh(combined)
        cond = np.einsum("ak,ijab,bk->kij", basis.conj(), blocks, basis)
        probs = np.clip(np.einsum("kii->k", cond).real, 0.0, None)
        rebuilt = np.einsum("ak,ck,kij->aicj", basis, basis.conj(), cond).reshape(
            da * db, da * db
        )
        last_residual = float(np.linalg.norm(rebuilt - rho.matrix))
        if last_residual <= 1e-8 * scale:
            conditionals = []
            for k in range(da):
                if probs[k] > PROBABILITY_CUTOFF:
                    conditionals.append(
                        DensityOperator.from_matrix(cond[k] / probs[k], name="conditional state")
                    )
                else:
                    conditionals.append(DensityOperator.maximally_mixed(db))
            total = probs.sum()
            return CQDecomposition(
                dim_a=da,
                dim_b=db,
                basis=basis,
                probs=probs / total,
                conditional_states=tuple(conditionals),
            )
    raise DecompositionError(
        f"failed to resolve a common eigenbasis after {retries} attempts "
        f"(last reconstruction residual {last_residual:.3e})"
    )
