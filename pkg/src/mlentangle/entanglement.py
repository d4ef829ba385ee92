"""Entropies of the evolved atom-field state and the mutual entropy.

The evolved state is ``sum_i gamma_i |psi_i><psi_i|`` with each ``psi_i``
a branch. The field marginal has rank at most ``m * m`` and its nonzero
spectrum equals that of the small Gram matrix

    g[(i, a), (j, b)] = sqrt(gamma_i gamma_j) <phi_{i,a} | phi_{j,b}>,

where ``phi_{i,a}`` is the field vector sitting on atomic level ``a`` in
branch ``i``. Entropies are in nats.

Truncation of the initial field leaves a probability deficit of order
``eps_trunc``. Reduced states keep it (their trace is the retained
probability); entropies are taken of the trace-normalized spectra so the
deficit does not leak into the entanglement degree.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.linalg import blas

from .dynamics import EnsembleState, SystemParams, _check_oracle_scale, expm_oracle
from .fock import ProductFieldState

__all__ = [
    "CLAMP_TOL",
    "InvariantError",
    "ReducedAtomState",
    "FieldGram",
    "EntanglementPoint",
    "entropy_of_spectrum",
    "total_entropy",
    "atom_reduced",
    "atom_entropy",
    "field_gram",
    "field_entropy",
    "mutual_entropy",
    "point_from_gram",
    "entanglement_point",
    "dense_total_state",
    "partial_traces",
    "dense_entanglement_point",
]

CLAMP_TOL = 1e-10


class InvariantError(ArithmeticError):
    """A computed quantity broke a physical invariant beyond tolerance."""


def entropy_of_spectrum(eigs) -> float:
    """``-sum(l * ln(l))`` with ``0 ln 0 = 0``.

    Eigenvalues in ``[-CLAMP_TOL, 0)`` are roundoff and are clamped to zero;
    anything more negative raises :class:`InvariantError`.
    """
    eigs = np.asarray(eigs, dtype=float).ravel()
    if eigs.size and eigs.min() < -CLAMP_TOL:
        raise InvariantError(f"spectrum has a negative eigenvalue {eigs.min():.3e}")
    if eigs.sum() > 1 + 1e-9:
        raise InvariantError(f"spectrum sums to {eigs.sum():.12g} > 1")
    p = eigs[eigs > 0]
    return float(max(-np.sum(p * np.log(p)), 0.0))


def _check_gammas(gammas) -> np.ndarray:
    gammas = np.asarray(gammas, dtype=float)
    if gammas.ndim != 1 or np.any(gammas < 0) or abs(gammas.sum() - 1) > 1e-9:
        raise ValueError(f"gammas must be non-negative weights summing to 1, got {gammas}")
    return gammas


def total_entropy(gammas) -> float:
    """Entropy of the full state; unitary evolution keeps it at ``-sum g ln g``."""
    return entropy_of_spectrum(_check_gammas(gammas))


def _normalized_entropy(matrix: np.ndarray) -> float:
    eigs = linalg.eigvalsh(matrix)
    trace = eigs.sum()
    if trace <= 0:
        raise InvariantError(f"reduced state has non-positive trace {trace:.3e}")
    return entropy_of_spectrum(eigs / trace)


@dataclass(frozen=True)
class ReducedAtomState:
    rho: np.ndarray

    @property
    def trace(self) -> float:
        return float(np.trace(self.rho).real)

    def eigenvalues(self) -> np.ndarray:
        return linalg.eigvalsh(self.rho)


def atom_reduced(ensemble: EnsembleState) -> ReducedAtomState:
    """Trace out the field: ``rho_ab = sum_i gamma_i <phi_{i,b}|phi_{i,a}>``."""
    m = ensemble.params.m
    rho = np.zeros((m, m), dtype=complex)
    for g, amps in zip(ensemble.gammas, ensemble.amplitudes):
        if g > 0:
            x = amps.reshape(m, -1)
            rho += g * (x @ x.conj().T)
    rho = 0.5 * (rho + rho.conj().T)
    return ReducedAtomState(rho)


def atom_entropy(state: ReducedAtomState) -> float:
    return _normalized_entropy(state.rho)


@dataclass(frozen=True)
class FieldGram:
    """Gram matrix of the weighted field vectors; rows grouped by branch.

    ``branches`` lists the branches kept (nonzero weight), each contributing
    ``m`` consecutive rows.
    """

    g: np.ndarray
    branches: tuple[int, ...]
    weights: tuple[float, ...]
    m: int

    @property
    def trace(self) -> float:
        return float(np.trace(self.g).real)

    def eigenvalues(self) -> np.ndarray:
        return linalg.eigvalsh(self.g)

    def branch_norms(self) -> np.ndarray:
        """Squared norm of every kept branch, ``tr(block_i) / gamma_i``."""
        m = self.m
        diag = np.diag(self.g).real.reshape(len(self.branches), m).sum(axis=1)
        return diag / np.asarray(self.weights)

    def atom_marginal(self) -> np.ndarray:
        """Reduced atomic state recovered from the branch-diagonal blocks."""
        m = self.m
        rho = np.zeros((m, m), dtype=complex)
        for k in range(len(self.branches)):
            rho += self.g[k * m : (k + 1) * m, k * m : (k + 1) * m].conj()
        return rho


def field_gram(ensemble: EnsembleState) -> FieldGram:
    m = ensemble.params.m
    keep = tuple(i for i, g in enumerate(ensemble.gammas) if g > 0)
    amps = ensemble.amplitudes
    if len(keep) < len(ensemble.gammas):
        amps = amps[list(keep)]
    x = amps.reshape(len(keep) * m, -1)
    # herk on the F-ordered transpose avoids copying the field vectors
    gram = blas.zherk(1.0, x.T, trans=2)
    gram = np.triu(gram) + np.triu(gram, 1).conj().T
    weights = tuple(ensemble.gammas[i] for i in keep)
    w = np.repeat(np.sqrt(weights), m)
    return FieldGram(gram * np.outer(w, w), keep, weights, m)


def field_entropy(g: FieldGram) -> float:
    return _normalized_entropy(g.g)


def mutual_entropy(s_total: float, s_atom: float, s_field: float) -> float:
    """Entanglement degree ``S_A + S_F - S_total``."""
    if min(s_total, s_atom, s_field) < 0:
        raise ValueError("entropies must be non-negative")
    value = s_atom + s_field - s_total
    if value < -CLAMP_TOL:
        raise InvariantError(f"mutual entropy {value:.3e} is negative")
    return max(value, 0.0)


@dataclass(frozen=True)
class EntanglementPoint:
    t: float
    s_total: float
    s_atom: float
    s_field: float
    i_mutual: float

    def check(self, m: int, tol: float = 1e-9) -> None:
        """Raise :class:`InvariantError` if any entropy inequality fails."""
        s, a, f, i = self.s_total, self.s_atom, self.s_field, self.i_mutual
        problems = []
        if min(s, a, f, i) < 0:
            problems.append("negative entropy")
        if abs(i - (a + f - s)) > 1e-10:
            problems.append("I != S_A + S_F - S_total")
        if a > np.log(m) + tol:
            problems.append("S_A above ln m")
        if abs(a - f) > s + tol:
            problems.append("Araki-Lieb violated")
        if s > a + f + tol:
            problems.append("subadditivity violated")
        if i > 2 * min(a, f) + tol:
            problems.append("I above 2 min(S_A, S_F)")
        if problems:
            raise InvariantError(f"t={self.t!r}: " + "; ".join(problems))


def point_from_gram(gram: FieldGram, gammas, t: float) -> EntanglementPoint:
    """Entropies at one instant; the atomic marginal is read off ``gram``."""
    s_total = total_entropy(gammas)
    s_atom = _normalized_entropy(gram.atom_marginal())
    s_field = field_entropy(gram)
    i = mutual_entropy(s_total, s_atom, s_field)
    return EntanglementPoint(float(t), s_total, s_atom, s_field, i)


def entanglement_point(ensemble: EnsembleState, t: float | None = None) -> EntanglementPoint:
    """All entropies at one instant, from a single Gram evaluation.

    ``t`` is the label stored on the point (defaults to ``ensemble.t``).
    """
    return point_from_gram(field_gram(ensemble), ensemble.gammas, ensemble.t if t is None else t)


# -- dense reference path ---------------------------------------------------


def dense_total_state(gammas, field: ProductFieldState, params: SystemParams, t: float) -> np.ndarray:
    """Full density matrix, evolved with the eigendecomposition propagator."""
    gammas = _check_gammas(gammas)
    dims = field.dims
    _check_oracle_scale(params, dims)
    u = expm_oracle(params, dims, t)
    psi = field.joint().ravel()
    d = psi.size
    rho = np.zeros((params.m * d, params.m * d), dtype=complex)
    for i, g in enumerate(gammas):
        if g > 0:
            col = u[:, i * d : (i + 1) * d] @ psi
            rho += g * np.outer(col, col.conj())
    return rho


def partial_traces(rho: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    """``(rho_atom, rho_field)`` of a level-major joint density matrix."""
    d = rho.shape[0] // m
    r = rho.reshape(m, d, m, d)
    return np.einsum("aibi->ab", r), np.einsum("aiaj->ij", r)


def dense_entanglement_point(gammas, field: ProductFieldState, params: SystemParams, t: float) -> EntanglementPoint:
    """Reference point: dense evolution, explicit partial traces, full spectra."""
    rho = dense_total_state(gammas, field, params, t)
    rho_a, rho_f = partial_traces(rho, params.m)
    s_total = _normalized_entropy(rho)
    s_atom = _normalized_entropy(rho_a)
    s_field = _normalized_entropy(rho_f)
    return EntanglementPoint(float(t), s_total, s_atom, s_field, s_atom + s_field - s_total)
