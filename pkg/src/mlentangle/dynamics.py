"""Exact evolution of an m-level fan atom coupled to m-1 cavity modes.

The upper level ``|1>`` couples to each lower level ``|j+1>`` through mode
``j``. The interaction conserves the excitation pattern, so the truncated
space splits into m-dimensional blocks

    {|1; n>, |2; n+e_1>, ..., |m; n+e_{m-1}>}

plus one-dimensional blocks ``|j+1; k>`` with ``k_j = 0`` that never move.
Inside a block the interaction is ``[[delta, c^T], [c, 0]]`` with couplings
``c_j = lambda_j sqrt(n_j + 1)``, whose exponential has a closed form.

Levels are 0-based in code: level 0 is the upper level, level ``j + 1``
the lower level driven by mode ``j``. The free Hamiltonian and the constant
energy offset only contribute phases that no entropy can see, so the
closed-form propagator is ``exp(-i H1 t)`` alone.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import prod

import numpy as np
from scipy import linalg

from ._kernels import ensemble_kernel
from .fock import ProductFieldState

__all__ = [
    "ORACLE_MAX_DIM",
    "OracleScaleError",
    "SystemParams",
    "DynamicsBlock",
    "BranchState",
    "EnsembleState",
    "mu_n",
    "block_couplings",
    "block_unitary",
    "dynamics_block",
    "assemble_unitary",
    "hamiltonian_interaction",
    "hamiltonian_free",
    "expm_oracle",
    "initial_branch",
    "evolve_branch",
    "evolve_ensemble",
]

ORACLE_MAX_DIM = 2000


class OracleScaleError(ValueError):
    """Raised when a dense operator would exceed ``ORACLE_MAX_DIM``."""


@dataclass(frozen=True)
class SystemParams:
    """Model constants.

    Parameters
    ----------
    m : int
        Number of atomic levels (``m >= 2``); there are ``m - 1`` modes.
    delta : float
        Detuning, in units of the couplings.
    lambdas : tuple of float, optional
        Per-mode couplings, all positive. Defaults to all ones.
    omegas, bigomegas : tuple of float, optional
        Atomic level and mode frequencies. Only needed for the free
        Hamiltonian; when given they must satisfy
        ``delta = omegas[0] - omegas[j+1] - bigomegas[j]``.
    """

    m: int
    delta: float = 0.0
    lambdas: tuple[float, ...] | None = None
    omegas: tuple[float, ...] | None = None
    bigomegas: tuple[float, ...] | None = None

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 2:
            raise ValueError(f"m must be an integer >= 2, got {self.m!r}")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "delta", float(self.delta))
        lambdas = (1.0,) * (self.m - 1) if self.lambdas is None else tuple(map(float, self.lambdas))
        if len(lambdas) != self.m - 1:
            raise ValueError(f"lambdas: expected {self.m - 1} entries, got {len(lambdas)}")
        if any(not lam > 0 for lam in lambdas):
            raise ValueError(f"lambdas must all be positive, got {lambdas}")
        object.__setattr__(self, "lambdas", lambdas)
        if (self.omegas is None) != (self.bigomegas is None):
            raise ValueError("omegas and bigomegas must be given together")
        if self.omegas is not None:
            omegas = tuple(map(float, self.omegas))
            bigomegas = tuple(map(float, self.bigomegas))
            if len(omegas) != self.m or len(bigomegas) != self.m - 1:
                raise ValueError("omegas needs m entries and bigomegas m - 1 entries")
            for j, big in enumerate(bigomegas):
                if abs(omegas[0] - omegas[j + 1] - big - self.delta) > 1e-12:
                    raise ValueError(f"frequencies violate the detuning relation for mode {j}")
            object.__setattr__(self, "omegas", omegas)
            object.__setattr__(self, "bigomegas", bigomegas)

    @property
    def n_modes(self) -> int:
        return self.m - 1

    @property
    def lambda_bar(self) -> float:
        """Coupling scale used for scaled time ``lambda_bar * t``."""
        return max(self.lambdas)


def _check_index(params: SystemParams, n) -> tuple[int, ...]:
    n = tuple(int(x) for x in n)
    if len(n) != params.n_modes or any(x < 0 for x in n):
        raise ValueError(f"block index must be {params.n_modes} non-negative occupations, got {n}")
    return n


def block_couplings(params: SystemParams, n) -> np.ndarray:
    """Couplings ``lambda_j sqrt(n_j + 1)`` inside block ``n``."""
    n = _check_index(params, n)
    return np.asarray(params.lambdas) * np.sqrt(np.asarray(n) + 1.0)


def mu_n(params: SystemParams, n) -> float:
    """Rabi frequency ``sqrt(delta^2/4 + sum_j lambda_j^2 (n_j + 1))`` of block ``n``."""
    c = block_couplings(params, n)
    return float(np.sqrt(params.delta**2 / 4 + np.dot(c, c)))


def _closed_form(delta: float, c: np.ndarray, t: float) -> np.ndarray:
    """``exp(-i t [[delta, c^T], [c, 0]])`` for real couplings ``c``.

    Zero entries in ``c`` are allowed (modes cut off by truncation).
    """
    c = np.asarray(c, dtype=float)
    v = float(np.dot(c, c))
    mu = np.sqrt(delta**2 / 4 + v)
    cos = np.cos(mu * t)
    sinc = t * np.sinc(mu * t / np.pi)  # sin(mu t) / mu, finite at mu = 0
    phase = np.exp(-0.5j * delta * t)
    k = c.size + 1
    u = np.empty((k, k), dtype=complex)
    u[0, 0] = phase * (cos - 0.5j * delta * sinc)
    u[0, 1:] = -1j * phase * sinc * c
    u[1:, 0] = u[0, 1:]
    # lower block: identity off the coupled direction c/|c|. The printed
    # bracket carries the opposite overall sign and phase; this form is the
    # one that equals the dense exponential.
    lower = np.eye(k - 1, dtype=complex)
    if v > 0:
        lower += np.outer(c, c) * ((phase * (cos + 0.5j * delta * sinc) - 1.0) / v)
    u[1:, 1:] = lower
    return u


def block_unitary(params: SystemParams, n, t: float) -> np.ndarray:
    """m x m propagator on block ``n`` in the basis ``|1;n>, |j+1; n+e_j>``."""
    if not np.isfinite(t):
        raise ValueError(f"t must be finite, got {t!r}")
    return _closed_form(params.delta, block_couplings(params, n), t)


@dataclass(frozen=True)
class DynamicsBlock:
    n: tuple[int, ...]
    mu: float
    v: float
    u: np.ndarray


def dynamics_block(params: SystemParams, n, t: float) -> DynamicsBlock:
    c = block_couplings(params, n)
    v = float(np.dot(c, c))
    return DynamicsBlock(
        n=_check_index(params, n),
        mu=float(np.sqrt(params.delta**2 / 4 + v)),
        v=v,
        u=block_unitary(params, n, t),
    )


def _check_dims(params: SystemParams, dims) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if len(dims) != params.n_modes or any(d < 1 for d in dims):
        raise ValueError(f"dims must list {params.n_modes} positive sizes, got {dims}")
    return dims


def _check_oracle_scale(params: SystemParams, dims) -> int:
    total = params.m * prod(dims)
    if total > ORACLE_MAX_DIM:
        raise OracleScaleError(
            f"full space has dimension {total} (m={params.m}, dims={tuple(dims)}), "
            f"above the dense limit {ORACLE_MAX_DIM}"
        )
    return total


def _flat(level: int, k, dims) -> int:
    return level * prod(dims) + int(np.ravel_multi_index(tuple(k), dims))


def assemble_unitary(params: SystemParams, dims, t: float) -> np.ndarray:
    """Dense propagator on the truncated space, assembled block by block.

    Blocks touching the truncation edge lose the lower states that fall
    outside ``dims``; their couplings are zeroed, which keeps the result the
    exact exponential of the truncated interaction.
    """
    dims = _check_dims(params, dims)
    total = _check_oracle_scale(params, dims)
    u_full = np.zeros((total, total), dtype=complex)
    lam = np.asarray(params.lambdas)
    for n in np.ndindex(*dims):
        inside = np.array([n[j] + 1 < dims[j] for j in range(params.n_modes)])
        c = np.where(inside, lam * np.sqrt(np.asarray(n) + 1.0), 0.0)
        u = _closed_form(params.delta, c, t)
        states = [_flat(0, n, dims)]
        for j in range(params.n_modes):
            k = list(n)
            k[j] += 1
            states.append(_flat(j + 1, k, dims) if inside[j] else -1)
        idx = [i for i, s in enumerate(states) if s >= 0]
        rows = [states[i] for i in idx]
        u_full[np.ix_(rows, rows)] = u[np.ix_(idx, idx)]
    # lower states with k_j = 0 are uncoupled
    for j in range(params.n_modes):
        for k in np.ndindex(*dims):
            if k[j] == 0:
                s = _flat(j + 1, k, dims)
                u_full[s, s] = 1.0
    return u_full


def hamiltonian_interaction(params: SystemParams, dims) -> np.ndarray:
    """Dense interaction Hamiltonian on ``m x prod(dims)`` states.

    Basis order is level-major: ``level * prod(dims) + flat(n)``.
    """
    dims = _check_dims(params, dims)
    total = _check_oracle_scale(params, dims)
    h = np.zeros((total, total), dtype=complex)
    for n in np.ndindex(*dims):
        i = _flat(0, n, dims)
        h[i, i] = params.delta
        for j, lam in enumerate(params.lambdas):
            if n[j] + 1 < dims[j]:
                k = list(n)
                k[j] += 1
                s = _flat(j + 1, k, dims)
                h[s, i] = h[i, s] = lam * np.sqrt(n[j] + 1.0)
    return h


def hamiltonian_free(params: SystemParams, dims) -> np.ndarray:
    """Diagonal free Hamiltonian ``(w_1 - delta) + sum_j W_j (n_j - S_{j+1,j+1})``."""
    if params.omegas is None:
        raise ValueError("hamiltonian_free needs omegas and bigomegas")
    dims = _check_dims(params, dims)
    _check_oracle_scale(params, dims)
    big = np.asarray(params.bigomegas)
    diag = []
    for level in range(params.m):
        for n in np.ndindex(*dims):
            e = params.omegas[0] - params.delta + float(np.dot(big, n))
            if level > 0:
                e -= big[level - 1]
            diag.append(e)
    return np.diag(np.asarray(diag, dtype=complex))


def expm_oracle(params: SystemParams, dims, t: float) -> np.ndarray:
    """``exp(-i H1 t)`` by dense Hermitian eigendecomposition."""
    h = hamiltonian_interaction(params, dims)
    e, v = linalg.eigh(h)
    return (v * np.exp(-1j * e * t)) @ v.conj().T


@dataclass(frozen=True)
class BranchState:
    """One pure summand of the evolved mixed state.

    ``amps`` has shape ``(m, *dims)``: atomic level first, then the field
    occupations.
    """

    weight: float
    level0: int
    amps: np.ndarray

    @property
    def norm2(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)


@dataclass(frozen=True)
class EnsembleState:
    """Evolved state as ``m`` weighted branches sharing one amplitude array.

    ``amplitudes`` has shape ``(m, m, *dims)``: branch, level, field.
    """

    gammas: tuple[float, ...]
    amplitudes: np.ndarray
    t: float
    params: SystemParams

    @property
    def dims(self) -> tuple[int, ...]:
        return self.amplitudes.shape[2:]

    @property
    def branches(self) -> list[BranchState]:
        return [BranchState(g, i, self.amplitudes[i]) for i, g in enumerate(self.gammas)]

    @property
    def retained_probability(self) -> float:
        flat = self.amplitudes.reshape(len(self.gammas), -1)
        norms = np.einsum("ij,ij->i", flat.conj(), flat).real
        return float(np.dot(self.gammas, norms))


@lru_cache(maxsize=8)
def _geometry(params: SystemParams, dims: tuple[int, ...]):
    """Time-independent block data on the grid ``dims``.

    Returns the broadcastable per-mode couplings (zero where ``n_j + 1``
    leaves the grid), ``v`` and ``mu`` per block.
    """
    nm = params.n_modes
    cs = []
    for j, (lam, d) in enumerate(zip(params.lambdas, dims)):
        n = np.arange(d, dtype=float)
        c = np.where(n + 1 < d, lam * np.sqrt(n + 1), 0.0)
        shape = [1] * nm
        shape[j] = d
        cs.append(c.reshape(shape))
    v = np.zeros(dims)
    for c in cs:
        v = v + c**2
    mu = np.sqrt(params.delta**2 / 4 + v)
    return cs, v, mu


def _block_coefficients(params: SystemParams, dims, t: float):
    # per-block scalars of the rank-one closed form:
    #   u00 = a, u0j = uj0 = b c_j, ujk = delta_jk + c_j c_k d
    _, v, mu = _geometry(params, tuple(dims))
    delta = params.delta
    cos = np.cos(mu * t)
    sinc = t * np.sinc(mu * t / np.pi)
    phase = np.exp(-0.5j * delta * t)
    a = phase * (cos - 0.5j * delta * sinc)
    b = -1j * phase * sinc
    with np.errstate(divide="ignore", invalid="ignore"):
        d = np.where(v > 0, (phase * (cos + 0.5j * delta * sinc) - 1.0) / v, 0.0)
    return a, b, d


def _shift_down(x: np.ndarray, axis: int) -> np.ndarray:
    """``y[..., n_j, ...] = x[..., n_j + 1, ...]``, zero past the edge."""
    y = np.zeros_like(x)
    src = [slice(None)] * x.ndim
    dst = [slice(None)] * x.ndim
    src[axis] = slice(1, None)
    dst[axis] = slice(None, -1)
    y[tuple(dst)] = x[tuple(src)]
    return y


def _propagate(amps: np.ndarray, params: SystemParams, t: float) -> np.ndarray:
    """Apply the block propagator to ``amps`` of shape ``(batch, m, *dims)``."""
    dims = amps.shape[2:]
    cs, _, _ = _geometry(params, tuple(dims))
    a, b, d = _block_coefficients(params, dims, t)
    x0 = amps[:, 0]
    # lower amplitudes gathered onto their block label n = k - e_j
    xs = [_shift_down(amps[:, j + 1], j + 1) for j in range(params.n_modes)]
    s = sum(c * x for c, x in zip(cs, xs))
    out = np.empty_like(amps)
    out[:, 0] = a * x0 + b * s
    bx0 = b * x0
    ds = d * s
    for j, (c, x) in enumerate(zip(cs, xs)):
        y = x + c * (bx0 + ds)
        lower = out[:, j + 1]
        axis = j + 1
        dst = [slice(None)] * lower.ndim
        src = [slice(None)] * lower.ndim
        dst[axis] = slice(1, None)
        src[axis] = slice(None, -1)
        lower[tuple(dst)] = y[tuple(src)]
        edge = [slice(None)] * lower.ndim
        edge[axis] = 0
        lower[tuple(edge)] = amps[:, j + 1][tuple(edge)]
    return out


def initial_branch(level: int, field: ProductFieldState, params: SystemParams, weight=1.0) -> BranchState:
    """Branch ``|level> (x) |field>`` at ``t = 0``."""
    if field.n_modes != params.n_modes:
        raise ValueError(f"field has {field.n_modes} modes, params expect {params.n_modes}")
    if not 0 <= level < params.m:
        raise ValueError(f"level must lie in [0, {params.m}), got {level}")
    amps = np.zeros((params.m, *field.dims), dtype=complex)
    amps[level] = field.joint()
    return BranchState(float(weight), level, amps)


def evolve_branch(branch: BranchState, params: SystemParams, t: float) -> BranchState:
    """Evolve one pure branch by time ``t`` (unscaled units)."""
    if branch.amps.ndim != params.n_modes + 1 or branch.amps.shape[0] != params.m:
        raise ValueError(
            f"branch amplitudes of shape {branch.amps.shape} do not fit m={params.m}"
        )
    if not np.isfinite(t):
        raise ValueError(f"t must be finite, got {t!r}")
    out = _propagate(branch.amps[None], params, t)[0]
    return BranchState(branch.weight, branch.level0, out)


def _check_gammas(gammas, m: int) -> tuple[float, ...]:
    gammas = tuple(float(g) for g in gammas)
    if len(gammas) != m:
        raise ValueError(f"gammas: expected {m} entries, got {len(gammas)}")
    if any(not g >= 0 for g in gammas) or abs(sum(gammas) - 1.0) > 1e-9:
        raise ValueError(f"gammas must be non-negative and sum to 1, got {gammas}")
    return gammas


def evolve_ensemble(
    gammas, field: ProductFieldState, params: SystemParams, t: float, out: np.ndarray | None = None
) -> EnsembleState:
    """Evolve the mixed initial state ``sum_i gamma_i |i><i| (x) |field><field|``.

    Each branch starts on a single level, so only one column of every block
    propagator is needed. Branches with zero weight are evolved as well.

    ``out``, if given, is a complex array of ``m * m * prod(dims)`` entries
    that is overwritten and wrapped by the result; sweeps reuse it to avoid
    reallocating the amplitudes at every time point.
    """
    gammas = _check_gammas(gammas, params.m)
    if field.n_modes != params.n_modes:
        raise ValueError(f"field has {field.n_modes} modes, params expect {params.n_modes}")
    if not np.isfinite(t):
        raise ValueError(f"t must be finite, got {t!r}")
    dims = field.dims
    psi = field.joint()
    strides = np.asarray(psi.strides, dtype=np.int64) // psi.itemsize
    shape = (params.m, params.m, psi.size)
    if out is None:
        out = np.empty(shape, dtype=complex)
    else:
        if out.size != prod(shape) or out.dtype != complex or not out.flags.c_contiguous:
            raise ValueError(f"out must be a contiguous complex array of {prod(shape)} entries")
        out = out.reshape(shape)
    ensemble_kernel(
        psi.ravel(),
        np.asarray(dims, dtype=np.int64),
        strides,
        np.asarray(params.lambdas),
        params.delta,
        float(t),
        out,
    )
    return EnsembleState(gammas, out.reshape(params.m, params.m, *dims), float(t), params)
