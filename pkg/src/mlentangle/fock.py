"""Truncated multimode Fock-space states.

Single-mode field states are stored as amplitude vectors ``b_0 .. b_{n_max}``
together with the probability mass that truncation discarded. A product
state over several modes reserves one extra photon slot per mode, since the
atom-field interaction raises any occupation by at most one photon.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from math import prod

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson

__all__ = [
    "DEFAULT_EPS_TRUNC",
    "ModeSpec",
    "FieldAmplitudes",
    "ProductFieldState",
    "MultiIndexCodec",
    "fock_amplitudes",
    "coherent_amplitudes",
    "squeezed_coherent_amplitudes",
    "mode_amplitudes",
    "product_state",
    "multi_index_codec",
]

DEFAULT_EPS_TRUNC = 1e-10

MODE_KINDS = ("fock", "coherent", "squeezed_coherent")


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class ModeSpec:
    """Declarative description of one field mode's initial state.

    Only the parameters belonging to ``kind`` may be set:

    * ``fock``: ``n``
    * ``coherent``: ``nbar`` (amplitude taken real, ``alpha = sqrt(nbar)``)
    * ``squeezed_coherent``: ``alpha`` and ``r``
    """

    kind: str
    n: int | None = None
    nbar: float | None = None
    alpha: complex | None = None
    r: float | None = None

    def __post_init__(self):
        required = {
            "fock": ("n",),
            "coherent": ("nbar",),
            "squeezed_coherent": ("alpha", "r"),
        }
        if self.kind not in required:
            raise ValueError(f"unknown field kind {self.kind!r}; expected one of {MODE_KINDS}")
        for name in ("n", "nbar", "alpha", "r"):
            present = getattr(self, name) is not None
            if present and name not in required[self.kind]:
                raise ValueError(f"parameter {name!r} is not valid for kind {self.kind!r}")
            if not present and name in required[self.kind]:
                raise ValueError(f"kind {self.kind!r} requires parameter {name!r}")
        if self.kind == "fock":
            if int(self.n) != self.n or self.n < 0:
                raise ValueError(f"n must be a non-negative integer, got {self.n!r}")
            object.__setattr__(self, "n", int(self.n))
        elif self.kind == "coherent":
            if not np.isfinite(self.nbar) or self.nbar < 0:
                raise ValueError(f"nbar must be finite and >= 0, got {self.nbar!r}")
            object.__setattr__(self, "nbar", float(self.nbar))
        else:
            if not np.isfinite(self.r):
                raise ValueError(f"r must be finite, got {self.r!r}")
            object.__setattr__(self, "alpha", complex(self.alpha))
            object.__setattr__(self, "r", float(self.r))

    @classmethod
    def fock(cls, n: int) -> ModeSpec:
        return cls("fock", n=n)

    @classmethod
    def coherent(cls, nbar: float) -> ModeSpec:
        return cls("coherent", nbar=nbar)

    @classmethod
    def squeezed_coherent(cls, alpha: complex, r: float) -> ModeSpec:
        return cls("squeezed_coherent", alpha=alpha, r=r)


@dataclass(frozen=True)
class FieldAmplitudes:
    """Amplitudes ``b_n`` of one mode, truncated at ``n_max``."""

    amps: np.ndarray
    tail_mass: float = 0.0

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=complex)
        if amps.ndim != 1 or amps.size == 0:
            raise ValueError("amps must be a non-empty 1-d array")
        object.__setattr__(self, "amps", _frozen(amps))

    @property
    def n_max(self) -> int:
        return self.amps.size - 1

    @property
    def norm2(self) -> float:
        return float(np.sum(np.abs(self.amps) ** 2))

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2


def _check_eps(eps_trunc: float) -> None:
    if not 0.0 < eps_trunc < 1.0:
        raise ValueError(f"eps_trunc must lie in (0, 1), got {eps_trunc!r}")


def fock_amplitudes(n: int) -> FieldAmplitudes:
    """Number state ``|n>``: a unit impulse at index ``n``."""
    if int(n) != n or n < 0:
        raise ValueError(f"n must be a non-negative integer, got {n!r}")
    amps = np.zeros(int(n) + 1, dtype=complex)
    amps[-1] = 1.0
    return FieldAmplitudes(amps, 0.0)


def coherent_amplitudes(nbar: float, eps_trunc: float = DEFAULT_EPS_TRUNC) -> FieldAmplitudes:
    """Coherent state with real amplitude ``sqrt(nbar)``.

    ``n_max`` is the smallest cutoff whose discarded Poisson tail is below
    ``eps_trunc``. Amplitudes are not renormalized after truncation.
    """
    _check_eps(eps_trunc)
    if not np.isfinite(nbar) or nbar < 0:
        raise ValueError(f"nbar must be finite and >= 0, got {nbar!r}")
    if nbar == 0:
        return FieldAmplitudes(np.ones(1), 0.0)
    n_max = int(np.floor(nbar))
    while poisson.sf(n_max, nbar) >= eps_trunc:
        n_max += 1
    n = np.arange(n_max + 1)
    log_b = -0.5 * nbar + 0.5 * n * np.log(nbar) - 0.5 * gammaln(n + 1)
    return FieldAmplitudes(np.exp(log_b), float(poisson.sf(n_max, nbar)))


def _squeezed_series(alpha: complex, r: float, size: int) -> np.ndarray:
    # (a cosh r + a^dag sinh r) D(alpha)S(r)|0> = beta D(alpha)S(r)|0>,
    # with S(r) = exp(r (a^2 - a^dag^2) / 2); read off component-wise.
    ch, sh = np.cosh(r), np.sinh(r)
    beta = alpha * ch + np.conj(alpha) * sh
    c = np.zeros(size, dtype=complex)
    c[0] = 1.0
    if size > 1:
        c[1] = beta * c[0] / ch
    for n in range(1, size - 1):
        c[n + 1] = (beta * c[n] - sh * np.sqrt(n) * c[n - 1]) / (ch * np.sqrt(n + 1))
        if abs(c[n + 1]) > 1e150:
            c[: n + 2] *= 1e-150
    return c


def squeezed_coherent_amplitudes(
    alpha: complex, r: float, eps_trunc: float = DEFAULT_EPS_TRUNC
) -> FieldAmplitudes:
    """Displaced squeezed vacuum ``D(alpha) S(r) |0>`` for real squeeze ``r``.

    Coefficients come from the three-term eigenvalue recurrence of the
    transformed annihilator, normalized over a generous cutoff, then
    truncated so the discarded mass stays below ``eps_trunc``. The global
    phase is fixed by ``b_0 > 0``; at ``r = 0`` this is the coherent state.
    """
    _check_eps(eps_trunc)
    if not np.isfinite(r):
        raise ValueError(f"r must be finite, got {r!r}")
    alpha = complex(alpha)
    # photon number mean + spread sets the initial search window
    mean = abs(alpha) ** 2 + np.sinh(r) ** 2
    size = int(max(32, 4 * mean + 40 * np.sqrt(mean + 1) + 20 * abs(r)))
    while True:
        c = _squeezed_series(alpha, r, size)
        p = np.abs(c) ** 2
        total = p.sum()
        if p[-size // 4 :].sum() < 1e-6 * eps_trunc * total:
            break
        size *= 2
    p /= total
    c /= np.sqrt(total)
    # tail[k] = mass strictly beyond index k
    tail = np.cumsum(p[::-1])[::-1] - p
    n_max = int(np.argmax(tail < eps_trunc))
    return FieldAmplitudes(c[: n_max + 1], float(max(tail[n_max], 0.0)))


def mode_amplitudes(spec: ModeSpec, eps_trunc: float = DEFAULT_EPS_TRUNC) -> FieldAmplitudes:
    if spec.kind == "fock":
        return fock_amplitudes(spec.n)
    if spec.kind == "coherent":
        return coherent_amplitudes(spec.nbar, eps_trunc)
    return squeezed_coherent_amplitudes(spec.alpha, spec.r, eps_trunc)


@dataclass(frozen=True)
class ProductFieldState:
    """Product of single-mode states, one per cavity mode."""

    modes: tuple[FieldAmplitudes, ...]

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))
        if not self.modes:
            raise ValueError("a product field state needs at least one mode")

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    @property
    def dims(self) -> tuple[int, ...]:
        # one spare level per mode for the photon emitted by the atom
        return tuple(mode.n_max + 2 for mode in self.modes)

    @property
    def norm2(self) -> float:
        return prod(mode.norm2 for mode in self.modes)

    @property
    def tail_mass(self) -> float:
        """Probability mass missing from the joint state, ``1 - norm2``."""
        return 1.0 - prod(1.0 - mode.tail_mass for mode in self.modes)

    @cached_property
    def _joint(self) -> np.ndarray:
        out = np.ones((), dtype=complex)
        for mode, dim in zip(self.modes, self.dims):
            padded = np.zeros(dim, dtype=complex)
            padded[: mode.amps.size] = mode.amps
            out = np.multiply.outer(out, padded)
        return _frozen(out)

    def joint(self) -> np.ndarray:
        """Joint amplitudes ``prod_j b_{n_j}`` on the grid ``dims`` (read-only)."""
        return self._joint


def product_state(specs, eps_trunc: float = DEFAULT_EPS_TRUNC) -> ProductFieldState:
    specs = list(specs)
    if not specs:
        raise ValueError("product_state needs at least one ModeSpec")
    return ProductFieldState(tuple(mode_amplitudes(s, eps_trunc) for s in specs))


class MultiIndexCodec:
    """Row-major bijection between occupation tuples and flat indices."""

    def __init__(self, dims):
        self.dims = tuple(int(d) for d in dims)
        if not self.dims or any(d < 1 for d in self.dims):
            raise ValueError(f"all dims must be >= 1, got {dims!r}")
        strides = [1] * len(self.dims)
        for j in range(len(self.dims) - 2, -1, -1):
            strides[j] = strides[j + 1] * self.dims[j + 1]
        self.strides = tuple(strides)
        self.size = prod(self.dims)

    def encode(self, occupations) -> int:
        occupations = tuple(occupations)
        if len(occupations) != len(self.dims):
            raise ValueError(f"expected {len(self.dims)} occupations, got {len(occupations)}")
        for j, (n, d) in enumerate(zip(occupations, self.dims)):
            if not 0 <= n < d:
                raise IndexError(f"occupation {n} of mode {j} outside [0, {d})")
        return sum(n * s for n, s in zip(occupations, self.strides))

    def decode(self, linear: int) -> tuple[int, ...]:
        if not 0 <= linear < self.size:
            raise IndexError(f"flat index {linear} outside [0, {self.size})")
        return tuple(int(x) for x in np.unravel_index(linear, self.dims))

    def __iter__(self):
        return iter(np.ndindex(*self.dims))

    def __len__(self):
        return self.size


def multi_index_codec(dims) -> MultiIndexCodec:
    return MultiIndexCodec(dims)
