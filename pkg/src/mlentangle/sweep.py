"""Run configurations, figure presets, time sweeps and their file outputs."""

from __future__ import annotations

import math
import sys
import time
from dataclasses import dataclass
from math import prod
from pathlib import Path

import numpy as np
import tomli_w
from scipy.signal import argrelmin

from .dynamics import SystemParams, _check_oracle_scale, evolve_ensemble
from .entanglement import (
    EntanglementPoint,
    InvariantError,
    dense_entanglement_point,
    field_gram,
    point_from_gram,
)
from .fock import DEFAULT_EPS_TRUNC, MODE_KINDS, ModeSpec, product_state

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = [
    "CSV_HEADER",
    "ORACLE_TOL",
    "NORM_TOL",
    "FIGURES",
    "ConfigError",
    "OracleMismatchError",
    "RunConfig",
    "SweepResult",
    "parse_config",
    "load_config",
    "config_to_toml",
    "figure_preset",
    "run_sweep",
    "emit_csv",
    "read_csv",
    "emit_plot_script",
    "first_pronounced_minimum",
]

CSV_HEADER = "t,S_total,S_atom,S_field,I"
ORACLE_TOL = 1e-8
NORM_TOL = 1e-10

FIGURES = {
    "fig1": ModeSpec.coherent(5.0),
    "fig2": ModeSpec.coherent(10.0),
    "fig3": ModeSpec.fock(5),
}
PRESET_GAMMA1 = 0.99
PRESET_T_MAX = 30.0
PRESET_STEPS = 600


class ConfigError(ValueError):
    """Invalid run configuration; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


class OracleMismatchError(InvariantError):
    pass


@dataclass(frozen=True)
class RunConfig:
    m: int
    gammas: tuple[float, ...]
    field: tuple[ModeSpec, ...]
    t_max: float
    steps: int
    delta: float = 0.0
    lambdas: tuple[float, ...] | None = None
    eps_trunc: float = DEFAULT_EPS_TRUNC
    oracle_check: bool = False

    def __post_init__(self):
        m = self.m
        if isinstance(m, bool) or not isinstance(m, (int, np.integer)) or m < 2:
            raise ConfigError("m", f"expected an integer >= 2, got {m!r}")
        object.__setattr__(self, "m", int(m))
        gammas = tuple(float(g) for g in self.gammas)
        if len(gammas) != m or any(not g >= 0 for g in gammas) or abs(sum(gammas) - 1) > 1e-9:
            raise ConfigError("gammas", f"expected {m} entries summing to 1, got {list(gammas)}")
        object.__setattr__(self, "gammas", gammas)

        lambdas = (1.0,) if self.lambdas is None else tuple(float(x) for x in self.lambdas)
        if len(lambdas) == 1:
            lambdas = lambdas * (m - 1)
        if len(lambdas) != m - 1:
            raise ConfigError("lambdas", f"expected {m - 1} entries, got {len(lambdas)}")
        for j, lam in enumerate(lambdas):
            if not lam > 0 or not math.isfinite(lam):
                raise ConfigError(f"lambdas[{j}]", f"couplings must be positive, got {lam}")
        object.__setattr__(self, "lambdas", lambdas)

        modes = tuple(self.field)
        if len(modes) == 1:
            modes = modes * (m - 1)
        if len(modes) != m - 1:
            raise ConfigError("field", f"expected 1 or {m - 1} entries, got {len(modes)}")
        object.__setattr__(self, "field", modes)

        if not math.isfinite(self.delta):
            raise ConfigError("delta", f"must be finite, got {self.delta}")
        object.__setattr__(self, "delta", float(self.delta))
        if not self.t_max > 0 or not math.isfinite(self.t_max):
            raise ConfigError("t_max", f"must be positive, got {self.t_max}")
        object.__setattr__(self, "t_max", float(self.t_max))
        if isinstance(self.steps, bool) or int(self.steps) != self.steps or self.steps < 2:
            raise ConfigError("steps", f"expected an integer >= 2, got {self.steps!r}")
        object.__setattr__(self, "steps", int(self.steps))
        if not 0 < self.eps_trunc < 1:
            raise ConfigError("eps_trunc", f"must lie in (0, 1), got {self.eps_trunc}")
        object.__setattr__(self, "eps_trunc", float(self.eps_trunc))
        if not isinstance(self.oracle_check, bool):
            raise ConfigError("oracle_check", f"expected a boolean, got {self.oracle_check!r}")

    @property
    def params(self) -> SystemParams:
        return SystemParams(self.m, self.delta, self.lambdas)

    def times(self) -> np.ndarray:
        """Scaled time grid, uniform on ``[0, t_max]``."""
        return np.linspace(0.0, self.t_max, self.steps)


_TOP_KEYS = {"m", "delta", "lambdas", "gammas", "field", "t_max", "steps", "eps_trunc", "oracle_check"}
_MODE_KEYS = {"fock": {"n"}, "coherent": {"nbar"}, "squeezed_coherent": {"alpha", "r"}}


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _parse_mode(entry, key: str) -> ModeSpec:
    if not isinstance(entry, dict):
        raise ConfigError(key, "each field entry must be a table")
    kind = entry.get("kind")
    if kind not in _MODE_KEYS:
        raise ConfigError(f"{key}.kind", f"unknown field kind {kind!r}; expected one of {list(MODE_KINDS)}")
    extra = set(entry) - _MODE_KEYS[kind] - {"kind"}
    if extra:
        raise ConfigError(f"{key}.{sorted(extra)[0]}", f"not a parameter of kind {kind!r}")
    for name in sorted(_MODE_KEYS[kind]):
        if name not in entry:
            raise ConfigError(f"{key}.{name}", f"required for kind {kind!r}")
    values = dict(entry)
    del values["kind"]
    if kind == "squeezed_coherent":
        alpha = values["alpha"]
        if isinstance(alpha, list) and len(alpha) == 2 and all(map(_is_number, alpha)):
            values["alpha"] = complex(alpha[0], alpha[1])
        elif _is_number(alpha):
            values["alpha"] = complex(alpha)
        else:
            raise ConfigError(f"{key}.alpha", "expected a number or [re, im]")
    for name, value in values.items():
        if not _is_number(value) and not isinstance(value, complex):
            raise ConfigError(f"{key}.{name}", f"expected a number, got {value!r}")
    if kind == "fock" and not isinstance(values["n"], int):
        raise ConfigError(f"{key}.n", f"expected an integer, got {values['n']!r}")
    try:
        return ModeSpec(kind, **values)
    except ValueError as exc:
        raise ConfigError(key, str(exc)) from None


def _config_from_dict(doc: dict) -> RunConfig:
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown key")
    for key in ("m", "gammas", "field", "t_max", "steps"):
        if key not in doc:
            raise ConfigError(key, "missing required key")
    for key in ("gammas", "field") + (("lambdas",) if "lambdas" in doc else ()):
        if not isinstance(doc[key], list):
            raise ConfigError(key, "expected a list")
    for key in ("gammas", "lambdas"):
        for j, x in enumerate(doc.get(key, [])):
            if not _is_number(x):
                raise ConfigError(f"{key}[{j}]", f"expected a number, got {x!r}")
    for key in ("delta", "t_max", "eps_trunc"):
        if key in doc and not _is_number(doc[key]):
            raise ConfigError(key, f"expected a number, got {doc[key]!r}")
    modes = tuple(_parse_mode(e, f"field[{j}]") for j, e in enumerate(doc["field"]))
    kwargs = {k: v for k, v in doc.items() if k != "field"}
    return RunConfig(field=modes, **kwargs)


def parse_config(text: str) -> RunConfig:
    """Parse a TOML run configuration, applying defaults and replication."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("<document>", f"malformed TOML: {exc}") from None
    return _config_from_dict(doc)


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text())


def _mode_to_dict(spec: ModeSpec) -> dict:
    if spec.kind == "fock":
        return {"kind": "fock", "n": spec.n}
    if spec.kind == "coherent":
        return {"kind": "coherent", "nbar": spec.nbar}
    return {"kind": spec.kind, "alpha": [spec.alpha.real, spec.alpha.imag], "r": spec.r}


def config_to_toml(config: RunConfig) -> str:
    """TOML text that :func:`parse_config` maps back to ``config``."""
    doc = {
        "m": config.m,
        "delta": config.delta,
        "lambdas": list(config.lambdas),
        "gammas": list(config.gammas),
        "t_max": config.t_max,
        "steps": config.steps,
        "eps_trunc": config.eps_trunc,
        "oracle_check": config.oracle_check,
        "field": [_mode_to_dict(s) for s in config.field],
    }
    return tomli_w.dumps(doc)


def figure_preset(fig_id: str, m: int) -> RunConfig:
    """Configuration for one curve of figures 1-3.

    The residual weight ``1 - 0.99`` is spread evenly over the lower levels.
    """
    if fig_id not in FIGURES:
        raise ConfigError("id", f"unknown figure {fig_id!r}; expected one of {sorted(FIGURES)}")
    if m not in (3, 4, 5):
        raise ConfigError("m", f"figure presets cover m in (3, 4, 5), got {m!r}")
    rest = (1.0 - PRESET_GAMMA1) / (m - 1)
    return RunConfig(
        m=m,
        gammas=(PRESET_GAMMA1,) + (rest,) * (m - 1),
        field=(FIGURES[fig_id],) * (m - 1),
        t_max=PRESET_T_MAX,
        steps=PRESET_STEPS,
    )


@dataclass
class SweepResult:
    points: list[EntanglementPoint]
    config: RunConfig
    truncation_deficit: float
    wall_time: float
    max_norm_drift: float = 0.0
    oracle_deviation: float | None = None

    def as_array(self) -> np.ndarray:
        """Columns ``t, S_total, S_atom, S_field, I``."""
        return np.array([[p.t, p.s_total, p.s_atom, p.s_field, p.i_mutual] for p in self.points])

    @property
    def t(self) -> np.ndarray:
        return np.array([p.t for p in self.points])

    @property
    def i_mutual(self) -> np.ndarray:
        return np.array([p.i_mutual for p in self.points])


def run_sweep(config: RunConfig, validate: bool = True) -> SweepResult:
    """Entanglement series over the configured scaled-time grid.

    With ``validate``, a branch norm drifting by more than ``NORM_TOL`` or an
    oracle deviation above ``ORACLE_TOL`` raises :class:`InvariantError`.
    Requesting the oracle beyond dense scale raises ``OracleScaleError``
    before any work is done.
    """
    start = time.perf_counter()
    params = config.params
    field = product_state(config.field, config.eps_trunc)
    if config.oracle_check:
        _check_oracle_scale(params, field.dims)
    norm0 = field.norm2
    points, drift, deviation = [], 0.0, None
    buffer = np.empty(config.m**2 * prod(field.dims), dtype=complex)
    for tau in config.times():
        t = tau / params.lambda_bar
        gram = field_gram(evolve_ensemble(config.gammas, field, params, t, out=buffer))
        drift = max(drift, float(np.max(np.abs(gram.branch_norms() - norm0))))
        point = point_from_gram(gram, config.gammas, tau)
        points.append(point)
        if config.oracle_check:
            ref = dense_entanglement_point(config.gammas, field, params, t)
            dev = max(
                abs(point.s_total - ref.s_total),
                abs(point.s_atom - ref.s_atom),
                abs(point.s_field - ref.s_field),
                abs(point.i_mutual - ref.i_mutual),
            )
            deviation = dev if deviation is None else max(deviation, dev)
    result = SweepResult(
        points=points,
        config=config,
        truncation_deficit=field.tail_mass,
        wall_time=time.perf_counter() - start,
        max_norm_drift=drift,
        oracle_deviation=deviation,
    )
    if validate:
        if drift > NORM_TOL:
            raise InvariantError(f"branch norm drifted by {drift:.3e}")
        if deviation is not None and deviation > ORACLE_TOL:
            raise OracleMismatchError(f"oracle deviation {deviation:.3e} exceeds {ORACLE_TOL:g}")
    return result


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def emit_csv(result: SweepResult, path) -> Path:
    """Write the series as CSV behind a ``#`` block echoing the config.

    Every point is re-checked against the entropy inequalities first.
    """
    for p in result.points:
        p.check(result.config.m)
    path = Path(path)
    lines = [
        "# mlentangle entanglement sweep",
        f"# wall_time = {result.wall_time:.3f}",
        f"# truncation_deficit = {_fmt(result.truncation_deficit)}",
        f"# max_norm_drift = {_fmt(result.max_norm_drift)}",
    ]
    if result.oracle_deviation is not None:
        lines.append(f"# oracle_deviation = {_fmt(result.oracle_deviation)}")
    lines.append("# [config]")
    lines += ["# " + line if line else "#" for line in config_to_toml(result.config).splitlines()]
    lines.append(CSV_HEADER)
    for p in result.points:
        lines.append(",".join(_fmt(x) for x in (p.t, p.s_total, p.s_atom, p.s_field, p.i_mutual)))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_csv(path) -> tuple[np.ndarray, RunConfig]:
    """Load a CSV written by :func:`emit_csv`; returns ``(data, config)``."""
    comments, rows = [], []
    for line in Path(path).read_text().splitlines():
        (comments if line.startswith("#") else rows).append(line)
    if not rows or rows[0] != CSV_HEADER:
        raise ValueError(f"{path}: missing header {CSV_HEADER!r}")
    data = np.array([[float(x) for x in row.split(",")] for row in rows[1:]])
    start = comments.index("# [config]") + 1
    config = parse_config("\n".join(c[2:] for c in comments[start:]))
    return data, config


_PLOT_TEMPLATE = '''"""Overlay of entanglement degree curves written by mlentangle."""

from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np

HERE = Path(__file__).resolve().parent
CURVES = [
{curves}]


def load(name):
    rows = [line for line in (HERE / name).read_text().splitlines() if not line.startswith("#")]
    return np.loadtxt(rows[1:], delimiter=",", ndmin=2)


fig, ax = plt.subplots(figsize=(7, 4))
for label, name in CURVES:
    data = load(name)
    ax.plot(data[:, 0], data[:, 4], label=label)
ax.set_xlabel("scaled time")
ax.set_ylabel("entanglement degree")
ax.legend()
fig.tight_layout()
fig.savefig(HERE / "{image}", dpi=150)
'''


def emit_plot_script(results, path, csv_paths) -> Path:
    """Write a matplotlib script overlaying ``I(t)`` for each result.

    ``csv_paths`` are the files written for ``results``; the script refers
    to them relative to its own location.
    """
    results = list(results)
    csv_paths = [Path(p) for p in csv_paths]
    if not results:
        raise ValueError("emit_plot_script needs at least one result")
    if len(csv_paths) != len(results):
        raise ValueError("one CSV path per result is required")
    path = Path(path)
    curves = "".join(
        f"    ({f'm = {r.config.m}'!r}, {p.name!r}),\n" for r, p in zip(results, csv_paths)
    )
    path.write_text(_PLOT_TEMPLATE.format(curves=curves, image=path.with_suffix(".png").name))
    return path


def first_pronounced_minimum(t, values) -> tuple[float, float]:
    """Time and value of the deepest local minimum after the initial rise.

    The initial rise ends when ``values`` first exceeds half its maximum.
    """
    t = np.asarray(t)
    values = np.asarray(values)
    rise = int(np.argmax(values > 0.5 * values.max()))
    minima = [k for k in argrelmin(values)[0] if k > rise]
    if not minima:
        raise ValueError("no local minimum after the initial rise")
    k = min(minima, key=lambda i: values[i])
    return float(t[k]), float(values[k])
