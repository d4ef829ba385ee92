"""Acceptance suite: one test per criterion, each tagged with its number.

Preset sweeps are computed once per session and shared between criteria.
The terminal summary prints one PASS/FAIL line per criterion.
"""

import functools
import math
import time

import numpy as np
import pytest

from mlentangle.dynamics import (
    SystemParams,
    _block_coefficients,
    _geometry,
    assemble_unitary,
    block_unitary,
    evolve_ensemble,
    expm_oracle,
    hamiltonian_free,
    hamiltonian_interaction,
)
from mlentangle.entanglement import (
    atom_entropy,
    atom_reduced,
    dense_entanglement_point,
    dense_total_state,
    entanglement_point,
    entropy_of_spectrum,
    field_entropy,
    field_gram,
    mutual_entropy,
    partial_traces,
    total_entropy,
)
from mlentangle.fock import ModeSpec, product_state
from mlentangle.sweep import (
    FIGURES,
    RunConfig,
    emit_csv,
    figure_preset,
    first_pronounced_minimum,
    run_sweep,
)

PRESETS = [(fig, m) for fig in sorted(FIGURES) for m in (3, 4, 5)]


@functools.cache
def preset_result(fig, m):
    return run_sweep(figure_preset(fig, m), validate=False)


def tag(record_property, number, detail=""):
    record_property("criterion", number)
    record_property("detail", detail)


def phase_aligned_error(u, ref):
    overlap = np.vdot(ref, u)
    phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return float(np.max(np.abs(u / phase - ref)))


def small_field(m, rng, eps=1e-3):
    specs = []
    for _ in range(m - 1):
        kind = rng.integers(3)
        if kind == 0:
            specs.append(ModeSpec.fock(int(rng.integers(0, 3))))
        elif kind == 1:
            specs.append(ModeSpec.coherent(rng.uniform(0.05, 0.4)))
        else:
            specs.append(ModeSpec.squeezed_coherent(rng.uniform(-0.4, 0.4), rng.uniform(-0.2, 0.2)))
    return product_state(specs, eps)


def block_unitarity_error(params, dims, t, chunk=100_000):
    """Max ``|u^H u - 1|`` over every block label on the grid ``dims``."""
    cs, _, _ = _geometry(params, tuple(dims))
    a, b, d = _block_coefficients(params, dims, t)
    m = params.m
    c = np.stack([np.broadcast_to(cj, dims).ravel() for cj in cs], axis=-1)
    a, d = np.broadcast_to(a, dims).ravel(), np.broadcast_to(d, dims).ravel()
    b = np.broadcast_to(b, dims).ravel()
    worst = 0.0
    eye = np.eye(m)
    for s in range(0, a.size, chunk):
        cc = c[s : s + chunk]
        u = np.empty((cc.shape[0], m, m), dtype=complex)
        u[:, 0, 0] = a[s : s + chunk]
        u[:, 0, 1:] = b[s : s + chunk, None] * cc
        u[:, 1:, 0] = u[:, 0, 1:]
        u[:, 1:, 1:] = eye[1:, 1:] + cc[:, :, None] * cc[:, None, :] * d[s : s + chunk, None, None]
        gram = np.matmul(u.conj().transpose(0, 2, 1), u)
        worst = max(worst, float(np.max(np.abs(gram - eye))))
    return worst


def test_criterion_01_closed_form_vs_oracle(record_property):
    tag(record_property, 1, "closed form vs dense exponential, 20 instances")
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(20):
        m = int(rng.choice([2, 3, 4]))
        params = SystemParams(m, rng.uniform(-2, 2), rng.uniform(0.2, 2.0, m - 1))
        dims = tuple(int(x) for x in rng.integers(1, 4, m - 1))
        t = rng.uniform(0, 10)
        worst = max(worst, phase_aligned_error(assemble_unitary(params, dims, t), expm_oracle(params, dims, t)))
    elapsed = time.perf_counter() - start
    record_property("detail", f"max deviation {worst:.2e}, {elapsed:.2f}s")
    assert worst < 1e-8
    assert elapsed < 30


def test_criterion_02_unitarity_and_conservation(record_property):
    tag(record_property, 2, "block unitarity and branch norm conservation over presets")
    start = time.perf_counter()
    worst_u = 0.0
    for fig, m in PRESETS:
        cfg = figure_preset(fig, m)
        params = cfg.params
        dims = product_state(cfg.field, cfg.eps_trunc).dims
        rng = np.random.default_rng(m)
        for tau in np.append(rng.uniform(0, cfg.t_max, 5), cfg.t_max):
            worst_u = max(worst_u, block_unitarity_error(params, dims, tau / params.lambda_bar))
        # the batched construction is the closed form itself
        for _ in range(5):
            n = tuple(int(x) for x in rng.integers(0, max(dims) - 1, m - 1))
            u = block_unitary(params, n, 7.3)
            worst_u = max(worst_u, float(np.max(np.abs(u.conj().T @ u - np.eye(m)))))
    elapsed = time.perf_counter() - start
    drift = max(preset_result(fig, m).max_norm_drift for fig, m in PRESETS)
    record_property("detail", f"unitarity {worst_u:.2e}, norm drift {drift:.2e}, checks {elapsed:.1f}s")
    assert worst_u < 1e-10
    assert drift < 1e-10
    assert elapsed < 60


def test_criterion_03_commutation(record_property):
    tag(record_property, 3, "[H0, H1] = 0 for resonant frequencies")
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(10):
        m = int(rng.integers(2, 5))
        delta = rng.uniform(-2, 2)
        omegas = rng.uniform(-3, 3, m)
        bigomegas = omegas[0] - omegas[1:] - delta
        params = SystemParams(m, delta, rng.uniform(0.2, 2.0, m - 1), omegas, bigomegas)
        dims = tuple(int(x) for x in rng.integers(2, 4, m - 1))
        h0, h1 = hamiltonian_free(params, dims), hamiltonian_interaction(params, dims)
        worst = max(worst, float(np.max(np.abs(h0 @ h1 - h1 @ h0))))
    record_property("detail", f"max commutator {worst:.2e}")
    assert worst < 1e-10


def test_criterion_04_product_state_zero(record_property):
    tag(record_property, 4, "I(0) = 0 for every preset")
    worst = max(preset_result(fig, m).points[0].i_mutual for fig, m in PRESETS)
    record_property("detail", f"max I(0) {worst:.2e}")
    assert worst < 1e-10


def test_criterion_05_pure_limit_doubling(record_property):
    tag(record_property, 5, "pure total state: I = 2 S_A, S_A = S_F")
    # S_A from the directly traced atom state, S_F from the Gram spectrum
    worst_i = worst_s = 0.0
    for m in (3, 4, 5):
        params = SystemParams(m)
        field = product_state([ModeSpec.coherent(5.0)] * (m - 1))
        gammas = (1.0,) + (0.0,) * (m - 1)
        for t in np.linspace(0, 30, 100):
            ens = evolve_ensemble(gammas, field, params, t)
            s_atom = atom_entropy(atom_reduced(ens))
            s_field = field_entropy(field_gram(ens))
            i = mutual_entropy(total_entropy(gammas), s_atom, s_field)
            worst_i = max(worst_i, abs(i - 2 * s_atom))
            worst_s = max(worst_s, abs(s_atom - s_field))
            if m == 3:
                # the m = 3 field space is small enough to diagonalize densely
                phi = ens.amplitudes[0].reshape(m, -1)
                eigs = np.linalg.eigvalsh(phi.T @ phi.conj())
                worst_s = max(worst_s, abs(s_atom - entropy_of_spectrum(eigs / eigs.sum())))
    record_property("detail", f"|I - 2 S_A| {worst_i:.2e}, |S_A - S_F| {worst_s:.2e}")
    assert worst_i < 1e-8
    assert worst_s < 1e-8


def test_criterion_06_analytic_point(record_property):
    tag(record_property, 6, "vacuum Rabi point I = 2 ln 2")
    t = math.pi / (2 * math.sqrt(2))
    params = SystemParams(3)
    field = product_state([ModeSpec.fock(0)] * 2)
    fast = entanglement_point(evolve_ensemble((1, 0, 0), field, params, t))
    dense = dense_entanglement_point((1, 0, 0), field, params, t)
    err = max(abs(fast.i_mutual - 2 * math.log(2)), abs(dense.i_mutual - 2 * math.log(2)))
    record_property("detail", f"deviation {err:.2e}")
    assert err < 1e-8


def test_criterion_07_total_entropy_constant(record_property):
    tag(record_property, 7, "dense total-state entropy equals -sum g ln g")
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(6):
        m = int(rng.integers(2, 5))
        params = SystemParams(m, rng.uniform(-2, 2), rng.uniform(0.2, 2.0, m - 1))
        field = small_field(m, rng)
        gammas = rng.dirichlet(np.ones(m))
        expected = -sum(g * math.log(g) for g in gammas if g > 0)
        for t in np.linspace(0, 10, 8):
            eigs = np.linalg.eigvalsh(dense_total_state(gammas, field, params, t))
            worst = max(worst, abs(entropy_of_spectrum(eigs / eigs.sum()) - expected))
    record_property("detail", f"max deviation {worst:.2e}")
    assert worst < 1e-8


def test_criterion_08_gram_equivalence(record_property):
    tag(record_property, 8, "Gram spectrum field entropy vs dense partial trace")
    rng = np.random.default_rng(8)
    start = time.perf_counter()
    worst = 0.0
    count = 0
    while count < 30:
        m = int(rng.integers(2, 6))
        field = small_field(m, rng, eps=rng.choice([1e-2, 1e-3]))
        if m * math.prod(field.dims) > 500:
            continue
        params = SystemParams(m, rng.uniform(-2, 2), rng.uniform(0.2, 2.0, m - 1))
        gammas = rng.dirichlet(np.ones(m))
        t = rng.uniform(0, 10)
        fast = field_entropy(field_gram(evolve_ensemble(gammas, field, params, t)))
        _, rho_f = partial_traces(dense_total_state(gammas, field, params, t), m)
        eigs = np.linalg.eigvalsh(rho_f)
        worst = max(worst, abs(fast - entropy_of_spectrum(eigs / eigs.sum())))
        count += 1
    elapsed = time.perf_counter() - start
    record_property("detail", f"max deviation {worst:.2e}, {elapsed:.1f}s")
    assert worst < 1e-8
    assert elapsed < 60


def test_criterion_09_figure1_maxima(record_property):
    tag(record_property, 9, "figure 1 maxima within [0.9 * 2 ln m, 2 ln m] and increasing in m")
    results = [preset_result("fig1", m) for m in (3, 4, 5)]
    maxima = [float(r.i_mutual.max()) for r in results]
    ratios = [mx / (2 * math.log(m)) for mx, m in zip(maxima, (3, 4, 5))]
    wall = sum(r.wall_time for r in results)
    record_property(
        "detail",
        "max I " + ", ".join(f"{x:.3f} ({q:.3f} of 2 ln m)" for x, q in zip(maxima, ratios)) + f", {wall:.0f}s",
    )
    assert maxima[0] < maxima[1] < maxima[2]
    assert wall < 300
    for mx, m in zip(maxima, (3, 4, 5)):
        assert 0.9 * 2 * math.log(m) <= mx <= 2 * math.log(m) + 1e-6


def test_criterion_10_figure2_shift(record_property):
    tag(record_property, 10, "first pronounced minimum later for nbar = 10 than nbar = 5")
    t5, v5 = first_pronounced_minimum(preset_result("fig1", 3).t, preset_result("fig1", 3).i_mutual)
    t10, v10 = first_pronounced_minimum(preset_result("fig2", 3).t, preset_result("fig2", 3).i_mutual)
    record_property("detail", f"nbar=5 at {t5:.3f} (I={v5:.3f}), nbar=10 at {t10:.3f} (I={v10:.3f})")
    assert t10 > t5


def test_criterion_11_figure3_oscillation(record_property):
    tag(record_property, 11, "Fock preset minimum near pi/sqrt(12) and recovery")
    res = preset_result("fig3", 3)
    t, i = res.t, res.i_mutual
    target = math.pi / math.sqrt(12)
    window = np.abs(t - target) <= 0.1
    interior = np.zeros_like(window)
    interior[1:-1] = (i[1:-1] <= i[:-2]) & (i[1:-1] <= i[2:])
    candidates = np.flatnonzero(window & interior)
    assert candidates.size, "no local minimum within 0.1 of pi/sqrt(12)"
    k = candidates[np.argmin(i[candidates])]
    later = float(i[k + 1 :].max())
    record_property("detail", f"minimum {i[k]:.3e} at {t[k]:.3f}, later max {later:.3f}")
    assert i[k] < 0.15
    assert later > 1.0


def test_criterion_12_bounds(record_property):
    tag(record_property, 12, "entropy bounds at every preset point")
    worst = 0.0
    for fig, m in PRESETS:
        for p in preset_result(fig, m).points:
            slack = [
                -p.i_mutual,
                p.i_mutual - 2 * min(p.s_atom, p.s_field) - 1e-9,
                p.s_atom - math.log(m) - 1e-9,
                abs(p.s_atom - p.s_field) - p.s_total - 1e-9,
            ]
            worst = max(worst, max(slack))
    record_property("detail", f"largest bound excess {worst:.2e}")
    assert worst <= 0


@pytest.mark.parametrize("m", [3, 4, 5])
def test_criterion_13_determinism(record_property, tmp_path, m):
    tag(record_property, 13, f"byte-identical CSV data, fig3 m={m}")

    def data(path):
        lines = path.read_text().splitlines()
        return "\n".join(lines[next(k for k, line in enumerate(lines) if not line.startswith("#")) :])

    a = emit_csv(run_sweep(figure_preset("fig3", m)), tmp_path / "a.csv")
    b = emit_csv(run_sweep(figure_preset("fig3", m)), tmp_path / "b.csv")
    assert data(a).encode() == data(b).encode()
