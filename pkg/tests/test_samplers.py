import numpy as np
import pytest

from qswlab import Model, fixture
from qswlab.samplers import (
    CEMETERY,
    RngStream,
    draw_categorical,
    make_stream,
    run_replicates,
    sample,
    sample_doob_is,
    sample_hard_smc,
    sample_reflected_is,
    sample_soft_smc,
)
from qswlab.semigroup import evolve, exact_path_measure
from qswlab.spectral import eigensystem

import oracles
from conftest import close


def test_streams_are_reproducible():
    a = RngStream(7, 3).random(5)
    b = make_stream(7, 3).random(5)
    c = RngStream(7, 4).random(5)
    close(a, b, 0)
    assert not np.allclose(a, c)


def test_inverse_cdf_follows_state_order():
    cdf = np.array([0.2, 0.5, 1.0])
    close(draw_categorical(cdf, np.array([0.0, 0.19, 0.2, 0.49, 0.5, 0.99])), [0, 0, 1, 1, 2, 2], 0)
    rows = np.array([[1.0, 1.0], [0.0, 1.0]])
    close(draw_categorical(rows, np.array([0.3, 0.3])), [0, 1], 0)


def test_doob_is_zero_variance_when_phi0_constant(model_A):
    for seed in range(3):
        out = sample_doob_is(model_A, 7, 50, RngStream(seed, 0))
        assert out.z_estimate == pytest.approx(0.5 ** 7, rel=1e-14)
        assert out.meta["sampler"] == "dp"


def test_doob_is_time_zero(model_B):
    b = eigensystem(model_B)
    out = sample_doob_is(model_B, 0, 1, RngStream(1, 0))
    y = int(np.flatnonzero(out.eta_estimate.weights)[0])
    assert out.z_estimate == pytest.approx(float(model_B.eta0 @ b.phi0) / b.phi0[y])


def test_reflected_is_constant_weight(model_A):
    out = sample_reflected_is(model_A, 9, 40, RngStream(0, 0))
    assert out.z_estimate == pytest.approx(0.5 ** 9, rel=1e-14)


def test_soft_smc_constant_potential(model_A):
    out = sample_soft_smc(model_A, 9, 40, RngStream(0, 0))
    assert out.z_estimate == pytest.approx(0.5 ** 9, rel=1e-14)


def test_soft_smc_ancestry(model_C):
    out = sample_soft_smc(model_C, 6, 30, RngStream(5, 0), keep_paths=True)
    lines = out.ancestry
    assert lines.shape == (30, 7)
    assert np.all(lines >= 0) and np.all(lines < 3)
    close(np.bincount(lines[:, -1], minlength=3) / 30, out.eta_estimate.weights)
    assert out.eta_estimate.cemetery == 0.0
    assert np.all(out.path_estimate.paths >= 1)
    close(out.path_estimate.paths[:, -1] - 1, lines[:, -1], 0)


def test_hard_smc_outputs(model_C):
    out = sample_hard_smc(model_C, 8, 40, RngStream(2, 0), keep_paths=True)
    assert 0 <= out.z_estimate <= out.z_previous <= 1
    assert out.eta_estimate.is_probability()
    assert out.eta_estimate.cemetery == 0.0
    hat = out.eta_hat_estimate
    assert hat.is_probability()
    assert out.z_estimate == pytest.approx(out.z_previous * (1 - hat.cemetery))
    close(out.eta_estimate.weights, hat.weights / hat.weights.sum())
    ps = out.path_estimate
    ends = np.bincount(ps.paths[:, -1], weights=ps.weights, minlength=4)
    assert ends[0] == 0.0
    close(ends[1:], out.eta_estimate.weights)


def test_hard_smc_extinction():
    m = Model(2, 0.0, "delta:1")
    extinct = 0
    for seed in range(400):
        out = sample_hard_smc(m, 3, 1, RngStream(seed, 0))
        if out.extinction_step is not None:
            extinct += 1
            assert out.z_estimate == 0.0
            assert out.eta_estimate.cemetery == 1.0
    # one particle dies within three steps with probability 1 - 1/8
    assert abs(extinct / 400 - 7 / 8) < 4 * np.sqrt(7 / 64 / 400)


def test_hard_smc_single_particle_first_step():
    m = Model(2, 0.0, "delta:1")
    zs = [sample_hard_smc(m, 1, 1, RngStream(s, 0)).z_estimate for s in range(2000)]
    assert set(zs) <= {0.0, 1.0}
    assert abs(np.mean(zs) - 0.5) < 4 * 0.5 / np.sqrt(2000)


def test_dispatch_and_errors(model_C):
    with pytest.raises(ValueError):
        sample("nope", model_C, 1, 1, 0)
    for tag in ("dp", "is", "soft", "hard"):
        with pytest.raises(ValueError):
            sample(tag, model_C, 1, 0, 0)
        assert sample(tag, model_C, 2, 3, 11).meta["sampler"] == tag


def test_run_replicates_determinism(model_C):
    f = eigensystem(model_C).phi0
    a = run_replicates(model_C, "soft", 5, 20, 6, 99, f)
    b = run_replicates(model_C, "soft", 5, 20, 6, 99, f, jobs=3)
    close(a.z, b.z, 0)
    close(a.eta_f, b.eta_f, 0)
    longer = run_replicates(model_C, "soft", 5, 20, 12, 99, f)
    close(longer.z[:6], a.z, 0)
    single = sample("soft", model_C, 5, 20, RngStream(99, 0))
    assert a.z[0] == single.z_estimate
    assert len(a) == 6
    hard = run_replicates(model_C, "hard", 5, 20, 4, 1, f, timing=True)
    assert hard.z_previous is not None and hard.eta_hat_f is not None
    assert np.all(hard.wall_time >= 0)


def test_path_functional_replicates(model_C):
    f = np.ones(3)
    table = run_replicates(model_C, "soft", 3, 10, 3, 0, f, f_path=lambda paths: (paths[:, 0] == 1).astype(float))
    assert table.path_f is not None and np.all((table.path_f >= 0) & (table.path_f <= 1))


# --- exact unbiasedness by enumeration of small particle systems -----------------------------

@pytest.mark.parametrize("name,eta0", [("B", None), ("C", None), ("A", None), ("B", "delta:2")])
def test_soft_system_unbiased_by_enumeration(name, eta0):
    m = fixture(name) if eta0 is None else fixture(name).with_eta0(eta0)
    f = np.arange(1.0, m.d + 1)
    for N in (1, 2):
        for n in range(5 if N == 1 else 3):
            ez, ezf, _ = oracles.soft_system_expectations(m, n, N, f)
            tr = evolve(m, n)
            assert abs(ez - tr.z[n]) <= 1e-12
            assert abs(ezf - tr.z[n] * tr.etas[n] @ f) <= 1e-12


def test_soft_system_path_space_unbiased():
    for m in (fixture("A"), fixture("C"), Model(3, 0.5, "delta:1")):
        def fp(path):
            return sum((k + 1) * s for k, s in enumerate(path))
        for N in (1, 2):
            for n in range(3 if N == 2 else 4):
                _, _, ezp = oracles.soft_system_expectations(m, n, N, np.ones(m.d), f_path=fp)
                exact = exact_path_measure(m, n).integrate(fp, normalized=False)
                assert abs(ezp - exact) <= 1e-12


@pytest.mark.parametrize("name,eta0", [("A", None), ("B", None), ("C", None), ("B", "delta:2"), ("A", "delta:1")])
def test_hard_system_unbiased_by_enumeration(name, eta0):
    m = fixture(name) if eta0 is None else fixture(name).with_eta0(eta0)
    f = np.arange(1.0, m.d + 1)
    for N in (1, 2):
        for n in range(5):
            ez, ezf = oracles.hard_system_expectations(m, n, N, f)
            tr = evolve(m, n)
            assert abs(ez - tr.z[n]) <= 1e-12
            assert abs(ezf - tr.z[n] * tr.etas[n] @ f) <= 1e-12


def test_hard_two_particle_example():
    m = Model(3, 0.0, "delta:2")
    ez, _ = oracles.hard_system_expectations(m, 2, 2, np.ones(3))
    assert ez == pytest.approx(0.5, abs=1e-15)


# --- statistical unbiasedness (smaller than the acceptance run) -----------------------------

@pytest.mark.parametrize("tag", ["dp", "is", "soft", "hard"])
def test_statistical_unbiasedness(tag):
    m = fixture("C")
    R, n = 200, 6
    f = np.array([1.0, -0.5, 2.0])
    table = run_replicates(m, tag, n, 50, R, 2024, f)
    tr = evolve(m, n)
    se = table.z.std(ddof=1) / np.sqrt(R)
    assert abs(table.z.mean() - tr.z[n]) <= 4 * se
    g = table.z * np.nan_to_num(table.eta_f)
    se = g.std(ddof=1) / np.sqrt(R)
    assert abs(g.mean() - tr.z[n] * tr.etas[n] @ f) <= 4 * se


def test_cemetery_label():
    assert CEMETERY == -1
