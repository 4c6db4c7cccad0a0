import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from qswlab import Model
from qswlab.combinatorics import count_paths
from qswlab.model import dobrushin_beta, matrix_Q, soft_decomposition, tv_distance
from qswlab.semigroup import evolve, phi_n
from qswlab.spectral import doob_kernel, eigensystem, quasi_stationary
from qswlab.variance import v_is, v_soft, w_is, w_soft

dims = st.integers(min_value=2, max_value=12)
thetas = st.sampled_from([0.0, 0.5, 1.0, 2.0, 10.0]) | st.floats(min_value=0.0, max_value=20.0)
weights = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)


def probability(size):
    return arrays(float, size, elements=weights).filter(lambda v: v.sum() > 1e-3).map(lambda v: v / v.sum())


@st.composite
def law_triples(draw):
    d = draw(dims)
    return d, draw(probability(d)), draw(probability(d)), draw(probability(d))


@st.composite
def stochastic(draw, d):
    rows = draw(arrays(float, (d, d), elements=weights).filter(lambda m: np.all(m.sum(axis=1) > 1e-3)))
    return rows / rows.sum(axis=1, keepdims=True)


@st.composite
def kernel_pairs(draw):
    d = draw(dims)
    return draw(stochastic(d)), draw(stochastic(d))


@given(law_triples())
def test_tv_is_a_metric(t):
    _, a, b, c = t
    assert tv_distance(a, a) == 0.0
    assert tv_distance(a, b) >= 0.0
    assert tv_distance(a, b) == tv_distance(b, a)
    assert tv_distance(a, c) <= tv_distance(a, b) + tv_distance(b, c) + 1e-12
    assert tv_distance(a, b) <= 1.0 + 1e-12


@given(kernel_pairs())
def test_dobrushin_submultiplicative(pair):
    M1, M2 = pair
    assert dobrushin_beta(M1 @ M2) <= dobrushin_beta(M1) * dobrushin_beta(M2) + 1e-12
    d = len(M1)
    pairs = max(tv_distance(M1[x], M1[y]) for x in range(d) for y in range(d))
    assert dobrushin_beta(M1) == pairs


@given(dims, thetas)
def test_soft_split_reproduces_Q(d, theta):
    m = Model(d, theta)
    Q = matrix_Q(m).entries
    sd = soft_decomposition(m)
    assert np.max(np.abs(sd.g[:, None] * sd.M.entries - Q)) <= 1e-14
    assert np.allclose(Q, Q.T, atol=0)
    assert np.all(np.abs(sd.M.entries.sum(axis=1) - 1) <= 1e-12)
    assert np.all(np.abs(doob_kernel(m).entries.sum(axis=1) - 1) <= 1e-12)


@given(dims, thetas)
def test_eigenpairs(d, theta):
    m = Model(d, theta)
    b = eigensystem(m)
    Q = matrix_Q(m).entries
    for i in range(d):
        assert np.max(np.abs(Q @ b.phi[i] - b.E[i] * b.phi[i])) <= 1e-12
    assert np.max(np.abs(b.phi @ b.phi.T / d - np.eye(d))) <= 1e-12
    assert 0 < b.E0 < 1
    pi = quasi_stationary(m)[0].weights
    assert abs(pi @ b.phi0 - pi @ (1 / b.phi0)) <= 1e-12
    assert abs(pi @ b.phi0 - 1 / b.phi0.mean()) <= 1e-12


@settings(max_examples=40)
@given(dims, thetas, st.integers(min_value=0, max_value=30), st.data())
def test_flow_invariants(d, theta, n, data):
    m = Model(d, theta, data.draw(probability(d)))
    tr = evolve(m, n)
    g = soft_decomposition(m).g
    M = soft_decomposition(m).M.entries
    for p in range(n):
        nxt = (tr.etas[p] * g / (tr.etas[p] @ g)) @ M
        assert np.max(np.abs(tr.etas[p + 1] - nxt)) <= 1e-12
        assert abs(tr.z[p + 1] - tr.z[p] * (tr.etas[p] @ g)) <= 1e-12
    assert np.all(np.diff(tr.z) <= 1e-15)
    assert np.allclose(tr.etas[n], phi_n(m, n, m.eta0), atol=1e-12)
    assert abs(tr.etas[n].sum() - 1) <= 1e-12


@settings(max_examples=40)
@given(dims, thetas, st.integers(min_value=0, max_value=8), st.data())
def test_w_is_v_of_centered(d, theta, n, data):
    m = Model(d, theta, data.draw(probability(d)))
    f = data.draw(arrays(float, d, elements=st.floats(min_value=-3, max_value=3)))
    mean = float(evolve(m, n).etas[n] @ f)
    assert abs(w_soft(m, n, f) - v_soft(m, n, f - mean)) <= 1e-10
    assert abs(w_is(m, n, f) - v_is(m, n, f - mean)) <= 1e-10 * max(1.0, abs(w_is(m, n, f)))
    assert v_soft(m, n, f) >= -1e-10 and w_is(m, n, f) >= -1e-10


@given(st.integers(min_value=1, max_value=10), st.integers(min_value=0, max_value=40))
def test_path_counts_symmetry_and_recursion(d, n):
    t = count_paths(d, n + 1)
    A = np.array(t.counts[n], dtype=object)
    assert (A == A.T).all()
    B = t.counts[n + 1]
    for x in range(d):
        for y in range(d):
            assert B[x][y] == sum(A[x][z] for z in (y - 1, y + 1) if 0 <= z < d)
