import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from generators import (
    LAPLACIAN_8,
    LOGIC_3,
    STUBBORN_8,
    random_assumption3_logic,
    random_certified_logic,
    random_spanning_graph,
    worked_graph,
)
from topiclogic import criteria, dynamics, logic, netgraph, spectra
from topiclogic.errors import DimensionError, IntegrationError

X0 = np.random.default_rng(2024).uniform(-1, 1, 24)


def spectra_match(got, want, tol):
    """Multiset comparison by greedy nearest matching, immune to tie ordering."""
    rest = list(want)
    for z in got:
        k = int(np.argmin([abs(z - w) for w in rest]))
        if abs(z - rest[k]) > tol:
            return False
        rest.pop(k)
    return not rest


def blockwise_field(model, adj, C, b, x0, x, alpha=1.0, beta=1.0):
    """Per-individual right-hand side, written out without Kronecker products."""
    n, d = adj.shape[0], C.shape[0]
    x = x.reshape(n, d)
    x0 = x0.reshape(n, d)
    out = np.zeros((n, d))
    for i in range(n):
        social = sum(adj[i, j] * (x[j] - x[i]) for j in range(n))
        if model == 1:
            # alpha scales the interpersonal term, beta the introspective one
            out[i] = beta * (C - np.eye(d)) @ x[i] + alpha * C @ social
        else:
            out[i] = alpha * social + beta * (C - np.eye(d)) @ x[i]
        out[i] += b[i] * (x0[i] - x[i])
    return out.ravel()


class TestAssemble:
    def test_identity_logic_models_coincide(self):
        g = worked_graph()
        s1 = dynamics.assemble(1, g, np.eye(3), STUBBORN_8, X0)
        s2 = dynamics.assemble(2, g, np.eye(3), STUBBORN_8, X0)
        assert np.array_equal(s1.state_matrix, s2.state_matrix) and np.array_equal(s1.input, s2.input)

    def test_single_individual_is_introspection(self):
        g = netgraph.build_graph([[0.0]])
        for model in (1, 2):
            s = dynamics.assemble(model, g, LOGIC_3)
            assert np.allclose(s.state_matrix, LOGIC_3 - np.eye(3))

    def test_input_is_stubborn_anchor(self):
        s = dynamics.assemble(1, worked_graph(), LOGIC_3, STUBBORN_8, X0)
        assert np.array_equal(s.input, np.kron(np.diag(STUBBORN_8), np.eye(3)) @ X0)
        assert np.array_equal(dynamics.assemble(1, worked_graph(), LOGIC_3, None, X0).input, np.zeros(24))

    def test_explicit_matrices(self):
        g = worked_graph()
        B = np.diag(STUBBORN_8)
        m1 = -(np.eye(24) + np.kron(LAPLACIAN_8 - np.eye(8), LOGIC_3) + np.kron(B, np.eye(3)))
        m2 = -(np.kron(LAPLACIAN_8 + B, np.eye(3)) + np.kron(np.eye(8), np.eye(3) - LOGIC_3))
        assert np.allclose(dynamics.assemble(1, g, LOGIC_3, STUBBORN_8, X0).state_matrix, m1, atol=1e-15)
        assert np.allclose(dynamics.assemble(2, g, LOGIC_3, STUBBORN_8, X0).state_matrix, m2, atol=1e-15)

    def test_spectrum_from_kron_identities(self):
        g = worked_graph()
        lam = spectra.eigvals(LAPLACIAN_8)
        phi = spectra.eigvals(LOGIC_3)
        want1 = (-(1 - np.outer(1 - lam, phi))).ravel()
        want2 = (-(lam[:, None] + 1 - phi[None, :])).ravel()
        got1 = spectra.eigvals(dynamics.assemble(1, g, LOGIC_3).state_matrix)
        got2 = spectra.eigvals(dynamics.assemble(2, g, LOGIC_3).state_matrix)
        # lambda = 1 is a defective double eigenvalue of L, so computed values split by ~sqrt(eps)
        assert spectra_match(got1, want1, 1e-6) and spectra_match(got2, want2, 1e-6)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.sampled_from([1, 2]))
    def test_blockwise_form(self, seed, model):
        rng = np.random.default_rng(seed)
        n, d = int(rng.integers(1, 6)), int(rng.integers(1, 4))
        adj = random_spanning_graph(rng, n)
        C = rng.normal(size=(d, d))
        b = rng.uniform(0, 1, n)
        x0, x = rng.normal(size=n * d), rng.normal(size=n * d)
        alpha, beta = rng.uniform(0.2, 3), rng.uniform(0.2, 3)
        s = dynamics.assemble(model, netgraph.build_graph(adj), C, b, x0, alpha, beta)
        want = blockwise_field(model, adj, C, b, x0, x, alpha, beta)
        assert np.max(np.abs(s.vector_field(x) - want)) <= 1e-12 * (1 + np.max(np.abs(want)))

    def test_dimension_errors(self):
        g = worked_graph()
        with pytest.raises(DimensionError):
            dynamics.assemble(1, g, LOGIC_3, np.zeros(7))
        with pytest.raises(DimensionError):
            dynamics.assemble(1, g, LOGIC_3, None, np.zeros(23))
        with pytest.raises(ValueError):
            dynamics.assemble(3, g, LOGIC_3)

    def test_model_tags(self):
        g = worked_graph()
        assert dynamics.assemble("model2", g, LOGIC_3).model == 2
        assert dynamics.assemble("1", g, LOGIC_3).model == 1

    def test_default_dt(self):
        s = dynamics.assemble(1, worked_graph(), LOGIC_3)
        assert dynamics.default_dt(s) == min(0.01, 0.1 / (1 + spectra.inf_norm(s.state_matrix)))


class TestIntegrate:
    def test_worked_consensus_both_models(self):
        g = worked_graph()
        for model in (1, 2):
            tr = dynamics.integrate(dynamics.assemble(model, g, LOGIC_3, None, X0), 300.0)
            assert tr.terminal_status == "converged" and tr.final_disagreement < 1e-6
            assert dynamics.disagreement_decay_rate(tr) < 0

    def test_tripled_graph(self):
        g = worked_graph(3.0)
        t1 = dynamics.integrate(dynamics.assemble(1, g, LOGIC_3, None, X0), 300.0)
        t2 = dynamics.integrate(dynamics.assemble(2, g, LOGIC_3, None, X0), 300.0)
        assert t1.terminal_status == "diverged" and np.max(np.abs(t1.endpoint)) > 1e6
        assert t2.terminal_status == "converged" and t2.final_disagreement < 1e-6

    def test_rk4_matches_exact_propagator(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            A = rng.normal(size=(12, 12))
            M = A - (np.max(spectra.eigvals(A).real) + rng.uniform(0.1, 1.0)) * np.eye(12)
            sys = dynamics.ModelSystem(1, 12, 1, M, rng.normal(size=12), rng.normal(size=12))
            a = dynamics.integrate(sys, 1.0, 1e-3, "rk4").endpoint
            b = dynamics.integrate(sys, 1.0, 1e-3, "expm_step").endpoint
            exact = spectra.expm(M) @ sys.x0 + spectra.solve(M, (spectra.expm(M) - np.eye(12)) @ sys.input)
            assert np.max(np.abs(a - b)) <= 1e-8
            assert np.max(np.abs(b - exact)) <= 1e-9

    def test_last_sample_lands_on_t_end(self):
        tr = dynamics.integrate(dynamics.assemble(1, worked_graph(), LOGIC_3, None, X0), 1.234, 0.01)
        assert tr.times[-1] == pytest.approx(1.234, abs=1e-12)
        assert np.all(np.diff(tr.times) > 0)

    def test_recording_is_bounded(self):
        tr = dynamics.integrate(dynamics.assemble(1, worked_graph(), LOGIC_3, None, X0), 300.0, 0.001)
        assert len(tr.times) <= 10_000 and tr.times[-1] == pytest.approx(300.0)

    def test_bad_arguments(self):
        s = dynamics.assemble(1, worked_graph(), LOGIC_3, None, X0)
        with pytest.raises(ValueError):
            dynamics.integrate(s, 1.0, 0.0)
        with pytest.raises(ValueError):
            dynamics.integrate(s, 0.001, 0.01)
        with pytest.raises(ValueError):
            dynamics.integrate(s, 1.0, 0.1, "euler")

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_non_finite_state_is_reported(self):
        s = dynamics.ModelSystem(1, 1, 1, np.array([[800.0]]), np.zeros(1), np.ones(1))
        with pytest.raises(IntegrationError) as info:
            dynamics.integrate(s, 10.0, 1.0, "expm_step", blowup=math.inf)
        assert info.value.time > 0

    def test_deterministic(self):
        s = dynamics.assemble(2, worked_graph(), LOGIC_3, STUBBORN_8, X0)
        a, b = dynamics.integrate(s, 20.0), dynamics.integrate(s, 20.0)
        assert np.array_equal(a.states, b.states) and np.array_equal(a.times, b.times)

    def test_max_time_status(self):
        tr = dynamics.integrate(dynamics.assemble(1, worked_graph(), LOGIC_3, None, X0), 5.0)
        assert tr.terminal_status == "max_time"

    def test_linearity(self):
        g = worked_graph()
        rng = np.random.default_rng(8)
        x, y = rng.uniform(-1, 1, 24), rng.uniform(-1, 1, 24)
        a, b = 0.7, -1.3

        def flow(z):
            return dynamics.integrate(dynamics.assemble(1, g, LOGIC_3, None, z), 10.0).endpoint

        assert np.max(np.abs(flow(a * x + b * y) - (a * flow(x) + b * flow(y)))) <= 1e-9

    def test_models_coincide_at_identity_logic(self):
        g = worked_graph()
        t1 = dynamics.integrate(dynamics.assemble(1, g, np.eye(3), STUBBORN_8, X0), 20.0)
        t2 = dynamics.integrate(dynamics.assemble(2, g, np.eye(3), STUBBORN_8, X0), 20.0)
        assert np.max(np.abs(t1.states - t2.states)) <= 1e-12

    def test_consensus_subspace_is_stationary(self):
        zeta = logic.certify_logic(LOGIC_3).zetas[:, 0]
        for model in (1, 2):
            s = dynamics.assemble(model, worked_graph(), LOGIC_3, None, np.tile(zeta, 8))
            assert np.max(np.abs(s.vector_field(s.x0))) <= 1e-12

    def test_stubborn_endpoint_matches_linear_solve(self):
        for model in (1, 2):
            s = dynamics.assemble(model, worked_graph(), LOGIC_3, STUBBORN_8, X0)
            tr = dynamics.integrate(s, 800.0)
            lim = criteria.predicted_limit_stubborn(model, LAPLACIAN_8, LOGIC_3, STUBBORN_8, X0)
            assert tr.terminal_status == "converged"
            assert np.max(np.abs(tr.endpoint - lim)) <= 1e-6
            assert tr.final_disagreement > 1e-3

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.sampled_from([1, 2]))
    def test_analytic_limit_agreement(self, seed, model):
        rng = np.random.default_rng(seed)
        n, d = int(rng.integers(1, 6)), int(rng.integers(1, 4))
        g = netgraph.build_graph(random_spanning_graph(rng, n))
        C = random_certified_logic(rng, d)
        b = rng.uniform(0.1, 1.0, n)
        s = dynamics.assemble(model, g, C, b, rng.uniform(-1, 1, n * d))
        abscissa = float(np.max(spectra.eigvals(s.state_matrix).real))
        if abscissa > -0.02:
            return
        tr = dynamics.integrate(s, 40.0 / -abscissa, method="expm_step", dt=0.05)
        lim = criteria.predicted_limit_stubborn(model, g, C, b, s.x0, check=False)
        if tr.terminal_status == "converged":
            assert np.max(np.abs(tr.endpoint - lim)) <= 1e-6


class TestDisagreement:
    def test_equal_blocks(self):
        assert dynamics.disagreement(np.tile([0.3, -0.2], 4), 2) == 0

    def test_two_individuals(self):
        assert dynamics.disagreement(np.array([1.0, 0.0, 0.0, 0.0]), 2) == 1

    def test_pairwise_definition(self):
        rng = np.random.default_rng(9)
        x = rng.normal(size=15)
        blocks = x.reshape(5, 3)
        want = max(np.max(np.abs(blocks[i] - blocks[j])) for i in range(5) for j in range(5))
        assert dynamics.disagreement(x, 3) == pytest.approx(want, abs=1e-15)

    def test_series_length(self):
        tr = dynamics.integrate(dynamics.assemble(1, worked_graph(), LOGIC_3, None, X0), 1.0)
        assert dynamics.disagreement_series(tr).shape == tr.times.shape


class TestBoxInvariance:
    def test_worked_scenario(self):
        tr = dynamics.integrate(dynamics.assemble(1, worked_graph(), LOGIC_3, None, X0), 300.0)
        rep = dynamics.monitor_box_invariance(tr, 1.0)
        assert rep.ok and rep.worst_excursion <= 1e-9

    def test_boundary_start(self):
        for model in (1, 2):
            tr = dynamics.integrate(dynamics.assemble(model, worked_graph(), LOGIC_3, None, np.ones(24)), 50.0)
            assert dynamics.monitor_box_invariance(tr, 1.0).worst_excursion <= 1e-9

    def test_violating_system_is_only_reported(self):
        tr = dynamics.integrate(dynamics.assemble(1, worked_graph(3.0), LOGIC_3, None, X0), 20.0)
        rep = dynamics.monitor_box_invariance(tr, 1.0)
        assert rep.worst_excursion > 0 and not rep.ok and rep.worst_time is not None

    def test_rejects_nonpositive_box(self):
        tr = dynamics.integrate(dynamics.assemble(1, worked_graph(), LOGIC_3, None, X0), 1.0)
        with pytest.raises(ValueError):
            dynamics.monitor_box_invariance(tr, 0.0)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_random_assumption3(self, seed):
        rng = np.random.default_rng(seed)
        n, d = int(rng.integers(1, 6)), int(rng.integers(1, 4))
        adj = random_spanning_graph(rng, n)
        adj = adj / adj.sum(axis=1, keepdims=True).clip(min=1e-300) * rng.uniform(0.1, 1.0, (n, 1))
        C = random_assumption3_logic(rng, d)
        x0 = rng.uniform(-1, 1, n * d)
        tr = dynamics.integrate(dynamics.assemble(1, netgraph.build_graph(adj), C, None, x0), 20.0)
        assert dynamics.monitor_box_invariance(tr, 1.0).worst_excursion <= 1e-9
