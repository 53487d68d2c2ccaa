"""
Unit tests for the direct-collocation transcription.

Tests cover:
- Structural counts: crane reference values, closed forms, randomized sweep
- Jacobian pattern: finite differences, undeclared and realized entries
- Transcription/simulation consistency
- Objective quadrature, initial guess, boundary rows, evaluation errors
- Layout and dimension checks
"""

import numpy as np
import pytest


def _linear_ocp(
    rng, nq=2, nu=1, npar=1, nc=2, nr=3, N=4, read_parameters=False, stiffness=1.0, x_final=None, fixed=True
):
    """OCP with q̈ = −Kq + Bu + Pp and affine constraints, all matrices dense and random."""
    from collocate.model import SecondOrderODE, SecondOrderOCP

    nx = 2 * nq
    K = stiffness * rng.uniform(0.5, 1.5, size=(nq, nq))
    B = rng.uniform(0.5, 1.5, size=(nq, nu))
    P = rng.uniform(0.5, 1.5, size=(nq, npar))
    G, H = rng.uniform(0.5, 1.5, size=(nc, nx)), rng.uniform(0.5, 1.5, size=(nc, nu))
    Gp = rng.uniform(0.5, 1.5, size=(nc, npar)) if read_parameters else np.zeros((nc, npar))
    RT, R0 = rng.uniform(0.5, 1.5, size=(nr, nx)), rng.uniform(0.5, 1.5, size=(nr, nx))
    Rp = rng.uniform(0.5, 1.5, size=(nr, npar)) if read_parameters else np.zeros((nr, npar))

    ode = SecondOrderODE(
        nq=nq,
        nu=nu,
        npar=npar,
        accel=lambda t, q, v, u, p: -K @ q + B @ u + P @ p,
        jac_q=lambda t, q, v, u, p: -K,
        jac_u=lambda t, q, v, u, p: B,
        jac_p=lambda t, q, v, u, p: P,
    )
    return SecondOrderOCP(
        ode=ode,
        T=2.0,
        N=N,
        stage_cost=lambda x, u, p: float(x[:nq] @ x[:nq] + u @ u + p @ p),
        stage_cost_grad=lambda x, u, p: (np.concatenate((2.0 * x[:nq], np.zeros(nq))), 2.0 * u, 2.0 * p),
        terminal_cost=lambda x: float(x @ x),
        terminal_cost_grad=lambda x: 2.0 * x,
        path_constraint=lambda x, u, p: G @ x + H @ u + Gp @ p,
        path_constraint_jac=lambda x, u, p: (G, H, Gp),
        boundary=lambda xT, x0, p: RT @ xT + R0 @ x0 + Rp @ p,
        boundary_jac=lambda xT, x0, p: (RT, R0, Rp),
        nc=nc,
        nr=nr,
        x_init=rng.uniform(-1.0, 1.0, size=nx),
        x_final=x_final,
        constraints_read_parameters=read_parameters,
        fix_initial_state=fixed,
    )


def _relative_difference(a, b):
    return np.max(np.abs(a - b)) / max(1.0, np.max(np.abs(b)))


class TestStructureCounts:
    """Tests for structural counting against the closed forms."""

    @pytest.mark.parametrize(
        "method, expected",
        [("sc", (264, 292, 1368)), ("pc", (184, 212, 1128))],
    )
    def test_frictionless_crane(self, method, expected, frictionless_crane_ocp, gauss2):
        """Test the β=0 crane with N=20, d=2 against the reference counts."""
        from collocate.transcribe import closed_form_counts_for, structure_counts, transcribe

        nlp = transcribe(frictionless_crane_ocp, method, gauss2)
        counts = structure_counts(nlp)
        closed = closed_form_counts_for(nlp)

        assert (counts.n_var, counts.n_constraints, counts.jacobian_nnz) == expected
        assert (closed.n_var, closed.n_constraints, closed.jacobian_nnz) == expected
        assert nlp.jac_rows.size == expected[2]
        assert closed.C3 == 488
        assert not counts.assumption_violated

    def test_crane_closed_form(self):
        """Test closed_form_counts on the crane dimensions."""
        from collocate.transcribe import closed_form_counts

        sc = closed_form_counts("sc", N=20, d=2, nq=2, nu=1, npar=0, nc=2, nr=8)
        pc = closed_form_counts("pc", N=20, d=2, nq=2, nu=1, npar=0, nc=2, nr=8)

        assert (sc.C1, sc.C2) == (104, 132)
        assert sc.to_wire()["jac_nnz"] == 1368
        assert pc.to_wire() == {"n_var": 184, "n_constraints": 212, "jac_nnz": 1128, "C1": 104, "C2": 132, "C3": 488}

    def test_friction_flags_assumption(self, crane_ocp, gauss2):
        """Test a velocity-dependent model is flagged and counts more nonzeros."""
        from collocate.transcribe import closed_form_counts_for, structure_counts, transcribe

        for method in ("sc", "pc"):
            nlp = transcribe(crane_ocp, method, gauss2)
            counts = structure_counts(nlp)
            assert counts.assumption_violated
            assert counts.jacobian_nnz > closed_form_counts_for(nlp).jacobian_nnz
            assert counts.n_var == closed_form_counts_for(nlp).n_var

    def test_randomized_sweep(self):
        """Test exact formula agreement over 50 random dimension tuples."""
        from collocate.basis import CollocationScheme
        from collocate.transcribe import closed_form_counts_for, structure_counts, transcribe

        rng = np.random.default_rng(2024)
        for _ in range(50):
            nq, nu, npar = int(rng.integers(1, 4)), int(rng.integers(0, 3)), int(rng.integers(0, 3))
            nc, nr, N, d = int(rng.integers(0, 4)), int(rng.integers(0, 5)), int(rng.integers(1, 6)), int(rng.integers(1, 5))
            family = ("gauss", "radau")[int(rng.integers(0, 2))]
            fixed = bool(rng.integers(0, 2))
            ocp = _linear_ocp(rng, nq=nq, nu=nu, npar=npar, nc=nc, nr=nr, N=N, fixed=fixed)
            scheme = CollocationScheme.create(family, d)
            for method in ("sc", "pc"):
                nlp = transcribe(ocp, method, scheme)
                counts, closed = structure_counts(nlp), closed_form_counts_for(nlp)
                assert (counts.n_var, counts.n_constraints, counts.jacobian_nnz) == (
                    closed.n_var,
                    closed.n_constraints,
                    closed.jacobian_nnz,
                ), (nq, nu, npar, nc, nr, N, d, family, method, fixed)

    @pytest.mark.parametrize("d", range(1, 8))
    def test_pc_smaller_than_sc(self, d):
        """Test PC needs fewer variables and nonzeros, by N·nq·d and N·nq·(d²+2d−2)."""
        from collocate.transcribe import closed_form_counts

        dims = dict(N=15, d=d, nq=3, nu=2, npar=1, nc=4, nr=5)
        sc, pc = closed_form_counts("sc", **dims), closed_form_counts("pc", **dims)

        assert pc.n_var < sc.n_var and pc.jacobian_nnz < sc.jacobian_nnz
        assert sc.n_var - pc.n_var == 15 * 3 * d
        assert sc.jacobian_nnz - pc.jacobian_nnz == 15 * 3 * (d * d + 2 * d - 2)

    def test_block_counts(self, frictionless_crane_ocp, gauss2):
        """Test per-block rows add up and the boundary block is 2nq(2nq+nr)."""
        from collocate.transcribe import structure_counts, transcribe

        counts = structure_counts(transcribe(frictionless_crane_ocp, "pc", gauss2))

        assert counts.blocks["dynamics"].rows == 20 * 4
        assert counts.blocks["stage"].rows == 20 * 2 * 2
        assert counts.blocks["boundary"].rows == 4 + 8
        assert counts.blocks["boundary"].nnz == 4 * (4 + 8)
        assert counts.blocks["path"].nnz == 20 * 2 * 5
        assert counts.to_wire()["blocks"]["path"] == {"rows": 40, "nnz": 200}

    def test_single_interval(self, gauss2):
        """Test N=1 yields one dynamics and one stage block."""
        from collocate.transcribe import structure_counts, transcribe

        ocp = _linear_ocp(np.random.default_rng(0), N=1)
        nlp = transcribe(ocp, "sc", gauss2)
        counts = structure_counts(nlp)

        assert counts.blocks["dynamics"].rows == 4
        assert counts.blocks["stage"].rows == nlp.system.n_int == 2 * 4
        assert nlp.n_var == (4 + 8 + 1) + 4 + 1

    def test_zero_order_rejected(self):
        """Test d=0 is rejected by the scheme and the closed forms."""
        from collocate.basis import CollocationScheme
        from collocate.exceptions import SchemeError
        from collocate.transcribe import closed_form_counts

        with pytest.raises(SchemeError):
            CollocationScheme.create("gauss", 0)
        with pytest.raises(SchemeError, match="at least 1"):
            closed_form_counts("pc", N=20, d=0, nq=2, nu=1, npar=0, nc=2, nr=8)


class TestJacobian:
    """Tests for derivative evaluation and the declared pattern."""

    @pytest.mark.parametrize("method", ["sc", "pc"])
    @pytest.mark.parametrize("family", ["gauss", "radau"])
    def test_jacobian_matches_finite_differences(self, method, family, rng):
        """Test the sparse Jacobian on the friction crane at random points."""
        from collocate.basis import CollocationScheme
        from collocate.model import CraneParams, central_difference, make_crane_ocp
        from collocate.transcribe import transcribe

        nlp = transcribe(make_crane_ocp(1.0, 0.3, CraneParams(N=4)), method, CollocationScheme.create(family, 2))
        for _ in range(100):
            w = rng.uniform(-1.0, 1.0, size=nlp.n_var)
            numeric = central_difference(nlp.constraints, w)
            assert _relative_difference(nlp.jacobian(w).toarray(), numeric) < 1e-5

    @pytest.mark.parametrize("method", ["sc", "pc"])
    def test_gradient_matches_finite_differences(self, method, gauss2, rng):
        """Test the objective gradient on a problem with controls and parameters."""
        from collocate.model import central_difference
        from collocate.transcribe import transcribe

        nlp = transcribe(_linear_ocp(rng), method, gauss2)
        for _ in range(100):
            w = rng.uniform(-1.0, 1.0, size=nlp.n_var)
            numeric = central_difference(nlp.objective, w)[0]
            assert _relative_difference(nlp.gradient(w), numeric) < 1e-5

    @pytest.mark.parametrize("method", ["sc", "pc"])
    @pytest.mark.parametrize("family", ["gauss", "radau"])
    def test_no_undeclared_entries(self, method, family, crane_ocp, rng):
        """Test every nonzero derivative lies inside the declared pattern."""
        from collocate.basis import CollocationScheme
        from collocate.transcribe import transcribe

        nlp = transcribe(crane_ocp, method, CollocationScheme.create(family, 3))
        w = rng.uniform(-1.0, 1.0, size=nlp.n_var)

        assert np.count_nonzero(nlp.undeclared_entries(w)) == 0

    @pytest.mark.parametrize("method", ["sc", "pc"])
    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_declared_entries_are_realized(self, method, d, rng):
        """Test a dense linear model with a free initial state realizes every declared entry."""
        from collocate.basis import CollocationScheme
        from collocate.transcribe import transcribe

        ocp = _linear_ocp(rng, nq=2, nu=1, npar=1, nc=2, nr=3, N=3, read_parameters=True, fixed=False)
        nlp = transcribe(ocp, method, CollocationScheme.create("gauss", d))

        for _ in range(5):
            w = rng.uniform(-1.0, 1.0, size=nlp.n_var)
            assert np.count_nonzero(nlp.jacobian_values(w)) == nlp.jac_rows.size

    @pytest.mark.parametrize("method", ["sc", "pc"])
    def test_pinned_initial_state_realizes_all_but_pin_coupling(self, method, gauss2, rng):
        """Test only the pin rows' cross terms stay zero when the initial state is fixed."""
        from collocate.transcribe import transcribe

        nlp = transcribe(_linear_ocp(rng, read_parameters=True), method, gauss2)
        w = rng.uniform(-1.0, 1.0, size=nlp.n_var)
        values = nlp.jacobian_values(w)
        start, stop = nlp.entry_ranges()["boundary"]

        assert np.all(values[:start] != 0.0) and np.all(values[stop:] != 0.0)
        pin_rows = nlp.jac_rows[start:stop] < nlp.block_ranges()["boundary"][0] + nlp.n_pin
        assert np.count_nonzero(values[start:stop][pin_rows]) == nlp.n_pin
        assert np.all(values[start:stop][~pin_rows] != 0.0)

    def test_crane_boundary_entries(self, crane_ocp, gauss2, rng):
        """Test the crane boundary block carries the pin diagonal and ∂r/∂x_T only."""
        from collocate.transcribe import transcribe

        nlp = transcribe(crane_ocp, "pc", gauss2)
        start, stop = nlp.entry_ranges()["boundary"]
        w = rng.uniform(-1.0, 1.0, size=nlp.n_var)
        jac = nlp.jacobian(w).toarray()
        row0 = nlp.block_ranges()["boundary"][0]

        assert stop - start == 48
        assert np.count_nonzero(nlp.jacobian_values(w)[start:stop]) == 8
        np.testing.assert_array_equal(jac[row0 : row0 + 4, nlp.layout.x_slice(0)], np.eye(4))
        np.testing.assert_array_equal(jac[row0 + 8 : row0 + 12, nlp.layout.x_slice(nlp.N)], np.eye(4))
        assert np.count_nonzero(nlp.undeclared_entries(w)) == 0


    def test_entry_ranges_partition_values(self, crane_ocp, gauss2):
        """Test block entry ranges tile the value array in block order."""
        from collocate.transcribe import BLOCKS, transcribe

        nlp = transcribe(crane_ocp, "pc", gauss2)
        ranges = nlp.entry_ranges()

        assert [ranges[name] for name in BLOCKS][0][0] == 0
        for first, second in zip(BLOCKS, BLOCKS[1:]):
            assert ranges[first][1] == ranges[second][0]
        assert ranges["path"][1] == nlp.jac_rows.size
        assert nlp.block_nnz() == {name: stop - start for name, (start, stop) in ranges.items()}


class TestEvaluation:
    """Tests for objective, constraints and the initial guess."""

    @pytest.mark.parametrize("method", ["sc", "pc"])
    def test_simulation_consistency(self, method, crane_ocp, gauss2):
        """Test embedded integrator trajectories zero the dynamics and stage rows."""
        from collocate.integrator import simulate
        from collocate.model import IVP
        from collocate.transcribe import embed_trajectory, transcribe

        nlp = transcribe(crane_ocp, method, gauss2)
        rng = np.random.default_rng(11)
        start, stop = nlp.block_ranges()["dynamics"][0], nlp.block_ranges()["stage"][1]

        for _ in range(20):
            controls = rng.uniform(-1.0, 1.0, size=(crane_ocp.N, 1))
            ivp = IVP(ode=crane_ocp.ode, q0=crane_ocp.x_init[:2], v0=crane_ocp.x_init[2:], T=crane_ocp.T, N=crane_ocp.N)
            w = embed_trajectory(nlp, simulate(ivp, method, gauss2, u=controls))

            c = nlp.constraints(w)
            assert np.max(np.abs(c[start:stop])) <= 1e-10
            np.testing.assert_allclose(c[nlp.block_ranges()["boundary"][0] : nlp.n_eq][:4], 0.0, atol=1e-15)

    def test_embed_rejects_mismatched_trajectory(self, crane_ocp, gauss2, radau2):
        """Test a trajectory from another scheme cannot be embedded."""
        from collocate.exceptions import DimensionError
        from collocate.integrator import simulate
        from collocate.model import IVP
        from collocate.transcribe import embed_trajectory, transcribe

        ivp = IVP(ode=crane_ocp.ode, q0=np.zeros(2), v0=np.zeros(2), T=10.0, N=20)
        with pytest.raises(DimensionError, match="different"):
            embed_trajectory(transcribe(crane_ocp, "pc", gauss2), simulate(ivp, "pc", radau2))

    @pytest.mark.parametrize("method", ["sc", "pc"])
    @pytest.mark.parametrize("family", ["gauss", "radau"])
    def test_objective_quadrature_exact(self, method, family):
        """Test ∫ q² dt along a linear position path is integrated exactly."""
        from collocate.basis import CollocationScheme
        from collocate.transcribe import initial_guess, transcribe

        rng = np.random.default_rng(5)
        ocp = _linear_ocp(rng, nq=1, nu=1, npar=0, nc=0, nr=0, N=4, x_final=np.array([2.0, 0.0]))
        nlp = transcribe(ocp, method, CollocationScheme.create(family, 2))
        w = initial_guess(nlp)

        q0, T = ocp.x_init[0], ocp.T
        slope = (2.0 - q0) / T
        integral = ((q0 + slope * T) ** 3 - q0**3) / (3.0 * slope)
        terminal = 2.0**2 + slope**2
        assert nlp.objective(w) == pytest.approx(integral + terminal, rel=1e-12)

    def test_initial_guess_crane(self, crane_ocp, gauss2):
        """Test the homotopy guess: endpoints, constant velocity, zero controls."""
        from collocate.transcribe import initial_guess, transcribe, unpack

        nlp = transcribe(crane_ocp, "pc", gauss2)
        X, Z, U, p = unpack(nlp, initial_guess(nlp))

        np.testing.assert_allclose(X[0], [1.0, 0.3, -0.1, -0.03])
        np.testing.assert_allclose(X[-1], [0.0, 0.0, -0.1, -0.03], atol=1e-15)
        np.testing.assert_array_equal(U, np.zeros((20, 1)))
        assert Z.shape == (20, 4)
        assert p.shape == (0,)

    def test_initial_guess_without_target(self, gauss2):
        """Test no x_final keeps positions constant with zero velocity."""
        from collocate.transcribe import initial_guess, transcribe, unpack

        ocp = _linear_ocp(np.random.default_rng(3))
        nlp = transcribe(ocp, "sc", gauss2)
        X, _, _, p = unpack(nlp, initial_guess(nlp))

        np.testing.assert_allclose(X, np.tile(np.concatenate((ocp.x_init[:2], [0.0, 0.0])), (5, 1)))
        np.testing.assert_array_equal(p, [0.0])

    @pytest.mark.parametrize("method", ["sc", "pc"])
    def test_initial_guess_satisfies_free_motion(self, method, gauss2):
        """Test the guess satisfies dynamics and stage rows when q̈ = 0."""
        from collocate.transcribe import initial_guess, transcribe

        ocp = _linear_ocp(np.random.default_rng(9), npar=0, stiffness=0.0, x_final=np.array([1.0, -1.0, 0.0, 0.0]))
        nlp = transcribe(ocp, method, gauss2)
        c = nlp.constraints(initial_guess(nlp))

        assert np.max(np.abs(c[: nlp.block_ranges()["stage"][1]])) < 1e-13

    def test_boundary_rows_at_zero(self, crane_ocp, gauss2):
        """Test boundary rows at w = 0 are (−x_init, r(0, x_init))."""
        from collocate.transcribe import transcribe

        nlp = transcribe(crane_ocp, "sc", gauss2)
        start, stop = nlp.block_ranges()["boundary"]
        c = nlp.constraints(np.zeros(nlp.n_var))

        np.testing.assert_allclose(c[start:stop], np.concatenate((-crane_ocp.x_init, np.zeros(8))))
        assert stop == nlp.n_eq
        assert c.shape == (nlp.n_constraints,)

    @pytest.mark.parametrize("method", ["sc", "pc"])
    def test_periodic_boundary_with_free_initial_state(self, method, gauss2, rng):
        """Test r = x_N − x_0 is evaluated at the actual x_0 and its derivatives enter the Jacobian."""
        import dataclasses

        from collocate.model import central_difference
        from collocate.transcribe import transcribe

        nx = 4
        ocp = dataclasses.replace(
            _linear_ocp(rng, npar=0, stiffness=0.0),
            boundary=lambda xT, x0, p: xT - x0,
            boundary_jac=lambda xT, x0, p: (np.eye(nx), -np.eye(nx), np.zeros((nx, 0))),
            nr=nx,
            fix_initial_state=False,
        )
        nlp = transcribe(ocp, method, gauss2)
        state = np.array([5.0, 5.0, 0.0, 0.0])
        X = np.tile(state, (ocp.N + 1, 1))
        stage = state if method == "sc" else state[:2]
        Z = np.tile(np.tile(stage, 2), (ocp.N, 1))
        w = nlp.layout.pack(X, Z, np.zeros((ocp.N, 1)), np.zeros(0))
        start, stop = nlp.block_ranges()["boundary"]

        assert stop - start == nx
        np.testing.assert_allclose(nlp.constraints(w)[: nlp.n_eq], 0.0, atol=1e-12)
        w_random = rng.uniform(-1.0, 1.0, size=nlp.n_var)
        numeric = central_difference(nlp.constraints, w_random)
        assert _relative_difference(nlp.jacobian(w_random).toarray(), numeric) < 1e-5
        assert np.count_nonzero(nlp.undeclared_entries(w_random)) == 0

    def test_free_initial_state_counts(self, gauss2, rng):
        """Test a free initial state drops the pin rows and counts r dense in x_0 and x_N."""
        from collocate.transcribe import closed_form_counts, closed_form_counts_for, structure_counts, transcribe

        nlp = transcribe(_linear_ocp(rng, fixed=False), "pc", gauss2)
        counts, closed = structure_counts(nlp), closed_form_counts_for(nlp)
        pinned = closed_form_counts("pc", N=4, d=2, nq=2, nu=1, npar=1, nc=2, nr=3)

        assert (counts.n_constraints, counts.jacobian_nnz) == (closed.n_constraints, closed.jacobian_nnz)
        assert counts.blocks["boundary"].rows == 3
        assert counts.blocks["boundary"].nnz == 3 * 8
        assert pinned.n_constraints - closed.n_constraints == 4


    def test_eval_full(self, crane_ocp, gauss2):
        """Test eval_full bundles consistent evaluations."""
        from collocate.transcribe import eval_full, initial_guess, transcribe

        nlp = transcribe(crane_ocp, "pc", gauss2)
        w = initial_guess(nlp)
        full = eval_full(nlp, w)

        assert full.objective == nlp.objective(w)
        np.testing.assert_array_equal(full.constraints, nlp.constraints(w))
        assert full.jacobian.shape == nlp.jac_rows.shape

    def test_nan_raises_evaluation_error(self, gauss2):
        """Test a non-finite path constraint raises EvaluationError naming the block."""
        import dataclasses

        from collocate.exceptions import EvaluationError
        from collocate.transcribe import transcribe

        ocp = _linear_ocp(np.random.default_rng(1))
        ocp = dataclasses.replace(ocp, path_constraint=lambda x, u, p: np.full(2, np.nan))
        nlp = transcribe(ocp, "pc", gauss2)

        with pytest.raises(EvaluationError) as exc:
            nlp.constraints(np.zeros(nlp.n_var))
        assert exc.value.block == "path"
        assert exc.value.interval == 0

    def test_wrong_length_raises(self, crane_ocp, gauss2):
        """Test a decision vector of the wrong length is rejected."""
        from collocate.exceptions import DimensionError
        from collocate.transcribe import transcribe

        nlp = transcribe(crane_ocp, "sc", gauss2)
        with pytest.raises(DimensionError, match="Decision vector"):
            nlp.objective(np.zeros(nlp.n_var + 1))


class TestLayout:
    """Tests for the interleaved decision-vector layout."""

    def test_offsets_interleave(self, frictionless_crane_ocp, gauss2):
        """Test (x_k, z_k, u_k) blocks follow each other, then x_N and p."""
        from collocate.transcribe import transcribe

        lay = transcribe(frictionless_crane_ocp, "pc", gauss2).layout

        assert lay.interval_size == 4 + 4 + 1
        assert lay.z_offset(0) == 4 and lay.u_offset(0) == 8 and lay.x_offset(1) == 9
        assert lay.p_offset == lay.n_var == 184

    def test_hessian_blocks_partition_variables(self, crane_ocp, gauss2):
        """Test the quasi-Newton blocks cover every variable once."""
        from collocate.transcribe import transcribe

        nlp = transcribe(crane_ocp, "sc", gauss2)
        covered = np.concatenate(nlp.hessian_blocks)

        assert len(nlp.hessian_blocks) == 21
        np.testing.assert_array_equal(np.sort(covered), np.arange(nlp.n_var))

    def test_interval_columns_local_order(self, crane_ocp, gauss2):
        """Test interval columns list x_k, z_k, u_k, x_{k+1} and p."""
        from collocate.transcribe import transcribe

        lay = transcribe(crane_ocp, "pc", gauss2).layout
        cols = lay.interval_columns(1)

        assert cols[0] == lay.x_offset(1)
        assert cols[-1] == lay.x_offset(2) + 3
        assert cols.size == 4 + 4 + 1 + 4
