import numpy as np
import pytest

from geoshoot import (
    ConfigurationError,
    DegenerateConfigurationError,
    EvolveConfig,
    KernelSpec,
    ParticleState,
    SystemSpec,
    circle,
    conserved_quantities,
    evolve,
    gram_matrix,
    hamiltonian,
    inexactness_energy,
    rhs,
    velocity_field,
)


def _symbolic_two_particle_rhs():
    """Independent oracle: lambdified canonical equations for N = 2.

    The Hamiltonian (1/2) sum_ab (p_a . p_b) G(|q_a - q_b|)
    + (sigma2/2) sum_a |p_a|^2 with the normalized exponential kernel is
    written in sympy and differentiated symbolically, so no line of the
    production rhs is shared with this derivation.
    """
    import sympy as sp

    qs = sp.symbols("q1x q1y q2x q2y", real=True)
    ps = sp.symbols("p1x p1y p2x p2y", real=True)
    s2, alpha = sp.symbols("s2 alpha", positive=True)
    q1x, q1y, q2x, q2y = qs
    p1x, p1y, p2x, p2y = ps

    d = sp.sqrt((q1x - q2x) ** 2 + (q1y - q2y) ** 2)
    kernel = sp.exp(-d / alpha)
    pp11 = p1x**2 + p1y**2
    pp22 = p2x**2 + p2y**2
    pp12 = p1x * p2x + p1y * p2y
    # G(0) = 1 for the normalized kernel.
    ham = sp.Rational(1, 2) * (pp11 + pp22 + 2 * pp12 * kernel) + s2 / 2 * (
        pp11 + pp22
    )
    dq = [sp.diff(ham, v) for v in ps]
    dp = [-sp.diff(ham, v) for v in qs]
    return sp.lambdify((qs, ps, s2, alpha), (dq, dp), "numpy")


def test_rhs_matches_symbolic_oracle_over_random_states():
    oracle = _symbolic_two_particle_rhs()
    rng = np.random.default_rng(2024)
    for k in range(100):
        q = rng.uniform(-3.0, 3.0, size=(2, 2))
        while np.linalg.norm(q[0] - q[1]) < 1e-3:
            q = rng.uniform(-3.0, 3.0, size=(2, 2))
        p = rng.uniform(-2.0, 2.0, size=(2, 2))
        sigma2 = 0.0 if k % 2 == 0 else 0.3
        alpha = 1.0 if k % 3 else 0.7
        spec = SystemSpec(kernel=KernelSpec(alpha=alpha), sigma2=sigma2)

        dq, dp = rhs(spec, ParticleState(q, p))
        want_dq, want_dp = oracle(tuple(q.ravel()), tuple(p.ravel()), sigma2, alpha)
        np.testing.assert_allclose(
            dq.ravel(), np.asarray(want_dq, dtype=float), rtol=1e-12, atol=1e-12
        )
        np.testing.assert_allclose(
            dp.ravel(), np.asarray(want_dp, dtype=float), rtol=1e-12, atol=1e-12
        )


def test_hamiltonian_is_gram_quadratic_form():
    rng = np.random.default_rng(5)
    template = circle(2.0, n=12)
    p = rng.normal(size=(12, 2))
    spec = SystemSpec()
    state = ParticleState(template.points, p)
    k = gram_matrix(spec.kernel, template.points)
    assert hamiltonian(spec, state) == pytest.approx(
        float(np.sum(p * (k @ p))), rel=1e-14
    )


def test_hamiltonian_of_zero_momenta_is_zero():
    state = ParticleState(circle(1.0, n=8).points, np.zeros((8, 2)))
    assert hamiltonian(SystemSpec(), state) == 0.0


def test_inexactness_energy():
    p = np.array([[1.0, 2.0], [0.0, -1.0]])
    state = ParticleState(np.array([[0.0, 0.0], [1.0, 0.0]]), p)
    assert inexactness_energy(SystemSpec(sigma2=0.5), state) == pytest.approx(3.0)
    assert inexactness_energy(SystemSpec(), state) == 0.0


def test_momentum_sum_is_invariant_of_the_momentum_equation():
    # dp antisymmetry: the dp rows must sum to zero exactly, not to roundoff.
    rng = np.random.default_rng(11)
    q = rng.normal(size=(9, 2)) * 2.0
    p = rng.normal(size=(9, 2))
    _, dp = rhs(SystemSpec(), ParticleState(q, p))
    np.testing.assert_allclose(dp.sum(axis=0), np.zeros(2), atol=1e-13)


def test_angular_momentum_derivative_vanishes():
    rng = np.random.default_rng(12)
    q = rng.normal(size=(7, 2)) * 2.0
    p = rng.normal(size=(7, 2))
    for sigma2 in (0.0, 0.4):
        spec = SystemSpec(sigma2=sigma2)
        dq, dp = rhs(spec, ParticleState(q, p))
        dl = float(
            np.sum(dq[:, 0] * p[:, 1] - dq[:, 1] * p[:, 0])
            + np.sum(q[:, 0] * dp[:, 1] - q[:, 1] * dp[:, 0])
        )
        assert abs(dl) < 1e-12


def test_inexact_flow_conserves_shifted_hamiltonian():
    """sigma2 > 0 is still Hamiltonian: H + sigma2 sum|p|^2 is constant."""
    rng = np.random.default_rng(3)
    template = circle(2.0, n=10)
    p = 0.5 * rng.normal(size=(10, 2))
    spec = SystemSpec(sigma2=0.3)
    start = ParticleState(template.points, p)
    end = evolve(spec, start, EvolveConfig(steps=200)).final
    total0 = hamiltonian(spec, start) + inexactness_energy(spec, start)
    total1 = hamiltonian(spec, end) + inexactness_energy(spec, end)
    assert total1 == pytest.approx(total0, rel=1e-9)


def test_velocity_field_at_landmarks_is_gram_product():
    rng = np.random.default_rng(8)
    template = circle(1.5, n=10)
    p = rng.normal(size=(10, 2))
    spec = SystemSpec()
    state = ParticleState(template.points, p)
    u = velocity_field(spec, state, template.points)
    np.testing.assert_allclose(
        u, gram_matrix(spec.kernel, template.points) @ p, rtol=1e-12, atol=1e-14
    )


def test_velocity_field_single_point_matches_batch():
    state = ParticleState(
        np.array([[0.0, 0.0], [1.0, 0.0]]), np.array([[0.0, 1.0], [1.0, 0.0]])
    )
    spec = SystemSpec()
    single = velocity_field(spec, state, np.array([0.25, -0.5]))
    batch = velocity_field(spec, state, np.array([[0.25, -0.5]]))
    assert single.shape == (2,)
    np.testing.assert_allclose(batch[0], single)


def test_conserved_quantities_keys():
    state = ParticleState(circle(1.0, n=6).points, np.ones((6, 2)))
    out = conserved_quantities(SystemSpec(), state)
    assert set(out) == {"H", "P", "L"}
    np.testing.assert_allclose(out["P"], np.array([6.0, 6.0]))


def test_coincident_interacting_particles_raise():
    q = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0]])
    p = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 0.0]])
    with pytest.raises(DegenerateConfigurationError, match="0 and 1"):
        rhs(SystemSpec(), ParticleState(q, p))


def test_coincident_inert_particles_tolerated():
    # Zero momentum product kills the singular interaction term.
    q = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0]])
    p = np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]])
    dq, dp = rhs(SystemSpec(), ParticleState(q, p))
    assert np.all(np.isfinite(dq)) and np.all(np.isfinite(dp))


def test_state_validation():
    good = np.zeros((3, 2))
    with pytest.raises(ValueError):
        ParticleState(np.zeros((3, 3)), good)
    with pytest.raises(ValueError):
        ParticleState(good, np.zeros((4, 2)))
    bad = good.copy()
    bad[0, 0] = np.nan
    with pytest.raises(ValueError):
        ParticleState(bad, good)
    with pytest.raises(ConfigurationError):
        SystemSpec(sigma2=-0.1)
