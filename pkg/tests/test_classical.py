import numpy as np
import pytest

from scramble.classical import (bloch_from_canonical, canonical_rhs,
                                canonical_tangent_map, classical_energy,
                                classical_ground_state, dpt_order_parameter,
                                integrate_flow, kicked_map,
                                lyapunov_benettin, poincare_section,
                                section_occupancy, separatrix_exponent,
                                tangent_poisson_bracket)

POLE = np.array([0.0, 0.0, 1.0])


def test_paramagnetic_fixed_point():
    _, traj = integrate_flow(np.array([1.0, 0.0, 0.0]), 1.0, 2.0,
                             t_max=10.0, dt=1e-3, n_out=10)
    assert np.max(np.abs(traj - traj[0])) < 1e-12


def test_zero_field_precession():
    m0 = np.array([0.6, 0.0, 0.8])
    ts, traj = integrate_flow(m0, 1.0, 0.0, t_max=5.0, dt=1e-3, n_out=50)
    assert np.max(np.abs(traj[:, 2] - 0.8)) < 1e-12
    # transverse components rotate at rate 2 J m_z
    phase = np.unwrap(np.arctan2(traj[:, 1], traj[:, 0]))
    rates = np.diff(phase) / np.diff(ts)
    assert np.allclose(np.abs(rates), 2 * 0.8, atol=1e-6)


def test_energy_and_norm_conservation():
    ts, traj = integrate_flow(POLE, 1.0, 2.0, t_max=100.0, dt=1e-3, n_out=100)
    e = classical_energy(traj, 1.0, 2.0)
    assert np.max(np.abs(e - e[0])) <= 1e-8
    norms = np.linalg.norm(traj, axis=-1)
    assert np.max(np.abs(norms - 1.0)) <= 1e-9


def test_rk4_convergence_order():
    m0 = np.array([0.3, 0.4, np.sqrt(1 - 0.25)])
    _, fine = integrate_flow(m0, 1.0, 2.0, t_max=5.0, dt=1.25e-4, n_out=1)
    _, mid = integrate_flow(m0, 1.0, 2.0, t_max=5.0, dt=5e-4, n_out=1)
    _, coarse = integrate_flow(m0, 1.0, 2.0, t_max=5.0, dt=1e-3, n_out=1)
    err_mid = np.max(np.abs(mid[-1] - fine[-1]))
    err_coarse = np.max(np.abs(coarse[-1] - fine[-1]))
    ratio = err_coarse / err_mid
    assert 10 < ratio < 22          # ~16x for fourth order


def test_kick_reduces_to_flow_and_fixes_pole():
    m0 = np.array([0.3, -0.5, np.sqrt(1 - 0.34)])
    out = kicked_map(m0, 1.0, 2.0, 0.0, 1.0, 1e-3)
    _, traj = integrate_flow(m0, 1.0, 2.0, t_max=1.0, dt=1e-3, n_out=1)
    assert np.allclose(out, traj[-1], atol=1e-12)
    pole = kicked_map(POLE.copy(), 1.0, 0.0, 7.0, 1e-6, 1e-6)
    assert np.allclose(pole, POLE, atol=1e-9)


def test_kicked_map_norm_conservation():
    m = np.array([0.1, 0.2, np.sqrt(1 - 0.05)])
    for _ in range(2000):
        m = kicked_map(m, 1.0, 2.0, 20.0, 1.0, 0.01)
    assert abs(np.linalg.norm(m) - 1.0) <= 1e-12


def test_kick_shifts_momentum_by_KQ():
    # P -> P + K Q across the kick rotation
    from scramble.classical import canonical_coordinates, kick_rotation
    m = bloch_from_canonical(0.37, 0.2)
    Q0, P0 = canonical_coordinates(m)
    out = kick_rotation(m, 1.3)
    Q1, P1 = canonical_coordinates(out)
    assert Q1 == pytest.approx(Q0, abs=1e-14)
    assert P1 == pytest.approx(P0 + 1.3 * Q0, abs=1e-12)


def test_poincare_occupancy_regular_vs_chaotic():
    # short version of the full diagnostic (10^4 periods in acceptance):
    # a closed curve occupies a sliver of the grid, the chaotic sea keeps
    # visiting fresh cells at a near-unit rate
    seeds = [bloch_from_canonical(0.3, 0.4)]
    regular = poincare_section(seeds, 1000, 1.0, 2.0, 0.2, 1.0, dt=0.02)[0]
    chaotic = poincare_section(seeds, 1000, 1.0, 2.0, 20.0, 1.0, dt=0.02)[0]
    assert section_occupancy(regular) < 0.05
    assert section_occupancy(chaotic) > 0.08
    empty = poincare_section(seeds, 0, 1.0, 2.0, 0.2, 1.0)[0]
    assert empty.shape == (1, 2)


def test_lyapunov_regular_and_chaotic():
    lam_reg, _ = lyapunov_benettin(bloch_from_canonical(0.9, 0.1), 1.0, 2.0,
                                   0.0, 1.0, n_periods=3000, dt=1e-3)
    assert abs(lam_reg) <= 1e-2
    lam_cha, running = lyapunov_benettin(bloch_from_canonical(0.3, 0.4),
                                         1.0, 2.0, 20.0, 1.0,
                                         n_periods=2000, dt=0.01)
    assert lam_cha > 0.5
    # converged: last-decade variation small
    tail = running[len(running) // 2:]
    assert np.std(tail) / lam_cha < 0.05


def test_lyapunov_agrees_with_two_trajectory_divergence():
    m0 = bloch_from_canonical(0.3, 0.4)
    lam, _ = lyapunov_benettin(m0, 1.0, 2.0, 20.0, 1.0, n_periods=3000,
                               dt=0.01)
    eps = 1e-9
    a, b = m0.copy(), m0 + np.array([0.0, eps, 0.0])
    b /= np.linalg.norm(b)
    d0 = np.linalg.norm(a - b)
    n = 12
    for _ in range(n):
        a = kicked_map(a, 1.0, 2.0, 20.0, 1.0, 0.01)
        b = kicked_map(b, 1.0, 2.0, 20.0, 1.0, 0.01)
    rate = np.log(np.linalg.norm(a - b) / d0) / n
    assert rate == pytest.approx(lam, rel=0.35)


def test_separatrix_exponent_formula_and_domain():
    assert separatrix_exponent(0.5) == pytest.approx(1.0, rel=1e-14)
    assert separatrix_exponent(1e-9) == pytest.approx(0.0, abs=1e-4)
    for h in (0.0, 1.0, -0.3, 1.5):
        with pytest.raises(ValueError):
            separatrix_exponent(h)


@pytest.mark.parametrize("h", [0.2, 0.5, 0.8])
def test_separatrix_exponent_matches_jacobian(h):
    # finite-difference Jacobian of the canonical flow at the saddle (0, 0)
    eps = 1e-7
    Jac = np.empty((2, 2))
    for col, dvec in enumerate(((eps, 0.0), (0.0, eps))):
        fp = canonical_rhs(0.0 + dvec[0], 0.0 + dvec[1], 1.0, h)
        fm = canonical_rhs(0.0 - dvec[0], 0.0 - dvec[1], 1.0, h)
        Jac[:, col] = (np.array(fp) - np.array(fm)) / (2 * eps)
    lam = np.max(np.linalg.eigvals(Jac).real)
    assert lam == pytest.approx(separatrix_exponent(h), abs=1e-6)


def test_dpt_order_parameter():
    qbar, hc = dpt_order_parameter(0.0, 2.0, T_avg=1000.0)
    assert hc == 0.5
    assert abs(qbar) < 0.05
    qbar, _ = dpt_order_parameter(0.0, 0.2, T_avg=1000.0)
    assert abs(qbar) > 0.5


def test_classical_ground_state_branches():
    assert np.allclose(classical_ground_state(1.0, 0.0), POLE)
    m = classical_ground_state(1.0, 0.6)
    assert m[0] == pytest.approx(0.6)
    assert np.allclose(classical_ground_state(1.0, 3.0), [1.0, 0.0, 0.0])


def test_poisson_bracket_zero_at_start_and_fd_oracle():
    m0 = bloch_from_canonical(0.5, 0.3)
    times = np.array([0.0, 1.0, 3.0, 6.0])
    rec = tangent_poisson_bracket(m0, 1.0, 2.0, times, dt=1e-3)
    assert rec.values[0] == 0.0
    # central finite difference in P0
    dP = 1e-6
    up = integrate_flow(bloch_from_canonical(0.5, 0.3 + dP), 1.0, 2.0,
                        t_max=6.0, dt=1e-3, n_out=2)[1]
    dn = integrate_flow(bloch_from_canonical(0.5, 0.3 - dP), 1.0, 2.0,
                        t_max=6.0, dt=1e-3, n_out=2)[1]
    fd = (up[:, 2] - dn[:, 2]) / (2 * dP)
    assert rec.values[2] == pytest.approx(fd[1], rel=1e-4)
    assert rec.values[3] == pytest.approx(fd[2], rel=1e-4)


def test_symplectic_determinant():
    m0 = bloch_from_canonical(0.5, 0.3)
    ts, traj, tans = integrate_flow(m0, 1.0, 2.0, t_max=20.0, dt=1e-3,
                                    n_out=10, with_tangent=True)
    for k in range(len(ts)):
        T2 = canonical_tangent_map(m0, tans[k], traj[k])
        assert abs(np.linalg.det(T2) - 1.0) <= 1e-6


def test_bracket_vanishes_at_pole():
    rec = tangent_poisson_bracket(POLE, 1.0, 2.0, [0.0, 2.0], dt=1e-3)
    assert np.allclose(rec.values, 0.0, atol=1e-12)
