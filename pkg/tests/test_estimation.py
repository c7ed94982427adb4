import numpy as np
import pytest
from dataclasses import replace

from voltfield.estimation.est_jacobi import jacobi_eigh
from voltfield.estimation.est_ls import RegressionWindow,build_regression_window,excitation_rank,ls_bootstrap
from voltfield.estimation.est_rls import rls_f_update,rls_sf_update,run_rls
from voltfield.estimation.est_interval import gaussian_quantile,interval_from_covariance
from voltfield.utils.errors import EigenFailure,NumericalBlowup,SingularSystem

def _window(rng,m=40,n=6,noise=0.0,x=None):
    H = rng.standard_normal((m,n))
    x = rng.standard_normal(n) if x is None else x
    gamma = H @ x + noise*rng.standard_normal(m)
    return RegressionWindow(gamma=gamma,h_rows=H),x

# jacobi

def test_jacobi_matches_lapack(rng):
    a = rng.standard_normal((8,8))
    a = a + a.T
    w,U = jacobi_eigh(a)
    assert np.allclose(w,np.linalg.eigvalsh(a),atol=1e-10)
    assert np.allclose(U @ np.diag(w) @ U.T,a,atol=1e-10)
    assert np.allclose(U.T @ U,np.eye(8),atol=1e-10)

def test_jacobi_rejects_bad_input():
    with pytest.raises(ValueError):
        jacobi_eigh(np.ones((2,3)))
    with pytest.raises(EigenFailure):
        jacobi_eigh(np.array([[1.0,np.nan],[np.nan,1.0]]))

def test_jacobi_sweep_limit(rng):
    a = rng.standard_normal((6,6))
    with pytest.raises(EigenFailure):
        jacobi_eigh(a + a.T,max_sweeps=0)

# least squares bootstrap

def test_regression_window_from_measurements():
    v = np.array([1.0,1.01,1.03])
    p = np.array([[0.0,0.1],[0.1,0.1],[0.1,0.3]])
    q = np.zeros((3,2))
    win = build_regression_window(v,p,q,timestamps=[0,1,2],sample_period=1)
    assert np.allclose(win.gamma,[0.01,0.02])
    assert np.allclose(win.h_rows,[[0.1,0,0,0],[0,0.2,0,0]])
    assert np.array_equal(win.timestamps,[1,2])
    with pytest.raises(ValueError):
        build_regression_window(v,p,q,timestamps=[0,1,3],sample_period=1)
    assert excitation_rank(win) == (2,4)
    assert excitation_rank(win,[0,1]) == (2,2)

def test_ls_orthonormal():
    H = np.linalg.qr(np.random.default_rng(3).standard_normal((6,6)))[0]
    gamma = np.arange(6.0)
    state = ls_bootstrap(RegressionWindow(gamma,H),lambda_reg=0.0)
    assert np.allclose(state.x_hat,H.T @ gamma,atol=1e-12)

def test_ls_zero_target(rng):
    win,_ = _window(rng)
    state = ls_bootstrap(replace(win,gamma=np.zeros(win.m)),lambda_reg=1e-3)
    assert np.allclose(state.x_hat,0)

def test_ls_normal_equations(rng):
    win,_ = _window(rng,noise=0.1)
    state = ls_bootstrap(win,lambda_reg=1e-6)
    H = win.h_rows
    ref = np.linalg.solve(H.T @ H + 1e-6*np.eye(6),H.T @ win.gamma)
    assert np.allclose(state.x_hat,ref,rtol=1e-9)
    assert np.allclose(state.r_mat,H.T @ H + 1e-6*np.eye(6))
    assert np.allclose(state.p_cov,np.linalg.inv(H.T @ H))

def test_ls_singular_without_regularization():
    H = np.zeros((10,4))
    H[:,0] = 1.0
    with pytest.raises(SingularSystem):
        ls_bootstrap(RegressionWindow(np.ones(10),H),lambda_reg=0.0)

def test_ls_short_window_warns(rng):
    win,_ = _window(rng,m=4)
    with pytest.warns(UserWarning):
        ls_bootstrap(win,lambda_reg=1e-3)

def test_column_permutation(rng):
    win,_ = _window(rng,noise=0.01)
    perm = rng.permutation(6)
    a = ls_bootstrap(win)
    b = ls_bootstrap(RegressionWindow(win.gamma,win.h_rows[:,perm]))
    assert np.allclose(a.x_hat[perm],b.x_hat,rtol=1e-8)

# RLS-F

def test_rls_f_zero_innovation(rng):
    win,_ = _window(rng,noise=0.05)
    state = ls_bootstrap(win)
    h = rng.standard_normal(6)
    new = rls_f_update(state,(h @ state.x_hat,h),mu=0.98)
    assert np.allclose(new.x_hat,state.x_hat,atol=1e-14)

def test_rls_f_zero_regressor(rng):
    win,_ = _window(rng,noise=0.05)
    state = ls_bootstrap(win)
    new = rls_f_update(state,(0.3,np.zeros(6)),mu=0.9)
    assert np.array_equal(new.x_hat,state.x_hat)
    assert np.allclose(new.p_cov,state.p_cov/0.9)

def test_rls_f_equals_batch(rng):
    for _ in range(100):
        win,_ = _window(rng,m=60,noise=0.05)
        head = RegressionWindow(win.gamma[:20],win.h_rows[:20])
        tail = RegressionWindow(win.gamma[20:],win.h_rows[20:])
        state = run_rls(ls_bootstrap(head,lambda_reg=0.0),tail,'rls_f',mu=1.0)
        batch = ls_bootstrap(win,lambda_reg=0.0)
        assert np.allclose(state.x_hat,batch.x_hat,rtol=1e-8,atol=1e-12)
        assert np.allclose(state.p_cov,batch.p_cov,rtol=1e-8,atol=1e-14)

def test_rls_f_stacked_nodes(rng):
    H = rng.standard_normal((50,4))
    X = rng.standard_normal((4,3))
    win = RegressionWindow(H @ X,H)
    state = ls_bootstrap(RegressionWindow(win.gamma[:10],H[:10]),lambda_reg=0.0)
    state = run_rls(state,RegressionWindow(win.gamma[10:],H[10:]),'rls_f',mu=1.0)
    assert state.x_hat.shape == (4,3)
    assert np.allclose(state.x_hat,X,atol=1e-8)
    assert state.residual_var.shape == (3,)

def test_rls_f_windup_raises(rng):
    win,_ = _window(rng)
    state = ls_bootstrap(win)
    with pytest.raises(NumericalBlowup):
        for _ in range(5000):
            state = rls_f_update(state,(0.0,np.zeros(6)),mu=0.9,blowup_cap=1e6)

# RLS-SF

def test_rls_sf_degenerate_case_is_plain_rls(rng):
    win,_ = _window(rng,noise=0.05)
    state = ls_bootstrap(win,mu=1.0)
    h = rng.standard_normal(6)
    sample = (0.7,h)
    sf = rls_sf_update(state,sample,mu_vec=1.0,update_tau=False)
    f = rls_f_update(state,sample,mu=1.0)
    assert np.allclose(sf.x_hat,f.x_hat,rtol=1e-10)
    assert np.allclose(sf.p_cov,f.p_cov,atol=1e-10)

def test_rls_sf_tau_bounds(rng):
    win,_ = _window(rng,m=8,noise=0.05)
    state = ls_bootstrap(win,lambda_reg=1e-6,mu=1.0,tau_min=0.01,tau_max=100.0)
    for k in range(200):
        h = rng.standard_normal(6)*(1e-3 if k % 2 else 1.0)
        state = rls_sf_update(state,(rng.standard_normal(),h))
        assert np.all(state.tau >= 0.01) and np.all(state.tau <= 100.0)
        assert np.min(np.linalg.eigvalsh(state.p_cov)) > -1e-10
        assert np.allclose(state.p_cov,state.p_cov.T)

def test_rls_sf_large_eigenvalue_reset(rng):
    win,_ = _window(rng,noise=0.05)
    state = ls_bootstrap(win,tau_min=0.01,tau_max=100.0)
    state = replace(state,p_cov=1e4*np.eye(6),tau=np.full(6,1e3))
    new = rls_sf_update(state,(0.0,np.zeros(6)))
    # lambda > tau_max: the rule sends tau to 1
    assert np.allclose(new.tau,1.0)
    assert np.allclose(new.p_cov,np.eye(6))

def test_rls_sf_bounded_under_stationary_stream(rng):
    win,_ = _window(rng,noise=0.05)
    h = rng.standard_normal(6)
    sf = ls_bootstrap(win,mu=1.0)
    f = ls_bootstrap(win,mu=0.98)
    trace_cap = 100.0*6
    for _ in range(10000):
        sf = rls_sf_update(sf,(0.1,h))
        assert np.trace(sf.p_cov) <= trace_cap + 1e-9
    with pytest.raises(NumericalBlowup):
        for _ in range(10000):
            f = rls_f_update(f,(0.1,h),blowup_cap=1e8)

def test_rls_sf_tau_rules_differ(rng):
    win,_ = _window(rng,noise=0.05)
    state = ls_bootstrap(win)
    h = rng.standard_normal(6)
    printed = rls_sf_update(state,(0.1,h),tau_rule='printed')
    eigen = rls_sf_update(state,(0.1,h),tau_rule='eigen')
    assert not np.allclose(printed.tau,eigen.tau)
    with pytest.raises(ValueError):
        rls_sf_update(state,(0.1,h),tau_rule='other')

def test_run_rls_unknown_method(rng):
    win,_ = _window(rng)
    with pytest.raises(ValueError):
        run_rls(ls_bootstrap(win),win,'kalman')

# intervals

def test_gaussian_quantile():
    assert gaussian_quantile(0.99) == pytest.approx(2.5758293035489,rel=1e-10)
    with pytest.raises(ValueError):
        gaussian_quantile(1.0)

def test_interval_zero_covariance(rng):
    win,_ = _window(rng,noise=0.05)
    state = replace(ls_bootstrap(win),p_cov=np.zeros((6,6)))
    est = interval_from_covariance(state)
    assert np.all(est.dkp == 0) and np.all(est.dkq == 0)
    assert np.allclose(est.kp_hat[0],state.x_hat[:3])
    assert np.allclose(est.kq_hat[0],state.x_hat[3:])

def test_interval_unit_variance(rng):
    win,_ = _window(rng,noise=0.05)
    state = replace(ls_bootstrap(win),p_cov=np.eye(6),residual_var=np.array(1.0))
    est = interval_from_covariance(state,alpha=0.99,nodes=[4],computed_at=30.0)
    assert np.allclose(est.dkp,2.5758293035489)
    assert est.row(4) == 0
    with pytest.raises(KeyError):
        est.row(1)

def test_interval_coverage(rng):
    # LS on a known linear plant with Gaussian noise
    x = np.array([0.02,0.01,-0.005,0.004])
    hits,trials = 0,1000
    for _ in range(trials):
        win,_ = _window(rng,m=60,n=4,noise=1e-3,x=x)
        est = interval_from_covariance(ls_bootstrap(win,lambda_reg=0.0),alpha=0.99)
        hits += abs(est.kp_hat[0,0] - x[0]) <= est.dkp[0,0]
    assert 0.97 <= hits/trials <= 1.0
