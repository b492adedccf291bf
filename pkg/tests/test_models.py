import math

import numpy as np
import pytest
from scipy.optimize import minimize

import hota
from hota import DatasetError, ValidationError
from hota._numdiff import gradient_highorder
from hota.models import (
    Transform,
    loglik_censreg,
    loglik_linkage,
    loglik_logistic,
    score_censreg,
    score_linkage,
    score_logistic,
)

from conftest import make_censreg_data, make_logistic_data, write_logistic_csv


# --- transforms ---------------------------------------------------------

def test_transform_round_trips():
    tr = Transform(("identity", "log", "logit"))
    nat = np.array([-3.7, 0.82, 0.31])
    back = tr.to_natural(tr.to_working(nat))
    assert np.allclose(back, nat, rtol=0, atol=1e-12)


def test_transform_bounds_and_domain():
    tr = Transform(("identity", "log", "logit"))
    assert tr.bounds(0) == (-np.inf, np.inf)
    assert tr.bounds(1) == (0.0, np.inf)
    assert tr.bounds(2) == (0.0, 1.0)
    assert tr.in_domain(np.array([0.0, 1.0, 0.5]))
    assert not tr.in_domain(np.array([0.0, -1.0, 0.5]))
    assert not tr.in_domain(np.array([0.0, 1.0, 1.0]))


# --- log-likelihoods against direct formulas ----------------------------

def test_linkage_loglik_direct_value(linkage_paper):
    val = loglik_linkage(0.5, linkage_paper)
    y1, y2, y3, y4 = linkage_paper.counts
    hand = y1 * math.log(2.5) + (y2 + y3) * math.log(0.5) + y4 * math.log(0.5)
    assert abs(val - hand) < 1e-12


def test_linkage_loglik_rejects_boundary(linkage_paper):
    for bad in (0.0, 1.0, -0.2, 1.3):
        with pytest.raises(ValidationError):
            loglik_linkage(bad, linkage_paper)


def test_censreg_loglik_uncensored_is_gaussian():
    rows = tuple((float(v), 1.0, False) for v in (0.3, -0.1, 0.5))
    data = hota.CensoredRegData(rows=rows)
    theta = np.array([0.1, 0.05, -0.3])
    sigma = math.exp(-0.3)
    hand = sum(
        -math.log(sigma) - (v - 0.1 - 0.05 * 1.0) ** 2 / (2 * sigma**2)
        for v, _, _ in rows
    )
    assert abs(loglik_censreg(theta, data) - hand) < 1e-10


def test_censreg_loglik_censored_term_is_log_survival():
    from scipy.stats import norm

    rows = ((0.0, 1.0, False), (1.2, 1.0, True))
    data = hota.CensoredRegData(rows=rows)
    theta = np.array([0.0, 0.0, 0.0])
    hand = -0.0 - 0.0 + norm.logsf(1.2)
    assert abs(loglik_censreg(theta, data) - hand) < 1e-10


def test_logistic_loglik_direct_value(syn_logistic):
    beta = np.linspace(-0.4, 0.4, 7)
    eta = syn_logistic.X @ beta
    hand = float(syn_logistic.y @ eta - np.sum(np.logaddexp(0.0, eta)))
    assert abs(loglik_logistic(beta, syn_logistic) - hand) < 1e-9


# --- analytic scores against high-order finite differences --------------

def test_linkage_score_matches_fd(linkage_paper):
    for t in (0.3, 0.7, 0.9):
        fd = gradient_highorder(lambda v: loglik_linkage(v[0], linkage_paper),
                                np.array([t]))[0]
        assert math.isclose(score_linkage(t, linkage_paper), fd, rel_tol=1e-5)


def test_censreg_score_matches_fd(motorette):
    for theta in ([-6.0, 4.3, -1.35], [-5.0, 3.8, -1.0], [-7.2, 4.9, -1.7]):
        theta = np.array(theta)
        fd = gradient_highorder(lambda v: loglik_censreg(v, motorette), theta)
        an = score_censreg(theta, motorette)
        assert np.allclose(an, fd, rtol=1e-5, atol=1e-7)


def test_logistic_score_matches_fd(syn_logistic):
    for seed in (0, 1):
        beta = np.random.default_rng(seed).normal(scale=0.5, size=7)
        fd = gradient_highorder(lambda v: loglik_logistic(v, syn_logistic), beta)
        an = score_logistic(beta, syn_logistic)
        assert np.allclose(an, fd, rtol=1e-5, atol=1e-7)


# --- maximum likelihood cross-checks ------------------------------------

def test_linkage_mle_matches_scalar_root(linkage_paper):
    """The score has a closed-form positive root; bisection must agree with
    both that root and the full optimizer."""
    y1, y2, y3, y4 = linkage_paper.counts
    # score zero <=> quadratic (y1+y2+y3+y4) t^2 - (y1 - 2(y2+y3) + y4) t/... ;
    # solved directly for these counts:
    root = (7.0 + math.sqrt(849.0)) / 40.0
    lo, hi = 0.5, 0.99
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if score_linkage(mid, linkage_paper) > 0:
            lo = mid
        else:
            hi = mid
    assert abs(0.5 * (lo + hi) - root) < 1e-10
    fit = hota.fit_mle(hota.linkage_model(linkage_paper))
    assert abs(fit.theta_hat_natural[0] - root) < 1e-8


def test_censreg_mle_agrees_with_second_optimizer(motorette):
    model = hota.censreg_model(motorette)
    fit = hota.fit_mle(model)
    res = minimize(
        lambda th: -loglik_censreg(th, motorette),
        np.array([-5.0, 3.8, -1.0]),
        method="Nelder-Mead",
        options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 20000, "maxfev": 20000},
    )
    assert abs(fit.loglik_max - (-res.fun)) < 1e-6
    assert np.allclose(fit.theta_hat_natural, res.x, atol=1e-4)


def test_logistic_mle_sign_symmetry(syn_logistic):
    flipped = hota.LogisticData(X=syn_logistic.X, y=1 - syn_logistic.y)
    fit_a = hota.fit_mle(hota.logistic_model(syn_logistic))
    fit_b = hota.fit_mle(hota.logistic_model(flipped))
    assert np.allclose(fit_a.theta_hat_natural, -fit_b.theta_hat_natural, atol=1e-6)
    assert abs(fit_a.loglik_max - fit_b.loglik_max) < 1e-8
    assert np.allclose(fit_a.se, fit_b.se, rtol=1e-6)


# --- model spec plumbing -------------------------------------------------

def test_param_index_accepts_names_and_digits(syn_censreg):
    model = hota.censreg_model(syn_censreg)
    assert model.param_index("tau") == 2
    assert model.param_index("0") == 0
    assert model.param_index(1) == 1
    with pytest.raises(ValidationError):
        model.param_index("sigma")
    with pytest.raises(ValidationError):
        model.param_index("7")


def test_logistic_data_requires_intercept_column():
    X = np.ones((12, 7))
    X[:, 1:] = np.random.default_rng(0).normal(size=(12, 6))
    y = np.repeat([0, 1], 6)
    hota.LogisticData(X=X, y=y)  # fine
    X_bad = X.copy()
    X_bad[3, 0] = 2.0
    with pytest.raises(DatasetError):
        hota.LogisticData(X=X_bad, y=y)
    with pytest.raises(DatasetError):
        hota.LogisticData(X=X, y=np.full(12, 2))


def test_linkage_data_validation():
    with pytest.raises(DatasetError):
        hota.LinkageData(counts=(14, -1, 1, 5))
    with pytest.raises(DatasetError):
        hota.LinkageData(counts=(14, 0, 1))
    assert hota.LinkageData(counts=(14, 0, 1, 5)).n == 20


def test_censreg_data_rejects_all_censored():
    rows = tuple((1.0, 2.0, True) for _ in range(5))
    with pytest.raises(DatasetError):
        hota.CensoredRegData(rows=rows)


# --- CSV loading ---------------------------------------------------------

def test_load_linkage_csv(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("y1,y2,y3,y4\n14,0,1,5\n")
    data = hota.load_dataset(p, "linkage")
    assert data.counts == (14, 0, 1, 5)


def test_load_linkage_rejects_multiple_rows(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("y1,y2,y3,y4\n14,0,1,5\n3,2,1,0\n")
    with pytest.raises(DatasetError):
        hota.load_dataset(p, "linkage")


def test_load_linkage_rejects_fractional_counts(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("y1,y2,y3,y4\n14.5,0,1,5\n")
    with pytest.raises(DatasetError):
        hota.load_dataset(p, "linkage")


def test_load_censreg_csv_round_trip(tmp_path):
    data = make_censreg_data()
    p = tmp_path / "c.csv"
    with open(p, "w") as fh:
        fh.write("time,x,censored\n")
        for t, x, c in data.rows:
            fh.write(f"{t:.12g},{x:.12g},{int(c)}\n")
    loaded = hota.load_dataset(p, "censreg")
    assert loaded.m == data.m
    assert np.allclose([r[0] for r in loaded.rows], [r[0] for r in data.rows])


def test_load_censreg_rejects_bad_flag(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("time,x,censored\n1.0,2.0,0\n1.1,2.1,2\n")
    with pytest.raises(DatasetError):
        hota.load_dataset(p, "censreg")


def test_load_csv_error_names_line_and_column(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("time,x,censored\n1.0,2.0,0\nnope,2.1,0\n")
    with pytest.raises(DatasetError) as exc:
        hota.load_dataset(p, "censreg")
    assert ":3:" in str(exc.value)  # file:line prefix points at the bad row
    assert "'time'" in str(exc.value)
    assert "nope" in str(exc.value)


def test_load_missing_column(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("time,censored\n1.0,0\n")
    with pytest.raises(DatasetError):
        hota.load_dataset(p, "censreg")


def test_load_logistic_csv(tmp_path):
    data = make_logistic_data(n=30)
    p = tmp_path / "u.csv"
    write_logistic_csv(p, data)
    loaded = hota.load_dataset(p, "logistic")
    assert loaded.X.shape == (30, 7)
    assert np.allclose(loaded.X, data.X, rtol=1e-10)
    assert np.array_equal(loaded.y, data.y)


def test_load_logistic_rejects_nonbinary_response(tmp_path):
    data = make_logistic_data(n=10)
    p = tmp_path / "u.csv"
    write_logistic_csv(p, data)
    lines = p.read_text().splitlines()
    lines[1] = lines[1].rsplit(",", 1)[0] + ",3"
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(DatasetError):
        hota.load_dataset(p, "logistic")


def test_load_empty_and_comment_only_files(tmp_path):
    p = tmp_path / "e.csv"
    p.write_text("")
    with pytest.raises(DatasetError):
        hota.load_dataset(p, "linkage")
    p.write_text("# a comment\n")
    with pytest.raises(DatasetError):
        hota.load_dataset(p, "linkage")


def test_loader_skips_leading_comment(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text('# config: {"seed": 1}\ny1,y2,y3,y4\n14,0,1,5\n')
    assert hota.load_dataset(p, "linkage").counts == (14, 0, 1, 5)


def test_missing_file_error():
    with pytest.raises(DatasetError):
        hota.load_dataset("/nonexistent/nowhere.csv", "linkage")


# --- fixture resolution --------------------------------------------------

def test_resolve_bundled_fixture():
    data = hota.resolve_dataset("linkage-paper", "linkage")
    assert data.counts == (14, 0, 1, 5)


def test_resolve_fixture_schema_mismatch():
    with pytest.raises(ValidationError):
        hota.resolve_dataset("linkage-paper", "censreg")


def test_unbundled_fixture_explains_how_to_supply():
    with pytest.raises(DatasetError) as exc:
        hota.resolve_dataset("urine", "logistic")
    msg = str(exc.value)
    assert "--data" in msg
    assert "gravity" in msg
