import numpy as np
import pytest
from scipy import stats

from itebench.dgp import (
    CovariateDesign,
    Dataset,
    ObservedData,
    OutcomeModel,
    PropensityRegime,
    ScenarioConfig,
    beta24_cdf,
    checkerboard_cell,
    gen_covariates,
    gen_dataset,
    link_f,
    noise_scale,
    propensity_eval,
    scenario_from_kv,
    scenario_id,
    scenario_to_kv,
    surface_eval,
)
from itebench.rng import substream


def test_link_f_values():
    assert link_f(0.5) == pytest.approx(1.0)
    assert link_f(1.0) == pytest.approx(1.9950547536867307, abs=1e-15)
    assert link_f(0.0) == pytest.approx(0.004945246313269549, abs=1e-15)
    # symmetry about the midpoint: f(1/2 + d) + f(1/2 - d) = 2
    d = np.linspace(0.0, 0.5, 11)
    assert np.allclose(link_f(0.5 + d) + link_f(0.5 - d), 2.0)


def test_beta24_cdf_frozen_values():
    assert beta24_cdf(np.array([0.5]))[0] == pytest.approx(0.8125, abs=1e-15)
    assert beta24_cdf(np.array([0.25]))[0] == pytest.approx(0.3671875, abs=1e-15)
    assert beta24_cdf(np.array([0.0]))[0] == 0.0
    assert beta24_cdf(np.array([1.0]))[0] == pytest.approx(1.0, abs=1e-12)


def test_beta24_cdf_matches_reference_distribution():
    grid = np.linspace(0.0, 1.0, 101)
    assert np.allclose(beta24_cdf(grid), stats.beta(2, 4).cdf(grid), atol=1e-12)


def test_beta24_cdf_domain_error():
    with pytest.raises(ValueError):
        beta24_cdf(np.array([-0.01]))
    with pytest.raises(ValueError):
        beta24_cdf(np.array([1.01]))


def test_propensity_constant():
    x = np.zeros((5, 2))
    e = propensity_eval(PropensityRegime(kind="constant", p=0.9), x)
    assert np.all(e == 0.9)


def test_propensity_beta24_range_and_mean():
    rng = substream(3, "prop-mean")
    x = rng.uniform(size=(200000, 2))
    e = propensity_eval(PropensityRegime(kind="beta24"), x)
    assert e.min() >= 0.25 - 1e-12 and e.max() <= 0.5 + 1e-12
    # E[(1 + F(U)) / 4] with U uniform and F the Beta(2,4) CDF is
    # (1 + (1 - E[Beta(2,4)])) / 4 = (1 + 2/3) / 4 = 5/12.
    assert e.mean() == pytest.approx(5.0 / 12.0, abs=0.002)
    corners = np.array([[0.0, 0.3], [1.0, 0.7]])
    assert propensity_eval(PropensityRegime(kind="beta24"), corners) == pytest.approx([0.25, 0.5])


def test_propensity_checkerboard_parity():
    x = np.array([[0.05, 0.05], [0.15, 0.05], [0.95, 0.95], [1.0, 1.0]])
    e = propensity_eval(PropensityRegime(kind="checkerboard"), x)
    # even-parity cells treat at 0.95; the boundary folds into cell 9
    assert list(e) == [0.95, 0.05, 0.95, 0.95]


def test_checkerboard_cell_folds_top_edge():
    i, j = checkerboard_cell(np.array([[1.0, 0.999], [0.0, 0.0]]))
    assert list(i) == [9, 0]
    assert list(j) == [9, 0]


def test_covariates_independent_uniform():
    x = gen_covariates(CovariateDesign(), 50000, substream(1, "cov-ind"))
    assert x.shape == (50000, 2)
    assert abs(np.corrcoef(x[:, 0], x[:, 1])[0, 1]) < 0.02
    assert stats.kstest(x[:, 0], "uniform").pvalue > 0.01
    assert stats.kstest(x[:, 1], "uniform").pvalue > 0.01


def test_covariates_correlated_copula():
    x = gen_covariates(CovariateDesign(kind="correlated", rho_x=0.9), 200000, substream(1, "cov-cor"))
    # Gaussian copula with covariance 0.9 between the latent normals; on
    # uniforms the Pearson correlation is (6/pi) asin(0.45) ~ 0.8915.
    assert np.corrcoef(x[:, 0], x[:, 1])[0, 1] == pytest.approx(6.0 / np.pi * np.arcsin(0.45), abs=0.01)
    assert stats.kstest(x[:, 0], "uniform").pvalue > 0.01


def test_noise_scale():
    x = np.array([[0.5, 0.1], [np.e ** -2.0, 0.9]])
    assert np.all(noise_scale(OutcomeModel(), x) == 1.0)
    het = noise_scale(OutcomeModel(noise="heteroscedastic"), x)
    assert het == pytest.approx([np.log(2.0), 2.0])
    floor = noise_scale(OutcomeModel(noise="heteroscedastic"), np.array([[0.0, 0.0]]))
    assert floor[0] == pytest.approx(-np.log(1e-12))


def test_surface_eval():
    cfg = ScenarioConfig()
    x = np.array([[0.5, 0.5], [1.0, 1.0]])
    mu1, mu0 = surface_eval(cfg, x)
    assert np.all(mu0 == 0.0)
    assert mu1 == pytest.approx([1.0, link_f(1.0) ** 2])
    z1, z0 = surface_eval(ScenarioConfig(outcome=OutcomeModel(signal="zero")), x)
    assert np.all(z1 == 0.0) and np.all(z0 == 0.0)


def test_gen_dataset_deterministic():
    cfg = ScenarioConfig(n_train=200, seed=11)
    a = gen_dataset(cfg)
    b = gen_dataset(cfg)
    for name in ("x", "y1", "y0", "t", "y_obs"):
        assert np.array_equal(getattr(a, name), getattr(b, name))
    c = gen_dataset(cfg.with_seed(12))
    assert not np.array_equal(a.y_obs, c.y_obs)


def test_gen_dataset_observed_identity():
    data = gen_dataset(ScenarioConfig(n_train=500, seed=2))
    assert np.array_equal(data.y_obs, np.where(data.t == 1, data.y1, data.y0))
    assert np.array_equal(data.delta, data.y1 - data.y0)
    obs = data.observed()
    assert np.array_equal(obs.y, data.y_obs)
    assert len(obs) == 500


def test_perfect_negative_correlation_is_exact_sign_flip():
    cfg = ScenarioConfig(outcome=OutcomeModel(rho=-1.0), n_train=400, seed=7)
    data = gen_dataset(cfg)
    mu1, mu0 = surface_eval(cfg, data.x)
    assert np.allclose((data.y1 - mu1) + (data.y0 - mu0), 0.0, atol=1e-12)


def test_error_marginals_standard_normal_for_every_rho():
    for rho in (-1.0, -0.3, 0.0, 0.8, 1.0):
        cfg = ScenarioConfig(outcome=OutcomeModel(rho=rho), n_train=40000, seed=5)
        data = gen_dataset(cfg)
        mu1, _ = surface_eval(cfg, data.x)
        eps1 = data.y1 - mu1
        assert eps1.std() == pytest.approx(1.0, abs=0.02)
        assert abs(eps1.mean()) < 0.02


def test_checkerboard_noise_inflated_where_arm_is_scarce():
    cfg = ScenarioConfig(
        propensity=PropensityRegime(kind="checkerboard"),
        outcome=OutcomeModel(noise="homoscedastic"),
        n_train=40000,
        seed=9,
    )
    data = gen_dataset(cfg)
    i, j = checkerboard_cell(data.x)
    even = (i + j) % 2 == 0
    # even cells treat at 0.95, so controls are scarce and carry the
    # inflated scale; on odd cells the roles flip
    assert data.y0[even].std() == pytest.approx(10.0, rel=0.05)
    assert data.y1[even].std() > 1.0  # signal plus unit noise
    assert data.y0[~even].std() == pytest.approx(1.0, rel=0.05)
    assert data.y1[~even].std() == pytest.approx(np.sqrt(100.0 + np.var(link_f(data.x[~even, 0]) * link_f(data.x[~even, 1]))), rel=0.05)


def test_scenario_id_strings():
    assert scenario_id(ScenarioConfig()) == "beta24-homo-ind-rho0"
    cfg = ScenarioConfig(
        covariates=CovariateDesign(),
        outcome=OutcomeModel(rho=-1.0),
        propensity=PropensityRegime(kind="constant", p=0.9),
    )
    assert scenario_id(cfg) == "const0.9-homo-ind-rho-1"
    checker = ScenarioConfig(
        propensity=PropensityRegime(kind="checkerboard"),
        outcome=OutcomeModel(rho=-1.0),
    )
    assert scenario_id(checker) == "checker-rho-1"
    flat = ScenarioConfig(outcome=OutcomeModel(signal="zero"))
    assert "flat" in scenario_id(flat)


def test_scenario_kv_round_trip():
    cfg = ScenarioConfig(
        covariates=CovariateDesign(kind="correlated", rho_x=0.7),
        outcome=OutcomeModel(noise="heteroscedastic", rho=-0.5, signal="zero"),
        propensity=PropensityRegime(kind="constant", p=0.25),
        n_train=321,
        n_test=77,
        seed=99,
    )
    assert scenario_from_kv(scenario_to_kv(cfg)) == cfg
    assert scenario_from_kv(scenario_to_kv(ScenarioConfig())) == ScenarioConfig()


def test_scenario_kv_ignores_comments_and_blank_lines():
    text = "# comment\n\npropensity=constant\np=0.4\n"
    cfg = scenario_from_kv(text)
    assert cfg.propensity == PropensityRegime(kind="constant", p=0.4)


def test_scenario_kv_rejects_unknown_keys_and_garbage():
    with pytest.raises(ValueError):
        scenario_from_kv("frobnicate=1\n")
    with pytest.raises(ValueError):
        scenario_from_kv("no equals sign here\n")


def test_config_validation():
    with pytest.raises(ValueError):
        CovariateDesign(kind="clustered")
    with pytest.raises(ValueError):
        CovariateDesign(rho_x=1.0)
    with pytest.raises(ValueError):
        OutcomeModel(noise="cauchy")
    with pytest.raises(ValueError):
        OutcomeModel(rho=1.5)
    with pytest.raises(ValueError):
        OutcomeModel(signal="linear")
    with pytest.raises(ValueError):
        PropensityRegime(kind="logit")
    with pytest.raises(ValueError):
        PropensityRegime(kind="constant", p=0.0)
    with pytest.raises(ValueError):
        ScenarioConfig(n_train=0)
    with pytest.raises(ValueError):
        ObservedData(x=np.zeros((3, 2)), t=np.zeros(3), y=np.zeros(4))
