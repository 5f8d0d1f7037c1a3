import math

import numpy as np
import pytest

from aecal.errors import DomainError, PreconditionError
from aecal.inference import (
    DIM, ChainState, PriorSpec, RunningCovariance, SensorPosterior, am_update_cov,
    chain_rng, draw_indices, effective_sample_size, gaussian_loglik, initial_proposal_cov,
    log_prior, loglik_intervals, mh_step, posterior_predictive, profile_gain, run_chain,
)
from aecal.physics import STEEL, TITANIUM, WaveformModel, interval_model

DT = 1 / 12.5e6
SD = 2.4 ** 2 / 4
TRUTH = np.array([1.31, 0.61, 350.0, 20.0])


class GaussianTarget:
    """Correlated 4-D Gaussian, independent of sigma_t2 apart from its prior."""

    def __init__(self, mean, cov, prior):
        self.mean = np.asarray(mean, dtype=float)
        self.cov = np.asarray(cov, dtype=float)
        self.prec = np.linalg.inv(self.cov)
        self.prior = prior

    def log_posterior(self, x, sigma_t2):
        lp = log_prior(x, sigma_t2, self.prior)
        if lp == -math.inf:
            return lp
        r = np.asarray(x) - self.mean
        return lp - 0.5 * r @ self.prec @ r


class TwoLevelTarget:
    """Density 1 on x0 < 0 and 3 on x0 >= 0 (times the sigma_t2 prior)."""

    def __init__(self, prior):
        self.prior = prior

    def log_posterior(self, x, sigma_t2):
        lp = log_prior(x, sigma_t2, self.prior)
        if lp == -math.inf:
            return lp
        return lp + (math.log(3.0) if x[0] >= 0 else 0.0)


WIDE = PriorSpec(v0=(-10, 10), a=(-10, 10), omega_s=(-10, 10), epsilon=(-10, 10))


def gaussian_case():
    sd = np.array([1.0, 2.0, 0.5, 1.5])
    corr = np.full((4, 4), 0.6) + 0.4 * np.eye(4)
    return np.array([1.0, -1.0, 0.5, 2.0]), corr * np.outer(sd, sd)


# -- priors and likelihoods ---------------------------------------------------

def test_prior_spec_validation():
    with pytest.raises(DomainError):
        PriorSpec(v0=(1.5, 1.0))
    with pytest.raises(DomainError):
        PriorSpec(sigma_t2_var=0.0)


def test_normalize_roundtrip():
    spec = PriorSpec()
    np.testing.assert_allclose(spec.normalize(spec.lower), 0)
    np.testing.assert_allclose(spec.normalize(spec.upper), 1)
    np.testing.assert_allclose(spec.denormalize(spec.normalize(TRUTH)), TRUTH, rtol=1e-15)


def test_log_prior_values():
    spec = PriorSpec()
    inside = log_prior(TRUTH, 1e-10, spec)
    vol = 0.5 * 0.4 * 400 * 40
    assert inside == pytest.approx(-math.log(vol) + spec.log_sigma_t2(1e-10))
    assert log_prior([1.6, 0.61, 350, 20], 1e-10, spec) == -math.inf
    assert log_prior(TRUTH, 0.0, spec) == -math.inf
    assert log_prior(TRUTH, -1e-10, spec) == -math.inf
    # bounds are inclusive
    assert log_prior(spec.lower, 1e-10, spec) > -math.inf


def test_sigma_t2_prior_integrates_to_one():
    from scipy import integrate
    spec = PriorSpec()
    total = integrate.quad(lambda s: math.exp(spec.log_sigma_t2(s)), 0, 2e-9, points=[1e-10], limit=200)[0]
    assert total == pytest.approx(1.0, rel=1e-6)


def test_sigma_t2_samples_positive(rng):
    spec = PriorSpec(sigma_t2_mean=1e-10, sigma_t2_var=4e-20)
    draws = np.array([spec.sample_sigma_t2(rng) for _ in range(2000)])
    assert np.all(draws > 0)


def test_interval_loglik_exact_fit():
    iv = interval_model(1.31, 0.61, 2)
    for s2 in (1e-10, 1e-8):
        assert loglik_intervals(iv, TRUTH, s2) == pytest.approx(-math.log(2 * math.pi * s2))


def test_interval_loglik_one_sigma_offset():
    s2 = 1e-10
    iv = interval_model(1.31, 0.61, 2) + np.array([math.sqrt(s2), 0.0])
    assert loglik_intervals(iv, TRUTH, s2) == pytest.approx(-math.log(2 * math.pi * s2) - 0.5)


def test_interval_loglik_errors():
    with pytest.raises(DomainError):
        loglik_intervals([0.1, 0.06], TRUTH, 0.0)
    with pytest.raises(DomainError):
        loglik_intervals([], TRUTH, 1e-10)


def test_null_model_loglik(rng):
    d = rng.normal(size=500)
    assert profile_gain(d, np.zeros(500)) == 0.0
    expected = -0.5 * np.sum(d ** 2) / 2.0 - 250 * math.log(2 * math.pi * 2.0)
    assert gaussian_loglik(d, np.zeros(500), 2.0) == pytest.approx(expected)


def test_profile_gain_recovers_scale(rng):
    u = rng.normal(size=300)
    assert profile_gain(7.5 * u, u) == pytest.approx(7.5)


@pytest.fixture(scope="module")
def long_model(geom):
    idx = geom.index_of(16)
    arr = np.array([2e-3, 12e-3, 20e-3])
    # three long windows, 10^5 samples in total
    return WaveformModel(geom, TITANIUM, STEEL, idx, arr, arr - 20e-6, 33334, DT)


def test_normalized_residual_at_truth(long_model):
    rng = np.random.default_rng(99)
    unit = long_model.unit_waveforms(*TRUTH)
    c = 1e13
    noise_var = 0.01 * np.mean((c * unit) ** 2)
    obs = c * unit + rng.normal(0, math.sqrt(noise_var), unit.shape)
    post = SensorPosterior(long_model, obs, noise_var, interval_model(1.31, 0.61, 3), align=False)
    pred, gain, _ = post.fit(TRUTH)
    assert obs.size == 100002
    assert gain == pytest.approx(c, rel=1e-3)
    chi2 = np.mean((obs - pred) ** 2) / noise_var
    assert chi2 == pytest.approx(1.0, abs=0.02)


def test_posterior_shape_check(long_model):
    with pytest.raises(PreconditionError):
        SensorPosterior(long_model, np.zeros((3, 10)), 1.0, [0.1])
    with pytest.raises(DomainError):
        SensorPosterior(long_model, np.zeros((3, 33334)), 0.0, [0.1])


# -- adaptive covariance ------------------------------------------------------

def test_am_cov_identical_rows():
    h = np.tile([0.3, 0.2, 0.9, 0.5], (50, 1))
    np.testing.assert_allclose(am_update_cov(h, 1e-10), SD * 1e-10 * np.eye(4), rtol=1e-9, atol=1e-25)


def test_am_cov_standard_normal():
    h = np.random.default_rng(17).standard_normal((10000, 4))
    out = am_update_cov(h, 1e-10)
    target = SD * (1 + 1e-10) * np.eye(4)
    assert np.all(np.abs(out - target) <= 0.05 * SD)


def test_am_cov_short_history():
    np.testing.assert_array_equal(am_update_cov(np.zeros((1, 4))), initial_proposal_cov())
    np.testing.assert_array_equal(am_update_cov(np.zeros((0, 4))), initial_proposal_cov())


def test_am_cov_spd_even_when_degenerate(rng):
    # rank-one history: only eps0 keeps the matrix positive definite
    h = np.outer(rng.normal(size=200), [1.0, 2.0, -1.0, 0.5])
    out = am_update_cov(h, 1e-10)
    assert np.allclose(out, out.T)
    # eigvalsh is accurate to about eps * ||out||
    slack = 10 * np.finfo(float).eps * np.linalg.norm(out)
    assert np.linalg.eigvalsh(out).min() >= SD * 1e-10 - slack
    np.linalg.cholesky(out)


def test_running_covariance_matches_numpy(rng):
    h = rng.normal(size=(500, 4)) @ rng.normal(size=(4, 4))
    rc = RunningCovariance(4)
    for row in h:
        rc.push(row)
    np.testing.assert_allclose(rc.cov, np.cov(h, rowvar=False), rtol=1e-10)
    np.testing.assert_allclose(rc.proposal(1e-10), am_update_cov(h, 1e-10), rtol=1e-10)
    with pytest.raises(PreconditionError):
        RunningCovariance(4).cov


# -- Metropolis-Hastings ------------------------------------------------------

def _state(target, x, s2=1e-10):
    return ChainState(np.asarray(x, float), s2, target.log_posterior(x, s2), 0, initial_proposal_cov())


def test_identity_proposal_always_accepted():
    mean, cov = gaussian_case()
    t = GaussianTarget(mean, cov, WIDE)
    rng = np.random.default_rng(0)
    state = _state(t, mean + 1.0)
    for _ in range(2000):
        state = mh_step(state, t, rng, proposal=(state.x, state.sigma_t2))
    assert state.accept_count == 2000


def test_out_of_support_always_rejected():
    mean, cov = gaussian_case()
    t = GaussianTarget(mean, cov, WIDE)
    rng = np.random.default_rng(1)
    state = _state(t, mean)
    for bad in ([11.0, 0, 0, 0], [0, 0, 0, -10.5], [0, 0, 0, 0]):
        s2 = -1e-10 if bad == [0, 0, 0, 0] else 1e-10
        for _ in range(200):
            new = mh_step(state, t, rng, proposal=(np.array(bad, float), s2))
            assert new.accept_count == 0
            np.testing.assert_array_equal(new.x, state.x)


def test_two_state_transition_frequencies():
    t = TwoLevelTarget(WIDE)
    rng = np.random.default_rng(2)
    lo, hi = np.array([-1.0, 0, 0, 0]), np.array([1.0, 0, 0, 0])
    n = 20000
    s2 = 1e-10
    # proposing the same sigma_t2 keeps the independence factor at 1
    up = sum(mh_step(_state(t, lo, s2), t, rng, proposal=(hi, s2)).accept_count for _ in range(n))
    down = sum(mh_step(_state(t, hi, s2), t, rng, proposal=(lo, s2)).accept_count for _ in range(n))
    assert up == n
    p = 1 / 3
    assert abs(down / n - p) <= 3 * math.sqrt(p * (1 - p) / n)
    # implied stationary split reproduces the 1:3 density ratio
    assert (up / n) / (down / n) == pytest.approx(3.0, rel=0.05)


def test_gaussian_target_moments():
    mean, cov = gaussian_case()
    t = GaussianTarget(mean, cov, WIDE)
    res = run_chain(t, 100000, 10000, seed=5, x0=np.zeros(4))
    x = res.samples[:, :DIM]
    for i in range(DIM):
        se = x[:, i].std(ddof=1) / math.sqrt(effective_sample_size(x[:, i]))
        assert abs(x[:, i].mean() - mean[i]) <= 2 * se
    emp = np.cov(x, rowvar=False)
    assert np.all(np.abs(emp - cov) <= 0.10 * np.abs(cov))
    assert 0.1 < res.summary.acceptance_rate < 0.5


def test_chain_determinism_and_trace():
    mean, cov = gaussian_case()
    t = GaussianTarget(mean, cov, WIDE)
    a = run_chain(t, 3000, 1000, seed=3, x0=mean, adapt_start=500)
    b = run_chain(t, 3000, 1000, seed=3, x0=mean, adapt_start=500)
    np.testing.assert_array_equal(a.samples, b.samples)
    np.testing.assert_array_equal(a.trace, b.trace)
    assert len(a.trace) == 3001 and len(a.samples) == 2000
    recomputed = [t.log_posterior(s[:DIM], s[DIM]) for s in a.samples[::97]]
    np.testing.assert_allclose(recomputed, a.trace[1001::97], rtol=0, atol=1e-10)


def test_samples_stay_in_support():
    t = TwoLevelTarget(PriorSpec(v0=(-1, 1), a=(-1, 1), omega_s=(-1, 1), epsilon=(-1, 1)))
    res = run_chain(t, 20000, 2000, seed=4, x0=np.zeros(4), init_scale=0.3)
    x = res.samples[:, :DIM]
    assert np.all((x >= -1) & (x <= 1))
    assert np.all(res.samples[:, DIM] > 0)
    assert np.mean(x[:, 0] >= 0) == pytest.approx(0.75, abs=0.05)


def test_run_chain_argument_checks():
    mean, cov = gaussian_case()
    t = GaussianTarget(mean, cov, WIDE)
    with pytest.raises(PreconditionError):
        run_chain(t, 100, 100)
    with pytest.raises(DomainError):
        run_chain(t, 100, 10, x0=np.full(4, 20.0))


def test_chain_rng_streams_differ():
    a = chain_rng(1, 16).random(5)
    assert np.array_equal(a, chain_rng(1, 16).random(5))
    assert not np.array_equal(a, chain_rng(1, 1).random(5))
    assert not np.array_equal(a, chain_rng(1, 16, 1).random(5))


def test_effective_sample_size_white_and_correlated():
    rng = np.random.default_rng(6)
    assert effective_sample_size(rng.normal(size=20000)) == pytest.approx(20000, rel=0.1)
    ar = np.zeros(20000)
    e = rng.normal(size=20000)
    for i in range(1, 20000):
        ar[i] = 0.9 * ar[i - 1] + e[i]
    # AR(1) with phi=0.9 has ESS n (1 - phi) / (1 + phi)
    assert effective_sample_size(ar) == pytest.approx(20000 * 0.1 / 1.9, rel=0.25)


# -- posterior predictive -----------------------------------------------------

@pytest.fixture(scope="module")
def small_posterior(geom):
    idx = geom.index_of(16)
    arr = np.array([2e-3, 165e-3, 265e-3])
    model = WaveformModel(geom, TITANIUM, STEEL, idx, arr, arr - 20e-6, 2500, DT)

    def make(alpha, seed=0):
        clean = 1e13 * model.unit_waveforms(*TRUTH)
        nv = alpha * np.mean(clean ** 2)
        obs = clean + np.random.default_rng(seed).normal(0, math.sqrt(nv), clean.shape)
        return SensorPosterior(model, obs, nv, interval_model(1.31, 0.61, 3), align=False)
    return make


def test_draw_indices():
    np.testing.assert_array_equal(draw_indices(11, 3), [0, 5, 10])
    with pytest.raises(PreconditionError):
        draw_indices(5, 6)


def test_predictive_identical_samples_zero_width(small_posterior):
    post = small_posterior(0.01)
    samples = np.tile(np.r_[TRUTH, 1e-10], (20, 1))
    env = posterior_predictive(samples, post, 10, include_noise=False)
    assert np.all(env.sd == 0)
    lo, hi = env.band(2)
    np.testing.assert_array_equal(lo, hi)
    np.testing.assert_allclose(env.interval_sd, 0, atol=1e-15)


def test_predictive_bands_widen_with_noise(small_posterior):
    rng = np.random.default_rng(8)
    samples = np.c_[TRUTH + rng.normal(0, 1, (40, 4)) * [1e-4, 5e-5, 0.05, 0.05], np.full(40, 1e-10)]
    widths = []
    for alpha in (0.005, 0.05):
        env = posterior_predictive(samples, small_posterior(alpha), 20)
        widths.append(np.mean(env.sd))
        assert env.coverage(2) >= 0.95
    assert widths[1] > widths[0]


def test_predictive_needs_samples(small_posterior):
    with pytest.raises(PreconditionError):
        posterior_predictive(np.empty((0, 5)), small_posterior(0.01), 1)


def test_gain_scale_equivariance(small_posterior):
    post = small_posterior(0.01)
    post.align = True
    lam = 37.0
    scaled = SensorPosterior(post.model, lam * post.observed, lam ** 2 * post.noise_var, post.intervals,
                             align=True)
    x = TRUTH + [2e-4, -1e-4, 0.3, 0.2]
    assert scaled.gain(x) == pytest.approx(lam * post.gain(x), rel=1e-10)
    # the waveform term only shifts by the Gaussian normalizer
    shift = scaled.loglik_waveform(x) - post.loglik_waveform(x)
    assert shift == pytest.approx(-post.observed.size * math.log(lam), rel=1e-9)


def test_interval_loglik_invariant_to_joint_reordering():
    obs = np.array([0.1630, 0.0995])
    model = interval_model(1.31, 0.61, 2)
    assert gaussian_loglik(obs, model, 1e-10) == pytest.approx(
        gaussian_loglik(obs[::-1], model[::-1], 1e-10), rel=1e-15)
