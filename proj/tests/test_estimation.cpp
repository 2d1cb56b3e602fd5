#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "piecehaz/datagen.hpp"
#include "piecehaz/errors.hpp"
#include "piecehaz/estimation.hpp"
#include "support.hpp"

using namespace piecehaz;
using doctest::Approx;

namespace {

Dataset exponential_cohort(double rate, std::size_t n, std::uint64_t seed) {
    CohortDesign d;
    d.n = n;
    d.model = PiecewiseModel({1.0}, {{-std::log(rate)}}, {});
    d.censoring = UniformCensoring{20.0, 150.0};
    d.seed = seed;
    return simulate_cohort(d);
}

Dataset two_phase_cohort(std::uint64_t seed) {
    CohortDesign d;
    d.n = 1000;
    d.model = PiecewiseModel({0.9, 0.9}, {{3.824, -0.2}, {4.761, -0.2}}, {30.0});
    d.covariate_names = {"treat"};
    d.covariates = {BernoulliCovariate{0.5}};
    d.censoring = AdministrativeCensoring{150.0};
    d.seed = seed;
    return simulate_cohort(d);
}

SAConfig quick_config(std::uint64_t seed) {
    SAConfig c;
    c.seed = seed;
    c.max_iterations = 2000;
    return c;
}

}  // namespace

TEST_CASE("cooling schedule") {
    CHECK(cooling_step(500.0, 0.01) == Approx(500.0 / 6.0));
    CHECK(cooling_step(100.0, 0.01) == Approx(50.0));
    double t = 500.0;
    bool ok = true;
    for (int i = 0; i < 1000000; ++i) {
        const double next = cooling_step(t, 0.01);
        ok = ok && next < t && next > 0.0;
        t = next;
    }
    CHECK(ok);
}

TEST_CASE("acceptance probability") {
    CHECK(acceptance_probability(-100.0, -120.0, 3.0) == 1.0);
    CHECK(acceptance_probability(-100.0, -100.0, 3.0) == 1.0);
    CHECK(acceptance_probability(-110.0, -100.0, 500.0) == Approx(std::exp(-0.02)));
    const double ninf = -std::numeric_limits<double>::infinity();
    CHECK(acceptance_probability(ninf, -100.0, 500.0) == 0.0);
    CHECK(acceptance_probability(std::nan(""), -100.0, 500.0) == 0.0);
    CHECK(acceptance_probability(-100.0 - 1e-9, -100.0, 1e6) < 1.0);
}

TEST_CASE("config validation") {
    SAConfig c;
    CHECK_NOTHROW(c.validate());
    c.final_temperature = 600.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = SAConfig{};
    c.scales.coefficient = -1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = SAConfig{};
    c.cooling_coefficient = 0.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("proposals") {
    const PiecewiseModel m({0.8, 1.2, 2.0}, {{3.0, 0.1}, {4.0, -0.2}, {5.0, 0.3}}, {30.0, 120.0});
    Rng rng(5);
    CHECK(propose(m, ProposalScales{0.0, 0.0, 0.0}, rng) == m);

    const ProposalScales scales{0.05, 0.1, 2.0};
    const int n = 10000;
    std::vector<double> sum_logk(3, 0.0), sum_b(6, 0.0), sum_tau(2, 0.0);
    bool sorted = true;
    for (int i = 0; i < n; ++i) {
        const auto p = propose(m, scales, rng);
        for (int j = 0; j < 3; ++j) sum_logk[j] += std::log(p.shapes[j]);
        for (int j = 0; j < 6; ++j) sum_b[j] += p.coefficients[j];
        for (int j = 0; j < 2; ++j) sum_tau[j] += p.changepoints[j];
        sorted = sorted && p.changepoints[0] <= p.changepoints[1];
    }
    CHECK(sorted);
    for (int j = 0; j < 3; ++j) CHECK(std::abs(sum_logk[j] / n - std::log(m.shapes[j])) <= 3.0 * 0.05 / std::sqrt(n));
    for (int j = 0; j < 6; ++j) CHECK(std::abs(sum_b[j] / n - m.coefficients[j]) <= 3.0 * 0.1 / std::sqrt(n));
    for (int j = 0; j < 2; ++j) CHECK(std::abs(sum_tau[j] / n - m.changepoints[j]) <= 3.0 * 2.0 / std::sqrt(n));

    // frozen blocks stay put
    const auto q = propose(m, ProposalScales{0.05, 0.0, 0.0}, rng);
    CHECK(q.coefficients == m.coefficients);
    CHECK(q.changepoints == m.changepoints);
    CHECK(q.shapes != m.shapes);
}

TEST_CASE("parameter counts") {
    const PiecewiseModel m({1.0, 1.0, 1.0}, {{0, 0}, {0, 0}, {0, 0}}, {30.0, 120.0});
    CHECK(parameter_count(m, ProposalScales{}) == 11);
    CHECK(parameter_count(m, ProposalScales{0.05, 0.1, 0.0}) == 9);
    CHECK(parameter_count(m, ProposalScales{0.0, 0.1, 2.0}) == 8);
    CHECK(parameter_count(m, ProposalScales{0.0, 0.1, 0.0}) == 6);
}

TEST_CASE("default initial model") {
    const auto d = two_phase_cohort(3);
    const auto m = default_initial_model(d, 3);
    CHECK(m.phases() == 3);
    CHECK(m.covariate_count == 1);
    CHECK(m.changepoints.size() == 2);
    const auto [lo, hi] = changepoint_bounds(d);
    for (double t : m.changepoints) CHECK((t >= lo && t <= hi));
    for (double k : m.shapes) CHECK(k == 1.0);
    for (std::size_t j = 0; j < 3; ++j) CHECK(m.coefficient(j, 1) == 0.0);
    CHECK(std::isfinite(log_likelihood(d, m)));

    const auto fixed = default_initial_model(d, 3, std::vector<double>{30.0, 120.0});
    CHECK(fixed.changepoints == std::vector<double>{30.0, 120.0});
    CHECK_THROWS_AS(default_initial_model(d, 3, std::vector<double>{30.0}), std::invalid_argument);

    // one phase with no covariates: the intercept is the exponential MLE
    const auto e = exponential_cohort(0.02, 300, 4);
    double events = 0.0, exposure = 0.0;
    for (const auto& o : e.observations) {
        events += o.event;
        exposure += o.time;
    }
    CHECK(default_initial_model(e, 1).intercept(0) == Approx(-std::log(events / exposure)));
}

TEST_CASE("sa_fit errors and trivial runs") {
    const auto d = exponential_cohort(0.02, 200, 6);
    const PiecewiseModel init({1.0}, {{std::log(50.0)}}, {});
    SAConfig zero = quick_config(1);
    zero.max_iterations = 0;
    const auto r = sa_fit(d, init, zero);
    CHECK(r.model == init);
    CHECK(r.iterations_used == 0);
    CHECK(r.loglik == log_likelihood(d, init));

    PiecewiseModel bad = init;
    bad.shapes[0] = -1.0;
    CHECK_THROWS_AS(sa_fit(d, bad, quick_config(1)), FitError);
    CHECK_THROWS_AS(sa_fit(Dataset{}, init, quick_config(1)), FitError);

    const PiecewiseModel outside({1.0, 1.0}, {{4.0}, {4.0}}, {1e6});
    CHECK_THROWS_AS(sa_fit(d, outside, quick_config(1)), FitError);
}

TEST_CASE("single-phase exponential recovery") {
    const auto d = exponential_cohort(0.02, 500, 7);
    double events = 0.0, exposure = 0.0;
    for (const auto& o : d.observations) {
        events += o.event;
        exposure += o.time;
    }
    const double mle = events / exposure;
    FitSpec spec;
    spec.phases = 1;
    spec.exponential = true;
    spec.chains = 4;
    spec.sa.seed = 7;
    const auto init = PiecewiseModel({1.0}, {{-std::log(0.025)}}, {});
    const auto fit = fit_model(d, spec, init);
    const double rate = std::exp(-fit.best.model.intercept(0));
    CHECK(std::abs(rate - 0.02) / 0.02 <= 0.15);
    CHECK(std::abs(rate - mle) / mle <= 0.01);
    CHECK(fit.best.n_params == 1);
    CHECK(fit.best.loglik >= log_likelihood(d, init));
}

TEST_CASE("single-phase Weibull fit agrees with a grid-search MLE") {
    CohortDesign design;
    design.n = 1000;
    design.model = PiecewiseModel({1.4}, {{1.4 * std::log(60.0)}}, {});
    design.censoring = AdministrativeCensoring{100.0};
    design.seed = 8;
    const auto d = simulate_cohort(design);

    // profile out the rate analytically: lambda(k) = d / sum y^k
    double best_ll = -std::numeric_limits<double>::infinity(), best_k = 0.0, best_rate = 0.0;
    double events = 0.0, sum_log_event = 0.0;
    for (const auto& o : d.observations) {
        if (!o.event) continue;
        events += 1.0;
        sum_log_event += std::log(o.time);
    }
    for (double k = 0.5; k <= 3.0; k += 1e-4) {
        double sum_pow = 0.0;
        for (const auto& o : d.observations) sum_pow += std::pow(o.time, k);
        const double rate = events / sum_pow;
        const double ll = events * std::log(rate * k) + (k - 1.0) * sum_log_event - rate * sum_pow;
        if (ll > best_ll) {
            best_ll = ll;
            best_k = k;
            best_rate = rate;
        }
    }
    const PiecewiseModel init = default_initial_model(d, 1);
    SAConfig cfg;
    cfg.seed = 9;
    const auto fit = fit_fixed_changepoints(d, {}, init, cfg, 10);
    CHECK(std::abs(fit.model.shapes[0] - best_k) / best_k <= 0.01);
    const double rate = std::exp(-fit.model.intercept(0));
    CHECK(std::abs(rate - best_rate) / best_rate <= 0.01);
    CHECK(fit.loglik <= best_ll + 1e-3);
    CHECK(fit.loglik >= best_ll - 0.05);
}

TEST_CASE("two-phase change-point recovery") {
    int hits = 0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto d = two_phase_cohort(100 + s);
        FitSpec spec;
        spec.phases = 2;
        spec.sa.seed = s;
        const auto fit = fit_model(d, spec);
        if (std::abs(fit.best.model.changepoints[0] - 30.0) <= 10.0) ++hits;
    }
    CHECK(hits >= 8);
}

TEST_CASE("trace, determinism and chain selection") {
    const auto d = two_phase_cohort(200);
    SAConfig cfg = quick_config(11);
    cfg.record_trace = true;
    const auto init = default_initial_model(d, 2);
    const auto a = sa_fit(d, init, cfg);
    const auto b = sa_fit(d, init, cfg);
    CHECK(a.model == b.model);
    CHECK(a.loglik == b.loglik);
    CHECK(a.trace.size() == a.iterations_used);
    bool monotone = true;
    for (std::size_t i = 1; i < a.trace.size(); ++i) monotone = monotone && a.trace[i].loglik >= a.trace[i - 1].loglik;
    CHECK(monotone);
    CHECK(a.loglik >= log_likelihood(d, init));
    CHECK(a.loglik == doctest::Approx(log_likelihood(d, a.model)).epsilon(1e-12));
    CHECK(a.aic == -2.0 * a.loglik + 2.0 * static_cast<double>(a.n_params));
    CHECK(a.model.is_valid());
    CHECK((a.acceptance_rate >= 0.0 && a.acceptance_rate <= 1.0));

    const auto single = multi_chain_fit(d, init, cfg, 1);
    SAConfig sub = cfg;
    sub.seed = chain_seed(cfg.seed, 0);
    const auto direct = sa_fit(d, init, sub);
    CHECK(single.best.model == direct.model);
    CHECK(single.best.loglik == direct.loglik);

    const auto many = multi_chain_fit(d, init, cfg, 5);
    const auto again = multi_chain_fit(d, init, cfg, 5);
    CHECK(many.chains.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(many.best.loglik >= many.chains[i].loglik);
        CHECK(many.chains[i].model == again.chains[i].model);
    }
    CHECK(many.best.loglik == many.chains[many.best_index].loglik);
    CHECK(chain_seed(1, 0) != chain_seed(1, 1));
    CHECK_THROWS_AS(multi_chain_fit(d, init, cfg, 0), std::invalid_argument);
}

TEST_CASE("fixed change-points") {
    CohortDesign design;
    design.n = 800;
    design.model = PiecewiseModel({0.9, 0.9, 0.9}, {{3.824, -0.2}, {4.761, -0.2}, {5.579, -0.2}}, {30.0, 120.0});
    design.covariate_names = {"treat"};
    design.covariates = {BernoulliCovariate{0.5}};
    design.censoring = AdministrativeCensoring{200.0};
    design.seed = 12;
    const auto d = simulate_cohort(design);

    FitSpec pwm;
    pwm.fixed_changepoints = std::vector<double>{30.0, 120.0};
    pwm.sa.seed = 3;
    FitSpec pem = pwm;
    pem.exponential = true;
    const auto a = fit_model(d, pwm);
    const auto b = fit_model(d, pem);
    CHECK(a.best.n_params == 9);
    CHECK(b.best.n_params == 6);
    CHECK(a.best.model.changepoints == std::vector<double>{30.0, 120.0});
    for (double k : b.best.model.shapes) CHECK(k == 1.0);
    CHECK(a.best.loglik >= b.best.loglik);

    const auto init = default_initial_model(d, 3);
    SAConfig cfg = quick_config(1);
    CHECK_THROWS_AS(fit_fixed_changepoints(d, std::vector<double>{30.0, 1e4}, init, cfg), std::invalid_argument);
    CHECK_THROWS_AS(fit_fixed_changepoints(d, std::vector<double>{120.0, 30.0}, init, cfg), std::invalid_argument);
    CHECK_THROWS_AS(fit_fixed_changepoints(d, std::vector<double>{-1.0, 30.0}, init, cfg), std::invalid_argument);
    const auto r = fit_fixed_changepoints(d, std::vector<double>{30.0, 120.0}, init, cfg);
    CHECK(r.model.changepoints == std::vector<double>{30.0, 120.0});
    CHECK(r.n_params == 9);
}

TEST_CASE("sparse segments produce warnings") {
    const auto d = two_phase_cohort(300);
    FitSpec spec;
    spec.phases = 2;
    spec.fixed_changepoints = std::vector<double>{d.max_time() - 0.5};
    spec.chains = 1;
    spec.sa.max_iterations = 100;
    const auto fit = fit_model(d, spec);
    CHECK_FALSE(fit.best.warnings.empty());
}
