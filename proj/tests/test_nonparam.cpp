#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "piecehaz/datagen.hpp"
#include "piecehaz/nonparam.hpp"
#include "support.hpp"

using namespace piecehaz;
using doctest::Approx;

namespace {

// Textbook two-group log-rank: for each distinct event time scan every
// subject to build the risk sets.
double logrank_oracle(const Dataset& d, const std::vector<int>& g) {
    std::vector<double> times;
    for (const auto& o : d.observations) {
        if (o.event) times.push_back(o.time);
    }
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    double o_minus_e = 0.0, var = 0.0;
    for (double t : times) {
        double n = 0, n1 = 0, dd = 0, d1 = 0;
        for (std::size_t i = 0; i < d.size(); ++i) {
            const auto& o = d.observations[i];
            if (o.time >= t) {
                n += 1;
                if (g[i] == 1) n1 += 1;
            }
            if (o.time == t && o.event) {
                dd += 1;
                if (g[i] == 1) d1 += 1;
            }
        }
        o_minus_e += d1 - dd * n1 / n;
        if (n > 1) var += dd * (n1 / n) * (1 - n1 / n) * (n - dd) / (n - 1);
    }
    return o_minus_e * o_minus_e / var;
}

}  // namespace

TEST_CASE("kaplan-meier hand examples") {
    auto km = kaplan_meier(testing::make_dataset({1, 2, 3}, {1, 1, 1}));
    REQUIRE(km.times.size() == 3);
    CHECK(km.survival[0] == Approx(2.0 / 3.0));
    CHECK(km.survival[1] == Approx(1.0 / 3.0));
    CHECK(km.survival[2] == 0.0);

    km = kaplan_meier(testing::make_dataset({1, 2, 3}, {1, 0, 1}));
    REQUIRE(km.times.size() == 2);
    CHECK(km.times[1] == 3.0);
    CHECK(km.survival[0] == Approx(2.0 / 3.0));
    CHECK(km.survival[1] == 0.0);
    CHECK(km.at_risk[1] == 1);
    CHECK(km.at(2.5) == Approx(2.0 / 3.0));
    CHECK(km.at(0.5) == 1.0);

    km = kaplan_meier(testing::make_dataset({1, 2, 3}, {0, 0, 0}));
    CHECK(km.times.empty());
    CHECK(km.at(10.0) == 1.0);

    // an event and a censoring tied at 2: the censored subject is still at risk
    km = kaplan_meier(testing::make_dataset({1, 2, 2, 4}, {1, 1, 0, 1}));
    CHECK(km.at_risk[1] == 3);
    CHECK(km.survival[1] == Approx(0.75 * 2.0 / 3.0));

    CHECK_THROWS_AS(kaplan_meier(Dataset{}), std::invalid_argument);
}

TEST_CASE("kaplan-meier without censoring is one minus the ECDF") {
    std::mt19937_64 gen(61);
    std::exponential_distribution<double> ex(0.1);
    for (int rep = 0; rep < 50; ++rep) {
        const int n = 5 + rep;
        std::vector<double> times;
        for (int i = 0; i < n; ++i) times.push_back(std::ceil(ex(gen) * 4.0) / 4.0 + 0.25);  // ties on purpose
        const auto km = kaplan_meier(testing::make_dataset(times, std::vector<int>(n, 1)));
        for (std::size_t k = 0; k < km.times.size(); ++k) {
            const double ecdf = std::count_if(times.begin(), times.end(), [&](double t) { return t <= km.times[k]; });
            CHECK(km.survival[k] == Approx(1.0 - ecdf / n).epsilon(1e-12));
        }
    }
}

TEST_CASE("kaplan-meier is permutation invariant and monotone") {
    std::mt19937_64 gen(62);
    auto d = testing::random_dataset(gen, 80, 0);
    const auto a = kaplan_meier(d);
    std::shuffle(d.observations.begin(), d.observations.end(), gen);
    const auto b = kaplan_meier(d);
    CHECK(a.times == b.times);
    CHECK(a.survival == b.survival);
    for (std::size_t k = 1; k < a.times.size(); ++k) {
        CHECK(a.times[k] > a.times[k - 1]);
        CHECK(a.survival[k] <= a.survival[k - 1]);
        CHECK(a.at_risk[k] <= a.at_risk[k - 1]);
    }
}

TEST_CASE("two-group log-rank matches the textbook oracle") {
    std::mt19937_64 gen(63);
    std::uniform_int_distribution<int> t(1, 15);
    std::bernoulli_distribution ev(0.7), grp(0.5);
    for (int rep = 0; rep < 10; ++rep) {
        const int n = 12 + 3 * rep;
        std::vector<double> times;
        std::vector<int> events, g;
        for (int i = 0; i < n; ++i) {
            times.push_back(t(gen));
            events.push_back(ev(gen));
            g.push_back(i < 2 ? i : grp(gen));
        }
        events[0] = 1;
        const auto d = testing::make_dataset(times, events);
        const auto r = weighted_logrank(d, g, LogrankWeight::unit);
        CHECK(r.df == 1);
        CHECK(std::abs(r.statistic - logrank_oracle(d, g)) <= 1e-9);
    }
}

TEST_CASE("log-rank symmetry, relabelling and degrees of freedom") {
    std::mt19937_64 gen(64);
    auto base = testing::random_dataset(gen, 30, 0);
    Dataset doubled = base;
    doubled.observations.insert(doubled.observations.end(), base.observations.begin(), base.observations.end());
    std::vector<int> g(60, 0);
    std::fill(g.begin() + 30, g.end(), 1);
    for (auto w : {LogrankWeight::unit, LogrankWeight::gehan}) {
        const auto r = weighted_logrank(doubled, g, w);
        CHECK(r.statistic == 0.0);
        CHECK(r.p_value == 1.0);
    }

    const auto d = testing::random_dataset(gen, 90, 0);
    std::vector<int> three(90), relabel(90);
    for (int i = 0; i < 90; ++i) {
        three[i] = i % 3;
        relabel[i] = std::vector<int>{7, -2, 4}[i % 3];
    }
    for (auto w : {LogrankWeight::unit, LogrankWeight::gehan}) {
        const auto a = weighted_logrank(d, three, w);
        const auto b = weighted_logrank(d, relabel, w);
        CHECK(a.df == 2);
        CHECK(b.statistic == Approx(a.statistic).epsilon(1e-10));
    }
    std::vector<int> two(90);
    for (int i = 0; i < 90; ++i) two[i] = i % 2;
    std::vector<int> swapped(90);
    for (int i = 0; i < 90; ++i) swapped[i] = 1 - two[i];
    CHECK(weighted_logrank(d, two, LogrankWeight::gehan).statistic ==
          Approx(weighted_logrank(d, swapped, LogrankWeight::gehan).statistic).epsilon(1e-10));

    CHECK_THROWS_AS(weighted_logrank(d, std::vector<int>(90, 1), LogrankWeight::unit), std::invalid_argument);
    CHECK_THROWS_AS(weighted_logrank(d, std::vector<int>(10, 1), LogrankWeight::unit), std::invalid_argument);
}

TEST_CASE("gehan weights by hand") {
    // group 0: events at 1 and 3; group 1: event at 2, censored at 4
    const auto d = testing::make_dataset({1, 3, 2, 4}, {1, 1, 1, 0});
    const std::vector<int> g{0, 0, 1, 1};
    // t=1: n=4 n0=2 d=1 -> u0 += 4*(1-0.5), v += 16*(0.5*0.5)*1*3/3
    // t=2: n=3 n0=1 d=1 -> u0 += 3*(0-1/3), v += 9*(1/3*2/3)
    // t=3: n=2 n0=1 d=1 -> u0 += 2*(1-0.5), v += 4*(0.25)
    const double u = 2.0 - 1.0 + 1.0;
    const double v = 4.0 + 2.0 + 1.0;
    const auto r = weighted_logrank(d, g, LogrankWeight::gehan);
    CHECK(r.statistic == Approx(u * u / v));
    CHECK(r.observed[0] == 2.0);
    CHECK(r.expected[0] == Approx(0.5 + 1.0 / 3.0 + 0.5));
}

TEST_CASE("log-rank size under the null") {
    int rejections = 0;
    for (std::uint64_t rep = 0; rep < 40; ++rep) {
        CohortDesign design;
        design.n = 600;
        design.model = PiecewiseModel({0.9, 0.9}, {{4.0, 0.0}, {4.5, 0.0}}, {30.0});
        design.covariate_names = {"arm"};
        design.covariates = {UniformCovariate{0.0, 3.0}};
        design.censoring = UniformCensoring{20.0, 200.0};
        design.seed = 700 + rep;
        const auto d = simulate_cohort(design);
        std::vector<int> g;
        for (const auto& o : d.observations) g.push_back(static_cast<int>(o.covariates[0]));
        if (weighted_logrank(d, g, LogrankWeight::gehan).p_value < 0.05) ++rejections;
    }
    CHECK(rejections <= 4);
}
