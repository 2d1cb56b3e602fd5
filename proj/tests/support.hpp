#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "piecehaz/model.hpp"

namespace piecehaz::testing {

// Tanh-sinh quadrature on [a, b]. Abscissae are generated as offsets from
// the nearer endpoint so integrable endpoint singularities are never hit.
inline double integrate(const std::function<double(double)>& f, double a, double b) {
    const double half = 0.5 * (b - a);
    const double h = 1.0 / 128.0;
    double sum = 0.0;
    for (int k = -512; k <= 512; ++k) {
        const double u = k * h;
        const double s = 0.5 * std::numbers::pi * std::sinh(u);
        const double w = 0.5 * std::numbers::pi * std::cosh(u) / (std::cosh(s) * std::cosh(s));
        if (!(w > 0.0)) continue;
        // distance from a is (b - a) / (1 + exp(-2 s)); from b is the mirror
        double x;
        if (s < 0) {
            const double d = (b - a) / (1.0 + std::exp(-2.0 * s));
            if (!(d > 0.0)) continue;
            x = a + d;
        } else {
            const double d = (b - a) / (1.0 + std::exp(2.0 * s));
            if (!(d > 0.0)) continue;
            x = b - d;
        }
        sum += w * f(x);
    }
    return half * h * sum;
}

inline PiecewiseModel random_model(std::mt19937_64& gen, std::size_t phases, std::size_t covariates,
                                   double kappa_lo = 0.3, double kappa_hi = 3.0, double horizon = 200.0) {
    std::uniform_real_distribution<double> kappa(kappa_lo, kappa_hi);
    std::uniform_real_distribution<double> coef(-0.5, 0.5);
    std::uniform_real_distribution<double> cut(1.0, horizon);
    std::vector<double> shapes(phases);
    for (double& k : shapes) k = kappa(gen);
    std::vector<std::vector<double>> rows(phases);
    for (std::size_t j = 0; j < phases; ++j) {
        // keep intercepts so the hazard over the horizon stays moderate
        const double scale = std::uniform_real_distribution<double>(0.3, 1.5)(gen) * horizon;
        rows[j].push_back(shapes[j] * std::log(scale));
        for (std::size_t k = 0; k < covariates; ++k) rows[j].push_back(coef(gen));
    }
    std::vector<double> taus;
    while (taus.size() + 1 < phases) {
        const double t = cut(gen);
        bool clash = false;
        for (double o : taus) clash = clash || std::abs(o - t) < 1.0;
        if (!clash) taus.push_back(t);
    }
    std::sort(taus.begin(), taus.end());
    return PiecewiseModel(shapes, rows, taus);
}

inline Dataset random_dataset(std::mt19937_64& gen, std::size_t n, std::size_t covariates,
                              double horizon = 200.0) {
    std::uniform_real_distribution<double> time(0.05, horizon);
    std::uniform_real_distribution<double> cov(-1.0, 1.0);
    std::bernoulli_distribution event(0.6);
    Dataset d;
    for (std::size_t k = 0; k < covariates; ++k) d.covariate_names.push_back("x" + std::to_string(k));
    for (std::size_t i = 0; i < n; ++i) {
        Observation o;
        o.time = time(gen);
        o.event = event(gen);
        for (std::size_t k = 0; k < covariates; ++k) o.covariates.push_back(cov(gen));
        d.observations.push_back(std::move(o));
    }
    return d;
}

inline Dataset make_dataset(const std::vector<double>& times, const std::vector<int>& events) {
    Dataset d;
    for (std::size_t i = 0; i < times.size(); ++i) d.observations.push_back({times[i], events[i] != 0, {}});
    return d;
}

}  // namespace piecehaz::testing
