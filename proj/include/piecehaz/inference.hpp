#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "piecehaz/estimation.hpp"
#include "piecehaz/model.hpp"

namespace piecehaz {

double aic(double loglik, std::size_t n_params);

struct LrtResult {
    double statistic = 0.0;
    std::size_t df = 0;
    double p_value = 1.0;
};

// 2 (alt - null) clamped at zero, referred to chi-square(df).
LrtResult likelihood_ratio_test(double loglik_null, double loglik_alt, std::size_t df);

struct ComparisonEntry {
    std::string label;
    double loglik = 0.0;
    std::size_t n_params = 0;
    double aic = 0.0;
};

struct ComparisonReport {
    std::vector<ComparisonEntry> models;
    std::size_t best_index = 0;  // smallest AIC, first wins ties
    std::optional<std::pair<std::string, std::string>> lrt_pair;
    std::optional<LrtResult> lrt;
};

ComparisonEntry make_entry(std::string label, double loglik, std::size_t n_params);

// lrt = (null label, alt label). The null must have fewer parameters.
ComparisonReport compare_models(std::vector<ComparisonEntry> models,
                                std::optional<std::pair<std::string, std::string>> lrt = std::nullopt);

// Named flat view of a model: kappa_j, tau_j, beta_j_intercept, beta_j_<cov>.
std::vector<std::pair<std::string, double>> named_parameters(
    const PiecewiseModel& model, std::span<const std::string> covariate_names);

struct ParameterSummary {
    double point = 0.0;
    double mean = 0.0;
    double se = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

struct BootstrapSummary {
    std::size_t replicates = 0;
    double ci_level = 0.95;
    std::size_t failed_replicates = 0;
    std::vector<std::string> parameter_order;
    std::map<std::string, ParameterSummary> per_parameter;
    PiecewiseModel point_model;
    std::vector<PiecewiseModel> replicate_models;
};

// Linear interpolation between order statistics (sample sorted ascending).
double empirical_quantile(std::span<const double> sorted, double q);

// Mean, sample standard deviation and percentile interval of each
// replicate sample.
ParameterSummary summarize_sample(double point, std::vector<double> sample, double ci_level);

BootstrapSummary summarize_replicates(const PiecewiseModel& point,
                                      std::span<const PiecewiseModel> replicates,
                                      std::span<const std::string> covariate_names,
                                      double ci_level, std::size_t failed);

struct BootstrapOptions {
    std::size_t replicates = 100;
    std::uint64_t seed = 0;
    double ci_level = 0.95;
    double max_failure_fraction = 0.2;
};

// Resamples whole observations with replacement and refits each resample
// with fit_model, starting from the point estimate.
BootstrapSummary bootstrap(const Dataset& data, const FitSpec& spec, const FitResult& point_fit,
                           const BootstrapOptions& options);
// Fits the point estimate first.
BootstrapSummary bootstrap(const Dataset& data, const FitSpec& spec, const BootstrapOptions& options);

struct HazardRatioTest {
    double ratio = 1.0;
    double log_ratio = 0.0;
    double se = 0.0;
    double z = 0.0;
    double p_value = 1.0;
};

// Mean observed event time inside each phase of `model` (falls back to the
// mean time of any observation there, then to the phase start).
std::vector<double> phase_mean_event_times(const Dataset& data, const PiecewiseModel& model);

// H0: h_j / h_i = 1 via a Wald test on the log ratio with bootstrap SE.
HazardRatioTest hazard_ratio_test(const FitResult& fit, const BootstrapSummary& boot,
                                  std::size_t phase_i, std::size_t phase_j,
                                  std::pair<double, double> eval_times,
                                  std::span<const double> covariates);

struct LoglikSurface {
    std::vector<double> tau1;
    std::vector<double> tau2;
    std::vector<std::vector<double>> loglik;  // NaN marks pairs not evaluated

    static bool missing(double v);
    // (a, b, loglik) of the largest entry.
    std::optional<std::tuple<std::size_t, std::size_t, double>> best() const;
};

// Profile log-likelihood over (tau1, tau2) pairs with tau1 < tau2, each
// maximised over shapes and coefficients with the change-points held fixed.
// Requires a three-phase spec.
LoglikSurface loglik_surface(const Dataset& data, std::span<const double> tau1_grid,
                             std::span<const double> tau2_grid, const FitSpec& spec);

}  // namespace piecehaz
