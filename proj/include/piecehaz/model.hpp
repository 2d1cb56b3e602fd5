#pragma once

// Weibull and piecewise Weibull hazards with per-phase log-linear covariate
// effects. Phases are indexed from 0 in this API; phase j covers
// [changepoints[j-1], changepoints[j]) with the outer bounds 0 and +inf.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace piecehaz {

struct WeibullParams {
    double shape = 1.0;
    double scale = 1.0;

    // lambda = scale^(-shape)
    double rate() const;

    static WeibullParams from_scale(double shape, double scale);
    static WeibullParams from_rate(double shape, double rate);
};

struct WeibullMoments {
    double mean = 0.0;
    double median = 0.0;
    double variance = 0.0;
};

struct Observation {
    double time = 0.0;
    bool event = false;
    std::vector<double> covariates;
};

struct Dataset {
    std::vector<Observation> observations;
    std::vector<std::string> covariate_names;

    std::size_t size() const { return observations.size(); }
    std::size_t covariate_count() const { return covariate_names.size(); }
    std::size_t event_count() const;
    double min_time() const;
    double max_time() const;

    // Throws ValidationError listing offending observations (0-based).
    void validate() const;
};

// Per-phase shapes, per-phase coefficient rows (intercept first, then one
// entry per covariate) and ordered change-points.
struct PiecewiseModel {
    std::vector<double> shapes;
    std::vector<double> coefficients;  // row-major, phases() x (covariate_count + 1)
    std::vector<double> changepoints;
    std::size_t covariate_count = 0;

    PiecewiseModel() = default;
    PiecewiseModel(std::vector<double> shapes,
                   const std::vector<std::vector<double>>& coefficient_rows,
                   std::vector<double> changepoints);

    std::size_t phases() const { return shapes.size(); }
    std::size_t row_width() const { return covariate_count + 1; }

    double intercept(std::size_t phase) const { return coefficients[phase * row_width()]; }
    double& intercept(std::size_t phase) { return coefficients[phase * row_width()]; }
    double coefficient(std::size_t phase, std::size_t k) const {
        return coefficients[phase * row_width() + k];
    }
    std::span<const double> row(std::size_t phase) const {
        return {coefficients.data() + phase * row_width(), row_width()};
    }

    // Structural and numeric invariants: positive finite shapes, finite
    // coefficients, strictly increasing positive change-points.
    bool is_valid() const;
    void validate() const;

    friend bool operator==(const PiecewiseModel&, const PiecewiseModel&) = default;
};

double weibull_hazard(double t, const WeibullParams& params);
double weibull_survival(double t, const WeibullParams& params);
double weibull_density(double t, const WeibullParams& params);
WeibullMoments weibull_moments(const WeibullParams& params);

// Index of the phase containing t, using closed-left/open-right intervals.
std::size_t segment_index(double t, std::span<const double> changepoints);

double pw_baseline_hazard(double t, const PiecewiseModel& model, std::span<const double> rates);
double pw_cumulative_hazard(double t, const PiecewiseModel& model, std::span<const double> rates);
double pw_survival(double t, const PiecewiseModel& model, std::span<const double> rates);

// lambda_j(x) = exp(-(b_j0 + b_j . x))
double subject_rate(std::size_t phase, std::span<const double> covariates,
                    const PiecewiseModel& model);
std::vector<double> subject_rates(std::span<const double> covariates, const PiecewiseModel& model);

// Hazard of phase `phase` evaluated at t regardless of which segment holds t.
double phase_hazard(std::size_t phase, double t, std::span<const double> covariates,
                    const PiecewiseModel& model);
double subject_hazard(double t, std::span<const double> covariates, const PiecewiseModel& model);
double subject_survival(double t, std::span<const double> covariates, const PiecewiseModel& model);

// Censored-data log-likelihood. -inf when the model violates its invariants.
double log_likelihood(const Dataset& data, const PiecewiseModel& model);

}  // namespace piecehaz
