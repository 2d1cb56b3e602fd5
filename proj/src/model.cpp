#include "piecehaz/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "piecehaz/errors.hpp"
#include "piecehaz/likelihood.hpp"

namespace piecehaz {

namespace {

void check_params(const WeibullParams& params) {
    if (!(params.shape > 0.0) || !(params.scale > 0.0) || !std::isfinite(params.shape) ||
        !std::isfinite(params.scale)) {
        throw DomainError("Weibull shape and scale must be positive and finite");
    }
}

// t^k with t^k = 0 at t = 0.
double power(double t, double k) { return t > 0.0 ? std::exp(k * std::log(t)) : 0.0; }

void check_rates(const PiecewiseModel& model, std::span<const double> rates) {
    if (rates.size() != model.phases()) {
        throw std::invalid_argument("rate vector length must equal the number of phases");
    }
}

double segment_cumulative(double t, std::size_t j, const PiecewiseModel& model,
                          std::span<const double> rates) {
    double h = 0.0;
    for (std::size_t m = 0; m < j; ++m) {
        const double lo = m == 0 ? 0.0 : model.changepoints[m - 1];
        h += rates[m] * (power(model.changepoints[m], model.shapes[m]) - power(lo, model.shapes[m]));
    }
    const double lo = j == 0 ? 0.0 : model.changepoints[j - 1];
    return h + rates[j] * (power(t, model.shapes[j]) - power(lo, model.shapes[j]));
}

}  // namespace

double WeibullParams::rate() const { return std::exp(-shape * std::log(scale)); }

WeibullParams WeibullParams::from_scale(double shape, double scale) {
    WeibullParams p{shape, scale};
    check_params(p);
    return p;
}

WeibullParams WeibullParams::from_rate(double shape, double rate) {
    if (!(rate > 0.0)) throw DomainError("Weibull rate must be positive");
    WeibullParams p{shape, std::exp(-std::log(rate) / shape)};
    check_params(p);
    return p;
}

std::size_t Dataset::event_count() const {
    return static_cast<std::size_t>(std::count_if(observations.begin(), observations.end(),
                                                  [](const Observation& o) { return o.event; }));
}

double Dataset::min_time() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& o : observations) m = std::min(m, o.time);
    return m;
}

double Dataset::max_time() const {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& o : observations) m = std::max(m, o.time);
    return m;
}

void Dataset::validate() const {
    if (observations.empty()) throw ValidationError("dataset has no observations", {});
    std::vector<std::size_t> bad_time;
    std::vector<std::size_t> bad_width;
    for (std::size_t i = 0; i < observations.size(); ++i) {
        const auto& o = observations[i];
        if (!(o.time > 0.0) || !std::isfinite(o.time)) bad_time.push_back(i);
        if (o.covariates.size() != covariate_names.size()) bad_width.push_back(i);
    }
    if (!bad_time.empty()) {
        throw ValidationError("observation times must be positive and finite", bad_time);
    }
    if (!bad_width.empty()) {
        std::ostringstream msg;
        msg << "observations must carry " << covariate_names.size() << " covariates";
        throw ValidationError(msg.str(), bad_width);
    }
}

PiecewiseModel::PiecewiseModel(std::vector<double> shapes_,
                               const std::vector<std::vector<double>>& coefficient_rows,
                               std::vector<double> changepoints_)
    : shapes(std::move(shapes_)), changepoints(std::move(changepoints_)) {
    if (coefficient_rows.size() != shapes.size()) {
        throw std::invalid_argument("one coefficient row is required per phase");
    }
    if (shapes.empty()) throw std::invalid_argument("a model needs at least one phase");
    covariate_count = coefficient_rows.front().size() - 1;
    if (coefficient_rows.front().empty()) throw std::invalid_argument("coefficient rows need an intercept");
    for (const auto& row : coefficient_rows) {
        if (row.size() != covariate_count + 1) {
            throw std::invalid_argument("coefficient rows must have equal length");
        }
        coefficients.insert(coefficients.end(), row.begin(), row.end());
    }
    validate();
}

bool PiecewiseModel::is_valid() const {
    if (shapes.empty() || changepoints.size() + 1 != shapes.size()) return false;
    if (coefficients.size() != shapes.size() * row_width()) return false;
    for (double k : shapes) {
        if (!(k > 0.0) || !std::isfinite(k)) return false;
    }
    for (double b : coefficients) {
        if (!std::isfinite(b)) return false;
    }
    double prev = 0.0;
    for (double tau : changepoints) {
        if (!(tau > prev) || !std::isfinite(tau)) return false;
        prev = tau;
    }
    return true;
}

void PiecewiseModel::validate() const {
    if (!is_valid()) {
        throw std::invalid_argument(
            "piecewise model needs positive shapes, finite coefficients and strictly "
            "increasing positive change-points, with phases = change-points + 1");
    }
}

double weibull_hazard(double t, const WeibullParams& params) {
    check_params(params);
    if (!(t > 0.0)) throw DomainError("hazard is only defined for t > 0");
    return params.rate() * params.shape * std::exp((params.shape - 1.0) * std::log(t));
}

double weibull_survival(double t, const WeibullParams& params) {
    check_params(params);
    if (t < 0.0) throw DomainError("survival is only defined for t >= 0");
    return std::exp(-params.rate() * power(t, params.shape));
}

double weibull_density(double t, const WeibullParams& params) {
    return weibull_hazard(t, params) * weibull_survival(t, params);
}

WeibullMoments weibull_moments(const WeibullParams& params) {
    check_params(params);
    const double g1 = std::tgamma(1.0 + 1.0 / params.shape);
    const double g2 = std::tgamma(1.0 + 2.0 / params.shape);
    const double rho = params.scale;
    return {rho * g1, rho * std::pow(std::log(2.0), 1.0 / params.shape), rho * rho * (g2 - g1 * g1)};
}

std::size_t segment_index(double t, std::span<const double> changepoints) {
    return static_cast<std::size_t>(
        std::upper_bound(changepoints.begin(), changepoints.end(), t) - changepoints.begin());
}

double pw_baseline_hazard(double t, const PiecewiseModel& model, std::span<const double> rates) {
    check_rates(model, rates);
    if (!(t > 0.0)) throw DomainError("hazard is only defined for t > 0");
    const std::size_t j = segment_index(t, model.changepoints);
    const double k = model.shapes[j];
    return k * rates[j] * std::exp((k - 1.0) * std::log(t));
}

double pw_cumulative_hazard(double t, const PiecewiseModel& model, std::span<const double> rates) {
    check_rates(model, rates);
    if (t < 0.0) throw DomainError("cumulative hazard is only defined for t >= 0");
    if (t == 0.0) return 0.0;
    return segment_cumulative(t, segment_index(t, model.changepoints), model, rates);
}

double pw_survival(double t, const PiecewiseModel& model, std::span<const double> rates) {
    return std::exp(-pw_cumulative_hazard(t, model, rates));
}

double subject_rate(std::size_t phase, std::span<const double> covariates,
                    const PiecewiseModel& model) {
    if (phase >= model.phases()) throw std::out_of_range("phase index out of range");
    if (covariates.size() != model.covariate_count) {
        throw std::invalid_argument("covariate vector length does not match the model");
    }
    const auto row = model.row(phase);
    double eta = row[0];
    for (std::size_t k = 0; k < covariates.size(); ++k) eta += row[k + 1] * covariates[k];
    return std::exp(-eta);
}

std::vector<double> subject_rates(std::span<const double> covariates, const PiecewiseModel& model) {
    std::vector<double> rates(model.phases());
    for (std::size_t j = 0; j < rates.size(); ++j) rates[j] = subject_rate(j, covariates, model);
    return rates;
}

double phase_hazard(std::size_t phase, double t, std::span<const double> covariates,
                    const PiecewiseModel& model) {
    if (!(t > 0.0)) throw DomainError("hazard is only defined for t > 0");
    const double k = model.shapes.at(phase);
    return k * subject_rate(phase, covariates, model) * std::exp((k - 1.0) * std::log(t));
}

double subject_hazard(double t, std::span<const double> covariates, const PiecewiseModel& model) {
    if (!(t > 0.0)) throw DomainError("hazard is only defined for t > 0");
    return phase_hazard(segment_index(t, model.changepoints), t, covariates, model);
}

double subject_survival(double t, std::span<const double> covariates, const PiecewiseModel& model) {
    const auto rates = subject_rates(covariates, model);
    return pw_survival(t, model, rates);
}

double log_likelihood(const Dataset& data, const PiecewiseModel& model) {
    for (const auto& o : data.observations) {
        if (!(o.time > 0.0)) throw DomainError("log-likelihood requires every time > 0");
    }
    data.validate();
    return LikelihoodEvaluator(data)(model);
}

}  // namespace piecehaz
