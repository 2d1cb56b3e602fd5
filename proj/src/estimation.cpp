#include "piecehaz/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "piecehaz/errors.hpp"
#include "piecehaz/likelihood.hpp"
#include "piecehaz/parallel.hpp"

namespace piecehaz {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::size_t kSparseSegmentEvents = 5;

bool within_bounds(std::span<const double> changepoints, std::pair<double, double> bounds) {
    return std::all_of(changepoints.begin(), changepoints.end(),
                       [&](double t) { return t >= bounds.first && t <= bounds.second; });
}

std::vector<std::string> sparse_segment_warnings(const Dataset& data, const PiecewiseModel& model) {
    std::vector<std::size_t> events(model.phases(), 0);
    for (const auto& o : data.observations) {
        if (o.event) ++events[segment_index(o.time, model.changepoints)];
    }
    std::vector<std::string> warnings;
    for (std::size_t j = 0; j < events.size(); ++j) {
        if (events[j] < kSparseSegmentEvents) {
            std::ostringstream msg;
            msg << "phase " << j + 1 << " contains only " << events[j] << " events";
            warnings.push_back(msg.str());
        }
    }
    return warnings;
}

double aic_of(double loglik, std::size_t n_params) {
    return -2.0 * loglik + 2.0 * static_cast<double>(n_params);
}

}  // namespace

void SAConfig::validate() const {
    if (!(initial_temperature > 0.0)) throw std::invalid_argument("initial temperature must be positive");
    if (!(final_temperature > 0.0 && final_temperature < initial_temperature)) {
        throw std::invalid_argument("final temperature must lie in (0, initial temperature)");
    }
    if (!(cooling_coefficient > 0.0)) throw std::invalid_argument("cooling coefficient must be positive");
    if (!(scales.log_shape >= 0.0 && scales.coefficient >= 0.0 && scales.changepoint >= 0.0)) {
        throw std::invalid_argument("proposal scales must be non-negative");
    }
    if (stall_window == 0) throw std::invalid_argument("stall window must be positive");
}

double cooling_step(double temperature, double coefficient) {
    return temperature / (1.0 + coefficient * temperature);
}

double acceptance_probability(double candidate_loglik, double current_loglik, double temperature) {
    if (std::isnan(candidate_loglik) || candidate_loglik == kNegInf) return 0.0;
    if (candidate_loglik >= current_loglik) return 1.0;
    return std::clamp(std::exp((candidate_loglik - current_loglik) / temperature), 0.0, 1.0);
}

PiecewiseModel propose(const PiecewiseModel& current, const ProposalScales& scales, Rng& rng) {
    PiecewiseModel next = current;
    if (scales.log_shape > 0.0) {
        for (double& k : next.shapes) k *= std::exp(scales.log_shape * rng.normal());
    }
    if (scales.coefficient > 0.0) {
        for (double& b : next.coefficients) b += scales.coefficient * rng.normal();
    }
    if (scales.changepoint > 0.0) {
        for (double& t : next.changepoints) t += scales.changepoint * rng.normal();
        std::sort(next.changepoints.begin(), next.changepoints.end());
    }
    return next;
}

std::size_t parameter_count(const PiecewiseModel& model, const ProposalScales& scales) {
    std::size_t count = scales.coefficient > 0.0 ? model.coefficients.size() : 0;
    if (scales.log_shape > 0.0) count += model.phases();
    if (scales.changepoint > 0.0) count += model.changepoints.size();
    return count;
}

std::pair<double, double> changepoint_bounds(const Dataset& data) {
    return {data.min_time() + 1.0, data.max_time() - 1.0};
}

PiecewiseModel default_initial_model(const Dataset& data, std::size_t phases,
                                     std::optional<std::vector<double>> changepoints) {
    data.validate();
    if (phases == 0) throw std::invalid_argument("a model needs at least one phase");
    if (data.event_count() == 0) throw FitError("dataset has no events");

    PiecewiseModel model;
    model.covariate_count = data.covariate_count();
    model.shapes.assign(phases, 1.0);
    model.coefficients.assign(phases * model.row_width(), 0.0);

    if (changepoints) {
        if (changepoints->size() + 1 != phases) {
            throw std::invalid_argument("fixed change-points must number phases - 1");
        }
        model.changepoints = *changepoints;
    } else if (phases > 1) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (const auto& o : data.observations) {
            if (!o.event) continue;
            lo = std::min(lo, o.time);
            hi = std::max(hi, o.time);
        }
        const auto [b_lo, b_hi] = changepoint_bounds(data);
        if (!(b_hi > b_lo)) throw FitError("observed time range too short to place change-points");
        lo = std::max(lo, b_lo);
        hi = std::min(hi, b_hi);
        if (!(hi > lo)) {
            lo = b_lo;
            hi = b_hi;
        }
        for (std::size_t k = 1; k < phases; ++k) {
            model.changepoints.push_back(lo + (hi - lo) * static_cast<double>(k) /
                                                  static_cast<double>(phases));
        }
    }

    // Per-segment exponential MLE: events / exposure.
    std::vector<double> events(phases, 0.0);
    std::vector<double> exposure(phases, 0.0);
    for (const auto& o : data.observations) {
        const std::size_t seg = segment_index(o.time, model.changepoints);
        if (o.event) events[seg] += 1.0;
        for (std::size_t j = 0; j <= seg; ++j) {
            const double start = j == 0 ? 0.0 : model.changepoints[j - 1];
            const double end = j == seg ? o.time : model.changepoints[j];
            exposure[j] += end - start;
        }
    }
    for (std::size_t j = 0; j < phases; ++j) {
        const double rate = std::max(events[j], 0.5) / std::max(exposure[j], 1e-12);
        model.intercept(j) = -std::log(rate);
    }
    model.validate();
    return model;
}

FitResult sa_fit(const Dataset& data, const PiecewiseModel& init, const SAConfig& config) {
    if (data.observations.empty()) throw FitError("cannot fit an empty dataset");
    data.validate();
    config.validate();

    const LikelihoodEvaluator evaluate(data);
    const bool move_changepoints = config.scales.changepoint > 0.0;
    const auto bounds = changepoint_bounds(data);
    auto objective = [&](const PiecewiseModel& m) {
        if (move_changepoints && !within_bounds(m.changepoints, bounds)) return kNegInf;
        return evaluate(m);
    };

    PiecewiseModel current = init;
    double current_ll = objective(current);
    if (!std::isfinite(current_ll)) {
        throw FitError("initial model is infeasible (non-finite log-likelihood or change-points out of range)");
    }

    FitResult result;
    result.seed = config.seed;
    PiecewiseModel best = current;
    double best_ll = current_ll;

    Rng rng(config.seed);
    double temperature = config.initial_temperature;
    std::size_t accepted = 0;
    std::size_t since_improvement = 0;
    std::size_t iteration = 0;
    if (config.record_trace) result.trace.reserve(config.max_iterations);

    while (iteration < config.max_iterations && temperature >= config.final_temperature) {
        PiecewiseModel candidate = propose(current, config.scales, rng);
        const double candidate_ll = objective(candidate);
        const double a = acceptance_probability(candidate_ll, current_ll, temperature);
        const bool accept = a >= 1.0 || (a > 0.0 && rng.uniform() < a);
        if (accept) {
            current = std::move(candidate);
            current_ll = candidate_ll;
            ++accepted;
        }
        ++iteration;
        if (current_ll > best_ll) {
            best = current;
            best_ll = current_ll;
            since_improvement = 0;
        } else {
            ++since_improvement;
        }
        if (config.record_trace) result.trace.push_back({iteration, best_ll, current_ll, temperature});
        temperature = cooling_step(temperature, config.cooling_coefficient);
        if (since_improvement >= config.stall_window) break;
    }

    result.model = std::move(best);
    result.loglik = best_ll;
    result.n_params = parameter_count(result.model, config.scales);
    result.aic = aic_of(result.loglik, result.n_params);
    result.iterations_used = iteration;
    result.acceptance_rate =
        iteration == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(iteration);
    result.warnings = sparse_segment_warnings(data, result.model);
    return result;
}

std::uint64_t chain_seed(std::uint64_t master_seed, std::size_t chain) {
    return mix_seed(master_seed, chain);
}

MultiChainResult multi_chain_fit(const Dataset& data, const PiecewiseModel& init,
                                 const SAConfig& config, std::size_t n_chains) {
    if (n_chains == 0) throw std::invalid_argument("at least one chain is required");
    MultiChainResult out;
    out.chains.resize(n_chains);
    parallel_for(n_chains, [&](std::size_t i) {
        SAConfig chain_config = config;
        chain_config.seed = chain_seed(config.seed, i);
        out.chains[i] = sa_fit(data, init, chain_config);
    });
    for (std::size_t i = 1; i < n_chains; ++i) {
        if (out.chains[i].loglik > out.chains[out.best_index].loglik) out.best_index = i;
    }
    out.best = out.chains[out.best_index];
    return out;
}

FitResult fit_fixed_changepoints(const Dataset& data, std::span<const double> changepoints,
                                 const PiecewiseModel& init, const SAConfig& config,
                                 std::size_t n_chains) {
    const double upper = data.max_time();
    double prev = 0.0;
    for (double t : changepoints) {
        if (!(t > 0.0 && t < upper)) {
            throw std::invalid_argument("fixed change-points must lie inside (0, max observed time)");
        }
        if (!(t > prev)) throw std::invalid_argument("fixed change-points must be strictly increasing");
        prev = t;
    }
    if (changepoints.size() + 1 != init.phases()) {
        throw std::invalid_argument("fixed change-points must number phases - 1");
    }
    PiecewiseModel start = init;
    start.changepoints.assign(changepoints.begin(), changepoints.end());
    SAConfig fixed = config;
    fixed.scales.changepoint = 0.0;
    return multi_chain_fit(data, start, fixed, n_chains).best;
}

SAConfig FitSpec::effective_config() const {
    SAConfig cfg = sa;
    if (fixed_changepoints) cfg.scales.changepoint = 0.0;
    if (exponential) cfg.scales.log_shape = 0.0;
    return cfg;
}

PiecewiseModel FitSpec::prepare_init(const Dataset& data, std::optional<PiecewiseModel> init) const {
    PiecewiseModel model = init ? *init : default_initial_model(data, phases, fixed_changepoints);
    if (model.phases() != phases) throw std::invalid_argument("initial model has the wrong number of phases");
    if (fixed_changepoints) model.changepoints = *fixed_changepoints;
    if (exponential) std::fill(model.shapes.begin(), model.shapes.end(), 1.0);
    return model;
}

MultiChainResult fit_model(const Dataset& data, const FitSpec& spec, std::optional<PiecewiseModel> init) {
    const PiecewiseModel start = spec.prepare_init(data, std::move(init));
    const SAConfig cfg = spec.effective_config();
    if (spec.fixed_changepoints) {
        // Range checks live in fit_fixed_changepoints; run them once up front.
        const auto& cps = *spec.fixed_changepoints;
        for (double t : cps) {
            if (!(t > 0.0 && t < data.max_time())) {
                throw std::invalid_argument("fixed change-points must lie inside (0, max observed time)");
            }
        }
    }
    return multi_chain_fit(data, start, cfg, spec.chains);
}

}  // namespace piecehaz
