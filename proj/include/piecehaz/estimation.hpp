#pragma once

// Simulated annealing maximisation of the piecewise Weibull log-likelihood
// over shapes, coefficients and change-points.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "piecehaz/model.hpp"
#include "piecehaz/random.hpp"

namespace piecehaz {

// Standard deviations of the Gaussian random-walk proposal, per block.
// A zero scale freezes the block: it is neither moved nor counted as a
// free parameter.
struct ProposalScales {
    double log_shape = 0.02;
    double coefficient = 0.05;
    double changepoint = 5.0;  // days
};

struct SAConfig {
    double initial_temperature = 500.0;
    double cooling_coefficient = 0.01;  // T' = T / (1 + c T)
    double final_temperature = 1e-3;
    std::size_t max_iterations = 6000;
    std::size_t stall_window = 1000;
    ProposalScales scales;
    std::uint64_t seed = 0;
    bool record_trace = false;

    void validate() const;
};

struct TracePoint {
    std::size_t iteration = 0;
    double loglik = 0.0;       // best so far
    double current = 0.0;      // state of the chain
    double temperature = 0.0;
};

struct FitResult {
    PiecewiseModel model;
    double loglik = 0.0;
    double aic = 0.0;
    std::size_t n_params = 0;
    std::size_t iterations_used = 0;
    double acceptance_rate = 0.0;
    std::uint64_t seed = 0;
    std::vector<TracePoint> trace;
    std::vector<std::string> warnings;
};

struct MultiChainResult {
    FitResult best;
    std::size_t best_index = 0;
    std::vector<FitResult> chains;
};

double cooling_step(double temperature, double coefficient);

// Metropolis rule: 1 for non-worse candidates, exp(delta / T) otherwise,
// 0 for an infeasible (-inf) candidate.
double acceptance_probability(double candidate_loglik, double current_loglik, double temperature);

// Shapes move on the log scale, change-points are re-sorted after moving.
PiecewiseModel propose(const PiecewiseModel& current, const ProposalScales& scales, Rng& rng);

// Free parameters: coefficients, plus shapes and change-points unless frozen.
std::size_t parameter_count(const PiecewiseModel& model, const ProposalScales& scales);

// Change-points are searched within [min time + 1, max time - 1].
std::pair<double, double> changepoint_bounds(const Dataset& data);

// Change-points evenly spaced over the event-time range (or the given fixed
// ones), unit shapes, per-segment exponential MLE intercepts and zero
// covariate effects.
PiecewiseModel default_initial_model(const Dataset& data, std::size_t phases,
                                     std::optional<std::vector<double>> changepoints = std::nullopt);

// Returns the best state ever visited.
FitResult sa_fit(const Dataset& data, const PiecewiseModel& init, const SAConfig& config);

std::uint64_t chain_seed(std::uint64_t master_seed, std::size_t chain);

// Independent chains seeded by chain_seed(config.seed, i); chains run in
// parallel up to thread_budget().
MultiChainResult multi_chain_fit(const Dataset& data, const PiecewiseModel& init,
                                 const SAConfig& config, std::size_t n_chains);

// Change-points held at the given values; they do not count as parameters.
FitResult fit_fixed_changepoints(const Dataset& data, std::span<const double> changepoints,
                                 const PiecewiseModel& init, const SAConfig& config,
                                 std::size_t n_chains = 1);

// Complete description of one model fit, reused by bootstrap, profile grids
// and the command line.
struct FitSpec {
    std::size_t phases = 3;
    SAConfig sa;
    std::size_t chains = 10;
    std::optional<std::vector<double>> fixed_changepoints;
    bool exponential = false;  // shapes held at 1 (piecewise exponential)

    // Config with frozen blocks zeroed out.
    SAConfig effective_config() const;
    // Init adjusted to the spec (fixed change-points, unit shapes).
    PiecewiseModel prepare_init(const Dataset& data, std::optional<PiecewiseModel> init) const;
};

MultiChainResult fit_model(const Dataset& data, const FitSpec& spec,
                           std::optional<PiecewiseModel> init = std::nullopt);

}  // namespace piecehaz
