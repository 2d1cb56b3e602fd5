#include "piecehaz/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "piecehaz/errors.hpp"
#include "piecehaz/parallel.hpp"
#include "piecehaz/random.hpp"
#include "piecehaz/special.hpp"

namespace piecehaz {

double aic(double loglik, std::size_t n_params) {
    return -2.0 * loglik + 2.0 * static_cast<double>(n_params);
}

LrtResult likelihood_ratio_test(double loglik_null, double loglik_alt, std::size_t df) {
    if (df < 1) throw std::invalid_argument("likelihood ratio test needs df >= 1");
    LrtResult r;
    r.df = df;
    r.statistic = std::max(0.0, 2.0 * (loglik_alt - loglik_null));
    r.p_value = chi_square_upper_tail(r.statistic, static_cast<double>(df));
    return r;
}

ComparisonEntry make_entry(std::string label, double loglik, std::size_t n_params) {
    return {std::move(label), loglik, n_params, aic(loglik, n_params)};
}

ComparisonReport compare_models(std::vector<ComparisonEntry> models,
                                std::optional<std::pair<std::string, std::string>> lrt) {
    if (models.empty()) throw std::invalid_argument("nothing to compare");
    ComparisonReport report;
    report.models = std::move(models);
    for (std::size_t i = 1; i < report.models.size(); ++i) {
        if (report.models[i].aic < report.models[report.best_index].aic) report.best_index = i;
    }
    if (lrt) {
        auto find = [&](const std::string& label) -> const ComparisonEntry& {
            for (const auto& m : report.models) {
                if (m.label == label) return m;
            }
            throw std::invalid_argument("unknown model label in LRT: " + label);
        };
        const auto& null_model = find(lrt->first);
        const auto& alt_model = find(lrt->second);
        if (null_model.n_params >= alt_model.n_params) {
            throw std::invalid_argument("LRT requires the null model (" + lrt->first +
                                        ") to have fewer parameters than the alternative (" +
                                        lrt->second + ")");
        }
        report.lrt_pair = lrt;
        report.lrt = likelihood_ratio_test(null_model.loglik, alt_model.loglik,
                                           alt_model.n_params - null_model.n_params);
    }
    return report;
}

std::vector<std::pair<std::string, double>> named_parameters(
    const PiecewiseModel& model, std::span<const std::string> covariate_names) {
    std::vector<std::pair<std::string, double>> out;
    for (std::size_t j = 0; j < model.changepoints.size(); ++j) {
        out.emplace_back("tau_" + std::to_string(j + 1), model.changepoints[j]);
    }
    for (std::size_t j = 0; j < model.phases(); ++j) {
        out.emplace_back("kappa_" + std::to_string(j + 1), model.shapes[j]);
    }
    for (std::size_t j = 0; j < model.phases(); ++j) {
        const std::string prefix = "beta_" + std::to_string(j + 1) + "_";
        out.emplace_back(prefix + "intercept", model.intercept(j));
        for (std::size_t k = 0; k < model.covariate_count; ++k) {
            const std::string name =
                k < covariate_names.size() ? covariate_names[k] : "x" + std::to_string(k + 1);
            out.emplace_back(prefix + name, model.coefficient(j, k + 1));
        }
    }
    return out;
}

double empirical_quantile(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw std::invalid_argument("quantile of an empty sample");
    const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

ParameterSummary summarize_sample(double point, std::vector<double> sample, double ci_level) {
    if (sample.empty()) throw std::invalid_argument("empty replicate sample");
    ParameterSummary s;
    s.point = point;
    const double n = static_cast<double>(sample.size());
    s.mean = std::accumulate(sample.begin(), sample.end(), 0.0) / n;
    if (sample.size() > 1) {
        double ss = 0.0;
        for (double v : sample) ss += (v - s.mean) * (v - s.mean);
        s.se = std::sqrt(ss / (n - 1.0));
    }
    std::sort(sample.begin(), sample.end());
    const double alpha = 1.0 - ci_level;
    s.ci_low = empirical_quantile(sample, 0.5 * alpha);
    s.ci_high = empirical_quantile(sample, 1.0 - 0.5 * alpha);
    return s;
}

BootstrapSummary summarize_replicates(const PiecewiseModel& point,
                                      std::span<const PiecewiseModel> replicates,
                                      std::span<const std::string> covariate_names,
                                      double ci_level, std::size_t failed) {
    if (!(ci_level > 0.0 && ci_level < 1.0)) throw std::invalid_argument("ci level must lie in (0, 1)");
    if (replicates.empty()) throw std::invalid_argument("no successful bootstrap replicates");
    BootstrapSummary out;
    out.replicates = replicates.size();
    out.ci_level = ci_level;
    out.failed_replicates = failed;
    out.point_model = point;
    out.replicate_models.assign(replicates.begin(), replicates.end());

    const auto point_params = named_parameters(point, covariate_names);
    std::vector<std::vector<double>> samples(point_params.size());
    for (const auto& rep : replicates) {
        const auto params = named_parameters(rep, covariate_names);
        if (params.size() != point_params.size()) {
            throw std::invalid_argument("replicate model shape differs from the point estimate");
        }
        for (std::size_t k = 0; k < params.size(); ++k) samples[k].push_back(params[k].second);
    }
    for (std::size_t k = 0; k < point_params.size(); ++k) {
        out.parameter_order.push_back(point_params[k].first);
        out.per_parameter[point_params[k].first] =
            summarize_sample(point_params[k].second, std::move(samples[k]), ci_level);
    }
    return out;
}

BootstrapSummary bootstrap(const Dataset& data, const FitSpec& spec, const FitResult& point_fit,
                           const BootstrapOptions& options) {
    if (options.replicates < 2) throw std::invalid_argument("bootstrap needs at least 2 replicates");
    data.validate();
    const std::size_t n = data.size();
    const std::size_t B = options.replicates;

    std::vector<std::optional<PiecewiseModel>> fits(B);
    parallel_for(B, [&](std::size_t b) {
        const std::uint64_t stream = mix_seed(options.seed, b);
        Rng rng(stream);
        Dataset resample;
        resample.covariate_names = data.covariate_names;
        resample.observations.reserve(n);
        for (std::size_t i = 0; i < n; ++i) resample.observations.push_back(data.observations[rng.below(n)]);
        if (resample.event_count() == 0) return;

        PiecewiseModel init = point_fit.model;
        if (!spec.fixed_changepoints && !init.changepoints.empty()) {
            // Keep the start inside the resample's admissible change-point range.
            const auto [lo, hi] = changepoint_bounds(resample);
            if (!(hi > lo)) return;
            const double step = (hi - lo) * 1e-3;
            double floor_value = lo;
            for (double& t : init.changepoints) {
                t = std::clamp(t, floor_value, hi);
                floor_value = t + step;
            }
            if (init.changepoints.back() > hi) return;
        }
        FitSpec rep_spec = spec;
        rep_spec.sa.seed = mix_seed(stream, 0x5eed);
        try {
            auto result = fit_model(resample, rep_spec, init);
            if (std::isfinite(result.best.loglik)) fits[b] = std::move(result.best.model);
        } catch (const FitError&) {
        } catch (const std::invalid_argument&) {
        }
    });

    std::vector<PiecewiseModel> good;
    for (auto& f : fits) {
        if (f) good.push_back(std::move(*f));
    }
    const std::size_t failed = B - good.size();
    if (static_cast<double>(failed) > options.max_failure_fraction * static_cast<double>(B)) {
        throw FitError("too many bootstrap replicates failed: " + std::to_string(failed) + " of " +
                       std::to_string(B));
    }
    return summarize_replicates(point_fit.model, good, data.covariate_names, options.ci_level, failed);
}

BootstrapSummary bootstrap(const Dataset& data, const FitSpec& spec, const BootstrapOptions& options) {
    const auto point = fit_model(data, spec);
    return bootstrap(data, spec, point.best, options);
}

std::vector<double> phase_mean_event_times(const Dataset& data, const PiecewiseModel& model) {
    const std::size_t J = model.phases();
    std::vector<double> event_sum(J, 0.0), any_sum(J, 0.0);
    std::vector<std::size_t> event_n(J, 0), any_n(J, 0);
    for (const auto& o : data.observations) {
        const std::size_t j = segment_index(o.time, model.changepoints);
        any_sum[j] += o.time;
        ++any_n[j];
        if (o.event) {
            event_sum[j] += o.time;
            ++event_n[j];
        }
    }
    std::vector<double> out(J);
    for (std::size_t j = 0; j < J; ++j) {
        if (event_n[j] > 0) {
            out[j] = event_sum[j] / static_cast<double>(event_n[j]);
        } else if (any_n[j] > 0) {
            out[j] = any_sum[j] / static_cast<double>(any_n[j]);
        } else {
            out[j] = j == 0 ? 1.0 : model.changepoints[j - 1];
        }
    }
    return out;
}

HazardRatioTest hazard_ratio_test(const FitResult& fit, const BootstrapSummary& boot,
                                  std::size_t phase_i, std::size_t phase_j,
                                  std::pair<double, double> eval_times,
                                  std::span<const double> covariates) {
    if (!(phase_i < phase_j)) throw std::invalid_argument("hazard ratio test needs phase_i < phase_j");
    if (phase_j >= fit.model.phases()) throw std::out_of_range("phase index out of range");
    if (boot.replicate_models.size() < 2) throw std::invalid_argument("bootstrap has too few replicates");

    auto log_ratio = [&](const PiecewiseModel& m) {
        return std::log(phase_hazard(phase_j, eval_times.second, covariates, m)) -
               std::log(phase_hazard(phase_i, eval_times.first, covariates, m));
    };

    HazardRatioTest t;
    t.log_ratio = log_ratio(fit.model);
    t.ratio = std::exp(t.log_ratio);

    std::vector<double> sample;
    sample.reserve(boot.replicate_models.size());
    for (const auto& m : boot.replicate_models) sample.push_back(log_ratio(m));
    t.se = summarize_sample(t.log_ratio, std::move(sample), boot.ci_level).se;

    if (t.se == 0.0) {
        if (t.log_ratio != 0.0) {
            throw std::invalid_argument("bootstrap standard error of the log hazard ratio is zero");
        }
        t.z = 0.0;
        t.p_value = 1.0;
        return t;
    }
    t.z = t.log_ratio / t.se;
    t.p_value = normal_two_sided_p(t.z);
    return t;
}

bool LoglikSurface::missing(double v) { return std::isnan(v); }

std::optional<std::tuple<std::size_t, std::size_t, double>> LoglikSurface::best() const {
    std::optional<std::tuple<std::size_t, std::size_t, double>> out;
    for (std::size_t a = 0; a < loglik.size(); ++a) {
        for (std::size_t b = 0; b < loglik[a].size(); ++b) {
            const double v = loglik[a][b];
            if (missing(v)) continue;
            if (!out || v > std::get<2>(*out)) out = std::make_tuple(a, b, v);
        }
    }
    return out;
}

LoglikSurface loglik_surface(const Dataset& data, std::span<const double> tau1_grid,
                             std::span<const double> tau2_grid, const FitSpec& spec) {
    if (tau1_grid.empty() || tau2_grid.empty()) throw std::invalid_argument("surface grids must be non-empty");
    if (!std::is_sorted(tau1_grid.begin(), tau1_grid.end()) ||
        !std::is_sorted(tau2_grid.begin(), tau2_grid.end())) {
        throw std::invalid_argument("surface grids must be sorted ascending");
    }
    if (spec.phases != 3) throw std::invalid_argument("the change-point surface needs a three-phase model");
    data.validate();

    LoglikSurface s;
    s.tau1.assign(tau1_grid.begin(), tau1_grid.end());
    s.tau2.assign(tau2_grid.begin(), tau2_grid.end());
    const double nan = std::numeric_limits<double>::quiet_NaN();
    s.loglik.assign(s.tau1.size(), std::vector<double>(s.tau2.size(), nan));

    const double upper = data.max_time();
    std::vector<std::pair<std::size_t, std::size_t>> cells;
    for (std::size_t a = 0; a < s.tau1.size(); ++a) {
        for (std::size_t b = 0; b < s.tau2.size(); ++b) {
            const double t1 = s.tau1[a], t2 = s.tau2[b];
            if (t1 > 0.0 && t1 < t2 && t2 < upper) cells.emplace_back(a, b);
        }
    }
    parallel_for(cells.size(), [&](std::size_t c) {
        const auto [a, b] = cells[c];
        FitSpec cell = spec;
        cell.fixed_changepoints = std::vector<double>{s.tau1[a], s.tau2[b]};
        try {
            s.loglik[a][b] = fit_model(data, cell).best.loglik;
        } catch (const FitError&) {
        }
    });
    return s;
}

}  // namespace piecehaz
