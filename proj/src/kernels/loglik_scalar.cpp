#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

#include "piecehaz/kernels/loglik_kernel.hpp"
#include "observation.hpp"

namespace piecehaz::kernels {

std::string_view isa_name(Isa isa) {
    switch (isa) {
        case Isa::scalar: return "scalar";
        case Isa::avx2: return "avx2";
    }
    return "unknown";
}

PreparedData::PreparedData(const Dataset& data)
    : n(data.size()),
      p(data.covariate_count()),
      time(n),
      log_time(n),
      event(n),
      covariates(n * p) {
    for (std::size_t i = 0; i < n; ++i) {
        const auto& o = data.observations[i];
        time[i] = o.time;
        log_time[i] = std::log(o.time);
        event[i] = o.event ? 1.0 : 0.0;
        for (std::size_t k = 0; k < p; ++k) covariates[k * n + i] = o.covariates[k];
    }
}

PhaseTerms::PhaseTerms(const PiecewiseModel& model)
    : phases(model.phases()),
      p(model.covariate_count),
      shape(model.shapes),
      log_shape(phases),
      coefficients(model.coefficients),
      changepoints(model.changepoints),
      start_power(phases, 0.0),
      segment_increment(phases, 0.0) {
    for (std::size_t j = 0; j < phases; ++j) {
        log_shape[j] = std::log(shape[j]);
        if (j > 0) start_power[j] = std::exp(shape[j] * std::log(changepoints[j - 1]));
        if (j + 1 < phases) {
            segment_increment[j] = std::exp(shape[j] * std::log(changepoints[j])) - start_power[j];
        }
    }
}

double loglik_scalar(const PreparedData& data, const PhaseTerms& terms) {
    double total = 0.0;
    for (std::size_t i = 0; i < data.n; ++i) total += detail::observation_loglik(data, terms, i);
    return total;
}

bool cpu_supports(Isa isa) {
    switch (isa) {
        case Isa::scalar: return true;
        case Isa::avx2:
#if defined(PIECEHAZ_HAVE_AVX2_KERNEL) && (defined(__x86_64__) || defined(__i386__))
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
    }
    return false;
}

Isa detect_isa() { return cpu_supports(Isa::avx2) ? Isa::avx2 : Isa::scalar; }

Isa active_isa() {
    static const Isa chosen = [] {
        if (const char* env = std::getenv("PIECEHAZ_KERNEL")) {
            if (std::string(env) == "scalar") return Isa::scalar;
        }
        return detect_isa();
    }();
    return chosen;
}

double loglik(const PreparedData& data, const PhaseTerms& terms, Isa isa) {
    if (isa == Isa::avx2 && cpu_supports(Isa::avx2)) return loglik_avx2(data, terms);
    return loglik_scalar(data, terms);
}

#if !defined(PIECEHAZ_HAVE_AVX2_KERNEL)
double loglik_avx2(const PreparedData& data, const PhaseTerms& terms) {
    return loglik_scalar(data, terms);
}
#endif

}  // namespace piecehaz::kernels
