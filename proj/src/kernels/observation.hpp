#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "piecehaz/kernels/loglik_kernel.hpp"

namespace piecehaz::kernels::detail {

// Contribution of observation i: event * log h(y) - H(y).
inline double observation_loglik(const PreparedData& data, const PhaseTerms& terms, std::size_t i) {
    const std::size_t width = terms.p + 1;
    const std::size_t seg = static_cast<std::size_t>(
        std::upper_bound(terms.changepoints.begin(), terms.changepoints.end(), data.time[i]) -
        terms.changepoints.begin());
    double cumulative = 0.0;
    double eta_seg = 0.0;
    for (std::size_t m = 0; m <= seg; ++m) {
        const double* row = terms.coefficients.data() + m * width;
        double eta = row[0];
        for (std::size_t k = 0; k < terms.p; ++k) eta += row[k + 1] * data.covariates[k * data.n + i];
        const double rate = std::exp(-eta);
        if (m < seg) {
            cumulative += rate * terms.segment_increment[m];
        } else {
            const double tk = std::exp(terms.shape[m] * data.log_time[i]);
            cumulative += rate * (tk - terms.start_power[m]);
            eta_seg = eta;
        }
    }
    const double log_hazard =
        terms.log_shape[seg] - eta_seg + (terms.shape[seg] - 1.0) * data.log_time[i];
    return data.event[i] * log_hazard - cumulative;
}

}  // namespace piecehaz::kernels::detail
