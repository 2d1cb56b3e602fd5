#pragma once

// Log-likelihood inner loop over observations. A scalar reference kernel and
// an AVX2/FMA kernel share one data layout; the dispatcher picks the widest
// kernel the CPU supports unless PIECEHAZ_KERNEL=scalar is set.

#include <cstddef>
#include <string_view>
#include <vector>

#include "piecehaz/model.hpp"

namespace piecehaz::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

// Structure-of-arrays copy of a dataset. Covariates are column-major.
struct PreparedData {
    std::size_t n = 0;
    std::size_t p = 0;
    std::vector<double> time;
    std::vector<double> log_time;
    std::vector<double> event;
    std::vector<double> covariates;

    explicit PreparedData(const Dataset& data);
    const double* column(std::size_t k) const { return covariates.data() + k * n; }
};

// Model quantities that do not depend on the observation.
struct PhaseTerms {
    std::size_t phases = 0;
    std::size_t p = 0;
    std::vector<double> shape;
    std::vector<double> log_shape;
    std::vector<double> coefficients;       // phases x (p + 1), row-major
    std::vector<double> changepoints;       // phases - 1
    std::vector<double> start_power;        // tau_{j-1}^{kappa_j}, 0 for the first phase
    std::vector<double> segment_increment;  // tau_j^{kappa_j} - tau_{j-1}^{kappa_j}

    explicit PhaseTerms(const PiecewiseModel& model);
};

double loglik_scalar(const PreparedData& data, const PhaseTerms& terms);
double loglik_avx2(const PreparedData& data, const PhaseTerms& terms);

bool cpu_supports(Isa isa);
Isa detect_isa();
// detect_isa() unless overridden by the PIECEHAZ_KERNEL environment variable.
Isa active_isa();

double loglik(const PreparedData& data, const PhaseTerms& terms, Isa isa);

}  // namespace piecehaz::kernels
