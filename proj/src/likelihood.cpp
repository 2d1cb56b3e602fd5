#include "piecehaz/likelihood.hpp"

#include <cmath>
#include <limits>

namespace piecehaz {

LikelihoodEvaluator::LikelihoodEvaluator(const Dataset& data, kernels::Isa isa)
    : data_(data), isa_(isa) {}

double LikelihoodEvaluator::operator()(const PiecewiseModel& model) const {
    constexpr double infeasible = -std::numeric_limits<double>::infinity();
    if (!model.is_valid() || model.covariate_count != data_.p) return infeasible;
    const double value = kernels::loglik(data_, kernels::PhaseTerms(model), isa_);
    return std::isnan(value) ? infeasible : value;
}

}  // namespace piecehaz
