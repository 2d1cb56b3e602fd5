#pragma once

#include "piecehaz/kernels/loglik_kernel.hpp"
#include "piecehaz/model.hpp"

namespace piecehaz {

// Holds a prepared copy of the data so repeated evaluations (optimizer,
// profile grids) skip the per-observation setup.
class LikelihoodEvaluator {
  public:
    explicit LikelihoodEvaluator(const Dataset& data,
                                 kernels::Isa isa = kernels::active_isa());

    // -inf for models that violate their invariants or do not match the data.
    double operator()(const PiecewiseModel& model) const;

    kernels::Isa isa() const { return isa_; }
    std::size_t size() const { return data_.n; }

  private:
    kernels::PreparedData data_;
    kernels::Isa isa_;
};

}  // namespace piecehaz
