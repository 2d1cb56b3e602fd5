#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "piecehaz/model.hpp"

namespace piecehaz {

// Product-limit curve evaluated at the distinct event times.
struct StepSurvival {
    std::vector<double> times;
    std::vector<double> survival;
    std::vector<std::size_t> at_risk;
    std::vector<std::size_t> events;

    // Right-continuous step function; 1 before the first event time.
    double at(double t) const;
};

StepSurvival kaplan_meier(const Dataset& data);

enum class LogrankWeight { unit, gehan };

struct LogrankResult {
    double statistic = 0.0;
    std::size_t df = 0;
    double p_value = 1.0;
    std::vector<int> labels;  // ascending
    std::vector<std::size_t> group_size;
    std::vector<double> observed;
    std::vector<double> expected;
};

// Weighted K-sample log-rank test; gehan weights each event time by the
// total number at risk. Events and censorings tied at one instant are all
// counted in that instant's risk set.
LogrankResult weighted_logrank(const Dataset& data, std::span<const int> groups, LogrankWeight weight);

}  // namespace piecehaz
