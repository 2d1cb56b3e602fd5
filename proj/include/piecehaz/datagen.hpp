#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "piecehaz/model.hpp"

namespace piecehaz {

struct BernoulliCovariate {
    double probability = 0.5;
};
struct UniformCovariate {
    double lo = 0.0;
    double hi = 1.0;
};
struct ConstantCovariate {
    double value = 0.0;
};
using CovariateSpec = std::variant<BernoulliCovariate, UniformCovariate, ConstantCovariate>;

struct NoCensoring {};
struct AdministrativeCensoring {
    double time = 0.0;
};
struct UniformCensoring {
    double lo = 0.0;
    double hi = 0.0;
};
using Censoring = std::variant<NoCensoring, AdministrativeCensoring, UniformCensoring>;

struct CohortDesign {
    std::size_t n = 0;
    PiecewiseModel model;
    std::vector<std::string> covariate_names;
    std::vector<CovariateSpec> covariates;
    Censoring censoring = NoCensoring{};
    std::uint64_t seed = 0;

    void validate() const;
};

struct SimulatedCohort {
    Dataset data;
    std::vector<double> latent_event_times;
    std::vector<double> censoring_times;  // +inf when uncensored by design
};

// Solves S(t | x) = u segment by segment.
double sample_event_time(double u, std::span<const double> covariates, const PiecewiseModel& model);

SimulatedCohort simulate_cohort_detailed(const CohortDesign& design);
Dataset simulate_cohort(const CohortDesign& design);

// CSV with header `time,event,<cov>...`. Row numbers in errors are 1-based
// file lines (the header is line 1).
Dataset read_dataset(std::istream& in);
void write_dataset(const Dataset& data, std::ostream& out);

Dataset read_dataset_file(const std::filesystem::path& path);
void write_dataset_file(const Dataset& data, const std::filesystem::path& path);

// Shortest decimal text that parses back to the same double.
std::string format_double(double value);
// "1.5,2,3" -> {1.5, 2, 3}; throws std::invalid_argument on bad input.
std::vector<double> parse_number_list(std::string_view text);

}  // namespace piecehaz
