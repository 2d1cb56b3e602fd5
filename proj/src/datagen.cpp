#include "piecehaz/datagen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "piecehaz/errors.hpp"
#include "piecehaz/random.hpp"

namespace piecehaz {

namespace {

double power(double t, double k) { return t > 0.0 ? std::exp(k * std::log(t)) : 0.0; }

bool valid_name(std::string_view name) {
    if (name.empty()) return false;
    for (char c : name) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                        c == '_';
        if (!ok) return false;
    }
    return true;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

bool parse_double(std::string_view text, double& value) {
    while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
    while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    if (text.empty()) return false;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    return ec == std::errc{} && ptr == text.data() + text.size();
}

}  // namespace

void CohortDesign::validate() const {
    if (n < 1) throw std::invalid_argument("cohort size must be at least 1");
    model.validate();
    if (covariates.size() != model.covariate_count || covariate_names.size() != covariates.size()) {
        throw std::invalid_argument("covariate specs, names and model coefficients disagree in count");
    }
    for (const auto& spec : covariates) {
        if (const auto* b = std::get_if<BernoulliCovariate>(&spec)) {
            if (!(b->probability >= 0.0 && b->probability <= 1.0)) {
                throw std::invalid_argument("bernoulli probability must lie in [0, 1]");
            }
        } else if (const auto* u = std::get_if<UniformCovariate>(&spec)) {
            if (!(u->lo <= u->hi)) throw std::invalid_argument("uniform covariate needs lo <= hi");
        }
    }
    if (const auto* a = std::get_if<AdministrativeCensoring>(&censoring)) {
        if (!(a->time > 0.0)) throw std::invalid_argument("administrative censoring time must be positive");
    } else if (const auto* u = std::get_if<UniformCensoring>(&censoring)) {
        if (!(u->lo > 0.0 && u->lo < u->hi)) {
            throw std::invalid_argument("uniform censoring needs 0 < a < b");
        }
    }
}

double sample_event_time(double u, std::span<const double> covariates, const PiecewiseModel& model) {
    if (!(u > 0.0 && u < 1.0)) throw DomainError("sampling needs u in (0, 1)");
    const double target = -std::log(u);
    double reached = 0.0;
    const std::size_t phases = model.phases();
    for (std::size_t j = 0; j < phases; ++j) {
        const double k = model.shapes[j];
        const double rate = subject_rate(j, covariates, model);
        const double start = j == 0 ? 0.0 : power(model.changepoints[j - 1], k);
        if (j + 1 < phases) {
            const double end = reached + rate * (power(model.changepoints[j], k) - start);
            if (target >= end) {
                reached = end;
                continue;
            }
        }
        return std::exp(std::log((target - reached) / rate + start) / k);
    }
    return std::numeric_limits<double>::infinity();
}

SimulatedCohort simulate_cohort_detailed(const CohortDesign& design) {
    design.validate();
    Rng rng(design.seed);
    SimulatedCohort out;
    out.data.covariate_names = design.covariate_names;
    out.data.observations.reserve(design.n);
    out.latent_event_times.reserve(design.n);
    out.censoring_times.reserve(design.n);

    std::vector<double> x(design.covariates.size());
    for (std::size_t i = 0; i < design.n; ++i) {
        for (std::size_t k = 0; k < x.size(); ++k) {
            const auto& spec = design.covariates[k];
            if (const auto* b = std::get_if<BernoulliCovariate>(&spec)) {
                x[k] = rng.uniform() < b->probability ? 1.0 : 0.0;
            } else if (const auto* uc = std::get_if<UniformCovariate>(&spec)) {
                x[k] = rng.uniform(uc->lo, uc->hi);
            } else {
                x[k] = std::get<ConstantCovariate>(spec).value;
            }
        }
        const double event_time = sample_event_time(rng.uniform(), x, design.model);
        double censor_time = std::numeric_limits<double>::infinity();
        if (const auto* a = std::get_if<AdministrativeCensoring>(&design.censoring)) {
            censor_time = a->time;
        } else if (const auto* uc = std::get_if<UniformCensoring>(&design.censoring)) {
            censor_time = rng.uniform(uc->lo, uc->hi);
        }
        const bool event = event_time <= censor_time;
        out.data.observations.push_back({event ? event_time : censor_time, event, x});
        out.latent_event_times.push_back(event_time);
        out.censoring_times.push_back(censor_time);
    }
    if (out.data.event_count() == 0) {
        throw std::invalid_argument("censoring removed every event from the simulated cohort");
    }
    return out;
}

Dataset simulate_cohort(const CohortDesign& design) { return simulate_cohort_detailed(design).data; }

Dataset read_dataset(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("missing header row", 1, 0);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split(line, ',');
    if (header.size() < 2 || header[0] != "time" || header[1] != "event") {
        throw ParseError("header must start with `time,event`", 1, 1);
    }
    Dataset data;
    for (std::size_t c = 2; c < header.size(); ++c) {
        if (!valid_name(header[c])) {
            throw ParseError("covariate names must be alphanumeric or underscore", 1, c + 1);
        }
        data.covariate_names.emplace_back(header[c]);
    }

    std::vector<std::size_t> bad_time;
    std::vector<std::size_t> bad_event;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split(line, ',');
        if (fields.size() != header.size()) {
            std::ostringstream msg;
            msg << "row " << row << ": expected " << header.size() << " fields, found " << fields.size();
            throw ParseError(msg.str(), row, std::min(fields.size(), header.size()) + 1);
        }
        Observation obs;
        obs.covariates.resize(header.size() - 2);
        for (std::size_t c = 0; c < fields.size(); ++c) {
            double value = 0.0;
            if (!parse_double(fields[c], value)) {
                std::ostringstream msg;
                msg << "row " << row << ", column " << c + 1 << " (" << header[c]
                    << "): not a number: '" << fields[c] << "'";
                throw ParseError(msg.str(), row, c + 1);
            }
            if (c == 0) {
                obs.time = value;
                if (!(value > 0.0) || !std::isfinite(value)) bad_time.push_back(row);
            } else if (c == 1) {
                if (value != 0.0 && value != 1.0) bad_event.push_back(row);
                obs.event = value == 1.0;
            } else {
                obs.covariates[c - 2] = value;
            }
        }
        data.observations.push_back(std::move(obs));
    }

    auto describe = [](const char* what, const std::vector<std::size_t>& rows) {
        std::ostringstream msg;
        msg << what << " (rows";
        for (std::size_t r : rows) msg << ' ' << r;
        msg << ')';
        return msg.str();
    };
    if (!bad_time.empty()) throw ValidationError(describe("time must be > 0", bad_time), bad_time);
    if (!bad_event.empty()) throw ValidationError(describe("event must be 0 or 1", bad_event), bad_event);
    if (data.observations.empty()) throw ValidationError("dataset has no observations", {});
    return data;
}

std::string format_double(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc{}) throw std::runtime_error("failed to format number");
    return std::string(buf, ptr);
}

void write_dataset(const Dataset& data, std::ostream& out) {
    out << "time,event";
    for (const auto& name : data.covariate_names) out << ',' << name;
    out << '\n';
    for (const auto& o : data.observations) {
        out << format_double(o.time) << ',' << (o.event ? '1' : '0');
        for (double x : o.covariates) out << ',' << format_double(x);
        out << '\n';
    }
    if (!out) throw std::runtime_error("failed to write dataset");
}

Dataset read_dataset_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset file: " + path.string());
    return read_dataset(in);
}

void write_dataset_file(const Dataset& data, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + path.string());
    write_dataset(data, out);
}

std::vector<double> parse_number_list(std::string_view text) {
    std::vector<double> values;
    if (text.empty()) return values;
    for (auto field : split(text, ',')) {
        double v = 0.0;
        if (!parse_double(field, v)) {
            throw std::invalid_argument("not a number list: '" + std::string(text) + "'");
        }
        values.push_back(v);
    }
    return values;
}

}  // namespace piecehaz
