#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "piecehaz/datagen.hpp"
#include "piecehaz/errors.hpp"
#include "piecehaz/estimation.hpp"
#include "piecehaz/inference.hpp"
#include "piecehaz/kernels/loglik_kernel.hpp"
#include "piecehaz/nonparam.hpp"
#include "piecehaz/parallel.hpp"

namespace piecehaz::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

constexpr double kSignificance = 0.05;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CommandError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::vector<double> parse_list(const std::string& flag, const std::string& text) {
    try {
        auto values = parse_number_list(text);
        if (values.empty()) throw std::invalid_argument("empty");
        return values;
    } catch (const std::invalid_argument&) {
        throw UsageError(flag + ": expected a comma-separated number list, got '" + text + "'");
    }
}

// "a,b,c" or "from:to:step"
std::vector<double> parse_grid(const std::string& flag, const std::string& text) {
    if (text.find(':') == std::string::npos) return parse_list(flag, text);
    std::vector<double> parts;
    std::string t = text;
    for (char& c : t) {
        if (c == ':') c = ',';
    }
    parts = parse_list(flag, t);
    if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0]) {
        throw UsageError(flag + ": range must be from:to:step with step > 0");
    }
    std::vector<double> grid;
    for (double v = parts[0]; v <= parts[1] + 1e-9 * parts[2]; v += parts[2]) grid.push_back(v);
    return grid;
}

class Manifest {
  public:
    Manifest(std::string command, const std::vector<std::string>& args) {
        doc_["tool"] = "piecehaz";
        doc_["tool_version"] = PIECEHAZ_VERSION;
        doc_["command"] = std::move(command);
        doc_["argv"] = args;
        doc_["kernel"] = std::string(kernels::isa_name(kernels::active_isa()));
        doc_["threads"] = thread_budget();
        doc_["timings_seconds"] = json::object();
        doc_["outputs"] = json::array();
    }

    json& config() { return doc_["config"]; }
    void set_seed(std::uint64_t seed) { doc_["seed"] = seed; }

    template <class F>
    auto timed(const std::string& stage, F&& f) {
        const auto t0 = std::chrono::steady_clock::now();
        auto result = f();
        const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
        doc_["timings_seconds"][stage] = dt.count();
        return result;
    }

    void add_output(const std::string& name) { doc_["outputs"].push_back(name); }

    void write(const fs::path& dir) const {
        std::ofstream f(dir / "manifest.json");
        f << doc_.dump(2) << '\n';
        if (!f) throw IoError("cannot write " + (dir / "manifest.json").string());
    }

  private:
    json doc_;
};

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory: " + dir.string());
}

void write_file(const fs::path& dir, const std::string& name, const std::string& content, Manifest& manifest) {
    std::ofstream f(dir / name, std::ios::binary);
    f << content;
    if (!f) throw IoError("cannot write " + (dir / name).string());
    manifest.add_output(name);
}

Dataset load(const std::string& path) {
    if (path.empty()) throw UsageError("--data is required");
    if (!fs::exists(path)) throw IoError("input file not found: " + path);
    return read_dataset_file(path);
}

struct FitFlags {
    std::string data;
    std::size_t phases = 3;
    std::string fix_tau;
    std::uint64_t seed = 1;
    std::size_t chains = 10;
    std::size_t iters = 6000;
    bool exponential = false;
    std::string out;
};

void add_fit_flags(CLI::App* sub, FitFlags& f) {
    sub->add_option("--data", f.data, "Input CSV (time,event,covariates...)");
    sub->add_option("--phases", f.phases, "Number of hazard phases J")->capture_default_str();
    sub->add_option("--fix-tau", f.fix_tau, "Hold change-points fixed, e.g. 30,120");
    sub->add_option("--seed", f.seed, "Master random seed")->capture_default_str();
    sub->add_option("--chains", f.chains, "Independent annealing chains")->capture_default_str();
    sub->add_option("--iters", f.iters, "Iterations per chain")->capture_default_str();
    sub->add_flag("--exponential", f.exponential, "Hold all shapes at 1 (piecewise exponential)");
    sub->add_option("--out", f.out, "Output directory");
}

FitSpec make_spec(const FitFlags& f) {
    if (f.phases < 1) throw UsageError("--phases must be at least 1");
    if (f.chains < 1) throw UsageError("--chains must be at least 1");
    FitSpec spec;
    spec.phases = f.phases;
    spec.chains = f.chains;
    spec.exponential = f.exponential;
    spec.sa.max_iterations = f.iters;
    spec.sa.seed = f.seed;
    if (!f.fix_tau.empty()) {
        auto taus = parse_list("--fix-tau", f.fix_tau);
        if (taus.size() + 1 != f.phases) {
            throw UsageError("--fix-tau needs exactly phases - 1 change-points");
        }
        spec.fixed_changepoints = std::move(taus);
    }
    return spec;
}

json spec_json(const FitSpec& spec) {
    json j;
    j["phases"] = spec.phases;
    j["chains"] = spec.chains;
    j["family"] = spec.exponential ? "exponential" : "weibull";
    j["fixed_changepoints"] = spec.fixed_changepoints ? json(*spec.fixed_changepoints) : json(nullptr);
    const SAConfig cfg = spec.effective_config();
    j["initial_temperature"] = cfg.initial_temperature;
    j["cooling_coefficient"] = cfg.cooling_coefficient;
    j["final_temperature"] = cfg.final_temperature;
    j["max_iterations"] = cfg.max_iterations;
    j["stall_window"] = cfg.stall_window;
    j["proposal_scales"] = {{"log_shape", cfg.scales.log_shape},
                            {"coefficient", cfg.scales.coefficient},
                            {"changepoint", cfg.scales.changepoint}};
    j["seed"] = cfg.seed;
    return j;
}

struct Profile {
    std::string label;
    std::vector<double> x;
};

// Distinct covariate patterns when there are few of them, otherwise the
// all-zero profile and the covariate means.
std::vector<Profile> profiles(const Dataset& data) {
    const std::size_t p = data.covariate_count();
    if (p == 0) return {{"all", {}}};
    std::set<std::vector<double>> patterns;
    for (const auto& o : data.observations) {
        patterns.insert(o.covariates);
        if (patterns.size() > 4) break;
    }
    auto label_of = [&](const std::vector<double>& x) {
        std::string s;
        for (std::size_t k = 0; k < p; ++k) {
            if (k) s += ';';
            s += data.covariate_names[k] + "=" + num(x[k]);
        }
        return s;
    };
    std::vector<Profile> out;
    if (patterns.size() <= 4) {
        for (const auto& x : patterns) out.push_back({label_of(x), x});
        return out;
    }
    std::vector<double> zero(p, 0.0), mean(p, 0.0);
    for (const auto& o : data.observations) {
        for (std::size_t k = 0; k < p; ++k) mean[k] += o.covariates[k];
    }
    for (double& m : mean) m /= static_cast<double>(data.size());
    out.push_back({label_of(zero), zero});
    out.push_back({"mean:" + label_of(mean), mean});
    return out;
}

std::string curves_csv(const Dataset& data, const PiecewiseModel& model) {
    std::ostringstream csv;
    csv << "profile,t,hazard,cumulative_hazard,survival\n";
    const double tmax = data.max_time();
    constexpr int kPoints = 200;
    for (const auto& prof : profiles(data)) {
        const auto rates = subject_rates(prof.x, model);
        for (int k = 1; k <= kPoints; ++k) {
            const double t = tmax * k / kPoints;
            const double h = subject_hazard(t, prof.x, model);
            const double ch = pw_cumulative_hazard(t, model, rates);
            csv << prof.label << ',' << num(t) << ',' << num(h) << ',' << num(ch) << ','
                << num(std::exp(-ch)) << '\n';
        }
    }
    return csv.str();
}

std::string fit_report(const std::string& data_path, const Dataset& data, const FitSpec& spec,
                       const MultiChainResult& fit, bool with_manifest) {
    const auto& best = fit.best;
    std::ostringstream r;
    r << "# piecehaz fit report\n";
    r << "command: fit\n";
    if (with_manifest) r << "manifest: manifest.json\n";
    r << "data: " << data_path << '\n';
    r << "observations: " << data.size() << '\n';
    r << "events: " << data.event_count() << '\n';
    r << "phases: " << spec.phases << '\n';
    r << "family: " << (spec.exponential ? "exponential" : "weibull") << '\n';
    r << "changepoints: " << (spec.fixed_changepoints ? "fixed" : "estimated") << '\n';
    r << "loglik: " << num(best.loglik) << '\n';
    r << "n_params: " << best.n_params << '\n';
    r << "aic: " << num(best.aic) << '\n';
    r << "chains: " << fit.chains.size() << '\n';
    r << "best_chain: " << fit.best_index << '\n';
    r << "iterations_used: " << best.iterations_used << '\n';
    r << "acceptance_rate: " << num(best.acceptance_rate) << '\n';
    r << "kernel: " << kernels::isa_name(kernels::active_isa()) << '\n';
    r << "\n[parameters]\n";
    for (const auto& [name, value] : named_parameters(best.model, data.covariate_names)) {
        r << name << ": " << num(value) << '\n';
    }
    r << "\n[hazard_at_phase_mean_time]\n";
    const auto times = phase_mean_event_times(data, best.model);
    for (const auto& prof : profiles(data)) {
        for (std::size_t j = 0; j < best.model.phases(); ++j) {
            r << "h_" << j + 1 << '[' << prof.label << "]@" << num(times[j]) << ": "
              << num(phase_hazard(j, times[j], prof.x, best.model)) << '\n';
        }
    }
    r << "\n[chains]\n";
    for (std::size_t i = 0; i < fit.chains.size(); ++i) {
        r << "chain_" << i << ": loglik=" << num(fit.chains[i].loglik)
          << " iterations=" << fit.chains[i].iterations_used << '\n';
    }
    if (!best.warnings.empty()) {
        r << "\n[warnings]\n";
        for (const auto& w : best.warnings) r << "warning: " << w << '\n';
    }
    return r.str();
}

int cmd_fit(const FitFlags& f, const std::vector<std::string>& args, std::ostream& out) {
    const FitSpec spec = make_spec(f);
    Manifest manifest("fit", args);
    manifest.config() = spec_json(spec);
    manifest.config()["data"] = f.data;
    manifest.set_seed(f.seed);
    const Dataset data = manifest.timed("load", [&] { return load(f.data); });
    const auto fit = manifest.timed("fit", [&] { return fit_model(data, spec); });
    const std::string report = fit_report(f.data, data, spec, fit, !f.out.empty());
    out << report;
    if (!f.out.empty()) {
        ensure_dir(f.out);
        write_file(f.out, "fit_report.txt", report, manifest);
        write_file(f.out, "curves.csv", curves_csv(data, fit.best.model), manifest);
        manifest.write(f.out);
    }
    return kOk;
}

struct SimulateFlags {
    std::size_t n = 1000;
    std::string tau = "30,120";
    std::string kappa = "0.90,0.89,0.93";
    std::string intercepts;
    std::string effects;
    double treat_prob = 0.5;
    bool no_treatment = false;
    std::string censor = "admin:180";
    std::uint64_t seed = 1;
    bool round_days = false;
    std::string out;
};

Censoring parse_censor(const std::string& text) {
    if (text == "none") return NoCensoring{};
    const auto colon = text.find(':');
    if (colon != std::string::npos) {
        const std::string kind = text.substr(0, colon);
        const auto values = parse_list("--censor", text.substr(colon + 1));
        if (kind == "admin" && values.size() == 1) return AdministrativeCensoring{values[0]};
        if (kind == "uniform" && values.size() == 2) return UniformCensoring{values[0], values[1]};
    }
    throw UsageError("--censor must be admin:T, uniform:a,b or none");
}

int cmd_simulate(const SimulateFlags& f, const std::vector<std::string>& args, std::ostream& out) {
    const std::vector<double> taus = f.tau.empty() ? std::vector<double>{} : parse_list("--tau", f.tau);
    const std::size_t J = taus.size() + 1;
    std::vector<double> kappa = parse_list("--kappa", f.kappa);
    if (kappa.size() == 1) kappa.assign(J, kappa[0]);
    if (kappa.size() != J) throw UsageError("--kappa needs one shape per phase (or a single shared shape)");

    // Defaults reproduce a three-phase zoster-like profile.
    std::vector<double> intercepts, effects;
    if (!f.intercepts.empty()) {
        intercepts = parse_list("--intercepts", f.intercepts);
    } else if (J == 3) {
        intercepts = {4.030, 4.098, 4.965};
    } else {
        throw UsageError("--intercepts is required unless there are exactly three phases");
    }
    if (intercepts.size() != J) throw UsageError("--intercepts needs one value per phase");
    if (!f.no_treatment) {
        if (!f.effects.empty()) {
            effects = parse_list("--effects", f.effects);
        } else if (J == 3 && f.intercepts.empty()) {
            effects = {-0.115, -0.292, -0.165};
        } else {
            effects.assign(J, 0.0);
        }
        if (effects.size() != J) throw UsageError("--effects needs one value per phase");
    }

    CohortDesign design;
    design.n = f.n;
    design.seed = f.seed;
    design.censoring = parse_censor(f.censor);
    std::vector<std::vector<double>> rows;
    for (std::size_t j = 0; j < J; ++j) {
        rows.push_back(f.no_treatment ? std::vector<double>{intercepts[j]}
                                      : std::vector<double>{intercepts[j], effects[j]});
    }
    if (!f.no_treatment) {
        design.covariate_names = {"treat"};
        design.covariates = {BernoulliCovariate{f.treat_prob}};
    }
    try {
        design.model = PiecewiseModel(kappa, rows, taus);
        design.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("invalid design: ") + e.what());
    }

    Manifest manifest("simulate", args);
    manifest.set_seed(f.seed);
    manifest.config() = {{"n", f.n},           {"tau", taus},       {"kappa", kappa},
                         {"intercepts", intercepts}, {"effects", effects}, {"treat_prob", f.treat_prob},
                         {"censor", f.censor}, {"round_days", f.round_days}, {"seed", f.seed}};
    Dataset data;
    try {
        data = manifest.timed("simulate", [&] { return simulate_cohort(design); });
    } catch (const std::invalid_argument& e) {
        throw CommandError(e.what());
    }
    if (f.round_days) {
        for (auto& o : data.observations) o.time = std::max(1.0, std::ceil(o.time));
    }
    std::ostringstream csv;
    write_dataset(data, csv);
    if (f.out.empty()) {
        out << csv.str();
    } else {
        ensure_dir(f.out);
        write_file(f.out, "data.csv", csv.str(), manifest);
        manifest.write(f.out);
        out << "wrote " << data.size() << " rows to " << (fs::path(f.out) / "data.csv").string() << '\n';
    }
    return kOk;
}

struct BootstrapFlags {
    FitFlags fit;
    std::size_t B = 100;
    double ci_level = 0.95;
};

int cmd_bootstrap(const BootstrapFlags& f, const std::vector<std::string>& args, std::ostream& out) {
    if (f.B < 2) throw UsageError("--B must be at least 2");
    if (!(f.ci_level > 0.0 && f.ci_level < 1.0)) throw UsageError("--ci-level must lie in (0, 1)");
    const FitSpec spec = make_spec(f.fit);
    Manifest manifest("bootstrap", args);
    manifest.config() = spec_json(spec);
    manifest.config()["data"] = f.fit.data;
    manifest.config()["B"] = f.B;
    manifest.config()["ci_level"] = f.ci_level;
    manifest.set_seed(f.fit.seed);

    const Dataset data = manifest.timed("load", [&] { return load(f.fit.data); });
    const auto point = manifest.timed("fit", [&] { return fit_model(data, spec); });
    BootstrapOptions opts;
    opts.replicates = f.B;
    opts.seed = mix_seed(f.fit.seed, 0xB007);
    opts.ci_level = f.ci_level;
    BootstrapSummary boot;
    try {
        boot = manifest.timed("bootstrap", [&] { return bootstrap(data, spec, point.best, opts); });
    } catch (const FitError& e) {
        throw CommandError(e.what());
    }

    std::ostringstream table;
    table << "parameter,point,mean,se,ci_low,ci_high\n";
    auto row = [&](const std::string& name, const ParameterSummary& s) {
        table << name << ',' << num(s.point) << ',' << num(s.mean) << ',' << num(s.se) << ','
              << num(s.ci_low) << ',' << num(s.ci_high) << '\n';
    };
    for (const auto& name : boot.parameter_order) row(name, boot.per_parameter.at(name));

    const auto times = phase_mean_event_times(data, point.best.model);
    const auto profs = profiles(data);
    for (const auto& prof : profs) {
        for (std::size_t j = 0; j < point.best.model.phases(); ++j) {
            std::vector<double> sample;
            for (const auto& m : boot.replicate_models) sample.push_back(phase_hazard(j, times[j], prof.x, m));
            const double pt = phase_hazard(j, times[j], prof.x, point.best.model);
            row("h_" + std::to_string(j + 1) + "[" + prof.label + "]@" + num(times[j]),
                summarize_sample(pt, std::move(sample), f.ci_level));
        }
    }

    std::ostringstream ratios;
    ratios << "profile,phase_i,phase_j,t_i,t_j,ratio,se_log_ratio,z,p_value,reject_at_5pct\n";
    for (const auto& prof : profs) {
        for (std::size_t i = 0; i < point.best.model.phases(); ++i) {
            for (std::size_t j = i + 1; j < point.best.model.phases(); ++j) {
                try {
                    const auto t = hazard_ratio_test(point.best, boot, i, j, {times[i], times[j]}, prof.x);
                    ratios << prof.label << ',' << i + 1 << ',' << j + 1 << ',' << num(times[i]) << ','
                           << num(times[j]) << ',' << num(t.ratio) << ',' << num(t.se) << ','
                           << num(t.z) << ',' << num(t.p_value) << ','
                           << (t.p_value < kSignificance ? "yes" : "no") << '\n';
                } catch (const std::invalid_argument&) {
                    ratios << prof.label << ',' << i + 1 << ',' << j + 1 << ",,,,,,,\n";
                }
            }
        }
    }

    out << "# piecehaz bootstrap summary\n";
    if (!f.fit.out.empty()) out << "manifest: manifest.json\n";
    out << "replicates: " << boot.replicates << '\n';
    out << "failed_replicates: " << boot.failed_replicates << '\n';
    out << "ci_level: " << num(boot.ci_level) << '\n';
    out << "point_loglik: " << num(point.best.loglik) << "\n\n";
    out << table.str() << '\n' << ratios.str();
    if (!f.fit.out.empty()) {
        ensure_dir(f.fit.out);
        write_file(f.fit.out, "bootstrap.csv", table.str(), manifest);
        write_file(f.fit.out, "hazard_ratios.csv", ratios.str(), manifest);
        manifest.write(f.fit.out);
    }
    return kOk;
}

struct CompareFlags {
    FitFlags fit;
    std::vector<std::string> models;
    std::vector<std::string> given;
    std::string lrt;
};

struct ModelDecl {
    std::string label;
    bool fitted = false;
    FitSpec spec;
    double loglik = 0.0;
    std::size_t n_params = 0;
};

std::pair<std::string, std::string> split_label(const std::string& flag, const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError(flag + " must look like LABEL=...");
    return {text.substr(0, eq), text.substr(eq + 1)};
}

// A nested in B when B can represent every A model with extra freedom.
bool nested(const ModelDecl& a, const ModelDecl& b) {
    if (a.n_params >= b.n_params) return false;
    if (!a.fitted || !b.fitted) return true;
    if (a.spec.phases != b.spec.phases) return false;
    if (b.spec.exponential && !a.spec.exponential) return false;
    if (b.spec.fixed_changepoints) {
        return a.spec.fixed_changepoints && *a.spec.fixed_changepoints == *b.spec.fixed_changepoints;
    }
    return true;
}

int cmd_compare(const CompareFlags& f, const std::vector<std::string>& args, std::ostream& out) {
    std::vector<ModelDecl> decls;
    std::set<std::string> labels;
    for (const auto& text : f.models) {
        auto [label, rest] = split_label("--model", text);
        ModelDecl d;
        d.label = label;
        d.fitted = true;
        FitFlags ff = f.fit;
        const auto colon = rest.find(':');
        const std::string family = rest.substr(0, colon);
        if (family == "pem") {
            ff.exponential = true;
        } else if (family == "pwm") {
            ff.exponential = false;
        } else {
            throw UsageError("--model family must be pem or pwm");
        }
        ff.fix_tau = colon == std::string::npos ? std::string() : rest.substr(colon + 1);
        d.spec = make_spec(ff);
        decls.push_back(std::move(d));
    }
    for (const auto& text : f.given) {
        auto [label, rest] = split_label("--given", text);
        const auto colon = rest.find(':');
        if (colon == std::string::npos) throw UsageError("--given must look like LABEL=loglik:p");
        ModelDecl d;
        d.label = label;
        const auto ll = parse_list("--given", rest.substr(0, colon));
        const auto p = parse_list("--given", rest.substr(colon + 1));
        if (ll.size() != 1 || p.size() != 1 || p[0] < 0 || p[0] != std::floor(p[0])) {
            throw UsageError("--given must look like LABEL=loglik:p");
        }
        d.loglik = ll[0];
        d.n_params = static_cast<std::size_t>(p[0]);
        decls.push_back(std::move(d));
    }
    if (decls.size() < 2) throw UsageError("compare needs at least two models");
    for (const auto& d : decls) {
        if (!labels.insert(d.label).second) throw UsageError("duplicate model label: " + d.label);
    }

    Manifest manifest("compare", args);
    manifest.set_seed(f.fit.seed);
    manifest.config()["models"] = json::array();
    const bool need_data = std::any_of(decls.begin(), decls.end(), [](const ModelDecl& d) { return d.fitted; });
    Dataset data;
    if (need_data) data = manifest.timed("load", [&] { return load(f.fit.data); });
    for (auto& d : decls) {
        json jm = {{"label", d.label}};
        if (d.fitted) {
            const auto fit = manifest.timed("fit_" + d.label, [&] { return fit_model(data, d.spec); });
            d.loglik = fit.best.loglik;
            d.n_params = fit.best.n_params;
            jm["spec"] = spec_json(d.spec);
        } else {
            jm["given"] = {{"loglik", d.loglik}, {"n_params", d.n_params}};
        }
        manifest.config()["models"].push_back(jm);
    }

    std::optional<std::pair<std::string, std::string>> lrt;
    if (!f.lrt.empty()) {
        const auto comma = f.lrt.find(',');
        if (comma == std::string::npos) throw UsageError("--lrt must look like NULL,ALT");
        lrt = std::make_pair(f.lrt.substr(0, comma), f.lrt.substr(comma + 1));
        auto find = [&](const std::string& label) -> const ModelDecl& {
            for (const auto& d : decls) {
                if (d.label == label) return d;
            }
            throw UsageError("--lrt names an unknown model: " + label);
        };
        if (!nested(find(lrt->first), find(lrt->second))) {
            throw CommandError("models " + lrt->first + " and " + lrt->second + " are not nested");
        }
        manifest.config()["lrt"] = f.lrt;
    }

    std::vector<ComparisonEntry> entries;
    for (const auto& d : decls) entries.push_back(make_entry(d.label, d.loglik, d.n_params));
    const auto report = compare_models(entries, lrt);

    std::ostringstream table;
    table << "label,loglik,n_params,aic,delta_aic,aic_best\n";
    const double best_aic = report.models[report.best_index].aic;
    for (std::size_t i = 0; i < report.models.size(); ++i) {
        const auto& m = report.models[i];
        table << m.label << ',' << num(m.loglik) << ',' << m.n_params << ',' << num(m.aic) << ','
              << num(m.aic - best_aic) << ',' << (i == report.best_index ? "yes" : "no") << '\n';
    }
    std::ostringstream lrt_text;
    if (report.lrt) {
        lrt_text << "null,alt,statistic,df,p_value,reject_at_5pct\n"
                 << report.lrt_pair->first << ',' << report.lrt_pair->second << ','
                 << num(report.lrt->statistic) << ',' << report.lrt->df << ',' << num(report.lrt->p_value)
                 << ',' << (report.lrt->p_value < kSignificance ? "yes" : "no") << '\n';
    }
    out << "# piecehaz model comparison\n";
    if (!f.fit.out.empty()) out << "manifest: manifest.json\n";
    out << table.str();
    if (report.lrt) out << '\n' << lrt_text.str();
    if (!f.fit.out.empty()) {
        ensure_dir(f.fit.out);
        write_file(f.fit.out, "comparison.csv", table.str(), manifest);
        if (report.lrt) write_file(f.fit.out, "lrt.csv", lrt_text.str(), manifest);
        manifest.write(f.fit.out);
    }
    return kOk;
}

struct SurfaceFlags {
    FitFlags fit;
    std::string tau1_grid;
    std::string tau2_grid;
};

int cmd_surface(const SurfaceFlags& f, const std::vector<std::string>& args, std::ostream& out) {
    if (f.tau1_grid.empty() || f.tau2_grid.empty()) throw UsageError("--tau1-grid and --tau2-grid are required");
    const auto g1 = parse_grid("--tau1-grid", f.tau1_grid);
    const auto g2 = parse_grid("--tau2-grid", f.tau2_grid);
    if (g1.empty() || g2.empty()) throw UsageError("surface grids must be non-empty");
    FitFlags ff = f.fit;
    ff.phases = 3;
    ff.fix_tau.clear();
    const FitSpec spec = make_spec(ff);
    Manifest manifest("surface", args);
    manifest.config() = spec_json(spec);
    manifest.config()["data"] = f.fit.data;
    manifest.config()["tau1_grid"] = g1;
    manifest.config()["tau2_grid"] = g2;
    manifest.set_seed(f.fit.seed);

    const Dataset data = manifest.timed("load", [&] { return load(f.fit.data); });
    std::vector<double> s1 = g1, s2 = g2;
    std::sort(s1.begin(), s1.end());
    std::sort(s2.begin(), s2.end());
    const auto surface = manifest.timed("surface", [&] { return loglik_surface(data, s1, s2, spec); });

    std::ostringstream csv;
    csv << "tau1,tau2,loglik\n";
    for (std::size_t a = 0; a < surface.tau1.size(); ++a) {
        for (std::size_t b = 0; b < surface.tau2.size(); ++b) {
            const double v = surface.loglik[a][b];
            if (LoglikSurface::missing(v)) continue;
            csv << num(surface.tau1[a]) << ',' << num(surface.tau2[b]) << ',' << num(v) << '\n';
        }
    }
    if (f.fit.out.empty()) {
        out << csv.str();
    } else {
        ensure_dir(f.fit.out);
        write_file(f.fit.out, "surface.csv", csv.str(), manifest);
        manifest.write(f.fit.out);
        if (const auto best = surface.best()) {
            out << "best: tau1=" << num(surface.tau1[std::get<0>(*best)])
                << " tau2=" << num(surface.tau2[std::get<1>(*best)]) << " loglik=" << num(std::get<2>(*best))
                << '\n';
        }
    }
    return kOk;
}

struct KmFlags {
    std::string data;
    std::string group;
    std::string weight = "gehan";
    std::string out;
};

int cmd_km(const KmFlags& f, const std::vector<std::string>& args, std::ostream& out) {
    LogrankWeight weight;
    if (f.weight == "gehan") {
        weight = LogrankWeight::gehan;
    } else if (f.weight == "unit") {
        weight = LogrankWeight::unit;
    } else {
        throw UsageError("--weight must be gehan or unit");
    }
    Manifest manifest("km", args);
    manifest.config() = {{"data", f.data}, {"group", f.group}, {"weight", f.weight}};
    const Dataset data = manifest.timed("load", [&] { return load(f.data); });

    std::vector<int> labels(data.size(), 0);
    if (!f.group.empty()) {
        const auto it = std::find(data.covariate_names.begin(), data.covariate_names.end(), f.group);
        if (it == data.covariate_names.end()) throw CommandError("unknown group column: " + f.group);
        const auto k = static_cast<std::size_t>(it - data.covariate_names.begin());
        for (std::size_t i = 0; i < data.size(); ++i) {
            labels[i] = static_cast<int>(std::lround(data.observations[i].covariates[k]));
        }
    }
    std::map<int, Dataset> groups;
    for (std::size_t i = 0; i < data.size(); ++i) {
        auto& g = groups[labels[i]];
        g.covariate_names = data.covariate_names;
        g.observations.push_back(data.observations[i]);
    }

    std::ostringstream csv;
    csv << "group,time,at_risk,events,survival\n";
    for (const auto& [label, g] : groups) {
        const auto km = kaplan_meier(g);
        const std::string name = f.group.empty() ? "all" : f.group + "=" + std::to_string(label);
        for (std::size_t i = 0; i < km.times.size(); ++i) {
            csv << name << ',' << num(km.times[i]) << ',' << km.at_risk[i] << ',' << km.events[i] << ','
                << num(km.survival[i]) << '\n';
        }
    }
    std::ostringstream test;
    if (groups.size() >= 2) {
        const auto lr = weighted_logrank(data, labels, weight);
        test << "test,statistic,df,p_value,reject_at_5pct\n"
             << (weight == LogrankWeight::gehan ? "gehan-wilcoxon" : "logrank") << ',' << num(lr.statistic)
             << ',' << lr.df << ',' << num(lr.p_value) << ',' << (lr.p_value < kSignificance ? "yes" : "no")
             << '\n';
    }
    out << "# piecehaz kaplan-meier\n";
    if (!f.out.empty()) out << "manifest: manifest.json\n";
    out << csv.str();
    if (!test.str().empty()) out << '\n' << test.str();
    if (!f.out.empty()) {
        ensure_dir(f.out);
        write_file(f.out, "km.csv", csv.str(), manifest);
        if (!test.str().empty()) write_file(f.out, "logrank.csv", test.str(), manifest);
        manifest.write(f.out);
    }
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Piecewise Weibull survival regression with annealed change-points", "piecehaz"};
    app.require_subcommand(1);
    app.set_version_flag("--version", PIECEHAZ_VERSION);

    FitFlags fit_flags;
    auto* fit = app.add_subcommand("fit", "Fit a piecewise Weibull model");
    add_fit_flags(fit, fit_flags);

    SimulateFlags sim_flags;
    auto* sim = app.add_subcommand("simulate", "Simulate a cohort from a piecewise Weibull model");
    sim->add_option("--n", sim_flags.n, "Cohort size")->capture_default_str();
    sim->add_option("--tau", sim_flags.tau, "Change-points")->capture_default_str();
    sim->add_option("--kappa", sim_flags.kappa, "Shapes per phase")->capture_default_str();
    sim->add_option("--intercepts", sim_flags.intercepts, "Intercept per phase (rate = exp(-intercept))");
    sim->add_option("--effects", sim_flags.effects, "Treatment coefficient per phase");
    sim->add_option("--treat-prob", sim_flags.treat_prob, "P(treat = 1)")->capture_default_str();
    sim->add_flag("--no-treatment", sim_flags.no_treatment, "Simulate without a treatment covariate");
    sim->add_option("--censor", sim_flags.censor, "admin:T | uniform:a,b | none")->capture_default_str();
    sim->add_option("--seed", sim_flags.seed, "Random seed")->capture_default_str();
    sim->add_flag("--round-days", sim_flags.round_days, "Round times up to whole days");
    sim->add_option("--out", sim_flags.out, "Output directory (CSV to stdout when omitted)");

    BootstrapFlags boot_flags;
    auto* boot = app.add_subcommand("bootstrap", "Bootstrap standard errors and percentile intervals");
    add_fit_flags(boot, boot_flags.fit);
    boot->add_option("--B", boot_flags.B, "Bootstrap replicates")->capture_default_str();
    boot->add_option("--ci-level", boot_flags.ci_level, "Interval level")->capture_default_str();

    CompareFlags cmp_flags;
    auto* cmp = app.add_subcommand("compare", "Compare models by AIC and likelihood ratio");
    add_fit_flags(cmp, cmp_flags.fit);
    cmp->add_option("--model", cmp_flags.models, "LABEL=pem|pwm[:tau,...] (fit on --data)");
    cmp->add_option("--given", cmp_flags.given, "LABEL=loglik:p (precomputed)");
    cmp->add_option("--lrt", cmp_flags.lrt, "NULL,ALT labels for a likelihood ratio test");

    SurfaceFlags surf_flags;
    auto* surf = app.add_subcommand("surface", "Profile log-likelihood over change-point pairs");
    add_fit_flags(surf, surf_flags.fit);
    surf->add_option("--tau1-grid", surf_flags.tau1_grid, "a,b,c or from:to:step");
    surf->add_option("--tau2-grid", surf_flags.tau2_grid, "a,b,c or from:to:step");

    KmFlags km_flags;
    auto* km = app.add_subcommand("km", "Kaplan-Meier curves and weighted log-rank test");
    km->add_option("--data", km_flags.data, "Input CSV");
    km->add_option("--group", km_flags.group, "Covariate column holding group labels");
    km->add_option("--weight", km_flags.weight, "gehan | unit")->capture_default_str();
    km->add_option("--out", km_flags.out, "Output directory");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        if (!reversed.empty()) reversed.pop_back();
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForVersion&) {
        out << PIECEHAZ_VERSION << '\n';
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "piecehaz: " << e.what() << '\n';
        return kUsage;
    }

    try {
        if (*fit) return cmd_fit(fit_flags, args, out);
        if (*sim) return cmd_simulate(sim_flags, args, out);
        if (*boot) return cmd_bootstrap(boot_flags, args, out);
        if (*cmp) return cmd_compare(cmp_flags, args, out);
        if (*surf) return cmd_surface(surf_flags, args, out);
        if (*km) return cmd_km(km_flags, args, out);
    } catch (const UsageError& e) {
        err << "piecehaz: usage: " << e.what() << '\n';
        return kUsage;
    } catch (const IoError& e) {
        err << "piecehaz: " << e.what() << '\n';
        return kIoError;
    } catch (const ParseError& e) {
        err << "piecehaz: parse error: " << e.what() << '\n';
        return kBadData;
    } catch (const ValidationError& e) {
        err << "piecehaz: invalid data: " << e.what() << '\n';
        return kBadData;
    } catch (const std::exception& e) {
        err << "piecehaz: " << e.what() << '\n';
        return kFailure;
    }
    return kUsage;
}

}  // namespace piecehaz::cli
