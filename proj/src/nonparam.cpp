#include "piecehaz/nonparam.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "piecehaz/special.hpp"

namespace piecehaz {

namespace {

std::vector<std::size_t> time_order(const Dataset& data) {
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return data.observations[a].time < data.observations[b].time;
    });
    return order;
}

// Solves A x = b in place by Gaussian elimination with partial pivoting.
// Returns false when A is numerically singular.
bool solve(std::vector<std::vector<double>> a, std::vector<double>& b) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r) {
            if (std::fabs(a[r][c]) > std::fabs(a[piv][c])) piv = r;
        }
        if (std::fabs(a[piv][c]) < 1e-300) return false;
        std::swap(a[c], a[piv]);
        std::swap(b[c], b[piv]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
            b[r] -= f * b[c];
        }
    }
    for (std::size_t c = n; c-- > 0;) {
        for (std::size_t k = c + 1; k < n; ++k) b[c] -= a[c][k] * b[k];
        b[c] /= a[c][c];
    }
    return true;
}

}  // namespace

double StepSurvival::at(double t) const {
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return 1.0;
    return survival[static_cast<std::size_t>(it - times.begin()) - 1];
}

StepSurvival kaplan_meier(const Dataset& data) {
    if (data.observations.empty()) throw std::invalid_argument("Kaplan-Meier needs at least one observation");
    const auto order = time_order(data);
    StepSurvival out;
    double s = 1.0;
    std::size_t at_risk = data.size();
    std::size_t i = 0;
    while (i < order.size()) {
        const double t = data.observations[order[i]].time;
        std::size_t d = 0, removed = 0;
        while (i < order.size() && data.observations[order[i]].time == t) {
            if (data.observations[order[i]].event) ++d;
            ++removed;
            ++i;
        }
        if (d > 0) {
            s *= 1.0 - static_cast<double>(d) / static_cast<double>(at_risk);
            out.times.push_back(t);
            out.survival.push_back(s);
            out.at_risk.push_back(at_risk);
            out.events.push_back(d);
        }
        at_risk -= removed;
    }
    return out;
}

LogrankResult weighted_logrank(const Dataset& data, std::span<const int> groups, LogrankWeight weight) {
    if (groups.size() != data.size()) throw std::invalid_argument("one group label is required per observation");
    if (data.observations.empty()) throw std::invalid_argument("log-rank test needs observations");

    LogrankResult out;
    out.labels.assign(groups.begin(), groups.end());
    std::sort(out.labels.begin(), out.labels.end());
    out.labels.erase(std::unique(out.labels.begin(), out.labels.end()), out.labels.end());
    const std::size_t G = out.labels.size();
    if (G < 2) throw std::invalid_argument("log-rank test needs at least two non-empty groups");

    std::vector<std::size_t> gid(groups.size());
    for (std::size_t i = 0; i < groups.size(); ++i) {
        gid[i] = static_cast<std::size_t>(
            std::lower_bound(out.labels.begin(), out.labels.end(), groups[i]) - out.labels.begin());
    }
    out.group_size.assign(G, 0);
    for (std::size_t g : gid) ++out.group_size[g];

    std::vector<double> n_g(out.group_size.begin(), out.group_size.end());
    out.observed.assign(G, 0.0);
    out.expected.assign(G, 0.0);
    std::vector<double> u(G, 0.0);
    std::vector<std::vector<double>> v(G, std::vector<double>(G, 0.0));

    const auto order = time_order(data);
    std::size_t i = 0;
    while (i < order.size()) {
        const double t = data.observations[order[i]].time;
        std::vector<double> d_g(G, 0.0), removed(G, 0.0);
        while (i < order.size() && data.observations[order[i]].time == t) {
            const std::size_t idx = order[i];
            if (data.observations[idx].event) d_g[gid[idx]] += 1.0;
            removed[gid[idx]] += 1.0;
            ++i;
        }
        const double n = std::accumulate(n_g.begin(), n_g.end(), 0.0);
        const double d = std::accumulate(d_g.begin(), d_g.end(), 0.0);
        if (d > 0.0) {
            const double w = weight == LogrankWeight::gehan ? n : 1.0;
            for (std::size_t g = 0; g < G; ++g) {
                const double e = n_g[g] * d / n;
                out.observed[g] += d_g[g];
                out.expected[g] += e;
                u[g] += w * (d_g[g] - e);
            }
            if (n > 1.0) {
                const double f = w * w * d * (n - d) / (n - 1.0);
                for (std::size_t g = 0; g < G; ++g) {
                    for (std::size_t h = 0; h < G; ++h) {
                        const double delta = g == h ? 1.0 : 0.0;
                        v[g][h] += f * (n_g[g] / n) * (delta - n_g[h] / n);
                    }
                }
            }
        }
        for (std::size_t g = 0; g < G; ++g) n_g[g] -= removed[g];
    }

    // Drop the last group: the full covariance matrix is singular.
    const std::size_t k = G - 1;
    std::vector<std::vector<double>> vk(k, std::vector<double>(k));
    std::vector<double> x(u.begin(), u.begin() + static_cast<std::ptrdiff_t>(k));
    for (std::size_t g = 0; g < k; ++g) {
        for (std::size_t h = 0; h < k; ++h) vk[g][h] = v[g][h];
    }
    out.df = k;
    if (std::all_of(x.begin(), x.end(), [](double e) { return e == 0.0; }) || !solve(vk, x)) {
        out.statistic = 0.0;
    } else {
        double stat = 0.0;
        for (std::size_t g = 0; g < k; ++g) stat += u[g] * x[g];
        out.statistic = std::max(0.0, stat);
    }
    out.p_value = chi_square_upper_tail(out.statistic, static_cast<double>(out.df));
    return out;
}

}  // namespace piecehaz
