#include "llmrl/harness/summary.hpp"

#include <cmath>
#include <fstream>
#include <map>

#include "llmrl/errors.hpp"

namespace llmrl::harness {
namespace {

ArmStats arm_stats(const std::map<std::uint64_t, double>& finals) {
    ArmStats s;
    for (const auto& [seed, v] : finals) {
        s.seeds.push_back(seed);
        s.final_means.push_back(v);
        s.mean += v;
    }
    s.mean /= static_cast<double>(finals.size());
    for (double v : s.final_means) s.std += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(s.std / static_cast<double>(finals.size()));
    return s;
}

std::map<std::uint64_t, double> finals_by_seed(const std::vector<RunRecord>& records, int window,
                                               const std::string& metric) {
    std::map<std::uint64_t, double> out;
    for (const auto& r : records) {
        std::vector<double> series;
        for (const auto& row : r.rows) series.push_back(row.metric(metric));
        if (!out.emplace(r.seed, final_window_mean(series, window)).second) {
            throw UsageError("seed " + std::to_string(r.seed) + " appears twice in one arm");
        }
    }
    return out;
}

}  // namespace

nlohmann::json Comparison::to_json() const {
    auto arm = [](const ArmStats& s) {
        return nlohmann::json{{"seeds", s.seeds}, {"final_means", s.final_means}, {"mean", s.mean}, {"std", s.std}};
    };
    return {{"metric", metric},
            {"lower_is_better", lower_is_better},
            {"window", window},
            {"a", arm(a)},
            {"b", arm(b)},
            {"relative_improvement", relative_improvement},
            {"wins", wins},
            {"losses", losses},
            {"p_value", p_value ? nlohmann::json(*p_value) : nlohmann::json("n/a")}};
}

double final_window_mean(const std::vector<double>& series, int window) {
    if (window <= 0) throw UsageError("window must be positive");
    if (static_cast<std::size_t>(window) > series.size()) {
        throw UsageError("window of " + std::to_string(window) + " exceeds the " + std::to_string(series.size()) +
                         " recorded episodes");
    }
    double sum = 0.0;
    for (auto it = series.end() - window; it != series.end(); ++it) sum += *it;
    return sum / window;
}

double sign_test_p(int wins, int losses) {
    if (wins < 0 || losses < 0) throw UsageError("win and loss counts must be non-negative");
    const int n = wins + losses;
    if (n == 0) return 1.0;
    const int k = std::min(wins, losses);
    // P(X <= k) for X ~ Binomial(n, 1/2), accumulated in log space for large n.
    double tail = 0.0;
    for (int i = 0; i <= k; ++i) {
        tail += std::exp(std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) - n * std::log(2.0));
    }
    return std::min(1.0, 2.0 * tail);
}

Comparison summarize(const std::vector<RunRecord>& a, const std::vector<RunRecord>& b, int window,
                     const std::string& metric, bool lower_is_better) {
    if (a.empty() || b.empty()) throw UsageError("both arms need at least one run");
    const auto fa = finals_by_seed(a, window, metric);
    const auto fb = finals_by_seed(b, window, metric);
    if (fa.size() != fb.size()) throw UsageError("arms have different seed counts");
    for (const auto& [seed, _] : fa) {
        if (!fb.count(seed)) throw UsageError("seed " + std::to_string(seed) + " is missing from arm B");
    }

    Comparison c;
    c.metric = metric;
    c.lower_is_better = lower_is_better;
    c.window = window;
    c.a = arm_stats(fa);
    c.b = arm_stats(fb);
    const double diff = lower_is_better ? c.b.mean - c.a.mean : c.a.mean - c.b.mean;
    c.relative_improvement = diff == 0.0 ? 0.0 : diff / std::abs(c.b.mean);
    for (const auto& [seed, va] : fa) {
        const double vb = fb.at(seed);
        const bool a_better = lower_is_better ? va < vb : va > vb;
        const bool b_better = lower_is_better ? vb < va : vb > va;
        c.wins += a_better ? 1 : 0;
        c.losses += b_better ? 1 : 0;
    }
    if (fa.size() > 1) c.p_value = sign_test_p(c.wins, c.losses);
    return c;
}

void write_comparison_csv(const Comparison& c, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out.precision(10);
    out << "arm,seed,final_mean\n";
    for (std::size_t i = 0; i < c.a.seeds.size(); ++i) out << "a," << c.a.seeds[i] << ',' << c.a.final_means[i] << '\n';
    for (std::size_t i = 0; i < c.b.seeds.size(); ++i) out << "b," << c.b.seeds[i] << ',' << c.b.final_means[i] << '\n';
    out << "a,mean," << c.a.mean << '\n';
    out << "b,mean," << c.b.mean << '\n';
}

void write_curve_csv(const std::vector<RunRecord>& a, const std::vector<RunRecord>& b, const std::string& metric,
                     const std::string& path) {
    auto curve = [&metric](const std::vector<RunRecord>& runs) {
        std::size_t n = runs.empty() ? 0 : runs.front().rows.size();
        for (const auto& r : runs) n = std::min(n, r.rows.size());
        std::vector<double> mean(n, 0.0);
        for (const auto& r : runs) {
            for (std::size_t e = 0; e < n; ++e) mean[e] += r.rows[e].metric(metric) / static_cast<double>(runs.size());
        }
        return mean;
    };
    const auto ca = curve(a);
    const auto cb = curve(b);
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out.precision(10);
    out << "episode,a_mean,b_mean\n";
    for (std::size_t e = 0; e < std::max(ca.size(), cb.size()); ++e) {
        out << e << ',';
        if (e < ca.size()) out << ca[e];
        out << ',';
        if (e < cb.size()) out << cb[e];
        out << '\n';
    }
}

}  // namespace llmrl::harness
