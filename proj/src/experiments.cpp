#include "dynbatch/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <iomanip>
#include <limits>
#include <sstream>

#include "dynbatch/errors.hpp"

namespace dynbatch {

namespace {

std::string format_w2(double w2) {
    std::ostringstream os;
    os << std::setprecision(12) << w2;
    return os.str();
}

// Runs fn(i) for i in [0, n) on `jobs` async workers.  Output slots are
// pre-sized, so the result is independent of scheduling.
template <typename Fn>
void parallel_for(int n, int jobs, Fn&& fn) {
    jobs = std::max(1, std::min(jobs, n));
    if (jobs == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::future<void>> workers;
    workers.reserve(static_cast<std::size_t>(jobs));
    for (int j = 0; j < jobs; ++j)
        workers.push_back(std::async(std::launch::async, [&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        }));
    for (auto& f : workers) f.get();  // rethrows worker exceptions
}

}  // namespace

// ---------------------------------------------------------------------------
// tradeoff_sweep

TradeoffResult tradeoff_sweep(const SystemConfig& cfg, std::vector<double> w2_grid,
                              double w1, double overflow_cost, double delta_threshold,
                              const RviOptions& opts, int jobs) {
    if (w2_grid.empty()) throw validation_error("tradeoff_sweep: empty w2 grid");
    std::sort(w2_grid.begin(), w2_grid.end());
    w2_grid.erase(std::unique(w2_grid.begin(), w2_grid.end()), w2_grid.end());

    const int n = static_cast<int>(w2_grid.size());
    std::vector<TradeoffPoint> points(static_cast<std::size_t>(n));
    std::vector<std::string> point_errors(static_cast<std::size_t>(n));

    parallel_for(n, jobs, [&](int i) {
        const double w2 = w2_grid[static_cast<std::size_t>(i)];
        TradeoffPoint& p = points[static_cast<std::size_t>(i)];
        p.w2 = w2;
        p.policy_id = "smdp-w2=" + format_w2(w2);
        try {
            const SolveResult sol =
                auto_truncate(cfg, Weights{w1, w2}, overflow_cost, delta_threshold, opts);
            p.w_bar = sol.report.w_bar;
            p.p_bar = sol.report.p_bar;
            p.efficiency = cfg.lambda / sol.report.p_bar;
            p.s_max = sol.s_max;
            p.gain = sol.report.gain;
            p.delta = sol.report.delta;
            p.accepted = sol.report.accepted;
            p.converged = sol.rvi.converged;
            p.iterations = sol.rvi.iterations;
        } catch (const numerical_error& e) {
            point_errors[static_cast<std::size_t>(i)] = e.what();
        }
    });

    TradeoffResult out;
    for (int i = 0; i < n; ++i) {
        if (!point_errors[static_cast<std::size_t>(i)].empty()) {
            out.warnings.push_back("w2=" + format_w2(w2_grid[static_cast<std::size_t>(i)]) +
                                   " skipped: " + point_errors[static_cast<std::size_t>(i)]);
            continue;
        }
        out.points.push_back(std::move(points[static_cast<std::size_t>(i)]));
    }

    for (std::size_t i = 1; i < out.points.size(); ++i) {
        const TradeoffPoint& a = out.points[i - 1];
        const TradeoffPoint& b = out.points[i];
        if (b.w_bar < a.w_bar - 1e-9)
            out.warnings.push_back("w_bar decreased from w2=" + format_w2(a.w2) + " to w2=" +
                                   format_w2(b.w2));
        if (b.p_bar > a.p_bar + 1e-9)
            out.warnings.push_back("p_bar increased from w2=" + format_w2(a.w2) + " to w2=" +
                                   format_w2(b.w2));
    }
    return out;
}

std::string tradeoff_csv_header() { return "w2,w_bar_ms,p_bar_W,eff_req_per_J"; }

std::string tradeoff_csv_row(const TradeoffPoint& p, int precision) {
    std::ostringstream os;
    os << std::setprecision(precision) << p.w2 << ',' << p.w_bar << ',' << p.p_bar << ','
       << p.efficiency;
    return os.str();
}

// ---------------------------------------------------------------------------
// benchmark_suite

BenchmarkResult benchmark_suite(const SystemConfig& cfg, double w1,
                                const std::vector<double>& w2_list, double overflow_cost,
                                double delta_threshold, const RviOptions& opts) {
    if (w2_list.empty()) throw validation_error("benchmark_suite: empty w2 list");

    BenchmarkResult out;
    std::vector<Policy> benchmarks;
    benchmarks.push_back(Policy::greedy(/*strict=*/cfg.b_min > 1));
    std::vector<int> sizes;
    for (int b : {8, 16, 32}) {
        if (b > cfg.b_max) {
            out.notes.push_back("static-" + std::to_string(b) + " clipped to b_max=" +
                                std::to_string(cfg.b_max));
            b = cfg.b_max;
        }
        if (b < cfg.b_min) {
            out.notes.push_back("static-" + std::to_string(b) + " below b_min, skipped");
            continue;
        }
        if (std::find(sizes.begin(), sizes.end(), b) == sizes.end()) sizes.push_back(b);
    }
    for (int b : sizes) benchmarks.push_back(Policy::static_batch(b));

    for (double w2 : w2_list) {
        const Weights w{w1, w2};
        for (const Policy& p : benchmarks) {
            BenchmarkRow row;
            row.policy_id = p.id();
            row.w2 = w2;
            row.report = evaluate_policy_auto(cfg, w, p, overflow_cost, delta_threshold);
            out.rows.push_back(std::move(row));
        }
        const SolveResult sol = auto_truncate(cfg, w, overflow_cost, delta_threshold, opts);
        BenchmarkRow row;
        row.policy_id = "smdp";
        row.w2 = w2;
        row.report = sol.report;
        out.rows.push_back(std::move(row));
    }
    return out;
}

std::string benchmark_csv_header() {
    return "policy,w2,gain,w_bar_ms,p_bar_W,s_max,delta,accepted";
}

std::string benchmark_csv_row(const BenchmarkRow& r, int precision) {
    std::ostringstream os;
    os << std::setprecision(precision) << r.policy_id << ',' << r.w2 << ',' << r.report.gain
       << ',' << r.report.w_bar << ',' << r.report.p_bar << ',' << r.report.s_max << ','
       << r.report.delta << ',' << (r.report.accepted ? 1 : 0);
    return os.str();
}

// ---------------------------------------------------------------------------
// truncation_study / min_accepted_smax

std::vector<TruncationRow> truncation_study(const SystemConfig& cfg, const Weights& w,
                                            const std::vector<double>& overflow_costs,
                                            const std::vector<int>& s_max_grid,
                                            double delta_threshold, const RviOptions& opts) {
    std::vector<TruncationRow> rows;
    rows.reserve(overflow_costs.size() * s_max_grid.size());
    for (double c_o : overflow_costs) {
        for (int s_max : s_max_grid) {
            const SolveResult sol = solve_at(cfg, w, s_max, c_o, delta_threshold, opts);
            TruncationRow row;
            row.overflow_cost = c_o;
            row.s_max = s_max;
            row.gain = sol.report.gain;
            row.delta = sol.report.delta;
            row.iterations = sol.rvi.iterations;
            row.converged = sol.rvi.converged;
            row.accepted = sol.report.accepted;
            rows.push_back(row);
        }
    }
    return rows;
}

std::string truncation_csv_header() {
    return "c_o,s_max,gain,delta,iterations,converged,accepted";
}

std::string truncation_csv_row(const TruncationRow& r, int precision) {
    std::ostringstream os;
    os << std::setprecision(precision) << r.overflow_cost << ',' << r.s_max << ',' << r.gain
       << ',' << r.delta << ',' << r.iterations << ',' << (r.converged ? 1 : 0) << ','
       << (r.accepted ? 1 : 0);
    return os.str();
}

int min_accepted_smax(const SystemConfig& cfg, const Weights& w, double overflow_cost,
                      double delta_threshold, const RviOptions& opts) {
    const auto accepted = [&](int s_max) {
        return solve_at(cfg, w, s_max, overflow_cost, delta_threshold, opts).report.accepted;
    };

    if (accepted(cfg.b_max)) return cfg.b_max;

    int lo = cfg.b_max;  // rejected
    int hi = 2 * cfg.b_max;
    while (!accepted(hi)) {
        lo = hi;
        if (hi >= 4096)
            throw numerical_error("min_accepted_smax: not accepted by the s_max cap 4096");
        hi = std::min(4096, 2 * hi);
    }
    while (hi - lo > 1) {
        const int mid = lo + (hi - lo) / 2;
        (accepted(mid) ? hi : lo) = mid;
    }
    return hi;
}

// ---------------------------------------------------------------------------
// SLO selection

SloSelection select_weight_for_slo(const TradeoffResult& sweep, const SloConstraint& c) {
    if (c.kind != SloConstraint::Kind::mean)
        throw validation_error(
            "quantile/satisfaction SLOs need simulated stats; pass per-point SimStats");
    SloSelection sel;
    double closest = std::numeric_limits<double>::infinity();
    for (const TradeoffPoint& p : sweep.points) {
        if (!p.accepted) continue;
        closest = std::min(closest, p.w_bar);
        if (p.w_bar <= c.bound_ms && (!sel.feasible || p.w2 > sel.w2)) {
            sel.feasible = true;
            sel.w2 = p.w2;
            sel.policy_id = p.policy_id;
            sel.achieved = p.w_bar;
        }
    }
    if (!sel.feasible) {
        std::ostringstream os;
        os << std::setprecision(6) << "no sweep point meets mean <= " << c.bound_ms
           << " ms; best achievable is " << closest << " ms";
        sel.note = os.str();
    }
    return sel;
}

SloSelection select_weight_for_slo(const std::vector<std::pair<double, SimStats>>& simmed,
                                   const SloConstraint& c) {
    const auto metric = [&](const SimStats& s) -> double {
        switch (c.kind) {
            case SloConstraint::Kind::mean:
                return s.w_bar;
            case SloConstraint::Kind::quantile:
                for (const auto& [q, v] : s.percentiles)
                    if (std::abs(q - c.q) < 1e-12) return v;
                throw validation_error("requested quantile was not recorded in SimStats");
            case SloConstraint::Kind::satisfaction:
                return s.slo_satisfaction;
        }
        return 0.0;
    };
    const bool higher_is_better = c.kind == SloConstraint::Kind::satisfaction;
    const double bound = higher_is_better ? c.min_fraction : c.bound_ms;

    SloSelection sel;
    double closest = higher_is_better ? -std::numeric_limits<double>::infinity()
                                      : std::numeric_limits<double>::infinity();
    for (const auto& [w2, stats] : simmed) {
        const double m = metric(stats);
        closest = higher_is_better ? std::max(closest, m) : std::min(closest, m);
        const bool ok = higher_is_better ? m >= bound : m <= bound;
        if (ok && (!sel.feasible || w2 > sel.w2)) {
            sel.feasible = true;
            sel.w2 = w2;
            sel.policy_id = "smdp-w2=" + format_w2(w2);
            sel.achieved = m;
        }
    }
    if (!sel.feasible) {
        std::ostringstream os;
        os << std::setprecision(6) << "no simulated point meets the SLO; best achievable is "
           << closest;
        sel.note = os.str();
    }
    return sel;
}

}  // namespace dynbatch
