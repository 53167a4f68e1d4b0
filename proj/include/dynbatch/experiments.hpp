#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dynbatch/evaluate.hpp"
#include "dynbatch/simulate.hpp"

namespace dynbatch {

// --- latency/energy trade-off sweep ----------------------------------------

struct TradeoffPoint {
    double w2 = 0.0;
    double w_bar = 0.0;       // ms
    double p_bar = 0.0;       // W
    double efficiency = 0.0;  // lambda / p_bar (requests per unit energy)
    std::string policy_id;
    int s_max = 0;
    double gain = 0.0;
    double delta = 0.0;
    bool accepted = false;
    bool converged = false;
    int iterations = 0;
};

struct TradeoffResult {
    std::vector<TradeoffPoint> points;  // ascending w2
    std::vector<std::string> warnings;  // monotonicity violations, skipped points
};

// Solves the batching problem once per w2 (auto-truncated) and reports the
// achieved mean latency / power pair.  `jobs` > 1 solves points in parallel;
// results are ordered and bit-identical either way.
TradeoffResult tradeoff_sweep(const SystemConfig& cfg, std::vector<double> w2_grid,
                              double w1, double overflow_cost, double delta_threshold,
                              const RviOptions& opts = {}, int jobs = 1);

std::string tradeoff_csv_header();
std::string tradeoff_csv_row(const TradeoffPoint& p, int precision = 9);

// --- fixed-policy benchmarks ------------------------------------------------

struct BenchmarkRow {
    std::string policy_id;
    double w2 = 0.0;
    EvalReport report;
};

struct BenchmarkResult {
    std::vector<BenchmarkRow> rows;   // benchmarks and "smdp" rows per w2
    std::vector<std::string> notes;   // e.g. static sizes clipped to b_max
};

// Evaluates greedy and static(8/16/32, clipped into [b_min, b_max]) against
// the solved policy at every w2.  Every policy gets its own auto-truncation.
BenchmarkResult benchmark_suite(const SystemConfig& cfg, double w1,
                                const std::vector<double>& w2_list, double overflow_cost,
                                double delta_threshold, const RviOptions& opts = {});

std::string benchmark_csv_header();
std::string benchmark_csv_row(const BenchmarkRow& r, int precision = 9);

// --- truncation sensitivity --------------------------------------------------

struct TruncationRow {
    double overflow_cost = 0.0;
    int s_max = 0;
    double gain = 0.0;
    double delta = 0.0;
    int iterations = 0;
    bool converged = false;
    bool accepted = false;
};

// Full factorial: solve at every (overflow_cost, s_max) pair.
std::vector<TruncationRow> truncation_study(const SystemConfig& cfg, const Weights& w,
                                            const std::vector<double>& overflow_costs,
                                            const std::vector<int>& s_max_grid,
                                            double delta_threshold,
                                            const RviOptions& opts = {});

std::string truncation_csv_header();
std::string truncation_csv_row(const TruncationRow& r, int precision = 9);

// Smallest s_max whose solved policy is accepted (overflow share below the
// threshold): brackets by doubling from b_max, then bisects.  The returned
// level s satisfies accepted(s) and not accepted(s - 1).
int min_accepted_smax(const SystemConfig& cfg, const Weights& w, double overflow_cost,
                      double delta_threshold, const RviOptions& opts = {});

// --- SLO-driven weight selection ---------------------------------------------

struct SloConstraint {
    enum class Kind { mean, quantile, satisfaction };
    Kind kind = Kind::mean;
    double bound_ms = 0.0;       // response-time bound
    double q = 0.95;             // quantile (Kind::quantile)
    double min_fraction = 0.95;  // required P(resp <= bound) (Kind::satisfaction)
};

struct SloSelection {
    bool feasible = false;
    double w2 = 0.0;
    std::string policy_id;
    double achieved = 0.0;  // the constrained metric at the chosen point
    std::string note;
};

// Largest w2 (most energy-leaning point) still meeting the constraint.
// The mean-latency form works off the analytic sweep; quantile and
// satisfaction forms need simulated stats per sweep point.
SloSelection select_weight_for_slo(const TradeoffResult& sweep, const SloConstraint& c);
SloSelection select_weight_for_slo(const std::vector<std::pair<double, SimStats>>& simmed,
                                   const SloConstraint& c);

}  // namespace dynbatch
