#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dynbatch/policy.hpp"
#include "dynbatch/queue_model.hpp"

namespace dynbatch {

struct SimOptions {
    std::uint64_t seed = 1;
    std::int64_t n_requests = 1'000'000;  // total departures simulated
    double warmup_fraction = 0.05;        // leading departures dropped from stats
    std::vector<double> quantiles = {0.5, 0.9, 0.95, 0.99};
    double slo_ms = 0.0;        // > 0: also report P(response <= slo_ms)
    bool keep_samples = false;  // retain sorted response times in the result
    std::ostream* trace = nullptr;  // per-departure CSV: arrival_ms,departure_ms,batch_size
};

struct SimStats {
    std::int64_t n_requests = 0;  // measured departures (after warmup)
    std::int64_t n_batches = 0;   // measured batches
    double w_bar = 0.0;           // mean response time, ms
    double p_bar = 0.0;           // energy per time over the window, W
    double l_bar = 0.0;           // time-average number in system
    std::vector<std::pair<double, double>> percentiles;  // (q, response ms)
    double slo_ms = 0.0;
    double slo_satisfaction = 0.0;
    std::uint64_t seed = 0;
    double window_ms = 0.0;            // measured window length
    double mean_interarrival = 0.0;    // diagnostic; expect ~1/lambda
    std::vector<double> sorted_samples;  // only if keep_samples
};

std::string sim_stats_csv_header(const std::vector<double>& quantiles);
std::string sim_stats_csv_row(const std::string& policy_id, const SimStats& s,
                              int precision = 9);

// Event-driven run of the real (untruncated) queue under the policy: Poisson
// arrivals, FCFS batches, service times drawn from the config's family.
// Decision points are batch completions and arrivals at a non-serving server.
// The arrival stream depends only on the seed, never on the policy.
SimStats simulate(const SystemConfig& cfg, const Policy& policy, const SimOptions& opts);

// Nearest-rank percentile: element ceil(q * n) of the sorted sample (1-based),
// q in (0, 1].
double percentile(const std::vector<double>& sorted_samples, double q);

// Fixed-width histogram of the samples, written as bin_left_ms,count rows.
void write_histogram_csv(std::ostream& os, const std::vector<double>& sorted_samples,
                         int bins);

}  // namespace dynbatch
