#include "dynbatch/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>

#include "dynbatch/errors.hpp"
#include "dynbatch/rng.hpp"

namespace dynbatch {

double percentile(const std::vector<double>& sorted_samples, double q) {
    if (sorted_samples.empty()) throw validation_error("percentile: no samples");
    if (!(q > 0.0) || q > 1.0) throw validation_error("percentile: q must lie in (0, 1]");
    const auto n = static_cast<double>(sorted_samples.size());
    // Nearest rank, with a nudge so q * n that is integral up to round-off
    // does not spill into the next rank.
    auto rank = static_cast<std::int64_t>(std::ceil(q * n - 1e-9));
    rank = std::clamp<std::int64_t>(rank, 1, sorted_samples.size());
    return sorted_samples[static_cast<std::size_t>(rank - 1)];
}

void write_histogram_csv(std::ostream& os, const std::vector<double>& sorted_samples,
                         int bins) {
    if (sorted_samples.empty()) throw validation_error("histogram: no samples");
    if (bins < 1) throw validation_error("histogram: bins must be >= 1");
    const double lo = sorted_samples.front();
    const double hi = sorted_samples.back();
    const double width = (hi > lo) ? (hi - lo) / bins : 1.0;
    std::vector<std::int64_t> count(static_cast<std::size_t>(bins), 0);
    for (double x : sorted_samples) {
        auto i = static_cast<std::int64_t>((x - lo) / width);
        i = std::clamp<std::int64_t>(i, 0, bins - 1);
        ++count[static_cast<std::size_t>(i)];
    }
    os << "bin_left_ms,count\n" << std::setprecision(9);
    for (int i = 0; i < bins; ++i) os << lo + i * width << ',' << count[i] << '\n';
}

namespace {

std::string quantile_label(double q) {
    std::ostringstream os;
    os << 'p' << q * 100.0;
    return os.str();
}

}  // namespace

std::string sim_stats_csv_header(const std::vector<double>& quantiles) {
    std::string h = "policy,n_requests,w_bar_ms,p_bar_W,l_bar";
    for (double q : quantiles) h += ',' + quantile_label(q) + "_ms";
    h += ",slo_ms,slo_satisfaction,seed";
    return h;
}

std::string sim_stats_csv_row(const std::string& policy_id, const SimStats& s, int precision) {
    std::ostringstream os;
    os << std::setprecision(precision) << policy_id << ',' << s.n_requests << ',' << s.w_bar
       << ',' << s.p_bar << ',' << s.l_bar;
    for (const auto& [q, v] : s.percentiles) os << ',' << v;
    os << ',' << s.slo_ms << ',' << s.slo_satisfaction << ',' << s.seed;
    return os.str();
}

SimStats simulate(const SystemConfig& cfg, const Policy& policy, const SimOptions& opts) {
    cfg.validate();
    policy.validate(cfg);
    if (opts.n_requests < 1) throw validation_error("simulate: n_requests must be >= 1");
    if (opts.warmup_fraction < 0.0 || opts.warmup_fraction >= 1.0)
        throw validation_error("simulate: warmup_fraction must lie in [0, 1)");
    for (double q : opts.quantiles)
        if (!(q > 0.0) || q > 1.0)
            throw validation_error("simulate: quantiles must lie in (0, 1]");

    splitmix64 arrivals = make_stream(opts.seed, 0);
    splitmix64 services = make_stream(opts.seed, 1);

    const auto draw_service = [&](int a) -> double {
        const double l = cfg.service_mean(a);
        switch (cfg.dist.family) {
            case ServiceDistribution::Family::deterministic:
                return l;
            case ServiceDistribution::Family::exponential:
                return services.next_exponential(1.0 / l);
            case ServiceDistribution::Family::erlang: {
                double sum = 0.0;
                for (int i = 0; i < cfg.dist.shape; ++i)
                    sum += services.next_exponential(cfg.dist.shape / l);
                return sum;
            }
            case ServiceDistribution::Family::hyperexponential: {
                const double u = services.next_uniform();
                double acc = 0.0;
                std::size_t branch = cfg.dist.weights.size() - 1;
                for (std::size_t i = 0; i < cfg.dist.weights.size(); ++i) {
                    acc += cfg.dist.weights[i];
                    if (u <= acc) {
                        branch = i;
                        break;
                    }
                }
                return services.next_exponential(1.0 / (cfg.dist.mean_scales[branch] * l));
            }
        }
        return l;
    };

    const std::int64_t n_total = opts.n_requests;
    const auto warmup = static_cast<std::int64_t>(opts.warmup_fraction *
                                                  static_cast<double>(n_total));
    if (n_total - warmup < 1) throw validation_error("simulate: warmup leaves no samples");

    std::deque<double> queue;  // arrival times of waiting requests
    std::vector<double> batch;
    batch.reserve(static_cast<std::size_t>(cfg.b_max));

    double t = 0.0;
    double interarrival_sum = 0.0;
    std::int64_t n_arrivals = 0;
    const auto next_interarrival = [&] {
        const double dt = arrivals.next_exponential(cfg.lambda);
        interarrival_sum += dt;
        ++n_arrivals;
        return dt;
    };
    double next_arrival = next_interarrival();

    bool busy = false;
    double t_done = 0.0;
    int batch_size = 0;

    std::int64_t departed = 0;
    std::int64_t n_in_system = 0;
    double window_start = -1.0;  // set at the first measured departure
    double energy = 0.0;
    double area = 0.0;  // integral of n_in_system over the window
    std::int64_t measured_batches = 0;
    std::vector<double> samples;
    samples.reserve(static_cast<std::size_t>(n_total - warmup));

    const auto advance = [&](double to) {
        if (window_start >= 0.0) area += static_cast<double>(n_in_system) * (to - t);
        t = to;
    };

    while (departed < n_total) {
        if (!busy) {
            const int s = static_cast<int>(queue.size());
            const int a = policy.action(s, cfg);
            if (a == 0) {
                advance(next_arrival);
                queue.push_back(t);
                ++n_in_system;
                next_arrival = t + next_interarrival();
                if (queue.size() > 20'000'000)
                    throw numerical_error("simulate: queue runaway (policy never serves?)");
            } else {
                if (a > s)
                    throw validation_error("simulate: policy " + policy.id() + " serves " +
                                           std::to_string(a) + " with only " +
                                           std::to_string(s) + " queued at t=" +
                                           std::to_string(t) + " ms");
                batch.assign(queue.begin(), queue.begin() + a);
                queue.erase(queue.begin(), queue.begin() + a);
                batch_size = a;
                busy = true;
                t_done = t + draw_service(a);
            }
        } else if (next_arrival <= t_done) {
            advance(next_arrival);
            queue.push_back(t);
            ++n_in_system;
            next_arrival = t + next_interarrival();
            if (queue.size() > 20'000'000)
                throw numerical_error("simulate: queue runaway (policy never serves?)");
        } else {
            advance(t_done);
            for (double arr : batch) {
                if (departed >= warmup) {
                    if (window_start < 0.0) window_start = t;
                    samples.push_back(t - arr);
                }
                ++departed;
                --n_in_system;
                if (opts.trace)
                    *opts.trace << arr << ',' << t << ',' << batch_size << '\n';
            }
            // The batch whose departure opens the window is excluded from
            // window-based stats (it straddles the boundary).
            if (window_start >= 0.0 && t > window_start) {
                energy += cfg.energy.eval(batch_size);
                ++measured_batches;
            }
            busy = false;
            batch.clear();
        }
    }

    const double window = t - window_start;
    if (!(window > 0.0))
        throw numerical_error("simulate: measurement window degenerate; raise n_requests");

    std::sort(samples.begin(), samples.end());

    SimStats out;
    out.n_requests = static_cast<std::int64_t>(samples.size());
    out.n_batches = measured_batches;
    out.w_bar = std::accumulate(samples.begin(), samples.end(), 0.0) /
                static_cast<double>(samples.size());
    out.p_bar = energy / window;
    out.l_bar = area / window;
    for (double q : opts.quantiles) out.percentiles.emplace_back(q, percentile(samples, q));
    out.slo_ms = opts.slo_ms;
    if (opts.slo_ms > 0.0) {
        const auto ok = std::upper_bound(samples.begin(), samples.end(), opts.slo_ms) -
                        samples.begin();
        out.slo_satisfaction = static_cast<double>(ok) / static_cast<double>(samples.size());
    }
    out.seed = opts.seed;
    out.window_ms = window;
    out.mean_interarrival = interarrival_sum / static_cast<double>(n_arrivals);
    if (opts.keep_samples) out.sorted_samples = std::move(samples);
    return out;
}

}  // namespace dynbatch
