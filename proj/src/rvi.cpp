#include "dynbatch/rvi.hpp"

#include <algorithm>
#include <cmath>

#include "dynbatch/errors.hpp"

namespace dynbatch {

void bellman_apply(const DiscreteMdp& mdp, const std::vector<double>& h,
                   std::vector<double>& j_out, std::vector<int>& argmin_out) {
    const TruncatedSmdp& smdp = mdp.smdp();
    const SystemConfig& cfg = smdp.config();
    const int n = smdp.n_states();
    const int s_max = smdp.s_max();
    const int overflow = smdp.overflow_state();

    j_out.resize(static_cast<std::size_t>(n));
    argmin_out.resize(static_cast<std::size_t>(n));

    // Hoist per-action tables out of the state loop; the sweep is the hot
    // path of the whole program.
    const int b_min = cfg.b_min, b_max = cfg.b_max;
    std::vector<const double*> pmf_ptr(static_cast<std::size_t>(b_max) + 1, nullptr);
    std::vector<const double*> cum_ptr(static_cast<std::size_t>(b_max) + 1, nullptr);
    std::vector<const double*> cost_ptr(static_cast<std::size_t>(b_max) + 1, nullptr);
    std::vector<double> jump(static_cast<std::size_t>(b_max) + 1, 0.0);
    for (int a = b_min; a <= b_max; ++a) {
        pmf_ptr[a] = smdp.action_pmf(a).data();
        cum_ptr[a] = smdp.action_cum(a).data();
        cost_ptr[a] = mdp.cost_column(a).data();
        jump[a] = mdp.jump_factor(a);
    }
    const double* cost_wait = mdp.cost_column(0).data();
    const double k_wait = mdp.jump_factor(0);
    const double h_over = h[static_cast<std::size_t>(overflow)];
    const double* hd = h.data();

    for (int s = 0; s < n; ++s) {
        const double hs = hd[s];
        // Action 0 is always feasible; its successor is s+1 (or overflow).
        const int next = (s >= s_max) ? overflow : s + 1;
        double best = cost_wait[s] + hs + k_wait * (hd[next] - hs);
        int best_a = 0;

        const int queue = (s == overflow) ? s_max : s;
        const int a_hi = std::min(queue, b_max);
        for (int a = b_min; a <= a_hi; ++a) {
            const int first = queue - a;
            const int k_max = s_max - first;
            // sum_j m(j|s,a) h(j): a pmf slice against h, plus the lump on
            // the overflow state.
            const double* p = pmf_ptr[a];
            const double* hp = hd + first;
            double dot = 0.0;
            for (int k = 0; k <= k_max; ++k) dot += p[k] * hp[k];
            const double lump = std::max(0.0, 1.0 - cum_ptr[a][k_max]);
            dot += lump * h_over;

            const double v = cost_ptr[a][s] + hs + jump[a] * (dot - hs);
            if (v < best) {
                best = v;
                best_a = a;
            }
        }
        j_out[static_cast<std::size_t>(s)] = best;
        argmin_out[static_cast<std::size_t>(s)] = best_a;
    }
}

RviResult relative_value_iteration(const DiscreteMdp& mdp, const RviOptions& opts) {
    if (!(opts.epsilon > 0.0)) throw validation_error("rvi: epsilon must be positive");
    if (opts.max_iterations < 1) throw validation_error("rvi: max_iterations must be >= 1");
    const int n = mdp.n_states();
    if (opts.reference_state < 0 || opts.reference_state >= n)
        throw validation_error("rvi: reference state out of range");

    RviResult res;
    std::vector<double> h(static_cast<std::size_t>(n), 0.0);
    std::vector<double> j(static_cast<std::size_t>(n), 0.0);
    std::vector<int> argmin(static_cast<std::size_t>(n), 0);

    int sweeps = 0;
    while (sweeps < opts.max_iterations) {
        bellman_apply(mdp, h, j, argmin);
        ++sweeps;

        double lo = j[0] - h[0], hi = lo;
        for (int s = 1; s < n; ++s) {
            const double d = j[static_cast<std::size_t>(s)] - h[static_cast<std::size_t>(s)];
            lo = std::min(lo, d);
            hi = std::max(hi, d);
        }
        res.span = hi - lo;
        res.gain = (hi + lo) / 2.0;

        const double j_ref = j[static_cast<std::size_t>(opts.reference_state)];
        for (int s = 0; s < n; ++s)
            h[static_cast<std::size_t>(s)] = j[static_cast<std::size_t>(s)] - j_ref;

        if (res.span < opts.epsilon) {
            res.converged = true;
            break;
        }
    }

    // Separate policy-extraction pass against the final relative values; it
    // counts as one more Bellman application, capped at max_iterations.
    bellman_apply(mdp, h, j, res.policy);
    res.iterations = std::min(sweeps + 1, opts.max_iterations);

    res.h = std::move(h);
    return res;
}

}  // namespace dynbatch
