#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dynbatch/queue_model.hpp"

namespace dynbatch {

// A batching rule: queue length -> batch size (0 = keep waiting).
//
//   static_batch(b):   wait below b, then always serve exactly b
//   greedy:            serve everything available, capped at b_max; in
//                      non-strict form an undersized queue is served as a
//                      padded b_min batch (only meaningful when b_min > 1;
//                      strict waits for b_min instead -- default there)
//   control_limit(Q):  wait below Q, then serve min(s, b_max); needs b_min=1
//   table:             explicit action per state, extended beyond the table
//                      by its last entry
struct Policy {
    enum class Kind { static_batch, greedy, control_limit, table };

    Kind kind = Kind::greedy;
    int param = 0;        // b for static_batch, Q for control_limit
    bool strict = false;  // greedy only
    std::vector<int> table;
    int overflow_action = -1;  // table only: action at the truncated model's
                               // overflow row (-1: reuse the last table entry)

    static Policy static_batch(int b);
    static Policy greedy(bool strict = false);
    static Policy control_limit(int q);
    static Policy from_table(std::vector<int> table, int overflow_action = -1);

    // Action for a real (untruncated) queue length s >= 0.
    int action(int s, const SystemConfig& cfg) const;

    // Checks every reachable action against the config's batch bounds;
    // throws validation_error otherwise (e.g. control limit with b_min > 1).
    void validate(const SystemConfig& cfg) const;

    std::string id() const;  // "static-8", "greedy", "cl-5", "table"
};

// True control-limit shape test: some Q >= 1 with action 0 below Q and
// min(s, b_max) from Q on.  Returns Q, or nullopt if the table (including
// its overflow row) does not have that shape.
std::optional<int> control_limit_threshold(const Policy& table_policy, const SystemConfig& cfg);

// --- Closed-form optimal threshold --------------------------------------
// Valid under: b_min = 1, exponential service with size-independent mean,
// affine energy zeta(b) = zeta1 * b + zeta0, Poisson arrivals.

// Root in (psi, 1) of (1 - psi) x^(b_max + 1) - x + psi = 0 with
// psi = lambda / (lambda + mu); unique when lambda < b_max * mu.
double solve_xi(double lambda, double mu, int b_max);

struct ControlLimitAnalysis {
    double psi = 0.0;
    double xi = 0.0;
    double chi = 0.0;  // lambda / mu
    std::vector<double> margin;  // margin[q-1]: serve-vs-wait margin at q
    int q_star = 0;
};

// Smallest q in 1..b_max whose serve-vs-wait margin is >= 0, else b_max.
// The margin only depends on (lambda, mu, b_max) and w2 * zeta0 * lambda^2 / w1,
// so with w2 = 0 or zeta0 = 0 the threshold is scale-invariant in
// (lambda, mu) -> (k lambda, k mu).
ControlLimitAnalysis closed_form_control_limit(const SystemConfig& cfg, const Weights& w);
int closed_form_Q(const SystemConfig& cfg, const Weights& w);

// Brute-force counterpart: evaluates the stationary gain of every threshold
// policy on a truncated model and returns the argmin (smallest q on ties).
// Exists to cross-check the closed form; does not assume exponential service.
int linear_search_Q(const SystemConfig& cfg, const Weights& w, int s_max,
                    double overflow_cost = 0.0, std::vector<double>* gains_out = nullptr);

// --- CSV round-trip -------------------------------------------------------
// Format: one comment line naming the variant, a header, then one row per
// state 0..s_max plus an "overflow" row, e.g.
//   # policy: control-limit Q=5
//   state,action
//   0,0
//   ...
//   overflow,32
void write_policy_csv(std::ostream& os, const Policy& policy, const SystemConfig& cfg,
                      int s_max);
Policy read_policy_csv(std::istream& is);
Policy load_policy_csv(const std::string& path);
void save_policy_csv(const std::string& path, const Policy& policy, const SystemConfig& cfg,
                     int s_max);

}  // namespace dynbatch
