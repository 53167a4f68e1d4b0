#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dynbatch/policy.hpp"
#include "dynbatch/rvi.hpp"

namespace dynbatch {

// Exact stationary performance of one policy on one truncated model.
// gain = w1 * w_bar + w2 * p_bar holds by construction: the overflow
// penalty's contribution is folded into w_bar (divided by w1), which keeps
// the reported mean response time honest about truncation error.
struct EvalReport {
    std::string policy_id;
    int s_max = 0;
    double overflow_cost = 0.0;
    double w1 = 1.0;
    double w2 = 0.0;
    double gain = 0.0;   // average cost per ms, overflow penalty included
    double delta = 0.0;  // overflow row's share of the gain
    double w_bar = 0.0;  // mean response time, ms
    double p_bar = 0.0;  // average power, W (mJ/ms)
    bool accepted = false;  // delta < the threshold passed by the caller
};

std::string eval_report_csv_header();
std::string eval_report_csv_row(const EvalReport& r, int precision = 9);

// Action taken in every state of the truncated model (overflow row last).
std::vector<int> policy_actions(const TruncatedSmdp& model, const Policy& policy);

// Row-major n x n transition matrix of the jump chain the policy induces.
std::vector<double> induced_chain(const TruncatedSmdp& model, const Policy& policy);

// Solves mu P = mu, sum(mu) = 1 (dense LU with one equation replaced by the
// normalization).  Throws numerical_error if the residual exceeds 1e-8.
std::vector<double> stationary_distribution(const std::vector<double>& p_row_major, int n);

EvalReport evaluate(const TruncatedSmdp& model, const Policy& policy,
                    double delta_threshold = 1e-3);

// Fixed-policy evaluation with automatic truncation: s_max starts at
// 4 * b_max and grows by 1.5x until the overflow share drops below the
// threshold (hard cap 4096, then numerical_error).
EvalReport evaluate_policy_auto(const SystemConfig& cfg, const Weights& w,
                                const Policy& policy, double overflow_cost,
                                double delta_threshold = 1e-3);

// Full solve pipeline at one truncation level: build, discretize, run
// relative value iteration, evaluate the extracted table policy.
struct SolveResult {
    int s_max = 0;
    DiscreteMdp mdp;  // owns the truncated model (mdp.smdp())
    RviResult rvi;
    Policy policy;  // table policy with the overflow row attached
    EvalReport report;
    std::vector<std::pair<int, double>> schedule;  // (s_max tried, delta)
};

SolveResult solve_at(const SystemConfig& cfg, const Weights& w, int s_max,
                     double overflow_cost, double delta_threshold = 1e-3,
                     const RviOptions& opts = {});

// Picks the truncation level automatically: starts at 4 * b_max; if rejected,
// grows by 1.5x until accepted (cap 4096); if accepted straight away, refines
// downward by 1.5x steps (floor b_max) and returns the smallest accepted
// level, so overly generous starting points don't inflate the state space.
SolveResult auto_truncate(const SystemConfig& cfg, const Weights& w, double overflow_cost,
                          double delta_threshold = 1e-3, const RviOptions& opts = {});

}  // namespace dynbatch
