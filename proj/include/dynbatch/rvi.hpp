#pragma once

#include <limits>
#include <vector>

#include "dynbatch/discretize.hpp"

namespace dynbatch {

struct RviOptions {
    double epsilon = 0.01;      // stop when span(J_{i+1} - H_i) < epsilon
    int max_iterations = 10000;
    int reference_state = 0;    // H is pinned to 0 here each sweep
};

struct RviResult {
    std::vector<int> policy;  // argmin batch size per state, incl. overflow row
    std::vector<double> h;    // relative values, h[reference_state] == 0
    // Span midpoint (max+min)/2 of the last Bellman difference.  Diagnostic
    // only: report the stationary-chain gain of the extracted policy instead.
    double gain = 0.0;
    double span = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
};

// One synchronous Bellman application over all states:
//   J(s) = min_a { c~(s,a) + h(s) + (eta/y(a)) * (sum_j m(j|s,a) h(j) - h(s)) }
// Ties resolve to the smallest action, so sweeps are deterministic.
void bellman_apply(const DiscreteMdp& mdp, const std::vector<double>& h,
                   std::vector<double>& j_out, std::vector<int>& argmin_out);

// Relative value iteration from H = 0.  After the span test passes (or the
// sweep budget runs out), one extra Bellman application against the final
// relative values extracts the policy; `iterations` counts all applications,
// capped at max_iterations.  converged = false is not an error -- heavily
// truncated models legitimately fail to settle, and callers gate on the
// evaluator's overflow share instead.
RviResult relative_value_iteration(const DiscreteMdp& mdp, const RviOptions& opts = {});

}  // namespace dynbatch
