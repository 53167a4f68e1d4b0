#pragma once

#include <vector>

#include "dynbatch/smdp.hpp"

namespace dynbatch {

// Data-transformation of the SMDP into an equivalent discrete-time MDP with
// the same average cost: costs become cost rates c(s,a)/y(a), and each
// transition row is blended with staying put, scaled by eta/y(a).  eta must
// keep every diagonal entry non-negative; discretization_bound() returns the
// largest admissible value and discretize() backs it off by a safety factor.
class DiscreteMdp {
public:
    DiscreteMdp(TruncatedSmdp smdp, double eta);

    const TruncatedSmdp& smdp() const { return smdp_; }
    double eta() const { return eta_; }
    int n_states() const { return smdp_.n_states(); }

    // Cost rate c~(s, a) = c(s, a) / y(a); precomputed.
    double cost(int state, int action) const {
        return cost_[action_index(action)][static_cast<std::size_t>(state)];
    }

    // eta / y(a): the weight of the embedded jump in one discrete step.
    double jump_factor(int action) const {
        return jump_[action_index(action)];
    }

    // Whole cost-rate column of one action, indexed by state (solver hot path).
    const std::vector<double>& cost_column(int action) const {
        return cost_[action_index(action)];
    }

    // Dense transformed row (tests/debugging only; the solver works off the
    // banded SMDP rows directly).
    std::vector<double> dense_row(int state, int action) const;

    int action_index(int action) const {
        return action == 0 ? 0 : action - smdp_.config().b_min + 1;
    }

private:
    TruncatedSmdp smdp_;
    double eta_;
    std::vector<std::vector<double>> cost_;  // [action index][state]
    std::vector<double> jump_;               // [action index]
};

// Largest eta with all transformed diagonals >= 0.  The binding cases are:
// waiting (self-mass 0, bound 1/lambda), a batch row's self-transition
// (exactly `action` arrivals, bound l(a)/(1 - p_a)), and the overflow row's
// lump (bound l(a) / sum_{i<=a} p_i).
double discretization_bound(const TruncatedSmdp& smdp);

DiscreteMdp discretize(TruncatedSmdp smdp, double safety = 0.99);

}  // namespace dynbatch
