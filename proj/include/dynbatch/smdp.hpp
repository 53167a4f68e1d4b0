#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "dynbatch/queue_model.hpp"

namespace dynbatch {

// One decision epoch of the batching SMDP, before truncation: the expected
// sojourn y and the expected accumulated cost c of taking action a in state s.
// Action 0 waits for the next arrival; action a >= b_min serves a batch of a.
struct StepCost {
    double sojourn = 0.0;  // y(s, a), ms
    double cost = 0.0;     // c(s, a) = w1 * latency_part + w2 * energy_part
};

StepCost step_cost(int s, int a, const SystemConfig& cfg, const Weights& w);

// The batching SMDP restricted to queue lengths 0..s_max plus one overflow
// super-state that absorbs all probability mass beyond s_max.  The overflow
// state behaves like s_max cost- and transition-wise, plus an extra penalty
// of overflow_cost per unit time spent there; the evaluator uses that
// penalty's share of the gain to decide whether s_max was large enough.
//
// Transition rows are never stored densely.  For a batch action the row is a
// contiguous slice of that action's arrival-count pmf plus one lumped entry
// on the overflow state, so the whole kernel costs O(b_max * s_max) memory.
class TruncatedSmdp {
public:
    TruncatedSmdp(SystemConfig cfg, Weights w, int s_max, double overflow_cost);

    const SystemConfig& config() const { return cfg_; }
    const Weights& weights() const { return w_; }
    int s_max() const { return s_max_; }
    int overflow_state() const { return s_max_ + 1; }
    int n_states() const { return s_max_ + 2; }
    double overflow_cost() const { return c_o_; }

    // All actions, ascending: 0, b_min, ..., b_max.
    const std::vector<int>& actions() const { return actions_; }
    bool is_feasible(int state, int action) const;
    std::vector<int> feasible_actions(int state) const;

    // y(s, a): only the action matters (1/lambda to the next arrival when
    // waiting, l(a) when serving).
    double sojourn(int action) const;

    // Cost split used by the evaluator to report latency and power
    // separately: cost() = w1 * latency_cost() + w2 * energy_cost()
    //                      + abstract_cost().
    double latency_cost(int state, int action) const;
    double energy_cost(int action) const;
    double abstract_cost(int state, int action) const;  // overflow penalty share
    double cost(int state, int action) const;

    // Transition row of (state, action).  Wait rows have a single successor
    // (wait_next); batch rows carry probs over states first..first+len-1 and
    // a lump on the overflow state.
    struct Row {
        int first = 0;
        std::span<const double> probs;
        double overflow = 0.0;
        int wait_next = -1;  // >= 0 only for action 0
    };
    Row row(int state, int action) const;

    std::vector<double> dense_row(int state, int action) const;

    // Arrival-count pmf for a batch of size `action`, entries 0..s_max, and
    // its prefix sums.  Shared by every row of that action.
    const std::vector<double>& action_pmf(int action) const;
    const std::vector<double>& action_cum(int action) const;

    // Debug dumps: (state, action, next_state, probability) and
    // (state, action, sojourn_ms, cost); overflow printed as "overflow".
    void write_kernel_csv(std::ostream& os) const;
    void write_cost_csv(std::ostream& os) const;

private:
    int batch_index(int action) const;  // action - b_min, validated

    SystemConfig cfg_;
    Weights w_;
    int s_max_;
    double c_o_;
    std::vector<int> actions_;
    std::vector<std::vector<double>> pmf_;  // [a - b_min][k], k = 0..s_max
    std::vector<std::vector<double>> cum_;
};

}  // namespace dynbatch
