#include "dynbatch/smdp.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "dynbatch/errors.hpp"

namespace dynbatch {

StepCost step_cost(int s, int a, const SystemConfig& cfg, const Weights& w) {
    if (s < 0) throw validation_error("step_cost: state must be >= 0");
    StepCost out;
    if (a == 0) {
        // Wait for the next arrival: s requests each wait an expected
        // 1/lambda, so the accumulated latency cost is s/lambda^2.
        out.sojourn = 1.0 / cfg.lambda;
        out.cost = w.w1 * s / (cfg.lambda * cfg.lambda);
        return out;
    }
    if (a < cfg.b_min || a > cfg.b_max || a > s)
        throw validation_error("step_cost: infeasible action " + std::to_string(a) +
                               " in state " + std::to_string(s));
    const double l = cfg.service_mean(a);
    const double m2 = cfg.service_second_moment(a);
    out.sojourn = l;
    // Waiting cost of the s requests present over the service, plus the
    // in-service share E[G^2]/2 (arrivals during the service contribute via
    // the s term of later epochs).
    out.cost = w.w2 * cfg.energy.eval(a) + w.w1 * (s * l / cfg.lambda + m2 / 2.0);
    return out;
}

TruncatedSmdp::TruncatedSmdp(SystemConfig cfg, Weights w, int s_max, double overflow_cost)
    : cfg_(std::move(cfg)), w_(w), s_max_(s_max), c_o_(overflow_cost) {
    cfg_.validate();
    w_.validate();
    if (s_max_ < cfg_.b_max)
        throw validation_error("s_max must be >= b_max (got s_max=" + std::to_string(s_max_) +
                               ", b_max=" + std::to_string(cfg_.b_max) + ")");
    if (c_o_ < 0.0) throw validation_error("overflow_cost must be >= 0");

    actions_.push_back(0);
    for (int a = cfg_.b_min; a <= cfg_.b_max; ++a) actions_.push_back(a);

    const int n_batch = cfg_.b_max - cfg_.b_min + 1;
    pmf_.reserve(n_batch);
    cum_.reserve(n_batch);
    for (int a = cfg_.b_min; a <= cfg_.b_max; ++a) {
        auto pk = arrival_count_pmf(cfg_.dist, cfg_.service_mean(a), cfg_.lambda, s_max_);
        std::vector<double> cum(pk.p.size());
        double run = 0.0;
        for (std::size_t k = 0; k < pk.p.size(); ++k) {
            run += pk.p[k];
            cum[k] = run;
        }
        pmf_.push_back(std::move(pk.p));
        cum_.push_back(std::move(cum));
    }
}

int TruncatedSmdp::batch_index(int action) const {
    if (action < cfg_.b_min || action > cfg_.b_max)
        throw validation_error("batch action out of range: " + std::to_string(action));
    return action - cfg_.b_min;
}

bool TruncatedSmdp::is_feasible(int state, int action) const {
    if (action == 0) return true;
    if (action < cfg_.b_min || action > cfg_.b_max) return false;
    const int queue = (state == overflow_state()) ? s_max_ : state;
    return action <= queue;
}

std::vector<int> TruncatedSmdp::feasible_actions(int state) const {
    std::vector<int> out;
    for (int a : actions_)
        if (is_feasible(state, a)) out.push_back(a);
    return out;
}

double TruncatedSmdp::sojourn(int action) const {
    return action == 0 ? 1.0 / cfg_.lambda : cfg_.service_mean(action);
}

double TruncatedSmdp::latency_cost(int state, int action) const {
    const int queue = (state == overflow_state()) ? s_max_ : state;
    if (action == 0) return queue / (cfg_.lambda * cfg_.lambda);
    return queue * cfg_.service_mean(action) / cfg_.lambda +
           cfg_.service_second_moment(action) / 2.0;
}

double TruncatedSmdp::energy_cost(int action) const {
    return action == 0 ? 0.0 : cfg_.energy.eval(action);
}

double TruncatedSmdp::abstract_cost(int state, int action) const {
    return state == overflow_state() ? c_o_ * sojourn(action) : 0.0;
}

double TruncatedSmdp::cost(int state, int action) const {
    if (!is_feasible(state, action))
        throw validation_error("cost: infeasible action " + std::to_string(action) +
                               " in state " + std::to_string(state));
    return w_.w1 * latency_cost(state, action) + w_.w2 * energy_cost(action) +
           abstract_cost(state, action);
}

TruncatedSmdp::Row TruncatedSmdp::row(int state, int action) const {
    if (!is_feasible(state, action))
        throw validation_error("row: infeasible action " + std::to_string(action) +
                               " in state " + std::to_string(state));
    Row r;
    if (action == 0) {
        r.wait_next = (state >= s_max_) ? overflow_state() : state + 1;
        return r;
    }
    const int queue = (state == overflow_state()) ? s_max_ : state;
    const int idx = batch_index(action);
    // After serving `action` of `queue` requests, k arrivals land on state
    // queue - action + k; k may run to s_max - (queue - action) before
    // spilling into the overflow state.
    const int k_max = s_max_ - (queue - action);
    r.first = queue - action;
    r.probs = std::span<const double>(pmf_[idx].data(), static_cast<std::size_t>(k_max) + 1);
    r.overflow = std::max(0.0, 1.0 - cum_[idx][k_max]);
    return r;
}

std::vector<double> TruncatedSmdp::dense_row(int state, int action) const {
    std::vector<double> out(static_cast<std::size_t>(n_states()), 0.0);
    const Row r = row(state, action);
    if (r.wait_next >= 0) {
        out[r.wait_next] = 1.0;
        return out;
    }
    for (std::size_t k = 0; k < r.probs.size(); ++k) out[r.first + k] = r.probs[k];
    out[overflow_state()] += r.overflow;
    return out;
}

const std::vector<double>& TruncatedSmdp::action_pmf(int action) const {
    return pmf_[batch_index(action)];
}

const std::vector<double>& TruncatedSmdp::action_cum(int action) const {
    return cum_[batch_index(action)];
}

namespace {

std::string state_label(int state, int overflow) {
    return state == overflow ? "overflow" : std::to_string(state);
}

}  // namespace

void TruncatedSmdp::write_kernel_csv(std::ostream& os) const {
    os << "state,action,next_state,probability\n";
    for (int s = 0; s < n_states(); ++s) {
        for (int a : feasible_actions(s)) {
            const auto dense = dense_row(s, a);
            for (int j = 0; j < n_states(); ++j) {
                if (dense[j] == 0.0) continue;
                os << state_label(s, overflow_state()) << ',' << a << ','
                   << state_label(j, overflow_state()) << ',' << dense[j] << '\n';
            }
        }
    }
}

void TruncatedSmdp::write_cost_csv(std::ostream& os) const {
    os << "state,action,sojourn_ms,cost\n";
    for (int s = 0; s < n_states(); ++s)
        for (int a : feasible_actions(s))
            os << state_label(s, overflow_state()) << ',' << a << ',' << sojourn(a) << ','
               << cost(s, a) << '\n';
}

}  // namespace dynbatch
