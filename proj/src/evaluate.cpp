#include "dynbatch/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include <Eigen/Dense>

#include "dynbatch/errors.hpp"

namespace dynbatch {

std::string eval_report_csv_header() {
    return "policy,s_max,c_o,w1,w2,gain,delta,w_bar_ms,p_bar_W,accepted";
}

std::string eval_report_csv_row(const EvalReport& r, int precision) {
    std::ostringstream os;
    os << std::setprecision(precision) << r.policy_id << ',' << r.s_max << ','
       << r.overflow_cost << ',' << r.w1 << ',' << r.w2 << ',' << r.gain << ',' << r.delta
       << ',' << r.w_bar << ',' << r.p_bar << ',' << (r.accepted ? 1 : 0);
    return os.str();
}

std::vector<int> policy_actions(const TruncatedSmdp& model, const Policy& policy) {
    const SystemConfig& cfg = model.config();
    policy.validate(cfg);
    std::vector<int> act(static_cast<std::size_t>(model.n_states()), 0);
    for (int s = 0; s <= model.s_max(); ++s)
        act[static_cast<std::size_t>(s)] = policy.action(s, cfg);
    // The overflow super-state behaves like s_max; solved tables may carry
    // their own action for it.
    int over = policy.action(model.s_max(), cfg);
    if (policy.kind == Policy::Kind::table && policy.overflow_action >= 0)
        over = policy.overflow_action;
    act[static_cast<std::size_t>(model.overflow_state())] = over;

    for (int s = 0; s < model.n_states(); ++s)
        if (!model.is_feasible(s, act[static_cast<std::size_t>(s)]))
            throw validation_error("policy " + policy.id() + " takes infeasible action " +
                                   std::to_string(act[static_cast<std::size_t>(s)]) +
                                   " in state " + std::to_string(s));
    return act;
}

std::vector<double> induced_chain(const TruncatedSmdp& model, const Policy& policy) {
    const int n = model.n_states();
    const std::vector<int> act = policy_actions(model, policy);
    std::vector<double> p(static_cast<std::size_t>(n) * n, 0.0);
    for (int s = 0; s < n; ++s) {
        const auto row = model.dense_row(s, act[static_cast<std::size_t>(s)]);
        std::copy(row.begin(), row.end(), p.begin() + static_cast<std::size_t>(s) * n);
    }
    return p;
}

std::vector<double> stationary_distribution(const std::vector<double>& p_row_major, int n) {
    if (n < 1 || p_row_major.size() != static_cast<std::size_t>(n) * n)
        throw validation_error("stationary_distribution: matrix shape mismatch");

    using Eigen::MatrixXd;
    using Eigen::VectorXd;
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
        p(p_row_major.data(), n, n);

    // (P^T - I) mu = 0 with the last equation replaced by sum(mu) = 1.
    MatrixXd a = p.transpose();
    a.diagonal().array() -= 1.0;
    a.row(n - 1).setOnes();
    VectorXd b = VectorXd::Zero(n);
    b(n - 1) = 1.0;

    VectorXd mu = a.partialPivLu().solve(b);

    // Verify against the original equations; the replaced row is not enough
    // to guarantee a meaningful solution if the chain were reducible.
    const double res = (p.transpose() * mu - mu).cwiseAbs().maxCoeff();
    const double sum_err = std::abs(mu.sum() - 1.0);
    if (!(res < 1e-8) || !(sum_err < 1e-8))
        throw numerical_error("stationary_distribution: residual " + std::to_string(res) +
                              ", normalization error " + std::to_string(sum_err));

    std::vector<double> out(static_cast<std::size_t>(n));
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        double v = mu(i);
        if (v < 0.0) {
            if (v < -1e-9) throw numerical_error("stationary_distribution: negative mass");
            v = 0.0;
        }
        out[static_cast<std::size_t>(i)] = v;
        total += v;
    }
    for (double& v : out) v /= total;
    return out;
}

EvalReport evaluate(const TruncatedSmdp& model, const Policy& policy, double delta_threshold) {
    const int n = model.n_states();
    const int overflow = model.overflow_state();
    const std::vector<int> act = policy_actions(model, policy);
    const std::vector<double> mu = stationary_distribution(induced_chain(model, policy), n);

    double y_sum = 0.0, lat_sum = 0.0, energy_sum = 0.0;
    double abstract_sum = 0.0, overflow_cost_sum = 0.0;
    for (int s = 0; s < n; ++s) {
        const double m = mu[static_cast<std::size_t>(s)];
        const int a = act[static_cast<std::size_t>(s)];
        y_sum += m * model.sojourn(a);
        lat_sum += m * model.latency_cost(s, a);
        energy_sum += m * model.energy_cost(a);
        if (s == overflow) {
            abstract_sum += m * model.abstract_cost(s, a);
            overflow_cost_sum += m * model.cost(s, a);
        }
    }

    const Weights& w = model.weights();
    EvalReport r;
    r.policy_id = policy.id();
    r.s_max = model.s_max();
    r.overflow_cost = model.overflow_cost();
    r.w1 = w.w1;
    r.w2 = w.w2;
    r.gain = (w.w1 * lat_sum + w.w2 * energy_sum + abstract_sum) / y_sum;
    r.delta = overflow_cost_sum / y_sum;
    r.w_bar = (lat_sum + abstract_sum / w.w1) / y_sum;
    r.p_bar = energy_sum / y_sum;
    r.accepted = r.delta < delta_threshold;
    return r;
}

namespace {

constexpr int kTruncationCap = 4096;

int grow(int s_max) { return std::min(kTruncationCap, (3 * s_max + 1) / 2); }

}  // namespace

EvalReport evaluate_policy_auto(const SystemConfig& cfg, const Weights& w,
                                const Policy& policy, double overflow_cost,
                                double delta_threshold) {
    int s_max = 4 * cfg.b_max;
    for (;;) {
        const TruncatedSmdp model(cfg, w, s_max, overflow_cost);
        const EvalReport rep = evaluate(model, policy, delta_threshold);
        if (rep.accepted) return rep;
        if (s_max >= kTruncationCap)
            throw numerical_error("policy evaluation: overflow share " +
                                  std::to_string(rep.delta) + " still above threshold at the "
                                  "s_max cap " + std::to_string(kTruncationCap));
        s_max = grow(s_max);
    }
}

SolveResult solve_at(const SystemConfig& cfg, const Weights& w, int s_max,
                     double overflow_cost, double delta_threshold, const RviOptions& opts) {
    DiscreteMdp mdp = discretize(TruncatedSmdp(cfg, w, s_max, overflow_cost));
    RviResult rvi = relative_value_iteration(mdp, opts);

    std::vector<int> table(rvi.policy.begin(), rvi.policy.end() - 1);
    Policy policy = Policy::from_table(std::move(table), rvi.policy.back());
    EvalReport report = evaluate(mdp.smdp(), policy, delta_threshold);

    SolveResult out{s_max, std::move(mdp), std::move(rvi), std::move(policy),
                    std::move(report), {}};
    out.schedule.emplace_back(s_max, out.report.delta);
    return out;
}

SolveResult auto_truncate(const SystemConfig& cfg, const Weights& w, double overflow_cost,
                          double delta_threshold, const RviOptions& opts) {
    int s_max = std::max(cfg.b_max, 4 * cfg.b_max);
    std::vector<std::pair<int, double>> schedule;

    SolveResult best = solve_at(cfg, w, s_max, overflow_cost, delta_threshold, opts);
    schedule = best.schedule;

    if (!best.report.accepted) {
        // Too small: grow until the overflow share is negligible.
        while (!best.report.accepted) {
            if (s_max >= kTruncationCap)
                throw numerical_error(
                    "auto truncation: overflow share " + std::to_string(best.report.delta) +
                    " still above threshold at the s_max cap " +
                    std::to_string(kTruncationCap));
            s_max = grow(s_max);
            best = solve_at(cfg, w, s_max, overflow_cost, delta_threshold, opts);
            schedule.emplace_back(s_max, best.report.delta);
        }
    } else {
        // Already acceptable: refine downward so the returned model is not
        // needlessly large.
        for (;;) {
            const int next = std::max(cfg.b_max, (2 * s_max) / 3);
            if (next >= s_max) break;
            SolveResult trial = solve_at(cfg, w, next, overflow_cost, delta_threshold, opts);
            schedule.emplace_back(next, trial.report.delta);
            if (!trial.report.accepted) break;
            best = std::move(trial);
            s_max = next;
        }
    }
    best.schedule = std::move(schedule);
    return best;
}

}  // namespace dynbatch
