#include "dynbatch/discretize.hpp"

#include <algorithm>
#include <string>

#include "dynbatch/errors.hpp"

namespace dynbatch {

double discretization_bound(const TruncatedSmdp& smdp) {
    const SystemConfig& cfg = smdp.config();
    double bound = 1.0 / cfg.lambda;
    for (int a = cfg.b_min; a <= cfg.b_max; ++a) {
        const double y = smdp.sojourn(a);
        const double p_self = smdp.action_pmf(a)[static_cast<std::size_t>(a)];
        const double lump_self = smdp.action_cum(a)[static_cast<std::size_t>(a)];
        if (p_self < 1.0) bound = std::min(bound, y / (1.0 - p_self));
        if (lump_self > 0.0) bound = std::min(bound, y / lump_self);
    }
    return bound;
}

DiscreteMdp discretize(TruncatedSmdp smdp, double safety) {
    if (!(safety > 0.0 && safety <= 1.0))
        throw validation_error("discretize: safety factor must lie in (0, 1]");
    const double eta = safety * discretization_bound(smdp);
    return DiscreteMdp(std::move(smdp), eta);
}

DiscreteMdp::DiscreteMdp(TruncatedSmdp smdp, double eta) : smdp_(std::move(smdp)), eta_(eta) {
    if (!(eta_ > 0.0) || eta_ > discretization_bound(smdp_) + 1e-15)
        throw validation_error("discretize: eta = " + std::to_string(eta_) +
                               " violates the uniformization bound");

    const SystemConfig& cfg = smdp_.config();
    const int n = smdp_.n_states();
    const int n_actions = cfg.b_max - cfg.b_min + 2;
    cost_.assign(n_actions, std::vector<double>(static_cast<std::size_t>(n), 0.0));
    jump_.assign(n_actions, 0.0);

    for (int a : smdp_.actions()) {
        const int ai = action_index(a);
        const double y = smdp_.sojourn(a);
        jump_[ai] = eta_ / y;
        for (int s = 0; s < n; ++s) {
            if (!smdp_.is_feasible(s, a)) continue;
            cost_[ai][static_cast<std::size_t>(s)] = smdp_.cost(s, a) / y;
        }
    }
}

std::vector<double> DiscreteMdp::dense_row(int state, int action) const {
    std::vector<double> row = smdp_.dense_row(state, action);
    const double k = jump_factor(action);
    for (double& p : row) p *= k;
    row[static_cast<std::size_t>(state)] += 1.0 - k;
    return row;
}

}  // namespace dynbatch
