#include "dynbatch/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "dynbatch/errors.hpp"
#include "dynbatch/evaluate.hpp"

namespace dynbatch {

Policy Policy::static_batch(int b) {
    Policy p;
    p.kind = Kind::static_batch;
    p.param = b;
    return p;
}

Policy Policy::greedy(bool strict) {
    Policy p;
    p.kind = Kind::greedy;
    p.strict = strict;
    return p;
}

Policy Policy::control_limit(int q) {
    Policy p;
    p.kind = Kind::control_limit;
    p.param = q;
    return p;
}

Policy Policy::from_table(std::vector<int> table, int overflow_action) {
    Policy p;
    p.kind = Kind::table;
    p.table = std::move(table);
    p.overflow_action = overflow_action;
    return p;
}

int Policy::action(int s, const SystemConfig& cfg) const {
    if (s < 0) throw validation_error("policy: negative queue length");
    switch (kind) {
        case Kind::static_batch:
            return s < param ? 0 : param;
        case Kind::greedy:
            if (s == 0) return 0;
            if (s < cfg.b_min) return strict ? 0 : cfg.b_min;  // padded batch
            return std::min(s, cfg.b_max);
        case Kind::control_limit:
            return s < param ? 0 : std::min(s, cfg.b_max);
        case Kind::table: {
            const auto idx = std::min<std::size_t>(static_cast<std::size_t>(s),
                                                   table.size() - 1);
            return table[idx];
        }
    }
    return 0;
}

void Policy::validate(const SystemConfig& cfg) const {
    const auto check_action = [&](int a, int s) {
        if (a == 0) return;
        if (a < cfg.b_min || a > cfg.b_max)
            throw validation_error("policy action " + std::to_string(a) +
                                   " outside [b_min, b_max]");
        if (a > s)
            throw validation_error("policy serves " + std::to_string(a) + " at queue length " +
                                   std::to_string(s));
    };
    switch (kind) {
        case Kind::static_batch:
            if (param < cfg.b_min || param > cfg.b_max)
                throw validation_error("static batch size " + std::to_string(param) +
                                       " outside [b_min, b_max]");
            return;
        case Kind::greedy:
            if (!strict && cfg.b_min > 1)
                throw validation_error(
                    "greedy with b_min > 1 would pad undersized batches, which the "
                    "queue model cannot represent; use strict greedy");
            return;
        case Kind::control_limit:
            if (cfg.b_min != 1)
                throw validation_error("control-limit policies require b_min = 1");
            if (param < 1 || param > cfg.b_max)
                throw validation_error("control limit Q must lie in [1, b_max]");
            return;
        case Kind::table: {
            if (table.empty()) throw validation_error("empty policy table");
            for (std::size_t s = 0; s < table.size(); ++s)
                check_action(table[s], static_cast<int>(s));
            if (overflow_action >= 0)
                check_action(overflow_action, static_cast<int>(table.size()) - 1);
            return;
        }
    }
}

std::string Policy::id() const {
    switch (kind) {
        case Kind::static_batch: return "static-" + std::to_string(param);
        case Kind::greedy: return strict ? "greedy-strict" : "greedy";
        case Kind::control_limit: return "cl-" + std::to_string(param);
        case Kind::table: return "table";
    }
    return "?";
}

std::optional<int> control_limit_threshold(const Policy& policy, const SystemConfig& cfg) {
    if (policy.kind != Policy::Kind::table || policy.table.empty()) return std::nullopt;
    const auto& t = policy.table;
    const int n = static_cast<int>(t.size());

    int q = 0;
    for (int s = 0; s < n && q == 0; ++s)
        if (t[static_cast<std::size_t>(s)] != 0) q = s;
    if (q == 0) return std::nullopt;  // never serves

    for (int s = 0; s < n; ++s) {
        const int want = s < q ? 0 : std::min(s, cfg.b_max);
        if (t[static_cast<std::size_t>(s)] != want) return std::nullopt;
    }
    const int over = policy.overflow_action >= 0 ? policy.overflow_action : t.back();
    if (over != std::min(n - 1, cfg.b_max)) return std::nullopt;
    return q;
}

// ---------------------------------------------------------------------------
// Closed-form control limit (exponential, size-independent service)

double solve_xi(double lambda, double mu, int b_max) {
    if (!(lambda > 0.0) || !(mu > 0.0)) throw validation_error("solve_xi: rates must be positive");
    if (b_max < 1) throw validation_error("solve_xi: b_max must be >= 1");
    if (!(lambda < b_max * mu))
        throw validation_error("solve_xi: unstable (lambda >= b_max * mu), no root in (0,1)");

    const double psi = lambda / (lambda + mu);
    const auto f = [&](double x) {
        return (1.0 - psi) * std::pow(x, b_max + 1) - x + psi;
    };

    // f(psi) > 0, f(1) = 0 with positive slope under stability, so f is
    // negative just left of 1 and the interior root is bracketed.
    double lo = psi, hi = 1.0 - 1e-12;
    if (!(f(lo) > 0.0) || !(f(hi) < 0.0))
        throw numerical_error("solve_xi: root bracket failed (rho close to 1?)");
    while (hi - lo > 1e-13) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

ControlLimitAnalysis closed_form_control_limit(const SystemConfig& cfg, const Weights& w) {
    cfg.validate();
    w.validate();
    if (cfg.b_min != 1)
        throw validation_error("closed-form control limit requires b_min = 1");
    if (cfg.dist.family != ServiceDistribution::Family::exponential)
        throw validation_error("closed-form control limit requires exponential service");

    const double l = cfg.service_mean(1);
    for (int b = 2; b <= cfg.b_max; ++b)
        if (std::abs(cfg.service_mean(b) - l) > 1e-12 * l)
            throw validation_error(
                "closed-form control limit requires size-independent service times");

    double zeta0 = 0.0;
    switch (cfg.energy.form) {
        case BatchCurve::Form::affine: zeta0 = cfg.energy.c; break;
        case BatchCurve::Form::constant: zeta0 = cfg.energy.c; break;
        default:
            throw validation_error("closed-form control limit requires affine energy");
    }

    ControlLimitAnalysis out;
    const double mu = 1.0 / l;
    out.psi = cfg.lambda / (cfg.lambda + mu);
    out.xi = solve_xi(cfg.lambda, mu, cfg.b_max);
    out.chi = cfg.lambda / mu;

    const double r = out.xi / (1.0 - out.xi);
    const double penalty = w.w2 * zeta0 * cfg.lambda * cfg.lambda / w.w1;

    out.q_star = cfg.b_max;
    bool found = false;
    out.margin.reserve(static_cast<std::size_t>(cfg.b_max));
    for (int q = 1; q <= cfg.b_max; ++q) {
        const double d = q * (0.5 * (q + 1) + out.chi - r) - r * r * std::pow(out.xi, q) +
                         r * (r - out.chi) - penalty;
        out.margin.push_back(d);
        if (!found && d >= 0.0) {
            out.q_star = q;
            found = true;
        }
    }
    return out;
}

int closed_form_Q(const SystemConfig& cfg, const Weights& w) {
    return closed_form_control_limit(cfg, w).q_star;
}

int linear_search_Q(const SystemConfig& cfg, const Weights& w, int s_max, double overflow_cost,
                    std::vector<double>* gains_out) {
    if (cfg.b_min != 1) throw validation_error("linear_search_Q requires b_min = 1");
    const TruncatedSmdp model(cfg, w, s_max, overflow_cost);
    int best_q = 1;
    double best_gain = std::numeric_limits<double>::infinity();
    if (gains_out) gains_out->clear();
    for (int q = 1; q <= cfg.b_max; ++q) {
        const EvalReport rep = evaluate(model, Policy::control_limit(q));
        if (gains_out) gains_out->push_back(rep.gain);
        if (rep.gain < best_gain) {
            best_gain = rep.gain;
            best_q = q;
        }
    }
    return best_q;
}

// ---------------------------------------------------------------------------
// CSV round-trip

void write_policy_csv(std::ostream& os, const Policy& policy, const SystemConfig& cfg,
                      int s_max) {
    os << "# policy: ";
    switch (policy.kind) {
        case Policy::Kind::static_batch: os << "static b=" << policy.param; break;
        case Policy::Kind::greedy: os << (policy.strict ? "greedy strict" : "greedy"); break;
        case Policy::Kind::control_limit: os << "control-limit Q=" << policy.param; break;
        case Policy::Kind::table: os << "table s_max=" << s_max; break;
    }
    os << "\nstate,action\n";
    for (int s = 0; s <= s_max; ++s) os << s << ',' << policy.action(s, cfg) << '\n';
    const int over = (policy.kind == Policy::Kind::table && policy.overflow_action >= 0)
                         ? policy.overflow_action
                         : policy.action(s_max, cfg);
    os << "overflow," << over << '\n';
}

Policy read_policy_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("# policy:", 0) != 0)
        throw validation_error("policy csv must start with a \"# policy: ...\" line");
    std::string variant = line.substr(9);
    // trim
    variant.erase(0, variant.find_first_not_of(" \t"));
    while (!variant.empty() && (variant.back() == '\r' || variant.back() == ' '))
        variant.pop_back();

    const auto int_after = [&](const std::string& key) {
        const auto pos = variant.find(key);
        if (pos == std::string::npos)
            throw validation_error("policy csv: missing " + key + " in variant line");
        return std::stoi(variant.substr(pos + key.size()));
    };

    if (variant.rfind("static", 0) == 0) return Policy::static_batch(int_after("b="));
    if (variant == "greedy") return Policy::greedy(false);
    if (variant == "greedy strict") return Policy::greedy(true);
    if (variant.rfind("control-limit", 0) == 0) return Policy::control_limit(int_after("Q="));
    if (variant.rfind("table", 0) != 0)
        throw validation_error("policy csv: unknown variant \"" + variant + "\"");

    const int s_max = int_after("s_max=");
    std::vector<int> table(static_cast<std::size_t>(s_max) + 1, -1);
    int overflow_action = -1;

    if (!std::getline(is, line) || line.rfind("state,action", 0) != 0)
        throw validation_error("policy csv: missing state,action header");
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw validation_error("policy csv: malformed row \"" + line + "\"");
        const std::string state = line.substr(0, comma);
        const int a = std::stoi(line.substr(comma + 1));
        if (state == "overflow") {
            overflow_action = a;
        } else {
            const int s = std::stoi(state);
            if (s < 0 || s > s_max)
                throw validation_error("policy csv: state " + state + " out of range");
            table[static_cast<std::size_t>(s)] = a;
        }
    }
    for (std::size_t s = 0; s < table.size(); ++s)
        if (table[s] < 0)
            throw validation_error("policy csv: missing row for state " + std::to_string(s));
    return Policy::from_table(std::move(table), overflow_action);
}

Policy load_policy_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open policy file: " + path);
    return read_policy_csv(in);
}

void save_policy_csv(const std::string& path, const Policy& policy, const SystemConfig& cfg,
                     int s_max) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write policy file: " + path);
    write_policy_csv(out, policy, cfg, s_max);
}

}  // namespace dynbatch
