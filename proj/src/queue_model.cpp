#include "dynbatch/queue_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "dynbatch/errors.hpp"

namespace dynbatch {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw validation_error(msg);
}

}  // namespace

// ---------------------------------------------------------------------------
// ServiceDistribution

ServiceDistribution ServiceDistribution::deterministic() {
    return {};
}

ServiceDistribution ServiceDistribution::exponential() {
    ServiceDistribution d;
    d.family = Family::exponential;
    return d;
}

ServiceDistribution ServiceDistribution::erlang(int shape) {
    ServiceDistribution d;
    d.family = Family::erlang;
    d.shape = shape;
    d.validate();
    return d;
}

ServiceDistribution ServiceDistribution::hyperexponential(std::vector<double> weights,
                                                          std::vector<double> mean_scales) {
    ServiceDistribution d;
    d.family = Family::hyperexponential;
    d.weights = std::move(weights);
    d.mean_scales = std::move(mean_scales);
    d.validate();
    return d;
}

ServiceDistribution ServiceDistribution::hyperexponential_scv(double scv) {
    require(scv >= 1.0, "hyperexponential fit needs scv >= 1");
    if (scv == 1.0) return exponential();
    // Two-phase balanced means: w(1 +/- r)/2 with branch means 1/(2w_i) * l.
    const double r = std::sqrt((scv - 1.0) / (scv + 1.0));
    const double w_hi = (1.0 + r) / 2.0;
    const double w_lo = (1.0 - r) / 2.0;
    return hyperexponential({w_hi, w_lo}, {1.0 / (2.0 * w_hi), 1.0 / (2.0 * w_lo)});
}

double ServiceDistribution::second_moment(double mean) const {
    switch (family) {
        case Family::deterministic:
            return mean * mean;
        case Family::exponential:
            return 2.0 * mean * mean;
        case Family::erlang:
            // variance = mean^2 / shape
            return mean * mean * (static_cast<double>(shape) + 1.0) / shape;
        case Family::hyperexponential: {
            double m2 = 0.0;
            for (std::size_t i = 0; i < weights.size(); ++i) {
                const double branch_mean = mean_scales[i] * mean;
                m2 += weights[i] * 2.0 * branch_mean * branch_mean;
            }
            return m2;
        }
    }
    return mean * mean;
}

double ServiceDistribution::scv() const {
    const double m2 = second_moment(1.0);
    return m2 - 1.0;  // variance / mean^2 with mean = 1
}

void ServiceDistribution::validate() const {
    switch (family) {
        case Family::deterministic:
        case Family::exponential:
            return;
        case Family::erlang:
            require(shape >= 1, "erlang shape must be >= 1");
            return;
        case Family::hyperexponential: {
            require(!weights.empty() && weights.size() == mean_scales.size(),
                    "hyperexponential needs matching weights and mean_scales");
            double wsum = 0.0, msum = 0.0;
            for (std::size_t i = 0; i < weights.size(); ++i) {
                require(weights[i] > 0.0, "hyperexponential weights must be positive");
                require(mean_scales[i] > 0.0, "hyperexponential mean_scales must be positive");
                wsum += weights[i];
                msum += weights[i] * mean_scales[i];
            }
            require(std::abs(wsum - 1.0) < 1e-9, "hyperexponential weights must sum to 1");
            require(std::abs(msum - 1.0) < 1e-9,
                    "hyperexponential branch means must average to 1 "
                    "(sum of weights[i]*mean_scales[i] = 1)");
            return;
        }
    }
}

std::string ServiceDistribution::name() const {
    std::ostringstream os;
    switch (family) {
        case Family::deterministic: os << "deterministic"; break;
        case Family::exponential: os << "exponential"; break;
        case Family::erlang: os << "erlang-" << shape; break;
        case Family::hyperexponential: os << "hyperexp-scv" << scv(); break;
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Arrival counts during one service

namespace {

// Appends the geometric pmf (1-psi) psi^k for an exponential branch with
// mean `branch_mean`, weighted by w.
void add_geometric(std::vector<double>& p, double lambda, double branch_mean, double w) {
    const double psi = lambda * branch_mean / (lambda * branch_mean + 1.0);
    double term = w * (1.0 - psi);
    for (double& pk : p) {
        pk += term;
        term *= psi;
    }
}

}  // namespace

ArrivalCountPmf arrival_count_pmf(const ServiceDistribution& dist, double mean,
                                  double lambda, int k_max) {
    if (k_max < 0) throw validation_error("arrival_count_pmf: k_max must be >= 0");
    if (mean <= 0.0 || lambda <= 0.0)
        throw validation_error("arrival_count_pmf: mean and lambda must be positive");

    ArrivalCountPmf out;
    out.p.assign(static_cast<std::size_t>(k_max) + 1, 0.0);

    switch (dist.family) {
        case ServiceDistribution::Family::deterministic: {
            // Poisson(lambda * mean)
            const double m = lambda * mean;
            double term = std::exp(-m);
            for (int k = 0; k <= k_max; ++k) {
                out.p[k] = term;
                term *= m / (k + 1);
            }
            break;
        }
        case ServiceDistribution::Family::exponential:
            add_geometric(out.p, lambda, mean, 1.0);
            break;
        case ServiceDistribution::Family::erlang: {
            // Negative binomial: k arrivals interleaved with `shape` stages
            // of rate nu = shape / mean.
            const double nu = dist.shape / mean;
            const double q = lambda / (lambda + nu);  // arrival next
            double term = std::pow(1.0 - q, dist.shape);
            for (int k = 0; k <= k_max; ++k) {
                out.p[k] = term;
                term *= q * (k + dist.shape) / (k + 1.0);
            }
            break;
        }
        case ServiceDistribution::Family::hyperexponential:
            for (std::size_t i = 0; i < dist.weights.size(); ++i)
                add_geometric(out.p, lambda, dist.mean_scales[i] * mean, dist.weights[i]);
            break;
    }

    const double total = std::accumulate(out.p.begin(), out.p.end(), 0.0);
    out.tail = std::max(0.0, 1.0 - total);
    return out;
}

// ---------------------------------------------------------------------------
// BatchCurve

BatchCurve BatchCurve::affine(double a, double c) {
    BatchCurve f;
    f.form = Form::affine;
    f.a = a;
    f.c = c;
    return f;
}

BatchCurve BatchCurve::constant(double c) {
    BatchCurve f;
    f.form = Form::constant;
    f.c = c;
    return f;
}

BatchCurve BatchCurve::logarithmic(double a, double c) {
    BatchCurve f;
    f.form = Form::logarithmic;
    f.a = a;
    f.c = c;
    return f;
}

BatchCurve BatchCurve::table(std::vector<double> values) {
    BatchCurve f;
    f.form = Form::table;
    f.values = std::move(values);
    return f;
}

double BatchCurve::eval(int b) const {
    switch (form) {
        case Form::affine: return a * b + c;
        case Form::constant: return c;
        case Form::logarithmic: return a * std::log(static_cast<double>(b)) + c;
        case Form::table:
            if (b < 1 || static_cast<std::size_t>(b) > values.size())
                throw validation_error("batch curve table has no entry for b=" +
                                       std::to_string(b));
            return values[static_cast<std::size_t>(b) - 1];
    }
    return c;
}

// ---------------------------------------------------------------------------
// fit_affine

AffineFit fit_affine(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 2) throw validation_error("fit_affine needs at least two points");

    const double n = static_cast<double>(points.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [x, y] : points) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double det = n * sxx - sx * sx;
    if (std::abs(det) < 1e-12 * n * std::max(1.0, sxx))
        throw validation_error("fit_affine: points are degenerate (all x equal)");

    AffineFit fit;
    fit.slope = (n * sxy - sx * sy) / det;
    fit.intercept = (sy * sxx - sx * sxy) / det;

    double ss = 0.0;
    for (const auto& [x, y] : points) {
        const double r = y - (fit.slope * x + fit.intercept);
        ss += r * r;
    }
    fit.rms = std::sqrt(ss / n);
    return fit;
}

// ---------------------------------------------------------------------------
// Weights / SystemConfig

void Weights::validate() const {
    if (!(w1 > 0.0)) throw validation_error("w1 must be positive");
    if (!(w2 >= 0.0)) throw validation_error("w2 must be non-negative");
}

double SystemConfig::service_mean(int b) const { return latency.eval(b); }
double SystemConfig::service_rate(int b) const { return 1.0 / latency.eval(b); }

double SystemConfig::service_second_moment(int b) const {
    return dist.second_moment(latency.eval(b));
}

double SystemConfig::throughput(int b) const { return b / latency.eval(b); }
double SystemConfig::energy_per_request(int b) const { return energy.eval(b) / b; }
double SystemConfig::efficiency(int b) const { return b / energy.eval(b); }

double SystemConfig::rho() const { return lambda / throughput(b_max); }

void SystemConfig::set_rho(double target) {
    require(target > 0.0 && target < 1.0, "rho must lie in (0, 1)");
    lambda = target * throughput(b_max);
}

void SystemConfig::validate() const {
    require(lambda > 0.0, "arrival rate lambda must be positive");
    require(b_min >= 1, "b_min must be >= 1");
    require(b_max >= b_min, "b_max must be >= b_min");
    dist.validate();

    double prev_l = 0.0, prev_theta = 0.0, prev_eff = 0.0;
    for (int b = 1; b <= b_max; ++b) {
        const double l = latency.eval(b);
        const double z = energy.eval(b);
        require(l > 0.0, "l(b) must be positive at b=" + std::to_string(b));
        require(z > 0.0, "zeta(b) must be positive at b=" + std::to_string(b));
        require(l >= prev_l, "l(b) must be non-decreasing (violated at b=" +
                                 std::to_string(b) + ")");
        const double theta = b / l;
        const double eff = b / z;
        // Tiny slack: tabulated curves may carry noise at round-off level.
        require(theta >= prev_theta * (1.0 - 1e-12),
                "throughput theta(b) = b/l(b) must be non-decreasing (violated at b=" +
                    std::to_string(b) + ")");
        require(eff >= prev_eff * (1.0 - 1e-12),
                "energy efficiency b/zeta(b) must be non-decreasing (violated at b=" +
                    std::to_string(b) + ")");
        prev_l = l;
        prev_theta = theta;
        prev_eff = eff;
    }

    require(lambda * latency.eval(b_max) < b_max,
            "unstable system: lambda * l(b_max) must be < b_max (rho = " +
                std::to_string(rho()) + ")");
}

}  // namespace dynbatch
