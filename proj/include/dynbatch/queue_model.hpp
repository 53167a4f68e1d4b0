#pragma once

#include <string>
#include <vector>

namespace dynbatch {

// Units used throughout: time in milliseconds, energy in millijoules,
// arrival rate in requests per millisecond.  Power then comes out in
// mJ/ms, which is numerically equal to watts.

// Batch service time distribution.  The mean l(b) is supplied by the latency
// curve; the family only fixes the shape around that mean.
struct ServiceDistribution {
    enum class Family { deterministic, exponential, erlang, hyperexponential };

    Family family = Family::deterministic;
    int shape = 1;  // erlang only: number of stages

    // hyperexponential only: branch i is exponential with mean
    // mean_scales[i] * l(b), picked with probability weights[i].
    // sum(weights) = 1 and sum(weights[i] * mean_scales[i]) = 1, so the
    // mixture mean stays l(b).
    std::vector<double> weights;
    std::vector<double> mean_scales;

    static ServiceDistribution deterministic();
    static ServiceDistribution exponential();
    static ServiceDistribution erlang(int shape);
    static ServiceDistribution hyperexponential(std::vector<double> weights,
                                                std::vector<double> mean_scales);
    // Balanced-means two-phase fit for a given squared coefficient of
    // variation (scv >= 1).
    static ServiceDistribution hyperexponential_scv(double scv);

    // E[G^2] for a batch whose mean service time is `mean`.
    double second_moment(double mean) const;

    // Squared coefficient of variation (variance / mean^2), independent of b.
    double scv() const;

    void validate() const;  // throws validation_error
    std::string name() const;
};

// Number of Poisson(lambda) arrivals during one service time: the matrix
// entries of the embedded chain.  Closed forms per family: Poisson for
// deterministic service, geometric for exponential, negative binomial for
// Erlang, mixture of geometrics for hyperexponential.
struct ArrivalCountPmf {
    std::vector<double> p;  // p[k], k = 0..k_max
    double tail = 0.0;      // 1 - sum(p): mass beyond k_max
};

ArrivalCountPmf arrival_count_pmf(const ServiceDistribution& dist, double mean,
                                  double lambda, int k_max);

// Per-batch latency l(b) or energy zeta(b) as a function of batch size.
struct BatchCurve {
    enum class Form { affine, constant, logarithmic, table };

    Form form = Form::constant;
    double a = 0.0;              // affine slope / log coefficient
    double c = 0.0;              // intercept (affine, log) or the constant
    std::vector<double> values;  // table: values[b-1] for b = 1..b_max

    static BatchCurve affine(double a, double c);
    static BatchCurve constant(double c);
    static BatchCurve logarithmic(double a, double c);  // a*ln(b) + c
    static BatchCurve table(std::vector<double> values);

    double eval(int b) const;
};

// Least-squares line through profiler measurements (b, value).
struct AffineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double rms = 0.0;  // root mean squared residual
};

AffineFit fit_affine(const std::vector<std::pair<double, double>>& points);

// Cost weights: w1 multiplies expected latency cost, w2 multiplies energy.
struct Weights {
    double w1 = 1.0;
    double w2 = 0.0;

    void validate() const;  // w1 > 0, w2 >= 0
};

// A batch-service queue: Poisson arrivals at rate lambda, one server that
// serves batches of size b_min..b_max, per-batch latency/energy curves, and
// a service-time family.
struct SystemConfig {
    double lambda = 0.0;  // requests per ms
    int b_min = 1;
    int b_max = 1;
    BatchCurve latency;  // l(b), ms
    BatchCurve energy;   // zeta(b), mJ
    ServiceDistribution dist;

    double service_mean(int b) const;           // l(b)
    double service_rate(int b) const;           // 1 / l(b)
    double service_second_moment(int b) const;  // E[G_b^2]
    double throughput(int b) const;             // theta(b) = b / l(b)
    double energy_per_request(int b) const;     // zeta(b) / b
    double efficiency(int b) const;             // eta_e(b) = b / zeta(b)

    // Offered load lambda / theta(b_max); must be < 1 for stability.
    double rho() const;

    // Sets lambda so that rho() == rho.
    void set_rho(double rho);

    // Throws validation_error on: non-positive lambda, bad batch bounds,
    // non-positive or decreasing l(b), decreasing theta(b) or eta_e(b),
    // instability (lambda * l(b_max) >= b_max), or bad distribution params.
    void validate() const;
};

}  // namespace dynbatch
