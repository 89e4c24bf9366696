#pragma once
// Closed-form latency and security metrics of the two-queue model.

#include <algorithm>
#include <cmath>
#include <iostream>

#include "bran/model.hpp"

namespace bran {

struct LatencyReport {
    double tau1 = 0.0;   // block-inclusion queue (M/M/1) sojourn
    double tau2 = 0.0;   // service queue (M/M/s) sojourn
    double tau3 = 0.0;   // confirmation delay
    double tau_s = 0.0;  // tau1 + tau2 + tau3
    double tau_t = 0.0;  // tau_s - 1/lambda_c, latency up to service start
    double upper = 0.0;
    double lower = 0.0;
};

namespace detail {

// Pulls a probability back into [0, 1]; anything further out than 1e-9 means
// the floating evaluation went wrong and is worth a line on the log.
inline double clamp_probability(double p, const char* what) {
    if (p < -1e-9 || p > 1.0 + 1e-9)
        std::clog << "bran: " << what << " evaluated to " << p << ", clamping to [0,1]\n";
    return std::clamp(p, 0.0, 1.0);
}

}  // namespace detail

/// Erlang C waiting probability for `s` servers at offered load `a`, via
/// the Erlang B recursion B(m) = a B(m-1) / (m + a B(m-1)).
inline double erlang_c(int s, double a) {
    if (s < 1) throw InvalidParam("s", "must be >= 1");
    if (std::isnan(a) || a < 0.0) throw InvalidParam("a", "offered load must be >= 0");
    if (a >= s) throw Unstable("erlang_c", "unstable: offered load >= s");
    double b = 1.0;
    for (int m = 1; m <= s; ++m) b = a * b / (m + a * b);
    const double c = s * b / (s - a * (1.0 - b));
    return detail::clamp_probability(c, "erlang_c");
}

inline double tau1(const SystemParams& p) {
    if (p.lambda_a >= p.lambda_b) throw Unstable("tau1", "unstable: lambda_a >= lambda_b");
    return 1.0 / (p.lambda_b - p.lambda_a);
}

inline double tau2(const SystemParams& p) {
    const double capacity = p.s * p.lambda_c;
    if (p.lambda_a >= capacity) throw Unstable("tau2", "unstable: lambda_a >= s*lambda_c");
    return erlang_c(p.s, p.lambda_a / p.lambda_c) / (capacity - p.lambda_a) + 1.0 / p.lambda_c;
}

inline double tau3(const SystemParams& p) { return (p.n_conf - 1) / p.lambda_b; }

/// Every latency term for `p`. Throws Unstable naming the first failing
/// component when the parameters sit outside the analytic stability region.
inline LatencyReport latency_report(const SystemParams& p) {
    validate(p);
    LatencyReport rep;
    rep.tau1 = tau1(p);
    rep.tau2 = tau2(p);
    rep.tau3 = tau3(p);
    rep.tau_s = rep.tau1 + rep.tau2 + rep.tau3;
    rep.tau_t = rep.tau_s - 1.0 / p.lambda_c;
    const double queueing = erlang_c(p.s, p.lambda_a / p.lambda_c) / (p.s * p.lambda_c - p.lambda_a);
    rep.upper = 1.0 / (p.lambda_b - p.lambda_a) + queueing + (p.n_conf - 1) / p.lambda_b;
    rep.lower = p.n_conf / p.lambda_b;
    return rep;
}

/// Success probability of the alternate-history attack with relative mining
/// rate `beta` after N confirmations:
///
///   S = 1 - sum_{n=0}^{N} C(n+N-1, n) q^N p^n (1 - beta^(N-n+1)),  beta < 1
///   S = 1,                                                         beta >= 1
///
/// with q = 1/(1+beta), p = beta/(1+beta). The give-up threshold does not
/// enter this law; see attack.hpp for the finite-N_g race.
inline double attack_probability(const AttackParams& ap) {
    validate(ap);
    const double beta = ap.beta;
    if (beta >= 1.0) return 1.0;
    const int n_conf = ap.n_conf;
    const double q = 1.0 / (1.0 + beta);
    const double p = beta / (1.0 + beta);

    // term_n = C(n+N-1, n) q^N p^n, accumulated multiplicatively.  The
    // complement 1 - sum(term_n (1 - beta^(N-n+1))) is summed directly so that
    // tiny probabilities keep their relative precision.
    double term = std::pow(q, n_conf);
    double sum = 0.0;
    int n = 0;
    for (; n <= n_conf; ++n) {
        if (n > 0) term *= static_cast<double>(n_conf - 1 + n) / n * p;
        sum += term * std::pow(beta, n_conf - n + 1);
    }
    // Tail n > N: the attacker is already ahead.  Ratios tend to p < 1/2.
    for (; n < n_conf + 100000; ++n) {
        term *= static_cast<double>(n_conf - 1 + n) / n * p;
        sum += term;
        if (term <= sum * 1e-18) break;
    }
    return detail::clamp_probability(sum, "attack_probability");
}

}  // namespace bran
