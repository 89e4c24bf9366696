#pragma once
// Domain types and the continuous-time transition kernel of the two-queue
// B-RAN chain: state (i, j) = (pending requests, confirmed requests).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bran {

class InvalidParam : public std::invalid_argument {
public:
    InvalidParam(std::string name, const std::string& reason)
        : std::invalid_argument("invalid parameter " + name + ": " + reason), name_(std::move(name)) {}

    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

// Thrown when a closed form is evaluated outside its stability region.
// `component()` names the failing term (e.g. "tau1", "tau2", "erlang_c").
class Unstable : public std::domain_error {
public:
    Unstable(std::string component, const std::string& what)
        : std::domain_error(what), component_(std::move(component)) {}

    const std::string& component() const noexcept { return component_; }

private:
    std::string component_;
};

struct SystemParams {
    double lambda_a = 0.0;  // request arrivals
    double lambda_b = 1.0;  // block mining
    double lambda_c = 1.0;  // per-link service
    double lambda_r = 0.0;  // rejection events
    int k = 1;              // max requests per block
    int r = 1;              // requests removed per rejection
    int s = 1;              // parallel access links
    int n_conf = 1;         // confirmations N

    friend bool operator==(const SystemParams&, const SystemParams&) = default;
};

struct Stability {
    bool analytic = false;  // lambda_a < lambda_b and lambda_a < s*lambda_c
    bool batch = false;     // block queue and service queue can drain
};

struct ValidatedParams {
    SystemParams params;
    Stability stability;
};

struct SystemState {
    std::int64_t i = 0;
    std::int64_t j = 0;

    friend bool operator==(const SystemState&, const SystemState&) = default;
};

enum class TransitionKind { Arrival, Mine, Service, Reject };

inline const char* to_string(TransitionKind kind) {
    switch (kind) {
        case TransitionKind::Arrival: return "Arrival";
        case TransitionKind::Mine: return "Mine";
        case TransitionKind::Service: return "Service";
        case TransitionKind::Reject: return "Reject";
    }
    return "?";
}

struct Transition {
    TransitionKind kind;
    SystemState target;
    double rate;

    friend bool operator==(const Transition&, const Transition&) = default;
};

// Give-up threshold N_g; std::nullopt means the attacker never abandons the race.
struct AttackParams {
    double beta = 0.0;
    int n_conf = 1;
    std::optional<int> give_up;
};

namespace detail {

inline void require_rate(const char* name, double value, bool strictly_positive) {
    if (std::isnan(value)) throw InvalidParam(name, "NaN");
    if (!std::isfinite(value)) throw InvalidParam(name, "not finite");
    if (strictly_positive ? value <= 0.0 : value < 0.0)
        throw InvalidParam(name, strictly_positive ? "must be > 0" : "must be >= 0");
}

inline void require_count(const char* name, long long value) {
    if (value < 1) throw InvalidParam(name, "must be >= 1");
}

}  // namespace detail

/// Checks every SystemParams invariant and attaches the stability flags.
///
/// The batch flag approximates the drain capacity of both queues: the block
/// queue removes at most k*lambda_b + r*lambda_r requests per unit time, and
/// at least lambda_a - r*lambda_r of the traffic reaches the s service links.
inline ValidatedParams validate(const SystemParams& p) {
    detail::require_rate("lambda_a", p.lambda_a, false);
    detail::require_rate("lambda_b", p.lambda_b, true);
    detail::require_rate("lambda_c", p.lambda_c, true);
    detail::require_rate("lambda_r", p.lambda_r, false);
    detail::require_count("k", p.k);
    detail::require_count("r", p.r);
    detail::require_count("s", p.s);
    detail::require_count("n_conf", p.n_conf);

    Stability st;
    const double service_capacity = p.s * p.lambda_c;
    st.analytic = p.lambda_a < p.lambda_b && p.lambda_a < service_capacity;

    const double drain = p.k * p.lambda_b + p.r * p.lambda_r;
    const double serviced_rate = std::max(0.0, p.lambda_a - p.r * p.lambda_r);
    st.batch = p.lambda_a < drain && serviced_rate < service_capacity;
    return {p, st};
}

inline void validate(const AttackParams& ap) {
    detail::require_rate("beta", ap.beta, false);
    detail::require_count("n_conf", ap.n_conf);
    if (ap.give_up) detail::require_count("n_g", *ap.give_up);
}

/// Enabled transitions out of `state`, in the fixed order
/// Arrival, Mine, Service, Reject. Mining and rejection never underflow the
/// pending queue; service runs at min(j, s)*lambda_c.
inline std::vector<Transition> transitions(const SystemState& state, const SystemParams& p) {
    std::vector<Transition> out;
    out.reserve(4);
    if (p.lambda_a > 0.0)
        out.push_back({TransitionKind::Arrival, {state.i + 1, state.j}, p.lambda_a});
    if (state.i > 0) {
        const std::int64_t mined = std::min<std::int64_t>(state.i, p.k);
        out.push_back({TransitionKind::Mine, {state.i - mined, state.j + mined}, p.lambda_b});
    }
    if (state.j > 0) {
        const auto busy = static_cast<double>(std::min<std::int64_t>(state.j, p.s));
        out.push_back({TransitionKind::Service, {state.i, state.j - 1}, busy * p.lambda_c});
    }
    if (state.i > 0 && p.lambda_r > 0.0) {
        const std::int64_t removed = std::min<std::int64_t>(state.i, p.r);
        out.push_back({TransitionKind::Reject, {state.i - removed, state.j}, p.lambda_r});
    }
    return out;
}

}  // namespace bran
