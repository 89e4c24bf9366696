#pragma once
// Monte Carlo of the alternate-history attack race.
//
// Time is abstracted to the sequence of block events of the merged honest +
// attacker Poisson process: each event is an attacker block with probability
// beta/(1+beta), otherwise an honest block.

#include <cmath>
#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "bran/model.hpp"
#include "bran/parallel.hpp"
#include "bran/random.hpp"

namespace bran::attack {

/// How the attacked block relates to the N confirmations.
///   Inclusive: the attacked block is the first of the N honest blocks; the
///              attacker forks at the same moment and mines alongside it.
///   Exclusive: the attacked block is already on the chain and N further
///              honest blocks must follow it.
enum class ConfCounting { Inclusive, Exclusive };

struct RaceOptions {
    ConfCounting counting = ConfCounting::Inclusive;
    std::uint64_t step_cap = 1'000'000'000;
    // With no give-up threshold and beta < 1 a losing race drifts away
    // forever. It is stopped once the gambler's-ruin catch-up probability
    // beta^(d+1) from deficit d falls below this bound.
    double hopeless_below = 1e-12;
};

struct RaceOutcome {
    bool success = false;
    bool gave_up = false;   // deficit exceeded N_g
    bool hopeless = false;  // unbounded race cut at the hopeless deficit
    bool capped = false;    // hit step_cap
};

namespace detail {

// Threshold t with P((rng() >> 11) < t) = beta/(1+beta), exact to 53 bits.
inline std::uint64_t attacker_threshold(double beta) {
    return static_cast<std::uint64_t>(std::ldexp(beta / (1.0 + beta), 53));
}

// Smallest deficit d with beta^(d+1) < bound; max() when no such d applies.
inline std::int64_t hopeless_deficit(double beta, double bound) {
    if (beta >= 1.0 || bound <= 0.0) return std::numeric_limits<std::int64_t>::max();
    if (beta == 0.0) return 0;
    const double d = std::ceil(std::log(bound) / std::log(beta)) - 1.0;
    return std::max<std::int64_t>(0, static_cast<std::int64_t>(d));
}

struct Race {
    std::uint64_t threshold;
    std::int64_t honest_target;
    std::int64_t honest_credit;
    std::optional<int> give_up;
    std::int64_t hopeless_at;
    std::uint64_t step_cap;

    Race(const AttackParams& ap, const RaceOptions& opt)
        : threshold(attacker_threshold(ap.beta)),
          honest_target(ap.n_conf),
          honest_credit(opt.counting == ConfCounting::Exclusive ? 1 : 0),
          give_up(ap.give_up),
          hopeless_at(ap.give_up ? std::numeric_limits<std::int64_t>::max()
                                 : hopeless_deficit(ap.beta, opt.hopeless_below)),
          step_cap(opt.step_cap) {}

    RaceOutcome operator()(Rng& rng) const {
        RaceOutcome out;
        std::uint64_t steps = 0;

        // Confirmation phase: the attacker mines in secret while the honest
        // chain collects its N confirmations.
        std::int64_t honest = 0;
        std::int64_t attacker = 0;
        while (honest < honest_target) {
            if (++steps > step_cap) {
                out.capped = true;
                return out;
            }
            if ((rng() >> 11) < threshold)
                ++attacker;
            else
                ++honest;
        }

        // Race: d is the honest lead over the private fork.
        std::int64_t d = honest + honest_credit - attacker;
        for (;;) {
            if (d <= -1) {
                out.success = true;
                return out;
            }
            if (give_up && d > *give_up) {
                out.gave_up = true;
                return out;
            }
            if (d >= hopeless_at) {
                out.hopeless = true;
                return out;
            }
            if (++steps > step_cap) {
                out.capped = true;
                return out;
            }
            d += (rng() >> 11) < threshold ? -1 : 1;
        }
    }
};

}  // namespace detail

inline RaceOutcome race_once(const AttackParams& ap, Rng& rng, const RaceOptions& opt = {}) {
    validate(ap);
    return detail::Race(ap, opt)(rng);
}

struct AttackEstimate {
    double p_hat = 0.0;
    double std_error = 0.0;  // sqrt(p_hat (1 - p_hat) / trials)
    std::uint64_t trials = 0;
    std::uint64_t successes = 0;
    double gave_up_fraction = 0.0;  // of failures
    std::uint64_t hopeless = 0;
    std::uint64_t capped = 0;  // must stay 0 in acceptance runs
};

/// `trials` independent races; trial t draws from substream t of `seed`, so
/// the estimate does not depend on how trials are spread over threads.
inline AttackEstimate estimate(const AttackParams& ap, std::uint64_t trials, std::uint64_t seed,
                               const RaceOptions& opt = {}, unsigned threads = 0) {
    validate(ap);
    if (trials < 1) throw InvalidParam("trials", "must be >= 1");
    const detail::Race race(ap, opt);

    constexpr std::uint64_t chunk = 1u << 14;
    const std::size_t chunks = static_cast<std::size_t>((trials + chunk - 1) / chunk);
    struct Tally {
        std::uint64_t success = 0, gave_up = 0, hopeless = 0, capped = 0;
    };
    std::vector<Tally> tallies(chunks);
    parallel_for(
        chunks,
        [&](std::size_t c) {
            Tally t;
            const std::uint64_t begin = c * chunk;
            const std::uint64_t end = std::min(trials, begin + chunk);
            for (std::uint64_t trial = begin; trial < end; ++trial) {
                Rng rng = Rng::substream(seed, trial);
                const RaceOutcome o = race(rng);
                t.success += o.success;
                t.gave_up += o.gave_up;
                t.hopeless += o.hopeless;
                t.capped += o.capped;
            }
            tallies[c] = t;
        },
        threads);

    Tally total;
    for (const Tally& t : tallies) {
        total.success += t.success;
        total.gave_up += t.gave_up;
        total.hopeless += t.hopeless;
        total.capped += t.capped;
    }
    AttackEstimate est;
    est.trials = trials;
    est.successes = total.success;
    est.p_hat = static_cast<double>(total.success) / static_cast<double>(trials);
    est.std_error = std::sqrt(est.p_hat * (1.0 - est.p_hat) / static_cast<double>(trials));
    const std::uint64_t failures = trials - total.success;
    est.gave_up_fraction = failures > 0 ? static_cast<double>(total.gave_up) / static_cast<double>(failures) : 0.0;
    est.hopeless = total.hopeless;
    est.capped = total.capped;
    return est;
}

}  // namespace bran::attack
