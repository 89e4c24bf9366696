#pragma once
// Discrete-event simulation of the B-RAN pipeline:
// arrival -> block inclusion (up to k per block) -> N confirmations
// -> FIFO service on s links.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <ostream>
#include <queue>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "bran/model.hpp"
#include "bran/random.hpp"
#include "bran/stats.hpp"

namespace bran::des {

enum class RejectionOrder { NewestFirst, OldestFirst };

struct SimConfig {
    SystemParams params;
    std::uint64_t num_arrivals = 1'000'000;
    double warmup_fraction = 0.1;
    std::uint64_t seed = 0;
    RejectionOrder rejection_order = RejectionOrder::NewestFirst;
    bool keep_records = false;
};

inline constexpr double kAbsent = std::numeric_limits<double>::quiet_NaN();

// Timestamps that never happened (rejected or still in flight) are NaN.
struct RequestRecord {
    double t_arrival = kAbsent;
    double t_mined = kAbsent;
    double t_confirmed = kAbsent;
    double t_service_start = kAbsent;
    double t_service_end = kAbsent;
    bool rejected = false;

    bool serviced() const { return !std::isnan(t_service_end); }
};

struct PhaseMeans {
    MeanEstimate block_inclusion;  // t_mined - t_arrival
    MeanEstimate confirmation;     // t_confirmed - t_mined
    MeanEstimate service_wait;     // t_service_start - t_confirmed
    MeanEstimate service_time;     // t_service_end - t_service_start
};

struct Counts {
    std::uint64_t arrived = 0;
    std::uint64_t serviced = 0;
    std::uint64_t rejected = 0;
    std::uint64_t in_flight = 0;
};

struct SimStats {
    MeanEstimate mean_latency;  // arrival to service start
    MeanEstimate mean_sojourn;  // arrival to service end
    PhaseMeans phase_means;
    double ci95_halfwidth = kAbsent;  // of mean_latency
    Counts counts;
    double horizon = 0.0;
    std::uint64_t blocks_mined = 0;
    bool reliable = false;  // at least 1000 post-warmup serviced requests
};

struct SimResult {
    SimStats stats;
    std::vector<RequestRecord> records;  // filled when keep_records
    std::vector<double> block_times;     // every mining epoch, when keep_records
};

inline void validate(const SimConfig& cfg) {
    bran::validate(cfg.params);
    if (cfg.num_arrivals < 1) throw InvalidParam("num_arrivals", "must be >= 1");
    if (!(cfg.warmup_fraction >= 0.0 && cfg.warmup_fraction <= 0.9))
        throw InvalidParam("warmup_fraction", "must lie in [0, 0.9]");
}

namespace detail {

inline SimStats summarize(const std::vector<RequestRecord>& recs, const SimConfig& cfg) {
    SimStats st;
    std::vector<std::size_t> serviced;
    for (std::size_t id = 0; id < recs.size(); ++id) {
        const RequestRecord& r = recs[id];
        if (r.rejected)
            ++st.counts.rejected;
        else if (r.serviced())
            serviced.push_back(id);
        else
            ++st.counts.in_flight;
    }
    st.counts.arrived = recs.size();
    st.counts.serviced = serviced.size();

    const auto skip = static_cast<std::size_t>(std::floor(cfg.warmup_fraction * static_cast<double>(serviced.size())));
    const std::size_t n = serviced.size() - skip;
    std::vector<double> latency(n), sojourn(n), inclusion(n), confirmation(n), wait(n), service(n);
    for (std::size_t k = 0; k < n; ++k) {
        const RequestRecord& r = recs[serviced[skip + k]];
        latency[k] = r.t_service_start - r.t_arrival;
        sojourn[k] = r.t_service_end - r.t_arrival;
        inclusion[k] = r.t_mined - r.t_arrival;
        confirmation[k] = r.t_confirmed - r.t_mined;
        wait[k] = r.t_service_start - r.t_confirmed;
        service[k] = r.t_service_end - r.t_service_start;
    }
    st.mean_latency = batch_means(latency);
    st.mean_sojourn = batch_means(sojourn);
    st.phase_means = {batch_means(inclusion), batch_means(confirmation), batch_means(wait), batch_means(service)};
    st.ci95_halfwidth = st.mean_latency.ci95;
    st.reliable = n >= 1000;
    return st;
}

}  // namespace detail

/// Runs one simulation. The run ends at the instant of the last generated
/// arrival; requests not finished by then are counted as in flight.
///
/// Arrivals, mining epochs, rejection events and service times each draw
/// from their own substream of `cfg.seed`, so runs that differ only in k or
/// N see the same arrival and mining epochs.
inline SimResult run(const SimConfig& cfg) {
    validate(cfg);
    const SystemParams& p = cfg.params;
    SimResult out;
    if (p.lambda_a <= 0.0) {
        out.stats = detail::summarize({}, cfg);
        return out;
    }

    Rng arrival_rng = Rng::substream(cfg.seed, 0);
    Rng mining_rng = Rng::substream(cfg.seed, 1);
    Rng reject_rng = Rng::substream(cfg.seed, 2);
    Rng service_rng = Rng::substream(cfg.seed, 3);

    constexpr double never = std::numeric_limits<double>::infinity();
    std::vector<RequestRecord> recs;
    recs.reserve(cfg.num_arrivals);

    struct Block {
        std::uint64_t index;
        std::vector<std::uint64_t> requests;
    };
    std::deque<std::uint64_t> pending;
    std::deque<Block> unconfirmed;
    std::deque<std::uint64_t> service_queue;
    using Completion = std::pair<double, std::uint64_t>;
    std::priority_queue<Completion, std::vector<Completion>, std::greater<>> in_service;

    double next_arrival = arrival_rng.exponential(p.lambda_a);
    double next_block = mining_rng.exponential(p.lambda_b);
    double next_reject = p.lambda_r > 0.0 ? reject_rng.exponential(p.lambda_r) : never;
    std::uint64_t blocks = 0;
    double horizon = 0.0;

    auto start_service = [&](double now) {
        while (!service_queue.empty() && in_service.size() < static_cast<std::size_t>(p.s)) {
            const std::uint64_t id = service_queue.front();
            service_queue.pop_front();
            const double done = now + service_rng.exponential(p.lambda_c);
            recs[id].t_service_start = now;
            in_service.emplace(done, id);
        }
    };

    for (;;) {
        const double next_done = in_service.empty() ? never : in_service.top().first;
        const double now = std::min({next_arrival, next_block, next_reject, next_done});

        if (now == next_arrival) {
            const std::uint64_t id = recs.size();
            recs.push_back({});
            recs.back().t_arrival = now;
            pending.push_back(id);
            if (recs.size() == cfg.num_arrivals) {
                horizon = now;
                break;
            }
            next_arrival = now + arrival_rng.exponential(p.lambda_a);
        } else if (now == next_block) {
            ++blocks;
            if (cfg.keep_records) out.block_times.push_back(now);
            const auto take = std::min<std::size_t>(pending.size(), static_cast<std::size_t>(p.k));
            if (take > 0) {
                Block b{blocks, {}};
                b.requests.reserve(take);
                for (std::size_t n = 0; n < take; ++n) {
                    const std::uint64_t id = pending.front();
                    pending.pop_front();
                    recs[id].t_mined = now;
                    b.requests.push_back(id);
                }
                unconfirmed.push_back(std::move(b));
            }
            // A block is confirmed once N-1 further blocks sit on top of it.
            while (!unconfirmed.empty() &&
                   unconfirmed.front().index + static_cast<std::uint64_t>(p.n_conf) - 1 <= blocks) {
                for (std::uint64_t id : unconfirmed.front().requests) {
                    recs[id].t_confirmed = now;
                    service_queue.push_back(id);
                }
                unconfirmed.pop_front();
            }
            start_service(now);
            next_block = now + mining_rng.exponential(p.lambda_b);
        } else if (now == next_reject) {
            const auto drop = std::min<std::size_t>(pending.size(), static_cast<std::size_t>(p.r));
            for (std::size_t n = 0; n < drop; ++n) {
                std::uint64_t id;
                if (cfg.rejection_order == RejectionOrder::NewestFirst) {
                    id = pending.back();
                    pending.pop_back();
                } else {
                    id = pending.front();
                    pending.pop_front();
                }
                recs[id].rejected = true;
            }
            next_reject = now + reject_rng.exponential(p.lambda_r);
        } else {
            const auto [t, id] = in_service.top();
            in_service.pop();
            recs[id].t_service_end = t;
            start_service(now);
        }
    }

    out.stats = detail::summarize(recs, cfg);
    out.stats.horizon = horizon;
    out.stats.blocks_mined = blocks;
    if (cfg.keep_records) out.records = std::move(recs);
    return out;
}

inline std::string format_time(double t) { return std::isnan(t) ? std::string() : fmt::format("{:.12g}", t); }

/// Record stream as CSV:
/// req_id,t_arrival,t_mined,t_confirmed,t_service_start,t_service_end,rejected
inline void write_records_csv(std::ostream& os, const std::vector<RequestRecord>& recs) {
    os << "req_id,t_arrival,t_mined,t_confirmed,t_service_start,t_service_end,rejected\n";
    for (std::size_t id = 0; id < recs.size(); ++id) {
        const RequestRecord& r = recs[id];
        os << id << ',' << format_time(r.t_arrival) << ',' << format_time(r.t_mined) << ','
           << format_time(r.t_confirmed) << ',' << format_time(r.t_service_start) << ','
           << format_time(r.t_service_end) << ',' << (r.rejected ? 1 : 0) << '\n';
    }
}

}  // namespace bran::des
