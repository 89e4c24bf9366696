// Acceptance suite: one PASS/FAIL line per criterion.
//
//   bran_acceptance            run every criterion
//   bran_acceptance 3 5        run criteria 3 and 5
//
// Exit status is non-zero when any selected criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "bran/bran.hpp"

using namespace bran;

namespace {

struct Verdict {
    bool pass = true;
    std::vector<std::string> notes;

    void check(bool ok, std::string what) {
        if (!ok) pass = false;
        notes.push_back((ok ? "ok   " : "FAIL ") + std::move(what));
    }
    void info(std::string what) { notes.push_back("info " + std::move(what)); }
};

constexpr std::uint64_t kSeed = 0;
constexpr std::uint64_t kArrivals = 1'000'000;
constexpr std::uint64_t kTrials = 1'000'000;

double combined(double a, double b) { return std::sqrt(a * a + b * b); }

des::SimStats simulate(const SystemParams& p) {
    des::SimConfig c;
    c.params = p;
    c.num_arrivals = kArrivals;
    c.seed = kSeed;
    return des::run(c).stats;
}

// Load grid: lambda_b = lambda_c = 1, s = 2, N = 1, rho = lambda_a/lambda_b.
const std::vector<double> kRhoGrid = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95};
const std::vector<int> kBlockSizes = {1, 5, 10};

SystemParams load_params(double rho, int k) { return {rho, 1.0, 1.0, 0.0, k, 1, 2, 1}; }

const std::map<std::pair<double, int>, des::SimStats>& load_runs() {
    static const auto runs = [] {
        std::map<std::pair<double, int>, des::SimStats> m;
        for (int k : kBlockSizes)
            for (double rho : kRhoGrid) m[{rho, k}] = simulate(load_params(rho, k));
        return m;
    }();
    return runs;
}

const SystemParams kConventional{1, 2, 1, 0, 1, 1, 2, 2};

const des::SimStats& conventional_run() {
    static const des::SimStats st = simulate(kConventional);
    return st;
}

// 1. Closed-form attack probability anchor points.
Verdict criterion1() {
    Verdict v;
    const double s1 = attack_probability({0.1, 1, std::nullopt});
    const double s3 = attack_probability({0.1, 3, std::nullopt});
    v.check(std::abs(s1 - 0.025620) <= 1e-6, fmt::format("S(0.1, 1) = {:.9f}, expected 0.025620 +- 1e-6", s1));
    v.check(std::abs(s3 - 0.0020983) <= 1e-6, fmt::format("S(0.1, 3) = {:.9f}, expected 0.0020983 +- 1e-6", s3));
    bool all_one = true;
    for (double beta : {1.0, 1.2, 2.0, 10.0})
        for (int n = 1; n <= 12; ++n) all_one &= attack_probability({beta, n, std::nullopt}) == 1.0;
    v.check(all_one, "S(beta >= 1, N) == 1 exactly for beta in {1, 1.2, 2, 10}, N in 1..12");
    v.check(s1 > 1e-2 && s1 < 4e-2, fmt::format("N=1 curve starts around 2e-2 (S = {:.4g})", s1));
    const double near_one = attack_probability({0.999, 1, std::nullopt});
    v.check(near_one > 0.95, fmt::format("N=1 curve reaches ~1 at beta -> 1 (S(0.999) = {:.6f})", near_one));
    return v;
}

// 2. Monte Carlo race against the closed form.
Verdict criterion2() {
    Verdict v;
    for (int n : {1, 3})
        for (double beta : {0.1, 0.3, 0.5, 0.7, 0.9}) {
            const AttackParams ap{beta, n, std::nullopt};
            const attack::AttackEstimate e = attack::estimate(ap, kTrials, kSeed);
            const double s = attack_probability(ap);
            const double z = e.std_error > 0 ? std::abs(e.p_hat - s) / e.std_error : 0.0;
            v.check(std::abs(e.p_hat - s) <= 4 * e.std_error && e.capped == 0,
                    fmt::format("beta={:.1f} N={}: p_hat={:.6f} S={:.6f} stderr={:.2e} |z|={:.2f} capped={}", beta, n,
                                e.p_hat, s, e.std_error, z, e.capped));
        }
    return v;
}

// 3. Conventional model (k = 1) simulation against tau_s.
Verdict criterion3() {
    Verdict v;
    const des::SimStats& st = conventional_run();
    const double tau_s = latency_report(kConventional).tau_s;
    const double dev = st.mean_sojourn.mean - tau_s;
    v.check(std::abs(dev) <= 3 * st.mean_sojourn.ci95,
            fmt::format("mean_sojourn={:.5f} tau_s={:.5f} deviation={:+.5f} 3*ci95={:.5f}", st.mean_sojourn.mean,
                        tau_s, dev, 3 * st.mean_sojourn.ci95));
    v.info(fmt::format("service-queue wait {:.5f} vs Erlang C wait {:.5f}", st.phase_means.service_wait.mean,
                       erlang_c(2, 1.0) / (2.0 - 1.0)));
    return v;
}

// 4. Steady state of the chain against the M/M/1 and M/M/s closed forms.
Verdict criterion4() {
    Verdict v;
    for (int s : {1, 2})
        for (double rho : {0.3, 0.5, 0.8}) {
            const SystemParams p{rho, 1.0, 1.0, 0.0, 1, 1, s, 1};
            const ctmc::Solution sol = ctmc::solve_adaptive(p);
            const double tol = std::max(1e-6, 100 * sol.metrics.boundary_mass);
            const double mm1 = rho / (1 - rho);
            const double target = tau1(p) + tau2(p);
            v.check(std::abs(sol.metrics.mean_i - mm1) <= tol,
                    fmt::format("s={} rho={}: E[i]={:.10f} vs {:.10f}", s, rho, sol.metrics.mean_i, mm1));
            v.check(std::abs(sol.metrics.little_latency - target) <= tol,
                    fmt::format("s={} rho={}: little={:.10f} vs tau1+tau2={:.10f} (tol {:.1e}, grid {}x{})", s, rho,
                                sol.metrics.little_latency, target, tol, sol.space.i_max() + 1,
                                sol.space.j_max() + 1));
        }
    return v;
}

// 5. Latency against traffic intensity for several block sizes.
Verdict criterion5() {
    Verdict v;
    const auto& runs = load_runs();
    for (int k : kBlockSizes) {
        bool mono = true;
        std::string trace;
        for (std::size_t n = 0; n < kRhoGrid.size(); ++n) {
            const auto& cur = runs.at({kRhoGrid[n], k}).mean_latency;
            trace += fmt::format(" {:.4g}", cur.mean);
            if (n == 0) continue;
            const auto& prev = runs.at({kRhoGrid[n - 1], k}).mean_latency;
            mono &= cur.mean >= prev.mean - 3 * combined(cur.ci95, prev.ci95);
        }
        v.check(mono, fmt::format("(a) k={} latency non-decreasing in rho:{}", k, trace));
    }
    {
        const auto& hi1 = runs.at({0.95, 1}).mean_latency;
        const auto& hi10 = runs.at({0.95, 10}).mean_latency;
        v.check(hi1.mean - hi10.mean > 3 * combined(hi1.ci95, hi10.ci95),
                fmt::format("(b) rho=0.95: k=1 {:.4f} +- {:.4f} vs k=10 {:.4f} +- {:.4f}", hi1.mean, hi1.ci95,
                            hi10.mean, hi10.ci95));
    }
    for (std::size_t a = 0; a < kBlockSizes.size(); ++a)
        for (std::size_t b = a + 1; b < kBlockSizes.size(); ++b) {
            const auto& x = runs.at({0.1, kBlockSizes[a]}).mean_latency;
            const auto& y = runs.at({0.1, kBlockSizes[b]}).mean_latency;
            v.check(std::abs(x.mean - y.mean) <= 3 * combined(x.ci95, y.ci95),
                    fmt::format("(c) rho=0.1: k={} {:.5f} vs k={} {:.5f}, |diff|={:.5f} 3*ci={:.5f}", kBlockSizes[a],
                                x.mean, kBlockSizes[b], y.mean, std::abs(x.mean - y.mean),
                                3 * combined(x.ci95, y.ci95)));
        }
    return v;
}

// 6. Latency against the number of confirmations.
Verdict criterion6() {
    Verdict v;
    const std::vector<int> ns = {1, 2, 3, 4, 5, 6};
    for (double rho : {0.3, 0.8}) {
        double prev_tau = 0.0;
        bool affine = true;
        for (int n : ns) {
            const double tau_t = latency_report({rho, 1.0, 1.0, 0.0, 1, 1, 2, n}).tau_t;
            if (n > ns.front()) affine &= std::abs((tau_t - prev_tau) - 1.0) <= 1e-12;
            prev_tau = tau_t;
        }
        v.check(affine, fmt::format("rho={}: analytic tau_t steps by exactly 1/lambda_b = 1 per confirmation", rho));

        std::map<std::pair<int, int>, MeanEstimate> lat;
        for (int k : {1, 10})
            for (int n : ns) lat[{k, n}] = simulate({rho, 1.0, 1.0, 0.0, k, 1, 2, n}).mean_latency;
        for (int k : {1, 10}) {
            bool increasing = true;
            std::string trace;
            for (int n : ns) {
                trace += fmt::format(" {:.4g}", lat[{k, n}].mean);
                if (n == ns.front()) continue;
                const auto& cur = lat[{k, n}];
                const auto& prev = lat[{k, n - 1}];
                increasing &= cur.mean > prev.mean - 3 * combined(cur.ci95, prev.ci95);
            }
            v.check(increasing, fmt::format("rho={} k={} latency increases with N:{}", rho, k, trace));
        }
        if (rho == 0.8) {
            bool above = true;
            for (int n : ns) {
                const auto& a = lat[{1, n}];
                const auto& b = lat[{10, n}];
                above &= a.mean - b.mean > 3 * combined(a.ci95, b.ci95);
            }
            v.check(above, "rho=0.8: k=1 latency exceeds k=10 latency for every N");
        }
    }
    return v;
}

// 7. Simulated latency sits between the closed-form bounds.
Verdict criterion7() {
    Verdict v;
    struct Case {
        std::string label;
        SystemParams p;
        const des::SimStats* st;
    };
    std::vector<Case> cases{{"crit3", kConventional, &conventional_run()}};
    for (const auto& [key, st] : load_runs())
        cases.push_back({fmt::format("rho={} k={}", key.first, key.second), load_params(key.first, key.second), &st});

    bool lower_ok = true, upper_ok = true, upper_latency_ok = true;
    std::string worst_upper, latency_violations;
    double worst_excess = -INFINITY;
    for (const Case& c : cases) {
        const LatencyReport rep = latency_report(c.p);
        lower_ok &= c.st->mean_latency.mean >= rep.lower - 3 * c.st->mean_latency.ci95;
        if (c.p.k != 1) continue;
        const double excess = c.st->mean_sojourn.mean - (rep.upper + 3 * c.st->mean_sojourn.ci95);
        upper_ok &= excess <= 0;
        if (c.st->mean_latency.mean > rep.upper + 3 * c.st->mean_latency.ci95) {
            upper_latency_ok = false;
            latency_violations += fmt::format(" [{}: {:.4f} vs {:.4f}]", c.label, c.st->mean_latency.mean, rep.upper);
        }
        if (excess > worst_excess) {
            worst_excess = excess;
            worst_upper = fmt::format("{}: mean_sojourn={:.4f} L_u={:.4f} 3*ci95={:.4f}", c.label,
                                      c.st->mean_sojourn.mean, rep.upper, 3 * c.st->mean_sojourn.ci95);
        }
    }
    v.check(lower_ok, fmt::format("mean latency >= L_l - 3*ci95 on all {} configs", cases.size()));
    v.check(upper_ok, "k=1: mean_sojourn <= L_u + 3*ci95 (worst " + worst_upper + ")");
    v.info(fmt::format("k=1: mean latency (arrival to service start) <= L_u + 3*ci95: {}",
                       upper_latency_ok ? "holds" : "violated" + latency_violations));
    return v;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(BRAN_CLI_PATH) + " " + args + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// 8. CLI output is byte-identical across reruns with the same config and seed.
Verdict criterion8() {
    Verdict v;
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / fmt::format("bran_acceptance_{}", ::getpid());
    fs::create_directories(dir);
    const std::vector<std::pair<std::string, std::string>> experiments = {
        {"sweep-attack",
         "--n_conf 1,3 --n_g 2,inf --sweep.start 0.05 --sweep.stop 0.95 --sweep.points 10 --trials 20000 --seed 9"},
        {"sweep-rho", "--k 1,5,10 --sweep.start 0.1 --sweep.stop 0.95 --sweep.points 5 --num_arrivals 50000"},
        {"sweep-confirmations",
         "--rho 0.3,0.8 --k 10 --sweep.start 1 --sweep.stop 4 --sweep.points 4 --num_arrivals 50000 --format json"},
        {"simulate", "--lambda_a 0.9 --lambda_r 0.1 --k 4 --n_conf 3 --num_arrivals 20000 --seed 3"},
        {"steady-state", "--lambda_a 0.6 --k 3 --lambda_r 0.05"},
        {"attack", "--beta 0.4 --n_conf 2 --n_g 4 --trials 50000 --seed 1"},
        {"analytic", "--lambda_a 0.7 --n_conf 4"},
    };
    for (const auto& [mode, args] : experiments) {
        const fs::path a = dir / (mode + "_a.out"), b = dir / (mode + "_b.out");
        const int ra = run_cli(fmt::format("{} {} --output {}", mode, args, a.string()));
        const int rb = run_cli(fmt::format("{} {} --output {}", mode, args, b.string()));
        const std::string sa = slurp(a), sb = slurp(b);
        v.check(ra == 0 && rb == 0 && !sa.empty() && sa == sb,
                fmt::format("{}: exit {}/{}, {} bytes, identical={}", mode, ra, rb, sa.size(), sa == sb));
    }
    fs::remove_all(dir);
    return v;
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
        {"C1 attack probability anchor points", criterion1},
        {"C2 attack Monte Carlo vs closed form", criterion2},
        {"C3 conventional latency simulation vs tau_s", criterion3},
        {"C4 steady-state chain vs queueing closed forms", criterion4},
        {"C5 latency vs traffic intensity shape", criterion5},
        {"C6 latency vs confirmations shape", criterion6},
        {"C7 latency bound sandwich", criterion7},
        {"C8 CLI output determinism", criterion8},
    };
    std::set<int> selected;
    for (int n = 1; n < argc; ++n) selected.insert(std::atoi(argv[n]));

    bool all = true;
    for (std::size_t n = 0; n < criteria.size(); ++n) {
        if (!selected.empty() && !selected.count(static_cast<int>(n + 1))) continue;
        const auto t0 = std::chrono::steady_clock::now();
        const Verdict v = criteria[n].second();
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        all &= v.pass;
        std::cout << (v.pass ? "[PASS] " : "[FAIL] ") << criteria[n].first << fmt::format("  ({:.1f} s)", secs)
                  << '\n';
        for (const auto& note : v.notes) std::cout << "       " << note << '\n';
        std::cout.flush();
    }
    return all ? 0 : 1;
}
