#pragma once
// Experiment configuration, parameter sweeps and tabular output for the
// `bran` command-line tool.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "bran/analytic.hpp"
#include "bran/attack.hpp"
#include "bran/ctmc.hpp"
#include "bran/des.hpp"
#include "bran/model.hpp"
#include "bran/parallel.hpp"

namespace bran::experiment {

enum class Mode { Analytic, SteadyState, Simulate, Attack, SweepRho, SweepConfirmations, SweepAttack };
enum class RhoDefinition { Block, Service };
enum class Scale { Linear, Log };
enum class Format { Csv, Json };

inline constexpr std::string_view kModeNames[] = {"analytic",  "steady-state", "simulate",           "attack",
                                                  "sweep-rho", "sweep-confirmations", "sweep-attack"};

inline std::string_view to_string(Mode m) { return kModeNames[static_cast<int>(m)]; }

enum class ConfigErrorKind { UnknownKey, TypeMismatch, MissingRequired, InvalidValue, Syntax };

class ConfigError : public std::runtime_error {
public:
    ConfigError(ConfigErrorKind kind, std::string key, const std::string& what)
        : std::runtime_error(what), kind_(kind), key_(std::move(key)) {}

    ConfigErrorKind kind() const noexcept { return kind_; }
    const std::string& key() const noexcept { return key_; }

private:
    ConfigErrorKind kind_;
    std::string key_;
};

struct SweepAxis {
    std::string variable;
    double start = 0.0;
    double stop = 0.0;
    int points = 0;
    Scale scale = Scale::Linear;
};

struct ExperimentConfig {
    Mode mode = Mode::Analytic;
    SystemParams params;
    // List-valued keys; single-evaluation modes use the first entry.
    std::vector<int> k_values{1};
    std::vector<int> n_conf_values{1};
    std::vector<std::optional<int>> n_g_values{std::nullopt};
    std::vector<double> rho_values;
    double beta = 0.0;
    RhoDefinition rho_definition = RhoDefinition::Block;
    attack::ConfCounting conf_counting = attack::ConfCounting::Inclusive;
    des::RejectionOrder rejection_order = des::RejectionOrder::NewestFirst;
    SweepAxis sweep;
    std::uint64_t trials = 1'000'000;
    std::uint64_t num_arrivals = 1'000'000;
    std::uint64_t step_cap = 1'000'000'000;
    double warmup_fraction = 0.1;
    std::uint64_t seed = 0;
    std::string output;   // empty = stdout
    std::string records;  // simulate mode: optional record-stream CSV path
    Format format = Format::Csv;
};

/// Flat `key = value` overrides, e.g. from command-line flags.
using Overrides = std::map<std::string, std::string>;

inline const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys = {
        "mode",        "lambda_a",    "lambda_b",     "lambda_c",      "lambda_r",      "k",
        "r",           "s",           "n_conf",       "beta",          "n_g",           "rho",
        "rho_definition", "conf_counting", "rejection_order", "sweep.variable", "sweep.start", "sweep.stop",
        "sweep.points", "sweep.scale", "trials",      "num_arrivals",  "warmup_fraction", "step_cap",
        "seed",        "output",      "records",      "format"};
    return keys;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

inline std::string unquote(std::string_view s) {
    s = trim(s);
    if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front())
        s = s.substr(1, s.size() - 2);
    return std::string(s);
}

struct Entry {
    std::string value;
    std::string origin;  // "line 4", "flag --seed", "environment"
};

class Reader {
public:
    explicit Reader(std::map<std::string, Entry> entries) : entries_(std::move(entries)) {}

    bool has(const std::string& key) const { return entries_.count(key) > 0; }

    const Entry& entry(const std::string& key) const { return entries_.at(key); }

    [[noreturn]] void mismatch(const std::string& key, const std::string& expected) const {
        const Entry& e = entry(key);
        throw ConfigError(ConfigErrorKind::TypeMismatch, key,
                          fmt::format("{}: key '{}' expects {}, got '{}'", e.origin, key, expected, e.value));
    }

    [[noreturn]] void invalid(const std::string& key, const std::string& why) const {
        const std::string where = has(key) ? entry(key).origin + ": " : std::string();
        throw ConfigError(ConfigErrorKind::InvalidValue, key, fmt::format("{}key '{}' {}", where, key, why));
    }

    static std::vector<std::string> split_list(const std::string& v) {
        std::vector<std::string> out;
        std::string_view rest = v;
        for (;;) {
            const auto comma = rest.find(',');
            out.push_back(unquote(rest.substr(0, comma)));
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        return out;
    }

    static std::optional<double> to_double(const std::string& s) {
        double v = 0.0;
        const char* end = s.data() + s.size();
        auto [p, ec] = std::from_chars(s.data(), end, v);
        if (ec != std::errc() || p != end || s.empty()) return std::nullopt;
        return v;
    }

    static std::optional<long long> to_int(const std::string& s) {
        long long v = 0;
        const char* end = s.data() + s.size();
        auto [p, ec] = std::from_chars(s.data(), end, v);
        if (ec != std::errc() || p != end || s.empty()) return std::nullopt;
        return v;
    }

    double get_double(const std::string& key, double fallback) const {
        if (!has(key)) return fallback;
        const auto v = to_double(unquote(entry(key).value));
        if (!v) mismatch(key, "a number");
        return *v;
    }

    std::vector<double> get_double_list(const std::string& key) const {
        std::vector<double> out;
        if (!has(key)) return out;
        for (const auto& item : split_list(entry(key).value)) {
            const auto v = to_double(item);
            if (!v) mismatch(key, "a number or comma-separated list of numbers");
            out.push_back(*v);
        }
        return out;
    }

    long long get_int(const std::string& key, long long fallback) const {
        if (!has(key)) return fallback;
        const auto v = to_int(unquote(entry(key).value));
        if (!v) mismatch(key, "an integer");
        return *v;
    }

    std::uint64_t get_count(const std::string& key, std::uint64_t fallback) const {
        if (!has(key)) return fallback;
        const std::string s = unquote(entry(key).value);
        std::uint64_t v = 0;
        const char* end = s.data() + s.size();
        auto [p, ec] = std::from_chars(s.data(), end, v);
        if (ec == std::errc() && p == end && !s.empty()) return v;
        // Accept integral scientific notation such as 1e6.
        const auto d = to_double(s);
        if (d && *d >= 0.0 && *d < 1.8e19 && std::floor(*d) == *d) return static_cast<std::uint64_t>(*d);
        mismatch(key, "a non-negative integer");
    }

    std::vector<int> get_int_list(const std::string& key, std::vector<int> fallback) const {
        if (!has(key)) return fallback;
        std::vector<int> out;
        for (const auto& item : split_list(entry(key).value)) {
            const auto v = to_int(item);
            if (!v || *v < std::numeric_limits<int>::min() || *v > std::numeric_limits<int>::max())
                mismatch(key, "an integer or comma-separated list of integers");
            out.push_back(static_cast<int>(*v));
        }
        return out;
    }

    std::vector<std::optional<int>> get_threshold_list(const std::string& key) const {
        if (!has(key)) return {std::nullopt};
        std::vector<std::optional<int>> out;
        for (const auto& item : split_list(entry(key).value)) {
            if (item == "inf" || item == "unbounded") {
                out.emplace_back(std::nullopt);
                continue;
            }
            const auto v = to_int(item);
            if (!v || *v > std::numeric_limits<int>::max())
                mismatch(key, "a positive integer, 'inf'/'unbounded', or a list of them");
            out.emplace_back(static_cast<int>(*v));
        }
        return out;
    }

    std::string get_string(const std::string& key, std::string fallback) const {
        return has(key) ? unquote(entry(key).value) : fallback;
    }

    template <class E>
    E get_enum(const std::string& key, E fallback, std::initializer_list<std::pair<std::string_view, E>> choices) const {
        if (!has(key)) return fallback;
        const std::string v = unquote(entry(key).value);
        std::string names;
        for (const auto& [name, value] : choices) {
            if (v == name) return value;
            names += (names.empty() ? "" : "|") + std::string(name);
        }
        mismatch(key, "one of " + names);
    }

private:
    std::map<std::string, Entry> entries_;
};

inline void check_key(const std::string& key, const std::string& origin) {
    const auto& keys = known_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
        throw ConfigError(ConfigErrorKind::UnknownKey, key, fmt::format("{}: unknown key '{}'", origin, key));
}

}  // namespace detail

/// Parses a flat `key = value` document (`#` starts a comment) and layers
/// the sources: flags over file values over the BRAN_SIM_SEED environment
/// seed over built-in defaults. List-valued keys take comma-separated items.
inline ExperimentConfig parse_config(std::string_view text, const Overrides& flags = {},
                                     const std::optional<std::string>& env_seed = std::nullopt) {
    using detail::Entry;
    std::map<std::string, Entry> entries;
    if (env_seed) entries["seed"] = {*env_seed, "environment BRAN_SIM_SEED"};

    std::istringstream in{std::string(text)};
    std::string line;
    for (int lineno = 1; std::getline(in, line); ++lineno) {
        std::string_view body = line;
        if (const auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
        body = detail::trim(body);
        if (body.empty()) continue;
        const std::string origin = fmt::format("line {}", lineno);
        const auto eq = body.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError(ConfigErrorKind::Syntax, "", fmt::format("{}: expected 'key = value'", origin));
        const std::string key(detail::trim(body.substr(0, eq)));
        detail::check_key(key, origin);
        entries[key] = {std::string(detail::trim(body.substr(eq + 1))), origin};
    }
    for (const auto& [key, value] : flags) {
        const std::string origin = "flag --" + key;
        detail::check_key(key, origin);
        entries[key] = {value, origin};
    }

    const detail::Reader rd(std::move(entries));
    ExperimentConfig cfg;

    if (!rd.has("mode"))
        throw ConfigError(ConfigErrorKind::MissingRequired, "mode", "missing required key 'mode'");
    cfg.mode = rd.get_enum<Mode>("mode", Mode::Analytic,
                                 {{"analytic", Mode::Analytic},
                                  {"steady-state", Mode::SteadyState},
                                  {"simulate", Mode::Simulate},
                                  {"attack", Mode::Attack},
                                  {"sweep-rho", Mode::SweepRho},
                                  {"sweep-confirmations", Mode::SweepConfirmations},
                                  {"sweep-attack", Mode::SweepAttack}});

    auto require = [&](const std::string& key) {
        if (!rd.has(key))
            throw ConfigError(ConfigErrorKind::MissingRequired, key,
                              fmt::format("mode {} requires key '{}'", to_string(cfg.mode), key));
    };
    const bool is_sweep = cfg.mode == Mode::SweepRho || cfg.mode == Mode::SweepConfirmations ||
                          cfg.mode == Mode::SweepAttack;

    SystemParams& p = cfg.params;
    p.lambda_b = rd.get_double("lambda_b", 1.0);
    p.lambda_c = rd.get_double("lambda_c", 1.0);
    p.lambda_r = rd.get_double("lambda_r", 0.0);
    p.r = static_cast<int>(rd.get_int("r", 1));
    p.s = static_cast<int>(rd.get_int("s", 2));
    cfg.k_values = rd.get_int_list("k", {1});
    cfg.n_conf_values = rd.get_int_list("n_conf", {1});
    cfg.n_g_values = rd.get_threshold_list("n_g");
    cfg.rho_values = rd.get_double_list("rho");
    p.k = cfg.k_values.front();
    p.n_conf = cfg.n_conf_values.front();

    switch (cfg.mode) {
        case Mode::Analytic:
        case Mode::SteadyState:
        case Mode::Simulate:
            require("lambda_a");
            break;
        case Mode::Attack:
            require("beta");
            break;
        case Mode::SweepConfirmations:
            if (!rd.has("rho")) require("lambda_a");
            break;
        default:
            break;
    }
    p.lambda_a = rd.get_double("lambda_a", 0.0);
    cfg.beta = rd.get_double("beta", 0.0);

    cfg.rho_definition = rd.get_enum<RhoDefinition>(
        "rho_definition", RhoDefinition::Block, {{"block", RhoDefinition::Block}, {"service", RhoDefinition::Service}});
    cfg.conf_counting = rd.get_enum<attack::ConfCounting>(
        "conf_counting", attack::ConfCounting::Inclusive,
        {{"inclusive", attack::ConfCounting::Inclusive}, {"exclusive", attack::ConfCounting::Exclusive}});
    cfg.rejection_order = rd.get_enum<des::RejectionOrder>(
        "rejection_order", des::RejectionOrder::NewestFirst,
        {{"newest", des::RejectionOrder::NewestFirst}, {"oldest", des::RejectionOrder::OldestFirst}});
    cfg.format = rd.get_enum<Format>("format", Format::Csv, {{"csv", Format::Csv}, {"json", Format::Json}});
    cfg.trials = rd.get_count("trials", 1'000'000);
    cfg.num_arrivals = rd.get_count("num_arrivals", 1'000'000);
    cfg.step_cap = rd.get_count("step_cap", 1'000'000'000);
    cfg.warmup_fraction = rd.get_double("warmup_fraction", 0.1);
    cfg.seed = rd.get_count("seed", 0);
    cfg.output = rd.get_string("output", "");
    cfg.records = rd.get_string("records", "");

    if (is_sweep) {
        const std::string expected = cfg.mode == Mode::SweepRho             ? "rho"
                                     : cfg.mode == Mode::SweepConfirmations ? "n_conf"
                                                                            : "beta";
        cfg.sweep.variable = rd.get_string("sweep.variable", expected);
        if (cfg.sweep.variable != expected)
            rd.invalid("sweep.variable", fmt::format("must be '{}' for mode {}", expected, to_string(cfg.mode)));
        require("sweep.start");
        require("sweep.stop");
        require("sweep.points");
        cfg.sweep.start = rd.get_double("sweep.start", 0.0);
        cfg.sweep.stop = rd.get_double("sweep.stop", 0.0);
        cfg.sweep.points = static_cast<int>(rd.get_int("sweep.points", 0));
        cfg.sweep.scale =
            rd.get_enum<Scale>("sweep.scale", Scale::Linear, {{"linear", Scale::Linear}, {"log", Scale::Log}});
        if (!(cfg.sweep.start < cfg.sweep.stop)) rd.invalid("sweep.stop", "must be greater than sweep.start");
        if (cfg.sweep.points < 2) rd.invalid("sweep.points", "must be >= 2");
        if (cfg.sweep.scale == Scale::Log && cfg.sweep.start <= 0.0)
            rd.invalid("sweep.start", "must be > 0 for a log-scale sweep");
    }

    // Scalar-only keys outside the modes that sweep over them.
    if (cfg.mode != Mode::SweepRho && cfg.k_values.size() > 1) rd.mismatch("k", "a single integer in this mode");
    if (cfg.mode != Mode::SweepAttack && cfg.n_conf_values.size() > 1)
        rd.mismatch("n_conf", "a single integer in this mode");
    if (cfg.mode != Mode::SweepAttack && cfg.n_g_values.size() > 1)
        rd.mismatch("n_g", "a single threshold in this mode");
    if (cfg.mode != Mode::SweepConfirmations && cfg.rho_values.size() > 1)
        rd.mismatch("rho", "a single number in this mode");

    for (double rho : cfg.rho_values)
        if (!(rho >= 0.0 && rho < 1.0)) rd.invalid("rho", "values must lie in [0, 1)");
    for (const auto& ng : cfg.n_g_values)
        if (ng && *ng < 1) rd.invalid("n_g", "must be >= 1 or 'inf'");
    for (int k : cfg.k_values)
        if (k < 1) rd.invalid("k", "must be >= 1");
    for (int n : cfg.n_conf_values)
        if (n < 1) rd.invalid("n_conf", "must be >= 1");
    if (cfg.trials < 1) rd.invalid("trials", "must be >= 1");
    if (cfg.num_arrivals < 1) rd.invalid("num_arrivals", "must be >= 1");
    if (cfg.step_cap < 1) rd.invalid("step_cap", "must be >= 1");

    try {
        if (cfg.mode != Mode::Attack && cfg.mode != Mode::SweepAttack) {
            SystemParams probe = p;
            if (cfg.mode == Mode::SweepRho || (cfg.mode == Mode::SweepConfirmations && !cfg.rho_values.empty()))
                probe.lambda_a = 0.0;
            validate(probe);
        }
        des::SimConfig sc;
        sc.warmup_fraction = cfg.warmup_fraction;
        sc.params = SystemParams{};
        des::validate(sc);
        if (cfg.mode == Mode::Attack) validate(AttackParams{cfg.beta, p.n_conf, cfg.n_g_values.front()});
    } catch (const InvalidParam& e) {
        throw ConfigError(ConfigErrorKind::InvalidValue, e.name(), e.what());
    }
    return cfg;
}

/// Grid points of a sweep axis; integer axes are rounded and deduplicated.
inline std::vector<double> axis_points(const SweepAxis& ax, bool integral = false) {
    std::vector<double> pts;
    for (int n = 0; n < ax.points; ++n) {
        const double t = static_cast<double>(n) / (ax.points - 1);
        double v = ax.scale == Scale::Linear ? ax.start + (ax.stop - ax.start) * t
                                             : ax.start * std::pow(ax.stop / ax.start, t);
        if (n == ax.points - 1) v = ax.stop;
        if (integral) v = std::round(v);
        if (integral && !pts.empty() && pts.back() == v) continue;
        pts.push_back(v);
    }
    return pts;
}

/// Arrival rate giving traffic intensity `rho` under the configured definition.
inline double arrival_rate_for(double rho, const SystemParams& p, RhoDefinition def) {
    return def == RhoDefinition::Block ? rho * p.lambda_b : rho * p.s * p.lambda_c;
}

// ---- tabular output --------------------------------------------------------

using Cell = std::variant<std::monostate, double, long long, std::string>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

inline Cell number_or_empty(double v) { return std::isfinite(v) ? Cell{v} : Cell{}; }

inline std::string format_cell(const Cell& c) {
    struct Visitor {
        std::string operator()(std::monostate) const { return {}; }
        std::string operator()(double v) const { return fmt::format("{:.12g}", v); }
        std::string operator()(long long v) const { return std::to_string(v); }
        std::string operator()(const std::string& v) const { return v; }
    };
    return std::visit(Visitor{}, c);
}

inline void write_csv(std::ostream& os, const Table& t) {
    for (std::size_t c = 0; c < t.columns.size(); ++c) os << (c ? "," : "") << t.columns[c];
    os << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << format_cell(row[c]);
        os << '\n';
    }
}

inline void write_json(std::ostream& os, const Table& t) {
    nlohmann::ordered_json doc = nlohmann::ordered_json::object();
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
        auto col = nlohmann::ordered_json::array();
        for (const auto& row : t.rows) {
            const Cell& cell = row[c];
            if (std::holds_alternative<double>(cell))
                col.push_back(std::get<double>(cell));
            else if (std::holds_alternative<long long>(cell))
                col.push_back(std::get<long long>(cell));
            else if (std::holds_alternative<std::string>(cell))
                col.push_back(std::get<std::string>(cell));
            else
                col.push_back(nullptr);
        }
        doc[t.columns[c]] = std::move(col);
    }
    os << doc.dump(2) << '\n';
}

// ---- experiment runners ----------------------------------------------------

inline Cell threshold_cell(const std::optional<int>& ng) {
    return ng ? Cell{static_cast<long long>(*ng)} : Cell{std::string("inf")};
}

inline des::SimConfig sim_config(const ExperimentConfig& cfg, const SystemParams& p) {
    des::SimConfig sc;
    sc.params = p;
    sc.num_arrivals = cfg.num_arrivals;
    sc.warmup_fraction = cfg.warmup_fraction;
    sc.seed = cfg.seed;
    sc.rejection_order = cfg.rejection_order;
    return sc;
}

inline attack::RaceOptions race_options(const ExperimentConfig& cfg) {
    attack::RaceOptions opt;
    opt.counting = cfg.conf_counting;
    opt.step_cap = cfg.step_cap;
    return opt;
}

inline Table run_sweep_rho(const ExperimentConfig& cfg) {
    Table t{{"rho", "k", "analytic_upper", "analytic_lower", "sim_mean_latency", "sim_ci95"}, {}};
    const auto rhos = axis_points(cfg.sweep);
    struct Point {
        double rho;
        int k;
    };
    std::vector<Point> grid;
    for (double rho : rhos)
        for (int k : cfg.k_values) grid.push_back({rho, k});

    t.rows.resize(grid.size());
    parallel_for(grid.size(), [&](std::size_t n) {
        SystemParams p = cfg.params;
        p.k = grid[n].k;
        p.lambda_a = arrival_rate_for(grid[n].rho, p, cfg.rho_definition);
        Cell upper;
        try {
            upper = number_or_empty(latency_report(p).upper);
        } catch (const Unstable&) {
        }
        const des::SimStats st = des::run(sim_config(cfg, p)).stats;
        t.rows[n] = {grid[n].rho,
                     static_cast<long long>(p.k),
                     upper,
                     p.n_conf / p.lambda_b,
                     number_or_empty(st.mean_latency.mean),
                     number_or_empty(st.mean_latency.ci95)};
    });
    return t;
}

inline Table run_sweep_confirmations(const ExperimentConfig& cfg) {
    Table t{{"N", "rho", "analytic_tau_t", "sim_mean_latency", "sim_ci95"}, {}};
    const auto ns = axis_points(cfg.sweep, true);
    std::vector<std::optional<double>> rhos;
    for (double rho : cfg.rho_values) rhos.emplace_back(rho);
    if (rhos.empty()) rhos.emplace_back(std::nullopt);

    struct Point {
        int n;
        std::optional<double> rho;
    };
    std::vector<Point> grid;
    for (double n : ns)
        for (const auto& rho : rhos) grid.push_back({static_cast<int>(n), rho});

    t.rows.resize(grid.size());
    parallel_for(grid.size(), [&](std::size_t idx) {
        SystemParams p = cfg.params;
        p.n_conf = grid[idx].n;
        if (grid[idx].rho) p.lambda_a = arrival_rate_for(*grid[idx].rho, p, cfg.rho_definition);
        const double rho = grid[idx].rho ? *grid[idx].rho
                                         : (cfg.rho_definition == RhoDefinition::Block
                                                ? p.lambda_a / p.lambda_b
                                                : p.lambda_a / (p.s * p.lambda_c));
        Cell tau_t;
        try {
            tau_t = number_or_empty(latency_report(p).tau_t);
        } catch (const Unstable&) {
        }
        const des::SimStats st = des::run(sim_config(cfg, p)).stats;
        t.rows[idx] = {static_cast<long long>(p.n_conf), rho, tau_t, number_or_empty(st.mean_latency.mean),
                       number_or_empty(st.mean_latency.ci95)};
    });
    return t;
}

inline Table run_sweep_attack(const ExperimentConfig& cfg) {
    Table t{{"beta", "N", "Ng", "analytic_S", "mc_p_hat", "mc_stderr"}, {}};
    const auto betas = axis_points(cfg.sweep);
    const attack::RaceOptions opt = race_options(cfg);
    for (double beta : betas)
        for (int n : cfg.n_conf_values)
            for (const auto& ng : cfg.n_g_values) {
                const AttackParams ap{beta, n, ng};
                const attack::AttackEstimate est = attack::estimate(ap, cfg.trials, cfg.seed, opt);
                t.rows.push_back({beta, static_cast<long long>(n), threshold_cell(ng), attack_probability(ap),
                                  est.p_hat, est.std_error});
            }
    return t;
}

struct Outcome {
    int exit_code = 0;
    Table table;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitUnstable = 3;

/// Evaluates `cfg` and returns its table. Diagnostics go to `err`; an
/// analytic request outside the stability region yields exit code 3.
inline Outcome evaluate(const ExperimentConfig& cfg, std::ostream& err) {
    Outcome out;
    const SystemParams& p = cfg.params;
    switch (cfg.mode) {
        case Mode::Analytic: {
            LatencyReport rep;
            try {
                rep = latency_report(p);
            } catch (const Unstable& e) {
                err << e.what() << '\n';
                out.exit_code = kExitUnstable;
                return out;
            }
            out.table = {{"tau1", "tau2", "tau3", "tau_s", "tau_t", "upper", "lower"},
                         {{rep.tau1, rep.tau2, rep.tau3, rep.tau_s, rep.tau_t, rep.upper, rep.lower}}};
            break;
        }
        case Mode::SteadyState: {
            if (!validate(p).stability.batch) err << "warning: parameters are not batch-stable\n";
            const ctmc::Solution sol = ctmc::solve_adaptive(p);
            if (sol.metrics.truncation_warning)
                err << "warning: truncation boundary mass " << sol.metrics.boundary_mass << '\n';
            out.table = {{"i_max", "j_max", "mean_i", "mean_j", "little_latency", "effective_arrival_rate",
                          "boundary_mass"},
                         {{static_cast<long long>(sol.space.i_max()), static_cast<long long>(sol.space.j_max()),
                           sol.metrics.mean_i, sol.metrics.mean_j, sol.metrics.little_latency,
                           sol.metrics.effective_arrival_rate, sol.metrics.boundary_mass}}};
            break;
        }
        case Mode::Simulate: {
            if (!validate(p).stability.batch) err << "warning: parameters are not batch-stable\n";
            des::SimConfig sc = sim_config(cfg, p);
            sc.keep_records = !cfg.records.empty();
            const des::SimResult res = des::run(sc);
            const des::SimStats& st = res.stats;
            if (!st.reliable) err << "warning: fewer than 1000 serviced requests after warm-up\n";
            if (sc.keep_records) {
                std::ofstream rec(cfg.records, std::ios::binary);
                if (!rec) throw std::runtime_error("cannot open records file " + cfg.records);
                des::write_records_csv(rec, res.records);
            }
            const auto ll = [](std::uint64_t v) { return Cell{static_cast<long long>(v)}; };
            out.table = {{"arrived", "serviced", "rejected", "in_flight", "mean_latency", "ci95_latency",
                          "mean_sojourn", "ci95_sojourn", "block_inclusion", "confirmation", "service_wait",
                          "service_time"},
                         {{ll(st.counts.arrived), ll(st.counts.serviced), ll(st.counts.rejected),
                           ll(st.counts.in_flight), number_or_empty(st.mean_latency.mean),
                           number_or_empty(st.mean_latency.ci95), number_or_empty(st.mean_sojourn.mean),
                           number_or_empty(st.mean_sojourn.ci95), number_or_empty(st.phase_means.block_inclusion.mean),
                           number_or_empty(st.phase_means.confirmation.mean),
                           number_or_empty(st.phase_means.service_wait.mean),
                           number_or_empty(st.phase_means.service_time.mean)}}};
            break;
        }
        case Mode::Attack: {
            const AttackParams ap{cfg.beta, p.n_conf, cfg.n_g_values.front()};
            const attack::AttackEstimate est = attack::estimate(ap, cfg.trials, cfg.seed, race_options(cfg));
            if (est.capped > 0) err << "warning: " << est.capped << " races hit the step cap\n";
            out.table = {{"beta", "N", "Ng", "analytic_S", "mc_p_hat", "mc_stderr", "gave_up_fraction"},
                         {{ap.beta, static_cast<long long>(ap.n_conf), threshold_cell(ap.give_up),
                           attack_probability(ap), est.p_hat, est.std_error, est.gave_up_fraction}}};
            break;
        }
        case Mode::SweepRho: out.table = run_sweep_rho(cfg); break;
        case Mode::SweepConfirmations: out.table = run_sweep_confirmations(cfg); break;
        case Mode::SweepAttack: out.table = run_sweep_attack(cfg); break;
    }
    return out;
}

inline void write_table(std::ostream& os, const Table& t, Format f) {
    if (f == Format::Csv)
        write_csv(os, t);
    else
        write_json(os, t);
}

/// Runs the experiment and writes its table to cfg.output (stdout when
/// empty). Returns the process exit code.
inline int run_experiment(const ExperimentConfig& cfg, std::ostream& err = std::cerr) {
    Outcome out = evaluate(cfg, err);
    if (out.exit_code != kExitOk) return out.exit_code;
    if (cfg.output.empty()) {
        write_table(std::cout, out.table, cfg.format);
    } else {
        std::ofstream os(cfg.output, std::ios::binary);
        if (!os) {
            err << "cannot open output file " << cfg.output << '\n';
            return kExitConfig;
        }
        write_table(os, out.table, cfg.format);
    }
    return kExitOk;
}

}  // namespace bran::experiment
