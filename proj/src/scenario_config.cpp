#include <stakesim/error.hpp>
#include <stakesim/scenario.hpp>

#include <fmt/core.h>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace stakesim
{

namespace
{

std::size_t line_of(YAML::Node const &node)
{
    return static_cast<std::size_t>(node.Mark().line) + 1;
}

[[noreturn]] void config_error(YAML::Node const &node, std::string const &what)
{
    throw Error(Errc::ConfigError, what, line_of(node));
}

void expect_map(YAML::Node const &node, std::string_view where,
                std::set<std::string> const &allowed)
{
    if (!node.IsMap()) {
        config_error(node, fmt::format("{} must be a mapping", where));
    }
    for (auto const &kv : node) {
        auto const key = kv.first.as<std::string>();
        if (!allowed.contains(key)) {
            config_error(kv.first, fmt::format("unknown key '{}' in {}", key, where));
        }
    }
}

std::string scalar(YAML::Node const &node, std::string_view key)
{
    if (!node.IsScalar()) {
        config_error(node, fmt::format("'{}' must be a scalar", key));
    }
    return node.Scalar();
}

std::uint64_t as_u64(YAML::Node const &node, std::string_view key)
{
    auto const text = scalar(node, key);
    std::uint64_t value = 0;
    auto const [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
        config_error(node, fmt::format("'{}' must be a non-negative integer, got '{}'",
                                       key, text));
    }
    return value;
}

double as_double(YAML::Node const &node, std::string_view key)
{
    auto const text = scalar(node, key);
    double value = 0.0;
    auto const [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size() ||
        !std::isfinite(value)) {
        config_error(node, fmt::format("'{}' must be a number, got '{}'", key, text));
    }
    return value;
}

bool as_bool(YAML::Node const &node, std::string_view key)
{
    auto const text = scalar(node, key);
    if (text == "true") {
        return true;
    }
    if (text == "false") {
        return false;
    }
    config_error(node, fmt::format("'{}' must be true or false, got '{}'", key, text));
}

Gwei as_eth(YAML::Node const &node, std::string_view key)
{
    auto const text = scalar(node, key);
    try {
        return parse_eth(text);
    }
    catch (Error const &) {
        config_error(node, fmt::format("'{}' must be a decimal ETH amount, got '{}'",
                                       key, text));
    }
}

std::string as_id(YAML::Node const &node, std::string_view key)
{
    auto text = scalar(node, key);
    if (text.empty() || text.find_first_of(",\r\n\"") != std::string::npos) {
        config_error(node, fmt::format("'{}' must be a non-empty id without commas,"
                                       " quotes or newlines",
                                       key));
    }
    return text;
}

YAML::Node required(YAML::Node const &parent, char const *key)
{
    auto node = parent[key];
    if (!node) {
        config_error(parent, fmt::format("missing required key '{}'", key));
    }
    return node;
}

template <typename F>
void optional_key(YAML::Node const &parent, char const *key, F &&apply)
{
    if (auto node = parent[key]) {
        apply(node);
    }
}

ChainParams parse_chain(YAML::Node const &node, ScenarioConfig &config)
{
    expect_map(node, "chain",
               {"min_churn", "churn_quotient", "epochs_per_day", "apr_bps",
                "initial_active", "genesis"});
    ChainParams params;
    optional_key(node, "min_churn", [&](auto const &n) {
        params.min_churn = as_u64(n, "min_churn");
        if (params.min_churn == 0) {
            config_error(n, "min_churn must be >= 1");
        }
    });
    optional_key(node, "churn_quotient", [&](auto const &n) {
        params.churn_quotient = as_u64(n, "churn_quotient");
        if (params.churn_quotient == 0) {
            config_error(n, "churn_quotient must be >= 1");
        }
    });
    optional_key(node, "epochs_per_day", [&](auto const &n) {
        params.epochs_per_day = as_u64(n, "epochs_per_day");
        if (params.epochs_per_day == 0) {
            config_error(n, "epochs_per_day must be >= 1");
        }
    });
    optional_key(node, "apr_bps", [&](auto const &n) {
        auto const bps = as_u64(n, "apr_bps");
        if (bps > kBasisPoints) {
            config_error(n, "apr_bps must be <= 10000");
        }
        params.apr_bps = static_cast<std::uint32_t>(bps);
    });
    optional_key(node, "initial_active", [&](auto const &n) {
        config.initial_active = as_u64(n, "initial_active");
    });
    optional_key(node, "genesis", [&](auto const &n) {
        if (!n.IsSequence()) {
            config_error(n, "genesis must be a list");
        }
        for (auto const &g : n) {
            expect_map(g, "genesis entry", {"entity", "count"});
            config.genesis.push_back(
                GenesisGroup{.entity = as_id(required(g, "entity"), "entity"),
                             .count = as_u64(required(g, "count"), "count")});
        }
    });
    return params;
}

std::uint32_t as_bps(YAML::Node const &node, std::string_view key)
{
    auto const bps = as_u64(node, key);
    if (bps > kBasisPoints) {
        config_error(node, fmt::format("'{}' must be <= 10000", key));
    }
    return static_cast<std::uint32_t>(bps);
}

PoolConfig parse_pool(YAML::Node const &node)
{
    expect_map(node, "pool",
               {"entity", "treasury", "operator_fee_bps", "treasury_fee_bps",
                "operators", "oracle_interval"});
    PoolConfig pool;
    optional_key(node, "entity", [&](auto const &n) {
        pool.params.pool_entity = as_id(n, "entity");
    });
    optional_key(node, "treasury", [&](auto const &n) {
        pool.params.treasury = as_id(n, "treasury");
    });
    optional_key(node, "operator_fee_bps", [&](auto const &n) {
        pool.params.operator_fee_bps = as_bps(n, "operator_fee_bps");
    });
    optional_key(node, "treasury_fee_bps", [&](auto const &n) {
        pool.params.treasury_fee_bps = as_bps(n, "treasury_fee_bps");
    });
    if (pool.params.operator_fee_bps + pool.params.treasury_fee_bps > kBasisPoints) {
        config_error(node, "pool fee bps sum exceeds 10000");
    }
    optional_key(node, "oracle_interval", [&](auto const &n) {
        pool.oracle_interval = as_u64(n, "oracle_interval");
    });
    optional_key(node, "operators", [&](auto const &n) {
        if (!n.IsSequence()) {
            config_error(n, "pool operators must be a list");
        }
        std::set<EntityId> seen;
        for (auto const &o : n) {
            auto id = as_id(o, "operator");
            if (!seen.insert(id).second) {
                config_error(o, fmt::format("duplicate pool operator '{}'", id));
            }
            pool.operators.push_back(std::move(id));
        }
    });
    return pool;
}

RestakeConfig parse_restaking(YAML::Node const &node)
{
    expect_map(node, "restaking", {"operators", "avs", "fee_interval"});
    RestakeConfig out;
    optional_key(node, "fee_interval", [&](auto const &n) {
        out.fee_interval = as_u64(n, "fee_interval");
    });
    std::set<std::string> seen;
    optional_key(node, "operators", [&](auto const &n) {
        if (!n.IsSequence()) {
            config_error(n, "restaking operators must be a list");
        }
        for (auto const &o : n) {
            expect_map(o, "restaking operator", {"id", "home"});
            RestakeOperatorConfig op{.id = as_id(required(o, "id"), "id")};
            optional_key(o, "home", [&](auto const &h) { op.home = as_bool(h, "home"); });
            if (!seen.insert("op:" + op.id).second) {
                config_error(o, fmt::format("duplicate operator '{}'", op.id));
            }
            out.operators.push_back(std::move(op));
        }
    });
    optional_key(node, "avs", [&](auto const &n) {
        if (!n.IsSequence()) {
            config_error(n, "avs must be a list");
        }
        for (auto const &a : n) {
            expect_map(a, "avs entry",
                       {"id", "fee_bps_per_year", "slashing_fraction", "pfc",
                        "native_stake", "home_only"});
            AvsModule m{.id = as_id(required(a, "id"), "id")};
            optional_key(a, "fee_bps_per_year", [&](auto const &v) {
                m.fee_bps_per_year = as_bps(v, "fee_bps_per_year");
            });
            optional_key(a, "slashing_fraction", [&](auto const &v) {
                m.slashing_fraction = as_double(v, "slashing_fraction");
                if (m.slashing_fraction < 0.0 || m.slashing_fraction > 1.0) {
                    config_error(v, "slashing_fraction must be within [0, 1]");
                }
            });
            optional_key(a, "pfc", [&](auto const &v) {
                m.profit_from_corruption = as_eth(v, "pfc");
            });
            optional_key(a, "native_stake", [&](auto const &v) {
                m.native_stake = as_eth(v, "native_stake");
            });
            optional_key(a, "home_only", [&](auto const &v) {
                m.home_validators_only = as_bool(v, "home_only");
            });
            if (!seen.insert("avs:" + m.id).second) {
                config_error(a, fmt::format("duplicate AVS '{}'", m.id));
            }
            out.avs.push_back(std::move(m));
        }
    });
    return out;
}

std::optional<Shares> optional_shares(YAML::Node const &node)
{
    auto const n = node["shares"];
    if (!n) {
        return std::nullopt;
    }
    if (n.IsScalar() && n.Scalar() == "all") {
        return std::nullopt;
    }
    return as_u64(n, "shares");
}

Action parse_action(YAML::Node const &node)
{
    if (!node.IsMap()) {
        config_error(node, "action must be a mapping");
    }
    auto const kind = as_id(required(node, "action"), "action");
    auto count_of = [&] {
        auto const n = node["count"];
        return n ? as_u64(n, "count") : std::uint64_t{1};
    };
    if (kind == "deposit") {
        expect_map(node, "deposit", {"action", "entity", "count"});
        return action::Deposit{as_id(required(node, "entity"), "entity"), count_of()};
    }
    if (kind == "request_exit") {
        expect_map(node, "request_exit", {"action", "entity", "count"});
        return action::RequestExit{as_id(required(node, "entity"), "entity"), count_of()};
    }
    if (kind == "submit") {
        expect_map(node, "submit", {"action", "user", "eth"});
        return action::Submit{as_id(required(node, "user"), "user"),
                              as_eth(required(node, "eth"), "eth")};
    }
    if (kind == "transfer") {
        expect_map(node, "transfer", {"action", "from", "to", "shares"});
        return action::Transfer{as_id(required(node, "from"), "from"),
                                as_id(required(node, "to"), "to"),
                                optional_shares(node)};
    }
    if (kind == "withdraw") {
        expect_map(node, "withdraw", {"action", "user", "shares"});
        return action::Withdraw{as_id(required(node, "user"), "user"),
                                optional_shares(node)};
    }
    if (kind == "delegate") {
        expect_map(node, "delegate", {"action", "staker", "operator", "eth"});
        return action::Delegate{as_id(required(node, "staker"), "staker"),
                                as_id(required(node, "operator"), "operator"),
                                as_eth(required(node, "eth"), "eth")};
    }
    if (kind == "restake") {
        expect_map(node, "restake", {"action", "entity", "operator", "count"});
        return action::Restake{as_id(required(node, "entity"), "entity"),
                               as_id(required(node, "operator"), "operator"),
                               count_of()};
    }
    if (kind == "opt_in") {
        expect_map(node, "opt_in", {"action", "operator", "avs"});
        return action::OptIn{as_id(required(node, "operator"), "operator"),
                             as_id(required(node, "avs"), "avs")};
    }
    if (kind == "prove_misbehavior") {
        expect_map(node, "prove_misbehavior", {"action", "operator", "avs"});
        return action::ProveMisbehavior{as_id(required(node, "operator"), "operator"),
                                        as_id(required(node, "avs"), "avs")};
    }
    if (kind == "oracle_report") {
        expect_map(node, "oracle_report", {"action"});
        return action::OracleReportNow{};
    }
    config_error(node, fmt::format("unknown action '{}'", kind));
}

// Every id an action names must be declared in the config.
void check_references(ScenarioConfig const &config, TimelineEntry const &entry,
                      YAML::Node const &node)
{
    auto has_op = [&](EntityId const &id) {
        return config.restaking &&
               std::any_of(config.restaking->operators.begin(),
                           config.restaking->operators.end(),
                           [&](auto const &o) { return o.id == id; });
    };
    auto has_avs = [&](AvsId const &id) {
        return config.restaking &&
               std::any_of(config.restaking->avs.begin(), config.restaking->avs.end(),
                           [&](auto const &a) { return a.id == id; });
    };
    auto need_op = [&](EntityId const &id) {
        if (!has_op(id)) {
            config_error(node, fmt::format("undeclared restaking operator '{}'", id));
        }
    };
    auto need_avs = [&](AvsId const &id) {
        if (!has_avs(id)) {
            config_error(node, fmt::format("undeclared AVS '{}'", id));
        }
    };
    auto need_pool = [&] {
        if (!config.pool) {
            config_error(node, "pool action without a pool section");
        }
    };
    std::visit(
        [&](auto const &a) {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, action::Submit> ||
                          std::is_same_v<T, action::Transfer> ||
                          std::is_same_v<T, action::Withdraw> ||
                          std::is_same_v<T, action::OracleReportNow>) {
                need_pool();
            }
            else if constexpr (std::is_same_v<T, action::Delegate> ||
                               std::is_same_v<T, action::Restake>) {
                need_op(a.op);
            }
            else if constexpr (std::is_same_v<T, action::OptIn> ||
                               std::is_same_v<T, action::ProveMisbehavior>) {
                need_op(a.op);
                need_avs(a.avs);
            }
        },
        entry.action);
}

} // namespace

ScenarioConfig parse_scenario(std::string const &text)
{
    YAML::Node root;
    try {
        root = YAML::Load(text);
    }
    catch (YAML::Exception const &e) {
        throw Error(Errc::ConfigError, e.msg,
                    static_cast<std::size_t>(e.mark.line) + 1);
    }
    if (!root || !root.IsMap()) {
        throw Error(Errc::ConfigError, "scenario must be a mapping", 1);
    }
    expect_map(root, "scenario",
               {"seed", "epochs", "chain", "pool", "restaking", "background",
                "metrics_interval", "nakamoto_threshold", "timeline"});

    ScenarioConfig config;
    config.seed = as_u64(required(root, "seed"), "seed");
    config.epochs = as_u64(required(root, "epochs"), "epochs");
    optional_key(root, "chain", [&](auto const &n) {
        config.chain = parse_chain(n, config);
    });
    optional_key(root, "pool", [&](auto const &n) { config.pool = parse_pool(n); });
    optional_key(root, "restaking", [&](auto const &n) {
        config.restaking = parse_restaking(n);
    });
    optional_key(root, "background", [&](auto const &n) {
        expect_map(n, "background",
                   {"entities", "max_deposits_per_epoch", "max_exits_per_epoch"});
        optional_key(n, "entities", [&](auto const &v) {
            config.background.entities = as_u64(v, "entities");
        });
        optional_key(n, "max_deposits_per_epoch", [&](auto const &v) {
            config.background.max_deposits_per_epoch = as_u64(v, "max_deposits_per_epoch");
        });
        optional_key(n, "max_exits_per_epoch", [&](auto const &v) {
            config.background.max_exits_per_epoch = as_u64(v, "max_exits_per_epoch");
        });
        if (config.background.max_deposits_per_epoch > 0 &&
            config.background.entities == 0) {
            config_error(n, "background deposits need entities >= 1");
        }
    });
    optional_key(root, "metrics_interval", [&](auto const &n) {
        config.metrics_interval = as_u64(n, "metrics_interval");
        if (config.metrics_interval == 0) {
            config_error(n, "metrics_interval must be >= 1");
        }
    });
    optional_key(root, "nakamoto_threshold", [&](auto const &n) {
        config.nakamoto_threshold = as_double(n, "nakamoto_threshold");
        if (!(config.nakamoto_threshold > 0.0 && config.nakamoto_threshold < 1.0)) {
            config_error(n, "nakamoto_threshold must be within (0, 1)");
        }
    });
    optional_key(root, "timeline", [&](auto const &n) {
        if (!n.IsSequence()) {
            config_error(n, "timeline must be a list");
        }
        for (auto const &step : n) {
            expect_map(step, "timeline entry", {"epoch", "actions"});
            auto const epoch_node = required(step, "epoch");
            Epoch const epoch = as_u64(epoch_node, "epoch");
            if (epoch >= config.epochs) {
                config_error(epoch_node,
                             fmt::format("timeline epoch {} outside run length {}",
                                         epoch, config.epochs));
            }
            auto const actions = required(step, "actions");
            if (!actions.IsSequence()) {
                config_error(actions, "actions must be a list");
            }
            for (auto const &a : actions) {
                TimelineEntry entry{.epoch = epoch, .line = line_of(a),
                                    .action = parse_action(a)};
                check_references(config, entry, a);
                config.timeline.push_back(std::move(entry));
            }
        }
    });
    std::stable_sort(config.timeline.begin(), config.timeline.end(),
                     [](auto const &a, auto const &b) { return a.epoch < b.epoch; });
    return config;
}

ScenarioConfig load_scenario(std::filesystem::path const &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(Errc::ConfigError,
                    fmt::format("cannot open scenario '{}'", path.string()), 0);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_scenario(buffer.str());
}

} // namespace stakesim
