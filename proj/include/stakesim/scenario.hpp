#pragma once

#include <stakesim/liquid_pool.hpp>
#include <stakesim/restaking.hpp>
#include <stakesim/sim_core.hpp>
#include <stakesim/types.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace stakesim
{

namespace action
{

struct Deposit
{
    EntityId entity;
    std::uint64_t count = 1;
};
struct RequestExit
{
    EntityId entity;
    std::uint64_t count = 1;
};
struct Submit
{
    EntityId user;
    Gwei amount = 0;
};
struct Transfer
{
    EntityId from;
    EntityId to;
    std::optional<Shares> shares; // unset: all
};
struct Withdraw
{
    EntityId user;
    std::optional<Shares> shares; // unset: all
};
struct Delegate
{
    EntityId staker;
    EntityId op;
    Gwei amount = 0;
};
struct Restake
{
    EntityId entity;
    EntityId op;
    std::uint64_t count = 1;
};
struct OptIn
{
    EntityId op;
    AvsId avs;
};
struct ProveMisbehavior
{
    EntityId op;
    AvsId avs;
};
struct OracleReportNow
{
};

} // namespace action

using Action = std::variant<action::Deposit, action::RequestExit, action::Submit,
                            action::Transfer, action::Withdraw, action::Delegate,
                            action::Restake, action::OptIn,
                            action::ProveMisbehavior, action::OracleReportNow>;

struct TimelineEntry
{
    Epoch epoch = 0;
    std::size_t line = 0; // source line, for runtime error context
    Action action;
};

struct GenesisGroup
{
    EntityId entity;
    std::uint64_t count = 0;
};

struct PoolConfig
{
    PoolParams params;
    std::vector<EntityId> operators;
    std::uint64_t oracle_interval = 225; // epochs; 0 disables automatic reports
};

struct RestakeOperatorConfig
{
    EntityId id;
    bool home = false;
};

struct RestakeConfig
{
    std::vector<RestakeOperatorConfig> operators;
    std::vector<AvsModule> avs;
    std::uint64_t fee_interval = 225;
};

struct BackgroundConfig
{
    std::uint64_t entities = 0;
    std::uint64_t max_deposits_per_epoch = 0;
    std::uint64_t max_exits_per_epoch = 0;
};

struct ScenarioConfig
{
    std::uint64_t seed = 0;
    std::uint64_t epochs = 0;
    ChainParams chain;
    std::uint64_t initial_active = 0;
    std::vector<GenesisGroup> genesis;
    std::optional<PoolConfig> pool;
    std::optional<RestakeConfig> restaking;
    BackgroundConfig background;
    std::uint64_t metrics_interval = 1;
    double nakamoto_threshold = 0.5;
    std::vector<TimelineEntry> timeline; // sorted by epoch, stable
};

// Throws Error{ConfigError} with the 1-based source line.
ScenarioConfig parse_scenario(std::string const &text);
ScenarioConfig load_scenario(std::filesystem::path const &path);

inline constexpr char const *kEpochSeriesCsvHeader =
    "epoch,active,activation_queue_len,exit_queue_len,activated,exited,"
    "rewards_gwei,slashed_gwei,pool_total_pooled_gwei,pool_total_shares,"
    "pool_buffered_gwei,nakamoto,hhi,gini";

struct RunOutput
{
    std::string epochs_csv;
    std::string events_csv;
    std::string security_csv;
    std::string slashing_csv;
    std::string summary;
};

// Runs the scenario to completion. Runtime failures rethrow with the
// offending epoch and action in the message.
RunOutput run_scenario(ScenarioConfig const &config);

void write_run_output(RunOutput const &output, std::filesystem::path const &dir);

} // namespace stakesim
