#pragma once

#include <stakesim/liquid_pool.hpp>
#include <stakesim/restaking.hpp>
#include <stakesim/sim_core.hpp>
#include <stakesim/types.hpp>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace stakesim
{

struct StakeEntry
{
    EntityId entity;
    Gwei stake = 0;
    double fraction = 0.0;
};

// Entries sorted by stake descending, then entity ascending.
struct StakeDistribution
{
    std::vector<StakeEntry> entries;
    Gwei total = 0;

    bool empty() const noexcept { return entries.empty(); }
};

// Merges duplicate entities, drops zero stakes, sorts and fills fractions.
StakeDistribution make_distribution(std::vector<std::pair<EntityId, Gwei>> stakes);

enum class PoolAttribution : std::uint8_t
{
    PoolEntity, // the pool is one entity
    LookThrough, // pool stake split across share holders
};

enum class RestakeAttribution : std::uint8_t
{
    Operator, // restaked validators count for the operator running them
    Owner,    // restaked validators count for the depositing entity
};

struct AttributionOptions
{
    PoolAttribution pool = PoolAttribution::PoolEntity;
    RestakeAttribution restake = RestakeAttribution::Operator;
};

// Attributes each Active validator's 32 ETH to its controlling entity.
StakeDistribution stake_distribution(Chain const &chain,
                                     LiquidPool const *pool = nullptr,
                                     RestakeLayer const *restake = nullptr,
                                     AttributionOptions options = {});

// Smallest k whose top-k stake is strictly above `threshold` of the total.
std::uint64_t nakamoto_coefficient(StakeDistribution const &dist,
                                   double threshold = 0.5);
double hhi(StakeDistribution const &dist);
double gini(StakeDistribution const &dist);

struct CentralizationReport
{
    std::uint64_t nakamoto_coefficient = 0;
    double hhi = 0.0;
    double gini = 0.0;
};

inline constexpr char const *kCentralizationCsvHeader = "nakamoto,hhi,gini";

CentralizationReport centralization_report(StakeDistribution const &dist,
                                           double threshold = 0.5);

// Empty distributions serialize as zeros.
std::string to_csv_row(CentralizationReport const &report);

} // namespace stakesim
