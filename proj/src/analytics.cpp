#include <stakesim/analytics.hpp>
#include <stakesim/error.hpp>

#include <fmt/core.h>

#include <algorithm>
#include <map>

namespace stakesim
{

StakeDistribution make_distribution(std::vector<std::pair<EntityId, Gwei>> stakes)
{
    std::map<EntityId, Gwei> merged;
    for (auto &[entity, stake] : stakes) {
        if (stake > 0) {
            merged[std::move(entity)] += stake;
        }
    }
    StakeDistribution dist;
    for (auto &[entity, stake] : merged) {
        dist.entries.push_back(StakeEntry{.entity = entity, .stake = stake});
        dist.total += stake;
    }
    std::sort(dist.entries.begin(), dist.entries.end(),
              [](StakeEntry const &a, StakeEntry const &b) {
                  if (a.stake != b.stake) {
                      return a.stake > b.stake;
                  }
                  return a.entity < b.entity;
              });
    for (auto &e : dist.entries) {
        e.fraction = static_cast<double>(static_cast<long double>(e.stake) /
                                         static_cast<long double>(dist.total));
    }
    return dist;
}

StakeDistribution stake_distribution(Chain const &chain, LiquidPool const *pool,
                                     RestakeLayer const *restake,
                                     AttributionOptions options)
{
    std::map<EntityId, Gwei> by_entity;
    Gwei pool_stake = 0;
    for (auto const &v : chain.validators()) {
        if (v.status != ValidatorStatus::Active) {
            continue;
        }
        EntityId const *owner = &v.entity;
        if (restake != nullptr && options.restake == RestakeAttribution::Operator &&
            v.withdrawal_target == WithdrawalTarget::RestakeLayer) {
            if (auto const *op = restake->operator_of(v.id)) {
                owner = op;
            }
        }
        if (pool != nullptr && options.pool == PoolAttribution::LookThrough &&
            *owner == pool->params().pool_entity) {
            pool_stake += kDepositSize;
            continue;
        }
        by_entity[*owner] += kDepositSize;
    }

    if (pool_stake > 0) {
        Gwei spread = 0;
        Shares const total_shares = pool->total_shares();
        if (total_shares > 0) {
            for (auto const &[holder, shares] : pool->accounts()) {
                auto const part = static_cast<Gwei>(
                    static_cast<unsigned __int128>(pool_stake) * shares / total_shares);
                by_entity[holder] += part;
                spread += part;
            }
        }
        by_entity[pool->params().pool_entity] += pool_stake - spread;
    }

    std::vector<std::pair<EntityId, Gwei>> flat(by_entity.begin(), by_entity.end());
    return make_distribution(std::move(flat));
}

namespace
{

void require_non_empty(StakeDistribution const &dist)
{
    if (dist.empty() || dist.total == 0) {
        throw Error(Errc::EmptyDistribution, "distribution has no stake");
    }
}

} // namespace

std::uint64_t nakamoto_coefficient(StakeDistribution const &dist, double threshold)
{
    require_non_empty(dist);
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw Error(Errc::InvalidArgument,
                    fmt::format("threshold {} outside (0, 1)", threshold));
    }
    // Compare integer stake sums against the threshold to avoid summing
    // rounded fractions.
    long double const bar = static_cast<long double>(threshold) *
                            static_cast<long double>(dist.total);
    Gwei cumulative = 0;
    std::uint64_t k = 0;
    for (auto const &e : dist.entries) {
        cumulative += e.stake;
        ++k;
        if (static_cast<long double>(cumulative) > bar) {
            return k;
        }
    }
    return k;
}

double hhi(StakeDistribution const &dist)
{
    require_non_empty(dist);
    long double sum = 0.0L;
    for (auto const &e : dist.entries) {
        long double const pct = 100.0L * static_cast<long double>(e.stake) /
                                static_cast<long double>(dist.total);
        sum += pct * pct;
    }
    return static_cast<double>(sum);
}

double gini(StakeDistribution const &dist)
{
    require_non_empty(dist);
    // G = 2 * sum_i(i * x_i) / (n * sum x) - (n + 1) / n, x ascending, i from 1.
    auto const n = static_cast<long double>(dist.entries.size());
    long double weighted = 0.0L;
    long double rank = n;
    for (auto const &e : dist.entries) {
        weighted += rank * static_cast<long double>(e.stake);
        rank -= 1.0L;
    }
    long double const g = 2.0L * weighted / (n * static_cast<long double>(dist.total)) -
                          (n + 1.0L) / n;
    return static_cast<double>(std::max(g, 0.0L));
}

CentralizationReport centralization_report(StakeDistribution const &dist,
                                           double threshold)
{
    return CentralizationReport{.nakamoto_coefficient = nakamoto_coefficient(dist, threshold),
                                .hhi = hhi(dist),
                                .gini = gini(dist)};
}

std::string to_csv_row(CentralizationReport const &r)
{
    return fmt::format("{},{:.6f},{:.6f}", r.nakamoto_coefficient, r.hhi, r.gini);
}

} // namespace stakesim
