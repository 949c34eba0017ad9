#pragma once

#include <stakesim/sim_core.hpp>
#include <stakesim/types.hpp>

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace stakesim
{

using AvsId = std::string;

struct RestakeOperator
{
    EntityId id;
    bool home = false;
    std::set<AvsId> opted_avs;
    std::map<EntityId, Gwei> delegated;
    std::vector<ValidatorId> restaked_validators;
    bool frozen = false;
};

struct AvsModule
{
    AvsId id;
    std::uint32_t fee_bps_per_year = 0;
    double slashing_fraction = 0.0;
    Gwei profit_from_corruption = 0;
    // Stake the service would hold on its own; the fragmented CoC.
    Gwei native_stake = 0;
    bool home_validators_only = false;
};

struct SlashingEvent
{
    AvsId avs_id;
    EntityId operator_id;
    Epoch epoch = 0;
    Gwei slashed = 0;
};

inline constexpr char const *kSlashingEventCsvHeader =
    "avs_id,operator_id,epoch,slashed_gwei";

struct AvsSecurity
{
    AvsId avs_id;
    Gwei coc_fragmented = 0;
    Gwei coc_pooled = 0;
    Gwei pfc = 0;
    std::int64_t margin_pooled = 0;

    bool secure() const noexcept { return margin_pooled >= 0; }
};

struct SecurityReport
{
    std::vector<AvsSecurity> avs;
};

inline constexpr char const *kSecurityReportCsvHeader =
    "avs_id,coc_fragmented_gwei,coc_pooled_gwei,pfc_gwei,margin_pooled_gwei,secure";

std::string to_csv_row(SlashingEvent const &event);
std::string to_csv_row(AvsSecurity const &row);

struct FeeAccrual
{
    std::map<EntityId, Gwei> per_operator;
    // Rounding remainder kept by each operator after pro-rata distribution.
    std::map<EntityId, Gwei> operator_dust;
};

// Restaking layer: operators, delegation pools, AVS registry and slashing.
// Operators and AVSs are kept in id order so iteration is deterministic.
class RestakeLayer
{
public:
    explicit RestakeLayer(std::uint64_t epochs_per_day = 225);

    void register_operator(EntityId const &id, bool home = false);
    void register_avs(AvsModule module);

    void restake_native(Chain &chain, ValidatorId validator,
                        EntityId const &operator_id);
    void delegate(EntityId const &staker, EntityId const &operator_id,
                  Gwei amount);
    void opt_in(EntityId const &operator_id, AvsId const &avs_id);

    FeeAccrual accrue_fees(std::uint64_t epochs);

    SlashingEvent prove_misbehavior(Chain &chain, AvsId const &avs_id,
                                    EntityId const &operator_id, Epoch epoch);

    SecurityReport compute_security() const;

    // Delegations plus each restaked validator's 32 ETH less slashes
    // committed against it.
    Gwei total_restake(EntityId const &operator_id) const;
    Gwei native_stake(ValidatorId validator) const;

    RestakeOperator const &op(EntityId const &id) const;
    AvsModule const &avs(AvsId const &id) const;
    std::map<EntityId, RestakeOperator> const &operators() const noexcept
    {
        return operators_;
    }
    std::map<AvsId, AvsModule> const &modules() const noexcept
    {
        return modules_;
    }
    // Fees credited per participant (delegator, validator owner, operator).
    std::map<EntityId, Gwei> const &fee_balances() const noexcept
    {
        return fee_balances_;
    }
    Gwei fee_balance(EntityId const &entity) const;
    std::vector<SlashingEvent> const &slashing_events() const noexcept
    {
        return slashing_events_;
    }
    // Operator a restaked validator is listed under, if any.
    EntityId const *operator_of(ValidatorId validator) const;
    EntityId const &owner_of(ValidatorId validator) const;

private:
    RestakeOperator &mutable_op(EntityId const &id);
    RestakeOperator &live_op(EntityId const &id);

    std::uint64_t epochs_per_day_;
    std::map<EntityId, RestakeOperator> operators_;
    std::map<AvsId, AvsModule> modules_;
    std::map<ValidatorId, EntityId> validator_operator_;
    std::map<ValidatorId, EntityId> validator_owner_;
    std::map<ValidatorId, Gwei> committed_slash_;
    std::map<EntityId, Gwei> fee_balances_;
    std::vector<SlashingEvent> slashing_events_;
};

} // namespace stakesim
