#pragma once

#include <stakesim/sim_core.hpp>
#include <stakesim/types.hpp>

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace stakesim
{

struct PoolParams
{
    EntityId pool_entity = "liquid-pool";
    EntityId treasury = "pool-treasury";
    std::uint32_t operator_fee_bps = 500;
    std::uint32_t treasury_fee_bps = 500;
};

struct OperatorSlot
{
    EntityId operator_id;
    std::vector<ValidatorId> validator_ids;
    Gwei assigned_stake = 0;
};

struct OracleReport
{
    Epoch epoch = 0;
    Gwei beacon_balance = 0;
    std::uint64_t beacon_validator_count = 0;
};

struct RebaseSummary
{
    std::int64_t balance_delta = 0; // reward after netting deposits/withdrawals
    Gwei total_pooled_before = 0;
    Gwei total_pooled_after = 0;
    Gwei operator_fee = 0;
    Gwei treasury_fee = 0;
    Shares operator_shares = 0;
    Shares treasury_shares = 0;
};

struct WithdrawalTicket
{
    std::uint64_t id = 0;
    EntityId owner;
    Gwei claim = 0;
    bool finalized = false;
    bool claimed = false;
};

struct PoolEvent
{
    Epoch epoch = 0;
    std::string kind;
    EntityId entity;
    Gwei gwei = 0;
    Shares shares = 0;
};

inline constexpr char const *kPoolEventCsvHeader =
    "epoch,event_kind,entity,gwei,shares";

std::string to_csv_row(PoolEvent const &event);

// Share-ledger liquid staking pool. Balances rebase through
// balance_of = shares * total_pooled / total_shares; fees are paid by minting
// shares to operators and the treasury.
class LiquidPool
{
public:
    explicit LiquidPool(PoolParams params = {});

    PoolParams const &params() const noexcept { return params_; }

    // Tags subsequent event-log rows.
    void set_epoch(Epoch epoch) noexcept { epoch_ = epoch; }

    Shares submit(EntityId const &user, Gwei amount);
    Gwei balance_of(EntityId const &user) const;
    Shares shares_of(EntityId const &user) const;
    void transfer_shares(EntityId const &from, EntityId const &to, Shares shares);

    void add_operator(EntityId const &operator_id);

    // Launches 32 ETH validators from the unreserved buffer, each to the
    // operator with the least assigned stake (ties: lowest id).
    std::vector<ValidatorId> assign_stake_dvt(Chain &chain);

    OracleReport make_oracle_report(Chain const &chain) const;
    RebaseSummary handle_oracle_report(OracleReport const &report,
                                       OracleReport const &prev);
    std::optional<OracleReport> const &last_report() const noexcept
    {
        return last_report_;
    }

    // Burns shares into a fixed gwei claim. The buffer pays first; any
    // shortfall triggers exits of whole pool validators.
    WithdrawalTicket request_withdrawal(Chain &chain, EntityId const &user,
                                        Shares shares);

    // Collects balances of exited pool validators into the buffer and
    // finalizes queued tickets in order.
    void process_withdrawals(Chain &chain);

    // Pays out a finalized ticket and returns the amount.
    Gwei claim(std::uint64_t ticket_id);
    WithdrawalTicket const &ticket(std::uint64_t ticket_id) const;

    Gwei total_pooled_eth() const noexcept { return total_pooled_; }
    Shares total_shares() const noexcept { return total_shares_; }
    Gwei buffered_eth() const noexcept { return buffered_; }
    Gwei unfunded_claims() const noexcept { return unfunded_claims_; }
    std::map<EntityId, Shares> const &accounts() const noexcept
    {
        return accounts_;
    }
    std::vector<OperatorSlot> const &operators() const noexcept
    {
        return operators_;
    }
    std::set<ValidatorId> const &live_validators() const noexcept
    {
        return live_validators_;
    }
    std::vector<PoolEvent> const &events() const noexcept { return events_; }

private:
    Gwei value_of(Shares shares) const;
    void mint(EntityId const &to, Shares shares);
    void log(std::string kind, EntityId const &entity, Gwei gwei, Shares shares);
    void finalize_queued();
    void request_exits_for_shortfall(Chain &chain);

    PoolParams params_;
    Epoch epoch_ = 0;
    Gwei total_pooled_ = 0;
    Shares total_shares_ = 0;
    Gwei buffered_ = 0;
    std::map<EntityId, Shares> accounts_;
    std::vector<OperatorSlot> operators_;

    std::set<ValidatorId> live_validators_;
    std::set<ValidatorId> exiting_validators_;
    Gwei beacon_inflow_ = 0;  // deposited to the beacon chain since last report
    Gwei beacon_outflow_ = 0; // withdrawn from the beacon chain since last report
    std::optional<OracleReport> last_report_;

    std::vector<WithdrawalTicket> tickets_;
    std::deque<std::uint64_t> withdrawal_queue_;
    Gwei unfunded_claims_ = 0;

    std::vector<PoolEvent> events_;
};

} // namespace stakesim
