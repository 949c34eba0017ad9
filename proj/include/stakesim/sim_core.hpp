#pragma once

#include <stakesim/types.hpp>

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace stakesim
{

struct ChainParams
{
    std::uint64_t min_churn = 4;
    std::uint64_t churn_quotient = 65'536;
    std::uint64_t epochs_per_day = 225;
    std::uint32_t apr_bps = 0;

    std::uint64_t epochs_per_year() const noexcept
    {
        return epochs_per_day * kDaysPerYear;
    }
};

// max(min_churn, floor(active / churn_quotient))
std::uint64_t churn_limit(std::uint64_t active, ChainParams const &params = {});

enum class ValidatorStatus : std::uint8_t
{
    PendingQueued,
    Active,
    ExitQueued,
    Exited,
    Frozen,
};

std::string_view status_name(ValidatorStatus status) noexcept;

enum class WithdrawalTarget : std::uint8_t
{
    Beacon,
    RestakeLayer,
};

struct ValidatorRecord
{
    ValidatorId id{};
    Gwei balance = 0;
    ValidatorStatus status = ValidatorStatus::PendingQueued;
    std::optional<Epoch> activation_epoch;
    std::optional<Epoch> exit_epoch;
    EntityId entity;
    WithdrawalTarget withdrawal_target = WithdrawalTarget::Beacon;
    // Numerator carried between epochs so that floor-divided rewards sum
    // exactly to the annual rate.
    std::uint64_t reward_dust = 0;
};

// Immediate slashes are realized at the next epoch step. OnExit slashes are
// realized when the validator leaves the exit queue.
enum class SlashTiming : std::uint8_t
{
    NextEpoch,
    OnExit,
};

struct PendingSlash
{
    ValidatorId id{};
    Gwei amount = 0;
    SlashTiming timing = SlashTiming::NextEpoch;
};

struct EpochReport
{
    Epoch epoch = 0;
    std::uint64_t active = 0;
    std::uint64_t activation_queue_len = 0;
    std::uint64_t exit_queue_len = 0;
    std::uint64_t activated = 0;
    std::uint64_t exited = 0;
    Gwei rewards = 0;
    Gwei slashed = 0;
    std::vector<ValidatorId> activated_ids;
    std::vector<ValidatorId> exited_ids;
};

inline constexpr char const *kEpochReportCsvHeader =
    "epoch,active,activation_queue_len,exit_queue_len,activated,exited,"
    "rewards_gwei,slashed_gwei";

std::string to_csv_row(EpochReport const &report);

// Epoch-stepped beacon-chain state machine. Validator ids are dense indices
// into the registry, assigned in deposit order.
class Chain
{
public:
    explicit Chain(ChainParams params = {});

    ChainParams const &params() const noexcept { return params_; }
    Epoch epoch() const noexcept { return epoch_; }

    // Appends a PendingQueued 32 ETH validator to the activation queue.
    ValidatorId submit_deposit(EntityId const &entity, Gwei amount);

    // Registers an already-active validator (scenario bootstrap only).
    ValidatorId add_genesis_validator(EntityId const &entity);

    void request_exit(ValidatorId id);

    // Records min(amount, unslashed balance) as pending and freezes the
    // validator. Frozen validators earn nothing and are forced through the
    // exit queue.
    Gwei apply_slash(ValidatorId id, Gwei amount,
                     SlashTiming timing = SlashTiming::NextEpoch);

    EpochReport process_epoch();

    // Moves the balance of an Exited validator out of the registry.
    Gwei withdraw(ValidatorId id);

    void set_withdrawal_target(ValidatorId id, WithdrawalTarget target);

    ValidatorRecord const &validator(ValidatorId id) const;
    bool contains(ValidatorId id) const noexcept;
    std::span<ValidatorRecord const> validators() const noexcept
    {
        return validators_;
    }
    std::deque<ValidatorId> const &activation_queue() const noexcept
    {
        return activation_queue_;
    }
    std::deque<ValidatorId> const &exit_queue() const noexcept
    {
        return exit_queue_;
    }
    std::vector<PendingSlash> const &pending_slashes() const noexcept
    {
        return pending_slashes_;
    }

    std::uint64_t active_count() const noexcept { return active_count_; }
    Gwei total_balance() const noexcept;
    Gwei pending_slash_total(ValidatorId id) const noexcept;

private:
    ValidatorRecord &mutable_validator(ValidatorId id);
    Gwei realize_slashes(ValidatorId id, SlashTiming timing);

    ChainParams params_;
    Epoch epoch_ = 0;
    std::vector<ValidatorRecord> validators_;
    std::deque<ValidatorId> activation_queue_;
    std::deque<ValidatorId> exit_queue_;
    std::vector<PendingSlash> pending_slashes_;
    std::uint64_t active_count_ = 0;
};

} // namespace stakesim
