#include <stakesim/error.hpp>
#include <stakesim/sim_core.hpp>

#include <fmt/core.h>

#include <algorithm>
#include <numeric>
#include <utility>

namespace stakesim
{

std::uint64_t churn_limit(std::uint64_t active, ChainParams const &params)
{
    return std::max(params.min_churn, active / params.churn_quotient);
}

std::string_view status_name(ValidatorStatus status) noexcept
{
    switch (status) {
    case ValidatorStatus::PendingQueued: return "pending_queued";
    case ValidatorStatus::Active: return "active";
    case ValidatorStatus::ExitQueued: return "exit_queued";
    case ValidatorStatus::Exited: return "exited";
    case ValidatorStatus::Frozen: return "frozen";
    }
    return "unknown";
}

std::string to_csv_row(EpochReport const &r)
{
    return fmt::format("{},{},{},{},{},{},{},{}", r.epoch, r.active,
                       r.activation_queue_len, r.exit_queue_len, r.activated,
                       r.exited, r.rewards, r.slashed);
}

Chain::Chain(ChainParams params)
    : params_(params)
{
    if (params_.min_churn == 0 || params_.churn_quotient == 0 ||
        params_.epochs_per_day == 0) {
        throw Error(Errc::InvalidArgument,
                    "min_churn, churn_quotient and epochs_per_day must be >= 1");
    }
}

ValidatorId Chain::submit_deposit(EntityId const &entity, Gwei amount)
{
    if (amount != kDepositSize) {
        throw Error(Errc::AmountNot32Eth,
                    fmt::format("deposit of {} gwei", amount));
    }
    auto const id = static_cast<ValidatorId>(validators_.size());
    validators_.push_back(ValidatorRecord{.id = id,
                                          .balance = amount,
                                          .status = ValidatorStatus::PendingQueued,
                                          .entity = entity});
    activation_queue_.push_back(id);
    return id;
}

ValidatorId Chain::add_genesis_validator(EntityId const &entity)
{
    auto const id = static_cast<ValidatorId>(validators_.size());
    validators_.push_back(ValidatorRecord{.id = id,
                                          .balance = kDepositSize,
                                          .status = ValidatorStatus::Active,
                                          .activation_epoch = epoch_,
                                          .entity = entity});
    ++active_count_;
    return id;
}

bool Chain::contains(ValidatorId id) const noexcept
{
    return to_index(id) < validators_.size();
}

ValidatorRecord const &Chain::validator(ValidatorId id) const
{
    if (!contains(id)) {
        throw Error(Errc::UnknownValidator,
                    fmt::format("validator {}", to_index(id)));
    }
    return validators_[to_index(id)];
}

ValidatorRecord &Chain::mutable_validator(ValidatorId id)
{
    return const_cast<ValidatorRecord &>(validator(id));
}

void Chain::request_exit(ValidatorId id)
{
    auto &v = mutable_validator(id);
    if (std::find(exit_queue_.begin(), exit_queue_.end(), id) !=
        exit_queue_.end()) {
        throw Error(Errc::AlreadyQueued,
                    fmt::format("validator {}", to_index(id)));
    }
    if (v.status != ValidatorStatus::Active) {
        throw Error(Errc::NotActive,
                    fmt::format("validator {} is {}", to_index(id),
                                status_name(v.status)));
    }
    v.status = ValidatorStatus::ExitQueued;
    --active_count_;
    exit_queue_.push_back(id);
}

Gwei Chain::pending_slash_total(ValidatorId id) const noexcept
{
    Gwei total = 0;
    for (auto const &s : pending_slashes_) {
        if (s.id == id) {
            total += s.amount;
        }
    }
    return total;
}

Gwei Chain::apply_slash(ValidatorId id, Gwei amount, SlashTiming timing)
{
    auto &v = mutable_validator(id);
    switch (v.status) {
    case ValidatorStatus::Active:
        --active_count_;
        exit_queue_.push_back(id);
        break;
    case ValidatorStatus::ExitQueued:
    case ValidatorStatus::Frozen:
        break;
    default:
        throw Error(Errc::NotActive,
                    fmt::format("cannot slash validator {} while {}",
                                to_index(id), status_name(v.status)));
    }
    v.status = ValidatorStatus::Frozen;

    Gwei const available = v.balance - pending_slash_total(id);
    Gwei const clamped = std::min(amount, available);
    if (clamped > 0) {
        pending_slashes_.push_back(
            PendingSlash{.id = id, .amount = clamped, .timing = timing});
    }
    return clamped;
}

// Realizes pending slashes for `id`; with OnExit timing every pending slash
// for that validator is due.
Gwei Chain::realize_slashes(ValidatorId id, SlashTiming timing)
{
    auto &v = validators_[to_index(id)];
    Gwei realized = 0;
    std::erase_if(pending_slashes_, [&](PendingSlash const &s) {
        if (s.id != id ||
            (timing == SlashTiming::NextEpoch &&
             s.timing != SlashTiming::NextEpoch)) {
            return false;
        }
        Gwei const cut = std::min(s.amount, v.balance);
        v.balance -= cut;
        realized += cut;
        return true;
    });
    return realized;
}

EpochReport Chain::process_epoch()
{
    EpochReport report;
    report.epoch = epoch_;

    std::uint64_t const churn = churn_limit(active_count_, params_);

    for (std::uint64_t n = 0; n < churn && !activation_queue_.empty(); ++n) {
        auto const id = activation_queue_.front();
        activation_queue_.pop_front();
        auto &v = validators_[to_index(id)];
        v.status = ValidatorStatus::Active;
        v.activation_epoch = epoch_;
        ++active_count_;
        report.activated_ids.push_back(id);
    }

    for (std::uint64_t n = 0; n < churn && !exit_queue_.empty(); ++n) {
        auto const id = exit_queue_.front();
        exit_queue_.pop_front();
        report.slashed += realize_slashes(id, SlashTiming::OnExit);
        auto &v = validators_[to_index(id)];
        v.status = ValidatorStatus::Exited;
        v.exit_epoch = epoch_;
        report.exited_ids.push_back(id);
    }

    if (params_.apr_bps > 0) {
        std::uint64_t const denominator =
            std::uint64_t{kBasisPoints} * params_.epochs_per_year();
        for (auto &v : validators_) {
            if (v.status != ValidatorStatus::Active &&
                v.status != ValidatorStatus::ExitQueued) {
                continue;
            }
            // Rewards accrue on effective balance, capped at the deposit.
            Gwei const effective = std::min(v.balance, kDepositSize);
            v.reward_dust += effective * params_.apr_bps;
            Gwei const reward = v.reward_dust / denominator;
            v.reward_dust %= denominator;
            v.balance += reward;
            report.rewards += reward;
        }
    }

    // Collect ids first: realize_slashes edits the pending list.
    std::vector<ValidatorId> due;
    for (auto const &s : pending_slashes_) {
        if (s.timing == SlashTiming::NextEpoch &&
            std::find(due.begin(), due.end(), s.id) == due.end()) {
            due.push_back(s.id);
        }
    }
    for (auto const id : due) {
        report.slashed += realize_slashes(id, SlashTiming::NextEpoch);
    }

    report.activated = report.activated_ids.size();
    report.exited = report.exited_ids.size();
    report.active = active_count_;
    report.activation_queue_len = activation_queue_.size();
    report.exit_queue_len = exit_queue_.size();
    ++epoch_;
    return report;
}

Gwei Chain::withdraw(ValidatorId id)
{
    auto &v = mutable_validator(id);
    if (v.status != ValidatorStatus::Exited) {
        throw Error(Errc::NotActive,
                    fmt::format("validator {} has not exited", to_index(id)));
    }
    return std::exchange(v.balance, Gwei{0});
}

void Chain::set_withdrawal_target(ValidatorId id, WithdrawalTarget target)
{
    mutable_validator(id).withdrawal_target = target;
}

Gwei Chain::total_balance() const noexcept
{
    return std::accumulate(
        validators_.begin(), validators_.end(), Gwei{0},
        [](Gwei acc, ValidatorRecord const &v) { return acc + v.balance; });
}

} // namespace stakesim
