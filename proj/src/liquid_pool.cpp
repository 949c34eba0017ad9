#include <stakesim/error.hpp>
#include <stakesim/liquid_pool.hpp>

#include <fmt/core.h>

#include <algorithm>
#include <numeric>

namespace stakesim
{

namespace
{

using u128 = unsigned __int128;

std::uint64_t mul_div(std::uint64_t a, std::uint64_t b, std::uint64_t c)
{
    return static_cast<std::uint64_t>(u128{a} * b / c);
}

} // namespace

std::string to_csv_row(PoolEvent const &e)
{
    return fmt::format("{},{},{},{},{}", e.epoch, e.kind, e.entity, e.gwei,
                       e.shares);
}

LiquidPool::LiquidPool(PoolParams params)
    : params_(std::move(params))
{
    if (params_.operator_fee_bps + params_.treasury_fee_bps > kBasisPoints) {
        throw Error(Errc::InvalidArgument, "pool fee bps sum exceeds 10000");
    }
}

void LiquidPool::log(std::string kind, EntityId const &entity, Gwei gwei,
                     Shares shares)
{
    events_.push_back(PoolEvent{.epoch = epoch_,
                                .kind = std::move(kind),
                                .entity = entity,
                                .gwei = gwei,
                                .shares = shares});
}

Gwei LiquidPool::value_of(Shares shares) const
{
    if (total_shares_ == 0) {
        return 0;
    }
    return mul_div(shares, total_pooled_, total_shares_);
}

void LiquidPool::mint(EntityId const &to, Shares shares)
{
    if (shares == 0) {
        return;
    }
    accounts_[to] += shares;
    total_shares_ += shares;
}

Shares LiquidPool::submit(EntityId const &user, Gwei amount)
{
    if (amount == 0) {
        throw Error(Errc::ZeroAmount, "submit of 0 gwei");
    }
    Shares minted = amount;
    if (total_shares_ > 0) {
        if (total_pooled_ == 0) {
            throw Error(Errc::InvalidArgument,
                        "pool has outstanding shares but no backing");
        }
        minted = mul_div(amount, total_shares_, total_pooled_);
        if (minted == 0) {
            throw Error(Errc::ZeroAmount,
                        fmt::format("{} gwei buys no shares", amount));
        }
    }
    mint(user, minted);
    total_pooled_ += amount;
    buffered_ += amount;
    log("submit", user, amount, minted);
    return minted;
}

Shares LiquidPool::shares_of(EntityId const &user) const
{
    auto const it = accounts_.find(user);
    return it == accounts_.end() ? 0 : it->second;
}

Gwei LiquidPool::balance_of(EntityId const &user) const
{
    return value_of(shares_of(user));
}

void LiquidPool::transfer_shares(EntityId const &from, EntityId const &to,
                                 Shares shares)
{
    if (shares == 0) {
        return;
    }
    auto const it = accounts_.find(from);
    if (it == accounts_.end() || it->second < shares) {
        throw Error(Errc::InsufficientShares,
                    fmt::format("{} holds {} shares, transfer of {}", from,
                                shares_of(from), shares));
    }
    it->second -= shares;
    if (it->second == 0) {
        accounts_.erase(it);
    }
    accounts_[to] += shares;
    log("transfer_out", from, value_of(shares), shares);
    log("transfer_in", to, value_of(shares), shares);
}

void LiquidPool::add_operator(EntityId const &operator_id)
{
    for (auto const &slot : operators_) {
        if (slot.operator_id == operator_id) {
            throw Error(Errc::DuplicateId,
                        fmt::format("pool operator {}", operator_id));
        }
    }
    operators_.push_back(OperatorSlot{.operator_id = operator_id});
}

std::vector<ValidatorId> LiquidPool::assign_stake_dvt(Chain &chain)
{
    if (operators_.empty()) {
        throw Error(Errc::NoOperators, "pool has no node operators");
    }
    std::vector<ValidatorId> launched;
    while (buffered_ >= unfunded_claims_ &&
           buffered_ - unfunded_claims_ >= kDepositSize) {
        auto const slot = std::min_element(
            operators_.begin(), operators_.end(),
            [](OperatorSlot const &a, OperatorSlot const &b) {
                if (a.assigned_stake != b.assigned_stake) {
                    return a.assigned_stake < b.assigned_stake;
                }
                return a.operator_id < b.operator_id;
            });
        auto const id = chain.submit_deposit(params_.pool_entity, kDepositSize);
        slot->validator_ids.push_back(id);
        slot->assigned_stake += kDepositSize;
        buffered_ -= kDepositSize;
        beacon_inflow_ += kDepositSize;
        live_validators_.insert(id);
        launched.push_back(id);
        log("launch", slot->operator_id, kDepositSize, 0);
    }
    return launched;
}

OracleReport LiquidPool::make_oracle_report(Chain const &chain) const
{
    OracleReport report{.epoch = chain.epoch()};
    for (auto const id : live_validators_) {
        report.beacon_balance += chain.validator(id).balance;
    }
    report.beacon_validator_count = live_validators_.size();
    return report;
}

RebaseSummary LiquidPool::handle_oracle_report(OracleReport const &report,
                                               OracleReport const &prev)
{
    if (report.epoch <= prev.epoch ||
        (last_report_ && report.epoch <= last_report_->epoch)) {
        throw Error(Errc::StaleReport,
                    fmt::format("report epoch {} does not advance", report.epoch));
    }

    // Deposits into and withdrawals out of the beacon chain move balance
    // without being reward.
    __int128 const delta = static_cast<__int128>(report.beacon_balance) -
                           static_cast<__int128>(prev.beacon_balance) -
                           static_cast<__int128>(beacon_inflow_) +
                           static_cast<__int128>(beacon_outflow_);
    beacon_inflow_ = 0;
    beacon_outflow_ = 0;
    last_report_ = report;

    RebaseSummary summary;
    summary.balance_delta = static_cast<std::int64_t>(delta);
    summary.total_pooled_before = total_pooled_;

    if (delta < 0) {
        auto const loss = static_cast<Gwei>(-delta);
        total_pooled_ -= std::min(loss, total_pooled_);
        summary.total_pooled_after = total_pooled_;
        log("rebase_down", params_.pool_entity, loss, 0);
        return summary;
    }

    auto const reward = static_cast<Gwei>(delta);
    total_pooled_ += reward;
    summary.total_pooled_after = total_pooled_;
    if (reward == 0) {
        return summary;
    }
    log("rebase", params_.pool_entity, reward, 0);

    std::uint32_t const fee_bps =
        params_.operator_fee_bps + params_.treasury_fee_bps;
    Gwei const fee = mul_div(reward, fee_bps, kBasisPoints);
    if (fee == 0 || total_shares_ == 0) {
        return summary;
    }

    // Minting s = F * S / (P - F) leaves the new shares worth exactly F.
    Shares const fee_shares = mul_div(fee, total_shares_, total_pooled_ - fee);
    Shares const treasury_shares =
        mul_div(fee_shares, params_.treasury_fee_bps, fee_bps);
    Shares operator_shares = fee_shares - treasury_shares;

    Gwei const assigned_total = std::accumulate(
        operators_.begin(), operators_.end(), Gwei{0},
        [](Gwei acc, OperatorSlot const &s) { return acc + s.assigned_stake; });
    std::vector<Shares> cut(operators_.size(), 0);
    Shares distributed = 0;
    for (std::size_t i = 0; i < operators_.size(); ++i) {
        cut[i] = assigned_total > 0
                     ? mul_div(operator_shares, operators_[i].assigned_stake,
                               assigned_total)
                     : operator_shares / operators_.size();
        distributed += cut[i];
    }
    // Rounding remainder (and the whole operator cut when there are no
    // operators) goes to the treasury.
    Shares const treasury_total = treasury_shares + (operator_shares - distributed);
    operator_shares = distributed;

    for (std::size_t i = 0; i < operators_.size(); ++i) {
        mint(operators_[i].operator_id, cut[i]);
    }
    mint(params_.treasury, treasury_total);

    summary.operator_shares = operator_shares;
    summary.treasury_shares = treasury_total;
    summary.operator_fee = value_of(operator_shares);
    summary.treasury_fee = value_of(treasury_total);
    for (std::size_t i = 0; i < operators_.size(); ++i) {
        if (cut[i] > 0) {
            log("fee_operator", operators_[i].operator_id, value_of(cut[i]), cut[i]);
        }
    }
    if (treasury_total > 0) {
        log("fee_treasury", params_.treasury, summary.treasury_fee, treasury_total);
    }
    return summary;
}

WithdrawalTicket LiquidPool::request_withdrawal(Chain &chain,
                                                EntityId const &user,
                                                Shares shares)
{
    if (shares == 0) {
        throw Error(Errc::ZeroAmount, "withdrawal of 0 shares");
    }
    auto const it = accounts_.find(user);
    if (it == accounts_.end() || it->second < shares) {
        throw Error(Errc::InsufficientShares,
                    fmt::format("{} holds {} shares, withdrawal of {}", user,
                                shares_of(user), shares));
    }
    Gwei const claim_amount = value_of(shares);
    it->second -= shares;
    if (it->second == 0) {
        accounts_.erase(it);
    }
    total_shares_ -= shares;
    total_pooled_ -= claim_amount;

    WithdrawalTicket ticket{.id = tickets_.size(),
                            .owner = user,
                            .claim = claim_amount};
    log("withdrawal_request", user, claim_amount, shares);
    if (withdrawal_queue_.empty() && buffered_ >= claim_amount) {
        buffered_ -= claim_amount;
        ticket.finalized = true;
        tickets_.push_back(ticket);
        log("withdrawal_finalized", user, claim_amount, 0);
        return ticket;
    }
    tickets_.push_back(ticket);
    withdrawal_queue_.push_back(ticket.id);
    unfunded_claims_ += claim_amount;
    request_exits_for_shortfall(chain);
    return ticket;
}

void LiquidPool::request_exits_for_shortfall(Chain &chain)
{
    Gwei const covered = buffered_ + exiting_validators_.size() * kDepositSize;
    Gwei shortfall = unfunded_claims_ > covered ? unfunded_claims_ - covered : 0;
    while (shortfall > 0) {
        // Drain from the most loaded operator, newest validator first.
        std::vector<OperatorSlot *> order;
        for (auto &slot : operators_) {
            order.push_back(&slot);
        }
        std::stable_sort(order.begin(), order.end(),
                         [](OperatorSlot const *a, OperatorSlot const *b) {
                             return a->assigned_stake > b->assigned_stake;
                         });
        bool requested = false;
        for (auto *slot : order) {
            auto &ids = slot->validator_ids;
            auto const pick = std::find_if(ids.rbegin(), ids.rend(), [&](ValidatorId id) {
                return chain.validator(id).status == ValidatorStatus::Active;
            });
            if (pick == ids.rend()) {
                continue;
            }
            ValidatorId const id = *pick;
            chain.request_exit(id);
            ids.erase(std::next(pick).base());
            slot->assigned_stake -= kDepositSize;
            exiting_validators_.insert(id);
            log("exit_request", slot->operator_id, kDepositSize, 0);
            shortfall -= std::min(shortfall, kDepositSize);
            requested = true;
            break;
        }
        if (!requested) {
            // Remaining claims wait for pending validators to activate.
            break;
        }
    }
}

void LiquidPool::finalize_queued()
{
    while (!withdrawal_queue_.empty()) {
        auto &ticket = tickets_[withdrawal_queue_.front()];
        if (buffered_ < ticket.claim) {
            break;
        }
        buffered_ -= ticket.claim;
        unfunded_claims_ -= ticket.claim;
        ticket.finalized = true;
        withdrawal_queue_.pop_front();
        log("withdrawal_finalized", ticket.owner, ticket.claim, 0);
    }
}

void LiquidPool::process_withdrawals(Chain &chain)
{
    for (auto it = live_validators_.begin(); it != live_validators_.end();) {
        ValidatorId const id = *it;
        if (chain.validator(id).status != ValidatorStatus::Exited) {
            ++it;
            continue;
        }
        Gwei const amount = chain.withdraw(id);
        buffered_ += amount;
        beacon_outflow_ += amount;
        exiting_validators_.erase(id);
        for (auto &slot : operators_) {
            if (std::erase(slot.validator_ids, id) > 0) {
                slot.assigned_stake -= kDepositSize;
            }
        }
        log("collect", params_.pool_entity, amount, 0);
        it = live_validators_.erase(it);
    }
    finalize_queued();
    request_exits_for_shortfall(chain);
}

WithdrawalTicket const &LiquidPool::ticket(std::uint64_t ticket_id) const
{
    if (ticket_id >= tickets_.size()) {
        throw Error(Errc::UnknownId, fmt::format("ticket {}", ticket_id));
    }
    return tickets_[ticket_id];
}

Gwei LiquidPool::claim(std::uint64_t ticket_id)
{
    auto &t = const_cast<WithdrawalTicket &>(ticket(ticket_id));
    if (!t.finalized || t.claimed) {
        throw Error(Errc::InvalidArgument,
                    fmt::format("ticket {} is not claimable", ticket_id));
    }
    t.claimed = true;
    log("claim", t.owner, t.claim, 0);
    return t.claim;
}

} // namespace stakesim
