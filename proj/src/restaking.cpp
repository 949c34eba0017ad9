#include <stakesim/error.hpp>
#include <stakesim/restaking.hpp>

#include <fmt/core.h>

#include <cmath>

namespace stakesim
{

namespace
{

using u128 = unsigned __int128;

Gwei mul_div(Gwei a, std::uint64_t b, std::uint64_t c)
{
    return static_cast<Gwei>(u128{a} * b / c);
}

} // namespace

std::string to_csv_row(SlashingEvent const &e)
{
    return fmt::format("{},{},{},{}", e.avs_id, e.operator_id, e.epoch, e.slashed);
}

std::string to_csv_row(AvsSecurity const &row)
{
    return fmt::format("{},{},{},{},{},{}", row.avs_id, row.coc_fragmented,
                       row.coc_pooled, row.pfc, row.margin_pooled,
                       row.secure() ? 1 : 0);
}

RestakeLayer::RestakeLayer(std::uint64_t epochs_per_day)
    : epochs_per_day_(epochs_per_day)
{
    if (epochs_per_day_ == 0) {
        throw Error(Errc::InvalidArgument, "epochs_per_day must be >= 1");
    }
}

void RestakeLayer::register_operator(EntityId const &id, bool home)
{
    if (operators_.contains(id)) {
        throw Error(Errc::DuplicateId, fmt::format("operator {}", id));
    }
    operators_.emplace(id, RestakeOperator{.id = id, .home = home});
}

void RestakeLayer::register_avs(AvsModule module)
{
    if (!std::isfinite(module.slashing_fraction) ||
        module.slashing_fraction < 0.0 || module.slashing_fraction > 1.0) {
        throw Error(Errc::InvalidArgument,
                    fmt::format("AVS {} slashing_fraction {} outside [0, 1]",
                                module.id, module.slashing_fraction));
    }
    if (modules_.contains(module.id)) {
        throw Error(Errc::DuplicateId, fmt::format("AVS {}", module.id));
    }
    auto id = module.id;
    modules_.emplace(std::move(id), std::move(module));
}

RestakeOperator const &RestakeLayer::op(EntityId const &id) const
{
    auto const it = operators_.find(id);
    if (it == operators_.end()) {
        throw Error(Errc::UnknownId, fmt::format("operator {}", id));
    }
    return it->second;
}

RestakeOperator &RestakeLayer::mutable_op(EntityId const &id)
{
    return const_cast<RestakeOperator &>(op(id));
}

RestakeOperator &RestakeLayer::live_op(EntityId const &id)
{
    auto &o = mutable_op(id);
    if (o.frozen) {
        throw Error(Errc::OperatorFrozen, fmt::format("operator {}", id));
    }
    return o;
}

AvsModule const &RestakeLayer::avs(AvsId const &id) const
{
    auto const it = modules_.find(id);
    if (it == modules_.end()) {
        throw Error(Errc::UnknownId, fmt::format("AVS {}", id));
    }
    return it->second;
}

void RestakeLayer::restake_native(Chain &chain, ValidatorId validator,
                                  EntityId const &operator_id)
{
    auto &o = live_op(operator_id);
    auto const &v = chain.validator(validator);
    if (v.withdrawal_target == WithdrawalTarget::RestakeLayer) {
        throw Error(Errc::AlreadyRestaked,
                    fmt::format("validator {}", to_index(validator)));
    }
    if (v.status != ValidatorStatus::Active) {
        throw Error(Errc::NotActive,
                    fmt::format("validator {} is {}", to_index(validator),
                                status_name(v.status)));
    }
    chain.set_withdrawal_target(validator, WithdrawalTarget::RestakeLayer);
    o.restaked_validators.push_back(validator);
    validator_operator_[validator] = operator_id;
    validator_owner_[validator] = v.entity;
}

void RestakeLayer::delegate(EntityId const &staker, EntityId const &operator_id,
                            Gwei amount)
{
    auto &o = live_op(operator_id);
    if (amount == 0) {
        throw Error(Errc::ZeroAmount, "delegation of 0 gwei");
    }
    o.delegated[staker] += amount;
}

void RestakeLayer::opt_in(EntityId const &operator_id, AvsId const &avs_id)
{
    auto &o = live_op(operator_id);
    auto const &module = avs(avs_id);
    if (o.opted_avs.contains(avs_id)) {
        return;
    }
    if (module.home_validators_only && !o.home) {
        throw Error(Errc::DecentralizationConstraint,
                    fmt::format("AVS {} admits home operators only, {} is not one",
                                avs_id, operator_id));
    }
    o.opted_avs.insert(avs_id);
}

Gwei RestakeLayer::native_stake(ValidatorId validator) const
{
    auto const it = committed_slash_.find(validator);
    Gwei const slashed = it == committed_slash_.end() ? 0 : it->second;
    return slashed >= kDepositSize ? 0 : kDepositSize - slashed;
}

Gwei RestakeLayer::total_restake(EntityId const &operator_id) const
{
    auto const &o = op(operator_id);
    Gwei total = 0;
    for (auto const &[staker, amount] : o.delegated) {
        total += amount;
    }
    for (auto const v : o.restaked_validators) {
        total += native_stake(v);
    }
    return total;
}

EntityId const *RestakeLayer::operator_of(ValidatorId validator) const
{
    auto const it = validator_operator_.find(validator);
    return it == validator_operator_.end() ? nullptr : &it->second;
}

EntityId const &RestakeLayer::owner_of(ValidatorId validator) const
{
    auto const it = validator_owner_.find(validator);
    if (it == validator_owner_.end()) {
        throw Error(Errc::UnknownValidator,
                    fmt::format("validator {} is not restaked", to_index(validator)));
    }
    return it->second;
}

Gwei RestakeLayer::fee_balance(EntityId const &entity) const
{
    auto const it = fee_balances_.find(entity);
    return it == fee_balances_.end() ? 0 : it->second;
}

FeeAccrual RestakeLayer::accrue_fees(std::uint64_t epochs)
{
    if (epochs == 0) {
        throw Error(Errc::InvalidArgument, "accrue_fees needs epochs >= 1");
    }
    std::uint64_t const denominator =
        std::uint64_t{kBasisPoints} * epochs_per_day_ * kDaysPerYear;

    FeeAccrual out;
    for (auto const &[id, o] : operators_) {
        if (o.frozen || o.opted_avs.empty()) {
            continue;
        }
        Gwei const stake = total_restake(id);
        if (stake == 0) {
            continue;
        }
        Gwei fee = 0;
        for (auto const &avs_id : o.opted_avs) {
            auto const rate = u128{modules_.at(avs_id).fee_bps_per_year} * epochs;
            fee += static_cast<Gwei>(u128{stake} * rate / denominator);
        }
        if (fee == 0) {
            continue;
        }

        Gwei distributed = 0;
        auto credit = [&](EntityId const &who, Gwei part) {
            Gwei const share = mul_div(fee, part, stake);
            fee_balances_[who] += share;
            distributed += share;
        };
        for (auto const &[staker, amount] : o.delegated) {
            credit(staker, amount);
        }
        for (auto const v : o.restaked_validators) {
            credit(validator_owner_.at(v), native_stake(v));
        }
        Gwei const dust = fee - distributed;
        fee_balances_[id] += dust;
        out.per_operator[id] = fee;
        out.operator_dust[id] = dust;
    }
    return out;
}

SlashingEvent RestakeLayer::prove_misbehavior(Chain &chain, AvsId const &avs_id,
                                              EntityId const &operator_id,
                                              Epoch epoch)
{
    auto &o = mutable_op(operator_id);
    auto const &module = avs(avs_id);
    if (!o.opted_avs.contains(avs_id)) {
        throw Error(Errc::NotOptedIn,
                    fmt::format("operator {} is not opted into {}", operator_id,
                                avs_id));
    }
    o.frozen = true;

    Gwei const stake = total_restake(operator_id);
    SlashingEvent event{.avs_id = avs_id, .operator_id = operator_id, .epoch = epoch};
    if (stake > 0) {
        auto const target = static_cast<Gwei>(std::floor(
            static_cast<long double>(module.slashing_fraction) *
            static_cast<long double>(stake)));
        for (auto &[staker, amount] : o.delegated) {
            Gwei const cut = std::min(mul_div(target, amount, stake), amount);
            amount -= cut;
            event.slashed += cut;
        }
        // Native stake sits on the beacon chain; its slash lands when the
        // validator's exit completes.
        for (auto const v : o.restaked_validators) {
            Gwei const cut = mul_div(target, native_stake(v), stake);
            if (cut == 0 ||
                chain.validator(v).status == ValidatorStatus::Exited) {
                continue;
            }
            Gwei const recorded = chain.apply_slash(v, cut, SlashTiming::OnExit);
            committed_slash_[v] += recorded;
            event.slashed += recorded;
        }
    }
    slashing_events_.push_back(event);
    return event;
}

SecurityReport RestakeLayer::compute_security() const
{
    SecurityReport report;
    for (auto const &[avs_id, module] : modules_) {
        AvsSecurity row{.avs_id = avs_id,
                        .coc_fragmented = module.native_stake,
                        .pfc = module.profit_from_corruption};
        for (auto const &[id, o] : operators_) {
            if (!o.frozen && o.opted_avs.contains(avs_id)) {
                row.coc_pooled += total_restake(id);
            }
        }
        row.margin_pooled = static_cast<std::int64_t>(row.coc_pooled) -
                            static_cast<std::int64_t>(row.pfc);
        report.avs.push_back(row);
    }
    return report;
}

} // namespace stakesim
