#include <stakesim/analytics.hpp>
#include <stakesim/error.hpp>
#include <stakesim/scenario.hpp>

#include <fmt/core.h>

#include <fstream>
#include <random>

namespace stakesim
{

namespace
{

class ScenarioRunner
{
public:
    explicit ScenarioRunner(ScenarioConfig const &config)
        : config_(config)
        , chain_(config.chain)
        , rng_(config.seed)
    {
    }

    RunOutput run();

private:
    void setup();
    void background();
    void apply(TimelineEntry const &entry);
    void oracle_report();
    void log(std::string kind, EntityId const &entity, Gwei gwei, Shares shares = 0)
    {
        events_.push_back(PoolEvent{.epoch = epoch_,
                                    .kind = std::move(kind),
                                    .entity = entity,
                                    .gwei = gwei,
                                    .shares = shares});
    }
    void drain_pool_events();
    std::vector<ValidatorId> active_of(EntityId const &entity, std::uint64_t count,
                                       bool beacon_only) const;
    LiquidPool &pool();
    RestakeLayer &restake();

    ScenarioConfig const &config_;
    Chain chain_;
    std::optional<LiquidPool> pool_;
    std::optional<RestakeLayer> restake_;
    std::mt19937_64 rng_;
    Epoch epoch_ = 0;
    OracleReport prev_report_{};
    std::size_t pool_cursor_ = 0;
    std::vector<PoolEvent> events_;
};

LiquidPool &ScenarioRunner::pool()
{
    if (!pool_) {
        throw Error(Errc::InvalidArgument, "scenario has no pool");
    }
    return *pool_;
}

RestakeLayer &ScenarioRunner::restake()
{
    if (!restake_) {
        throw Error(Errc::InvalidArgument, "scenario has no restaking layer");
    }
    return *restake_;
}

void ScenarioRunner::setup()
{
    for (std::uint64_t i = 0; i < config_.initial_active; ++i) {
        chain_.add_genesis_validator("genesis");
    }
    for (auto const &g : config_.genesis) {
        for (std::uint64_t i = 0; i < g.count; ++i) {
            chain_.add_genesis_validator(g.entity);
        }
    }
    if (config_.pool) {
        pool_.emplace(config_.pool->params);
        for (auto const &op : config_.pool->operators) {
            pool_->add_operator(op);
        }
    }
    if (config_.restaking) {
        restake_.emplace(config_.chain.epochs_per_day);
        for (auto const &op : config_.restaking->operators) {
            restake_->register_operator(op.id, op.home);
        }
        for (auto const &m : config_.restaking->avs) {
            restake_->register_avs(m);
        }
    }
}

std::vector<ValidatorId> ScenarioRunner::active_of(EntityId const &entity,
                                                   std::uint64_t count,
                                                   bool beacon_only) const
{
    std::vector<ValidatorId> out;
    for (auto const &v : chain_.validators()) {
        if (out.size() == count) {
            break;
        }
        if (v.entity == entity && v.status == ValidatorStatus::Active &&
            (!beacon_only || v.withdrawal_target == WithdrawalTarget::Beacon)) {
            out.push_back(v.id);
        }
    }
    if (out.size() < count) {
        throw Error(Errc::NotActive,
                    fmt::format("{} has {} eligible active validators, {} needed",
                                entity, out.size(), count));
    }
    return out;
}

// Seeded deposits and exits from anonymous entities. Entity choice is skewed
// (index = floor(n * u^2)) so low-numbered entities accumulate more stake.
void ScenarioRunner::background()
{
    auto const &bg = config_.background;
    if (bg.max_deposits_per_epoch > 0) {
        auto const deposits = rng_() % (bg.max_deposits_per_epoch + 1);
        for (std::uint64_t i = 0; i < deposits; ++i) {
            double const u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
            auto const idx = static_cast<std::uint64_t>(
                static_cast<double>(bg.entities) * u * u);
            auto const entity = fmt::format("entity-{:03}", idx);
            chain_.submit_deposit(entity, kDepositSize);
            log("deposit", entity, kDepositSize);
        }
    }
    if (bg.max_exits_per_epoch > 0 && !chain_.validators().empty()) {
        auto const exits = rng_() % (bg.max_exits_per_epoch + 1);
        auto const size = chain_.validators().size();
        for (std::uint64_t i = 0; i < exits; ++i) {
            for (int attempt = 0; attempt < 16; ++attempt) {
                auto const &v = chain_.validators()[rng_() % size];
                if (v.status == ValidatorStatus::Active &&
                    v.withdrawal_target == WithdrawalTarget::Beacon &&
                    v.entity.starts_with("entity-")) {
                    chain_.request_exit(v.id);
                    log("exit_request", v.entity, v.balance);
                    break;
                }
            }
        }
    }
}

void ScenarioRunner::oracle_report()
{
    auto &p = pool();
    auto const report = p.make_oracle_report(chain_);
    p.handle_oracle_report(report, prev_report_);
    prev_report_ = report;
}

void ScenarioRunner::apply(TimelineEntry const &entry)
{
    std::visit(
        [&](auto const &a) {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, action::Deposit>) {
                for (std::uint64_t i = 0; i < a.count; ++i) {
                    chain_.submit_deposit(a.entity, kDepositSize);
                    log("deposit", a.entity, kDepositSize);
                }
            }
            else if constexpr (std::is_same_v<T, action::RequestExit>) {
                for (auto const id : active_of(a.entity, a.count, false)) {
                    chain_.request_exit(id);
                    log("exit_request", a.entity, chain_.validator(id).balance);
                }
            }
            else if constexpr (std::is_same_v<T, action::Submit>) {
                pool().submit(a.user, a.amount);
            }
            else if constexpr (std::is_same_v<T, action::Transfer>) {
                pool().transfer_shares(a.from, a.to,
                                       a.shares.value_or(pool().shares_of(a.from)));
            }
            else if constexpr (std::is_same_v<T, action::Withdraw>) {
                pool().request_withdrawal(chain_, a.user,
                                          a.shares.value_or(pool().shares_of(a.user)));
            }
            else if constexpr (std::is_same_v<T, action::Delegate>) {
                restake().delegate(a.staker, a.op, a.amount);
                log("delegate", a.staker, a.amount);
            }
            else if constexpr (std::is_same_v<T, action::Restake>) {
                for (auto const id : active_of(a.entity, a.count, true)) {
                    restake().restake_native(chain_, id, a.op);
                    log("restake", a.entity, kDepositSize);
                }
            }
            else if constexpr (std::is_same_v<T, action::OptIn>) {
                restake().opt_in(a.op, a.avs);
                log("opt_in", a.op, 0);
            }
            else if constexpr (std::is_same_v<T, action::ProveMisbehavior>) {
                auto const event = restake().prove_misbehavior(chain_, a.avs, a.op, epoch_);
                log("slash", a.op, event.slashed);
            }
            else if constexpr (std::is_same_v<T, action::OracleReportNow>) {
                oracle_report();
            }
        },
        entry.action);
}

void ScenarioRunner::drain_pool_events()
{
    if (!pool_) {
        return;
    }
    auto const &pool_events = pool_->events();
    for (; pool_cursor_ < pool_events.size(); ++pool_cursor_) {
        events_.push_back(pool_events[pool_cursor_]);
    }
}

std::string_view action_name(Action const &action)
{
    static constexpr std::string_view names[] = {
        "deposit", "request_exit", "submit", "transfer", "withdraw",
        "delegate", "restake", "opt_in", "prove_misbehavior", "oracle_report"};
    return names[action.index()];
}

RunOutput ScenarioRunner::run()
{
    setup();

    std::string epochs_csv = std::string(kEpochSeriesCsvHeader) + "\n";
    CentralizationReport metrics;
    auto next_action = config_.timeline.begin();

    for (epoch_ = 0; epoch_ < config_.epochs; ++epoch_) {
        if (pool_) {
            pool_->set_epoch(epoch_);
        }
        background();
        for (; next_action != config_.timeline.end() && next_action->epoch == epoch_;
             ++next_action) {
            try {
                apply(*next_action);
            }
            catch (Error const &e) {
                throw Error(e.code(),
                            fmt::format("epoch {}, action '{}' (line {}): {}", epoch_,
                                        action_name(next_action->action),
                                        next_action->line, e.what()));
            }
        }
        if (pool_ && !pool_->operators().empty()) {
            pool_->assign_stake_dvt(chain_);
        }

        auto const report = chain_.process_epoch();

        if (pool_) {
            pool_->process_withdrawals(chain_);
            auto const interval = config_.pool->oracle_interval;
            if (interval > 0 && (epoch_ + 1) % interval == 0) {
                oracle_report();
            }
        }
        if (restake_) {
            auto const interval = config_.restaking->fee_interval;
            if (interval > 0 && (epoch_ + 1) % interval == 0) {
                auto const fees = restake_->accrue_fees(interval);
                for (auto const &[op, fee] : fees.per_operator) {
                    log("avs_fee", op, fee);
                }
            }
        }
        drain_pool_events();

        if (epoch_ % config_.metrics_interval == 0) {
            auto const dist = stake_distribution(chain_, pool_ ? &*pool_ : nullptr,
                                                 restake_ ? &*restake_ : nullptr);
            metrics = dist.empty()
                          ? CentralizationReport{}
                          : centralization_report(dist, config_.nakamoto_threshold);
        }

        epochs_csv += fmt::format(
            "{},{},{},{},{}\n", to_csv_row(report),
            pool_ ? pool_->total_pooled_eth() : 0, pool_ ? pool_->total_shares() : 0,
            pool_ ? pool_->buffered_eth() : 0, to_csv_row(metrics));
    }

    RunOutput out;
    out.epochs_csv = std::move(epochs_csv);

    out.events_csv = std::string(kPoolEventCsvHeader) + "\n";
    for (auto const &e : events_) {
        out.events_csv += to_csv_row(e) + "\n";
    }

    out.security_csv = std::string(kSecurityReportCsvHeader) + "\n";
    out.slashing_csv = std::string(kSlashingEventCsvHeader) + "\n";
    std::size_t insecure = 0;
    std::size_t avs_count = 0;
    if (restake_) {
        for (auto const &row : restake_->compute_security().avs) {
            out.security_csv += to_csv_row(row) + "\n";
            ++avs_count;
            insecure += row.secure() ? 0 : 1;
        }
        for (auto const &e : restake_->slashing_events()) {
            out.slashing_csv += to_csv_row(e) + "\n";
        }
    }

    auto &s = out.summary;
    s += fmt::format("epochs simulated: {}\n", config_.epochs);
    s += fmt::format("active validators: {}\n", chain_.active_count());
    s += fmt::format("activation queue: {}\n", chain_.activation_queue().size());
    s += fmt::format("exit queue: {}\n", chain_.exit_queue().size());
    s += fmt::format("total validator balance (ETH): {}\n",
                     format_eth(chain_.total_balance()));
    if (pool_) {
        s += fmt::format("pool total pooled (ETH): {}\n",
                         format_eth(pool_->total_pooled_eth()));
        s += fmt::format("pool total shares: {}\n", pool_->total_shares());
        s += fmt::format("pool buffered (ETH): {}\n", format_eth(pool_->buffered_eth()));
    }
    s += fmt::format("nakamoto coefficient: {}\n", metrics.nakamoto_coefficient);
    s += fmt::format("hhi: {:.6f}\n", metrics.hhi);
    s += fmt::format("gini: {:.6f}\n", metrics.gini);
    if (restake_) {
        s += fmt::format("AVS modules: {} ({} insecure)\n", avs_count, insecure);
        s += fmt::format("slashing events: {}\n", restake_->slashing_events().size());
    }
    return out;
}

void write_file(std::filesystem::path const &path, std::string const &content)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(Errc::InvalidArgument,
                    fmt::format("cannot write '{}'", path.string()));
    }
    out << content;
}

} // namespace

RunOutput run_scenario(ScenarioConfig const &config)
{
    return ScenarioRunner(config).run();
}

void write_run_output(RunOutput const &output, std::filesystem::path const &dir)
{
    std::filesystem::create_directories(dir);
    write_file(dir / "epochs.csv", output.epochs_csv);
    write_file(dir / "events.csv", output.events_csv);
    write_file(dir / "security.csv", output.security_csv);
    write_file(dir / "slashing.csv", output.slashing_csv);
    write_file(dir / "summary.txt", output.summary);
}

} // namespace stakesim
