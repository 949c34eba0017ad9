#include <stakesim/error.hpp>
#include <stakesim/sim_core.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace stakesim;

namespace
{

Chain chain_with_active(std::uint64_t n, ChainParams params = {})
{
    Chain chain(params);
    for (std::uint64_t i = 0; i < n; ++i) {
        chain.add_genesis_validator("genesis");
    }
    return chain;
}

} // namespace

TEST(ChurnLimit, ClampsAndFloors)
{
    EXPECT_EQ(churn_limit(0), 4u);
    EXPECT_EQ(churn_limit(655'360), 10u);
    EXPECT_EQ(churn_limit(589'824), 9u);
    EXPECT_EQ(churn_limit(655'359), 9u);
    ChainParams custom{.min_churn = 2, .churn_quotient = 10};
    EXPECT_EQ(churn_limit(5, custom), 2u);
    EXPECT_EQ(churn_limit(57, custom), 5u);
}

TEST(SubmitDeposit, QueuesExactly32Eth)
{
    Chain chain;
    auto const id = chain.submit_deposit("alice", kDepositSize);
    EXPECT_EQ(chain.activation_queue().size(), 1u);
    EXPECT_EQ(chain.validator(id).status, ValidatorStatus::PendingQueued);
    EXPECT_FALSE(chain.validator(id).activation_epoch.has_value());

    try {
        chain.submit_deposit("alice", eth(31));
        FAIL() << "31 ETH deposit accepted";
    }
    catch (Error const &e) {
        EXPECT_EQ(e.code(), Errc::AmountNot32Eth);
    }
    EXPECT_THROW(chain.submit_deposit("alice", eth(33)), Error);
}

TEST(SubmitDeposit, PreservesSubmissionOrder)
{
    Chain chain;
    std::vector<ValidatorId> ids;
    for (int i = 0; i < 100; ++i) {
        ids.push_back(chain.submit_deposit("e" + std::to_string(i), kDepositSize));
    }
    ASSERT_EQ(chain.activation_queue().size(), 100u);
    EXPECT_TRUE(std::equal(ids.begin(), ids.end(), chain.activation_queue().begin()));
}

TEST(RequestExit, ActiveOnly)
{
    auto chain = chain_with_active(2);
    chain.request_exit(ValidatorId{0});
    EXPECT_EQ(chain.validator(ValidatorId{0}).status, ValidatorStatus::ExitQueued);
    EXPECT_EQ(chain.exit_queue().size(), 1u);
    EXPECT_EQ(chain.active_count(), 1u);

    try {
        chain.request_exit(ValidatorId{0});
        FAIL();
    }
    catch (Error const &e) {
        EXPECT_EQ(e.code(), Errc::AlreadyQueued);
    }

    auto const pending = chain.submit_deposit("bob", kDepositSize);
    try {
        chain.request_exit(pending);
        FAIL();
    }
    catch (Error const &e) {
        EXPECT_EQ(e.code(), Errc::NotActive);
    }
}

TEST(RequestExit, SameEpochExitsKeepOrder)
{
    auto chain = chain_with_active(3);
    chain.request_exit(ValidatorId{2});
    chain.request_exit(ValidatorId{0});
    ASSERT_EQ(chain.exit_queue().size(), 2u);
    EXPECT_EQ(chain.exit_queue()[0], ValidatorId{2});
    EXPECT_EQ(chain.exit_queue()[1], ValidatorId{0});
    auto const report = chain.process_epoch();
    ASSERT_EQ(report.exited_ids.size(), 2u);
    EXPECT_EQ(report.exited_ids[0], ValidatorId{2});
}

TEST(ProcessEpoch, DrainsAtChurnFromEpochStart)
{
    // churn_limit(650000) = 9; 25 queued drain 9, 9, 7.
    auto chain = chain_with_active(650'000);
    for (int i = 0; i < 25; ++i) {
        chain.submit_deposit("q", kDepositSize);
    }
    std::vector<std::uint64_t> left;
    for (int e = 0; e < 3; ++e) {
        auto const r = chain.process_epoch();
        EXPECT_LE(r.activated, 9u);
        left.push_back(r.activation_queue_len);
    }
    EXPECT_EQ(left, (std::vector<std::uint64_t>{16, 7, 0}));
    EXPECT_EQ(chain.active_count(), 650'025u);
}

TEST(ProcessEpoch, EmptyQueuesReportZero)
{
    auto chain = chain_with_active(10);
    auto const r = chain.process_epoch();
    EXPECT_EQ(r.epoch, 0u);
    EXPECT_EQ(r.activated, 0u);
    EXPECT_EQ(r.exited, 0u);
    EXPECT_EQ(r.rewards, 0u);
    EXPECT_EQ(chain.epoch(), 1u);
    EXPECT_EQ(to_csv_row(r), "0,10,0,0,0,0,0,0");
}

TEST(ProcessEpoch, ActivationAndExitChurnAreIndependent)
{
    auto chain = chain_with_active(8);
    for (int i = 0; i < 4; ++i) {
        chain.request_exit(ValidatorId{static_cast<std::uint64_t>(i)});
        chain.submit_deposit("new", kDepositSize);
    }
    auto const r = chain.process_epoch();
    EXPECT_EQ(r.activated, 4u);
    EXPECT_EQ(r.exited, 4u);
}

TEST(ApplySlash, PendingSlashRealizedNextEpoch)
{
    auto chain = chain_with_active(3);
    chain.apply_slash(ValidatorId{1}, eth(1));
    EXPECT_EQ(chain.validator(ValidatorId{1}).status, ValidatorStatus::Frozen);
    EXPECT_EQ(chain.validator(ValidatorId{1}).balance, kDepositSize);
    auto const r = chain.process_epoch();
    EXPECT_EQ(r.slashed, eth(1));
    EXPECT_EQ(chain.validator(ValidatorId{1}).balance, eth(31));
    EXPECT_EQ(chain.validator(ValidatorId{0}).balance, kDepositSize);
    EXPECT_EQ(chain.validator(ValidatorId{2}).balance, kDepositSize);
}

TEST(ApplySlash, FullSlashAndClamp)
{
    auto chain = chain_with_active(2);
    EXPECT_EQ(chain.apply_slash(ValidatorId{0}, eth(32)), eth(32));
    EXPECT_EQ(chain.apply_slash(ValidatorId{1}, eth(100)), eth(32));
    // A second slash on the same validator only reaches what is left.
    EXPECT_EQ(chain.apply_slash(ValidatorId{1}, eth(1)), 0u);
    chain.process_epoch();
    EXPECT_EQ(chain.validator(ValidatorId{0}).balance, 0u);
    EXPECT_EQ(chain.validator(ValidatorId{1}).balance, 0u);
}

TEST(ApplySlash, UnknownValidator)
{
    Chain chain;
    try {
        chain.apply_slash(ValidatorId{7}, 1);
        FAIL();
    }
    catch (Error const &e) {
        EXPECT_EQ(e.code(), Errc::UnknownValidator);
    }
}

TEST(ApplySlash, FrozenEarnsNothingAndIsForcedOut)
{
    auto chain = chain_with_active(5, ChainParams{.apr_bps = 10'000});
    chain.apply_slash(ValidatorId{0}, 0);
    auto const before = chain.validator(ValidatorId{0}).balance;
    for (int i = 0; i < 50; ++i) {
        chain.process_epoch();
    }
    auto const &frozen = chain.validator(ValidatorId{0});
    EXPECT_EQ(frozen.balance, before);
    EXPECT_EQ(frozen.status, ValidatorStatus::Exited);
    EXPECT_GT(chain.validator(ValidatorId{1}).balance, kDepositSize);
}

TEST(ApplySlash, OnExitTimingWaitsForExit)
{
    // 5 validators ahead in the exit queue with churn 4: the slashed one
    // leaves in the second epoch.
    auto chain = chain_with_active(10);
    for (std::uint64_t i = 0; i < 5; ++i) {
        chain.request_exit(ValidatorId{i});
    }
    chain.apply_slash(ValidatorId{9}, eth(32), SlashTiming::OnExit);
    auto r = chain.process_epoch();
    EXPECT_EQ(r.slashed, 0u);
    EXPECT_EQ(chain.validator(ValidatorId{9}).balance, kDepositSize);
    r = chain.process_epoch();
    EXPECT_EQ(r.slashed, kDepositSize);
    EXPECT_EQ(chain.validator(ValidatorId{9}).balance, 0u);
    EXPECT_EQ(chain.validator(ValidatorId{9}).status, ValidatorStatus::Exited);
}

TEST(Rewards, OneYearAtAprIsExact)
{
    ChainParams params{.apr_bps = 380};
    auto chain = chain_with_active(1, params);
    for (std::uint64_t e = 0; e < params.epochs_per_year(); ++e) {
        chain.process_epoch();
    }
    EXPECT_EQ(chain.validator(ValidatorId{0}).balance, 33'216'000'000u);
}

TEST(Withdraw, OnlyAfterExit)
{
    auto chain = chain_with_active(1);
    EXPECT_THROW(chain.withdraw(ValidatorId{0}), Error);
    chain.request_exit(ValidatorId{0});
    chain.process_epoch();
    EXPECT_EQ(chain.withdraw(ValidatorId{0}), kDepositSize);
    EXPECT_EQ(chain.validator(ValidatorId{0}).balance, 0u);
}

// Random operation sequences: conservation at zero APR, churn bound, FIFO,
// frozen never re-activates.
TEST(SimCoreProperties, RandomSequences)
{
    std::mt19937_64 rng(1234);
    for (int run = 0; run < 50; ++run) {
        ChainParams params{.min_churn = 1 + rng() % 4, .churn_quotient = 1 + rng() % 16};
        Chain chain(params);
        for (int i = 0; i < 20; ++i) {
            chain.add_genesis_validator("g");
        }
        for (int step = 0; step < 200; ++step) {
            auto const op = rng() % 4;
            auto const n = chain.validators().size();
            if (op == 0) {
                chain.submit_deposit("d", kDepositSize);
            }
            else if (op == 1 && n > 0) {
                auto const id = ValidatorId{rng() % n};
                if (chain.validator(id).status == ValidatorStatus::Active) {
                    chain.request_exit(id);
                }
            }
            else if (op == 2 && n > 0 && rng() % 8 == 0) {
                auto const id = ValidatorId{rng() % n};
                auto const s = chain.validator(id).status;
                if (s == ValidatorStatus::Active || s == ValidatorStatus::ExitQueued) {
                    chain.apply_slash(id, rng() % (2 * kDepositSize));
                }
            }
            bool const slashes = !chain.pending_slashes().empty();
            auto const before = chain.total_balance();
            auto const active_before = chain.active_count();
            std::vector<ValidatorStatus> statuses;
            for (auto const &v : chain.validators()) {
                statuses.push_back(v.status);
            }
            auto const r = chain.process_epoch();
            if (!slashes) {
                ASSERT_EQ(chain.total_balance(), before);
            }
            ASSERT_EQ(before - chain.total_balance(), r.slashed);
            ASSERT_LE(r.activated, churn_limit(active_before, params));
            ASSERT_LE(r.exited, churn_limit(active_before, params));
            for (std::size_t i = 0; i < statuses.size(); ++i) {
                if (statuses[i] == ValidatorStatus::Frozen) {
                    ASSERT_NE(chain.validators()[i].status, ValidatorStatus::Active);
                }
            }
        }
        // FIFO: deposit order implies activation order.
        std::optional<Epoch> last;
        for (auto const &v : chain.validators()) {
            if (v.entity == "d" && v.activation_epoch) {
                if (last) {
                    ASSERT_LE(*last, *v.activation_epoch);
                }
                last = v.activation_epoch;
            }
        }
        std::uint64_t active = 0;
        for (auto const &v : chain.validators()) {
            active += v.status == ValidatorStatus::Active ? 1 : 0;
        }
        ASSERT_EQ(active, chain.active_count());
    }
}
