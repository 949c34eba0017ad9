#include <stakesim/error.hpp>
#include <stakesim/restaking.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace stakesim;

namespace
{

Errc code_of(auto &&fn)
{
    try {
        fn();
    }
    catch (Error const &e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return Errc::InvalidArgument;
}

constexpr std::uint64_t kEpochsPerYear = 225 * 365;

} // namespace

TEST(Registry, DuplicateIds)
{
    RestakeLayer layer;
    layer.register_operator("op");
    EXPECT_EQ(code_of([&] { layer.register_operator("op"); }), Errc::DuplicateId);
    layer.register_avs(AvsModule{.id = "full", .slashing_fraction = 1.0});
    EXPECT_EQ(layer.avs("full").slashing_fraction, 1.0);
    EXPECT_EQ(code_of([&] { layer.register_avs(AvsModule{.id = "full"}); }),
              Errc::DuplicateId);
    EXPECT_EQ(code_of([&] {
                  layer.register_avs(AvsModule{.id = "bad", .slashing_fraction = 1.5});
              }),
              Errc::InvalidArgument);
}

TEST(RestakeNative, PointsWithdrawalCredentials)
{
    Chain chain;
    auto const v = chain.add_genesis_validator("alice");
    RestakeLayer layer;
    layer.register_operator("op");
    layer.restake_native(chain, v, "op");
    EXPECT_EQ(chain.validator(v).withdrawal_target, WithdrawalTarget::RestakeLayer);
    EXPECT_EQ(layer.total_restake("op"), kDepositSize);
    EXPECT_EQ(code_of([&] { layer.restake_native(chain, v, "op"); }),
              Errc::AlreadyRestaked);

    auto const pending = chain.submit_deposit("bob", kDepositSize);
    EXPECT_EQ(code_of([&] { layer.restake_native(chain, pending, "op"); }),
              Errc::NotActive);
}

TEST(RestakeNative, FrozenOperatorRejected)
{
    Chain chain;
    auto const v = chain.add_genesis_validator("alice");
    RestakeLayer layer;
    layer.register_operator("op");
    layer.register_avs(AvsModule{.id = "avs"});
    layer.opt_in("op", "avs");
    layer.prove_misbehavior(chain, "avs", "op", 0);
    EXPECT_EQ(code_of([&] { layer.restake_native(chain, v, "op"); }),
              Errc::OperatorFrozen);
}

TEST(Delegate, PerStakerPools)
{
    RestakeLayer layer;
    layer.register_operator("op-1");
    layer.register_operator("op-2");
    layer.delegate("alice", "op-1", eth(10));
    EXPECT_EQ(layer.total_restake("op-1"), eth(10));
    layer.delegate("bob", "op-1", eth(3));
    EXPECT_EQ(layer.op("op-1").delegated.at("alice"), eth(10));
    EXPECT_EQ(layer.op("op-1").delegated.at("bob"), eth(3));
    layer.delegate("alice", "op-2", eth(4));
    EXPECT_EQ(layer.total_restake("op-2"), eth(4));
    EXPECT_EQ(code_of([&] { layer.delegate("alice", "op-1", 0); }), Errc::ZeroAmount);
    EXPECT_EQ(code_of([&] { layer.delegate("alice", "ghost", 1); }), Errc::UnknownId);
}

TEST(OptIn, HomeOnlyAndIdempotence)
{
    RestakeLayer layer;
    layer.register_operator("home", true);
    layer.register_operator("institution");
    layer.register_avs(AvsModule{.id = "open"});
    layer.register_avs(AvsModule{.id = "home-only", .home_validators_only = true});
    layer.opt_in("institution", "open");
    layer.opt_in("institution", "open");
    EXPECT_EQ(layer.op("institution").opted_avs.size(), 1u);
    EXPECT_EQ(code_of([&] { layer.opt_in("institution", "home-only"); }),
              Errc::DecentralizationConstraint);
    layer.opt_in("home", "home-only");
    EXPECT_TRUE(layer.op("home").opted_avs.contains("home-only"));
}

TEST(AccrueFees, Formula)
{
    RestakeLayer layer;
    layer.register_operator("idle");
    layer.register_operator("busy");
    layer.register_avs(AvsModule{.id = "avs", .fee_bps_per_year = 100});
    layer.delegate("alice", "idle", eth(100));
    layer.delegate("alice", "busy", eth(60));
    layer.delegate("bob", "busy", eth(40));
    layer.opt_in("busy", "avs");
    auto const fees = layer.accrue_fees(kEpochsPerYear);
    EXPECT_FALSE(fees.per_operator.contains("idle"));
    EXPECT_EQ(fees.per_operator.at("busy"), eth(1));
    EXPECT_EQ(layer.fee_balance("alice"), 600'000'000u);
    EXPECT_EQ(layer.fee_balance("bob"), 400'000'000u);
    EXPECT_EQ(code_of([&] { layer.accrue_fees(0); }), Errc::InvalidArgument);
}

TEST(AccrueFees, FrozenOperatorEarnsNothing)
{
    Chain chain;
    RestakeLayer layer;
    layer.register_operator("op");
    layer.register_avs(AvsModule{.id = "avs", .fee_bps_per_year = 500});
    layer.delegate("alice", "op", eth(10));
    layer.opt_in("op", "avs");
    layer.prove_misbehavior(chain, "avs", "op", 0);
    auto const fees = layer.accrue_fees(kEpochsPerYear);
    EXPECT_TRUE(fees.per_operator.empty());
    EXPECT_EQ(layer.fee_balance("alice"), 0u);
}

TEST(AccrueFees, NativeRestakersShare)
{
    Chain chain;
    auto const v = chain.add_genesis_validator("solo");
    RestakeLayer layer;
    layer.register_operator("op");
    layer.register_avs(AvsModule{.id = "avs", .fee_bps_per_year = 1000});
    layer.restake_native(chain, v, "op");
    layer.delegate("dave", "op", eth(32));
    layer.opt_in("op", "avs");
    layer.accrue_fees(kEpochsPerYear);
    EXPECT_EQ(layer.fee_balance("solo"), eth(32) / 10);
    EXPECT_EQ(layer.fee_balance("dave"), eth(32) / 10);
}

TEST(ProveMisbehavior, FullNativeSlashLandsOnExit)
{
    Chain chain;
    auto const v = chain.add_genesis_validator("solo");
    RestakeLayer layer;
    layer.register_operator("op");
    layer.register_avs(AvsModule{.id = "avs", .slashing_fraction = 1.0});
    layer.restake_native(chain, v, "op");
    layer.opt_in("op", "avs");
    auto const event = layer.prove_misbehavior(chain, "avs", "op", 7);
    EXPECT_EQ(event.slashed, kDepositSize);
    EXPECT_EQ(event.epoch, 7u);
    EXPECT_TRUE(layer.op("op").frozen);
    EXPECT_EQ(chain.validator(v).balance, kDepositSize);
    EXPECT_EQ(chain.validator(v).status, ValidatorStatus::Frozen);
    chain.process_epoch();
    EXPECT_EQ(chain.validator(v).status, ValidatorStatus::Exited);
    EXPECT_EQ(chain.validator(v).balance, 0u);
}

TEST(ProveMisbehavior, DelegationsCutImmediately)
{
    Chain chain;
    RestakeLayer layer;
    layer.register_operator("op");
    layer.register_avs(AvsModule{.id = "half", .slashing_fraction = 0.5});
    layer.delegate("alice", "op", eth(10));
    layer.opt_in("op", "half");
    auto const event = layer.prove_misbehavior(chain, "half", "op", 0);
    EXPECT_EQ(event.slashed, eth(5));
    EXPECT_EQ(layer.op("op").delegated.at("alice"), eth(5));
    EXPECT_EQ(layer.total_restake("op"), eth(5));
}

TEST(ProveMisbehavior, SlashesComposeAndFreezeSticks)
{
    Chain chain;
    RestakeLayer layer;
    layer.register_operator("op");
    layer.register_avs(AvsModule{.id = "a", .slashing_fraction = 0.5});
    layer.register_avs(AvsModule{.id = "b", .slashing_fraction = 1.0});
    layer.delegate("alice", "op", eth(10));
    layer.opt_in("op", "a");
    layer.opt_in("op", "b");
    layer.prove_misbehavior(chain, "a", "op", 0);
    auto const second = layer.prove_misbehavior(chain, "b", "op", 1);
    EXPECT_EQ(second.slashed, eth(5));
    EXPECT_TRUE(layer.op("op").frozen);
    EXPECT_EQ(layer.total_restake("op"), 0u);
    EXPECT_EQ(layer.slashing_events().size(), 2u);
}

TEST(ProveMisbehavior, RequiresOptIn)
{
    Chain chain;
    RestakeLayer layer;
    layer.register_operator("op");
    layer.register_avs(AvsModule{.id = "avs"});
    EXPECT_EQ(code_of([&] { layer.prove_misbehavior(chain, "avs", "op", 0); }),
              Errc::NotOptedIn);
    EXPECT_FALSE(layer.op("op").frozen);
}

TEST(ComputeSecurity, PooledVersusFragmented)
{
    constexpr Gwei unit = eth(1'000);
    RestakeLayer layer;
    for (int i = 0; i < 13; ++i) {
        auto const id = std::to_string(i);
        layer.register_operator("op-" + id);
        layer.register_avs(AvsModule{.id = "avs-" + id, .native_stake = unit});
        layer.delegate("staker-" + id, "op-" + id, unit);
    }
    for (int i = 0; i < 13; ++i) {
        layer.opt_in("op-" + std::to_string(i), "avs-" + std::to_string(i));
    }
    for (auto const &row : layer.compute_security().avs) {
        EXPECT_EQ(row.coc_fragmented, unit);
        EXPECT_EQ(row.coc_pooled, unit);
    }
    for (int i = 0; i < 13; ++i) {
        for (int j = 0; j < 13; ++j) {
            layer.opt_in("op-" + std::to_string(i), "avs-" + std::to_string(j));
        }
    }
    auto const report = layer.compute_security();
    ASSERT_EQ(report.avs.size(), 13u);
    for (auto const &row : report.avs) {
        EXPECT_EQ(row.coc_fragmented, unit);
        EXPECT_EQ(row.coc_pooled, 13 * unit);
    }
}

TEST(ComputeSecurity, EmptyAndInsecure)
{
    RestakeLayer layer;
    layer.register_avs(AvsModule{.id = "lonely", .profit_from_corruption = eth(5)});
    layer.register_operator("op");
    layer.delegate("s", "op", eth(3));
    layer.register_avs(AvsModule{.id = "target", .profit_from_corruption = eth(5)});
    layer.opt_in("op", "target");
    auto const report = layer.compute_security();
    EXPECT_EQ(report.avs[0].coc_pooled, 0u);
    EXPECT_EQ(report.avs[1].margin_pooled, -static_cast<std::int64_t>(eth(2)));
    EXPECT_FALSE(report.avs[1].secure());
    EXPECT_EQ(to_csv_row(report.avs[1]), "target,0,3000000000,5000000000,-2000000000,0");
}

// Total restake stays equal to the sum of its parts under random
// interleavings, and pooled CoC dominates when one opted operator already
// covers the fragmented stake.
TEST(RestakingProperties, AccountingAndPooledDominance)
{
    std::mt19937_64 rng(2024);
    for (int run = 0; run < 50; ++run) {
        Chain chain;
        RestakeLayer layer;
        std::vector<EntityId> ops{"o0", "o1", "o2"};
        for (auto const &o : ops) {
            layer.register_operator(o, rng() % 2 == 0);
        }
        layer.register_avs(AvsModule{.id = "x", .slashing_fraction = (rng() % 101) / 100.0,
                                     .native_stake = eth(10)});
        for (int i = 0; i < 30; ++i) {
            chain.add_genesis_validator("e" + std::to_string(i % 4));
        }
        std::uint64_t next_validator = 0;
        for (int step = 0; step < 100; ++step) {
            auto const &o = ops[rng() % ops.size()];
            bool const frozen = layer.op(o).frozen;
            switch (rng() % 4) {
            case 0:
                if (!frozen) {
                    layer.delegate("s" + std::to_string(rng() % 3), o, 1 + rng() % eth(20));
                }
                break;
            case 1:
                if (!frozen && next_validator < 30) {
                    layer.restake_native(chain, ValidatorId{next_validator++}, o);
                }
                break;
            case 2:
                if (!frozen) {
                    layer.opt_in(o, "x");
                }
                break;
            case 3:
                if (layer.op(o).opted_avs.contains("x") && rng() % 5 == 0) {
                    Gwei const before = layer.total_restake(o);
                    auto const ev = layer.prove_misbehavior(chain, "x", o, step);
                    ASSERT_LE(ev.slashed, before);
                }
                break;
            }
            for (auto const &id : ops) {
                auto const &op = layer.op(id);
                Gwei parts = 0;
                for (auto const &[s, g] : op.delegated) {
                    parts += g;
                }
                for (auto const v : op.restaked_validators) {
                    parts += layer.native_stake(v);
                }
                ASSERT_EQ(parts, layer.total_restake(id));
            }
            auto const row = layer.compute_security().avs.front();
            for (auto const &id : ops) {
                auto const &op = layer.op(id);
                if (!op.frozen && op.opted_avs.contains("x") &&
                    layer.total_restake(id) >= row.coc_fragmented) {
                    ASSERT_GE(row.coc_pooled, row.coc_fragmented);
                }
            }
        }
    }
}
