#include <stakesim/error.hpp>
#include <stakesim/types.hpp>

#include <gtest/gtest.h>

using namespace stakesim;

TEST(Types, ParseEthIsExact)
{
    EXPECT_EQ(parse_eth("32"), kDepositSize);
    EXPECT_EQ(parse_eth("0.05"), 50'000'000u);
    EXPECT_EQ(parse_eth("33.216"), 33'216'000'000u);
    EXPECT_EQ(parse_eth(".5"), 500'000'000u);
    EXPECT_EQ(parse_eth("0.000000001"), 1u);
}

TEST(Types, ParseEthRejectsGarbage)
{
    for (auto const *bad : {"", ".", "-1", "1e9", "0.0000000001", "abc", "1.2.3",
                            "99999999999999999999"}) {
        EXPECT_THROW(parse_eth(bad), Error) << bad;
    }
}

TEST(Types, FormatEthRoundTrips)
{
    for (Gwei g : {Gwei{0}, Gwei{1}, kDepositSize, Gwei{33'216'000'000},
                   Gwei{123'456'789'012}}) {
        EXPECT_EQ(parse_eth(format_eth(g)), g);
    }
    EXPECT_EQ(format_eth(33'216'000'000), "33.216");
}

TEST(Types, ErrorCarriesCodeAndLocation)
{
    Error const e(Errc::MalformedRow, "bad", 4);
    EXPECT_EQ(e.code(), Errc::MalformedRow);
    EXPECT_EQ(e.location(), 4u);
    EXPECT_STREQ(e.what(), "MalformedRow at 4: bad");
}
