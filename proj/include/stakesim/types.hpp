#pragma once

#include <compare>
#include <cstdint>
#include <string>

namespace stakesim
{

// All ETH amounts are integer gwei.
using Gwei = std::uint64_t;
using Shares = std::uint64_t;
using Epoch = std::uint64_t;
using EntityId = std::string;

inline constexpr Gwei kGweiPerEth = 1'000'000'000;
inline constexpr Gwei kDepositSize = 32 * kGweiPerEth;
inline constexpr std::uint64_t kSecondsPerDay = 86'400;
inline constexpr std::uint64_t kDaysPerYear = 365;
inline constexpr std::uint32_t kBasisPoints = 10'000;

enum class ValidatorId : std::uint64_t
{
};

constexpr std::uint64_t to_index(ValidatorId id) noexcept
{
    return static_cast<std::uint64_t>(id);
}

constexpr Gwei eth(std::uint64_t whole) noexcept
{
    return whole * kGweiPerEth;
}

// Parses a decimal ETH amount ("32", "0.05", "1.5e0" is rejected) into gwei
// without going through floating point. Throws Error{InvalidArgument}.
Gwei parse_eth(std::string const &text);

// Renders gwei as a decimal ETH string with trailing zeros trimmed.
std::string format_eth(Gwei amount);

} // namespace stakesim
