#include <stakesim/error.hpp>
#include <stakesim/types.hpp>

#include <fmt/core.h>

#include <cctype>
#include <limits>

namespace stakesim
{

Gwei parse_eth(std::string const &text)
{
    auto fail = [&] {
        return Error(Errc::InvalidArgument,
                     fmt::format("'{}' is not a decimal ETH amount", text));
    };
    if (text.empty()) {
        throw fail();
    }
    auto const dot = text.find('.');
    std::string const whole = text.substr(0, dot);
    std::string frac = dot == std::string::npos ? "" : text.substr(dot + 1);
    if (whole.empty() && frac.empty()) {
        throw fail();
    }
    if (frac.size() > 9) {
        throw fail();
    }
    for (char const c : whole + frac) {
        if (!std::isdigit(static_cast<unsigned char>(c))) {
            throw fail();
        }
    }
    frac.resize(9, '0');

    Gwei whole_part = 0;
    for (char const c : whole) {
        auto const digit = static_cast<Gwei>(c - '0');
        if (whole_part > (std::numeric_limits<Gwei>::max() - digit) / 10) {
            throw fail();
        }
        whole_part = whole_part * 10 + digit;
    }
    if (whole_part > std::numeric_limits<Gwei>::max() / kGweiPerEth) {
        throw fail();
    }
    return whole_part * kGweiPerEth + std::stoull(frac);
}

std::string format_eth(Gwei amount)
{
    auto const whole = amount / kGweiPerEth;
    auto const frac = amount % kGweiPerEth;
    if (frac == 0) {
        return fmt::format("{}", whole);
    }
    std::string digits = fmt::format("{:09}", frac);
    while (digits.back() == '0') {
        digits.pop_back();
    }
    return fmt::format("{}.{}", whole, digits);
}

} // namespace stakesim
