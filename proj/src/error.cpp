#include <stakesim/error.hpp>

#include <fmt/core.h>

namespace stakesim
{

std::string_view errc_name(Errc code) noexcept
{
    switch (code) {
    case Errc::AmountNot32Eth: return "AmountNot32Eth";
    case Errc::NotActive: return "NotActive";
    case Errc::AlreadyQueued: return "AlreadyQueued";
    case Errc::UnknownValidator: return "UnknownValidator";
    case Errc::ActiveOutOfTableRange: return "ActiveOutOfTableRange";
    case Errc::MalformedRow: return "MalformedRow";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::ZeroAmount: return "ZeroAmount";
    case Errc::InsufficientShares: return "InsufficientShares";
    case Errc::StaleReport: return "StaleReport";
    case Errc::NoOperators: return "NoOperators";
    case Errc::DuplicateId: return "DuplicateId";
    case Errc::UnknownId: return "UnknownId";
    case Errc::AlreadyRestaked: return "AlreadyRestaked";
    case Errc::OperatorFrozen: return "OperatorFrozen";
    case Errc::DecentralizationConstraint: return "DecentralizationConstraint";
    case Errc::NotOptedIn: return "NotOptedIn";
    case Errc::EmptyDistribution: return "EmptyDistribution";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

namespace
{

std::string format_message(Errc code, std::string const &message,
                           std::optional<std::size_t> location)
{
    if (location) {
        return fmt::format("{} at {}: {}", errc_name(code), *location, message);
    }
    return fmt::format("{}: {}", errc_name(code), message);
}

} // namespace

Error::Error(Errc code, std::string const &message,
             std::optional<std::size_t> location)
    : std::runtime_error(format_message(code, message, location))
    , code_(code)
    , location_(location)
{
}

} // namespace stakesim
