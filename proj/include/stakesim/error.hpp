#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace stakesim
{

enum class Errc
{
    AmountNot32Eth,
    NotActive,
    AlreadyQueued,
    UnknownValidator,
    ActiveOutOfTableRange,
    MalformedRow,
    EmptyInput,
    ZeroAmount,
    InsufficientShares,
    StaleReport,
    NoOperators,
    DuplicateId,
    UnknownId,
    AlreadyRestaked,
    OperatorFrozen,
    DecentralizationConstraint,
    NotOptedIn,
    EmptyDistribution,
    InvalidArgument,
    ConfigError,
};

std::string_view errc_name(Errc code) noexcept;

// Every failure in the library surfaces as this exception. `location` is a
// row index for CSV ingestion and a 1-based line number for config errors.
class Error : public std::runtime_error
{
public:
    Error(Errc code, std::string const &message,
          std::optional<std::size_t> location = std::nullopt);

    Errc code() const noexcept { return code_; }
    std::optional<std::size_t> location() const noexcept { return location_; }

private:
    Errc code_;
    std::optional<std::size_t> location_;
};

} // namespace stakesim
