#pragma once

#include <stakesim/types.hpp>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace stakesim
{

// Tier arrays for the wait-time estimate. Tier i spans
// [scaling[i], scaling[i + 1]); the final entry is open-ended upward, and
// exits walking below scaling[0] keep the lowest tier's churn.
struct ChurnTable
{
    std::vector<std::uint64_t> scaling;
    std::vector<std::uint64_t> epoch_churn;
    std::vector<std::uint64_t> day_churn;
    std::uint64_t epochs_per_day = 225;

    // Throws Error{InvalidArgument} when the table invariants do not hold.
    void validate() const;

    // Index of the tier containing `active`, clamped to the table ends.
    std::size_t tier_of(std::uint64_t active) const noexcept;
    std::uint64_t churn_at(std::uint64_t active) const noexcept
    {
        return epoch_churn[tier_of(active)];
    }
};

inline constexpr std::uint64_t kDefaultMaxTiers = 18;

// Tier k starts at (min_churn + k) * churn_quotient with churn min_churn + k,
// which reproduces max(min_churn, floor(active / churn_quotient)) on the
// table span.
ChurnTable build_churn_table(std::uint64_t min_churn = 4,
                             std::uint64_t churn_quotient = 65'536,
                             std::uint64_t max_tiers = kDefaultMaxTiers,
                             std::uint64_t epochs_per_day = 225);

enum class QueueDirection : std::uint8_t
{
    Entry,
    Exit,
};

struct WaitEstimate
{
    double churn_time_days = 0.0;
    std::uint64_t curr_churn = 0;
    double ave_churn = 0.0;
    std::uint64_t wait_secs = 0;
    std::uint64_t wait_days = 0;
    std::string wait_text;
};

// Tier-walk estimate of how long the last validator in a queue of `queue`
// waits, given `active` validators. Throws Error{ActiveOutOfTableRange} when
// active lies outside [scaling.front(), scaling.back()).
WaitEstimate estimate_wait(std::uint64_t active, std::uint64_t queue,
                           ChurnTable const &table,
                           QueueDirection direction = QueueDirection::Entry);

std::string format_wait_text(std::uint64_t wait_secs);

// Brute-force oracle: steps epochs draining min(churn, remaining) each
// epoch, growing (entry) or shrinking (exit) the active set as it goes.
std::uint64_t simulate_queue(std::uint64_t active, std::uint64_t queue,
                             ChurnTable const &table,
                             QueueDirection direction = QueueDirection::Entry);

struct HistoryRow
{
    std::string date;
    QueueDirection kind = QueueDirection::Entry;
    std::uint64_t active = 0;
    std::uint64_t queue_len = 0;
    double observed_wait_days = 0.0;
};

inline constexpr char const *kHistoryCsvHeader =
    "date,kind,active,queue_len,observed_wait_days";

// Parses the history CSV. Row 0 is the header; errors carry the row index.
std::vector<HistoryRow> parse_history_csv(std::istream &in);

struct HistoryResidual
{
    std::size_t row = 0; // 1-based data row, matching the CSV row index
    double estimated_days = 0.0;
    double residual_days = 0.0;
};

struct HistoryComparison
{
    std::vector<HistoryResidual> rows;
    double mean_abs_residual = 0.0;
    double max_abs_residual = 0.0;
};

HistoryComparison compare_history(std::vector<HistoryRow> const &observations,
                                  ChurnTable const &table);

} // namespace stakesim
