#include <stakesim/error.hpp>
#include <stakesim/queue_estimator.hpp>

#include <fmt/core.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <istream>
#include <limits>
#include <string_view>

namespace stakesim
{

void ChurnTable::validate() const
{
    auto const n = scaling.size();
    if (n < 2 || epoch_churn.size() != n || day_churn.size() != n) {
        throw Error(Errc::InvalidArgument,
                    "churn table arrays must have equal length >= 2");
    }
    if (epochs_per_day == 0) {
        throw Error(Errc::InvalidArgument, "epochs_per_day must be >= 1");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0 && scaling[i] <= scaling[i - 1]) {
            throw Error(Errc::InvalidArgument,
                        "churn table scaling must be strictly increasing");
        }
        if (i > 0 && epoch_churn[i] < epoch_churn[i - 1]) {
            throw Error(Errc::InvalidArgument,
                        "churn table epoch churn must be non-decreasing");
        }
        if (epoch_churn[i] == 0 || day_churn[i] != epoch_churn[i] * epochs_per_day) {
            throw Error(Errc::InvalidArgument,
                        fmt::format("churn table tier {} has inconsistent churn", i));
        }
    }
}

std::size_t ChurnTable::tier_of(std::uint64_t active) const noexcept
{
    auto const it = std::upper_bound(scaling.begin(), scaling.end(), active);
    if (it == scaling.begin()) {
        return 0;
    }
    return static_cast<std::size_t>(it - scaling.begin()) - 1;
}

ChurnTable build_churn_table(std::uint64_t min_churn,
                             std::uint64_t churn_quotient,
                             std::uint64_t max_tiers,
                             std::uint64_t epochs_per_day)
{
    if (min_churn < 1 || churn_quotient < 1 || max_tiers < 2 ||
        epochs_per_day < 1) {
        throw Error(Errc::InvalidArgument,
                    "build_churn_table needs min_churn, churn_quotient, "
                    "epochs_per_day >= 1 and max_tiers >= 2");
    }
    ChurnTable table;
    table.epochs_per_day = epochs_per_day;
    for (std::uint64_t k = 0; k < max_tiers; ++k) {
        std::uint64_t const churn = min_churn + k;
        table.scaling.push_back(churn * churn_quotient);
        table.epoch_churn.push_back(churn);
        table.day_churn.push_back(churn * epochs_per_day);
    }
    return table;
}

std::string format_wait_text(std::uint64_t wait_secs)
{
    std::uint64_t const wait_days = wait_secs / kSecondsPerDay;
    if (wait_days > 0) {
        return fmt::format("{} day(s)", wait_days);
    }
    auto const minutes = static_cast<std::uint64_t>(
        std::llround(static_cast<double>(wait_secs % 3600) / 60.0));
    return fmt::format("{} hour(s), {} minute(s)", wait_secs / 3600, minutes);
}

namespace
{

void check_in_range(std::uint64_t active, ChurnTable const &table)
{
    if (active < table.scaling.front() || active >= table.scaling.back()) {
        throw Error(Errc::ActiveOutOfTableRange,
                    fmt::format("active={} outside [{}, {})", active,
                                table.scaling.front(), table.scaling.back()));
    }
}

void check_exit_queue(std::uint64_t active, std::uint64_t queue,
                      QueueDirection direction)
{
    if (direction == QueueDirection::Exit && queue > active) {
        throw Error(Errc::InvalidArgument,
                    fmt::format("exit queue {} exceeds active set {}", queue,
                                active));
    }
}

} // namespace

WaitEstimate estimate_wait(std::uint64_t active, std::uint64_t queue,
                           ChurnTable const &table, QueueDirection direction)
{
    table.validate();
    check_in_range(active, table);
    check_exit_queue(active, queue, direction);

    auto const last = table.scaling.size() - 1;
    std::size_t const start = table.tier_of(active);

    WaitEstimate out;
    out.curr_churn = table.epoch_churn[start];

    // Each step consumes the part of the queue that drains at tier j's churn:
    // from the current position to the tier boundary in the walk direction.
    double churn_factor = 0.0;
    std::uint64_t remain = queue;
    std::uint64_t position = active;
    std::size_t j = start;
    while (remain > 0) {
        std::uint64_t width = std::numeric_limits<std::uint64_t>::max();
        if (direction == QueueDirection::Entry && j < last) {
            width = table.scaling[j + 1] - position;
        }
        else if (direction == QueueDirection::Exit && j > 0) {
            width = position - table.scaling[j];
        }
        std::uint64_t const take = std::min(remain, width);
        out.churn_time_days += static_cast<double>(take) /
                               static_cast<double>(table.day_churn[j]);
        churn_factor += static_cast<double>(take) *
                        static_cast<double>(table.epoch_churn[j]);
        remain -= take;
        if (remain == 0) {
            break;
        }
        if (direction == QueueDirection::Entry) {
            position = table.scaling[j + 1];
            ++j;
        }
        else {
            position = table.scaling[j];
            --j;
        }
    }

    out.ave_churn =
        queue > 0
            ? std::round(churn_factor / static_cast<double>(queue) * 100.0) / 100.0
            : static_cast<double>(out.curr_churn);
    out.wait_secs = static_cast<std::uint64_t>(
        std::llround(out.churn_time_days * static_cast<double>(kSecondsPerDay)));
    out.wait_days = out.wait_secs / kSecondsPerDay;
    out.wait_text = format_wait_text(out.wait_secs);
    return out;
}

std::uint64_t simulate_queue(std::uint64_t active, std::uint64_t queue,
                             ChurnTable const &table, QueueDirection direction)
{
    table.validate();
    check_in_range(active, table);
    check_exit_queue(active, queue, direction);

    std::uint64_t epochs = 0;
    std::uint64_t remain = queue;
    while (remain > 0) {
        std::uint64_t const drained = std::min(table.churn_at(active), remain);
        remain -= drained;
        active = direction == QueueDirection::Entry ? active + drained
                                                    : active - drained;
        ++epochs;
    }
    return epochs;
}

namespace
{

std::vector<std::string_view> split_fields(std::string_view line)
{
    std::vector<std::string_view> fields;
    std::size_t begin = 0;
    while (true) {
        auto const comma = line.find(',', begin);
        fields.push_back(line.substr(begin, comma - begin));
        if (comma == std::string_view::npos) {
            break;
        }
        begin = comma + 1;
    }
    return fields;
}

bool valid_iso_date(std::string_view text)
{
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        return false;
    }
    auto number = [&](std::size_t pos, std::size_t len, unsigned &out) {
        auto const *first = text.data() + pos;
        auto const [ptr, ec] = std::from_chars(first, first + len, out);
        return ec == std::errc{} && ptr == first + len;
    };
    unsigned y = 0;
    unsigned m = 0;
    unsigned d = 0;
    if (!number(0, 4, y) || !number(5, 2, m) || !number(8, 2, d)) {
        return false;
    }
    std::chrono::year_month_day const ymd{
        std::chrono::year{static_cast<int>(y)}, std::chrono::month{m},
        std::chrono::day{d}};
    return ymd.ok();
}

template <typename T>
bool parse_number(std::string_view text, T &out)
{
    if (text.empty()) {
        return false;
    }
    auto const [ptr, ec] =
        std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc{} && ptr == text.data() + text.size();
}

HistoryRow parse_row(std::string_view line, std::size_t row)
{
    auto malformed = [row](std::string const &why) {
        return Error(Errc::MalformedRow, why, row);
    };
    auto const fields = split_fields(line);
    if (fields.size() != 5) {
        throw malformed(fmt::format("expected 5 fields, got {}", fields.size()));
    }
    HistoryRow out;
    if (!valid_iso_date(fields[0])) {
        throw malformed(fmt::format("bad date '{}'", fields[0]));
    }
    out.date = std::string(fields[0]);
    if (fields[1] == "entry") {
        out.kind = QueueDirection::Entry;
    }
    else if (fields[1] == "exit") {
        out.kind = QueueDirection::Exit;
    }
    else {
        throw malformed(fmt::format("bad kind '{}'", fields[1]));
    }
    if (!parse_number(fields[2], out.active)) {
        throw malformed(fmt::format("bad active '{}'", fields[2]));
    }
    if (!parse_number(fields[3], out.queue_len)) {
        throw malformed(fmt::format("bad queue_len '{}'", fields[3]));
    }
    if (!parse_number(fields[4], out.observed_wait_days) ||
        !std::isfinite(out.observed_wait_days) || out.observed_wait_days < 0.0) {
        throw malformed(fmt::format("bad observed_wait_days '{}'", fields[4]));
    }
    return out;
}

} // namespace

std::vector<HistoryRow> parse_history_csv(std::istream &in)
{
    std::vector<HistoryRow> rows;
    std::string line;
    std::size_t row = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (!saw_header) {
            if (line.starts_with("\xEF\xBB\xBF")) {
                line.erase(0, 3);
            }
            if (line != kHistoryCsvHeader) {
                throw Error(Errc::MalformedRow,
                            fmt::format("expected header '{}'", kHistoryCsvHeader),
                            0);
            }
            saw_header = true;
            ++row;
            continue;
        }
        if (line.empty()) {
            ++row;
            continue;
        }
        rows.push_back(parse_row(line, row));
        ++row;
    }
    if (!saw_header) {
        throw Error(Errc::MalformedRow, "empty input, missing header", 0);
    }
    if (rows.empty()) {
        throw Error(Errc::EmptyInput, "history file has no data rows");
    }
    return rows;
}

HistoryComparison compare_history(std::vector<HistoryRow> const &observations,
                                  ChurnTable const &table)
{
    if (observations.empty()) {
        throw Error(Errc::EmptyInput, "no observations to compare");
    }
    HistoryComparison out;
    double abs_sum = 0.0;
    for (std::size_t i = 0; i < observations.size(); ++i) {
        auto const &obs = observations[i];
        WaitEstimate estimate;
        try {
            estimate = estimate_wait(obs.active, obs.queue_len, table, obs.kind);
        }
        catch (Error const &e) {
            throw Error(e.code(), e.what(), i + 1);
        }
        double const residual = estimate.churn_time_days - obs.observed_wait_days;
        out.rows.push_back(HistoryResidual{.row = i + 1,
                                           .estimated_days = estimate.churn_time_days,
                                           .residual_days = residual});
        abs_sum += std::abs(residual);
        out.max_abs_residual = std::max(out.max_abs_residual, std::abs(residual));
    }
    out.mean_abs_residual = abs_sum / static_cast<double>(observations.size());
    return out;
}

} // namespace stakesim
