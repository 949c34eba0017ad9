#include <stakesim/cli.hpp>
#include <stakesim/error.hpp>
#include <stakesim/queue_estimator.hpp>
#include <stakesim/scenario.hpp>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <fmt/ostream.h>

#include <fstream>
#include <ostream>

namespace stakesim::cli
{

namespace
{

struct ChurnFlags
{
    std::uint64_t min_churn = 4;
    std::uint64_t churn_quotient = 65'536;
    std::uint64_t epochs_per_day = 225;
    std::uint64_t max_tiers = kDefaultMaxTiers;

    void add_to(CLI::App &cmd)
    {
        cmd.add_option("--min-churn", min_churn, "Minimum per-epoch churn")
            ->check(CLI::PositiveNumber);
        cmd.add_option("--churn-quotient", churn_quotient,
                       "Active validators per unit of churn")
            ->check(CLI::PositiveNumber);
        cmd.add_option("--epochs-per-day", epochs_per_day, "Epochs per day")
            ->check(CLI::PositiveNumber);
        cmd.add_option("--max-tiers", max_tiers, "Number of churn tiers")
            ->check(CLI::Range(std::uint64_t{2}, std::uint64_t{4096}));
    }

    ChurnTable table() const
    {
        return build_churn_table(min_churn, churn_quotient, max_tiers, epochs_per_day);
    }
};

QueueDirection parse_direction(std::string const &text)
{
    return text == "exit" ? QueueDirection::Exit : QueueDirection::Entry;
}

std::string_view direction_name(QueueDirection d)
{
    return d == QueueDirection::Exit ? "exit" : "entry";
}

void write_text(std::string const &path, std::string const &content)
{
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) {
        throw Error(Errc::InvalidArgument, fmt::format("cannot write '{}'", path));
    }
    file << content;
}

} // namespace

int run(std::vector<std::string> const &args, std::ostream &out, std::ostream &err)
{
    CLI::App app{"Proof-of-stake staking economy simulator"};
    app.name("stakesim");
    app.require_subcommand(1);

    ChurnFlags estimate_churn;
    std::uint64_t active = 0;
    std::uint64_t queue = 0;
    std::string direction = "entry";
    std::string estimate_csv;
    auto *estimate = app.add_subcommand("estimate", "Estimate queue wait time");
    estimate->add_option("--active", active, "Active validator count")->required();
    estimate->add_option("--queue", queue, "Queue length")->required();
    estimate->add_option("--direction", direction, "entry or exit")
        ->check(CLI::IsMember({"entry", "exit"}));
    estimate->add_option("--csv", estimate_csv, "Also write the estimate as CSV");
    estimate_churn.add_to(*estimate);

    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    auto *simulate = app.add_subcommand("simulate", "Run a scenario file");
    simulate->add_option("--config", config_path, "Scenario YAML")->required();
    simulate->add_option("--out", out_dir, "Output directory")->required();
    simulate->add_option("--seed", seed, "Override the scenario seed");

    ChurnFlags history_churn;
    std::string history_path;
    std::string history_out;
    auto *compare = app.add_subcommand("compare-history",
                                       "Compare estimates with observed wait times");
    compare->add_option("input,--input", history_path, "History CSV")->required();
    compare->add_option("--out", history_out, "Write the residual table here");
    history_churn.add_to(*compare);

    std::vector<std::string> argv(args.rbegin(), args.rend());
    try {
        app.parse(argv);
    }
    catch (CLI::ParseError const &e) {
        int const code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (estimate->parsed()) {
            auto const dir = parse_direction(direction);
            auto const est = estimate_wait(active, queue, estimate_churn.table(), dir);
            fmt::print(out, "Churn Time Days: {:.6f}\n", est.churn_time_days);
            fmt::print(out, "Current Churn: {}\n", est.curr_churn);
            fmt::print(out, "Average Churn: {:.2f}\n", est.ave_churn);
            fmt::print(out, "Wait Time: {}\n", est.wait_text);
            if (!estimate_csv.empty()) {
                write_text(estimate_csv,
                           fmt::format("active,queue,direction,churn_time_days,"
                                       "curr_churn,ave_churn,wait_secs,wait_days,"
                                       "wait_text\n{},{},{},{:.6f},{},{:.2f},{},{},{}\n",
                                       active, queue, direction_name(dir),
                                       est.churn_time_days, est.curr_churn,
                                       est.ave_churn, est.wait_secs, est.wait_days,
                                       est.wait_text));
            }
        }
        else if (simulate->parsed()) {
            auto config = load_scenario(config_path);
            if (seed) {
                config.seed = *seed;
            }
            auto const output = run_scenario(config);
            write_run_output(output, out_dir);
            out << output.summary;
        }
        else if (compare->parsed()) {
            std::ifstream in(history_path, std::ios::binary);
            if (!in) {
                throw Error(Errc::InvalidArgument,
                            fmt::format("cannot open '{}'", history_path));
            }
            auto const rows = parse_history_csv(in);
            auto const result = compare_history(rows, history_churn.table());
            std::string table =
                "row,date,kind,active,queue_len,observed_wait_days,estimated_days,"
                "residual_days\n";
            for (std::size_t i = 0; i < rows.size(); ++i) {
                auto const &r = rows[i];
                auto const &c = result.rows[i];
                table += fmt::format("{},{},{},{},{},{:.6f},{:.6f},{:.6f}\n", c.row,
                                     r.date, direction_name(r.kind), r.active,
                                     r.queue_len, r.observed_wait_days,
                                     c.estimated_days, c.residual_days);
            }
            if (history_out.empty()) {
                out << table;
            }
            else {
                write_text(history_out, table);
            }
            fmt::print(out, "rows: {}\n", rows.size());
            fmt::print(out, "mean_abs_residual_days: {:.6f}\n", result.mean_abs_residual);
            fmt::print(out, "max_abs_residual_days: {:.6f}\n", result.max_abs_residual);
        }
    }
    catch (Error const &e) {
        fmt::print(err, "error: {}\n", e.what());
        return e.code() == Errc::ConfigError ? kConfig : kRuntime;
    }
    catch (std::exception const &e) {
        fmt::print(err, "error: {}\n", e.what());
        return kRuntime;
    }
    return kOk;
}

} // namespace stakesim::cli
