#ifndef CV2X_RESULTS_HPP
#define CV2X_RESULTS_HPP

#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "cv2x/config.hpp"
#include "cv2x/experiment.hpp"

namespace cv2x
{

/// Results CSV columns. The first eleven are the per-run schema; the rest
/// distinguish run rows from per-point mean rows.
inline constexpr std::string_view kResultsHeader =
    "seed,speed_kmh,n_subchannels,rri_ms,keep_prob,n_vehicles,duration_ms,tx_pairs,rx_success,pdr,"
    "delivered_throughput_bps,kind,axis_value,runs,pdr_ci_low,pdr_ci_high";

inline constexpr std::string_view kSummaryHeader =
    "axis,axis_value,speed_kmh,rri_ms,n_subchannels,keep_prob,runs,mean_pdr,ci_low,ci_high,"
    "mean_delivered_throughput_bps,mean_n_vehicles";

namespace detail
{

inline std::string opt(const std::optional<double>& v) { return v ? text::format_double(*v) : std::string(); }

inline std::optional<double> parse_opt(std::string_view s, std::string_view what)
{
    if (s.empty())
        return std::nullopt;
    return text::parse_number<double>(s, what);
}

}  // namespace detail

inline void write_results_csv(std::ostream& os, const std::vector<ResultRow>& rows)
{
    using text::format_double;
    os << kResultsHeader << '\n';
    for (const auto& r : rows)
    {
        os << (r.seed ? std::to_string(*r.seed) : std::string()) << ',' << format_double(r.speed_kmh) << ','
           << r.n_subchannels << ',' << r.rri_ms << ',' << format_double(r.keep_prob) << ','
           << format_double(r.n_vehicles) << ',' << r.duration_ms << ',' << r.tx_pairs << ',' << r.rx_success << ','
           << detail::opt(r.pdr) << ',' << format_double(r.delivered_throughput_bps) << ','
           << (r.kind == RowKind::Run ? "run" : "mean") << ',' << format_double(r.axis_value) << ',' << r.runs << ','
           << detail::opt(r.pdr_ci_low) << ',' << detail::opt(r.pdr_ci_high) << '\n';
    }
}

inline std::vector<ResultRow> parse_results_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || text::trim(line) != kResultsHeader)
        throw ConfigError("results csv: missing or unexpected header");
    std::vector<ResultRow> rows;
    int number = 1;
    while (std::getline(in, line))
    {
        ++number;
        if (text::trim(line).empty())
            continue;
        const auto f = text::split(text::trim(line), ',');
        if (f.size() != 16)
            throw ConfigError("results csv line " + std::to_string(number) + ": expected 16 fields, got " +
                              std::to_string(f.size()));
        const std::string where = "results csv line " + std::to_string(number);
        ResultRow r;
        if (!f[0].empty())
            r.seed = text::parse_number<std::uint64_t>(f[0], where);
        r.speed_kmh = text::parse_number<double>(f[1], where);
        r.n_subchannels = text::parse_number<int>(f[2], where);
        r.rri_ms = text::parse_number<int>(f[3], where);
        r.keep_prob = text::parse_number<double>(f[4], where);
        r.n_vehicles = text::parse_number<double>(f[5], where);
        r.duration_ms = text::parse_number<std::int64_t>(f[6], where);
        r.tx_pairs = text::parse_number<std::uint64_t>(f[7], where);
        r.rx_success = text::parse_number<std::uint64_t>(f[8], where);
        r.pdr = detail::parse_opt(f[9], where);
        r.delivered_throughput_bps = text::parse_number<double>(f[10], where);
        if (f[11] == "run")
            r.kind = RowKind::Run;
        else if (f[11] == "mean")
            r.kind = RowKind::Mean;
        else
            throw ConfigError(where + ": unknown row kind '" + std::string(f[11]) + "'");
        r.axis_value = text::parse_number<double>(f[12], where);
        r.runs = text::parse_number<int>(f[13], where);
        r.pdr_ci_low = detail::parse_opt(f[14], where);
        r.pdr_ci_high = detail::parse_opt(f[15], where);
        rows.push_back(r);
    }
    return rows;
}

inline void write_summary_csv(std::ostream& os, const ResultTable& table)
{
    using text::format_double;
    os << kSummaryHeader << '\n';
    for (const auto* r : table.means())
        os << to_string(table.spec.axis) << ',' << format_double(r->axis_value) << ',' << format_double(r->speed_kmh)
           << ',' << r->rri_ms << ',' << r->n_subchannels << ',' << format_double(r->keep_prob) << ',' << r->runs
           << ',' << detail::opt(r->pdr) << ',' << detail::opt(r->pdr_ci_low) << ','
           << detail::opt(r->pdr_ci_high) << ',' << format_double(r->delivered_throughput_bps) << ','
           << format_double(r->n_vehicles) << '\n';
}

struct EmittedFiles
{
    std::filesystem::path results;
    std::filesystem::path summary;
    std::filesystem::path metadata;
};

/// Sibling paths: <stem>_summary.csv and <stem>_meta.txt next to the results file.
inline EmittedFiles output_paths(const std::filesystem::path& results)
{
    const auto dir = results.parent_path();
    const auto stem = results.stem().string();
    return {results, dir / (stem + "_summary.csv"), dir / (stem + "_meta.txt")};
}

namespace detail
{

template <typename Writer>
void write_file(const std::filesystem::path& path, Writer&& write)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot open '" + path.string() + "' for writing");
    write(out);
    out.flush();
    if (!out)
        throw IoError("write to '" + path.string() + "' failed");
}

}  // namespace detail

/// Writes the results CSV, the per-point summary and the effective configuration.
inline EmittedFiles emit_results(const ResultTable& table, const std::filesystem::path& path)
{
    if (table.rows.empty())
        throw InvalidArgument("emit_results: refusing to write an empty result table");
    const auto files = output_paths(path);
    detail::write_file(files.results, [&](std::ostream& os) { write_results_csv(os, table.rows); });
    detail::write_file(files.summary, [&](std::ostream& os) { write_summary_csv(os, table); });
    detail::write_file(files.metadata, [&](std::ostream& os) {
        os << "# effective configuration of " << files.results.filename().string() << '\n';
        write_config(os, table.spec);
    });
    return files;
}

}  // namespace cv2x

#endif
