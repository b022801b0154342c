#ifndef CV2X_EXPERIMENT_HPP
#define CV2X_EXPERIMENT_HPP

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "cv2x/engine.hpp"

namespace cv2x
{

enum class SweepAxis
{
    Subchannels,
    RriMultiplier,  // reservation interval = 100 * X ms
    KeepProbability,
};

inline std::string_view to_string(SweepAxis axis)
{
    switch (axis)
    {
    case SweepAxis::Subchannels:
        return "n_subchannels";
    case SweepAxis::RriMultiplier:
        return "rri_multiplier";
    case SweepAxis::KeepProbability:
        return "keep_probability";
    }
    return "?";
}

inline SweepAxis parse_axis(std::string_view s)
{
    if (s == "n_subchannels")
        return SweepAxis::Subchannels;
    if (s == "rri_multiplier")
        return SweepAxis::RriMultiplier;
    if (s == "keep_probability")
        return SweepAxis::KeepProbability;
    throw ConfigError("unknown sweep axis '" + std::string(s) + "'");
}

/// One sweep: axis values x speeds x reservation intervals x replications.
struct ExperimentSpec
{
    std::string name = "custom";
    SimulationConfig base;
    SweepAxis axis = SweepAxis::Subchannels;
    std::vector<double> axis_values{4};
    std::vector<double> speeds_kmh{70, 140};
    // Secondary series of reservation intervals; empty = base interval. Not allowed with the RRI axis.
    std::vector<int> rri_series_ms;
    int replications = 20;
    std::uint64_t master_seed = 1;
    // 0 = one per hardware thread.
    int threads = 0;

    std::vector<int> intervals() const
    {
        if (rri_series_ms.empty())
            return {base.engine.reservation_interval_ms};
        return rri_series_ms;
    }

    std::size_t run_count() const
    {
        const std::size_t series = axis == SweepAxis::RriMultiplier ? 1 : intervals().size();
        return axis_values.size() * speeds_kmh.size() * series * static_cast<std::size_t>(replications);
    }

    /// Configuration of one sweep point.
    SimulationConfig point(double axis_value, double speed_kmh, int rri_ms) const
    {
        SimulationConfig c = base;
        c.mobility.speed_kmh = speed_kmh;
        c.engine.reservation_interval_ms = rri_ms;
        switch (axis)
        {
        case SweepAxis::Subchannels:
            c.grid.n_subchannels = static_cast<int>(axis_value);
            break;
        case SweepAxis::RriMultiplier:
            c.engine.reservation_interval_ms = 100 * static_cast<int>(axis_value);
            break;
        case SweepAxis::KeepProbability:
            c.sps.keep_probability = axis_value;
            break;
        }
        return c;
    }

    void validate() const
    {
        if (axis_values.empty() || speeds_kmh.empty())
            throw ConfigError("experiment: axis values and speeds must be non-empty");
        if (replications < 1)
            throw ConfigError("experiment: replications must be >= 1");
        if (threads < 0)
            throw ConfigError("experiment: threads must be >= 0");
        if (axis == SweepAxis::RriMultiplier && !rri_series_ms.empty())
            throw ConfigError("experiment: an interval series cannot be combined with the rri_multiplier axis");
        for (double v : axis_values)
        {
            const bool integral = std::floor(v) == v;
            switch (axis)
            {
            case SweepAxis::Subchannels:
                if (!integral || v < 1)
                    throw ConfigError("experiment: n_subchannels values must be integers >= 1");
                break;
            case SweepAxis::RriMultiplier:
                if (!integral || v < 1 || v > 10)
                    throw ConfigError("experiment: rri_multiplier values must be integers in 1..10");
                break;
            case SweepAxis::KeepProbability:
                if (!(v >= 0.0 && v <= 0.8))
                    throw ConfigError("experiment: keep_probability values must lie in [0, 0.8]");
                break;
            }
        }
        for (double v : axis_values)
            for (double s : speeds_kmh)
                for (int rri : intervals())
                    point(v, s, rri).validate();
    }
};

/// Seed of one replication: a pure function of (master, axis value, speed, replication).
inline std::uint64_t replication_seed(std::uint64_t master, double axis_value, double speed_kmh, int replication)
{
    std::uint64_t h = mix64(master);
    h = combine_seed(h, std::bit_cast<std::uint64_t>(axis_value));
    h = combine_seed(h, std::bit_cast<std::uint64_t>(speed_kmh));
    h = combine_seed(h, static_cast<std::uint64_t>(replication));
    return h;
}

/// Fig. 5: subchannel count at both speeds.
inline ExperimentSpec preset_fig5()
{
    ExperimentSpec s;
    s.name = "fig5";
    s.axis = SweepAxis::Subchannels;
    s.axis_values = {2, 3, 4, 5, 6};
    s.speeds_kmh = {70, 140};
    s.base.engine.reservation_interval_ms = 100;
    return s;
}

/// Fig. 6: reservation interval 100 X ms, X = 1..10, 4 subchannels.
inline ExperimentSpec preset_fig6()
{
    ExperimentSpec s;
    s.name = "fig6";
    s.axis = SweepAxis::RriMultiplier;
    s.axis_values = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    s.speeds_kmh = {70, 140};
    s.base.grid.n_subchannels = 4;
    return s;
}

/// Fig. 7: keep probability at 100 and 500 ms, 4 subchannels.
inline ExperimentSpec preset_fig7()
{
    ExperimentSpec s;
    s.name = "fig7";
    s.axis = SweepAxis::KeepProbability;
    s.axis_values = {0.0, 0.2, 0.4, 0.6, 0.8};
    s.speeds_kmh = {70};
    s.rri_series_ms = {100, 500};
    s.base.grid.n_subchannels = 4;
    return s;
}

inline ExperimentSpec preset(std::string_view name)
{
    if (name == "fig5")
        return preset_fig5();
    if (name == "fig6")
        return preset_fig6();
    if (name == "fig7")
        return preset_fig7();
    throw ConfigError("unknown preset '" + std::string(name) + "' (expected fig5, fig6 or fig7)");
}

enum class RowKind
{
    Run,
    Mean,
};

/// One CSV row: either a single replication or the mean over a sweep point.
struct ResultRow
{
    RowKind kind = RowKind::Run;
    std::optional<std::uint64_t> seed;
    double axis_value = 0.0;
    double speed_kmh = 0.0;
    int n_subchannels = 0;
    int rri_ms = 0;
    double keep_prob = 0.0;
    double n_vehicles = 0.0;
    std::int64_t duration_ms = 0;
    std::uint64_t tx_pairs = 0;
    std::uint64_t rx_success = 0;
    std::optional<double> pdr;
    double delivered_throughput_bps = 0.0;
    int runs = 1;
    std::optional<double> pdr_ci_low;
    std::optional<double> pdr_ci_high;

    friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

struct ResultTable
{
    ExperimentSpec spec;
    std::vector<ResultRow> rows;

    std::vector<const ResultRow*> means() const
    {
        std::vector<const ResultRow*> out;
        for (const auto& r : rows)
            if (r.kind == RowKind::Mean)
                out.push_back(&r);
        return out;
    }

    /// Mean row for a sweep point, if present.
    const ResultRow* mean_at(double axis_value, double speed_kmh, std::optional<int> rri_ms = std::nullopt) const
    {
        for (const auto& r : rows)
            if (r.kind == RowKind::Mean && r.axis_value == axis_value && r.speed_kmh == speed_kmh &&
                (!rri_ms || r.rri_ms == *rri_ms))
                return &r;
        return nullptr;
    }
};

/// Mean and two-sided 95 % Student-t interval.
struct MeanEstimate
{
    double mean = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

inline std::optional<MeanEstimate> mean_with_ci(const std::vector<double>& xs)
{
    if (xs.empty())
        return std::nullopt;
    const double n = static_cast<double>(xs.size());
    double sum = 0.0;
    for (double x : xs)
        sum += x;
    const double mean = sum / n;
    if (xs.size() < 2)
        return MeanEstimate{mean, mean, mean};
    double ss = 0.0;
    for (double x : xs)
        ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    const boost::math::students_t dist(n - 1.0);
    const double t = boost::math::quantile(boost::math::complement(dist, 0.025));
    const double half = t * sd / std::sqrt(n);
    return MeanEstimate{mean, mean - half, mean + half};
}

struct ExperimentHooks
{
    // Called after each finished replication (from worker threads, serialized).
    std::function<void(std::size_t done, std::size_t total)> progress;
    // Collects the SPS selection trace of every run, written in run order.
    std::ostream* trace = nullptr;
};

namespace detail
{

struct RunTask
{
    double axis_value;
    double speed_kmh;
    int rri_ms;
    int replication;
};

inline std::vector<RunTask> plan(const ExperimentSpec& spec)
{
    std::vector<RunTask> tasks;
    const auto series = spec.axis == SweepAxis::RriMultiplier ? std::vector<int>{0} : spec.intervals();
    for (double v : spec.axis_values)
        for (double speed : spec.speeds_kmh)
            for (int rri : series)
                for (int rep = 0; rep < spec.replications; ++rep)
                    tasks.push_back({v, speed, rri, rep});
    return tasks;
}

}  // namespace detail

/// Runs every replication of the sweep on a bounded worker pool and returns
/// per-run rows followed by one mean row per sweep point.
inline ResultTable run_experiment(const ExperimentSpec& spec, const ExperimentHooks& hooks = {})
{
    spec.validate();
    const auto tasks = detail::plan(spec);
    std::vector<ResultRow> run_rows(tasks.size());
    std::vector<std::string> traces(hooks.trace ? tasks.size() : 0);

    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};
    std::mutex progress_mutex;
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&] {
        for (;;)
        {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size())
                return;
            try
            {
                const auto& t = tasks[i];
                const int rri = spec.axis == SweepAxis::RriMultiplier ? 0 : t.rri_ms;
                const auto config = spec.point(t.axis_value, t.speed_kmh,
                                               rri ? rri : spec.base.engine.reservation_interval_ms);
                const auto seed = replication_seed(spec.master_seed, t.axis_value, t.speed_kmh, t.replication);
                std::ostringstream trace;
                RunHooks run_hooks;
                if (hooks.trace)
                    run_hooks.trace = &trace;
                const auto r = run(config, seed, run_hooks);

                ResultRow row;
                row.kind = RowKind::Run;
                row.seed = seed;
                row.axis_value = t.axis_value;
                row.speed_kmh = t.speed_kmh;
                row.n_subchannels = config.grid.n_subchannels;
                row.rri_ms = config.engine.reservation_interval_ms;
                row.keep_prob = config.sps.keep_probability;
                row.n_vehicles = r.n_vehicles;
                row.duration_ms = r.duration_ms;
                row.tx_pairs = r.stats.tx_pair_count;
                row.rx_success = r.stats.rx_success_count;
                row.delivered_throughput_bps = r.delivered_throughput_bps;
                if (const auto est = compute_pdr(r.stats))
                {
                    row.pdr = est->value;
                    row.pdr_ci_low = est->ci_low;
                    row.pdr_ci_high = est->ci_high;
                }
                run_rows[i] = row;
                if (hooks.trace)
                {
                    std::ostringstream head;
                    head << "# run seed=" << seed << ' ' << to_string(spec.axis) << '=' << t.axis_value
                         << " speed_kmh=" << t.speed_kmh << " rri_ms=" << row.rri_ms
                         << " replication=" << t.replication << '\n';
                    traces[i] = head.str() + trace.str();
                }
            }
            catch (...)
            {
                std::lock_guard lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
                next.store(tasks.size());
                return;
            }
            const auto finished = done.fetch_add(1) + 1;
            if (hooks.progress)
            {
                std::lock_guard lock(progress_mutex);
                hooks.progress(finished, tasks.size());
            }
        }
    };

    std::size_t n_threads = spec.threads > 0 ? static_cast<std::size_t>(spec.threads)
                                             : std::max(1u, std::thread::hardware_concurrency());
    n_threads = std::min(n_threads, std::max<std::size_t>(1, tasks.size()));
    if (n_threads == 1)
        worker();
    else
    {
        std::vector<std::jthread> pool;
        for (std::size_t k = 0; k < n_threads; ++k)
            pool.emplace_back(worker);
    }
    if (failure)
        std::rethrow_exception(failure);

    if (hooks.trace)
        for (const auto& t : traces)
            *hooks.trace << t;

    ResultTable table;
    table.spec = spec;
    table.rows = run_rows;

    // Tasks are planned point by point, replications contiguous.
    const auto reps = static_cast<std::size_t>(spec.replications);
    for (std::size_t start = 0; start < run_rows.size(); start += reps)
    {
        ResultRow mean = run_rows[start];
        mean.kind = RowKind::Mean;
        mean.seed.reset();
        mean.runs = static_cast<int>(reps);
        mean.n_vehicles = 0.0;
        mean.tx_pairs = 0;
        mean.rx_success = 0;
        mean.delivered_throughput_bps = 0.0;
        std::vector<double> pdrs;
        for (std::size_t k = start; k < start + reps; ++k)
        {
            const auto& r = run_rows[k];
            mean.n_vehicles += r.n_vehicles;
            mean.tx_pairs += r.tx_pairs;
            mean.rx_success += r.rx_success;
            mean.delivered_throughput_bps += r.delivered_throughput_bps;
            if (r.pdr)
                pdrs.push_back(*r.pdr);
        }
        mean.n_vehicles /= static_cast<double>(reps);
        mean.delivered_throughput_bps /= static_cast<double>(reps);
        mean.pdr.reset();
        mean.pdr_ci_low.reset();
        mean.pdr_ci_high.reset();
        if (const auto est = mean_with_ci(pdrs))
        {
            mean.pdr = est->mean;
            mean.pdr_ci_low = est->ci_low;
            mean.pdr_ci_high = est->ci_high;
        }
        table.rows.push_back(mean);
    }
    return table;
}

}  // namespace cv2x

#endif
