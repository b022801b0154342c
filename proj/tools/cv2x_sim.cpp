// Command-line driver: runs a parameter sweep and writes the result CSVs.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cv2x/cv2x.hpp"

namespace
{

enum ExitCode
{
    kOk = 0,
    kFailure = 1,
    kConfig = 2,
    kIo = 3,
};

void dump_scenario(const cv2x::ExperimentSpec& spec, const std::string& path)
{
    const double value = spec.axis_values.front();
    const double speed = spec.speeds_kmh.front();
    const auto config = spec.point(value, speed, spec.intervals().front());
    const auto seed = cv2x::replication_seed(spec.master_seed, value, speed, 0);
    cv2x::Rng rng(cv2x::combine_seed(seed, 1));
    const auto vehicles = cv2x::generate_scenario(config.mobility, rng);
    std::ofstream out(path);
    if (!out)
        throw cv2x::IoError("cannot open '" + path + "' for writing");
    cv2x::write_scenario_csv(out, vehicles);
    if (!out)
        throw cv2x::IoError("write to '" + path + "' failed");
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"C-V2X Mode 4 sidelink SPS simulator"};

    std::string config_path;
    std::string preset_name;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> duration_ms;
    std::optional<int> replications;
    std::optional<int> threads;
    std::string out_path = "results.csv";
    std::string trace_path;
    std::string scenario_path;
    std::vector<std::string> settings;
    bool print_config = false;
    bool list_keys = false;
    bool quiet = false;

    app.add_option("--preset", preset_name, "Start from a preset sweep")->check(CLI::IsMember({"fig5", "fig6", "fig7"}));
    app.add_option("--config", config_path, "key = value configuration file");
    app.add_option("--set", settings, "Override one key (key=value); repeatable");
    app.add_option("--seed", seed, "Master seed");
    app.add_option("--duration-ms", duration_ms, "Simulated time per run, ms");
    app.add_option("--replications", replications, "Runs per sweep point");
    app.add_option("--threads", threads, "Worker threads (0 = all cores)");
    app.add_option("--out", out_path, "Results CSV; summary and metadata are written alongside");
    app.add_option("--trace", trace_path, "Write the SPS selection trace here");
    app.add_option("--dump-scenario", scenario_path, "Write the first run's vehicle placement as CSV");
    app.add_flag("--print-config", print_config, "Print the effective configuration and exit");
    app.add_flag("--list-keys", list_keys, "List configuration keys and exit");
    app.add_flag("-q,--quiet", quiet, "No progress output");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        return app.exit(e);
    }

    try
    {
        if (list_keys)
        {
            for (const auto& k : cv2x::config_keys())
                std::cout << k.name << "  " << k.doc << '\n';
            return kOk;
        }

        cv2x::ExperimentSpec spec = preset_name.empty() ? cv2x::ExperimentSpec{} : cv2x::preset(preset_name);
        if (!config_path.empty())
            cv2x::apply_config_file(spec, config_path);
        for (const auto& s : settings)
            cv2x::apply_setting(spec, s);
        if (seed)
            spec.master_seed = *seed;
        if (duration_ms)
            spec.base.engine.duration_ms = *duration_ms;
        if (replications)
            spec.replications = *replications;
        if (threads)
            spec.threads = *threads;
        spec.validate();

        if (print_config)
        {
            cv2x::write_config(std::cout, spec, true);
            return kOk;
        }
        if (!scenario_path.empty())
            dump_scenario(spec, scenario_path);
        const auto out_dir = std::filesystem::absolute(out_path).parent_path();
        if (!std::filesystem::is_directory(out_dir))
            throw cv2x::IoError("cannot write '" + out_path + "': directory does not exist");

        std::ofstream trace;
        cv2x::ExperimentHooks hooks;
        if (!trace_path.empty())
        {
            trace.open(trace_path);
            if (!trace)
                throw cv2x::IoError("cannot open '" + trace_path + "' for writing");
            hooks.trace = &trace;
        }
        if (!quiet)
            hooks.progress = [](std::size_t done, std::size_t total) {
                std::cerr << "\rrun " << done << '/' << total << std::flush;
                if (done == total)
                    std::cerr << '\n';
            };

        const auto table = cv2x::run_experiment(spec, hooks);
        const auto files = cv2x::emit_results(table, out_path);
        if (trace.is_open() && !trace.flush())
            throw cv2x::IoError("write to '" + trace_path + "' failed");
        if (!quiet)
            std::cerr << "wrote " << files.results.string() << ", " << files.summary.string() << ", "
                      << files.metadata.string() << '\n';
        return kOk;
    }
    catch (const cv2x::IoError& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return kIo;
    }
    catch (const std::invalid_argument& e)
    {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
}
