#ifndef CV2X_CONFIG_HPP
#define CV2X_CONFIG_HPP

#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "cv2x/experiment.hpp"

namespace cv2x
{

namespace text
{

inline std::string_view trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;)
    {
        const auto pos = s.find(sep, start);
        out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos)
            return out;
        start = pos + 1;
    }
}

/// Shortest representation that parses back to the same double.
inline std::string format_double(double v)
{
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

template <typename T>
T parse_number(std::string_view s, std::string_view what)
{
    s = trim(s);
    T value{};
    const auto r = std::from_chars(s.data(), s.data() + s.size(), value);
    if (s.empty() || r.ec != std::errc{} || r.ptr != s.data() + s.size())
        throw ConfigError(std::string(what) + ": cannot parse '" + std::string(s) + "'");
    return value;
}

}  // namespace text

namespace detail
{

inline std::string format_value(int v) { return std::to_string(v); }
inline std::string format_value(std::int64_t v) { return std::to_string(v); }
inline std::string format_value(std::uint64_t v) { return std::to_string(v); }
inline std::string format_value(double v) { return text::format_double(v); }
inline std::string format_value(bool v) { return v ? "true" : "false"; }
inline std::string format_value(const std::string& v) { return v; }
inline std::string format_value(std::optional<double> v) { return v ? text::format_double(*v) : "none"; }
inline std::string format_value(SweepAxis v) { return std::string(to_string(v)); }
inline std::string format_value(PoolAdjacency) { return "adjacent"; }
inline std::string format_value(ReservationSizing v)
{
    return v == ReservationSizing::PerPacket ? "per_packet" : "largest_message";
}

template <typename T>
std::string format_value(const std::vector<T>& v)
{
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i)
        out += (i ? "," : "") + format_value(v[i]);
    return out;
}

inline std::string format_value(const std::map<int, int>& m)
{
    std::string out;
    for (const auto& [bytes, subch] : m)
        out += (out.empty() ? "" : ",") + std::to_string(bytes) + ":" + std::to_string(subch);
    return out;
}

template <typename T>
    requires std::is_arithmetic_v<T> && (!std::is_same_v<T, bool>)
void parse_value(std::string_view s, T& out, std::string_view key)
{
    out = text::parse_number<T>(s, key);
}

inline void parse_value(std::string_view s, bool& out, std::string_view key)
{
    s = text::trim(s);
    if (s == "true" || s == "1" || s == "yes")
        out = true;
    else if (s == "false" || s == "0" || s == "no")
        out = false;
    else
        throw ConfigError(std::string(key) + ": expected true or false, got '" + std::string(s) + "'");
}

inline void parse_value(std::string_view s, std::string& out, std::string_view) { out = text::trim(s); }

inline void parse_value(std::string_view s, std::optional<double>& out, std::string_view key)
{
    s = text::trim(s);
    if (s == "none" || s.empty())
        out.reset();
    else
        out = text::parse_number<double>(s, key);
}

inline void parse_value(std::string_view s, SweepAxis& out, std::string_view) { out = parse_axis(text::trim(s)); }

inline void parse_value(std::string_view s, PoolAdjacency& out, std::string_view key)
{
    if (text::trim(s) != "adjacent")
        throw ConfigError(std::string(key) + ": only 'adjacent' is supported");
    out = PoolAdjacency::Adjacent;
}

inline void parse_value(std::string_view s, ReservationSizing& out, std::string_view key)
{
    s = text::trim(s);
    if (s == "per_packet")
        out = ReservationSizing::PerPacket;
    else if (s == "largest_message")
        out = ReservationSizing::LargestMessage;
    else
        throw ConfigError(std::string(key) + ": expected per_packet or largest_message, got '" + std::string(s) +
                          "'");
}

template <typename T>
void parse_value(std::string_view s, std::vector<T>& out, std::string_view key)
{
    out.clear();
    if (text::trim(s).empty())
        return;
    for (auto part : text::split(s, ','))
    {
        T v{};
        parse_value(part, v, key);
        out.push_back(v);
    }
}

inline void parse_value(std::string_view s, std::map<int, int>& out, std::string_view key)
{
    out.clear();
    for (auto part : text::split(s, ','))
    {
        const auto kv = text::split(part, ':');
        if (kv.size() != 2)
            throw ConfigError(std::string(key) + ": expected bytes:subchannels pairs, got '" + std::string(part) +
                              "'");
        out[text::parse_number<int>(kv[0], key)] = text::parse_number<int>(kv[1], key);
    }
}

}  // namespace detail

struct ConfigKey
{
    std::string name;
    std::string doc;
    std::function<std::string(const ExperimentSpec&)> get;
    std::function<void(ExperimentSpec&, std::string_view)> set;
};

namespace detail
{

template <auto Section, auto Member>
ConfigKey base_key(std::string name, std::string doc)
{
    ConfigKey k{std::move(name), std::move(doc), {}, {}};
    k.get = [](const ExperimentSpec& s) { return format_value((s.base.*Section).*Member); };
    k.set = [key = k.name](ExperimentSpec& s, std::string_view v) { parse_value(v, (s.base.*Section).*Member, key); };
    return k;
}

template <auto Member>
ConfigKey spec_key(std::string name, std::string doc)
{
    ConfigKey k{std::move(name), std::move(doc), {}, {}};
    k.get = [](const ExperimentSpec& s) { return format_value(s.*Member); };
    k.set = [key = k.name](ExperimentSpec& s, std::string_view v) { parse_value(v, s.*Member, key); };
    return k;
}

}  // namespace detail

/// Every recognised configuration key, in file order.
inline const std::vector<ConfigKey>& config_keys()
{
    using detail::base_key;
    using detail::spec_key;
    using S = SimulationConfig;
    static const std::vector<ConfigKey> keys = [] {
        std::vector<ConfigKey> k{
            base_key<&S::grid, &GridConfig::n_subchannels>("grid.n_subchannels", "subchannels in the pool"),
            base_key<&S::grid, &GridConfig::rbs_per_subchannel>("grid.rbs_per_subchannel", "resource blocks per subchannel"),
            base_key<&S::grid, &GridConfig::tti_ms>("grid.tti_ms", "subframe length, ms (only 1)"),
            base_key<&S::grid, &GridConfig::adjacency>("grid.adjacency", "SCI/data placement (adjacent)"),

            base_key<&S::mobility, &FreewayConfig::road_length_m>("mobility.road_length_m", "ring length, m"),
            base_key<&S::mobility, &FreewayConfig::n_lanes>("mobility.n_lanes", "lanes, even, half per direction"),
            base_key<&S::mobility, &FreewayConfig::lane_width_m>("mobility.lane_width_m", "lane width, m"),
            base_key<&S::mobility, &FreewayConfig::speed_kmh>("mobility.speed_kmh",
                                                              "speed, km/h (replaced by experiment.speeds_kmh)"),
            base_key<&S::mobility, &FreewayConfig::headway_s>("mobility.headway_s", "time headway, s"),
            base_key<&S::mobility, &FreewayConfig::antenna_height_m>("mobility.antenna_height_m",
                                                                     "antenna height, m (also sets the channel's)"),

            base_key<&S::channel, &ChannelConfig::carrier_hz>("channel.carrier_hz", "carrier frequency, Hz"),
            base_key<&S::channel, &ChannelConfig::tx_power_dbm>("channel.tx_power_dbm", "transmit power, dBm"),
            base_key<&S::channel, &ChannelConfig::shadow_sigma_db>("channel.shadow_sigma_db", "shadowing std, dB"),
            base_key<&S::channel, &ChannelConfig::decorrelation_m>("channel.decorrelation_m",
                                                                   "shadowing decorrelation distance, m"),
            base_key<&S::channel, &ChannelConfig::min_distance_m>("channel.min_distance_m",
                                                                  "path loss distance clamp, m"),
            base_key<&S::channel, &ChannelConfig::noise_floor_dbm_per_subchannel>(
                "channel.noise_floor_dbm_per_subchannel", "noise power per subchannel, dBm"),

            base_key<&S::sps, &SpsConfig::t1>("sps.t1", "selection window start offset, subframes"),
            base_key<&S::sps, &SpsConfig::t2>("sps.t2", "selection window end offset, subframes"),
            base_key<&S::sps, &SpsConfig::threshold_init_dbm>("sps.threshold_init_dbm", "initial RSRP threshold, dBm"),
            base_key<&S::sps, &SpsConfig::threshold_step_db>("sps.threshold_step_db", "threshold increment, dB"),
            base_key<&S::sps, &SpsConfig::candidate_fraction>("sps.candidate_fraction", "target fraction of S_A"),
            base_key<&S::sps, &SpsConfig::keep_probability>("sps.keep_probability", "P, in [0, 0.8]"),
            base_key<&S::sps, &SpsConfig::harq_enabled>("sps.harq_enabled", "blind retransmission pairs"),
            base_key<&S::sps, &SpsConfig::sensing_window_sf>("sps.sensing_window_sf", "sensing history, subframes"),
            base_key<&S::sps, &SpsConfig::averaging_period_sf>("sps.averaging_period_sf", "S-RSSI sample spacing"),
            base_key<&S::sps, &SpsConfig::averaging_samples>("sps.averaging_samples", "S-RSSI samples averaged"),

            base_key<&S::traffic, &TrafficConfig::pattern_bytes>("traffic.pattern_bytes", "cyclic packet sizes, bytes"),
            base_key<&S::traffic, &TrafficConfig::inter_arrival_ms>("traffic.inter_arrival_ms", "packet period, ms"),
            base_key<&S::traffic, &TrafficConfig::size_to_subchannels>("traffic.size_to_subchannels",
                                                                       "bytes:subchannels pairs"),
            base_key<&S::traffic, &TrafficConfig::arrival_spread_ms>("traffic.arrival_spread_ms",
                                                                     "per-vehicle generation offset range, ms"),

            base_key<&S::engine, &EngineConfig::duration_ms>("engine.duration_ms", "run length, ms"),
            base_key<&S::engine, &EngineConfig::warmup_ms>("engine.warmup_ms", "unmeasured start, ms"),
            base_key<&S::engine, &EngineConfig::mobility_period_ms>("engine.mobility_period_ms", "position update period, ms"),
            base_key<&S::engine, &EngineConfig::reservation_interval_ms>("engine.reservation_interval_ms",
                                                                         "reservation interval, ms"),
            base_key<&S::engine, &EngineConfig::decode_sensitivity_dbm>("engine.decode_sensitivity_dbm",
                                                                        "minimum RSRP to decode an SCI, dBm"),
            base_key<&S::engine, &EngineConfig::count_half_duplex_losses>("engine.count_half_duplex_losses",
                                                                          "fail receptions at transmitting receivers"),
            base_key<&S::engine, &EngineConfig::max_range_m>("engine.max_range_m", "receiver range limit, m or none"),
            base_key<&S::engine, &EngineConfig::reservation_sizing>("engine.reservation_sizing",
                                                                    "per_packet or largest_message"),

            spec_key<&ExperimentSpec::name>("experiment.name", "label written to the metadata"),
            spec_key<&ExperimentSpec::axis>("experiment.axis", "n_subchannels, rri_multiplier or keep_probability"),
            spec_key<&ExperimentSpec::axis_values>("experiment.values", "sweep values"),
            spec_key<&ExperimentSpec::speeds_kmh>("experiment.speeds_kmh", "speeds, km/h"),
            spec_key<&ExperimentSpec::rri_series_ms>("experiment.rri_series_ms",
                                                     "extra interval series, ms (empty = engine interval)"),
            spec_key<&ExperimentSpec::replications>("experiment.replications", "runs per sweep point"),
            spec_key<&ExperimentSpec::master_seed>("experiment.master_seed", "master seed"),
            spec_key<&ExperimentSpec::threads>("experiment.threads", "worker threads, 0 = all cores"),
        };
        // The channel keeps its own copy of the antenna height.
        for (auto& key : k)
            if (key.name == "mobility.antenna_height_m")
            {
                auto inner = key.set;
                key.set = [inner](ExperimentSpec& s, std::string_view v) {
                    inner(s, v);
                    s.base.channel.antenna_height_m = s.base.mobility.antenna_height_m;
                };
            }
        return k;
    }();
    return keys;
}

inline const ConfigKey& find_config_key(std::string_view name)
{
    for (const auto& k : config_keys())
        if (k.name == name)
            return k;
    throw ConfigError("unknown config key '" + std::string(name) + "'");
}

/// Applies one "key = value" assignment.
inline void apply_setting(ExperimentSpec& spec, std::string_view assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos)
        throw ConfigError("expected key=value, got '" + std::string(assignment) + "'");
    find_config_key(text::trim(assignment.substr(0, eq))).set(spec, assignment.substr(eq + 1));
}

/// Reads "key = value" lines; '#' starts a comment. Later lines win.
inline void apply_config(ExperimentSpec& spec, std::istream& in, std::string_view source = "config")
{
    std::string line;
    int number = 0;
    while (std::getline(in, line))
    {
        ++number;
        std::string_view view(line);
        if (const auto hash = view.find('#'); hash != std::string_view::npos)
            view = view.substr(0, hash);
        view = text::trim(view);
        if (view.empty())
            continue;
        try
        {
            apply_setting(spec, view);
        }
        catch (const ConfigError& e)
        {
            throw ConfigError(std::string(source) + ":" + std::to_string(number) + ": " + e.what());
        }
    }
}

inline void apply_config_file(ExperimentSpec& spec, const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open config file '" + path + "'");
    apply_config(spec, in, path);
}

/// Writes every key with its effective value; the output is itself a valid config file.
inline void write_config(std::ostream& os, const ExperimentSpec& spec, bool with_docs = false)
{
    for (const auto& k : config_keys())
    {
        if (with_docs)
            os << "# " << k.doc << '\n';
        os << k.name << " = " << k.get(spec) << '\n';
    }
}

}  // namespace cv2x

#endif
