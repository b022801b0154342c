#ifndef CV2X_ENGINE_HPP
#define CV2X_ENGINE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cv2x/channel.hpp"
#include "cv2x/common.hpp"
#include "cv2x/grid.hpp"
#include "cv2x/mobility.hpp"
#include "cv2x/sps.hpp"

namespace cv2x
{

/// Periodic BSM traffic: sizes cycle through the pattern, one packet per inter-arrival period.
struct TrafficConfig
{
    std::vector<int> pattern_bytes{190, 190, 190, 190, 300};
    int inter_arrival_ms = 100;
    // Packet size -> subchannels; a size maps to the entry with the smallest key >= size.
    std::map<int, int> size_to_subchannels{{190, 1}, {300, 2}};
    // Packet generation instants sit on a common inter-arrival clock, offset per
    // vehicle by a uniform draw from [0, arrival_spread_ms]; 0 = lockstep.
    int arrival_spread_ms = 20;

    int subchannels_for(int bytes) const
    {
        const auto it = size_to_subchannels.lower_bound(bytes);
        if (it == size_to_subchannels.end())
            throw ConfigError("traffic: no subchannel mapping for a " + std::to_string(bytes) + " byte packet");
        return it->second;
    }

    int max_subchannels() const
    {
        int m = 0;
        for (int b : pattern_bytes)
            m = std::max(m, subchannels_for(b));
        return m;
    }

    void validate(const GridConfig& grid) const
    {
        if (pattern_bytes.empty())
            throw ConfigError("traffic: empty packet pattern");
        if (inter_arrival_ms < 1)
            throw ConfigError("traffic: inter_arrival_ms must be >= 1");
        if (arrival_spread_ms < 0 || arrival_spread_ms >= inter_arrival_ms)
            throw ConfigError("traffic: arrival_spread_ms must lie in [0, inter_arrival_ms)");
        for (int b : pattern_bytes)
        {
            if (b <= 0)
                throw ConfigError("traffic: packet sizes must be positive");
            const int need = subchannels_for(b);
            if (need < 1 || need > grid.n_subchannels)
                throw ConfigError("traffic: a " + std::to_string(b) + " byte packet needs " + std::to_string(need) +
                                  " subchannels but the grid has " + std::to_string(grid.n_subchannels));
        }
    }
};

/// How many subchannels a fresh reservation covers.
enum class ReservationSizing
{
    // Sized for the packet that triggers selection; a later packet that does
    // not fit the grant triggers reselection.
    PerPacket,
    // Always sized for the largest message in the traffic pattern.
    LargestMessage,
};

struct EngineConfig
{
    Subframe duration_ms = 20000;
    Subframe warmup_ms = 1000;
    int mobility_period_ms = 100;
    int reservation_interval_ms = 100;
    double decode_sensitivity_dbm = -107.5;
    bool count_half_duplex_losses = false;
    std::optional<double> max_range_m;
    ReservationSizing reservation_sizing = ReservationSizing::LargestMessage;

    void validate() const
    {
        if (duration_ms < 1 || warmup_ms < 0 || duration_ms <= warmup_ms)
            throw ConfigError("engine: need duration_ms > warmup_ms >= 0");
        if (mobility_period_ms < 1)
            throw ConfigError("engine: mobility_period_ms must be >= 1");
        if (!is_valid_reservation_interval(reservation_interval_ms))
            throw ConfigError("engine: invalid reservation interval " + std::to_string(reservation_interval_ms));
        if (max_range_m && !(*max_range_m > 0.0))
            throw ConfigError("engine: max_range_m must be > 0");
    }
};

struct SimulationConfig
{
    GridConfig grid;
    FreewayConfig mobility;
    ChannelConfig channel;
    SpsConfig sps;
    TrafficConfig traffic;
    EngineConfig engine;

    void validate() const
    {
        grid.validate();
        mobility.validate();
        channel.validate();
        sps.validate();
        traffic.validate(grid);
        engine.validate();
        if (traffic.inter_arrival_ms > engine.reservation_interval_ms)
            throw ConfigError("traffic: inter-arrival time exceeds the reservation interval");
        if (std::abs(channel.antenna_height_m - mobility.antenna_height_m) > 1e-12)
            throw ConfigError("channel and mobility disagree on the antenna height");
    }
};

struct TransmissionRecord
{
    Subframe subframe = 0;
    int first_subchannel = 0;
    int length_subchannels = 1;
    int tx_id = 0;
    std::uint64_t packet_id = 0;
    int packet_bytes = 0;

    int end_subchannel() const { return first_subchannel + length_subchannels; }

    bool overlaps(const TransmissionRecord& o) const
    {
        return subframe == o.subframe && first_subchannel < o.end_subchannel() &&
               o.first_subchannel < end_subchannel();
    }
};

struct PdrStats
{
    std::uint64_t tx_pair_count = 0;
    std::uint64_t rx_success_count = 0;

    std::optional<double> pdr() const
    {
        if (tx_pair_count == 0)
            return std::nullopt;
        return static_cast<double>(rx_success_count) / static_cast<double>(tx_pair_count);
    }

    friend bool operator==(const PdrStats&, const PdrStats&) = default;
};

struct PdrEstimate
{
    double value = 0.0;
    double ci_low = 0.0;  // Wilson score interval, 95 %
    double ci_high = 0.0;
};

inline std::optional<PdrEstimate> compute_pdr(const PdrStats& stats)
{
    if (stats.tx_pair_count == 0)
        return std::nullopt;
    const double n = static_cast<double>(stats.tx_pair_count);
    const double p = static_cast<double>(stats.rx_success_count) / n;
    constexpr double z = 1.959963984540054;
    const double denom = 1.0 + z * z / n;
    const double centre = (p + z * z / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
    return PdrEstimate{p, std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

struct ReceptionRules
{
    bool count_half_duplex_losses = false;
    std::optional<double> max_range_m;
};

struct PairOutcome
{
    std::size_t record = 0;
    int receiver_id = 0;
    bool success = false;
};

/// Flags records whose subchannels intersect another record of the same subframe.
inline void collision_flags(std::span<const TransmissionRecord> records, std::vector<char>& collided)
{
    collided.assign(records.size(), 0);
    for (std::size_t i = 0; i < records.size(); ++i)
        for (std::size_t j = i + 1; j < records.size(); ++j)
            if (records[i].overlaps(records[j]))
                collided[i] = collided[j] = 1;
}

inline std::vector<char> collision_flags(std::span<const TransmissionRecord> records)
{
    std::vector<char> collided;
    collision_flags(records, collided);
    return collided;
}

/// Overlap-only reception: a packet is received by every counted receiver iff
/// no other transmission in its subframe shares one of its subchannels. Each
/// (record, receiver) pair is one trial; the transmitter is never a receiver.
inline void evaluate_reception(std::span<const TransmissionRecord> records, std::span<const VehicleState> receivers,
                               const ReceptionRules& rules, const FreewayConfig& road, std::vector<PairOutcome>& out)
{
    out.clear();
    thread_local std::vector<char> collided;
    collision_flags(records, collided);
    const auto is_transmitting = [&](int id) {
        return std::any_of(records.begin(), records.end(), [id](const auto& r) { return r.tx_id == id; });
    };
    const VehicleState* by_id = nullptr;
    for (std::size_t i = 0; i < records.size(); ++i)
    {
        const auto& rec = records[i];
        by_id = nullptr;
        if (rules.max_range_m)
            for (const auto& v : receivers)
                if (v.id == rec.tx_id)
                    by_id = &v;
        for (const auto& v : receivers)
        {
            if (v.id == rec.tx_id)
                continue;
            if (rules.max_range_m && by_id && distance(*by_id, v, road) > *rules.max_range_m)
                continue;
            bool ok = !collided[i];
            if (ok && rules.count_half_duplex_losses && is_transmitting(v.id))
                ok = false;
            out.push_back({i, v.id, ok});
        }
    }
}

inline std::vector<PairOutcome> evaluate_reception(std::span<const TransmissionRecord> records,
                                                   std::span<const VehicleState> receivers,
                                                   const ReceptionRules& rules = {},
                                                   const FreewayConfig& road = {})
{
    std::vector<PairOutcome> out;
    evaluate_reception(records, receivers, rules, road, out);
    return out;
}

struct RunResult
{
    PdrStats stats;
    int n_vehicles = 0;
    Subframe duration_ms = 0;
    std::uint64_t packets_generated = 0;
    std::uint64_t packets_transmitted = 0;
    // Superseded at the MAC before a grant opportunity came up.
    std::uint64_t packets_dropped = 0;
    std::uint64_t selections = 0;
    std::uint64_t delivered_bits = 0;
    // Successfully delivered payload per receiving vehicle, bits/s over the measured period.
    double delivered_throughput_bps = 0.0;

    friend bool operator==(const RunResult&, const RunResult&) = default;
};

/// Optional observation and test hooks.
struct RunHooks
{
    std::ostream* trace = nullptr;
    std::function<void(const TransmissionRecord&)> on_transmission;
    std::function<void(int ue, Subframe now, const SelectionResult&, const SpsGrant&)> on_selection;
    // Replaces the randomly picked grant (used to force schedules in tests).
    std::function<std::optional<SpsGrant>(int ue, Subframe now, const SpsGrant& picked)> override_grant;
};

namespace detail
{

struct Packet
{
    std::uint64_t id = 0;
    int bytes = 0;
    int subchannels = 1;
    Subframe arrival = 0;
};

struct PendingCopy
{
    Subframe subframe = 0;
    TransmissionRecord record;
    Sci sci;
};

struct UeState
{
    SensingDatabase db;
    Rng rng;
    std::optional<SpsGrant> grant;
    Subframe next_tx = 0;
    Subframe next_arrival = 0;
    std::size_t pattern_index = 0;
    std::optional<Packet> pending;
    std::optional<PendingCopy> copy;
};

struct LinkCache
{
    long epoch = -1;
    double dbm = 0.0;
    double mw = 0.0;
};

}  // namespace detail

class Simulation
{
public:
    Simulation(std::vector<VehicleState> scenario, SimulationConfig config, std::uint64_t seed,
               RunHooks hooks = {})
        : config_(std::move(config)),
          vehicles_(std::move(scenario)),
          hooks_(std::move(hooks)),
          channel_(config_.channel, config_.mobility, vehicles_.size()),
          channel_rng_(combine_seed(seed, 2)),
          noise_mw_(dbm_to_mw(config_.channel.noise_floor_dbm_per_subchannel))
    {
        config_.validate();
        for (std::size_t i = 0; i < vehicles_.size(); ++i)
            if (vehicles_[i].id != static_cast<int>(i))
                throw ConfigError("engine: vehicle ids must be 0..n-1 in order");

        const int n = static_cast<int>(vehicles_.size());
        links_.assign(vehicles_.size() * (vehicles_.size() > 0 ? vehicles_.size() - 1 : 0) / 2, {});
        Rng traffic_rng(combine_seed(seed, 3));
        const auto& traffic = config_.traffic;
        ues_.reserve(vehicles_.size());
        for (int i = 0; i < n; ++i)
        {
            detail::UeState ue{SensingDatabase(config_.grid.n_subchannels, config_.sps.sensing_window_sf),
                               Rng(combine_seed(seed, 1000 + static_cast<std::uint64_t>(i))),
                               std::nullopt,
                               0,
                               0,
                               0,
                               std::nullopt,
                               std::nullopt};
            // Vehicles join at a random generation period within the first reservation interval.
            const Subframe join_periods = std::max(1, config_.engine.reservation_interval_ms / traffic.inter_arrival_ms);
            ue.next_arrival =
                std::uniform_int_distribution<Subframe>(0, join_periods - 1)(traffic_rng) * traffic.inter_arrival_ms +
                std::uniform_int_distribution<Subframe>(0, traffic.arrival_spread_ms)(traffic_rng);
            ue.pattern_index =
                std::uniform_int_distribution<std::size_t>(0, traffic.pattern_bytes.size() - 1)(traffic_rng);
            ues_.push_back(std::move(ue));
        }
        rssi_.assign(static_cast<std::size_t>(config_.grid.n_subchannels), 0.0);
    }

    RunResult run()
    {
        RunResult result;
        result.n_vehicles = static_cast<int>(vehicles_.size());
        result.duration_ms = config_.engine.duration_ms;
        const auto& ec = config_.engine;
        const ReceptionRules rules{ec.count_half_duplex_losses, ec.max_range_m};

        for (Subframe sf = 0; sf < ec.duration_ms; ++sf)
        {
            if (sf > 0 && sf % ec.mobility_period_ms == 0)
            {
                step(vehicles_, ec.mobility_period_ms / 1000.0, config_.mobility);
                ++epoch_;
            }
            const bool measured = sf >= ec.warmup_ms;
            arrivals(sf, measured, result);
            transmissions(sf, result);
            sensing(sf);
            reception(sf, rules, result);
        }
        finalize_harq(result);

        const double seconds = static_cast<double>(ec.duration_ms - ec.warmup_ms) / 1000.0;
        if (!vehicles_.empty())
            result.delivered_throughput_bps =
                static_cast<double>(result.delivered_bits) / (seconds * static_cast<double>(vehicles_.size()));
        return result;
    }

    std::span<const VehicleState> vehicles() const { return vehicles_; }

    const SensingDatabase& sensing_database(int ue) const { return ues_.at(static_cast<std::size_t>(ue)).db; }

private:
    void arrivals(Subframe sf, bool measured, RunResult& result)
    {
        const auto& traffic = config_.traffic;
        for (std::size_t i = 0; i < ues_.size(); ++i)
        {
            auto& ue = ues_[i];
            if (ue.next_arrival != sf)
                continue;
            ue.next_arrival += traffic.inter_arrival_ms;
            if (ue.pending && ue.pending->arrival >= config_.engine.warmup_ms)
                ++result.packets_dropped;
            detail::Packet p;
            p.id = next_packet_id_++;
            p.bytes = traffic.pattern_bytes[ue.pattern_index];
            p.subchannels = traffic.subchannels_for(p.bytes);
            p.arrival = sf;
            ue.pattern_index = (ue.pattern_index + 1) % traffic.pattern_bytes.size();
            ue.pending = p;
            if (measured)
                ++result.packets_generated;

            // A packet the reservation cannot carry triggers reselection on arrival.
            if (ue.grant && ue.grant->resource.length_subchannels < p.subchannels)
                ue.grant.reset();
            if (!ue.grant)
                select(static_cast<int>(i), sf, p.subchannels, result);
        }
    }

    void select(int ue_id, Subframe now, int needed, RunResult& result)
    {
        auto& ue = ues_[static_cast<std::size_t>(ue_id)];
        const int length = config_.engine.reservation_sizing == ReservationSizing::LargestMessage
                               ? config_.traffic.max_subchannels()
                               : needed;
        const int interval = config_.engine.reservation_interval_ms;
        const auto selection = select_candidates(ue.db, config_.sps, config_.grid, now, length, interval);
        if (selection.selected.empty())
            return;  // retried at the next packet arrival
        auto grant = pick_grant(selection.selected, interval, ue.rng, config_.sps.harq_enabled);
        if (hooks_.override_grant)
            if (auto forced = hooks_.override_grant(ue_id, now, grant))
                grant = *forced;
        // Keep the earlier of a HARQ pair as the primary opportunity.
        if (grant.retx && grant.retx->subframe < grant.resource.subframe)
            std::swap(grant.resource, *grant.retx);
        ue.grant = grant;
        ue.next_tx = grant.resource.subframe;
        ++result.selections;
        if (hooks_.on_selection)
            hooks_.on_selection(ue_id, now, selection, grant);
        if (hooks_.trace)
            *hooks_.trace << format_selection_trace(ue_id, now, selection, grant) << '\n';
    }

    void transmissions(Subframe sf, RunResult& result)
    {
        records_.clear();
        scis_.clear();
        for (std::size_t i = 0; i < ues_.size(); ++i)
        {
            auto& ue = ues_[i];
            if (ue.copy && ue.copy->subframe == sf)
            {
                records_.push_back(ue.copy->record);
                scis_.push_back(ue.copy->sci);
                if (hooks_.on_transmission)
                    hooks_.on_transmission(ue.copy->record);
                ue.copy.reset();
            }
            if (!ue.grant || ue.next_tx != sf)
                continue;
            const SpsGrant grant = *ue.grant;
            ue.next_tx += grant.reservation_interval_ms;
            if (!ue.pending)
                continue;

            const auto& p = *ue.pending;
            TransmissionRecord rec{sf, grant.resource.first_subchannel, p.subchannels, static_cast<int>(i), p.id,
                                   p.bytes};
            Sci sci;
            sci.reservation_interval_ms = grant.reservation_interval_ms;
            sci.first_subchannel = rec.first_subchannel;
            sci.length_subchannels = rec.length_subchannels;
            sci.tx_id = rec.tx_id;
            if (grant.retx)
            {
                const int gap = grant.retx_offset();
                sci.retx_gap_sf = gap;
                sci.retx_first_subchannel = grant.retx->first_subchannel;
                detail::PendingCopy copy;
                copy.subframe = sf + gap;
                copy.record = rec;
                copy.record.subframe = sf + gap;
                copy.record.first_subchannel = grant.retx->first_subchannel;
                copy.sci = sci;
                copy.sci.first_subchannel = grant.retx->first_subchannel;
                copy.sci.retx_gap_sf = -gap;
                copy.sci.retx_first_subchannel = rec.first_subchannel;
                ue.copy = copy;
                copies_expected_[p.id] = 2;
            }
            records_.push_back(rec);
            scis_.push_back(sci);
            if (p.arrival >= config_.engine.warmup_ms)
                ++result.packets_transmitted;
            if (hooks_.on_transmission)
                hooks_.on_transmission(rec);
            ue.pending.reset();

            ue.grant = on_transmission(grant);
            if (ue.grant->expired())
                ue.grant = on_expiry(*ue.grant, config_.sps.keep_probability, ue.rng);
        }
    }

    const detail::LinkCache& link(int a, int b)
    {
        const auto n = vehicles_.size();
        const auto i = static_cast<std::size_t>(std::min(a, b));
        const auto j = static_cast<std::size_t>(std::max(a, b));
        auto& c = links_[i * n - i * (i + 1) / 2 + (j - i - 1)];
        if (c.epoch != epoch_)
        {
            c.epoch = epoch_;
            c.dbm = channel_.rx_power_dbm(vehicles_[static_cast<std::size_t>(a)],
                                          vehicles_[static_cast<std::size_t>(b)], channel_rng_);
            c.mw = dbm_to_mw(c.dbm);
        }
        return c;
    }

    void sensing(Subframe sf)
    {
        transmitting_.assign(ues_.size(), 0);
        for (const auto& r : records_)
            transmitting_[static_cast<std::size_t>(r.tx_id)] = 1;
        collision_flags(records_, collided_);

        for (std::size_t rx = 0; rx < ues_.size(); ++rx)
        {
            auto& db = ues_[rx].db;
            if (transmitting_[rx])
            {
                db.record_subframe_mw(sf, {}, {}, false);
                continue;
            }
            std::fill(rssi_.begin(), rssi_.end(), noise_mw_);
            decoded_.clear();
            for (std::size_t k = 0; k < records_.size(); ++k)
            {
                const auto& r = records_[k];
                const auto& l = link(r.tx_id, static_cast<int>(rx));
                for (int ch = r.first_subchannel; ch < r.end_subchannel(); ++ch)
                    rssi_[static_cast<std::size_t>(ch)] += l.mw;
                if (!collided_[k] && l.dbm >= config_.engine.decode_sensitivity_dbm)
                    decoded_.push_back({scis_[k], l.dbm});
            }
            db.record_subframe_mw(sf, rssi_, decoded_, true);
        }
    }

    void reception(Subframe sf, const ReceptionRules& rules, RunResult& result)
    {
        if (records_.empty())
            return;
        evaluate_reception(records_, vehicles_, rules, config_.mobility, outcomes_);
        const bool measured_sf = sf >= config_.engine.warmup_ms;
        for (const auto& o : outcomes_)
        {
            const auto& rec = records_[o.record];
            const auto expected = copies_expected_.find(rec.packet_id);
            if (expected == copies_expected_.end())
            {
                if (!measured_sf)
                    continue;
                ++result.stats.tx_pair_count;
                if (o.success)
                {
                    ++result.stats.rx_success_count;
                    result.delivered_bits += static_cast<std::uint64_t>(rec.packet_bytes) * 8;
                }
                continue;
            }
            auto& acc = harq_[rec.packet_id];
            if (acc.receivers.empty())
            {
                acc.first_subframe = sf;
                acc.bytes = rec.packet_bytes;
                acc.receivers.assign(vehicles_.size(), 0);
                acc.counted.assign(vehicles_.size(), 0);
            }
            acc.counted[static_cast<std::size_t>(o.receiver_id)] = 1;
            if (o.success)
                acc.receivers[static_cast<std::size_t>(o.receiver_id)] = 1;
        }
        // A HARQ packet is settled once its last copy went out.
        for (const auto& rec : records_)
        {
            const auto expected = copies_expected_.find(rec.packet_id);
            if (expected == copies_expected_.end())
                continue;
            auto& acc = harq_[rec.packet_id];
            if (++acc.copies_seen < expected->second)
                continue;
            if (acc.first_subframe >= config_.engine.warmup_ms)
                settle(acc, result);
            harq_.erase(rec.packet_id);
            copies_expected_.erase(expected);
        }
    }

    struct HarqAccumulator
    {
        Subframe first_subframe = 0;
        int bytes = 0;
        int copies_seen = 0;
        std::vector<char> receivers;
        std::vector<char> counted;
    };

    static void settle(const HarqAccumulator& acc, RunResult& result)
    {
        for (std::size_t r = 0; r < acc.counted.size(); ++r)
        {
            if (!acc.counted[r])
                continue;
            ++result.stats.tx_pair_count;
            if (acc.receivers[r])
            {
                ++result.stats.rx_success_count;
                result.delivered_bits += static_cast<std::uint64_t>(acc.bytes) * 8;
            }
        }
    }

    void finalize_harq(RunResult&)
    {
        // Copies scheduled past the end of the run are discarded with their first copy.
        harq_.clear();
        copies_expected_.clear();
    }

    SimulationConfig config_;
    std::vector<VehicleState> vehicles_;
    RunHooks hooks_;
    ChannelModel channel_;
    Rng channel_rng_;
    double noise_mw_;
    long epoch_ = 0;
    std::uint64_t next_packet_id_ = 0;

    std::vector<detail::UeState> ues_;
    std::vector<detail::LinkCache> links_;

    std::vector<TransmissionRecord> records_;
    std::vector<Sci> scis_;
    std::vector<char> transmitting_;
    std::vector<char> collided_;
    std::vector<double> rssi_;
    std::vector<DecodedSci> decoded_;
    std::vector<PairOutcome> outcomes_;
    std::unordered_map<std::uint64_t, int> copies_expected_;
    std::unordered_map<std::uint64_t, HarqAccumulator> harq_;
};

/// One replication on a given scenario. Deterministic for a fixed seed.
inline RunResult run(std::vector<VehicleState> scenario, const SimulationConfig& config, std::uint64_t seed,
                     RunHooks hooks = {})
{
    Simulation sim(std::move(scenario), config, seed, std::move(hooks));
    return sim.run();
}

/// Generates the freeway scenario from the seed, then runs.
inline RunResult run(const SimulationConfig& config, std::uint64_t seed, RunHooks hooks = {})
{
    config.validate();
    Rng scenario_rng(combine_seed(seed, 1));
    return run(generate_scenario(config.mobility, scenario_rng), config, seed, std::move(hooks));
}

}  // namespace cv2x

#endif
