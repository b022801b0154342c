#include <map>
#include <set>

#include <gtest/gtest.h>

#include "cv2x/engine.hpp"

using namespace cv2x;

namespace
{

std::vector<VehicleState> line_of_vehicles(int n, double spacing_m)
{
    std::vector<VehicleState> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
    {
        v[static_cast<std::size_t>(i)].id = i;
        v[static_cast<std::size_t>(i)].position_m = 100.0 + spacing_m * i;
        v[static_cast<std::size_t>(i)].speed_mps = 70 / 3.6;
    }
    return v;
}

SimulationConfig short_config(Subframe duration = 3000)
{
    SimulationConfig c;
    c.engine.duration_ms = duration;
    c.engine.warmup_ms = 500;
    return c;
}

// First subframe >= now + 4 with the given phase in a 100 ms period.
Subframe next_with_phase(Subframe now, int phase)
{
    Subframe sf = (now + 4) / 100 * 100 + phase;
    if (sf < now + 4)
        sf += 100;
    return sf;
}

}  // namespace

TEST(Pdr, WilsonInterval)
{
    const auto e = compute_pdr(PdrStats{80, 68});
    ASSERT_TRUE(e);
    EXPECT_DOUBLE_EQ(e->value, 0.85);
    // Wilson 95 %: centre (p + z^2/2n)/(1 + z^2/n), z = 1.96
    EXPECT_NEAR(e->ci_low, 0.7555, 1e-3);
    EXPECT_NEAR(e->ci_high, 0.9121, 1e-3);
    EXPECT_FALSE(compute_pdr(PdrStats{}));
    EXPECT_FALSE(PdrStats{}.pdr());
}

TEST(Reception, DisjointSubchannelsSucceed)
{
    const auto v = line_of_vehicles(3, 50);
    const std::vector<TransmissionRecord> r{{10, 0, 1, 0, 1, 190}, {10, 1, 1, 1, 2, 190}};
    const auto out = evaluate_reception(r, v);
    ASSERT_EQ(out.size(), 4u);  // each record reaches the two other vehicles
    for (const auto& o : out)
    {
        EXPECT_TRUE(o.success);
        EXPECT_NE(o.receiver_id, r[o.record].tx_id);
    }
}

TEST(Reception, PartialOverlapCollides)
{
    const auto v = line_of_vehicles(3, 50);
    const std::vector<TransmissionRecord> r{{10, 0, 2, 0, 1, 300}, {10, 1, 1, 1, 2, 190}};
    for (const auto& o : evaluate_reception(r, v))
        EXPECT_FALSE(o.success);
}

TEST(Reception, ThreePackets)
{
    const auto v = line_of_vehicles(4, 50);
    const std::vector<TransmissionRecord> r{
        {10, 0, 2, 0, 1, 300}, {10, 1, 1, 1, 2, 190}, {10, 2, 1, 2, 3, 190}};
    std::map<std::size_t, std::set<bool>> by_record;
    for (const auto& o : evaluate_reception(r, v))
        by_record[o.record].insert(o.success);
    EXPECT_EQ(by_record[0], std::set<bool>{false});
    EXPECT_EQ(by_record[1], std::set<bool>{false});
    EXPECT_EQ(by_record[2], std::set<bool>{true});
}

TEST(Reception, HalfDuplexCountingIsOptional)
{
    const auto v = line_of_vehicles(3, 50);
    const std::vector<TransmissionRecord> r{{10, 0, 1, 0, 1, 190}, {10, 1, 1, 1, 2, 190}};
    ReceptionRules rules;
    rules.count_half_duplex_losses = true;
    int ok = 0;
    for (const auto& o : evaluate_reception(r, v, rules))
        ok += o.success;
    EXPECT_EQ(ok, 2);  // only vehicle 2 receives
}

TEST(Reception, RangeLimit)
{
    const auto v = line_of_vehicles(3, 400);
    ReceptionRules rules;
    rules.max_range_m = 500;
    const std::vector<TransmissionRecord> r{{10, 0, 1, 0, 1, 190}};
    EXPECT_EQ(evaluate_reception(r, v, rules).size(), 1u);
    EXPECT_EQ(evaluate_reception(r, v).size(), 2u);
}

TEST(Engine, SingleVehicleHasNoPairs)
{
    const auto r = run(line_of_vehicles(1, 0), short_config(), 1);
    EXPECT_EQ(r.stats.tx_pair_count, 0u);
    EXPECT_FALSE(r.stats.pdr());
    EXPECT_GT(r.packets_transmitted, 0u);
}

TEST(Engine, ForcedDisjointGrantsAlwaysDeliver)
{
    auto c = short_config();
    c.traffic.pattern_bytes = {190};
    RunHooks hooks;
    hooks.override_grant = [](int ue, Subframe now, const SpsGrant& picked) {
        SpsGrant g = picked;
        g.resource = {next_with_phase(now, 50), ue, 1};
        return std::optional<SpsGrant>(g);
    };
    const auto r = run(line_of_vehicles(2, 30), c, 5, hooks);
    EXPECT_GT(r.stats.tx_pair_count, 40u);
    EXPECT_EQ(r.stats.rx_success_count, r.stats.tx_pair_count);
    EXPECT_EQ(r.packets_dropped, 0u);
}

TEST(Engine, ForcedSharedGrantAlwaysCollides)
{
    auto c = short_config();
    c.traffic.pattern_bytes = {190};
    RunHooks hooks;
    hooks.override_grant = [](int, Subframe now, const SpsGrant& picked) {
        SpsGrant g = picked;
        g.resource = {next_with_phase(now, 50), 0, 1};
        return std::optional<SpsGrant>(g);
    };
    const auto r = run(line_of_vehicles(2, 30), c, 5, hooks);
    EXPECT_GT(r.stats.tx_pair_count, 40u);
    EXPECT_EQ(r.stats.rx_success_count, 0u);
}

TEST(Engine, Deterministic)
{
    auto c = short_config(2500);
    c.mobility.headway_s = 10;
    const auto a = run(c, 77);
    const auto b = run(c, 77);
    EXPECT_EQ(a, b);
    EXPECT_NE(run(c, 78).stats, a.stats);
}

TEST(Engine, TransmissionsKeepTheGrantPeriod)
{
    auto c = short_config(4000);
    c.mobility.headway_s = 10;
    c.engine.reservation_interval_ms = 200;
    c.traffic.pattern_bytes = {190};
    std::map<int, Subframe> last_tx;
    std::map<int, bool> fresh;
    int checked = 0;
    RunHooks hooks;
    hooks.on_selection = [&](int ue, Subframe, const SelectionResult&, const SpsGrant&) { fresh[ue] = true; };
    hooks.on_transmission = [&](const TransmissionRecord& rec) {
        if (!fresh[rec.tx_id] && last_tx.count(rec.tx_id))
        {
            EXPECT_EQ(rec.subframe - last_tx[rec.tx_id], 200);
            ++checked;
        }
        fresh[rec.tx_id] = false;
        last_tx[rec.tx_id] = rec.subframe;
    };
    run(c, 3, hooks);
    EXPECT_GT(checked, 100);
}

TEST(Engine, OwnTransmissionsAreNotMonitored)
{
    auto c = short_config(2000);
    c.mobility.headway_s = 10;
    std::set<Subframe> own;
    RunHooks hooks;
    hooks.on_transmission = [&](const TransmissionRecord& rec) {
        if (rec.tx_id == 0)
            own.insert(rec.subframe);
    };
    Rng rng(combine_seed(9, 1));
    Simulation sim(generate_scenario(c.mobility, rng), c, 9, hooks);
    sim.run();
    const auto& db = sim.sensing_database(0);
    int seen = 0;
    for (Subframe sf = 1000; sf < 2000; ++sf)
    {
        const auto expected = own.count(sf) ? SensingState::NotMonitored : SensingState::Monitored;
        EXPECT_EQ(db.state(sf), expected) << sf;
        seen += own.count(sf) > 0;
    }
    EXPECT_GT(seen, 5);
}

TEST(Engine, HarqRunsAndAnnouncesPairs)
{
    auto c = short_config(2500);
    c.mobility.headway_s = 10;
    c.sps.harq_enabled = true;
    int with_retx = 0;
    RunHooks hooks;
    hooks.on_selection = [&](int, Subframe, const SelectionResult&, const SpsGrant& g) {
        if (g.retx)
        {
            ++with_retx;
            EXPECT_GT(g.retx_offset(), 0);
            EXPECT_LE(g.retx_offset(), 15);
        }
    };
    const auto r = run(c, 4, hooks);
    EXPECT_GT(with_retx, 0);
    ASSERT_TRUE(r.stats.pdr());
    EXPECT_GT(*r.stats.pdr(), 0.0);
    EXPECT_LE(*r.stats.pdr(), 1.0);
}

TEST(Engine, PacketAccounting)
{
    auto c = short_config(3000);
    const auto r = run(c, 12);
    EXPECT_GT(r.n_vehicles, 150);
    EXPECT_LE(r.packets_transmitted + r.packets_dropped, r.packets_generated + static_cast<std::uint64_t>(r.n_vehicles));
    EXPECT_GT(r.packets_transmitted, r.packets_generated * 9 / 10);
    EXPECT_GT(r.delivered_throughput_bps, 0.0);
}

TEST(Engine, ConfigValidation)
{
    auto c = short_config();
    c.traffic.inter_arrival_ms = 200;
    EXPECT_THROW(run(c, 1), ConfigError);

    c = short_config();
    c.grid.n_subchannels = 1;  // 300 B packets need two
    EXPECT_THROW(run(c, 1), ConfigError);

    c = short_config();
    c.engine.reservation_interval_ms = 150;
    EXPECT_THROW(run(c, 1), ConfigError);

    c = short_config();
    c.channel.antenna_height_m = 2.0;
    EXPECT_THROW(run(c, 1), ConfigError);

    auto v = line_of_vehicles(2, 10);
    v[1].id = 5;
    EXPECT_THROW(run(v, short_config(), 1), ConfigError);
}
