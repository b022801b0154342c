#include <map>
#include <random>

#include <gtest/gtest.h>

#include "cv2x/sps.hpp"
#include "oracle/sps_instances.hpp"

using namespace cv2x;

TEST(SensingDatabase, RejectsOutOfOrderSubframes)
{
    SensingDatabase db(2);
    const std::vector<double> rssi{-100, -100};
    db.record_subframe(5, rssi, {}, true);
    EXPECT_THROW(db.record_subframe(5, rssi, {}, true), SequenceError);
    EXPECT_THROW(db.record_subframe(4, rssi, {}, true), SequenceError);
    EXPECT_THROW(db.record_subframe(6, std::vector<double>{-100}, {}, true), InvalidArgument);
}

TEST(SensingDatabase, StoresDbmAsLinear)
{
    SensingDatabase db(2);
    db.record_subframe(0, std::vector<double>{-90, -60}, {}, true);
    EXPECT_NEAR(db.rssi_mw(0, 0), 1e-9, 1e-21);
    EXPECT_NEAR(db.rssi_dbm(0, 1), -60.0, 1e-9);
}

TEST(SensingDatabase, RingMatchesUnboundedReference)
{
    const int window = 1000;
    SensingDatabase db(3, window);
    struct Entry
    {
        bool monitored;
        std::vector<double> rssi;
        int scis;
    };
    std::map<Subframe, Entry> all;
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Subframe sf = 0;
    for (int k = 0; k < 2600; ++k)
    {
        sf += 1 + (u(rng) < 0.1 ? 3 : 0);  // occasional gaps
        Entry e{u(rng) > 0.05, {}, static_cast<int>(u(rng) * 3)};
        std::vector<DecodedSci> scis(static_cast<std::size_t>(e.scis));
        for (int ch = 0; ch < 3; ++ch)
            e.rssi.push_back(-120 + 50 * u(rng));
        db.record_subframe(sf, e.rssi, scis, e.monitored);
        all[sf] = e;

        if (k % 97 != 0)
            continue;
        for (Subframe q = sf - 1200; q <= sf + 2; ++q)
        {
            const auto it = all.find(q);
            const bool held = it != all.end() && q > sf - window;
            const auto state = db.state(q);
            if (!held)
            {
                EXPECT_EQ(state, SensingState::Absent) << q;
                continue;
            }
            EXPECT_EQ(state, it->second.monitored ? SensingState::Monitored : SensingState::NotMonitored) << q;
            if (it->second.monitored)
            {
                EXPECT_EQ(db.decoded(q).size(), static_cast<std::size_t>(it->second.scis));
                for (int ch = 0; ch < 3; ++ch)
                    EXPECT_NEAR(db.rssi_dbm(q, ch), it->second.rssi[static_cast<std::size_t>(ch)], 1e-9);
            }
            else
                EXPECT_TRUE(db.decoded(q).empty());
        }
    }
}

namespace
{

SensingDatabase quiet_history(int n_subchannels, Subframe until, double dbm = -100.0)
{
    SensingDatabase db(n_subchannels);
    const std::vector<double> rssi(static_cast<std::size_t>(n_subchannels), dbm);
    for (Subframe sf = std::max<Subframe>(0, until - 1000); sf < until; ++sf)
        db.record_subframe(sf, rssi, {}, true);
    return db;
}

}  // namespace

TEST(Selection, EmptyHistoryKeepsTwentyPercentInOrder)
{
    SensingDatabase db(4);
    const auto r = select_candidates(db, SpsConfig{}, GridConfig{}, 1000, 1, 100);
    EXPECT_EQ(r.total, 68u);
    EXPECT_EQ(r.remaining, 68u);
    EXPECT_EQ(r.selected.size(), 14u);
    EXPECT_DOUBLE_EQ(r.threshold_dbm, -110.0);
    EXPECT_EQ(r.selected.front(), (CandidateResource{1004, 0, 1}));
    EXPECT_EQ(r.selected.back(), (CandidateResource{1007, 1, 1}));
}

TEST(Selection, ReservationAboveThresholdIsExcluded)
{
    auto db = quiet_history(4, 1000);
    // Rebuild with one decoded SCI at 910 announcing 100 ms on subchannel 2.
    SensingDatabase db2(4);
    const std::vector<double> rssi(4, -100.0);
    for (Subframe sf = 0; sf < 1000; ++sf)
    {
        std::vector<DecodedSci> scis;
        if (sf == 910)
        {
            Sci sci;
            sci.first_subchannel = 2;
            scis.push_back({sci, -95.0});
        }
        db2.record_subframe(sf, rssi, scis, true);
    }
    const auto r = select_candidates(db2, SpsConfig{}, GridConfig{}, 1000, 2, 100);
    EXPECT_EQ(r.total, 51u);
    EXPECT_EQ(r.remaining, 49u);  // (1010, 1) and (1010, 2) overlap subchannel 2
    for (const auto& c : r.selected)
        EXPECT_FALSE(c.subframe == 1010 && c.first_subchannel >= 1 && c.first_subchannel <= 2);
    EXPECT_EQ(select_candidates(db, SpsConfig{}, GridConfig{}, 1000, 2, 100).remaining, 51u);
}

TEST(Selection, ThresholdRisesUntilEnoughSurvive)
{
    SensingDatabase db(1);
    for (Subframe sf = 0; sf < 1000; ++sf)
    {
        std::vector<DecodedSci> scis;
        // every subframe of the next window is reserved at -100 dBm
        if (sf >= 904 && sf <= 920)
            scis.push_back({Sci{}, -100.0});
        db.record_subframe(sf, std::vector<double>{-100.0}, scis, true);
    }
    GridConfig g;
    g.n_subchannels = 1;
    const auto r = select_candidates(db, SpsConfig{}, g, 1000, 1, 100);
    EXPECT_DOUBLE_EQ(r.threshold_dbm, -110.0 + 4 * 3.0);  // -98 > -100
    EXPECT_EQ(r.threshold_steps, 4);
    EXPECT_EQ(r.remaining, 17u);
    EXPECT_EQ(r.selected.size(), 4u);
}

TEST(Selection, UnmonitoredSubframeExcludesItsProjections)
{
    SensingDatabase db(2);
    const std::vector<double> rssi(2, -100.0);
    for (Subframe sf = 0; sf < 1000; ++sf)
        db.record_subframe(sf, rssi, {}, sf != 710);  // own transmission at 710
    GridConfig g;
    g.n_subchannels = 2;
    const auto r = select_candidates(db, SpsConfig{}, g, 1000, 1, 100);
    EXPECT_EQ(r.total, 34u);
    EXPECT_EQ(r.remaining, 32u);
    for (const auto& c : r.selected)
        EXPECT_NE(c.subframe, 1010);
}

TEST(Selection, LowestAverageRssiWins)
{
    SensingDatabase db(2);
    for (Subframe sf = 0; sf < 1000; ++sf)
        db.record_subframe(sf, std::vector<double>{-80.0, sf % 100 == 15 ? -110.0 : -90.0}, {}, true);
    GridConfig g;
    g.n_subchannels = 2;
    const auto r = select_candidates(db, SpsConfig{}, g, 1000, 1, 100);
    ASSERT_EQ(r.selected.size(), 7u);
    EXPECT_EQ(r.selected.front(), (CandidateResource{1015, 1, 1}));
    for (std::size_t i = 1; i < r.selected.size(); ++i)
        EXPECT_EQ(r.selected[i].first_subchannel, 1);
}

TEST(Selection, InvalidInputs)
{
    SensingDatabase db(4);
    EXPECT_THROW(select_candidates(db, SpsConfig{}, GridConfig{}, 0, 5, 100), InvalidArgument);
    EXPECT_THROW(select_candidates(db, SpsConfig{}, GridConfig{}, 0, 1, 150), InvalidArgument);
    GridConfig g;
    g.n_subchannels = 3;
    EXPECT_THROW(select_candidates(db, SpsConfig{}, g, 0, 1, 100), ConfigError);
    SpsConfig c;
    c.keep_probability = 0.9;
    EXPECT_THROW(select_candidates(db, c, GridConfig{}, 0, 1, 100), ConfigError);
}

TEST(Selection, CeilFraction)
{
    EXPECT_EQ(ceil_fraction(0.2, 65), 13u);
    EXPECT_EQ(ceil_fraction(0.2, 68), 14u);
    EXPECT_EQ(ceil_fraction(0.2, 51), 11u);
    EXPECT_EQ(ceil_fraction(0.2, 1), 1u);
    for (std::size_t n = 1; n < 5000; ++n)
        EXPECT_EQ(ceil_fraction(0.2, n), (n + 4) / 5) << n;
}

TEST(Selection, AgreesWithBruteForceOracle)
{
    std::mt19937_64 rng(2024);
    for (int k = 0; k < 200; ++k)
    {
        const auto in = oracle::random_instance(rng);
        EXPECT_EQ(oracle::compare_with_library(in), "") << "instance " << k;
    }
}

TEST(Sci, Validation)
{
    Sci s;
    EXPECT_NO_THROW(s.validate());
    s.retx_gap_sf = 16;
    EXPECT_THROW(s.validate(), InvalidArgument);
    s = Sci{};
    s.reservation_interval_ms = 30;
    EXPECT_THROW(s.validate(), InvalidArgument);
    EXPECT_TRUE(is_valid_reservation_interval(20));
    EXPECT_TRUE(is_valid_reservation_interval(1000));
    EXPECT_FALSE(is_valid_reservation_interval(1100));
}
