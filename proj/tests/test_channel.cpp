#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "cv2x/channel.hpp"

using namespace cv2x;

namespace
{

// Hand-written WINNER+ B1 LOS at 5.9 GHz, 1.5 m antennas (h' = 0.5 m).
double reference_path_loss(double d)
{
    d = std::max(d, 3.0);
    const double breakpoint = 4 * 0.5 * 0.5 * 5.9e9 / 299792458.0;
    if (d < breakpoint)
        return 22.7 * std::log10(d) + 27.0 + 20.0 * std::log10(5.9);
    return 40.0 * std::log10(d) + 7.56 - 17.3 * std::log10(0.5) - 17.3 * std::log10(0.5) + 2.7 * std::log10(5.9);
}

}  // namespace

TEST(Channel, ThermalNoise)
{
    EXPECT_NEAR(thermal_noise_dbm(2.16e6, 9.0), -101.655, 1e-3);
    EXPECT_DOUBLE_EQ(ChannelConfig{}.noise_floor_dbm_per_subchannel, thermal_noise_dbm(2.16e6, 9.0));
}

TEST(Channel, Breakpoint)
{
    EXPECT_NEAR(breakpoint_distance_m(ChannelConfig{}), 19.680, 1e-3);
}

TEST(Channel, PathLossMatchesReference)
{
    const ChannelConfig c;
    for (double d : {0.0, 1.0, 2.9, 3.0, 10.0, 19.0, 19.7, 20.0, 50.0, 100.0, 500.0, 1000.0})
        EXPECT_NEAR(path_loss_db(d, c), reference_path_loss(d), 1e-9) << d;
    EXPECT_NEAR(path_loss_db(100.0, c), 100.057, 1e-3);
    EXPECT_NEAR(path_loss_db(3.0, c), 53.25, 1e-2);
}

TEST(Channel, PathLossClampAndMonotone)
{
    const ChannelConfig c;
    const double at3 = path_loss_db(3.0, c);
    for (double d = 0.0; d < 3.0; d += 0.1)
        EXPECT_DOUBLE_EQ(path_loss_db(d, c), at3);
    double prev = at3;
    for (double d = 3.05; d <= 2000.0; d += 0.05)
    {
        const double pl = path_loss_db(d, c);
        EXPECT_GT(pl, prev) << d;
        prev = pl;
    }
}

TEST(Channel, NegativeDistanceRejected)
{
    EXPECT_THROW(path_loss_db(-1.0, ChannelConfig{}), InvalidArgument);
}

TEST(Channel, ShadowingMarginalSigma)
{
    const ChannelConfig c;
    Rng rng(1);
    const int n = 200000;
    double s = 0, ss = 0;
    for (int i = 0; i < n; ++i)
    {
        LinkShadow l;
        const double x = evolve_shadowing(l, 0.0, c, rng);
        s += x;
        ss += x * x;
    }
    const double mean = s / n;
    EXPECT_NEAR(mean, 0.0, 0.03);
    EXPECT_NEAR(std::sqrt(ss / n - mean * mean), 3.0, 0.05);
}

TEST(Channel, ShadowingStationaryAndCorrelated)
{
    const ChannelConfig c;
    Rng rng(2);
    std::normal_distribution<double> normal(0.0, 1.0);
    const int chains = 4000;
    const int length = 60;
    const double dx = 5.0;  // lag 25 m = 5 steps
    double sxy = 0, sxx = 0, syy = 0, sy = 0, sx = 0;
    double end_sq = 0;
    for (int k = 0; k < chains; ++k)
    {
        LinkShadow l;
        std::vector<double> x;
        x.push_back(evolve_shadowing(l, 0.0, c, rng, normal));
        for (int i = 1; i < length; ++i)
            x.push_back(evolve_shadowing(l, dx, c, rng, normal));
        for (int i = 0; i + 5 < length; ++i)
        {
            sx += x[i];
            sy += x[i + 5];
            sxx += x[i] * x[i];
            syy += x[i + 5] * x[i + 5];
            sxy += x[i] * x[i + 5];
        }
        end_sq += x.back() * x.back();
    }
    const double n = chains * (length - 5.0);
    const double cov = sxy / n - (sx / n) * (sy / n);
    const double r = cov / std::sqrt((sxx / n - sx * sx / n / n) * (syy / n - sy * sy / n / n));
    EXPECT_NEAR(r, std::exp(-1.0), 0.02);
    EXPECT_NEAR(std::sqrt(end_sq / chains), 3.0, 0.15);
}

TEST(Channel, ZeroDisplacementKeepsValue)
{
    const ChannelConfig c;
    Rng rng(3);
    LinkShadow l;
    const double a = evolve_shadowing(l, 0.0, c, rng);
    EXPECT_DOUBLE_EQ(evolve_shadowing(l, 0.0, c, rng), a);
}

TEST(Channel, ShadowingMapIsSymmetric)
{
    const ChannelConfig c;
    ShadowingMap m(4);
    Rng rng(4);
    VehicleState a, b;
    a.id = 1;
    b.id = 3;
    const double ab = m.shadowing_db(a, b, c, rng);
    EXPECT_DOUBLE_EQ(m.shadowing_db(b, a, c, rng), ab);  // no movement in between
    EXPECT_EQ(&m.link(1, 3), &m.link(3, 1));
    EXPECT_THROW(m.link(2, 2), InvalidArgument);
    EXPECT_THROW(m.link(0, 4), InvalidArgument);
}

TEST(Channel, ReceivedPowerEnsembleMean)
{
    FreewayConfig road;
    ChannelConfig c;
    VehicleState tx, rx;
    tx.id = 0;
    rx.id = 1;
    rx.position_m = 100.0;
    double sum = 0;
    const int n = 20000;
    Rng rng(5);
    for (int k = 0; k < n; ++k)
    {
        ChannelModel model(c, road, 2);
        sum += model.rx_power_dbm(tx, rx, rng);
    }
    EXPECT_NEAR(sum / n, 23.0 - reference_path_loss(100.0), 0.1);
}

TEST(Channel, SameVehicleRejected)
{
    ChannelModel model(ChannelConfig{}, FreewayConfig{}, 2);
    VehicleState v;
    Rng rng(1);
    EXPECT_THROW(model.rx_power_dbm(v, v, rng), InvalidArgument);
}

TEST(Channel, ConfigValidation)
{
    ChannelConfig c;
    c.decorrelation_m = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = ChannelConfig{};
    c.antenna_height_m = 1.0;
    EXPECT_THROW(c.validate(), ConfigError);
}
