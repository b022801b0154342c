#ifndef CV2X_CHANNEL_HPP
#define CV2X_CHANNEL_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "cv2x/common.hpp"
#include "cv2x/mobility.hpp"

namespace cv2x
{

inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kThermalNoiseDbmPerHz = -174.0;

inline double thermal_noise_dbm(double bandwidth_hz, double noise_figure_db)
{
    return kThermalNoiseDbmPerHz + 10.0 * std::log10(bandwidth_hz) + noise_figure_db;
}

struct ChannelConfig
{
    double carrier_hz = 5.9e9;
    double tx_power_dbm = 23.0;
    double shadow_sigma_db = 3.0;
    double decorrelation_m = 25.0;
    double min_distance_m = 3.0;
    double antenna_height_m = 1.5;
    // kT*B over one 12-RB subchannel (2.16 MHz) plus a 9 dB noise figure.
    double noise_floor_dbm_per_subchannel = thermal_noise_dbm(2.16e6, 9.0);

    void validate() const
    {
        if (!(carrier_hz > 0.0))
            throw ConfigError("channel: carrier_hz must be > 0");
        if (shadow_sigma_db < 0.0)
            throw ConfigError("channel: shadow_sigma_db must be >= 0");
        if (!(decorrelation_m > 0.0))
            throw ConfigError("channel: decorrelation_m must be > 0");
        if (!(min_distance_m > 0.0))
            throw ConfigError("channel: min_distance_m must be > 0");
        if (!(antenna_height_m > 1.0))
            throw ConfigError("channel: antenna_height_m must exceed the 1 m effective-height offset");
    }
};

/// WINNER+ B1 (urban micro) line-of-sight coefficients, as published in
/// WINNER+ D5.3 and reused by 3GPP TR 36.885 for V2V links:
///
///   d <  d'BP : PL = 22.7 log10(d) + 27.0 + 20 log10(fc)
///   d >= d'BP : PL = 40.0 log10(d) + 7.56 - 17.3 log10(h'tx) - 17.3 log10(h'rx) + 2.7 log10(fc)
///
/// with fc in GHz, d in metres, h' = h - 1 m, d'BP = 4 h'tx h'rx fc / c.
struct WinnerB1LosCoefficients
{
    double near_slope = 22.7;
    double near_intercept = 27.0;
    double near_frequency = 20.0;
    double far_slope = 40.0;
    double far_intercept = 7.56;
    double far_height = -17.3;
    double far_frequency = 2.7;
    double effective_height_offset_m = 1.0;
};

inline constexpr WinnerB1LosCoefficients kWinnerB1Los{};

inline double breakpoint_distance_m(const ChannelConfig& config)
{
    const double h = config.antenna_height_m - kWinnerB1Los.effective_height_offset_m;
    return 4.0 * h * h * config.carrier_hz / kSpeedOfLight;
}

inline double path_loss_db(double distance_m, const ChannelConfig& config)
{
    if (!(distance_m >= 0.0))
        throw InvalidArgument("path_loss_db: distance must be >= 0, got " + std::to_string(distance_m));
    const auto& c = kWinnerB1Los;
    const double d = std::max(distance_m, config.min_distance_m);
    const double fc_ghz = config.carrier_hz / 1e9;
    if (d < breakpoint_distance_m(config))
        return c.near_slope * std::log10(d) + c.near_intercept + c.near_frequency * std::log10(fc_ghz);
    const double h = config.antenna_height_m - c.effective_height_offset_m;
    return c.far_slope * std::log10(d) + c.far_intercept + 2.0 * c.far_height * std::log10(h) +
           c.far_frequency * std::log10(fc_ghz);
}

struct LinkShadow
{
    double value_db = 0.0;
    // Sum of both endpoint odometers at the last refresh.
    double odometer_sum_m = 0.0;
    bool initialized = false;
};

/// Gauss-Markov update of one link: S' = rho S + sqrt(1 - rho^2) N(0, sigma^2),
/// rho = exp(-displacement / decorrelation). First call draws from the marginal.
inline double evolve_shadowing(LinkShadow& link, double displacement_m, const ChannelConfig& config, Rng& rng,
                               std::normal_distribution<double>& normal)
{
    if (!link.initialized)
    {
        link.value_db = config.shadow_sigma_db * normal(rng);
        link.initialized = true;
        return link.value_db;
    }
    if (displacement_m > 0.0)
    {
        const double rho = std::exp(-displacement_m / config.decorrelation_m);
        link.value_db = rho * link.value_db + std::sqrt(1.0 - rho * rho) * config.shadow_sigma_db * normal(rng);
    }
    return link.value_db;
}

inline double evolve_shadowing(LinkShadow& link, double displacement_m, const ChannelConfig& config, Rng& rng)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    return evolve_shadowing(link, displacement_m, config, rng, normal);
}

/// Shadowing per unordered vehicle pair, shared by both link directions.
class ShadowingMap
{
public:
    explicit ShadowingMap(std::size_t n_vehicles = 0) { resize(n_vehicles); }

    void resize(std::size_t n_vehicles)
    {
        n_ = n_vehicles;
        links_.assign(n_ * (n_ > 0 ? n_ - 1 : 0) / 2, LinkShadow{});
    }

    std::size_t vehicle_count() const { return n_; }

    LinkShadow& link(int a, int b)
    {
        auto i = static_cast<std::size_t>(std::min(a, b));
        auto j = static_cast<std::size_t>(std::max(a, b));
        if (i == j || j >= n_)
            throw InvalidArgument("shadowing: invalid link " + std::to_string(a) + "-" + std::to_string(b));
        return links_[i * n_ - i * (i + 1) / 2 + (j - i - 1)];
    }

    /// Refreshes the (a, b) link for the endpoints' current odometers.
    double shadowing_db(const VehicleState& a, const VehicleState& b, const ChannelConfig& config, Rng& rng)
    {
        auto& l = link(a.id, b.id);
        const double odo = a.odometer_m + b.odometer_m;
        const double moved = l.initialized ? odo - l.odometer_sum_m : 0.0;
        l.odometer_sum_m = odo;
        return evolve_shadowing(l, moved, config, rng, normal_);
    }

private:
    std::size_t n_ = 0;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::vector<LinkShadow> links_;
};

/// Received power between vehicles on a freeway; no fast fading.
class ChannelModel
{
public:
    ChannelModel(ChannelConfig config, FreewayConfig road, std::size_t n_vehicles)
        : config_(config), road_(road), shadowing_(n_vehicles)
    {
        config_.validate();
    }

    const ChannelConfig& config() const { return config_; }

    double rx_power_dbm(const VehicleState& tx, const VehicleState& rx, Rng& rng)
    {
        if (tx.id == rx.id)
            throw InvalidArgument("rx_power_dbm: transmitter and receiver are the same vehicle");
        const double pl = path_loss_db(distance(tx, rx, road_), config_);
        return config_.tx_power_dbm - pl + shadowing_.shadowing_db(tx, rx, config_, rng);
    }

private:
    ChannelConfig config_;
    FreewayConfig road_;
    ShadowingMap shadowing_;
};

}  // namespace cv2x

#endif
