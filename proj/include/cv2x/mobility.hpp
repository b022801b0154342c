#ifndef CV2X_MOBILITY_HPP
#define CV2X_MOBILITY_HPP

#include <algorithm>
#include <cmath>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "cv2x/common.hpp"

namespace cv2x
{

/// Straight multi-lane freeway segment with wrap-around at both ends.
/// Lanes [0, n_lanes/2) travel in +x, the rest in -x.
struct FreewayConfig
{
    double road_length_m = 2000.0;
    int n_lanes = 6;
    double lane_width_m = 4.0;
    double speed_kmh = 70.0;
    double headway_s = 2.5;
    double antenna_height_m = 1.5;

    double speed_mps() const { return speed_kmh / 3.6; }

    void validate() const
    {
        if (!(road_length_m > 0.0))
            throw ConfigError("mobility: road_length_m must be > 0");
        if (n_lanes < 2 || n_lanes % 2 != 0)
            throw ConfigError("mobility: n_lanes must be even and >= 2, got " + std::to_string(n_lanes));
        if (!(speed_kmh > 0.0))
            throw ConfigError("mobility: speed_kmh must be > 0");
        if (!(headway_s > 0.0))
            throw ConfigError("mobility: headway_s must be > 0");
        if (lane_width_m < 0.0)
            throw ConfigError("mobility: lane_width_m must be >= 0");
    }
};

struct VehicleState
{
    int id = 0;
    int lane = 0;
    double position_m = 0.0;
    int direction = 1;
    double speed_mps = 0.0;
    double antenna_height_m = 1.5;
    // Unwrapped distance travelled since generation; used for shadowing decorrelation.
    double odometer_m = 0.0;
};

/// Vehicles per km per lane: 1 / (headway * speed).
inline double lane_density_per_km(const FreewayConfig& config)
{
    if (!(config.speed_kmh > 0.0))
        throw InvalidArgument("lane_density_per_km: speed must be > 0");
    return 1000.0 / (config.headway_s * config.speed_mps());
}

inline double wrap_position(double x, double length)
{
    double r = std::fmod(x, length);
    if (r < 0.0)
        r += length;
    // fmod of a tiny negative value can round up to exactly length
    if (r >= length)
        r = 0.0;
    return r;
}

/// Homogeneous Poisson placement per lane.
inline std::vector<VehicleState> generate_scenario(const FreewayConfig& config, Rng& rng)
{
    config.validate();
    const double density = lane_density_per_km(config);
    const double mean_per_lane = density * config.road_length_m / 1000.0;

    std::vector<VehicleState> vehicles;
    int next_id = 0;
    for (int lane = 0; lane < config.n_lanes; ++lane)
    {
        const int direction = lane < config.n_lanes / 2 ? 1 : -1;
        long count = 0;
        if (mean_per_lane > 0.0)
            count = std::poisson_distribution<long>(mean_per_lane)(rng);
        std::uniform_real_distribution<double> where(0.0, config.road_length_m);
        std::vector<double> positions(static_cast<std::size_t>(count));
        for (auto& p : positions)
            p = where(rng);
        std::sort(positions.begin(), positions.end());
        for (double p : positions)
        {
            VehicleState v;
            v.id = next_id++;
            v.lane = lane;
            v.position_m = p;
            v.direction = direction;
            v.speed_mps = config.speed_mps();
            v.antenna_height_m = config.antenna_height_m;
            vehicles.push_back(v);
        }
    }
    return vehicles;
}

inline void step(std::span<VehicleState> vehicles, double dt_s, const FreewayConfig& config)
{
    if (dt_s < 0.0)
        throw InvalidArgument("mobility step: dt must be >= 0");
    for (auto& v : vehicles)
    {
        const double travelled = v.speed_mps * dt_s;
        v.position_m = wrap_position(v.position_m + v.direction * travelled, config.road_length_m);
        v.odometer_m += travelled;
    }
}

inline std::vector<VehicleState> stepped(std::vector<VehicleState> vehicles, double dt_s, const FreewayConfig& config)
{
    step(vehicles, dt_s, config);
    return vehicles;
}

/// Euclidean distance on the ring: wrapped longitudinal gap plus lane offset.
inline double distance(const VehicleState& a, const VehicleState& b, const FreewayConfig& config)
{
    double dx = std::abs(a.position_m - b.position_m);
    dx = std::min(dx, config.road_length_m - dx);
    const double dy = std::abs(a.lane - b.lane) * config.lane_width_m;
    return std::sqrt(dx * dx + dy * dy);
}

inline void write_scenario_csv(std::ostream& os, std::span<const VehicleState> vehicles)
{
    os << "id,lane,direction,position_m,speed_mps\n";
    const auto old_precision = os.precision(17);
    for (const auto& v : vehicles)
        os << v.id << ',' << v.lane << ',' << v.direction << ',' << v.position_m << ',' << v.speed_mps << '\n';
    os.precision(old_precision);
}

}  // namespace cv2x

#endif
