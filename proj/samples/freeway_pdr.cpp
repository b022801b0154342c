// Single replication on the default freeway; prints PDR for a few reservation intervals.

#include <cstdio>
#include <cstdlib>

#include "cv2x/cv2x.hpp"

int main(int argc, char** argv)
{
    const double speed = argc > 1 ? std::atof(argv[1]) : 70.0;

    cv2x::SimulationConfig config;
    config.mobility.speed_kmh = speed;
    config.engine.duration_ms = 5000;

    std::printf("speed %.0f km/h\n", speed);
    for (int rri : {100, 500, 1000})
    {
        config.engine.reservation_interval_ms = rri;
        const auto r = cv2x::run(config, 42);
        const auto pdr = cv2x::compute_pdr(r.stats);
        std::printf("rri %4d ms  vehicles %3d  pdr %.3f  [%.3f, %.3f]\n", rri, r.n_vehicles, pdr->value,
                    pdr->ci_low, pdr->ci_high);
    }
}
