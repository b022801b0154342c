#ifndef CV2X_GRID_HPP
#define CV2X_GRID_HPP

#include <compare>
#include <cstddef>
#include <string>
#include <vector>

#include "cv2x/common.hpp"

namespace cv2x
{

inline constexpr double kResourceBlockBandwidthHz = 180e3;

enum class PoolAdjacency
{
    Adjacent,  // SCI in the first two RBs of the first data subchannel
};

/// Sidelink resource pool: whole subchannels in frequency, 1 ms subframes in time.
struct GridConfig
{
    int n_subchannels = 4;
    int rbs_per_subchannel = 12;
    double tti_ms = 1.0;
    PoolAdjacency adjacency = PoolAdjacency::Adjacent;

    double subchannel_bandwidth_hz() const { return rbs_per_subchannel * kResourceBlockBandwidthHz; }

    void validate() const
    {
        if (n_subchannels < 1)
            throw ConfigError("grid: n_subchannels must be >= 1, got " + std::to_string(n_subchannels));
        // 2 RBs of SCI plus at least one data RB
        if (rbs_per_subchannel < 3)
            throw ConfigError("grid: rbs_per_subchannel must be >= 3, got " +
                              std::to_string(rbs_per_subchannel));
        if (tti_ms != 1.0)
            throw ConfigError("grid: only a 1 ms TTI is supported");
    }
};

/// L contiguous subchannels in one subframe.
struct CandidateResource
{
    Subframe subframe = 0;
    int first_subchannel = 0;
    int length_subchannels = 1;

    int end_subchannel() const { return first_subchannel + length_subchannels; }

    bool overlaps_subchannels(const CandidateResource& other) const
    {
        return first_subchannel < other.end_subchannel() && other.first_subchannel < end_subchannel();
    }

    bool overlaps(const CandidateResource& other) const
    {
        return subframe == other.subframe && overlaps_subchannels(other);
    }

    bool fits(const GridConfig& grid) const
    {
        return first_subchannel >= 0 && length_subchannels >= 1 && end_subchannel() <= grid.n_subchannels;
    }

    friend auto operator<=>(const CandidateResource&, const CandidateResource&) = default;
};

/// Subframes [anchor + t1, anchor + t2], inclusive.
struct SelectionWindow
{
    int t1 = 4;
    int t2 = 20;
    Subframe anchor = 0;

    Subframe first() const { return anchor + t1; }
    Subframe last() const { return anchor + t2; }
    int span() const { return t2 - t1 + 1; }
    bool contains(Subframe sf) const { return sf >= first() && sf <= last(); }

    void validate() const
    {
        if (t1 < 1 || t2 < t1)
            throw ConfigError("selection window: need 1 <= t1 <= t2, got t1=" + std::to_string(t1) +
                              " t2=" + std::to_string(t2));
    }
};

/// All length-L single-subframe resources in the window, ordered by
/// (subframe, first_subchannel).
inline std::vector<CandidateResource> enumerate_candidates(const SelectionWindow& window, const GridConfig& grid,
                                                           int length)
{
    window.validate();
    grid.validate();
    if (length < 1 || length > grid.n_subchannels)
        throw InvalidArgument("enumerate_candidates: length " + std::to_string(length) +
                              " does not fit a grid of " + std::to_string(grid.n_subchannels) + " subchannels");

    const int per_subframe = grid.n_subchannels - length + 1;
    std::vector<CandidateResource> out;
    out.reserve(static_cast<std::size_t>(window.span()) * static_cast<std::size_t>(per_subframe));
    for (Subframe sf = window.first(); sf <= window.last(); ++sf)
        for (int first = 0; first < per_subframe; ++first)
            out.push_back({sf, first, length});
    return out;
}

/// M: number of length-1 resources in the window.
inline std::size_t total_single_subframe_resources(const SelectionWindow& window, const GridConfig& grid)
{
    window.validate();
    grid.validate();
    return static_cast<std::size_t>(window.span()) * static_cast<std::size_t>(grid.n_subchannels);
}

}  // namespace cv2x

#endif
