// Straight-line reference for candidate selection. Works on plain lists,
// shares no code with the library beyond the result types.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <tuple>
#include <vector>

namespace oracle
{

struct SensedSci
{
    std::int64_t subframe = 0;  // where it was decoded
    int rri_ms = 100;
    int first = 0;
    int length = 1;
    int retx_gap = 0;
    int retx_first = 0;
    double rsrp_dbm = 0.0;
};

struct SensedSubframe
{
    std::int64_t subframe = 0;
    bool monitored = true;
    std::vector<double> rssi_dbm;
};

struct Instance
{
    int n_subchannels = 4;
    int length = 1;
    int t1 = 4;
    int t2 = 20;
    std::int64_t now = 0;
    int rri_ms = 100;
    double th0_dbm = -110.0;
    double step_db = 3.0;
    // Only what is still inside the sensing window.
    std::vector<SensedSubframe> history;
    std::vector<SensedSci> scis;
};

struct Candidate
{
    std::int64_t subframe;
    int first;
    int length;
};

struct Result
{
    std::vector<Candidate> selected;
    double threshold_dbm = 0.0;
};

inline bool hits(std::int64_t from, int period, std::int64_t target)
{
    // target == from + q * period for some q >= 1
    return target > from && (target - from) % period == 0;
}

inline Result select(const Instance& in)
{
    std::vector<Candidate> all;
    for (std::int64_t sf = in.now + in.t1; sf <= in.now + in.t2; ++sf)
        for (int f = 0; f + in.length <= in.n_subchannels; ++f)
            all.push_back({sf, f, in.length});

    const auto find = [&](std::int64_t sf) -> const SensedSubframe* {
        for (const auto& h : in.history)
            if (h.subframe == sf)
                return &h;
        return nullptr;
    };

    struct Info
    {
        bool skipped = false;
        double average = 0.0;
        double rsrp = -std::numeric_limits<double>::infinity();
    };
    std::vector<Info> info(all.size());
    for (std::size_t i = 0; i < all.size(); ++i)
    {
        const auto& c = all[i];
        double sum = 0.0;
        int count = 0;
        for (int j = 1; j <= 10; ++j)
        {
            const auto* h = find(c.subframe - 100 * j);
            if (!h)
                continue;
            if (!h->monitored)
            {
                info[i].skipped = true;
                break;
            }
            for (int ch = c.first; ch < c.first + c.length; ++ch)
            {
                sum += std::pow(10.0, h->rssi_dbm[ch] / 10.0);
                ++count;
            }
        }
        info[i].average = count ? sum / count : 0.0;

        for (const auto& s : in.scis)
        {
            const auto overlap = [&](int first) { return first < c.first + c.length && c.first < first + s.length; };
            if (overlap(s.first) && hits(s.subframe, s.rri_ms, c.subframe))
                info[i].rsrp = std::max(info[i].rsrp, s.rsrp_dbm);
            if (s.retx_gap != 0 && overlap(s.retx_first) && hits(s.subframe + s.retx_gap, s.rri_ms, c.subframe))
                info[i].rsrp = std::max(info[i].rsrp, s.rsrp_dbm);
        }
    }

    const std::size_t need = (all.size() + 4) / 5;  // ceil(M / 5)
    double th = in.th0_dbm;
    std::vector<std::size_t> keep;
    for (;;)
    {
        keep.clear();
        bool any_above = false;
        for (std::size_t i = 0; i < all.size(); ++i)
        {
            if (info[i].skipped)
                continue;
            if (info[i].rsrp > th)
                any_above = true;
            else
                keep.push_back(i);
        }
        if (keep.size() >= need || !any_above)
            break;
        th += in.step_db;
    }

    std::sort(keep.begin(), keep.end(), [&](std::size_t a, std::size_t b) {
        return std::tie(info[a].average, all[a].subframe, all[a].first) <
               std::tie(info[b].average, all[b].subframe, all[b].first);
    });
    Result r;
    r.threshold_dbm = th;
    for (std::size_t k = 0; k < std::min(need, keep.size()); ++k)
        r.selected.push_back(all[keep[k]]);
    return r;
}

}  // namespace oracle
