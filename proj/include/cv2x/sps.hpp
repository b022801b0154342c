#ifndef CV2X_SPS_HPP
#define CV2X_SPS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cv2x/common.hpp"
#include "cv2x/grid.hpp"

namespace cv2x
{

enum class Mcs
{
    QpskHalfRate,
};

/// Reservation intervals a Mode 4 UE may announce: 20, 50 and 100..1000 ms in steps of 100.
inline bool is_valid_reservation_interval(int ms)
{
    return ms == 20 || ms == 50 || (ms >= 100 && ms <= 1000 && ms % 100 == 0);
}

/// SCI format 1 as far as resource selection needs it.
struct Sci
{
    int reservation_interval_ms = 100;
    int first_subchannel = 0;
    int length_subchannels = 1;
    // Offset of the paired (re)transmission in subframes; 0 = none.
    int retx_gap_sf = 0;
    int retx_first_subchannel = 0;
    Mcs mcs = Mcs::QpskHalfRate;
    int tx_id = 0;

    void validate() const
    {
        if (!is_valid_reservation_interval(reservation_interval_ms))
            throw InvalidArgument("sci: invalid reservation interval " + std::to_string(reservation_interval_ms));
        if (std::abs(retx_gap_sf) > 15)
            throw InvalidArgument("sci: |retx_gap_sf| must be <= 15");
        if (length_subchannels < 1 || first_subchannel < 0)
            throw InvalidArgument("sci: invalid subchannel range");
    }

    friend bool operator==(const Sci&, const Sci&) = default;
};

struct DecodedSci
{
    Sci sci;
    double rsrp_dbm = 0.0;
};

enum class SensingState
{
    Absent,
    NotMonitored,
    Monitored,
};

/// Per-UE record of the last `window` subframes: S-RSSI per subchannel and
/// decoded SCIs with their PSSCH-RSRP. Subframes in which the UE transmitted
/// are stored as not monitored and carry no measurements.
class SensingDatabase
{
public:
    static constexpr int kDefaultWindow = 1000;

    explicit SensingDatabase(int n_subchannels, int window = kDefaultWindow)
        : n_subchannels_(n_subchannels), window_(window)
    {
        if (n_subchannels < 1 || window < 1)
            throw InvalidArgument("sensing database: need >= 1 subchannel and window >= 1");
        tags_.assign(static_cast<std::size_t>(window_), kEmpty);
        monitored_.assign(static_cast<std::size_t>(window_), 0);
        rssi_mw_.assign(static_cast<std::size_t>(window_) * static_cast<std::size_t>(n_subchannels_), 0.0);
        scis_.resize(static_cast<std::size_t>(window_));
    }

    int n_subchannels() const { return n_subchannels_; }
    int window() const { return window_; }
    std::optional<Subframe> latest() const { return latest_; }

    void record_subframe(Subframe sf, std::span<const double> rssi_dbm, std::span<const DecodedSci> scis,
                         bool monitored)
    {
        auto& slot = begin_slot(sf, monitored, monitored ? rssi_dbm.size() : 0);
        if (!monitored)
            return;
        double* row = &rssi_mw_[slot_index(sf) * static_cast<std::size_t>(n_subchannels_)];
        for (int ch = 0; ch < n_subchannels_; ++ch)
            row[ch] = dbm_to_mw(rssi_dbm[static_cast<std::size_t>(ch)]);
        slot.assign(scis.begin(), scis.end());
    }

    /// Same as record_subframe with S-RSSI already in milliwatts.
    void record_subframe_mw(Subframe sf, std::span<const double> rssi_mw, std::span<const DecodedSci> scis,
                            bool monitored)
    {
        auto& slot = begin_slot(sf, monitored, monitored ? rssi_mw.size() : 0);
        if (!monitored)
            return;
        std::copy(rssi_mw.begin(), rssi_mw.end(),
                  rssi_mw_.begin() + static_cast<std::ptrdiff_t>(slot_index(sf) * n_subchannels_));
        slot.assign(scis.begin(), scis.end());
    }

    SensingState state(Subframe sf) const
    {
        if (!latest_ || sf > *latest_ || sf <= *latest_ - window_ || sf < 0)
            return SensingState::Absent;
        const auto i = slot_index(sf);
        if (tags_[i] != sf)
            return SensingState::Absent;
        return monitored_[i] ? SensingState::Monitored : SensingState::NotMonitored;
    }

    bool contains(Subframe sf) const { return state(sf) != SensingState::Absent; }

    /// Linear S-RSSI; only meaningful when state(sf) == Monitored.
    double rssi_mw(Subframe sf, int subchannel) const
    {
        return rssi_mw_[slot_index(sf) * static_cast<std::size_t>(n_subchannels_) +
                        static_cast<std::size_t>(subchannel)];
    }

    double rssi_dbm(Subframe sf, int subchannel) const { return mw_to_dbm(rssi_mw(sf, subchannel)); }

    std::span<const DecodedSci> decoded(Subframe sf) const
    {
        if (state(sf) != SensingState::Monitored)
            return {};
        return scis_[slot_index(sf)];
    }

    /// Oldest subframe that may still be held.
    Subframe horizon() const { return latest_ ? std::max<Subframe>(0, *latest_ - window_ + 1) : 0; }

private:
    static constexpr Subframe kEmpty = -1;

    std::size_t slot_index(Subframe sf) const { return static_cast<std::size_t>(sf % window_); }

    std::vector<DecodedSci>& begin_slot(Subframe sf, bool monitored, std::size_t rssi_count)
    {
        if (sf < 0)
            throw SequenceError("sensing database: negative subframe");
        if (latest_ && sf <= *latest_)
            throw SequenceError("sensing database: subframe " + std::to_string(sf) +
                                " is not after the last recorded subframe " + std::to_string(*latest_));
        if (monitored && rssi_count != static_cast<std::size_t>(n_subchannels_))
            throw InvalidArgument("sensing database: expected " + std::to_string(n_subchannels_) +
                                  " S-RSSI values, got " + std::to_string(rssi_count));
        latest_ = sf;
        const auto i = slot_index(sf);
        tags_[i] = sf;
        monitored_[i] = monitored ? 1 : 0;
        scis_[i].clear();
        return scis_[i];
    }

    int n_subchannels_;
    int window_;
    std::optional<Subframe> latest_;
    std::vector<Subframe> tags_;
    std::vector<char> monitored_;
    std::vector<double> rssi_mw_;
    std::vector<std::vector<DecodedSci>> scis_;
};

struct SpsConfig
{
    int t1 = 4;
    int t2 = 20;
    double threshold_init_dbm = -110.0;
    double threshold_step_db = 3.0;
    double candidate_fraction = 0.2;
    double keep_probability = 0.0;
    bool harq_enabled = false;
    int sensing_window_sf = SensingDatabase::kDefaultWindow;
    // S-RSSI of a candidate at t is averaged over t - averaging_period_sf * j, j = 1..averaging_samples.
    int averaging_period_sf = 100;
    int averaging_samples = 10;

    void validate() const
    {
        SelectionWindow{t1, t2, 0}.validate();
        if (!(keep_probability >= 0.0 && keep_probability <= 0.8))
            throw ConfigError("sps: keep_probability must lie in [0, 0.8]");
        if (!(candidate_fraction > 0.0 && candidate_fraction <= 1.0))
            throw ConfigError("sps: candidate_fraction must lie in (0, 1]");
        if (!(threshold_step_db > 0.0))
            throw ConfigError("sps: threshold_step_db must be > 0");
        if (sensing_window_sf < 1 || averaging_period_sf < 1 || averaging_samples < 1)
            throw ConfigError("sps: sensing window and averaging parameters must be positive");
        if (static_cast<long>(averaging_period_sf) * averaging_samples > sensing_window_sf + t1)
            throw ConfigError("sps: S-RSSI averaging reaches beyond the sensing window");
    }
};

struct SelectionResult
{
    std::vector<CandidateResource> selected;  // S_B
    double threshold_dbm = 0.0;               // final Th
    std::size_t total = 0;                    // all length-L candidates in the window
    std::size_t remaining = 0;                // |S_A| after the last exclusion pass
    int threshold_steps = 0;
};

namespace detail
{

struct CandidateMetrics
{
    std::vector<char> unmonitored;
    std::vector<double> average_rssi_mw;
    // Highest RSRP among projected reservations overlapping the candidate.
    std::vector<double> worst_rsrp_dbm;
};

inline void mark_reservation(CandidateMetrics& m, const SelectionWindow& window, int per_subframe, int length,
                             Subframe sf, int first, int len, double rsrp_dbm)
{
    if (!window.contains(sf))
        return;
    const int lo = std::max(0, first - length + 1);
    const int hi = std::min(per_subframe - 1, first + len - 1);
    const auto row = static_cast<std::size_t>(sf - window.first()) * static_cast<std::size_t>(per_subframe);
    for (int f = lo; f <= hi; ++f)
    {
        auto& worst = m.worst_rsrp_dbm[row + static_cast<std::size_t>(f)];
        worst = std::max(worst, rsrp_dbm);
    }
}

// Reservations announced at sensing subframe m recur at m + q * interval, q >= 1.
inline void project_reservation(CandidateMetrics& m, const SelectionWindow& window, int per_subframe, int length,
                                Subframe sensed_at, int interval, int first, int len, double rsrp_dbm)
{
    Subframe q = 1;
    if (sensed_at + interval < window.first())
        q = (window.first() - sensed_at + interval - 1) / interval;
    for (Subframe sf = sensed_at + q * interval; sf <= window.last(); sf += interval)
        mark_reservation(m, window, per_subframe, length, sf, first, len, rsrp_dbm);
}

}  // namespace detail

/// Sensing-based candidate selection. Builds S_A from every length-L resource
/// in [now + t1, now + t2], excludes resources whose averaging subframes were
/// not monitored and resources reserved by decoded SCIs above Th, raising Th
/// by the configured step until at least the configured fraction of resources
/// survives (or no reservation exclusion remains to relax). S_B is the
/// lowest-average-S-RSSI fraction of the survivors, ties broken by
/// (subframe, first_subchannel).
inline SelectionResult select_candidates(const SensingDatabase& db, const SpsConfig& config, const GridConfig& grid,
                                         Subframe now, int length_subchannels, int reservation_interval_ms)
{
    config.validate();
    grid.validate();
    if (db.n_subchannels() != grid.n_subchannels)
        throw ConfigError("select_candidates: database and grid disagree on the subchannel count");
    if (!is_valid_reservation_interval(reservation_interval_ms))
        throw InvalidArgument("select_candidates: invalid reservation interval " +
                              std::to_string(reservation_interval_ms));

    const SelectionWindow window{config.t1, config.t2, now};
    const auto candidates = enumerate_candidates(window, grid, length_subchannels);
    const std::size_t n = candidates.size();
    const int per_subframe = grid.n_subchannels - length_subchannels + 1;

    detail::CandidateMetrics m;
    m.unmonitored.assign(n, 0);
    m.average_rssi_mw.assign(n, 0.0);
    m.worst_rsrp_dbm.assign(n, -std::numeric_limits<double>::infinity());

    for (std::size_t i = 0; i < n; ++i)
    {
        const auto& c = candidates[i];
        double sum = 0.0;
        int samples = 0;
        for (int j = 1; j <= config.averaging_samples; ++j)
        {
            const Subframe s = c.subframe - static_cast<Subframe>(config.averaging_period_sf) * j;
            const auto st = db.state(s);
            if (st == SensingState::NotMonitored)
            {
                m.unmonitored[i] = 1;
                break;
            }
            if (st == SensingState::Absent)
                continue;
            for (int ch = c.first_subchannel; ch < c.end_subchannel(); ++ch)
            {
                sum += db.rssi_mw(s, ch);
                ++samples;
            }
        }
        m.average_rssi_mw[i] = samples > 0 ? sum / samples : 0.0;
    }

    if (const auto latest = db.latest())
    {
        for (Subframe s = db.horizon(); s <= *latest; ++s)
        {
            for (const auto& d : db.decoded(s))
            {
                const auto& sci = d.sci;
                detail::project_reservation(m, window, per_subframe, length_subchannels, s,
                                            sci.reservation_interval_ms, sci.first_subchannel,
                                            sci.length_subchannels, d.rsrp_dbm);
                if (sci.retx_gap_sf != 0)
                    detail::project_reservation(m, window, per_subframe, length_subchannels, s + sci.retx_gap_sf,
                                                sci.reservation_interval_ms, sci.retx_first_subchannel,
                                                sci.length_subchannels, d.rsrp_dbm);
            }
        }
    }

    SelectionResult result;
    result.total = n;
    const std::size_t required = ceil_fraction(config.candidate_fraction, n);
    double threshold = config.threshold_init_dbm;
    std::vector<std::size_t> survivors;
    survivors.reserve(n);
    for (;;)
    {
        survivors.clear();
        bool excluded_by_rsrp = false;
        for (std::size_t i = 0; i < n; ++i)
        {
            if (m.unmonitored[i])
                continue;
            if (m.worst_rsrp_dbm[i] > threshold)
            {
                excluded_by_rsrp = true;
                continue;
            }
            survivors.push_back(i);
        }
        if (survivors.size() >= required || !excluded_by_rsrp)
            break;
        threshold += config.threshold_step_db;
        ++result.threshold_steps;
    }

    std::stable_sort(survivors.begin(), survivors.end(), [&](std::size_t a, std::size_t b) {
        return m.average_rssi_mw[a] < m.average_rssi_mw[b];
    });
    const std::size_t keep = std::min(required, survivors.size());
    result.selected.reserve(keep);
    for (std::size_t k = 0; k < keep; ++k)
        result.selected.push_back(candidates[survivors[k]]);
    result.threshold_dbm = threshold;
    result.remaining = survivors.size();
    return result;
}

/// Inclusive ResourceCounter range for a reservation interval.
inline std::pair<int, int> resource_counter_range(int reservation_interval_ms)
{
    if (reservation_interval_ms >= 100)
        return {5, 15};
    if (reservation_interval_ms == 50)
        return {10, 30};
    if (reservation_interval_ms == 20)
        return {25, 75};
    throw InvalidArgument("no ResourceCounter range for reservation interval " +
                          std::to_string(reservation_interval_ms));
}

inline int draw_resource_counter(int reservation_interval_ms, Rng& rng)
{
    const auto [lo, hi] = resource_counter_range(reservation_interval_ms);
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

struct SpsGrant
{
    // First transmission opportunity; later ones recur every reservation interval.
    CandidateResource resource;
    int reservation_interval_ms = 100;
    int resource_counter = 0;
    // Paired HARQ transmission, offset |j| <= 15 from resource.subframe.
    std::optional<CandidateResource> retx;

    Subframe phase() const { return resource.subframe % reservation_interval_ms; }
    int retx_offset() const { return retx ? static_cast<int>(retx->subframe - resource.subframe) : 0; }
    bool expired() const { return resource_counter == 0; }

    friend bool operator==(const SpsGrant&, const SpsGrant&) = default;
};

inline SpsGrant pick_grant(std::span<const CandidateResource> selected, int reservation_interval_ms, Rng& rng,
                           bool harq_enabled)
{
    if (selected.empty())
        throw NoResourceError("pick_grant: candidate set is empty");
    SpsGrant grant;
    const auto pick = std::uniform_int_distribution<std::size_t>(0, selected.size() - 1)(rng);
    grant.resource = selected[pick];
    grant.reservation_interval_ms = reservation_interval_ms;
    grant.resource_counter = draw_resource_counter(reservation_interval_ms, rng);
    if (harq_enabled)
    {
        std::vector<std::size_t> partners;
        for (std::size_t i = 0; i < selected.size(); ++i)
        {
            const auto gap = selected[i].subframe - grant.resource.subframe;
            if (gap != 0 && gap >= -15 && gap <= 15)
                partners.push_back(i);
        }
        if (!partners.empty())
        {
            const auto k = std::uniform_int_distribution<std::size_t>(0, partners.size() - 1)(rng);
            grant.retx = selected[partners[k]];
        }
    }
    return grant;
}

inline SpsGrant on_transmission(SpsGrant grant)
{
    if (grant.resource_counter <= 0)
        throw LifecycleError("on_transmission: ResourceCounter already exhausted; reselect first");
    --grant.resource_counter;
    return grant;
}

/// At RC expiry: keep the resource with probability P (fresh RC), otherwise
/// return nullopt and the caller reselects.
inline std::optional<SpsGrant> on_expiry(const SpsGrant& grant, double keep_probability, Rng& rng)
{
    if (grant.resource_counter != 0)
        throw LifecycleError("on_expiry: grant still has " + std::to_string(grant.resource_counter) +
                             " transmissions left");
    if (!(keep_probability >= 0.0 && keep_probability <= 1.0))
        throw InvalidArgument("on_expiry: keep probability outside [0, 1]");
    if (!std::bernoulli_distribution(keep_probability)(rng))
        return std::nullopt;
    SpsGrant kept = grant;
    kept.resource_counter = draw_resource_counter(grant.reservation_interval_ms, rng);
    return kept;
}

inline std::string format_selection_trace(int ue, Subframe now, const SelectionResult& result,
                                          const SpsGrant& grant)
{
    std::ostringstream os;
    os << "select ue=" << ue << " now=" << now << " th_dbm=" << result.threshold_dbm
       << " s_a=" << result.remaining << " s_b=" << result.selected.size() << " sf=" << grant.resource.subframe
       << " subch=" << grant.resource.first_subchannel << '+' << grant.resource.length_subchannels
       << " rc=" << grant.resource_counter;
    if (grant.retx)
        os << " retx_gap=" << grant.retx_offset();
    return os.str();
}

}  // namespace cv2x

#endif
