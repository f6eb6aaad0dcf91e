// Exact lognormal path generation under the risk-neutral measure.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "gmwb/contract.hpp"
#include "gmwb/random.hpp"

namespace gmwb {

/// Uniform grid t_k = k / n, k = 0..N.
struct TimeGrid {
    int steps_per_year = 252;
    int num_steps = 0;

    /// Grid of `steps_per_year` steps per year out to `horizon` years. The
    /// horizon must be a whole number of steps.
    static TimeGrid make(double horizon, int steps_per_year);

    double dt() const noexcept { return 1.0 / steps_per_year; }
    double time(int k) const noexcept { return static_cast<double>(k) / steps_per_year; }
    double horizon() const noexcept { return time(num_steps); }
};

/// A seeded, immutable description of M paths of one-step growth factors
///   R_k = exp((r - alpha - sigma^2/2) dt + sigma sqrt(dt) xi_k).
///
/// Nothing is stored: factors are regenerated on demand from a counter-based
/// generator keyed on (seed, stream), with counter (step, path). Two PathSets
/// with the same seed and stream share their normals whatever the fee rate,
/// which is what common-random-number comparisons rely on.
///
/// With antithetic sampling, path 2i+1 uses the negated normals of path 2i.
class PathSet {
public:
    PathSet(const MarketParams& market, double fee_rate, TimeGrid grid, std::size_t num_paths,
            std::uint64_t seed, bool antithetic = false, std::uint64_t stream = 0);

    const TimeGrid& grid() const noexcept { return grid_; }
    const MarketParams& market() const noexcept { return market_; }
    double fee_rate() const noexcept { return fee_rate_; }
    std::size_t size() const noexcept { return num_paths_; }
    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream() const noexcept { return stream_; }
    bool antithetic() const noexcept { return antithetic_; }

    /// Same seed, stream and normals; different fee drag.
    PathSet with_fee(double fee_rate) const;

    /// (r - alpha - sigma^2/2) dt
    double log_drift() const noexcept { return log_drift_; }
    /// sigma sqrt(dt)
    double log_vol() const noexcept { return log_vol_; }

    /// Normal source for path j, positioned at step 0.
    class Cursor {
    public:
        double next_normal() noexcept { return sign_ * stream_.next(); }
        double next_factor() noexcept;

    private:
        friend class PathSet;
        Cursor(const PathSet& owner, std::size_t j);
        NormalStream stream_;
        double sign_;
        double drift_;
        double vol_;
        double flat_factor_; // used when vol_ == 0; no normals are drawn
    };

    Cursor cursor(std::size_t j) const;

    void normals(std::size_t j, std::span<double> out) const;
    void growth_factors(std::size_t j, std::span<double> out) const;
    std::vector<double> growth_factors(std::size_t j) const;

    /// Z_{t_0} = 1, Z_{t_{k+1}} = Z_{t_k} R_k.
    std::vector<double> z_path(std::size_t j) const;

    /// Writes all growth factors path-major as little-endian float64.
    void export_binary(std::ostream& out) const;

private:
    void check_index(std::size_t j) const;

    MarketParams market_;
    double fee_rate_;
    TimeGrid grid_;
    std::size_t num_paths_;
    std::uint64_t seed_;
    bool antithetic_;
    std::uint64_t stream_;
    Philox4x32::Key key_;
    double log_drift_;
    double log_vol_;
};

} // namespace gmwb
