#include "gmwb/paths.hpp"

#include <bit>
#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace gmwb {

TimeGrid TimeGrid::make(double horizon, int steps_per_year) {
    if (steps_per_year <= 0) throw std::invalid_argument("steps_per_year must be positive");
    if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw std::invalid_argument("grid horizon must be finite and non-negative");
    const double exact = horizon * steps_per_year;
    const double steps = std::round(exact);
    if (std::fabs(steps - exact) > 1e-9 * std::max(1.0, exact)) {
        std::ostringstream msg;
        msg << "horizon " << horizon << " is not a whole number of steps at " << steps_per_year
            << " steps per year";
        throw std::invalid_argument(msg.str());
    }
    TimeGrid g;
    g.steps_per_year = steps_per_year;
    g.num_steps = static_cast<int>(steps);
    return g;
}

PathSet::PathSet(const MarketParams& market, double fee_rate, TimeGrid grid, std::size_t num_paths,
                 std::uint64_t seed, bool antithetic, std::uint64_t stream)
    : market_(market),
      fee_rate_(fee_rate),
      grid_(grid),
      num_paths_(num_paths),
      seed_(seed),
      antithetic_(antithetic),
      stream_(stream) {
    if (num_paths == 0) throw std::invalid_argument("PathSet needs at least one path");
    if (grid.num_steps < 0 || grid.steps_per_year <= 0) throw std::invalid_argument("invalid time grid");
    const std::uint64_t k = splitmix64(seed ^ splitmix64(stream + 0x5851F42D4C957F2Dull));
    key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
    const double dt = grid.dt();
    log_drift_ = (market.r - fee_rate - 0.5 * market.sigma * market.sigma) * dt;
    log_vol_ = market.sigma * std::sqrt(dt);
}

PathSet PathSet::with_fee(double fee_rate) const {
    return PathSet(market_, fee_rate, grid_, num_paths_, seed_, antithetic_, stream_);
}

PathSet::Cursor::Cursor(const PathSet& owner, std::size_t j)
    : stream_(owner.key_, owner.antithetic_ ? j / 2 : j),
      sign_(owner.antithetic_ && (j % 2 == 1) ? -1.0 : 1.0),
      drift_(owner.log_drift_),
      vol_(owner.log_vol_),
      flat_factor_(std::exp(owner.log_drift_)) {}

double PathSet::Cursor::next_factor() noexcept {
    if (vol_ == 0.0) return flat_factor_;
    return std::exp(drift_ + vol_ * next_normal());
}

PathSet::Cursor PathSet::cursor(std::size_t j) const {
    check_index(j);
    return Cursor(*this, j);
}

void PathSet::check_index(std::size_t j) const {
    if (j >= num_paths_) {
        std::ostringstream msg;
        msg << "path index " << j << " out of range (" << num_paths_ << " paths)";
        throw std::out_of_range(msg.str());
    }
}

void PathSet::normals(std::size_t j, std::span<double> out) const {
    auto c = cursor(j);
    for (auto& x : out) x = c.next_normal();
}

void PathSet::growth_factors(std::size_t j, std::span<double> out) const {
    auto c = cursor(j);
    for (auto& x : out) x = c.next_factor();
}

std::vector<double> PathSet::growth_factors(std::size_t j) const {
    std::vector<double> out(static_cast<std::size_t>(grid_.num_steps));
    growth_factors(j, out);
    return out;
}

std::vector<double> PathSet::z_path(std::size_t j) const {
    auto c = cursor(j);
    std::vector<double> z(static_cast<std::size_t>(grid_.num_steps) + 1);
    z[0] = 1.0;
    for (std::size_t k = 1; k < z.size(); ++k) z[k] = z[k - 1] * c.next_factor();
    return z;
}

void PathSet::export_binary(std::ostream& out) const {
    std::vector<double> buf(static_cast<std::size_t>(grid_.num_steps));
    for (std::size_t j = 0; j < num_paths_; ++j) {
        growth_factors(j, buf);
        for (double x : buf) {
            auto bits = std::bit_cast<std::uint64_t>(x);
            char bytes[8];
            for (int b = 0; b < 8; ++b) bytes[b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
            out.write(bytes, 8);
        }
    }
}

} // namespace gmwb
