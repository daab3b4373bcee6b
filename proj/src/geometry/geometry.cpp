#include "meshreconf/geometry/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace meshreconf::geometry {

double distance(const NodePosition& a, const NodePosition& b) {
  return std::hypot(b.x - a.x, b.y - a.y);
}

double wrap_angle(double degrees) {
  double r = std::fmod(degrees, 360.0);
  if (r < 0) r += 360.0;
  if (r >= 360.0) r -= 360.0;
  return r;
}

double bearing(const NodePosition& from, const NodePosition& to) {
  const double dx = to.x - from.x;
  const double dy = to.y - from.y;
  if (dx == 0.0 && dy == 0.0) {
    throw GeometryError("bearing undefined for coincident positions");
  }
  if (!std::isfinite(dx) || !std::isfinite(dy)) {
    throw GeometryError("non-finite position");
  }
  // atan2(east, north) gives the clockwise angle from North.
  return wrap_angle(std::atan2(dx, dy) * 180.0 / std::numbers::pi);
}

void check_rotation_quantum(double theta) {
  if (!(theta > 0.0) || theta > 180.0) {
    throw GeometryError("rotation quantum must lie in (0, 180]");
  }
  const double steps = 180.0 / theta;
  if (std::abs(steps - std::round(steps)) > 1e-9) {
    throw GeometryError("rotation quantum " + std::to_string(theta) +
                        " does not divide 180");
  }
}

double snap_angle(double degrees, double theta) {
  const double q = degrees / theta;
  // Round half down.
  const double steps = std::ceil(q - 0.5);
  return wrap_angle(steps * theta);
}

AlignmentMatrix alignment_matrix(const std::vector<NodePosition>& positions,
                                 double theta) {
  check_rotation_quantum(theta);
  const std::size_t n = positions.size();
  AlignmentMatrix v(n, std::vector<double>(n, 0.0));
  for (std::size_t d = 0; d < n; ++d) {
    for (std::size_t e = d + 1; e < n; ++e) {
      if (positions[d].x == positions[e].x && positions[d].y == positions[e].y) {
        throw GeometryError("duplicate position for nodes " + std::to_string(d) +
                            " and " + std::to_string(e));
      }
      const double forward = snap_angle(bearing(positions[d], positions[e]), theta);
      v[d][e] = forward;
      v[e][d] = wrap_angle(forward + 180.0);
    }
  }
  return v;
}

ConnectivityMatrix connectivity(const std::vector<NodePosition>& positions,
                                double max_range) {
  if (!(max_range > 0.0)) throw GeometryError("range must be positive");
  const std::size_t n = positions.size();
  ConnectivityMatrix delta(n, std::vector<int>(n, 0));
  for (std::size_t d = 0; d < n; ++d) {
    for (std::size_t e = d + 1; e < n; ++e) {
      const int linked = distance(positions[d], positions[e]) <= max_range ? 1 : 0;
      delta[d][e] = delta[e][d] = linked;
    }
  }
  return delta;
}

void PhyParams::validate() const {
  if (!(bandwidth_mhz > 0.0)) throw GeometryError("bandwidth must be positive");
  if (!(d0_m > 0.0)) throw GeometryError("reference distance must be positive");
  if (!(path_loss_exponent >= 0.0) || !(atmospheric_db_per_m >= 0.0)) {
    throw GeometryError("path loss coefficients must be non-negative");
  }
  if (!(min_rate_mbps > 0.0) || !(max_rate_mbps >= min_rate_mbps)) {
    throw GeometryError("rate limits must satisfy 0 < min <= max");
  }
}

double path_loss_db(double distance_m, const PhyParams& phy) {
  return phy.pl0_db +
         10.0 * phy.path_loss_exponent * std::log10(distance_m / phy.d0_m) +
         phy.atmospheric_db_per_m * distance_m;
}

double snr_db(double distance_m, const PhyParams& phy) {
  const double noise_dbm =
      -174.0 + 10.0 * std::log10(phy.bandwidth_mhz * 1e6) + phy.noise_figure_db;
  const double rx_dbm = phy.tx_power_dbm + phy.tx_gain_dbi + phy.rx_gain_dbi -
                        path_loss_db(distance_m, phy);
  return rx_dbm - noise_dbm;
}

double link_capacity(double distance_m, const PhyParams& phy) {
  if (!(distance_m > 0.0)) throw GeometryError("distance must be positive");
  const double snr = std::pow(10.0, snr_db(distance_m, phy) / 10.0);
  const double shannon = phy.bandwidth_mhz * std::log2(1.0 + snr);
  return std::clamp(shannon, phy.min_rate_mbps, phy.max_rate_mbps);
}

CapacityMatrix capacity_matrix(const std::vector<NodePosition>& positions,
                               const ConnectivityMatrix& delta,
                               const PhyParams& phy) {
  phy.validate();
  const std::size_t n = positions.size();
  CapacityMatrix r(n, std::vector<double>(n, 0.0));
  for (std::size_t d = 0; d < n; ++d) {
    for (std::size_t e = d + 1; e < n; ++e) {
      if (!delta[d][e]) continue;
      r[d][e] = r[e][d] = link_capacity(distance(positions[d], positions[e]), phy);
    }
  }
  return r;
}

}  // namespace meshreconf::geometry
