#pragma once

#include <stdexcept>
#include <vector>

namespace meshreconf::geometry {

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NodePosition {
  double x = 0.0;  // meters
  double y = 0.0;  // meters
};

template <typename T>
using SquareMatrix = std::vector<std::vector<T>>;

// Angles in degrees, V[d][d'] is the direction node d must face to reach d'.
using AlignmentMatrix = SquareMatrix<double>;
using ConnectivityMatrix = SquareMatrix<int>;
// Link rates in Mbps; zero where no link is possible.
using CapacityMatrix = SquareMatrix<double>;

// Clockwise angle from North (+y) to the ray from -> to, in [0, 360).
double bearing(const NodePosition& from, const NodePosition& to);

// Nearest multiple of theta reduced to [0, 360). Exact halves go to the
// smaller multiple.
double snap_angle(double degrees, double theta);

// Reduces any angle to [0, 360).
double wrap_angle(double degrees);

// Throws unless theta is positive and divides 180 (so reversed bearings stay
// on the rotation grid).
void check_rotation_quantum(double theta);

AlignmentMatrix alignment_matrix(const std::vector<NodePosition>& positions,
                                 double theta);

ConnectivityMatrix connectivity(const std::vector<NodePosition>& positions,
                                double max_range);

struct PhyParams {
  double tx_power_dbm = 23.0;
  double tx_gain_dbi = 12.0;
  double rx_gain_dbi = 12.0;
  double bandwidth_mhz = 2160.0;
  double noise_figure_db = 10.0;
  // Log-distance path loss PL(d) = pl0 + 10 n log10(d / d0) + atm * d.
  double pl0_db = 68.0;  // free space at 60 GHz, 1 m
  double d0_m = 1.0;
  double path_loss_exponent = 2.0;
  double atmospheric_db_per_m = 0.016;
  double min_rate_mbps = 1000.0;
  double max_rate_mbps = 4640.0;

  void validate() const;
};

double path_loss_db(double distance_m, const PhyParams& phy);
double snr_db(double distance_m, const PhyParams& phy);

// Truncated Shannon rate in Mbps.
double link_capacity(double distance_m, const PhyParams& phy = {});

CapacityMatrix capacity_matrix(const std::vector<NodePosition>& positions,
                               const ConnectivityMatrix& delta,
                               const PhyParams& phy = {});

double distance(const NodePosition& a, const NodePosition& b);

}  // namespace meshreconf::geometry
