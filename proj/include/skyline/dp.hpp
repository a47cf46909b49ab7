#pragma once

// Multistage graph over image columns: nodal cost grids for the proposed
// method and the two non-learning baselines, gap filling with dummy nodes,
// and the column-sweep shortest path.

#include <cstdint>
#include <limits>
#include <vector>

#include "skyline/blade.hpp"
#include "skyline/edges.hpp"
#include "skyline/image.hpp"

namespace skyline {

inline constexpr double kBlocked = std::numeric_limits<double>::infinity();

inline bool is_blocked(double cost) noexcept { return cost == kBlocked; }

class CostGrid {
 public:
  CostGrid() = default;
  CostGrid(int rows, int cols, double fill = kBlocked)
      : rows_(rows), cols_(cols), cost_(static_cast<std::size_t>(rows) * cols, fill),
        dummy_(static_cast<std::size_t>(rows) * cols, 0) {}

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  double at(int row, int col) const noexcept { return cost_[index(row, col)]; }
  bool blocked(int row, int col) const noexcept { return is_blocked(at(row, col)); }
  bool dummy(int row, int col) const noexcept { return dummy_[index(row, col)] != 0; }
  void set(int row, int col, double cost) noexcept { cost_[index(row, col)] = cost; }
  void set_dummy(int row, int col, double cost) noexcept {
    cost_[index(row, col)] = cost;
    dummy_[index(row, col)] = 1;
  }
  bool column_blocked(int col) const noexcept;

  friend bool operator==(const CostGrid&, const CostGrid&) = default;

 private:
  std::size_t index(int row, int col) const noexcept { return static_cast<std::size_t>(row) * cols_ + col; }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> cost_;
  std::vector<std::uint8_t> dummy_;
};

struct DpParams {
  int delta = 4;             // max vertical step between adjacent columns
  int tog = 5;               // tolerance-of-gap, in columns
  double link_weight = 0.0;  // multiplier on |i - k|
  double dummy_cost = 2.0;

  /// Throws InvalidParameter when delta < 1, tog < 1, link_weight < 0 or
  /// dummy_cost <= 0.
  void validate() const;
};

struct SkylinePath {
  std::vector<int> rows;           // one per column
  std::vector<std::uint8_t> dummy; // 1 where the path runs through a gap-fill node
};

struct PathResult {
  SkylinePath path;
  double total_cost = 0.0;
};

/// l at edge pixels, BLOCKED elsewhere.
CostGrid cost_edges_only(const EdgeMap& edges, double low_cost);

/// w1 * d(grad) + (1 - w1) * (1 - grad) with grad = normalized gradient
/// magnitude and d(grad) its absolute difference to the next column (0 in the
/// last column). Throws ImageTooSmall, WeightOutOfRange.
CostGrid cost_gradient(const GrayImage& img, double w1);

/// v * (1 - score) + (1 - v) * (1 - strength) at edge pixels, BLOCKED
/// elsewhere. `strength` must already be normalized to [0,1].
/// Throws WeightOutOfRange, DimensionMismatch.
CostGrid cost_proposed(const ScoreMap& scores, const Plane& strength, const EdgeMap& edges, double v);

/// Bridges edge gaps of up to `tog` columns with dummy nodes, then fills any
/// column that cannot be reached from its predecessor with dummies so that a
/// left-to-right path always exists.
CostGrid gap_fill(const CostGrid& grid, const DpParams& params);

/// Minimizes sum of nodal costs + link_weight * sum |row step| over paths with
/// steps <= delta. Ties go to the smaller row, then the smaller predecessor.
/// Throws Infeasible when no path exists.
PathResult shortest_path(const CostGrid& grid, const DpParams& params);

}  // namespace skyline
