#include "skyline/dp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

#include "skyline/error.hpp"

namespace skyline {

bool CostGrid::column_blocked(int col) const noexcept {
  for (int r = 0; r < rows_; ++r) {
    if (!blocked(r, col)) return false;
  }
  return true;
}

void DpParams::validate() const {
  if (delta < 1 || tog < 1 || !(link_weight >= 0.0) || !(dummy_cost > 0.0) || !std::isfinite(dummy_cost)) {
    throw Error(ErrorCode::InvalidParameter, "dp params need delta >= 1, tog >= 1, link_weight >= 0, dummy_cost > 0");
  }
}

namespace {

void check_weight(double w, const char* name) {
  if (!(w >= 0.0 && w <= 1.0)) {
    throw Error(ErrorCode::WeightOutOfRange, std::string(name) + " must lie in [0,1], got " + std::to_string(w));
  }
}

}  // namespace

CostGrid cost_edges_only(const EdgeMap& edges, double low_cost) {
  if (!(low_cost >= 0.0) || !std::isfinite(low_cost)) {
    throw Error(ErrorCode::InvalidParameter, "edge cost l must be finite and >= 0");
  }
  CostGrid grid(edges.height(), edges.width());
  for (int r = 0; r < edges.height(); ++r) {
    for (int c = 0; c < edges.width(); ++c) {
      if (edges.at(c, r)) grid.set(r, c, low_cost);
    }
  }
  return grid;
}

CostGrid cost_gradient(const GrayImage& img, double w1) {
  check_weight(w1, "w1");
  if (img.width() < 2) throw Error(ErrorCode::ImageTooSmall, "gradient cost needs at least two columns");
  const Plane grad = normalize01(gradient(img).magnitude);
  const int rows = img.height();
  const int cols = img.width();
  CostGrid grid(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double g = grad.at(c, r);
      const double dg = c + 1 < cols ? std::abs(g - grad.at(c + 1, r)) : 0.0;
      grid.set(r, c, w1 * dg + (1.0 - w1) * (1.0 - g));
    }
  }
  return grid;
}

CostGrid cost_proposed(const ScoreMap& scores, const Plane& strength, const EdgeMap& edges, double v) {
  check_weight(v, "v");
  const int rows = edges.height();
  const int cols = edges.width();
  if (scores.width() != cols || scores.height() != rows || strength.width() != cols || strength.height() != rows) {
    throw Error(ErrorCode::DimensionMismatch, "score map / strength / edge map sizes differ");
  }
  CostGrid grid(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (!edges.at(c, r)) continue;
      const double s = scores.has(c, r) ? scores.at(c, r) : 0.0;
      const double g = strength.at(c, r);
      if (!(g >= 0.0 && g <= 1.0)) throw Error(ErrorCode::InvalidParameter, "strength must be normalized to [0,1]");
      grid.set(r, c, v * (1.0 - s) + (1.0 - v) * (1.0 - g));
    }
  }
  return grid;
}

CostGrid gap_fill(const CostGrid& grid, const DpParams& params) {
  params.validate();
  CostGrid out = grid;
  const int rows = grid.rows();
  const int cols = grid.cols();
  const int delta = params.delta;
  if (rows == 0 || cols == 0) return out;

  double max_real = 0.0;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (!grid.blocked(r, c)) max_real = std::max(max_real, grid.at(r, c));
    }
  }
  if (!(params.dummy_cost > max_real)) {
    throw Error(ErrorCode::InvalidParameter, "dummy_cost must exceed every real nodal cost");
  }

  auto has_node_near = [&](int row, int col) {
    for (int k = std::max(0, row - delta); k <= std::min(rows - 1, row + delta); ++k) {
      if (!out.blocked(k, col)) return true;
    }
    return false;
  };

  // Bridge gaps: a node with no successor within delta looks ahead up to tog
  // columns and is joined to the first reachable column by a flat dummy run.
  for (int j = 0; j + 1 < cols; ++j) {
    for (int i = 0; i < rows; ++i) {
      if (out.blocked(i, j) || has_node_near(i, j + 1)) continue;
      const int last = std::min(cols - 1, j + params.tog);
      for (int jp = j + 2; jp <= last; ++jp) {
        if (!has_node_near(i, jp)) continue;
        for (int c = j + 1; c < jp; ++c) {
          if (out.blocked(i, c)) out.set_dummy(i, c, params.dummy_cost);
        }
        break;
      }
    }
  }

  // Any column not reachable from the previous one is filled completely.
  std::vector<std::uint8_t> reach(static_cast<std::size_t>(rows), 0);
  std::vector<std::uint8_t> next(static_cast<std::size_t>(rows), 0);
  auto fill_column = [&](int col) {
    for (int r = 0; r < rows; ++r) {
      if (out.blocked(r, col)) out.set_dummy(r, col, params.dummy_cost);
    }
  };
  if (out.column_blocked(0)) fill_column(0);
  for (int r = 0; r < rows; ++r) reach[r] = out.blocked(r, 0) ? 0 : 1;
  for (int j = 1; j < cols; ++j) {
    bool any = false;
    for (int attempt = 0; attempt < 2 && !any; ++attempt) {
      if (attempt == 1) fill_column(j);
      for (int i = 0; i < rows; ++i) {
        next[i] = 0;
        if (out.blocked(i, j)) continue;
        for (int k = std::max(0, i - delta); k <= std::min(rows - 1, i + delta); ++k) {
          if (reach[k]) {
            next[i] = 1;
            any = true;
            break;
          }
        }
      }
    }
    std::swap(reach, next);
  }
  return out;
}

PathResult shortest_path(const CostGrid& grid, const DpParams& params) {
  params.validate();
  const int rows = grid.rows();
  const int cols = grid.cols();
  if (rows == 0 || cols == 0) throw Error(ErrorCode::Infeasible, "empty cost grid");
  constexpr double kUnreached = std::numeric_limits<double>::infinity();

  std::vector<double> dist(static_cast<std::size_t>(rows), kUnreached);
  std::vector<double> next(static_cast<std::size_t>(rows), kUnreached);
  std::vector<int> pred(static_cast<std::size_t>(rows) * cols, -1);

  bool any = false;
  for (int i = 0; i < rows; ++i) {
    if (!grid.blocked(i, 0)) {
      dist[i] = grid.at(i, 0);
      any = true;
    }
  }
  if (!any) throw Error(ErrorCode::Infeasible, "column 0 has no usable node");

  for (int j = 1; j < cols; ++j) {
    any = false;
    for (int i = 0; i < rows; ++i) {
      next[i] = kUnreached;
      if (grid.blocked(i, j)) continue;
      double best = kUnreached;
      int best_k = -1;
      for (int k = std::max(0, i - params.delta); k <= std::min(rows - 1, i + params.delta); ++k) {
        if (dist[k] == kUnreached) continue;
        const double c = dist[k] + params.link_weight * static_cast<double>(std::abs(i - k));
        if (c < best) {
          best = c;
          best_k = k;
        }
      }
      if (best_k < 0) continue;
      next[i] = best + grid.at(i, j);
      pred[static_cast<std::size_t>(i) * cols + j] = best_k;
      any = true;
    }
    if (!any) throw Error(ErrorCode::Infeasible, "no path reaches column " + std::to_string(j));
    std::swap(dist, next);
  }

  int end = -1;
  for (int i = 0; i < rows; ++i) {
    if (dist[i] != kUnreached && (end < 0 || dist[i] < dist[end])) end = i;
  }

  PathResult result;
  result.total_cost = dist[end];
  result.path.rows.assign(static_cast<std::size_t>(cols), 0);
  result.path.dummy.assign(static_cast<std::size_t>(cols), 0);
  int r = end;
  for (int j = cols - 1; j >= 0; --j) {
    result.path.rows[j] = r;
    result.path.dummy[j] = grid.dummy(r, j) ? 1 : 0;
    if (j > 0) r = pred[static_cast<std::size_t>(r) * cols + j];
  }
  return result;
}

}  // namespace skyline
