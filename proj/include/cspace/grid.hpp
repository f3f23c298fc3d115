#pragma once

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "cspace/image.hpp"
#include "cspace/parallel.hpp"
#include "cspace/robot.hpp"

namespace cspace {

enum class Cell : std::uint8_t { Collision = 0, Free = 1 };

// Discretized C-space over the joint torus. Cell (r,c) is the configuration
// q1 = 2pi*(c+0.5)/N, q2 = 2pi*(r+0.5)/N: q1 runs left to right, q2 top to
// bottom.
struct CSpaceGrid {
  int n = 0;
  std::vector<Cell> cells;
  std::vector<CollisionStatus> labels;  // optional provenance layer

  CSpaceGrid() = default;
  explicit CSpaceGrid(int resolution)
      : n(resolution), cells(static_cast<std::size_t>(resolution) * resolution, Cell::Free) {}

  Cell& at(int r, int c) { return cells[static_cast<std::size_t>(r) * n + c]; }
  Cell at(int r, int c) const { return cells[static_cast<std::size_t>(r) * n + c]; }
  bool has_labels() const { return !labels.empty(); }
  const CollisionStatus& label(int r, int c) const {
    return labels[static_cast<std::size_t>(r) * n + c];
  }

  bool operator==(const CSpaceGrid& other) const {
    return n == other.n && cells == other.cells;
  }
};

struct BoundaryMask {
  int n = 0;
  std::vector<std::uint8_t> boundary;

  explicit BoundaryMask(int resolution = 0)
      : n(resolution), boundary(static_cast<std::size_t>(resolution) * resolution, 0) {}

  bool at(int r, int c) const { return boundary[static_cast<std::size_t>(r) * n + c] != 0; }

  double fraction() const {
    if (boundary.empty()) return 0.0;
    std::size_t cnt = 0;
    for (auto b : boundary) cnt += b;
    return static_cast<double>(cnt) / static_cast<double>(boundary.size());
  }
};

inline JointConfig cell_center_config(int n, int row, int col) {
  return {kTwoPi * (col + 0.5) / n, kTwoPi * (row + 0.5) / n};
}

// Exact rasterization: every cell is labeled by the collision status at its
// center configuration. Cells are independent, so the result is identical
// for any thread count.
inline CSpaceGrid rasterize(const RobotModel& r, const Workspace& w, int resolution,
                            int threads = 0) {
  if (resolution < 2) throw std::invalid_argument("rasterize resolution must be >= 2");
  CSpaceGrid grid(resolution);
  grid.labels.resize(grid.cells.size());
  parallel_for(resolution, threads, [&](std::int64_t row, int) {
    for (int col = 0; col < resolution; ++col) {
      const auto st = collision_status(r, w, cell_center_config(resolution, static_cast<int>(row), col));
      const std::size_t idx = static_cast<std::size_t>(row) * resolution + col;
      grid.cells[idx] = st.collides() ? Cell::Collision : Cell::Free;
      grid.labels[idx] = st;
    }
  });
  return grid;
}

// Evaluates k*k uniformly spaced interior sub-configurations per cell. A
// cell whose sub-samples disagree is marked boundary; the rest carry the
// unanimous label. Boundary cells are labeled conservatively (collision if
// any sub-sample collides).
inline std::pair<CSpaceGrid, BoundaryMask> supersample(const RobotModel& r, const Workspace& w,
                                                       int resolution, int k, int threads = 0) {
  if (resolution < 2) throw std::invalid_argument("supersample resolution must be >= 2");
  if (k < 2) throw std::invalid_argument("supersample subdivision must be >= 2");
  CSpaceGrid grid(resolution);
  grid.labels.resize(grid.cells.size());
  BoundaryMask mask(resolution);
  parallel_for(resolution, threads, [&](std::int64_t row, int) {
    for (int col = 0; col < resolution; ++col) {
      bool any_collision = false;
      bool any_free = false;
      CollisionStatus merged;
      for (int sy = 0; sy < k; ++sy) {
        for (int sx = 0; sx < k; ++sx) {
          const JointConfig q{kTwoPi * (col + (sx + 0.5) / k) / resolution,
                              kTwoPi * (static_cast<int>(row) + (sy + 0.5) / k) / resolution};
          const auto st = collision_status(r, w, q);
          merged.self_collision |= st.self_collision;
          merged.obstacle_mask |= st.obstacle_mask;
          (st.collides() ? any_collision : any_free) = true;
        }
      }
      const std::size_t idx = static_cast<std::size_t>(row) * resolution + col;
      grid.cells[idx] = any_collision ? Cell::Collision : Cell::Free;
      grid.labels[idx] = any_collision ? merged : CollisionStatus{};
      mask.boundary[idx] = (any_collision && any_free) ? 1 : 0;
    }
  });
  return {std::move(grid), std::move(mask)};
}

// Collision -> black (0), Free -> white (1), matching the dataset encoding.
inline GrayImage grid_to_image(const CSpaceGrid& g) {
  GrayImage img(g.n, g.n);
  for (std::size_t i = 0; i < g.cells.size(); ++i) {
    img.px[i] = g.cells[i] == Cell::Free ? 1.0f : 0.0f;
  }
  return img;
}

inline CSpaceGrid image_to_grid(const GrayImage& img, double eta) {
  if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("threshold must be inside (0,1)");
  if (!img.square()) throw std::invalid_argument("C-space images must be square");
  CSpaceGrid g(img.width);
  for (std::size_t i = 0; i < g.cells.size(); ++i) {
    g.cells[i] = img.px[i] < eta ? Cell::Collision : Cell::Free;
  }
  return g;
}

// Debug rendering of the label layer: white free space, red self-collision,
// a fixed palette for obstacle contributions (self-collision wins when both
// apply, as in the reference figures).
inline RgbImage render_labels(const CSpaceGrid& g) {
  if (!g.has_labels()) throw std::invalid_argument("grid has no label layer");
  static constexpr unsigned char palette[6][3] = {
      {31, 119, 180}, {255, 127, 14}, {44, 160, 44},
      {148, 103, 189}, {140, 86, 75}, {23, 190, 207}};
  RgbImage img(g.n, g.n, 255);
  for (int r = 0; r < g.n; ++r) {
    for (int c = 0; c < g.n; ++c) {
      const auto& st = g.label(r, c);
      if (st.self_collision) {
        img.set(r, c, 214, 39, 40);
      } else if (st.obstacle_mask != 0) {
        int k = 0;
        while (!(st.obstacle_mask & (1u << k))) ++k;
        const auto& col = palette[k % 6];
        img.set(r, c, col[0], col[1], col[2]);
      }
    }
  }
  return img;
}

}  // namespace cspace
