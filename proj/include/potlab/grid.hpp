#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "potlab/errors.hpp"
#include "potlab/geometry.hpp"

namespace potlab {

/// Uniform node grid over a bounding rectangle with an interior mask and
/// boundary collars. Nodes sit at (x0 + i*h, y0 + j*h); "cell" below always
/// means a node together with its h x h box. Collar depth k holds the
/// interior cells at 4-neighbor BFS distance k from the exterior, so depth 0
/// hugs the boundary and deeper collars lie strictly inside shallower ones.
class GridDomain {
public:
    enum class Shape { Disk, Annulus, Rectangle, Custom };

    GridDomain(Rect box, double h, std::function<bool(Point)> inside,
               Shape shape = Shape::Custom, std::string descriptor = "custom")
        : box_(box), h_(h), shape_(shape), descriptor_(std::move(descriptor)) {
        if (!(h > 0)) throw PreconditionError("grid spacing must be positive");
        nx_ = static_cast<int>(std::floor((box.x1 - box.x0) / h + 0.5)) + 1;
        ny_ = static_cast<int>(std::floor((box.y1 - box.y0) / h + 0.5)) + 1;
        if (nx_ < 3 || ny_ < 3) throw PreconditionError("grid too small");
        interior_.assign(size(), 0);
        for (int j = 0; j < ny_; ++j)
            for (int i = 0; i < nx_; ++i)
                if (inside(pos(i, j))) interior_[index(i, j)] = 1;
        compute_depths();
        check_connected();
    }

    static GridDomain disk(Point center, double R, double h) {
        Rect box{center.real() - R, center.real() + R, center.imag() - R, center.imag() + R};
        return GridDomain(box, h,
                          [center, R](Point z) { return std::abs(z - center) < R; },
                          Shape::Disk, "disk");
    }

    static GridDomain annulus(Point center, double r, double R, double h) {
        Rect box{center.real() - R, center.real() + R, center.imag() - R, center.imag() + R};
        GridDomain g(box, h,
                     [center, r, R](Point z) {
                         double d = std::abs(z - center);
                         return d > r && d < R;
                     },
                     Shape::Annulus, "annulus");
        g.inner_radius_ = r;
        return g;
    }

    static GridDomain rectangle(Rect r, double h) {
        return GridDomain(r, h, [r](Point z) { return r.contains(z); },
                          Shape::Rectangle, "rectangle");
    }

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    long size() const { return static_cast<long>(nx_) * ny_; }
    double h() const { return h_; }
    const Rect& box() const { return box_; }
    Shape shape() const { return shape_; }
    const std::string& descriptor() const { return descriptor_; }
    double inner_radius() const { return inner_radius_; }

    int index(int i, int j) const { return j * nx_ + i; }
    int ix(int idx) const { return idx % nx_; }
    int iy(int idx) const { return idx / nx_; }
    Point pos(int i, int j) const { return {box_.x0 + i * h_, box_.y0 + j * h_}; }
    Point pos(int idx) const { return pos(ix(idx), iy(idx)); }

    bool in_bounds(int i, int j) const { return i >= 0 && i < nx_ && j >= 0 && j < ny_; }
    bool interior(int i, int j) const { return in_bounds(i, j) && interior_[index(i, j)]; }
    bool interior(int idx) const { return interior_[idx] != 0; }

    /// Nearest node to z (clamped to the box).
    std::pair<int, int> nearest_node(Point z) const {
        int i = static_cast<int>(std::floor((z.real() - box_.x0) / h_ + 0.5));
        int j = static_cast<int>(std::floor((z.imag() - box_.y0) / h_ + 0.5));
        i = std::max(0, std::min(nx_ - 1, i));
        j = std::max(0, std::min(ny_ - 1, j));
        return {i, j};
    }

    /// BFS distance to the exterior; 0 on non-interior cells, >= 1 inside.
    int depth(int idx) const { return depth_[idx]; }
    int max_depth() const { return max_depth_; }

    /// Collar ring k (k = 0 outermost): interior cells at depth k + 1.
    std::vector<int> collar(int k) const {
        std::vector<int> ring;
        for (long idx = 0; idx < size(); ++idx)
            if (interior_[idx] && depth_[idx] == k + 1) ring.push_back(static_cast<int>(idx));
        return ring;
    }

    /// True on interior cells whose 4 neighbors are all interior.
    bool stencil_complete(int i, int j) const {
        return interior(i, j) && interior(i - 1, j) && interior(i + 1, j) &&
               interior(i, j - 1) && interior(i, j + 1);
    }

    std::vector<int> interior_cells() const {
        std::vector<int> cells;
        cells.reserve(interior_count_);
        for (long idx = 0; idx < size(); ++idx)
            if (interior_[idx]) cells.push_back(static_cast<int>(idx));
        return cells;
    }
    long interior_count() const { return interior_count_; }

    /// Boundary nodes: non-interior nodes 4-adjacent to an interior node.
    /// These carry Dirichlet data in the relaxation solvers.
    std::vector<int> boundary_nodes() const {
        std::vector<int> nodes;
        for (int j = 0; j < ny_; ++j)
            for (int i = 0; i < nx_; ++i) {
                if (interior(i, j)) continue;
                if (interior(i - 1, j) || interior(i + 1, j) || interior(i, j - 1) ||
                    interior(i, j + 1))
                    nodes.push_back(index(i, j));
            }
        return nodes;
    }

private:
    void compute_depths() {
        depth_.assign(size(), 0);
        std::vector<int> frontier;
        interior_count_ = 0;
        // Seed: interior cells adjacent to exterior (or to the box edge).
        for (int j = 0; j < ny_; ++j)
            for (int i = 0; i < nx_; ++i) {
                if (!interior(i, j)) continue;
                ++interior_count_;
                bool edge = !interior(i - 1, j) || !interior(i + 1, j) || !interior(i, j - 1) ||
                            !interior(i, j + 1);
                if (edge) {
                    depth_[index(i, j)] = 1;
                    frontier.push_back(index(i, j));
                }
            }
        int d = 1;
        while (!frontier.empty()) {
            std::vector<int> next;
            for (int idx : frontier) {
                int i = ix(idx), j = iy(idx);
                const std::pair<int, int> nb[4] = {{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}};
                for (auto [ii, jj] : nb) {
                    if (!interior(ii, jj)) continue;
                    int nidx = index(ii, jj);
                    if (depth_[nidx] == 0) {
                        depth_[nidx] = static_cast<uint16_t>(d + 1);
                        next.push_back(nidx);
                    }
                }
            }
            frontier = std::move(next);
            ++d;
        }
        max_depth_ = d - 1;
    }

    void check_connected() {
        if (interior_count_ == 0) throw PreconditionError("empty interior");
        std::vector<uint8_t> seen(size(), 0);
        std::vector<int> stack;
        for (long idx = 0; idx < size(); ++idx)
            if (interior_[idx]) {
                stack.push_back(static_cast<int>(idx));
                seen[idx] = 1;
                break;
            }
        long reached = 0;
        while (!stack.empty()) {
            int idx = stack.back();
            stack.pop_back();
            ++reached;
            int i = ix(idx), j = iy(idx);
            const std::pair<int, int> nb[4] = {{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}};
            for (auto [ii, jj] : nb)
                if (interior(ii, jj) && !seen[index(ii, jj)]) {
                    seen[index(ii, jj)] = 1;
                    stack.push_back(index(ii, jj));
                }
        }
        if (reached != interior_count_)
            throw PreconditionError("interior mask is not connected");
    }

    Rect box_;
    double h_;
    int nx_ = 0, ny_ = 0;
    Shape shape_;
    std::string descriptor_;
    double inner_radius_ = 0.0;
    std::vector<uint8_t> interior_;
    std::vector<uint16_t> depth_;
    long interior_count_ = 0;
    int max_depth_ = 0;
};

using GridPtr = std::shared_ptr<const GridDomain>;

inline GridPtr make_disk_grid(Point center, double R, double h) {
    return std::make_shared<const GridDomain>(GridDomain::disk(center, R, h));
}
inline GridPtr make_annulus_grid(Point center, double r, double R, double h) {
    return std::make_shared<const GridDomain>(GridDomain::annulus(center, r, R, h));
}
inline GridPtr make_rectangle_grid(Rect r, double h) {
    return std::make_shared<const GridDomain>(GridDomain::rectangle(r, h));
}

}  // namespace potlab
