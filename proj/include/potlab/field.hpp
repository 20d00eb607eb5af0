#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "potlab/errors.hpp"
#include "potlab/grid.hpp"

namespace potlab {

/// A singular point of a field: the exact location plus the nearest cell.
/// sign = -1 marks a log-type sink (value -inf), sign = +1 a pole (+inf).
/// Stored cell values are clipped at +-value_floor for display; measure
/// extraction recovers the exact atom by a ring sum around the marker.
struct Marker {
    Point where{0.0, 0.0};
    int cell = -1;
    int sign = -1;
};

/// Grid-sampled extended-real function over (part of) a GridDomain.
/// `defined` is the region mask; markers list the finitely many singular
/// cells. All non-marker defined values are finite.
class ScalarField {
public:
    static constexpr double kValueFloor = 40.0;

    ScalarField() = default;
    explicit ScalarField(GridPtr grid, double fill = 0.0, bool fill_defined = true)
        : grid_(std::move(grid)) {
        value_.assign(grid_->size(), fill);
        defined_.assign(grid_->size(), fill_defined ? 1 : 0);
    }

    /// Samples fn over every node of the bounding box (not just the domain
    /// interior), so interpolation works up to and slightly past the
    /// boundary. Nodes where fn returns non-finite become undefined unless
    /// they match a declared marker.
    static ScalarField sample(GridPtr grid, const std::function<double(Point)>& fn,
                              std::vector<Marker> markers = {}) {
        ScalarField f(grid);
        const auto& g = *f.grid_;
        for (auto& m : markers) {
            auto [i, j] = g.nearest_node(m.where);
            m.cell = g.index(i, j);
        }
        for (long idx = 0; idx < g.size(); ++idx) {
            double v = fn(g.pos(static_cast<int>(idx)));
            if (std::isfinite(v)) {
                f.value_[idx] = v;
            } else {
                f.value_[idx] = v > 0 ? kValueFloor : -kValueFloor;
                bool marked = false;
                for (const auto& m : markers) marked = marked || m.cell == idx;
                if (!marked) f.defined_[idx] = 0;
            }
        }
        for (const auto& m : markers) {
            // Clip the marker cell; its true content lives in the marker.
            f.value_[m.cell] = std::clamp(f.value_[m.cell], -kValueFloor, kValueFloor);
            f.defined_[m.cell] = 1;
        }
        f.markers_ = std::move(markers);
        return f;
    }

    const GridPtr& grid() const { return grid_; }
    const GridDomain& dom() const { return *grid_; }

    double operator[](long idx) const { return value_[idx]; }
    double& operator[](long idx) { return value_[idx]; }
    double at(int i, int j) const { return value_[grid_->index(i, j)]; }
    bool defined(long idx) const { return defined_[idx] != 0; }
    bool defined(int i, int j) const {
        return grid_->in_bounds(i, j) && defined_[grid_->index(i, j)];
    }
    void set(int i, int j, double v) {
        value_[grid_->index(i, j)] = v;
        defined_[grid_->index(i, j)] = 1;
    }
    void set_defined(long idx, bool d) { defined_[idx] = d ? 1 : 0; }

    /// Cells carrying prescribed closure values (limsup extensions): they
    /// take part in neighboring stencils but are not themselves subject
    /// to the interior sub-mean-value scan.
    bool scan_skip(long idx) const {
        return !scan_skip_.empty() && scan_skip_[idx] != 0;
    }
    void mark_scan_skip(long idx) {
        if (scan_skip_.empty()) scan_skip_.assign(grid_->size(), 0);
        scan_skip_[idx] = 1;
    }

    const std::vector<Marker>& markers() const { return markers_; }
    void add_marker(Marker m) {
        auto [i, j] = grid_->nearest_node(m.where);
        m.cell = grid_->index(i, j);
        value_[m.cell] = m.sign < 0 ? -kValueFloor : kValueFloor;
        defined_[m.cell] = 1;
        markers_.push_back(m);
    }
    bool marker_at(long idx) const {
        for (const auto& m : markers_)
            if (m.cell == idx) return true;
        return false;
    }

    /// Bilinear interpolation; requires the four surrounding nodes defined.
    /// Marker corners contribute their clipped value.
    std::optional<double> interpolate(Point z) const {
        const auto& g = *grid_;
        double fx = (z.real() - g.box().x0) / g.h();
        double fy = (z.imag() - g.box().y0) / g.h();
        int i = static_cast<int>(std::floor(fx));
        int j = static_cast<int>(std::floor(fy));
        // Clamp so querying exactly on the box edge still works.
        i = std::max(0, std::min(g.nx() - 2, i));
        j = std::max(0, std::min(g.ny() - 2, j));
        double sx = fx - i, sy = fy - j;
        if (sx < -1e-9 || sx > 1 + 1e-9 || sy < -1e-9 || sy > 1 + 1e-9) return std::nullopt;
        sx = std::clamp(sx, 0.0, 1.0);
        sy = std::clamp(sy, 0.0, 1.0);
        if (!defined(i, j) || !defined(i + 1, j) || !defined(i, j + 1) || !defined(i + 1, j + 1))
            return std::nullopt;
        double v00 = at(i, j), v10 = at(i + 1, j), v01 = at(i, j + 1), v11 = at(i + 1, j + 1);
        return (1 - sx) * (1 - sy) * v00 + sx * (1 - sy) * v10 + (1 - sx) * sy * v01 +
               sx * sy * v11;
    }

    double interpolate_or_throw(Point z, const char* what = "field") const {
        auto v = interpolate(z);
        if (!v)
            throw PreconditionError(std::string(what) +
                                    " undefined at requested point");
        return *v;
    }

    /// Distance from z to the nearest marker (+inf when there are none).
    double marker_distance(Point z) const {
        double d = kPosInf;
        for (const auto& m : markers_) d = std::min(d, std::abs(z - m.where));
        return d;
    }

    long defined_count() const {
        long n = 0;
        for (auto d : defined_) n += d;
        return n;
    }

    /// max over defined, non-marker cells satisfying pred (default: all).
    double max_over(const std::function<bool(int)>& pred = nullptr) const {
        double m = kNegInf;
        for (long idx = 0; idx < grid_->size(); ++idx) {
            if (!defined_[idx] || marker_at(idx)) continue;
            if (pred && !pred(static_cast<int>(idx))) continue;
            m = std::max(m, value_[idx]);
        }
        return m;
    }

    double min_over(const std::function<bool(int)>& pred = nullptr) const {
        double m = kPosInf;
        for (long idx = 0; idx < grid_->size(); ++idx) {
            if (!defined_[idx] || marker_at(idx)) continue;
            if (pred && !pred(static_cast<int>(idx))) continue;
            m = std::min(m, value_[idx]);
        }
        return m;
    }

    /// Cellwise combination on the intersection of the defined masks.
    static ScalarField combine(const ScalarField& a, const ScalarField& b,
                               const std::function<double(double, double)>& op) {
        require_same_grid(a, b);
        ScalarField out(a.grid_);
        for (long idx = 0; idx < a.grid_->size(); ++idx) {
            if (a.defined_[idx] && b.defined_[idx]) {
                out.value_[idx] = op(a.value_[idx], b.value_[idx]);
            } else {
                out.defined_[idx] = 0;
            }
        }
        out.markers_ = a.markers_;
        for (const auto& m : b.markers_)
            if (!out.marker_at(m.cell)) out.markers_.push_back(m);
        for (long idx = 0; idx < a.grid_->size(); ++idx)
            if (a.scan_skip(idx) || b.scan_skip(idx)) out.mark_scan_skip(idx);
        return out;
    }

    ScalarField scaled(double c) const {
        ScalarField out = *this;
        for (auto& v : out.value_) v *= c;
        return out;
    }

    /// Restrict the defined mask; values outside become undefined.
    ScalarField restricted(const std::function<bool(Point)>& keep) const {
        ScalarField out = *this;
        for (long idx = 0; idx < grid_->size(); ++idx)
            if (out.defined_[idx] && !keep(grid_->pos(static_cast<int>(idx))))
                out.defined_[idx] = 0;
        std::erase_if(out.markers_, [&](const Marker& m) { return !out.defined_[m.cell]; });
        return out;
    }

    static void require_same_grid(const ScalarField& a, const ScalarField& b) {
        if (a.grid_ != b.grid_)
            throw PreconditionError("fields live on different grids");
    }

private:
    GridPtr grid_;
    std::vector<double> value_;
    std::vector<uint8_t> defined_;
    std::vector<uint8_t> scan_skip_;
    std::vector<Marker> markers_;
};

}  // namespace potlab
