#pragma once

// Uniform tensor grids in one or two dimensions with homogeneous Dirichlet
// closure. Only interior nodes carry values; the boundary of the box is held
// at zero implicitly.

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pnls {

inline constexpr int kMaxDim = 2;

/// A point in domain coordinates. Components beyond the grid dimension are 0.
using Coord = std::array<double, kMaxDim>;

class Grid {
public:
    /// Throws std::invalid_argument on a degenerate box or node count.
    Grid(std::vector<double> lower, std::vector<double> upper, std::vector<std::size_t> nodes);

    int dim() const { return dim_; }
    double lower(int axis) const { return lower_[axis]; }
    double upper(int axis) const { return upper_[axis]; }
    std::size_t nodes(int axis) const { return nodes_[axis]; }
    double spacing(int axis) const { return spacing_[axis]; }
    double max_spacing() const;
    double cell_volume() const { return cell_volume_; }
    double box_volume() const;
    std::size_t size() const { return size_; }

    // Axis 0 varies fastest.
    std::size_t flat(std::size_t i, std::size_t j = 0) const { return i + nodes_[0] * j; }
    std::array<std::size_t, kMaxDim> multi_index(std::size_t flat) const;
    Coord coord(std::size_t flat) const;
    double axis_coord(int axis, std::size_t i) const {
        return lower_[axis] + static_cast<double>(i + 1) * spacing_[axis];
    }

    /// True for nodes adjacent to the box boundary.
    bool is_edge_node(std::size_t flat) const;

    bool contains(const Coord& x) const;

    bool operator==(const Grid& other) const;

private:
    int dim_;
    std::array<double, kMaxDim> lower_{};
    std::array<double, kMaxDim> upper_{};
    std::array<std::size_t, kMaxDim> nodes_{1, 1};
    std::array<double, kMaxDim> spacing_{1.0, 1.0};
    double cell_volume_ = 1.0;
    std::size_t size_ = 0;
};

using GridPtr = std::shared_ptr<const Grid>;

GridPtr make_grid(std::vector<double> lower, std::vector<double> upper,
                  std::vector<std::size_t> nodes);

/// Real nodal values on the interior nodes of a grid.
class ScalarField {
public:
    ScalarField() = default;
    explicit ScalarField(GridPtr grid, double fill = 0.0);
    ScalarField(GridPtr grid, std::vector<double> values);

    static ScalarField sample(GridPtr grid, const std::function<double(const Coord&)>& fn);

    const Grid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    std::size_t size() const { return values_.size(); }

    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }
    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }

    bool is_finite() const;
    /// Throws std::domain_error naming `what` if any value is NaN or inf.
    void require_finite(const char* what) const;
    bool compatible(const ScalarField& other) const;

    ScalarField& operator+=(const ScalarField& other);
    ScalarField& operator-=(const ScalarField& other);
    ScalarField& operator*=(double s);
    /// this += s * x
    ScalarField& axpy(double s, const ScalarField& x);

    double max() const;
    double min() const;
    double max_abs() const;

private:
    GridPtr grid_;
    std::vector<double> values_;
};

ScalarField operator+(ScalarField a, const ScalarField& b);
ScalarField operator-(ScalarField a, const ScalarField& b);
ScalarField operator*(double s, ScalarField a);

/// Product-trapezoidal quadrature over the box; boundary nodes contribute 0.
double integrate(const ScalarField& u);
double inner_product(const ScalarField& u, const ScalarField& v);
/// Quadrature L2 norm.
double norm_l2(const ScalarField& u);

/// Second-order central-difference Laplacian with homogeneous Dirichlet closure.
ScalarField laplacian_apply(const ScalarField& u);
void laplacian_apply(const ScalarField& u, ScalarField& out);

ScalarField positive_part(const ScalarField& u);

/// Bounded open region in domain coordinates.
class Region {
public:
    enum class Kind { Box, Ball };

    static Region box(int dim, const Coord& center, const Coord& half_widths);
    static Region ball(int dim, const Coord& center, double radius);

    Kind kind() const { return kind_; }
    int dim() const { return dim_; }
    const Coord& center() const { return center_; }
    const Coord& half_widths() const { return half_widths_; }
    double radius() const { return radius_; }

    /// Strict membership in the open set.
    bool contains(const Coord& x) const;
    /// Euclidean distance from x to the topological boundary.
    double distance_to_boundary(const Coord& x) const;
    double diameter() const;
    /// Throws std::invalid_argument unless the closure lies strictly inside the grid box.
    void require_inside(const Grid& grid) const;

    std::string describe() const;

private:
    Region() = default;
    Kind kind_ = Kind::Box;
    int dim_ = 1;
    Coord center_{};
    Coord half_widths_{};
    double radius_ = 0.0;
};

/// Indices of nodes within `width` of the boundary of `region`. Throws
/// std::invalid_argument when width is below the grid spacing and
/// std::runtime_error when no node falls in the band.
std::vector<std::size_t> boundary_band(const Grid& grid, const Region& region, double width);

/// Per-node membership flags (1 inside the open region), in flat order.
std::vector<char> region_mask(const Grid& grid, const Region& region);

/// Multilinear interpolation of u at an arbitrary point, using the implicit
/// zero boundary values. Points outside the box give 0.
double interpolate(const ScalarField& u, const Coord& x);

}  // namespace pnls
