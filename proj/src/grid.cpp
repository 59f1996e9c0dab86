#include "pnls/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace pnls {

Grid::Grid(std::vector<double> lower, std::vector<double> upper, std::vector<std::size_t> nodes) {
    if (lower.empty() || lower.size() > static_cast<std::size_t>(kMaxDim)) {
        throw std::invalid_argument("grid dimension must be 1 or 2");
    }
    if (upper.size() != lower.size() || nodes.size() != lower.size()) {
        throw std::invalid_argument("grid bounds and node counts must have the same length");
    }
    dim_ = static_cast<int>(lower.size());
    size_ = 1;
    for (int a = 0; a < dim_; ++a) {
        if (!(upper[a] > lower[a]) || !std::isfinite(lower[a]) || !std::isfinite(upper[a])) {
            throw std::invalid_argument("grid upper bound must exceed lower bound on every axis");
        }
        if (nodes[a] < 3) {
            throw std::invalid_argument("grid needs at least 3 interior nodes per axis");
        }
        lower_[a] = lower[a];
        upper_[a] = upper[a];
        nodes_[a] = nodes[a];
        spacing_[a] = (upper[a] - lower[a]) / static_cast<double>(nodes[a] + 1);
        cell_volume_ *= spacing_[a];
        size_ *= nodes[a];
    }
}

double Grid::max_spacing() const {
    double h = 0.0;
    for (int a = 0; a < dim_; ++a) h = std::max(h, spacing_[a]);
    return h;
}

double Grid::box_volume() const {
    double v = 1.0;
    for (int a = 0; a < dim_; ++a) v *= upper_[a] - lower_[a];
    return v;
}

std::array<std::size_t, kMaxDim> Grid::multi_index(std::size_t flat) const {
    return {flat % nodes_[0], flat / nodes_[0]};
}

Coord Grid::coord(std::size_t flat) const {
    const auto idx = multi_index(flat);
    Coord x{};
    for (int a = 0; a < dim_; ++a) x[a] = axis_coord(a, idx[a]);
    return x;
}

bool Grid::is_edge_node(std::size_t flat) const {
    const auto idx = multi_index(flat);
    for (int a = 0; a < dim_; ++a) {
        if (idx[a] == 0 || idx[a] + 1 == nodes_[a]) return true;
    }
    return false;
}

bool Grid::contains(const Coord& x) const {
    for (int a = 0; a < dim_; ++a) {
        if (!(x[a] > lower_[a] && x[a] < upper_[a])) return false;
    }
    return true;
}

bool Grid::operator==(const Grid& other) const {
    return dim_ == other.dim_ && lower_ == other.lower_ && upper_ == other.upper_ &&
           nodes_ == other.nodes_;
}

GridPtr make_grid(std::vector<double> lower, std::vector<double> upper,
                  std::vector<std::size_t> nodes) {
    return std::make_shared<const Grid>(std::move(lower), std::move(upper), std::move(nodes));
}

// ---------------------------------------------------------------------------
// ScalarField

ScalarField::ScalarField(GridPtr grid, double fill)
    : grid_(std::move(grid)), values_(grid_->size(), fill) {}

ScalarField::ScalarField(GridPtr grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_->size()) {
        throw std::invalid_argument("field size does not match grid");
    }
}

ScalarField ScalarField::sample(GridPtr grid, const std::function<double(const Coord&)>& fn) {
    ScalarField out(grid);
    for (std::size_t n = 0; n < out.size(); ++n) out[n] = fn(grid->coord(n));
    return out;
}

bool ScalarField::is_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void ScalarField::require_finite(const char* what) const {
    if (!is_finite()) throw std::domain_error(std::string(what) + ": field has non-finite values");
}

bool ScalarField::compatible(const ScalarField& other) const {
    return grid_ && other.grid_ && (grid_ == other.grid_ || *grid_ == *other.grid_);
}

namespace {
void require_compatible(const ScalarField& a, const ScalarField& b) {
    if (!a.compatible(b)) throw std::invalid_argument("fields live on different grids");
}
}  // namespace

ScalarField& ScalarField::operator+=(const ScalarField& other) {
    require_compatible(*this, other);
    for (std::size_t n = 0; n < values_.size(); ++n) values_[n] += other.values_[n];
    return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& other) {
    require_compatible(*this, other);
    for (std::size_t n = 0; n < values_.size(); ++n) values_[n] -= other.values_[n];
    return *this;
}

ScalarField& ScalarField::operator*=(double s) {
    for (double& v : values_) v *= s;
    return *this;
}

ScalarField& ScalarField::axpy(double s, const ScalarField& x) {
    require_compatible(*this, x);
    for (std::size_t n = 0; n < values_.size(); ++n) values_[n] += s * x.values_[n];
    return *this;
}

double ScalarField::max() const { return *std::max_element(values_.begin(), values_.end()); }
double ScalarField::min() const { return *std::min_element(values_.begin(), values_.end()); }

double ScalarField::max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
ScalarField operator*(double s, ScalarField a) { return a *= s; }

double integrate(const ScalarField& u) {
    double sum = 0.0;
    for (double v : u.values()) sum += v;
    return sum * u.grid().cell_volume();
}

double inner_product(const ScalarField& u, const ScalarField& v) {
    require_compatible(u, v);
    double sum = 0.0;
    for (std::size_t n = 0; n < u.size(); ++n) sum += u[n] * v[n];
    return sum * u.grid().cell_volume();
}

double norm_l2(const ScalarField& u) { return std::sqrt(inner_product(u, u)); }

void laplacian_apply(const ScalarField& u, ScalarField& out) {
    const Grid& g = u.grid();
    if (!out.compatible(u)) out = ScalarField(u.grid_ptr());
    const std::size_t nx = g.nodes(0);
    const double cx = 1.0 / (g.spacing(0) * g.spacing(0));
    auto in = u.values();
    auto res = out.values();
    if (g.dim() == 1) {
        for (std::size_t i = 0; i < nx; ++i) {
            const double left = i > 0 ? in[i - 1] : 0.0;
            const double right = i + 1 < nx ? in[i + 1] : 0.0;
            res[i] = (left - 2.0 * in[i] + right) * cx;
        }
        return;
    }
    const std::size_t ny = g.nodes(1);
    const double cy = 1.0 / (g.spacing(1) * g.spacing(1));
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            const std::size_t n = i + nx * j;
            const double c = in[n];
            const double left = i > 0 ? in[n - 1] : 0.0;
            const double right = i + 1 < nx ? in[n + 1] : 0.0;
            const double down = j > 0 ? in[n - nx] : 0.0;
            const double up = j + 1 < ny ? in[n + nx] : 0.0;
            res[n] = (left - 2.0 * c + right) * cx + (down - 2.0 * c + up) * cy;
        }
    }
}

ScalarField laplacian_apply(const ScalarField& u) {
    ScalarField out(u.grid_ptr());
    laplacian_apply(u, out);
    return out;
}

ScalarField positive_part(const ScalarField& u) {
    ScalarField out = u;
    for (double& v : out.values()) v = std::max(v, 0.0);
    return out;
}

// ---------------------------------------------------------------------------
// Region

Region Region::box(int dim, const Coord& center, const Coord& half_widths) {
    if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("region dimension must be 1 or 2");
    for (int a = 0; a < dim; ++a) {
        if (!(half_widths[a] > 0.0)) throw std::invalid_argument("box half widths must be positive");
    }
    Region r;
    r.kind_ = Kind::Box;
    r.dim_ = dim;
    r.center_ = center;
    r.half_widths_ = half_widths;
    return r;
}

Region Region::ball(int dim, const Coord& center, double radius) {
    if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("region dimension must be 1 or 2");
    if (!(radius > 0.0)) throw std::invalid_argument("ball radius must be positive");
    Region r;
    r.kind_ = Kind::Ball;
    r.dim_ = dim;
    r.center_ = center;
    r.radius_ = radius;
    return r;
}

bool Region::contains(const Coord& x) const {
    if (kind_ == Kind::Box) {
        for (int a = 0; a < dim_; ++a) {
            if (!(std::abs(x[a] - center_[a]) < half_widths_[a])) return false;
        }
        return true;
    }
    double r2 = 0.0;
    for (int a = 0; a < dim_; ++a) r2 += (x[a] - center_[a]) * (x[a] - center_[a]);
    return r2 < radius_ * radius_;
}

double Region::distance_to_boundary(const Coord& x) const {
    if (kind_ == Kind::Ball) {
        double r2 = 0.0;
        for (int a = 0; a < dim_; ++a) r2 += (x[a] - center_[a]) * (x[a] - center_[a]);
        return std::abs(std::sqrt(r2) - radius_);
    }
    // Signed per-axis excess: positive outside the slab, negative inside.
    double outside2 = 0.0;
    double inside = std::numeric_limits<double>::infinity();
    bool is_outside = false;
    for (int a = 0; a < dim_; ++a) {
        const double excess = std::abs(x[a] - center_[a]) - half_widths_[a];
        if (excess > 0.0) {
            is_outside = true;
            outside2 += excess * excess;
        }
        inside = std::min(inside, -excess);
    }
    return is_outside ? std::sqrt(outside2) : inside;
}

double Region::diameter() const {
    if (kind_ == Kind::Ball) return 2.0 * radius_;
    double d2 = 0.0;
    for (int a = 0; a < dim_; ++a) d2 += 4.0 * half_widths_[a] * half_widths_[a];
    return std::sqrt(d2);
}

void Region::require_inside(const Grid& grid) const {
    if (dim_ != grid.dim()) throw std::invalid_argument("region and grid dimensions differ");
    for (int a = 0; a < dim_; ++a) {
        const double extent = kind_ == Kind::Box ? half_widths_[a] : radius_;
        if (!(center_[a] - extent > grid.lower(a) && center_[a] + extent < grid.upper(a))) {
            throw std::invalid_argument("region closure is not strictly inside the computational box");
        }
    }
}

std::string Region::describe() const {
    std::ostringstream os;
    os.precision(17);
    if (kind_ == Kind::Box) {
        os << "box(center=[";
        for (int a = 0; a < dim_; ++a) os << (a ? "," : "") << center_[a];
        os << "], half_widths=[";
        for (int a = 0; a < dim_; ++a) os << (a ? "," : "") << half_widths_[a];
        os << "])";
    } else {
        os << "ball(center=[";
        for (int a = 0; a < dim_; ++a) os << (a ? "," : "") << center_[a];
        os << "], radius=" << radius_ << ")";
    }
    return os.str();
}

std::vector<std::size_t> boundary_band(const Grid& grid, const Region& region, double width) {
    const double h = grid.max_spacing();
    // Relative slack absorbs rounding in node coordinates.
    constexpr double slack = 1e-9;
    if (width < h * (1.0 - slack)) {
        throw std::invalid_argument("boundary band width must be at least the grid spacing");
    }
    std::vector<std::size_t> band;
    for (std::size_t n = 0; n < grid.size(); ++n) {
        if (region.distance_to_boundary(grid.coord(n)) <= width * (1.0 + slack)) band.push_back(n);
    }
    if (band.empty()) {
        throw std::runtime_error("boundary band is empty: region is under-resolved by the grid");
    }
    return band;
}

std::vector<char> region_mask(const Grid& grid, const Region& region) {
    std::vector<char> mask(grid.size(), 0);
    for (std::size_t n = 0; n < grid.size(); ++n) mask[n] = region.contains(grid.coord(n)) ? 1 : 0;
    return mask;
}

namespace {

// Locate x on axis `a`: returns the lower stencil index in the extended index
// space (-1 is the lower boundary, nodes(a) the upper one) and the weight.
bool locate(const Grid& g, int a, double x, long& lo, double& w) {
    if (!(x >= g.lower(a) && x <= g.upper(a))) return false;
    const double s = (x - g.lower(a)) / g.spacing(a) - 1.0;  // fractional interior index
    const long n = static_cast<long>(g.nodes(a));
    double fl = std::floor(s);
    if (fl > static_cast<double>(n - 1)) fl = static_cast<double>(n - 1);
    if (fl < -1.0) fl = -1.0;
    lo = static_cast<long>(fl);
    w = s - fl;
    return true;
}

double node_value(const ScalarField& u, long i, long j) {
    const Grid& g = u.grid();
    if (i < 0 || i >= static_cast<long>(g.nodes(0))) return 0.0;
    if (g.dim() == 2 && (j < 0 || j >= static_cast<long>(g.nodes(1)))) return 0.0;
    return u[g.flat(static_cast<std::size_t>(i), static_cast<std::size_t>(j))];
}

}  // namespace

double interpolate(const ScalarField& u, const Coord& x) {
    const Grid& g = u.grid();
    long i0 = 0;
    double wx = 0.0;
    if (!locate(g, 0, x[0], i0, wx)) return 0.0;
    if (g.dim() == 1) {
        return (1.0 - wx) * node_value(u, i0, 0) + wx * node_value(u, i0 + 1, 0);
    }
    long j0 = 0;
    double wy = 0.0;
    if (!locate(g, 1, x[1], j0, wy)) return 0.0;
    return (1.0 - wx) * (1.0 - wy) * node_value(u, i0, j0) + wx * (1.0 - wy) * node_value(u, i0 + 1, j0) +
           (1.0 - wx) * wy * node_value(u, i0, j0 + 1) + wx * wy * node_value(u, i0 + 1, j0 + 1);
}

}  // namespace pnls
