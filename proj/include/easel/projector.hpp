// Fan-beam projection operators on a centered pixel grid.
//
// One ray-traversal routine (exact intersection lengths, Siddon-style
// parametric march) feeds the forward projector, the back-projector, the SQS
// denominator and the dense test matrix, so A and A^T are matched by
// construction: the back-projector scatters exactly the weights the forward
// projector gathers.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <thread>
#include <vector>

#include "easel/types.hpp"

namespace easel {

// Global thread budget for the operators. 0 = hardware concurrency.
inline std::atomic<int>& thread_count_slot() {
    static std::atomic<int> n{0};
    return n;
}
inline void set_num_threads(int n) { thread_count_slot().store(n); }
inline int num_threads() {
    int n = thread_count_slot().load();
    if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
    return std::max(1, n);
}

namespace detail {

inline void parallel_for(int n, int n_threads, const auto& body) {
    n_threads = std::min(n_threads, n);
    if (n_threads <= 1) {
        body(0, n, 0);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    const int chunk = (n + n_threads - 1) / n_threads;
    for (int t = 0; t < n_threads; ++t) {
        const int lo = t * chunk;
        const int hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&body, lo, hi, t] { body(lo, hi, t); });
    }
    for (auto& th : pool) th.join();
}

struct Ray {
    double sx, sy;  // source
    double dx, dy;  // direction (not normalized), parameter t in [0,1]
    double length;  // Euclidean length of the full segment
};

inline Ray make_ray(const FanBeamGeometry& g, int a, int k) {
    const double theta = g.angle(a);
    const double ux = std::cos(theta), uy = std::sin(theta);
    const double tx = -uy, ty = ux;
    const double s = g.det_coord(k);
    const double sx = g.sad * ux, sy = g.sad * uy;
    const double ex = (g.sad - g.sdd) * ux + s * tx;
    const double ey = (g.sad - g.sdd) * uy + s * ty;
    Ray r;
    r.sx = sx;
    r.sy = sy;
    r.dx = ex - sx;
    r.dy = ey - sy;
    r.length = std::hypot(r.dx, r.dy);
    return r;
}

// Visits every pixel the ray crosses with its exact intersection length.
// Pixel classification uses the segment midpoint, which is robust when the
// ray runs along a grid line.
template <typename Visit>
inline void traverse(const Ray& r, const ImageGrid& grid, Visit&& visit) {
    const double x0 = -0.5 * grid.extent_x(), x1 = 0.5 * grid.extent_x();
    const double y0 = -0.5 * grid.extent_y(), y1 = 0.5 * grid.extent_y();
    const double px = grid.pixel_size;

    double t_lo = 0.0, t_hi = 1.0;
    const double tiny = 1e-12 * (std::abs(r.dx) + std::abs(r.dy) + 1.0);
    // Slab clipping against the grid bounding box.
    if (std::abs(r.dx) < tiny) {
        if (r.sx < x0 || r.sx > x1) return;
    } else {
        double ta = (x0 - r.sx) / r.dx, tb = (x1 - r.sx) / r.dx;
        if (ta > tb) std::swap(ta, tb);
        t_lo = std::max(t_lo, ta);
        t_hi = std::min(t_hi, tb);
    }
    if (std::abs(r.dy) < tiny) {
        if (r.sy < y0 || r.sy > y1) return;
    } else {
        double ta = (y0 - r.sy) / r.dy, tb = (y1 - r.sy) / r.dy;
        if (ta > tb) std::swap(ta, tb);
        t_lo = std::max(t_lo, ta);
        t_hi = std::min(t_hi, tb);
    }
    if (t_lo >= t_hi) return;

    // Parametric steps between successive x- and y-plane crossings.
    const double step_tx = std::abs(r.dx) < tiny ? std::numeric_limits<double>::infinity()
                                                 : px / std::abs(r.dx);
    const double step_ty = std::abs(r.dy) < tiny ? std::numeric_limits<double>::infinity()
                                                 : px / std::abs(r.dy);

    auto first_crossing = [&](double s0, double d, double lo, double step) {
        if (!std::isfinite(step)) return std::numeric_limits<double>::infinity();
        const double pos = s0 + t_lo * d;
        double idx = (pos - lo) / px;
        double next_plane = d > 0 ? std::ceil(idx) : std::floor(idx);
        if (next_plane == idx) next_plane += (d > 0 ? 1.0 : -1.0);
        double t = (lo + next_plane * px - s0) / d;
        while (t <= t_lo) t += step;  // guard against rounding at the entry plane
        return t;
    };

    double tx_next = first_crossing(r.sx, r.dx, x0, step_tx);
    double ty_next = first_crossing(r.sy, r.dy, y0, step_ty);

    double t = t_lo;
    while (t < t_hi) {
        double t_next = std::min({tx_next, ty_next, t_hi});
        if (t_next <= t) t_next = t_hi;  // no progress left; close out
        const double tm = 0.5 * (t + t_next);
        const double xm = r.sx + tm * r.dx;
        const double ym = r.sy + tm * r.dy;
        int ix = static_cast<int>(std::floor((xm - x0) / px));
        int iy = static_cast<int>(std::floor((y1 - ym) / px));
        ix = std::clamp(ix, 0, grid.nx - 1);
        iy = std::clamp(iy, 0, grid.ny - 1);
        visit(ix, iy, (t_next - t) * r.length);
        t = t_next;
        if (tx_next <= t) tx_next += step_tx;
        if (ty_next <= t) ty_next += step_ty;
    }
}

}  // namespace detail

// Rejects grids whose support can extend beyond the detector's field of view;
// truncated rays would make A and the imaging model inconsistent.
inline void require_grid_in_fov(const FanBeamGeometry& g, const ImageGrid& grid, const char* where) {
    const double half_diag = 0.5 * std::hypot(grid.extent_x(), grid.extent_y());
    const double fov = g.fov_radius();
    if (half_diag > fov)
        throw std::invalid_argument(std::string(where) + ": grid half-diagonal " +
                                    std::to_string(half_diag) + " mm exceeds detector field of view " +
                                    std::to_string(fov) + " mm (rays would truncate the object)");
}

// Line integrals [Ax]_i, one ray per detector cell center.
inline Sinogram forward_project(const Image& image, const FanBeamGeometry& geometry) {
    image.validate();
    geometry.validate();
    require_grid_in_fov(geometry, image.grid, "forward_project");

    Sinogram sino(geometry, SinogramDomain::LineIntegral);
    const ImageGrid grid = image.grid;
    detail::parallel_for(geometry.n_angles, num_threads(), [&](int a_lo, int a_hi, int) {
        for (int a = a_lo; a < a_hi; ++a) {
            for (int k = 0; k < geometry.n_det; ++k) {
                double acc = 0.0;
                detail::traverse(detail::make_ray(geometry, a, k), grid,
                                 [&](int ix, int iy, double len) { acc += len * image.at(ix, iy); });
                sino.at(a, k) = acc;
            }
        }
    });
    return sino;
}

// Exact transpose of forward_project under the same ray weights.
inline Image back_project(const Sinogram& sino, const FanBeamGeometry& geometry, const ImageGrid& grid) {
    sino.validate();
    grid.validate();
    require_same_geometry(sino, geometry, "back_project");

    const int nt = std::min(num_threads(), geometry.n_angles);
    std::vector<Image> partial(nt, Image(grid));
    detail::parallel_for(geometry.n_angles, nt, [&](int a_lo, int a_hi, int tid) {
        Image& out = partial[tid];
        for (int a = a_lo; a < a_hi; ++a) {
            for (int k = 0; k < geometry.n_det; ++k) {
                const double s = sino.at(a, k);
                if (s == 0.0) continue;
                detail::traverse(detail::make_ray(geometry, a, k), grid,
                                 [&](int ix, int iy, double len) { out.at(ix, iy) += len * s; });
            }
        }
    });
    // Fixed reduction order keeps results independent of scheduling.
    Image result(grid);
    for (const Image& p : partial)
        for (std::size_t j = 0; j < result.values.size(); ++j) result.values[j] += p.values[j];
    return result;
}

// Per-pixel SQS curvature A^T(A 1): the component-wise denominator of the
// data-consistency update.
inline Image sqs_denominator(const FanBeamGeometry& geometry, const ImageGrid& grid) {
    Image ones(grid, 1.0);
    return back_project(forward_project(ones, geometry), geometry, grid);
}

// Explicit system matrix, for oracle tests only.
struct DenseMatrix {
    std::size_t rows = 0, cols = 0;
    std::vector<double> a;  // row-major

    double& at(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

    std::vector<double> apply(const std::vector<double>& x) const {
        std::vector<double> y(rows, 0.0);
        for (std::size_t i = 0; i < rows; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < cols; ++j) acc += a[i * cols + j] * x[j];
            y[i] = acc;
        }
        return y;
    }

    std::vector<double> apply_transpose(const std::vector<double>& s) const {
        std::vector<double> x(cols, 0.0);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) x[j] += a[i * cols + j] * s[i];
        return x;
    }
};

inline constexpr std::size_t kDefaultDenseCap = 10'000'000;

inline DenseMatrix build_dense_matrix(const FanBeamGeometry& geometry, const ImageGrid& grid,
                                      std::size_t max_entries = kDefaultDenseCap) {
    geometry.validate();
    grid.validate();
    require_grid_in_fov(geometry, grid, "build_dense_matrix");
    const std::size_t rows = geometry.ray_count();
    const std::size_t cols = grid.pixel_count();
    if (rows > max_entries / cols)
        throw std::invalid_argument("build_dense_matrix: " + std::to_string(rows) + "x" +
                                    std::to_string(cols) + " exceeds the entry cap");

    DenseMatrix m;
    m.rows = rows;
    m.cols = cols;
    m.a.assign(rows * cols, 0.0);
    // Sequential on purpose: this is the deterministic oracle path.
    for (int a = 0; a < geometry.n_angles; ++a) {
        for (int k = 0; k < geometry.n_det; ++k) {
            const std::size_t i = static_cast<std::size_t>(a) * geometry.n_det + k;
            detail::traverse(detail::make_ray(geometry, a, k), grid,
                             [&](int ix, int iy, double len) {
                                 m.at(i, static_cast<std::size_t>(iy) * grid.nx + ix) += len;
                             });
        }
    }
    return m;
}

}  // namespace easel
