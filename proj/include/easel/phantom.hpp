// Synthetic phantoms: additive ellipses rendered by point-in-ellipse tests at
// pixel centers, on normalized [-1,1]^2 coordinates spanning the grid.
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "easel/rng.hpp"
#include "easel/types.hpp"

namespace easel {

struct Ellipse {
    double cx = 0.0, cy = 0.0;       // center, normalized coordinates
    double a = 0.5, b = 0.5;         // semi-axes
    double phi = 0.0;                // rotation, radians
    double value = 0.0;              // additive attenuation
};

struct EllipsePhantomSpec {
    std::vector<Ellipse> ellipses;
    ImageGrid grid;
};

inline bool inside_ellipse(const Ellipse& e, double x, double y) {
    const double c = std::cos(e.phi), s = std::sin(e.phi);
    const double dx = x - e.cx, dy = y - e.cy;
    const double xr = c * dx + s * dy;
    const double yr = -s * dx + c * dy;
    return (xr * xr) / (e.a * e.a) + (yr * yr) / (e.b * e.b) <= 1.0;
}

inline Image render_phantom(const EllipsePhantomSpec& spec) {
    spec.grid.validate();
    Image img(spec.grid);
    const double hx = 0.5 * spec.grid.extent_x();
    const double hy = 0.5 * spec.grid.extent_y();
    for (int iy = 0; iy < spec.grid.ny; ++iy) {
        for (int ix = 0; ix < spec.grid.nx; ++ix) {
            const double x = spec.grid.pixel_center_x(ix) / hx;
            const double y = spec.grid.pixel_center_y(iy) / hy;
            double v = 0.0;
            for (const Ellipse& e : spec.ellipses)
                if (inside_ellipse(e, x, y)) v += e.value;
            img.at(ix, iy) = std::max(0.0, v);
        }
    }
    return img;
}

// The ten-ellipse Shepp-Logan head phantom with the usual contrast-enhanced
// values, so the rendered image lies in [0, 1].
inline std::vector<Ellipse> shepp_logan_ellipses() {
    return {
        {0.0, 0.0, 0.69, 0.92, 0.0, 1.0},
        {0.0, -0.0184, 0.6624, 0.874, 0.0, -0.98},
        {0.22, 0.0, 0.11, 0.31, -0.31415926535897931, -0.2},
        {-0.22, 0.0, 0.16, 0.41, 0.31415926535897931, -0.2},
        {0.0, 0.35, 0.21, 0.25, 0.0, 0.4},
        {0.0, 0.1, 0.046, 0.046, 0.0, 0.4},
        {0.0, -0.1, 0.046, 0.046, 0.0, 0.4},
        {-0.08, -0.605, 0.046, 0.023, 0.0, 0.4},
        {0.0, -0.605, 0.023, 0.023, 0.0, 0.4},
        {0.06, -0.605, 0.023, 0.046, 0.0, 0.4},
    };
}

inline Image shepp_logan(const ImageGrid& grid) {
    return render_phantom({shepp_logan_ellipses(), grid});
}

// Body outline plus uniformly sampled interior ellipses with random
// attenuation increments; values clamp to [0, 1]. Deterministic per stream.
inline Image random_ellipse_phantom(const ImageGrid& grid, int n_ellipses_min, int n_ellipses_max,
                                    RngStream rng) {
    if (n_ellipses_min < 0 || n_ellipses_max < n_ellipses_min)
        throw std::invalid_argument("random_ellipse_phantom: bad ellipse count range");

    EllipsePhantomSpec spec;
    spec.grid = grid;
    spec.ellipses.push_back({0.0, 0.0,
                             0.78 + 0.1 * rng.uniform(), 0.78 + 0.1 * rng.uniform(),
                             0.0, 0.25 + 0.15 * rng.uniform()});
    const int n = n_ellipses_min +
                  static_cast<int>(rng.uniform() * (n_ellipses_max - n_ellipses_min + 1));
    for (int i = 0; i < std::min(n, n_ellipses_max); ++i) {
        Ellipse e;
        e.cx = -0.55 + 1.1 * rng.uniform();
        e.cy = -0.55 + 1.1 * rng.uniform();
        e.a = 0.05 + 0.30 * rng.uniform();
        e.b = 0.05 + 0.30 * rng.uniform();
        e.phi = std::numbers::pi * rng.uniform();
        e.value = -0.2 + 0.6 * rng.uniform();
        spec.ellipses.push_back(e);
    }
    Image img = render_phantom(spec);
    for (double& v : img.values) v = std::clamp(v, 0.0, 1.0);
    return img;
}

}  // namespace easel
