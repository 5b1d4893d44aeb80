// Core domain types: image grid, fan-beam geometry, sinogram.
#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace easel {

struct ImageGrid {
    int nx = 0;
    int ny = 0;
    double pixel_size = 1.0;  // mm

    void validate() const {
        if (nx < 1 || ny < 1)
            throw std::invalid_argument("ImageGrid: nx and ny must be >= 1");
        if (!(pixel_size > 0.0))
            throw std::invalid_argument("ImageGrid: pixel_size must be > 0");
    }

    std::size_t pixel_count() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }

    // Physical extent, centered on the rotation axis.
    double extent_x() const { return nx * pixel_size; }
    double extent_y() const { return ny * pixel_size; }

    // Center of pixel (ix, iy); iy runs top-down, physical y runs up.
    double pixel_center_x(int ix) const { return (ix + 0.5) * pixel_size - 0.5 * extent_x(); }
    double pixel_center_y(int iy) const { return 0.5 * extent_y() - (iy + 0.5) * pixel_size; }

    bool operator==(const ImageGrid&) const = default;
};

struct Image {
    ImageGrid grid;
    std::vector<double> values;  // row-major, index = iy * nx + ix

    Image() = default;
    explicit Image(const ImageGrid& g, double fill = 0.0)
        : grid(g), values(g.pixel_count(), fill) {
        grid.validate();
    }

    double& at(int ix, int iy) { return values[static_cast<std::size_t>(iy) * grid.nx + ix]; }
    double at(int ix, int iy) const { return values[static_cast<std::size_t>(iy) * grid.nx + ix]; }

    void validate() const {
        grid.validate();
        if (values.size() != grid.pixel_count())
            throw std::invalid_argument("Image: values length does not match grid");
        for (double v : values)
            if (!std::isfinite(v))
                throw std::invalid_argument("Image: non-finite value");
    }
};

struct FanBeamGeometry {
    int n_angles = 0;
    int n_det = 0;
    double det_spacing = 1.0;  // mm, flat equispaced detector
    double sad = 500.0;        // source-to-axis distance, mm
    double sdd = 1000.0;       // source-to-detector distance, mm

    void validate() const {
        if (n_angles < 1 || n_det < 1)
            throw std::invalid_argument("FanBeamGeometry: n_angles and n_det must be >= 1");
        if (!(det_spacing > 0.0))
            throw std::invalid_argument("FanBeamGeometry: det_spacing must be > 0");
        if (!(sad > 0.0))
            throw std::invalid_argument("FanBeamGeometry: sad must be > 0");
        if (sdd < sad)
            throw std::invalid_argument("FanBeamGeometry: sdd must be >= sad");
    }

    // View angles are uniform over [0, 2*pi).
    double angle(int a) const { return 2.0 * std::numbers::pi * a / n_angles; }

    std::size_t ray_count() const { return static_cast<std::size_t>(n_angles) * static_cast<std::size_t>(n_det); }

    // Signed detector coordinate of cell k, measured in the detector plane.
    double det_coord(int k) const { return (k - 0.5 * (n_det - 1)) * det_spacing; }

    // Radius of the field of view at the isocenter covered by the detector.
    double fov_radius() const {
        const double half_det = 0.5 * n_det * det_spacing;
        return sad * std::sin(std::atan2(half_det, sdd));
    }

    bool operator==(const FanBeamGeometry&) const = default;
};

enum class SinogramDomain { LineIntegral, PhotonCount, Weight };

inline std::string to_string(SinogramDomain d) {
    switch (d) {
        case SinogramDomain::LineIntegral: return "line_integral";
        case SinogramDomain::PhotonCount: return "photon_count";
        case SinogramDomain::Weight: return "weight";
    }
    return "unknown";
}

inline SinogramDomain sinogram_domain_from_string(const std::string& s) {
    if (s == "line_integral") return SinogramDomain::LineIntegral;
    if (s == "photon_count") return SinogramDomain::PhotonCount;
    if (s == "weight") return SinogramDomain::Weight;
    throw std::invalid_argument("unknown sinogram domain tag: " + s);
}

struct Sinogram {
    FanBeamGeometry geometry;
    std::vector<double> values;  // angle-major, index = a * n_det + k
    SinogramDomain domain = SinogramDomain::LineIntegral;

    Sinogram() = default;
    Sinogram(const FanBeamGeometry& g, SinogramDomain d, double fill = 0.0)
        : geometry(g), values(g.ray_count(), fill), domain(d) {
        geometry.validate();
    }

    double& at(int a, int k) { return values[static_cast<std::size_t>(a) * geometry.n_det + k]; }
    double at(int a, int k) const { return values[static_cast<std::size_t>(a) * geometry.n_det + k]; }

    void validate() const {
        geometry.validate();
        if (values.size() != geometry.ray_count())
            throw std::invalid_argument("Sinogram: values length does not match geometry");
    }
};

// Grid/geometry compatibility check used by operators that take both.
inline void require_same_geometry(const Sinogram& s, const FanBeamGeometry& g, const char* where) {
    if (!(s.geometry == g))
        throw std::invalid_argument(std::string(where) + ": sinogram geometry mismatch");
}

}  // namespace easel
