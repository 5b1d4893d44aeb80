#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "easel/phantom.hpp"

using namespace easel;

TEST_CASE("shepp-logan has a positive center and empty corners") {
    const ImageGrid grid{64, 64, 1.0};
    const Image p = shepp_logan(grid);
    REQUIRE(p.at(32, 32) > 0.0);
    REQUIRE(p.at(0, 0) == 0.0);
    REQUIRE(p.at(63, 0) == 0.0);
    REQUIRE(p.at(0, 63) == 0.0);
    REQUIRE(p.at(63, 63) == 0.0);
    for (double v : p.values) {
        REQUIRE(v >= 0.0);
        REQUIRE(v <= 1.0);
    }
}

TEST_CASE("shepp-logan renderings are consistent across resolutions away from edges") {
    const Image fine = shepp_logan(ImageGrid{64, 64, 1.0});
    const Image coarse = shepp_logan(ImageGrid{32, 32, 2.0});

    // Compare 2x2 block averages of the fine rendering against the coarse one,
    // skipping ellipse boundaries: the coarse neighborhood must be constant and
    // the fine block uniform, otherwise sub-pixel features dominate the error.
    int compared = 0;
    for (int iy = 1; iy < 31; ++iy)
        for (int ix = 1; ix < 31; ++ix) {
            bool flat = true;
            for (int dy = -1; dy <= 1 && flat; ++dy)
                for (int dx = -1; dx <= 1 && flat; ++dx)
                    if (std::abs(coarse.at(ix + dx, iy + dy) - coarse.at(ix, iy)) > 1e-12)
                        flat = false;
            for (int dy = 0; dy < 2 && flat; ++dy)
                for (int dx = 0; dx < 2 && flat; ++dx)
                    if (std::abs(fine.at(2 * ix + dx, 2 * iy + dy) - fine.at(2 * ix, 2 * iy)) > 1e-12)
                        flat = false;
            if (!flat) continue;
            const double block = 0.25 * (fine.at(2 * ix, 2 * iy) + fine.at(2 * ix + 1, 2 * iy) +
                                         fine.at(2 * ix, 2 * iy + 1) + fine.at(2 * ix + 1, 2 * iy + 1));
            REQUIRE(std::abs(block - coarse.at(ix, iy)) <= 0.05);
            ++compared;
        }
    REQUIRE(compared > 300);
}

TEST_CASE("random ellipse phantoms are deterministic per seed") {
    const ImageGrid grid{48, 48, 1.0};
    const Image a = random_ellipse_phantom(grid, 4, 10, RngStream(12));
    const Image b = random_ellipse_phantom(grid, 4, 10, RngStream(12));
    REQUIRE(a.values == b.values);
    const Image c = random_ellipse_phantom(grid, 4, 10, RngStream(13));
    REQUIRE(a.values != c.values);
}

TEST_CASE("random ellipse phantoms stay in [0, 1]") {
    const ImageGrid grid{32, 32, 1.0};
    for (int i = 0; i < 20; ++i) {
        const Image p = random_ellipse_phantom(grid, 4, 10, RngStream(1000 + i));
        for (double v : p.values) {
            REQUIRE(v >= 0.0);
            REQUIRE(v <= 1.0);
        }
    }
}

TEST_CASE("phantom family pixel mean is stable across disjoint seed ranges") {
    const ImageGrid grid{32, 32, 1.0};
    auto family_mean = [&](int seed0) {
        double acc = 0.0;
        for (int i = 0; i < 100; ++i) {
            const Image p = random_ellipse_phantom(grid, 4, 10, RngStream(seed0 + i));
            for (double v : p.values) acc += v;
        }
        return acc / (100.0 * grid.pixel_count());
    };
    const double m1 = family_mean(0);
    const double m2 = family_mean(100'000);
    REQUIRE(std::abs(m1 - m2) <= 0.1 * std::max(m1, m2));
}

TEST_CASE("bad ellipse count ranges are rejected") {
    const ImageGrid grid{16, 16, 1.0};
    REQUIRE_THROWS_AS(random_ellipse_phantom(grid, 5, 3, RngStream(1)), std::invalid_argument);
}
