#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "tidb/container.hpp"
#include "tidb/errors.hpp"
#include "tidb/scaling.hpp"

using namespace tidb;

namespace {

// Independent dense-quadrature evaluation of one tensor entry, used as the
// oracle for the production build. Plain midpoint sum at a finer step.
double psi_oracle(const ScaleGrid& g, double alpha, int n, int m, int j, double step) {
    double half = 1.0 / alpha;
    int count = std::max(2, int(std::llround(2.0 * half / step)));
    double h = 2.0 * half / count;
    double acc = 0.0;
    for (int i = 0; i < count; ++i) {
        double d = -half + (i + 0.5) * h;
        acc += kappa_n(n - g.scale_at(j + d) * m) * kappa_s(d, alpha) * h;
    }
    return acc;
}

ScaleGrid table2_grid() { return build_scale_grid(0.25, 8, 25, 50.0, 4, 64); }
ScaleGrid toy_grid() { return build_scale_grid(0.32, 4, 3, 50.0, 1, 16); }

}  // namespace

TEST_CASE("scale grid matches hand-evaluated values") {
    ScaleGrid g = table2_grid();
    CHECK(g.taus[0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(g.taus[8] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(g.taus[24] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(g.scales[0] == doctest::Approx(0.78125).epsilon(1e-12));
    CHECK(g.scales[24] == doctest::Approx(6.25).epsilon(1e-12));
    CHECK(g.kernel_frames == 400);
    for (int j = 1; j < g.num_scales; ++j) CHECK(g.scales[j] > g.scales[j - 1]);
}

TEST_CASE("identity grid") {
    ScaleGrid g = build_scale_grid(1, 1, 1, 1, 1, 1);
    CHECK(g.taus == std::vector<double>{1.0});
    CHECK(g.scales == std::vector<double>{1.0});
    CHECK(g.kernel_frames == 1);
}

TEST_CASE("scale grid rejects bad parameters") {
    CHECK_THROWS_AS(build_scale_grid(0.0, 8, 25, 50, 4, 64), ParamError);
    CHECK_THROWS_AS(build_scale_grid(0.25, -1, 25, 50, 4, 64), ParamError);
    CHECK_THROWS_AS(build_scale_grid(0.25, 8, 0, 50, 4, 64), ParamError);
    CHECK_THROWS_AS(build_scale_grid(0.25, 8, 25, 50, 4, 64, 399), CapacityError);
}

TEST_CASE("interpolation kernel") {
    CHECK(kappa_n(0.0) == 1.0);
    CHECK(kappa_n(2.0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(kappa_n(0.5) == doctest::Approx(2.0 / M_PI).epsilon(1e-12));
}

TEST_CASE("scale smoothing kernel") {
    CHECK(kappa_s(0.0, 1.0) == 1.0);
    CHECK(kappa_s(1.2, 1.0) == 0.0);
    CHECK(kappa_s(1.0, 1.0) == 0.0);  // boundary, H(0) = 0
    CHECK(kappa_s(0.5, 1.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK_THROWS_AS(kappa_s(0.1, 0.0), ParamError);

    // unit integral for several alphas
    for (double alpha : {0.5, 1.0, 3.0}) {
        double half = 1.0 / alpha, h = 2.0 * half / 40001;
        double mass = 0.0;
        for (int i = 0; i < 40001; ++i) mass += kappa_s(-half + (i + 0.5) * h, alpha) * h;
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));
    }
}

TEST_CASE("tensor shape and trivial columns") {
    ScaleGrid g = table2_grid();
    ScalingTensor psi = build_scaling_tensor(g);
    CHECK(psi.values.size() == std::size_t(400) * 64 * 25);

    // m = 0: mass exactly at frame zero, sinc zeros elsewhere
    for (int j = 0; j < g.num_scales; j += 6) {
        int argmax = 0;
        double best = 0.0;
        for (int n = 0; n < psi.frames(); ++n) {
            double v = std::fabs(psi.at(n, 0, j));
            if (v > best) {
                best = v;
                argmax = n;
            }
        }
        CHECK(argmax == 0);
        for (int n = 1; n < psi.frames(); ++n) CHECK(std::fabs(psi.at(n, 0, j)) < 1e-6);
    }
}

TEST_CASE("tensor columns match the dense-quadrature oracle") {
    ScaleGrid g = toy_grid();
    ScalingTensor psi = build_scaling_tensor(g, 1.0, 0.05);
    double max_err = 0.0;
    for (int j = 0; j < g.num_scales; ++j)
        for (int m = 0; m < g.pattern_frames; m += 3)
            for (int n = 0; n < g.kernel_frames; n += 2) {
                double want = psi_oracle(g, 1.0, n, m, j, 0.005);
                max_err = std::max(max_err, std::fabs(psi.at(n, m, j) - want));
            }
    CHECK(max_err <= 1e-3);

    // interior column sums carry unit mass
    for (int j = 0; j < g.num_scales; ++j)
        for (int m = 1; m < g.pattern_frames; ++m) {
            double c = g.scales[j] * m;
            if (c < 10.0 || c > g.kernel_frames - 11.0) continue;
            double sum = 0.0;
            for (int n = 0; n < g.kernel_frames; ++n) sum += psi.at(n, m, j);
            CHECK(sum > 0.98);
            CHECK(sum < 1.02);
        }
}

TEST_CASE("partition of unity and peak location on the full grid") {
    for (const ScaleGrid& g : {table2_grid(), toy_grid()}) {
        ScalingTensor psi = build_scaling_tensor(g);
        for (int j = 0; j < g.num_scales; ++j) {
            // interior = at least the truncation half-width plus the scale
            // smoothing spread away from both kernel edges
            double spread_per_m = (g.scale_at(j + 1.0) - g.scale_at(j - 1.0)) / 2.0;
            for (int m = 0; m < g.pattern_frames; ++m) {
                double centre = g.scales[j] * m;
                double window = 10.0 + spread_per_m * m;
                int argmax = 0;
                double best = 0.0, sum = 0.0;
                for (int n = 0; n < g.kernel_frames; ++n) {
                    double v = psi.at(n, m, j);
                    sum += v;
                    if (std::fabs(v) > best) {
                        best = std::fabs(v);
                        argmax = n;
                    }
                }
                CHECK(std::fabs(argmax - centre) <= 1.0);
                if (centre >= window && centre <= g.kernel_frames - 1 - window) {
                    CHECK(std::fabs(sum - 1.0) <= 0.02);
                }
            }
        }
    }
}

TEST_CASE("column mass is concentrated near the stretched position") {
    ScaleGrid g = table2_grid();
    ScalingTensor psi = build_scaling_tensor(g);
    for (int j = 0; j < g.num_scales; j += 4) {
        double spread_per_m = (g.scale_at(j + 1.0) - g.scale_at(j - 1.0)) / 2.0;
        for (int m = 1; m < g.pattern_frames; m += 7) {
            double centre = g.scales[j] * m;
            double window = 10.0 + spread_per_m * m;
            double inside = 0.0, total = 0.0;
            for (int n = 0; n < g.kernel_frames; ++n) {
                double v = psi.at(n, m, j);
                total += v * v;
                if (std::fabs(n - centre) <= window) inside += v * v;
            }
            CHECK(inside / total >= 0.95);
        }
    }
}

TEST_CASE("quadrature refinement is stable") {
    ScaleGrid g = toy_grid();
    ScalingTensor a = build_scaling_tensor(g, 1.0, 0.05);
    ScalingTensor b = build_scaling_tensor(g, 1.0, 0.025);
    double max_diff = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i)
        max_diff = std::max(max_diff, std::fabs(a.values[i] - b.values[i]));
    CHECK(max_diff <= 1e-3);
}

TEST_CASE("construction is deterministic and matches the serial reference") {
    ScaleGrid g = toy_grid();
    ScalingTensor a = build_scaling_tensor(g, 1.0, 0.05);
    ScalingTensor b = build_scaling_tensor(g, 1.0, 0.05);
    CHECK(a.values == b.values);
    ScalingTensor r = ref::build_scaling_tensor(g, 1.0, 0.05);
    CHECK(a.values == r.values);
}

TEST_CASE("large alpha degenerates to plain resampling") {
    ScaleGrid g = toy_grid();
    ScalingTensor psi = build_scaling_tensor(g, 100.0, 0.05);
    double max_diff = 0.0;
    for (int j = 0; j < g.num_scales; ++j)
        for (int m = 0; m < g.pattern_frames; ++m)
            for (int n = 0; n < g.kernel_frames; ++n)
                max_diff = std::max(
                    max_diff, std::fabs(psi.at(n, m, j) - kappa_n(n - g.scales[j] * m)));
    CHECK(max_diff <= 1e-3);
}

TEST_CASE("tensor build rejects bad parameters") {
    ScaleGrid g = toy_grid();
    CHECK_THROWS_AS(build_scaling_tensor(g, 0.0), ParamError);
    CHECK_THROWS_AS(build_scaling_tensor(g, 1.0, 0.6), ParamError);
    CHECK_THROWS_AS(build_scaling_tensor(g, 1.0, 0.05, 1024), CapacityError);
}

TEST_CASE("scaling tensor container round trip is bit exact") {
    namespace fs = std::filesystem;
    ScaleGrid g = toy_grid();
    ScalingTensor psi = build_scaling_tensor(g);
    fs::path path = fs::temp_directory_path() / "tidb_test_psi.tidb";
    io::save_scaling_tensor(path.string(), psi);
    ScalingTensor back = io::load_scaling_tensor(path.string());
    CHECK(back.values == psi.values);
    CHECK(back.grid.taus == psi.grid.taus);
    CHECK(back.grid.scales == psi.grid.scales);
    CHECK(back.grid.kernel_frames == psi.grid.kernel_frames);
    CHECK(back.alpha == psi.alpha);
    CHECK(back.quadrature_step == psi.quadrature_step);

    // wrong payload type is rejected
    fs::path fpath = fs::temp_directory_path() / "tidb_test_feat.tidb";
    io::save_feature_map(fpath.string(), FeatureMap::zeros(2, 0, 3, 50.0));
    CHECK_THROWS_AS(io::load_scaling_tensor(fpath.string()), FormatError);

    // truncated file is rejected
    fs::resize_file(path, fs::file_size(path) / 2);
    CHECK_THROWS_AS(io::load_scaling_tensor(path.string()), FormatError);
    fs::remove(path);
    fs::remove(fpath);
}
