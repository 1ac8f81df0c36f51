#include "tidb/scaling.hpp"

#include <cmath>
#include <string>

#include "tidb/errors.hpp"

namespace tidb {

double kappa_n(double d) {
    double x = M_PI * d;
    if (std::fabs(x) < 1e-9) return 1.0;
    return std::sin(x) / x;
}

double kappa_s(double d, double alpha) {
    if (alpha <= 0.0) throw ParamError("kappa_s: alpha must be positive");
    double ad = alpha * std::fabs(d);
    if (ad >= 1.0) return 0.0;  // Heaviside with H(0) = 0
    double c = std::cos(alpha * d * M_PI / 2.0);
    return alpha * c * c;
}

double ScaleGrid::scale_at(double bin) const {
    return frame_rate * tau0 * std::exp2(bin / scales_per_octave) * beats / pattern_frames;
}

ScaleGrid build_scale_grid(double tau0, int scales_per_octave, int num_scales,
                           double frame_rate, int beats, int pattern_frames,
                           int kernel_frames_cap) {
    if (tau0 <= 0.0 || scales_per_octave <= 0 || num_scales < 1 || frame_rate <= 0.0 ||
        beats <= 0 || pattern_frames <= 0) {
        throw ParamError("build_scale_grid: all parameters must be positive");
    }
    ScaleGrid g;
    g.tau0 = tau0;
    g.scales_per_octave = scales_per_octave;
    g.num_scales = num_scales;
    g.frame_rate = frame_rate;
    g.beats = beats;
    g.pattern_frames = pattern_frames;
    g.taus.resize(num_scales);
    g.scales.resize(num_scales);
    for (int j = 0; j < num_scales; ++j) {
        g.taus[j] = tau0 * std::exp2(double(j) / scales_per_octave);
        g.scales[j] = frame_rate * g.taus[j] * beats / pattern_frames;
    }
    double longest = g.scales.back() * pattern_frames;
    if (longest > double(kernel_frames_cap)) {
        throw CapacityError("build_scale_grid: kernel length " + std::to_string(longest) +
                            " exceeds cap " + std::to_string(kernel_frames_cap));
    }
    g.kernel_frames = std::max(1, int(std::ceil(longest)));
    return g;
}

namespace {

struct Quadrature {
    std::vector<double> offsets;  // node offsets relative to the centre bin j
    std::vector<double> weights;  // kappa_s(offset) * step
};

// Midpoint node count over the support [-1/alpha, 1/alpha]. At least two
// nodes: a single midpoint aliases the cosine term and loses the unit-mass
// property of kappa_s. `rate` is the fastest movement of the resampling
// centre s(j~)*m per scale bin; the base step is refined until adjacent
// nodes place their centres within half a frame, otherwise the sinc ripple
// is under-sampled in the widest columns.
int node_count(double alpha, double step, double rate) {
    int base = std::max(2, int(std::llround(2.0 / alpha / step)));
    int needed = int(std::ceil(4.0 * rate / alpha));
    return std::max(base, needed);
}

Quadrature make_quadrature(double alpha, int count) {
    double half = 1.0 / alpha;
    double h = 2.0 * half / count;
    Quadrature q;
    q.offsets.resize(count);
    q.weights.resize(count);
    for (int i = 0; i < count; ++i) {
        double d = -half + (i + 0.5) * h;
        q.offsets[i] = d;
        q.weights[i] = kappa_s(d, alpha) * h;
    }
    return q;
}

double centre_rate(const ScaleGrid& grid, double alpha, int j, int m) {
    return m * grid.scale_at(j + 1.0 / alpha) * M_LN2 / grid.scales_per_octave;
}

void validate_tensor_args(const ScaleGrid& grid, double alpha, double step) {
    if (grid.kernel_frames < 1 || grid.taus.empty()) throw ParamError("scaling tensor: invalid grid");
    if (alpha <= 0.0) throw ParamError("scaling tensor: alpha must be positive");
    if (step <= 0.0 || step > 0.5) throw ParamError("scaling tensor: quadrature step must be in (0, 0.5]");
}

}  // namespace

ScalingTensor build_scaling_tensor(const ScaleGrid& grid, double alpha,
                                   double quadrature_step,
                                   std::size_t memory_budget_bytes) {
    validate_tensor_args(grid, alpha, quadrature_step);
    std::size_t count = std::size_t(grid.kernel_frames) * grid.pattern_frames * grid.num_scales;
    if (count * sizeof(double) > memory_budget_bytes) {
        throw CapacityError("scaling tensor: " + std::to_string(count * sizeof(double)) +
                            " bytes exceed budget " + std::to_string(memory_budget_bytes));
    }

    ScalingTensor psi;
    psi.grid = grid;
    psi.alpha = alpha;
    psi.quadrature_step = quadrature_step;
    psi.values.assign(count, 0.0);

    Quadrature q = make_quadrature(alpha, quadrature_step);
    const int N = grid.kernel_frames, M = grid.pattern_frames, S = grid.num_scales;
    const int nodes = int(q.offsets.size());

    // Every (n, m, j) entry is an independent serial sum over quadrature
    // nodes, so the result does not depend on the thread count.
#pragma omp parallel for schedule(static)
    for (int j = 0; j < S; ++j) {
        std::vector<double> node_scales(nodes);
        for (int i = 0; i < nodes; ++i) node_scales[i] = grid.scale_at(j + q.offsets[i]);
        for (int m = 0; m < M; ++m) {
            for (int n = 0; n < N; ++n) {
                double acc = 0.0;
                for (int i = 0; i < nodes; ++i) {
                    acc += kappa_n(n - node_scales[i] * m) * q.weights[i];
                }
                psi.values[(std::size_t(n) * M + m) * S + j] = acc;
            }
        }
    }
    return psi;
}

template <typename T>
std::vector<T> ScalingTensor::scale_major() const {
    const int N = frames(), M = grid.pattern_frames, S = grid.num_scales;
    std::vector<T> out(values.size());
    for (int j = 0; j < S; ++j)
        for (int n = 0; n < N; ++n)
            for (int m = 0; m < M; ++m)
                out[(std::size_t(j) * N + n) * M + m] = T(values[(std::size_t(n) * M + m) * S + j]);
    return out;
}

template std::vector<float> ScalingTensor::scale_major<float>() const;
template std::vector<double> ScalingTensor::scale_major<double>() const;

namespace ref {

ScalingTensor build_scaling_tensor(const ScaleGrid& grid, double alpha, double quadrature_step) {
    validate_tensor_args(grid, alpha, quadrature_step);
    ScalingTensor psi;
    psi.grid = grid;
    psi.alpha = alpha;
    psi.quadrature_step = quadrature_step;
    const int N = grid.kernel_frames, M = grid.pattern_frames, S = grid.num_scales;
    psi.values.assign(std::size_t(N) * M * S, 0.0);
    Quadrature q = make_quadrature(alpha, quadrature_step);
    for (int j = 0; j < S; ++j) {
        for (int m = 0; m < M; ++m) {
            for (int n = 0; n < N; ++n) {
                double acc = 0.0;
                for (std::size_t i = 0; i < q.offsets.size(); ++i) {
                    acc += kappa_n(n - grid.scale_at(j + q.offsets[i]) * m) * q.weights[i];
                }
                psi.values[(std::size_t(n) * M + m) * S + j] = acc;
            }
        }
    }
    return psi;
}

}  // namespace ref
}  // namespace tidb
