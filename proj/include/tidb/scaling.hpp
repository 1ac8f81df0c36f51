#pragma once

#include <cstdint>
#include <vector>

namespace tidb {

/// Log-spaced tempo/scale parametrisation shared by the network kernels
/// and the decoder. Beat periods double every `scales_per_octave` bins;
/// each beat period maps to a kernel stretch factor.
struct ScaleGrid {
    double tau0 = 0.25;          ///< shortest beat period, seconds
    int scales_per_octave = 8;   ///< tempo samples per octave
    int num_scales = 25;         ///< number of scale bins
    double frame_rate = 50.0;    ///< input feature frames per second
    int beats = 4;               ///< beats spanned by a pattern kernel
    int pattern_frames = 64;     ///< pattern length in musical-time samples

    std::vector<double> taus;    ///< beat periods, seconds; taus[j] = tau0 * 2^(j/T)
    std::vector<double> scales;  ///< stretch factors; scales[j] = r * taus[j] * B / M
    int kernel_frames = 0;       ///< stretched kernel length (ceil of max stretch * M)

    double shortest_period() const { return taus.front(); }
    double longest_period() const { return taus.back(); }

    /// Continuous extension of the scale sequence to real-valued bin indices.
    double scale_at(double bin) const;
};

/// Fixed resampling tensor: for each scale bin j, a kernel_frames x
/// pattern_frames matrix mapping a musical-time pattern to a stretched
/// frame-time kernel, smoothed along the scale axis.
struct ScalingTensor {
    std::vector<double> values;  ///< row-major (n, m, j)
    ScaleGrid grid;
    double alpha = 1.0;
    double quadrature_step = 0.05;

    int frames() const { return grid.kernel_frames; }
    int pattern_frames() const { return grid.pattern_frames; }
    int num_scales() const { return grid.num_scales; }

    double at(int n, int m, int j) const {
        return values[(std::size_t(n) * grid.pattern_frames + m) * grid.num_scales + j];
    }

    /// Copy in scale-major (j, n, m) order, the layout used by the
    /// kernel-materialisation inner loops.
    template <typename T>
    std::vector<T> scale_major() const;
};

/// Interpolation kernel sin(pi d)/(pi d), continuous at 0.
double kappa_n(double d);

/// Scale-smoothing kernel alpha * cos^2(alpha d pi / 2) on |d| < 1/alpha,
/// zero outside (and at the boundary). Unit integral for every alpha.
double kappa_s(double d, double alpha);

/// Build the grid from the six scalar parameters. Throws ParamError on
/// non-positive inputs, CapacityError when the kernel length would exceed
/// `kernel_frames_cap`.
ScaleGrid build_scale_grid(double tau0, int scales_per_octave, int num_scales,
                           double frame_rate, int beats, int pattern_frames,
                           int kernel_frames_cap = 10000);

/// Pre-compute the scaling tensor by midpoint quadrature of the scale
/// smoothing integral. Deterministic and thread-count independent.
/// `memory_budget_bytes` bounds the value array allocation.
ScalingTensor build_scaling_tensor(const ScaleGrid& grid, double alpha = 1.0,
                                   double quadrature_step = 0.05,
                                   std::size_t memory_budget_bytes = std::size_t(1) << 30);

namespace ref {
/// Serial reference implementation of the tensor build, kept for testing
/// and benchmarking the parallel kernel against.
ScalingTensor build_scaling_tensor(const ScaleGrid& grid, double alpha,
                                   double quadrature_step);
}  // namespace ref

}  // namespace tidb
