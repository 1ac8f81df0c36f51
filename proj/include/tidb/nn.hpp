#pragma once

#include <utility>
#include <vector>

#include "tidb/kernels.hpp"
#include "tidb/scaling.hpp"

namespace tidb {

/// Time-major feature array. Without a scale axis the layout is [n][c];
/// with one it is [n][j][c]. Activation and target grids reuse this type
/// with channels = bins.
template <typename T>
struct FeatureMapT {
    std::vector<T> values;
    int frames = 0;
    int num_scales = 0;  ///< 0 when there is no scale axis
    int channels = 0;
    double frame_rate = 0.0;

    bool has_scale_axis() const { return num_scales > 0; }
    std::size_t row_size() const {
        return std::size_t(std::max(num_scales, 1)) * channels;
    }
    T& at(int n, int c) { return values[std::size_t(n) * row_size() + c]; }
    T at(int n, int c) const { return values[std::size_t(n) * row_size() + c]; }
    T& at(int n, int j, int c) {
        return values[(std::size_t(n) * num_scales + j) * channels + c];
    }
    T at(int n, int j, int c) const {
        return values[(std::size_t(n) * num_scales + j) * channels + c];
    }

    static FeatureMapT zeros(int frames, int scales, int channels, double rate) {
        FeatureMapT f;
        f.frames = frames;
        f.num_scales = scales;
        f.channels = channels;
        f.frame_rate = rate;
        f.values.assign(std::size_t(frames) * std::max(scales, 1) * channels, T(0));
        return f;
    }

    template <typename U>
    FeatureMapT<U> cast() const {
        FeatureMapT<U> out;
        out.frames = frames;
        out.num_scales = num_scales;
        out.channels = channels;
        out.frame_rate = frame_rate;
        out.values.assign(values.begin(), values.end());
        return out;
    }
};

using FeatureMap = FeatureMapT<double>;
/// Per-frame probability rows over S tempo bins plus the no-downbeat bin.
using ActivationGrid = FeatureMapT<double>;
/// Same layout as ActivationGrid; rows are training targets on the simplex.
using TargetGrid = FeatureMapT<double>;

/// Trainable rhythm patterns in musical time, shape [m][c][o].
template <typename T>
struct PatternKernelT {
    std::vector<T> values;
    int pattern_frames = 0;
    int in_channels = 0;
    int kernels = 0;

    static PatternKernelT zeros(int m, int c, int o) {
        PatternKernelT k;
        k.pattern_frames = m;
        k.in_channels = c;
        k.kernels = o;
        k.values.assign(std::size_t(m) * c * o, T(0));
        return k;
    }
};

using PatternKernel = PatternKernelT<double>;

struct LossOutput {
    double loss = 0.0;
    std::vector<double> per_frame;
};

/// Plain 1-D convolution of an [N][C] map with an [L][C][O] kernel.
template <typename T>
FeatureMapT<T> conv1d(const FeatureMapT<T>& x, const std::vector<T>& w, int len,
                      int cout, int dilation, kern::Pad pad);

/// Stretched kernel bank [j][l][c][o] for a pattern under a scaling tensor.
template <typename T>
std::vector<T> materialise_kernels(const ScalingTensor& psi, const PatternKernelT<T>& k);

/// Scale-invariant convolution. First form convolves a scale-less input
/// with every scale's kernel; the stacked form convolves scale j of the
/// input with kernel j only.
template <typename T>
FeatureMapT<T> si_conv(const FeatureMapT<T>& x, const PatternKernelT<T>& k,
                       const ScalingTensor& psi, bool stacked,
                       kern::Pad pad = kern::Pad::same_ahead);

/// Reverse-mode gradients of si_conv. The scaling tensor is constant and
/// receives no gradient.
template <typename T>
std::pair<FeatureMapT<T>, PatternKernelT<T>> si_conv_backward(
    const FeatureMapT<T>& grad_y, const FeatureMapT<T>& x, const PatternKernelT<T>& k,
    const ScalingTensor& psi, bool stacked, kern::Pad pad = kern::Pad::same_ahead);

/// Frame-wise softmax over [logits, 0]; bin S is the no-downbeat bin.
/// Logits are clamped to +-80 before exponentiation.
template <typename T>
FeatureMapT<T> softmax_zero_bin(const FeatureMapT<T>& logits);

/// Gradient of softmax_zero_bin wrt the logits.
template <typename T>
FeatureMapT<T> softmax_zero_bin_backward(const FeatureMapT<T>& grad_out,
                                         const FeatureMapT<T>& out);

/// Frame-wise categorical cross-entropy; frames whose target places all
/// mass on the no-downbeat bin are weighted by non_downbeat_weight. The
/// scalar loss is the mean over frames.
template <typename T>
LossOutput weighted_xent(const FeatureMapT<T>& o, const FeatureMapT<T>& target,
                         double non_downbeat_weight = 1.0 / 3.0);

template <typename T>
FeatureMapT<T> weighted_xent_backward(const FeatureMapT<T>& o, const FeatureMapT<T>& target,
                                      double non_downbeat_weight = 1.0 / 3.0);

}  // namespace tidb
