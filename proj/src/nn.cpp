#include "tidb/nn.hpp"

#include <algorithm>
#include <cmath>

#include "tidb/errors.hpp"

namespace tidb {

namespace {

constexpr double kLogitClamp = 80.0;
constexpr double kProbFloor = 1e-300;

template <typename T>
void check_si_shapes(const FeatureMapT<T>& x, const PatternKernelT<T>& k,
                     const ScalingTensor& psi, bool stacked) {
    if (k.pattern_frames != psi.pattern_frames())
        throw ShapeError("si_conv: pattern length does not match scaling tensor");
    if (x.channels != k.in_channels)
        throw ShapeError("si_conv: input channels do not match pattern");
    if (stacked) {
        if (!x.has_scale_axis() || x.num_scales != psi.num_scales())
            throw ShapeError("si_conv: stacked input must carry the tensor's scale count");
    } else if (x.has_scale_axis()) {
        throw ShapeError("si_conv: first-form input must not have a scale axis");
    }
}

}  // namespace

template <typename T>
FeatureMapT<T> conv1d(const FeatureMapT<T>& x, const std::vector<T>& w, int len,
                      int cout, int dilation, kern::Pad pad) {
    if (len < 1 || dilation < 1) throw ParamError("conv1d: len and dilation must be >= 1");
    if (x.has_scale_axis()) throw ShapeError("conv1d: input must not have a scale axis");
    if (w.size() != std::size_t(len) * x.channels * cout)
        throw ShapeError("conv1d: kernel size mismatch");
    int ny = kern::conv_out_frames(x.frames, len, dilation, pad);
    if (ny < 1) throw ShapeError("conv1d: kernel longer than padded input");
    int front = kern::pad_front(len, dilation, pad);
    auto xp = kern::pad_rows(x.values.data(), x.frames, x.channels, front,
                             ny + (len - 1) * dilation);
    auto y = FeatureMapT<T>::zeros(ny, 0, cout, x.frame_rate);
    kern::conv1d_forward(xp.data(), x.channels, w.data(), len, cout, dilation,
                         y.values.data(), ny);
    return y;
}

template <typename T>
std::vector<T> materialise_kernels(const ScalingTensor& psi, const PatternKernelT<T>& k) {
    if (k.pattern_frames != psi.pattern_frames())
        throw ShapeError("materialise_kernels: pattern length mismatch");
    const int S = psi.num_scales(), L = psi.frames(), M = psi.pattern_frames();
    auto psiT = psi.scale_major<T>();
    std::vector<T> h(std::size_t(S) * L * k.in_channels * k.kernels);
    kern::si_materialise(psiT.data(), S, L, M, k.values.data(), k.in_channels, k.kernels,
                         h.data());
    return h;
}

template <typename T>
FeatureMapT<T> si_conv(const FeatureMapT<T>& x, const PatternKernelT<T>& k,
                       const ScalingTensor& psi, bool stacked, kern::Pad pad) {
    check_si_shapes(x, k, psi, stacked);
    const int S = psi.num_scales(), L = psi.frames();
    const int cin = k.in_channels, cout = k.kernels;
    int ny = kern::conv_out_frames(x.frames, L, 1, pad);
    if (ny < 1) throw ShapeError("si_conv: kernel longer than padded input");
    int front = kern::pad_front(L, 1, pad);
    auto h = materialise_kernels(psi, k);
    auto y = FeatureMapT<T>::zeros(ny, S, cout, x.frame_rate);
    auto xp = kern::pad_rows(x.values.data(), x.frames,
                             stacked ? S * cin : cin, front, ny + L - 1);
    if (stacked) {
        kern::si_stacked_forward(xp.data(), S, cin, h.data(), L, cout, y.values.data(), ny);
    } else {
        kern::si_first_forward(xp.data(), cin, h.data(), S, L, cout, y.values.data(), ny);
    }
    return y;
}

template <typename T>
std::pair<FeatureMapT<T>, PatternKernelT<T>> si_conv_backward(
    const FeatureMapT<T>& grad_y, const FeatureMapT<T>& x, const PatternKernelT<T>& k,
    const ScalingTensor& psi, bool stacked, kern::Pad pad) {
    check_si_shapes(x, k, psi, stacked);
    const int S = psi.num_scales(), L = psi.frames(), M = psi.pattern_frames();
    const int cin = k.in_channels, cout = k.kernels;
    const int ny = kern::conv_out_frames(x.frames, L, 1, pad);
    if (grad_y.frames != ny || grad_y.num_scales != S || grad_y.channels != cout)
        throw ShapeError("si_conv_backward: grad shape mismatch");
    int front = kern::pad_front(L, 1, pad);

    auto psiT = psi.scale_major<T>();
    std::vector<T> h(std::size_t(S) * L * cin * cout);
    kern::si_materialise(psiT.data(), S, L, M, k.values.data(), cin, cout, h.data());
    std::vector<T> hT(h.size());
    kern::transpose_co(h.data(), S, L, cin, cout, hT.data());

    // Input gradient: transposed convolution of the output gradient.
    auto gx = FeatureMapT<T>::zeros(x.frames, x.num_scales, x.channels, x.frame_rate);
    auto gyp = kern::pad_rows(grad_y.values.data(), ny, S * cout, (L - 1) - front,
                              x.frames + L - 1);
    if (stacked) {
        kern::si_stacked_grad_x(gyp.data(), S, cout, hT.data(), L, cin,
                                gx.values.data(), x.frames);
    } else {
        kern::si_first_grad_x(gyp.data(), S, cout, hT.data(), L, cin,
                              gx.values.data(), x.frames);
    }

    // Pattern gradient: correlate input with the output gradient per scale,
    // then contract with the scaling tensor.
    auto xp = kern::pad_rows(x.values.data(), x.frames, stacked ? S * cin : cin, front,
                             ny + L - 1);
    std::vector<T> gh(h.size());
    if (stacked) {
        kern::si_stacked_grad_h(xp.data(), S, cin, grad_y.values.data(), ny, cout, L,
                                gh.data());
    } else {
        kern::si_first_grad_h(xp.data(), cin, grad_y.values.data(), ny, S, cout, L,
                              gh.data());
    }
    // Pattern-major copy of psi for the contraction.
    std::vector<T> psiM(psiT.size());
    for (int j = 0; j < S; ++j)
        for (int l = 0; l < L; ++l)
            for (int m = 0; m < M; ++m)
                psiM[(std::size_t(m) * S + j) * L + l] = psiT[(std::size_t(j) * L + l) * M + m];
    auto gk = PatternKernelT<T>::zeros(M, cin, cout);
    kern::si_contract_grad_k(psiM.data(), S, L, M, gh.data(), cin, cout,
                             gk.values.data());
    return {std::move(gx), std::move(gk)};
}

template <typename T>
FeatureMapT<T> softmax_zero_bin(const FeatureMapT<T>& logits) {
    if (logits.has_scale_axis())
        throw ShapeError("softmax_zero_bin: logits must be [frames][bins]");
    const int N = logits.frames, S = logits.channels;
    auto out = FeatureMapT<T>::zeros(N, 0, S + 1, logits.frame_rate);
#pragma omp parallel for schedule(static)
    for (int n = 0; n < N; ++n) {
        const T* z = logits.values.data() + std::size_t(n) * S;
        T* p = out.values.data() + std::size_t(n) * (S + 1);
        double mx = 0.0;  // the constant zero bin participates in the max
        for (int j = 0; j < S; ++j) {
            double v = std::clamp(double(z[j]), -kLogitClamp, kLogitClamp);
            mx = std::max(mx, v);
        }
        double denom = std::exp(-mx);  // zero bin
        for (int j = 0; j < S; ++j) {
            double v = std::clamp(double(z[j]), -kLogitClamp, kLogitClamp);
            double e = std::exp(v - mx);
            p[j] = T(e);
            denom += e;
        }
        double inv = 1.0 / denom;
        for (int j = 0; j < S; ++j) p[j] = T(double(p[j]) * inv);
        p[S] = T(std::exp(-mx) * inv);
    }
    return out;
}

template <typename T>
FeatureMapT<T> softmax_zero_bin_backward(const FeatureMapT<T>& grad_out,
                                         const FeatureMapT<T>& out) {
    const int N = out.frames, B = out.channels, S = B - 1;
    if (grad_out.frames != N || grad_out.channels != B)
        throw ShapeError("softmax_zero_bin_backward: shape mismatch");
    auto gz = FeatureMapT<T>::zeros(N, 0, S, out.frame_rate);
#pragma omp parallel for schedule(static)
    for (int n = 0; n < N; ++n) {
        const T* p = out.values.data() + std::size_t(n) * B;
        const T* g = grad_out.values.data() + std::size_t(n) * B;
        double dot = 0.0;
        for (int b = 0; b < B; ++b) dot += double(g[b]) * double(p[b]);
        T* z = gz.values.data() + std::size_t(n) * S;
        for (int j = 0; j < S; ++j) z[j] = T(double(p[j]) * (double(g[j]) - dot));
    }
    return gz;
}

namespace {

template <typename T>
void check_xent_inputs(const FeatureMapT<T>& o, const FeatureMapT<T>& target) {
    if (o.frames != target.frames || o.channels != target.channels || o.has_scale_axis() ||
        target.has_scale_axis())
        throw ShapeError("weighted_xent: shape mismatch");
    for (int n = 0; n < target.frames; ++n) {
        double sum = 0.0;
        for (int b = 0; b < target.channels; ++b) sum += double(target.at(n, b));
        if (std::fabs(sum - 1.0) > 1e-6)
            throw ParamError("weighted_xent: target row " + std::to_string(n) +
                             " is not normalized");
    }
}

template <typename T>
bool is_non_downbeat_row(const T* t, int bins) {
    return double(t[bins - 1]) >= 1.0 - 1e-9;
}

}  // namespace

template <typename T>
LossOutput weighted_xent(const FeatureMapT<T>& o, const FeatureMapT<T>& target,
                         double non_downbeat_weight) {
    check_xent_inputs(o, target);
    const int N = o.frames, B = o.channels;
    LossOutput out;
    out.per_frame.resize(N);
    double total = 0.0;
    for (int n = 0; n < N; ++n) {
        const T* po = o.values.data() + std::size_t(n) * B;
        const T* pt = target.values.data() + std::size_t(n) * B;
        double l = 0.0;
        for (int b = 0; b < B; ++b) {
            double t = double(pt[b]);
            if (t > 0.0) l -= t * std::log(std::max(double(po[b]), kProbFloor));
        }
        if (is_non_downbeat_row(pt, B)) l *= non_downbeat_weight;
        out.per_frame[n] = l;
        total += l;
    }
    out.loss = N > 0 ? total / N : 0.0;
    return out;
}

template <typename T>
FeatureMapT<T> weighted_xent_backward(const FeatureMapT<T>& o, const FeatureMapT<T>& target,
                                      double non_downbeat_weight) {
    check_xent_inputs(o, target);
    const int N = o.frames, B = o.channels;
    auto g = FeatureMapT<T>::zeros(N, 0, B, o.frame_rate);
    for (int n = 0; n < N; ++n) {
        const T* po = o.values.data() + std::size_t(n) * B;
        const T* pt = target.values.data() + std::size_t(n) * B;
        double w = is_non_downbeat_row(pt, B) ? non_downbeat_weight : 1.0;
        T* gr = g.values.data() + std::size_t(n) * B;
        for (int b = 0; b < B; ++b) {
            double t = double(pt[b]);
            if (t > 0.0) gr[b] = T(-w * t / std::max(double(po[b]), kProbFloor) / N);
        }
    }
    return g;
}

#define TIDB_INSTANTIATE_NN(T)                                                                     \
    template FeatureMapT<T> conv1d<T>(const FeatureMapT<T>&, const std::vector<T>&, int, int,      \
                                      int, kern::Pad);                                             \
    template std::vector<T> materialise_kernels<T>(const ScalingTensor&,                           \
                                                   const PatternKernelT<T>&);                      \
    template FeatureMapT<T> si_conv<T>(const FeatureMapT<T>&, const PatternKernelT<T>&,            \
                                       const ScalingTensor&, bool, kern::Pad);                     \
    template std::pair<FeatureMapT<T>, PatternKernelT<T>> si_conv_backward<T>(                     \
        const FeatureMapT<T>&, const FeatureMapT<T>&, const PatternKernelT<T>&,                    \
        const ScalingTensor&, bool, kern::Pad);                                                    \
    template FeatureMapT<T> softmax_zero_bin<T>(const FeatureMapT<T>&);                            \
    template FeatureMapT<T> softmax_zero_bin_backward<T>(const FeatureMapT<T>&,                    \
                                                         const FeatureMapT<T>&);                   \
    template LossOutput weighted_xent<T>(const FeatureMapT<T>&, const FeatureMapT<T>&, double);    \
    template FeatureMapT<T> weighted_xent_backward<T>(const FeatureMapT<T>&,                       \
                                                      const FeatureMapT<T>&, double);

TIDB_INSTANTIATE_NN(float)
TIDB_INSTANTIATE_NN(double)
#undef TIDB_INSTANTIATE_NN

}  // namespace tidb
