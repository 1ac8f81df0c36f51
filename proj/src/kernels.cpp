#include "tidb/kernels.hpp"

#include <algorithm>
#include <cstring>

namespace tidb::kern {

int pad_front(int len, int dilation, Pad pad) {
    return pad == Pad::same_center ? ((len - 1) * dilation) / 2 : 0;
}

int conv_out_frames(int nx, int len, int dilation, Pad pad) {
    if (pad == Pad::valid) return nx - (len - 1) * dilation;
    return nx;
}

template <typename T>
std::vector<T> pad_rows(const T* x, int nx, int channels, int front, int total) {
    std::vector<T> out(std::size_t(total) * channels, T(0));
    std::memcpy(out.data() + std::size_t(front) * channels, x,
                std::size_t(nx) * channels * sizeof(T));
    return out;
}

namespace {

// Register-blocked inner kernel: four output frames at a time, compile-time
// channel count so the accumulators live in vector registers. Summation
// order per output element is (l outer, c inner), matching the serial
// reference exactly.
template <int COUT, typename T>
void conv_frames_fixed(const T* x, int cin, const T* w, int len, int dil,
                       T* y, std::size_t ystride, int n0, int n1) {
    int n = n0;
    for (; n + 4 <= n1; n += 4) {
        const T* xb = x + std::size_t(n) * cin;
        T a0[COUT] = {}, a1[COUT] = {}, a2[COUT] = {}, a3[COUT] = {};
        for (int l = 0; l < len; ++l) {
            const T* wl = w + std::size_t(l) * cin * COUT;
            const T* xl = xb + std::size_t(l) * dil * cin;
            for (int c = 0; c < cin; ++c) {
                T x0 = xl[c], x1 = xl[cin + c], x2 = xl[2 * cin + c], x3 = xl[3 * cin + c];
                const T* wr = wl + c * COUT;
#pragma omp simd
                for (int o = 0; o < COUT; ++o) {
                    a0[o] += x0 * wr[o];
                    a1[o] += x1 * wr[o];
                    a2[o] += x2 * wr[o];
                    a3[o] += x3 * wr[o];
                }
            }
        }
        T* yr = y + std::size_t(n) * ystride;
        for (int o = 0; o < COUT; ++o) yr[o] = a0[o];
        for (int o = 0; o < COUT; ++o) yr[ystride + o] = a1[o];
        for (int o = 0; o < COUT; ++o) yr[2 * ystride + o] = a2[o];
        for (int o = 0; o < COUT; ++o) yr[3 * ystride + o] = a3[o];
    }
    for (; n < n1; ++n) {
        const T* xb = x + std::size_t(n) * cin;
        T a[COUT] = {};
        for (int l = 0; l < len; ++l) {
            const T* wl = w + std::size_t(l) * cin * COUT;
            const T* xl = xb + std::size_t(l) * dil * cin;
            for (int c = 0; c < cin; ++c) {
                T xv = xl[c];
                const T* wr = wl + c * COUT;
#pragma omp simd
                for (int o = 0; o < COUT; ++o) a[o] += xv * wr[o];
            }
        }
        T* yr = y + std::size_t(n) * ystride;
        for (int o = 0; o < COUT; ++o) yr[o] = a[o];
    }
}

template <typename T>
void conv_frames_generic(const T* x, int cin, const T* w, int len, int cout, int dil,
                         T* y, std::size_t ystride, int n0, int n1) {
    std::vector<T> acc(cout);
    for (int n = n0; n < n1; ++n) {
        std::fill(acc.begin(), acc.end(), T(0));
        const T* xb = x + std::size_t(n) * cin;
        for (int l = 0; l < len; ++l) {
            const T* wl = w + (std::size_t(l) * cin) * cout;
            const T* xl = xb + std::size_t(l) * dil * cin;
            for (int c = 0; c < cin; ++c) {
                T xv = xl[c];
                const T* wr = wl + std::size_t(c) * cout;
                for (int o = 0; o < cout; ++o) acc[o] += xv * wr[o];
            }
        }
        T* yr = y + std::size_t(n) * ystride;
        std::copy(acc.begin(), acc.end(), yr);
    }
}

template <typename T>
void conv_frames(const T* x, int cin, const T* w, int len, int cout, int dil,
                 T* y, std::size_t ystride, int n0, int n1) {
    switch (cout) {
        case 1: conv_frames_fixed<1>(x, cin, w, len, dil, y, ystride, n0, n1); break;
        case 16: conv_frames_fixed<16>(x, cin, w, len, dil, y, ystride, n0, n1); break;
        case 32: conv_frames_fixed<32>(x, cin, w, len, dil, y, ystride, n0, n1); break;
        case 64: conv_frames_fixed<64>(x, cin, w, len, dil, y, ystride, n0, n1); break;
        default: conv_frames_generic(x, cin, w, len, cout, dil, y, ystride, n0, n1); break;
    }
}

// Input-gradient inner kernel; accumulates over scales, taps and output
// channels with the c axis vectorised. Serves conv1d when S == 1.
template <int CIN, typename T>
void gradx_frames_fixed(const T* gyp, std::size_t gystride, int S, int cout,
                        const T* hT, int len, int dil, T* gx, int t0, int t1) {
    int t = t0;
    for (; t + 4 <= t1; t += 4) {
        T a0[CIN] = {}, a1[CIN] = {}, a2[CIN] = {}, a3[CIN] = {};
        for (int j = 0; j < S; ++j) {
            const T* hj = hT + std::size_t(j) * len * cout * CIN;
            const T* gj = gyp + std::size_t(j) * cout;
            for (int l = 0; l < len; ++l) {
                const T* hl = hj + std::size_t(l) * cout * CIN;
                const T* gb = gj + std::size_t(t + (len - 1 - l) * dil) * gystride;
                for (int o = 0; o < cout; ++o) {
                    T g0 = gb[o], g1 = gb[gystride + o], g2 = gb[2 * gystride + o],
                      g3 = gb[3 * gystride + o];
                    const T* hr = hl + std::size_t(o) * CIN;
#pragma omp simd
                    for (int c = 0; c < CIN; ++c) {
                        a0[c] += g0 * hr[c];
                        a1[c] += g1 * hr[c];
                        a2[c] += g2 * hr[c];
                        a3[c] += g3 * hr[c];
                    }
                }
            }
        }
        T* gr = gx + std::size_t(t) * CIN;
        for (int c = 0; c < CIN; ++c) gr[c] = a0[c];
        for (int c = 0; c < CIN; ++c) gr[CIN + c] = a1[c];
        for (int c = 0; c < CIN; ++c) gr[2 * CIN + c] = a2[c];
        for (int c = 0; c < CIN; ++c) gr[3 * CIN + c] = a3[c];
    }
    for (; t < t1; ++t) {
        T a[CIN] = {};
        for (int j = 0; j < S; ++j) {
            const T* hj = hT + std::size_t(j) * len * cout * CIN;
            const T* gj = gyp + std::size_t(j) * cout;
            for (int l = 0; l < len; ++l) {
                const T* hl = hj + std::size_t(l) * cout * CIN;
                const T* gb = gj + std::size_t(t + (len - 1 - l) * dil) * gystride;
                for (int o = 0; o < cout; ++o) {
                    T gv = gb[o];
                    const T* hr = hl + std::size_t(o) * CIN;
#pragma omp simd
                    for (int c = 0; c < CIN; ++c) a[c] += gv * hr[c];
                }
            }
        }
        T* gr = gx + std::size_t(t) * CIN;
        for (int c = 0; c < CIN; ++c) gr[c] = a[c];
    }
}

template <typename T>
void gradx_frames_generic(const T* gyp, std::size_t gystride, int S, int cout,
                          const T* hT, int len, int cin, int dil, T* gx, int t0, int t1) {
    std::vector<T> acc(cin);
    for (int t = t0; t < t1; ++t) {
        std::fill(acc.begin(), acc.end(), T(0));
        for (int j = 0; j < S; ++j) {
            const T* hj = hT + std::size_t(j) * len * cout * cin;
            const T* gj = gyp + std::size_t(j) * cout;
            for (int l = 0; l < len; ++l) {
                const T* hl = hj + std::size_t(l) * cout * cin;
                const T* gb = gj + std::size_t(t + (len - 1 - l) * dil) * gystride;
                for (int o = 0; o < cout; ++o) {
                    T gv = gb[o];
                    const T* hr = hl + std::size_t(o) * cin;
                    for (int c = 0; c < cin; ++c) acc[c] += gv * hr[c];
                }
            }
        }
        std::copy(acc.begin(), acc.end(), gx + std::size_t(t) * cin);
    }
}

template <typename T>
void gradx_frames(const T* gyp, std::size_t gystride, int S, int cout, const T* hT,
                  int len, int cin, int dil, T* gx, int t0, int t1) {
    switch (cin) {
        case 1: gradx_frames_fixed<1>(gyp, gystride, S, cout, hT, len, dil, gx, t0, t1); break;
        case 16: gradx_frames_fixed<16>(gyp, gystride, S, cout, hT, len, dil, gx, t0, t1); break;
        case 32: gradx_frames_fixed<32>(gyp, gystride, S, cout, hT, len, dil, gx, t0, t1); break;
        case 64: gradx_frames_fixed<64>(gyp, gystride, S, cout, hT, len, dil, gx, t0, t1); break;
        default: gradx_frames_generic(gyp, gystride, S, cout, hT, len, cin, dil, gx, t0, t1); break;
    }
}

// gw[l][c][o] = sum_n xp[n + l*dil][c] * gy[n][o] for one (strided) gradient slab.
template <typename T>
void gradw_tap(const T* xp, int cin, const T* gy, std::size_t gystride, int ny, int cout,
               int l, int dil, T* acc) {
    std::fill(acc, acc + std::size_t(cin) * cout, T(0));
    for (int n = 0; n < ny; ++n) {
        const T* xr = xp + std::size_t(n + l * dil) * cin;
        const T* gr = gy + std::size_t(n) * gystride;
        for (int c = 0; c < cin; ++c) {
            T xv = xr[c];
            T* ar = acc + std::size_t(c) * cout;
#pragma omp simd
            for (int o = 0; o < cout; ++o) ar[o] += xv * gr[o];
        }
    }
}

constexpr int kFrameChunk = 64;

}  // namespace

template <typename T>
void conv1d_forward(const T* xp, int cin, const T* w, int len, int cout,
                    int dilation, T* y, int ny) {
    int blocks = (ny + kFrameChunk - 1) / kFrameChunk;
#pragma omp parallel for schedule(static)
    for (int b = 0; b < blocks; ++b) {
        int n0 = b * kFrameChunk, n1 = std::min(ny, n0 + kFrameChunk);
        conv_frames(xp, cin, w, len, cout, dilation, y, cout, n0, n1);
    }
}

template <typename T>
void conv1d_grad_x(const T* gyp, const T* w, int len, int cin, int cout,
                   int dilation, T* gx, int nx) {
    // w is [l][c][o]; transpose to [l][o][c] once.
    std::vector<T> wT(std::size_t(len) * cin * cout);
    transpose_co(w, 1, len, cin, cout, wT.data());
    int blocks = (nx + kFrameChunk - 1) / kFrameChunk;
#pragma omp parallel for schedule(static)
    for (int b = 0; b < blocks; ++b) {
        int t0 = b * kFrameChunk, t1 = std::min(nx, t0 + kFrameChunk);
        gradx_frames(gyp, std::size_t(cout), 1, cout, wT.data(), len, cin, dilation, gx, t0, t1);
    }
}

template <typename T>
void conv1d_grad_w(const T* xp, int cin, const T* gy, int ny, int cout,
                   int dilation, T* gw, int len) {
#pragma omp parallel for schedule(static)
    for (int l = 0; l < len; ++l) {
        gradw_tap(xp, cin, gy, std::size_t(cout), ny, cout, l, dilation,
                  gw + std::size_t(l) * cin * cout);
    }
}

template <typename T>
void si_materialise(const T* psiT, int S, int L, int M, const T* k,
                    int cin, int cout, T* h) {
    const std::size_t row = std::size_t(cin) * cout;
#pragma omp parallel for collapse(2) schedule(static)
    for (int j = 0; j < S; ++j) {
        for (int l = 0; l < L; ++l) {
            const T* pr = psiT + (std::size_t(j) * L + l) * M;
            T* hr = h + (std::size_t(j) * L + l) * row;
            std::fill(hr, hr + row, T(0));
            for (int m = 0; m < M; ++m) {
                T p = pr[m];
                const T* kr = k + std::size_t(m) * row;
#pragma omp simd
                for (std::size_t i = 0; i < row; ++i) hr[i] += p * kr[i];
            }
        }
    }
}

template <typename T>
void transpose_co(const T* h, int S, int L, int cin, int cout, T* hT) {
    const std::size_t row = std::size_t(cin) * cout;
#pragma omp parallel for collapse(2) schedule(static)
    for (int j = 0; j < S; ++j) {
        for (int l = 0; l < L; ++l) {
            const T* src = h + (std::size_t(j) * L + l) * row;
            T* dst = hT + (std::size_t(j) * L + l) * row;
            for (int c = 0; c < cin; ++c)
                for (int o = 0; o < cout; ++o) dst[std::size_t(o) * cin + c] = src[std::size_t(c) * cout + o];
        }
    }
}

template <typename T>
void si_first_forward(const T* xp, int cin, const T* h, int S, int L, int cout,
                      T* y, int ny) {
    int blocks = (ny + kFrameChunk - 1) / kFrameChunk;
#pragma omp parallel for collapse(2) schedule(static)
    for (int j = 0; j < S; ++j) {
        for (int b = 0; b < blocks; ++b) {
            int n0 = b * kFrameChunk, n1 = std::min(ny, n0 + kFrameChunk);
            conv_frames(xp, cin, h + std::size_t(j) * L * cin * cout, L, cout, 1,
                        y + std::size_t(j) * cout, std::size_t(S) * cout, n0, n1);
        }
    }
}

template <typename T>
void si_stacked_forward(const T* xp, int S, int cin, const T* h, int L, int cout,
                        T* y, int ny) {
    const int npad = ny + L - 1;
#pragma omp parallel
    {
        std::vector<T> slab(std::size_t(npad) * cin);
#pragma omp for schedule(static)
        for (int j = 0; j < S; ++j) {
            for (int n = 0; n < npad; ++n) {
                const T* src = xp + (std::size_t(n) * S + j) * cin;
                std::copy(src, src + cin, slab.data() + std::size_t(n) * cin);
            }
            conv_frames(slab.data(), cin, h + std::size_t(j) * L * cin * cout, L, cout, 1,
                        y + std::size_t(j) * cout, std::size_t(S) * cout, 0, ny);
        }
    }
}

template <typename T>
void si_first_grad_x(const T* gyp, int S, int cout, const T* hT, int L, int cin,
                     T* gx, int nx) {
    int blocks = (nx + kFrameChunk - 1) / kFrameChunk;
#pragma omp parallel for schedule(static)
    for (int b = 0; b < blocks; ++b) {
        int t0 = b * kFrameChunk, t1 = std::min(nx, t0 + kFrameChunk);
        gradx_frames(gyp, std::size_t(S) * cout, S, cout, hT, L, cin, 1, gx, t0, t1);
    }
}

template <typename T>
void si_stacked_grad_x(const T* gyp, int S, int cout, const T* hT, int L, int cin,
                       T* gx, int nx) {
    const int npad = nx + L - 1;
#pragma omp parallel
    {
        std::vector<T> gslab(std::size_t(npad) * cout);
        std::vector<T> xslab(std::size_t(nx) * cin);
#pragma omp for schedule(static)
        for (int j = 0; j < S; ++j) {
            for (int n = 0; n < npad; ++n) {
                const T* src = gyp + (std::size_t(n) * S + j) * cout;
                std::copy(src, src + cout, gslab.data() + std::size_t(n) * cout);
            }
            gradx_frames(gslab.data(), std::size_t(cout), 1, cout,
                         hT + std::size_t(j) * L * cout * cin, L, cin, 1, xslab.data(), 0, nx);
            for (int n = 0; n < nx; ++n) {
                T* dst = gx + (std::size_t(n) * S + j) * cin;
                std::copy(xslab.data() + std::size_t(n) * cin,
                          xslab.data() + std::size_t(n + 1) * cin, dst);
            }
        }
    }
}

template <typename T>
void si_first_grad_h(const T* xp, int cin, const T* gy, int ny, int S, int cout,
                     int L, T* gh) {
    const std::size_t row = std::size_t(cin) * cout;
#pragma omp parallel for collapse(2) schedule(static)
    for (int j = 0; j < S; ++j) {
        for (int l = 0; l < L; ++l) {
            gradw_tap(xp, cin, gy + std::size_t(j) * cout, std::size_t(S) * cout, ny, cout, l, 1,
                      gh + (std::size_t(j) * L + l) * row);
        }
    }
}

template <typename T>
void si_stacked_grad_h(const T* xp, int S, int cin, const T* gy, int ny, int cout,
                       int L, T* gh) {
    const std::size_t row = std::size_t(cin) * cout;
    const int npad = ny + L - 1;
#pragma omp parallel
    {
        std::vector<T> slab(std::size_t(npad) * cin);
#pragma omp for schedule(static)
        for (int j = 0; j < S; ++j) {
            for (int n = 0; n < npad; ++n) {
                const T* src = xp + (std::size_t(n) * S + j) * cin;
                std::copy(src, src + cin, slab.data() + std::size_t(n) * cin);
            }
            for (int l = 0; l < L; ++l) {
                gradw_tap(slab.data(), cin, gy + std::size_t(j) * cout, std::size_t(S) * cout,
                          ny, cout, l, 1, gh + (std::size_t(j) * L + l) * row);
            }
        }
    }
}

template <typename T>
void si_contract_grad_k(const T* psiM, int S, int L, int M, const T* gh,
                        int cin, int cout, T* gk) {
    const std::size_t row = std::size_t(cin) * cout;
    const std::size_t SL = std::size_t(S) * L;
#pragma omp parallel for schedule(static)
    for (int m = 0; m < M; ++m) {
        const T* pr = psiM + std::size_t(m) * SL;
        T* kr = gk + std::size_t(m) * row;
        std::fill(kr, kr + row, T(0));
        for (std::size_t t = 0; t < SL; ++t) {
            T p = pr[t];
            const T* gr = gh + t * row;
#pragma omp simd
            for (std::size_t i = 0; i < row; ++i) kr[i] += p * gr[i];
        }
    }
}

template <typename T>
void add_bias(T* y, std::size_t rows, int cout, const T* bias) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < std::ptrdiff_t(rows); ++r) {
        T* yr = y + std::size_t(r) * cout;
        for (int o = 0; o < cout; ++o) yr[o] += bias[o];
    }
}

template <typename T>
void relu_inplace(T* y, std::size_t n) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(n); ++i)
        if (y[i] < T(0)) y[i] = T(0);
}

template <typename T>
void relu_backward_inplace(T* dy, const T* y, std::size_t n) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(n); ++i)
        if (!(y[i] > T(0))) dy[i] = T(0);
}

template <typename T>
void grad_bias(const T* gy, std::size_t rows, int cout, T* gb) {
    std::fill(gb, gb + cout, T(0));
    for (std::size_t r = 0; r < rows; ++r) {
        const T* gr = gy + r * cout;
        for (int o = 0; o < cout; ++o) gb[o] += gr[o];
    }
}

#define TIDB_INSTANTIATE(T)                                                                        \
    template std::vector<T> pad_rows<T>(const T*, int, int, int, int);                             \
    template void conv1d_forward<T>(const T*, int, const T*, int, int, int, T*, int);              \
    template void conv1d_grad_x<T>(const T*, const T*, int, int, int, int, T*, int);               \
    template void conv1d_grad_w<T>(const T*, int, const T*, int, int, int, T*, int);               \
    template void si_materialise<T>(const T*, int, int, int, const T*, int, int, T*);              \
    template void transpose_co<T>(const T*, int, int, int, int, T*);                               \
    template void si_first_forward<T>(const T*, int, const T*, int, int, int, T*, int);            \
    template void si_stacked_forward<T>(const T*, int, int, const T*, int, int, T*, int);          \
    template void si_first_grad_x<T>(const T*, int, int, const T*, int, int, T*, int);             \
    template void si_stacked_grad_x<T>(const T*, int, int, const T*, int, int, T*, int);           \
    template void si_first_grad_h<T>(const T*, int, const T*, int, int, int, int, T*);             \
    template void si_stacked_grad_h<T>(const T*, int, int, const T*, int, int, int, T*);           \
    template void si_contract_grad_k<T>(const T*, int, int, int, const T*, int, int, T*);          \
    template void add_bias<T>(T*, std::size_t, int, const T*);                                     \
    template void relu_inplace<T>(T*, std::size_t);                                                \
    template void relu_backward_inplace<T>(T*, const T*, std::size_t);                             \
    template void grad_bias<T>(const T*, std::size_t, int, T*);

TIDB_INSTANTIATE(float)
TIDB_INSTANTIATE(double)
#undef TIDB_INSTANTIATE

}  // namespace tidb::kern

namespace tidb::kern::ref {

template <typename T>
void conv1d_forward(const T* xp, int cin, const T* w, int len, int cout,
                    int dilation, T* y, int ny) {
    for (int n = 0; n < ny; ++n) {
        for (int o = 0; o < cout; ++o) {
            T acc = 0;
            for (int l = 0; l < len; ++l)
                for (int c = 0; c < cin; ++c)
                    acc += xp[std::size_t(n + l * dilation) * cin + c] *
                           w[(std::size_t(l) * cin + c) * cout + o];
            y[std::size_t(n) * cout + o] = acc;
        }
    }
}

template <typename T>
void si_materialise(const T* psiT, int S, int L, int M, const T* k,
                    int cin, int cout, T* h) {
    for (int j = 0; j < S; ++j)
        for (int l = 0; l < L; ++l)
            for (int c = 0; c < cin; ++c)
                for (int o = 0; o < cout; ++o) {
                    T acc = 0;
                    for (int m = 0; m < M; ++m)
                        acc += psiT[(std::size_t(j) * L + l) * M + m] *
                               k[(std::size_t(m) * cin + c) * cout + o];
                    h[((std::size_t(j) * L + l) * cin + c) * cout + o] = acc;
                }
}

template <typename T>
void si_first_forward(const T* xp, int cin, const T* h, int S, int L, int cout,
                      T* y, int ny) {
    for (int n = 0; n < ny; ++n)
        for (int j = 0; j < S; ++j)
            for (int o = 0; o < cout; ++o) {
                T acc = 0;
                for (int l = 0; l < L; ++l)
                    for (int c = 0; c < cin; ++c)
                        acc += xp[std::size_t(n + l) * cin + c] *
                               h[((std::size_t(j) * L + l) * cin + c) * cout + o];
                y[(std::size_t(n) * S + j) * cout + o] = acc;
            }
}

template <typename T>
void si_stacked_forward(const T* xp, int S, int cin, const T* h, int L, int cout,
                        T* y, int ny) {
    for (int n = 0; n < ny; ++n)
        for (int j = 0; j < S; ++j)
            for (int o = 0; o < cout; ++o) {
                T acc = 0;
                for (int l = 0; l < L; ++l)
                    for (int c = 0; c < cin; ++c)
                        acc += xp[(std::size_t(n + l) * S + j) * cin + c] *
                               h[((std::size_t(j) * L + l) * cin + c) * cout + o];
                y[(std::size_t(n) * S + j) * cout + o] = acc;
            }
}

#define TIDB_INSTANTIATE_REF(T)                                                                    \
    template void conv1d_forward<T>(const T*, int, const T*, int, int, int, T*, int);              \
    template void si_materialise<T>(const T*, int, int, int, const T*, int, int, T*);              \
    template void si_first_forward<T>(const T*, int, const T*, int, int, int, T*, int);            \
    template void si_stacked_forward<T>(const T*, int, int, const T*, int, int, T*, int);

TIDB_INSTANTIATE_REF(float)
TIDB_INSTANTIATE_REF(double)
#undef TIDB_INSTANTIATE_REF

}  // namespace tidb::kern::ref
