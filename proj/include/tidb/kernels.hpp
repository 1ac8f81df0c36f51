#pragma once

#include <cstddef>
#include <vector>

namespace tidb::kern {

/// Padding of the time axis. `same_ahead` anchors the kernel at the current
/// frame so output frame n depends on input frames [n, n + (L-1)*dil]; the
/// network layers use this mode so every frame keeps a prediction aligned
/// with its target.
enum class Pad { valid, same_center, same_ahead };

int conv_out_frames(int nx, int len, int dilation, Pad pad);
int pad_front(int len, int dilation, Pad pad);

/// Copy x (nx rows of `channels`) into a zero-padded buffer with `front`
/// zero rows and enough tail rows that every kernel tap is in bounds.
template <typename T>
std::vector<T> pad_rows(const T* x, int nx, int channels, int front, int total);

// ---------------------------------------------------------------------------
// Plain 1-D convolution (correlation convention, as used by the layers):
//   y[n][o] = sum_l sum_c xp[n + l*dil][c] * w[l][c][o]
// xp is the padded input; rows of y are contiguous in o.
// ---------------------------------------------------------------------------

template <typename T>
void conv1d_forward(const T* xp, int cin, const T* w, int len, int cout,
                    int dilation, T* y, int ny);

/// gx[t][c] = sum_l sum_o w[l][c][o] * gyp[t + (len-1-l)*dil][o]
/// gyp is gy padded to nx + (len-1)*dil rows with the gradient rows placed
/// at offset (len-1)*dil - pad_front.
template <typename T>
void conv1d_grad_x(const T* gyp, const T* w, int len, int cin, int cout,
                   int dilation, T* gx, int nx);

/// gw[l][c][o] = sum_n xp[n + l*dil][c] * gy[n][o]
template <typename T>
void conv1d_grad_w(const T* xp, int cin, const T* gy, int ny, int cout,
                   int dilation, T* gw, int len);

// ---------------------------------------------------------------------------
// Scale-invariant convolution. The stretched kernel bank h is materialised
// from the scaling tensor and a pattern, then the input is convolved with
// every scale's kernel. psi layouts:
//   psiT  scale-major   [j][l][m]
//   psiM  pattern-major [m][j][l]
// h is [j][l][c][o], hT is [j][l][o][c], patterns k are [m][c][o].
// ---------------------------------------------------------------------------

template <typename T>
void si_materialise(const T* psiT, int S, int L, int M, const T* k,
                    int cin, int cout, T* h);

template <typename T>
void transpose_co(const T* h, int S, int L, int cin, int cout, T* hT);

/// First form: scale-less input, y[n][j][o] = sum_l sum_c xp[n+l][c]*h[j][l][c][o].
template <typename T>
void si_first_forward(const T* xp, int cin, const T* h, int S, int L, int cout,
                      T* y, int ny);

/// Stacked form: x has a scale axis ([n][j][c]); each scale convolves with
/// its own kernel only. xp is padded like the first form but interleaved.
template <typename T>
void si_stacked_forward(const T* xp, int S, int cin, const T* h, int L, int cout,
                        T* y, int ny);

/// First form input gradient; sums over scales. gyp is gy ([n][j][o]) with
/// L-1 leading zero frames.
template <typename T>
void si_first_grad_x(const T* gyp, int S, int cout, const T* hT, int L, int cin,
                     T* gx, int nx);

template <typename T>
void si_stacked_grad_x(const T* gyp, int S, int cout, const T* hT, int L, int cin,
                       T* gx, int nx);

/// Gradient wrt the materialised kernels: gh[j][l][c][o] = sum_n xp[n+l][c]*gy[n][j][o].
template <typename T>
void si_first_grad_h(const T* xp, int cin, const T* gy, int ny, int S, int cout,
                     int L, T* gh);

template <typename T>
void si_stacked_grad_h(const T* xp, int S, int cin, const T* gy, int ny, int cout,
                       int L, T* gh);

/// Contract kernel gradients back to the pattern:
/// gk[m][c][o] = sum_j sum_l psiM[m][j][l] * gh[j][l][c][o].
template <typename T>
void si_contract_grad_k(const T* psiM, int S, int L, int M, const T* gh,
                        int cin, int cout, T* gk);

// Elementwise helpers (rows = product of all leading axes).
template <typename T>
void add_bias(T* y, std::size_t rows, int cout, const T* bias);
template <typename T>
void relu_inplace(T* y, std::size_t n);
/// dz = dy where y > 0 else 0 (in place on dy).
template <typename T>
void relu_backward_inplace(T* dy, const T* y, std::size_t n);
template <typename T>
void grad_bias(const T* gy, std::size_t rows, int cout, T* gb);

}  // namespace tidb::kern

// Serial reference implementations with the same contracts, kept for testing
// the parallel kernels and for the benchmark baseline.
namespace tidb::kern::ref {

template <typename T>
void conv1d_forward(const T* xp, int cin, const T* w, int len, int cout,
                    int dilation, T* y, int ny);
template <typename T>
void si_materialise(const T* psiT, int S, int L, int M, const T* k,
                    int cin, int cout, T* h);
template <typename T>
void si_first_forward(const T* xp, int cin, const T* h, int S, int L, int cout,
                      T* y, int ny);
template <typename T>
void si_stacked_forward(const T* xp, int S, int cin, const T* h, int L, int cout,
                        T* y, int ny);

}  // namespace tidb::kern::ref
