#pragma once

// Straight-line transcription of the online AuxIVA frame loop on plain
// std::vector storage, written without the library's kernels. Used as an
// oracle for OnlineAuxIva::process_frame.

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace auxiva::testing {

using cd = std::complex<double>;
using Mat = std::vector<std::vector<cd>>;  // [row][col]
using Vec = std::vector<cd>;

inline Mat eye(int n, double s = 1.0) {
  Mat m(n, Vec(n, cd(0)));
  for (int i = 0; i < n; ++i) m[i][i] = s;
  return m;
}

// Gauss-Jordan with partial pivoting: solves M z = b.
inline Vec gj_solve(Mat M, Vec b) {
  const int n = static_cast<int>(M.size());
  for (int c = 0; c < n; ++c) {
    int p = c;
    for (int r = c + 1; r < n; ++r)
      if (std::abs(M[r][c]) > std::abs(M[p][c])) p = r;
    if (std::abs(M[p][c]) == 0.0) throw std::runtime_error("reference: singular");
    std::swap(M[p], M[c]);
    std::swap(b[p], b[c]);
    for (int r = 0; r < n; ++r) {
      if (r == c) continue;
      const cd factor = M[r][c] / M[c][c];
      for (int j = c; j < n; ++j) M[r][j] -= factor * M[c][j];
      b[r] -= factor * b[c];
    }
  }
  Vec z(n);
  for (int i = 0; i < n; ++i) z[i] = b[i] / M[i][i];
  return z;
}

struct ReferenceOnline {
  int K = 0, F = 0;
  double alpha = 0.99;
  int n_iter = 2;
  bool ip = false;
  double r_floor = 1e-8;
  bool gaussian = false;
  std::vector<Mat> W;               // [f]
  std::vector<std::vector<Mat>> U;  // [k][f]

  ReferenceOnline(int K_, int F_, double cov_init) : K(K_), F(F_) {
    W.assign(F, eye(K));
    U.assign(K, std::vector<Mat>(F, eye(K, cov_init)));
  }

  double phi(double r) const {
    const double rf = r < r_floor ? r_floor : r;
    return gaussian ? F / (rf * rf) : 1.0 / (2.0 * rf);
  }

  // x[f][c]; returns y[f][k]; `active` lists 0-based sources to update.
  std::vector<Vec> step(const std::vector<Vec>& x, const std::vector<int>& active) {
    std::vector<std::vector<Mat>> Unew = U;
    for (int it = 0; it < n_iter; ++it) {
      // r_k from the current W
      std::vector<double> r(K, 0.0);
      for (int k = 0; k < K; ++k) {
        double s = 0.0;
        for (int f = 0; f < F; ++f) {
          cd y = 0;
          for (int c = 0; c < K; ++c) y += W[f][k][c] * x[f][c];
          s += std::norm(y);
        }
        r[k] = std::sqrt(s);
        if (r[k] < r_floor) r[k] = r_floor;
      }
      // U_k from the previous frame's U
      for (int k = 0; k < K; ++k) {
        const double w = phi(r[k]);
        for (int f = 0; f < F; ++f)
          for (int i = 0; i < K; ++i)
            for (int j = 0; j < K; ++j)
              Unew[k][f][i][j] = alpha * U[k][f][i][j] + (1.0 - alpha) * w * x[f][i] * std::conj(x[f][j]);
      }
      for (int f = 0; f < F; ++f) {
        for (int k : active) {
          Mat& Wf = W[f];
          if (ip) {
            // (W U_k) w = e_k
            Mat WU(K, Vec(K, cd(0)));
            for (int i = 0; i < K; ++i)
              for (int j = 0; j < K; ++j)
                for (int l = 0; l < K; ++l) WU[i][j] += Wf[i][l] * Unew[k][f][l][j];
            Vec e(K, cd(0));
            e[k] = 1.0;
            Vec w = gj_solve(WU, e);
            cd q = 0;
            for (int i = 0; i < K; ++i)
              for (int j = 0; j < K; ++j) q += std::conj(w[i]) * Unew[k][f][i][j] * w[j];
            const double s = std::sqrt(q.real());
            for (int j = 0; j < K; ++j) Wf[k][j] = std::conj(w[j] / s);
          } else {
            Vec wk(K);
            for (int j = 0; j < K; ++j) wk[j] = std::conj(Wf[k][j]);
            Vec v(K);
            for (int m = 0; m < K; ++m) {
              Vec uw(K, cd(0));
              for (int i = 0; i < K; ++i)
                for (int j = 0; j < K; ++j) uw[i] += Unew[m][f][i][j] * wk[j];
              cd den = 0, num = 0;
              for (int i = 0; i < K; ++i) {
                den += std::conj(wk[i]) * uw[i];
                num += Wf[m][i] * uw[i];
              }
              v[m] = m == k ? cd(1.0 - 1.0 / std::sqrt(den.real())) : num / den.real();
            }
            const Vec row = Wf[k];
            for (int m = 0; m < K; ++m)
              for (int j = 0; j < K; ++j) Wf[m][j] -= v[m] * row[j];
          }
        }
      }
    }
    U = Unew;
    std::vector<Vec> y(F, Vec(K, cd(0)));
    for (int f = 0; f < F; ++f)
      for (int k = 0; k < K; ++k)
        for (int c = 0; c < K; ++c) y[f][k] += W[f][k][c] * x[f][c];
    return y;
  }
};

}  // namespace auxiva::testing
