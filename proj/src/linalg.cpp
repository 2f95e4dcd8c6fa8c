#include "agstab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace agstab {

Mat Mat::identity(std::size_t n, double scale) {
  Mat m(n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = scale;
  return m;
}

Mat Mat::transpose() const {
  Mat t(n_);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Mat Mat::operator+(const Mat& o) const {
  Mat r = *this;
  for (std::size_t i = 0; i < a_.size(); ++i) r.a_[i] += o.a_[i];
  return r;
}

Mat Mat::operator-(const Mat& o) const {
  Mat r = *this;
  for (std::size_t i = 0; i < a_.size(); ++i) r.a_[i] -= o.a_[i];
  return r;
}

Mat Mat::operator*(const Mat& o) const {
  Mat r(n_);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t k = 0; k < n_; ++k) {
      double v = (*this)(i, k);
      if (v == 0.0) continue;
      for (std::size_t j = 0; j < n_; ++j) r(i, j) += v * o(k, j);
    }
  return r;
}

Mat Mat::scaled(double s) const {
  Mat r = *this;
  for (auto& v : r.a_) v *= s;
  return r;
}

void Mat::axpy(double s, const Mat& o) {
  for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += s * o.a_[i];
}

void Mat::symmetrize() {
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = i + 1; j < n_; ++j) {
      double v = 0.5 * ((*this)(i, j) + (*this)(j, i));
      (*this)(i, j) = v;
      (*this)(j, i) = v;
    }
}

double Mat::frobenius() const {
  double s = 0;
  for (double v : a_) s += v * v;
  return std::sqrt(s);
}

double Mat::max_abs() const {
  double s = 0;
  for (double v : a_) s = std::max(s, std::abs(v));
  return s;
}

double Mat::trace() const {
  double s = 0;
  for (std::size_t i = 0; i < n_; ++i) s += (*this)(i, i);
  return s;
}

double dot(const Mat& a, const Mat& b) {
  double s = 0;
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n * n; ++i) s += a.data()[i] * b.data()[i];
  return s;
}

bool cholesky(const Mat& a, Mat& lower) {
  const std::size_t n = a.size();
  lower = Mat(n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= lower(j, k) * lower(j, k);
    if (!(d > 0.0) || !std::isfinite(d)) return false;
    double lj = std::sqrt(d);
    lower(j, j) = lj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= lower(i, k) * lower(j, k);
      lower(i, j) = s / lj;
    }
  }
  return true;
}

void chol_solve(const Mat& lower, std::span<const double> b,
                std::span<double> x) {
  const std::size_t n = lower.size();
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= lower(i, k) * y[k];
    y[i] = s / lower(i, i);
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = y[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= lower(k, i) * x[k];
    x[i] = s / lower(i, i);
  }
}

void chol_solve_mat(const Mat& lower, const Mat& b, Mat& x) {
  const std::size_t n = lower.size();
  x = Mat(n);
  std::vector<double> col(n), out(n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) col[i] = b(i, j);
    chol_solve(lower, col, out);
    for (std::size_t i = 0; i < n; ++i) x(i, j) = out[i];
  }
}

Mat chol_inverse(const Mat& lower) {
  return [&] {
    Mat x;
    chol_solve_mat(lower, Mat::identity(lower.size()), x);
    return x;
  }();
}

void sym_eigen(const Mat& a, std::vector<double>& values, Mat* vectors) {
  const std::size_t n = a.size();
  Mat m = a;
  Mat v = Mat::identity(n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += m(i, j) * m(i, j);
    if (off < 1e-26 * (1.0 + m.max_abs() * m.max_abs())) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        double apq = m(p, q);
        if (std::abs(apq) < 1e-300) continue;
        double theta = (m(q, q) - m(p, p)) / (2 * apq);
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          double mkp = m(k, p), mkq = m(k, q);
          m(k, p) = c * mkp - s * mkq;
          m(k, q) = s * mkp + c * mkq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          double mpk = m(p, k), mqk = m(q, k);
          m(p, k) = c * mpk - s * mqk;
          m(q, k) = s * mpk + c * mqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
  }
  values.resize(n);
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t i, std::size_t j) { return m(i, i) < m(j, j); });
  for (std::size_t i = 0; i < n; ++i) values[i] = m(idx[i], idx[i]);
  if (vectors) {
    *vectors = Mat(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) (*vectors)(k, i) = v(k, idx[i]);
  }
}

double sym_min_eigenvalue(const Mat& a) {
  if (a.size() == 0) return 0.0;
  std::vector<double> vals;
  sym_eigen(a, vals, nullptr);
  return vals.front();
}

double max_psd_step(const Mat& base, const Mat& dir, double cap) {
  // base PD; largest t with base + t*dir >= 0 is 1/max(0, -lambda_min(W)),
  // where W = L^-1 dir L^-T.
  Mat lower;
  if (!cholesky(base, lower)) return 0.0;
  const std::size_t n = base.size();
  // Y = L^-1 dir: solve L Y = dir column-wise (forward only).
  Mat y(n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = dir(i, j);
      for (std::size_t k = 0; k < i; ++k) s -= lower(i, k) * y(k, j);
      y(i, j) = s / lower(i, i);
    }
  }
  // W = Y L^-T: solve W L^T = Y, i.e. L W^T = Y^T.
  Mat yt = y.transpose();
  Mat wt(n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = yt(i, j);
      for (std::size_t k = 0; k < i; ++k) s -= lower(i, k) * wt(k, j);
      wt(i, j) = s / lower(i, i);
    }
  }
  Mat w = wt.transpose();
  w.symmetrize();
  double lmin = sym_min_eigenvalue(w);
  if (lmin >= 0) return cap;
  return std::min(cap, -1.0 / lmin);
}

double lu_det(Mat a) {
  const std::size_t n = a.size();
  double det = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t i = col + 1; i < n; ++i)
      if (std::abs(a(i, col)) > std::abs(a(piv, col))) piv = i;
    if (a(piv, col) == 0.0) return 0.0;
    if (piv != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(piv, j), a(col, j));
      det = -det;
    }
    det *= a(col, col);
    for (std::size_t i = col + 1; i < n; ++i) {
      double f = a(i, col) / a(col, col);
      for (std::size_t j = col; j < n; ++j) a(i, j) -= f * a(col, j);
    }
  }
  return det;
}

bool lu_solve(Mat a, std::vector<double> b, std::vector<double>& x) {
  const std::size_t n = a.size();
  if (b.size() != n) throw std::invalid_argument("lu_solve: size mismatch");
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t i = col + 1; i < n; ++i)
      if (std::abs(a(i, col)) > std::abs(a(piv, col))) piv = i;
    if (std::abs(a(piv, col)) < 1e-300) return false;
    if (piv != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(piv, j), a(col, j));
      std::swap(b[piv], b[col]);
    }
    for (std::size_t i = col + 1; i < n; ++i) {
      double f = a(i, col) / a(col, col);
      if (f == 0.0) continue;
      for (std::size_t j = col; j < n; ++j) a(i, j) -= f * a(col, j);
      b[i] -= f * b[col];
    }
  }
  x.assign(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a(i, k) * x[k];
    x[i] = s / a(i, i);
  }
  return true;
}

}  // namespace agstab
