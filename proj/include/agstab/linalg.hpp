#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace agstab {

/// Dense square matrix, row major.  Kept deliberately small: the SDP blocks
/// in this project stay below ~60x60 and profile as negligible.
class Mat {
 public:
  Mat() = default;
  explicit Mat(std::size_t n) : n_(n), a_(n * n, 0.0) {}

  std::size_t size() const { return n_; }
  double& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }
  double* data() { return a_.data(); }
  const double* data() const { return a_.data(); }

  static Mat identity(std::size_t n, double scale = 1.0);
  Mat transpose() const;
  Mat operator+(const Mat& o) const;
  Mat operator-(const Mat& o) const;
  Mat operator*(const Mat& o) const;
  Mat scaled(double s) const;
  void axpy(double s, const Mat& o);  // *this += s * o
  void symmetrize();                  // *this = (A + A^T)/2

  double frobenius() const;
  double max_abs() const;
  double trace() const;

 private:
  std::size_t n_ = 0;
  std::vector<double> a_;
};

double dot(const Mat& a, const Mat& b);

/// In-place lower Cholesky; returns false when the matrix is not numerically
/// positive definite.
bool cholesky(const Mat& a, Mat& lower);

/// Solves L y = b then L^T x = y.
void chol_solve(const Mat& lower, std::span<const double> b, std::span<double> x);
void chol_solve_mat(const Mat& lower, const Mat& b, Mat& x);

/// Inverse from a Cholesky factor.
Mat chol_inverse(const Mat& lower);

/// Cyclic Jacobi eigenvalue iteration for symmetric matrices.
/// Eigenvalues ascending; eigenvectors in columns of `vectors` if non-null.
void sym_eigen(const Mat& a, std::vector<double>& values, Mat* vectors);

double sym_min_eigenvalue(const Mat& a);

/// Largest step t in [0, cap] with base + t*dir staying positive definite
/// (up to the usual eigenvalue characterization; base must be PD).
double max_psd_step(const Mat& base, const Mat& dir, double cap);

/// Determinant via LU with partial pivoting (general square matrix).
double lu_det(Mat a);

/// Dense symmetric linear solve (LDL^T-free; uses partial-pivot LU).
/// Returns false when the system is numerically singular.
bool lu_solve(Mat a, std::vector<double> b, std::vector<double>& x);

}  // namespace agstab
