#pragma once

// Polynomials and polynomial matrices in the backward shift w = z^-1.
// Coefficient index = power of z^-1.

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace mfapc {

class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<double> coeffs);
  static Polynomial Constant(double c) { return Polynomial({c}); }
  // 1 - z^-1
  static Polynomial Difference() { return Polynomial({1.0, -1.0}); }

  const std::vector<double>& coeffs() const { return c_; }
  // -1 for the zero polynomial.
  int degree() const { return static_cast<int>(c_.size()) - 1; }
  bool is_zero() const { return c_.empty(); }
  double operator[](int i) const { return i < static_cast<int>(c_.size()) ? c_[i] : 0.0; }

  std::complex<double> evaluate(std::complex<double> w) const;

  Polynomial operator+(const Polynomial& o) const;
  Polynomial operator-(const Polynomial& o) const;
  Polynomial operator*(const Polynomial& o) const;
  Polynomial operator*(double s) const;
  // Multiplication by z^-shift.
  Polynomial shifted(int shift) const;

 private:
  void trim();
  std::vector<double> c_;
};

class PolyMatrix {
 public:
  PolyMatrix(int rows, int cols);
  PolyMatrix(int rows, int cols, std::vector<Eigen::MatrixXd> coeffs);

  static PolyMatrix Identity(int n);
  static PolyMatrix Constant(const Eigen::MatrixXd& m);
  static PolyMatrix Scalar(const Polynomial& p, int n);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  const std::vector<Eigen::MatrixXd>& coeffs() const { return coeffs_; }

  Polynomial entry(int i, int j) const;
  void set_entry(int i, int j, const Polynomial& p);
  Eigen::MatrixXcd evaluate(std::complex<double> w) const;

  PolyMatrix operator+(const PolyMatrix& o) const;
  PolyMatrix operator-(const PolyMatrix& o) const;
  PolyMatrix operator*(const PolyMatrix& o) const;
  PolyMatrix operator*(const Polynomial& p) const;
  PolyMatrix operator*(double s) const;
  PolyMatrix shifted(int shift) const;

 private:
  void trim();
  int rows_;
  int cols_;
  std::vector<Eigen::MatrixXd> coeffs_;
};

// Exact expansion over coefficient arithmetic (no divisions): subset dynamic
// programming over columns, n 2^n polynomial products.
Polynomial determinant(const PolyMatrix& m);
PolyMatrix adjugate(const PolyMatrix& m);

// Roots in z of p(z^-1) = sum_i c_i z^-i, i.e. of sum_i c_i z^(d-i), by
// eigenvalues of the companion matrix. Roots at infinity (c_0 = 0) are dropped.
std::vector<std::complex<double>> roots_in_z(const Polynomial& p);

}  // namespace mfapc
