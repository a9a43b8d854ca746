#include "mfapc/polynomial.h"

#include <algorithm>
#include <bit>
#include <cstdint>

#include <Eigen/Eigenvalues>

#include "mfapc/errors.h"

namespace mfapc {

Polynomial::Polynomial(std::vector<double> coeffs) : c_(std::move(coeffs)) { trim(); }

void Polynomial::trim() {
  while (!c_.empty() && c_.back() == 0.0) c_.pop_back();
}

std::complex<double> Polynomial::evaluate(std::complex<double> w) const {
  std::complex<double> acc = 0.0;
  for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * w + *it;
  return acc;
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
  std::vector<double> out(std::max(c_.size(), o.c_.size()), 0.0);
  for (std::size_t i = 0; i < c_.size(); ++i) out[i] += c_[i];
  for (std::size_t i = 0; i < o.c_.size(); ++i) out[i] += o.c_[i];
  return Polynomial(std::move(out));
}

Polynomial Polynomial::operator-(const Polynomial& o) const { return *this + o * -1.0; }

Polynomial Polynomial::operator*(const Polynomial& o) const {
  if (c_.empty() || o.c_.empty()) return Polynomial();
  std::vector<double> out(c_.size() + o.c_.size() - 1, 0.0);
  for (std::size_t i = 0; i < c_.size(); ++i) {
    for (std::size_t j = 0; j < o.c_.size(); ++j) out[i + j] += c_[i] * o.c_[j];
  }
  return Polynomial(std::move(out));
}

Polynomial Polynomial::operator*(double s) const {
  std::vector<double> out = c_;
  for (double& v : out) v *= s;
  return Polynomial(std::move(out));
}

Polynomial Polynomial::shifted(int shift) const {
  if (c_.empty()) return *this;
  std::vector<double> out(static_cast<std::size_t>(shift), 0.0);
  out.insert(out.end(), c_.begin(), c_.end());
  return Polynomial(std::move(out));
}

PolyMatrix::PolyMatrix(int rows, int cols) : rows_(rows), cols_(cols) {}

PolyMatrix::PolyMatrix(int rows, int cols, std::vector<Eigen::MatrixXd> coeffs)
    : rows_(rows), cols_(cols), coeffs_(std::move(coeffs)) {
  for (const auto& c : coeffs_) {
    if (c.rows() != rows_ || c.cols() != cols_) {
      throw StructuralError("polynomial matrix coefficient has the wrong size");
    }
  }
  trim();
}

PolyMatrix PolyMatrix::Identity(int n) {
  return PolyMatrix(n, n, {Eigen::MatrixXd::Identity(n, n)});
}

PolyMatrix PolyMatrix::Constant(const Eigen::MatrixXd& m) {
  return PolyMatrix(static_cast<int>(m.rows()), static_cast<int>(m.cols()), {m});
}

PolyMatrix PolyMatrix::Scalar(const Polynomial& p, int n) {
  std::vector<Eigen::MatrixXd> coeffs;
  for (double c : p.coeffs()) coeffs.push_back(c * Eigen::MatrixXd::Identity(n, n));
  return PolyMatrix(n, n, std::move(coeffs));
}

void PolyMatrix::trim() {
  while (!coeffs_.empty() && (coeffs_.back().array() == 0.0).all()) coeffs_.pop_back();
}

Polynomial PolyMatrix::entry(int i, int j) const {
  std::vector<double> c;
  c.reserve(coeffs_.size());
  for (const auto& m : coeffs_) c.push_back(m(i, j));
  return Polynomial(std::move(c));
}

void PolyMatrix::set_entry(int i, int j, const Polynomial& p) {
  const std::size_t need = static_cast<std::size_t>(std::max(p.degree() + 1, 0));
  while (coeffs_.size() < need) coeffs_.push_back(Eigen::MatrixXd::Zero(rows_, cols_));
  for (std::size_t d = 0; d < coeffs_.size(); ++d) coeffs_[d](i, j) = p[static_cast<int>(d)];
  trim();
}

Eigen::MatrixXcd PolyMatrix::evaluate(std::complex<double> w) const {
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(rows_, cols_);
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) {
    acc = acc * w + it->cast<std::complex<double>>();
  }
  return acc;
}

PolyMatrix PolyMatrix::operator+(const PolyMatrix& o) const {
  if (rows_ != o.rows_ || cols_ != o.cols_) throw StructuralError("polynomial matrix sum sizes");
  std::vector<Eigen::MatrixXd> out(std::max(coeffs_.size(), o.coeffs_.size()),
                                   Eigen::MatrixXd::Zero(rows_, cols_));
  for (std::size_t i = 0; i < coeffs_.size(); ++i) out[i] += coeffs_[i];
  for (std::size_t i = 0; i < o.coeffs_.size(); ++i) out[i] += o.coeffs_[i];
  return PolyMatrix(rows_, cols_, std::move(out));
}

PolyMatrix PolyMatrix::operator-(const PolyMatrix& o) const { return *this + o * -1.0; }

PolyMatrix PolyMatrix::operator*(const PolyMatrix& o) const {
  if (cols_ != o.rows_) throw StructuralError("polynomial matrix product sizes");
  if (coeffs_.empty() || o.coeffs_.empty()) return PolyMatrix(rows_, o.cols_);
  std::vector<Eigen::MatrixXd> out(coeffs_.size() + o.coeffs_.size() - 1,
                                   Eigen::MatrixXd::Zero(rows_, o.cols_));
  for (std::size_t i = 0; i < coeffs_.size(); ++i) {
    for (std::size_t j = 0; j < o.coeffs_.size(); ++j) out[i + j] += coeffs_[i] * o.coeffs_[j];
  }
  return PolyMatrix(rows_, o.cols_, std::move(out));
}

PolyMatrix PolyMatrix::operator*(const Polynomial& p) const {
  if (coeffs_.empty() || p.is_zero()) return PolyMatrix(rows_, cols_);
  std::vector<Eigen::MatrixXd> out(coeffs_.size() + p.coeffs().size() - 1,
                                   Eigen::MatrixXd::Zero(rows_, cols_));
  for (std::size_t i = 0; i < coeffs_.size(); ++i) {
    for (std::size_t j = 0; j < p.coeffs().size(); ++j) out[i + j] += coeffs_[i] * p.coeffs()[j];
  }
  return PolyMatrix(rows_, cols_, std::move(out));
}

PolyMatrix PolyMatrix::operator*(double s) const {
  std::vector<Eigen::MatrixXd> out = coeffs_;
  for (auto& m : out) m *= s;
  return PolyMatrix(rows_, cols_, std::move(out));
}

PolyMatrix PolyMatrix::shifted(int shift) const {
  if (coeffs_.empty()) return *this;
  std::vector<Eigen::MatrixXd> out(static_cast<std::size_t>(shift),
                                   Eigen::MatrixXd::Zero(rows_, cols_));
  out.insert(out.end(), coeffs_.begin(), coeffs_.end());
  return PolyMatrix(rows_, cols_, std::move(out));
}

Polynomial determinant(const PolyMatrix& m) {
  if (m.rows() != m.cols()) throw StructuralError("determinant of a non-square matrix");
  const int n = m.rows();
  if (n == 0) return Polynomial::Constant(1.0);
  if (n > 20) throw StructuralError("determinant expansion limited to 20x20");

  std::vector<std::vector<Polynomial>> a(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a[i].push_back(m.entry(i, j));
  }

  // dp[mask]: signed sum over assignments of the first popcount(mask) rows to
  // the columns in mask.
  const std::uint32_t full = (1u << n) - 1u;
  std::vector<Polynomial> dp(static_cast<std::size_t>(full) + 1);
  dp[0] = Polynomial::Constant(1.0);
  for (std::uint32_t mask = 0; mask < full; ++mask) {
    if (dp[mask].is_zero()) continue;
    const int row = std::popcount(mask);
    for (int c = 0; c < n; ++c) {
      const std::uint32_t bit = 1u << c;
      if ((mask & bit) != 0u || a[row][c].is_zero()) continue;
      // Columns already used to the right of c each add one inversion.
      const int inversions = std::popcount(mask & ~((bit << 1) - 1u));
      const Polynomial term = dp[mask] * a[row][c];
      dp[mask | bit] = (inversions % 2 == 0) ? dp[mask | bit] + term : dp[mask | bit] - term;
    }
  }
  return dp[full];
}

PolyMatrix adjugate(const PolyMatrix& m) {
  if (m.rows() != m.cols()) throw StructuralError("adjugate of a non-square matrix");
  const int n = m.rows();
  PolyMatrix out(n, n);
  if (n == 1) {
    out.set_entry(0, 0, Polynomial::Constant(1.0));
    return out;
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      // adj(i, j) = (-1)^(i+j) det(minor without row j, column i).
      PolyMatrix minor(n - 1, n - 1);
      for (int r = 0, rr = 0; r < n; ++r) {
        if (r == j) continue;
        for (int c = 0, cc = 0; c < n; ++c) {
          if (c == i) continue;
          minor.set_entry(rr, cc, m.entry(r, c));
          ++cc;
        }
        ++rr;
      }
      const Polynomial d = determinant(minor);
      out.set_entry(i, j, ((i + j) % 2 == 0) ? d : d * -1.0);
    }
  }
  return out;
}

std::vector<std::complex<double>> roots_in_z(const Polynomial& p) {
  // In z the coefficient of z^(d-i) is c_i; drop leading zeros (roots at infinity).
  std::vector<double> c = p.coeffs();
  std::size_t lead = 0;
  while (lead < c.size() && c[lead] == 0.0) ++lead;
  c.erase(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(lead));
  const int degree = static_cast<int>(c.size()) - 1;
  if (degree <= 0) return {};

  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(degree, degree);
  for (int j = 0; j < degree; ++j) companion(0, j) = -c[static_cast<std::size_t>(j) + 1] / c[0];
  for (int i = 1; i < degree; ++i) companion(i, i - 1) = 1.0;

  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  std::vector<std::complex<double>> out;
  for (int i = 0; i < degree; ++i) out.push_back(solver.eigenvalues()(i));
  return out;
}

}  // namespace mfapc
