#include "bellcert/qcore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace bellcert::qcore {

namespace {

// Born-rule outputs may stray slightly outside [0,1] after POVM cleanup;
// beyond this slack the inputs are considered invalid.
constexpr double kProbSlack = 1e-8;

void check_same_shape(const CMatrix& a, const CMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("matrix shape mismatch");
}

}  // namespace

CMatrix::CMatrix(int rows, int cols)
    : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols) {
  if (rows < 0 || cols < 0) throw std::invalid_argument("negative matrix dimension");
}

CMatrix CMatrix::identity(int n) {
  CMatrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

CMatrix CMatrix::from_rows(std::initializer_list<std::initializer_list<Complex>> rows) {
  const int r = static_cast<int>(rows.size());
  const int c = r == 0 ? 0 : static_cast<int>(rows.begin()->size());
  CMatrix m(r, c);
  int i = 0;
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != c)
      throw std::invalid_argument("ragged initializer");
    int j = 0;
    for (const auto& v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

CMatrix CMatrix::adjoint() const {
  CMatrix m(cols_, rows_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) m(j, i) = std::conj((*this)(i, j));
  return m;
}

CMatrix CMatrix::transpose() const {
  CMatrix m(cols_, rows_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) m(j, i) = (*this)(i, j);
  return m;
}

CMatrix CMatrix::conjugate() const {
  CMatrix m(rows_, cols_);
  for (size_t k = 0; k < data_.size(); ++k) m.data_[k] = std::conj(data_[k]);
  return m;
}

Complex CMatrix::trace() const {
  if (rows_ != cols_) throw std::invalid_argument("trace of non-square matrix");
  Complex t = 0.0;
  for (int i = 0; i < rows_; ++i) t += (*this)(i, i);
  return t;
}

double CMatrix::frobenius_norm() const {
  double s = 0.0;
  for (const auto& v : data_) s += std::norm(v);
  return std::sqrt(s);
}

double CMatrix::max_abs() const {
  double m = 0.0;
  for (const auto& v : data_) m = std::max(m, std::abs(v));
  return m;
}

double CMatrix::hermiticity_defect() const {
  if (rows_ != cols_) throw std::invalid_argument("hermiticity of non-square matrix");
  double d = 0.0;
  for (int i = 0; i < rows_; ++i)
    for (int j = i; j < cols_; ++j)
      d = std::max(d, std::abs((*this)(i, j) - std::conj((*this)(j, i))));
  return d;
}

bool CMatrix::is_hermitian(double tol) const { return hermiticity_defect() <= tol; }

CMatrix& CMatrix::operator+=(const CMatrix& other) {
  check_same_shape(*this, other);
  for (size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
  return *this;
}

CMatrix& CMatrix::operator-=(const CMatrix& other) {
  check_same_shape(*this, other);
  for (size_t k = 0; k < data_.size(); ++k) data_[k] -= other.data_[k];
  return *this;
}

CMatrix& CMatrix::operator*=(Complex scalar) {
  for (auto& v : data_) v *= scalar;
  return *this;
}

CMatrix operator+(CMatrix a, const CMatrix& b) { return a += b; }
CMatrix operator-(CMatrix a, const CMatrix& b) { return a -= b; }

CMatrix operator*(const CMatrix& a, const CMatrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matrix product shape mismatch");
  CMatrix m(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int k = 0; k < a.cols(); ++k) {
      const Complex aik = a(i, k);
      if (aik == Complex(0.0)) continue;
      for (int j = 0; j < b.cols(); ++j) m(i, j) += aik * b(k, j);
    }
  return m;
}

CMatrix operator*(Complex scalar, CMatrix m) { return m *= scalar; }
CMatrix operator*(double scalar, CMatrix m) { return m *= Complex(scalar); }

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix m(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) {
      const Complex aij = a(i, j);
      if (aij == Complex(0.0)) continue;
      for (int k = 0; k < b.rows(); ++k)
        for (int l = 0; l < b.cols(); ++l)
          m(i * b.rows() + k, j * b.cols() + l) = aij * b(k, l);
    }
  return m;
}

CMatrix pauli_x() { return CMatrix::from_rows({{0.0, 1.0}, {1.0, 0.0}}); }

CMatrix pauli_z() { return CMatrix::from_rows({{1.0, 0.0}, {0.0, -1.0}}); }

CMatrix partial_trace_first(const CMatrix& m, int dim_a, int dim_b) {
  if (m.rows() != dim_a * dim_b || m.cols() != dim_a * dim_b)
    throw std::invalid_argument("partial trace dimension mismatch");
  CMatrix out(dim_b, dim_b);
  for (int b = 0; b < dim_b; ++b)
    for (int bp = 0; bp < dim_b; ++bp) {
      Complex s = 0.0;
      for (int a = 0; a < dim_a; ++a) s += m(a * dim_b + b, a * dim_b + bp);
      out(b, bp) = s;
    }
  return out;
}

CMatrix partial_trace_second(const CMatrix& m, int dim_a, int dim_b) {
  if (m.rows() != dim_a * dim_b || m.cols() != dim_a * dim_b)
    throw std::invalid_argument("partial trace dimension mismatch");
  CMatrix out(dim_a, dim_a);
  for (int a = 0; a < dim_a; ++a)
    for (int ap = 0; ap < dim_a; ++ap) {
      Complex s = 0.0;
      for (int b = 0; b < dim_b; ++b) s += m(a * dim_b + b, ap * dim_b + b);
      out(a, ap) = s;
    }
  return out;
}

namespace {

// Cyclic Jacobi on a real symmetric matrix. Rotations accumulate into v.
void jacobi_symmetric(std::vector<double>& s, std::vector<double>& v, int n) {
  auto at = [n](std::vector<double>& m, int i, int j) -> double& {
    return m[static_cast<size_t>(i) * n + j];
  };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) at(v, i, j) = (i == j) ? 1.0 : 0.0;

  double scale = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) scale = std::max(scale, std::abs(at(s, i, j)));
  if (scale == 0.0) return;

  const int max_sweeps = 60;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off = std::max(off, std::abs(at(s, i, j)));
    if (off <= 1e-15 * scale) return;

    for (int p = 0; p < n - 1; ++p)
      for (int q = p + 1; q < n; ++q) {
        const double apq = at(s, p, q);
        if (std::abs(apq) <= 1e-18 * scale) continue;
        const double tau = (at(s, q, q) - at(s, p, p)) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = t * c;
        for (int k = 0; k < n; ++k) {
          const double skp = at(s, k, p), skq = at(s, k, q);
          at(s, k, p) = c * skp - sn * skq;
          at(s, k, q) = sn * skp + c * skq;
        }
        for (int k = 0; k < n; ++k) {
          const double spk = at(s, p, k), sqk = at(s, q, k);
          at(s, p, k) = c * spk - sn * sqk;
          at(s, q, k) = sn * spk + c * sqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = at(v, k, p), vkq = at(v, k, q);
          at(v, k, p) = c * vkp - sn * vkq;
          at(v, k, q) = sn * vkp + c * vkq;
        }
      }
  }
  throw std::runtime_error("jacobi eigensolver failed to converge");
}

void fix_phase(std::vector<Complex>& v) {
  for (const auto& x : v) {
    const double a = std::abs(x);
    if (a > 1e-12) {
      const Complex phase = std::conj(x) / a;
      for (auto& y : v) y *= phase;
      return;
    }
  }
}

bool lex_less(const std::vector<Complex>& a, const std::vector<Complex>& b) {
  for (size_t k = 0; k < a.size(); ++k) {
    if (std::abs(a[k].real() - b[k].real()) > 1e-10) return a[k].real() < b[k].real();
    if (std::abs(a[k].imag() - b[k].imag()) > 1e-10) return a[k].imag() < b[k].imag();
  }
  return false;
}

}  // namespace

HermitianEig hermitian_eig(const CMatrix& m) {
  const int n = m.rows();
  if (n != m.cols()) throw std::invalid_argument("eigendecomposition of non-square matrix");
  if (!m.is_hermitian(1e-8 * std::max(1.0, m.max_abs())))
    throw std::invalid_argument("eigendecomposition of non-hermitian matrix");

  // Real symmetric embedding [[Re, -Im], [Im, Re]]: each eigenvalue of the
  // complex matrix appears twice; (x; y) maps back to x + i y.
  const int N = 2 * n;
  std::vector<double> s(static_cast<size_t>(N) * N), v(static_cast<size_t>(N) * N);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Complex h = 0.5 * (m(i, j) + std::conj(m(j, i)));
      s[static_cast<size_t>(i) * N + j] = h.real();
      s[static_cast<size_t>(i + n) * N + j + n] = h.real();
      s[static_cast<size_t>(i) * N + j + n] = -h.imag();
      s[static_cast<size_t>(i + n) * N + j] = h.imag();
    }
  jacobi_symmetric(s, v, N);

  std::vector<double> mu(N);
  for (int i = 0; i < N; ++i) mu[static_cast<size_t>(i)] = s[static_cast<size_t>(i) * N + i];
  std::vector<int> order(N);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return mu[static_cast<size_t>(a)] > mu[static_cast<size_t>(b)]; });

  double scale = 1.0;
  for (double x : mu) scale = std::max(scale, std::abs(x));
  const double cluster_tol = kTol.spectral * scale;

  HermitianEig out;
  out.eigenvalues.reserve(static_cast<size_t>(n));
  out.eigenvectors = CMatrix(n, n);
  std::vector<std::vector<Complex>> accepted;

  int pos = 0;
  while (pos < N) {
    int end = pos + 1;
    while (end < N &&
           mu[static_cast<size_t>(order[end - 1])] - mu[static_cast<size_t>(order[end])] <= cluster_tol)
      ++end;
    const int csize = end - pos;
    if (csize % 2 != 0) throw std::runtime_error("embedding eigenvalue pairing broken");
    const int want = csize / 2;

    // Candidate complex vectors from the cluster's real eigenvectors.
    std::vector<std::vector<Complex>> cand;
    for (int t = pos; t < end; ++t) {
      const int col = order[t];
      std::vector<Complex> c(static_cast<size_t>(n));
      for (int i = 0; i < n; ++i)
        c[static_cast<size_t>(i)] = Complex(v[static_cast<size_t>(i) * N + col],
                                            v[static_cast<size_t>(i + n) * N + col]);
      cand.push_back(std::move(c));
    }
    // Pivoted Gram-Schmidt: each complex eigenvector appears twice among the
    // candidates (up to phase), so keep the half with the largest residuals.
    std::vector<std::vector<Complex>> chosen;
    for (int round = 0; round < want; ++round) {
      double best_norm = -1.0;
      int best = -1;
      std::vector<Complex> best_vec;
      for (size_t ci = 0; ci < cand.size(); ++ci) {
        std::vector<Complex> r = cand[ci];
        for (const auto& u : chosen) {
          Complex ip = 0.0;
          for (size_t k = 0; k < r.size(); ++k) ip += std::conj(u[k]) * r[k];
          for (size_t k = 0; k < r.size(); ++k) r[k] -= ip * u[k];
        }
        double nr = 0.0;
        for (const auto& x : r) nr += std::norm(x);
        nr = std::sqrt(nr);
        if (nr > best_norm) {
          best_norm = nr;
          best = static_cast<int>(ci);
          best_vec = std::move(r);
        }
      }
      if (best < 0 || best_norm < 1e-6)
        throw std::runtime_error("degenerate eigenspace extraction failed");
      for (auto& x : best_vec) x /= best_norm;
      chosen.push_back(std::move(best_vec));
      cand.erase(cand.begin() + best);
    }
    for (auto& c : chosen) fix_phase(c);
    std::sort(chosen.begin(), chosen.end(), lex_less);

    for (int t = 0; t < want; ++t) {
      // Duplicated eigenvalues arrive in adjacent sorted pairs; average them.
      const double lam = 0.5 * (mu[static_cast<size_t>(order[pos + 2 * t])] +
                                mu[static_cast<size_t>(order[pos + 2 * t + 1])]);
      const int col = static_cast<int>(out.eigenvalues.size());
      out.eigenvalues.push_back(lam);
      for (int i = 0; i < n; ++i) out.eigenvectors(i, col) = chosen[static_cast<size_t>(t)][static_cast<size_t>(i)];
      accepted.push_back(chosen[static_cast<size_t>(t)]);
    }
    pos = end;
  }
  return out;
}

CMatrix bloch_effect(double theta) {
  CMatrix m = CMatrix::identity(2);
  m += std::cos(theta) * pauli_z();
  m += std::sin(theta) * pauli_x();
  m *= Complex(0.5);
  return m;
}

namespace {

// out = V f(lam) V^dag from the spectral decomposition of h.
CMatrix spectral_map(const CMatrix& h, double (*f)(double)) {
  const auto eig = hermitian_eig(h);
  const int d = h.rows();
  CMatrix out(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      Complex v(0.0, 0.0);
      for (int k = 0; k < d; ++k)
        v += eig.eigenvectors(i, k) * std::conj(eig.eigenvectors(j, k)) *
             f(eig.eigenvalues[static_cast<size_t>(k)]);
      out(i, j) = v;
    }
  return out;
}

}  // namespace

CMatrix clamp_psd(const CMatrix& h) {
  return spectral_map(h, [](double lam) { return std::max(lam, 0.0); });
}

CMatrix inverse_sqrt(const CMatrix& h) {
  return spectral_map(h, [](double lam) { return 1.0 / std::sqrt(lam); });
}

DensityOp::DensityOp(CMatrix m) : matrix_(std::move(m)) {
  if (matrix_.rows() != matrix_.cols()) throw std::invalid_argument("density operator not square");
  if (!matrix_.is_hermitian()) throw std::invalid_argument("density operator not hermitian");
  if (std::abs(matrix_.trace() - Complex(1.0)) > kTol.structural)
    throw std::invalid_argument("density operator trace != 1");
  const auto eig = hermitian_eig(matrix_);
  if (eig.eigenvalues.back() < -kTol.structural)
    throw std::invalid_argument("density operator not positive semidefinite");
}

DensityOp DensityOp::from_pure(const std::vector<Complex>& amplitudes) {
  const int d = static_cast<int>(amplitudes.size());
  double norm2 = 0.0;
  for (const auto& a : amplitudes) norm2 += std::norm(a);
  if (std::abs(norm2 - 1.0) > 1e-8) throw std::invalid_argument("pure state not normalized");
  CMatrix m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      m(i, j) = amplitudes[static_cast<size_t>(i)] * std::conj(amplitudes[static_cast<size_t>(j)]) / norm2;
  return DensityOp(std::move(m));
}

Povm::Povm(int dim, std::vector<CMatrix> effects) : dim_(dim), effects_(std::move(effects)) {
  if (effects_.empty()) throw std::invalid_argument("povm with no effects");
  CMatrix sum(dim_, dim_);
  for (const auto& e : effects_) {
    if (e.rows() != dim_ || e.cols() != dim_) throw std::invalid_argument("povm effect dimension mismatch");
    if (!e.is_hermitian()) throw std::invalid_argument("povm effect not hermitian");
    const auto eig = hermitian_eig(e);
    if (eig.eigenvalues.back() < -kTol.structural)
      throw std::invalid_argument("povm effect not positive semidefinite");
    sum += e;
  }
  sum -= CMatrix::identity(dim_);
  if (sum.max_abs() > kTol.structural) throw std::invalid_argument("povm effects do not sum to identity");
}

namespace {

double clamp_probability(double p, const char* what) {
  if (p < -kProbSlack || p > 1.0 + kProbSlack) throw std::runtime_error(what);
  return std::clamp(p, 0.0, 1.0);
}

}  // namespace

double born(const DensityOp& state, const CMatrix& effect_a, const CMatrix& effect_b) {
  const CMatrix op = kron(effect_a, effect_b);
  if (op.rows() != state.dim()) throw std::invalid_argument("born rule dimension mismatch");
  Complex t = 0.0;
  const CMatrix& rho = state.matrix();
  for (int i = 0; i < op.rows(); ++i)
    for (int j = 0; j < op.cols(); ++j) t += op(i, j) * rho(j, i);
  if (std::abs(t.imag()) > kProbSlack) throw std::runtime_error("born rule produced complex probability");
  return clamp_probability(t.real(), "born rule probability outside [0,1]");
}

double fidelity_with_pure(const DensityOp& rho, const std::vector<Complex>& phi) {
  if (static_cast<int>(phi.size()) != rho.dim())
    throw std::invalid_argument("fidelity dimension mismatch");
  double norm2 = 0.0;
  for (const auto& a : phi) norm2 += std::norm(a);
  if (std::abs(norm2 - 1.0) > 1e-8) throw std::invalid_argument("fidelity reference not normalized");
  Complex f = 0.0;
  for (int i = 0; i < rho.dim(); ++i)
    for (int j = 0; j < rho.dim(); ++j)
      f += std::conj(phi[static_cast<size_t>(i)]) * rho.matrix()(i, j) * phi[static_cast<size_t>(j)];
  return clamp_probability(f.real() / norm2, "fidelity outside [0,1]");
}

}  // namespace bellcert::qcore
