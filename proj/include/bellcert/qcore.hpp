#pragma once

// Dense complex linear algebra and quantum primitives: matrices, states,
// POVM effects and the Born rule. Everything here is small-scale (qubit
// pairs, moment matrices of a few hundred rows) and immutable after
// construction.

#include <complex>
#include <initializer_list>
#include <vector>

namespace bellcert::qcore {

using Complex = std::complex<double>;

// Central tolerance knobs. "structural" guards algebraic identities
// (hermiticity, completeness, trace), "spectral" guards eigensolver output.
struct ToleranceConfig {
  double structural;
  double spectral;
};
inline constexpr ToleranceConfig kTol{1e-10, 1e-9};

// Dense complex matrix, row-major storage.
class CMatrix {
public:
  CMatrix() = default;
  CMatrix(int rows, int cols);  // zero-filled

  static CMatrix identity(int n);
  static CMatrix from_rows(std::initializer_list<std::initializer_list<Complex>> rows);

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  Complex& operator()(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
  const Complex& operator()(int r, int c) const { return data_[static_cast<size_t>(r) * cols_ + c]; }

  std::vector<Complex>& data() { return data_; }
  const std::vector<Complex>& data() const { return data_; }

  CMatrix adjoint() const;
  CMatrix transpose() const;
  CMatrix conjugate() const;
  Complex trace() const;
  double frobenius_norm() const;
  double max_abs() const;

  // max |M - M^dag| entrywise
  double hermiticity_defect() const;
  bool is_hermitian(double tol = kTol.structural) const;

  CMatrix& operator+=(const CMatrix& other);
  CMatrix& operator-=(const CMatrix& other);
  CMatrix& operator*=(Complex scalar);

private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<Complex> data_;
};

CMatrix operator+(CMatrix a, const CMatrix& b);
CMatrix operator-(CMatrix a, const CMatrix& b);
CMatrix operator*(const CMatrix& a, const CMatrix& b);
CMatrix operator*(Complex scalar, CMatrix m);
CMatrix operator*(double scalar, CMatrix m);

// Kronecker product; dimensions multiply.
CMatrix kron(const CMatrix& a, const CMatrix& b);

// Pauli matrices in the computational basis.
CMatrix pauli_x();
CMatrix pauli_z();

// Trace out one tensor factor of a (dim_a*dim_b) x (dim_a*dim_b) matrix.
CMatrix partial_trace_first(const CMatrix& m, int dim_a, int dim_b);
CMatrix partial_trace_second(const CMatrix& m, int dim_a, int dim_b);

// Eigendecomposition of a Hermitian matrix. Eigenvalues sorted descending,
// eigenvector columns orthonormal with a fixed phase convention (first
// component of magnitude > 1e-12 made real positive); ties in the spectrum
// are ordered by lexicographic comparison of the eigenvectors.
struct HermitianEig {
  std::vector<double> eigenvalues;
  CMatrix eigenvectors;  // columns
};
HermitianEig hermitian_eig(const CMatrix& m);

// Rank-1 projector in the x-z plane of the Bloch sphere:
// (I + sigma_z cos(theta) + sigma_x sin(theta)) / 2.
CMatrix bloch_effect(double theta);

// Spectral repairs for nearly-valid operators: zero out negative
// eigenvalues, or form h^(-1/2) (h must be positive definite).
CMatrix clamp_psd(const CMatrix& h);
CMatrix inverse_sqrt(const CMatrix& h);

// Density operator: Hermitian, PSD and unit trace within kTol.
class DensityOp {
public:
  explicit DensityOp(CMatrix m);
  static DensityOp from_pure(const std::vector<Complex>& amplitudes);

  int dim() const { return matrix_.rows(); }
  const CMatrix& matrix() const { return matrix_; }

private:
  CMatrix matrix_;
};

// POVM: effects are Hermitian, PSD within kTol.structural and sum to the
// identity within kTol.structural.
class Povm {
public:
  Povm(int dim, std::vector<CMatrix> effects);

  int dim() const { return dim_; }
  int outcomes() const { return static_cast<int>(effects_.size()); }
  const CMatrix& effect(int k) const { return effects_[static_cast<size_t>(k)]; }
  const std::vector<CMatrix>& effects() const { return effects_; }

private:
  int dim_ = 0;
  std::vector<CMatrix> effects_;
};

// Born rule for a bipartite state: Tr[(effect_a (x) effect_b) rho],
// clamped into [0, 1]. Values outside [0,1] by more than a small slack
// indicate invalid inputs and are rejected.
double born(const DensityOp& state, const CMatrix& effect_a, const CMatrix& effect_b);

// <phi| rho |phi> for a normalized vector phi.
double fidelity_with_pure(const DensityOp& rho, const std::vector<Complex>& phi);

}  // namespace bellcert::qcore
