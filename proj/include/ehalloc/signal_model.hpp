#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace ehalloc {

using cplx = std::complex<double>;

/// Relative cutoff below which an eigenvalue is treated as zero.
inline constexpr double kRankThreshold = 1e-10;

/// Covariance of the zero-mean proper complex Gaussian signal observed by
/// the sensor. Construction validates the Hermitian/PSD invariants; the
/// per-slot variances and total power are cached.
///
/// Circulant builders attach the spectrum in DFT-column order so that the
/// reduced decomposition can keep the column/eigenvalue association instead
/// of falling back to a dense eigensolver.
class CovarianceModel {
 public:
  explicit CovarianceModel(Eigen::MatrixXcd K);
  CovarianceModel(Eigen::MatrixXcd K, Eigen::VectorXd dft_eigenvalues);

  int n() const { return static_cast<int>(K_.rows()); }
  const Eigen::MatrixXcd& K() const { return K_; }
  double total_power() const { return total_power_; }
  const Eigen::VectorXd& variances() const { return variances_; }
  const std::optional<Eigen::VectorXd>& dft_eigenvalues() const { return dft_eigenvalues_; }
  bool is_circulant() const { return dft_eigenvalues_.has_value(); }

 private:
  Eigen::MatrixXcd K_;
  Eigen::VectorXd variances_;
  double total_power_ = 0.0;
  std::optional<Eigen::VectorXd> dft_eigenvalues_;
};

/// Reduced eigendecomposition K = U_Ω diag(λ) U_Ω†.
struct SpectrumDecomposition {
  Eigen::MatrixXcd basis;        // n x s, orthonormal columns
  Eigen::VectorXd eigenvalues;   // s positive values
  std::vector<int> omega;        // retained column indices (0-based)

  int n() const { return static_cast<int>(basis.rows()); }
  int rank() const { return static_cast<int>(eigenvalues.size()); }
  double total_power() const { return eigenvalues.sum(); }
  /// True when all retained eigenvalues agree within `rel_tol` of the largest.
  bool is_flat(double rel_tol = 1e-9) const;
};

struct CirculantModel {
  CovarianceModel model;
  Eigen::VectorXd eigenvalues;  // DFT-column order
};

/// Unitary DFT matrix, [F]_{tk} = exp(-j 2π t k / n) / √n (0-based).
Eigen::MatrixXcd dft_matrix(int n);

CovarianceModel build_static_correlation(int n, double rho, double total_power);
CovarianceModel build_lowpass_cwss(int n, int s, double total_power);
CirculantModel build_circulant(const Eigen::VectorXcd& first_row);
/// Circulant model K = F diag(eigenvalues) F† from a spectrum in DFT-column order.
CovarianceModel circulant_from_spectrum(const Eigen::VectorXd& eigenvalues);
CovarianceModel build_rank_one(const Eigen::VectorXcd& u, double total_power);
CovarianceModel build_white(int n, double total_power);

/// Haar-distributed n x n unitary (QR of a complex Ginibre matrix with the
/// R-diagonal phase correction).
Eigen::MatrixXcd haar_unitary(int n, std::uint64_t seed);
/// K = U_Ω diag(lambda) U_Ω† with U_Ω the first s columns of a Haar unitary.
CovarianceModel random_haar_covariance(int n, const Eigen::VectorXd& lambda, std::uint64_t seed);
/// K = basis diag(lambda) basis†, symmetrized.
CovarianceModel covariance_from_factors(const Eigen::MatrixXcd& basis, const Eigen::VectorXd& lambda);

SpectrumDecomposition reduced_evd(const CovarianceModel& model);

Eigen::VectorXd eigenvalues_descending(const Eigen::MatrixXcd& hermitian);

}  // namespace ehalloc
