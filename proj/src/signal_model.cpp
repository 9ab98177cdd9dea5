#include "ehalloc/signal_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "ehalloc/errors.hpp"
#include "ehalloc/rng.hpp"

namespace ehalloc {

namespace {

constexpr double kHermitianTol = 1e-12;
constexpr double kPsdTol = 1e-10;

Eigen::MatrixXcd hermitian_part(const Eigen::MatrixXcd& K) {
  Eigen::MatrixXcd sym = 0.5 * (K + K.adjoint());
  for (Eigen::Index i = 0; i < sym.rows(); ++i) sym(i, i) = cplx(sym(i, i).real(), 0.0);
  return sym;
}

void validate(const Eigen::MatrixXcd& K, const Eigen::VectorXd* known_spectrum) {
  if (K.rows() != K.cols() || K.rows() == 0) {
    fail(ErrorKind::DimensionMismatch, "covariance must be a non-empty square matrix");
  }
  const double norm = K.norm();
  if ((K - K.adjoint()).norm() > kHermitianTol * std::max(norm, 1e-300)) {
    fail(ErrorKind::NotHermitian, "covariance is not Hermitian");
  }
  const double power = K.diagonal().real().sum();
  const double min_eig = known_spectrum ? known_spectrum->minCoeff()
                                        : eigenvalues_descending(K).minCoeff();
  if (min_eig < -kPsdTol * std::max(power, 0.0)) {
    std::ostringstream os;
    os << "covariance has eigenvalue " << min_eig << " below tolerance";
    fail(ErrorKind::NotPSD, os.str());
  }
}

}  // namespace

CovarianceModel::CovarianceModel(Eigen::MatrixXcd K) {
  validate(K, nullptr);
  K_ = hermitian_part(K);
  variances_ = K_.diagonal().real();
  total_power_ = variances_.sum();
}

CovarianceModel::CovarianceModel(Eigen::MatrixXcd K, Eigen::VectorXd dft_eigenvalues) {
  if (dft_eigenvalues.size() != K.rows()) {
    fail(ErrorKind::DimensionMismatch, "spectrum length differs from covariance size");
  }
  validate(K, &dft_eigenvalues);
  K_ = hermitian_part(K);
  variances_ = K_.diagonal().real();
  total_power_ = variances_.sum();
  dft_eigenvalues_ = std::move(dft_eigenvalues);
}

bool SpectrumDecomposition::is_flat(double rel_tol) const {
  if (eigenvalues.size() == 0) return true;
  const double hi = eigenvalues.maxCoeff();
  const double lo = eigenvalues.minCoeff();
  return hi - lo <= rel_tol * hi;
}

Eigen::MatrixXcd dft_matrix(int n) {
  if (n < 1) fail(ErrorKind::RankError, "DFT size must be positive");
  Eigen::MatrixXcd F(n, n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (int t = 0; t < n; ++t) {
    for (int k = 0; k < n; ++k) {
      // reduce the exponent mod n first so large n keeps full phase accuracy
      const long long e = (static_cast<long long>(t) * k) % n;
      const double phase = -2.0 * std::numbers::pi * static_cast<double>(e) / n;
      F(t, k) = scale * cplx(std::cos(phase), std::sin(phase));
    }
  }
  return F;
}

Eigen::VectorXd eigenvalues_descending(const Eigen::MatrixXcd& hermitian) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(hermitian, Eigen::EigenvaluesOnly);
  return es.eigenvalues().reverse();
}

CovarianceModel circulant_from_spectrum(const Eigen::VectorXd& eigenvalues) {
  const int n = static_cast<int>(eigenvalues.size());
  const Eigen::MatrixXcd F = dft_matrix(n);
  Eigen::MatrixXcd K = F * eigenvalues.cast<cplx>().asDiagonal() * F.adjoint();
  return CovarianceModel(hermitian_part(K), eigenvalues);
}

CovarianceModel build_static_correlation(int n, double rho, double total_power) {
  if (n < 1) fail(ErrorKind::RankError, "n must be positive");
  if (rho > 1.0 || rho * (n - 1) + 1.0 < 0.0) {
    std::ostringstream os;
    os << "rho=" << rho << " violates rho*(n-1)+1 >= 0 and rho <= 1 for n=" << n;
    fail(ErrorKind::RhoOutOfRange, os.str());
  }
  const double var = total_power / n;
  Eigen::MatrixXcd K = Eigen::MatrixXcd::Constant(n, n, cplx(rho * var, 0.0));
  K.diagonal().setConstant(cplx(var, 0.0));
  Eigen::VectorXd spectrum = Eigen::VectorXd::Constant(n, var * (1.0 - rho));
  spectrum(0) = var * (rho * (n - 1) + 1.0);
  return CovarianceModel(std::move(K), std::move(spectrum));
}

CovarianceModel build_lowpass_cwss(int n, int s, double total_power) {
  if (s < 1 || s > n || n % s != 0) {
    std::ostringstream os;
    os << "low-pass rank s=" << s << " must divide n=" << n;
    fail(ErrorKind::RankError, os.str());
  }
  Eigen::VectorXd spectrum = Eigen::VectorXd::Zero(n);
  spectrum.head(s).setConstant(total_power / s);
  return circulant_from_spectrum(spectrum);
}

CirculantModel build_circulant(const Eigen::VectorXcd& first_row) {
  const int n = static_cast<int>(first_row.size());
  if (n < 1) fail(ErrorKind::RankError, "first row must be non-empty");
  const double scale = first_row.cwiseAbs().maxCoeff();
  const double tol = kHermitianTol * std::max(scale, 1e-300);
  if (std::abs(first_row(0).imag()) > tol) {
    fail(ErrorKind::NotHermitian, "first-row zero-lag entry must be real");
  }
  for (int k = 1; k < n; ++k) {
    if (std::abs(first_row(k) - std::conj(first_row(n - k))) > tol) {
      fail(ErrorKind::NotHermitian, "first row is not conjugate-symmetric");
    }
  }
  Eigen::MatrixXcd K(n, n);
  for (int t = 0; t < n; ++t) {
    for (int k = 0; k < n; ++k) K(t, k) = first_row(((k - t) % n + n) % n);
  }
  const Eigen::VectorXcd z = std::sqrt(static_cast<double>(n)) * (dft_matrix(n) * first_row);
  Eigen::VectorXd eig = z.real();
  const double power = n * first_row(0).real();
  if (eig.minCoeff() < -kPsdTol * std::max(power, 0.0)) {
    fail(ErrorKind::NotPSD, "circulant spectrum has a negative eigenvalue");
  }
  CovarianceModel model(std::move(K), eig);
  return {std::move(model), std::move(eig)};
}

CovarianceModel build_rank_one(const Eigen::VectorXcd& u, double total_power) {
  if (std::abs(u.norm() - 1.0) > 1e-12) fail(ErrorKind::NotUnit, "u must have unit norm");
  Eigen::MatrixXcd K = total_power * (u * u.adjoint());
  return CovarianceModel(hermitian_part(K));
}

CovarianceModel build_white(int n, double total_power) {
  return build_static_correlation(n, 0.0, total_power);
}

Eigen::MatrixXcd haar_unitary(int n, std::uint64_t seed) {
  if (n < 1) fail(ErrorKind::RankError, "unitary size must be positive");
  Engine gen(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  Eigen::MatrixXcd Z(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double re = normal(gen);
      const double im = normal(gen);
      Z(i, j) = cplx(re, im);
    }
  }
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(Z);
  Eigen::MatrixXcd Q = qr.householderQ() * Eigen::MatrixXcd::Identity(n, n);
  const Eigen::MatrixXcd& R = qr.matrixQR();
  for (int j = 0; j < n; ++j) {
    const cplx r = R(j, j);
    const double mag = std::abs(r);
    const cplx phase = mag > 0.0 ? r / mag : cplx(1.0, 0.0);
    Q.col(j) *= phase;
  }
  return Q;
}

CovarianceModel covariance_from_factors(const Eigen::MatrixXcd& basis, const Eigen::VectorXd& lambda) {
  if (basis.cols() != lambda.size()) {
    fail(ErrorKind::DimensionMismatch, "basis columns differ from eigenvalue count");
  }
  Eigen::MatrixXcd K = basis * lambda.cast<cplx>().asDiagonal() * basis.adjoint();
  return CovarianceModel(hermitian_part(K));
}

CovarianceModel random_haar_covariance(int n, const Eigen::VectorXd& lambda, std::uint64_t seed) {
  const auto s = lambda.size();
  if (s < 1 || s > n) fail(ErrorKind::RankError, "need 1 <= s <= n eigenvalues");
  if ((lambda.array() <= 0.0).any()) fail(ErrorKind::NotPSD, "eigenvalues must be positive");
  const Eigen::MatrixXcd U = haar_unitary(n, seed);
  return covariance_from_factors(U.leftCols(s), lambda);
}

SpectrumDecomposition reduced_evd(const CovarianceModel& model) {
  const int n = model.n();
  SpectrumDecomposition out;
  if (const auto& dft = model.dft_eigenvalues()) {
    const double top = dft->maxCoeff();
    const Eigen::MatrixXcd F = dft_matrix(n);
    for (int k = 0; k < n; ++k) {
      if ((*dft)(k) > kRankThreshold * top) out.omega.push_back(k);
    }
    const int s = static_cast<int>(out.omega.size());
    out.basis.resize(n, s);
    out.eigenvalues.resize(s);
    for (int j = 0; j < s; ++j) {
      out.basis.col(j) = F.col(out.omega[j]);
      out.eigenvalues(j) = (*dft)(out.omega[j]);
    }
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(model.K());
  const Eigen::VectorXd& ev = es.eigenvalues();  // ascending
  const double top = ev(n - 1);
  for (int k = n - 1; k >= 0; --k) {
    if (ev(k) > kRankThreshold * top) out.omega.push_back(n - 1 - k);
  }
  const int s = static_cast<int>(out.omega.size());
  out.basis.resize(n, s);
  out.eigenvalues.resize(s);
  for (int j = 0; j < s; ++j) {
    out.basis.col(j) = es.eigenvectors().col(n - 1 - j);
    out.eigenvalues(j) = ev(n - 1 - j);
  }
  return out;
}

}  // namespace ehalloc
