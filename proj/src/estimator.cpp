#include "ehalloc/estimator.hpp"

#include <cmath>
#include <sstream>

#include "ehalloc/errors.hpp"

namespace ehalloc {

namespace {

void require_length(int expected, Eigen::Index got, const char* what) {
  if (got != expected) {
    std::ostringstream os;
    os << what << " has length " << got << ", expected " << expected;
    fail(ErrorKind::DimensionMismatch, os.str());
  }
}

// |h_t|^2 a_t, the effective per-slot observation weight.
Eigen::VectorXd effective_weights(const ChannelTrace& channel, const Eigen::VectorXd& a) {
  return channel.gain_sq().cwiseProduct(a);
}

Eigen::MatrixXcd information_matrix(const SpectrumDecomposition& spectrum, const Eigen::VectorXd& d,
                                    double gamma) {
  const Eigen::MatrixXcd& U = spectrum.basis;
  Eigen::MatrixXcd M = gamma * (U.adjoint() * d.cast<cplx>().asDiagonal() * U);
  M.diagonal() += spectrum.eigenvalues.cwiseInverse().cast<cplx>();
  return M;
}

Eigen::MatrixXcd hermitian_inverse(const Eigen::MatrixXcd& M) {
  const Eigen::Index s = M.rows();
  Eigen::LLT<Eigen::MatrixXcd> llt(M);
  if (llt.info() == Eigen::Success) return llt.solve(Eigen::MatrixXcd::Identity(s, s));
  // only reachable for tiny negative weights used by finite differencing
  return Eigen::LDLT<Eigen::MatrixXcd>(M).solve(Eigen::MatrixXcd::Identity(s, s));
}

}  // namespace

ChannelTrace::ChannelTrace(Eigen::VectorXcd h) : h_(std::move(h)) {
  if (!h_.allFinite()) fail(ErrorKind::InvalidConfig, "channel gains must be finite");
  gain_sq_ = h_.cwiseAbs2();
}

ChannelTrace ChannelTrace::unit(int n) { return ChannelTrace(Eigen::VectorXcd::Ones(n)); }

NoiseModel::NoiseModel(double sigma_w_sq) : sigma_w_sq_(sigma_w_sq) {
  if (!(sigma_w_sq > 0.0) || !std::isfinite(sigma_w_sq)) {
    fail(ErrorKind::InvalidConfig, "noise variance must be positive and finite");
  }
}

PowerAllocation::PowerAllocation(Eigen::VectorXd a_in, const Eigen::VectorXd& sigma_sq)
    : a(std::move(a_in)) {
  require_length(static_cast<int>(sigma_sq.size()), a.size(), "allocation");
  energy = a.cwiseProduct(sigma_sq);
}

double mmse_direct(const CovarianceModel& model, const ChannelTrace& channel,
                   const Eigen::VectorXd& a, const NoiseModel& noise) {
  const int n = model.n();
  require_length(n, channel.n(), "channel");
  require_length(n, a.size(), "allocation");
  // G = H A; tiny negative a from round-off is read as zero
  Eigen::VectorXcd g(n);
  for (int t = 0; t < n; ++t) g(t) = channel.h()(t) * std::sqrt(std::max(a(t), 0.0));
  const Eigen::MatrixXcd B = g.asDiagonal() * model.K();  // G K
  Eigen::MatrixXcd Ky = B * g.conjugate().asDiagonal();    // G K G†
  Ky.diagonal().array() += noise.sigma_w_sq();
  Eigen::LLT<Eigen::MatrixXcd> llt(Ky);
  const Eigen::MatrixXcd X = llt.solve(B);  // K_y^{-1} G K
  // tr[K G† K_y^{-1} G K] = Σ conj(B) ∘ X
  const double explained = (B.conjugate().cwiseProduct(X)).sum().real();
  return model.total_power() - explained;
}

double mmse_woodbury(const SpectrumDecomposition& spectrum, const ChannelTrace& channel,
                     const Eigen::VectorXd& a, const NoiseModel& noise) {
  const int n = spectrum.n();
  require_length(n, channel.n(), "channel");
  require_length(n, a.size(), "allocation");
  if (spectrum.rank() == 0) return 0.0;
  const Eigen::MatrixXcd M = information_matrix(spectrum, effective_weights(channel, a), noise.gamma());
  return hermitian_inverse(M).trace().real();
}

double mmse_sampled_lowpass(int n, int s, int t_d, const Eigen::VectorXd& a_bar,
                            const ChannelTrace& channel, const NoiseModel& noise, double total_power) {
  if (s < 1 || s > n || n % s != 0) fail(ErrorKind::RankError, "s must divide n");
  const int delta = n / s;
  if (t_d < 0 || t_d >= delta) fail(ErrorKind::DelayOutOfRange, "initial delay outside [0, n/s)");
  require_length(s, a_bar.size(), "sampled allocation");
  require_length(n, channel.n(), "channel");
  const double var = total_power / n;
  double err = 0.0;
  for (int r = 0; r < s; ++r) {
    const double g2 = channel.gain_sq()(delta * r + t_d);
    err += (total_power / s) / (1.0 + noise.gamma() * a_bar(r) * var * g2);
  }
  return err;
}

double upper_bound_uncorrelated(const Eigen::VectorXd& sigma_sq, const ChannelTrace& channel,
                                const Eigen::VectorXd& a, const NoiseModel& noise) {
  const int n = static_cast<int>(sigma_sq.size());
  require_length(n, channel.n(), "channel");
  require_length(n, a.size(), "allocation");
  double bound = 0.0;
  for (int t = 0; t < n; ++t) {
    bound += sigma_sq(t) / (1.0 + noise.gamma() * channel.gain_sq()(t) * sigma_sq(t) * a(t));
  }
  return bound;
}

double lower_bound_flat(const SpectrumDecomposition& spectrum, const Eigen::VectorXd& sigma_sq,
                        const ChannelTrace& channel, const Eigen::VectorXd& a,
                        const NoiseModel& noise) {
  if (!spectrum.is_flat()) {
    fail(ErrorKind::FlatSpectrumRequired, "lower bound needs equal non-zero eigenvalues");
  }
  const int n = spectrum.n();
  const int s = spectrum.rank();
  require_length(n, sigma_sq.size(), "variances");
  require_length(n, channel.n(), "channel");
  require_length(n, a.size(), "allocation");
  double sum = 0.0;
  for (int t = 0; t < n; ++t) {
    sum += 1.0 / (1.0 + noise.gamma() * channel.gain_sq()(t) * a(t) * sigma_sq(t));
  }
  return spectrum.total_power() / s * (sum + s - n);
}

TraceInverseTerms mmse_terms(const SpectrumDecomposition& spectrum, const ChannelTrace& channel,
                             const Eigen::VectorXd& a, const NoiseModel& noise, bool with_hessian) {
  const int n = spectrum.n();
  require_length(n, channel.n(), "channel");
  require_length(n, a.size(), "allocation");
  const double gamma = noise.gamma();
  const Eigen::VectorXd& g2 = channel.gain_sq();
  const Eigen::MatrixXcd& U = spectrum.basis;

  TraceInverseTerms out;
  const Eigen::MatrixXcd Minv = hermitian_inverse(information_matrix(spectrum, effective_weights(channel, a), gamma));
  out.value = Minv.trace().real();

  const Eigen::MatrixXcd X = U * Minv;  // rows are (M^{-1} u_t)†
  out.gradient.resize(n);
  for (int t = 0; t < n; ++t) out.gradient(t) = -gamma * g2(t) * X.row(t).squaredNorm();
#ifdef EH_MUTATE_GRADIENT_SIGN
  out.gradient = -out.gradient;
#endif

  if (with_hessian) {
    const Eigen::MatrixXcd B = X * U.adjoint();  // U M^{-1} U†
    const Eigen::MatrixXcd C = X * X.adjoint();  // U M^{-2} U†
    out.hessian.resize(n, n);
    for (int j = 0; j < n; ++j) {
      for (int i = j; i < n; ++i) {
        const double v = 2.0 * gamma * gamma * g2(i) * g2(j) * (B(i, j) * C(j, i)).real();
        out.hessian(i, j) = v;
        out.hessian(j, i) = v;
      }
    }
  }
  return out;
}

Eigen::VectorXd mmse_gradient(const SpectrumDecomposition& spectrum, const ChannelTrace& channel,
                              const Eigen::VectorXd& a, const NoiseModel& noise) {
  return mmse_terms(spectrum, channel, a, noise, false).gradient;
}

}  // namespace ehalloc
