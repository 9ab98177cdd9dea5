#pragma once

#include <Eigen/Dense>

#include "ehalloc/signal_model.hpp"

namespace ehalloc {

/// Complex fading gains h_t with |h_t|^2 cached.
class ChannelTrace {
 public:
  explicit ChannelTrace(Eigen::VectorXcd h);
  static ChannelTrace unit(int n);

  int n() const { return static_cast<int>(h_.size()); }
  const Eigen::VectorXcd& h() const { return h_; }
  const Eigen::VectorXd& gain_sq() const { return gain_sq_; }

 private:
  Eigen::VectorXcd h_;
  Eigen::VectorXd gain_sq_;
};

/// Additive white noise at the fusion center, K_w = σ_w² I.
class NoiseModel {
 public:
  explicit NoiseModel(double sigma_w_sq);

  double sigma_w_sq() const { return sigma_w_sq_; }
  double gamma() const { return 1.0 / sigma_w_sq_; }

 private:
  double sigma_w_sq_;
};

/// Amplifier energies a_t and the per-slot consumed energy J_t = a_t σ²_{x_t}.
struct PowerAllocation {
  Eigen::VectorXd a;
  Eigen::VectorXd energy;

  PowerAllocation() = default;
  PowerAllocation(Eigen::VectorXd a_in, const Eigen::VectorXd& sigma_sq);

  int n() const { return static_cast<int>(a.size()); }
};

/// tr[K_x - K_xy K_y^{-1} K_xy†], solved against the Cholesky factor of K_y.
double mmse_direct(const CovarianceModel& model, const ChannelTrace& channel,
                   const Eigen::VectorXd& a, const NoiseModel& noise);

/// tr[(Λ^{-1} + γ U_Ω† diag(|h|² a) U_Ω)^{-1}].
double mmse_woodbury(const SpectrumDecomposition& spectrum, const ChannelTrace& channel,
                     const Eigen::VectorXd& a, const NoiseModel& noise);

/// Closed form for a flat low-pass c.w.s.s. signal observed only at the
/// equidistant slots Δr + t_d (0-based); `a_bar` holds the s sampled gains.
double mmse_sampled_lowpass(int n, int s, int t_d, const Eigen::VectorXd& a_bar,
                            const ChannelTrace& channel, const NoiseModel& noise, double total_power);

/// Error when correlations are ignored; always an upper bound on the MMSE.
double upper_bound_uncorrelated(const Eigen::VectorXd& sigma_sq, const ChannelTrace& channel,
                                const Eigen::VectorXd& a, const NoiseModel& noise);

/// Lower bound for flat spectra Λ = (P_x/s) I_s. Throws FlatSpectrumRequired otherwise.
double lower_bound_flat(const SpectrumDecomposition& spectrum, const Eigen::VectorXd& sigma_sq,
                        const ChannelTrace& channel, const Eigen::VectorXd& a,
                        const NoiseModel& noise);

/// ∂err/∂a_t = -γ|h_t|² [U_Ω M^{-2} U_Ω†]_{tt}.
Eigen::VectorXd mmse_gradient(const SpectrumDecomposition& spectrum, const ChannelTrace& channel,
                              const Eigen::VectorXd& a, const NoiseModel& noise);

/// Value, gradient and (optionally) Hessian of the trace-inverse error in one pass.
struct TraceInverseTerms {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

TraceInverseTerms mmse_terms(const SpectrumDecomposition& spectrum, const ChannelTrace& channel,
                             const Eigen::VectorXd& a, const NoiseModel& noise, bool with_hessian);

inline double normalized(double mse, double total_power) { return mse / total_power; }

}  // namespace ehalloc
