#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hmsched {

enum class KernelFamily { RBF, Matern32, Matern52 };

std::string to_string(KernelFamily family);
/// Accepts rbf, matern32 / matern15, matern52 / matern25 (case-insensitive).
KernelFamily parse_kernel_family(const std::string& name);

/// Stationary ARD kernel. With r^2 = sum_d ((x_d - x'_d) / l_d)^2:
///   RBF:       s2 * exp(-r^2 / 2)
///   Matern32:  s2 * (1 + sqrt3 r) exp(-sqrt3 r)
///   Matern52:  s2 * (1 + sqrt5 r + 5 r^2 / 3) exp(-sqrt5 r)
struct KernelSpec {
    KernelFamily family = KernelFamily::Matern52;
    std::vector<double> length_scales;
    double signal_variance = 1.0;
    double noise_variance = 1e-6;

    [[nodiscard]] std::size_t dimension() const { return length_scales.size(); }
    /// Packed log-parameters: log l_1..log l_D, log signal, log noise.
    [[nodiscard]] Eigen::VectorXd log_params() const;
    void set_log_params(const Eigen::VectorXd& theta);
};

double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> y);

/// d k(x, y) / d(log l_1..log l_D, log signal_variance).
std::vector<double> kernel_gradient(const KernelSpec& spec, std::span<const double> x, std::span<const double> y);

/// Noise-free Gram matrix over the rows of `x`.
Eigen::MatrixXd gram_matrix(const KernelSpec& spec, const Eigen::MatrixXd& x);

struct LmlValue {
    double value = 0.0;
    Eigen::VectorXd gradient;  // w.r.t. KernelSpec::log_params()
};

/// log N(y | 0, K + noise I) via Cholesky (jitter escalates 1e-10 -> 1e-6).
/// Throws NumericalError if the matrix stays indefinite.
double log_marginal_likelihood(const KernelSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& y);
LmlValue log_marginal_likelihood_with_gradient(const KernelSpec& spec, const Eigen::MatrixXd& x,
                                               const Eigen::VectorXd& y);

struct HyperBounds {
    double length_lo = 1e-3, length_hi = 1e3;
    double signal_lo = 1e-4, signal_hi = 1e2;
    double noise_lo = 1e-6, noise_hi = 1.0;
};

struct FitOptions {
    int restarts = 8;
    int max_iterations = 100;
    std::uint64_t seed = 0;
    HyperBounds bounds;
    /// Replaces the default first start (e.g. the previous trial's fit).
    std::optional<KernelSpec> warm_start;
};

struct GpModel {
    KernelSpec kernel;
    Eigen::MatrixXd train_x;  // n x D, rows are points
    Eigen::VectorXd train_y;  // standardized targets
    double y_mean = 0.0;
    double y_std = 1.0;
    Eigen::MatrixXd chol;     // lower factor of K + (noise + jitter) I
    Eigen::VectorXd alpha;    // (K + noise I)^-1 train_y
    double jitter = 0.0;
    double lml = 0.0;         // of the standardized targets
    bool degenerate = false;  // constant targets; hyperparameters not fitted

    [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(train_x.rows()); }
    [[nodiscard]] std::size_t dimension() const { return static_cast<std::size_t>(train_x.cols()); }
};

struct Posterior {
    double mean = 0.0;
    double variance = 0.0;
};

/// Conditions a GP with fixed hyperparameters on (x, y); y is standardized.
GpModel condition_gp(const KernelSpec& kernel, const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

/// Maximizes the log marginal likelihood over ARD length-scales, signal and
/// noise variance from `restarts` starts. Deterministic given options.seed.
GpModel fit_gp(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, KernelFamily family, const FitOptions& options = {});

/// Posterior of the latent function in the units of the original targets.
Posterior predict(const GpModel& model, std::span<const double> x);
/// Row-wise batch version of `predict`.
std::vector<Posterior> predict(const GpModel& model, const Eigen::MatrixXd& x);

}  // namespace hmsched
