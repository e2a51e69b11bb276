#include "hmsched/gp.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>

#include "hmsched/errors.hpp"
#include "hmsched/rng.hpp"

namespace hmsched {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;
constexpr double kSqrt5 = 2.23606797749979;

/// Profile g(r) with k = s2 * g(r).
double profile(KernelFamily family, double r2)
{
    switch (family) {
    case KernelFamily::RBF:
        return std::exp(-0.5 * r2);
    case KernelFamily::Matern32: {
        const double r = std::sqrt(r2);
        return (1.0 + kSqrt3 * r) * std::exp(-kSqrt3 * r);
    }
    case KernelFamily::Matern52: {
        const double r = std::sqrt(r2);
        return (1.0 + kSqrt5 * r + 5.0 * r2 / 3.0) * std::exp(-kSqrt5 * r);
    }
    }
    return 0.0;
}

/// -g'(r) / r, so that d k / d log l_d = s2 * h(r) * (dx_d / l_d)^2.
double profile_slope(KernelFamily family, double r2)
{
    switch (family) {
    case KernelFamily::RBF:
        return std::exp(-0.5 * r2);
    case KernelFamily::Matern32:
        return 3.0 * std::exp(-kSqrt3 * std::sqrt(r2));
    case KernelFamily::Matern52: {
        const double r = std::sqrt(r2);
        return (5.0 / 3.0) * (1.0 + kSqrt5 * r) * std::exp(-kSqrt5 * r);
    }
    }
    return 0.0;
}

void check_dims(const KernelSpec& spec, std::size_t a, std::size_t b)
{
    if (a != spec.dimension() || b != spec.dimension()) {
        throw DomainError("kernel: dimension mismatch (" + std::to_string(a) + ", " + std::to_string(b) +
                          " vs " + std::to_string(spec.dimension()) + " length-scales)");
    }
}

/// Squared coordinate differences for every pair i < j, stored pair-major.
struct PairCache {
    Eigen::Index n = 0;
    Eigen::Index d = 0;
    std::vector<double> sq;

    explicit PairCache(const Eigen::MatrixXd& x) : n(x.rows()), d(x.cols())
    {
        sq.reserve(static_cast<std::size_t>(n * (n - 1) / 2 * d));
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = i + 1; j < n; ++j) {
                for (Eigen::Index k = 0; k < d; ++k) {
                    const double diff = x(i, k) - x(j, k);
                    sq.push_back(diff * diff);
                }
            }
        }
    }
};

Eigen::MatrixXd gram_from_cache(const KernelSpec& spec, const PairCache& cache, Eigen::MatrixXd* r2_out = nullptr)
{
    const auto n = cache.n;
    const auto d = cache.d;
    std::vector<double> inv_l2(static_cast<std::size_t>(d));
    for (Eigen::Index k = 0; k < d; ++k) {
        const double l = spec.length_scales[static_cast<std::size_t>(k)];
        inv_l2[static_cast<std::size_t>(k)] = 1.0 / (l * l);
    }
    Eigen::MatrixXd kmat(n, n);
    if (r2_out) r2_out->setZero(n, n);
    const double* p = cache.sq.data();
    for (Eigen::Index i = 0; i < n; ++i) {
        kmat(i, i) = spec.signal_variance;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            double r2 = 0.0;
            for (Eigen::Index k = 0; k < d; ++k) r2 += p[k] * inv_l2[static_cast<std::size_t>(k)];
            p += d;
            const double v = spec.signal_variance * profile(spec.family, r2);
            kmat(i, j) = v;
            kmat(j, i) = v;
            if (r2_out) {
                (*r2_out)(i, j) = r2;
                (*r2_out)(j, i) = r2;
            }
        }
    }
    return kmat;
}

struct Factor {
    Eigen::LLT<Eigen::MatrixXd> llt;
    double jitter = 0.0;
};

/// Cholesky of `k` + noise I, escalating jitter 1e-10 .. 1e-6 on failure.
Factor factorize(const Eigen::MatrixXd& k, double noise)
{
    static constexpr double kJitters[] = {0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6};
    Factor f;
    for (double jitter : kJitters) {
        Eigen::MatrixXd a = k;
        a.diagonal().array() += noise + jitter;
        f.llt.compute(a);
        if (f.llt.info() == Eigen::Success) {
            f.jitter = jitter;
            return f;
        }
    }
    throw NumericalError("Cholesky failed after jitter escalation to 1e-6");
}

double lml_from_factor(const Factor& f, const Eigen::VectorXd& y, const Eigen::VectorXd& alpha)
{
    const auto n = static_cast<double>(y.size());
    const Eigen::MatrixXd& l = f.llt.matrixLLT();
    double logdet_half = 0.0;
    for (Eigen::Index i = 0; i < l.rows(); ++i) logdet_half += std::log(l(i, i));
    return -0.5 * y.dot(alpha) - logdet_half - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

LmlValue lml_with_gradient(const KernelSpec& spec, const PairCache& cache, const Eigen::VectorXd& y)
{
    const auto n = cache.n;
    const auto d = cache.d;
    Eigen::MatrixXd r2;
    const Eigen::MatrixXd kmat = gram_from_cache(spec, cache, &r2);
    const Factor f = factorize(kmat, spec.noise_variance);
    const Eigen::VectorXd alpha = f.llt.solve(y);

    LmlValue out;
    out.value = lml_from_factor(f, y, alpha);
    out.gradient = Eigen::VectorXd::Zero(d + 2);

    // W = alpha alpha^T - K^-1; dLML/dtheta = 1/2 tr(W dK/dtheta).
    Eigen::MatrixXd w = alpha * alpha.transpose() - f.llt.solve(Eigen::MatrixXd::Identity(n, n));

    std::vector<double> inv_l2(static_cast<std::size_t>(d));
    for (Eigen::Index k = 0; k < d; ++k) {
        const double l = spec.length_scales[static_cast<std::size_t>(k)];
        inv_l2[static_cast<std::size_t>(k)] = 1.0 / (l * l);
    }
    const double* p = cache.sq.data();
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            // Off-diagonal pair counted twice, times the 1/2 of the trace.
            const double scale = w(i, j) * spec.signal_variance * profile_slope(spec.family, r2(i, j));
            for (Eigen::Index k = 0; k < d; ++k) {
                out.gradient[k] += scale * p[k] * inv_l2[static_cast<std::size_t>(k)];
            }
            p += d;
        }
    }
    out.gradient[d] = 0.5 * (w.array() * kmat.array()).sum();
    out.gradient[d + 1] = 0.5 * spec.noise_variance * w.trace();
    return out;
}

/// Box-constrained L-BFGS with projection; minimizes `f` from `x`.
template <typename Objective>
double minimize_projected_lbfgs(Objective&& f, Eigen::VectorXd& x, const Eigen::VectorXd& lo,
                                const Eigen::VectorXd& hi, int max_iterations)
{
    constexpr std::size_t kMemory = 8;
    const auto dim = x.size();
    x = x.cwiseMax(lo).cwiseMin(hi);
    Eigen::VectorXd g(dim);
    double fx = f(x, g);
    if (!std::isfinite(fx)) return fx;

    std::deque<Eigen::VectorXd> s_hist, y_hist;
    std::deque<double> rho_hist;

    for (int iter = 0; iter < max_iterations; ++iter) {
        // Variables pinned at a bound with the gradient pushing outward.
        std::vector<bool> active(static_cast<std::size_t>(dim), false);
        double pg_norm = 0.0;
        for (Eigen::Index i = 0; i < dim; ++i) {
            const bool at_lo = x[i] <= lo[i] && g[i] > 0.0;
            const bool at_hi = x[i] >= hi[i] && g[i] < 0.0;
            active[static_cast<std::size_t>(i)] = at_lo || at_hi;
            if (!active[static_cast<std::size_t>(i)]) pg_norm = std::max(pg_norm, std::abs(g[i]));
        }
        if (pg_norm < 1e-6) break;

        Eigen::VectorXd q = g;
        for (Eigen::Index i = 0; i < dim; ++i) {
            if (active[static_cast<std::size_t>(i)]) q[i] = 0.0;
        }
        std::vector<double> a(s_hist.size());
        for (std::size_t k = s_hist.size(); k-- > 0;) {
            a[k] = rho_hist[k] * s_hist[k].dot(q);
            q -= a[k] * y_hist[k];
        }
        if (!s_hist.empty()) {
            q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
        } else {
            q *= std::min(1.0, 1.0 / std::max(pg_norm, 1e-12));
        }
        for (std::size_t k = 0; k < s_hist.size(); ++k) {
            const double b = rho_hist[k] * y_hist[k].dot(q);
            q += (a[k] - b) * s_hist[k];
        }
        Eigen::VectorXd dir = -q;
        for (Eigen::Index i = 0; i < dim; ++i) {
            if (active[static_cast<std::size_t>(i)]) dir[i] = 0.0;
        }
        if (g.dot(dir) >= 0.0) {
            dir = -g;
            for (Eigen::Index i = 0; i < dim; ++i) {
                if (active[static_cast<std::size_t>(i)]) dir[i] = 0.0;
            }
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
        }

        double step = 1.0;
        Eigen::VectorXd x_new(dim), g_new(dim);
        double f_new = std::numeric_limits<double>::infinity();
        bool accepted = false;
        for (int ls = 0; ls < 30; ++ls) {
            x_new = (x + step * dir).cwiseMax(lo).cwiseMin(hi);
            f_new = f(x_new, g_new);
            if (std::isfinite(f_new) && f_new <= fx + 1e-4 * g.dot(x_new - x)) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            if (s_hist.empty()) break;
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            continue;
        }

        const Eigen::VectorXd s = x_new - x;
        const Eigen::VectorXd yv = g_new - g;
        const double sy = s.dot(yv);
        if (sy > 1e-10) {
            s_hist.push_back(s);
            y_hist.push_back(yv);
            rho_hist.push_back(1.0 / sy);
            if (s_hist.size() > kMemory) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }
        const double improvement = fx - f_new;
        x = x_new;
        g = g_new;
        fx = f_new;
        if (improvement < 1e-9 * std::max(1.0, std::abs(fx))) break;
    }
    return fx;
}

KernelSpec default_kernel(KernelFamily family, std::size_t dim)
{
    KernelSpec k;
    k.family = family;
    k.length_scales.assign(dim, 0.5);
    k.signal_variance = 1.0;
    k.noise_variance = 1e-3;
    return k;
}

}  // namespace

std::string to_string(KernelFamily family)
{
    switch (family) {
    case KernelFamily::RBF: return "rbf";
    case KernelFamily::Matern32: return "matern32";
    case KernelFamily::Matern52: return "matern52";
    }
    return "unknown";
}

KernelFamily parse_kernel_family(const std::string& name)
{
    std::string s;
    for (char c : name) {
        if (c != '_' && c != ' ' && c != '/' && c != '.') s.push_back(static_cast<char>(std::tolower(c)));
    }
    if (s == "rbf" || s == "se" || s == "squaredexponential") return KernelFamily::RBF;
    if (s == "matern32" || s == "matern15") return KernelFamily::Matern32;
    if (s == "matern52" || s == "matern25") return KernelFamily::Matern52;
    throw ConfigError("unknown kernel family '" + name + "'");
}

Eigen::VectorXd KernelSpec::log_params() const
{
    const auto d = static_cast<Eigen::Index>(length_scales.size());
    Eigen::VectorXd theta(d + 2);
    for (Eigen::Index k = 0; k < d; ++k) theta[k] = std::log(length_scales[static_cast<std::size_t>(k)]);
    theta[d] = std::log(signal_variance);
    theta[d + 1] = std::log(noise_variance);
    return theta;
}

void KernelSpec::set_log_params(const Eigen::VectorXd& theta)
{
    const auto d = theta.size() - 2;
    length_scales.resize(static_cast<std::size_t>(d));
    for (Eigen::Index k = 0; k < d; ++k) length_scales[static_cast<std::size_t>(k)] = std::exp(theta[k]);
    signal_variance = std::exp(theta[d]);
    noise_variance = std::exp(theta[d + 1]);
}

double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> y)
{
    check_dims(spec, x.size(), y.size());
    double r2 = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double z = (x[k] - y[k]) / spec.length_scales[k];
        r2 += z * z;
    }
    return spec.signal_variance * profile(spec.family, r2);
}

std::vector<double> kernel_gradient(const KernelSpec& spec, std::span<const double> x, std::span<const double> y)
{
    check_dims(spec, x.size(), y.size());
    double r2 = 0.0;
    std::vector<double> z2(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double z = (x[k] - y[k]) / spec.length_scales[k];
        z2[k] = z * z;
        r2 += z2[k];
    }
    std::vector<double> grad(x.size() + 1);
    const double h = spec.signal_variance * profile_slope(spec.family, r2);
    for (std::size_t k = 0; k < x.size(); ++k) grad[k] = h * z2[k];
    grad[x.size()] = spec.signal_variance * profile(spec.family, r2);
    return grad;
}

Eigen::MatrixXd gram_matrix(const KernelSpec& spec, const Eigen::MatrixXd& x)
{
    check_dims(spec, static_cast<std::size_t>(x.cols()), static_cast<std::size_t>(x.cols()));
    return gram_from_cache(spec, PairCache(x));
}

double log_marginal_likelihood(const KernelSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& y)
{
    check_dims(spec, static_cast<std::size_t>(x.cols()), static_cast<std::size_t>(x.cols()));
    if (x.rows() < 1 || x.rows() != y.size()) throw DomainError("log_marginal_likelihood: bad training data shape");
    const Factor f = factorize(gram_from_cache(spec, PairCache(x)), spec.noise_variance);
    const Eigen::VectorXd alpha = f.llt.solve(y);
    return lml_from_factor(f, y, alpha);
}

LmlValue log_marginal_likelihood_with_gradient(const KernelSpec& spec, const Eigen::MatrixXd& x,
                                               const Eigen::VectorXd& y)
{
    check_dims(spec, static_cast<std::size_t>(x.cols()), static_cast<std::size_t>(x.cols()));
    if (x.rows() < 1 || x.rows() != y.size()) throw DomainError("log_marginal_likelihood: bad training data shape");
    return lml_with_gradient(spec, PairCache(x), y);
}

GpModel condition_gp(const KernelSpec& kernel, const Eigen::MatrixXd& x, const Eigen::VectorXd& y)
{
    check_dims(kernel, static_cast<std::size_t>(x.cols()), static_cast<std::size_t>(x.cols()));
    if (x.rows() < 1 || x.rows() != y.size()) throw DomainError("condition_gp: bad training data shape");
    GpModel m;
    m.kernel = kernel;
    m.train_x = x;
    m.train_y = y;
    const Factor f = factorize(gram_from_cache(kernel, PairCache(x)), kernel.noise_variance);
    m.chol = f.llt.matrixL();
    m.jitter = f.jitter;
    m.alpha = f.llt.solve(y);
    m.lml = lml_from_factor(f, y, m.alpha);
    return m;
}

GpModel fit_gp(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, KernelFamily family, const FitOptions& options)
{
    const auto n = x.rows();
    const auto d = x.cols();
    if (n < 1 || n != y.size()) throw DomainError("fit_gp: need at least one training point");
    if (!y.allFinite() || !x.allFinite()) throw DomainError("fit_gp: training data must be finite");

    const double mean = y.mean();
    double stddev = 0.0;
    if (n >= 2) stddev = std::sqrt((y.array() - mean).square().sum() / static_cast<double>(n - 1));

    const auto& b = options.bounds;
    const auto dim = static_cast<std::size_t>(d);
    if (n == 1 || !(stddev > 1e-12 * std::max(1.0, std::abs(mean)))) {
        KernelSpec k = default_kernel(family, dim);
        const bool degenerate = n >= 2;
        if (degenerate) {
            std::fill(k.length_scales.begin(), k.length_scales.end(), 1.0);
            k.signal_variance = b.signal_lo;
            k.noise_variance = b.noise_lo;
        }
        GpModel m = condition_gp(k, x, Eigen::VectorXd::Zero(n));
        m.y_mean = mean;
        m.y_std = 1.0;
        m.degenerate = degenerate;
        return m;
    }

    const Eigen::VectorXd ys = (y.array() - mean) / stddev;
    const PairCache cache(x);

    Eigen::VectorXd lo(d + 2), hi(d + 2);
    lo.head(d).setConstant(std::log(b.length_lo));
    hi.head(d).setConstant(std::log(b.length_hi));
    lo[d] = std::log(b.signal_lo);
    hi[d] = std::log(b.signal_hi);
    lo[d + 1] = std::log(b.noise_lo);
    hi[d + 1] = std::log(b.noise_hi);

    KernelSpec work = default_kernel(family, dim);
    auto objective = [&](const Eigen::VectorXd& theta, Eigen::VectorXd& grad) -> double {
        work.set_log_params(theta);
        try {
            const LmlValue v = lml_with_gradient(work, cache, ys);
            if (!std::isfinite(v.value) || !v.gradient.allFinite()) return std::numeric_limits<double>::infinity();
            grad = -v.gradient;
            return -v.value;
        } catch (const NumericalError&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    Rng rng = Rng(options.seed).split("gp-restarts");
    const int restarts = std::max(1, options.restarts);
    double best_value = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_theta;
    for (int s = 0; s < restarts; ++s) {
        Eigen::VectorXd theta(d + 2);
        if (s == 0) {
            KernelSpec init = default_kernel(family, dim);
            if (options.warm_start && options.warm_start->dimension() == dim) {
                init = *options.warm_start;
                init.family = family;
            }
            theta = init.log_params();
        } else {
            for (Eigen::Index k = 0; k < d; ++k) theta[k] = rng.uniform(std::log(0.05), std::log(5.0));
            theta[d] = rng.uniform(std::log(0.1), std::log(10.0));
            theta[d + 1] = rng.uniform(std::log(1e-6), std::log(1e-1));
        }
        theta = theta.cwiseMax(lo).cwiseMin(hi);
        const double value = minimize_projected_lbfgs(objective, theta, lo, hi, options.max_iterations);
        if (value < best_value) {
            best_value = value;
            best_theta = theta;
        }
    }
    if (!std::isfinite(best_value)) {
        throw NumericalError("fit_gp: every restart failed");
    }

    KernelSpec fitted = default_kernel(family, dim);
    fitted.set_log_params(best_theta);
    GpModel m = condition_gp(fitted, x, ys);
    m.y_mean = mean;
    m.y_std = stddev;
    return m;
}

Posterior predict(const GpModel& model, std::span<const double> x)
{
    if (x.size() != model.dimension()) throw DomainError("predict: dimension mismatch");
    Eigen::MatrixXd row(1, static_cast<Eigen::Index>(x.size()));
    for (std::size_t k = 0; k < x.size(); ++k) row(0, static_cast<Eigen::Index>(k)) = x[k];
    return predict(model, row).front();
}

std::vector<Posterior> predict(const GpModel& model, const Eigen::MatrixXd& x)
{
    if (static_cast<std::size_t>(x.cols()) != model.dimension()) throw DomainError("predict: dimension mismatch");
    const auto n = model.train_x.rows();
    const auto m = x.rows();
    const auto d = x.cols();
    const auto& spec = model.kernel;

    std::vector<double> inv_l(static_cast<std::size_t>(d));
    for (Eigen::Index k = 0; k < d; ++k) inv_l[static_cast<std::size_t>(k)] = 1.0 / spec.length_scales[static_cast<std::size_t>(k)];

    Eigen::MatrixXd kstar(n, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            double r2 = 0.0;
            for (Eigen::Index k = 0; k < d; ++k) {
                const double z = (x(j, k) - model.train_x(i, k)) * inv_l[static_cast<std::size_t>(k)];
                r2 += z * z;
            }
            kstar(i, j) = spec.signal_variance * profile(spec.family, r2);
        }
    }
    const Eigen::VectorXd mean = kstar.transpose() * model.alpha;
    model.chol.triangularView<Eigen::Lower>().solveInPlace(kstar);
    const Eigen::VectorXd explained = kstar.colwise().squaredNorm().transpose();

    std::vector<Posterior> out(static_cast<std::size_t>(m));
    const double scale2 = model.y_std * model.y_std;
    for (Eigen::Index j = 0; j < m; ++j) {
        auto& p = out[static_cast<std::size_t>(j)];
        p.mean = model.y_mean + model.y_std * mean[j];
        p.variance = std::max(0.0, spec.signal_variance - explained[j]) * scale2;
    }
    return out;
}

}  // namespace hmsched
