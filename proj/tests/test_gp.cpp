#include <doctest.h>

#include <cmath>

#include <Eigen/Eigenvalues>

#include "hmsched/errors.hpp"
#include "hmsched/gp.hpp"
#include "hmsched/rng.hpp"
#include "oracles.hpp"

using namespace hmsched;

namespace {

constexpr KernelFamily kFamilies[] = {KernelFamily::RBF, KernelFamily::Matern32, KernelFamily::Matern52};

KernelSpec random_spec(Rng& rng, KernelFamily family, std::size_t d)
{
    KernelSpec k;
    k.family = family;
    for (std::size_t i = 0; i < d; ++i) k.length_scales.push_back(std::exp(rng.uniform(std::log(0.1), std::log(2.0))));
    k.signal_variance = std::exp(rng.uniform(std::log(0.2), std::log(5.0)));
    k.noise_variance = std::exp(rng.uniform(std::log(1e-4), std::log(0.5)));
    return k;
}

Eigen::MatrixXd random_x(Rng& rng, Eigen::Index n, Eigen::Index d)
{
    Eigen::MatrixXd x(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < d; ++k) x(i, k) = rng.uniform();
    }
    return x;
}

Eigen::VectorXd random_y(Rng& rng, Eigen::Index n)
{
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y[i] = rng.normal();
    return y;
}

double rel_err(double a, double b, double floor)
{
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

std::vector<double> row(const Eigen::MatrixXd& x, Eigen::Index i)
{
    std::vector<double> r(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index k = 0; k < x.cols(); ++k) r[static_cast<std::size_t>(k)] = x(i, k);
    return r;
}

}  // namespace

TEST_CASE("kernel closed-form values")
{
    for (auto f : kFamilies) {
        KernelSpec k{f, {0.3, 0.7}, 2.5, 0.0};
        const std::vector<double> x{0.2, 0.9};
        CHECK(kernel_eval(k, x, x) == doctest::Approx(2.5));
    }
    KernelSpec rbf{KernelFamily::RBF, {1.0}, 1.0, 0.0};
    const std::vector<double> a{0.0}, b{1.0};
    CHECK(kernel_eval(rbf, a, b) == doctest::Approx(0.60653).epsilon(1e-5));
    KernelSpec m52{KernelFamily::Matern52, {1.0}, 1.0, 0.0};
    CHECK(kernel_eval(m52, a, b) == doctest::Approx(0.52399).epsilon(1e-5));
    KernelSpec m32{KernelFamily::Matern32, {1.0}, 1.0, 0.0};
    CHECK(kernel_eval(m32, a, b) == doctest::Approx((1 + std::sqrt(3.0)) * std::exp(-std::sqrt(3.0))));

    const std::vector<double> two{0.0, 0.0};
    CHECK_THROWS_AS(kernel_eval(rbf, two, two), DomainError);
}

TEST_CASE("kernels agree with the textbook forms")
{
    Rng rng(31);
    for (auto f : kFamilies) {
        for (int rep = 0; rep < 20; ++rep) {
            const auto k = random_spec(rng, f, 4);
            const auto x = random_x(rng, 2, 4);
            const auto a = row(x, 0), b = row(x, 1);
            CHECK(kernel_eval(k, a, b) ==
                  doctest::Approx(oracle::kernel(static_cast<int>(f), k.length_scales, k.signal_variance, a.data(),
                                                 b.data()))
                      .epsilon(1e-12));
        }
    }
}

TEST_CASE("rougher kernels have heavier tails")
{
    // The curves cross near r = 1.95; below that the order flips.
    for (double r = 0.05; r <= 6.0; r += 0.05) {
        const std::vector<double> a{0.0}, b{r};
        const double rbf = kernel_eval({KernelFamily::RBF, {1.0}, 1.0, 0.0}, a, b);
        const double m52 = kernel_eval({KernelFamily::Matern52, {1.0}, 1.0, 0.0}, a, b);
        const double m32 = kernel_eval({KernelFamily::Matern32, {1.0}, 1.0, 0.0}, a, b);
        if (r >= 1.96) {
            CHECK(rbf <= m52);
            CHECK(m52 <= m32);
        } else if (r <= 1.94) {
            CHECK(rbf >= m52);
            CHECK(m52 >= m32);
        }
    }
}

TEST_CASE("gram matrices are positive semi-definite")
{
    Rng rng(2);
    for (auto f : kFamilies) {
        for (int rep = 0; rep < 20; ++rep) {
            const auto n = static_cast<Eigen::Index>(rng.uniform_int(2, 20));
            const auto k = random_spec(rng, f, 3);
            const Eigen::MatrixXd g = gram_matrix(k, random_x(rng, n, 3));
            const double lo = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(g).eigenvalues().minCoeff();
            CHECK(lo >= -1e-8 * k.signal_variance);
        }
    }
}

TEST_CASE("kernel gradient matches central differences")
{
    Rng rng(17);
    const double h = 1e-5;
    for (auto f : kFamilies) {
        double worst = 0.0;
        for (int rep = 0; rep < 50; ++rep) {
            const std::size_t d = 3;
            auto k = random_spec(rng, f, d);
            const auto x = random_x(rng, 2, static_cast<Eigen::Index>(d));
            const auto a = row(x, 0), b = row(x, 1);
            const auto g = kernel_gradient(k, a, b);
            REQUIRE(g.size() == d + 1);
            const Eigen::VectorXd theta = k.log_params();
            for (std::size_t j = 0; j <= d; ++j) {
                auto plus = k, minus = k;
                Eigen::VectorXd tp = theta, tm = theta;
                tp[static_cast<Eigen::Index>(j)] += h;
                tm[static_cast<Eigen::Index>(j)] -= h;
                plus.set_log_params(tp);
                minus.set_log_params(tm);
                const double fd = (kernel_eval(plus, a, b) - kernel_eval(minus, a, b)) / (2 * h);
                worst = std::max(worst, rel_err(g[j], fd, 1e-6 * k.signal_variance));
            }
        }
        CHECK(worst < 1e-4);
    }
}

TEST_CASE("log marginal likelihood gradient matches central differences")
{
    Rng rng(23);
    const double h = 1e-5;
    for (auto f : kFamilies) {
        double worst = 0.0;
        for (int rep = 0; rep < 50; ++rep) {
            const auto n = static_cast<Eigen::Index>(rng.uniform_int(3, 12));
            const Eigen::Index d = 3;
            const auto k = random_spec(rng, f, static_cast<std::size_t>(d));
            const auto x = random_x(rng, n, d);
            const auto y = random_y(rng, n);
            const auto v = log_marginal_likelihood_with_gradient(k, x, y);
            REQUIRE(v.gradient.size() == d + 2);
            CHECK(v.value == doctest::Approx(log_marginal_likelihood(k, x, y)).epsilon(1e-12));
            const Eigen::VectorXd theta = k.log_params();
            for (Eigen::Index j = 0; j < d + 2; ++j) {
                auto plus = k, minus = k;
                Eigen::VectorXd tp = theta, tm = theta;
                tp[j] += h;
                tm[j] -= h;
                plus.set_log_params(tp);
                minus.set_log_params(tm);
                const double fd =
                    (log_marginal_likelihood(plus, x, y) - log_marginal_likelihood(minus, x, y)) / (2 * h);
                worst = std::max(worst, rel_err(v.gradient[j], fd, 1e-6));
            }
        }
        CHECK(worst < 1e-4);
    }
}

TEST_CASE("log marginal likelihood against a dense oracle")
{
    KernelSpec one{KernelFamily::RBF, {1.0}, 0.9, 0.1};
    Eigen::MatrixXd x1(1, 1);
    x1(0, 0) = 0.3;
    CHECK(log_marginal_likelihood(one, x1, Eigen::VectorXd::Zero(1)) == doctest::Approx(-0.91894).epsilon(1e-5));

    Rng rng(5);
    for (auto f : kFamilies) {
        for (int rep = 0; rep < 10; ++rep) {
            const auto k = random_spec(rng, f, 2);
            const auto x = random_x(rng, 10, 2);
            const auto y = random_y(rng, 10);
            const double want = oracle::dense_lml(
                oracle::dense_cov(static_cast<int>(f), k.length_scales, k.signal_variance, k.noise_variance, x), y);
            CHECK(std::abs(log_marginal_likelihood(k, x, y) - want) < 1e-8 * std::max(1.0, std::abs(want)));

            // Permuting the training points changes nothing.
            Eigen::PermutationMatrix<Eigen::Dynamic> perm(10);
            perm.setIdentity();
            std::reverse(perm.indices().data(), perm.indices().data() + 10);
            CHECK(log_marginal_likelihood(k, perm * x, perm * y) ==
                  doctest::Approx(log_marginal_likelihood(k, x, y)).epsilon(1e-10));
        }
    }
}

TEST_CASE("posterior against a dense oracle")
{
    Rng rng(9);
    for (auto f : kFamilies) {
        for (int rep = 0; rep < 10; ++rep) {
            const auto k = random_spec(rng, f, 3);
            const auto x = random_x(rng, 10, 3);
            const auto y = random_y(rng, 10);
            const GpModel m = condition_gp(k, x, y);
            const Eigen::MatrixXd kinv =
                oracle::dense_cov(static_cast<int>(f), k.length_scales, k.signal_variance, k.noise_variance, x)
                    .inverse();
            const auto q = random_x(rng, 5, 3);
            const auto post = predict(m, q);
            for (Eigen::Index j = 0; j < q.rows(); ++j) {
                Eigen::VectorXd ks(10);
                const auto qj = row(q, j);
                for (Eigen::Index i = 0; i < 10; ++i) {
                    const auto xi = row(x, i);
                    ks[i] = oracle::kernel(static_cast<int>(f), k.length_scales, k.signal_variance, qj.data(), xi.data());
                }
                const double mean = ks.dot(kinv * y);
                const double var = std::max(0.0, k.signal_variance - ks.dot(kinv * ks));
                CHECK(std::abs(post[static_cast<std::size_t>(j)].mean - mean) < 1e-6);
                CHECK(std::abs(post[static_cast<std::size_t>(j)].variance - var) < 1e-6);
                CHECK(post[static_cast<std::size_t>(j)].variance <= k.signal_variance + 1e-12);
                const auto single = predict(m, qj);
                CHECK(single.mean == doctest::Approx(post[static_cast<std::size_t>(j)].mean).epsilon(1e-12));
            }
            // Factor reconstructs the regularized Gram matrix.
            Eigen::MatrixXd kk = gram_matrix(k, x);
            kk.diagonal().array() += k.noise_variance + m.jitter;
            CHECK((m.chol * m.chol.transpose() - kk).norm() <= 1e-8 * kk.norm());
        }
    }
}

TEST_CASE("interpolation and prior reversion limits")
{
    Rng rng(41);
    KernelSpec k{KernelFamily::Matern52, {0.3, 0.3}, 1.5, 1e-8};
    const auto x = random_x(rng, 8, 2);
    const auto y = random_y(rng, 8);
    GpModel m = condition_gp(k, x, y);
    for (Eigen::Index i = 0; i < 8; ++i) {
        const auto p = predict(m, row(x, i));
        CHECK(std::abs(p.mean - y[i]) <= 1e-3 * std::max(1.0, std::abs(y[i])));
        CHECK(p.variance < 1e-4 * k.signal_variance);
    }
    m.y_mean = 3.0;
    m.y_std = 2.0;
    const std::vector<double> far{50.0, -40.0};
    const auto p = predict(m, far);
    CHECK(p.mean == doctest::Approx(3.0).epsilon(0.01));
    CHECK(p.variance == doctest::Approx(k.signal_variance * 4.0).epsilon(0.01));
    CHECK_THROWS_AS(predict(m, std::vector<double>{0.1}), DomainError);
}

TEST_CASE("fit_gp improves on its starting points")
{
    Rng rng(13);
    for (auto f : kFamilies) {
        const auto x = random_x(rng, 15, 2);
        Eigen::VectorXd y(15);
        for (Eigen::Index i = 0; i < 15; ++i) y[i] = std::sin(6 * x(i, 0)) + 0.3 * x(i, 1);
        FitOptions opts;
        opts.seed = 4;
        KernelSpec warm{f, {0.2, 0.9}, 0.7, 1e-2};
        opts.warm_start = warm;
        const GpModel m = fit_gp(x, y, f, opts);
        const Eigen::VectorXd ys = (y.array() - m.y_mean) / m.y_std;
        KernelSpec def{f, {0.5, 0.5}, 1.0, 1e-3};
        CHECK(m.lml >= log_marginal_likelihood(def, x, ys) - 1e-9);
        CHECK(m.lml >= log_marginal_likelihood(warm, x, ys) - 1e-9);
        CHECK(m.lml == doctest::Approx(log_marginal_likelihood(m.kernel, x, ys)).epsilon(1e-9));
        for (double l : m.kernel.length_scales) {
            CHECK(l >= 1e-3 * (1 - 1e-12));
            CHECK(l <= 1e3 * (1 + 1e-12));
        }
        CHECK(m.kernel.noise_variance >= 1e-6 * (1 - 1e-12));
        CHECK(m.kernel.noise_variance <= 1.0 + 1e-12);
        CHECK(m.kernel.signal_variance >= 1e-4 * (1 - 1e-12));
        CHECK(m.kernel.signal_variance <= 1e2 * (1 + 1e-12));
        CHECK_FALSE(m.degenerate);

        // Same seed, same model.
        const GpModel again = fit_gp(x, y, f, opts);
        CHECK(again.kernel.length_scales == m.kernel.length_scales);
        CHECK(again.lml == m.lml);
    }
}

TEST_CASE("fit_gp standardizes targets")
{
    Rng rng(6);
    const auto x = random_x(rng, 12, 2);
    Eigen::VectorXd y(12);
    for (Eigen::Index i = 0; i < 12; ++i) y[i] = 100.0 + 5.0 * x(i, 0);
    const GpModel m = fit_gp(x, y, KernelFamily::Matern52);
    CHECK(m.y_mean == doctest::Approx(y.mean()));
    CHECK(m.train_y.mean() == doctest::Approx(0.0).epsilon(1e-12).scale(1.0));
    const double sd = std::sqrt((m.train_y.array() - m.train_y.mean()).square().sum() / 11.0);
    CHECK(sd == doctest::Approx(1.0));
    const auto p = predict(m, row(x, 3));
    CHECK(p.mean == doctest::Approx(y[3]).epsilon(1e-3));
}

TEST_CASE("constant targets give a flagged degenerate model")
{
    Rng rng(8);
    const auto x = random_x(rng, 6, 3);
    const GpModel m = fit_gp(x, Eigen::VectorXd::Constant(6, 4.25), KernelFamily::RBF);
    CHECK(m.degenerate);
    const auto p = predict(m, std::vector<double>{0.1, 0.5, 0.9});
    CHECK(p.mean == doctest::Approx(4.25));

    const GpModel single = fit_gp(random_x(rng, 1, 3), Eigen::VectorXd::Constant(1, -2.0), KernelFamily::RBF);
    CHECK_FALSE(single.degenerate);
    CHECK(predict(single, std::vector<double>{0.5, 0.5, 0.5}).mean == doctest::Approx(-2.0));
}

TEST_CASE("length-scales separate a relevant and an irrelevant input")
{
    int ok = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed);
        const auto x = random_x(rng, 20, 2);
        Eigen::VectorXd y(20);
        for (Eigen::Index i = 0; i < 20; ++i) y[i] = std::sin(5 * x(i, 0)) + x(i, 0) * x(i, 0);
        FitOptions opts;
        opts.seed = seed;
        const GpModel m = fit_gp(x, y, KernelFamily::Matern52, opts);
        ok += m.kernel.length_scales[0] < m.kernel.length_scales[1];
    }
    CHECK(ok >= 6);
}

TEST_CASE("kernel family names")
{
    CHECK(parse_kernel_family("Matern52") == KernelFamily::Matern52);
    CHECK(parse_kernel_family("MATERN32") == KernelFamily::Matern32);
    CHECK(parse_kernel_family("RBF") == KernelFamily::RBF);
    CHECK(to_string(KernelFamily::Matern52) == "matern52");
    CHECK_THROWS_AS(parse_kernel_family("linear"), ConfigError);
}
