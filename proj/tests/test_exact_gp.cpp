#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rffhsmm/bayes_linreg.hpp"
#include "rffhsmm/exact_gp.hpp"

#include <cmath>
#include <random>

using namespace rffhsmm;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

KernelFn rbf(double l = 1.0) {
    return [l](double a, double b) { return rbf_kernel(a, b, l); };
}

}  // namespace

TEST_CASE("empty data gives the prior") {
    GpClassData gp(2, 10.0, rbf());
    gp.refresh();
    const auto pred = gp.predictive(4.0);
    CHECK(pred.mean.cwiseAbs().maxCoeff() == 0.0);
    CHECK(pred.var == doctest::Approx(1.1));
    const VectorXd x = VectorXd::Constant(2, 0.3);
    const double prior = 2 * (-0.5 * std::log(2 * M_PI * 1.1) - 0.5 * 0.09 / 1.1);
    CHECK(gp.emission_logpdf(4.0, x) == doctest::Approx(prior));
}

TEST_CASE("one observation shrinks toward zero") {
    for (double beta : {1.0, 10.0, 100.0}) {
        GpClassData gp(1, beta, rbf());
        gp.add_point(1.0, VectorXd::Ones(1));
        gp.refresh();
        const auto pred = gp.predictive(1.0);
        CHECK(pred.mean(0) == doctest::Approx(1.0 / (1.0 + 1.0 / beta)));
        // 1 + 1/beta - 1/(1 + 1/beta)
        CHECK(pred.var == doctest::Approx(1.0 + 1.0 / beta - 1.0 / (1.0 + 1.0 / beta)));
    }
}

TEST_CASE("gram structure and inverse") {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> len(1, 30);
    std::normal_distribution<double> n(0.0, 1.0);
    const double beta = 10.0;
    GpClassData gp(2, beta, rbf());
    while (gp.n_points() < 480) {
        MatrixXd seg(2, len(rng));
        for (int i = 0; i < seg.size(); ++i) seg.data()[i] = n(rng);
        gp.add_segment(seg);
    }
    gp.refresh();
    const MatrixXd K = gp.gram();
    CHECK((K - K.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((K.diagonal().array() - (1.0 + 1.0 / beta)).abs().maxCoeff() < 1e-15);
    const MatrixXd I = K * gp.gram_inverse();
    CHECK((I - MatrixXd::Identity(K.rows(), K.cols())).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("cache invalidation") {
    GpClassData gp(1, 10.0, rbf());
    gp.add_segment(MatrixXd::Ones(1, 3));
    CHECK(gp.dirty());
    CHECK_THROWS_AS(gp.predictive(1.0), std::logic_error);
    gp.refresh();
    CHECK_FALSE(gp.dirty());
    gp.add_segment(MatrixXd::Zero(1, 2));
    CHECK(gp.dirty());
    gp.remove_segment(MatrixXd::Ones(1, 3));
    CHECK(gp.n_points() == 2);
    CHECK_THROWS_AS(gp.remove_segment(MatrixXd::Ones(1, 3)), std::logic_error);
}

TEST_CASE("matches feature-space regression under the feature kernel") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> ut(1.0, 30.0);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
        const auto bank = sample_feature_bank(20, 1.0, 100 + trial);
        const RegressionPrior prior{10.0, trial % 2 ? 2.5 : 1.0};
        const double psi = prior.psi;
        GpClassData gp(3, prior.beta, [&bank, psi](double a, double b) { return bank.kernel_approx(a, b) / psi; });
        ClassModel blr(0, 3, 20, prior);
        for (int p = 0; p < 10 + 10 * trial; ++p) {
            const double t = ut(rng);
            VectorXd x(3);
            for (int d = 0; d < 3; ++d) x(d) = n(rng);
            gp.add_point(t, x);
            blr.add_point(bank, t, x);
        }
        gp.refresh();
        blr.refresh();
        for (int tau = 1; tau <= 30; ++tau) {
            const auto pred = gp.predictive(tau);
            const VectorXd p = bank.phi(tau);
            for (int d = 0; d < 3; ++d) {
                CHECK(pred.mean(d) == doctest::Approx(blr.predictive_mean(p, d)).epsilon(1e-6));
                CHECK(pred.var == doctest::Approx(blr.predictive_var(p, d)).epsilon(1e-6));
            }
            VectorXd x(3);
            for (int d = 0; d < 3; ++d) x(d) = n(rng);
            CHECK(gp.emission_logpdf(tau, x) ==
                  doctest::Approx(std::as_const(blr).predictive_logpdf(bank, tau, x)).epsilon(1e-6));
        }
    }
}

TEST_CASE("sine curve: exact GP vs RFF at M = 2000") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> ut(1.0, 30.0);
    const double l = 3.0;
    const auto bank = sample_feature_bank(2000, l, 4);
    GpClassData gp(1, 10.0, rbf(l));
    ClassModel blr(0, 1, 2000, {10.0, 1.0});
    for (int p = 0; p < 50; ++p) {
        const double t = ut(rng);
        const VectorXd x = VectorXd::Constant(1, std::sin(2 * M_PI * t / 20.0));
        gp.add_point(t, x);
        blr.add_point(bank, t, x);
    }
    gp.refresh();
    blr.refresh();
    for (int tau = 1; tau <= 30; ++tau)
        CHECK(std::abs(gp.predictive(tau).mean(0) - blr.predictive_mean(bank.phi(tau), 0)) < 0.05);
}

TEST_CASE("logpdf peaks at the predictive mean") {
    GpClassData gp(2, 10.0, rbf());
    MatrixXd seg(2, 10);
    for (int j = 0; j < 10; ++j) seg.col(j) << std::sin(j), std::cos(j);
    gp.add_segment(seg);
    gp.refresh();
    const auto pred = gp.predictive(5.5);
    const double best = gp.emission_logpdf(5.5, pred.mean);
    for (double dx : {-0.2, 0.01}) {
        VectorXd x = pred.mean;
        x(0) += dx;
        CHECK(gp.emission_logpdf(5.5, x) < best);
    }
    const auto table = gp.predictive_table(12);
    CHECK(table.mean(1, 4) == doctest::Approx(gp.predictive(5.0).mean(1)));
    CHECK(table.var(0, 11) == doctest::Approx(gp.predictive(12.0).var));
    CHECK(table.var.minCoeff() > 0.1);
}
