#include <doctest.h>

#include <cmath>
#include <limits>

#include "gridshield/estimator.hpp"
#include "gridshield/grid.hpp"
#include "gridshield/rng.hpp"
#include "oracles.hpp"

using namespace gridshield;

namespace {

const char* kCase3 = R"({
  "id": "case3",
  "buses": [
    {"id": 1, "type": "slack", "base_load": 0.0},
    {"id": 2, "type": "load", "base_load": 0.5},
    {"id": 3, "type": "load", "base_load": 0.3}
  ],
  "branches": [
    {"from": 1, "to": 2, "x": 0.1},
    {"from": 2, "to": 3, "x": 0.1}
  ],
  "measurements": [
    {"kind": "flow", "loc": [1, 2], "sigma": 0.01},
    {"kind": "flow", "loc": [2, 3], "sigma": 0.01},
    {"kind": "injection", "loc": 2, "sigma": 0.01},
    {"kind": "injection", "loc": 3, "sigma": 0.01}
  ]
})";

std::string data_path(const std::string& name) {
    return std::string(GRIDSHIELD_DATA_DIR) + "/" + name;
}

constexpr double kInf = std::numeric_limits<double>::infinity();

double weighted_dot(const grid::GridCase& c, const Eigen::VectorXd& a,
                    const Eigen::VectorXd& b) {
    return a.dot(c.r_inv_diag().asDiagonal() * b);
}

}  // namespace

TEST_CASE("wls recovers exact states and is linear") {
    const grid::GridCase c = grid::parse_case(kCase3, "case3");
    Eigen::VectorXd x_true(2);
    x_true << -0.08, -0.11;
    const Eigen::VectorXd z = c.measure(x_true);
    const se::WlsSolution s = se::wls_solve(c, z);
    CHECK(s.converged);
    CHECK((s.x_hat - x_true).lpNorm<Eigen::Infinity>() < 1e-10);

    const se::WlsSolution zero = se::wls_solve(c, Eigen::VectorXd::Zero(4));
    CHECK(zero.x_hat.lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("wls matches a hand-rolled normal-equations oracle under noise") {
    const grid::GridCase c = grid::parse_case(kCase3, "case3");
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::VectorXd x(2);
        x << rng.gaussian(0.0, 0.1), rng.gaussian(0.0, 0.1);
        Eigen::VectorXd z = c.measure(x);
        for (int i = 0; i < 4; ++i) z(i) += rng.gaussian(0.0, 1e-4);

        oracle::Mat h = oracle::make_mat(4, 2);
        oracle::Vec w(4), rhs(4);
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 2; ++j) h[i][j] = c.jacobian()(i, j);
            w[i] = c.r_inv_diag()(i);
            rhs[i] = z(i) - c.baseline()(i);
        }
        const oracle::Vec ref = oracle::wls_normal_equations(h, w, rhs);
        const se::WlsSolution s = se::wls_solve(c, z);
        CHECK(s.x_hat(0) == doctest::Approx(ref[0]).epsilon(1e-9));
        CHECK(s.x_hat(1) == doctest::Approx(ref[1]).epsilon(1e-9));
        CHECK((s.x_hat - x).norm() < 1.0);  // cond-bounded perturbation
    }
}

TEST_CASE("projection matrix is an idempotent hat matrix with trace N") {
    for (const char* name : {"case3", "ieee14"}) {
        const grid::GridCase c = std::string(name) == "case3"
                                     ? grid::parse_case(kCase3, "case3")
                                     : grid::load_case(data_path("ieee14.json"));
        const Eigen::MatrixXd p = se::projection_matrix(c);
        CHECK(((p * p) - p).cwiseAbs().maxCoeff() <= 1e-8);
        CHECK(p.trace() == doctest::Approx(c.state_dim()).epsilon(1e-9));
    }
}

TEST_CASE("square full-rank system projects onto everything") {
    Eigen::MatrixXd h(2, 2);
    h << 3.0, 1.0, -1.0, 2.0;
    Eigen::VectorXd w(2);
    w << 4.0, 9.0;
    const Eigen::MatrixXd p = se::projection_from(h, w);
    CHECK((p - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("error decomposition splits range and residual spaces") {
    const grid::GridCase c = grid::parse_case(kCase3, "case3");
    const Eigen::MatrixXd p = se::projection_matrix(c);
    Rng rng(5);

    // range-space error: invisible to the residual
    Eigen::VectorXd coeffs(2);
    coeffs << 0.3, -0.7;
    const Eigen::VectorXd in_range = c.jacobian() * coeffs;
    auto [u1, d1] = se::decompose_error(p, in_range);
    CHECK(d1.lpNorm<Eigen::Infinity>() < 1e-10);

    // R^-1-orthogonal complement: fully detectable
    Eigen::VectorXd v(4);
    v << rng.gaussian(), rng.gaussian(), rng.gaussian(), rng.gaussian();
    const Eigen::VectorXd perp = v - p * v;
    auto [u2, d2] = se::decompose_error(p, perp);
    CHECK(u2.lpNorm<Eigen::Infinity>() < 1e-10);

    // Pythagoras in the R^-1 inner product
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::VectorXd e(4);
        for (int i = 0; i < 4; ++i) e(i) = rng.gaussian();
        auto [eu, ed] = se::decompose_error(p, e);
        CHECK((eu + ed - e).lpNorm<Eigen::Infinity>() < 1e-12);
        const double lhs = weighted_dot(c, e, e);
        const double rhs = weighted_dot(c, eu, eu) + weighted_dot(c, ed, ed);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-8));
    }
}

TEST_CASE("innovation index values and sentinels") {
    Eigen::VectorXd diag(4);
    diag << 0.5, 0.8, 1.0, 0.0;
    const Eigen::VectorXd ii = se::compute_ii_from_diag(diag);
    CHECK(ii(0) == doctest::Approx(1.0));
    CHECK(ii(1) == doctest::Approx(0.5));  // sqrt(0.2/0.8)
    CHECK(ii(2) == 0.0);
    CHECK(std::isinf(ii(3)));
}

TEST_CASE("composed measurement error from residual and innovation index") {
    Eigen::VectorXd r(4), ii(4);
    r << 2.0, 1.5, 0.0, 0.3;
    ii << 1.0, kInf, 0.5, 0.0;
    const Eigen::VectorXd cme = se::compute_cme(r, ii);
    CHECK(cme(0) == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-12));
    CHECK(cme(1) == doctest::Approx(1.5));   // fully detectable limit
    CHECK(cme(2) == 0.0);                    // zero residual, any finite II
    CHECK(std::isinf(cme(3)));               // hidden gross error
}

TEST_CASE("chi-squared quantile tracks table values within half a percent") {
    for (const auto& row : oracle::chi2_table_95()) {
        const double q = se::chi2_quantile(0.95, row.dof);
        CHECK(std::abs(q - row.q95) / row.q95 < 0.005);
    }
    CHECK(se::normal_quantile(0.975) == doctest::Approx(1.959964).epsilon(1e-5));

    Eigen::VectorXd cme = Eigen::VectorXd::Zero(10);
    Eigen::VectorXd sig = Eigen::VectorXd::Ones(10);
    const se::Chi2Result r = se::chi2_detect(cme, sig, 10, 0.95);
    CHECK(r.j_cme == 0.0);
    CHECK_FALSE(r.detected);
    CHECK(r.threshold == doctest::Approx(18.307).epsilon(0.005));
}

TEST_CASE("false positive rate at p=0.95 stays below 8% on matched noise") {
    const grid::GridCase c = grid::parse_case(kCase3, "case3");
    Rng rng(404);
    int detected = 0;
    const int n = 1000;
    for (int k = 0; k < n; ++k) {
        Eigen::VectorXd z = c.nominal_z();
        for (int i = 0; i < 4; ++i) z(i) += c.sigmas()(i) * rng.gaussian();
        if (se::estimate(c, z).detected) ++detected;
    }
    CHECK(detected <= 0.08 * n);
}

TEST_CASE("wls orthogonality holds on noisy 14-bus samples") {
    const grid::GridCase c = grid::load_case(data_path("ieee14.json"));
    Rng rng(17);
    for (int k = 0; k < 100; ++k) {
        Eigen::VectorXd z = c.nominal_z();
        for (int i = 0; i < c.meas_dim(); ++i) z(i) += c.sigmas()(i) * rng.gaussian();
        const se::WlsSolution s = se::wls_solve(c, z);
        const Eigen::VectorXd dz_hat = c.jacobian() * s.x_hat;
        const Eigen::VectorXd r = (z - c.baseline()) - dz_hat;
        const double cosine =
            std::abs(weighted_dot(c, dz_hat, r)) /
            (std::sqrt(weighted_dot(c, dz_hat, dz_hat)) * std::sqrt(weighted_dot(c, r, r)));
        CHECK(cosine <= 1e-8);
    }
}

TEST_CASE("range-space attacks are invisible to the chi-squared test") {
    const grid::GridCase c = grid::load_case(data_path("ieee14.json"));
    Rng rng(23);
    for (int trial = 0; trial < 25; ++trial) {
        Eigen::VectorXd z = c.nominal_z();
        for (int i = 0; i < c.meas_dim(); ++i) z(i) += c.sigmas()(i) * rng.gaussian();
        const double j_before = se::estimate(c, z).j_cme;
        Eigen::VectorXd coeff(c.state_dim());
        for (int i = 0; i < c.state_dim(); ++i) coeff(i) = rng.gaussian(0.0, 0.05);
        const Eigen::VectorXd attacked = z + c.jacobian() * coeff;
        const double j_after = se::estimate(c, attacked).j_cme;
        CHECK(std::abs(j_after - j_before) / j_before <= 1e-6);
    }
}

TEST_CASE("low innovation index measurements evade detection more often") {
    const grid::GridCase c = grid::load_case(data_path("ieee14.json"));
    const Eigen::VectorXd ii = se::compute_ii(se::projection_matrix(c));
    const int d = c.meas_dim();
    std::vector<int> order(d);
    for (int i = 0; i < d; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) { return ii(a) < ii(b); });
    const int decile = d / 10;

    // equal absolute magnitude on every trial
    const double mag = 8.0 * c.sigmas().mean();
    Rng rng(31);
    auto rate_for = [&](const std::vector<int>& rows) {
        int det = 0;
        const int trials = 200;
        for (int t = 0; t < trials; ++t) {
            Eigen::VectorXd z = c.nominal_z();
            for (int i = 0; i < d; ++i) z(i) += c.sigmas()(i) * rng.gaussian();
            z(rows[t % rows.size()]) += mag;
            if (se::estimate(c, z).detected) ++det;
        }
        return static_cast<double>(det) / trials;
    };
    const std::vector<int> low(order.begin(), order.begin() + decile);
    const std::vector<int> high(order.end() - decile, order.end());
    CHECK(rate_for(low) < rate_for(high));
}
