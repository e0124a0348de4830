#pragma once

#include <Eigen/Dense>

#include <utility>
#include <vector>

#include "gridshield/grid.hpp"

namespace gridshield::se {

struct WlsSolution {
    Eigen::VectorXd x_hat;
    int iterations = 0;
    bool converged = false;
};

/// Weighted least squares state solve. The DC model is linear, so the Newton
/// loop converges on the second pass; the iteration scaffold and the
/// max-norm(dx) < 1e-8 criterion are kept so a nonlinear h can slot in.
WlsSolution wls_solve(const grid::GridCase& c, const Eigen::VectorXd& z);

/// Hat matrix P = H (H'R^-1H)^-1 H'R^-1. Idempotent; trace(P) = N.
Eigen::MatrixXd projection_matrix(const grid::GridCase& c);

/// Same projector from raw pieces. Computed as W^-1/2 Q Q' W^1/2 with Q the
/// thin orthonormal factor of W^1/2 H, which keeps idempotency at machine
/// precision even when the weights span many orders of magnitude.
Eigen::MatrixXd projection_from(const Eigen::MatrixXd& h,
                                const Eigen::VectorXd& r_inv_diag);

/// Splits a measurement error into the undetectable (range-space) part P e
/// and the detectable part (I-P) e. The Pythagorean identity between them
/// holds in the R^-1 inner product.
std::pair<Eigen::VectorXd, Eigen::VectorXd> decompose_error(const Eigen::MatrixXd& p,
                                                            const Eigen::VectorXd& e);

/// Innovation index per measurement: sqrt(1-P_ii)/sqrt(P_ii).
/// P_ii = 0 maps to +inf (fully detectable), P_ii = 1 maps to 0 (fully
/// undetectable); both are surfaced in EstimationResult metadata.
Eigen::VectorXd compute_ii(const Eigen::MatrixXd& p);
Eigen::VectorXd compute_ii_from_diag(const Eigen::VectorXd& p_diag);

/// Composed measurement error: r_i * sqrt(1 + 1/II_i^2).
/// II = +inf gives r_i back; II = 0 with a nonzero residual gives +inf.
Eigen::VectorXd compute_cme(const Eigen::VectorXd& r, const Eigen::VectorXd& ii);

struct Chi2Result {
    double j_cme = 0.0;
    double threshold = 0.0;
    bool detected = false;
};

/// Bad-data test: sum_i (CME_i/sigma_i)^2 against the chi-squared quantile at
/// probability p with d degrees of freedom.
Chi2Result chi2_detect(const Eigen::VectorXd& cme, const Eigen::VectorXd& sigmas,
                       int dof, double p = 0.95);

/// Chi-squared quantile via the Wilson-Hilferty cube approximation,
/// x ~ d (1 - 2/(9d) + z_p sqrt(2/(9d)))^3. Relative error is below 0.5% for
/// d >= 10 against table values (see tests), which is inside the tolerance of
/// a threshold whose operating point is a 5% tail.
double chi2_quantile(double p, int dof);

/// Inverse standard normal CDF (Acklam's rational approximation,
/// |relative error| < 1.2e-9).
double normal_quantile(double p);

struct EstimationResult {
    Eigen::VectorXd x_hat;
    Eigen::VectorXd residual;
    Eigen::VectorXd projection_diag;
    Eigen::VectorXd innovation_index;
    Eigen::VectorXd cme;
    double j_cme = 0.0;
    double chi2_threshold = 0.0;
    bool detected = false;
    int iterations = 0;
    std::vector<int> fully_detectable;  // rows with P_ii ~ 0
    std::vector<int> undetectable;      // rows with P_ii ~ 1
};

/// One-shot estimate + bad-data analysis for a measurement vector.
EstimationResult estimate(const grid::GridCase& c, const Eigen::VectorXd& z,
                          double p = 0.95);

}  // namespace gridshield::se
