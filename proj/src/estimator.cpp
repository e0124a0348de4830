#include "gridshield/estimator.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace gridshield::se {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDiagTol = 1e-12;
}  // namespace

WlsSolution wls_solve(const grid::GridCase& c, const Eigen::VectorXd& z) {
    if (z.size() != c.meas_dim())
        throw std::invalid_argument("measurement vector has wrong dimension");
    const Eigen::MatrixXd& h = c.jacobian();
    const auto r_inv = c.r_inv_diag().asDiagonal();

    WlsSolution s;
    s.x_hat = Eigen::VectorXd::Zero(c.state_dim());
    constexpr int kMaxIter = 25;
    constexpr double kTol = 1e-8;
    for (int it = 1; it <= kMaxIter; ++it) {
        const Eigen::VectorXd dz = z - c.measure(s.x_hat);
        const Eigen::VectorXd dx = c.gain_llt().solve(h.transpose() * (r_inv * dz));
        s.x_hat += dx;
        s.iterations = it;
        if (dx.lpNorm<Eigen::Infinity>() < kTol) {
            s.converged = true;
            break;
        }
    }
    return s;
}

Eigen::MatrixXd projection_from(const Eigen::MatrixXd& h,
                                const Eigen::VectorXd& r_inv_diag) {
    const Eigen::VectorXd sqrt_w = r_inv_diag.cwiseSqrt();
    const Eigen::MatrixXd hw = sqrt_w.asDiagonal() * h;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(hw);
    const Eigen::MatrixXd q1 =
        qr.householderQ() * Eigen::MatrixXd::Identity(h.rows(), h.cols());
    const Eigen::MatrixXd pw = q1 * q1.transpose();
    return sqrt_w.cwiseInverse().asDiagonal() * pw * sqrt_w.asDiagonal();
}

Eigen::MatrixXd projection_matrix(const grid::GridCase& c) {
    return projection_from(c.jacobian(), c.r_inv_diag());
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> decompose_error(const Eigen::MatrixXd& p,
                                                            const Eigen::VectorXd& e) {
    if (p.rows() != e.size())
        throw std::invalid_argument("projection matrix and error dimension mismatch");
    Eigen::VectorXd e_u = p * e;
    Eigen::VectorXd e_d = e - e_u;
    return {std::move(e_u), std::move(e_d)};
}

Eigen::VectorXd compute_ii_from_diag(const Eigen::VectorXd& p_diag) {
    Eigen::VectorXd ii(p_diag.size());
    for (Eigen::Index i = 0; i < p_diag.size(); ++i) {
        const double pii = std::min(1.0, std::max(0.0, p_diag(i)));
        if (pii <= kDiagTol)
            ii(i) = kInf;
        else if (pii >= 1.0 - kDiagTol)
            ii(i) = 0.0;
        else
            ii(i) = std::sqrt(1.0 - pii) / std::sqrt(pii);
    }
    return ii;
}

Eigen::VectorXd compute_ii(const Eigen::MatrixXd& p) {
    return compute_ii_from_diag(p.diagonal());
}

Eigen::VectorXd compute_cme(const Eigen::VectorXd& r, const Eigen::VectorXd& ii) {
    if (r.size() != ii.size())
        throw std::invalid_argument("residual and innovation index dimension mismatch");
    Eigen::VectorXd cme(r.size());
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        if (r(i) == 0.0)
            cme(i) = 0.0;
        else if (std::isinf(ii(i)))
            cme(i) = r(i);
        else if (ii(i) <= 0.0)
            cme(i) = kInf;  // gross error entirely hidden from the residual
        else
            cme(i) = r(i) * std::sqrt(1.0 + 1.0 / (ii(i) * ii(i)));
    }
    return cme;
}

double normal_quantile(double p) {
    if (p <= 0.0 || p >= 1.0) throw std::invalid_argument("p must be in (0,1)");
    // Acklam's rational approximation with the usual three regions.
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double dd[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double q, x;
    if (p < plow) {
        q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
    }
    return x;
}

double chi2_quantile(double p, int dof) {
    if (dof <= 0) throw std::invalid_argument("dof must be positive");
    const double z = normal_quantile(p);
    const double t = 2.0 / (9.0 * dof);
    const double u = 1.0 - t + z * std::sqrt(t);
    return dof * u * u * u;
}

Chi2Result chi2_detect(const Eigen::VectorXd& cme, const Eigen::VectorXd& sigmas,
                       int dof, double p) {
    if (cme.size() != sigmas.size())
        throw std::invalid_argument("cme and sigma dimension mismatch");
    Chi2Result out;
    for (Eigen::Index i = 0; i < cme.size(); ++i) {
        const double t = cme(i) / sigmas(i);
        out.j_cme += t * t;
    }
    out.threshold = chi2_quantile(p, dof);
    out.detected = out.j_cme > out.threshold;
    return out;
}

EstimationResult estimate(const grid::GridCase& c, const Eigen::VectorXd& z, double p) {
    EstimationResult res;
    const WlsSolution sol = wls_solve(c, z);
    res.x_hat = sol.x_hat;
    res.iterations = sol.iterations;
    res.residual = z - c.measure(sol.x_hat);

    const Eigen::MatrixXd proj = projection_matrix(c);
    res.projection_diag = proj.diagonal();
    res.innovation_index = compute_ii_from_diag(res.projection_diag);
    for (Eigen::Index i = 0; i < res.projection_diag.size(); ++i) {
        if (res.projection_diag(i) <= kDiagTol) res.fully_detectable.push_back(i);
        if (res.projection_diag(i) >= 1.0 - kDiagTol) res.undetectable.push_back(i);
    }
    res.cme = compute_cme(res.residual, res.innovation_index);
    const Chi2Result chi = chi2_detect(res.cme, c.sigmas(), c.meas_dim(), p);
    res.j_cme = chi.j_cme;
    res.chi2_threshold = chi.threshold;
    res.detected = chi.detected;
    return res;
}

}  // namespace gridshield::se
