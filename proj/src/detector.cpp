#include "gridshield/detector.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>

#include "gridshield/rng.hpp"

namespace gridshield::detect {

using nlohmann::json;

double mahalanobis(const Eigen::VectorXd& mean, const Eigen::MatrixXd& inv_cov,
                   const Eigen::VectorXd& z) {
    const Eigen::VectorXd w = z - mean;
    return w.dot(inv_cov * w);
}

WoodburyResult woodbury_update(const Eigen::VectorXd& mean,
                               const Eigen::MatrixXd& inv_cov,
                               const Eigen::VectorXd& z, double alpha,
                               bool paper_literal_mean) {
    if (alpha <= 0.0 || alpha >= 1.0)
        throw DetectorError("alpha must be in (0, 1)");
    WoodburyResult out;
    const Eigen::VectorXd w = z - mean;
    out.mean = paper_literal_mean ? ((1.0 - alpha) * mean + alpha * w).eval()
                                  : ((1.0 - alpha) * mean + alpha * z).eval();

    // ((1-a) S + a w w')^-1 by Sherman-Morrison on A = (1-a) S.
    const Eigen::VectorXd sw = inv_cov * w;
    const double denom = (1.0 - alpha) / alpha + w.dot(sw);
    if (!(denom > 0.0) || !std::isfinite(denom)) {
        out.inv_cov = inv_cov;
        out.degenerate = true;
        return out;
    }
    out.inv_cov = (inv_cov - (sw * sw.transpose()) / denom) / (1.0 - alpha);
    // Symmetry is enforced after every rank-1 step to bound drift.
    out.inv_cov = ((out.inv_cov + out.inv_cov.transpose()) * 0.5).eval();
    return out;
}

double adaptive_threshold(const std::deque<double>& window, double eta,
                          double fallback) {
    const std::size_t n = window.size();
    if (n < 2) return fallback;
    double mean = 0.0;
    for (double v : window) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : window) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    return mean + eta * std::sqrt(var);
}

EnsembleDetector::EnsembleDetector(std::vector<Group> groups, EnsembleConfig cfg)
    : groups_(std::move(groups)), cfg_(cfg) {
    if (groups_.empty()) throw DetectorError("ensemble needs at least one group");
    if (cfg_.beta < 2) throw DetectorError("beta must be >= 2");
    if (cfg_.alpha <= 0.0 || cfg_.alpha >= 1.0)
        throw DetectorError("alpha must be in (0, 1)");
    if (cfg_.eta < 0.0) throw DetectorError("eta must be non-negative");
}

void EnsembleDetector::fit(const Eigen::MatrixXd& features,
                           const std::vector<int>& labels) {
    if (static_cast<long>(labels.size()) != features.rows())
        throw DetectorError("label count does not match training rows");

    std::vector<long> normal_rows;
    for (long i = 0; i < features.rows(); ++i)
        if (labels[i] == 0) normal_rows.push_back(i);

    locals_.clear();
    locals_.reserve(groups_.size());
    for (const Group& g : groups_) {
        const int dim = static_cast<int>(g.cols.size());
        const long n = static_cast<long>(normal_rows.size());
        const long need = std::max<long>(cfg_.beta, dim + 1);
        if (n < need)
            throw DetectorError("insufficient normal training samples for bus " +
                                std::to_string(g.bus) + ": have " + std::to_string(n) +
                                ", need " + std::to_string(need));

        Eigen::MatrixXd rows(n, dim);
        for (long i = 0; i < n; ++i)
            for (int j = 0; j < dim; ++j) rows(i, j) = features(normal_rows[i], g.cols[j]);

        LocalDetectorState s;
        s.bus = g.bus;
        s.cols = g.cols;
        s.mean = rows.colwise().mean().transpose();
        const Eigen::MatrixXd centered = rows.rowwise() - s.mean.transpose();
        s.cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
        s.cov.diagonal().array() += cfg_.eps;

        Eigen::LLT<Eigen::MatrixXd> llt(s.cov);
        if (llt.info() != Eigen::Success)
            throw DetectorError("singular covariance for bus " + std::to_string(g.bus));
        s.inv_cov = llt.solve(Eigen::MatrixXd::Identity(dim, dim));
        s.inv_cov = ((s.inv_cov + s.inv_cov.transpose()) * 0.5).eval();

        // Training distances seed both the threshold and the window.
        Eigen::VectorXd dist(n);
        for (long i = 0; i < n; ++i)
            dist(i) = mahalanobis(s.mean, s.inv_cov, rows.row(i).transpose());
        const double m = dist.mean();
        const double sd = std::sqrt((dist.array() - m).square().sum() / n);
        s.fit_tau = m + cfg_.eta * sd;
        s.tau = s.fit_tau;
        for (long i = std::max<long>(0, n - cfg_.beta); i < n; ++i)
            s.window.push_back(dist(i));

        locals_.push_back(std::move(s));
    }
    fitted_ = true;
    rejected_ = 0;
}

Detection EnsembleDetector::step(const Eigen::VectorXd& row, long index) {
    if (!fitted_) throw DetectorError("step() before fit()");
    const std::size_t m = locals_.size();
    Detection det;
    det.index = index;
    det.distances.resize(m);
    det.thresholds.resize(m);

    for (const LocalDetectorState& s : locals_)
        for (int c : s.cols)
            if (!std::isfinite(row(c))) {
                ++rejected_;
                det.rejected = true;
                det.predicted = true;
                det.distances.setZero();
                for (std::size_t i = 0; i < m; ++i) det.thresholds(i) = locals_[i].tau;
                return det;
            }

    for (std::size_t i = 0; i < m; ++i) {
        LocalDetectorState& s = locals_[i];
        Eigen::VectorXd z(s.cols.size());
        for (std::size_t j = 0; j < s.cols.size(); ++j) z(j) = row(s.cols[j]);
        const double delta = mahalanobis(s.mean, s.inv_cov, z);
        det.distances(i) = delta;
        det.thresholds(i) = s.tau;
        if (s.tau > 0.0) det.max_ratio = std::max(det.max_ratio, delta / s.tau);
        if (delta > s.tau) det.triggering_buses.push_back(s.bus);
    }
    det.predicted = !det.triggering_buses.empty();
    if (det.predicted || !cfg_.adapt) return det;

    // Accepted as normal: update statistics, window and threshold.
    for (std::size_t i = 0; i < m; ++i) {
        LocalDetectorState& s = locals_[i];
        Eigen::VectorXd z(s.cols.size());
        for (std::size_t j = 0; j < s.cols.size(); ++j) z(j) = row(s.cols[j]);
        const Eigen::VectorXd w = z - s.mean;

        WoodburyResult up =
            woodbury_update(s.mean, s.inv_cov, z, cfg_.alpha, cfg_.paper_literal_mean);
        s.cov = (1.0 - cfg_.alpha) * s.cov + cfg_.alpha * (w * w.transpose());
        s.mean = std::move(up.mean);
        s.inv_cov = std::move(up.inv_cov);
        ++s.accepted;
        if (up.degenerate || s.accepted % cfg_.recompute_period == 0) exact_recompute(s);

        s.window.push_back(det.distances(i));
        while (static_cast<int>(s.window.size()) > cfg_.beta) s.window.pop_front();
        s.tau = adaptive_threshold(s.window, cfg_.eta, s.fit_tau);
    }
    return det;
}

void EnsembleDetector::exact_recompute(LocalDetectorState& s) {
    const int dim = static_cast<int>(s.cols.size());
    s.cov = ((s.cov + s.cov.transpose()) * 0.5).eval();
    Eigen::LLT<Eigen::MatrixXd> llt(s.cov);
    if (llt.info() != Eigen::Success) {
        s.cov.diagonal().array() += cfg_.eps;
        llt.compute(s.cov);
        if (llt.info() != Eigen::Success)
            throw DetectorError("covariance lost positive definiteness for bus " +
                                std::to_string(s.bus));
    }
    s.inv_cov = llt.solve(Eigen::MatrixXd::Identity(dim, dim));
    s.inv_cov = ((s.inv_cov + s.inv_cov.transpose()) * 0.5).eval();
}

namespace {

json vec_to_json(const Eigen::VectorXd& v) {
    return json(std::vector<double>(v.data(), v.data() + v.size()));
}

json mat_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::VectorXd vec_from_json(const json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
}

Eigen::MatrixXd mat_from_json(const json& j) {
    const Eigen::Index rows = j.size();
    const Eigen::Index cols = rows > 0 ? j.at(0).size() : 0;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = j.at(i).at(k).get<double>();
    return m;
}

}  // namespace

json EnsembleDetector::snapshot() const {
    json j;
    j["format"] = "gridshield-detector";
    j["version"] = 1;
    j["config"] = {{"alpha", cfg_.alpha},
                   {"beta", cfg_.beta},
                   {"eta", cfg_.eta},
                   {"k_init", cfg_.k_init},
                   {"eps", cfg_.eps},
                   {"recompute_period", cfg_.recompute_period},
                   {"adapt", cfg_.adapt},
                   {"paper_literal_mean", cfg_.paper_literal_mean}};
    j["fitted"] = fitted_;
    j["rejected"] = rejected_;
    json locals = json::array();
    for (const LocalDetectorState& s : locals_) {
        json l;
        l["bus"] = s.bus;
        l["cols"] = s.cols;
        l["mean"] = vec_to_json(s.mean);
        l["cov"] = mat_to_json(s.cov);
        l["inv_cov"] = mat_to_json(s.inv_cov);
        l["tau"] = s.tau;
        l["fit_tau"] = s.fit_tau;
        l["window"] = std::vector<double>(s.window.begin(), s.window.end());
        l["accepted"] = s.accepted;
        locals.push_back(std::move(l));
    }
    j["locals"] = std::move(locals);
    return j;
}

EnsembleDetector EnsembleDetector::restore(const json& j) {
    if (j.value("format", "") != "gridshield-detector" || j.value("version", 0) != 1)
        throw DetectorError("unrecognized detector snapshot format");
    EnsembleConfig cfg;
    const json& c = j.at("config");
    cfg.alpha = c.at("alpha").get<double>();
    cfg.beta = c.at("beta").get<int>();
    cfg.eta = c.at("eta").get<double>();
    cfg.k_init = c.at("k_init").get<int>();
    cfg.eps = c.at("eps").get<double>();
    cfg.recompute_period = c.at("recompute_period").get<int>();
    cfg.adapt = c.at("adapt").get<bool>();
    cfg.paper_literal_mean = c.at("paper_literal_mean").get<bool>();

    std::vector<Group> groups;
    for (const json& l : j.at("locals"))
        groups.push_back({l.at("bus").get<int>(), l.at("cols").get<std::vector<int>>()});

    EnsembleDetector det(groups, cfg);
    det.fitted_ = j.at("fitted").get<bool>();
    det.rejected_ = j.at("rejected").get<long>();
    for (const json& l : j.at("locals")) {
        LocalDetectorState s;
        s.bus = l.at("bus").get<int>();
        s.cols = l.at("cols").get<std::vector<int>>();
        s.mean = vec_from_json(l.at("mean"));
        s.cov = mat_from_json(l.at("cov"));
        s.inv_cov = mat_from_json(l.at("inv_cov"));
        s.tau = l.at("tau").get<double>();
        s.fit_tau = l.at("fit_tau").get<double>();
        for (double v : l.at("window").get<std::vector<double>>()) s.window.push_back(v);
        s.accepted = l.at("accepted").get<long>();
        det.locals_.push_back(std::move(s));
    }
    return det;
}

std::uint64_t EnsembleDetector::state_hash() const {
    const std::string dump = snapshot().dump();
    return fnv1a64(dump);
}

std::vector<Detection> run_global_corrdet(const Eigen::MatrixXd& train,
                                          const std::vector<int>& train_labels,
                                          const Eigen::MatrixXd& test,
                                          const EnsembleConfig& cfg,
                                          long test_base_index) {
    Group all;
    all.bus = 0;
    all.cols.resize(train.cols());
    for (long j = 0; j < train.cols(); ++j) all.cols[j] = static_cast<int>(j);
    EnsembleConfig fixed = cfg;
    fixed.adapt = false;
    EnsembleDetector det({all}, fixed);
    det.fit(train, train_labels);
    std::vector<Detection> out;
    out.reserve(test.rows());
    for (long i = 0; i < test.rows(); ++i)
        out.push_back(det.step(test.row(i).transpose(), test_base_index + i));
    return out;
}

}  // namespace gridshield::detect
