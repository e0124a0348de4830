#pragma once

#include <Eigen/Dense>

#include <json.hpp>

#include <cstdint>
#include <deque>
#include <stdexcept>
#include <string>
#include <vector>

namespace gridshield::detect {

struct DetectorError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EnsembleConfig {
    double alpha = 8e-5;       // exponential weight for mean/covariance updates
    int beta = 90;             // sliding window length for the threshold
    double eta = 7.0;          // threshold multiplier (11 for FDI-style sets)
    int k_init = 1800;         // training prefix length
    double eps = 1e-8;         // diagonal loading before the initial inversion
    int recompute_period = 5000;  // exact inverse refresh, in accepted updates
    bool adapt = true;            // false freezes statistics and thresholds
    bool paper_literal_mean = false;  // study-only variant of the mean update
};

/// One local detector's feature slice: the columns of the dataset view that
/// belong to one bus.
struct Group {
    int bus = 0;
    std::vector<int> cols;
};

struct Detection {
    long index = -1;
    bool predicted = false;
    bool rejected = false;  // non-finite features; state untouched
    Eigen::VectorXd distances;
    Eigen::VectorXd thresholds;
    std::vector<int> triggering_buses;
    double max_ratio = 0.0;  // max over buses of delta/tau
};

/// Squared Mahalanobis distance (z-mu)' S^-1 (z-mu).
double mahalanobis(const Eigen::VectorXd& mean, const Eigen::MatrixXd& inv_cov,
                   const Eigen::VectorXd& z);

struct WoodburyResult {
    Eigen::VectorXd mean;
    Eigen::MatrixXd inv_cov;
    bool degenerate = false;  // caller should recompute the inverse exactly
};

/// Exponentially weighted update of (mean, inverse covariance) for an accepted
/// sample. The inverse tracks (1-a) Sigma + a (z-mu)(z-mu)' through the
/// Sherman-Morrison rank-1 identity; the mean moves to (1-a) mu + a z. With
/// paper_literal_mean the mean update is the typeset variant
/// (1-a) mu + a (z-mu), kept for study.
WoodburyResult woodbury_update(const Eigen::VectorXd& mean,
                               const Eigen::MatrixXd& inv_cov,
                               const Eigen::VectorXd& z, double alpha,
                               bool paper_literal_mean = false);

/// Window-based threshold: mean(B) + eta * population-std(B). Falls back to
/// `fallback` when the window holds fewer than two values.
double adaptive_threshold(const std::deque<double>& window, double eta,
                          double fallback);

struct LocalDetectorState {
    int bus = 0;
    std::vector<int> cols;
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;      // tracked alongside the inverse for exact refreshes
    Eigen::MatrixXd inv_cov;
    double tau = 0.0;
    double fit_tau = 0.0;
    std::deque<double> window;
    long accepted = 0;
};

/// Ensemble of per-bus detectors with adaptive statistics and thresholds.
///
/// fit() estimates each local mean/covariance from the normal rows of the
/// training slice, seeds the threshold from the training distance
/// distribution and fills the window with the last beta training distances.
/// step() classifies one sample; only samples classified normal mutate any
/// state. A single all-column group with adapt=false degenerates to the
/// plain CorrDet detector.
class EnsembleDetector {
public:
    EnsembleDetector(std::vector<Group> groups, EnsembleConfig cfg);

    /// `features`: training rows (one per sample), `labels`: 0 normal / 1
    /// attacked. Throws on singular local covariance (names the bus) or on
    /// fewer normal rows than max(beta, group dim + 1).
    void fit(const Eigen::MatrixXd& features, const std::vector<int>& labels);

    Detection step(const Eigen::VectorXd& row, long index);

    bool fitted() const { return fitted_; }
    const std::vector<LocalDetectorState>& locals() const { return locals_; }
    const EnsembleConfig& config() const { return cfg_; }
    long rejected_count() const { return rejected_; }

    nlohmann::json snapshot() const;
    static EnsembleDetector restore(const nlohmann::json& j);

    /// Hash of the full mutable state; used to verify the no-learning-from-
    /// anomalies contract.
    std::uint64_t state_hash() const;

private:
    void exact_recompute(LocalDetectorState& s);

    std::vector<Group> groups_;
    EnsembleConfig cfg_;
    std::vector<LocalDetectorState> locals_;
    bool fitted_ = false;
    long rejected_ = 0;
};

/// Plain CorrDet over all columns: fixed statistics, fixed threshold.
std::vector<Detection> run_global_corrdet(const Eigen::MatrixXd& train,
                                          const std::vector<int>& train_labels,
                                          const Eigen::MatrixXd& test,
                                          const EnsembleConfig& cfg,
                                          long test_base_index = 0);

}  // namespace gridshield::detect
