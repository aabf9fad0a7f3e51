#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "opinion_audit/featurize.hpp"
#include "opinion_audit/metrics.hpp"

namespace opinion_audit {

struct Example {
    FeatureVector x;
    std::size_t label = 0;  // index into the label set
};

struct TrainConfig {
    double l2_lambda = 1e-4;
    double learning_rate = 0.1;
    std::size_t max_epochs = 100;
    double tolerance = 1e-6;  // relative change of the epoch objective
    std::uint64_t seed = 0;
    std::size_t batch_size = 32;

    void validate() const;
};

/// Multinomial logistic regression; one weight row and one bias per class.
struct LRModel {
    std::vector<std::string> label_set;
    std::size_t width = 0;
    std::vector<double> weights;  // row-major, label_set.size() x width
    std::vector<double> bias;

    LRModel() = default;
    LRModel(std::vector<std::string> labels, std::size_t feature_width);

    std::size_t n_classes() const noexcept { return label_set.size(); }
    double& weight(std::size_t cls, std::size_t feature) { return weights[cls * width + feature]; }
    double weight(std::size_t cls, std::size_t feature) const { return weights[cls * width + feature]; }
};

struct TrainTrace {
    std::vector<double> epoch_objective;  // accepted epochs only, starting with the initial objective
    std::size_t epochs_run = 0;
    std::size_t rejected_epochs = 0;
    double final_learning_rate = 0.0;
    bool converged = false;
};

/// Minimizes mean negative log-likelihood + (l2_lambda / 2) * ||W||^2 (biases unregularized) by
/// seeded mini-batch gradient descent. An epoch that would raise the objective is rolled back
/// and the step size halved, so the accepted objective sequence never increases.
/// Throws TrainingError if a class has no example or the objective becomes non-finite.
LRModel train(std::span<const Example> examples, std::vector<std::string> label_set, std::size_t width,
              const TrainConfig& config, TrainTrace* trace = nullptr);

struct Prediction {
    std::size_t label = 0;
    std::vector<double> probabilities;
};

/// Softmax over class scores (the sigmoid of the score difference for two classes).
/// Ties go to the earliest label. Throws std::invalid_argument on width mismatch.
Prediction predict(const LRModel& model, const FeatureVector& x);

/// The training objective at the model's current parameters.
double objective(const LRModel& model, std::span<const Example> examples, double l2_lambda);

/// Analytic gradient of objective(); layout matches model.weights and model.bias.
void objective_gradient(const LRModel& model, std::span<const Example> examples, double l2_lambda,
                        std::vector<double>& grad_weights, std::vector<double>& grad_bias);

/// Largest relative error between the analytic gradient and central finite differences.
/// Checks every parameter when the model is small, otherwise biases plus the weights of
/// features that occur in `examples`.
double grad_check(const LRModel& model, std::span<const Example> examples, double l2_lambda, double epsilon = 1e-5);

struct FoldPlan {
    std::size_t k = 0;
    std::vector<std::vector<std::size_t>> folds;

    /// Throws std::logic_error unless folds are disjoint, cover [0, n) and differ in size by <= 1.
    void check(std::size_t n) const;
};

/// Seeded shuffle of [0, n) then a contiguous split; the first n % k folds get one extra index.
/// Throws UsageError when k == 0 or n < k.
FoldPlan make_folds(std::size_t n, std::size_t k, std::uint64_t seed);

struct CrossValidation {
    FoldPlan plan;  // over groups when groups were given, else over examples
    std::vector<double> fold_scores;
    double mean = 0.0;
};

/// Trains on k-1 folds and scores the held-out fold, for every fold. When `groups` is non-empty
/// (one id per example) folds are drawn over distinct group ids, so a group never straddles
/// train and test. Folds train concurrently; results do not depend on scheduling.
CrossValidation cross_validate(std::span<const Example> examples, const std::vector<std::string>& label_set,
                               std::size_t width, const TrainConfig& config, std::size_t k, Metric metric,
                               std::span<const std::size_t> groups = {});

struct TuningResult {
    struct Point {
        double l2_lambda;
        std::vector<double> fold_scores;
        double mean;
    };
    std::vector<Point> grid;
    double best_lambda = 0.0;
};

/// Grid search over l2_lambda with a shared fold plan; the best mean wins, ties go to the
/// earlier grid entry.
TuningResult tune_l2(std::span<const Example> examples, const std::vector<std::string>& label_set, std::size_t width,
                     const TrainConfig& config, std::span<const double> lambda_grid, std::size_t k, Metric metric,
                     std::span<const std::size_t> groups = {});

/// Versioned JSON record (label set, spec hash, sparse weights, bias); doubles round-trip exactly.
std::string model_to_json(const LRModel& model, std::string_view spec_hash);
LRModel model_from_json(std::string_view json_text, std::string* spec_hash = nullptr);

}  // namespace opinion_audit
