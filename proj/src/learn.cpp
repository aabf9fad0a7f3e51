#include "opinion_audit/learn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include <fmt/format.h>
#include <json.hpp>

#include "opinion_audit/errors.hpp"
#include "opinion_audit/util.hpp"

namespace opinion_audit {

namespace {

/// Weights stored as scale * raw so the per-step L2 shrink is O(1).
struct ScaledWeights {
    std::vector<double> raw;
    double scale = 1.0;
    std::vector<double> bias;
};

void check_width(const FeatureVector& x, std::size_t width) {
    if (x.width != width)
        throw std::invalid_argument(fmt::format("feature width {} does not match model width {}", x.width, width));
}

/// log-sum-exp normalized probabilities, in place over `scores`.
void softmax_inplace(std::vector<double>& scores) {
    const double top = *std::max_element(scores.begin(), scores.end());
    double sum = 0.0;
    for (double& s : scores) {
        s = std::exp(s - top);
        sum += s;
    }
    for (double& s : scores) s /= sum;
}

void class_scores(const ScaledWeights& w, std::size_t width, const FeatureVector& x, std::vector<double>& out) {
    const std::size_t k = w.bias.size();
    out.assign(k, 0.0);
    for (std::size_t c = 0; c < k; ++c) {
        const double* row = w.raw.data() + c * width;
        double dot = 0.0;
        for (const auto& f : x.entries) dot += row[f.index] * f.value;
        out[c] = w.scale * dot + w.bias[c];
    }
}

/// Mean NLL plus the L2 term, on scaled weights.
double scaled_objective(const ScaledWeights& w, std::size_t width, std::span<const Example> examples,
                        double l2_lambda) {
    std::vector<double> scores;
    double nll = 0.0;
    for (const auto& ex : examples) {
        class_scores(w, width, ex.x, scores);
        const double top = *std::max_element(scores.begin(), scores.end());
        double sum = 0.0;
        for (double s : scores) sum += std::exp(s - top);
        nll += (top + std::log(sum)) - scores[ex.label];
    }
    double norm2 = 0.0;
    if (l2_lambda > 0.0)
        for (double v : w.raw) norm2 += v * v;
    return nll / static_cast<double>(examples.size()) + 0.5 * l2_lambda * w.scale * w.scale * norm2;
}

}  // namespace

void TrainConfig::validate() const {
    if (!(l2_lambda >= 0.0) || !std::isfinite(l2_lambda)) throw UsageError("l2_lambda must be finite and >= 0");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw UsageError("learning_rate must be > 0");
    if (learning_rate * l2_lambda >= 1.0) throw UsageError("learning_rate * l2_lambda must be < 1");
    if (max_epochs == 0) throw UsageError("max_epochs must be >= 1");
    if (!(tolerance >= 0.0)) throw UsageError("tolerance must be >= 0");
    if (batch_size == 0) throw UsageError("batch_size must be >= 1");
}

LRModel::LRModel(std::vector<std::string> labels, std::size_t feature_width)
    : label_set(std::move(labels)), width(feature_width), weights(label_set.size() * feature_width, 0.0),
      bias(label_set.size(), 0.0) {}

LRModel train(std::span<const Example> examples, std::vector<std::string> label_set, std::size_t width,
              const TrainConfig& config, TrainTrace* trace) {
    config.validate();
    const std::size_t k = label_set.size();
    if (k < 2) throw TrainingError("training needs at least two labels");
    if (examples.empty()) throw TrainingError("no training examples");

    std::vector<std::size_t> class_count(k, 0);
    for (const auto& ex : examples) {
        if (ex.label >= k) throw std::invalid_argument("example label outside the label set");
        check_width(ex.x, width);
        ++class_count[ex.label];
    }
    for (std::size_t c = 0; c < k; ++c)
        if (class_count[c] == 0)
            throw TrainingError(fmt::format("label \"{}\" is absent from the training data", label_set[c]));

    ScaledWeights w{std::vector<double>(k * width, 0.0), 1.0, std::vector<double>(k, 0.0)};
    const std::size_t n = examples.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(config.seed, "train/shuffle"));

    double lr = config.learning_rate;
    double previous = scaled_objective(w, width, examples, config.l2_lambda);
    if (!std::isfinite(previous)) throw TrainingError("non-finite initial objective");

    TrainTrace local;
    local.epoch_objective.push_back(previous);

    std::vector<double> scores;
    std::vector<double> coef;  // batch x k
    ScaledWeights snapshot;
    for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
        ++local.epochs_run;
        snapshot = w;
        rng.shuffle(order);
        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t end = std::min(n, start + config.batch_size);
            const double inv_b = 1.0 / static_cast<double>(end - start);
            coef.assign((end - start) * k, 0.0);
            for (std::size_t i = start; i < end; ++i) {
                const Example& ex = examples[order[i]];
                class_scores(w, width, ex.x, scores);
                softmax_inplace(scores);
                for (std::size_t c = 0; c < k; ++c)
                    coef[(i - start) * k + c] = (scores[c] - (c == ex.label ? 1.0 : 0.0)) * inv_b;
            }
            // w <- (1 - lr*lambda) w - lr * grad_nll, with the shrink folded into the scale.
            w.scale *= 1.0 - lr * config.l2_lambda;
            const double step = lr / w.scale;
            for (std::size_t i = start; i < end; ++i) {
                const Example& ex = examples[order[i]];
                for (std::size_t c = 0; c < k; ++c) {
                    const double g = coef[(i - start) * k + c];
                    if (g == 0.0) continue;
                    double* row = w.raw.data() + c * width;
                    for (const auto& f : ex.x.entries) row[f.index] -= step * g * f.value;
                    w.bias[c] -= lr * g;
                }
            }
            if (w.scale < 1e-8) {
                for (double& v : w.raw) v *= w.scale;
                w.scale = 1.0;
            }
        }

        const double current = scaled_objective(w, width, examples, config.l2_lambda);
        if (!std::isfinite(current)) throw TrainingError(fmt::format("non-finite objective at epoch {}", epoch + 1));
        if (current > previous) {
            w = std::move(snapshot);
            lr *= 0.5;
            ++local.rejected_epochs;
            if (lr < config.learning_rate * 1e-6) break;
            continue;
        }
        local.epoch_objective.push_back(current);
        const double rel = (previous - current) / std::max(std::fabs(previous), 1e-300);
        previous = current;
        if (rel < config.tolerance) {
            local.converged = true;
            break;
        }
    }
    local.final_learning_rate = lr;
    if (trace) *trace = std::move(local);

    LRModel model(std::move(label_set), width);
    for (std::size_t i = 0; i < w.raw.size(); ++i) model.weights[i] = w.raw[i] * w.scale;
    model.bias = w.bias;
    return model;
}

Prediction predict(const LRModel& model, const FeatureVector& x) {
    check_width(x, model.width);
    Prediction p;
    p.probabilities.assign(model.n_classes(), 0.0);
    for (std::size_t c = 0; c < model.n_classes(); ++c) {
        double dot = model.bias[c];
        for (const auto& f : x.entries) dot += model.weight(c, f.index) * f.value;
        p.probabilities[c] = dot;
    }
    softmax_inplace(p.probabilities);
    p.label = static_cast<std::size_t>(std::max_element(p.probabilities.begin(), p.probabilities.end()) -
                                       p.probabilities.begin());
    return p;
}

double objective(const LRModel& model, std::span<const Example> examples, double l2_lambda) {
    if (examples.empty()) throw std::invalid_argument("objective: no examples");
    for (const auto& ex : examples) check_width(ex.x, model.width);
    ScaledWeights w{model.weights, 1.0, model.bias};
    return scaled_objective(w, model.width, examples, l2_lambda);
}

void objective_gradient(const LRModel& model, std::span<const Example> examples, double l2_lambda,
                        std::vector<double>& grad_weights, std::vector<double>& grad_bias) {
    if (examples.empty()) throw std::invalid_argument("objective_gradient: no examples");
    const std::size_t k = model.n_classes();
    grad_weights.assign(model.weights.size(), 0.0);
    grad_bias.assign(k, 0.0);
    const double inv_n = 1.0 / static_cast<double>(examples.size());
    std::vector<double> p;
    for (const auto& ex : examples) {
        check_width(ex.x, model.width);
        p.assign(k, 0.0);
        for (std::size_t c = 0; c < k; ++c) {
            double dot = model.bias[c];
            for (const auto& f : ex.x.entries) dot += model.weight(c, f.index) * f.value;
            p[c] = dot;
        }
        softmax_inplace(p);
        for (std::size_t c = 0; c < k; ++c) {
            const double g = (p[c] - (c == ex.label ? 1.0 : 0.0)) * inv_n;
            for (const auto& f : ex.x.entries) grad_weights[c * model.width + f.index] += g * f.value;
            grad_bias[c] += g;
        }
    }
    for (std::size_t i = 0; i < grad_weights.size(); ++i) grad_weights[i] += l2_lambda * model.weights[i];
}

double grad_check(const LRModel& model, std::span<const Example> examples, double l2_lambda, double epsilon) {
    std::vector<double> gw, gb;
    objective_gradient(model, examples, l2_lambda, gw, gb);

    std::vector<std::size_t> weight_params;
    if (model.weights.size() <= 4096) {
        weight_params.resize(model.weights.size());
        std::iota(weight_params.begin(), weight_params.end(), 0);
    } else {
        std::set<std::size_t> features;
        for (const auto& ex : examples)
            for (const auto& f : ex.x.entries) features.insert(f.index);
        for (std::size_t c = 0; c < model.n_classes(); ++c)
            for (std::size_t f : features) weight_params.push_back(c * model.width + f);
    }

    auto rel_error = [](double analytic, double numeric) {
        const double denom = std::max(std::fabs(analytic), std::fabs(numeric));
        return denom == 0.0 ? 0.0 : std::fabs(analytic - numeric) / denom;
    };

    LRModel probe = model;
    double worst = 0.0;
    for (std::size_t i : weight_params) {
        const double saved = probe.weights[i];
        probe.weights[i] = saved + epsilon;
        const double up = objective(probe, examples, l2_lambda);
        probe.weights[i] = saved - epsilon;
        const double down = objective(probe, examples, l2_lambda);
        probe.weights[i] = saved;
        worst = std::max(worst, rel_error(gw[i], (up - down) / (2.0 * epsilon)));
    }
    for (std::size_t c = 0; c < model.n_classes(); ++c) {
        const double saved = probe.bias[c];
        probe.bias[c] = saved + epsilon;
        const double up = objective(probe, examples, l2_lambda);
        probe.bias[c] = saved - epsilon;
        const double down = objective(probe, examples, l2_lambda);
        probe.bias[c] = saved;
        worst = std::max(worst, rel_error(gb[c], (up - down) / (2.0 * epsilon)));
    }
    return worst;
}

void FoldPlan::check(std::size_t n) const {
    if (folds.size() != k) throw std::logic_error("fold plan: fold count differs from k");
    std::vector<bool> seen(n, false);
    std::size_t smallest = n, largest = 0, covered = 0;
    for (const auto& fold : folds) {
        smallest = std::min(smallest, fold.size());
        largest = std::max(largest, fold.size());
        for (std::size_t i : fold) {
            if (i >= n) throw std::logic_error("fold plan: index out of range");
            if (seen[i]) throw std::logic_error("fold plan: folds overlap");
            seen[i] = true;
            ++covered;
        }
    }
    if (covered != n) throw std::logic_error("fold plan: folds do not cover every index");
    if (!folds.empty() && largest - smallest > 1) throw std::logic_error("fold plan: fold sizes differ by more than one");
}

FoldPlan make_folds(std::size_t n, std::size_t k, std::uint64_t seed) {
    if (k == 0) throw UsageError("fold count must be >= 1");
    if (n < k) throw UsageError(fmt::format("cannot split {} items into {} folds", n, k));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, "folds"));
    rng.shuffle(order);

    FoldPlan plan;
    plan.k = k;
    const std::size_t base = n / k, extra = n % k;
    std::size_t pos = 0;
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t size = base + (f < extra ? 1 : 0);
        plan.folds.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(pos),
                                order.begin() + static_cast<std::ptrdiff_t>(pos + size));
        pos += size;
    }
    return plan;
}

namespace {

struct ExampleFolds {
    FoldPlan plan;
    std::vector<std::size_t> fold_of_example;
};

ExampleFolds assign_folds(std::size_t n_examples, std::size_t k, std::uint64_t seed,
                          std::span<const std::size_t> groups) {
    ExampleFolds out;
    out.fold_of_example.assign(n_examples, 0);
    if (groups.empty()) {
        out.plan = make_folds(n_examples, k, seed);
        for (std::size_t f = 0; f < k; ++f)
            for (std::size_t i : out.plan.folds[f]) out.fold_of_example[i] = f;
        return out;
    }
    if (groups.size() != n_examples) throw std::invalid_argument("cross_validate: one group id per example required");
    std::vector<std::size_t> ids(groups.begin(), groups.end());
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    out.plan = make_folds(ids.size(), k, seed);
    std::vector<std::size_t> fold_of_group(ids.size());
    for (std::size_t f = 0; f < k; ++f)
        for (std::size_t g : out.plan.folds[f]) fold_of_group[g] = f;
    for (std::size_t i = 0; i < n_examples; ++i) {
        const auto pos = static_cast<std::size_t>(std::lower_bound(ids.begin(), ids.end(), groups[i]) - ids.begin());
        out.fold_of_example[i] = fold_of_group[pos];
    }
    return out;
}

double fold_score(std::span<const Example> examples, const std::vector<std::size_t>& fold_of_example, std::size_t fold,
                  const std::vector<std::string>& label_set, std::size_t width, const TrainConfig& config,
                  Metric metric) {
    std::vector<Example> train_set;
    std::vector<const Example*> held_out;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        if (fold_of_example[i] == fold)
            held_out.push_back(&examples[i]);
        else
            train_set.push_back(examples[i]);
    }
    TrainConfig cfg = config;
    cfg.seed = derive_seed(config.seed, fmt::format("fold/{}", fold));
    const LRModel model = train(train_set, label_set, width, cfg);
    Confusion confusion(label_set.size());
    for (const Example* ex : held_out) confusion.add(ex->label, predict(model, ex->x).label);
    return score(confusion, metric);
}

}  // namespace

CrossValidation cross_validate(std::span<const Example> examples, const std::vector<std::string>& label_set,
                               std::size_t width, const TrainConfig& config, std::size_t k, Metric metric,
                               std::span<const std::size_t> groups) {
    const auto folds = assign_folds(examples.size(), k, config.seed, groups);
    CrossValidation cv;
    cv.plan = folds.plan;
    cv.fold_scores.assign(k, 0.0);
    parallel_for(k, [&](std::size_t f) {
        cv.fold_scores[f] = fold_score(examples, folds.fold_of_example, f, label_set, width, config, metric);
    });
    cv.mean = exact_mean(cv.fold_scores);
    return cv;
}

TuningResult tune_l2(std::span<const Example> examples, const std::vector<std::string>& label_set, std::size_t width,
                     const TrainConfig& config, std::span<const double> lambda_grid, std::size_t k, Metric metric,
                     std::span<const std::size_t> groups) {
    if (lambda_grid.empty()) throw UsageError("empty l2_lambda grid");
    const auto folds = assign_folds(examples.size(), k, config.seed, groups);
    TuningResult result;
    for (double lambda : lambda_grid) result.grid.push_back({lambda, std::vector<double>(k, 0.0), 0.0});
    parallel_for(lambda_grid.size() * k, [&](std::size_t job) {
        const std::size_t g = job / k, f = job % k;
        TrainConfig cfg = config;
        cfg.l2_lambda = lambda_grid[g];
        result.grid[g].fold_scores[f] = fold_score(examples, folds.fold_of_example, f, label_set, width, cfg, metric);
    });
    std::size_t best = 0;
    for (std::size_t g = 0; g < result.grid.size(); ++g) {
        result.grid[g].mean = exact_mean(result.grid[g].fold_scores);
        if (result.grid[g].mean > result.grid[best].mean) best = g;
    }
    result.best_lambda = result.grid[best].l2_lambda;
    return result;
}

std::string model_to_json(const LRModel& model, std::string_view spec_hash) {
    nlohmann::ordered_json doc;
    doc["format"] = "opinion-audit/lr-model";
    doc["version"] = 1;
    doc["label_set"] = model.label_set;
    doc["width"] = model.width;
    doc["spec_hash"] = std::string(spec_hash);
    doc["bias"] = model.bias;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < model.n_classes(); ++c) {
        nlohmann::ordered_json entries = nlohmann::ordered_json::array();
        for (std::size_t i = 0; i < model.width; ++i) {
            const double v = model.weight(c, i);
            if (v != 0.0) entries.push_back({i, v});
        }
        rows.push_back({{"label", model.label_set[c]}, {"entries", std::move(entries)}});
    }
    doc["weights"] = std::move(rows);
    return doc.dump();
}

LRModel model_from_json(std::string_view json_text, std::string* spec_hash) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
        if (doc.at("format") != "opinion-audit/lr-model") throw ParseError("not a model record", 0);
        if (doc.at("version") != 1) throw ParseError("unsupported model record version", 0);
        LRModel model(doc.at("label_set").get<std::vector<std::string>>(), doc.at("width").get<std::size_t>());
        model.bias = doc.at("bias").get<std::vector<double>>();
        if (model.bias.size() != model.n_classes()) throw ParseError("bias size mismatch", 0);
        const auto& rows = doc.at("weights");
        if (rows.size() != model.n_classes()) throw ParseError("weight row count mismatch", 0);
        for (std::size_t c = 0; c < rows.size(); ++c) {
            for (const auto& e : rows[c].at("entries")) {
                const auto idx = e.at(0).get<std::size_t>();
                if (idx >= model.width) throw ParseError("weight index out of range", 0);
                model.weight(c, idx) = e.at(1).get<double>();
            }
        }
        if (spec_hash) *spec_hash = doc.at("spec_hash").get<std::string>();
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(fmt::format("malformed model record: {}", e.what()), 0);
    }
}

}  // namespace opinion_audit
