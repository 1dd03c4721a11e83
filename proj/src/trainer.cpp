#include "reglab/trainer.hpp"

#include <cmath>
#include <random>

#include "reglab/rebalance.hpp"
#include "reglab/uncertainty.hpp"

namespace reglab {

ToyModel ToyModel::zeros(Eigen::Index feature_dim, Eigen::Index num_classes) {
    ToyModel m;
    m.weight_matrix = Eigen::MatrixXd::Zero(feature_dim, num_classes);
    m.bias = Eigen::VectorXd::Zero(num_classes);
    return m;
}

Eigen::MatrixXd ToyModel::logits(const Eigen::MatrixXd& features) const {
    return (features * weight_matrix).rowwise() + bias.transpose();
}

namespace {

std::vector<long> largest_remainder_allocation(const Eigen::VectorXd& proportions, long n) {
    const Eigen::Index c = proportions.size();
    std::vector<long> counts(c);
    std::vector<std::pair<double, Eigen::Index>> remainders;
    long assigned = 0;
    for (Eigen::Index i = 0; i < c; ++i) {
        const double exact = proportions(i) * static_cast<double>(n);
        counts[i] = static_cast<long>(std::floor(exact + 1e-9));
        assigned += counts[i];
        remainders.push_back({exact - std::floor(exact + 1e-9), i});
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (long k = 0; k < n - assigned; ++k) {
        counts[remainders[static_cast<size_t>(k) % remainders.size()].second] += 1;
    }
    return counts;
}

LabeledData draw_clusters(const std::vector<long>& counts, int feature_dim, double separation,
                          std::mt19937_64& rng) {
    long n = 0;
    for (long k : counts) n += k;
    LabeledData data;
    data.features.resize(n, feature_dim);
    data.labels.resize(n);
    std::normal_distribution<double> noise(0.0, 1.0);
    long row = 0;
    for (size_t c = 0; c < counts.size(); ++c) {
        const int axis = static_cast<int>((c / 2) % static_cast<size_t>(feature_dim));
        const double sign = (c % 2 == 0) ? 1.0 : -1.0;
        for (long k = 0; k < counts[c]; ++k) {
            for (int d = 0; d < feature_dim; ++d) {
                double v = noise(rng);
                if (d == axis) v += sign * separation / 2.0;
                data.features(row, d) = v;
            }
            data.labels(row) = static_cast<int>(c);
            ++row;
        }
    }
    return data;
}

}  // namespace

ClassificationTask make_classification_task(const Eigen::VectorXd& class_proportions, int n_train,
                                            int n_test, int feature_dim, double separation,
                                            std::uint64_t seed) {
    if (class_proportions.size() < 1 || feature_dim < 1 || n_train < 1 || n_test < 1) {
        throw InfeasibleConfig("task requires at least one class, feature, and sample per split");
    }
    if ((class_proportions.array() <= 0.0).any()) {
        throw InfeasibleConfig("class proportions must be positive");
    }
    if (std::abs(class_proportions.sum() - 1.0) > 1e-9) {
        throw InfeasibleConfig("class proportions must sum to 1");
    }
    std::mt19937_64 rng(seed);
    ClassificationTask task;
    task.train = draw_clusters(largest_remainder_allocation(class_proportions, n_train),
                               feature_dim, separation, rng);
    task.test = draw_clusters(largest_remainder_allocation(class_proportions, n_test), feature_dim,
                              separation, rng);
    return task;
}

Eigen::MatrixXd loss_logit_gradient(const PredictionBatch& batch, LossChoice loss_choice,
                                    const SampleGeometry& geometry, const ClassWeights& weights,
                                    const LossConfig& config) {
    switch (loss_choice) {
        case LossChoice::CE: {
            LossConfig ce = config;
            ce.gamma = 0.0;
            return gfl_gradient(batch, ClassWeights::uniform(batch.num_classes()), ce).d_logits;
        }
        case LossChoice::WeightedCE:
            return rebalanced_ce_gradient(batch, weights, config.prob_floor).d_logits /
                   static_cast<double>(batch.size());
        case LossChoice::GFL:
            return gfl_gradient(batch, weights, config).d_logits;
        case LossChoice::REG:
            return reg_gradient(batch, geometry, weights, config).d_logits;
        case LossChoice::REG_U:
            return reg_u_gradient(batch, geometry, weights, config).d_logits;
    }
    throw Error("unknown loss choice");
}

double loss_value(const PredictionBatch& batch, LossChoice loss_choice,
                  const SampleGeometry& geometry, const ClassWeights& weights,
                  const LossConfig& config) {
    switch (loss_choice) {
        case LossChoice::CE: {
            LossConfig ce = config;
            ce.gamma = 0.0;
            return gfl(batch, ClassWeights::uniform(batch.num_classes()), ce).value;
        }
        case LossChoice::WeightedCE:
            return rebalanced_cross_entropy(batch, weights).value /
                   static_cast<double>(batch.size());
        case LossChoice::GFL:
            return gfl(batch, weights, config).value;
        case LossChoice::REG:
            return reg_loss(batch, geometry, weights, config).value;
        case LossChoice::REG_U: {
            VariationalState state;
            state.mu = batch.probs;
            state.sigma_sq =
                Eigen::MatrixXd::Constant(batch.size(), batch.num_classes(), config.sigma_sq);
            return reg_u_loss(state, batch.labels, geometry, weights, config).value;
        }
    }
    throw Error("unknown loss choice");
}

TrainReport train(ToyModel& model, const ClassificationTask& data, LossChoice loss_choice,
                  const ClassWeights& weights, const LossConfig& config, Schedule schedule,
                  int epochs, std::uint64_t seed, const TrainOptions& options) {
    if (epochs < 1) throw InfeasibleConfig("epochs must be >= 1");
    const Eigen::Index n = data.train.features.rows();
    const Eigen::Index c = model.weight_matrix.cols();

    // Synthetic refinement geometry, fixed for the whole run.
    SampleGeometry geometry;
    geometry.distances.resize(n, c);
    {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> noise(0.0, options.geometry_std);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < c; ++j) {
                const double mean = options.geometry_class_means.size() == c
                                        ? options.geometry_class_means(j)
                                        : 1.0;
                geometry.distances(i, j) = std::abs(mean + noise(rng));
            }
        }
    }

    TrainReport report;
    const Eigen::Index num_test = data.test.features.rows();
    std::vector<long> test_class_total(static_cast<size_t>(c), 0);
    for (Eigen::Index i = 0; i < num_test; ++i) test_class_total[data.test.labels(i)] += 1;

    auto test_errors = [&]() {
        const Eigen::MatrixXd z = model.logits(data.test.features);
        std::vector<long> wrong(static_cast<size_t>(c), 0);
        for (Eigen::Index i = 0; i < num_test; ++i) {
            Eigen::Index argmax;
            z.row(i).maxCoeff(&argmax);
            if (argmax != data.test.labels(i)) wrong[data.test.labels(i)] += 1;
        }
        Eigen::VectorXd err(c);
        for (Eigen::Index j = 0; j < c; ++j) {
            err(j) = test_class_total[j] > 0
                         ? static_cast<double>(wrong[j]) / static_cast<double>(test_class_total[j])
                         : 0.0;
        }
        return err;
    };

    for (int epoch = 0; epoch < epochs; ++epoch) {
        const PredictionBatch batch =
            PredictionBatch::from_logits(model.logits(data.train.features), data.train.labels);
        const double value = loss_value(batch, loss_choice, geometry, weights, config);
        if (!std::isfinite(value)) {
            throw DivergenceDetected("loss became non-finite; reduce the learning rate");
        }
        const Eigen::MatrixXd d_logits =
            loss_logit_gradient(batch, loss_choice, geometry, weights, config);
        const double eta = schedule.rate();
        model.weight_matrix -= eta * (data.train.features.transpose() * d_logits);
        model.bias -= eta * d_logits.colwise().sum().transpose();
        schedule.advance();
        report.per_epoch.push_back({epoch, value, test_errors()});
    }

    // Held-out confusion-based P/R/F1 per class.
    Eigen::MatrixXd confusion = Eigen::MatrixXd::Zero(c, c);  // true x predicted
    const Eigen::MatrixXd z = model.logits(data.test.features);
    for (Eigen::Index i = 0; i < num_test; ++i) {
        Eigen::Index argmax;
        z.row(i).maxCoeff(&argmax);
        confusion(data.test.labels(i), argmax) += 1.0;
    }
    report.final_precision = Eigen::VectorXd::Zero(c);
    report.final_recall = Eigen::VectorXd::Zero(c);
    report.final_f1 = Eigen::VectorXd::Zero(c);
    for (Eigen::Index j = 0; j < c; ++j) {
        const double tp = confusion(j, j);
        const double pred_total = confusion.col(j).sum();
        const double true_total = confusion.row(j).sum();
        const double p = pred_total > 0 ? tp / pred_total : 0.0;
        const double r = true_total > 0 ? tp / true_total : 0.0;
        report.final_precision(j) = p;
        report.final_recall(j) = r;
        report.final_f1(j) = p + r > 0 ? 2.0 * p * r / (p + r) : 0.0;
    }
    return report;
}

}  // namespace reglab
