#ifndef REGLAB_TRAINER_HPP
#define REGLAB_TRAINER_HPP

#include <cstdint>

#include "reglab/loss.hpp"
#include "reglab/optim.hpp"
#include "reglab/types.hpp"

namespace reglab {

/// Linear-softmax classifier: logits = X * W + b.
struct ToyModel {
    Eigen::MatrixXd weight_matrix;  // D x C
    Eigen::VectorXd bias;           // C

    static ToyModel zeros(Eigen::Index feature_dim, Eigen::Index num_classes);
    Eigen::MatrixXd logits(const Eigen::MatrixXd& features) const;
};

struct LabeledData {
    Eigen::MatrixXd features;  // N x D
    Eigen::VectorXi labels;    // N
};

struct ClassificationTask {
    LabeledData train;
    LabeledData test;
};

enum class LossChoice { CE, WeightedCE, GFL, REG, REG_U };

struct EpochRecord {
    int epoch = 0;
    double loss = 0.0;
    Eigen::VectorXd per_class_error;  // on the held-out split
};

struct TrainReport {
    std::vector<EpochRecord> per_epoch;
    Eigen::VectorXd final_precision, final_recall, final_f1;  // per class, held out
};

struct TrainOptions {
    // Synthetic per-sample distances for the refinement term; the toy
    // task has no boxes, so REG draws |N(mean_c, std)| per entry.
    Eigen::VectorXd geometry_class_means;  // empty = all ones
    double geometry_std = 0.5;
};

// Gaussian class clusters with deterministic largest-remainder class
// allocation; class c sits at (separation / 2) along axis (c / 2) mod D,
// alternating sign, so paired classes are `separation` apart.
ClassificationTask make_classification_task(const Eigen::VectorXd& class_proportions, int n_train,
                                            int n_test, int feature_dim, double separation,
                                            std::uint64_t seed);

// Full-batch gradient descent of the chosen loss through the linear
// model. WeightedCE uses the sum-form gradient divided by N so its step
// scale matches the mean-form losses.
TrainReport train(ToyModel& model, const ClassificationTask& data, LossChoice loss_choice,
                  const ClassWeights& weights, const LossConfig& config, Schedule schedule,
                  int epochs, std::uint64_t seed, const TrainOptions& options = {});

// d(loss)/d(logits) for the chosen loss; shared by train() and the
// gradient-chain checks.
Eigen::MatrixXd loss_logit_gradient(const PredictionBatch& batch, LossChoice loss_choice,
                                    const SampleGeometry& geometry, const ClassWeights& weights,
                                    const LossConfig& config);
double loss_value(const PredictionBatch& batch, LossChoice loss_choice,
                  const SampleGeometry& geometry, const ClassWeights& weights,
                  const LossConfig& config);

}  // namespace reglab

#endif
