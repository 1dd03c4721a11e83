#ifndef REGLAB_TYPES_HPP
#define REGLAB_TYPES_HPP

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "reglab/errors.hpp"

namespace reglab {

/// Ordered class lists for the detection and segmentation tasks.
/// The segmentation classes must be a subset of the detection classes.
struct ClassCatalog {
    std::vector<std::string> detection_classes;
    std::vector<std::string> segmentation_classes;

    int det_count() const { return static_cast<int>(detection_classes.size()); }
    int seg_count() const { return static_cast<int>(segmentation_classes.size()); }

    // Throws SchemaError on duplicate names or a segmentation class
    // missing from the detection list.
    void validate() const;

    // Index of `name` in the detection list, or -1.
    int detection_index(const std::string& name) const;

    // The 7-class detection / 5-class segmentation highway-asset catalog.
    static ClassCatalog highway_assets();
};

/// Per-class annotation counts with their sum.
struct AnnotationCounts {
    std::map<std::string, long> per_class;
    long total = 0;

    static AnnotationCounts from_map(const std::map<std::string, long>& counts);
};

/// A batch of per-sample class probabilities with optional logits.
struct PredictionBatch {
    Eigen::MatrixXd probs;                  // N x C
    std::optional<Eigen::MatrixXd> logits;  // N x C, pre-softmax
    Eigen::VectorXi labels;                 // N, true class indices

    Eigen::Index size() const { return probs.rows(); }
    Eigen::Index num_classes() const { return probs.cols(); }

    // Builds probs as the row-wise softmax of `logits`.
    static PredictionBatch from_logits(const Eigen::MatrixXd& logits,
                                       const Eigen::VectorXi& labels);

    // Checks label range, probability range, and (when logits are
    // present) softmax consistency to 1e-9.
    void validate() const;
};

/// Per-sample per-class distance to the nearest ground truth of that class.
struct SampleGeometry {
    Eigen::MatrixXd distances;  // N x C, all >= 0
};

enum class RefinementDirection { CloserIsHeavier, FartherIsHeavier };

struct LossConfig {
    double gamma = 2.0;        // focusing exponent, >= 0
    double beta = 1.0;         // refinement sharpness, > 0
    double delta = 0.0;        // distance threshold, >= 0
    double lambda_task = 1.0;  // detection/segmentation balance, >= 0
    double sigma_sq = 0.0;     // prediction variance, >= 0
    RefinementDirection refinement_direction = RefinementDirection::CloserIsHeavier;
    double prob_floor = 1e-7;  // probabilities clamped to [floor, 1-floor]
    // Literal all-class summation instead of the one-hot target expansion.
    bool all_class_sum = false;

    void validate() const;
};

enum class WeightScheme { Uniform, InverseFrequency, InverseFrequencyNormalized, DualOptimized };

struct ClassWeights {
    Eigen::VectorXd alpha;  // length C, all >= 0
    WeightScheme scheme = WeightScheme::Uniform;

    static ClassWeights uniform(Eigen::Index num_classes);
};

/// Axis-aligned box; degenerate extents are rejected at construction.
struct Box {
    double x_min = 0, y_min = 0, x_max = 0, y_max = 0;

    Box() = default;
    Box(double x0, double y0, double x1, double y1);

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
    double area() const { return width() * height(); }
    double center_x() const { return 0.5 * (x_min + x_max); }
    double center_y() const { return 0.5 * (y_min + y_max); }
};

struct GroundTruthBox {
    Box box;
    int class_id = 0;
};

struct PredictionBox {
    Box box;
    int class_id = 0;
    double confidence = 0.0;
};

struct Scene {
    std::string scene_id;
    std::vector<GroundTruthBox> ground_truth;
    std::vector<PredictionBox> predictions;
};

inline double clamp_prob(double p, double floor) {
    return std::min(std::max(p, floor), 1.0 - floor);
}

}  // namespace reglab

#endif
