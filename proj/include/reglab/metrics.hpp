#ifndef REGLAB_METRICS_HPP
#define REGLAB_METRICS_HPP

#include <map>
#include <tuple>
#include <vector>

#include "reglab/types.hpp"

namespace reglab {

struct MatchPair {
    int prediction_index = 0;
    int ground_truth_index = 0;
    double iou = 0.0;
};

struct MatchResult {
    std::vector<MatchPair> pairs;
    std::vector<int> unmatched_predictions;
    std::vector<int> unmatched_ground_truth;
    double threshold = 0.5;
};

struct ConfusionTally {
    long tp = 0, fp = 0, fn = 0;
};

struct ClassMetrics {
    double precision = 0, recall = 0, f1 = 0, ap50 = 0, ap50_95 = 0;
};

struct MetricReport {
    std::map<int, ClassMetrics> per_class;  // classes with >= 1 ground truth
    ClassMetrics macro;
};

enum class ApVariant {
    // Sum of precision-at-each-true-positive over the ranked detections,
    // divided by the ground-truth count (non-interpolated AP).
    Ranked,
    // All-point interpolated AP (area under the interpolated PR curve).
    AllPoint
};

struct EvaluationOptions {
    double iou_threshold = 0.5;
    // Predictions below this confidence are ignored for P/R/F1; negative
    // means no cutoff.
    double confidence_threshold = -1.0;
    ApVariant ap_variant = ApVariant::Ranked;
    int threads = 1;
};

double iou(const Box& a, const Box& b);

// Greedy matching: predictions of the class in confidence-descending
// order (ties broken by prediction index) each claim the unclaimed
// ground truth with the highest IoU >= threshold (IoU ties broken by
// ground-truth index). Indices refer to the scene's full lists.
MatchResult match_scene(const Scene& scene, int class_id, double threshold);

// Maximum achievable TP count over all one-to-one assignments; the
// greedy count may fall short of this on adversarial geometry.
long optimal_tp_count(const Scene& scene, int class_id, double threshold);

std::tuple<double, double, double> precision_recall_f1(const ConfusionTally& tally);

double average_precision(const std::vector<Scene>& scenes, int class_id, double threshold,
                         ApVariant variant = ApVariant::Ranked);

// Full report: P/R/F1 at IoU 0.5, AP50, and AP50-95 over the 10-point
// threshold grid. Macro values average the classes that have ground truth.
MetricReport map_range(const std::vector<Scene>& scenes, int num_classes,
                       const EvaluationOptions& options = {});

}  // namespace reglab

#endif
