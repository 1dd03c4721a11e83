#include "reglab/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

namespace reglab {

double iou(const Box& a, const Box& b) {
    const double ix = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
    const double iy = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
    if (ix <= 0.0 || iy <= 0.0) return 0.0;
    const double inter = ix * iy;
    return inter / (a.area() + b.area() - inter);
}

MatchResult match_scene(const Scene& scene, int class_id, double threshold) {
    MatchResult result;
    result.threshold = threshold;

    std::vector<int> pred_idx;
    for (int i = 0; i < static_cast<int>(scene.predictions.size()); ++i) {
        if (scene.predictions[i].class_id == class_id) pred_idx.push_back(i);
    }
    std::stable_sort(pred_idx.begin(), pred_idx.end(), [&](int a, int b) {
        return scene.predictions[a].confidence > scene.predictions[b].confidence;
    });

    std::vector<int> gt_idx;
    for (int i = 0; i < static_cast<int>(scene.ground_truth.size()); ++i) {
        if (scene.ground_truth[i].class_id == class_id) gt_idx.push_back(i);
    }

    std::vector<bool> claimed(scene.ground_truth.size(), false);
    for (int p : pred_idx) {
        int best_gt = -1;
        double best_iou = 0.0;
        for (int g : gt_idx) {
            if (claimed[g]) continue;
            const double v = iou(scene.predictions[p].box, scene.ground_truth[g].box);
            if (v >= threshold && v > best_iou) {
                best_iou = v;
                best_gt = g;
            }
        }
        if (best_gt >= 0) {
            claimed[best_gt] = true;
            result.pairs.push_back({p, best_gt, best_iou});
        } else {
            result.unmatched_predictions.push_back(p);
        }
    }
    for (int g : gt_idx) {
        if (!claimed[g]) result.unmatched_ground_truth.push_back(g);
    }
    return result;
}

namespace {

bool augment(int p, const std::vector<std::vector<int>>& adj, std::vector<int>& match_gt,
             std::vector<bool>& visited) {
    for (int g : adj[p]) {
        if (visited[g]) continue;
        visited[g] = true;
        if (match_gt[g] < 0 || augment(match_gt[g], adj, match_gt, visited)) {
            match_gt[g] = p;
            return true;
        }
    }
    return false;
}

}  // namespace

long optimal_tp_count(const Scene& scene, int class_id, double threshold) {
    std::vector<int> pred_idx, gt_idx;
    for (int i = 0; i < static_cast<int>(scene.predictions.size()); ++i) {
        if (scene.predictions[i].class_id == class_id) pred_idx.push_back(i);
    }
    for (int i = 0; i < static_cast<int>(scene.ground_truth.size()); ++i) {
        if (scene.ground_truth[i].class_id == class_id) gt_idx.push_back(i);
    }
    std::vector<std::vector<int>> adj(pred_idx.size());
    for (size_t p = 0; p < pred_idx.size(); ++p) {
        for (size_t g = 0; g < gt_idx.size(); ++g) {
            if (iou(scene.predictions[pred_idx[p]].box, scene.ground_truth[gt_idx[g]].box) >=
                threshold) {
                adj[p].push_back(static_cast<int>(g));
            }
        }
    }
    std::vector<int> match_gt(gt_idx.size(), -1);
    long matched = 0;
    for (size_t p = 0; p < pred_idx.size(); ++p) {
        std::vector<bool> visited(gt_idx.size(), false);
        if (augment(static_cast<int>(p), adj, match_gt, visited)) ++matched;
    }
    return matched;
}

std::tuple<double, double, double> precision_recall_f1(const ConfusionTally& tally) {
    const double p = tally.tp + tally.fp > 0
                         ? static_cast<double>(tally.tp) / static_cast<double>(tally.tp + tally.fp)
                         : 0.0;
    const double r = tally.tp + tally.fn > 0
                         ? static_cast<double>(tally.tp) / static_cast<double>(tally.tp + tally.fn)
                         : 0.0;
    const double f1 = p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
    return {p, r, f1};
}

double average_precision(const std::vector<Scene>& scenes, int class_id, double threshold,
                         ApVariant variant) {
    struct RankedDetection {
        double confidence;
        int scene_index;
        int pred_index;
        bool is_tp;
    };
    std::vector<RankedDetection> ranked;
    long npos = 0;
    for (int s = 0; s < static_cast<int>(scenes.size()); ++s) {
        const Scene& scene = scenes[s];
        for (const auto& g : scene.ground_truth) {
            if (g.class_id == class_id) ++npos;
        }
        const MatchResult match = match_scene(scene, class_id, threshold);
        for (const auto& pair : match.pairs) {
            ranked.push_back(
                {scene.predictions[pair.prediction_index].confidence, s, pair.prediction_index, true});
        }
        for (int p : match.unmatched_predictions) {
            ranked.push_back({scene.predictions[p].confidence, s, p, false});
        }
    }
    if (npos == 0) return 0.0;
    std::sort(ranked.begin(), ranked.end(), [](const RankedDetection& a, const RankedDetection& b) {
        if (a.confidence != b.confidence) return a.confidence > b.confidence;
        if (a.scene_index != b.scene_index) return a.scene_index < b.scene_index;
        return a.pred_index < b.pred_index;
    });

    if (variant == ApVariant::Ranked) {
        long tp = 0, fp = 0;
        double sum = 0.0;
        for (const auto& d : ranked) {
            if (d.is_tp) {
                ++tp;
                sum += static_cast<double>(tp) / static_cast<double>(tp + fp);
            } else {
                ++fp;
            }
        }
        return sum / static_cast<double>(npos);
    }

    // All-point interpolated AP: area under the precision envelope.
    std::vector<double> precisions, recalls;
    long tp = 0, fp = 0;
    for (const auto& d : ranked) {
        d.is_tp ? ++tp : ++fp;
        precisions.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
        recalls.push_back(static_cast<double>(tp) / static_cast<double>(npos));
    }
    for (int i = static_cast<int>(precisions.size()) - 2; i >= 0; --i) {
        precisions[i] = std::max(precisions[i], precisions[i + 1]);
    }
    double ap = 0.0, prev_recall = 0.0;
    for (size_t i = 0; i < precisions.size(); ++i) {
        ap += (recalls[i] - prev_recall) * precisions[i];
        prev_recall = recalls[i];
    }
    return ap;
}

namespace {

ClassMetrics evaluate_class(const std::vector<Scene>& scenes, int class_id,
                            const EvaluationOptions& options) {
    ClassMetrics m;
    ConfusionTally tally;
    for (const Scene& scene : scenes) {
        const Scene* target = &scene;
        Scene filtered;
        if (options.confidence_threshold >= 0.0) {
            filtered.scene_id = scene.scene_id;
            filtered.ground_truth = scene.ground_truth;
            for (const auto& p : scene.predictions) {
                if (p.confidence >= options.confidence_threshold) filtered.predictions.push_back(p);
            }
            target = &filtered;
        }
        const MatchResult match = match_scene(*target, class_id, options.iou_threshold);
        tally.tp += static_cast<long>(match.pairs.size());
        tally.fp += static_cast<long>(match.unmatched_predictions.size());
        tally.fn += static_cast<long>(match.unmatched_ground_truth.size());
    }
    std::tie(m.precision, m.recall, m.f1) = precision_recall_f1(tally);
    m.ap50 = average_precision(scenes, class_id, 0.5, options.ap_variant);
    double ap_sum = 0.0;
    for (int k = 0; k < 10; ++k) {
        ap_sum += average_precision(scenes, class_id, 0.5 + 0.05 * k, options.ap_variant);
    }
    m.ap50_95 = ap_sum / 10.0;
    return m;
}

}  // namespace

MetricReport map_range(const std::vector<Scene>& scenes, int num_classes,
                       const EvaluationOptions& options) {
    if (scenes.empty()) throw EmptyDataset("map_range requires a non-empty scene set");

    std::vector<long> gt_counts(num_classes, 0);
    for (const Scene& s : scenes) {
        for (const auto& g : s.ground_truth) {
            if (g.class_id >= 0 && g.class_id < num_classes) ++gt_counts[g.class_id];
        }
    }

    std::vector<ClassMetrics> results(num_classes);
    const int threads = std::max(1, options.threads);
    if (threads == 1 || num_classes <= 1) {
        for (int c = 0; c < num_classes; ++c) {
            if (gt_counts[c] > 0) results[c] = evaluate_class(scenes, c, options);
        }
    } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        for (int t = 0; t < std::min(threads, num_classes); ++t) {
            pool.emplace_back([&] {
                int c;
                while ((c = next.fetch_add(1)) < num_classes) {
                    if (gt_counts[c] > 0) results[c] = evaluate_class(scenes, c, options);
                }
            });
        }
        for (auto& th : pool) th.join();
    }

    MetricReport report;
    int present = 0;
    for (int c = 0; c < num_classes; ++c) {
        if (gt_counts[c] == 0) continue;
        report.per_class[c] = results[c];
        report.macro.precision += results[c].precision;
        report.macro.recall += results[c].recall;
        report.macro.f1 += results[c].f1;
        report.macro.ap50 += results[c].ap50;
        report.macro.ap50_95 += results[c].ap50_95;
        ++present;
    }
    if (present > 0) {
        const double inv = 1.0 / present;
        report.macro.precision *= inv;
        report.macro.recall *= inv;
        report.macro.f1 *= inv;
        report.macro.ap50 *= inv;
        report.macro.ap50_95 *= inv;
    }
    return report;
}

}  // namespace reglab
