#include "reglab/types.hpp"

#include <algorithm>
#include <set>

namespace reglab {

void ClassCatalog::validate() const {
    std::set<std::string> det(detection_classes.begin(), detection_classes.end());
    if (det.size() != detection_classes.size()) {
        throw SchemaError("duplicate detection class name");
    }
    std::set<std::string> seg(segmentation_classes.begin(), segmentation_classes.end());
    if (seg.size() != segmentation_classes.size()) {
        throw SchemaError("duplicate segmentation class name");
    }
    for (const auto& name : segmentation_classes) {
        if (!det.count(name)) {
            throw SchemaError("segmentation class not in detection catalog: " + name);
        }
    }
}

int ClassCatalog::detection_index(const std::string& name) const {
    auto it = std::find(detection_classes.begin(), detection_classes.end(), name);
    if (it == detection_classes.end()) return -1;
    return static_cast<int>(it - detection_classes.begin());
}

ClassCatalog ClassCatalog::highway_assets() {
    ClassCatalog c;
    c.detection_classes = {"Pavilions",        "Pedestrian bridges", "Information signs",
                           "Single-arm poles", "Bus stops",          "Warning signs",
                           "Concrete guardrails"};
    c.segmentation_classes = {"Pavilions", "Pedestrian bridges", "Information signs",
                              "Warning signs", "Concrete guardrails"};
    return c;
}

AnnotationCounts AnnotationCounts::from_map(const std::map<std::string, long>& counts) {
    AnnotationCounts out;
    out.per_class = counts;
    out.total = 0;
    for (const auto& [name, n] : counts) {
        if (n < 0) throw SchemaError("negative annotation count for class: " + name);
        out.total += n;
    }
    return out;
}

PredictionBatch PredictionBatch::from_logits(const Eigen::MatrixXd& logits,
                                             const Eigen::VectorXi& labels) {
    PredictionBatch b;
    b.logits = logits;
    b.labels = labels;
    b.probs.resize(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const double m = logits.row(i).maxCoeff();
        Eigen::ArrayXd e = (logits.row(i).array() - m).exp();
        b.probs.row(i) = e / e.sum();
    }
    b.validate();
    return b;
}

void PredictionBatch::validate() const {
    if (labels.size() != probs.rows()) {
        throw DimensionMismatch("labels length does not match batch size");
    }
    for (Eigen::Index i = 0; i < labels.size(); ++i) {
        if (labels(i) < 0 || labels(i) >= probs.cols()) {
            throw SchemaError("label out of range at sample " + std::to_string(i));
        }
    }
    if (!probs.allFinite()) throw SchemaError("non-finite probability");
    if ((probs.array() < 0.0).any() || (probs.array() > 1.0).any()) {
        throw SchemaError("probability outside [0, 1]");
    }
    if (logits) {
        if (logits->rows() != probs.rows() || logits->cols() != probs.cols()) {
            throw DimensionMismatch("logits shape does not match probs");
        }
        for (Eigen::Index i = 0; i < logits->rows(); ++i) {
            const double m = logits->row(i).maxCoeff();
            Eigen::ArrayXd e = (logits->row(i).array() - m).exp();
            Eigen::ArrayXd soft = e / e.sum();
            if (((soft - probs.row(i).transpose().array()).abs() > 1e-9).any()) {
                throw SchemaError("probs inconsistent with softmax of logits");
            }
        }
    }
}

void LossConfig::validate() const {
    auto finite = [](double v) { return std::isfinite(v); };
    if (!finite(gamma) || gamma < 0) throw SchemaError("gamma must be finite and >= 0");
    if (!finite(beta) || beta <= 0) throw SchemaError("beta must be finite and > 0");
    if (!finite(delta) || delta < 0) throw SchemaError("delta must be finite and >= 0");
    if (!finite(lambda_task) || lambda_task < 0) {
        throw SchemaError("lambda must be finite and >= 0");
    }
    if (!finite(sigma_sq) || sigma_sq < 0) throw SchemaError("sigma_sq must be finite and >= 0");
    if (!(prob_floor > 0 && prob_floor < 0.5)) throw SchemaError("prob_floor must be in (0, 0.5)");
}

ClassWeights ClassWeights::uniform(Eigen::Index num_classes) {
    ClassWeights w;
    w.alpha = Eigen::VectorXd::Ones(num_classes);
    w.scheme = WeightScheme::Uniform;
    return w;
}

Box::Box(double x0, double y0, double x1, double y1) : x_min(x0), y_min(y0), x_max(x1), y_max(y1) {
    if (!(std::isfinite(x0) && std::isfinite(y0) && std::isfinite(x1) && std::isfinite(y1))) {
        throw GeometryError("non-finite box coordinate");
    }
    if (!(x_min < x_max) || !(y_min < y_max)) {
        throw GeometryError("degenerate box");
    }
}

}  // namespace reglab
