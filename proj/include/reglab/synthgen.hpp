#ifndef REGLAB_SYNTHGEN_HPP
#define REGLAB_SYNTHGEN_HPP

#include <cstdint>

#include "reglab/types.hpp"

namespace reglab {

struct DetectorQuality {
    double localization_noise_std = 0.0;  // box corner jitter, coordinate units
    double confusion_rate = 0.0;          // probability a prediction's class flips
    double miss_rate = 0.0;               // probability a ground truth has no prediction
    double false_positive_rate = 0.0;     // expected spurious predictions per scene
};

struct GeneratorConfig {
    AnnotationCounts counts;  // per-class ground-truth totals, hit exactly
    int scene_count = 10;
    double image_width = 100.0;
    double image_height = 100.0;
    double box_size_min = 2.0;
    double box_size_max = 10.0;
    DetectorQuality detector_quality;
    std::uint64_t seed = 0;

    void validate(const ClassCatalog& catalog) const;
};

// Deterministic synthetic scenes: ground truths distributed round-robin
// across scenes to hit the configured counts exactly, predictions derived
// from them under the detector-quality noise model.
std::vector<Scene> generate(const GeneratorConfig& config, const ClassCatalog& catalog);

// d_{i,c} = center-to-center distance from prediction i to the nearest
// ground truth of class c; the scene diagonal when the class is absent.
// scene_diagonal <= 0 derives the sentinel from the scene's box envelope.
SampleGeometry geometry_from_scene(const Scene& scene, const ClassCatalog& catalog,
                                   double scene_diagonal = -1.0);

}  // namespace reglab

#endif
