#include "reglab/synthgen.hpp"

#include <cmath>
#include <random>

namespace reglab {

void GeneratorConfig::validate(const ClassCatalog& catalog) const {
    auto rate_ok = [](double r) { return r >= 0.0 && r <= 1.0; };
    if (!rate_ok(detector_quality.confusion_rate) || !rate_ok(detector_quality.miss_rate)) {
        throw SchemaError("detector rates must lie in [0, 1]");
    }
    if (detector_quality.localization_noise_std < 0.0 ||
        detector_quality.false_positive_rate < 0.0) {
        throw SchemaError("noise parameters must be non-negative");
    }
    if (image_width <= 0.0 || image_height <= 0.0) throw SchemaError("image extent must be positive");
    if (box_size_min <= 0.0 || box_size_min > box_size_max) {
        throw SchemaError("box size range must satisfy 0 < min <= max");
    }
    if (box_size_max > image_width || box_size_max > image_height) {
        throw InfeasibleConfig("maximum box size exceeds the image extent");
    }
    long total = 0;
    for (const auto& [name, n] : counts.per_class) {
        if (catalog.detection_index(name) < 0) throw SchemaError("unknown class in counts: " + name);
        total += n;
    }
    if (total > 0 && scene_count <= 0) {
        throw InfeasibleConfig("cannot place annotations without scenes");
    }
}

std::vector<Scene> generate(const GeneratorConfig& config, const ClassCatalog& catalog) {
    config.validate(catalog);
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> size_dist(config.box_size_min, config.box_size_max);
    std::normal_distribution<double> jitter(0.0, 1.0);

    std::vector<Scene> scenes(static_cast<size_t>(std::max(config.scene_count, 0)));
    for (size_t s = 0; s < scenes.size(); ++s) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "scene_%05zu", s);
        scenes[s].scene_id = buf;
    }

    // Ground truths: catalog-class order, round-robin over scenes.
    long cursor = 0;
    for (int c = 0; c < catalog.det_count(); ++c) {
        auto it = config.counts.per_class.find(catalog.detection_classes[c]);
        const long count = it == config.counts.per_class.end() ? 0 : it->second;
        for (long k = 0; k < count; ++k) {
            const double w = size_dist(rng);
            const double h = size_dist(rng);
            const double x0 = unit(rng) * (config.image_width - w);
            const double y0 = unit(rng) * (config.image_height - h);
            Scene& scene = scenes[static_cast<size_t>(cursor % config.scene_count)];
            scene.ground_truth.push_back({Box(x0, y0, x0 + w, y0 + h), c});
            ++cursor;
        }
    }

    const auto& q = config.detector_quality;
    const bool perfect = q.localization_noise_std == 0.0 && q.confusion_rate == 0.0 &&
                         q.miss_rate == 0.0 && q.false_positive_rate == 0.0;

    for (Scene& scene : scenes) {
        for (const auto& gt : scene.ground_truth) {
            if (perfect) {
                scene.predictions.push_back({gt.box, gt.class_id, 1.0});
                continue;
            }
            if (unit(rng) < q.miss_rate) continue;
            double x0 = gt.box.x_min + q.localization_noise_std * jitter(rng);
            double y0 = gt.box.y_min + q.localization_noise_std * jitter(rng);
            double x1 = gt.box.x_max + q.localization_noise_std * jitter(rng);
            double y1 = gt.box.y_max + q.localization_noise_std * jitter(rng);
            if (x1 < x0) std::swap(x0, x1);
            if (y1 < y0) std::swap(y0, y1);
            if (x1 - x0 < 1e-3) x1 = x0 + 1e-3;
            if (y1 - y0 < 1e-3) y1 = y0 + 1e-3;
            int cls = gt.class_id;
            if (unit(rng) < q.confusion_rate && catalog.det_count() > 1) {
                const int shift =
                    1 + static_cast<int>(unit(rng) * (catalog.det_count() - 1));
                cls = (cls + std::min(shift, catalog.det_count() - 1)) % catalog.det_count();
            }
            const double confidence = 0.3 + 0.7 * unit(rng);
            scene.predictions.push_back({Box(x0, y0, x1, y1), cls, confidence});
        }
        if (q.false_positive_rate > 0.0) {
            std::poisson_distribution<int> fp_count(q.false_positive_rate);
            const int extra = fp_count(rng);
            for (int k = 0; k < extra; ++k) {
                const double w = size_dist(rng);
                const double h = size_dist(rng);
                const double x0 = unit(rng) * (config.image_width - w);
                const double y0 = unit(rng) * (config.image_height - h);
                const int cls = static_cast<int>(unit(rng) * catalog.det_count()) %
                                catalog.det_count();
                scene.predictions.push_back({Box(x0, y0, x0 + w, y0 + h), cls, 0.3 + 0.7 * unit(rng)});
            }
        }
    }
    return scenes;
}

SampleGeometry geometry_from_scene(const Scene& scene, const ClassCatalog& catalog,
                                   double scene_diagonal) {
    if (scene_diagonal <= 0.0) {
        // Derive the sentinel from the envelope of every box in the scene.
        double x_lo = 0.0, y_lo = 0.0, x_hi = 1.0, y_hi = 1.0;
        bool first = true;
        auto extend = [&](const Box& b) {
            if (first) {
                x_lo = b.x_min;
                y_lo = b.y_min;
                x_hi = b.x_max;
                y_hi = b.y_max;
                first = false;
            } else {
                x_lo = std::min(x_lo, b.x_min);
                y_lo = std::min(y_lo, b.y_min);
                x_hi = std::max(x_hi, b.x_max);
                y_hi = std::max(y_hi, b.y_max);
            }
        };
        for (const auto& g : scene.ground_truth) extend(g.box);
        for (const auto& p : scene.predictions) extend(p.box);
        scene_diagonal = std::hypot(x_hi - x_lo, y_hi - y_lo);
        if (scene_diagonal <= 0.0) scene_diagonal = 1.0;
    }

    SampleGeometry geometry;
    geometry.distances.resize(static_cast<Eigen::Index>(scene.predictions.size()),
                              catalog.det_count());
    geometry.distances.setConstant(scene_diagonal);
    for (Eigen::Index i = 0; i < geometry.distances.rows(); ++i) {
        const auto& p = scene.predictions[static_cast<size_t>(i)];
        for (const auto& g : scene.ground_truth) {
            const double d =
                std::hypot(p.box.center_x() - g.box.center_x(), p.box.center_y() - g.box.center_y());
            double& cell = geometry.distances(i, g.class_id);
            cell = std::min(cell, d);
        }
    }
    return geometry;
}

}  // namespace reglab
