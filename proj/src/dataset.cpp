#include "reglab/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace reglab {

using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

double require_finite(const json& j, const char* what) {
    if (!j.is_number()) throw SchemaError(std::string("expected number for ") + what);
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw SchemaError(std::string("non-finite value for ") + what);
    return v;
}

Box parse_box(const json& j) {
    if (!j.is_array() || j.size() != 4) {
        throw SchemaError("box must be [x_min, y_min, x_max, y_max]");
    }
    return Box(require_finite(j[0], "box"), require_finite(j[1], "box"),
               require_finite(j[2], "box"), require_finite(j[3], "box"));
}

int parse_class(const json& j, const ClassCatalog& catalog) {
    if (!j.is_string()) throw SchemaError("class must be a catalog name string");
    const int idx = catalog.detection_index(j.get<std::string>());
    if (idx < 0) throw SchemaError("unknown class name: " + j.get<std::string>());
    return idx;
}

}  // namespace

Dataset parse_dataset(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what());
    }
    if (!root.is_object() || !root.contains("catalog") || !root.contains("scenes")) {
        throw SchemaError("dataset requires 'catalog' and 'scenes'");
    }

    Dataset out;
    const json& cat = root["catalog"];
    if (!cat.contains("detection_classes") || !cat.contains("segmentation_classes")) {
        throw SchemaError("catalog requires 'detection_classes' and 'segmentation_classes'");
    }
    out.catalog.detection_classes = cat["detection_classes"].get<std::vector<std::string>>();
    out.catalog.segmentation_classes = cat["segmentation_classes"].get<std::vector<std::string>>();
    out.catalog.validate();

    for (const json& js : root["scenes"]) {
        Scene scene;
        if (!js.contains("scene_id") || !js["scene_id"].is_string()) {
            throw SchemaError("scene requires string 'scene_id'");
        }
        scene.scene_id = js["scene_id"].get<std::string>();
        if (!js.contains("ground_truth") || !js["ground_truth"].is_array()) {
            throw SchemaError("scene requires 'ground_truth' array");
        }
        for (const json& jg : js["ground_truth"]) {
            if (!jg.contains("box") || !jg.contains("class")) {
                throw SchemaError("ground truth entry requires 'box' and 'class'");
            }
            scene.ground_truth.push_back({parse_box(jg["box"]), parse_class(jg["class"], out.catalog)});
        }
        if (js.contains("predictions")) {
            for (const json& jp : js["predictions"]) {
                if (!jp.contains("box") || !jp.contains("class") || !jp.contains("confidence")) {
                    throw SchemaError("prediction entry requires 'box', 'class', 'confidence'");
                }
                const double conf = require_finite(jp["confidence"], "confidence");
                if (conf < 0.0 || conf > 1.0) throw SchemaError("confidence outside [0, 1]");
                scene.predictions.push_back(
                    {parse_box(jp["box"]), parse_class(jp["class"], out.catalog), conf});
            }
        }
        out.scenes.push_back(std::move(scene));
    }
    std::sort(out.scenes.begin(), out.scenes.end(),
              [](const Scene& a, const Scene& b) { return a.scene_id < b.scene_id; });
    return out;
}

Dataset load_dataset(const std::string& path) { return parse_dataset(read_file(path)); }

std::string serialize_dataset(const Dataset& dataset) {
    json root;
    root["catalog"]["detection_classes"] = dataset.catalog.detection_classes;
    root["catalog"]["segmentation_classes"] = dataset.catalog.segmentation_classes;
    root["scenes"] = json::array();
    for (const Scene& s : dataset.scenes) {
        json js;
        js["scene_id"] = s.scene_id;
        js["ground_truth"] = json::array();
        for (const auto& g : s.ground_truth) {
            js["ground_truth"].push_back(
                {{"box", {g.box.x_min, g.box.y_min, g.box.x_max, g.box.y_max}},
                 {"class", dataset.catalog.detection_classes.at(g.class_id)}});
        }
        js["predictions"] = json::array();
        for (const auto& p : s.predictions) {
            js["predictions"].push_back(
                {{"box", {p.box.x_min, p.box.y_min, p.box.x_max, p.box.y_max}},
                 {"class", dataset.catalog.detection_classes.at(p.class_id)},
                 {"confidence", p.confidence}});
        }
        root["scenes"].push_back(std::move(js));
    }
    return root.dump(2);
}

void save_dataset(const Dataset& dataset, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open output file: " + path);
    out << serialize_dataset(dataset) << "\n";
}

AnnotationCounts summarize_counts(const std::vector<Scene>& scenes, const ClassCatalog& catalog) {
    std::map<std::string, long> counts;
    for (const auto& name : catalog.detection_classes) counts[name] = 0;
    for (const Scene& s : scenes) {
        for (const auto& g : s.ground_truth) {
            counts[catalog.detection_classes.at(g.class_id)] += 1;
        }
    }
    return AnnotationCounts::from_map(counts);
}

AnnotationCounts load_counts(const std::string& path) {
    json root;
    try {
        root = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what());
    }
    if (!root.is_object()) throw SchemaError("counts file must be a JSON object");
    std::map<std::string, long> counts;
    for (auto it = root.begin(); it != root.end(); ++it) {
        if (!it.value().is_number_integer()) {
            throw SchemaError("count must be an integer for class: " + it.key());
        }
        counts[it.key()] = it.value().get<long>();
    }
    return AnnotationCounts::from_map(counts);
}

std::string serialize_counts(const AnnotationCounts& counts) {
    json root = json::object();
    for (const auto& [name, n] : counts.per_class) root[name] = n;
    return root.dump(2);
}

}  // namespace reglab
