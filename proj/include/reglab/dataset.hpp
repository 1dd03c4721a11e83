#ifndef REGLAB_DATASET_HPP
#define REGLAB_DATASET_HPP

#include <string>
#include <vector>

#include "reglab/types.hpp"

namespace reglab {

struct Dataset {
    ClassCatalog catalog;
    std::vector<Scene> scenes;
};

// Parses a dataset JSON file. Scenes are returned sorted by scene_id.
// Throws ParseError, SchemaError, or GeometryError.
Dataset load_dataset(const std::string& path);
Dataset parse_dataset(const std::string& json_text);

std::string serialize_dataset(const Dataset& dataset);
void save_dataset(const Dataset& dataset, const std::string& path);

// Ground-truth annotations per detection class.
AnnotationCounts summarize_counts(const std::vector<Scene>& scenes, const ClassCatalog& catalog);

// Counts fixture: a flat JSON map from class name to non-negative integer.
AnnotationCounts load_counts(const std::string& path);
std::string serialize_counts(const AnnotationCounts& counts);

}  // namespace reglab

#endif
