#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "reglab/dataset.hpp"

using nlohmann::json;

namespace {

const std::string kCli = REGLAB_CLI_PATH;
const std::string kFixtures = REGLAB_FIXTURES_DIR;
const std::string kSchemas = REGLAB_SCHEMAS_DIR;

std::filesystem::path work_dir() {
    const auto dir = std::filesystem::temp_directory_path() / "reglab_cli_test";
    std::filesystem::create_directories(dir);
    return dir;
}

int run(const std::string& args) {
    const int status = std::system((kCli + " " + args + " > /dev/null 2>&1").c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json load(const std::filesystem::path& path) { return json::parse(slurp(path)); }

// Minimal structural JSON-schema checker covering the subset the shipped
// schemas use: type, required, properties, items, additionalProperties.
bool type_matches(const json& instance, const std::string& type) {
    if (type == "object") return instance.is_object();
    if (type == "array") return instance.is_array();
    if (type == "string") return instance.is_string();
    if (type == "boolean") return instance.is_boolean();
    if (type == "integer") return instance.is_number_integer() || instance.is_number_unsigned();
    if (type == "number") return instance.is_number();
    return false;
}

void check_schema(const json& schema, const json& instance, const std::string& where) {
    INFO("at ", where);
    if (schema.contains("type")) {
        CHECK(type_matches(instance, schema["type"].get<std::string>()));
    }
    if (schema.contains("required")) {
        for (const auto& key : schema["required"]) {
            INFO("missing key ", key.get<std::string>());
            CHECK(instance.contains(key.get<std::string>()));
        }
    }
    if (instance.is_object()) {
        const json props = schema.value("properties", json::object());
        for (const auto& [key, value] : instance.items()) {
            if (props.contains(key)) {
                check_schema(props[key], value, where + "." + key);
            } else if (schema.contains("additionalProperties") &&
                       schema["additionalProperties"].is_object()) {
                check_schema(schema["additionalProperties"], value, where + "." + key);
            }
        }
    }
    if (instance.is_array() && schema.contains("items")) {
        for (size_t i = 0; i < instance.size(); ++i) {
            check_schema(schema["items"], instance[i], where + "[" + std::to_string(i) + "]");
        }
    }
}

void check_against(const std::string& schema_name, const json& instance) {
    check_schema(json::parse(slurp(kSchemas + "/" + schema_name)), instance, "$");
}

}  // namespace

TEST_CASE("usage errors exit 2") {
    CHECK(run("") == 2);
    CHECK(run("frobnicate") == 2);
    CHECK(run("optimize --algorithm bogus") == 2);
    CHECK(run("evaluate") == 2);  // missing required --data
}

TEST_CASE("domain errors exit 1 with a diagnostic") {
    CHECK(run("weights --counts /no/such/file.json") == 1);
    const auto bad = work_dir() / "bad.json";
    std::ofstream(bad) << "{\"not\": \"a dataset\"}";
    CHECK(run("evaluate --data " + bad.string()) == 1);
}

TEST_CASE("weights reproduces the inventory ratios and validates its schema") {
    const auto out = work_dir() / "weights.json";
    CHECK(run("weights --counts " + kFixtures + "/appendix_counts.json"
              " --scheme inverse-frequency --out " + out.string()) == 0);
    const json w = load(out);
    check_against("weights.schema.json", w);
    CHECK(w["alpha"]["Bus stops"].get<double>() == 73.0);
    CHECK(std::abs(w["alpha"]["Single-arm poles"].get<double>() - 3650.0 / 1500.0) <= 1e-12);
    CHECK(w["total"].get<long>() == 3650);

    // Default scheme is the normalized variant.
    CHECK(run("weights --counts " + kFixtures + "/appendix_counts.json --out " + out.string()) ==
          0);
    CHECK(load(out)["scheme"] == "inverse-frequency-normalized");
}

TEST_CASE("gen-data is seed-reproducible and loads back with the right totals") {
    const auto a = work_dir() / "ds_a.json";
    const auto b = work_dir() / "ds_b.json";
    const std::string base = "gen-data --counts " + kFixtures +
                             "/appendix_counts.json --scenes 25 --seed 42 --out ";
    CHECK(run(base + a.string()) == 0);
    CHECK(run(base + b.string()) == 0);
    CHECK(slurp(a) == slurp(b));
    check_against("dataset.schema.json", load(a));

    const reglab::Dataset dataset = reglab::load_dataset(a.string());
    CHECK(reglab::summarize_counts(dataset.scenes, dataset.catalog).total == 3650);
}

TEST_CASE("evaluate writes a schema-valid report scoring the noiseless detector 1.0") {
    const auto ds = work_dir() / "ds_eval.json";
    const auto report = work_dir() / "report.json";
    const auto table = work_dir() / "table.txt";
    CHECK(run("gen-data --counts " + kFixtures + "/appendix_seg_counts.json --scenes 10"
              " --seed 1 --out " + ds.string()) == 0);
    CHECK(run("evaluate --data " + ds.string() + " --out " + report.string() + " --table " +
              table.string()) == 0);
    const json r = load(report);
    check_against("metric_report.schema.json", r);
    CHECK(r["macro"]["ap50_95"].get<double>() == 1.0);
    CHECK(r["macro"]["f1"].get<double>() == 1.0);
    const std::string rendered = slurp(table);
    CHECK(rendered.find("mAP50-95") != std::string::npos);
    CHECK(rendered.find("macro") != std::string::npos);

    // report re-renders the JSON into the same table.
    const auto table2 = work_dir() / "table2.txt";
    CHECK(run("report --in " + report.string() + " --out " + table2.string()) == 0);
    CHECK(slurp(table2) == rendered);
}

TEST_CASE("grad-check passes at the documented tolerance") {
    const auto out = work_dir() / "grad.json";
    CHECK(run("grad-check --seed 7 --trials 100 --out " + out.string()) == 0);
    const json g = load(out);
    check_against("grad_check.schema.json", g);
    CHECK(g["pass"].get<bool>());
    CHECK(g["overall"].get<double>() <= 1e-5);
}

TEST_CASE("loss-eval combines detection and segmentation with the lambda flag") {
    const auto batch = work_dir() / "batch.json";
    std::ofstream(batch) << R"({
        "detection": {"logits": [[2.0, -1.0], [0.1, 1.5]], "labels": [0, 1],
                      "distances": [[0.5, 2.0], [1.0, 0.2]]},
        "segmentation": {"logits": [[1.0, 0.0], [0.0, 1.0]], "labels": [0, 1]}
    })";
    const auto out = work_dir() / "loss.json";
    CHECK(run("loss-eval --batch " + batch.string() + " --gamma 2 --beta 1.5 --delta 1"
              " --lambda 0.5 --out " + out.string()) == 0);
    const json v = load(out);
    check_against("loss_eval.schema.json", v);
    const double det = v["detection"]["value"].get<double>();
    const double seg = v["segmentation"]["value"].get<double>();
    CHECK(v["loss"].get<double>() == doctest::Approx(det + 0.5 * seg).epsilon(1e-12));

    // lambda = 0 leaves exactly the detection loss.
    CHECK(run("loss-eval --batch " + batch.string() + " --gamma 2 --lambda 0 --out " +
              out.string()) == 0);
    const json v0 = load(out);
    CHECK(v0["loss"].get<double>() == v0["detection"]["value"].get<double>());
}

TEST_CASE("optimize emits a schema-valid trace that reaches feasibility") {
    const auto out = work_dir() / "opt.json";
    CHECK(run("optimize --algorithm primaldual --iters 40 --eta0 0.05 --seed 3 --out " +
              out.string()) == 0);
    const json o = load(out);
    check_against("optimize_trace.schema.json", o);
    CHECK(o["trace"].size() == 40);
    CHECK(o["final"]["residual"].get<double>() <= 1e-6);

    for (const std::string alg : {"sgd", "rsgd", "proxgrad"}) {
        CHECK(run("optimize --algorithm " + alg + " --iters 30 --seed 3 --out " + out.string()) ==
              0);
        check_against("optimize_trace.schema.json", load(out));
    }
}

TEST_CASE("train writes schema-valid JSON plus a CSV, reproducibly") {
    const auto out_a = work_dir() / "train_a.json";
    const auto out_b = work_dir() / "train_b.json";
    const auto csv = work_dir() / "train.csv";
    const std::string base = "train --proportions 0.9,0.1 --loss weighted-ce"
                             " --scheme inverse-frequency --epochs 15 --seed 5 --csv " +
                             csv.string() + " --out ";
    CHECK(run(base + out_a.string()) == 0);
    CHECK(run(base + out_b.string()) == 0);
    CHECK(slurp(out_a) == slurp(out_b));
    const json t = load(out_a);
    check_against("train_report.schema.json", t);
    CHECK(t["epochs"].size() == 15);

    std::ifstream csv_in(csv);
    std::string header;
    std::getline(csv_in, header);
    CHECK(header == "epoch,loss,error_class_0,error_class_1");
    int rows = 0;
    for (std::string line; std::getline(csv_in, line);) {
        if (!line.empty()) ++rows;
    }
    CHECK(rows == 15);
}

TEST_CASE("config file values apply where flags are absent and lose where present") {
    const auto config = work_dir() / "gen.json";
    std::ofstream(config) << R"({"scenes": 7, "miss-rate": 0.2, "counts": ")" << kFixtures
                          << R"(/appendix_seg_counts.json"})";
    const auto out = work_dir() / "ds_config.json";
    CHECK(run("gen-data --config " + config.string() + " --seed 2 --out " + out.string()) == 0);
    CHECK(load(out)["scenes"].size() == 7);

    // --scenes on the command line beats the config file.
    CHECK(run("gen-data --config " + config.string() + " --scenes 3 --seed 2 --out " +
              out.string()) == 0);
    CHECK(load(out)["scenes"].size() == 3);
}
