// Command-line front end: every library module exposed as a subcommand
// with JSON in, JSON/CSV/plain-text out, and deterministic seeds.
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "reglab/dataset.hpp"
#include "reglab/loss.hpp"
#include "reglab/metrics.hpp"
#include "reglab/optim.hpp"
#include "reglab/rebalance.hpp"
#include "reglab/synthgen.hpp"
#include "reglab/trainer.hpp"
#include "reglab/uncertainty.hpp"

using nlohmann::json;
using namespace reglab;

namespace {

// ---------------------------------------------------------------------- util

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed JSON in ") + path + ": " + e.what());
    }
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open output file: " + path);
    out << text;
    if (!text.empty() && text.back() != '\n') out << "\n";
}

void emit(const std::string& out_path, const std::string& text) {
    if (out_path.empty()) {
        std::cout << text << "\n";
    } else {
        write_text(out_path, text);
    }
}

Eigen::MatrixXd matrix_from_json(const json& j, const char* what) {
    if (!j.is_array() || j.empty() || !j[0].is_array()) {
        throw SchemaError(std::string(what) + " must be a non-empty array of rows");
    }
    const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
    const Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (static_cast<Eigen::Index>(j[i].size()) != cols) {
            throw SchemaError(std::string(what) + " rows have inconsistent lengths");
        }
        for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
    }
    return m;
}

json json_from_vector(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

int thread_cap(int requested) {
    if (const char* env = std::getenv("REGLAB_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1) return std::min(requested, cap);
    }
    return requested;
}

// Applies --config JSON values to any option the user did not pass
// explicitly on the command line: flags win over the file.
class ConfigOverlay {
  public:
    explicit ConfigOverlay(CLI::App* sub) : sub_(sub) {}

    template <typename T>
    void bind(const std::string& key, T* target) {
        appliers_.push_back([this, key, target](const json& config) {
            if (config.contains(key) && sub_->count("--" + key) == 0) {
                *target = config.at(key).get<T>();
            }
        });
    }

    void apply(const std::string& config_path) const {
        if (config_path.empty()) return;
        const json config = read_json_file(config_path);
        if (!config.is_object()) throw SchemaError("config file must be a JSON object");
        for (const auto& apply_one : appliers_) apply_one(config);
    }

  private:
    CLI::App* sub_;
    std::vector<std::function<void(const json&)>> appliers_;
};

// -------------------------------------------------------------- loss options

struct LossFlags {
    double gamma = 2.0;
    double beta = 1.0;
    double delta = 0.0;
    double lambda = 1.0;
    double sigma_sq = 0.0;
    std::string direction = "closer";
    bool all_class_sum = false;

    void add_to(CLI::App* sub, ConfigOverlay& overlay) {
        sub->add_option("--gamma", gamma, "Focusing exponent (>= 0)");
        sub->add_option("--beta", beta, "Refinement sharpness (> 0)");
        sub->add_option("--delta", delta, "Refinement distance threshold (>= 0)");
        sub->add_option("--lambda", lambda, "Detection/segmentation balance (>= 0)");
        sub->add_option("--sigma-sq", sigma_sq, "Prediction variance (>= 0)");
        sub->add_option("--direction", direction, "Refinement direction")
            ->check(CLI::IsMember({"closer", "farther"}));
        sub->add_flag("--all-class-sum", all_class_sum,
                      "Sum the focal term over every class, not just the target");
        overlay.bind("gamma", &gamma);
        overlay.bind("beta", &beta);
        overlay.bind("delta", &delta);
        overlay.bind("lambda", &lambda);
        overlay.bind("sigma-sq", &sigma_sq);
        overlay.bind("direction", &direction);
        overlay.bind("all-class-sum", &all_class_sum);
    }

    LossConfig to_config() const {
        LossConfig config;
        config.gamma = gamma;
        config.beta = beta;
        config.delta = delta;
        config.lambda_task = lambda;
        config.sigma_sq = sigma_sq;
        config.refinement_direction = direction == "farther"
                                          ? RefinementDirection::FartherIsHeavier
                                          : RefinementDirection::CloserIsHeavier;
        config.all_class_sum = all_class_sum;
        config.validate();
        return config;
    }
};

ClassWeights scheme_weights(const std::string& scheme, const AnnotationCounts& counts,
                            const std::vector<std::string>& class_order) {
    if (scheme == "uniform") {
        return ClassWeights::uniform(static_cast<Eigen::Index>(class_order.size()));
    }
    if (scheme == "inverse-frequency") return inverse_frequency_weights(counts, class_order);
    if (scheme == "inverse-frequency-normalized") {
        return normalized_inverse_frequency_weights(counts, class_order);
    }
    throw SchemaError("unknown weight scheme: " + scheme);
}

// ----------------------------------------------------------------- gen-data

struct GenDataArgs {
    std::string counts_path, config_path, out_path;
    int scenes = 10;
    std::uint64_t seed = 0;
    double image_width = 100.0, image_height = 100.0;
    double box_min = 2.0, box_max = 10.0;
    double noise_std = 0.0, confusion_rate = 0.0, miss_rate = 0.0, fp_rate = 0.0;
};

int run_gen_data(const GenDataArgs& args) {
    GeneratorConfig config;
    config.counts = load_counts(args.counts_path);
    config.scene_count = args.scenes;
    config.seed = args.seed;
    config.image_width = args.image_width;
    config.image_height = args.image_height;
    config.box_size_min = args.box_min;
    config.box_size_max = args.box_max;
    config.detector_quality = {args.noise_std, args.confusion_rate, args.miss_rate, args.fp_rate};

    const ClassCatalog catalog = ClassCatalog::highway_assets();
    const Dataset dataset{catalog, generate(config, catalog)};
    emit(args.out_path, serialize_dataset(dataset));
    return 0;
}

// ------------------------------------------------------------------ weights

int run_weights(const std::string& counts_path, const std::string& scheme,
                const std::string& out_path) {
    const AnnotationCounts counts = load_counts(counts_path);
    std::vector<std::string> class_order;
    for (const auto& [name, n] : counts.per_class) class_order.push_back(name);
    const ClassWeights weights = scheme_weights(scheme, counts, class_order);

    json out;
    out["scheme"] = scheme;
    out["total"] = counts.total;
    out["alpha"] = json::object();
    for (size_t i = 0; i < class_order.size(); ++i) {
        out["alpha"][class_order[i]] = weights.alpha(static_cast<Eigen::Index>(i));
    }
    emit(out_path, out.dump(2));
    return 0;
}

// ---------------------------------------------------------------- loss-eval

struct ParsedBatch {
    PredictionBatch batch;
    SampleGeometry geometry;
    bool has_geometry = false;
    ClassWeights weights;
};

ParsedBatch parse_batch_block(const json& block) {
    ParsedBatch out;
    if (!block.is_object()) throw SchemaError("batch block must be a JSON object");
    if (!block.contains("labels") || !block["labels"].is_array()) {
        throw SchemaError("batch requires a 'labels' array");
    }
    Eigen::VectorXi labels(static_cast<Eigen::Index>(block["labels"].size()));
    for (Eigen::Index i = 0; i < labels.size(); ++i) labels(i) = block["labels"][i].get<int>();

    if (block.contains("logits")) {
        out.batch = PredictionBatch::from_logits(matrix_from_json(block["logits"], "logits"),
                                                 labels);
    } else if (block.contains("probs")) {
        out.batch.probs = matrix_from_json(block["probs"], "probs");
        out.batch.labels = labels;
        out.batch.validate();
    } else {
        throw SchemaError("batch requires 'logits' or 'probs'");
    }

    if (block.contains("distances")) {
        out.geometry.distances = matrix_from_json(block["distances"], "distances");
        out.has_geometry = true;
    }
    if (block.contains("alpha")) {
        const auto& ja = block["alpha"];
        out.weights.alpha.resize(static_cast<Eigen::Index>(ja.size()));
        for (Eigen::Index i = 0; i < out.weights.alpha.size(); ++i) {
            out.weights.alpha(i) = ja[i].get<double>();
        }
    } else {
        out.weights = ClassWeights::uniform(out.batch.num_classes());
    }
    return out;
}

LossValue eval_block(const ParsedBatch& parsed, const LossConfig& config, bool uncertainty) {
    if (uncertainty) {
        if (!parsed.has_geometry) {
            throw MissingLogits("uncertainty evaluation requires 'distances' in the batch");
        }
        VariationalState state;
        state.mu = parsed.batch.probs;
        state.sigma_sq = Eigen::MatrixXd::Constant(parsed.batch.size(),
                                                   parsed.batch.num_classes(), config.sigma_sq);
        return reg_u_loss(state, parsed.batch.labels, parsed.geometry, parsed.weights, config);
    }
    if (parsed.has_geometry) {
        return reg_loss(parsed.batch, parsed.geometry, parsed.weights, config);
    }
    return gfl(parsed.batch, parsed.weights, config);
}

int run_loss_eval(const std::string& batch_path, const LossFlags& flags, bool uncertainty,
                  const std::string& out_path) {
    const json root = read_json_file(batch_path);
    const LossConfig config = flags.to_config();
    json out;
    if (root.contains("detection")) {
        const LossValue det = eval_block(parse_batch_block(root["detection"]), config, uncertainty);
        out["detection"] = {{"value", det.value}, {"per_sample", json_from_vector(det.per_sample)}};
        if (root.contains("segmentation")) {
            const LossValue seg =
                eval_block(parse_batch_block(root["segmentation"]), config, uncertainty);
            out["segmentation"] = {{"value", seg.value},
                                   {"per_sample", json_from_vector(seg.per_sample)}};
            out["loss"] = joint_loss(det, seg, config).value;
        } else {
            out["loss"] = det.value;
        }
    } else {
        const LossValue v = eval_block(parse_batch_block(root), config, uncertainty);
        out["loss"] = v.value;
        out["detection"] = {{"value", v.value}, {"per_sample", json_from_vector(v.per_sample)}};
    }
    emit(out_path, out.dump(2));
    return 0;
}

// --------------------------------------------------------------- grad-check

// Richardson-extrapolated central differences through the softmax.
Eigen::MatrixXd fd_gradient(const std::function<double(const PredictionBatch&)>& loss,
                            const Eigen::MatrixXd& logits, const Eigen::VectorXi& labels) {
    const double h = 1e-4;
    Eigen::MatrixXd grad(logits.rows(), logits.cols());
    Eigen::MatrixXd probe = logits;
    auto central = [&](Eigen::Index i, Eigen::Index j, double step) {
        probe(i, j) = logits(i, j) + step;
        const double hi = loss(PredictionBatch::from_logits(probe, labels));
        probe(i, j) = logits(i, j) - step;
        const double lo = loss(PredictionBatch::from_logits(probe, labels));
        probe(i, j) = logits(i, j);
        return (hi - lo) / (2.0 * step);
    };
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        for (Eigen::Index j = 0; j < logits.cols(); ++j) {
            grad(i, j) = (4.0 * central(i, j, h / 2.0) - central(i, j, h)) / 3.0;
        }
    }
    return grad;
}

int run_grad_check(std::uint64_t seed, int trials, const std::string& out_path) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> logit_dist(-3.0, 3.0);
    std::uniform_real_distribution<double> dist_dist(0.0, 5.0);
    const double gammas[] = {0.0, 0.5, 1.0, 2.0, 5.0};
    const double sigmas[] = {0.0, 0.01, 0.1};
    const std::pair<LossChoice, std::string> losses[] = {
        {LossChoice::GFL, "gfl"},
        {LossChoice::REG, "reg"},
        {LossChoice::WeightedCE, "weighted-ce"},
        {LossChoice::REG_U, "reg-u"},
    };

    std::map<std::string, double> worst;
    for (int trial = 0; trial < trials; ++trial) {
        const int n = 4, c = 3;
        Eigen::MatrixXd logits(n, c);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < c; ++j) logits(i, j) = logit_dist(rng);
        }
        Eigen::VectorXi labels(n);
        for (int i = 0; i < n; ++i) labels(i) = i % c;
        const PredictionBatch batch = PredictionBatch::from_logits(logits, labels);
        SampleGeometry geometry;
        geometry.distances.resize(n, c);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < c; ++j) geometry.distances(i, j) = dist_dist(rng);
        }
        ClassWeights weights;
        weights.alpha = Eigen::VectorXd::LinSpaced(c, 0.5, 2.0);
        LossConfig config;
        config.gamma = gammas[trial % 5];
        config.beta = 1.5;
        config.delta = 1.0;
        config.sigma_sq = sigmas[trial % 3];
        config.refinement_direction = (trial / 5) % 2 == 0 ? RefinementDirection::CloserIsHeavier
                                                           : RefinementDirection::FartherIsHeavier;

        for (const auto& [choice, name] : losses) {
            const Eigen::MatrixXd analytic =
                loss_logit_gradient(batch, choice, geometry, weights, config);
            const Eigen::MatrixXd fd = fd_gradient(
                [&](const PredictionBatch& b) {
                    return loss_value(b, choice, geometry, weights, config);
                },
                logits, labels);
            double err = 0.0;
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < c; ++j) {
                    const double denom =
                        std::max({std::abs(analytic(i, j)), std::abs(fd(i, j)), 1e-6});
                    err = std::max(err, std::abs(analytic(i, j) - fd(i, j)) / denom);
                }
            }
            worst[name] = std::max(worst[name], err);
        }
    }

    double overall = 0.0;
    json per_loss = json::object();
    for (const auto& [name, err] : worst) {
        per_loss[name] = err;
        overall = std::max(overall, err);
    }
    const double tolerance = 1e-5;
    json out = {{"trials", trials},
                {"seed", seed},
                {"max_rel_error", per_loss},
                {"overall", overall},
                {"tolerance", tolerance},
                {"pass", overall <= tolerance}};
    emit(out_path, out.dump(2));
    return overall <= tolerance ? 0 : 1;
}

// ----------------------------------------------------------------- optimize

int run_optimize(const std::string& algorithm, double eta0, const std::string& decay, long iters,
                 std::uint64_t seed, const std::string& out_path) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Schedule schedule{eta0, decay == "inverse-t" ? Decay::InverseT : Decay::Constant};
    json trace = json::array();
    json final_state;

    auto record = [&](long t, double loss, double residual, double norm) {
        trace.push_back(
            {{"t", t}, {"loss", loss}, {"residual", residual}, {"theta_norm", norm}});
    };

    if (algorithm == "sgd") {
        const int d = 5;
        Eigen::VectorXd target(d), start(d);
        for (int i = 0; i < d; ++i) {
            target(i) = normal(rng);
            start(i) = normal(rng);
        }
        ParameterVector params{start, Manifold::Euclidean};
        for (long t = 0; t < iters; ++t) {
            const Eigen::VectorXd grad = params.theta - target;
            record(t, 0.5 * grad.squaredNorm(), 0.0, params.theta.norm());
            params = sgd_step(params, grad, schedule);
        }
        final_state = {{"theta", json_from_vector(params.theta)},
                       {"distance_to_optimum", (params.theta - target).norm()}};
    } else if (algorithm == "rsgd") {
        const int d = 5;
        Eigen::VectorXd a(d), start(d);
        for (int i = 0; i < d; ++i) {
            a(i) = normal(rng);
            start(i) = normal(rng);
        }
        ParameterVector params{start.normalized(), Manifold::UnitSphere};
        for (long t = 0; t < iters; ++t) {
            record(t, a.dot(params.theta), std::abs(params.theta.norm() - 1.0),
                   params.theta.norm());
            params = rsgd_step(params, a, schedule);
        }
        final_state = {{"theta", json_from_vector(params.theta)},
                       {"optimum_gap", a.dot(params.theta) + a.norm()}};
    } else if (algorithm == "proxgrad") {
        const int n = 10, d = 5;
        Eigen::MatrixXd design(n, d);
        Eigen::VectorXd observations(n);
        // Rows scaled by 1/sqrt(n) keep the quadratic's Lipschitz constant
        // near 3, so the default step size converges.
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < d; ++j) design(i, j) = normal(rng) / std::sqrt(double(n));
            observations(i) = normal(rng);
        }
        const double reg_strength = 0.1;
        ParameterVector params{Eigen::VectorXd::Zero(d), Manifold::Euclidean};
        for (long t = 0; t < iters; ++t) {
            const Eigen::VectorXd residual_vec = design * params.theta - observations;
            const double loss =
                0.5 * residual_vec.squaredNorm() + reg_strength * params.theta.lpNorm<1>();
            record(t, loss, 0.0, params.theta.norm());
            params = prox_gradient_step(params, design.transpose() * residual_vec, schedule,
                                        reg_strength);
        }
        final_state = {{"theta", json_from_vector(params.theta)}};
    } else if (algorithm == "primaldual") {
        const int n = 20, c = 3;
        std::uniform_real_distribution<double> logit_dist(-3.0, 3.0);
        Eigen::MatrixXd logits(n, c);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < c; ++j) logits(i, j) = logit_dist(rng);
        }
        Eigen::VectorXi labels(n);
        for (int i = 0; i < n; ++i) labels(i) = i % c;
        const PredictionBatch batch = PredictionBatch::from_logits(logits, labels);
        LossConfig config;
        config.gamma = 2.0;
        auto objective = [&](const Eigen::VectorXd&, const Eigen::VectorXd& alpha) {
            ClassWeights w;
            w.alpha = alpha;
            return gfl(batch, w, config).value;
        };
        DualState state;
        state.alpha = Eigen::VectorXd::Constant(c, 1.0 / c);
        state.lambda_c = Eigen::VectorXd::Zero(c);
        for (long t = 0; t < iters; ++t) {
            record(t, objective({}, state.alpha), std::abs(state.alpha.sum() - 1.0),
                   state.alpha.norm());
            Schedule step = schedule;
            step.t = t;
            state.converged = false;
            state = primal_dual_solve(objective, std::move(state), step, 1, 0.0);
        }
        final_state = {{"alpha", json_from_vector(state.alpha)},
                       {"residual", std::abs(state.alpha.sum() - 1.0)}};
    } else {
        throw SchemaError("unknown algorithm: " + algorithm);
    }

    json out = {{"algorithm", algorithm}, {"eta0", eta0},     {"decay", decay},
                {"iterations", iters},    {"seed", seed},     {"trace", trace},
                {"final", final_state}};
    emit(out_path, out.dump(2));
    return 0;
}

// -------------------------------------------------------------------- train

struct TrainArgs {
    std::string proportions = "0.5,0.5";
    int n_train = 400, n_test = 400, feature_dim = 2;
    double separation = 4.0, eta0 = 0.3;
    std::string decay = "constant";
    int epochs = 60;
    std::uint64_t seed = 0;
    std::string loss = "ce";
    std::string scheme = "uniform";
    std::string out_path, csv_path;
};

LossChoice parse_loss_choice(const std::string& name) {
    if (name == "ce") return LossChoice::CE;
    if (name == "weighted-ce") return LossChoice::WeightedCE;
    if (name == "gfl") return LossChoice::GFL;
    if (name == "reg") return LossChoice::REG;
    if (name == "reg-u") return LossChoice::REG_U;
    throw SchemaError("unknown loss: " + name);
}

int run_train(const TrainArgs& args, const LossFlags& flags) {
    std::vector<double> props;
    std::stringstream ss(args.proportions);
    for (std::string item; std::getline(ss, item, ',');) props.push_back(std::stod(item));
    Eigen::VectorXd proportions(static_cast<Eigen::Index>(props.size()));
    for (size_t i = 0; i < props.size(); ++i) proportions(static_cast<Eigen::Index>(i)) = props[i];

    const ClassificationTask task = make_classification_task(
        proportions, args.n_train, args.n_test, args.feature_dim, args.separation, args.seed);

    const Eigen::Index c = proportions.size();
    std::map<std::string, long> class_counts;
    for (Eigen::Index i = 0; i < task.train.labels.size(); ++i) {
        class_counts["class_" + std::to_string(task.train.labels(i))] += 1;
    }
    std::vector<std::string> class_order;
    for (Eigen::Index j = 0; j < c; ++j) class_order.push_back("class_" + std::to_string(j));
    const ClassWeights weights =
        scheme_weights(args.scheme, AnnotationCounts::from_map(class_counts), class_order);

    ToyModel model = ToyModel::zeros(args.feature_dim, c);
    Schedule schedule{args.eta0,
                      args.decay == "inverse-t" ? Decay::InverseT : Decay::Constant};
    const TrainReport report = train(model, task, parse_loss_choice(args.loss), weights,
                                     flags.to_config(), schedule, args.epochs, args.seed);

    json out;
    out["loss"] = args.loss;
    out["scheme"] = args.scheme;
    out["seed"] = args.seed;
    out["epochs"] = json::array();
    for (const EpochRecord& e : report.per_epoch) {
        out["epochs"].push_back({{"epoch", e.epoch},
                                 {"loss", e.loss},
                                 {"per_class_error", json_from_vector(e.per_class_error)}});
    }
    out["final"] = {{"precision", json_from_vector(report.final_precision)},
                    {"recall", json_from_vector(report.final_recall)},
                    {"f1", json_from_vector(report.final_f1)}};
    emit(args.out_path, out.dump(2));

    if (!args.csv_path.empty()) {
        std::ostringstream csv;
        csv << "epoch,loss";
        for (Eigen::Index j = 0; j < c; ++j) csv << ",error_class_" << j;
        csv << "\n";
        for (const EpochRecord& e : report.per_epoch) {
            csv << e.epoch << "," << e.loss;
            for (Eigen::Index j = 0; j < c; ++j) csv << "," << e.per_class_error(j);
            csv << "\n";
        }
        write_text(args.csv_path, csv.str());
    }
    return 0;
}

// ----------------------------------------------------------------- evaluate

std::string render_metric_table(const json& report) {
    std::ostringstream out;
    char line[256];
    std::snprintf(line, sizeof(line), "%-22s %9s %9s %9s %9s %9s\n", "Class", "P", "R", "F1",
                  "mAP50", "mAP50-95");
    out << line;
    out << std::string(72, '-') << "\n";
    auto row = [&](const std::string& name, const json& m) {
        std::snprintf(line, sizeof(line), "%-22s %9.4f %9.4f %9.4f %9.4f %9.4f\n", name.c_str(),
                      m["precision"].get<double>(), m["recall"].get<double>(),
                      m["f1"].get<double>(), m["ap50"].get<double>(), m["ap50_95"].get<double>());
        out << line;
    };
    for (const auto& [name, m] : report["per_class"].items()) row(name, m);
    out << std::string(72, '-') << "\n";
    row("macro", report["macro"]);
    return out.str();
}

json metrics_to_json(const ClassMetrics& m) {
    return {{"precision", m.precision},
            {"recall", m.recall},
            {"f1", m.f1},
            {"ap50", m.ap50},
            {"ap50_95", m.ap50_95}};
}

int run_evaluate(const std::string& data_path, double threshold, double confidence_threshold,
                 const std::string& ap_variant, int threads, const std::string& out_path,
                 const std::string& table_path) {
    const Dataset dataset = load_dataset(data_path);
    EvaluationOptions options;
    options.iou_threshold = threshold;
    options.confidence_threshold = confidence_threshold;
    options.ap_variant = ap_variant == "all-point" ? ApVariant::AllPoint : ApVariant::Ranked;
    options.threads = thread_cap(threads);
    const MetricReport report = map_range(dataset.scenes, dataset.catalog.det_count(), options);

    json out;
    out["iou_threshold"] = threshold;
    out["ap_variant"] = ap_variant;
    out["per_class"] = json::object();
    for (const auto& [class_id, m] : report.per_class) {
        out["per_class"][dataset.catalog.detection_classes.at(static_cast<size_t>(class_id))] =
            metrics_to_json(m);
    }
    out["macro"] = metrics_to_json(report.macro);
    emit(out_path, out.dump(2));

    const std::string table = render_metric_table(out);
    if (table_path.empty()) {
        if (!out_path.empty()) std::cout << table;
    } else {
        write_text(table_path, table);
    }
    return 0;
}

// ------------------------------------------------------------------- report

std::string render_train_table(const json& report) {
    std::ostringstream out;
    char line[256];
    const json& final = report["final"];
    std::snprintf(line, sizeof(line), "%-12s %9s %9s %9s\n", "Class", "P", "R", "F1");
    out << line;
    out << std::string(42, '-') << "\n";
    const size_t c = final["precision"].size();
    for (size_t j = 0; j < c; ++j) {
        std::snprintf(line, sizeof(line), "%-12zu %9.4f %9.4f %9.4f\n", j,
                      final["precision"][j].get<double>(), final["recall"][j].get<double>(),
                      final["f1"][j].get<double>());
        out << line;
    }
    if (report.contains("epochs") && !report["epochs"].empty()) {
        const json& last = report["epochs"].back();
        std::snprintf(line, sizeof(line), "\nfinal loss after %d epochs: %.6f\n",
                      last["epoch"].get<int>() + 1, last["loss"].get<double>());
        out << line;
    }
    return out.str();
}

int run_report(const std::string& in_path, const std::string& out_path) {
    const json report = read_json_file(in_path);
    std::string table;
    if (report.contains("per_class") && report.contains("macro")) {
        table = render_metric_table(report);
    } else if (report.contains("final")) {
        table = render_train_table(report);
    } else {
        throw SchemaError("unrecognized report JSON: expected evaluation or training output");
    }
    emit(out_path, table);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical laboratory for refined focal losses, rebalancing, and "
                 "detection-style evaluation"};
    app.require_subcommand(1);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic scene dataset");
    GenDataArgs gen_args;
    std::string gen_config;
    ConfigOverlay gen_overlay(gen);
    gen->add_option("--counts", gen_args.counts_path, "Per-class annotation counts JSON");
    gen->add_option("--scenes", gen_args.scenes, "Number of scenes");
    gen->add_option("--seed", gen_args.seed, "RNG seed");
    gen->add_option("--image-width", gen_args.image_width, "Scene width");
    gen->add_option("--image-height", gen_args.image_height, "Scene height");
    gen->add_option("--box-min", gen_args.box_min, "Minimum box side");
    gen->add_option("--box-max", gen_args.box_max, "Maximum box side");
    gen->add_option("--noise-std", gen_args.noise_std, "Box corner jitter std");
    gen->add_option("--confusion-rate", gen_args.confusion_rate, "Class flip probability");
    gen->add_option("--miss-rate", gen_args.miss_rate, "Missed ground-truth probability");
    gen->add_option("--fp-rate", gen_args.fp_rate, "Expected false positives per scene");
    gen->add_option("--config", gen_config, "JSON config file (flags win)");
    gen->add_option("--out", gen_args.out_path, "Output dataset JSON path");
    gen_overlay.bind("counts", &gen_args.counts_path);
    gen_overlay.bind("scenes", &gen_args.scenes);
    gen_overlay.bind("image-width", &gen_args.image_width);
    gen_overlay.bind("image-height", &gen_args.image_height);
    gen_overlay.bind("box-min", &gen_args.box_min);
    gen_overlay.bind("box-max", &gen_args.box_max);
    gen_overlay.bind("noise-std", &gen_args.noise_std);
    gen_overlay.bind("confusion-rate", &gen_args.confusion_rate);
    gen_overlay.bind("miss-rate", &gen_args.miss_rate);
    gen_overlay.bind("fp-rate", &gen_args.fp_rate);

    // weights
    auto* weights_cmd = app.add_subcommand("weights", "Class-balancing weights from counts");
    std::string weights_counts, weights_scheme = "inverse-frequency-normalized", weights_out;
    weights_cmd->add_option("--counts", weights_counts, "Counts JSON path")->required();
    weights_cmd->add_option("--scheme", weights_scheme, "Weight scheme")
        ->check(CLI::IsMember({"uniform", "inverse-frequency", "inverse-frequency-normalized"}));
    weights_cmd->add_option("--out", weights_out, "Output JSON path (stdout if omitted)");

    // loss-eval
    auto* loss_cmd = app.add_subcommand("loss-eval", "Evaluate a loss on a batch JSON");
    std::string loss_batch, loss_out, loss_config;
    bool loss_uncertainty = false;
    ConfigOverlay loss_overlay(loss_cmd);
    LossFlags loss_flags;
    loss_cmd->add_option("--batch", loss_batch, "Batch JSON path")->required();
    loss_flags.add_to(loss_cmd, loss_overlay);
    loss_cmd->add_flag("--uncertainty", loss_uncertainty,
                       "Evaluate at variance-marginalized probabilities");
    loss_cmd->add_option("--config", loss_config, "JSON config file (flags win)");
    loss_cmd->add_option("--out", loss_out, "Output JSON path (stdout if omitted)");

    // grad-check
    auto* grad_cmd = app.add_subcommand("grad-check", "Finite-difference gradient audit");
    std::uint64_t grad_seed = 0;
    int grad_trials = 100;
    std::string grad_out;
    grad_cmd->add_option("--seed", grad_seed, "RNG seed");
    grad_cmd->add_option("--trials", grad_trials, "Random instances per loss")
        ->check(CLI::PositiveNumber);
    grad_cmd->add_option("--out", grad_out, "Output JSON path (stdout if omitted)");

    // optimize
    auto* opt_cmd = app.add_subcommand("optimize", "Run an optimizer on its toy problem");
    std::string opt_algorithm = "sgd", opt_decay = "constant", opt_out, opt_config;
    double opt_eta0 = 0.1;
    long opt_iters = 100;
    std::uint64_t opt_seed = 0;
    ConfigOverlay opt_overlay(opt_cmd);
    opt_cmd->add_option("--algorithm", opt_algorithm, "Optimizer")
        ->check(CLI::IsMember({"sgd", "rsgd", "proxgrad", "primaldual"}));
    opt_cmd->add_option("--eta0", opt_eta0, "Initial step size");
    opt_cmd->add_option("--decay", opt_decay, "Step-size decay")
        ->check(CLI::IsMember({"constant", "inverse-t"}));
    opt_cmd->add_option("--iters", opt_iters, "Iterations")->check(CLI::PositiveNumber);
    opt_cmd->add_option("--seed", opt_seed, "RNG seed");
    opt_cmd->add_option("--config", opt_config, "JSON config file (flags win)");
    opt_cmd->add_option("--out", opt_out, "Output JSON path (stdout if omitted)");
    opt_overlay.bind("algorithm", &opt_algorithm);
    opt_overlay.bind("eta0", &opt_eta0);
    opt_overlay.bind("decay", &opt_decay);
    opt_overlay.bind("iters", &opt_iters);

    // train
    auto* train_cmd = app.add_subcommand("train", "Train the linear toy classifier");
    TrainArgs train_args;
    std::string train_config;
    ConfigOverlay train_overlay(train_cmd);
    LossFlags train_flags;
    train_cmd->add_option("--proportions", train_args.proportions,
                          "Comma-separated class proportions (sum to 1)");
    train_cmd->add_option("--n-train", train_args.n_train, "Training samples");
    train_cmd->add_option("--n-test", train_args.n_test, "Held-out samples");
    train_cmd->add_option("--feature-dim", train_args.feature_dim, "Feature dimension");
    train_cmd->add_option("--separation", train_args.separation, "Cluster mean separation");
    train_cmd->add_option("--eta0", train_args.eta0, "Initial step size");
    train_cmd->add_option("--decay", train_args.decay, "Step-size decay")
        ->check(CLI::IsMember({"constant", "inverse-t"}));
    train_cmd->add_option("--epochs", train_args.epochs, "Epochs")->check(CLI::PositiveNumber);
    train_cmd->add_option("--seed", train_args.seed, "RNG seed");
    train_cmd->add_option("--loss", train_args.loss, "Training loss")
        ->check(CLI::IsMember({"ce", "weighted-ce", "gfl", "reg", "reg-u"}));
    train_cmd->add_option("--scheme", train_args.scheme, "Class-weight scheme")
        ->check(CLI::IsMember({"uniform", "inverse-frequency", "inverse-frequency-normalized"}));
    train_flags.add_to(train_cmd, train_overlay);
    train_cmd->add_option("--config", train_config, "JSON config file (flags win)");
    train_cmd->add_option("--out", train_args.out_path, "Report JSON path (stdout if omitted)");
    train_cmd->add_option("--csv", train_args.csv_path, "Per-epoch error CSV path");
    train_overlay.bind("proportions", &train_args.proportions);
    train_overlay.bind("n-train", &train_args.n_train);
    train_overlay.bind("n-test", &train_args.n_test);
    train_overlay.bind("feature-dim", &train_args.feature_dim);
    train_overlay.bind("separation", &train_args.separation);
    train_overlay.bind("eta0", &train_args.eta0);
    train_overlay.bind("epochs", &train_args.epochs);
    train_overlay.bind("loss", &train_args.loss);
    train_overlay.bind("scheme", &train_args.scheme);

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "Detection metrics over a dataset JSON");
    std::string eval_data, eval_variant = "ranked", eval_out, eval_table;
    double eval_threshold = 0.5, eval_conf = -1.0;
    int eval_threads = static_cast<int>(std::thread::hardware_concurrency());
    eval_cmd->add_option("--data", eval_data, "Dataset JSON path")->required();
    eval_cmd->add_option("--threshold", eval_threshold, "IoU match threshold");
    eval_cmd->add_option("--confidence-threshold", eval_conf,
                         "Confidence cutoff for P/R/F1 (negative = none)");
    eval_cmd->add_option("--ap-variant", eval_variant, "AP definition")
        ->check(CLI::IsMember({"ranked", "all-point"}));
    eval_cmd->add_option("--threads", eval_threads, "Worker threads (capped by REGLAB_THREADS)");
    eval_cmd->add_option("--out", eval_out, "Report JSON path (stdout if omitted)");
    eval_cmd->add_option("--table", eval_table, "Plain-text table path (stdout if omitted)");

    // report
    auto* report_cmd = app.add_subcommand("report", "Render a report JSON as a text table");
    std::string report_in, report_out;
    report_cmd->add_option("--in", report_in, "Evaluation or training report JSON")->required();
    report_cmd->add_option("--out", report_out, "Table output path (stdout if omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (app.got_subcommand(gen)) {
            gen_overlay.apply(gen_config);
            if (gen_args.counts_path.empty()) {
                throw SchemaError("gen-data requires --counts (flag or config)");
            }
            return run_gen_data(gen_args);
        }
        if (app.got_subcommand(weights_cmd)) {
            return run_weights(weights_counts, weights_scheme, weights_out);
        }
        if (app.got_subcommand(loss_cmd)) {
            loss_overlay.apply(loss_config);
            return run_loss_eval(loss_batch, loss_flags, loss_uncertainty, loss_out);
        }
        if (app.got_subcommand(grad_cmd)) {
            return run_grad_check(grad_seed, grad_trials, grad_out);
        }
        if (app.got_subcommand(opt_cmd)) {
            opt_overlay.apply(opt_config);
            return run_optimize(opt_algorithm, opt_eta0, opt_decay, opt_iters, opt_seed, opt_out);
        }
        if (app.got_subcommand(train_cmd)) {
            train_overlay.apply(train_config);
            return run_train(train_args, train_flags);
        }
        if (app.got_subcommand(eval_cmd)) {
            return run_evaluate(eval_data, eval_threshold, eval_conf, eval_variant, eval_threads,
                                eval_out, eval_table);
        }
        if (app.got_subcommand(report_cmd)) {
            return run_report(report_in, report_out);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
