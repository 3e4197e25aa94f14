#include "sketchid/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sketchid/hash.hpp"

namespace sketchid {

namespace {

using json = nlohmann::ordered_json;

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw usage_error("config section '" + where + "' must be an object");
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!allowed.count(key)) throw usage_error("unknown config key '" + where + "." + key + "'");
    }
}

template <typename T>
void read(const json& j, const char* key, T& into) {
    if (j.contains(key)) into = j.at(key).get<T>();
}

}  // namespace

void RunConfig::validate() const {
    if (kernels != "auto" && kernels != "scalar" && kernels != "avx2")
        throw usage_error("kernels must be auto, scalar or avx2");
    if (backbone != "desk" && backbone != "paper" && backbone != "tiny")
        throw usage_error("backbone must be desk, paper or tiny");
    if (threads < 0) throw usage_error("threads must be >= 0");
    train.validate();
    xdog.validate();
    // protocol manifests are resolved per command; only the numeric fields can
    // be checked here
    if (protocol.folds < 1) throw usage_error("protocol.folds must be >= 1");
    if (!(protocol.train_fraction > 0.0 && protocol.train_fraction < 1.0))
        throw usage_error("protocol.train_fraction must be in (0,1)");
    if (synth.identities < 2) throw usage_error("synth.identities must be >= 2");
}

RunConfig default_run_config() { return RunConfig{}; }

RunConfig parse_run_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw usage_error(std::string("config is not valid JSON: ") + e.what());
    }

    RunConfig cfg;
    try {
        reject_unknown(j, {"seed", "threads", "kernels", "backbone", "train", "protocol", "synth", "xdog"},
                       "config");
        read(j, "seed", cfg.seed);
        read(j, "threads", cfg.threads);
        read(j, "kernels", cfg.kernels);
        read(j, "backbone", cfg.backbone);

        if (j.contains("train")) {
            const json& t = j.at("train");
            reject_unknown(t,
                           {"learning_rate", "momentum", "batch_size", "epochs", "use_attributes", "weights",
                            "contrastive", "augment"},
                           "train");
            read(t, "learning_rate", cfg.train.learning_rate);
            read(t, "momentum", cfg.train.momentum);
            read(t, "batch_size", cfg.train.batch_size);
            read(t, "epochs", cfg.train.epochs);
            read(t, "use_attributes", cfg.train.use_attributes);
            if (t.contains("weights")) {
                reject_unknown(t.at("weights"), {"lambda1", "lambda2"}, "train.weights");
                read(t.at("weights"), "lambda1", cfg.train.weights.lambda1);
                read(t.at("weights"), "lambda2", cfg.train.weights.lambda2);
            }
            if (t.contains("contrastive")) {
                reject_unknown(t.at("contrastive"), {"margin"}, "train.contrastive");
                read(t.at("contrastive"), "margin", cfg.train.contrastive.margin);
            }
            if (t.contains("augment")) {
                const json& a = t.at("augment");
                reject_unknown(a,
                               {"num_control_points", "max_displacement", "scale_min", "scale_max",
                                "crop_height", "crop_width", "flip_probability"},
                               "train.augment");
                read(a, "num_control_points", cfg.train.augment.num_control_points);
                read(a, "max_displacement", cfg.train.augment.max_displacement);
                read(a, "scale_min", cfg.train.augment.scale_min);
                read(a, "scale_max", cfg.train.augment.scale_max);
                read(a, "crop_height", cfg.train.augment.crop_height);
                read(a, "crop_width", cfg.train.augment.crop_width);
                read(a, "flip_probability", cfg.train.augment.flip_probability);
            }
        }

        if (j.contains("protocol")) {
            const json& p = j.at("protocol");
            reject_unknown(p,
                           {"name", "train_manifest", "probe_manifest", "distractor_manifest", "folds",
                            "train_fraction"},
                           "protocol");
            read(p, "name", cfg.protocol.name);
            read(p, "train_manifest", cfg.protocol.train_manifest);
            read(p, "probe_manifest", cfg.protocol.probe_manifest);
            read(p, "distractor_manifest", cfg.protocol.distractor_manifest);
            read(p, "folds", cfg.protocol.folds);
            read(p, "train_fraction", cfg.protocol.train_fraction);
        }

        if (j.contains("synth")) {
            const json& s = j.at("synth");
            reject_unknown(s, {"identities", "height", "width"}, "synth");
            read(s, "identities", cfg.synth.identities);
            read(s, "height", cfg.synth.height);
            read(s, "width", cfg.synth.width);
        }

        if (j.contains("xdog")) {
            const json& x = j.at("xdog");
            reject_unknown(x, {"sigma", "k", "tau", "epsilon", "phi"}, "xdog");
            read(x, "sigma", cfg.xdog.sigma);
            read(x, "k", cfg.xdog.k);
            read(x, "tau", cfg.xdog.tau);
            read(x, "epsilon", cfg.xdog.epsilon);
            read(x, "phi", cfg.xdog.phi);
        }
    } catch (const json::exception& e) {
        throw usage_error(std::string("config has a value of the wrong type: ") + e.what());
    }

    finalize_run_config(cfg);
    return cfg;
}

void finalize_run_config(RunConfig& cfg) {
    cfg.synth.xdog = cfg.xdog;
    cfg.synth.seed = cfg.seed;
    cfg.protocol.seed = cfg.seed;
    cfg.train.seed = cfg.seed;
    cfg.train.threads = cfg.threads;
    cfg.validate();
    cfg.hash = config_hash(cfg);
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw usage_error("cannot open config: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_run_config(buf.str());
}

std::string run_config_to_json(const RunConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;
    j["threads"] = cfg.threads;
    j["kernels"] = cfg.kernels;
    j["backbone"] = cfg.backbone;
    j["train"] = {
        {"learning_rate", cfg.train.learning_rate},
        {"momentum", cfg.train.momentum},
        {"batch_size", cfg.train.batch_size},
        {"epochs", cfg.train.epochs},
        {"use_attributes", cfg.train.use_attributes},
        {"weights", {{"lambda1", cfg.train.weights.lambda1}, {"lambda2", cfg.train.weights.lambda2}}},
        {"contrastive", {{"margin", cfg.train.contrastive.margin}}},
        {"augment",
         {{"num_control_points", cfg.train.augment.num_control_points},
          {"max_displacement", cfg.train.augment.max_displacement},
          {"scale_min", cfg.train.augment.scale_min},
          {"scale_max", cfg.train.augment.scale_max},
          {"crop_height", cfg.train.augment.crop_height},
          {"crop_width", cfg.train.augment.crop_width},
          {"flip_probability", cfg.train.augment.flip_probability}}},
    };
    j["protocol"] = {
        {"name", cfg.protocol.name},
        {"train_manifest", cfg.protocol.train_manifest},
        {"probe_manifest", cfg.protocol.probe_manifest},
        {"distractor_manifest", cfg.protocol.distractor_manifest},
        {"folds", cfg.protocol.folds},
        {"train_fraction", cfg.protocol.train_fraction},
    };
    j["synth"] = {{"identities", cfg.synth.identities}, {"height", cfg.synth.height}, {"width", cfg.synth.width}};
    j["xdog"] = {{"sigma", cfg.xdog.sigma},
                 {"k", cfg.xdog.k},
                 {"tau", cfg.xdog.tau},
                 {"epsilon", cfg.xdog.epsilon},
                 {"phi", cfg.xdog.phi}};
    return j.dump(2) + "\n";
}

std::string config_hash(const RunConfig& cfg) {
    // Canonical form: sorted keys, no whitespace.
    const auto canonical = nlohmann::json::parse(run_config_to_json(cfg)).dump();
    return hex64(fnv1a64(canonical));
}

BackboneConfig make_photo_backbone(const RunConfig& cfg, int attribute_count) {
    BackboneConfig b;
    if (cfg.backbone == "paper")
        b = BackboneConfig::paper_photo();
    else if (cfg.backbone == "tiny")
        b = BackboneConfig::tiny(3);
    else
        b = BackboneConfig::desk(3);
    b.attribute_count = attribute_count;
    return b;
}

BackboneConfig make_sketch_backbone(const RunConfig& cfg, int attribute_count) {
    BackboneConfig b;
    if (cfg.backbone == "paper")
        b = BackboneConfig::paper_sketch(attribute_count);
    else if (cfg.backbone == "tiny")
        b = BackboneConfig::tiny(1 + attribute_count, attribute_count);
    else
        b = BackboneConfig::desk(1 + attribute_count, attribute_count);
    return b;
}

}  // namespace sketchid
