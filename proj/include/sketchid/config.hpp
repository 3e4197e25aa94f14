#pragma once

#include <string>

#include "sketchid/eval.hpp"
#include "sketchid/synthfaces.hpp"
#include "sketchid/trainer.hpp"
#include "sketchid/xdog.hpp"

namespace sketchid {

// Declarative run configuration, parsed from a JSON document. Every key has a
// documented default; unknown keys are rejected. The hash of the resolved
// document is stamped into every produced artifact.
struct RunConfig {
    uint64_t seed = 0;
    int threads = 0;              // 0 = hardware concurrency
    std::string kernels = "auto";  // auto | scalar | avx2
    std::string backbone = "desk";  // desk | paper | tiny
    TrainConfig train;
    ProtocolConfig protocol;
    SynthConfig synth;
    XDoGParams xdog;
    std::string hash;  // hex of the resolved document, filled on load

    void validate() const;
};

RunConfig default_run_config();
// Propagates top-level seed/threads into the nested configs and recomputes
// the hash. Call after mutating a loaded config (e.g. CLI flag overrides).
void finalize_run_config(RunConfig& cfg);
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);
std::string run_config_to_json(const RunConfig& cfg);  // resolved, diffable form
std::string config_hash(const RunConfig& cfg);

BackboneConfig make_photo_backbone(const RunConfig& cfg, int attribute_count);
BackboneConfig make_sketch_backbone(const RunConfig& cfg, int attribute_count);

}  // namespace sketchid
