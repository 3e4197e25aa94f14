#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sketchid/tensor.hpp"

namespace sketchid {

// Trunk topology: a list of stages, each a list of conv output widths (3x3,
// stride 1, zero padding, ReLU). A 2x2 max pool sits between stages; the last
// stage ends in global average pooling, so the embedding dimension equals the
// final conv width. Every trunk feeds T independent linear attribute heads
// off the pooled embedding.
struct BackboneConfig {
    std::vector<std::vector<int>> stages;
    int input_channels = 3;
    int embedding_dim = 64;
    int attribute_count = 12;

    void validate() const;

    // VGG-16-like trunk with the last component narrowed to (256,256,64) and
    // global pooling, giving a 64-d embedding.
    static BackboneConfig paper_photo();
    static BackboneConfig paper_sketch(int attribute_count = 12);
    // Desk-scale trunk for 32x32 inputs: stages (8),(16),(32,16), 16-d embedding.
    static BackboneConfig desk(int input_channels, int attribute_count = 12);
    // Two-stage trunk for 8x8 inputs with an 8-d embedding; small enough for
    // finite-difference sweeps.
    static BackboneConfig tiny(int input_channels, int attribute_count = 12);

    bool operator==(const BackboneConfig&) const = default;
};

struct ForwardResult {
    std::vector<double> embedding;
    std::vector<double> logits;  // pre-sigmoid, one per attribute
};

// Activation record for one branch forward pass, consumed by backward.
struct ForwardCache {
    Tensor input;
    std::vector<Tensor> conv_out;               // post-ReLU, per conv layer
    std::vector<Tensor> pool_out;               // per inter-stage pool
    std::vector<std::vector<int32_t>> pool_argmax;
    std::vector<double> embedding;
};

// Both branch parameter sets live in one flat vector so the optimizer, the
// checkpoint codec and finite-difference sweeps can treat the model as a
// single point in R^n.
class CoupledModel {
  public:
    CoupledModel(BackboneConfig photo_cfg, BackboneConfig sketch_cfg);

    // He fan-in init for conv weights, zero biases; deterministic per seed.
    static CoupledModel initialized(const BackboneConfig& photo_cfg, const BackboneConfig& sketch_cfg,
                                    uint64_t seed);

    const BackboneConfig& photo_config() const { return photo_cfg_; }
    const BackboneConfig& sketch_config() const { return sketch_cfg_; }

    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }
    std::size_t param_count() const { return values_.size(); }

    ForwardResult forward_photo(const Tensor& image, ForwardCache* cache = nullptr) const;
    ForwardResult forward_sketch(const Tensor& encoded, ForwardCache* cache = nullptr) const;

    // Accumulates d(loss)/d(params) into grad (size param_count()) given the
    // upstream embedding and logit gradients for one sample.
    void backward_photo(const ForwardCache& cache, const std::vector<double>& d_embedding,
                        const std::vector<double>& d_logits, std::vector<double>& grad) const;
    void backward_sketch(const ForwardCache& cache, const std::vector<double>& d_embedding,
                         const std::vector<double>& d_logits, std::vector<double>& grad) const;

    uint64_t fingerprint() const;  // hash of configs + parameter bytes

  private:
    struct ConvLayer {
        int in_ch = 0;
        int out_ch = 0;
        std::size_t w_off = 0;
        std::size_t b_off = 0;
    };
    struct Branch {
        BackboneConfig cfg;
        std::vector<ConvLayer> convs;
        std::vector<int> stage_end;  // conv index ending each stage (pool follows, except the last)
        std::size_t head_w_off = 0;  // T x E row-major
        std::size_t head_b_off = 0;
    };

    Branch build_branch(const BackboneConfig& cfg, std::size_t& offset);
    ForwardResult forward_branch(const Branch& b, const Tensor& input, ForwardCache* cache) const;
    void backward_branch(const Branch& b, const ForwardCache& cache, const std::vector<double>& d_embedding,
                         const std::vector<double>& d_logits, std::vector<double>& grad) const;

    BackboneConfig photo_cfg_;
    BackboneConfig sketch_cfg_;
    Branch photo_;
    Branch sketch_;
    std::vector<double> values_;
};

std::vector<double> global_average_pool(const Tensor& feature);

// Versioned binary checkpoint embedding both branch configs and arbitrary
// string metadata (config hash etc). Loading verifies magic, version and
// header consistency before any state is constructed.
struct Checkpoint {
    CoupledModel model;
    std::vector<std::pair<std::string, std::string>> metadata;
};
void save_checkpoint(const CoupledModel& model,
                     const std::vector<std::pair<std::string, std::string>>& metadata,
                     const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace sketchid
