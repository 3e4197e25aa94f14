#include "sketchid/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "sketchid/hash.hpp"
#include "sketchid/kernels.hpp"
#include "sketchid/rng.hpp"

namespace sketchid {

using json = nlohmann::ordered_json;

void BackboneConfig::validate() const {
    if (stages.empty()) throw usage_error("backbone needs at least one stage");
    for (const auto& st : stages) {
        if (st.empty()) throw usage_error("backbone stage with no conv layers");
        for (int w : st)
            if (w <= 0) throw usage_error("conv width must be positive");
    }
    if (input_channels <= 0) throw usage_error("input_channels must be positive");
    if (attribute_count <= 0) throw usage_error("attribute_count must be positive");
    if (embedding_dim != stages.back().back())
        throw usage_error("embedding_dim (" + std::to_string(embedding_dim) +
                          ") must equal the final conv width (" + std::to_string(stages.back().back()) + ")");
}

BackboneConfig BackboneConfig::paper_photo() {
    BackboneConfig c;
    c.stages = {{64, 64}, {128, 128}, {256, 256, 256}, {512, 512, 512}, {256, 256, 64}};
    c.input_channels = 3;
    c.embedding_dim = 64;
    c.attribute_count = 12;
    return c;
}

BackboneConfig BackboneConfig::paper_sketch(int attribute_count) {
    BackboneConfig c = paper_photo();
    c.input_channels = 1 + attribute_count;
    c.attribute_count = attribute_count;
    return c;
}

BackboneConfig BackboneConfig::desk(int input_channels, int attribute_count) {
    BackboneConfig c;
    c.stages = {{8}, {16}, {32, 16}};
    c.input_channels = input_channels;
    c.embedding_dim = 16;
    c.attribute_count = attribute_count;
    return c;
}

BackboneConfig BackboneConfig::tiny(int input_channels, int attribute_count) {
    BackboneConfig c;
    c.stages = {{4}, {8}};
    c.input_channels = input_channels;
    c.embedding_dim = 8;
    c.attribute_count = attribute_count;
    return c;
}

CoupledModel::Branch CoupledModel::build_branch(const BackboneConfig& cfg, std::size_t& offset) {
    Branch b;
    b.cfg = cfg;
    int in_ch = cfg.input_channels;
    for (std::size_t s = 0; s < cfg.stages.size(); ++s) {
        for (int width : cfg.stages[s]) {
            ConvLayer l;
            l.in_ch = in_ch;
            l.out_ch = width;
            l.w_off = offset;
            offset += std::size_t(width) * in_ch * 9;
            l.b_off = offset;
            offset += width;
            b.convs.push_back(l);
            in_ch = width;
        }
        b.stage_end.push_back(static_cast<int>(b.convs.size()) - 1);
    }
    b.head_w_off = offset;
    offset += std::size_t(cfg.attribute_count) * cfg.embedding_dim;
    b.head_b_off = offset;
    offset += cfg.attribute_count;
    return b;
}

CoupledModel::CoupledModel(BackboneConfig photo_cfg, BackboneConfig sketch_cfg)
    : photo_cfg_(std::move(photo_cfg)), sketch_cfg_(std::move(sketch_cfg)) {
    photo_cfg_.validate();
    sketch_cfg_.validate();
    if (photo_cfg_.embedding_dim != sketch_cfg_.embedding_dim)
        throw usage_error("photo and sketch branches must share the embedding dimension");
    if (photo_cfg_.attribute_count != sketch_cfg_.attribute_count)
        throw usage_error("photo and sketch branches must share the attribute count");
    std::size_t offset = 0;
    photo_ = build_branch(photo_cfg_, offset);
    sketch_ = build_branch(sketch_cfg_, offset);
    values_.assign(offset, 0.0);
}

CoupledModel CoupledModel::initialized(const BackboneConfig& photo_cfg, const BackboneConfig& sketch_cfg,
                                       uint64_t seed) {
    CoupledModel m(photo_cfg, sketch_cfg);
    Rng rng(seed);
    for (const Branch* b : {&m.photo_, &m.sketch_}) {
        for (const auto& l : b->convs) {
            const double stddev = std::sqrt(2.0 / (double(l.in_ch) * 9.0));
            for (std::size_t i = 0; i < std::size_t(l.out_ch) * l.in_ch * 9; ++i)
                m.values_[l.w_off + i] = rng.normal(0.0, stddev);
            // biases stay zero
        }
        const double head_std = 1.0 / std::sqrt(double(b->cfg.embedding_dim));
        for (std::size_t i = 0; i < std::size_t(b->cfg.attribute_count) * b->cfg.embedding_dim; ++i)
            m.values_[b->head_w_off + i] = rng.normal(0.0, head_std);
    }
    return m;
}

std::vector<double> global_average_pool(const Tensor& feature) {
    std::vector<double> out(feature.channels);
    const double inv = 1.0 / double(feature.plane_size());
    for (int c = 0; c < feature.channels; ++c) {
        const double* plane = feature.plane(c);
        double acc = 0.0;
        for (std::size_t i = 0; i < feature.plane_size(); ++i) acc += plane[i];
        out[c] = acc * inv;
    }
    return out;
}

namespace {

Tensor maxpool2(const Tensor& in, std::vector<int32_t>* argmax) {
    const int oh = in.height / 2;
    const int ow = in.width / 2;
    if (oh < 1 || ow < 1) throw data_error("feature map too small to pool");
    Tensor out(in.channels, oh, ow);
    if (argmax) argmax->assign(out.size(), 0);
    for (int c = 0; c < in.channels; ++c) {
        const double* ip = in.plane(c);
        double* op = out.plane(c);
        for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x) {
                int best = (2 * y) * in.width + 2 * x;
                double bv = ip[best];
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx) {
                        const int idx = (2 * y + dy) * in.width + (2 * x + dx);
                        if (ip[idx] > bv) {
                            bv = ip[idx];
                            best = idx;
                        }
                    }
                op[std::size_t(y) * ow + x] = bv;
                if (argmax) (*argmax)[std::size_t(c) * oh * ow + std::size_t(y) * ow + x] = best;
            }
    }
    return out;
}

}  // namespace

ForwardResult CoupledModel::forward_branch(const Branch& b, const Tensor& input, ForwardCache* cache) const {
    if (input.channels != b.cfg.input_channels)
        throw data_error("branch expects " + std::to_string(b.cfg.input_channels) + " input channels, got " +
                         std::to_string(input.channels));
    const auto& k = active_kernels();

    if (cache) {
        cache->input = input;
        cache->conv_out.clear();
        cache->pool_out.clear();
        cache->pool_argmax.clear();
    }

    Tensor cur = input;
    int conv_idx = 0;
    for (std::size_t s = 0; s < b.cfg.stages.size(); ++s) {
        for (std::size_t li = 0; li < b.cfg.stages[s].size(); ++li, ++conv_idx) {
            const ConvLayer& l = b.convs[conv_idx];
            Tensor next(l.out_ch, cur.height, cur.width);
            k.conv3x3_forward(cur.data.data(), l.in_ch, cur.height, cur.width, values_.data() + l.w_off,
                              values_.data() + l.b_off, l.out_ch, next.data.data());
            k.relu_forward(next.data.data(), next.size());
            cur = std::move(next);
            if (cache) cache->conv_out.push_back(cur);
        }
        if (s + 1 < b.cfg.stages.size()) {
            std::vector<int32_t> argmax;
            cur = maxpool2(cur, cache ? &argmax : nullptr);
            if (cache) {
                cache->pool_out.push_back(cur);
                cache->pool_argmax.push_back(std::move(argmax));
            }
        }
    }

    ForwardResult r;
    r.embedding = global_average_pool(cur);
    if (cache) cache->embedding = r.embedding;

    const int t_count = b.cfg.attribute_count;
    const int e = b.cfg.embedding_dim;
    r.logits.resize(t_count);
    for (int t = 0; t < t_count; ++t)
        r.logits[t] = k.dot(values_.data() + b.head_w_off + std::size_t(t) * e, r.embedding.data(), e) +
                      values_[b.head_b_off + t];
    return r;
}

void CoupledModel::backward_branch(const Branch& b, const ForwardCache& cache,
                                   const std::vector<double>& d_embedding, const std::vector<double>& d_logits,
                                   std::vector<double>& grad) const {
    const auto& k = active_kernels();
    const int e = b.cfg.embedding_dim;
    const int t_count = b.cfg.attribute_count;
    if (grad.size() != values_.size()) throw data_error("gradient buffer has wrong size");

    if (!d_logits.empty() && static_cast<int>(d_logits.size()) != t_count)
        throw data_error("logit gradient has wrong length");

    // Heads: logits = W emb + bias.
    std::vector<double> d_emb = d_embedding;
    d_emb.resize(e, 0.0);
    for (int t = 0; t < t_count; ++t) {
        const double g = d_logits.empty() ? 0.0 : d_logits[t];
        if (g == 0.0) continue;
        k.axpy(g, values_.data() + b.head_w_off + std::size_t(t) * e, d_emb.data(), e);
        k.axpy(g, cache.embedding.data(), grad.data() + b.head_w_off + std::size_t(t) * e, e);
        grad[b.head_b_off + t] += g;
    }

    // Global average pool.
    const Tensor& final_map = cache.conv_out.back();
    Tensor d_cur(final_map.channels, final_map.height, final_map.width);
    const double inv = 1.0 / double(final_map.plane_size());
    for (int c = 0; c < d_cur.channels; ++c) {
        double* plane = d_cur.plane(c);
        std::fill(plane, plane + d_cur.plane_size(), d_emb[c] * inv);
    }

    // Walk stages in reverse; pools sit between stages.
    int conv_idx = static_cast<int>(b.convs.size()) - 1;
    for (int s = static_cast<int>(b.cfg.stages.size()) - 1; s >= 0; --s) {
        if (s + 1 < static_cast<int>(b.cfg.stages.size())) {
            // Un-pool: route gradients to the argmax positions.
            const Tensor& pre_pool = cache.conv_out[b.stage_end[s]];
            const auto& argmax = cache.pool_argmax[s];
            Tensor d_pre(pre_pool.channels, pre_pool.height, pre_pool.width);
            const Tensor& pooled = cache.pool_out[s];
            for (int c = 0; c < pooled.channels; ++c) {
                const double* dsrc = d_cur.plane(c);
                double* ddst = d_pre.plane(c);
                const int32_t* am = argmax.data() + std::size_t(c) * pooled.plane_size();
                for (std::size_t i = 0; i < pooled.plane_size(); ++i) ddst[am[i]] += dsrc[i];
            }
            d_cur = std::move(d_pre);
        }
        for (int li = static_cast<int>(b.cfg.stages[s].size()) - 1; li >= 0; --li, --conv_idx) {
            const ConvLayer& l = b.convs[conv_idx];
            const Tensor& post_act = cache.conv_out[conv_idx];
            // The first conv of a stage reads the pooled map, not the previous
            // conv's activation.
            const Tensor& layer_in = li > 0                ? cache.conv_out[conv_idx - 1]
                                     : s == 0              ? cache.input
                                                           : cache.pool_out[s - 1];

            k.relu_backward(post_act.data.data(), d_cur.data.data(), d_cur.size());
            k.conv3x3_grad_params(layer_in.data.data(), l.in_ch, layer_in.height, layer_in.width,
                                  d_cur.data.data(), l.out_ch, grad.data() + l.w_off, grad.data() + l.b_off);
            if (conv_idx > 0) {
                Tensor d_prev(l.in_ch, layer_in.height, layer_in.width);
                k.conv3x3_grad_input(d_cur.data.data(), l.out_ch, layer_in.height, layer_in.width,
                                     values_.data() + l.w_off, l.in_ch, d_prev.data.data());
                d_cur = std::move(d_prev);
            }
        }
    }
}

ForwardResult CoupledModel::forward_photo(const Tensor& image, ForwardCache* cache) const {
    return forward_branch(photo_, image, cache);
}

ForwardResult CoupledModel::forward_sketch(const Tensor& encoded, ForwardCache* cache) const {
    return forward_branch(sketch_, encoded, cache);
}

void CoupledModel::backward_photo(const ForwardCache& cache, const std::vector<double>& d_embedding,
                                  const std::vector<double>& d_logits, std::vector<double>& grad) const {
    backward_branch(photo_, cache, d_embedding, d_logits, grad);
}

void CoupledModel::backward_sketch(const ForwardCache& cache, const std::vector<double>& d_embedding,
                                   const std::vector<double>& d_logits, std::vector<double>& grad) const {
    backward_branch(sketch_, cache, d_embedding, d_logits, grad);
}

namespace {

json config_to_json(const BackboneConfig& c) {
    return json{{"stages", c.stages},
                {"input_channels", c.input_channels},
                {"embedding_dim", c.embedding_dim},
                {"attribute_count", c.attribute_count}};
}

BackboneConfig config_from_json(const json& j) {
    BackboneConfig c;
    c.stages = j.at("stages").get<std::vector<std::vector<int>>>();
    c.input_channels = j.at("input_channels").get<int>();
    c.embedding_dim = j.at("embedding_dim").get<int>();
    c.attribute_count = j.at("attribute_count").get<int>();
    return c;
}

constexpr char kMagic[8] = {'S', 'K', 'I', 'D', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;

}  // namespace

uint64_t CoupledModel::fingerprint() const {
    const std::string cfg = config_to_json(photo_cfg_).dump() + config_to_json(sketch_cfg_).dump();
    const uint64_t h = fnv1a64(cfg);
    return fnv1a64(values_.data(), values_.size() * sizeof(double), h);
}

void save_checkpoint(const CoupledModel& model,
                     const std::vector<std::pair<std::string, std::string>>& metadata,
                     const std::string& path) {
    json header;
    header["photo_config"] = config_to_json(model.photo_config());
    header["sketch_config"] = config_to_json(model.sketch_config());
    json meta = json::object();
    for (const auto& [key, value] : metadata) meta[key] = value;
    header["metadata"] = meta;
    const std::string header_str = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot write checkpoint: " + path);
    out.write(kMagic, sizeof(kMagic));
    const uint32_t version = kVersion;
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    const uint64_t header_len = header_str.size();
    out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
    out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
    const uint64_t count = model.param_count();
    out.write(reinterpret_cast<const char*>(&count), sizeof(count));
    out.write(reinterpret_cast<const char*>(model.values().data()),
              static_cast<std::streamsize>(count * sizeof(double)));
    if (!out) throw data_error("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open checkpoint: " + path);

    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw data_error("not a checkpoint file: " + path);
    uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (!in || version != kVersion)
        throw data_error("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                         std::to_string(kVersion) + ")");
    uint64_t header_len = 0;
    in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
    if (!in || header_len > (64u << 20)) throw data_error("corrupt checkpoint header: " + path);
    std::string header_str(header_len, '\0');
    in.read(header_str.data(), static_cast<std::streamsize>(header_len));
    if (!in) throw data_error("corrupt checkpoint header: " + path);

    json header;
    try {
        header = json::parse(header_str);
    } catch (const json::exception&) {
        throw data_error("corrupt checkpoint header: " + path);
    }

    Checkpoint ckpt{CoupledModel(config_from_json(header.at("photo_config")),
                                 config_from_json(header.at("sketch_config"))),
                    {}};
    if (header.contains("metadata"))
        for (const auto& [key, value] : header.at("metadata").items())
            ckpt.metadata.emplace_back(key, value.get<std::string>());

    uint64_t count = 0;
    in.read(reinterpret_cast<char*>(&count), sizeof(count));
    if (!in || count != ckpt.model.param_count())
        throw data_error("checkpoint parameter count does not match its config: " + path);
    in.read(reinterpret_cast<char*>(ckpt.model.values().data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw data_error("truncated checkpoint: " + path);
    return ckpt;
}

}  // namespace sketchid
