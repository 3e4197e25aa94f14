#include "sketchid/losses.hpp"

#include <algorithm>
#include <cmath>

#include "sketchid/kernels.hpp"
#include "sketchid/parallel.hpp"

namespace sketchid {

const char* provenance_name(PairProvenance p) {
    switch (p) {
        case PairProvenance::genuine: return "genuine";
        case PairProvenance::same_attr: return "same_attr";
        case PairProvenance::same_attr_fallback: return "same_attr_fallback";
        case PairProvenance::diff_attr: return "diff_attr";
        case PairProvenance::diff_attr_fallback: return "diff_attr_fallback";
    }
    return "?";
}

void PairBatch::validate() const {
    for (const auto& t : triples) {
        if (t.photo_index < 0 || t.photo_index >= static_cast<int>(photos.size()) || t.sketch_index < 0 ||
            t.sketch_index >= static_cast<int>(sketches.size()))
            throw data_error("pair triple references a sample out of range");
        const bool same = photos[t.photo_index].identity == sketches[t.sketch_index].identity;
        if (same != (t.label == PairKind::genuine))
            throw data_error("pair label does not match the identities it joins");
    }
}

void ContrastiveConfig::validate() const {
    if (!(margin > 0.0)) throw usage_error("contrastive margin must be > 0");
}

void LossWeights::validate() const {
    if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0) || !std::isfinite(lambda1) || !std::isfinite(lambda2))
        throw usage_error("loss weights must be finite and >= 0");
}

double euclidean_distance(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw data_error("embedding length mismatch in distance");
    return std::sqrt(active_kernels().sumsq_diff(a.data(), b.data(), a.size()));
}

double contrastive_loss(const std::vector<double>& a, const std::vector<double>& b, PairKind label,
                        const ContrastiveConfig& cfg) {
    cfg.validate();
    const double d = euclidean_distance(a, b);
    if (label == PairKind::genuine) return 0.5 * d * d;
    const double slack = std::max(0.0, cfg.margin - d);
    return 0.5 * slack * slack;
}

double attribute_loss(const std::vector<double>& logits, const AttributeVector& labels) {
    if (static_cast<int>(logits.size()) != labels.size())
        throw data_error("attribute logits and labels have different lengths");
    double acc = 0.0;
    for (std::size_t t = 0; t < logits.size(); ++t) {
        const double l = logits[t];
        const double y = labels.bits[t] ? 1.0 : 0.0;
        acc += std::max(l, 0.0) - l * y + std::log1p(std::exp(-std::abs(l)));
    }
    return acc;
}

std::vector<double> attribute_loss_grad(const std::vector<double>& logits, const AttributeVector& labels) {
    if (static_cast<int>(logits.size()) != labels.size())
        throw data_error("attribute logits and labels have different lengths");
    std::vector<double> g(logits.size());
    for (std::size_t t = 0; t < logits.size(); ++t) {
        const double p = 1.0 / (1.0 + std::exp(-logits[t]));
        g[t] = p - (labels.bits[t] ? 1.0 : 0.0);
    }
    return g;
}

namespace {

struct BatchEval {
    std::vector<ForwardResult> photo;
    std::vector<ForwardResult> sketch;
    std::vector<ForwardCache> photo_cache;
    std::vector<ForwardCache> sketch_cache;
};

BatchEval forward_batch(const PairBatch& batch, const CoupledModel& model, int threads, bool keep_caches) {
    BatchEval ev;
    ev.photo.resize(batch.photos.size());
    ev.sketch.resize(batch.sketches.size());
    if (keep_caches) {
        ev.photo_cache.resize(batch.photos.size());
        ev.sketch_cache.resize(batch.sketches.size());
    }
    const int t = model.photo_config().attribute_count;
    parallel_for(batch.photos.size(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i)
            ev.photo[i] = model.forward_photo(batch.photos[i].image, keep_caches ? &ev.photo_cache[i] : nullptr);
    });
    parallel_for(batch.sketches.size(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const Tensor encoded =
                encode_attribute_channels(batch.sketches[i].image, batch.sketches[i].witness_attributes, t);
            ev.sketch[i] = model.forward_sketch(encoded, keep_caches ? &ev.sketch_cache[i] : nullptr);
        }
    });
    return ev;
}

LossComponents components_from(const PairBatch& batch, const BatchEval& ev, const LossWeights& weights,
                               const ContrastiveConfig& cfg, const TermMask& mask) {
    LossComponents c;
    if (mask.verification) {
        double acc = 0.0;
        for (const auto& t : batch.triples)
            acc += contrastive_loss(ev.photo[t.photo_index].embedding, ev.sketch[t.sketch_index].embedding,
                                    t.label, cfg);
        c.verification = acc / double(batch.triples.size());
    }
    if (mask.photo_attributes) {
        double acc = 0.0;
        for (std::size_t i = 0; i < batch.photos.size(); ++i)
            acc += attribute_loss(ev.photo[i].logits, batch.photos[i].attributes);
        c.photo_attribute = acc / double(batch.photos.size());
    }
    if (mask.sketch_attributes) {
        double acc = 0.0;
        for (std::size_t i = 0; i < batch.sketches.size(); ++i)
            acc += attribute_loss(ev.sketch[i].logits, batch.sketches[i].attributes);
        c.sketch_attribute = acc / double(batch.sketches.size());
    }
    c.total = c.verification + weights.lambda1 * c.photo_attribute + weights.lambda2 * c.sketch_attribute;

    if (!std::isfinite(c.verification)) throw numeric_error("verification loss (L1) is non-finite");
    if (!std::isfinite(c.photo_attribute)) throw numeric_error("photo attribute loss (L2) is non-finite");
    if (!std::isfinite(c.sketch_attribute)) throw numeric_error("sketch attribute loss (L3) is non-finite");
    return c;
}

void check_batch(const PairBatch& batch) {
    if (batch.triples.empty() || batch.photos.empty() || batch.sketches.empty())
        throw data_error("loss evaluation over an empty batch");
    batch.validate();
}

}  // namespace

double batch_verification_loss(const PairBatch& batch, const CoupledModel& model, const ContrastiveConfig& cfg,
                               int threads) {
    check_batch(batch);
    const BatchEval ev = forward_batch(batch, model, threads, false);
    TermMask mask{true, false, false};
    return components_from(batch, ev, LossWeights{0.0, 0.0}, cfg, mask).verification;
}

LossComponents total_loss(const PairBatch& batch, const CoupledModel& model, const LossWeights& weights,
                          const ContrastiveConfig& cfg, int threads, const TermMask& mask) {
    check_batch(batch);
    weights.validate();
    const BatchEval ev = forward_batch(batch, model, threads, false);
    return components_from(batch, ev, weights, cfg, mask);
}

LossAndGradients total_loss_and_gradients(const PairBatch& batch, const CoupledModel& model,
                                          const LossWeights& weights, const ContrastiveConfig& cfg,
                                          int threads, const TermMask& mask) {
    check_batch(batch);
    weights.validate();
    cfg.validate();
    const auto& k = active_kernels();

    BatchEval ev = forward_batch(batch, model, threads, true);

    LossAndGradients out;
    out.components = components_from(batch, ev, weights, cfg, mask);
    out.gradients.assign(model.param_count(), 0.0);

    const int e = model.photo_config().embedding_dim;
    const double inv_pairs = 1.0 / double(batch.triples.size());

    // Upstream embedding gradients from the verification term.
    std::vector<std::vector<double>> d_emb_photo(batch.photos.size(), std::vector<double>(e, 0.0));
    std::vector<std::vector<double>> d_emb_sketch(batch.sketches.size(), std::vector<double>(e, 0.0));
    if (mask.verification) {
        for (const auto& t : batch.triples) {
            const auto& ep = ev.photo[t.photo_index].embedding;
            const auto& es = ev.sketch[t.sketch_index].embedding;
            const double d = euclidean_distance(ep, es);
            double coeff = 0.0;  // dL/dD / D, so the chain rule stays a scaled difference
            if (t.label == PairKind::genuine) {
                coeff = 1.0;
            } else if (d < cfg.margin && d > 0.0) {
                coeff = -(cfg.margin - d) / d;
            }
            // At d == 0 the impostor hinge has no defined direction; the zero
            // subgradient is used.
            if (coeff == 0.0) continue;
            const double scaled = coeff * inv_pairs;
            for (int i = 0; i < e; ++i) {
                const double diff = ep[i] - es[i];
                d_emb_photo[t.photo_index][i] += scaled * diff;
                d_emb_sketch[t.sketch_index][i] -= scaled * diff;
            }
        }
    }

    // Upstream logit gradients from the attribute terms.
    std::vector<std::vector<double>> d_log_photo(batch.photos.size());
    std::vector<std::vector<double>> d_log_sketch(batch.sketches.size());
    if (mask.photo_attributes && weights.lambda1 != 0.0) {
        const double scale = weights.lambda1 / double(batch.photos.size());
        for (std::size_t i = 0; i < batch.photos.size(); ++i) {
            d_log_photo[i] = attribute_loss_grad(ev.photo[i].logits, batch.photos[i].attributes);
            k.scale(scale, d_log_photo[i].data(), d_log_photo[i].size());
        }
    }
    if (mask.sketch_attributes && weights.lambda2 != 0.0) {
        const double scale = weights.lambda2 / double(batch.sketches.size());
        for (std::size_t i = 0; i < batch.sketches.size(); ++i) {
            d_log_sketch[i] = attribute_loss_grad(ev.sketch[i].logits, batch.sketches[i].attributes);
            k.scale(scale, d_log_sketch[i].data(), d_log_sketch[i].size());
        }
    }

    // Backward per sample into per-chunk buffers, merged in chunk order so the
    // result is reproducible for a fixed thread count.
    const std::size_t n_samples = batch.photos.size() + batch.sketches.size();
    std::vector<std::vector<double>> partial(std::min<std::size_t>(std::max(threads, 1), n_samples));
    const int chunks = parallel_for_chunks(n_samples, threads, [&](int chunk, std::size_t begin, std::size_t end) {
        auto& buf = partial[chunk];
        buf.assign(model.param_count(), 0.0);
        for (std::size_t s = begin; s < end; ++s) {
            if (s < batch.photos.size()) {
                model.backward_photo(ev.photo_cache[s], d_emb_photo[s], d_log_photo[s], buf);
            } else {
                const std::size_t i = s - batch.photos.size();
                model.backward_sketch(ev.sketch_cache[i], d_emb_sketch[i], d_log_sketch[i], buf);
            }
        }
    });
    for (int c = 0; c < chunks; ++c) k.axpy(1.0, partial[c].data(), out.gradients.data(), out.gradients.size());
    return out;
}

}  // namespace sketchid
