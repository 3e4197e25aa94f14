#pragma once

#include <vector>

#include "sketchid/batch.hpp"
#include "sketchid/network.hpp"

namespace sketchid {

struct ContrastiveConfig {
    double margin = 1.0;  // embedding-distance units
    void validate() const;
};

struct LossWeights {
    double lambda1 = 1.0;  // photo-branch attribute term
    double lambda2 = 1.0;  // sketch-branch attribute term
    void validate() const;
};

double euclidean_distance(const std::vector<double>& a, const std::vector<double>& b);

// Genuine: 1/2 D^2. Impostor: 1/2 max(0, m - D)^2.
double contrastive_loss(const std::vector<double>& a, const std::vector<double>& b, PairKind label,
                        const ContrastiveConfig& cfg);

// Sum over attributes of sigmoid cross entropy from raw logits (natural log),
// in the log-sum-exp-stable form.
double attribute_loss(const std::vector<double>& logits, const AttributeVector& labels);
// d(attribute_loss)/d(logit_t) = sigmoid(logit_t) - label_t.
std::vector<double> attribute_loss_grad(const std::vector<double>& logits, const AttributeVector& labels);

struct LossComponents {
    double verification = 0.0;      // L1: mean contrastive loss over triples
    double photo_attribute = 0.0;   // L2: mean attribute loss over unique photos
    double sketch_attribute = 0.0;  // L3: mean attribute loss over unique sketches
    double total = 0.0;             // L1 + lambda1 L2 + lambda2 L3
};

// Term selection for per-term gradient verification. A disabled term
// contributes neither value nor gradient.
struct TermMask {
    bool verification = true;
    bool photo_attributes = true;
    bool sketch_attributes = true;
};

// Mean contrastive loss over the batch triples (L1 alone).
double batch_verification_loss(const PairBatch& batch, const CoupledModel& model, const ContrastiveConfig& cfg,
                               int threads = 1);

LossComponents total_loss(const PairBatch& batch, const CoupledModel& model, const LossWeights& weights,
                          const ContrastiveConfig& cfg, int threads = 1, const TermMask& mask = {});

struct LossAndGradients {
    LossComponents components;
    std::vector<double> gradients;  // same layout as CoupledModel::values()
};

// Exact gradients of the (masked) total loss for every parameter of both
// branches, by reverse accumulation through the trunks and heads.
LossAndGradients total_loss_and_gradients(const PairBatch& batch, const CoupledModel& model,
                                          const LossWeights& weights, const ContrastiveConfig& cfg,
                                          int threads = 1, const TermMask& mask = {});

}  // namespace sketchid
