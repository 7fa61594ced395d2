#pragma once

#include <vector>

#include "reentry/corpus.hpp"
#include "reentry/labeling.hpp"
#include "reentry/model.hpp"
#include "reentry/nn.hpp"
#include "reentry/training.hpp"

namespace reentry::gradcheck {

// A small model configuration suitable for finite-difference checks.
model::ModelConfig tiny_config();

// Random instance with 2-4 context turns, 1-4 tokens per turn and 0-3
// history turns; labels are derived from a random author sequence.
corpus::EncodedInstance random_instance(Rng& rng, std::size_t vocab_size);

// Parameters drawn from U(-0.5, 0.5), biases included.
void randomize(model::ModelParams& params, std::uint64_t seed);

// Compares reverse-mode gradients of the full multi-task objective on one
// instance against central differences.
nn::GradCheckReport check_model(const corpus::EncodedInstance& instance,
                                model::ModelParams& params, const model::ModelConfig& config,
                                const training::LossWeights& weights,
                                const labeling::TaskSet& tasks,
                                const nn::GradCheckOptions& options);

}  // namespace reentry::gradcheck
