#pragma once

#include <cstdint>

#include "eegdiff/data/dataset.hpp"
#include "eegdiff/diffusion/schedule.hpp"
#include "eegdiff/model/denoiser.hpp"

namespace eegdiff::experiment {

// round(real_epochs * percent / 100).
std::int64_t synthetic_count(std::int64_t real_epochs, double percent);

// `count` synthetic epochs, each conditioned on a row of `source` drawn
// uniformly with replacement. Labels and subjects are inherited and
// `conditions` holds the source row. Epoch i draws everything from streams
// keyed by (seed, i), so a request for fewer epochs is a prefix of a larger one.
data::LabeledDataset generate_synthetic(const model::Denoiser& model, const diffusion::NoiseSchedule& schedule,
                                        const data::LabeledDataset& source, std::int64_t count, double delta,
                                        std::uint64_t seed, int steps, int batch = 64);

// Standard-normal epochs shaped like `reference`, labels drawn with the
// reference's positive rate. Same prefix property as generate_synthetic.
data::LabeledDataset make_noise_control(const data::LabeledDataset& reference, std::int64_t count,
                                        std::uint64_t seed);

}  // namespace eegdiff::experiment
