#pragma once

// Checkpoint directory layout:
//   model.json   spec, feature scaler, tensor names in storage order
//   params.tnsr  concatenated TNSR records, one per named tensor

#include <filesystem>
#include <vector>

#include "courtraster/nn/model.hpp"
#include "courtraster/nn/train.hpp"

namespace courtraster::nn {

struct Checkpoint {
    ModelSpec spec;
    FeatureScaler scaler;
    std::vector<NamedTensor> state;
    nlohmann::json extra = nlohmann::json::object();  // free-form metadata (history, split seed)
};

void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& ckpt);
// Throws IoError for unreadable or corrupt files, DataError for inconsistent contents.
Checkpoint load_checkpoint(const std::filesystem::path& dir);

Checkpoint make_checkpoint(const Network<float>& net, const FeatureScaler& scaler);
Network<float> network_from(const Checkpoint& ckpt);

}  // namespace courtraster::nn
