#include "courtraster/nn/checkpoint.hpp"

#include <fstream>

namespace courtraster::nn {

void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& ckpt) {
    std::filesystem::create_directories(dir);
    nlohmann::json names = nlohmann::json::array();
    std::vector<TensorData> tensors;
    for (const auto& t : ckpt.state) {
        names.push_back(t.name);
        tensors.push_back(to_tensor_data(t.value));
    }
    const nlohmann::json meta = {{"format", "courtraster-checkpoint"},
                                 {"version", 1},
                                 {"spec", spec_to_json(ckpt.spec)},
                                 {"scaler", ckpt.scaler.to_json()},
                                 {"tensors", names},
                                 {"extra", ckpt.extra}};
    std::ofstream out(dir / "model.json");
    if (!out) throw IoError("cannot write " + (dir / "model.json").string());
    out << meta.dump(2) << "\n";
    if (!out) throw IoError("write failed: " + (dir / "model.json").string());
    save_tensors(dir / "params.tnsr", tensors);
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
    std::ifstream in(dir / "model.json");
    if (!in) throw IoError("cannot open " + (dir / "model.json").string());
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("corrupt " + (dir / "model.json").string() + ": " + e.what());
    }
    if (meta.value("format", "") != "courtraster-checkpoint") throw IoError("not a checkpoint: " + dir.string());
    Checkpoint c;
    c.spec = spec_from_json(meta.at("spec"));
    c.scaler = FeatureScaler::from_json(meta.at("scaler"));
    c.extra = meta.value("extra", nlohmann::json::object());
    const auto names = meta.at("tensors").get<std::vector<std::string>>();
    const auto tensors = load_tensors(dir / "params.tnsr");
    if (tensors.size() != names.size()) {
        throw DataError("checkpoint lists " + std::to_string(names.size()) + " tensors but stores " +
                        std::to_string(tensors.size()));
    }
    for (std::size_t i = 0; i < names.size(); ++i) c.state.push_back({names[i], from_tensor_data(tensors[i])});
    return c;
}

Checkpoint make_checkpoint(const Network<float>& net, const FeatureScaler& scaler) {
    Checkpoint c;
    c.spec = net.spec();
    c.scaler = scaler;
    c.state = net.state();
    return c;
}

Network<float> network_from(const Checkpoint& ckpt) {
    Network<float> net(ckpt.spec);
    net.load_state(ckpt.state);
    return net;
}

}  // namespace courtraster::nn
