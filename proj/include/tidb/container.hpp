#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tidb/nn.hpp"
#include "tidb/scaling.hpp"

namespace tidb::io {

// Versioned little-endian binary container family. All files start with the
// magic bytes "TIDB", a format version and a payload type tag.
inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::uint32_t kTypeScalingTensor = 1;
inline constexpr std::uint32_t kTypeFeatureMap = 2;
inline constexpr std::uint32_t kTypeCheckpoint = 3;

void save_scaling_tensor(const std::string& path, const ScalingTensor& psi);
ScalingTensor load_scaling_tensor(const std::string& path);

/// Feature payloads may be stored as 32- or 64-bit floats; the in-memory
/// representation is always double.
void save_feature_map(const std::string& path, const FeatureMap& f, bool as_f32 = true);
FeatureMap load_feature_map(const std::string& path);

struct NamedArray {
    std::string name;
    std::vector<std::uint32_t> dims;
    std::vector<double> data;
};

struct Checkpoint {
    std::string config_text;  ///< RunConfig snapshot, key=value lines
    std::string arch;
    int epoch = 0;
    double best_val_loss = 0.0;
    double learning_rate = 0.0;
    std::uint64_t seed = 0;
    std::vector<NamedArray> params;
    bool has_optimizer_state = false;
    std::vector<NamedArray> optimizer_state;
    struct EpochMetrics {
        int epoch = 0;
        double train_loss = 0.0, val_loss = 0.0, lr = 0.0;
    };
    std::vector<EpochMetrics> history;
};

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace tidb::io
