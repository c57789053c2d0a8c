#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hyrf/dataset.hpp"
#include "hyrf/io/binary.hpp"
#include "hyrf/model.hpp"

namespace hyrf::io {

inline constexpr std::uint16_t kCheckpointVersion = 1;

/// Camera plus the bookkeeping needed to re-render a dataset view.
struct CameraRecord {
    std::string name;
    Camera camera;
    bool test = false;
};

struct Checkpoint {
    std::uint32_t iteration = 0;
    HyrfModel model;
    std::vector<CameraRecord> cameras;
};

std::vector<CameraRecord> camera_records(const Dataset& d);

// Building blocks shared with the compressed bundle.
void write_model_config(ByteWriter& w, const ModelConfig& c);
ModelConfig read_model_config(ByteReader& r);
void write_cameras(ByteWriter& w, const std::vector<CameraRecord>& cams);
std::vector<CameraRecord> read_cameras(ByteReader& r);
void write_decoder(ByteWriter& w, const DecoderNet& net);
/// Reads into an already-shaped network; throws CorruptStream if the shapes differ.
void read_decoder(ByteReader& r, DecoderNet& net);

/// Layout (little-endian): "HYRFCKPT", u16 version, u32 iteration, model
/// config, u64 N, positions / colors / scales / opacities as f32 arrays,
/// radiance then geometry hash tables (u64 count + f32), both decoders
/// (u32 layer count, i32 dims, f32 params), cameras, u32 FNV-1a of all
/// preceding bytes.
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ck);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace hyrf::io
