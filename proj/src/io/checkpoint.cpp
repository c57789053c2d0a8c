#include "hyrf/io/checkpoint.hpp"

#include <cstring>

namespace hyrf::io {

namespace {

constexpr char kMagic[8] = {'H', 'Y', 'R', 'F', 'C', 'K', 'P', 'T'};

void write_hash_config(ByteWriter& w, const HashFieldConfig& c) {
    w.put<std::int32_t>(c.n_levels);
    w.put<std::int32_t>(c.features_per_entry);
    w.put<std::int32_t>(c.log2_max_entries);
    w.put<std::int32_t>(c.base_resolution);
    w.put<double>(c.growth_factor);
}

HashFieldConfig read_hash_config(ByteReader& r) {
    const std::size_t at = r.offset();
    HashFieldConfig c;
    c.n_levels = r.get<std::int32_t>();
    c.features_per_entry = r.get<std::int32_t>();
    c.log2_max_entries = r.get<std::int32_t>();
    c.base_resolution = r.get<std::int32_t>();
    c.growth_factor = r.get<double>();
    if (c.n_levels < 1 || c.n_levels > 64 || c.features_per_entry < 1 || c.features_per_entry > 64 ||
        c.log2_max_entries < 1 || c.log2_max_entries > 30 || c.base_resolution < 1) {
        throw CorruptStream("implausible hash field config", at);
    }
    try {
        c.validate();
    } catch (const InvalidInput& e) {
        throw CorruptStream(std::string("invalid hash field config: ") + e.what(), at);
    }
    return c;
}

void write_vec3(ByteWriter& w, const Eigen::Vector3d& v) {
    for (int k = 0; k < 3; ++k) w.put<double>(v[k]);
}

Eigen::Vector3d read_vec3(ByteReader& r) {
    Eigen::Vector3d v;
    for (int k = 0; k < 3; ++k) v[k] = r.get<double>();
    return v;
}

void write_table(ByteWriter& w, std::span<const double> v) {
    w.put<std::uint64_t>(v.size());
    w.put_f32_array(v);
}

void read_table(ByteReader& r, std::span<double> out, const char* what) {
    const std::size_t at = r.offset();
    const auto n = r.get<std::uint64_t>();
    if (n != out.size()) {
        throw CorruptStream(std::string(what) + ": expected " + std::to_string(out.size()) +
                                " values, header says " + std::to_string(n),
                            at);
    }
    r.get_f32_array(out);
}

}  // namespace

std::vector<CameraRecord> camera_records(const Dataset& d) {
    std::vector<CameraRecord> out;
    for (const auto& v : d.views) out.push_back({v.name, v.camera, v.test});
    return out;
}

void write_model_config(ByteWriter& w, const ModelConfig& c) {
    w.put<std::uint8_t>(static_cast<std::uint8_t>(c.scene_class));
    write_hash_config(w, c.radiance_field);
    write_hash_config(w, c.geometry_field);
    w.put<std::int32_t>(c.hidden_width);
    w.put<std::int32_t>(c.hidden_layers);
    w.put<std::int32_t>(c.direction_frequencies);
    write_vec3(w, c.aabb.min_corner);
    write_vec3(w, c.aabb.max_corner);
    w.put<double>(c.s_max);
    w.put<double>(c.sphere_radius);
    w.put<double>(c.tau_t);
}

ModelConfig read_model_config(ByteReader& r) {
    const std::size_t at = r.offset();
    ModelConfig c;
    const auto cls = r.get<std::uint8_t>();
    if (cls > 2) throw CorruptStream("unknown scene class " + std::to_string(cls), at);
    c.scene_class = static_cast<SceneClass>(cls);
    c.radiance_field = read_hash_config(r);
    c.geometry_field = read_hash_config(r);
    c.hidden_width = r.get<std::int32_t>();
    c.hidden_layers = r.get<std::int32_t>();
    c.direction_frequencies = r.get<std::int32_t>();
    c.aabb.min_corner = read_vec3(r);
    c.aabb.max_corner = read_vec3(r);
    c.s_max = r.get<double>();
    c.sphere_radius = r.get<double>();
    c.tau_t = r.get<double>();
    if (c.hidden_width < 1 || c.hidden_width > 4096 || c.hidden_layers < 0 || c.hidden_layers > 64 ||
        c.direction_frequencies < 0 || c.direction_frequencies > 32) {
        throw CorruptStream("implausible decoder config", at);
    }
    try {
        c.validate();
    } catch (const Error& e) {
        throw CorruptStream(std::string("invalid model config: ") + e.what(), at);
    }
    return c;
}

void write_cameras(ByteWriter& w, const std::vector<CameraRecord>& cams) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(cams.size()));
    for (const auto& c : cams) {
        w.put_string(c.name);
        w.put<std::uint8_t>(c.test ? 1 : 0);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) w.put<double>(c.camera.rotation(i, j));
        write_vec3(w, c.camera.translation);
        w.put<double>(c.camera.fx);
        w.put<double>(c.camera.fy);
        w.put<double>(c.camera.cx);
        w.put<double>(c.camera.cy);
        w.put<std::int32_t>(c.camera.width);
        w.put<std::int32_t>(c.camera.height);
        w.put<double>(c.camera.near);
    }
}

std::vector<CameraRecord> read_cameras(ByteReader& r) {
    const std::size_t at = r.offset();
    const auto n = r.get<std::uint32_t>();
    if (n > r.remaining()) throw CorruptStream("camera count exceeds stream size", at);
    std::vector<CameraRecord> out(n);
    for (auto& c : out) {
        const std::size_t cam_at = r.offset();
        c.name = r.get_string();
        c.test = r.get<std::uint8_t>() != 0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) c.camera.rotation(i, j) = r.get<double>();
        c.camera.translation = read_vec3(r);
        c.camera.fx = r.get<double>();
        c.camera.fy = r.get<double>();
        c.camera.cx = r.get<double>();
        c.camera.cy = r.get<double>();
        c.camera.width = r.get<std::int32_t>();
        c.camera.height = r.get<std::int32_t>();
        c.camera.near = r.get<double>();
        try {
            c.camera.validate();
        } catch (const Error& e) {
            throw CorruptStream(std::string("invalid camera: ") + e.what(), cam_at);
        }
    }
    return out;
}

void write_decoder(ByteWriter& w, const DecoderNet& net) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(net.dims().size()));
    for (int d : net.dims()) w.put<std::int32_t>(d);
    w.put_f32_array(net.params());
}

void read_decoder(ByteReader& r, DecoderNet& net) {
    const std::size_t at = r.offset();
    const auto n = r.get<std::uint32_t>();
    if (n != net.dims().size()) throw CorruptStream("decoder layer count mismatch", at);
    for (std::size_t i = 0; i < n; ++i) {
        const auto d = r.get<std::int32_t>();
        if (d != net.dims()[i]) throw CorruptStream("decoder layer width mismatch", at);
    }
    r.get_f32_array(net.params());
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ck) {
    const HyrfModel& m = ck.model;
    m.gaussians.validate();
    ByteWriter w;
    for (char c : kMagic) w.put<char>(c);
    w.put<std::uint16_t>(kCheckpointVersion);
    w.put<std::uint32_t>(ck.iteration);
    write_model_config(w, m.config);
    w.put<std::uint64_t>(m.gaussians.size());
    w.put_f32_array(m.gaussians.positions.value);
    w.put_f32_array(m.gaussians.colors.value);
    w.put_f32_array(m.gaussians.scales.value);
    w.put_f32_array(m.gaussians.opacities.value);
    write_table(w, m.radiance.params());
    write_table(w, m.geometry.params());
    write_decoder(w, m.geometry_decoder);
    write_decoder(w, m.color_decoder);
    write_cameras(w, ck.cameras);
    const std::uint32_t sum = fnv1a(w.bytes());
    w.put<std::uint32_t>(sum);
    return w.take();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    auto magic = r.get_bytes(sizeof(kMagic));
    if (std::memcmp(magic.data(), kMagic, sizeof(kMagic)) != 0) {
        throw CorruptStream("not a checkpoint (bad magic)", 0);
    }
    const std::size_t ver_at = r.offset();
    const auto version = r.get<std::uint16_t>();
    if (version != kCheckpointVersion) {
        throw CorruptStream("unsupported checkpoint version " + std::to_string(version) +
                                " (this build reads version " + std::to_string(kCheckpointVersion) +
                                ")",
                            ver_at);
    }
    if (bytes.size() < 4) throw CorruptStream("checkpoint too short", 0);
    const std::size_t body = bytes.size() - 4;

    Checkpoint ck;
    ck.iteration = r.get<std::uint32_t>();
    const ModelConfig cfg = read_model_config(r);
    const std::size_t n_at = r.offset();
    const auto n = r.get<std::uint64_t>();
    if (n * 8 * sizeof(float) > r.remaining()) {
        throw CorruptStream("gaussian count " + std::to_string(n) + " exceeds stream size", n_at);
    }
    ck.model = HyrfModel::create(cfg, 0);
    auto& gs = ck.model.gaussians;
    gs.resize(n);
    r.get_f32_array(gs.positions.value);
    r.get_f32_array(gs.colors.value);
    r.get_f32_array(gs.scales.value);
    r.get_f32_array(gs.opacities.value);
    read_table(r, ck.model.radiance.params(), "radiance table");
    read_table(r, ck.model.geometry.params(), "geometry table");
    read_decoder(r, ck.model.geometry_decoder);
    read_decoder(r, ck.model.color_decoder);
    ck.cameras = read_cameras(r);
    if (r.offset() != body) r.fail("trailing bytes before checksum");
    const auto stored = r.get<std::uint32_t>();
    if (stored != fnv1a(bytes.first(body))) throw CorruptStream("checksum mismatch", body);
    try {
        gs.validate();
    } catch (const Error& e) {
        throw CorruptStream(std::string("invalid gaussian data: ") + e.what(), n_at);
    }
    return ck;
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
    write_file(path, encode_checkpoint(ck));
}

Checkpoint load_checkpoint(const std::string& path) { return decode_checkpoint(read_file(path)); }

}  // namespace hyrf::io
