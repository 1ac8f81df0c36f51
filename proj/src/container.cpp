#include "tidb/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "tidb/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "container IO assumes a little-endian host");

namespace tidb::io {

namespace {

struct Writer {
    std::ofstream out;
    explicit Writer(const std::string& path) : out(path, std::ios::binary) {
        if (!out) throw FormatError("cannot open for writing: " + path);
    }
    void bytes(const void* p, std::size_t n) { out.write(static_cast<const char*>(p), n); }
    void u32(std::uint32_t v) { bytes(&v, 4); }
    void u64(std::uint64_t v) { bytes(&v, 8); }
    void i32(std::int32_t v) { bytes(&v, 4); }
    void f64(double v) { bytes(&v, 8); }
    void f64v(const std::vector<double>& v) { bytes(v.data(), v.size() * 8); }
    void str(const std::string& s) {
        u64(s.size());
        bytes(s.data(), s.size());
    }
    void finish(const std::string& path) {
        out.flush();
        if (!out) throw FormatError("short write: " + path);
    }
};

struct Reader {
    std::ifstream in;
    std::string path;
    explicit Reader(const std::string& p) : in(p, std::ios::binary), path(p) {
        if (!in) throw FormatError("cannot open: " + p);
    }
    void bytes(void* p, std::size_t n) {
        in.read(static_cast<char*>(p), n);
        if (std::size_t(in.gcount()) != n) throw FormatError("truncated container: " + path);
    }
    std::uint32_t u32() {
        std::uint32_t v;
        bytes(&v, 4);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v;
        bytes(&v, 8);
        return v;
    }
    std::int32_t i32() {
        std::int32_t v;
        bytes(&v, 4);
        return v;
    }
    double f64() {
        double v;
        bytes(&v, 8);
        return v;
    }
    std::vector<double> f64v(std::size_t n) {
        std::vector<double> v(n);
        bytes(v.data(), n * 8);
        return v;
    }
    std::string str() {
        std::string s(u64(), '\0');
        bytes(s.data(), s.size());
        return s;
    }
};

void write_header(Writer& w, std::uint32_t type) {
    w.bytes("TIDB", 4);
    w.u32(kFormatVersion);
    w.u32(type);
}

void read_header(Reader& r, std::uint32_t expected_type) {
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, "TIDB", 4) != 0) throw FormatError("bad magic: " + r.path);
    std::uint32_t version = r.u32();
    if (version != kFormatVersion)
        throw FormatError("unsupported container version " + std::to_string(version) + ": " + r.path);
    std::uint32_t type = r.u32();
    if (type != expected_type)
        throw FormatError("unexpected payload type " + std::to_string(type) + ": " + r.path);
}

void write_arrays(Writer& w, const std::vector<NamedArray>& arrays) {
    w.u32(std::uint32_t(arrays.size()));
    for (const auto& a : arrays) {
        w.str(a.name);
        w.u32(std::uint32_t(a.dims.size()));
        for (auto d : a.dims) w.u32(d);
        w.f64v(a.data);
    }
}

std::vector<NamedArray> read_arrays(Reader& r) {
    std::vector<NamedArray> arrays(r.u32());
    for (auto& a : arrays) {
        a.name = r.str();
        a.dims.resize(r.u32());
        std::size_t count = 1;
        for (auto& d : a.dims) {
            d = r.u32();
            count *= d;
        }
        a.data = r.f64v(count);
    }
    return arrays;
}

}  // namespace

void save_scaling_tensor(const std::string& path, const ScalingTensor& psi) {
    Writer w(path);
    write_header(w, kTypeScalingTensor);
    const ScaleGrid& g = psi.grid;
    w.f64(g.tau0);
    w.u32(std::uint32_t(g.scales_per_octave));
    w.u32(std::uint32_t(g.num_scales));
    w.f64(g.frame_rate);
    w.u32(std::uint32_t(g.beats));
    w.u32(std::uint32_t(g.pattern_frames));
    w.u32(std::uint32_t(g.kernel_frames));
    w.f64v(g.taus);
    w.f64v(g.scales);
    w.f64(psi.alpha);
    w.f64(psi.quadrature_step);
    w.f64v(psi.values);
    w.finish(path);
}

ScalingTensor load_scaling_tensor(const std::string& path) {
    Reader r(path);
    read_header(r, kTypeScalingTensor);
    ScalingTensor psi;
    ScaleGrid& g = psi.grid;
    g.tau0 = r.f64();
    g.scales_per_octave = int(r.u32());
    g.num_scales = int(r.u32());
    g.frame_rate = r.f64();
    g.beats = int(r.u32());
    g.pattern_frames = int(r.u32());
    g.kernel_frames = int(r.u32());
    g.taus = r.f64v(g.num_scales);
    g.scales = r.f64v(g.num_scales);
    psi.alpha = r.f64();
    psi.quadrature_step = r.f64();
    psi.values = r.f64v(std::size_t(g.kernel_frames) * g.pattern_frames * g.num_scales);
    return psi;
}

void save_feature_map(const std::string& path, const FeatureMap& f, bool as_f32) {
    Writer w(path);
    write_header(w, kTypeFeatureMap);
    w.u32(std::uint32_t(f.frames));
    w.u32(std::uint32_t(f.channels));
    w.u32(std::uint32_t(f.num_scales));
    w.f64(f.frame_rate);
    w.u32(as_f32 ? 4 : 8);
    if (as_f32) {
        std::vector<float> buf(f.values.begin(), f.values.end());
        w.bytes(buf.data(), buf.size() * 4);
    } else {
        w.f64v(f.values);
    }
    w.finish(path);
}

FeatureMap load_feature_map(const std::string& path) {
    Reader r(path);
    read_header(r, kTypeFeatureMap);
    FeatureMap f;
    f.frames = int(r.u32());
    f.channels = int(r.u32());
    f.num_scales = int(r.u32());
    f.frame_rate = r.f64();
    std::uint32_t dtype = r.u32();
    std::size_t count = std::size_t(f.frames) * std::max(f.num_scales, 1) * f.channels;
    if (dtype == 4) {
        std::vector<float> buf(count);
        r.bytes(buf.data(), count * 4);
        f.values.assign(buf.begin(), buf.end());
    } else if (dtype == 8) {
        f.values = r.f64v(count);
    } else {
        throw FormatError("unknown feature dtype: " + path);
    }
    return f;
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
    Writer w(path);
    write_header(w, kTypeCheckpoint);
    w.str(ck.config_text);
    w.str(ck.arch);
    w.i32(ck.epoch);
    w.f64(ck.best_val_loss);
    w.f64(ck.learning_rate);
    w.u64(ck.seed);
    write_arrays(w, ck.params);
    w.u32(ck.has_optimizer_state ? 1 : 0);
    if (ck.has_optimizer_state) write_arrays(w, ck.optimizer_state);
    w.u32(std::uint32_t(ck.history.size()));
    for (const auto& h : ck.history) {
        w.i32(h.epoch);
        w.f64(h.train_loss);
        w.f64(h.val_loss);
        w.f64(h.lr);
    }
    w.finish(path);
}

Checkpoint load_checkpoint(const std::string& path) {
    Reader r(path);
    read_header(r, kTypeCheckpoint);
    Checkpoint ck;
    ck.config_text = r.str();
    ck.arch = r.str();
    ck.epoch = r.i32();
    ck.best_val_loss = r.f64();
    ck.learning_rate = r.f64();
    ck.seed = r.u64();
    ck.params = read_arrays(r);
    ck.has_optimizer_state = r.u32() != 0;
    if (ck.has_optimizer_state) ck.optimizer_state = read_arrays(r);
    ck.history.resize(r.u32());
    for (auto& h : ck.history) {
        h.epoch = r.i32();
        h.train_loss = r.f64();
        h.val_loss = r.f64();
        h.lr = r.f64();
    }
    return ck;
}

}  // namespace tidb::io
