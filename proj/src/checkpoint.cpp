#include "atsc/checkpoint.hpp"

#include "atsc/errors.hpp"

#include <cstring>
#include <fstream>
#include <vector>

namespace atsc {

namespace {

constexpr char kMagic[8] = {'A', 'T', 'S', 'C', 'N', 'E', 'T', '1'};
constexpr std::uint32_t kFormatVersion = 1;

std::uint64_t fnv1a64(const std::vector<std::uint8_t> &bytes, size_t count) {
    std::uint64_t h = 1469598103934665603ull;
    for (size_t i = 0; i < count; ++i) {
        h ^= bytes[i];
        h *= 1099511628211ull;
    }
    return h;
}

class ByteWriter {
  public:
    std::vector<std::uint8_t> bytes;

    void raw(const void *src, size_t n) {
        const auto *p = static_cast<const std::uint8_t *>(src);
        bytes.insert(bytes.end(), p, p + n);
    }
    void u8(std::uint8_t v) { bytes.push_back(v); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void f32(float v) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        u32(bits);
    }
    void f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        u64(bits);
    }
};

class ByteReader {
  public:
    explicit ByteReader(std::vector<std::uint8_t> bytes) : bytes_(std::move(bytes)) {}

    size_t pos = 0;
    const std::vector<std::uint8_t> &bytes() const { return bytes_; }
    size_t size() const { return bytes_.size(); }

    void need(size_t n) const {
        if (pos + n > bytes_.size())
            throw CheckpointMismatchError("checkpoint file truncated");
    }
    std::uint8_t u8() {
        need(1);
        return bytes_[pos++];
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos++]) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos++]) << (8 * i);
        return v;
    }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    float f32() {
        const std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
    double f64() {
        const std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }

  private:
    std::vector<std::uint8_t> bytes_;
};

std::uint8_t kind_code(LayerKind kind) { return static_cast<std::uint8_t>(kind); }

LayerKind kind_from_code(std::uint8_t code) {
    if (code > static_cast<std::uint8_t>(LayerKind::Softmax))
        throw CheckpointMismatchError("unknown layer kind code " + std::to_string(code));
    return static_cast<LayerKind>(code);
}

} // namespace

void save_checkpoint(const std::string &path, const Net &net, const CheckpointMeta &meta) {
    ByteWriter w;
    w.raw(kMagic, sizeof(kMagic));
    w.u32(kFormatVersion);
    w.u64(net.arch_hash());
    w.f64(meta.partition.detection_range_m);
    w.f64(meta.partition.first_cell_m);
    w.i32(meta.partition.num_cells);
    w.f64(meta.norm.count_max);
    w.f64(meta.norm.speed_max);
    w.f64(meta.norm.occupancy_max);
    const auto &in_shape = net.input_shape();
    w.u32(static_cast<std::uint32_t>(in_shape.size()));
    for (int d : in_shape) w.i32(d);
    w.u32(static_cast<std::uint32_t>(net.layers().size()));
    for (const Layer &layer : net.layers()) {
        w.u8(kind_code(layer.kind));
        w.i32(layer.kernel);
        w.i32(layer.in_ch);
        w.i32(layer.out_ch);
        w.i32(layer.in_units);
        w.i32(layer.out_units);
        w.u64(layer.weights.size());
        for (float v : layer.weights) w.f32(v);
        w.u64(layer.bias.size());
        for (float v : layer.bias) w.f32(v);
    }
    w.u64(fnv1a64(w.bytes, w.bytes.size()));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open checkpoint file for writing: " + path);
    out.write(reinterpret_cast<const char *>(w.bytes.data()),
              static_cast<std::streamsize>(w.bytes.size()));
    if (!out) throw Error("failed writing checkpoint file: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingInputError("cannot open checkpoint file: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (bytes.size() < sizeof(kMagic) + 12 + 8)
        throw CheckpointMismatchError("checkpoint file too short");

    // integrity first: trailing checksum over everything before it
    std::uint64_t stored_sum = 0;
    for (int i = 0; i < 8; ++i)
        stored_sum |= static_cast<std::uint64_t>(bytes[bytes.size() - 8 + i]) << (8 * i);
    if (fnv1a64(bytes, bytes.size() - 8) != stored_sum)
        throw ChecksumMismatchError("checkpoint checksum mismatch: " + path);

    ByteReader r(std::move(bytes));
    char magic[8];
    r.need(8);
    std::memcpy(magic, r.bytes().data(), 8);
    r.pos = 8;
    if (std::memcmp(magic, kMagic, 8) != 0)
        throw CheckpointMismatchError("not a checkpoint file: " + path);
    const std::uint32_t version = r.u32();
    if (version != kFormatVersion)
        throw CheckpointMismatchError("unsupported checkpoint format version " +
                                      std::to_string(version));
    const std::uint64_t stored_arch = r.u64();

    CheckpointMeta meta;
    meta.partition.detection_range_m = r.f64();
    meta.partition.first_cell_m = r.f64();
    meta.partition.num_cells = r.i32();
    meta.norm.count_max = r.f64();
    meta.norm.speed_max = r.f64();
    meta.norm.occupancy_max = r.f64();

    const std::uint32_t rank = r.u32();
    if (rank == 0 || rank > 4) throw CheckpointMismatchError("implausible input shape rank");
    std::vector<int> in_shape;
    for (std::uint32_t i = 0; i < rank; ++i) in_shape.push_back(r.i32());

    const std::uint32_t layer_count = r.u32();
    if (layer_count == 0 || layer_count > 256)
        throw CheckpointMismatchError("implausible layer count");
    std::vector<Layer> layers;
    std::vector<std::vector<float>> weight_blobs, bias_blobs;
    for (std::uint32_t li = 0; li < layer_count; ++li) {
        const LayerKind kind = kind_from_code(r.u8());
        const int kernel = r.i32();
        const int in_ch = r.i32();
        const int out_ch = r.i32();
        const int in_units = r.i32();
        const int out_units = r.i32();
        Layer layer;
        switch (kind) {
        case LayerKind::Conv2D: layer = conv2d(kernel, in_ch, out_ch); break;
        case LayerKind::Dense: layer = dense(in_units, out_units); break;
        case LayerKind::MaxPool2D: layer = maxpool2(); break;
        case LayerKind::Flatten: layer = flatten(); break;
        case LayerKind::ReLU: layer = relu(); break;
        case LayerKind::Softmax: layer = softmax(); break;
        }
        const std::uint64_t w_count = r.u64();
        if (w_count != layer.weights.size())
            throw CheckpointMismatchError("stored weight count disagrees with layer shape");
        std::vector<float> weights(w_count);
        for (auto &v : weights) v = r.f32();
        const std::uint64_t b_count = r.u64();
        if (b_count != layer.bias.size())
            throw CheckpointMismatchError("stored bias count disagrees with layer shape");
        std::vector<float> bias(b_count);
        for (auto &v : bias) v = r.f32();
        layers.push_back(std::move(layer));
        weight_blobs.push_back(std::move(weights));
        bias_blobs.push_back(std::move(bias));
    }
    if (r.pos != r.size() - 8)
        throw CheckpointMismatchError("checkpoint has trailing bytes");

    Net net(std::move(in_shape), std::move(layers), 0);
    if (net.arch_hash() != stored_arch)
        throw CheckpointMismatchError("stored architecture hash disagrees with layer list");
    for (size_t li = 0; li < net.layers().size(); ++li) {
        net.layers()[li].weights = std::move(weight_blobs[li]);
        net.layers()[li].bias = std::move(bias_blobs[li]);
    }
    return {std::move(net), meta};
}

CheckpointMeta load_params_into(Net &net, const std::string &path) {
    LoadedCheckpoint loaded = load_checkpoint(path);
    if (loaded.net.arch_hash() != net.arch_hash())
        throw ArchitectureMismatchError("checkpoint architecture " + loaded.net.describe() +
                                        " does not match target " + net.describe());
    for (size_t li = 0; li < net.layers().size(); ++li) {
        net.layers()[li].weights = std::move(loaded.net.layers()[li].weights);
        net.layers()[li].bias = std::move(loaded.net.layers()[li].bias);
    }
    return loaded.meta;
}

} // namespace atsc
