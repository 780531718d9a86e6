#include "bijepa/nn.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "bijepa/rng.hpp"

namespace bijepa {

const char* to_string(LayerKind kind) {
    switch (kind) {
    case LayerKind::Linear: return "Linear";
    case LayerKind::LayerNorm: return "LayerNorm";
    case LayerKind::ReLU: return "ReLU";
    case LayerKind::Conv2d: return "Conv2d";
    case LayerKind::BatchNorm2d: return "BatchNorm2d";
    case LayerKind::Flatten: return "Flatten";
    }
    return "?";
}

namespace {

Shape infer_output(const LayerSpec& spec, const Shape& in, std::size_t index) {
    auto fail = [&](const std::string& what) {
        throw std::invalid_argument("Network: layer " + std::to_string(index) + " (" + to_string(spec.kind) +
                                    ") " + what + ", incoming sample shape " + shape_str(in));
    };
    switch (spec.kind) {
    case LayerKind::Linear:
        if (in.size() != 1 || in[0] != spec.in) fail("expects " + std::to_string(spec.in) + " features");
        if (spec.out == 0) fail("has zero outputs");
        return {spec.out};
    case LayerKind::LayerNorm:
        if (in.size() != 1 || in[0] != spec.in || spec.in == 0) fail("expects width " + std::to_string(spec.in));
        return in;
    case LayerKind::ReLU:
        return in;
    case LayerKind::Conv2d:
        if (in.size() != 3 || in[0] != spec.in) fail("expects (" + std::to_string(spec.in) + ",H,W)");
        if (spec.out == 0) fail("has zero output channels");
        return {spec.out, conv_out_extent(in[1]), conv_out_extent(in[2])};
    case LayerKind::BatchNorm2d:
        if (in.size() != 3 || in[0] != spec.in) fail("expects " + std::to_string(spec.in) + " channels");
        return in;
    case LayerKind::Flatten:
        return {shape_numel(in)};
    }
    return in;
}

} // namespace

Network::Network(std::vector<LayerSpec> specs, Shape sample_shape)
    : specs_(std::move(specs)), sample_shape_(std::move(sample_shape)) {
    if (sample_shape_.empty() || shape_numel(sample_shape_) == 0) {
        throw std::invalid_argument("Network: empty sample shape");
    }
    Shape cur = sample_shape_;
    for (std::size_t i = 0; i < specs_.size(); ++i) {
        const LayerSpec& s = specs_[i];
        cur = infer_output(s, cur, i);
        Layer layer{s, Tensor(), Tensor(), -1};
        switch (s.kind) {
        case LayerKind::Linear:
            layer.weight = Tensor::zeros({s.in, s.out}, true);
            layer.bias = Tensor::zeros({s.out}, true);
            break;
        case LayerKind::Conv2d:
            layer.weight = Tensor::zeros({s.out, s.in, 3, 3}, true);
            layer.bias = Tensor::zeros({s.out}, true);
            break;
        case LayerKind::LayerNorm:
        case LayerKind::BatchNorm2d:
            layer.weight = Tensor::full({s.in}, 1.0, true);
            layer.bias = Tensor::zeros({s.in}, true);
            if (s.kind == LayerKind::BatchNorm2d) {
                layer.stats = static_cast<int>(norm_stats_.size());
                norm_stats_.emplace_back(s.in);
            }
            break;
        case LayerKind::ReLU:
        case LayerKind::Flatten:
            break;
        }
        layers_.push_back(std::move(layer));
    }
}

Shape Network::output_sample_shape() const {
    Shape cur = sample_shape_;
    for (std::size_t i = 0; i < specs_.size(); ++i) cur = infer_output(specs_[i], cur, i);
    return cur;
}

bool Network::same_architecture(const Network& other) const {
    return specs_ == other.specs_ && sample_shape_ == other.sample_shape_;
}

Tensor Network::forward(Graph& g, const Tensor& x) { return forward_prefix(g, x, layers_.size()); }

Tensor Network::forward_prefix(Graph& g, const Tensor& x, std::size_t count) {
    if (x.rank() != sample_shape_.size() + 1 || !std::equal(sample_shape_.begin(), sample_shape_.end(), x.shape().begin() + 1)) {
        throw std::invalid_argument("Network::forward: expected input (B," + shape_str(sample_shape_).substr(1) +
                                    ", got " + shape_str(x.shape()));
    }
    if (count > layers_.size()) throw std::out_of_range("Network::forward_prefix: too many layers requested");
    Tensor h = x;
    for (std::size_t i = 0; i < count; ++i) {
        Layer& l = layers_[i];
        switch (l.spec.kind) {
        case LayerKind::Linear: h = linear(g, h, l.weight, l.bias); break;
        case LayerKind::LayerNorm: h = layer_norm(g, h, l.weight, l.bias); break;
        case LayerKind::ReLU: h = relu(g, h); break;
        case LayerKind::Conv2d: h = conv2d(g, h, l.weight, l.bias); break;
        case LayerKind::BatchNorm2d:
            h = batch_norm2d(g, h, l.weight, l.bias, norm_stats_[static_cast<std::size_t>(l.stats)], mode_);
            break;
        case LayerKind::Flatten: h = flatten(g, h); break;
        }
    }
    return h;
}

std::vector<Tensor> Network::parameters() const {
    std::vector<Tensor> out;
    for (const Layer& l : layers_) {
        if (!l.has_params()) continue;
        out.push_back(l.weight);
        out.push_back(l.bias);
    }
    return out;
}

std::vector<NamedTensor> Network::named_parameters() const {
    std::vector<NamedTensor> out;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const Layer& l = layers_[i];
        if (!l.has_params()) continue;
        out.emplace_back(std::to_string(i) + ".weight", l.weight);
        out.emplace_back(std::to_string(i) + ".bias", l.bias);
    }
    return out;
}

std::size_t Network::parameter_count() const {
    std::size_t n = 0;
    for (const Tensor& p : parameters()) n += p.numel();
    return n;
}

std::vector<NamedTensor> Network::state() const {
    std::vector<NamedTensor> out;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const Layer& l = layers_[i];
        if (!l.has_params()) continue;
        out.emplace_back(std::to_string(i) + ".weight", l.weight);
        out.emplace_back(std::to_string(i) + ".bias", l.bias);
        if (l.stats >= 0) {
            const BatchNormStats& s = norm_stats_[static_cast<std::size_t>(l.stats)];
            out.emplace_back(std::to_string(i) + ".running_mean", Tensor({s.running_mean.size()}, s.running_mean));
            out.emplace_back(std::to_string(i) + ".running_var", Tensor({s.running_var.size()}, s.running_var));
        }
    }
    return out;
}

void Network::load_state(const std::vector<NamedTensor>& state) {
    auto expected = this->state();
    if (expected.size() != state.size()) {
        throw std::invalid_argument("Network::load_state: expected " + std::to_string(expected.size()) +
                                    " tensors, got " + std::to_string(state.size()));
    }
    for (std::size_t i = 0; i < expected.size(); ++i) {
        if (expected[i].first != state[i].first || expected[i].second.shape() != state[i].second.shape()) {
            throw std::invalid_argument("Network::load_state: tensor " + std::to_string(i) + " is '" + state[i].first +
                                        "' " + shape_str(state[i].second.shape()) + ", expected '" +
                                        expected[i].first + "' " + shape_str(expected[i].second.shape()));
        }
    }
    std::size_t k = 0;
    for (Layer& l : layers_) {
        if (!l.has_params()) continue;
        auto copy = [&](Tensor& dst) {
            auto src = state[k++].second.values();
            std::copy(src.begin(), src.end(), dst.values().begin());
        };
        copy(l.weight);
        copy(l.bias);
        if (l.stats >= 0) {
            BatchNormStats& s = norm_stats_[static_cast<std::size_t>(l.stats)];
            auto mean = state[k++].second.values();
            auto var = state[k++].second.values();
            s.running_mean.assign(mean.begin(), mean.end());
            s.running_var.assign(var.begin(), var.end());
        }
    }
}

void Network::set_requires_grad(bool flag) {
    for (Tensor p : parameters()) p.set_requires_grad(flag);
}

void Network::zero_grad() {
    for (Tensor p : parameters()) p.zero_grad();
}

void Network::clear_grad() {
    for (Tensor p : parameters()) p.clear_grad();
}

// ---------------------------------------------------------------------------

Network build_mlp_encoder(std::size_t in, std::size_t hidden, std::size_t out, bool with_ln) {
    if (in == 0 || hidden == 0 || out == 0) throw std::invalid_argument("build_mlp_encoder: dims must be >= 1");
    std::vector<LayerSpec> s;
    s.push_back(LayerSpec::linear(in, hidden));
    if (with_ln) s.push_back(LayerSpec::layer_norm(hidden));
    s.push_back(LayerSpec::relu());
    s.push_back(LayerSpec::linear(hidden, hidden));
    if (with_ln) s.push_back(LayerSpec::layer_norm(hidden));
    s.push_back(LayerSpec::relu());
    s.push_back(LayerSpec::linear(hidden, out));
    return Network(std::move(s), {in});
}

Network build_predictor(std::size_t dim, std::size_t hidden, bool with_ln) {
    if (dim == 0 || hidden == 0) throw std::invalid_argument("build_predictor: dims must be >= 1");
    std::vector<LayerSpec> s;
    s.push_back(LayerSpec::linear(dim, hidden));
    if (with_ln) s.push_back(LayerSpec::layer_norm(hidden));
    s.push_back(LayerSpec::relu());
    s.push_back(LayerSpec::linear(hidden, dim));
    return Network(std::move(s), {dim});
}

Network build_conv_encoder() {
    return Network(
        {
            LayerSpec::conv2d(1, 32),
            LayerSpec::batch_norm2d(32),
            LayerSpec::relu(),
            LayerSpec::conv2d(32, 64),
            LayerSpec::batch_norm2d(64),
            LayerSpec::relu(),
            LayerSpec::flatten(),
            LayerSpec::linear(1792, 128),
            LayerSpec::layer_norm(128),
            LayerSpec::relu(),
            LayerSpec::linear(128, 64),
        },
        {1, 28, 14});
}

void init_parameters(Network& net, std::uint64_t seed) {
    Rng rng(seed);
    auto params = net.named_parameters();
    std::size_t p = 0;
    for (const LayerSpec& s : net.specs()) {
        if (s.kind == LayerKind::ReLU || s.kind == LayerKind::Flatten) continue;
        Tensor w = params[p++].second;
        Tensor b = params[p++].second;
        if (s.kind == LayerKind::Linear || s.kind == LayerKind::Conv2d) {
            const double fan_in = static_cast<double>(s.kind == LayerKind::Linear ? s.in : s.in * 9);
            const double bound = 1.0 / std::sqrt(fan_in);
            for (double& v : w.values()) v = rng.uniform(-bound, bound);
            std::fill(b.values().begin(), b.values().end(), 0.0);
        } else {
            std::fill(w.values().begin(), w.values().end(), 1.0);
            std::fill(b.values().begin(), b.values().end(), 0.0);
        }
    }
    for (BatchNormStats& s : net.norm_stats()) {
        std::fill(s.running_mean.begin(), s.running_mean.end(), 0.0);
        std::fill(s.running_var.begin(), s.running_var.end(), 1.0);
    }
}

void clone_into(const Network& src, Network& dst) {
    if (!src.same_architecture(dst)) throw std::invalid_argument("clone_into: network architectures differ");
    dst.load_state(src.state());
    dst.set_mode(src.mode());
}

std::uint64_t parameter_checksum(const Network& net) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& [name, t] : net.state()) {
        for (double v : t.values()) {
            const auto bits = std::bit_cast<std::uint64_t>(v);
            for (int i = 0; i < 8; ++i) {
                h ^= (bits >> (8 * i)) & 0xffU;
                h *= 0x100000001b3ULL;
            }
        }
    }
    return h;
}

// ---------------------------------------------------------------------------

namespace {

template <typename T>
void write_le(std::ostream& os, T value) {
    static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");
    os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_le(std::istream& is, const std::filesystem::path& path) {
    T value{};
    if (!is.read(reinterpret_cast<char*>(&value), sizeof(T))) {
        throw std::runtime_error("load_tensors: truncated file " + path.string());
    }
    return value;
}

} // namespace

void save_tensors(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("save_tensors: cannot open " + path.string() + " for writing");
    os.write("BJPA", 4);
    write_le<std::uint32_t>(os, kCheckpointVersion);
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, t] : tensors) {
        write_le<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_le<std::uint32_t>(os, static_cast<std::uint32_t>(t.rank()));
        for (std::size_t d : t.shape()) write_le<std::uint32_t>(os, static_cast<std::uint32_t>(d));
        for (double v : t.values()) write_le<double>(os, v);
    }
    if (!os) throw std::runtime_error("save_tensors: write failed for " + path.string());
}

std::vector<NamedTensor> load_tensors(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_tensors: cannot open " + path.string());
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, "BJPA", 4) != 0) {
        throw std::runtime_error("load_tensors: " + path.string() + " is not a BJPA container");
    }
    const auto version = read_le<std::uint32_t>(is, path);
    if (version != kCheckpointVersion) {
        throw std::runtime_error("load_tensors: unsupported version " + std::to_string(version) + " in " + path.string());
    }
    const auto count = read_le<std::uint32_t>(is, path);
    std::vector<NamedTensor> out;
    out.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto len = read_le<std::uint32_t>(is, path);
        std::string name(len, '\0');
        if (!is.read(name.data(), len)) throw std::runtime_error("load_tensors: truncated file " + path.string());
        const auto rank = read_le<std::uint32_t>(is, path);
        Shape shape(rank);
        for (auto& d : shape) d = read_le<std::uint32_t>(is, path);
        std::vector<double> values(shape_numel(shape));
        for (double& v : values) v = read_le<double>(is, path);
        out.emplace_back(std::move(name), Tensor(std::move(shape), std::move(values)));
    }
    return out;
}

void save_checkpoint(const std::filesystem::path& path, const Network& net) { save_tensors(path, net.state()); }

void load_checkpoint(const std::filesystem::path& path, Network& net) { net.load_state(load_tensors(path)); }

} // namespace bijepa
