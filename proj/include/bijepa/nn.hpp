#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "bijepa/autodiff.hpp"

namespace bijepa {

enum class LayerKind { Linear, LayerNorm, ReLU, Conv2d, BatchNorm2d, Flatten };

const char* to_string(LayerKind kind);

struct LayerSpec {
    LayerKind kind = LayerKind::ReLU;
    // Linear: in/out features. Conv2d: in/out channels. LayerNorm: in = out = width.
    // BatchNorm2d: in = out = channels. ReLU/Flatten: unused.
    std::size_t in = 0;
    std::size_t out = 0;

    static LayerSpec linear(std::size_t in, std::size_t out) { return {LayerKind::Linear, in, out}; }
    static LayerSpec layer_norm(std::size_t width) { return {LayerKind::LayerNorm, width, width}; }
    static LayerSpec relu() { return {LayerKind::ReLU, 0, 0}; }
    static LayerSpec conv2d(std::size_t cin, std::size_t cout) { return {LayerKind::Conv2d, cin, cout}; }
    static LayerSpec batch_norm2d(std::size_t channels) { return {LayerKind::BatchNorm2d, channels, channels}; }
    static LayerSpec flatten() { return {LayerKind::Flatten, 0, 0}; }

    friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

using NamedTensor = std::pair<std::string, Tensor>;

// Ordered stack of layers with their parameter tensors.
//
// The per-sample input shape is fixed at construction ({features} for MLPs,
// {C,H,W} for conv stacks) and every layer is shape-checked against its
// predecessor before any parameter is allocated.
class Network {
public:
    Network() = default;
    Network(std::vector<LayerSpec> specs, Shape sample_shape);

    const std::vector<LayerSpec>& specs() const noexcept { return specs_; }
    const Shape& sample_shape() const noexcept { return sample_shape_; }
    Shape output_sample_shape() const;
    bool same_architecture(const Network& other) const;

    NormMode mode() const noexcept { return mode_; }
    void set_mode(NormMode mode) noexcept { mode_ = mode; }

    Tensor forward(Graph& g, const Tensor& x);
    // Forward through layers [0, count) only.
    Tensor forward_prefix(Graph& g, const Tensor& x, std::size_t count);

    std::vector<Tensor> parameters() const;
    std::vector<NamedTensor> named_parameters() const;
    std::size_t parameter_count() const;

    // Parameters plus batch-norm running statistics.
    std::vector<NamedTensor> state() const;
    void load_state(const std::vector<NamedTensor>& state);

    void set_requires_grad(bool flag);
    void zero_grad();
    void clear_grad();

    std::vector<BatchNormStats>& norm_stats() noexcept { return norm_stats_; }
    const std::vector<BatchNormStats>& norm_stats() const noexcept { return norm_stats_; }

private:
    struct Layer {
        LayerSpec spec;
        Tensor weight; // Linear w[I,O] / Conv k[Cout,Cin,3,3] / norm gamma
        Tensor bias;   // Linear/Conv bias / norm beta
        int stats = -1; // index into norm_stats_ for BatchNorm2d
        bool has_params() const { return spec.kind != LayerKind::ReLU && spec.kind != LayerKind::Flatten; }
    };

    std::vector<LayerSpec> specs_;
    Shape sample_shape_;
    std::vector<Layer> layers_;
    std::vector<BatchNormStats> norm_stats_;
    NormMode mode_ = NormMode::Train;
};

// Linear(in,hidden) [LN] ReLU Linear(hidden,hidden) [LN] ReLU Linear(hidden,out)
Network build_mlp_encoder(std::size_t in, std::size_t hidden, std::size_t out, bool with_ln);
// Linear(dim,hidden) [LN] ReLU Linear(hidden,dim)
Network build_predictor(std::size_t dim, std::size_t hidden, bool with_ln);
// Conv(1->32) BN ReLU Conv(32->64) BN ReLU Flatten Linear(1792,128) LN ReLU Linear(128,64),
// for (B,1,28,14) half-images.
Network build_conv_encoder();

// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)); biases 0; norm gamma 1, beta 0.
void init_parameters(Network& net, std::uint64_t seed);

// Copies parameter values and running statistics; no storage is shared.
void clone_into(const Network& src, Network& dst);

// Order-sensitive FNV-1a digest over all parameter bits.
std::uint64_t parameter_checksum(const Network& net);

// Flat binary container: "BJPA", u32 version, u32 count, then per tensor
// u32 name length, UTF-8 name, u32 rank, u32 dims[rank], f64 values. All
// integers and floats little-endian.
inline constexpr std::uint32_t kCheckpointVersion = 1;
void save_tensors(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load_tensors(const std::filesystem::path& path);

void save_checkpoint(const std::filesystem::path& path, const Network& net);
void load_checkpoint(const std::filesystem::path& path, Network& net);

} // namespace bijepa
