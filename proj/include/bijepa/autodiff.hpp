#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "bijepa/tensor.hpp"

namespace bijepa {

// Define-by-run tape. Every differentiable primitive executed against a
// recording Graph appends one node; backward() walks the nodes in reverse
// execution order, so each node is visited exactly once.
class Graph {
public:
    using BackwardFn = std::function<void(std::span<const double> out_grad)>;

    struct Node {
        std::string op;
        std::vector<Tensor> inputs;
        Tensor output;
        BackwardFn backward;
    };

    Graph() = default;
    // A non-recording graph evaluates ops without building a tape.
    static Graph inference();

    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;
    Graph(Graph&&) = default;
    Graph& operator=(Graph&&) = default;

    bool recording() const noexcept { return recording_; }
    bool consumed() const noexcept { return consumed_; }
    std::size_t size() const noexcept { return nodes_.size(); }
    const std::vector<Node>& nodes() const noexcept { return nodes_; }

    // True when the op producing `output` from `inputs` must be taped.
    bool tracks(std::span<const Tensor> inputs) const;

    // Marks `output` as requiring grad and appends a node for it.
    void record(std::string op, std::vector<Tensor> inputs, Tensor& output, BackwardFn fn);

    // Seeds d(loss)/d(loss) = 1 and propagates to every reachable
    // requires_grad tensor, accumulating into existing gradient slots.
    // The tape is released afterwards; a second call throws.
    void backward(Tensor loss);

private:
    std::vector<Node> nodes_;
    bool recording_ = true;
    bool consumed_ = false;
};

// Accumulates `g` into the gradient slot of `t` when it requires grad.
void accumulate_grad(Tensor& t, std::span<const double> g);

// ---------------------------------------------------------------------------
// Primitives. All take the graph first; with a non-recording graph (or when
// no input requires grad) they just compute values.

// x[B,I] * w[I,O] + b[O]
Tensor linear(Graph& g, const Tensor& x, const Tensor& w, const Tensor& b);
Tensor relu(Graph& g, const Tensor& x);

inline constexpr double kLayerNormEps = 1e-5;
inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

// Per-row normalisation of x[B,D] with the biased variance, then gamma*xhat+beta.
Tensor layer_norm(Graph& g, const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps = kLayerNormEps);

// 3x3 cross-correlation, stride 2, zero padding 1.
// x[B,Cin,H,W], k[Cout,Cin,3,3], b[Cout] -> [B,Cout,(H-1)/2+1,(W-1)/2+1]
Tensor conv2d(Graph& g, const Tensor& x, const Tensor& k, const Tensor& b);
inline constexpr std::size_t conv_out_extent(std::size_t n) { return (n - 1) / 2 + 1; }

struct BatchNormStats {
    std::vector<double> running_mean;
    std::vector<double> running_var;
    double momentum = kBatchNormMomentum;

    explicit BatchNormStats(std::size_t channels = 0)
        : running_mean(channels, 0.0), running_var(channels, 1.0) {}
};

enum class NormMode { Train, Eval };

// Per-channel normalisation over (B,H,W). Train mode uses batch statistics
// (biased variance) and updates `stats`; eval mode reads `stats`.
Tensor batch_norm2d(Graph& g, const Tensor& x, const Tensor& gamma, const Tensor& beta,
                    BatchNormStats& stats, NormMode mode, double eps = kBatchNormEps);

// [B, ...] -> [B, prod(...)]
Tensor flatten(Graph& g, const Tensor& x);

// Divides every row of x[B,D] by its L2 norm. Rows with norm below
// `min_norm` are rejected.
Tensor row_normalize(Graph& g, const Tensor& x, double min_norm = 1e-12);

// Mean of squared differences over all elements.
Tensor mse_loss(Graph& g, const Tensor& pred, const Tensor& target);

// Mean over the batch of -log softmax(logits)[label].
Tensor softmax_cross_entropy(Graph& g, const Tensor& logits, std::span<const int> labels);

// Value copy that is opaque to backward.
Tensor stop_gradient(const Tensor& x);

Tensor add(Graph& g, const Tensor& a, const Tensor& b);
Tensor mul(Graph& g, const Tensor& a, const Tensor& b);
Tensor scale(Graph& g, const Tensor& x, double factor);
Tensor sum(Graph& g, const Tensor& x);

} // namespace bijepa
