#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bijepa/nn.hpp"
#include "bijepa/optim.hpp"

namespace bijepa {

// Stability regime of a training system.
//   Unconstrained: no LayerNorm, no weight decay.
//   Expressive:    LayerNorm + weight decay 1e-4.
//   Restrictive:   Expressive + projection of all embeddings onto the unit sphere.
enum class ConstraintMode { Unconstrained, Expressive, Restrictive };

const char* to_string(ConstraintMode mode);
ConstraintMode constraint_mode_from_string(const std::string& name);

struct ConstraintSettings {
    bool with_ln = true;
    double weight_decay = 1e-4;
    bool sphere = false;
};

ConstraintSettings constraint_settings(ConstraintMode mode);

struct Architecture {
    enum class Kind { Mlp, Conv };
    Kind kind = Kind::Mlp;
    std::size_t input_dim = 10;  // MLP only
    std::size_t hidden = 64;     // MLP encoder hidden width
    std::size_t embed_dim = 16;
    std::size_t predictor_hidden = 64;
};

Architecture sine_architecture();
Architecture lorenz_architecture();
Architecture mnist_architecture();

struct ModelOptions {
    Architecture arch;
    ConstraintMode mode = ConstraintMode::Expressive;
    double alpha = 0.5;
    double tau = 0.995;
    std::uint64_t init_seed = 0;
};

// Online/target encoders plus the forward and (optional) backward predictors.
// The target encoder starts as an exact copy of the online encoder, never
// requires grad, and only changes through ema_update.
struct BiJepaModel {
    Network online_encoder;
    Network target_encoder;
    Network p_fwd;
    std::optional<Network> p_bwd; // absent iff alpha == 1
    double alpha = 0.5;
    EmaConfig ema;
    ConstraintMode mode = ConstraintMode::Expressive;

    explicit BiJepaModel(const ModelOptions& opts);

    bool restrictive() const noexcept { return mode == ConstraintMode::Restrictive; }
    bool classic() const noexcept { return !p_bwd.has_value(); }

    // Parameters updated by the optimizer: online encoder, P_fwd, P_bwd.
    std::vector<Tensor> trainable_parameters() const;
    void set_norm_mode(NormMode m);
};

// Builds the optimizer over exactly model.trainable_parameters().
AdamW make_optimizer(const BiJepaModel& model, double lr, double weight_decay);

// Row-wise projection onto the unit sphere; rejects rows of norm < 1e-12.
Tensor sphere_project(Graph& g, const Tensor& s);

struct Prediction {
    Tensor predicted; // s_hat, carries the graph
    Tensor target;    // stop-gradient target embedding
    Tensor online;    // raw online-encoder output feeding the predictor
};

// s_hat_y = P_fwd(f_theta(x)),  s_y = sg(f_theta_bar(y))
Prediction forward_pass(Graph& g, BiJepaModel& model, const Tensor& x, const Tensor& y);
// s_hat_x = P_bwd(f_theta(y)),  s_x = sg(f_theta_bar(x)); requires P_bwd.
Prediction backward_pass(Graph& g, BiJepaModel& model, const Tensor& x, const Tensor& y);

struct StepMetrics {
    std::size_t step = 0;
    double total_loss = 0.0;
    double fwd_loss = 0.0;
    double bwd_loss = 0.0; // 0 for the classic system
    double mean_embedding_norm = 0.0;
    bool diverged = false;   // loss above kDivergenceLoss or non-finite
    bool non_finite = false; // NaN/Inf loss or gradient; training must halt
};

inline constexpr double kDivergenceLoss = 1e6;

struct LossTerms {
    Tensor total;
    Tensor fwd;
    std::optional<Tensor> bwd;
    double mean_embedding_norm = 0.0;
};

// L = alpha * mse(s_hat_y, s_y) + (1 - alpha) * mse(s_hat_x, s_x); the backward
// branch is not evaluated at all for the classic system.
LossTerms compute_loss(Graph& g, BiJepaModel& model, const Tensor& x, const Tensor& y);
StepMetrics total_loss(BiJepaModel& model, const Tensor& x, const Tensor& y);

// Uni-directional objective ||P(f_theta(x)) - sg(f_theta_bar(y))||^2 written out
// directly from its three networks, independent of BiJepaModel.
Tensor classic_jepa_loss(Graph& g, Network& online, Network& target, Network& predictor, const Tensor& x,
                         const Tensor& y, bool sphere);

// One optimisation step: loss, backprop, AdamW on the trainable set, then EMA.
StepMetrics train_step(BiJepaModel& model, AdamW& opt, const Tensor& x, const Tensor& y, std::size_t step = 0);

// f_theta(x) in eval mode, sphere-projected iff Restrictive.
Tensor encode_for_inference(BiJepaModel& model, const Tensor& x);
// P_fwd(encode_for_inference(x)), sphere-projected iff Restrictive.
Tensor predict_forward(BiJepaModel& model, const Tensor& x);

double mean_row_norm(const Tensor& s);

} // namespace bijepa
