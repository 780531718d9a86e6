#pragma once

#include <cstddef>
#include <vector>

#include "bijepa/nn.hpp"

namespace bijepa {

struct AdamWConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-4;
};

// AdamW with decoupled weight decay:
//   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2
//   theta <- theta - lr (mhat / (sqrt(vhat) + eps) + lambda theta)
// Only the tensors handed to the constructor are ever modified.
class AdamW {
public:
    AdamW(std::vector<Tensor> params, AdamWConfig cfg);

    // Returns false (and leaves every parameter untouched) when any gradient
    // is non-finite; the divergence flag then stays raised.
    bool step();
    void zero_grad();

    void set_weight_decay(double lambda);
    void set_lr(double lr);

    const AdamWConfig& config() const noexcept { return cfg_; }
    std::size_t step_count() const noexcept { return step_; }
    bool diverged() const noexcept { return diverged_; }
    const std::vector<Tensor>& params() const noexcept { return params_; }
    const std::vector<std::vector<double>>& first_moments() const noexcept { return m_; }
    const std::vector<std::vector<double>>& second_moments() const noexcept { return v_; }

private:
    std::vector<Tensor> params_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    AdamWConfig cfg_;
    std::size_t step_ = 0;
    bool diverged_ = false;
};

struct EmaConfig {
    double tau = 0.995;

    EmaConfig() = default;
    explicit EmaConfig(double tau);
};

// target <- tau * target + (1 - tau) * online, parameter by parameter.
void ema_update(Network& target, const Network& online, const EmaConfig& cfg);

} // namespace bijepa
