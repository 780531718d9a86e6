#include "bijepa/optim.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bijepa {

AdamW::AdamW(std::vector<Tensor> params, AdamWConfig cfg) : params_(std::move(params)), cfg_(cfg) {
    if (cfg_.lr < 0.0) throw std::invalid_argument("AdamW: negative learning rate");
    if (cfg_.weight_decay < 0.0) throw std::invalid_argument("AdamW: negative weight decay");
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const Tensor& p : params_) {
        m_.emplace_back(p.numel(), 0.0);
        v_.emplace_back(p.numel(), 0.0);
    }
}

bool AdamW::step() {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (!params_[i].has_grad()) {
            throw std::logic_error("AdamW::step: parameter " + std::to_string(i) + " has no gradient");
        }
        for (double g : params_[i].grad()) {
            if (!std::isfinite(g)) {
                diverged_ = true;
                return false;
            }
        }
    }

    ++step_;
    const double t = static_cast<double>(step_);
    const double bc1 = 1.0 - std::pow(cfg_.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, t);
    for (std::size_t i = 0; i < params_.size(); ++i) {
        auto theta = params_[i].values();
        auto g = params_[i].grad();
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t j = 0; j < theta.size(); ++j) {
            m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g[j];
            v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g[j] * g[j];
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            theta[j] -= cfg_.lr * (mhat / (std::sqrt(vhat) + cfg_.eps) + cfg_.weight_decay * theta[j]);
        }
    }
    return true;
}

void AdamW::zero_grad() {
    for (Tensor& p : params_) p.zero_grad();
}

void AdamW::set_weight_decay(double lambda) {
    if (!(lambda >= 0.0)) throw std::invalid_argument("AdamW::set_weight_decay: lambda must be >= 0");
    cfg_.weight_decay = lambda;
}

void AdamW::set_lr(double lr) {
    if (!(lr >= 0.0)) throw std::invalid_argument("AdamW::set_lr: lr must be >= 0");
    cfg_.lr = lr;
}

EmaConfig::EmaConfig(double tau_) : tau(tau_) {
    if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("EmaConfig: tau must lie in [0,1]");
}

void ema_update(Network& target, const Network& online, const EmaConfig& cfg) {
    if (!target.same_architecture(online)) throw std::invalid_argument("ema_update: network architectures differ");
    if (!(cfg.tau >= 0.0 && cfg.tau <= 1.0)) throw std::invalid_argument("ema_update: tau must lie in [0,1]");
    auto dst = target.parameters();
    auto src = online.parameters();
    const double tau = cfg.tau;
    for (std::size_t i = 0; i < dst.size(); ++i) {
        auto d = dst[i].values();
        auto s = src[i].values();
        for (std::size_t j = 0; j < d.size(); ++j) d[j] += (1.0 - tau) * (s[j] - d[j]);
    }
}

} // namespace bijepa
