#include "bijepa/jepa.hpp"

#include <cmath>
#include <stdexcept>

namespace bijepa {

const char* to_string(ConstraintMode mode) {
    switch (mode) {
    case ConstraintMode::Unconstrained: return "unconstrained";
    case ConstraintMode::Expressive: return "expressive";
    case ConstraintMode::Restrictive: return "restrictive";
    }
    return "?";
}

ConstraintMode constraint_mode_from_string(const std::string& name) {
    if (name == "unconstrained") return ConstraintMode::Unconstrained;
    if (name == "expressive") return ConstraintMode::Expressive;
    if (name == "restrictive") return ConstraintMode::Restrictive;
    throw std::invalid_argument("unknown constraint mode '" + name + "'");
}

ConstraintSettings constraint_settings(ConstraintMode mode) {
    switch (mode) {
    case ConstraintMode::Unconstrained: return {false, 0.0, false};
    case ConstraintMode::Expressive: return {true, 1e-4, false};
    case ConstraintMode::Restrictive: return {true, 1e-4, true};
    }
    return {};
}

Architecture sine_architecture() { return {Architecture::Kind::Mlp, 10, 64, 16, 64}; }
Architecture lorenz_architecture() { return {Architecture::Kind::Mlp, 60, 128, 32, 128}; }
Architecture mnist_architecture() { return {Architecture::Kind::Conv, 0, 128, 64, 128}; }

namespace {

Network build_encoder(const Architecture& arch, bool with_ln) {
    if (arch.kind == Architecture::Kind::Conv) return build_conv_encoder();
    return build_mlp_encoder(arch.input_dim, arch.hidden, arch.embed_dim, with_ln);
}

} // namespace

BiJepaModel::BiJepaModel(const ModelOptions& opts)
    : online_encoder(build_encoder(opts.arch, constraint_settings(opts.mode).with_ln)),
      target_encoder(build_encoder(opts.arch, constraint_settings(opts.mode).with_ln)),
      p_fwd(build_predictor(opts.arch.embed_dim, opts.arch.predictor_hidden, constraint_settings(opts.mode).with_ln)),
      alpha(opts.alpha),
      ema(opts.tau),
      mode(opts.mode) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("BiJepaModel: alpha must lie in [0,1]");
    const bool with_ln = constraint_settings(opts.mode).with_ln;
    if (online_encoder.output_sample_shape() != Shape{opts.arch.embed_dim}) {
        throw std::invalid_argument("BiJepaModel: encoder output does not match embed_dim");
    }
    init_parameters(online_encoder, opts.init_seed * 4 + 0);
    init_parameters(p_fwd, opts.init_seed * 4 + 1);
    if (alpha < 1.0) {
        p_bwd.emplace(build_predictor(opts.arch.embed_dim, opts.arch.predictor_hidden, with_ln));
        init_parameters(*p_bwd, opts.init_seed * 4 + 2);
    }
    clone_into(online_encoder, target_encoder);
    target_encoder.set_requires_grad(false);
}

std::vector<Tensor> BiJepaModel::trainable_parameters() const {
    std::vector<Tensor> out = online_encoder.parameters();
    for (const Tensor& p : p_fwd.parameters()) out.push_back(p);
    if (p_bwd) {
        for (const Tensor& p : p_bwd->parameters()) out.push_back(p);
    }
    return out;
}

void BiJepaModel::set_norm_mode(NormMode m) {
    online_encoder.set_mode(m);
    target_encoder.set_mode(m);
    p_fwd.set_mode(m);
    if (p_bwd) p_bwd->set_mode(m);
}

AdamW make_optimizer(const BiJepaModel& model, double lr, double weight_decay) {
    AdamWConfig cfg;
    cfg.lr = lr;
    cfg.weight_decay = weight_decay;
    return AdamW(model.trainable_parameters(), cfg);
}

Tensor sphere_project(Graph& g, const Tensor& s) { return row_normalize(g, s, 1e-12); }

namespace {

Tensor maybe_project(Graph& g, const Tensor& s, bool sphere) { return sphere ? sphere_project(g, s) : s; }

Tensor target_embedding(Network& target, const Tensor& view, bool sphere) {
    Graph none = Graph::inference();
    return stop_gradient(maybe_project(none, target.forward(none, view), sphere));
}

Prediction predict(Graph& g, Network& online, Network& predictor, Network& target, const Tensor& source,
                   const Tensor& goal, bool sphere) {
    Tensor raw = online.forward(g, source);
    Tensor s = maybe_project(g, raw, sphere);
    Tensor pred = maybe_project(g, predictor.forward(g, s), sphere);
    return {pred, target_embedding(target, goal, sphere), raw};
}

} // namespace

Prediction forward_pass(Graph& g, BiJepaModel& model, const Tensor& x, const Tensor& y) {
    if (x.dim(0) != y.dim(0)) throw std::invalid_argument("forward_pass: x and y batch sizes differ");
    return predict(g, model.online_encoder, model.p_fwd, model.target_encoder, x, y, model.restrictive());
}

Prediction backward_pass(Graph& g, BiJepaModel& model, const Tensor& x, const Tensor& y) {
    if (!model.p_bwd) throw std::logic_error("backward_pass: model has no backward predictor (alpha == 1)");
    if (x.dim(0) != y.dim(0)) throw std::invalid_argument("backward_pass: x and y batch sizes differ");
    return predict(g, model.online_encoder, *model.p_bwd, model.target_encoder, y, x, model.restrictive());
}

double mean_row_norm(const Tensor& s) {
    if (s.rank() != 2 || s.dim(0) == 0) return 0.0;
    const std::size_t rows = s.dim(0), d = s.dim(1);
    double acc = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        double sq = 0.0;
        for (std::size_t j = 0; j < d; ++j) sq += s[r * d + j] * s[r * d + j];
        acc += std::sqrt(sq);
    }
    return acc / static_cast<double>(rows);
}

LossTerms compute_loss(Graph& g, BiJepaModel& model, const Tensor& x, const Tensor& y) {
    Prediction fwd = forward_pass(g, model, x, y);
    LossTerms terms;
    terms.fwd = mse_loss(g, fwd.predicted, fwd.target);
    terms.mean_embedding_norm = mean_row_norm(fwd.online);
    if (model.classic()) {
        terms.total = scale(g, terms.fwd, model.alpha);
        return terms;
    }
    Prediction bwd = backward_pass(g, model, x, y);
    terms.bwd = mse_loss(g, bwd.predicted, bwd.target);
    terms.total = add(g, scale(g, terms.fwd, model.alpha), scale(g, *terms.bwd, 1.0 - model.alpha));
    return terms;
}

namespace {

StepMetrics metrics_from(const LossTerms& terms, std::size_t step) {
    StepMetrics m;
    m.step = step;
    m.total_loss = terms.total.item();
    m.fwd_loss = terms.fwd.item();
    m.bwd_loss = terms.bwd ? terms.bwd->item() : 0.0;
    m.mean_embedding_norm = terms.mean_embedding_norm;
    m.non_finite = !std::isfinite(m.total_loss);
    m.diverged = m.non_finite || m.total_loss > kDivergenceLoss;
    return m;
}

} // namespace

StepMetrics total_loss(BiJepaModel& model, const Tensor& x, const Tensor& y) {
    Graph g = Graph::inference();
    return metrics_from(compute_loss(g, model, x, y), 0);
}

Tensor classic_jepa_loss(Graph& g, Network& online, Network& target, Network& predictor, const Tensor& x,
                         const Tensor& y, bool sphere) {
    Tensor s_x = online.forward(g, x);
    if (sphere) s_x = sphere_project(g, s_x);
    Tensor s_hat_y = predictor.forward(g, s_x);
    if (sphere) s_hat_y = sphere_project(g, s_hat_y);
    Graph none = Graph::inference();
    Tensor s_y = target.forward(none, y);
    if (sphere) s_y = sphere_project(none, s_y);
    return mse_loss(g, s_hat_y, stop_gradient(s_y));
}

StepMetrics train_step(BiJepaModel& model, AdamW& opt, const Tensor& x, const Tensor& y, std::size_t step) {
    opt.zero_grad();
    Graph g;
    LossTerms terms = compute_loss(g, model, x, y);
    StepMetrics m = metrics_from(terms, step);
    if (m.non_finite) return m;
    g.backward(terms.total);
    if (!opt.step()) {
        m.non_finite = true;
        m.diverged = true;
        return m;
    }
    ema_update(model.target_encoder, model.online_encoder, model.ema);
    return m;
}

namespace {

struct EvalModeGuard {
    BiJepaModel& model;
    NormMode saved;
    explicit EvalModeGuard(BiJepaModel& m) : model(m), saved(m.online_encoder.mode()) { model.set_norm_mode(NormMode::Eval); }
    ~EvalModeGuard() { model.set_norm_mode(saved); }
};

} // namespace

Tensor encode_for_inference(BiJepaModel& model, const Tensor& x) {
    EvalModeGuard guard(model);
    Graph none = Graph::inference();
    return maybe_project(none, model.online_encoder.forward(none, x), model.restrictive());
}

Tensor predict_forward(BiJepaModel& model, const Tensor& x) {
    Tensor s = encode_for_inference(model, x);
    EvalModeGuard guard(model);
    Graph none = Graph::inference();
    return maybe_project(none, model.p_fwd.forward(none, s), model.restrictive());
}

} // namespace bijepa
