#pragma once

#include <cstring>
#include <vector>

#include "bijepa/data.hpp"
#include "bijepa/jepa.hpp"
#include "support/gradcheck.hpp"

namespace bijepa::testing {

inline bool bit_equal(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

inline bool bit_equal(std::span<const double> a, std::span<const double> b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

inline std::vector<std::vector<double>> snapshot(const std::vector<Tensor>& params) {
    std::vector<std::vector<double>> out;
    for (const Tensor& p : params) out.emplace_back(p.values().begin(), p.values().end());
    return out;
}

inline std::vector<std::vector<double>> grads_of(const std::vector<Tensor>& params) {
    std::vector<std::vector<double>> out;
    for (const Tensor& p : params) {
        if (p.has_grad()) out.emplace_back(p.grad().begin(), p.grad().end());
        else out.emplace_back();
    }
    return out;
}

// A reduction fixture: architecture, mode and a paired batch.
struct ReductionFixture {
    ModelOptions options;
    Tensor x;
    Tensor y;
};

// Twenty fixtures over the three architectures, both normalised regimes and
// the bare MLP, with varied seeds and batch sizes.
inline std::vector<ReductionFixture> reduction_fixtures() {
    std::vector<ReductionFixture> out;
    Rng rng(77);
    for (int i = 0; i < 20; ++i) {
        ReductionFixture f;
        f.options.alpha = 1.0;
        f.options.init_seed = 100 + static_cast<std::uint64_t>(i);
        f.options.mode = i % 3 == 0   ? ConstraintMode::Expressive
                         : i % 3 == 1 ? ConstraintMode::Restrictive
                                      : ConstraintMode::Unconstrained;
        const std::size_t batch = 2 + rng.index(7);
        if (i % 5 == 4) {
            f.options.arch = mnist_architecture();
            f.options.mode = i % 2 ? ConstraintMode::Restrictive : ConstraintMode::Expressive;
            f.x = random_tensor({batch, 1, 28, 14}, rng, -0.5, 2.5);
            f.y = random_tensor({batch, 1, 28, 14}, rng, -0.5, 2.5);
        } else if (i % 2 == 0) {
            f.options.arch = sine_architecture();
            f.x = random_tensor({batch, 10}, rng);
            f.y = random_tensor({batch, 10}, rng);
        } else {
            f.options.arch = lorenz_architecture();
            f.x = random_tensor({batch, 60}, rng, -2, 2);
            f.y = random_tensor({batch, 60}, rng, -2, 2);
        }
        out.push_back(std::move(f));
    }
    return out;
}

struct ReductionOutcome {
    bool loss_equal = false;
    bool grads_equal = false;
    double bijepa_loss = 0.0;
    double classic_loss = 0.0;
};

// Loss and online-side gradients through the BiJEPA objective at alpha = 1
// versus the uni-directional objective written directly from the networks.
inline ReductionOutcome compare_reduction(const ReductionFixture& f) {
    BiJepaModel a(f.options);
    BiJepaModel b(f.options);
    const auto params_a = a.trainable_parameters();
    const auto params_b = b.trainable_parameters();

    for (Tensor p : params_a) p.clear_grad();
    Graph ga;
    LossTerms terms = compute_loss(ga, a, f.x, f.y);
    const double la = terms.total.item();
    ga.backward(terms.total);

    for (Tensor p : params_b) p.clear_grad();
    Graph gb;
    Tensor lb_t = classic_jepa_loss(gb, b.online_encoder, b.target_encoder, b.p_fwd, f.x, f.y, b.restrictive());
    const double lb = lb_t.item();
    gb.backward(lb_t);

    ReductionOutcome out;
    out.bijepa_loss = la;
    out.classic_loss = lb;
    out.loss_equal = bit_equal(la, lb);
    out.grads_equal = params_a.size() == params_b.size();
    const auto ga_vals = grads_of(params_a), gb_vals = grads_of(params_b);
    for (std::size_t i = 0; out.grads_equal && i < ga_vals.size(); ++i) {
        out.grads_equal = !ga_vals[i].empty() && bit_equal(ga_vals[i], gb_vals[i]);
    }
    return out;
}

struct EmaReplayOutcome {
    bool exact = true;
    bool target_grads_empty = true;
    bool target_never_requires_grad = true;
    std::size_t steps = 0;
};

// Trains for `steps` steps, logging the online encoder after every optimizer
// update, and replays target <- target + (1-tau)*(online - target) from the logs.
inline EmaReplayOutcome replay_ema(ModelOptions opts, std::size_t steps, std::uint64_t data_seed) {
    BiJepaModel model(opts);
    AdamW opt = make_optimizer(model, 1e-3, constraint_settings(opts.mode).weight_decay);
    std::vector<std::vector<double>> replay = snapshot(model.target_encoder.parameters());
    SineConfig sc;
    Rng data(data_seed);
    const double tau = model.ema.tau;
    EmaReplayOutcome out;
    for (std::size_t s = 1; s <= steps; ++s) {
        const ViewBatch batch = gen_sine_batch(sc, data);
        train_step(model, opt, batch.x, batch.y, s);
        const auto online = snapshot(model.online_encoder.parameters());
        for (std::size_t i = 0; i < replay.size(); ++i) {
            for (std::size_t j = 0; j < replay[i].size(); ++j) replay[i][j] += (1.0 - tau) * (online[i][j] - replay[i][j]);
        }
        const auto target = model.target_encoder.parameters();
        for (std::size_t i = 0; i < target.size(); ++i) {
            if (!bit_equal(target[i].values(), replay[i])) out.exact = false;
            if (target[i].has_grad()) out.target_grads_empty = false;
            if (target[i].requires_grad()) out.target_never_requires_grad = false;
        }
        ++out.steps;
    }
    return out;
}

} // namespace bijepa::testing
