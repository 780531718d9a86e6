#include <doctest.h>

#include <cmath>

#include "bijepa/jepa.hpp"
#include "support/fixtures.hpp"

using namespace bijepa;
using namespace bijepa::testing;

namespace {

ModelOptions sine_options(ConstraintMode mode, double alpha = 0.5, std::uint64_t seed = 0) {
    ModelOptions o;
    o.arch = sine_architecture();
    o.mode = mode;
    o.alpha = alpha;
    o.init_seed = seed;
    return o;
}

} // namespace

TEST_CASE("constraint settings") {
    const auto u = constraint_settings(ConstraintMode::Unconstrained);
    CHECK_FALSE(u.with_ln);
    CHECK(u.weight_decay == 0.0);
    CHECK_FALSE(u.sphere);
    const auto e = constraint_settings(ConstraintMode::Expressive);
    CHECK(e.with_ln);
    CHECK(e.weight_decay == 1e-4);
    CHECK_FALSE(e.sphere);
    const auto r = constraint_settings(ConstraintMode::Restrictive);
    CHECK(r.with_ln);
    CHECK(r.weight_decay == 1e-4);
    CHECK(r.sphere);
    CHECK(constraint_mode_from_string("restrictive") == ConstraintMode::Restrictive);
    CHECK_THROWS_AS(constraint_mode_from_string("loose"), std::invalid_argument);
}

TEST_CASE("model structure") {
    BiJepaModel bi(sine_options(ConstraintMode::Expressive));
    CHECK(bi.p_bwd.has_value());
    CHECK(bi.online_encoder.same_architecture(bi.target_encoder));
    CHECK(parameter_checksum(bi.online_encoder) == parameter_checksum(bi.target_encoder));
    for (const Tensor& p : bi.target_encoder.parameters()) CHECK_FALSE(p.requires_grad());
    CHECK(bi.trainable_parameters().size() ==
          bi.online_encoder.parameters().size() + bi.p_fwd.parameters().size() + bi.p_bwd->parameters().size());

    BiJepaModel classic(sine_options(ConstraintMode::Expressive, 1.0));
    CHECK(classic.classic());
    Graph g;
    CHECK_THROWS_AS(backward_pass(g, classic, Tensor({2, 10}), Tensor({2, 10})), std::logic_error);

    BiJepaModel bare(sine_options(ConstraintMode::Unconstrained));
    for (const LayerSpec& s : bare.online_encoder.specs()) CHECK(s.kind != LayerKind::LayerNorm);
    for (const LayerSpec& s : bare.p_fwd.specs()) CHECK(s.kind != LayerKind::LayerNorm);

    CHECK_THROWS_AS(BiJepaModel(sine_options(ConstraintMode::Expressive, 1.5)), std::invalid_argument);
}

TEST_CASE("optimizer never sees the target encoder") {
    BiJepaModel model(sine_options(ConstraintMode::Expressive));
    AdamW opt = make_optimizer(model, 1e-3, 1e-4);
    for (const Tensor& p : opt.params()) {
        for (const Tensor& t : model.target_encoder.parameters()) CHECK_FALSE(p.same_storage(t));
    }
}

TEST_CASE("sphere projection") {
    Graph g;
    const Tensor y = sphere_project(g, Tensor({1, 2}, {3, 4}));
    CHECK(y[0] == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(y[1] == doctest::Approx(0.8).epsilon(1e-15));
    const Tensor unit({1, 3}, {0, 1, 0});
    const Tensor same = sphere_project(g, unit);
    for (std::size_t i = 0; i < 3; ++i) CHECK(same[i] == unit[i]);
    CHECK_THROWS_AS(sphere_project(g, Tensor({1, 3}, {0, 0, 1e-13})), std::domain_error);

    Rng rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        const Tensor v = random_away_from_zero({4, 16}, rng, 0.05);
        const Tensor p = sphere_project(g, v);
        for (std::size_t r = 0; r < 4; ++r) {
            double n = 0;
            for (std::size_t c = 0; c < 16; ++c) n += p[r * 16 + c] * p[r * 16 + c];
            CHECK(std::abs(std::sqrt(n) - 1.0) < 1e-9);
        }
        for (double c : {1e-3, 1.0, 1e3}) {
            Tensor scaled = v.clone();
            for (double& x : scaled.values()) x *= c;
            const Tensor q = sphere_project(g, scaled);
            for (std::size_t i = 0; i < q.numel(); ++i) CHECK(std::abs(q[i] - p[i]) < 1e-12);
        }
    }
}

TEST_CASE("restrictive outputs live on the sphere") {
    BiJepaModel model(sine_options(ConstraintMode::Restrictive));
    Rng rng(2);
    const Tensor x = random_tensor({8, 10}, rng), y = random_tensor({8, 10}, rng);
    Graph g;
    const Prediction p = forward_pass(g, model, x, y);
    for (const Tensor* t : {&p.predicted, &p.target}) {
        for (std::size_t r = 0; r < 8; ++r) {
            double n = 0;
            for (std::size_t c = 0; c < 16; ++c) n += (*t)[r * 16 + c] * (*t)[r * 16 + c];
            CHECK(std::abs(std::sqrt(n) - 1.0) < 1e-12);
        }
    }
    const Tensor e = encode_for_inference(model, x);
    CHECK(mean_row_norm(e) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(mean_row_norm(predict_forward(model, x)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("loss is the alpha-weighted sum of the branches") {
    Rng rng(5);
    const Tensor x = random_tensor({16, 10}, rng), y = random_tensor({16, 10}, rng);
    for (double alpha : {0.0, 0.25, 0.5, 0.9}) {
        BiJepaModel model(sine_options(ConstraintMode::Expressive, alpha, 3));
        Graph g = Graph::inference();
        const LossTerms t = compute_loss(g, model, x, y);
        const double fwd = t.fwd.item(), bwd = t.bwd->item();
        CHECK(t.total.item() == doctest::Approx(alpha * fwd + (1 - alpha) * bwd).epsilon(1e-15));
        CHECK(t.total.item() >= std::min(fwd, bwd) - 1e-15);
        CHECK(t.total.item() <= std::max(fwd, bwd) + 1e-15);
    }
    CHECK(0.5 * 0.2 + 0.5 * 0.4 == doctest::Approx(0.3));
}

TEST_CASE("perfect prediction gives zero loss") {
    // Zero the last layer of the predictor and of the encoder: every embedding is 0.
    BiJepaModel model(sine_options(ConstraintMode::Expressive));
    for (Network* n : {&model.online_encoder, &model.target_encoder, &model.p_fwd, &*model.p_bwd}) {
        auto params = n->parameters();
        for (double& v : params[params.size() - 2].values()) v = 0.0;
    }
    Rng rng(1);
    Graph g = Graph::inference();
    CHECK(compute_loss(g, model, random_tensor({4, 10}, rng), random_tensor({4, 10}, rng)).total.item() == 0.0);
}

TEST_CASE("alpha = 1 reduces to the uni-directional objective bit for bit") {
    for (const ReductionFixture& f : reduction_fixtures()) {
        const ReductionOutcome r = compare_reduction(f);
        CHECK(r.loss_equal);
        CHECK(r.grads_equal);
    }
}

TEST_CASE("target encoder follows the EMA recurrence exactly") {
    for (ConstraintMode mode : {ConstraintMode::Expressive, ConstraintMode::Restrictive}) {
        const EmaReplayOutcome r = replay_ema(sine_options(mode, 0.5, 9), 20, 4);
        CHECK(r.exact);
        CHECK(r.target_grads_empty);
        CHECK(r.target_never_requires_grad);
    }
}

TEST_CASE("train_step reduces the loss on a fixed batch") {
    BiJepaModel model(sine_options(ConstraintMode::Expressive, 0.5, 1));
    AdamW opt = make_optimizer(model, 1e-3, 1e-4);
    const ViewBatch batch = gen_sine_batch(SineConfig{}, 6);
    const double before = total_loss(model, batch.x, batch.y).total_loss;
    for (std::size_t s = 1; s <= 50; ++s) {
        const StepMetrics m = train_step(model, opt, batch.x, batch.y, s);
        CHECK(m.step == s);
        CHECK_FALSE(m.diverged);
    }
    CHECK(total_loss(model, batch.x, batch.y).total_loss < before);
    CHECK(opt.step_count() == 50);
}

TEST_CASE("NaN loss is flagged and nothing is updated") {
    BiJepaModel model(sine_options(ConstraintMode::Expressive));
    AdamW opt = make_optimizer(model, 1e-3, 1e-4);
    model.online_encoder.parameters()[0][0] = std::nan("");
    const auto online = parameter_checksum(model.online_encoder);
    const auto target = parameter_checksum(model.target_encoder);
    const ViewBatch batch = gen_sine_batch(SineConfig{}, 1);
    const StepMetrics m = train_step(model, opt, batch.x, batch.y, 1);
    CHECK(m.non_finite);
    CHECK(m.diverged);
    CHECK(parameter_checksum(model.online_encoder) == online);
    CHECK(parameter_checksum(model.target_encoder) == target);
    CHECK(opt.step_count() == 0);
}

TEST_CASE("huge finite loss is flagged as diverged but not halted") {
    BiJepaModel model(sine_options(ConstraintMode::Unconstrained));
    auto params = model.target_encoder.parameters();
    for (double& v : params[params.size() - 1].values()) v = 1e5;
    const ViewBatch batch = gen_sine_batch(SineConfig{}, 1);
    const StepMetrics m = total_loss(model, batch.x, batch.y);
    CHECK(m.total_loss > kDivergenceLoss);
    CHECK(m.diverged);
    CHECK_FALSE(m.non_finite);
}

TEST_CASE("inference restores the training mode") {
    ModelOptions o;
    o.arch = mnist_architecture();
    BiJepaModel model(o);
    Rng rng(3);
    const Tensor x = random_tensor({3, 1, 28, 14}, rng);
    const auto stats = model.online_encoder.norm_stats()[0].running_mean;
    const Tensor a = encode_for_inference(model, x);
    CHECK(model.online_encoder.mode() == NormMode::Train);
    CHECK(model.online_encoder.norm_stats()[0].running_mean == stats);
    const Tensor b = encode_for_inference(model, x);
    CHECK(bit_equal(a.values(), b.values()));
    CHECK(a.shape() == Shape{3, 64});
}
