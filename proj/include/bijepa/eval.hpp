#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "bijepa/data.hpp"
#include "bijepa/jepa.hpp"

namespace bijepa {

enum class ProbeKind { Linear, Mlp };

// Probes only ever optimise their own parameters; features are computed from
// the frozen model with a non-recording graph.
struct ProbeConfig {
    ProbeKind kind = ProbeKind::Linear;
    double lr = 1e-3;
    std::size_t steps = 2000;  // used when epochs == 0
    std::size_t epochs = 0;    // full shuffled passes; overrides steps when > 0
    std::size_t batch = 64;
    std::size_t hidden = 256;  // MLP probes only
    std::uint64_t seed = 0;
};

struct ProbeResult {
    double mse = 0.0;       // regression probes
    double accuracy = 0.0;  // classification probes
    Tensor predictions;     // per test sample
};

// Train/test views for a regression probe: x feeds the model, y is the
// (flattened) target observation.
struct ProbeData {
    ViewBatch train;
    ViewBatch test;
};

// Frozen-feature helpers, evaluated in chunks of `chunk` rows.
Tensor encoder_features(BiJepaModel& model, const Tensor& x, std::size_t chunk = 1024);
Tensor predictor_features(BiJepaModel& model, const Tensor& x, std::size_t chunk = 1024);

Network build_probe(const ProbeConfig& cfg, std::size_t in, std::size_t out);

// Fits a probe mapping features -> targets with AdamW (lambda = 0) under MSE.
Network fit_regression_probe(const Tensor& features, const Tensor& targets, const ProbeConfig& cfg);
ProbeResult evaluate_regression(Network& probe, const Tensor& features, const Tensor& targets);

// Encoder probe: s_x -> y.
ProbeResult protocol_a(BiJepaModel& model, const ProbeData& data, const ProbeConfig& cfg);
// Predictor probe: P_fwd(s_x) -> y.
ProbeResult protocol_b(BiJepaModel& model, const ProbeData& data, const ProbeConfig& cfg);

// Linear softmax classifier on frozen embeddings of data.train.x, scored on data.test.
ProbeResult fit_classifier(const Tensor& train_features, std::span<const int> train_labels,
                           const Tensor& test_features, std::span<const int> test_labels, const ProbeConfig& cfg);
ProbeResult linear_probe_classify(BiJepaModel& model, const ProbeData& mnist, const ProbeConfig& cfg);

struct DecoderOptions {
    std::size_t samples = 8;                       // triptychs to write
    std::optional<std::filesystem::path> out_dir;  // no image dumps when empty
    double norm_mean = 0.1307;
    double norm_std = 0.3081;
};

struct DecoderResult {
    ProbeResult probe;
    double mse_normalized = 0.0; // in normalised pixel units
    double mse_pixel = 0.0;      // in [0,1] intensity units
    std::vector<std::filesystem::path> images;
};

// MLP decoder embedding(left half) -> right-half pixels. probe.mse reports
// the error in [0,1] intensity units.
DecoderResult generative_decoder(BiJepaModel& model, const ProbeData& mnist, const ProbeConfig& cfg,
                                 const DecoderOptions& opts = {});

struct ForecastRecord {
    std::size_t sample = 0;
    double truth = 0.0;
    double proto_a = 0.0;
    double proto_b = 0.0;
};

// One record per test sample, reading the first target coordinate (the
// 1-step forecast) from each column.
std::vector<ForecastRecord> forecast_table(const Tensor& truth, const Tensor& proto_a, const Tensor& proto_b);

// Binary greyscale PGM (P5, maxval 255) of a (rows, cols) block of normalised
// pixels, de-normalised and clamped to [0,255].
void write_pgm(const std::filesystem::path& path, std::span<const double> pixels, std::size_t rows, std::size_t cols,
               double norm_mean, double norm_std);

} // namespace bijepa
