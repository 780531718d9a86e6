#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bijepa/eval.hpp"
#include "bijepa/jepa.hpp"

namespace bijepa {

enum class Experiment { Sine, Lorenz, Mnist };
enum class Variant { BiJepaExpressive, BiJepaUnconstrained, BiJepaRestrictive, Classic };

const char* to_string(Experiment e);
const char* to_string(Variant v);
Experiment experiment_from_string(const std::string& name);
Variant variant_from_string(const std::string& name);
ConstraintMode constraint_of(Variant v);

// Raised for invalid configurations (unknown keys, bad combinations); the CLI
// maps it to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Every tunable of a run. Defaults come from defaults_for(); all of them are
// echoed into report.json.
struct Hyperparams {
    double lr = 1e-3;
    double weight_decay = 1e-4;
    double tau = 0.995;
    double alpha = 0.5;
    std::size_t steps = 2000;  // training steps; 0 = derive from epochs
    std::size_t epochs = 0;
    std::size_t batch = 64;
    std::size_t train_subset = 0; // MNIST: first N training images (0 = all)
    std::size_t test_subset = 0;  // MNIST: first N test images (0 = all)

    double probe_lr = 1e-3;
    std::size_t probe_steps = 2000;
    std::size_t probe_epochs = 0;
    std::size_t probe_batch = 64;
    std::size_t decoder_hidden = 256;
    std::size_t recon_samples = 8;

    double noise_std = 0.05;
    double time_step = 1.0;
    std::size_t sine_probe_samples = 4096;
    std::size_t sine_test_samples = 256;

    double dt = 0.01;
    std::size_t n_train = 2000;
    std::size_t n_probe = 1000;
    std::size_t n_test = 20;
    std::size_t rk4 = 0;

    std::size_t loss_window = 100; // steps averaged into final_train_loss
};

// Calls fn(key, field&) for every hyperparameter, in a fixed order.
template <typename H, typename Fn>
void visit_hyperparams(H& h, Fn&& fn) {
    fn("lr", h.lr);
    fn("weight_decay", h.weight_decay);
    fn("tau", h.tau);
    fn("alpha", h.alpha);
    fn("steps", h.steps);
    fn("epochs", h.epochs);
    fn("batch", h.batch);
    fn("train_subset", h.train_subset);
    fn("test_subset", h.test_subset);
    fn("probe_lr", h.probe_lr);
    fn("probe_steps", h.probe_steps);
    fn("probe_epochs", h.probe_epochs);
    fn("probe_batch", h.probe_batch);
    fn("decoder_hidden", h.decoder_hidden);
    fn("recon_samples", h.recon_samples);
    fn("noise_std", h.noise_std);
    fn("time_step", h.time_step);
    fn("sine_probe_samples", h.sine_probe_samples);
    fn("sine_test_samples", h.sine_test_samples);
    fn("dt", h.dt);
    fn("n_train", h.n_train);
    fn("n_probe", h.n_probe);
    fn("n_test", h.n_test);
    fn("rk4", h.rk4);
    fn("loss_window", h.loss_window);
}

Hyperparams defaults_for(Experiment e, Variant v);

struct RunConfig {
    Experiment experiment = Experiment::Sine;
    Variant variant = Variant::BiJepaExpressive;
    std::optional<double> alpha; // default 0.5; classic forces 1
    std::uint64_t seed = 0;
    std::filesystem::path out_dir;
    std::filesystem::path mnist_dir;
    std::optional<std::size_t> steps;
    std::vector<std::pair<std::string, std::string>> overrides; // --set key=value
    bool quiet = true;
};

// Defaults, then --alpha/--steps, then --set overrides, then the variant's
// hard constraints. Throws ConfigError.
Hyperparams resolve_hyperparams(const RunConfig& cfg);

struct ExperimentReport {
    nlohmann::json config;
    double final_train_loss = 0.0;
    std::vector<StepMetrics> loss_history;
    std::optional<double> protocol_a_mse;
    std::optional<double> protocol_b_mse;
    std::optional<double> accuracy;
    std::optional<double> decoder_mse;
    std::optional<double> decoder_mse_normalized;
    std::vector<ForecastRecord> forecast;
    bool diverged = false;
    double wall_time = 0.0; // seconds; excluded from determinism
};

nlohmann::json report_to_json(const ExperimentReport& r);
ExperimentReport report_from_json(const nlohmann::json& j);
// Metric fields only (no timing), for determinism comparisons.
nlohmann::json report_metrics(const ExperimentReport& r);

using ProgressFn = std::function<void(const StepMetrics&)>;

// Builds, trains and probes one configuration; writes outputs when
// cfg.out_dir is set.
ExperimentReport run(const RunConfig& cfg, const ProgressFn& progress = {});

// report.json, loss.csv, forecast.csv (sine/lorenz). MNIST reconstructions
// are written by run() itself.
void emit_outputs(const ExperimentReport& report, const std::filesystem::path& out_dir);
ExperimentReport read_report(const std::filesystem::path& path);

struct SuiteRow {
    Variant variant;
    std::uint64_t seed;
    std::optional<ExperimentReport> report;
    std::string error;
};

struct SuiteResult {
    std::vector<SuiteRow> rows;
    // Per seed: does BiJEPA-expressive beat classic on the primary metric
    // (Protocol B MSE, or probe accuracy for MNIST)?
    std::map<std::uint64_t, bool> bijepa_beats_classic;
    std::size_t verdict_wins() const;
};

// Runs variants x seeds with `base` as template. Member failures are recorded
// and the suite continues. Writes suite.csv / suite.json and one directory
// per run under base.out_dir when set.
SuiteResult run_suite(const std::vector<std::uint64_t>& seeds, const std::vector<Variant>& variants,
                      Experiment experiment, const RunConfig& base);

// ---------------------------------------------------------------------------

struct MnistFileSpec {
    const char* name;
    std::uintmax_t bytes;
};

inline constexpr MnistFileSpec kMnistFiles[] = {
    {"train-images-idx3-ubyte", 47040016},
    {"train-labels-idx1-ubyte", 60008},
    {"t10k-images-idx3-ubyte", 7840016},
    {"t10k-labels-idx1-ubyte", 10008},
};

inline constexpr const char* kDefaultMnistUrl = "https://ossci-datasets.s3.amazonaws.com/mnist/";

// Downloads `<base_url><name>.gz` for the four canonical files, inflates them
// and checks the byte lengths. Files already present with the right size are
// skipped; nothing partial is left behind on failure.
std::vector<std::filesystem::path> fetch_mnist(const std::filesystem::path& out_dir,
                                               const std::string& base_url = kDefaultMnistUrl);

} // namespace bijepa
