#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <optional>
#include <vector>

#include "bijepa/rng.hpp"
#include "bijepa/tensor.hpp"

namespace bijepa {

// Paired context/target views sharing the leading batch dimension.
struct ViewBatch {
    Tensor x;
    Tensor y;
    std::optional<std::vector<int>> labels;

    std::size_t size() const { return x.rank() ? x.dim(0) : 0; }
};

// Rows [begin, begin+count) of both views (and labels).
ViewBatch slice_rows(const ViewBatch& batch, std::size_t begin, std::size_t count);
// Rows at the given indices, in order.
ViewBatch gather_rows(const ViewBatch& batch, const std::vector<std::size_t>& rows);

// ---------------------------------------------------------------------------
// Noisy sine sequences S_i = sin(omega * t_i + phi) + eps_i, t_i = i * time_step.

struct SineConfig {
    std::size_t length = 20;
    std::size_t context = 10;
    double omega_min = 0.8;
    double omega_max = 1.2;
    double phase_min = 0.0;
    double phase_max = 2.0 * std::numbers::pi;
    double noise_std = 0.05;
    double time_step = 1.0;
    std::size_t batch = 64;
};

std::vector<double> sine_sequence(const SineConfig& cfg, double omega, double phase, Rng& rng);
// x = steps [0, context), y = steps [context, length).
ViewBatch gen_sine_batch(const SineConfig& cfg, Rng& rng);
ViewBatch gen_sine_batch(const SineConfig& cfg, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Lorenz system dx = sigma (y - x), dy = x (rho - z) - y, dz = x y - beta z.

enum class Integrator { Euler, Rk4 };

struct LorenzConfig {
    double sigma = 10.0;
    double rho = 28.0;
    double beta = 8.0 / 3.0;
    double dt = 0.01;
    std::size_t length = 40;
    std::size_t context = 20;
    double init_min = -15.0;
    double init_max = 15.0;
    std::size_t n_train = 2000;
    std::size_t n_probe = 1000;
    std::size_t n_test = 20;
    Integrator integrator = Integrator::Euler;
};

using State3 = std::array<double, 3>;

State3 lorenz_derivative(const LorenzConfig& cfg, const State3& s);
State3 lorenz_step(const LorenzConfig& cfg, const State3& s);
// Rows 0..n_steps-1, row 0 being `init`.
std::vector<State3> integrate_lorenz(const LorenzConfig& cfg, const State3& init, std::size_t n_steps);

struct LorenzDataset {
    ViewBatch train;
    ViewBatch probe;
    ViewBatch test;
    State3 mean{};
    State3 stddev{};
};

// Views are flattened time-major: [x0,y0,z0,x1,...], so the context is
// context*3 wide. Normalisation statistics come from the train split only.
LorenzDataset build_lorenz_dataset(const LorenzConfig& cfg, std::uint64_t seed);

// ---------------------------------------------------------------------------
// MNIST IDX files and vertical half views.

struct MnistConfig {
    double norm_mean = 0.1307;
    double norm_std = 0.3081;
    std::size_t split_col = 14;
    std::size_t batch = 256;
};

struct MnistImages {
    Tensor images; // (N,1,28,28), normalised
    std::vector<int> labels;
};

struct MnistFiles {
    std::filesystem::path images;
    std::filesystem::path labels;
};

MnistFiles mnist_train_files(const std::filesystem::path& dir);
MnistFiles mnist_test_files(const std::filesystem::path& dir);

// Raw IDX readers (big-endian header, unsigned bytes).
std::vector<std::uint8_t> read_idx_images(const std::filesystem::path& path, std::size_t& count, std::size_t& rows,
                                          std::size_t& cols);
std::vector<int> read_idx_labels(const std::filesystem::path& path);

MnistImages load_mnist_idx(const MnistFiles& files, const MnistConfig& cfg = {}, std::size_t limit = 0);

// x = columns [0, split), y = columns [split, 28); labels carried through.
ViewBatch split_vertical(const MnistImages& data, std::size_t split_col = 14);

} // namespace bijepa
