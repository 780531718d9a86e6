#include "bijepa/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

namespace bijepa {

ViewBatch slice_rows(const ViewBatch& batch, std::size_t begin, std::size_t count) {
    std::vector<std::size_t> rows(count);
    for (std::size_t i = 0; i < count; ++i) rows[i] = begin + i;
    return gather_rows(batch, rows);
}

namespace {

Tensor gather(const Tensor& t, const std::vector<std::size_t>& rows) {
    Shape shape = t.shape();
    const std::size_t n = shape[0];
    const std::size_t stride = n == 0 ? 0 : t.numel() / n;
    shape[0] = rows.size();
    Tensor out(shape);
    auto src = t.values();
    auto dst = out.values();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= n) throw std::out_of_range("gather_rows: row " + std::to_string(rows[i]) + " out of range");
        std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(rows[i] * stride), stride,
                    dst.begin() + static_cast<std::ptrdiff_t>(i * stride));
    }
    return out;
}

} // namespace

ViewBatch gather_rows(const ViewBatch& batch, const std::vector<std::size_t>& rows) {
    ViewBatch out{gather(batch.x, rows), gather(batch.y, rows), std::nullopt};
    if (batch.labels) {
        std::vector<int> labels(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) labels[i] = (*batch.labels)[rows[i]];
        out.labels = std::move(labels);
    }
    return out;
}

// ---------------------------------------------------------------------------

std::vector<double> sine_sequence(const SineConfig& cfg, double omega, double phase, Rng& rng) {
    std::vector<double> s(cfg.length);
    for (std::size_t i = 0; i < cfg.length; ++i) {
        const double t = static_cast<double>(i) * cfg.time_step;
        s[i] = std::sin(omega * t + phase);
        if (cfg.noise_std > 0.0) s[i] += rng.normal(0.0, cfg.noise_std);
    }
    return s;
}

ViewBatch gen_sine_batch(const SineConfig& cfg, Rng& rng) {
    if (cfg.context == 0 || cfg.context >= cfg.length) {
        throw std::invalid_argument("gen_sine_batch: context must split the sequence into two non-empty views");
    }
    const std::size_t tail = cfg.length - cfg.context;
    Tensor x({cfg.batch, cfg.context});
    Tensor y({cfg.batch, tail});
    for (std::size_t b = 0; b < cfg.batch; ++b) {
        const double omega = rng.uniform(cfg.omega_min, cfg.omega_max);
        const double phase = rng.uniform(cfg.phase_min, cfg.phase_max);
        const auto s = sine_sequence(cfg, omega, phase, rng);
        for (std::size_t i = 0; i < cfg.context; ++i) x[b * cfg.context + i] = s[i];
        for (std::size_t i = 0; i < tail; ++i) y[b * tail + i] = s[cfg.context + i];
    }
    return {x, y, std::nullopt};
}

ViewBatch gen_sine_batch(const SineConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    return gen_sine_batch(cfg, rng);
}

// ---------------------------------------------------------------------------

State3 lorenz_derivative(const LorenzConfig& cfg, const State3& s) {
    return {cfg.sigma * (s[1] - s[0]), s[0] * (cfg.rho - s[2]) - s[1], s[0] * s[1] - cfg.beta * s[2]};
}

State3 lorenz_step(const LorenzConfig& cfg, const State3& s) {
    const double h = cfg.dt;
    if (cfg.integrator == Integrator::Euler) {
        const State3 d = lorenz_derivative(cfg, s);
        return {s[0] + h * d[0], s[1] + h * d[1], s[2] + h * d[2]};
    }
    auto axpy = [](const State3& a, double k, const State3& b) {
        return State3{a[0] + k * b[0], a[1] + k * b[1], a[2] + k * b[2]};
    };
    const State3 k1 = lorenz_derivative(cfg, s);
    const State3 k2 = lorenz_derivative(cfg, axpy(s, h / 2.0, k1));
    const State3 k3 = lorenz_derivative(cfg, axpy(s, h / 2.0, k2));
    const State3 k4 = lorenz_derivative(cfg, axpy(s, h, k3));
    State3 out;
    for (int i = 0; i < 3; ++i) out[i] = s[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return out;
}

std::vector<State3> integrate_lorenz(const LorenzConfig& cfg, const State3& init, std::size_t n_steps) {
    for (double v : init) {
        if (!std::isfinite(v)) throw std::invalid_argument("integrate_lorenz: non-finite initial state");
    }
    std::vector<State3> traj;
    traj.reserve(n_steps);
    State3 s = init;
    for (std::size_t k = 0; k < n_steps; ++k) {
        traj.push_back(s);
        s = lorenz_step(cfg, s);
        if (!std::isfinite(s[0]) || !std::isfinite(s[1]) || !std::isfinite(s[2])) {
            if (k + 1 < n_steps) throw std::runtime_error("integrate_lorenz: state became non-finite at step " + std::to_string(k + 1));
        }
    }
    return traj;
}

namespace {

std::vector<std::vector<State3>> sample_trajectories(const LorenzConfig& cfg, Rng rng, std::size_t count) {
    std::vector<std::vector<State3>> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        State3 init{rng.uniform(cfg.init_min, cfg.init_max), rng.uniform(cfg.init_min, cfg.init_max),
                    rng.uniform(cfg.init_min, cfg.init_max)};
        out.push_back(integrate_lorenz(cfg, init, cfg.length));
    }
    return out;
}

ViewBatch to_views(const LorenzConfig& cfg, const std::vector<std::vector<State3>>& trajs, const State3& mean,
                   const State3& stddev) {
    const std::size_t n = trajs.size();
    const std::size_t ctx = cfg.context * 3;
    const std::size_t tgt = (cfg.length - cfg.context) * 3;
    Tensor x({n, ctx});
    Tensor y({n, tgt});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t t = 0; t < cfg.length; ++t) {
            for (std::size_t c = 0; c < 3; ++c) {
                const double v = (trajs[i][t][c] - mean[c]) / stddev[c];
                if (t < cfg.context) {
                    x[i * ctx + t * 3 + c] = v;
                } else {
                    y[i * tgt + (t - cfg.context) * 3 + c] = v;
                }
            }
        }
    }
    return {x, y, std::nullopt};
}

} // namespace

LorenzDataset build_lorenz_dataset(const LorenzConfig& cfg, std::uint64_t seed) {
    if (cfg.context == 0 || cfg.context >= cfg.length) {
        throw std::invalid_argument("build_lorenz_dataset: context must split the trajectory into two non-empty views");
    }
    Rng root(seed);
    auto train = sample_trajectories(cfg, root.stream("train"), cfg.n_train);
    auto probe = sample_trajectories(cfg, root.stream("probe"), cfg.n_probe);
    auto test = sample_trajectories(cfg, root.stream("test"), cfg.n_test);

    LorenzDataset ds;
    double count = 0.0;
    for (const auto& tr : train) {
        for (const auto& s : tr) {
            for (int c = 0; c < 3; ++c) ds.mean[c] += s[c];
        }
        count += static_cast<double>(tr.size());
    }
    for (int c = 0; c < 3; ++c) ds.mean[c] /= count;
    State3 var{};
    for (const auto& tr : train) {
        for (const auto& s : tr) {
            for (int c = 0; c < 3; ++c) var[c] += (s[c] - ds.mean[c]) * (s[c] - ds.mean[c]);
        }
    }
    for (int c = 0; c < 3; ++c) ds.stddev[c] = std::sqrt(var[c] / count);

    ds.train = to_views(cfg, train, ds.mean, ds.stddev);
    ds.probe = to_views(cfg, probe, ds.mean, ds.stddev);
    ds.test = to_views(cfg, test, ds.mean, ds.stddev);
    return ds;
}

// ---------------------------------------------------------------------------

MnistFiles mnist_train_files(const std::filesystem::path& dir) {
    return {dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte"};
}

MnistFiles mnist_test_files(const std::filesystem::path& dir) {
    return {dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte"};
}

namespace {

std::uint32_t read_be32(std::istream& is, const std::filesystem::path& path) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) {
        throw std::runtime_error("IDX: truncated header in " + path.string());
    }
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
}

std::ifstream open_idx(const std::filesystem::path& path, std::uint32_t expected_magic) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("IDX: cannot open " + path.string());
    const std::uint32_t magic = read_be32(is, path);
    if (magic != expected_magic) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "bad magic 0x%08x (expected 0x%08x)", magic, expected_magic);
        throw std::runtime_error("IDX: " + path.string() + ": " + buf);
    }
    return is;
}

} // namespace

std::vector<std::uint8_t> read_idx_images(const std::filesystem::path& path, std::size_t& count, std::size_t& rows,
                                          std::size_t& cols) {
    std::ifstream is = open_idx(path, 0x00000803);
    count = read_be32(is, path);
    rows = read_be32(is, path);
    cols = read_be32(is, path);
    std::vector<std::uint8_t> pixels(count * rows * cols);
    if (!is.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()))) {
        throw std::runtime_error("IDX: " + path.string() + " truncated: header promises " + std::to_string(count) +
                                 " images of " + std::to_string(rows) + "x" + std::to_string(cols));
    }
    return pixels;
}

std::vector<int> read_idx_labels(const std::filesystem::path& path) {
    std::ifstream is = open_idx(path, 0x00000801);
    const std::size_t count = read_be32(is, path);
    std::vector<std::uint8_t> raw(count);
    if (!is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count))) {
        throw std::runtime_error("IDX: " + path.string() + " truncated: header promises " + std::to_string(count) +
                                 " labels");
    }
    std::vector<int> labels(raw.begin(), raw.end());
    for (int l : labels) {
        if (l > 9) throw std::runtime_error("IDX: " + path.string() + " contains label " + std::to_string(l));
    }
    return labels;
}

MnistImages load_mnist_idx(const MnistFiles& files, const MnistConfig& cfg, std::size_t limit) {
    std::size_t count = 0, rows = 0, cols = 0;
    const auto pixels = read_idx_images(files.images, count, rows, cols);
    auto labels = read_idx_labels(files.labels);
    if (labels.size() != count) {
        throw std::runtime_error("IDX: " + files.images.string() + " holds " + std::to_string(count) + " images but " +
                                 files.labels.string() + " holds " + std::to_string(labels.size()) + " labels");
    }
    if (rows != 28 || cols != 28) {
        throw std::runtime_error("IDX: expected 28x28 images, got " + std::to_string(rows) + "x" + std::to_string(cols));
    }
    const std::size_t n = limit ? std::min(limit, count) : count;
    Tensor images({n, 1, rows, cols});
    for (std::size_t i = 0; i < n * rows * cols; ++i) {
        images[i] = (static_cast<double>(pixels[i]) / 255.0 - cfg.norm_mean) / cfg.norm_std;
    }
    labels.resize(n);
    return {images, std::move(labels)};
}

ViewBatch split_vertical(const MnistImages& data, std::size_t split_col) {
    const Tensor& img = data.images;
    if (img.rank() != 4 || img.dim(1) != 1 || img.dim(2) != 28 || img.dim(3) != 28) {
        throw std::invalid_argument("split_vertical: expected (N,1,28,28), got " + shape_str(img.shape()));
    }
    if (split_col == 0 || split_col >= 28) throw std::invalid_argument("split_vertical: split column out of range");
    const std::size_t n = img.dim(0), right = 28 - split_col;
    Tensor x({n, 1, 28, split_col});
    Tensor y({n, 1, 28, right});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t r = 0; r < 28; ++r) {
            const std::size_t src = (i * 28 + r) * 28;
            for (std::size_t c = 0; c < split_col; ++c) x[(i * 28 + r) * split_col + c] = img[src + c];
            for (std::size_t c = 0; c < right; ++c) y[(i * 28 + r) * right + c] = img[src + split_col + c];
        }
    }
    ViewBatch out{x, y, std::nullopt};
    if (!data.labels.empty()) out.labels = data.labels;
    return out;
}

} // namespace bijepa
