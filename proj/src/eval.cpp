#include "bijepa/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "bijepa/optim.hpp"

namespace bijepa {

namespace {

Tensor rows_of(const Tensor& t, std::span<const std::size_t> rows) {
    Shape shape = t.shape();
    const std::size_t stride = t.numel() / shape[0];
    shape[0] = rows.size();
    Tensor out(shape);
    auto src = t.values();
    auto dst = out.values();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(rows[i] * stride), stride,
                    dst.begin() + static_cast<std::ptrdiff_t>(i * stride));
    }
    return out;
}

Tensor as_rows(const Tensor& t) {
    if (t.rank() == 2) return t;
    return t.reshaped({t.dim(0), t.numel() / t.dim(0)});
}

template <typename Fn>
Tensor map_in_chunks(const Tensor& x, std::size_t chunk, Fn&& fn) {
    const std::size_t n = x.dim(0);
    if (n == 0) throw std::invalid_argument("features: empty input");
    std::vector<double> values;
    std::size_t width = 0;
    std::vector<std::size_t> rows;
    for (std::size_t begin = 0; begin < n; begin += chunk) {
        const std::size_t count = std::min(chunk, n - begin);
        rows.resize(count);
        std::iota(rows.begin(), rows.end(), begin);
        Tensor part = fn(rows_of(x, rows));
        width = part.dim(1);
        values.insert(values.end(), part.values().begin(), part.values().end());
    }
    return Tensor({n, width}, std::move(values));
}

// Yields minibatch index lists: shuffled passes over [0, n).
class BatchSampler {
public:
    BatchSampler(std::size_t n, std::size_t batch, Rng rng) : order_(n), batch_(std::min(batch, n)), rng_(rng) {
        std::iota(order_.begin(), order_.end(), 0);
        reshuffle();
    }

    std::span<const std::size_t> next() {
        if (pos_ + batch_ > order_.size()) reshuffle();
        std::span<const std::size_t> out(order_.data() + pos_, batch_);
        pos_ += batch_;
        return out;
    }

    std::size_t batches_per_epoch() const { return (order_.size() + batch_ - 1) / batch_; }

    // Full pass with a trailing partial batch.
    template <typename Fn>
    void epoch(Fn&& fn) {
        std::shuffle(order_.begin(), order_.end(), rng_.engine());
        for (std::size_t begin = 0; begin < order_.size(); begin += batch_) {
            const std::size_t count = std::min(batch_, order_.size() - begin);
            fn(std::span<const std::size_t>(order_.data() + begin, count));
        }
    }

private:
    void reshuffle() {
        std::shuffle(order_.begin(), order_.end(), rng_.engine());
        pos_ = 0;
    }

    std::vector<std::size_t> order_;
    std::size_t batch_;
    std::size_t pos_ = 0;
    Rng rng_;
};

AdamW probe_optimizer(const Network& probe, const ProbeConfig& cfg) {
    AdamWConfig oc;
    oc.lr = cfg.lr;
    oc.weight_decay = 0.0;
    return AdamW(probe.parameters(), oc);
}

template <typename StepFn>
void run_probe_schedule(std::size_t n, const ProbeConfig& cfg, StepFn&& step) {
    if (n == 0) throw std::invalid_argument("probe: no training samples");
    BatchSampler sampler(n, cfg.batch, Rng(cfg.seed).stream("batches"));
    if (cfg.epochs > 0) {
        for (std::size_t e = 0; e < cfg.epochs; ++e) sampler.epoch(step);
    } else {
        for (std::size_t s = 0; s < cfg.steps; ++s) step(sampler.next());
    }
}

Tensor probe_forward(Network& probe, const Tensor& features) {
    Graph none = Graph::inference();
    return map_in_chunks(features, 4096, [&](const Tensor& part) { return probe.forward(none, part); });
}

} // namespace

Tensor encoder_features(BiJepaModel& model, const Tensor& x, std::size_t chunk) {
    return map_in_chunks(x, chunk, [&](const Tensor& part) { return encode_for_inference(model, part); });
}

Tensor predictor_features(BiJepaModel& model, const Tensor& x, std::size_t chunk) {
    return map_in_chunks(x, chunk, [&](const Tensor& part) { return predict_forward(model, part); });
}

Network build_probe(const ProbeConfig& cfg, std::size_t in, std::size_t out) {
    Network net = cfg.kind == ProbeKind::Linear
                      ? Network({LayerSpec::linear(in, out)}, {in})
                      : Network({LayerSpec::linear(in, cfg.hidden), LayerSpec::relu(), LayerSpec::linear(cfg.hidden, out)},
                                {in});
    init_parameters(net, Rng(cfg.seed).stream("probe-init").seed());
    return net;
}

Network fit_regression_probe(const Tensor& features, const Tensor& targets, const ProbeConfig& cfg) {
    const Tensor y = as_rows(targets);
    if (features.rank() != 2 || features.dim(0) != y.dim(0)) {
        throw std::invalid_argument("fit_regression_probe: features " + shape_str(features.shape()) +
                                    " do not align with targets " + shape_str(targets.shape()));
    }
    Network probe = build_probe(cfg, features.dim(1), y.dim(1));
    AdamW opt = probe_optimizer(probe, cfg);
    run_probe_schedule(features.dim(0), cfg, [&](std::span<const std::size_t> rows) {
        opt.zero_grad();
        Graph g;
        Tensor loss = mse_loss(g, probe.forward(g, rows_of(features, rows)), rows_of(y, rows));
        g.backward(loss);
        opt.step();
    });
    return probe;
}

ProbeResult evaluate_regression(Network& probe, const Tensor& features, const Tensor& targets) {
    const Tensor y = as_rows(targets);
    Tensor pred = probe_forward(probe, features);
    Graph none = Graph::inference();
    ProbeResult r;
    r.mse = mse_loss(none, pred, y).item();
    r.predictions = pred;
    return r;
}

ProbeResult protocol_a(BiJepaModel& model, const ProbeData& data, const ProbeConfig& cfg) {
    Network probe = fit_regression_probe(encoder_features(model, data.train.x), data.train.y, cfg);
    return evaluate_regression(probe, encoder_features(model, data.test.x), data.test.y);
}

ProbeResult protocol_b(BiJepaModel& model, const ProbeData& data, const ProbeConfig& cfg) {
    Network probe = fit_regression_probe(predictor_features(model, data.train.x), data.train.y, cfg);
    return evaluate_regression(probe, predictor_features(model, data.test.x), data.test.y);
}

ProbeResult fit_classifier(const Tensor& train_features, std::span<const int> train_labels,
                           const Tensor& test_features, std::span<const int> test_labels, const ProbeConfig& cfg) {
    if (train_features.dim(0) != train_labels.size() || test_features.dim(0) != test_labels.size()) {
        throw std::invalid_argument("fit_classifier: feature and label counts differ");
    }
    int max_label = 0;
    for (int l : train_labels) max_label = std::max(max_label, l);
    for (int l : test_labels) max_label = std::max(max_label, l);
    const std::size_t classes = std::max<std::size_t>(10, static_cast<std::size_t>(max_label) + 1);

    Network probe = build_probe(cfg, train_features.dim(1), classes);
    AdamW opt = probe_optimizer(probe, cfg);
    std::vector<int> batch_labels;
    run_probe_schedule(train_features.dim(0), cfg, [&](std::span<const std::size_t> rows) {
        batch_labels.resize(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) batch_labels[i] = train_labels[rows[i]];
        opt.zero_grad();
        Graph g;
        Tensor loss = softmax_cross_entropy(g, probe.forward(g, rows_of(train_features, rows)), batch_labels);
        g.backward(loss);
        opt.step();
    });

    Tensor logits = probe_forward(probe, test_features);
    std::size_t correct = 0;
    Tensor predicted({test_labels.size()});
    for (std::size_t i = 0; i < test_labels.size(); ++i) {
        const double* row = logits.values().data() + i * classes;
        const auto arg = static_cast<int>(std::max_element(row, row + classes) - row);
        predicted[i] = arg;
        if (arg == test_labels[i]) ++correct;
    }
    ProbeResult r;
    r.accuracy = static_cast<double>(correct) / static_cast<double>(test_labels.size());
    r.predictions = predicted;
    return r;
}

ProbeResult linear_probe_classify(BiJepaModel& model, const ProbeData& mnist, const ProbeConfig& cfg) {
    if (!mnist.train.labels || !mnist.test.labels) throw std::invalid_argument("linear_probe_classify: labels missing");
    ProbeConfig linear_cfg = cfg;
    linear_cfg.kind = ProbeKind::Linear;
    return fit_classifier(encoder_features(model, mnist.train.x, 512), *mnist.train.labels,
                          encoder_features(model, mnist.test.x, 512), *mnist.test.labels, linear_cfg);
}

DecoderResult generative_decoder(BiJepaModel& model, const ProbeData& mnist, const ProbeConfig& cfg,
                                 const DecoderOptions& opts) {
    ProbeConfig mlp_cfg = cfg;
    mlp_cfg.kind = ProbeKind::Mlp;
    Tensor train_features = encoder_features(model, mnist.train.x, 512);
    Tensor test_features = encoder_features(model, mnist.test.x, 512);
    Network decoder = fit_regression_probe(train_features, mnist.train.y, mlp_cfg);

    DecoderResult out;
    ProbeResult normalized = evaluate_regression(decoder, test_features, mnist.test.y);
    out.mse_normalized = normalized.mse;
    out.mse_pixel = normalized.mse * opts.norm_std * opts.norm_std;
    out.probe = normalized;
    out.probe.mse = out.mse_pixel;

    if (opts.out_dir) {
        std::filesystem::create_directories(*opts.out_dir);
        const Tensor& x = mnist.test.x;
        const std::size_t rows = x.dim(2), left = x.dim(3), right = mnist.test.y.numel() / mnist.test.y.dim(0) / rows;
        const std::size_t n = std::min(opts.samples, x.dim(0));
        for (std::size_t i = 0; i < n; ++i) {
            char stem[32];
            std::snprintf(stem, sizeof stem, "recon_%02zu", i);
            std::span<const double> input = x.values().subspan(i * rows * left, rows * left);
            std::span<const double> generated = normalized.predictions.values().subspan(i * rows * right, rows * right);
            std::span<const double> truth = mnist.test.y.values().subspan(i * rows * right, rows * right);
            // Composite: input half next to the generated half.
            std::vector<double> composite(rows * (left + right));
            for (std::size_t r = 0; r < rows; ++r) {
                std::copy_n(input.begin() + static_cast<std::ptrdiff_t>(r * left), left,
                            composite.begin() + static_cast<std::ptrdiff_t>(r * (left + right)));
                std::copy_n(generated.begin() + static_cast<std::ptrdiff_t>(r * right), right,
                            composite.begin() + static_cast<std::ptrdiff_t>(r * (left + right) + left));
            }
            const auto base = *opts.out_dir / stem;
            const std::pair<std::string, std::pair<std::span<const double>, std::size_t>> parts[] = {
                {".pgm", {composite, left + right}},
                {"_input.pgm", {input, left}},
                {"_generated.pgm", {generated, right}},
                {"_truth.pgm", {truth, right}},
            };
            for (const auto& [suffix, view] : parts) {
                auto path = base;
                path += suffix;
                write_pgm(path, view.first, rows, view.second, opts.norm_mean, opts.norm_std);
                out.images.push_back(path);
            }
        }
    }
    return out;
}

std::vector<ForecastRecord> forecast_table(const Tensor& truth, const Tensor& proto_a, const Tensor& proto_b) {
    const Tensor t = as_rows(truth), a = as_rows(proto_a), b = as_rows(proto_b);
    const std::size_t n = t.dim(0);
    if (a.dim(0) != n || b.dim(0) != n) throw std::invalid_argument("forecast_table: row counts differ");
    std::vector<ForecastRecord> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = {i, t[i * t.dim(1)], a[i * a.dim(1)], b[i * b.dim(1)]};
    }
    return out;
}

void write_pgm(const std::filesystem::path& path, std::span<const double> pixels, std::size_t rows, std::size_t cols,
               double norm_mean, double norm_std) {
    if (pixels.size() != rows * cols) throw std::invalid_argument("write_pgm: pixel count does not match extent");
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("write_pgm: cannot open " + path.string());
    os << "P5\n" << cols << ' ' << rows << "\n255\n";
    for (double v : pixels) {
        const double intensity = (v * norm_std + norm_mean) * 255.0;
        const auto byte = static_cast<unsigned char>(std::lround(std::clamp(intensity, 0.0, 255.0)));
        os.put(static_cast<char>(byte));
    }
    if (!os) throw std::runtime_error("write_pgm: write failed for " + path.string());
}

} // namespace bijepa
