#include "bijepa/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <numeric>
#include <sstream>

namespace bijepa {

const char* to_string(Experiment e) {
    switch (e) {
    case Experiment::Sine: return "sine";
    case Experiment::Lorenz: return "lorenz";
    case Experiment::Mnist: return "mnist";
    }
    return "?";
}

const char* to_string(Variant v) {
    switch (v) {
    case Variant::BiJepaExpressive: return "bijepa-expressive";
    case Variant::BiJepaUnconstrained: return "bijepa-unconstrained";
    case Variant::BiJepaRestrictive: return "bijepa-restrictive";
    case Variant::Classic: return "classic";
    }
    return "?";
}

Experiment experiment_from_string(const std::string& name) {
    for (Experiment e : {Experiment::Sine, Experiment::Lorenz, Experiment::Mnist}) {
        if (name == to_string(e)) return e;
    }
    throw ConfigError("unknown experiment '" + name + "' (expected sine, lorenz or mnist)");
}

Variant variant_from_string(const std::string& name) {
    for (Variant v : {Variant::BiJepaExpressive, Variant::BiJepaUnconstrained, Variant::BiJepaRestrictive, Variant::Classic}) {
        if (name == to_string(v)) return v;
    }
    throw ConfigError("unknown variant '" + name +
                      "' (expected bijepa-expressive, bijepa-unconstrained, bijepa-restrictive or classic)");
}

ConstraintMode constraint_of(Variant v) {
    switch (v) {
    case Variant::BiJepaUnconstrained: return ConstraintMode::Unconstrained;
    case Variant::BiJepaRestrictive: return ConstraintMode::Restrictive;
    case Variant::BiJepaExpressive:
    case Variant::Classic: return ConstraintMode::Expressive;
    }
    return ConstraintMode::Expressive;
}

Hyperparams defaults_for(Experiment e, Variant v) {
    Hyperparams h;
    switch (e) {
    case Experiment::Sine:
        h.lr = 1e-3;
        h.steps = 2000;
        h.batch = 64;
        h.tau = 0.995;
        break;
    case Experiment::Lorenz:
        h.lr = 5e-4;
        h.steps = 3000;
        h.batch = 64;
        h.tau = 0.995;
        break;
    case Experiment::Mnist:
        h.lr = 1e-3;
        h.steps = 0;
        h.epochs = 10;
        h.batch = 256;
        h.tau = 0.99;
        h.probe_epochs = 10;
        h.probe_batch = 256;
        break;
    }
    h.weight_decay = constraint_settings(constraint_of(v)).weight_decay;
    h.alpha = v == Variant::Classic ? 1.0 : 0.5;
    return h;
}

namespace {

template <typename T>
void parse_value(const std::string& key, const std::string& text, T& field) {
    std::istringstream is(text);
    T value{};
    if constexpr (std::is_same_v<T, std::size_t>) {
        if (!text.empty() && text[0] == '-') throw ConfigError("--set " + key + ": expected a non-negative integer");
    }
    is >> value;
    if (!is || !is.eof()) throw ConfigError("--set " + key + ": cannot parse '" + text + "'");
    field = value;
}

} // namespace

Hyperparams resolve_hyperparams(const RunConfig& cfg) {
    if (cfg.variant == Variant::BiJepaUnconstrained && cfg.experiment != Experiment::Sine) {
        throw ConfigError(std::string("variant bijepa-unconstrained is only defined for the sine experiment; the ") +
                          to_string(cfg.experiment) + " architecture is always trained with LayerNorm");
    }
    Hyperparams h = defaults_for(cfg.experiment, cfg.variant);
    if (cfg.alpha) h.alpha = *cfg.alpha;
    if (cfg.steps) h.steps = *cfg.steps;
    for (const auto& [key, value] : cfg.overrides) {
        bool found = false;
        visit_hyperparams(h, [&](const char* name, auto& field) {
            if (key == name) {
                parse_value(key, value, field);
                found = true;
            }
        });
        if (!found) throw ConfigError("--set: unknown hyperparameter '" + key + "'");
    }
    if (cfg.variant == Variant::Classic) h.alpha = 1.0;
    if (!(h.alpha >= 0.0 && h.alpha <= 1.0)) throw ConfigError("alpha must lie in [0,1]");
    if (!(h.tau >= 0.0 && h.tau <= 1.0)) throw ConfigError("tau must lie in [0,1]");
    if (h.weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
    if (h.batch < 2) throw ConfigError("batch must be >= 2");
    if (h.steps == 0 && h.epochs == 0) throw ConfigError("either steps or epochs must be positive");
    if (h.probe_batch == 0) throw ConfigError("probe_batch must be >= 1");
    return h;
}

// ---------------------------------------------------------------------------

namespace {

double json_number(const nlohmann::json& j) {
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

std::optional<double> optional_from(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}

} // namespace

nlohmann::json report_metrics(const ExperimentReport& r) {
    nlohmann::json j;
    j["config"] = r.config;
    j["final_train_loss"] = r.final_train_loss;
    j["protocol_a_mse"] = optional_json(r.protocol_a_mse);
    j["protocol_b_mse"] = optional_json(r.protocol_b_mse);
    j["accuracy"] = optional_json(r.accuracy);
    j["decoder_mse"] = optional_json(r.decoder_mse);
    j["decoder_mse_normalized"] = optional_json(r.decoder_mse_normalized);
    j["diverged"] = r.diverged;

    nlohmann::json hist;
    std::vector<double> step, total, fwd, bwd, norm;
    for (const StepMetrics& m : r.loss_history) {
        step.push_back(static_cast<double>(m.step));
        total.push_back(m.total_loss);
        fwd.push_back(m.fwd_loss);
        bwd.push_back(m.bwd_loss);
        norm.push_back(m.mean_embedding_norm);
    }
    hist["step"] = step;
    hist["total"] = total;
    hist["fwd"] = fwd;
    hist["bwd"] = bwd;
    hist["emb_norm"] = norm;
    j["loss_history"] = hist;

    nlohmann::json fc = nlohmann::json::array();
    for (const ForecastRecord& f : r.forecast) {
        fc.push_back({{"sample", f.sample}, {"truth", f.truth}, {"proto_a", f.proto_a}, {"proto_b", f.proto_b}});
    }
    j["forecast"] = fc;
    return j;
}

nlohmann::json report_to_json(const ExperimentReport& r) {
    nlohmann::json j = report_metrics(r);
    j["wall_time"] = r.wall_time;
    return j;
}

ExperimentReport report_from_json(const nlohmann::json& j) {
    ExperimentReport r;
    r.config = j.at("config");
    r.final_train_loss = json_number(j.at("final_train_loss"));
    r.protocol_a_mse = optional_from(j, "protocol_a_mse");
    r.protocol_b_mse = optional_from(j, "protocol_b_mse");
    r.accuracy = optional_from(j, "accuracy");
    r.decoder_mse = optional_from(j, "decoder_mse");
    r.decoder_mse_normalized = optional_from(j, "decoder_mse_normalized");
    r.diverged = j.at("diverged").get<bool>();
    r.wall_time = j.value("wall_time", 0.0);
    const auto& hist = j.at("loss_history");
    const auto& steps = hist.at("step");
    for (std::size_t i = 0; i < steps.size(); ++i) {
        StepMetrics m;
        m.step = static_cast<std::size_t>(json_number(steps[i]));
        m.total_loss = json_number(hist.at("total")[i]);
        m.fwd_loss = json_number(hist.at("fwd")[i]);
        m.bwd_loss = json_number(hist.at("bwd")[i]);
        m.mean_embedding_norm = json_number(hist.at("emb_norm")[i]);
        m.non_finite = !std::isfinite(m.total_loss);
        m.diverged = m.non_finite || m.total_loss > kDivergenceLoss;
        r.loss_history.push_back(m);
    }
    for (const auto& f : j.at("forecast")) {
        r.forecast.push_back({f.at("sample").get<std::size_t>(), json_number(f.at("truth")),
                              json_number(f.at("proto_a")), json_number(f.at("proto_b"))});
    }
    return r;
}

// ---------------------------------------------------------------------------

namespace {

nlohmann::json config_echo(const RunConfig& cfg, const Hyperparams& h) {
    nlohmann::json j;
    j["experiment"] = to_string(cfg.experiment);
    j["variant"] = to_string(cfg.variant);
    j["seed"] = cfg.seed;
    const ConstraintSettings cs = constraint_settings(constraint_of(cfg.variant));
    j["constraint"] = {{"mode", to_string(constraint_of(cfg.variant))},
                       {"layer_norm", cs.with_ln},
                       {"sphere_projection", cs.sphere}};
    j["optimizer"] = {{"name", "adamw"}, {"beta1", AdamWConfig{}.beta1}, {"beta2", AdamWConfig{}.beta2},
                      {"eps", AdamWConfig{}.eps}};
    nlohmann::json hp;
    visit_hyperparams(h, [&](const char* name, const auto& field) { hp[name] = field; });
    j["hyperparams"] = hp;
    const Architecture arch = cfg.experiment == Experiment::Sine     ? sine_architecture()
                              : cfg.experiment == Experiment::Lorenz ? lorenz_architecture()
                                                                     : mnist_architecture();
    j["architecture"] = {{"encoder", arch.kind == Architecture::Kind::Conv ? "conv" : "mlp"},
                         {"input_dim", arch.input_dim},
                         {"hidden", arch.hidden},
                         {"embed_dim", arch.embed_dim},
                         {"predictor_hidden", arch.predictor_hidden}};
    j["layer_norm_eps"] = kLayerNormEps;
    j["batch_norm_eps"] = kBatchNormEps;
    j["batch_norm_momentum"] = kBatchNormMomentum;
    j["divergence_threshold"] = kDivergenceLoss;
    return j;
}

ProbeConfig probe_config(const Hyperparams& h, std::uint64_t seed) {
    ProbeConfig p;
    p.kind = ProbeKind::Linear;
    p.lr = h.probe_lr;
    p.steps = h.probe_steps;
    p.epochs = h.probe_epochs;
    p.batch = h.probe_batch;
    p.hidden = h.decoder_hidden;
    p.seed = seed;
    return p;
}

// Training loop shared by all experiments. `next_batch` yields (x, y).
template <typename NextBatch>
void train(BiJepaModel& model, const Hyperparams& h, std::size_t total_steps, NextBatch&& next_batch,
           ExperimentReport& report, const ProgressFn& progress) {
    AdamW opt = make_optimizer(model, h.lr, h.weight_decay);
    model.set_norm_mode(NormMode::Train);
    for (std::size_t step = 1; step <= total_steps; ++step) {
        ViewBatch batch = next_batch();
        StepMetrics m = train_step(model, opt, batch.x, batch.y, step);
        report.loss_history.push_back(m);
        if (progress) progress(m);
        if (m.diverged) report.diverged = true;
        if (m.non_finite) break;
    }
    const std::size_t n = report.loss_history.size();
    const std::size_t window = std::max<std::size_t>(1, std::min(h.loss_window, n));
    double acc = 0.0;
    for (std::size_t i = n - window; i < n; ++i) acc += report.loss_history[i].total_loss;
    report.final_train_loss = n ? acc / static_cast<double>(window) : std::numeric_limits<double>::quiet_NaN();
}

bool halted(const ExperimentReport& r) { return !r.loss_history.empty() && r.loss_history.back().non_finite; }

void run_regression_protocols(BiJepaModel& model, const ProbeData& data, const ProbeConfig& pc,
                              ExperimentReport& report) {
    ProbeResult a = protocol_a(model, data, pc);
    ProbeResult b = protocol_b(model, data, pc);
    report.protocol_a_mse = a.mse;
    report.protocol_b_mse = b.mse;
    report.forecast = forecast_table(data.test.y, a.predictions, b.predictions);
}

// Minibatches over a fixed split: shuffled passes, partial batches of fewer
// than two rows dropped (batch norm needs two).
class EpochSampler {
public:
    EpochSampler(const ViewBatch& data, std::size_t batch, Rng rng) : data_(data), batch_(batch), rng_(rng) {
        order_.resize(data.size());
        std::iota(order_.begin(), order_.end(), 0);
    }

    ViewBatch next() {
        if (pos_ >= order_.size() || order_.size() - pos_ < 2) {
            std::shuffle(order_.begin(), order_.end(), rng_.engine());
            pos_ = 0;
        }
        const std::size_t count = std::min(batch_, order_.size() - pos_);
        std::vector<std::size_t> rows(order_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                      order_.begin() + static_cast<std::ptrdiff_t>(pos_ + count));
        pos_ += count;
        return gather_rows(data_, rows);
    }

    std::size_t steps_per_epoch() const {
        const std::size_t full = order_.size() / batch_;
        return full + (order_.size() % batch_ >= 2 ? 1 : 0);
    }

private:
    const ViewBatch& data_;
    std::size_t batch_;
    Rng rng_;
    std::vector<std::size_t> order_;
    std::size_t pos_ = std::numeric_limits<std::size_t>::max();
};

} // namespace

ExperimentReport run(const RunConfig& cfg, const ProgressFn& progress) {
    const auto started = std::chrono::steady_clock::now();
    const Hyperparams h = resolve_hyperparams(cfg);
    if (cfg.experiment == Experiment::Mnist) {
        if (cfg.mnist_dir.empty()) throw ConfigError("mnist experiment needs --mnist-dir or BIJEPA_MNIST_DIR");
        for (const auto& f : {mnist_train_files(cfg.mnist_dir), mnist_test_files(cfg.mnist_dir)}) {
            for (const auto& p : {f.images, f.labels}) {
                if (!std::filesystem::exists(p)) throw std::runtime_error("missing MNIST file " + p.string());
            }
        }
    }

    ExperimentReport report;
    report.config = config_echo(cfg, h);

    const Rng root(cfg.seed);
    ModelOptions mo;
    mo.mode = constraint_of(cfg.variant);
    mo.alpha = h.alpha;
    mo.tau = h.tau;
    mo.init_seed = root.stream("init").seed();
    const ProbeConfig pc = probe_config(h, root.stream("probe").seed());

    switch (cfg.experiment) {
    case Experiment::Sine: {
        mo.arch = sine_architecture();
        BiJepaModel model(mo);
        SineConfig sc;
        sc.noise_std = h.noise_std;
        sc.time_step = h.time_step;
        sc.batch = h.batch;
        Rng data = root.stream("data");
        train(model, h, h.steps, [&] { return gen_sine_batch(sc, data); }, report, progress);
        if (halted(report)) break;
        SineConfig probe_sc = sc;
        probe_sc.batch = h.sine_probe_samples;
        SineConfig test_sc = sc;
        test_sc.batch = h.sine_test_samples;
        ProbeData pd{gen_sine_batch(probe_sc, root.stream("probe-data").seed()),
                     gen_sine_batch(test_sc, root.stream("test-data").seed())};
        run_regression_protocols(model, pd, pc, report);
        break;
    }
    case Experiment::Lorenz: {
        mo.arch = lorenz_architecture();
        BiJepaModel model(mo);
        LorenzConfig lc;
        lc.dt = h.dt;
        lc.n_train = h.n_train;
        lc.n_probe = h.n_probe;
        lc.n_test = h.n_test;
        lc.integrator = h.rk4 ? Integrator::Rk4 : Integrator::Euler;
        const LorenzDataset ds = build_lorenz_dataset(lc, root.stream("data").seed());
        EpochSampler sampler(ds.train, h.batch, root.stream("batches"));
        train(model, h, h.steps, [&] { return sampler.next(); }, report, progress);
        if (halted(report)) break;
        run_regression_protocols(model, ProbeData{ds.probe, ds.test}, pc, report);
        break;
    }
    case Experiment::Mnist: {
        mo.arch = mnist_architecture();
        BiJepaModel model(mo);
        const ViewBatch train_views = split_vertical(load_mnist_idx(mnist_train_files(cfg.mnist_dir), {}, h.train_subset));
        const ViewBatch test_views = split_vertical(load_mnist_idx(mnist_test_files(cfg.mnist_dir), {}, h.test_subset));
        EpochSampler sampler(train_views, h.batch, root.stream("batches"));
        const std::size_t total = h.steps ? h.steps : h.epochs * sampler.steps_per_epoch();
        train(model, h, total, [&] { return sampler.next(); }, report, progress);
        if (halted(report)) break;
        const ProbeData pd{train_views, test_views};
        report.accuracy = linear_probe_classify(model, pd, pc).accuracy;
        DecoderOptions dopts;
        dopts.samples = h.recon_samples;
        if (!cfg.out_dir.empty()) dopts.out_dir = cfg.out_dir;
        const DecoderResult dec = generative_decoder(model, pd, pc, dopts);
        report.decoder_mse = dec.mse_pixel;
        report.decoder_mse_normalized = dec.mse_normalized;
        break;
    }
    }

    report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (!cfg.out_dir.empty()) emit_outputs(report, cfg.out_dir);
    return report;
}

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << std::setprecision(17);
    return os;
}

void check_written(std::ofstream& os, const std::filesystem::path& path) {
    os.flush();
    if (!os) throw std::runtime_error("write failed for " + path.string());
}

} // namespace

void emit_outputs(const ExperimentReport& report, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + out_dir.string() + ": " + ec.message());

    const auto json_path = out_dir / "report.json";
    auto js = open_output(json_path);
    js << report_to_json(report).dump(2) << '\n';
    check_written(js, json_path);

    const auto loss_path = out_dir / "loss.csv";
    auto ls = open_output(loss_path);
    ls << "step,total,fwd,bwd,emb_norm\n";
    for (const StepMetrics& m : report.loss_history) {
        ls << m.step << ',' << m.total_loss << ',' << m.fwd_loss << ',' << m.bwd_loss << ',' << m.mean_embedding_norm
           << '\n';
    }
    check_written(ls, loss_path);

    if (!report.forecast.empty()) {
        const auto fc_path = out_dir / "forecast.csv";
        auto fs = open_output(fc_path);
        fs << "sample,truth,proto_a,proto_b\n";
        for (const ForecastRecord& f : report.forecast) {
            fs << f.sample << ',' << f.truth << ',' << f.proto_a << ',' << f.proto_b << '\n';
        }
        check_written(fs, fc_path);
    }
}

ExperimentReport read_report(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    return report_from_json(nlohmann::json::parse(is));
}

// ---------------------------------------------------------------------------

std::size_t SuiteResult::verdict_wins() const {
    return static_cast<std::size_t>(
        std::count_if(bijepa_beats_classic.begin(), bijepa_beats_classic.end(), [](const auto& kv) { return kv.second; }));
}

namespace {

std::string csv_value(const std::optional<double>& v) {
    if (!v) return "";
    std::ostringstream os;
    os << std::setprecision(10) << *v;
    return os.str();
}

std::optional<double> primary_metric(Experiment e, const ExperimentReport& r) {
    return e == Experiment::Mnist ? r.accuracy : r.protocol_b_mse;
}

} // namespace

SuiteResult run_suite(const std::vector<std::uint64_t>& seeds, const std::vector<Variant>& variants,
                      Experiment experiment, const RunConfig& base) {
    if (seeds.empty()) throw ConfigError("run_suite: empty seed list");
    if (variants.empty()) throw ConfigError("run_suite: empty variant list");

    SuiteResult result;
    for (Variant v : variants) {
        for (std::uint64_t seed : seeds) {
            RunConfig cfg = base;
            cfg.experiment = experiment;
            cfg.variant = v;
            cfg.seed = seed;
            if (!base.out_dir.empty()) cfg.out_dir = base.out_dir / (std::string(to_string(v)) + "_seed" + std::to_string(seed));
            SuiteRow row{v, seed, std::nullopt, ""};
            try {
                row.report = run(cfg);
            } catch (const std::exception& e) {
                row.error = e.what();
            }
            result.rows.push_back(std::move(row));
        }
    }

    auto find = [&](Variant v, std::uint64_t seed) -> const ExperimentReport* {
        for (const SuiteRow& r : result.rows) {
            if (r.variant == v && r.seed == seed && r.report) return &*r.report;
        }
        return nullptr;
    };
    for (std::uint64_t seed : seeds) {
        const ExperimentReport* bi = find(Variant::BiJepaExpressive, seed);
        const ExperimentReport* cl = find(Variant::Classic, seed);
        if (!bi || !cl) continue;
        const auto mb = primary_metric(experiment, *bi), mc = primary_metric(experiment, *cl);
        if (!mb || !mc) {
            result.bijepa_beats_classic[seed] = false;
            continue;
        }
        result.bijepa_beats_classic[seed] = experiment == Experiment::Mnist ? *mb > *mc : *mb < *mc;
    }

    if (!base.out_dir.empty()) {
        std::filesystem::create_directories(base.out_dir);
        const std::string verdict = experiment == Experiment::Mnist ? "bijepa_beats_classic_accuracy"
                                                                    : "bijepa_beats_classic_protoB";
        const auto csv_path = base.out_dir / "suite.csv";
        auto os = open_output(csv_path);
        os << "variant,seed,final_train_loss,protocol_a_mse,protocol_b_mse,accuracy,decoder_mse,diverged," << verdict
           << ",error\n";
        for (const SuiteRow& r : result.rows) {
            os << to_string(r.variant) << ',' << r.seed << ',';
            if (r.report) {
                os << csv_value(r.report->final_train_loss) << ',' << csv_value(r.report->protocol_a_mse) << ','
                   << csv_value(r.report->protocol_b_mse) << ',' << csv_value(r.report->accuracy) << ','
                   << csv_value(r.report->decoder_mse) << ',' << (r.report->diverged ? "true" : "false") << ',';
            } else {
                os << ",,,,,,";
            }
            auto it = result.bijepa_beats_classic.find(r.seed);
            if (r.variant == Variant::BiJepaExpressive && it != result.bijepa_beats_classic.end()) {
                os << (it->second ? "true" : "false");
            }
            std::string err = r.error;
            std::replace(err.begin(), err.end(), ',', ';');
            std::replace(err.begin(), err.end(), '\n', ' ');
            os << ',' << err << '\n';
        }
        for (Variant v : variants) {
            std::vector<const ExperimentReport*> reps;
            for (const SuiteRow& r : result.rows) {
                if (r.variant == v && r.report) reps.push_back(&*r.report);
            }
            auto mean_of = [&](auto getter) -> std::optional<double> {
                double acc = 0.0;
                std::size_t n = 0;
                for (const ExperimentReport* r : reps) {
                    if (auto val = getter(*r)) {
                        acc += *val;
                        ++n;
                    }
                }
                return n ? std::optional<double>(acc / static_cast<double>(n)) : std::nullopt;
            };
            os << to_string(v) << ",mean,"
               << csv_value(mean_of([](const ExperimentReport& r) { return std::optional<double>(r.final_train_loss); }))
               << ',' << csv_value(mean_of([](const ExperimentReport& r) { return r.protocol_a_mse; })) << ','
               << csv_value(mean_of([](const ExperimentReport& r) { return r.protocol_b_mse; })) << ','
               << csv_value(mean_of([](const ExperimentReport& r) { return r.accuracy; })) << ','
               << csv_value(mean_of([](const ExperimentReport& r) { return r.decoder_mse; })) << ",,,\n";
        }
        check_written(os, csv_path);

        nlohmann::json sj;
        sj["experiment"] = to_string(experiment);
        sj["seeds"] = seeds;
        nlohmann::json verdicts = nlohmann::json::object();
        for (const auto& [seed, win] : result.bijepa_beats_classic) verdicts[std::to_string(seed)] = win;
        sj[verdict] = verdicts;
        sj["majority"] = result.bijepa_beats_classic.empty()
                             ? nlohmann::json()
                             : nlohmann::json(2 * result.verdict_wins() > result.bijepa_beats_classic.size());
        const auto json_path = base.out_dir / "suite.json";
        auto js = open_output(json_path);
        js << sj.dump(2) << '\n';
        check_written(js, json_path);
    }
    return result;
}

} // namespace bijepa
