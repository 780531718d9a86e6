#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <iostream>

#include "bijepa/runner.hpp"

namespace {

using namespace bijepa;

std::pair<std::string, std::string> split_assignment(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + text + "'");
    return {text.substr(0, eq), text.substr(eq + 1)};
}

struct CommonArgs {
    std::string experiment = "sine";
    std::string variant = "bijepa-expressive";
    std::optional<double> alpha;
    std::uint64_t seed = 0;
    std::string out;
    std::string mnist_dir;
    std::optional<std::size_t> steps;
    std::vector<std::string> sets;
    bool quiet = false;
    std::size_t log_every = 100;
};

void add_common(CLI::App* app, CommonArgs& a, bool with_variant_and_seed) {
    app->add_option("--experiment", a.experiment, "sine | lorenz | mnist")->capture_default_str();
    if (with_variant_and_seed) {
        app->add_option("--variant", a.variant, "bijepa-expressive | bijepa-unconstrained | bijepa-restrictive | classic")
            ->capture_default_str();
        app->add_option("--seed", a.seed, "root RNG seed")->capture_default_str();
    }
    app->add_option("--alpha", a.alpha, "forward/backward loss weight in [0,1] (classic forces 1)");
    app->add_option("--out", a.out, "output directory");
    app->add_option("--mnist-dir", a.mnist_dir, "directory with the four MNIST IDX files")
        ->envname("BIJEPA_MNIST_DIR");
    app->add_option("--steps", a.steps, "override the number of training steps");
    app->add_option("--set", a.sets, "override a hyperparameter, key=value (repeatable)")->take_all();
    app->add_flag("--quiet", a.quiet, "suppress progress output");
    app->add_option("--log-every", a.log_every, "progress interval in steps")->capture_default_str();
}

RunConfig to_run_config(const CommonArgs& a) {
    RunConfig cfg;
    cfg.experiment = experiment_from_string(a.experiment);
    cfg.variant = variant_from_string(a.variant);
    cfg.alpha = a.alpha;
    cfg.seed = a.seed;
    cfg.out_dir = a.out;
    cfg.mnist_dir = a.mnist_dir;
    cfg.steps = a.steps;
    cfg.quiet = a.quiet;
    for (const auto& s : a.sets) cfg.overrides.push_back(split_assignment(s));
    return cfg;
}

ProgressFn progress_printer(const CommonArgs& a) {
    if (a.quiet || a.log_every == 0) return {};
    return [every = a.log_every](const StepMetrics& m) {
        if (m.step % every == 0 || m.step == 1 || m.non_finite) {
            std::fprintf(stderr, "step %6zu  loss %.6f  fwd %.6f  bwd %.6f  |s| %.4f%s\n", m.step, m.total_loss,
                         m.fwd_loss, m.bwd_loss, m.mean_embedding_norm, m.diverged ? "  DIVERGED" : "");
        }
    };
}

void print_optional(const char* name, const std::optional<double>& v) {
    if (v) std::printf("%-22s %.6f\n", name, *v);
}

void print_report(const ExperimentReport& r) {
    std::printf("%-22s %.6f\n", "final_train_loss", r.final_train_loss);
    print_optional("protocol_a_mse", r.protocol_a_mse);
    print_optional("protocol_b_mse", r.protocol_b_mse);
    print_optional("accuracy", r.accuracy);
    print_optional("decoder_mse", r.decoder_mse);
    std::printf("%-22s %s\n", "diverged", r.diverged ? "true" : "false");
    std::printf("%-22s %.1f s\n", "wall_time", r.wall_time);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bidirectional joint-embedding predictive training and evaluation"};
    app.require_subcommand(0, 1);

    CommonArgs run_args;
    add_common(&app, run_args, true);

    CommonArgs suite_args;
    std::vector<std::uint64_t> seeds{0, 1, 2};
    std::vector<std::string> variants{"bijepa-expressive", "classic"};
    CLI::App* suite = app.add_subcommand("suite", "run several variants over several seeds");
    add_common(suite, suite_args, false);
    suite->add_option("--seeds", seeds, "seeds to run")->capture_default_str();
    suite->add_option("--variants", variants, "variants to run")->capture_default_str();

    std::string fetch_dir;
    std::string fetch_url = kDefaultMnistUrl;
    CLI::App* fetch = app.add_subcommand("fetch-mnist", "download and unpack the MNIST IDX files");
    fetch->add_option("dir", fetch_dir, "destination directory")->required();
    fetch->add_option("--url", fetch_url, "base URL serving <name>.gz")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (fetch->parsed()) {
            for (const auto& p : fetch_mnist(fetch_dir, fetch_url)) std::printf("%s\n", p.c_str());
            return 0;
        }
        if (suite->parsed()) {
            RunConfig base = to_run_config(suite_args);
            std::vector<Variant> vs;
            for (const auto& v : variants) vs.push_back(variant_from_string(v));
            const SuiteResult result = run_suite(seeds, vs, base.experiment, base);
            int failures = 0;
            for (const SuiteRow& row : result.rows) {
                std::printf("%-22s seed %-4llu ", to_string(row.variant), static_cast<unsigned long long>(row.seed));
                if (!row.report) {
                    std::printf("ERROR %s\n", row.error.c_str());
                    ++failures;
                    continue;
                }
                const ExperimentReport& r = *row.report;
                std::printf("train %.5f", r.final_train_loss);
                if (r.protocol_b_mse) std::printf("  protoA %.5f  protoB %.5f", *r.protocol_a_mse, *r.protocol_b_mse);
                if (r.accuracy) std::printf("  acc %.4f  dec %.5f", *r.accuracy, r.decoder_mse.value_or(0.0));
                std::printf("%s\n", r.diverged ? "  diverged" : "");
            }
            std::printf("bijepa beats classic on %zu of %zu seeds\n", result.verdict_wins(),
                        result.bijepa_beats_classic.size());
            return failures ? 1 : 0;
        }
        const RunConfig cfg = to_run_config(run_args);
        const ExperimentReport report = run(cfg, progress_printer(run_args));
        print_report(report);
        return 0;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
