// Command-line front end: dataset generation, training, evaluation, and the
// five-variant ablation, all driven by one flat config file.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "sscap/checkpoint.hpp"
#include "sscap/dataset.hpp"
#include "sscap/metrics.hpp"
#include "sscap/run_config.hpp"
#include "sscap/trainer.hpp"

namespace fs = std::filesystem;
using namespace sscap;

namespace {

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> sets;
    bool force = false;
    bool has_seed = false;
    std::uint64_t seed = 0;
    std::string variant;
    int beam = 0;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "key=value config file");
    cmd->add_option("--set", o.sets, "extra key=value override (repeatable)");
    cmd->add_option("--seed", o.seed, "seed override")->each([&](const std::string&) {
        o.has_seed = true;
    });
    cmd->add_flag("--force", o.force, "overwrite existing outputs");
}

RunConfig build_config(const CommonOpts& o) {
    RunConfig cfg;
    if (!o.config_path.empty()) cfg = load_run_config(o.config_path);
    for (const std::string& kv : o.sets) {
        const size_t eq = kv.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
        apply_assignment(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (o.has_seed) cfg.seed = o.seed;
    if (!o.variant.empty()) cfg.variant = o.variant;
    if (o.beam > 0) cfg.beam_size = o.beam;
    cfg.validate();
    return cfg;
}

void refuse_existing(const std::string& path, bool force) {
    if (!force && fs::exists(path))
        throw std::runtime_error(path + " already exists (use --force to overwrite)");
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

SplitBundle make_bundle(const RunConfig& cfg) {
    Dataset data = cfg.dataset.empty() ? generate(cfg.gen_config()) : load_external(cfg.dataset);
    return split_scarcely_paired(data, cfg.paired_fraction, cfg.test_fraction, cfg.seed);
}

std::string metrics_csv_cells(const MetricsReport& m) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f,%.6f,%.6f", m.bleu1, m.bleu2, m.bleu3,
                  m.bleu4, m.token_f1);
    std::string row = buf;
    row += std::isnan(m.pseudo_precision_x)
               ? ","
               : "," + std::to_string(m.pseudo_precision_x);
    row += std::isnan(m.pseudo_precision_y)
               ? ","
               : "," + std::to_string(m.pseudo_precision_y);
    return row;
}

int run_generate(const CommonOpts& o, const std::string& out_path) {
    const RunConfig cfg = build_config(o);
    refuse_existing(out_path, o.force);
    const Dataset data = generate(cfg.gen_config());
    save_dataset(out_path, data);
    std::cout << "wrote " << data.samples.size() << " samples (image_dim=" << data.image_dim
              << ", vocab=" << data.vocab_size << ") to " << out_path << "\n";
    return 0;
}

int run_train(const CommonOpts& o, const std::string& out_dir) {
    const RunConfig cfg = build_config(o);
    refuse_existing(out_dir + "/checkpoint.json", o.force);
    fs::create_directories(out_dir);
    write_text(out_dir + "/config.resolved.cfg", resolved_config(cfg));
    const SplitBundle bundle = make_bundle(cfg);
    const TrainResult result = train(cfg, bundle, out_dir);
    std::cout << result.final_metrics.to_json() << "\n";
    std::cout << "run artifacts in " << out_dir << "\n";
    return 0;
}

int run_eval(const CommonOpts& o, const std::string& checkpoint_path,
             const std::string& out_path) {
    const RunConfig cfg = build_config(o);
    const Checkpoint ckpt = load_checkpoint(checkpoint_path);
    const SplitBundle bundle = make_bundle(cfg);
    const MetricsReport m = evaluate(ckpt.params, ckpt.config, bundle.test, cfg.beam_size);
    std::cout << m.to_json() << "\n";
    if (!out_path.empty()) {
        refuse_existing(out_path, o.force);
        write_text(out_path, m.to_json() + "\n");
    }
    return 0;
}

int run_ablate(const CommonOpts& o, const std::string& out_dir) {
    const RunConfig base = build_config(o);
    refuse_existing(out_dir + "/summary.csv", o.force);
    fs::create_directories(out_dir);
    write_text(out_dir + "/config.resolved.cfg", resolved_config(base));
    const SplitBundle bundle = make_bundle(base);

    std::string summary =
        "variant,bleu1,bleu2,bleu3,bleu4,token_f1,pseudo_precision_x,pseudo_precision_y\n";
    for (Variant v : {Variant::PairedOnly, Variant::CycleGan, Variant::Ver1, Variant::Ver2,
                      Variant::Final}) {
        RunConfig cfg = base;
        cfg.variant = variant_name(v);
        const std::string run_dir = out_dir + "/" + cfg.variant;
        fs::create_directories(run_dir);
        write_text(run_dir + "/config.resolved.cfg", resolved_config(cfg));
        const TrainResult result = train(cfg, bundle, run_dir);
        summary += cfg.variant + "," + metrics_csv_cells(result.final_metrics) + "\n";
        std::cerr << cfg.variant << ": " << result.final_metrics.to_json() << "\n";
    }
    write_text(out_dir + "/summary.csv", summary);
    std::cout << "summary written to " << out_dir << "/summary.csv\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"semi-supervised captioner on scarcely paired data"};
    app.require_subcommand(1);

    CommonOpts gen_o, train_o, eval_o, ablate_o;
    std::string gen_out, train_out, eval_ckpt, eval_out, ablate_out;

    CLI::App* gen = app.add_subcommand("generate", "write a synthetic dataset as JSONL");
    add_common(gen, gen_o);
    gen->add_option("--out", gen_out, "output JSONL path")->required();

    CLI::App* tr = app.add_subcommand("train", "train one variant");
    add_common(tr, train_o);
    tr->add_option("--variant", train_o.variant,
                   "paired-only | cyclegan | ver1 | ver2 | final");
    tr->add_option("--beam", train_o.beam, "beam size for evaluation rows");
    tr->add_option("--out", train_out, "run directory")->required();

    CLI::App* ev = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
    add_common(ev, eval_o);
    ev->add_option("--checkpoint", eval_ckpt, "checkpoint.json path")->required();
    ev->add_option("--beam", eval_o.beam, "beam size");
    ev->add_option("--out", eval_out, "also write metrics JSON here");

    CLI::App* ab = app.add_subcommand("ablate", "train all five variants on one split");
    add_common(ab, ablate_o);
    ab->add_option("--beam", ablate_o.beam, "beam size for evaluation rows");
    ab->add_option("--out", ablate_out, "output directory")->required();

    try {
        app.parse(argc, argv);
        if (gen->parsed()) return run_generate(gen_o, gen_out);
        if (tr->parsed()) return run_train(train_o, train_out);
        if (ev->parsed()) return run_eval(eval_o, eval_ckpt, eval_out);
        if (ab->parsed()) return run_ablate(ablate_o, ablate_out);
        return 1;
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
