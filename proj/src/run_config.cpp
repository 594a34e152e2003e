#include "sscap/run_config.hpp"

#include <climits>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace sscap {

Variant parse_variant(const std::string& name) {
    if (name == "paired-only") return Variant::PairedOnly;
    if (name == "cyclegan") return Variant::CycleGan;
    if (name == "ver1") return Variant::Ver1;
    if (name == "ver2") return Variant::Ver2;
    if (name == "final") return Variant::Final;
    throw std::invalid_argument(
        "unknown variant '" + name +
        "' (expected paired-only, cyclegan, ver1, ver2, or final)");
}

const char* variant_name(Variant v) {
    switch (v) {
        case Variant::PairedOnly: return "paired-only";
        case Variant::CycleGan: return "cyclegan";
        case Variant::Ver1: return "ver1";
        case Variant::Ver2: return "ver2";
        case Variant::Final: return "final";
    }
    throw std::logic_error("variant_name: bad enum value");
}

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

long parse_long(const std::string& key, const std::string& v) {
    size_t used = 0;
    long out;
    try {
        out = std::stol(v, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + key + "': not an integer: '" + v + "'");
    }
    if (used != v.size())
        throw std::invalid_argument("config key '" + key + "': not an integer: '" + v + "'");
    return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    size_t used = 0;
    unsigned long long out;
    try {
        out = std::stoull(v, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + key + "': not an unsigned integer: '" + v +
                                    "'");
    }
    if (used != v.size())
        throw std::invalid_argument("config key '" + key + "': not an unsigned integer: '" + v +
                                    "'");
    return out;
}

int parse_int(const std::string& key, const std::string& v) {
    const long out = parse_long(key, v);
    if (out < INT_MIN || out > INT_MAX)
        throw std::invalid_argument("config key '" + key + "': out of int range: '" + v + "'");
    return static_cast<int>(out);
}

double parse_double(const std::string& key, const std::string& v) {
    size_t used = 0;
    double out;
    try {
        out = std::stod(v, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + key + "': not a number: '" + v + "'");
    }
    if (used != v.size())
        throw std::invalid_argument("config key '" + key + "': not a number: '" + v + "'");
    return out;
}

std::string fmt_double(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void apply_assignment(RunConfig& c, const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    if (key == "num_concepts") c.num_concepts = parse_int(key, v);
    else if (key == "attributes_per_concept") c.attributes_per_concept = parse_int(key, v);
    else if (key == "attribute_vocab") c.attribute_vocab = parse_int(key, v);
    else if (key == "samples_per_concept") c.samples_per_concept = parse_int(key, v);
    else if (key == "image_dim") c.image_dim = parse_int(key, v);
    else if (key == "noise_sigma") c.noise_sigma = parse_double(key, v);
    else if (key == "paired_fraction") c.paired_fraction = parse_double(key, v);
    else if (key == "test_fraction") c.test_fraction = parse_double(key, v);
    else if (key == "latent_dim") c.latent_dim = parse_int(key, v);
    else if (key == "embed_dim") c.embed_dim = parse_int(key, v);
    else if (key == "lstm_hidden") c.lstm_hidden = parse_int(key, v);
    else if (key == "transformer_layers") c.transformer_layers = parse_int(key, v);
    else if (key == "disc_hidden") c.disc_hidden = parse_int(key, v);
    else if (key == "max_seq_len") c.max_seq_len = parse_int(key, v);
    else if (key == "variant") c.variant = v;
    else if (key == "batch_size") c.batch_size = parse_int(key, v);
    else if (key == "iterations") c.iterations = parse_long(key, v);
    else if (key == "warmup_iters") c.warmup_iters = parse_long(key, v);
    else if (key == "pool_fraction") c.pool_fraction = parse_double(key, v);
    else if (key == "seed") c.seed = parse_u64(key, v);
    else if (key == "eval_every") c.eval_every = parse_long(key, v);
    else if (key == "beam_size") c.beam_size = parse_int(key, v);
    else if (key == "lambda_x") c.lambda_x = parse_double(key, v);
    else if (key == "lambda_y") c.lambda_y = parse_double(key, v);
    else if (key == "lambda_reg") c.lambda_reg = parse_double(key, v);
    else if (key == "w_gan") c.w_gan = parse_double(key, v);
    else if (key == "w_triplet") c.w_triplet = parse_double(key, v);
    else if (key == "lr") c.lr = parse_double(key, v);
    else if (key == "adam_b1") c.adam_b1 = parse_double(key, v);
    else if (key == "adam_b2") c.adam_b2 = parse_double(key, v);
    else if (key == "adam_eps") c.adam_eps = parse_double(key, v);
    else if (key == "dataset") c.dataset = v;
    else throw std::invalid_argument("unknown config key '" + key + "'");
}

RunConfig load_run_config(const std::string& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::string line;
    std::set<std::string> seen;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                        ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        if (!seen.insert(key).second)
            throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                        ": duplicate key '" + key + "'");
        try {
            apply_assignment(base, key, line.substr(eq + 1));
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return base;
}

std::string resolved_config(const RunConfig& c) {
    std::ostringstream out;
    out << "num_concepts=" << c.num_concepts << "\n";
    out << "attributes_per_concept=" << c.attributes_per_concept << "\n";
    out << "attribute_vocab=" << c.attribute_vocab << "\n";
    out << "samples_per_concept=" << c.samples_per_concept << "\n";
    out << "image_dim=" << c.image_dim << "\n";
    out << "noise_sigma=" << fmt_double(c.noise_sigma) << "\n";
    out << "paired_fraction=" << fmt_double(c.paired_fraction) << "\n";
    out << "test_fraction=" << fmt_double(c.test_fraction) << "\n";
    out << "latent_dim=" << c.latent_dim << "\n";
    out << "embed_dim=" << c.embed_dim << "\n";
    out << "lstm_hidden=" << c.lstm_hidden << "\n";
    out << "transformer_layers=" << c.transformer_layers << "\n";
    out << "disc_hidden=" << c.disc_hidden << "\n";
    out << "max_seq_len=" << c.max_seq_len << "\n";
    out << "variant=" << c.variant << "\n";
    out << "batch_size=" << c.batch_size << "\n";
    out << "iterations=" << c.iterations << "\n";
    out << "warmup_iters=" << c.warmup_iters << "\n";
    out << "pool_fraction=" << fmt_double(c.pool_fraction) << "\n";
    out << "seed=" << c.seed << "\n";
    out << "eval_every=" << c.eval_every << "\n";
    out << "beam_size=" << c.beam_size << "\n";
    out << "lambda_x=" << fmt_double(c.lambda_x) << "\n";
    out << "lambda_y=" << fmt_double(c.lambda_y) << "\n";
    out << "lambda_reg=" << fmt_double(c.lambda_reg) << "\n";
    out << "w_gan=" << fmt_double(c.w_gan) << "\n";
    out << "w_triplet=" << fmt_double(c.w_triplet) << "\n";
    out << "lr=" << fmt_double(c.lr) << "\n";
    out << "adam_b1=" << fmt_double(c.adam_b1) << "\n";
    out << "adam_b2=" << fmt_double(c.adam_b2) << "\n";
    out << "adam_eps=" << fmt_double(c.adam_eps) << "\n";
    out << "dataset=" << c.dataset << "\n";
    return out.str();
}

void RunConfig::validate() const {
    gen_config().validate();
    model_config().validate();
    loss_weights().validate();
    parse_variant(variant);
    if (!(paired_fraction > 0.0) || paired_fraction >= 1.0)
        throw std::invalid_argument("paired_fraction must be in (0, 1)");
    if (!(test_fraction > 0.0) || test_fraction >= 1.0)
        throw std::invalid_argument("test_fraction must be in (0, 1)");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be at least 1");
    if (iterations < 0) throw std::invalid_argument("iterations must be non-negative");
    if (warmup_iters < 0) throw std::invalid_argument("warmup_iters must be non-negative");
    if (!(pool_fraction > 0.0) || pool_fraction > 1.0)
        throw std::invalid_argument("pool_fraction must be in (0, 1]");
    if (eval_every < 1) throw std::invalid_argument("eval_every must be at least 1");
    if (beam_size < 1) throw std::invalid_argument("beam_size must be at least 1");
    if (dataset.empty() && attributes_per_concept + 2 > max_seq_len)
        throw std::invalid_argument(
            "attributes_per_concept + 2 exceeds max_seq_len; captions would not fit");
    if (!(lr > 0.0)) throw std::invalid_argument("lr must be positive");
    if (adam_b1 < 0.0 || adam_b1 >= 1.0 || adam_b2 < 0.0 || adam_b2 >= 1.0)
        throw std::invalid_argument("adam betas must be in [0, 1)");
    if (!(adam_eps > 0.0)) throw std::invalid_argument("adam_eps must be positive");
}

GenConfig RunConfig::gen_config() const {
    GenConfig g;
    g.num_concepts = num_concepts;
    g.attributes_per_concept = attributes_per_concept;
    g.attribute_vocab = attribute_vocab;
    g.samples_per_concept = samples_per_concept;
    g.image_dim = image_dim;
    g.noise_sigma = noise_sigma;
    g.seed = seed;
    return g;
}

ModelConfig RunConfig::model_config() const {
    ModelConfig m;
    m.image_dim = image_dim;
    m.latent_dim = latent_dim;
    m.vocab_size = attribute_vocab + ATTR_BASE;
    m.embed_dim = embed_dim;
    m.lstm_hidden = lstm_hidden;
    m.transformer_layers = transformer_layers;
    m.disc_hidden = disc_hidden;
    m.max_seq_len = max_seq_len;
    return m;
}

LossWeights RunConfig::loss_weights() const {
    LossWeights w;
    w.lambda_x = lambda_x;
    w.lambda_y = lambda_y;
    w.lambda_reg = lambda_reg;
    w.w_gan = w_gan;
    w.w_triplet = w_triplet;
    w.validate();
    return w;
}

}  // namespace sscap
