#include "sscap/checkpoint.hpp"

#include <fstream>

#include "json.hpp"

namespace sscap {

namespace {
constexpr int kFormatVersion = 1;
}

void save_checkpoint(const std::string& path, const ModelConfig& cfg, const ParamStore& ps) {
    nlohmann::json doc;
    doc["format_version"] = kFormatVersion;
    doc["config"] = {{"image_dim", cfg.image_dim},
                     {"latent_dim", cfg.latent_dim},
                     {"vocab_size", cfg.vocab_size},
                     {"embed_dim", cfg.embed_dim},
                     {"lstm_hidden", cfg.lstm_hidden},
                     {"transformer_layers", cfg.transformer_layers},
                     {"disc_hidden", cfg.disc_hidden},
                     {"max_seq_len", cfg.max_seq_len}};
    nlohmann::json params = nlohmann::json::array();
    for (const auto& e : ps.entries()) {
        params.push_back({{"role", e.role},
                          {"name", e.name},
                          {"rows", e.value.rows},
                          {"cols", e.value.cols},
                          {"values", e.value.data}});
    }
    doc["params"] = std::move(params);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
    out << doc.dump();
    out << '\n';
    if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("checkpoint: malformed JSON in " + path + ": " + e.what());
    }
    const int version = doc.at("format_version").get<int>();
    if (version != kFormatVersion)
        throw std::runtime_error("checkpoint: unsupported format_version " +
                                 std::to_string(version));
    Checkpoint ck;
    const auto& c = doc.at("config");
    ck.config.image_dim = c.at("image_dim").get<int>();
    ck.config.latent_dim = c.at("latent_dim").get<int>();
    ck.config.vocab_size = c.at("vocab_size").get<int>();
    ck.config.embed_dim = c.at("embed_dim").get<int>();
    ck.config.lstm_hidden = c.at("lstm_hidden").get<int>();
    ck.config.transformer_layers = c.at("transformer_layers").get<int>();
    ck.config.disc_hidden = c.at("disc_hidden").get<int>();
    ck.config.max_seq_len = c.at("max_seq_len").get<int>();
    for (const auto& p : doc.at("params")) {
        const int rows = p.at("rows").get<int>();
        const int cols = p.at("cols").get<int>();
        Array2 value(rows, cols, p.at("values").get<std::vector<double>>());
        ck.params.add(p.at("role").get<std::string>(), p.at("name").get<std::string>(),
                      std::move(value));
    }
    return ck;
}

}  // namespace sscap
