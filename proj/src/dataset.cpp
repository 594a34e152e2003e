#include "sscap/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include "json.hpp"
#include "sscap/rng.hpp"

namespace sscap {

namespace {

constexpr int kDatasetFormatVersion = 1;

double binomial(int n, int k) {
    double out = 1.0;
    for (int i = 1; i <= k; ++i) out *= static_cast<double>(n - k + i) / i;
    return out;
}

[[noreturn]] void line_error(const std::string& path, size_t line, const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

void GenConfig::validate() const {
    if (num_concepts < 1 || attributes_per_concept < 1 || attribute_vocab < 1 ||
        samples_per_concept < 1 || image_dim < 1)
        throw std::invalid_argument("generator config: counts must be positive");
    if (noise_sigma < 0) throw std::invalid_argument("generator config: noise_sigma must be >= 0");
    if (attributes_per_concept > attribute_vocab)
        throw std::invalid_argument("generator config: attributes_per_concept exceeds the "
                                    "attribute vocabulary");
    if (static_cast<double>(num_concepts) > binomial(attribute_vocab, attributes_per_concept))
        throw std::invalid_argument("generator config: num_concepts exceeds the number of "
                                    "distinct attribute subsets");
}

Dataset generate(const GenConfig& cfg) {
    cfg.validate();
    Rng root = make_rng(cfg.seed);
    Rng attr_rng = root.derive(0x617474ULL);
    Rng concept_rng = root.derive(0x636f6eULL);
    Rng sample_rng = root.derive(0x73616dULL);

    // One embedding row per attribute token, drawn once.
    Array2 attr_embed(cfg.attribute_vocab, cfg.image_dim);
    for (double& v : attr_embed.data) v = attr_rng.normal();

    // Concepts are distinct attribute subsets, found by rejection.
    std::set<std::vector<int>> seen;
    std::vector<std::vector<int>> concepts;
    std::vector<int> all_attrs(static_cast<size_t>(cfg.attribute_vocab));
    for (int a = 0; a < cfg.attribute_vocab; ++a) all_attrs[static_cast<size_t>(a)] = a;
    while (static_cast<int>(concepts.size()) < cfg.num_concepts) {
        std::vector<int> pool = all_attrs;
        concept_rng.shuffle(pool);
        std::vector<int> subset(pool.begin(), pool.begin() + cfg.attributes_per_concept);
        std::sort(subset.begin(), subset.end());
        if (seen.insert(subset).second) concepts.push_back(std::move(subset));
    }

    Dataset data;
    data.image_dim = cfg.image_dim;
    data.vocab_size = cfg.vocab_size();
    data.has_concepts = true;
    data.samples.reserve(static_cast<size_t>(cfg.num_concepts) * cfg.samples_per_concept);
    const double inv_m = 1.0 / cfg.attributes_per_concept;
    int id = 0;
    for (int c = 0; c < cfg.num_concepts; ++c) {
        // Concept prototype: mean of its attribute embedding rows.
        std::vector<double> proto(static_cast<size_t>(cfg.image_dim), 0.0);
        for (int a : concepts[static_cast<size_t>(c)])
            for (int d = 0; d < cfg.image_dim; ++d)
                proto[static_cast<size_t>(d)] += attr_embed.at(a, d) * inv_m;
        for (int s = 0; s < cfg.samples_per_concept; ++s) {
            Sample smp;
            smp.id = id++;
            smp.concept_id = c;
            smp.image.resize(static_cast<size_t>(cfg.image_dim));
            for (int d = 0; d < cfg.image_dim; ++d)
                smp.image[static_cast<size_t>(d)] =
                    proto[static_cast<size_t>(d)] + sample_rng.normal(0.0, cfg.noise_sigma);
            std::vector<int> order = concepts[static_cast<size_t>(c)];
            sample_rng.shuffle(order);
            smp.caption.push_back(BOS);
            for (int a : order) smp.caption.push_back(ATTR_BASE + a);
            smp.caption.push_back(EOS);
            data.samples.push_back(std::move(smp));
        }
    }
    return data;
}

SplitBundle split_scarcely_paired(const Dataset& data, double paired_fraction,
                                  double test_fraction, std::uint64_t seed) {
    if (paired_fraction <= 0.0 || paired_fraction >= 1.0)
        throw std::invalid_argument("split: paired_fraction must be in (0,1)");
    if (test_fraction <= 0.0 || paired_fraction + test_fraction >= 1.0)
        throw std::invalid_argument("split: fractions must be positive and sum below 1");
    const int n = static_cast<int>(data.samples.size());
    if (n == 0) throw std::invalid_argument("split: empty dataset");

    std::vector<int> order(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
    Rng rng = make_rng(seed).derive(0x73706c6974ULL);
    rng.shuffle(order);

    const int n_test = static_cast<int>(std::lround(test_fraction * n));
    const int train_size = n - n_test;
    const int n_paired = static_cast<int>(std::lround(paired_fraction * train_size));
    if (n_paired < 1)
        throw std::invalid_argument("split: paired set rounds to zero samples; use a larger "
                                    "dataset or paired_fraction");

    SplitBundle out;
    out.image_dim = data.image_dim;
    out.vocab_size = data.vocab_size;
    out.has_concepts = data.has_concepts;
    for (int i = 0; i < n_test; ++i)
        out.test.push_back(data.samples[static_cast<size_t>(order[static_cast<size_t>(i)])]);
    for (int i = n_test; i < n_test + n_paired; ++i)
        out.paired.push_back(data.samples[static_cast<size_t>(order[static_cast<size_t>(i)])]);

    // Remainder: half keeps only images, half only captions. The halves are
    // formed inside each concept so that cross-modal counterparts survive on
    // both sides of the gap.
    std::map<int, std::vector<int>> by_concept;
    for (int i = n_test + n_paired; i < n; ++i) {
        const int idx = order[static_cast<size_t>(i)];
        const int key = data.has_concepts ? data.samples[static_cast<size_t>(idx)].concept_id : 0;
        by_concept[key].push_back(idx);
    }
    for (const auto& [concept_id, members] : by_concept) {
        const int half = static_cast<int>(members.size()) / 2;
        // An odd leftover alternates sides by concept id to stay balanced.
        const int x_count = static_cast<int>(members.size()) % 2 == 0
                                ? half
                                : half + (concept_id % 2 == 0 ? 1 : 0);
        for (size_t k = 0; k < members.size(); ++k) {
            Sample s = data.samples[static_cast<size_t>(members[k])];
            if (static_cast<int>(k) < x_count) {
                s.caption.clear();
                out.unpaired_images.push_back(std::move(s));
            } else {
                s.image.clear();
                out.unpaired_captions.push_back(std::move(s));
            }
        }
    }

    if (data.has_concepts) {
        // Ground-truth recoverability: every unpaired sample must have a
        // same-concept counterpart across the gap, provided each concept kept
        // at least two remainder members.
        bool guaranteed = true;
        for (const auto& [concept_id, members] : by_concept)
            if (members.size() < 2) guaranteed = false;
        if (guaranteed) {
            std::set<int> x_concepts, y_concepts;
            for (const auto& s : out.unpaired_images) x_concepts.insert(s.concept_id);
            for (const auto& s : out.unpaired_captions) y_concepts.insert(s.concept_id);
            if (x_concepts != y_concepts)
                throw std::logic_error("split: unpaired halves lost a concept; the half/half "
                                       "construction is broken");
        }
    }
    return out;
}

void save_dataset(const std::string& path, const Dataset& data) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("dataset: cannot open " + path + " for writing");
    nlohmann::json header = {{"format_version", kDatasetFormatVersion},
                             {"image_dim", data.image_dim},
                             {"vocab_size", data.vocab_size}};
    out << header.dump() << '\n';
    for (const auto& s : data.samples) {
        nlohmann::json rec = {{"id", s.id}, {"features", s.image}, {"tokens", s.caption}};
        if (s.concept_id >= 0) rec["concept_id"] = s.concept_id;
        out << rec.dump() << '\n';
    }
    if (!out) throw std::runtime_error("dataset: write failed for " + path);
}

Dataset load_external(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("dataset: cannot open " + path);
    std::string line;
    size_t line_no = 0;

    if (!std::getline(in, line)) throw std::runtime_error("dataset: " + path + " is empty");
    ++line_no;
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        line_error(path, line_no, std::string("malformed JSON header: ") + e.what());
    }
    if (!header.contains("format_version") || !header.at("format_version").is_number_integer())
        line_error(path, line_no, "header missing integer format_version");
    if (header.at("format_version").get<int>() != kDatasetFormatVersion)
        line_error(path, line_no,
                   "unsupported format_version " + header.at("format_version").dump());

    Dataset data;
    data.image_dim = header.at("image_dim").get<int>();
    data.vocab_size = header.at("vocab_size").get<int>();
    if (data.image_dim < 1 || data.vocab_size < ATTR_BASE + 1)
        line_error(path, line_no, "header has invalid image_dim or vocab_size");

    bool all_have_concepts = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            line_error(path, line_no, std::string("malformed JSON: ") + e.what());
        }
        if (!rec.contains("id")) line_error(path, line_no, "record missing 'id'");
        if (!rec.contains("features")) line_error(path, line_no, "record missing 'features'");
        if (!rec.contains("tokens")) line_error(path, line_no, "record missing 'tokens'");
        Sample s;
        s.id = rec.at("id").get<int>();
        s.image = rec.at("features").get<std::vector<double>>();
        if (static_cast<int>(s.image.size()) != data.image_dim)
            line_error(path, line_no,
                       "features length " + std::to_string(s.image.size()) +
                           " does not match image_dim " + std::to_string(data.image_dim));
        s.caption = rec.at("tokens").get<TokenSeq>();
        for (int tok : s.caption)
            if (tok < 0 || tok >= data.vocab_size)
                line_error(path, line_no,
                           "token id " + std::to_string(tok) + " outside declared vocab " +
                               std::to_string(data.vocab_size));
        if (rec.contains("concept_id"))
            s.concept_id = rec.at("concept_id").get<int>();
        else
            all_have_concepts = false;
        data.samples.push_back(std::move(s));
    }
    data.has_concepts = all_have_concepts && !data.samples.empty();
    return data;
}

Array2 image_matrix(const std::vector<Sample>& samples, const std::vector<int>& rows) {
    if (rows.empty()) throw std::invalid_argument("image_matrix: empty selection");
    const size_t dim = samples[static_cast<size_t>(rows[0])].image.size();
    Array2 out(static_cast<int>(rows.size()), static_cast<int>(dim));
    for (size_t r = 0; r < rows.size(); ++r) {
        const auto& img = samples[static_cast<size_t>(rows[r])].image;
        if (img.empty() || img.size() != dim)
            throw std::invalid_argument("image_matrix: sample " +
                                        std::to_string(samples[static_cast<size_t>(rows[r])].id) +
                                        " has no image or a mismatched width");
        std::copy(img.begin(), img.end(), out.row(static_cast<int>(r)));
    }
    return out;
}

std::vector<TokenSeq> caption_list(const std::vector<Sample>& samples,
                                   const std::vector<int>& rows) {
    std::vector<TokenSeq> out;
    out.reserve(rows.size());
    for (int r : rows) out.push_back(samples[static_cast<size_t>(r)].caption);
    return out;
}

}  // namespace sscap
