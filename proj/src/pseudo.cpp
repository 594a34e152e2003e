#include "sscap/pseudo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace sscap {

namespace {

void check_source_kind(char kind, const char* where) {
    if (kind != 'x' && kind != 'y')
        throw std::invalid_argument(std::string(where) + ": source kind must be 'x' or 'y'");
}

}  // namespace

CandidatePool sample_pool(const std::vector<Sample>& source, char source_kind, double fraction,
                          const ParamStore& ps, const ModelConfig& cfg, Rng& rng) {
    check_source_kind(source_kind, "sample_pool");
    if (source.empty()) throw std::invalid_argument("sample_pool: source set is empty");
    if (!(fraction > 0.0) || fraction > 1.0)
        throw std::invalid_argument("sample_pool: fraction must be in (0, 1]");

    const int n = static_cast<int>(source.size());
    const int size = std::max(1, static_cast<int>(std::lround(fraction * n)));

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    order.resize(size);
    std::sort(order.begin(), order.end());

    CandidatePool pool;
    pool.source = source_kind;
    pool.fraction = fraction;
    pool.sample_ids.reserve(order.size());
    for (int row : order) pool.sample_ids.push_back(source[static_cast<size_t>(row)].id);

    if (source_kind == 'x') {
        pool.latents = encode_images_fwd(ps, cfg, image_matrix(source, order));
    } else {
        pool.latents = encode_captions_fwd(ps, cfg, caption_list(source, order));
    }
    return pool;
}

int pick_best(const std::vector<double>& scores, const std::vector<int>& sample_ids) {
    if (scores.empty()) throw std::invalid_argument("pick_best: empty score list");
    if (scores.size() != sample_ids.size())
        throw std::invalid_argument("pick_best: scores and ids differ in length");
    size_t best = 0;
    for (size_t i = 1; i < scores.size(); ++i) {
        if (scores[i] > scores[best] ||
            (scores[i] == scores[best] && sample_ids[i] < sample_ids[best]))
            best = i;
    }
    return static_cast<int>(best);
}

std::vector<PseudoPair> assign_pseudo_batch(const Array2& anchor_latents,
                                            const std::vector<int>& anchor_ids, char direction,
                                            const CandidatePool& pool, const ParamStore& ps,
                                            const ModelConfig& cfg) {
    check_source_kind(direction, "assign_pseudo_batch");
    if (anchor_latents.rows != static_cast<int>(anchor_ids.size()))
        throw std::invalid_argument("assign_pseudo_batch: one id per anchor row required");
    if (pool.sample_ids.empty()) throw std::invalid_argument("assign_pseudo_batch: empty pool");
    const char wanted_pool = direction == 'x' ? 'y' : 'x';
    if (pool.source != wanted_pool)
        throw std::invalid_argument(std::string("assign_pseudo_batch: direction '") + direction +
                                    "' needs a pool of kind '" + wanted_pool + "'");

    const Array2 scores =
        discriminate_all_pairs_fwd(ps, cfg, anchor_latents, pool.latents, direction == 'x');

    std::vector<PseudoPair> out;
    out.reserve(anchor_ids.size());
    std::vector<double> row(static_cast<size_t>(scores.cols));
    for (int i = 0; i < scores.rows; ++i) {
        const double* src = scores.row(i);
        std::copy(src, src + scores.cols, row.begin());
        const int best = pick_best(row, pool.sample_ids);
        PseudoPair p;
        p.anchor_id = anchor_ids[static_cast<size_t>(i)];
        p.retrieved_id = pool.sample_ids[static_cast<size_t>(best)];
        p.direction = direction;
        p.alpha = row[static_cast<size_t>(best)];
        out.push_back(p);
    }
    return out;
}

PseudoPair assign_pseudo_caption(const Sample& image_anchor, const CandidatePool& pool,
                                 const ParamStore& ps, const ModelConfig& cfg) {
    if (image_anchor.image.empty())
        throw std::invalid_argument("assign_pseudo_caption: anchor " +
                                    std::to_string(image_anchor.id) + " has no image");
    Array2 img(1, static_cast<int>(image_anchor.image.size()), image_anchor.image);
    const Array2 z = encode_images_fwd(ps, cfg, img);
    return assign_pseudo_batch(z, {image_anchor.id}, 'x', pool, ps, cfg)[0];
}

PseudoPair assign_pseudo_image(const Sample& caption_anchor, const CandidatePool& pool,
                               const ParamStore& ps, const ModelConfig& cfg) {
    if (caption_anchor.caption.empty())
        throw std::invalid_argument("assign_pseudo_image: anchor " +
                                    std::to_string(caption_anchor.id) + " has no caption");
    const Array2 z = encode_captions_fwd(ps, cfg, {caption_anchor.caption});
    return assign_pseudo_batch(z, {caption_anchor.id}, 'y', pool, ps, cfg)[0];
}

std::string assignment_jsonl(long iteration, const PseudoPair& pair) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "{\"iteration\":%ld,\"direction\":\"%s\",\"anchor_id\":%d,"
                  "\"retrieved_id\":%d,\"alpha\":%.17g}",
                  iteration, pair.direction == 'x' ? "image_to_caption" : "caption_to_image",
                  pair.anchor_id, pair.retrieved_id, pair.alpha);
    return std::string(buf);
}

}  // namespace sscap
