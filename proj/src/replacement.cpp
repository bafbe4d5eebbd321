#include "clr/replacement.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace clr {

GridSpec::Rect GridSpec::block_rect(int index, int h, int w) const {
    if (index < 0 || index >= block_count())
        throw std::invalid_argument("GridSpec: block index out of range");
    const int r = index / cols;
    const int c = index % cols;
    const int bh = h / rows;
    const int bw = w / cols;
    Rect rect;
    rect.y0 = r * bh;
    rect.y1 = (r == rows - 1) ? h : (r + 1) * bh;
    rect.x0 = c * bw;
    rect.x1 = (c == cols - 1) ? w : (c + 1) * bw;
    return rect;
}

namespace {

void validate_grid(const GridSpec& g, int max_blocks) {
    if (g.rows < 1 || g.cols < 1)
        throw std::invalid_argument("GridSpec: rows and cols must be positive");
    if (max_blocks < 0 || max_blocks > g.block_count())
        throw std::invalid_argument("ReplacementMethod: max_blocks must lie in [0, rows*cols]");
}

}  // namespace

void validate_method(const ReplacementMethod& method) {
    if (const auto* ba = std::get_if<BlockAugParams>(&method)) {
        validate_grid(ba->grid, ba->max_blocks);
    } else if (const auto* re = std::get_if<RandEraParams>(&method)) {
        if (!(re->area_lo > 0.0f && re->area_lo <= re->area_hi && re->area_hi < 1.0f))
            throw std::invalid_argument("RandEra: need 0 < area_lo <= area_hi < 1");
        if (!(re->aspect_lo > 0.0f && re->aspect_lo <= re->aspect_hi))
            throw std::invalid_argument("RandEra: need 0 < aspect_lo <= aspect_hi");
    } else if (const auto* bd = std::get_if<BlockDefParams>(&method)) {
        validate_grid(bd->grid, bd->max_blocks);
        if (!(bd->mix > 0.0f && bd->mix < 1.0f))
            throw std::invalid_argument("BlockDef: mix must lie in (0,1)");
    }
}

double area_cap(const ReplacementMethod& method) {
    if (const auto* ba = std::get_if<BlockAugParams>(&method))
        return static_cast<double>(ba->max_blocks) / ba->grid.block_count();
    if (const auto* re = std::get_if<RandEraParams>(&method))
        return static_cast<double>(re->area_hi);
    const auto& bd = std::get<BlockDefParams>(method);
    return static_cast<double>(bd.max_blocks) / bd.grid.block_count();
}

const char* method_name(const ReplacementMethod& method) {
    if (std::holds_alternative<BlockAugParams>(method)) return "blockaug";
    if (std::holds_alternative<RandEraParams>(method)) return "randera";
    return "blockdef";
}

double ReplacementOutcome::mask_fraction() const {
    if (mask.empty()) return 0.0;
    std::size_t on = 0;
    for (auto m : mask) on += m;
    return static_cast<double>(on) / static_cast<double>(mask.size());
}

std::vector<int> choose_blocks(const GridSpec& grid, int max_blocks, Rng& rng) {
    validate_grid(grid, max_blocks);
    if (max_blocks == 0) return {};
    const int count = 1 + rng.uniform_int(max_blocks);
    return rng.sample_without_replacement(grid.block_count(), count);
}

namespace {

void require_image_pair(const Tensor& target, const Tensor& source) {
    if (target.rank() != 3)
        throw std::invalid_argument("apply_replacement: images must be CxHxW");
    if (!target.same_shape(source))
        throw std::invalid_argument("apply_replacement: target " + target.shape_string() +
                                    " and source " + source.shape_string() + " differ in shape");
}

ReplacementOutcome replace_rect(const Tensor& target, const Tensor& source, int y0, int y1,
                                int x0, int x1, float mix, int source_id) {
    const int c = target.dim(0), h = target.dim(1), w = target.dim(2);
    ReplacementOutcome out;
    out.image = target;
    out.mask.assign(static_cast<std::size_t>(h) * w, 0);
    out.source_id = source_id;
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) out.mask[static_cast<std::size_t>(y) * w + x] = 1;
    for (int ch = 0; ch < c; ++ch)
        for (int y = y0; y < y1; ++y) {
            float* dst = out.image.data() + (static_cast<std::int64_t>(ch) * h + y) * w;
            const float* src = source.data() + (static_cast<std::int64_t>(ch) * h + y) * w;
            if (mix >= 1.0f) {
                for (int x = x0; x < x1; ++x) dst[x] = src[x];
            } else {
                for (int x = x0; x < x1; ++x) dst[x] = mix * src[x] + (1.0f - mix) * dst[x];
            }
        }
    out.changed = (y1 > y0) && (x1 > x0);
    return out;
}

}  // namespace

ReplacementOutcome apply_blocks(const Tensor& target, const Tensor& source, const GridSpec& grid,
                                const std::vector<int>& blocks, float mix, int source_id) {
    require_image_pair(target, source);
    const int c = target.dim(0), h = target.dim(1), w = target.dim(2);
    ReplacementOutcome out;
    out.image = target;
    out.mask.assign(static_cast<std::size_t>(h) * w, 0);
    out.source_id = source_id;
    for (int block : blocks) {
        const auto rect = grid.block_rect(block, h, w);
        for (int y = rect.y0; y < rect.y1; ++y)
            for (int x = rect.x0; x < rect.x1; ++x)
                out.mask[static_cast<std::size_t>(y) * w + x] = 1;
        for (int ch = 0; ch < c; ++ch)
            for (int y = rect.y0; y < rect.y1; ++y) {
                float* dst = out.image.data() + (static_cast<std::int64_t>(ch) * h + y) * w;
                const float* src = source.data() + (static_cast<std::int64_t>(ch) * h + y) * w;
                if (mix >= 1.0f) {
                    for (int x = rect.x0; x < rect.x1; ++x) dst[x] = src[x];
                } else {
                    for (int x = rect.x0; x < rect.x1; ++x)
                        dst[x] = mix * src[x] + (1.0f - mix) * dst[x];
                }
            }
        out.changed = true;
    }
    return out;
}

ReplacementOutcome apply_replacement(const Tensor& target, const Tensor& source, int source_id,
                                     const ReplacementMethod& method, Rng& rng) {
    require_image_pair(target, source);
    validate_method(method);
    if (const auto* ba = std::get_if<BlockAugParams>(&method)) {
        return apply_blocks(target, source, ba->grid, choose_blocks(ba->grid, ba->max_blocks, rng),
                            1.0f, source_id);
    }
    if (const auto* bd = std::get_if<BlockDefParams>(&method)) {
        return apply_blocks(target, source, bd->grid, choose_blocks(bd->grid, bd->max_blocks, rng),
                            bd->mix, source_id);
    }
    const auto& re = std::get<RandEraParams>(method);
    const int h = target.dim(1), w = target.dim(2);
    const double area =
        rng.uniform_range(re.area_lo, re.area_hi) * static_cast<double>(h) * w;
    const double aspect = rng.uniform_range(re.aspect_lo, re.aspect_hi);
    const int rh = std::clamp(static_cast<int>(std::floor(std::sqrt(area * aspect))), 1, h);
    const int rw = std::clamp(static_cast<int>(std::floor(std::sqrt(area / aspect))), 1, w);
    const int y0 = rng.uniform_int(h - rh + 1);
    const int x0 = rng.uniform_int(w - rw + 1);
    return replace_rect(target, source, y0, y0 + rh, x0, x0 + rw, 1.0f, source_id);
}

ReplacementOutcome synthesize_training_image(const ImageSample& target,
                                             const LabeledDataset& dataset,
                                             const ReplacementMethod& method, Rng& rng) {
    std::vector<int> same_class, other_class;
    for (int i = 0; i < dataset.size(); ++i) {
        const auto& s = dataset.sample(i);
        if (s.id == target.id) continue;
        (s.label == target.label ? same_class : other_class).push_back(i);
    }
    if (other_class.empty())
        throw std::invalid_argument(
            "synthesize_training_image: dataset has no sample outside the target's class");

    const bool want_same = rng.uniform() < 0.5;
    const std::vector<int>* pool = want_same ? &same_class : &other_class;
    if (want_same && same_class.empty()) {
        std::fprintf(stderr,
                     "[clr] class %d has a single sample; falling back to an other-class donor\n",
                     target.label);
        pool = &other_class;
    }
    const auto& donor =
        dataset.sample((*pool)[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(pool->size())))]);
    return apply_replacement(target.pixels, donor.pixels, donor.id, method, rng);
}

}  // namespace clr
