#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "clr/dataset.hpp"
#include "clr/rng.hpp"
#include "clr/tensor.hpp"

namespace clr {

/// Even rows x cols pixel tiling; remainder pixels go to the last row/column
/// of blocks. Block indices are row-major.
struct GridSpec {
    int rows = 3;
    int cols = 3;

    int block_count() const { return rows * cols; }

    struct Rect {
        int y0, y1, x0, x1;  // half-open
    };
    Rect block_rect(int index, int h, int w) const;
};

/// Overwrite whole grid blocks with the donor's same-position blocks.
struct BlockAugParams {
    GridSpec grid;
    int max_blocks = 4;
};

/// Overwrite one random rectangle (area fraction ~ U(area), aspect ~
/// U(aspect)) with the donor's same-position rectangle.
struct RandEraParams {
    float area_lo = 0.1f;
    float area_hi = 0.3f;
    float aspect_lo = 0.3f;
    float aspect_hi = 3.3f;
};

/// Linearly mix grid blocks: mix*donor + (1-mix)*target.
struct BlockDefParams {
    GridSpec grid;
    int max_blocks = 4;
    float mix = 0.5f;
};

using ReplacementMethod = std::variant<BlockAugParams, RandEraParams, BlockDefParams>;

void validate_method(const ReplacementMethod& method);

/// Maximum fraction of the image a single application may touch
/// (max_blocks/(rows*cols) for block methods, area_hi for RandEra).
double area_cap(const ReplacementMethod& method);

const char* method_name(const ReplacementMethod& method);

struct ReplacementOutcome {
    Tensor image;                    // synthesized pixels
    std::vector<std::uint8_t> mask;  // H*W, 1 where the region was replaced
    int source_id = -1;
    bool changed = false;  // any pixel inside the mask

    double mask_fraction() const;
};

/// Block count ~ U{1..max_blocks} (empty when max_blocks is 0), positions
/// uniform without replacement over the grid.
std::vector<int> choose_blocks(const GridSpec& grid, int max_blocks, Rng& rng);

/// Applies the given blocks directly (mix = 1 overwrites, mix in (0,1)
/// blends). Exposed for tests and for the dump-aug audit tool.
ReplacementOutcome apply_blocks(const Tensor& target, const Tensor& source,
                                const GridSpec& grid, const std::vector<int>& blocks, float mix,
                                int source_id);

ReplacementOutcome apply_replacement(const Tensor& target, const Tensor& source, int source_id,
                                     const ReplacementMethod& method, Rng& rng);

/// Training-stage synthesis: donor drawn with probability 0.5 from the
/// target's class (excluding the target itself) and 0.5 from the other
/// classes, then locally replaced. The outcome keeps the target's label.
ReplacementOutcome synthesize_training_image(const ImageSample& target,
                                             const LabeledDataset& dataset,
                                             const ReplacementMethod& method, Rng& rng);

}  // namespace clr
