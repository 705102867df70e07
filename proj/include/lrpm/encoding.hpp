#pragma once

#include <span>
#include <string>
#include <vector>

#include "lrpm/core.hpp"

namespace lrpm {

enum class BlockKind { OneHot, Binary };

/// One group of the multihot vector. Entity blocks of grid slots are masked by
/// the slot's occupancy bit (`mask_index`); -1 means always active.
struct BlockDescriptor {
    std::string name;
    int offset = 0;
    int width = 0;
    BlockKind kind = BlockKind::OneHot;
    int mask_index = -1;
};

struct MultihotLayout {
    std::vector<BlockDescriptor> blocks;
    int dim = 0;
};

/// Single-slot components contribute one [type|size|color] block; grid
/// components contribute, per slot in row-major order, an occupancy bit
/// followed by that block. Outer components keep color frozen at index 0.
MultihotLayout multihot_layout(Configuration config);
int multihot_dim(Configuration config);

std::vector<double> encode(const Panel& panel, Configuration config);

/// Argmax per one-hot block (lowest index on ties); occupancy bits above 0.5
/// count as occupied. A grid component with no bit above threshold occupies
/// its highest-valued slot, so the result is always a valid panel.
Panel decode(std::span<const double> values, Configuration config);

}  // namespace lrpm
