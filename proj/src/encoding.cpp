#include "lrpm/encoding.hpp"

#include <algorithm>

#include "lrpm/errors.hpp"

namespace lrpm {

namespace {

void push_entity_blocks(MultihotLayout& layout, const std::string& prefix, int mask_index) {
    const std::array<std::pair<const char*, int>, 3> groups{
        {{"type", kTypeCount}, {"size", kSizeCount}, {"color", kColorCount}}};
    for (const auto& [name, width] : groups) {
        layout.blocks.push_back({prefix + "." + name, layout.dim, width, BlockKind::OneHot, mask_index});
        layout.dim += width;
    }
}

int argmax(std::span<const double> values) {
    return static_cast<int>(std::max_element(values.begin(), values.end()) - values.begin());
}

}  // namespace

MultihotLayout multihot_layout(Configuration config) {
    MultihotLayout layout;
    for (const auto& comp : components(config)) {
        const std::string base(comp.name);
        if (comp.profile != ComponentProfile::Grid) {
            push_entity_blocks(layout, base, -1);
            continue;
        }
        for (int s = 0; s < comp.slots; ++s) {
            const std::string prefix = base + "[" + std::to_string(s) + "]";
            const int bit = layout.dim;
            layout.blocks.push_back({prefix + ".occupied", bit, 1, BlockKind::Binary, -1});
            layout.dim += 1;
            push_entity_blocks(layout, prefix, bit);
        }
    }
    return layout;
}

int multihot_dim(Configuration config) {
    int dim = 0;
    for (const auto& comp : components(config)) {
        dim += comp.profile == ComponentProfile::Grid ? comp.slots * (1 + kEntityBlockWidth) : kEntityBlockWidth;
    }
    return dim;
}

std::vector<double> encode(const Panel& panel, Configuration config) {
    if (auto violations = validate_panel(panel, config); !violations.empty()) {
        throw InvalidPanel("cannot encode invalid panel: " + violations.front());
    }
    std::vector<double> out(static_cast<std::size_t>(multihot_dim(config)), 0.0);
    std::size_t offset = 0;
    auto put_entity = [&](const Entity& e) {
        out[offset + static_cast<std::size_t>(e.type)] = 1.0;
        out[offset + kTypeCount + static_cast<std::size_t>(e.size)] = 1.0;
        out[offset + kTypeCount + kSizeCount + static_cast<std::size_t>(e.color)] = 1.0;
        offset += kEntityBlockWidth;
    };
    const auto layouts = components(config);
    for (std::size_t c = 0; c < layouts.size(); ++c) {
        const auto& state = panel.components[c];
        if (layouts[c].profile != ComponentProfile::Grid) {
            put_entity(state.entities.at(0));
            continue;
        }
        for (int s = 0; s < layouts[c].slots; ++s) {
            auto it = state.entities.find(s);
            if (it == state.entities.end()) {
                offset += 1 + kEntityBlockWidth;
                continue;
            }
            out[offset] = 1.0;
            offset += 1;
            put_entity(it->second);
        }
    }
    return out;
}

Panel decode(std::span<const double> values, Configuration config) {
    if (static_cast<int>(values.size()) != multihot_dim(config)) {
        throw DimensionMismatch("decode expects " + std::to_string(multihot_dim(config)) + " values, got " +
                                std::to_string(values.size()));
    }
    Panel panel;
    std::size_t offset = 0;
    auto read_entity = [&](std::size_t at) {
        Entity e;
        e.type = argmax(values.subspan(at, kTypeCount));
        e.size = argmax(values.subspan(at + kTypeCount, kSizeCount));
        e.color = argmax(values.subspan(at + kTypeCount + kSizeCount, kColorCount));
        return e;
    };
    for (const auto& comp : components(config)) {
        ComponentState state;
        if (comp.profile != ComponentProfile::Grid) {
            Entity e = read_entity(offset);
            if (comp.profile == ComponentProfile::Outer) e.color = 0;
            state.occupancy.insert(0);
            state.entities[0] = e;
            offset += kEntityBlockWidth;
        } else {
            const std::size_t stride = 1 + kEntityBlockWidth;
            int best_slot = 0;
            for (int s = 0; s < comp.slots; ++s) {
                const std::size_t base = offset + static_cast<std::size_t>(s) * stride;
                if (values[base] > values[offset + static_cast<std::size_t>(best_slot) * stride]) best_slot = s;
                if (values[base] > 0.5) {
                    state.occupancy.insert(s);
                    state.entities[s] = read_entity(base + 1);
                }
            }
            if (state.occupancy.empty()) {
                state.occupancy.insert(best_slot);
                state.entities[best_slot] = read_entity(offset + static_cast<std::size_t>(best_slot) * stride + 1);
            }
            offset += static_cast<std::size_t>(comp.slots) * stride;
        }
        panel.components.push_back(std::move(state));
    }
    return panel;
}

}  // namespace lrpm
