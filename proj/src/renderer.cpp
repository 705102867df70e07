#include "lrpm/renderer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>

#include "lrpm/errors.hpp"
#include "lrpm/files.hpp"

namespace lrpm {

namespace {

struct Region {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;
};

// Signed distance-like inside measure of a regular shape: >= 0 inside, and
// the value is the distance to the nearest edge.
struct Shape {
    double cx = 0.0;
    double cy = 0.0;
    double radius = 0.0;
    int sides = 0;  // 0 for a circle

    double inradius() const { return sides == 0 ? radius : radius * std::cos(std::numbers::pi / sides); }

    double depth(double px, double py) const {
        const double dx = px - cx;
        const double dy = py - cy;
        if (sides == 0) return radius - std::hypot(dx, dy);
        const double step = 2.0 * std::numbers::pi / sides;
        const double start = -std::numbers::pi / 2.0;  // first vertex points up
        const double apothem = radius * std::cos(std::numbers::pi / sides);
        double reach = -1e300;
        for (int k = 0; k < sides; ++k) {
            const double normal = start + step * k + std::numbers::pi / sides;
            reach = std::max(reach, dx * std::cos(normal) + dy * std::sin(normal));
        }
        return apothem - reach;
    }
};

int sides_of(int type) { return type == 4 ? 0 : type + 3; }

// Outer shapes span 0.75..1.0 of the panel half-extent so they surround the inner region.
double outer_scale(int size_index) { return 0.75 + 0.05 * size_index; }

std::vector<Region> component_regions(Configuration config, int size) {
    const double s = size;
    switch (config) {
        case Configuration::Center:
        case Configuration::Grid2x2:
        case Configuration::Grid3x3: return {{0, 0, s, s}};
        case Configuration::LeftRight: return {{0, 0, s / 2, s}, {s / 2, 0, s / 2, s}};
        case Configuration::UpDown: return {{0, 0, s, s / 2}, {0, s / 2, s, s / 2}};
        case Configuration::OutInCenter:
        case Configuration::OutInGrid: return {{0, 0, s, s}, {s / 4, s / 4, s / 2, s / 2}};
    }
    return {};
}

// Draws pixels whose centres lie inside the shape. Pixels closer than
// `outline` to the edge get `edge`; the rest get `fill` unless `fill` < 0.
void draw(Raster& r, const Shape& shape, int fill, double outline, std::uint8_t edge) {
    const int x0 = std::max(0, static_cast<int>(std::floor(shape.cx - shape.radius)) - 1);
    const int x1 = std::min(r.width - 1, static_cast<int>(std::ceil(shape.cx + shape.radius)) + 1);
    const int y0 = std::max(0, static_cast<int>(std::floor(shape.cy - shape.radius)) - 1);
    const int y1 = std::min(r.height - 1, static_cast<int>(std::ceil(shape.cy + shape.radius)) + 1);
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            const double d = shape.depth(x + 0.5, y + 0.5);
            if (d < 0.0) continue;
            if (d < outline) {
                r.at(x, y) = edge;
            } else if (fill >= 0) {
                r.at(x, y) = static_cast<std::uint8_t>(fill);
            }
        }
    }
}

void blit(Raster& dst, const Raster& src, int x, int y) {
    for (int row = 0; row < src.height; ++row) {
        std::copy_n(src.pixels.begin() + static_cast<std::ptrdiff_t>(row) * src.width, src.width,
                    dst.pixels.begin() + static_cast<std::ptrdiff_t>(y + row) * dst.width + x);
    }
}

void frame(Raster& dst, const PixelRect& rect, std::uint8_t grey) {
    for (int x = rect.x - 1; x <= rect.x + rect.width; ++x) {
        dst.at(x, rect.y - 1) = grey;
        dst.at(x, rect.y + rect.height) = grey;
    }
    for (int y = rect.y - 1; y <= rect.y + rect.height; ++y) {
        dst.at(rect.x - 1, y) = grey;
        dst.at(rect.x + rect.width, y) = grey;
    }
}

// 5x7 bitmap of '?'.
constexpr std::array<std::uint8_t, 7> kQuestionGlyph{0b01110, 0b10001, 0b00001, 0b00010, 0b00100, 0b00000, 0b00100};

void question_mark(Raster& dst, const PixelRect& rect) {
    const int scale = std::max(1, std::min(rect.width / 8, rect.height / 10));
    const int ox = rect.x + (rect.width - 5 * scale) / 2;
    const int oy = rect.y + (rect.height - 7 * scale) / 2;
    for (int gy = 0; gy < 7; ++gy) {
        for (int gx = 0; gx < 5; ++gx) {
            if (((kQuestionGlyph[gy] >> (4 - gx)) & 1) == 0) continue;
            for (int dy = 0; dy < scale; ++dy) {
                for (int dx = 0; dx < scale; ++dx) dst.at(ox + gx * scale + dx, oy + gy * scale + dy) = 0;
            }
        }
    }
}

}  // namespace

Raster::Raster(int w, int h, std::uint8_t fill)
    : width(w), height(h), pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

std::uint8_t color_intensity(int color_index) { return static_cast<std::uint8_t>(230 - 25 * color_index); }

Raster render_panel(const Panel& panel, Configuration config, int size) {
    if (size < 16) throw UsageError("raster size must be at least 16");
    const auto problems = validate_panel(panel, config, true);
    if (!problems.empty()) throw InvalidPanel("cannot render invalid panel: " + problems.front());
    Raster raster(size, size);
    const auto regions = component_regions(config, size);
    // Outer outlines go last so that a large inner entity never hides them.
    for (bool outer_pass : {false, true}) {
        for (int c = 0; c < component_count(config); ++c) {
            const auto& layout = component_layout(config, c);
            const bool outer = layout.profile == ComponentProfile::Outer;
            if (outer != outer_pass) continue;
            const Region& region = regions[static_cast<std::size_t>(c)];
            const double cell_w = region.w / layout.grid_side;
            const double cell_h = region.h / layout.grid_side;
            const double half = std::min(cell_w, cell_h) / 2.0;
            for (const auto& [slot, entity] : panel.components[static_cast<std::size_t>(c)].entities) {
                Shape shape;
                shape.cx = region.x + cell_w * (slot % layout.grid_side + 0.5);
                shape.cy = region.y + cell_h * (slot / layout.grid_side + 0.5);
                shape.radius = half * (outer ? outer_scale(entity.size) : size_scale(entity.size));
                shape.sides = sides_of(entity.type);
                if (outer) {
                    draw(raster, shape, -1, 2.0, 0);
                } else {
                    // Tiny shapes keep a thinner outline so their fill stays visible.
                    draw(raster, shape, color_intensity(entity.color), std::min(1.0, shape.inradius() / 4.0), 0);
                }
            }
        }
    }
    return raster;
}

SheetGeometry sheet_geometry(int panel_size) {
    const int gap = std::max(2, panel_size / 8);
    SheetGeometry g;
    g.width = 4 * panel_size + 5 * gap;
    const int matrix_x = (g.width - (3 * panel_size + 2 * gap)) / 2;
    for (int i = 0; i < 9; ++i) {
        const PixelRect rect{matrix_x + (i % 3) * (panel_size + gap), gap + (i / 3) * (panel_size + gap), panel_size,
                             panel_size};
        if (i < kContextPanels) {
            g.context[static_cast<std::size_t>(i)] = rect;
        } else {
            g.question = rect;
        }
    }
    const int strip_y = gap + 3 * (panel_size + gap) + gap;
    for (int k = 0; k < kOptionCount; ++k) {
        g.options[static_cast<std::size_t>(k)] = {gap + (k % 4) * (panel_size + gap),
                                                  strip_y + (k / 4) * (panel_size + gap), panel_size, panel_size};
    }
    g.height = strip_y + 2 * (panel_size + gap);
    return g;
}

Raster render_problem_sheet(const Problem& problem, int panel_size) {
    const SheetGeometry g = sheet_geometry(panel_size);
    Raster sheet(g.width, g.height);
    for (int i = 0; i < kContextPanels; ++i) {
        const auto& rect = g.context[static_cast<std::size_t>(i)];
        blit(sheet, render_panel(problem.context[static_cast<std::size_t>(i)], problem.config, panel_size), rect.x,
             rect.y);
        frame(sheet, rect, 128);
    }
    question_mark(sheet, g.question);
    frame(sheet, g.question, 128);
    for (int k = 0; k < kOptionCount; ++k) {
        const auto& rect = g.options[static_cast<std::size_t>(k)];
        blit(sheet, render_panel(problem.options[static_cast<std::size_t>(k)], problem.config, panel_size), rect.x,
             rect.y);
        frame(sheet, rect, 128);
    }
    return sheet;
}

std::string to_pgm(const Raster& raster) {
    std::string out = "P5\n" + std::to_string(raster.width) + " " + std::to_string(raster.height) + "\n255\n";
    out.append(raster.pixels.begin(), raster.pixels.end());
    return out;
}

Raster parse_pgm(std::string_view bytes) {
    std::size_t at = 0;
    auto skip_space = [&] {
        while (at < bytes.size()) {
            if (bytes[at] == '#') {
                while (at < bytes.size() && bytes[at] != '\n') ++at;
            } else if (std::isspace(static_cast<unsigned char>(bytes[at])) != 0) {
                ++at;
            } else {
                break;
            }
        }
    };
    auto number = [&] {
        skip_space();
        int value = 0;
        const auto [end, ec] = std::from_chars(bytes.data() + at, bytes.data() + bytes.size(), value);
        if (ec != std::errc{}) throw FormatError("malformed PGM header");
        at = static_cast<std::size_t>(end - bytes.data());
        return value;
    };
    if (bytes.substr(0, 2) != "P5") throw FormatError("not a binary PGM (P5) image");
    at = 2;
    const int w = number();
    const int h = number();
    const int maxval = number();
    if (w <= 0 || h <= 0 || maxval != 255) throw FormatError("unsupported PGM geometry or depth");
    ++at;  // single whitespace before the raster
    const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    if (bytes.size() - std::min(at, bytes.size()) != n) throw FormatError("PGM pixel data has the wrong length");
    Raster r(w, h);
    std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(at), n, r.pixels.begin());
    return r;
}

void write_pgm(const std::filesystem::path& path, const Raster& raster) { write_file_atomic(path, to_pgm(raster)); }

Raster read_pgm(const std::filesystem::path& path) { return parse_pgm(read_file(path)); }

}  // namespace lrpm
