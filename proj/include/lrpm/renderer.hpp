#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "lrpm/core.hpp"

namespace lrpm {

inline constexpr int kDefaultRasterSize = 64;
inline constexpr std::uint8_t kBackground = 255;

/// Grayscale image, row-major, 0 = black and 255 = white.
struct Raster {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    Raster() = default;
    Raster(int w, int h, std::uint8_t fill = kBackground);

    std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
    bool operator==(const Raster&) const = default;
};

/// Fill grey of a color index: 230 - 25 * idx.
std::uint8_t color_intensity(int color_index);

/// Draws every component in its layout region: entities are filled regular
/// polygons (triangle, square, pentagon, hexagon) or circles centred in their
/// slot cell with a 1-pixel black outline, radius = half cell extent times
/// 0.4 + 0.1 * size. Outer components are drawn last as a 2-pixel outline
/// with radius scale 0.75 + 0.05 * size around the central inner region,
/// a square of half the panel side. Throws InvalidPanel for malformed panels.
Raster render_panel(const Panel& panel, Configuration config, int size = kDefaultRasterSize);

struct PixelRect {
    int x = 0;
    int y = 0;
    int width = 0;
    int height = 0;
};

/// Placement of the 8 context panels, the question cell and the 8 options on a sheet.
struct SheetGeometry {
    int width = 0;
    int height = 0;
    std::array<PixelRect, kContextPanels> context;
    PixelRect question;
    std::array<PixelRect, kOptionCount> options;
};

SheetGeometry sheet_geometry(int panel_size);

/// 3x3 matrix with a '?' in the missing cell above a 2x4 strip of options.
Raster render_problem_sheet(const Problem& problem, int panel_size = kDefaultRasterSize);

/// Binary PGM: "P5\n<width> <height>\n255\n" followed by width*height bytes.
std::string to_pgm(const Raster& raster);
Raster parse_pgm(std::string_view bytes);
void write_pgm(const std::filesystem::path& path, const Raster& raster);
Raster read_pgm(const std::filesystem::path& path);

}  // namespace lrpm
