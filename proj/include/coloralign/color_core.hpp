#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace coloralign {

// CIELAB coordinate; L in [0, 100], a (green-red) and b (blue-yellow) finite.
struct LabColor {
    double L = 0.0;
    double a = 0.0;
    double b = 0.0;

    bool operator==(const LabColor&) const = default;
};

bool is_valid(const LabColor& lab);

struct MunsellChip {
    int chip_id = 0;
    int hue_column = 0;  // 0 is the achromatic column, 1..40 chromatic
    char value_row = 'A';
    LabColor lab;
};

inline constexpr int kChartChipCount = 330;

// The 330-chip chart, indexed by chip id.
class ChipTable {
public:
    ChipTable() = default;
    // Throws IntegrityError unless chips hold ids 0..329 exactly once with
    // unique (hue_column, value_row) cells.
    explicit ChipTable(std::vector<MunsellChip> chips);

    const MunsellChip& chip(int chip_id) const;
    const std::vector<MunsellChip>& chips() const noexcept { return chips_; }
    std::size_t size() const noexcept { return chips_.size(); }

private:
    std::vector<MunsellChip> chips_;
};

// Whitespace-separated rows `chip_id value_row hue_column L a b`; `#` lines
// are comments.
ChipTable load_chip_table(const std::filesystem::path& path);
ChipTable parse_chip_table(const std::string& contents, const std::string& source = "<memory>");

struct CmcRatios {
    double lightness = 2.0;
    double chroma = 1.0;
};

// CMC(l:c) difference of `sample` relative to `reference`. Not symmetric.
double delta_e_cmc(const LabColor& reference, const LabColor& sample, double l_ratio = 2.0,
                   double c_ratio = 1.0);

// Mean of both CMC directions; a proper (symmetric) dissimilarity.
double symmetric_delta_e_cmc(const LabColor& x, const LabColor& y, CmcRatios ratios = {});

// exp(-c_scale * dist^2)
double similarity_kernel(double dist, double c_scale = 0.001);

struct Hsv {
    double hue = 0.0;         // degrees in [0, 360)
    double saturation = 0.0;  // [0, 1]
    double value = 0.0;       // [0, 1]
    bool achromatic = false;  // hue undefined; reported as 0
};

// Lab (illuminant C, 2 deg observer) -> XYZ -> Bradford C->D65 -> sRGB
// (clipped to [0,1]) -> HSV.
Hsv lab_to_hsv(const LabColor& lab);

// Linear-light sRGB (unclipped) for the same transform chain.
std::array<double, 3> lab_to_linear_srgb(const LabColor& lab);

enum class Temperature { Warm, Cool };

std::string to_string(Temperature t);

// Half-open hue interval [begin, end) in degrees.
struct HueRange {
    double begin = 0.0;
    double end = 0.0;
};

struct TemperatureConfig {
    std::vector<HueRange> warm_ranges{{315.0, 360.0}, {0.0, 90.0}};
    Temperature achromatic = Temperature::Cool;
};

Temperature classify_temperature(const LabColor& lab, const TemperatureConfig& config = {});

}  // namespace coloralign
