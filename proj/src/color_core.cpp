#include "coloralign/color_core.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "coloralign/error.hpp"
#include "coloralign/text_io.hpp"

namespace coloralign {

namespace {

constexpr double kDegPerRad = 180.0 / std::numbers::pi;

// Below this HSV saturation a colour is treated as achromatic.
constexpr double kAchromaticSaturation = 1e-2;

// CIE 1931 2-degree white points, Y = 1.
const Eigen::Vector3d kWhiteC{0.98074, 1.0, 1.18232};
const Eigen::Vector3d kWhiteD65{0.95047, 1.0, 1.08883};

Eigen::Matrix3d bradford_adaptation(const Eigen::Vector3d& source, const Eigen::Vector3d& target) {
    Eigen::Matrix3d bradford;
    bradford << 0.8951, 0.2664, -0.1614,
               -0.7502, 1.7135, 0.0367,
                0.0389, -0.0685, 1.0296;
    const Eigen::Vector3d cone_src = bradford * source;
    const Eigen::Vector3d cone_dst = bradford * target;
    const Eigen::Matrix3d gain = (cone_dst.array() / cone_src.array()).matrix().asDiagonal();
    return bradford.inverse() * gain * bradford;
}

const Eigen::Matrix3d& c_to_d65() {
    static const Eigen::Matrix3d m = bradford_adaptation(kWhiteC, kWhiteD65);
    return m;
}

const Eigen::Matrix3d& xyz_to_srgb() {
    static const Eigen::Matrix3d m = [] {
        Eigen::Matrix3d r;
        r << 3.2404542, -1.5371385, -0.4985314,
            -0.9692660, 1.8760108, 0.0415560,
             0.0556434, -0.2040259, 1.0572252;
        return r;
    }();
    return m;
}

double lab_f_inverse(double t) {
    constexpr double delta = 6.0 / 29.0;
    return t > delta ? t * t * t : 3.0 * delta * delta * (t - 4.0 / 29.0);
}

double srgb_gamma(double linear) {
    return linear <= 0.0031308 ? 12.92 * linear : 1.055 * std::pow(linear, 1.0 / 2.4) - 0.055;
}

double hue_degrees(double a, double b) {
    double h = std::atan2(b, a) * kDegPerRad;
    if (h < 0.0) h += 360.0;
    return h;
}

}  // namespace

bool is_valid(const LabColor& lab) {
    return std::isfinite(lab.L) && std::isfinite(lab.a) && std::isfinite(lab.b) && lab.L >= 0.0 &&
           lab.L <= 100.0;
}

ChipTable::ChipTable(std::vector<MunsellChip> chips) : chips_(std::move(chips)) {
    if (chips_.size() != static_cast<std::size_t>(kChartChipCount)) {
        throw IntegrityError("chip table holds " + std::to_string(chips_.size()) + " chips, expected " +
                             std::to_string(kChartChipCount));
    }
    std::sort(chips_.begin(), chips_.end(),
              [](const MunsellChip& x, const MunsellChip& y) { return x.chip_id < y.chip_id; });
    std::set<std::pair<int, char>> cells;
    for (int i = 0; i < kChartChipCount; ++i) {
        const auto& c = chips_[static_cast<std::size_t>(i)];
        if (c.chip_id != i) {
            throw IntegrityError("chip table: chip id " + std::to_string(i) + " missing or duplicated");
        }
        if (!cells.emplace(c.hue_column, c.value_row).second) {
            throw IntegrityError("chip table: duplicate cell (hue " + std::to_string(c.hue_column) +
                                 ", row " + std::string(1, c.value_row) + ")");
        }
    }
}

const MunsellChip& ChipTable::chip(int chip_id) const {
    if (chip_id < 0 || static_cast<std::size_t>(chip_id) >= chips_.size()) {
        throw NotFoundError("unknown chip id " + std::to_string(chip_id));
    }
    return chips_[static_cast<std::size_t>(chip_id)];
}

ChipTable parse_chip_table(const std::string& contents, const std::string& source) {
    std::vector<MunsellChip> chips;
    std::istringstream in(contents);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = text::trim(line);
        if (body.empty() || body.front() == '#') continue;
        const auto fields = text::split_whitespace(body);
        if (fields.size() != 6) {
            throw ParseError(source, line_no, "expected 6 columns, found " + std::to_string(fields.size()));
        }
        MunsellChip chip;
        const auto id = text::parse_int(fields[0]);
        if (!id) throw ParseError(source, line_no, "non-integer chip_id '" + std::string(fields[0]) + "'");
        if (fields[1].size() != 1 || fields[1][0] < 'A' || fields[1][0] > 'J') {
            throw ParseError(source, line_no, "value_row must be a letter A..J");
        }
        const auto hue = text::parse_int(fields[2]);
        if (!hue || *hue < 0 || *hue > 40) throw ParseError(source, line_no, "hue_column must be 0..40");
        const auto L = text::parse_double(fields[3]);
        const auto a = text::parse_double(fields[4]);
        const auto b = text::parse_double(fields[5]);
        if (!L) throw ParseError(source, line_no, "non-numeric L '" + std::string(fields[3]) + "'");
        if (!a) throw ParseError(source, line_no, "non-numeric a '" + std::string(fields[4]) + "'");
        if (!b) throw ParseError(source, line_no, "non-numeric b '" + std::string(fields[5]) + "'");
        chip.chip_id = static_cast<int>(*id);
        chip.value_row = fields[1][0];
        chip.hue_column = static_cast<int>(*hue);
        chip.lab = {*L, *a, *b};
        if (!is_valid(chip.lab)) throw ParseError(source, line_no, "Lab coordinate out of range");
        chips.push_back(chip);
    }
    return ChipTable(std::move(chips));
}

ChipTable load_chip_table(const std::filesystem::path& path) {
    return parse_chip_table(text::read_file(path), path.string());
}

double delta_e_cmc(const LabColor& reference, const LabColor& sample, double l_ratio, double c_ratio) {
    const double c1 = std::hypot(reference.a, reference.b);
    const double c2 = std::hypot(sample.a, sample.b);
    const double dL = reference.L - sample.L;
    const double dC = c1 - c2;
    const double da = reference.a - sample.a;
    const double db = reference.b - sample.b;
    const double dH2 = std::max(0.0, da * da + db * db - dC * dC);

    const double sL = reference.L < 16.0 ? 0.511 : 0.040975 * reference.L / (1.0 + 0.01765 * reference.L);
    const double sC = 0.0638 * c1 / (1.0 + 0.0131 * c1) + 0.638;
    const double c1_4 = c1 * c1 * c1 * c1;
    const double f = std::sqrt(c1_4 / (c1_4 + 1900.0));
    const double h1 = hue_degrees(reference.a, reference.b);
    const double t = (h1 >= 164.0 && h1 <= 345.0)
                         ? 0.56 + std::abs(0.2 * std::cos((h1 + 168.0) / kDegPerRad))
                         : 0.36 + std::abs(0.4 * std::cos((h1 + 35.0) / kDegPerRad));
    const double sH = sC * (f * t + 1.0 - f);

    const double tl = dL / (l_ratio * sL);
    const double tc = dC / (c_ratio * sC);
    return std::sqrt(tl * tl + tc * tc + dH2 / (sH * sH));
}

double symmetric_delta_e_cmc(const LabColor& x, const LabColor& y, CmcRatios ratios) {
    return 0.5 * (delta_e_cmc(x, y, ratios.lightness, ratios.chroma) +
                  delta_e_cmc(y, x, ratios.lightness, ratios.chroma));
}

double similarity_kernel(double dist, double c_scale) {
    return std::exp(-c_scale * dist * dist);
}

std::array<double, 3> lab_to_linear_srgb(const LabColor& lab) {
    const double fy = (lab.L + 16.0) / 116.0;
    const double fx = fy + lab.a / 500.0;
    const double fz = fy - lab.b / 200.0;
    const Eigen::Vector3d xyz_c{kWhiteC[0] * lab_f_inverse(fx), kWhiteC[1] * lab_f_inverse(fy),
                                kWhiteC[2] * lab_f_inverse(fz)};
    const Eigen::Vector3d rgb = xyz_to_srgb() * (c_to_d65() * xyz_c);
    return {rgb[0], rgb[1], rgb[2]};
}

Hsv lab_to_hsv(const LabColor& lab) {
    const auto linear = lab_to_linear_srgb(lab);
    std::array<double, 3> rgb{};
    for (std::size_t i = 0; i < 3; ++i) rgb[i] = srgb_gamma(std::clamp(linear[i], 0.0, 1.0));

    const double mx = std::max({rgb[0], rgb[1], rgb[2]});
    const double mn = std::min({rgb[0], rgb[1], rgb[2]});
    const double delta = mx - mn;

    Hsv out;
    out.value = mx;
    out.saturation = mx > 0.0 ? delta / mx : 0.0;
    if (out.saturation < kAchromaticSaturation) {
        out.achromatic = true;
        out.hue = 0.0;
        return out;
    }
    double h;
    if (mx == rgb[0]) {
        h = 60.0 * std::fmod((rgb[1] - rgb[2]) / delta, 6.0);
    } else if (mx == rgb[1]) {
        h = 60.0 * ((rgb[2] - rgb[0]) / delta + 2.0);
    } else {
        h = 60.0 * ((rgb[0] - rgb[1]) / delta + 4.0);
    }
    if (h < 0.0) h += 360.0;
    if (h >= 360.0) h -= 360.0;
    out.hue = h;
    return out;
}

std::string to_string(Temperature t) {
    return t == Temperature::Warm ? "warm" : "cool";
}

Temperature classify_temperature(const LabColor& lab, const TemperatureConfig& config) {
    const Hsv hsv = lab_to_hsv(lab);
    if (hsv.achromatic) return config.achromatic;
    for (const auto& r : config.warm_ranges) {
        if (hsv.hue >= r.begin && hsv.hue < r.end) return Temperature::Warm;
    }
    return Temperature::Cool;
}

}  // namespace coloralign
