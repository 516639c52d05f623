#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>

#include "coloralign/color_core.hpp"
#include "coloralign/error.hpp"
#include "oracles.hpp"
#include "support/synthetic.hpp"

using namespace coloralign;

namespace {

// sRGB (D65) -> Lab under illuminant C, the inverse of the library chain.
LabColor srgb_to_lab_c(double r, double g, double b) {
    auto lin = [](double u) { return u <= 0.04045 ? u / 12.92 : std::pow((u + 0.055) / 1.055, 2.4); };
    Eigen::Matrix3d to_xyz;
    to_xyz << 0.4124564, 0.3575761, 0.1804375, 0.2126729, 0.7151522, 0.0721750, 0.0193339, 0.1191920, 0.9503041;
    Eigen::Matrix3d bradford;
    bradford << 0.8951, 0.2664, -0.1614, -0.7502, 1.7135, 0.0367, 0.0389, -0.0685, 1.0296;
    const Eigen::Vector3d d65(0.95047, 1.0, 1.08883), c(0.98074, 1.0, 1.18232);
    const Eigen::Vector3d ratio = (bradford * c).cwiseQuotient(bradford * d65);
    const Eigen::Matrix3d adapt = bradford.inverse() * ratio.asDiagonal() * bradford;
    const Eigen::Vector3d xyz = adapt * (to_xyz * Eigen::Vector3d(lin(r), lin(g), lin(b)));
    auto f = [](double t) { return t > 216.0 / 24389.0 ? std::cbrt(t) : (24389.0 / 27.0 * t + 16.0) / 116.0; };
    const double fx = f(xyz[0] / c[0]), fy = f(xyz[1] / c[1]), fz = f(xyz[2] / c[2]);
    return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

double hue_gap(double a, double b) {
    const double d = std::fmod(std::abs(a - b), 360.0);
    return std::min(d, 360.0 - d);
}

std::string valid_table() { return synthetic::chip_table_text(synthetic::chart()); }

}  // namespace

TEST_SUITE("color_core") {

TEST_CASE("chip table loads 330 chips") {
    const auto table = parse_chip_table(valid_table());
    CHECK(table.size() == 330);
    CHECK(table.chip(0).value_row == 'A');
    CHECK(table.chip(0).hue_column == 0);
}

TEST_CASE("chip table with 329 rows is an integrity error") {
    auto text = valid_table();
    text.erase(text.rfind('\n', text.size() - 2) + 1);
    CHECK_THROWS_AS(parse_chip_table(text), IntegrityError);
}

TEST_CASE("non-numeric L names the line") {
    auto text = valid_table();
    const auto pos = text.find("\n5 ");
    REQUIRE(pos != std::string::npos);
    const auto line_end = text.find('\n', pos + 1);
    text.replace(pos + 1, line_end - pos - 1, "5 B 4 abc 1 2");
    try {
        parse_chip_table(text, "chips.txt");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 7);
        CHECK(std::string(e.what()).find("chips.txt:7") != std::string::npos);
    }
}

TEST_CASE("duplicate chip id is rejected") {
    auto chips = synthetic::chart().chips();
    chips[5].chip_id = 4;
    CHECK_THROWS_AS(ChipTable{chips}, IntegrityError);
}

TEST_CASE("CMC of identical colors is zero") {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 50; ++i) {
        const LabColor x{synthetic::uniform01(rng) * 100, synthetic::uniform01(rng) * 200 - 100,
                         synthetic::uniform01(rng) * 200 - 100};
        CHECK(delta_e_cmc(x, x) == 0.0);
    }
}

TEST_CASE("CMC gray-axis hand case") {
    const double sl = 0.040975 * 50.0 / (1.0 + 0.01765 * 50.0);
    CHECK(delta_e_cmc({50, 0, 0}, {60, 0, 0}) == doctest::Approx(10.0 / (2.0 * sl)).epsilon(1e-12));
    CHECK(std::abs(delta_e_cmc({50, 0, 0}, {60, 0, 0}) - 4.594) < 1e-3);
}

TEST_CASE("CMC matches the textbook oracle on random pairs") {
    std::mt19937_64 rng(2024);
    for (int i = 0; i < 100; ++i) {
        const LabColor x{synthetic::uniform01(rng) * 100, synthetic::uniform01(rng) * 160 - 80,
                         synthetic::uniform01(rng) * 160 - 80};
        const LabColor y{synthetic::uniform01(rng) * 100, synthetic::uniform01(rng) * 160 - 80,
                         synthetic::uniform01(rng) * 160 - 80};
        CHECK(std::abs(delta_e_cmc(x, y) - oracle::cmc(x.L, x.a, x.b, y.L, y.a, y.b)) < 1e-4);
        CHECK(std::abs(delta_e_cmc(x, y, 1.0, 1.0) - oracle::cmc(x.L, x.a, x.b, y.L, y.a, y.b, 1.0, 1.0)) < 1e-4);
    }
}

TEST_CASE("CMC is order-sensitive") {
    const LabColor x{50, 60, 10}, y{40, 5, -30};
    CHECK(std::abs(delta_e_cmc(x, y) - delta_e_cmc(y, x)) > 1e-3);
    CHECK(symmetric_delta_e_cmc(x, y) == doctest::Approx(symmetric_delta_e_cmc(y, x)));
}

TEST_CASE("similarity kernel") {
    CHECK(similarity_kernel(0.0, 0.001) == 1.0);
    CHECK(similarity_kernel(0.0, 5.0) == 1.0);
    CHECK(similarity_kernel(10.0, 0.001) == doctest::Approx(0.904837418).epsilon(1e-9));
    double prev = 1.0;
    for (double d = 0.5; d < 200; d += 0.5) {
        const double k = similarity_kernel(d);
        CHECK(k < prev);
        CHECK(k > 0.0);
        prev = k;
    }
}

TEST_CASE("Lab to HSV reference colors") {
    const auto white = lab_to_hsv({100, 0, 0});
    CHECK(white.achromatic);
    CHECK(white.hue == 0.0);
    CHECK(white.value == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(lab_to_hsv({0, 0, 0}).value == 0.0);
    // Hues from an independent D65 implementation (skimage + colorsys).
    CHECK(hue_gap(lab_to_hsv({53.2, 80.1, 67.2}).hue, 0.0) < 5.0);
    CHECK(hue_gap(lab_to_hsv({32.3, 79.2, -107.9}).hue, 240.0) < 5.0);
    CHECK(hue_gap(lab_to_hsv({87.7, -86.2, 83.2}).hue, 120.0) < 5.0);
    CHECK(hue_gap(lab_to_hsv({97.1, -21.6, 94.5}).hue, 60.0) < 5.0);
}

TEST_CASE("HSV hue survives an sRGB round trip") {
    std::mt19937_64 rng(9);
    int tested = 0;
    while (tested < 200) {
        const double r = synthetic::uniform01(rng), g = synthetic::uniform01(rng), b = synthetic::uniform01(rng);
        const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
        if (mx - mn < 0.1) continue;
        double h = 0.0;
        if (mx == r) {
            h = 60.0 * std::fmod((g - b) / (mx - mn) + 6.0, 6.0);
        } else if (mx == g) {
            h = 60.0 * ((b - r) / (mx - mn) + 2.0);
        } else {
            h = 60.0 * ((r - g) / (mx - mn) + 4.0);
        }
        CHECK(hue_gap(lab_to_hsv(srgb_to_lab_c(r, g, b)).hue, h) < 5.0);
        ++tested;
    }
}

TEST_CASE("temperature classification") {
    CHECK(classify_temperature({53.2, 80.1, 67.2}) == Temperature::Warm);
    CHECK(classify_temperature({97.1, -21.6, 94.5}) == Temperature::Warm);
    CHECK(classify_temperature({32.3, 79.2, -107.9}) == Temperature::Cool);
    CHECK(classify_temperature({87.7, -86.2, 83.2}) == Temperature::Cool);
    CHECK(classify_temperature({50, 0, 0}) == Temperature::Cool);
    TemperatureConfig warm_gray;
    warm_gray.achromatic = Temperature::Warm;
    CHECK(classify_temperature({50, 0, 0}, warm_gray) == Temperature::Warm);
}

TEST_CASE("temperature partitions the chart") {
    const auto chips = synthetic::chart();
    std::size_t warm = 0, cool = 0;
    for (const auto& c : chips.chips()) {
        (classify_temperature(c.lab) == Temperature::Warm ? warm : cool)++;
    }
    CHECK(warm + cool == 330);
    CHECK(warm > 0);
    CHECK(cool > 0);
}

}  // TEST_SUITE
