#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "coloralign/templates.hpp"

using namespace coloralign;

namespace {

std::vector<std::string> many_terms(std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back("term" + std::to_string(i));
    return out;
}

}  // namespace

TEST_SUITE("templates") {

TEST_CASE("full grid size") {
    const auto objects = default_objects();
    REQUIRE(objects.size() == 122);
    CHECK(std::set<std::string>(objects.begin(), objects.end()).size() == 122);
    const auto contexts = generate_controlled_contexts(many_terms(18), objects, default_frames());
    CHECK(contexts.size() == 6588);
    std::map<std::string, int> per_term, per_object;
    for (const auto& c : contexts) {
        ++per_term[c.term];
        ++per_object[c.object];
    }
    CHECK(per_term.size() == 18);
    for (const auto& [t, n] : per_term) CHECK(n == 366);
    for (const auto& [o, n] : per_object) CHECK(n == 54);
}

TEST_CASE("counts are the product of the inputs") {
    const auto contexts = generate_controlled_contexts(many_terms(7), {"car", "hat"}, default_frames());
    CHECK(contexts.size() == 42);
}

TEST_CASE("copula sentence") {
    const auto contexts = generate_controlled_contexts({"Red"}, {"skirt"}, default_frames());
    REQUIRE(contexts.size() == 3);
    CHECK(contexts[0].sentence == "the skirt is red");
    CHECK(contexts[0].frame == FrameName::Copula);
    CHECK(contexts[1].sentence == "i have a red skirt");
    CHECK(contexts[2].sentence == "the red skirt is there");
    CHECK(contexts[2].term == "red");
}

TEST_CASE("ordering is frame, object, term") {
    const auto c = generate_controlled_contexts({"red", "blue"}, {"car", "hat"}, default_frames());
    REQUIRE(c.size() == 12);
    CHECK(c[0].sentence == "the car is red");
    CHECK(c[1].sentence == "the car is blue");
    CHECK(c[2].sentence == "the hat is red");
    CHECK(c[4].frame == FrameName::Possession);
}

TEST_CASE("frame validation") {
    CHECK_THROWS_AS((TemplateFrame{FrameName::Copula, "the <obj> is"}.validate()), TemplateError);
    CHECK_THROWS_AS((TemplateFrame{FrameName::Copula, "<col> <col> <obj>"}.validate()), TemplateError);
    CHECK_NOTHROW((TemplateFrame{FrameName::Copula, "<obj> <col>"}.validate()));
    CHECK_THROWS_AS(generate_controlled_contexts({"red"}, {"car"}, {{FrameName::Spatial, "a <obj>"}}),
                    TemplateError);
    CHECK_THROWS_AS(generate_controlled_contexts({}, {"car"}, default_frames()), ConfigError);
    CHECK_THROWS_AS(generate_controlled_contexts({"red"}, {}, default_frames()), ConfigError);
}

TEST_CASE("frame names round trip") {
    for (auto f : {FrameName::Copula, FrameName::Possession, FrameName::Spatial}) {
        CHECK(parse_frame_name(to_string(f)) == f);
    }
    CHECK_THROWS_AS(parse_frame_name("passive"), ConfigError);
}

TEST_CASE("index lines point at sentences") {
    const auto c = generate_controlled_contexts({"red", "blue"}, {"car", "hat"}, default_frames());
    const auto sentences = serialize_sentences(c);
    const auto index = serialize_template_index(c);
    std::vector<std::string> lines;
    std::istringstream in(sentences);
    for (std::string l; std::getline(in, l);) lines.push_back(l);
    REQUIRE(lines.size() == c.size());
    std::istringstream idx(index);
    std::string header;
    std::getline(idx, header);
    CHECK(header == "term\tframe\tobject\tline_no");
    std::size_t rows = 0;
    for (std::string term, frame, object, line_no; idx >> term >> frame >> object >> line_no; ++rows) {
        const auto& s = lines.at(std::stoul(line_no) - 1);
        CHECK(s.find(term) != std::string::npos);
        CHECK(s.find(object) != std::string::npos);
        CHECK(parse_frame_name(frame) == c[rows].frame);
    }
    CHECK(rows == c.size());
}

TEST_CASE("output is byte-identical across runs") {
    const auto a = generate_controlled_contexts(many_terms(30), default_objects(), default_frames());
    const auto b = generate_controlled_contexts(many_terms(30), default_objects(), default_frames());
    CHECK(serialize_sentences(a) == serialize_sentences(b));
    CHECK(serialize_template_index(a) == serialize_template_index(b));
}

TEST_CASE("word lists") {
    const auto path = std::filesystem::temp_directory_path() / "coloralign_words.txt";
    {
        std::ofstream out(path);
        out << "# objects\ncar\n\n  hat \n";
    }
    CHECK(load_word_list(path) == std::vector<std::string>{"car", "hat"});
    {
        std::ofstream out(path);
        out << "# nothing\n\n";
    }
    CHECK_THROWS_AS(load_word_list(path), InputError);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_word_list(path), InputError);
}

}  // TEST_SUITE
