#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "coloralign/error.hpp"

namespace coloralign {

enum class FrameName { Copula, Possession, Spatial };

std::string to_string(FrameName f);
FrameName parse_frame_name(const std::string& s);

class TemplateError : public InputError {
public:
    using InputError::InputError;
};

struct TemplateFrame {
    FrameName name = FrameName::Copula;
    std::string pattern;  // contains `<col>` and `<obj>` exactly once each

    // Throws TemplateError for a missing or repeated slot.
    void validate() const;
};

std::vector<TemplateFrame> default_frames();

// 122 placeholder object nouns across 13 categories; override with a curated list.
std::vector<std::string> default_objects();

struct ControlledContext {
    std::string term;
    FrameName frame = FrameName::Copula;
    std::string object;
    std::string sentence;
};

// Frame-major, then object, then term. Inputs are lowercased.
std::vector<ControlledContext> generate_controlled_contexts(const std::vector<std::string>& terms,
                                                           const std::vector<std::string>& objects,
                                                           const std::vector<TemplateFrame>& frames);

// One sentence per line.
std::string serialize_sentences(const std::vector<ControlledContext>& contexts);
// Header `term frame object line_no`, line numbers 1-based into the sentence file.
std::string serialize_template_index(const std::vector<ControlledContext>& contexts);

// Reads a one-item-per-line list, skipping blanks and `#` comments.
std::vector<std::string> load_word_list(const std::filesystem::path& path);

}  // namespace coloralign
