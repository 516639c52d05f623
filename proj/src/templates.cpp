#include "coloralign/templates.hpp"

#include <sstream>

#include "coloralign/text_io.hpp"

namespace coloralign {

namespace {

constexpr std::string_view kColSlot = "<col>";
constexpr std::string_view kObjSlot = "<obj>";

std::size_t count_occurrences(const std::string& s, std::string_view needle) {
    std::size_t n = 0;
    for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + needle.size())) ++n;
    return n;
}

void replace_once(std::string& s, std::string_view slot, const std::string& value) {
    const auto pos = s.find(slot);
    s.replace(pos, slot.size(), value);
}

}  // namespace

std::string to_string(FrameName f) {
    switch (f) {
        case FrameName::Copula: return "Copula";
        case FrameName::Possession: return "Possession";
        case FrameName::Spatial: return "Spatial";
    }
    return "?";
}

FrameName parse_frame_name(const std::string& s) {
    const auto lower = text::to_lower(s);
    if (lower == "copula") return FrameName::Copula;
    if (lower == "possession") return FrameName::Possession;
    if (lower == "spatial") return FrameName::Spatial;
    throw ConfigError("unknown template frame '" + s + "'");
}

void TemplateFrame::validate() const {
    const auto cols = count_occurrences(pattern, kColSlot);
    const auto objs = count_occurrences(pattern, kObjSlot);
    if (cols != 1 || objs != 1) {
        throw TemplateError("template '" + pattern + "' must contain <col> and <obj> exactly once (found " +
                            std::to_string(cols) + " and " + std::to_string(objs) + ")");
    }
}

std::vector<TemplateFrame> default_frames() {
    return {
        {FrameName::Copula, "the <obj> is <col>"},
        {FrameName::Possession, "i have a <col> <obj>"},
        {FrameName::Spatial, "the <col> <obj> is there"},
    };
}

std::vector<std::string> default_objects() {
    // Placeholder nouns that occur in many colors, grouped by category.
    return {
        "fan", "toaster", "kettle", "blender", "fridge", "microwave", "radio", "telephone", "lamp",
        "skirt", "shirt", "dress", "coat", "sweater", "jacket", "scarf", "hat", "sock", "glove", "blouse",
        "car", "bicycle", "bus", "truck", "van", "motorcycle", "boat", "scooter", "tractor", "train",
        "chair", "table", "sofa", "bed", "desk", "bench", "stool", "dresser", "cabinet", "shelf",
        "cup", "bag", "box", "bucket", "bottle", "jar", "basket", "bowl", "vase", "mug",
        "hammer", "screwdriver", "wrench", "shovel", "rake", "ladder", "drill", "saw", "pliers",
        "ball", "kite", "balloon", "doll", "frisbee", "marble", "block", "rattle", "wagon",
        "umbrella", "belt", "wallet", "purse", "necklace", "bracelet", "ribbon", "tie", "watch",
        "plate", "spoon", "fork", "pan", "pot", "spatula", "apron", "napkin", "tray",
        "pencil", "pen", "crayon", "folder", "notebook", "envelope", "eraser", "marker", "binder",
        "racket", "helmet", "skateboard", "surfboard", "ski", "bat", "jersey", "paddle", "canoe",
        "towel", "blanket", "candle", "pillow", "curtain", "rug", "carpet", "sheet", "brush", "comb",
        "guitar", "drum", "piano", "violin", "flute", "trumpet", "harp", "whistle",
    };
}

std::vector<ControlledContext> generate_controlled_contexts(const std::vector<std::string>& terms,
                                                           const std::vector<std::string>& objects,
                                                           const std::vector<TemplateFrame>& frames) {
    if (terms.empty()) throw ConfigError("template generation needs at least one term");
    if (objects.empty()) throw ConfigError("template generation needs at least one object");
    if (frames.empty()) throw ConfigError("template generation needs at least one frame");
    for (const auto& f : frames) f.validate();

    std::vector<ControlledContext> out;
    out.reserve(terms.size() * objects.size() * frames.size());
    for (const auto& frame : frames) {
        const auto pattern = text::to_lower(frame.pattern);
        for (const auto& object : objects) {
            const auto obj = text::to_lower(object);
            for (const auto& term : terms) {
                ControlledContext c{text::to_lower(term), frame.name, obj, pattern};
                replace_once(c.sentence, kObjSlot, obj);
                replace_once(c.sentence, kColSlot, c.term);
                out.push_back(std::move(c));
            }
        }
    }
    return out;
}

std::string serialize_sentences(const std::vector<ControlledContext>& contexts) {
    std::string out;
    for (const auto& c : contexts) {
        out += c.sentence;
        out += '\n';
    }
    return out;
}

std::string serialize_template_index(const std::vector<ControlledContext>& contexts) {
    std::string out = "term\tframe\tobject\tline_no\n";
    std::size_t line_no = 0;
    for (const auto& c : contexts) {
        out += c.term + "\t" + to_string(c.frame) + "\t" + c.object + "\t" + std::to_string(++line_no) + "\n";
    }
    return out;
}

std::vector<std::string> load_word_list(const std::filesystem::path& path) {
    std::istringstream in(text::read_file(path));
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        const auto t = text::trim(line);
        if (t.empty() || t.front() == '#') continue;
        out.emplace_back(t);
    }
    if (out.empty()) throw InputError("word list " + path.string() + " is empty");
    return out;
}

}  // namespace coloralign
