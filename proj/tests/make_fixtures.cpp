#include <filesystem>
#include <iostream>

#include "coloralign/text_io.hpp"
#include "support/fixtures.hpp"

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: make_fixtures OUTPUT_DIR\n";
        return 1;
    }
    const std::filesystem::path root(argv[1]);
    for (const auto& [rel, contents] : coloralign::synthetic::fixture_files()) {
        coloralign::text::write_file(root / rel, contents);
        std::cout << (root / rel).string() << "\n";
    }
    return 0;
}
