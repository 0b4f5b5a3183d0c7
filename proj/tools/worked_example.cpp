#include <fstream>
#include <iostream>

#include "geoembed/docgen.hpp"

int main(int argc, char** argv) {
    const std::string path = argc > 1 ? argv[1] : "docs/worked_example.md";
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        std::cerr << "cannot write " << path << "\n";
        return 1;
    }
    out << geoembed::render_worked_example();
    std::cout << "wrote " << path << "\n";
    return 0;
}
