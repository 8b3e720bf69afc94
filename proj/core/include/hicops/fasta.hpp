#ifndef HICOPS_FASTA_HPP
#define HICOPS_FASTA_HPP

#include <filesystem>
#include <istream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hicops {

struct ParseError : std::runtime_error {
    ParseError(const std::string& what, int line)
        : std::runtime_error(what + " (line " + std::to_string(line) + ")"),
          line(line) {}
    int line;
};

struct FastaProtein {
    std::string description;
    std::string sequence;  // uppercase, '*' stripped
};

std::vector<FastaProtein> parse_fasta(std::istream& in);
std::vector<FastaProtein> parse_fasta_file(const std::filesystem::path& path);

}  // namespace hicops

#endif
