#include "hicops/fasta.hpp"

#include <cctype>
#include <fstream>

namespace hicops {

std::vector<FastaProtein> parse_fasta(std::istream& in) {
    std::vector<FastaProtein> out;
    std::string line;
    int lineno = 0;
    bool have_record = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '>') {
            out.push_back({line.substr(1), {}});
            have_record = true;
            continue;
        }
        if (!have_record)
            throw ParseError("sequence data before first '>' header", lineno);
        for (char c : line) {
            if (c == '*' || std::isspace(static_cast<unsigned char>(c))) continue;
            char u = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
            if (u < 'A' || u > 'Z')
                throw ParseError(std::string("invalid sequence character '") + c + "'",
                                 lineno);
            out.back().sequence.push_back(u);
        }
    }
    return out;
}

std::vector<FastaProtein> parse_fasta_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open FASTA file: " + path.string());
    return parse_fasta(in);
}

}  // namespace hicops
