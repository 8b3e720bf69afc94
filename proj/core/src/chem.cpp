#include "hicops/chem.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

namespace hicops {

namespace {

// Monoisotopic residue masses for the 20 standard amino acids.
constexpr std::array<std::pair<char, double>, 20> kResidues{{
    {'A', 71.03711},  {'R', 156.10111}, {'N', 114.04293}, {'D', 115.02694},
    {'C', 103.00919}, {'E', 129.04259}, {'Q', 128.05858}, {'G', 57.02146},
    {'H', 137.05891}, {'I', 113.08406}, {'L', 113.08406}, {'K', 128.09496},
    {'M', 131.04049}, {'F', 147.06841}, {'P', 97.05276},  {'S', 87.03203},
    {'T', 101.04768}, {'W', 186.07931}, {'Y', 163.06333}, {'V', 99.06841},
}};

constexpr std::array<double, 26> build_table() {
    std::array<double, 26> t{};
    for (auto& v : t) v = -1.0;
    for (auto [c, m] : kResidues) t[c - 'A'] = m;
    return t;
}

constexpr auto kMassTable = build_table();

}  // namespace

bool is_standard_residue(char letter) {
    return letter >= 'A' && letter <= 'Z' && kMassTable[letter - 'A'] > 0;
}

double residue_mass(char letter) {
    if (!is_standard_residue(letter))
        throw std::invalid_argument(std::string("unknown residue letter: ") +
                                    letter);
    return kMassTable[letter - 'A'];
}

double residue_mass_fixed(char letter, const PtmList& ptms) {
    double m = residue_mass(letter);
    for (const auto& p : ptms)
        if (p.is_fixed && p.target_residue == letter) m += p.delta_mass;
    return m;
}

double variable_delta_for(char letter, const PtmList& ptms) {
    for (const auto& p : ptms)
        if (!p.is_fixed && p.target_residue == letter) return p.delta_mass;
    return 0.0;
}

double peptide_mass(std::string_view sequence, std::uint64_t mod_mask,
                    const PtmList& ptms) {
    double m = kWaterMass;
    for (std::size_t i = 0; i < sequence.size(); ++i) {
        m += residue_mass_fixed(sequence[i], ptms);
        if (mod_mask >> i & 1)
            m += variable_delta_for(sequence[i], ptms);
    }
    return m;
}

std::vector<Fragment> fragment_ions(std::string_view sequence,
                                    std::uint64_t mod_mask,
                                    const PtmList& ptms) {
    const std::size_t len = sequence.size();
    if (len < 2)
        throw std::invalid_argument("fragment_ions: peptide length < 2");

    // Per-position masses with fixed + applied variable deltas.
    std::vector<double> pos(len);
    for (std::size_t i = 0; i < len; ++i) {
        pos[i] = residue_mass_fixed(sequence[i], ptms);
        if (mod_mask >> i & 1)
            pos[i] += variable_delta_for(sequence[i], ptms);
    }

    std::vector<Fragment> out;
    out.reserve(2 * (len - 1));
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < len; ++i) {
        acc += pos[i];
        out.push_back({acc + kProtonMass, IonKind::B});
    }
    acc = 0.0;
    for (std::size_t i = 0; i + 1 < len; ++i) {
        acc += pos[len - 1 - i];
        out.push_back({acc + kWaterMass + kProtonMass, IonKind::Y});
    }
    std::stable_sort(out.begin(), out.end(), [](const Fragment& a, const Fragment& b) {
        if (a.mz != b.mz) return a.mz < b.mz;
        return a.kind < b.kind;
    });
    return out;
}

}  // namespace hicops
