#ifndef HICOPS_CHEM_HPP
#define HICOPS_CHEM_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace hicops {

// Monoisotopic constants, fixed so golden outputs stay bit-stable.
inline constexpr double kProtonMass = 1.007276;
inline constexpr double kWaterMass = 18.010565;

// A variable or fixed modification on one residue letter.
struct PtmSpec {
    char target_residue = 0;
    double delta_mass = 0.0;
    bool is_fixed = false;
};

using PtmList = std::vector<PtmSpec>;

bool is_standard_residue(char letter);

// Monoisotopic residue mass. Throws std::invalid_argument for a
// non-standard letter.
double residue_mass(char letter);

// Residue mass with any fixed PTM delta applied.
double residue_mass_fixed(char letter, const PtmList& ptms);

// Neutral monoisotopic peptide mass: residues + applied variable PTM
// deltas (mod_mask bit i set = position i modified) + water. Fixed PTMs
// are always applied.
double peptide_mass(std::string_view sequence, std::uint64_t mod_mask,
                    const PtmList& ptms);

enum class IonKind : std::uint8_t { B = 0, Y = 1 };

struct Fragment {
    double mz = 0.0;
    IonKind kind = IonKind::B;
};

// Singly charged b/y ions for a peptide, sorted ascending by m/z
// (b before y on exact ties). Length must be >= 2; result has exactly
// 2*(len-1) fragments.
std::vector<Fragment> fragment_ions(std::string_view sequence,
                                    std::uint64_t mod_mask,
                                    const PtmList& ptms);

// Delta applied at a position by the variable PTM set, 0 if none targets
// the letter.
double variable_delta_for(char letter, const PtmList& ptms);

}  // namespace hicops

#endif
