#include "hicops/digest.hpp"

#include <algorithm>
#include <bit>
#include <set>

#include "hicops/chem.hpp"

namespace hicops {

namespace {

// Tryptic cleavage sites: positions after which the chain is cut.
std::vector<std::size_t> cleavage_sites(const std::string& seq) {
    std::vector<std::size_t> sites;
    for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
        if ((seq[i] == 'K' || seq[i] == 'R') && seq[i + 1] != 'P')
            sites.push_back(i + 1);  // cut between i and i+1
    }
    return sites;
}

}  // namespace

std::vector<std::string> digest(const std::vector<FastaProtein>& proteins,
                                const DatabaseConfig& cfg) {
    cfg.validate();
    std::set<std::string> unique;
    for (const auto& prot : proteins) {
        const std::string& seq = prot.sequence;
        if (seq.empty()) continue;
        auto sites = cleavage_sites(seq);
        // boundaries: 0, sites..., len
        std::vector<std::size_t> bounds;
        bounds.push_back(0);
        bounds.insert(bounds.end(), sites.begin(), sites.end());
        bounds.push_back(seq.size());
        const int segs = static_cast<int>(bounds.size()) - 1;
        for (int a = 0; a < segs; ++a) {
            for (int b = a; b < segs && b - a <= cfg.missed_cleavages; ++b) {
                std::size_t lo = bounds[a], hi = bounds[b + 1];
                std::size_t len = hi - lo;
                if (len < static_cast<std::size_t>(cfg.min_len) ||
                    len > static_cast<std::size_t>(cfg.max_len))
                    continue;
                std::string pep = seq.substr(lo, len);
                if (!std::all_of(pep.begin(), pep.end(), is_standard_residue))
                    continue;
                double m = peptide_mass(pep, 0, cfg.ptms);
                if (m < cfg.min_mass || m > cfg.max_mass) continue;
                unique.insert(std::move(pep));
            }
        }
    }
    return {unique.begin(), unique.end()};
}

std::vector<PeptideEntry> expand_variants(
    const std::vector<std::string>& base_peptides, const DatabaseConfig& cfg) {
    std::vector<PeptideEntry> out;
    std::uint32_t next_id = 0;
    for (std::uint32_t base = 0; base < base_peptides.size(); ++base) {
        const std::string& seq = base_peptides[base];
        // Positions a variable PTM can land on.
        std::vector<std::size_t> modifiable;
        for (std::size_t i = 0; i < seq.size(); ++i)
            if (variable_delta_for(seq[i], cfg.ptms) != 0.0) modifiable.push_back(i);

        const int m = static_cast<int>(modifiable.size());
        // Enumerate placement subsets in ascending compact-mask order so
        // the resulting position masks are deterministic.
        for (std::uint64_t v = 0; v < (1ull << m); ++v) {
            if (std::popcount(v) > cfg.max_mods_per_peptide) continue;
            std::uint64_t mask = 0;
            for (int j = 0; j < m; ++j)
                if (v >> j & 1) mask |= 1ull << modifiable[j];
            double mass = peptide_mass(seq, mask, cfg.ptms);
            if (mass < cfg.min_mass || mass > cfg.max_mass) continue;
            out.push_back({base, mask, mass, next_id++});
        }
    }
    return out;
}

}  // namespace hicops
