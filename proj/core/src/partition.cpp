#include "hicops/partition.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>

#include "hicops/binio.hpp"

namespace hicops {

double mod_distance(std::uint64_t mask_x, std::uint64_t mask_y,
                    std::size_t len_x, std::size_t len_y) {
    const std::size_t len = std::max(len_x, len_y);
    if (len == 0) return 0.0;
    const std::uint64_t edited = mask_x ^ mask_y;
    std::size_t prefix = 0;
    while (prefix < len && !(edited >> prefix & 1)) ++prefix;
    std::size_t suffix = 0;
    while (suffix < len && !(edited >> (len - 1 - suffix) & 1)) ++suffix;
    const double a = static_cast<double>(prefix + suffix);
    return 2.0 - a / static_cast<double>(len);
}

double mod_distance(const PeptideEntry& x, const PeptideEntry& y,
                    const std::vector<std::string>& base_peptides) {
    return mod_distance(x.mod_mask, y.mod_mask, base_peptides[x.base_id].size(),
                        base_peptides[y.base_id].size());
}

std::vector<std::vector<PeptideEntry>> partition(
    const std::vector<PeptideEntry>& entries,
    const std::vector<std::string>& base_peptides, const DatabaseConfig& cfg,
    int P) {
    // Scatter order: clusters by base_id (Edit-Distance-0 groups), inside
    // a cluster by Mod Distance from the unmodified entry, ties by mask.
    std::vector<std::size_t> order(entries.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const PeptideEntry& x = entries[a];
        const PeptideEntry& y = entries[b];
        if (x.base_id != y.base_id) return x.base_id < y.base_id;
        const std::size_t len = base_peptides[x.base_id].size();
        const double dx = mod_distance(x.mod_mask, 0, len, len);
        const double dy = mod_distance(y.mod_mask, 0, len, len);
        if (dx != dy) return dx < dy;
        return x.mod_mask < y.mod_mask;
    });

    std::vector<std::vector<PeptideEntry>> parts(static_cast<std::size_t>(P));
    if (cfg.random_scatter) {
        std::mt19937_64 rng(cfg.scatter_seed);
        for (std::size_t i = 0; i < order.size(); ++i) {
            auto owner = static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(P));
            parts[owner].push_back(entries[order[i]]);
        }
    } else {
        for (std::size_t i = 0; i < order.size(); ++i)
            parts[i % P].push_back(entries[order[i]]);
    }
    return parts;
}

namespace {
constexpr char kManifestMagic[4] = {'H', 'C', 'P', '1'};
}

void write_manifest(const std::filesystem::path& file,
                    const std::vector<PeptideEntry>& entries, int P, int rank) {
    std::ofstream os(file, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write manifest: " + file.string());
    os.write(kManifestMagic, 4);
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(P));
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(rank));
    write_le<std::uint64_t>(os, entries.size());
    for (const auto& e : entries) {
        write_le<std::uint32_t>(os, e.base_id);
        write_le<std::uint32_t>(os, e.global_id);
        write_le<std::uint64_t>(os, e.mod_mask);
        write_le<double>(os, e.precursor_mass);
    }
    if (!os) throw std::runtime_error("manifest write failed: " + file.string());
}

Manifest read_manifest(const std::filesystem::path& file) {
    std::ifstream is(file, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open manifest: " + file.string());
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kManifestMagic, 4) != 0)
        throw std::runtime_error("bad manifest magic: " + file.string());
    Manifest m;
    m.P = static_cast<int>(read_le<std::uint32_t>(is));
    m.rank = static_cast<int>(read_le<std::uint32_t>(is));
    auto n = read_le<std::uint64_t>(is);
    m.entries.resize(n);
    for (auto& e : m.entries) {
        e.base_id = read_le<std::uint32_t>(is);
        e.global_id = read_le<std::uint32_t>(is);
        e.mod_mask = read_le<std::uint64_t>(is);
        e.precursor_mass = read_le<double>(is);
    }
    return m;
}

}  // namespace hicops
