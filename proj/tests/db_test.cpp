#include <doctest.h>

#include <algorithm>
#include <bit>
#include <fstream>
#include <random>
#include <set>

#include "hicops/digest.hpp"
#include "hicops/index.hpp"
#include "hicops/partition.hpp"
#include "support.hpp"

using namespace hicops;

namespace {

DatabaseConfig open_cfg() {
    DatabaseConfig cfg;
    cfg.missed_cleavages = 0;
    cfg.min_len = 1;
    cfg.max_len = 46;
    cfg.min_mass = 0.0;
    cfg.max_mass = 1e9;
    return cfg;
}

// Independent digestion enumerator: every substring, checked directly
// against the cleavage rules.
std::set<std::string> digest_oracle(const std::vector<FastaProtein>& prots,
                                    const DatabaseConfig& cfg) {
    std::set<std::string> out;
    for (const auto& prot : prots) {
        const auto& s = prot.sequence;
        auto is_site = [&](std::size_t cut) {  // cut position between cut-1, cut
            if (cut == 0 || cut == s.size()) return true;
            return (s[cut - 1] == 'K' || s[cut - 1] == 'R') && s[cut] != 'P';
        };
        for (std::size_t lo = 0; lo < s.size(); ++lo) {
            if (!is_site(lo)) continue;
            for (std::size_t hi = lo + 1; hi <= s.size(); ++hi) {
                if (!is_site(hi)) continue;
                int internal = 0;
                for (std::size_t c = lo + 1; c < hi; ++c)
                    if (is_site(c) && c != 0 && c != s.size()) ++internal;
                if (internal > cfg.missed_cleavages) continue;
                const auto len = hi - lo;
                if (len < static_cast<std::size_t>(cfg.min_len) ||
                    len > static_cast<std::size_t>(cfg.max_len))
                    continue;
                const std::string pep = s.substr(lo, len);
                if (!std::all_of(pep.begin(), pep.end(), is_standard_residue))
                    continue;
                const double m = peptide_mass(pep, 0, cfg.ptms);
                if (m < cfg.min_mass || m > cfg.max_mass) continue;
                out.insert(pep);
            }
        }
    }
    return out;
}

}  // namespace

TEST_SUITE("db-construct") {

TEST_CASE("digest applies the cleavage rule") {
    auto cfg = open_cfg();
    auto got = digest({{"p", "MKR"}}, cfg);
    CHECK(got == std::vector<std::string>{"MK", "R"});
}

TEST_CASE("digest suppresses cleavage before proline") {
    auto cfg = open_cfg();
    auto got = digest({{"p", "MKPR"}}, cfg);
    CHECK(got == std::vector<std::string>{"MKPR"});
}

TEST_CASE("digest equals brute-force enumeration") {
    std::mt19937_64 rng(31);
    std::vector<FastaProtein> prots;
    for (int i = 0; i < 3; ++i)
        prots.push_back({"p" + std::to_string(i),
                         testsup::random_peptide(rng, 120, 200)});
    DatabaseConfig cfg;
    cfg.missed_cleavages = 2;
    cfg.min_len = 6;
    cfg.max_len = 46;
    cfg.min_mass = 0.0;
    cfg.max_mass = 1e9;
    const auto got = digest(prots, cfg);
    const auto want = digest_oracle(prots, cfg);
    CHECK(got.size() == want.size());
    CHECK(std::set<std::string>(got.begin(), got.end()) == want);
    CHECK(std::is_sorted(got.begin(), got.end()));
}

TEST_CASE("expand_variants basics") {
    DatabaseConfig cfg = open_cfg();
    cfg.ptms = {{'M', 15.994915, false}};
    cfg.max_mods_per_peptide = 2;
    SUBCASE("no modifiable residues") {
        auto e = expand_variants({"GAS"}, cfg);
        REQUIRE(e.size() == 1);
        CHECK(e[0].mod_mask == 0);
    }
    SUBCASE("MM gives all four subsets") {
        auto e = expand_variants({"MM"}, cfg);
        REQUIRE(e.size() == 4);
        std::set<std::uint64_t> masks;
        for (const auto& x : e) masks.insert(x.mod_mask);
        CHECK(masks == std::set<std::uint64_t>{0, 1, 2, 3});
    }
    SUBCASE("cap limits popcount") {
        cfg.max_mods_per_peptide = 1;
        auto e = expand_variants({"MM"}, cfg);
        CHECK(e.size() == 3);
    }
}

TEST_CASE("expand_variants count equals independent enumerator") {
    std::mt19937_64 rng(32);
    DatabaseConfig cfg = open_cfg();
    cfg.ptms = {{'M', 15.994915, false}, {'S', 79.966331, false}};
    cfg.max_mods_per_peptide = 3;
    std::vector<std::string> base;
    for (int i = 0; i < 50; ++i) base.push_back(testsup::random_peptide(rng, 6, 25));
    std::sort(base.begin(), base.end());
    base.erase(std::unique(base.begin(), base.end()), base.end());
    const auto got = expand_variants(base, cfg);
    // Oracle: count subsets of modifiable positions per peptide.
    std::size_t want = 0;
    for (const auto& seq : base) {
        int m = 0;
        for (char ch : seq)
            if (ch == 'M' || ch == 'S') ++m;
        for (std::uint64_t v = 0; v < (1ull << m); ++v)
            if (std::popcount(v) <= 3) ++want;
    }
    CHECK(got.size() == want);
    // Canonical ids: strictly increasing, dense.
    for (std::size_t i = 0; i < got.size(); ++i)
        CHECK(got[i].global_id == i);
}

TEST_CASE("mod distance matches worked examples") {
    // Peptide length 8; edits at positions 2 and 6 vs 4 and 5 (1-based).
    const std::uint64_t q = (1u << 1) | (1u << 5);
    const std::uint64_t r = (1u << 3) | (1u << 4);
    CHECK(mod_distance(0, q, 8, 8) == doctest::Approx(1.625).epsilon(1e-12));
    CHECK(mod_distance(0, r, 8, 8) == doctest::Approx(1.25).epsilon(1e-12));
    CHECK(mod_distance(q, q, 8, 8) == 0.0);
}

TEST_CASE("mod distance symmetry and range") {
    std::mt19937_64 rng(33);
    std::uniform_int_distribution<std::uint64_t> mask_d(0, (1u << 12) - 1);
    for (int i = 0; i < 1000; ++i) {
        const auto x = mask_d(rng);
        const auto y = mask_d(rng);
        const double d = mod_distance(x, y, 12, 12);
        CHECK(d == mod_distance(y, x, 12, 12));
        CHECK(d >= 0.0);
        CHECK(d <= 2.0);
    }
}

TEST_CASE("partition basics") {
    DatabaseConfig cfg = open_cfg();
    cfg.ptms = {{'M', 15.994915, false}};
    cfg.max_mods_per_peptide = 3;
    const std::vector<std::string> base = {"MMMGGGGK"};
    auto entries = expand_variants(base, cfg);
    REQUIRE(entries.size() == 8);

    SUBCASE("P=1 keeps everything") {
        auto parts = partition(entries, base, cfg, 1);
        REQUIRE(parts.size() == 1);
        CHECK(parts[0].size() == entries.size());
    }
    SUBCASE("8 variants over P=4 gives 2 each") {
        auto parts = partition(entries, base, cfg, 4);
        for (const auto& p : parts) CHECK(p.size() == 2);
    }
}

TEST_CASE("partition completeness, disjointness and balance") {
    auto& corpus = testsup::shared_corpus(testsup::scratch_dir("corpus_db"));
    const auto base = digest(parse_fasta_file(corpus.fasta), corpus.db);
    const auto entries = expand_variants(base, corpus.db);
    const int P = 4;
    auto parts = partition(entries, base, corpus.db, P);
    std::set<std::uint32_t> seen;
    std::size_t total = 0, mn = entries.size(), mx = 0;
    for (const auto& p : parts) {
        total += p.size();
        mn = std::min(mn, p.size());
        mx = std::max(mx, p.size());
        for (const auto& e : p) CHECK(seen.insert(e.global_id).second);
    }
    CHECK(total == entries.size());
    // Round-robin remainder bound: spread at most the cluster count.
    CHECK(mx - mn <= base.size());
}

TEST_CASE("partition is deterministic and manifests byte-identical") {
    std::mt19937_64 rng(34);
    DatabaseConfig cfg = open_cfg();
    cfg.ptms = {{'M', 15.994915, false}};
    std::vector<std::string> base;
    for (int i = 0; i < 40; ++i) base.push_back(testsup::random_peptide(rng, 6, 20));
    std::sort(base.begin(), base.end());
    base.erase(std::unique(base.begin(), base.end()), base.end());
    auto entries = expand_variants(base, cfg);
    const auto dir = testsup::scratch_dir("manifests");
    for (int round = 0; round < 2; ++round) {
        auto parts = partition(entries, base, cfg, 3);
        for (int r = 0; r < 3; ++r)
            write_manifest(dir / ("m" + std::to_string(round) + "_" +
                                  std::to_string(r) + ".hcp"),
                           parts[static_cast<std::size_t>(r)], 3, r);
    }
    for (int r = 0; r < 3; ++r) {
        std::ifstream a(dir / ("m0_" + std::to_string(r) + ".hcp"),
                        std::ios::binary);
        std::ifstream b(dir / ("m1_" + std::to_string(r) + ".hcp"),
                        std::ios::binary);
        std::string sa((std::istreambuf_iterator<char>(a)), {});
        std::string sb((std::istreambuf_iterator<char>(b)), {});
        CHECK(sa == sb);
        CHECK(!sa.empty());
    }
}

TEST_CASE("manifest round trip") {
    std::vector<PeptideEntry> entries = {
        {0, 0, 700.5, 0}, {0, 5, 716.5, 1}, {3, 2, 1200.25, 7}};
    const auto file = testsup::scratch_dir("manifest_rt") / "part.hcp";
    write_manifest(file, entries, 4, 2);
    auto m = read_manifest(file);
    CHECK(m.P == 4);
    CHECK(m.rank == 2);
    REQUIRE(m.entries.size() == entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        CHECK(m.entries[i].base_id == entries[i].base_id);
        CHECK(m.entries[i].mod_mask == entries[i].mod_mask);
        CHECK(m.entries[i].precursor_mass == entries[i].precursor_mass);
        CHECK(m.entries[i].global_id == entries[i].global_id);
    }
}

TEST_CASE("build_index basics") {
    SUBCASE("empty partition") {
        auto idx = build_index({}, {}, {});
        CHECK(idx.spectra_by_mass.empty());
        CHECK(idx.fragment_array.empty());
    }
    SUBCASE("two peptides") {
        std::vector<std::string> base = {"GASPK", "LLNYTR"};
        DatabaseConfig cfg = open_cfg();
        auto entries = expand_variants(base, cfg);
        auto idx = build_index(entries, base, {});
        CHECK(idx.fragment_array.size() == 2 * (5 - 1) + 2 * (6 - 1));
        for (std::size_t i = 1; i < idx.fragment_array.size(); ++i)
            CHECK(idx.fragment_array[i - 1].mz <= idx.fragment_array[i].mz);
    }
}

TEST_CASE("index membership equals per-spectrum scan") {
    std::mt19937_64 rng(35);
    DatabaseConfig cfg = open_cfg();
    cfg.ptms = {{'M', 15.994915, false}};
    std::vector<std::string> base;
    for (int i = 0; i < 400; ++i) base.push_back(testsup::random_peptide(rng, 6, 24));
    std::sort(base.begin(), base.end());
    base.erase(std::unique(base.begin(), base.end()), base.end());
    auto entries = expand_variants(base, cfg);
    auto idx = build_index(entries, base, cfg.ptms);
    // Every (fragment, owner) pair present exactly once.
    std::size_t want_total = 0;
    for (const auto& s : idx.spectra_by_mass) want_total += s.fragments.size();
    REQUIRE(idx.fragment_array.size() == want_total);
    std::vector<std::size_t> per_owner(idx.spectra_by_mass.size(), 0);
    for (const auto& f : idx.fragment_array) {
        REQUIRE(f.local_ordinal < idx.spectra_by_mass.size());
        ++per_owner[f.local_ordinal];
    }
    for (std::size_t i = 0; i < per_owner.size(); ++i)
        CHECK(per_owner[i] == idx.spectra_by_mass[i].fragments.size());
    for (std::size_t i = 1; i < idx.spectra_by_mass.size(); ++i)
        CHECK(idx.spectra_by_mass[i - 1].entry.precursor_mass <=
              idx.spectra_by_mass[i].entry.precursor_mass);
}

TEST_CASE("scattered split beats contiguous split on window spread") {
    // Clustered synthetic database: many variants per base peptide give
    // tight precursor-mass clusters.
    std::mt19937_64 rng(36);
    DatabaseConfig cfg = open_cfg();
    cfg.ptms = {{'M', 15.994915, false}};
    cfg.max_mods_per_peptide = 3;
    std::vector<std::string> base;
    for (int i = 0; i < 120; ++i) {
        auto s = testsup::random_peptide(rng, 10, 20);
        // Force several Ms so each cluster has many variants.
        for (int m = 0; m < 4; ++m)
            s[static_cast<std::size_t>(rng() % s.size())] = 'M';
        base.push_back(std::move(s));
    }
    std::sort(base.begin(), base.end());
    base.erase(std::unique(base.begin(), base.end()), base.end());
    auto entries = expand_variants(base, cfg);
    const int P = 4;
    auto scattered = partition(entries, base, cfg, P);

    // Contiguous block split of the same scatter order.
    std::vector<std::vector<PeptideEntry>> blocks(P);
    {
        auto onepart = partition(entries, base, cfg, 1)[0];
        const std::size_t chunk = (onepart.size() + P - 1) / P;
        for (std::size_t i = 0; i < onepart.size(); ++i)
            blocks[std::min<std::size_t>(i / chunk, P - 1)].push_back(onepart[i]);
    }

    auto window_spread = [&](const std::vector<std::vector<PeptideEntry>>& parts,
                             double lo, double hi) {
        std::size_t mn = entries.size() + 1, mx = 0;
        for (const auto& p : parts) {
            std::size_t n = 0;
            for (const auto& e : p)
                if (e.precursor_mass >= lo && e.precursor_mass <= hi) ++n;
            mn = std::min(mn, n);
            mx = std::max(mx, n);
        }
        return mx - mn;
    };

    std::uniform_real_distribution<double> center(600.0, 2600.0);
    int wins = 0, windows = 0;
    for (int w = 0; w < 100; ++w) {
        const double c = center(rng);
        const auto s_spread = window_spread(scattered, c - 5, c + 5);
        const auto b_spread = window_spread(blocks, c - 5, c + 5);
        ++windows;
        if (s_spread <= b_spread) ++wins;
    }
    CHECK(wins == windows);
}

TEST_CASE("random scatter is seed-deterministic") {
    std::mt19937_64 rng(37);
    DatabaseConfig cfg = open_cfg();
    cfg.random_scatter = true;
    cfg.scatter_seed = 99;
    std::vector<std::string> base;
    for (int i = 0; i < 30; ++i) base.push_back(testsup::random_peptide(rng, 6, 15));
    std::sort(base.begin(), base.end());
    base.erase(std::unique(base.begin(), base.end()), base.end());
    auto entries = expand_variants(base, cfg);
    auto a = partition(entries, base, cfg, 4);
    auto b = partition(entries, base, cfg, 4);
    for (int r = 0; r < 4; ++r) {
        REQUIRE(a[r].size() == b[r].size());
        for (std::size_t i = 0; i < a[r].size(); ++i)
            CHECK(a[r][i].global_id == b[r][i].global_id);
    }
}

}  // TEST_SUITE
