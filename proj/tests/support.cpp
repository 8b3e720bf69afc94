#include "support.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hicops/chem.hpp"
#include "hicops/index.hpp"

namespace testsup {

namespace {

// Residue alphabet with elevated K/R frequency so tryptic digestion
// yields peptides in the target length band.
char random_residue(std::mt19937_64& rng) {
    static const std::string common = "ACDEFGHILMNPQSTVWY";
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double x = u(rng);
    if (x < 0.045) return 'K';
    if (x < 0.09) return 'R';
    if (x < 0.14) return 'M';  // oxidation target
    std::uniform_int_distribution<std::size_t> pick(0, common.size() - 1);
    return common[pick(rng)];
}

}  // namespace

std::string random_peptide(std::mt19937_64& rng, int min_len, int max_len) {
    std::uniform_int_distribution<int> len_d(min_len, max_len);
    const int len = len_d(rng);
    std::string s;
    s.reserve(static_cast<std::size_t>(len));
    for (int i = 0; i < len; ++i) s.push_back(random_residue(rng));
    return s;
}

Corpus make_corpus(const std::filesystem::path& dir, const CorpusSpec& spec) {
    std::filesystem::create_directories(dir);
    Corpus c;
    c.dir = dir;
    c.fasta = dir / "corpus.fasta";
    c.ms2 = dir / "corpus.ms2";
    c.db.missed_cleavages = 2;
    c.db.min_len = 6;
    c.db.max_len = 30;
    c.db.min_mass = 500.0;
    c.db.max_mass = 5000.0;
    c.db.max_mods_per_peptide = 3;
    c.db.ptms = {{'M', 15.994915, false}};

    std::mt19937_64 rng(spec.seed);
    std::vector<hicops::FastaProtein> proteins;
    {
        std::ofstream fa(c.fasta, std::ios::trunc);
        for (int p = 0; p < spec.n_proteins; ++p) {
            std::string seq;
            seq.reserve(static_cast<std::size_t>(spec.protein_len));
            for (int i = 0; i < spec.protein_len; ++i)
                seq.push_back(random_residue(rng));
            fa << ">prot_" << p << '\n';
            for (std::size_t i = 0; i < seq.size(); i += 60)
                fa << seq.substr(i, 60) << '\n';
            proteins.push_back({"prot_" + std::to_string(p), seq});
        }
    }

    const auto base = hicops::digest(proteins, c.db);
    const auto entries = hicops::expand_variants(base, c.db);
    if (entries.empty()) throw std::runtime_error("corpus has no entries");

    std::uniform_int_distribution<std::size_t> pick(0, entries.size() - 1);
    std::uniform_real_distribution<double> prec_j(-spec.precursor_jitter,
                                                  spec.precursor_jitter);
    std::uniform_real_distribution<double> frag_j(-spec.fragment_jitter,
                                                  spec.fragment_jitter);
    std::uniform_real_distribution<double> inten(20.0, 100.0);
    std::uniform_real_distribution<double> noise_mz(100.0, 1800.0);

    std::ofstream ms2(c.ms2, std::ios::trunc);
    ms2 << "H\tsynthetic corpus\n";
    char buf[64];
    for (int q = 0; q < spec.n_spectra; ++q) {
        const auto& e = entries[pick(rng)];
        c.true_entry.push_back(e.global_id);
        const auto& seq = base[e.base_id];
        const auto frags = hicops::fragment_ions(seq, e.mod_mask, c.db.ptms);
        const int charge = 2;
        const double mass = e.precursor_mass + prec_j(rng);
        const double mz = (mass + charge * hicops::kProtonMass) / charge;
        std::snprintf(buf, sizeof buf, "S\t%d\t%.5f\t%d\n", q + 1, mz, charge);
        ms2 << buf;
        std::vector<std::pair<double, double>> peaks;
        for (const auto& f : frags)
            peaks.emplace_back(f.mz + frag_j(rng), inten(rng));
        for (int n = 0; n < spec.noise_peaks; ++n)
            peaks.emplace_back(noise_mz(rng), inten(rng) * 0.3);
        std::sort(peaks.begin(), peaks.end());
        for (const auto& [pmz, pi] : peaks) {
            std::snprintf(buf, sizeof buf, "%.5f\t%.2f\n", pmz, pi);
            ms2 << buf;
        }
    }
    return c;
}

const Corpus& shared_corpus(const std::filesystem::path& dir) {
    static Corpus corpus = make_corpus(dir, CorpusSpec{});
    return corpus;
}

std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "hicops_tests" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::map<std::uint32_t, PsmEntry> read_psms(
    const std::filesystem::path& psms_dir) {
    std::map<std::uint32_t, PsmEntry> out;
    if (!std::filesystem::exists(psms_dir)) return out;
    for (const auto& e : std::filesystem::directory_iterator(psms_dir)) {
        if (e.path().extension() != ".tsv") continue;
        std::ifstream in(e.path());
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream ss(line);
            std::vector<std::string> cols;
            std::string col;
            while (std::getline(ss, col, '\t')) cols.push_back(col);
            if (cols.size() < 12) continue;
            PsmEntry p;
            p.peptide = cols[2];
            p.mods = cols[3];
            p.hyperscore = std::stod(cols[7]);
            p.e_value = cols[8] == "-" ? -1.0 : std::stod(cols[8]);
            out[static_cast<std::uint32_t>(std::stoul(cols[0]))] = p;
        }
    }
    return out;
}

std::string sorted_psm_blob(const std::filesystem::path& psms_dir) {
    std::vector<std::pair<std::uint32_t, std::string>> rows;
    for (const auto& e : std::filesystem::directory_iterator(psms_dir)) {
        if (e.path().extension() != ".tsv") continue;
        std::ifstream in(e.path());
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            // Drop the origin_rank column (index 10): which rank holds
            // the winning entry depends on P by construction.
            std::istringstream ss(line);
            std::vector<std::string> cols;
            std::string col;
            while (std::getline(ss, col, '\t')) cols.push_back(col);
            if (cols.size() >= 11) cols.erase(cols.begin() + 10);
            std::string joined;
            for (const auto& cc : cols) {
                if (!joined.empty()) joined += '\t';
                joined += cc;
            }
            rows.emplace_back(
                static_cast<std::uint32_t>(std::stoul(cols[0])), joined);
        }
    }
    std::sort(rows.begin(), rows.end());
    std::string blob;
    for (const auto& [id, line] : rows) {
        blob += line;
        blob += '\n';
    }
    return blob;
}

}  // namespace testsup
