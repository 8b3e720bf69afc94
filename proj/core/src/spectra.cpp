#include "hicops/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "hicops/binio.hpp"
#include "hicops/chem.hpp"

namespace hicops {

namespace {

constexpr char kBatchMagic[4] = {'H', 'M', 'S', 'B'};
constexpr std::uint16_t kBatchVersion = 1;

bool parse_tokens(const std::string& line, std::vector<std::string>& toks) {
    toks.clear();
    std::istringstream ss(line);
    std::string t;
    while (ss >> t) toks.push_back(t);
    return !toks.empty();
}

}  // namespace

Ms2ParseResult parse_ms2(std::istream& in, std::uint32_t first_id) {
    Ms2ParseResult res;
    std::string line;
    std::vector<std::string> toks;
    int lineno = 0;
    std::uint32_t next_id = first_id;
    ExperimentalSpectrum* cur = nullptr;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == 'H') continue;
        if (line[0] == 'S') {
            if (!parse_tokens(line, toks) || toks.size() < 3 || toks.size() > 4)
                throw ParseError("malformed S record: " + line, lineno);
            ExperimentalSpectrum s;
            try {
                s.scan = static_cast<std::uint32_t>(std::stoul(toks[1]));
                double mz = std::stod(toks[2]);
                int charge = 2;
                if (toks.size() == 4) charge = std::stoi(toks[3]);
                else ++res.default_charge_warnings;
                if (charge < 1) throw std::invalid_argument("charge < 1");
                s.charge = static_cast<std::uint8_t>(charge);
                s.precursor_mass = mz * charge - charge * kProtonMass;
            } catch (const std::exception&) {
                throw ParseError("malformed S record: " + line, lineno);
            }
            s.spectrum_id = next_id++;
            res.spectra.push_back(std::move(s));
            cur = &res.spectra.back();
            continue;
        }
        if (!cur) throw ParseError("peak line before first S record", lineno);
        if (!parse_tokens(line, toks) || toks.size() != 2)
            throw ParseError("malformed peak line: " + line, lineno);
        try {
            cur->peaks.push_back({std::stof(toks[0]), std::stof(toks[1])});
        } catch (const std::exception&) {
            throw ParseError("malformed peak line: " + line, lineno);
        }
    }
    return res;
}

Ms2ParseResult parse_ms2_file(const std::filesystem::path& path,
                              std::uint32_t first_id) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open MS2 file: " + path.string());
    return parse_ms2(in, first_id);
}

std::optional<ExperimentalSpectrum> preprocess(const ExperimentalSpectrum& s,
                                               const SearchConfig& cfg) {
    if (s.peaks.empty()) return std::nullopt;
    ExperimentalSpectrum out = s;
    float max_i = 0.0f;
    for (const auto& p : out.peaks) max_i = std::max(max_i, p.intensity);
    if (max_i > 0.0f) {
        const float scale = 100.0f / max_i;
        for (auto& p : out.peaks) p.intensity *= scale;
    }
    if (out.peaks.size() > static_cast<std::size_t>(cfg.top_b_peaks)) {
        // Highest intensity first, ties toward lower m/z.
        std::stable_sort(out.peaks.begin(), out.peaks.end(),
                         [](const Peak& a, const Peak& b) {
                             if (a.intensity != b.intensity)
                                 return a.intensity > b.intensity;
                             return a.mz < b.mz;
                         });
        out.peaks.resize(static_cast<std::size_t>(cfg.top_b_peaks));
    }
    std::stable_sort(out.peaks.begin(), out.peaks.end(),
                     [](const Peak& a, const Peak& b) { return a.mz < b.mz; });
    return out;
}

std::vector<SpectrumBatch> make_batches(std::vector<ExperimentalSpectrum> spectra,
                                        int P, int batch_cap,
                                        const std::string& source_file) {
    std::vector<SpectrumBatch> out;
    const std::size_t total = spectra.size();
    if (total == 0) return out;
    const std::size_t per_p = (total + P - 1) / static_cast<std::size_t>(P);
    const std::size_t chunk =
        std::max<std::size_t>(1, std::min<std::size_t>(batch_cap, per_p));
    std::uint32_t tag = 0;
    for (std::size_t i = 0; i < total; i += chunk) {
        SpectrumBatch b;
        b.tag = tag++;
        b.source_file = source_file;
        auto end = std::min(total, i + chunk);
        b.spectra.assign(std::make_move_iterator(spectra.begin() + i),
                         std::make_move_iterator(spectra.begin() + end));
        out.push_back(std::move(b));
    }
    return out;
}

std::optional<BatchDescriptor> BatchIndex::pop() {
    if (!reclaim_stack.empty()) {
        BatchDescriptor d = std::move(reclaim_stack.back());
        reclaim_stack.pop_back();
        return d;
    }
    if (!pending.empty()) {
        BatchDescriptor d = std::move(pending.front());
        pending.pop_front();
        return d;
    }
    return std::nullopt;
}

static void write_batch_file(const std::filesystem::path& file,
                             const SpectrumBatch& b) {
    std::ofstream os(file, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write batch file: " + file.string());
    os.write(kBatchMagic, 4);
    write_le<std::uint16_t>(os, kBatchVersion);
    write_le<std::uint32_t>(os, b.tag);
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(b.spectra.size()));
    for (const auto& s : b.spectra) {
        write_le<std::uint32_t>(os, s.spectrum_id);
        write_le<double>(os, s.precursor_mass);
        write_le<std::uint8_t>(os, s.charge);
        write_le<std::uint16_t>(os, static_cast<std::uint16_t>(s.peaks.size()));
        for (const auto& p : s.peaks) {
            write_le<float>(os, p.mz);
            write_le<float>(os, p.intensity);
        }
    }
    if (!os) throw std::runtime_error("batch write failed: " + file.string());
}

SpectrumBatch read_batch(const std::filesystem::path& file) {
    std::ifstream is(file, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open batch file: " + file.string());
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kBatchMagic, 4) != 0)
        throw std::runtime_error("bad batch magic: " + file.string());
    if (read_le<std::uint16_t>(is) != kBatchVersion)
        throw std::runtime_error("unsupported batch version: " + file.string());
    SpectrumBatch b;
    b.tag = read_le<std::uint32_t>(is);
    auto count = read_le<std::uint32_t>(is);
    b.spectra.resize(count);
    for (auto& s : b.spectra) {
        s.spectrum_id = read_le<std::uint32_t>(is);
        s.precursor_mass = read_le<double>(is);
        s.charge = read_le<std::uint8_t>(is);
        auto n = read_le<std::uint16_t>(is);
        s.peaks.resize(n);
        for (auto& p : s.peaks) {
            p.mz = read_le<float>(is);
            p.intensity = read_le<float>(is);
        }
    }
    return b;
}

bool batch_file_valid(const std::filesystem::path& file, std::uint32_t tag,
                      std::uint32_t count) {
    std::ifstream is(file, std::ios::binary);
    if (!is) return false;
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kBatchMagic, 4) != 0) return false;
    try {
        if (read_le<std::uint16_t>(is) != kBatchVersion) return false;
        if (read_le<std::uint32_t>(is) != tag) return false;
        if (read_le<std::uint32_t>(is) != count) return false;
    } catch (const std::exception&) {
        return false;
    }
    return true;
}

WriteResult write_preprocessed(const std::vector<SpectrumBatch>& batches,
                               const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    WriteResult res;
    std::ofstream footer(out_dir / "batch_index.tsv", std::ios::trunc);
    if (!footer)
        throw std::runtime_error("cannot write batch index in " + out_dir.string());
    footer << "tag\tcount\tfile\n";
    for (const auto& b : batches) {
        auto file = out_dir / ("batch_" + std::to_string(b.tag) + ".msb");
        const auto count = static_cast<std::uint32_t>(b.spectra.size());
        if (batch_file_valid(file, b.tag, count)) {
            ++res.skipped;
        } else {
            write_batch_file(file, b);
            ++res.written;
        }
        footer << b.tag << '\t' << count << '\t' << file.filename().string() << '\n';
        res.index.pending.push_back({b.tag, count, file});
    }
    return res;
}

BatchIndex load_batch_index(const std::filesystem::path& dir) {
    std::ifstream in(dir / "batch_index.tsv");
    if (!in)
        throw std::runtime_error("cannot open batch index in " + dir.string());
    BatchIndex idx;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        BatchDescriptor d;
        std::string fname;
        ss >> d.tag >> d.count >> fname;
        d.file = dir / fname;
        idx.pending.push_back(std::move(d));
    }
    return idx;
}

void write_scan_table(const std::vector<SpectrumBatch>& batches,
                      const std::filesystem::path& dir) {
    std::ofstream os(dir / "scans.tsv", std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write scans.tsv in " + dir.string());
    os << "spectrum_id\tscan\tsource_file\n";
    for (const auto& b : batches)
        for (const auto& s : b.spectra)
            os << s.spectrum_id << '\t' << s.scan << '\t' << b.source_file << '\n';
}

std::vector<std::pair<std::uint32_t, ScanInfo>> load_scan_table(
    const std::filesystem::path& dir) {
    std::ifstream in(dir / "scans.tsv");
    if (!in) throw std::runtime_error("cannot open scans.tsv in " + dir.string());
    std::vector<std::pair<std::uint32_t, ScanInfo>> out;
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::uint32_t id;
        ScanInfo info;
        ss >> id >> info.scan >> info.source_file;
        out.emplace_back(id, std::move(info));
    }
    return out;
}

}  // namespace hicops
