#include "hicops/assemble.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "hicops/binio.hpp"
#include "hicops/pipeline.hpp"
#include "hicops/spectra.hpp"

namespace hicops {

namespace {

double now_s() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

// Gaussian elimination with partial pivoting; n <= 4 in practice.
bool solve_linear(std::vector<double>& a, std::vector<double>& b, int n) {
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a[static_cast<std::size_t>(r * n + col)]) >
                std::abs(a[static_cast<std::size_t>(pivot * n + col)]))
                pivot = r;
        if (std::abs(a[static_cast<std::size_t>(pivot * n + col)]) < 1e-12)
            return false;
        if (pivot != col) {
            for (int c = 0; c < n; ++c)
                std::swap(a[static_cast<std::size_t>(col * n + c)],
                          a[static_cast<std::size_t>(pivot * n + c)]);
            std::swap(b[static_cast<std::size_t>(col)],
                      b[static_cast<std::size_t>(pivot)]);
        }
        const double d = a[static_cast<std::size_t>(col * n + col)];
        for (int r = col + 1; r < n; ++r) {
            const double f = a[static_cast<std::size_t>(r * n + col)] / d;
            if (f == 0.0) continue;
            for (int c = col; c < n; ++c)
                a[static_cast<std::size_t>(r * n + c)] -=
                    f * a[static_cast<std::size_t>(col * n + c)];
            b[static_cast<std::size_t>(r)] -= f * b[static_cast<std::size_t>(col)];
        }
    }
    for (int r = n - 1; r >= 0; --r) {
        double acc = b[static_cast<std::size_t>(r)];
        for (int c = r + 1; c < n; ++c)
            acc -= a[static_cast<std::size_t>(r * n + c)] *
                   b[static_cast<std::size_t>(c)];
        b[static_cast<std::size_t>(r)] = acc / a[static_cast<std::size_t>(r * n + r)];
    }
    return true;
}

// Least-squares polynomial of degree `deg` over (x[j], y[j]), evaluated
// at x = 0.
double fit_eval_at_zero(const std::vector<double>& xs,
                        const std::vector<double>& ys, int deg) {
    const int n = deg + 1;
    std::vector<double> ata(static_cast<std::size_t>(n * n), 0.0);
    std::vector<double> atb(static_cast<std::size_t>(n), 0.0);
    for (std::size_t j = 0; j < xs.size(); ++j) {
        double pow_i = 1.0;
        std::vector<double> powers(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            powers[static_cast<std::size_t>(i)] = pow_i;
            pow_i *= xs[j];
        }
        for (int r = 0; r < n; ++r) {
            for (int c = 0; c < n; ++c)
                ata[static_cast<std::size_t>(r * n + c)] +=
                    powers[static_cast<std::size_t>(r)] *
                    powers[static_cast<std::size_t>(c)];
            atb[static_cast<std::size_t>(r)] +=
                powers[static_cast<std::size_t>(r)] * ys[j];
        }
    }
    if (!solve_linear(ata, atb, n)) return ys.empty() ? 0.0 : ys[0];
    return atb[0];  // constant term = value at x = 0
}

}  // namespace

AssembledDistribution assemble(
    const std::vector<std::pair<int, PartialResult>>& records, int nbins) {
    AssembledDistribution out;
    out.bins.assign(static_cast<std::size_t>(nbins), 0);
    std::set<std::pair<std::uint32_t, int>> seen_primary;
    bool all_primaries_empty = true;
    for (const auto& [rank, rec] : records) {
        if (!(rec.flags & kFlagContinuation)) {
            if (!seen_primary.insert({rec.query_id, rank}).second)
                throw std::runtime_error(
                    "duplicate primary result for query " +
                    std::to_string(rec.query_id) + " from rank " +
                    std::to_string(rank));
            if (!(rec.flags & kFlagEmpty)) all_primaries_empty = false;
        }
        // kFlagEmpty is partition-local (the global result is empty only
        // when every worker was, so it merges by AND below) and
        // kFlagContinuation is wire bookkeeping; neither is a property
        // of the assembled result.
        out.flags |=
            rec.flags & static_cast<std::uint8_t>(~(kFlagEmpty | kFlagContinuation));
        for (int i = 0; i < rec.sample_len; ++i) {
            const int b = rec.hist_start_bin + i;
            if (b >= nbins) break;
            const auto c = rec.samples[static_cast<std::size_t>(i)];
            out.bins[static_cast<std::size_t>(b)] += c;
            out.total_n += c;
        }
        if ((rec.flags & kFlagContinuation) || (rec.flags & kFlagEmpty) ||
            rec.top_entry == kNoEntry)
            continue;
        // Global best by (score desc, entry id asc); both sides are f32
        // so every rank agrees.
        const bool better =
            !out.any_hits || rec.top_score > out.g_max_global ||
            (rec.top_score == out.g_max_global && rec.top_entry < out.top_entry);
        if (better) {
            out.g_max_global = rec.top_score;
            out.top_entry = rec.top_entry;
            out.origin_rank = rank;
        }
        out.any_hits = true;
    }
    if (all_primaries_empty && !seen_primary.empty()) out.flags |= kFlagEmpty;
    return out;
}

std::vector<double> savitzky_golay(const std::vector<double>& series,
                                   int window, int poly_order) {
    const int n = static_cast<int>(series.size());
    if (n < window) return series;
    const int half = window / 2;
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const int lo = std::max(0, i - half);
        const int hi = std::min(n - 1, i + half);
        std::vector<double> xs, ys;
        xs.reserve(static_cast<std::size_t>(hi - lo + 1));
        ys.reserve(static_cast<std::size_t>(hi - lo + 1));
        for (int j = lo; j <= hi; ++j) {
            xs.push_back(static_cast<double>(j - i));
            ys.push_back(series[static_cast<std::size_t>(j)]);
        }
        const int deg = std::min(poly_order, hi - lo);
        double v = fit_eval_at_zero(xs, ys, deg);
        if (v < 0.0) v = 0.0;
        out[static_cast<std::size_t>(i)] = v;
    }
    return out;
}

std::vector<double> savitzky_golay(const std::vector<std::uint64_t>& bins,
                                   int window, int poly_order) {
    std::vector<double> series(bins.size());
    for (std::size_t i = 0; i < bins.size(); ++i)
        series[i] = static_cast<double>(bins[i]);
    return savitzky_golay(series, window, poly_order);
}

TailFit tail_fit(const std::vector<double>& smoothed, double bin_width) {
    TailFit fit;
    const int n = static_cast<int>(smoothed.size());
    double total = 0.0;
    int mode = 0;
    for (int b = 0; b < n; ++b) {
        total += smoothed[static_cast<std::size_t>(b)];
        if (smoothed[static_cast<std::size_t>(b)] >
            smoothed[static_cast<std::size_t>(mode)])
            mode = b;
    }
    if (total <= 0.0) return fit;
    fit.log10_norm = std::log10(total);

    // Survival counts from the right; points strictly above the mode
    // with at least one expected observation.
    std::vector<double> xs, ys;
    double survival = 0.0;
    std::vector<double> surv(static_cast<std::size_t>(n));
    for (int b = n - 1; b >= 0; --b) {
        survival += smoothed[static_cast<std::size_t>(b)];
        surv[static_cast<std::size_t>(b)] = survival;
    }
    for (int b = mode + 1; b < n; ++b) {
        // Fit only the contiguous descending flank of the bulk. A
        // zero-density gap means everything further right is isolated
        // outlier mass (typically the query's own true matches), which
        // would otherwise flatten the fitted null tail.
        if (smoothed[static_cast<std::size_t>(b)] <= 0.0) break;
        const double s = surv[static_cast<std::size_t>(b)];
        if (s < 1.0) break;
        xs.push_back(static_cast<double>(b) * bin_width);
        ys.push_back(std::log10(s));
    }
    if (xs.size() < 3) return fit;

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const auto m = static_cast<double>(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double denom = m * sxx - sx * sx;
    if (std::abs(denom) < 1e-12) return fit;
    fit.w = (m * sxy - sx * sy) / denom;
    fit.b = (sy - fit.w * sx) / m;
    fit.ok = true;
    return fit;
}

double GumbelFit::survival(double x) const {
    const double z = (x - mu) / beta_scale;
    return 1.0 - std::exp(-std::exp(-z));
}

GumbelFit gumbel_fit(const std::vector<double>& smoothed, double bin_width) {
    GumbelFit fit;
    double total = 0.0, sum = 0.0;
    for (std::size_t b = 0; b < smoothed.size(); ++b) {
        const double x = (static_cast<double>(b) + 0.5) * bin_width;
        total += smoothed[b];
        sum += smoothed[b] * x;
    }
    if (total <= 0.0) return fit;
    const double mean = sum / total;
    double var = 0.0;
    for (std::size_t b = 0; b < smoothed.size(); ++b) {
        const double x = (static_cast<double>(b) + 0.5) * bin_width;
        var += smoothed[b] * (x - mean) * (x - mean);
    }
    var /= total;
    if (var <= 0.0) return fit;
    constexpr double kEulerGamma = 0.5772157;
    fit.beta_scale = std::sqrt(6.0 * var) / 3.14159265358979323846;
    fit.mu = mean - kEulerGamma * fit.beta_scale;
    fit.ok = true;
    return fit;
}

double expect_value(const TailFit& fit, double g_max, std::uint64_t total_n) {
    if (!fit.ok) return kEvalueUnavailable;
    double p = std::pow(10.0, fit.w * g_max + fit.b - fit.log10_norm);
    p = std::clamp(p, 0.0, 1.0);
    return p * static_cast<double>(total_n);
}

double expect_value(const GumbelFit& fit, double g_max, std::uint64_t total_n) {
    if (!fit.ok) return kEvalueUnavailable;
    double p = fit.survival(g_max);
    p = std::clamp(p, 0.0, 1.0);
    return p * static_cast<double>(total_n);
}

std::vector<std::uint32_t> claim_tags(const std::vector<std::uint32_t>& tags,
                                      int rank, int P) {
    std::vector<std::uint32_t> out;
    for (auto t : tags)
        if (static_cast<int>(t % static_cast<std::uint32_t>(P)) == rank)
            out.push_back(t);
    return out;
}

void RoutedRecord::set_candidate_total(std::uint64_t n) {
    const std::uint64_t cap = 0xFFFFFF;
    if (n > cap) n = cap;
    flags = (flags & 0xFFu) | (static_cast<std::uint32_t>(n) << 8);
}

std::vector<std::uint8_t> serialize_routed(const std::vector<RoutedRecord>& rs) {
    std::vector<std::uint8_t> out;
    out.reserve(rs.size() * kRoutedRecordBytes);
    for (const auto& r : rs) {
        put_le<std::uint32_t>(out, r.query_id);
        put_le<float>(out, r.e_value);
        put_le<float>(out, r.g_max);
        put_le<std::uint32_t>(out, r.flags);
    }
    return out;
}

std::vector<RoutedRecord> deserialize_routed(
    const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() % kRoutedRecordBytes != 0)
        throw std::runtime_error("routed payload not a multiple of 16 bytes");
    std::vector<RoutedRecord> out(bytes.size() / kRoutedRecordBytes);
    std::size_t off = 0;
    std::span<const std::uint8_t> view(bytes);
    for (auto& r : out) {
        r.query_id = get_le<std::uint32_t>(view, off);
        r.e_value = get_le<float>(view, off);
        r.g_max = get_le<float>(view, off);
        r.flags = get_le<std::uint32_t>(view, off);
    }
    return out;
}

std::string psm_header() {
    return "spectrum_id\tscan\tpeptide\tmods\tcalc_mass\tprecursor_mass\t"
           "charge\thyperscore\te_value\tcandidate_total\torigin_rank\tflags";
}

std::string format_psm_row(const PsmRow& r) {
    char num[64];
    std::string out;
    out += std::to_string(r.spectrum_id);
    out += '\t';
    out += std::to_string(r.scan);
    out += '\t';
    out += r.peptide;
    out += '\t';
    out += r.mods.empty() ? "-" : r.mods;
    std::snprintf(num, sizeof num, "\t%.6f", r.calc_mass);
    out += num;
    std::snprintf(num, sizeof num, "\t%.6f", r.precursor_mass);
    out += num;
    out += '\t';
    out += std::to_string(r.charge);
    std::snprintf(num, sizeof num, "\t%.4f", static_cast<double>(r.hyperscore));
    out += num;
    if (r.e_value < 0.0) {
        out += "\t-";
    } else {
        std::snprintf(num, sizeof num, "\t%.6g", r.e_value);
        out += num;
    }
    out += '\t';
    out += std::to_string(r.candidate_total);
    out += '\t';
    out += std::to_string(r.origin_rank);
    out += '\t';
    out += std::to_string(r.flags & 0xFFu);
    return out;
}

namespace {

std::string mods_string(const std::string& peptide, std::uint64_t mask,
                        const PtmList& ptms) {
    std::string out;
    for (std::size_t i = 0; i < peptide.size(); ++i) {
        if (!(mask & (std::uint64_t{1} << i))) continue;
        const double delta = variable_delta_for(peptide[i], ptms);
        char buf[48];
        std::snprintf(buf, sizeof buf, "%c%zu(%+.6f)", peptide[i], i + 1, delta);
        if (!out.empty()) out += ',';
        out += buf;
    }
    return out;
}

}  // namespace

void run_assembly(Transport& transport, const AssemblyContext& ctx,
                  const SearchConfig& cfg, FitMethod fit,
                  MetricsRecorder& metrics) {
    const int rank = transport.rank();
    const int P = transport.world_size();
    const double t_start = now_s();
    double io_s = 0.0, comm_s = 0.0;

    // Tags present in the shared results directory.
    std::set<std::uint32_t> tag_set;
    {
        const double t0 = now_s();
        for (const auto& e :
             std::filesystem::directory_iterator(ctx.results_dir)) {
            const auto name = e.path().filename().string();
            if (name.rfind("res_", 0) != 0) continue;
            const auto us = name.find('_', 4);
            if (us == std::string::npos) continue;
            tag_set.insert(
                static_cast<std::uint32_t>(std::stoul(name.substr(4, us - 4))));
        }
        io_s += now_s() - t0;
    }
    std::vector<std::uint32_t> all_tags(tag_set.begin(), tag_set.end());
    const auto owned = claim_tags(all_tags, rank, P);

    // Assemble every owned query and bucket the routed records by the
    // rank holding the global best hit.
    std::vector<std::vector<RoutedRecord>> per_dst(static_cast<std::size_t>(P));
    for (const auto tag : owned) {
        std::map<std::uint32_t, std::vector<std::pair<int, PartialResult>>>
            per_query;
        const double t0 = now_s();
        for (int r = 0; r < P; ++r) {
            const auto file = ctx.results_dir / result_file_name(tag,
                                  static_cast<std::uint32_t>(r));
            if (!std::filesystem::exists(file)) continue;
            auto rf = read_result_file(file);
            for (auto& rec : rf.records)
                per_query[rec.query_id].emplace_back(r, std::move(rec));
        }
        io_s += now_s() - t0;
        for (const auto& [query_id, recs] : per_query) {
            auto ad = assemble(recs, cfg.histogram_bins);
            if (!ad.any_hits) continue;
            RoutedRecord rr;
            rr.query_id = query_id;
            rr.g_max = ad.g_max_global;
            rr.flags = ad.flags;
            const auto smoothed = savitzky_golay(ad.bins);
            double e = kEvalueUnavailable;
            if (fit == FitMethod::Tail)
                e = expect_value(tail_fit(smoothed, cfg.histogram_bin_width),
                                 static_cast<double>(ad.g_max_global),
                                 ad.total_n);
            else
                e = expect_value(gumbel_fit(smoothed, cfg.histogram_bin_width),
                                 static_cast<double>(ad.g_max_global),
                                 ad.total_n);
            if (e < 0.0) rr.flags |= kFlagNoFit;
            rr.e_value = static_cast<float>(e);
            rr.set_candidate_total(ad.total_n);
            per_dst[static_cast<std::size_t>(ad.origin_rank)].push_back(rr);
        }
    }

    // Route: exactly one message to every other rank, empty or not.
    std::vector<RoutedRecord> mine = std::move(per_dst[static_cast<std::size_t>(rank)]);
    {
        const double t0 = now_s();
        for (int dst = 0; dst < P; ++dst) {
            if (dst == rank) continue;
            transport.send(dst,
                           serialize_routed(per_dst[static_cast<std::size_t>(dst)]));
        }
        for (int src = 0; src < P; ++src) {
            if (src == rank) continue;
            auto recs = deserialize_routed(transport.recv(src));
            mine.insert(mine.end(), recs.begin(), recs.end());
        }
        comm_s += now_s() - t0;
    }

    // This rank's own primary records recover the winning entry and its
    // score for each routed query.
    struct OwnTop {
        std::uint32_t entry = kNoEntry;
        float score = 0.0f;
    };
    std::unordered_map<std::uint32_t, OwnTop> own_top;
    {
        const double t0 = now_s();
        for (const auto tag : all_tags) {
            const auto file = ctx.results_dir / result_file_name(tag,
                                  static_cast<std::uint32_t>(rank));
            if (!std::filesystem::exists(file)) continue;
            auto rf = read_result_file(file);
            for (const auto& rec : rf.records) {
                if (rec.flags & (kFlagContinuation | kFlagEmpty)) continue;
                own_top[rec.query_id] = {rec.top_entry, rec.top_score};
            }
        }
        io_s += now_s() - t0;
    }

    // Spectrum metadata: scans from the sidecar, precursor and charge
    // from the persisted batches.
    std::unordered_map<std::uint32_t, ScanInfo> scans;
    struct SpecMeta {
        double precursor_mass = 0.0;
        int charge = 0;
    };
    std::unordered_map<std::uint32_t, SpecMeta> spec_meta;
    {
        const double t0 = now_s();
        for (const auto& [id, info] : load_scan_table(ctx.batches_dir))
            scans[id] = info;
        auto bidx = load_batch_index(ctx.batches_dir);
        std::set<std::uint32_t> wanted;
        for (const auto& rr : mine) wanted.insert(rr.query_id);
        for (const auto& d : bidx.pending) {
            auto batch = read_batch(d.file);
            for (const auto& s : batch.spectra)
                if (wanted.count(s.spectrum_id))
                    spec_meta[s.spectrum_id] = {s.precursor_mass, s.charge};
        }
        io_s += now_s() - t0;
    }

    std::unordered_map<std::uint32_t, const PeptideEntry*> by_global;
    if (ctx.local_entries)
        for (const auto& e : *ctx.local_entries) by_global[e.global_id] = &e;

    std::vector<PsmRow> rows;
    rows.reserve(mine.size());
    for (const auto& rr : mine) {
        PsmRow row;
        row.spectrum_id = rr.query_id;
        row.e_value = rr.result_flags() & kFlagNoFit
                          ? kEvalueUnavailable
                          : static_cast<double>(rr.e_value);
        row.candidate_total = rr.candidate_total();
        row.origin_rank = rank;
        row.flags = rr.result_flags();
        if (auto it = own_top.find(rr.query_id); it != own_top.end()) {
            row.hyperscore = it->second.score;
            if (ctx.base_peptides && ctx.ptms) {
                if (auto eit = by_global.find(it->second.entry);
                    eit != by_global.end()) {
                    const auto* e = eit->second;
                    row.peptide = (*ctx.base_peptides)[e->base_id];
                    row.mods = mods_string(row.peptide, e->mod_mask, *ctx.ptms);
                    row.calc_mass = e->precursor_mass;
                }
            }
        }
        if (auto it = scans.find(rr.query_id); it != scans.end())
            row.scan = it->second.scan;
        if (auto it = spec_meta.find(rr.query_id); it != spec_meta.end()) {
            row.precursor_mass = it->second.precursor_mass;
            row.charge = it->second.charge;
        }
        rows.push_back(std::move(row));
    }
    std::sort(rows.begin(), rows.end(), [](const PsmRow& a, const PsmRow& b) {
        return a.spectrum_id < b.spectrum_id;
    });

    {
        const double t0 = now_s();
        std::filesystem::create_directories(ctx.psms_dir);
        std::ofstream out(ctx.psms_dir /
                          ("psms_" + std::to_string(rank) + ".tsv"));
        out << psm_header() << '\n';
        for (const auto& r : rows) out << format_psm_row(r) << '\n';
        io_s += now_s() - t0;
    }

    const double t_pre_barrier = now_s();
    transport.barrier();
    const double t_end = now_s();

    SuperstepTiming t;
    t.rank = rank;
    t.superstep = 4;
    t.wall_seconds = t_end - t_start;
    t.io_seconds = io_s;
    t.comm_seconds = comm_s;
    t.idle_at_barrier_seconds = t_end - t_pre_barrier;
    metrics.add_timing(t);
}

}  // namespace hicops
