// Command-line front end. Flags mirror config keys in kebab case; a
// config file provides defaults and flags override it.

#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "hicops/assemble.hpp"
#include "hicops/config.hpp"
#include "hicops/digest.hpp"
#include "hicops/driver.hpp"
#include "hicops/fasta.hpp"
#include "hicops/index.hpp"
#include "hicops/metrics.hpp"
#include "hicops/partition.hpp"
#include "hicops/pipeline.hpp"
#include "hicops/spectra.hpp"
#include "hicops/taskmap.hpp"
#include "hicops/transport.hpp"

namespace {

using hicops::RunConfig;

// One override flag: kebab-case CLI spelling -> config key.
struct FlagSpec {
    const char* flag;
    const char* key;
    const char* help;
};

constexpr FlagSpec kFlags[] = {
    {"--partitions", "partitions", "number of workers P"},
    {"--fasta", "fasta", "protein FASTA database"},
    {"--ms2", "ms2", "comma-separated MS2 files"},
    {"--run-dir", "run_dir", "run directory"},
    {"--fit", "fit", "e-value fit: tail | gumbel"},
    {"--transport", "transport", "inprocess | process"},
    {"--verbose", "verbose", "verbose output (true/false)"},
    {"--max-entries-per-task", "mapping.max_entries_per_task",
     "task-mapping split threshold"},
    {"--enzyme", "db.enzyme", "digestion enzyme"},
    {"--missed-cleavages", "db.missed_cleavages", "max missed cleavages"},
    {"--min-len", "db.min_len", "min peptide length"},
    {"--max-len", "db.max_len", "max peptide length"},
    {"--min-mass", "db.min_mass", "min peptide mass (Da)"},
    {"--max-mass", "db.max_mass", "max peptide mass (Da)"},
    {"--max-mods", "db.max_mods", "max variable mods per peptide"},
    {"--random-scatter", "db.random_scatter", "random scatter (true/false)"},
    {"--scatter-seed", "db.scatter_seed", "scatter RNG seed"},
    {"--ptm-variable", "ptm.variable", "variable PTMs, e.g. M:15.994915"},
    {"--ptm-fixed", "ptm.fixed", "fixed PTMs, e.g. C:57.021464"},
    {"--delta-m", "search.delta_m", "precursor tolerance (Da)"},
    {"--delta-f", "search.delta_f", "fragment tolerance (Da)"},
    {"--min-shared-peaks", "search.min_shared_peaks", "shared-peak cutoff k"},
    {"--top-m", "search.top_m", "hits kept per query"},
    {"--top-b-peaks", "search.top_b_peaks", "peaks kept per spectrum"},
    {"--sample-count", "search.sample_count", "histogram samples per record"},
    {"--batch-cap", "search.batch_cap", "max spectra per batch"},
    {"--histogram-bins", "search.histogram_bins", "score histogram bins"},
    {"--histogram-bin-width", "search.histogram_bin_width",
     "score histogram bin width"},
    {"--sampling", "search.sampling", "distribution sampling (true/false)"},
    {"--t-min", "sched.t_min", "scheduler t_min (s)"},
    {"--t-max", "sched.t_max", "scheduler t_max (s)"},
    {"--alpha", "sched.alpha", "forecast level smoothing"},
    {"--beta", "sched.beta", "forecast trend smoothing"},
    {"--buffers", "sched.buffers", "batch buffers in flight"},
    {"--threads", "sched.threads", "worker threads per rank (0 = auto)"},
};

struct ConfigArgs {
    std::string config_file;
    // Flag values arrive as strings and flow through RunConfig::set so
    // value errors always name the key.
    std::map<std::string, std::string> overrides;
};

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
    cmd->add_option("--config", args.config_file, "key=value config file");
    for (const auto& f : kFlags)
        cmd->add_option_function<std::string>(
            f.flag,
            [&args, key = std::string(f.key)](const std::string& v) {
                args.overrides[key] = v;
            },
            f.help);
}

RunConfig build_config(const ConfigArgs& args) {
    RunConfig cfg;
    if (!args.config_file.empty()) cfg.apply_file(args.config_file);
    for (const auto& [key, value] : args.overrides) cfg.set(key, value);
    cfg.validate();
    return cfg;
}

int cmd_build_db(const RunConfig& cfg) {
    const auto paths = hicops::RunPaths::under(hicops::resolve_run_dir(cfg));
    paths.create();
    const auto proteins = hicops::parse_fasta_file(cfg.fasta_path);
    const auto base = hicops::digest(proteins, cfg.db);
    const auto entries = hicops::expand_variants(base, cfg.db);
    const auto parts =
        hicops::partition(entries, base, cfg.db, cfg.partitions);
    for (int r = 0; r < cfg.partitions; ++r)
        hicops::write_manifest(
            paths.parts / ("part_" + std::to_string(r) + ".hcp"),
            parts[static_cast<std::size_t>(r)], cfg.partitions, r);
    std::cout << "proteins=" << proteins.size() << " base_peptides="
              << base.size() << " entries=" << entries.size()
              << " partitions=" << cfg.partitions << '\n';
    return 0;
}

int cmd_preprocess(const RunConfig& cfg) {
    const auto paths = hicops::RunPaths::under(hicops::resolve_run_dir(cfg));
    paths.create();
    std::vector<hicops::ExperimentalSpectrum> all;
    std::vector<std::pair<std::size_t, std::string>> file_spans;
    std::uint32_t next_id = 0;
    int dropped = 0, warnings = 0;
    for (const auto& path : cfg.ms2_paths) {
        auto parsed = hicops::parse_ms2_file(path, next_id);
        warnings += parsed.default_charge_warnings;
        file_spans.emplace_back(all.size(),
                                std::filesystem::path(path).filename().string());
        for (auto& s : parsed.spectra) {
            next_id = s.spectrum_id + 1;
            if (auto pp = hicops::preprocess(s, cfg.search))
                all.push_back(std::move(*pp));
            else
                ++dropped;
        }
    }
    const std::size_t per_p =
        all.empty() ? 1
                    : (all.size() + static_cast<std::size_t>(cfg.partitions) - 1) /
                          static_cast<std::size_t>(cfg.partitions);
    const int cap = static_cast<int>(std::min<std::size_t>(
        static_cast<std::size_t>(cfg.search.batch_cap),
        std::max<std::size_t>(1, per_p)));
    std::vector<hicops::SpectrumBatch> batches;
    file_spans.emplace_back(all.size(), "");
    for (std::size_t f = 0; f + 1 < file_spans.size(); ++f) {
        std::vector<hicops::ExperimentalSpectrum> chunk(
            std::make_move_iterator(
                all.begin() + static_cast<std::ptrdiff_t>(file_spans[f].first)),
            std::make_move_iterator(
                all.begin() +
                static_cast<std::ptrdiff_t>(file_spans[f + 1].first)));
        auto fb = hicops::make_batches(std::move(chunk), 1, cap,
                                       file_spans[f].second);
        for (auto& b : fb) {
            b.tag = static_cast<std::uint32_t>(batches.size());
            batches.push_back(std::move(b));
        }
    }
    auto res = hicops::write_preprocessed(batches, paths.batches);
    hicops::write_scan_table(batches, paths.batches);
    std::cout << "spectra=" << all.size() << " dropped=" << dropped
              << " default_charge=" << warnings << " batches="
              << batches.size() << " written=" << res.written << " skipped="
              << res.skipped << '\n';
    return 0;
}

int cmd_search(const RunConfig& cfg) {
    const auto paths = hicops::RunPaths::under(hicops::resolve_run_dir(cfg));
    paths.create();
    const auto proteins = hicops::parse_fasta_file(cfg.fasta_path);
    const auto base = hicops::digest(proteins, cfg.db);
    for (int r = 0; r < cfg.partitions; ++r) {
        const auto manifest = hicops::read_manifest(
            paths.parts / ("part_" + std::to_string(r) + ".hcp"));
        if (manifest.P != cfg.partitions)
            throw std::runtime_error("partition manifest written for P=" +
                                     std::to_string(manifest.P));
        const auto index =
            hicops::build_index(manifest.entries, base, cfg.db.ptms);
        auto batches = hicops::load_batch_index(paths.batches);
        hicops::MetricsRecorder metrics(r);
        auto out = hicops::run_search_pipeline(index, std::move(batches),
                                               cfg.search, cfg.sched, r,
                                               paths.results, metrics);
        metrics.flush(paths.metrics);
        std::cout << "rank=" << r << " batches=" << out.batches_searched
                  << " results=" << out.results_written << '\n';
    }
    return 0;
}

int cmd_assemble(const RunConfig& cfg) {
    const auto paths = hicops::RunPaths::under(hicops::resolve_run_dir(cfg));
    const auto proteins = hicops::parse_fasta_file(cfg.fasta_path);
    const auto base = hicops::digest(proteins, cfg.db);
    const int P = cfg.partitions;
    std::vector<hicops::Manifest> manifests;
    for (int r = 0; r < P; ++r)
        manifests.push_back(hicops::read_manifest(
            paths.parts / ("part_" + std::to_string(r) + ".hcp")));
    hicops::InProcessCluster cluster(P);
    std::vector<std::thread> threads;
    std::atomic<int> failures{0};
    for (int r = 0; r < P; ++r) {
        threads.emplace_back([&, r] {
            hicops::AssemblyContext ctx;
            ctx.results_dir = paths.results;
            ctx.batches_dir = paths.batches;
            ctx.psms_dir = paths.psms;
            ctx.local_entries = &manifests[static_cast<std::size_t>(r)].entries;
            ctx.base_peptides = &base;
            ctx.ptms = &cfg.db.ptms;
            hicops::MetricsRecorder metrics(r);
            try {
                hicops::run_assembly(cluster.transport(r), ctx, cfg.search,
                                     cfg.fit, metrics);
            } catch (const std::exception& e) {
                std::cerr << "rank " << r << ": " << e.what() << '\n';
                ++failures;
                cluster.abort();
            }
        });
    }
    for (auto& t : threads) t.join();
    return failures.load() ? 1 : 0;
}

int cmd_run(const RunConfig& cfg, const char* argv0) {
    const int rc = hicops::run_pipeline(cfg, argv0);
    if (rc == 0) {
        const auto paths =
            hicops::RunPaths::under(hicops::resolve_run_dir(cfg));
        const auto timings = hicops::load_timings(paths.metrics);
        const auto report = hicops::compute_overheads(timings);
        for (std::size_t j = 0; j < report.superstep_wall.size(); ++j)
            std::cout << "superstep " << j + 1 << ": "
                      << report.superstep_wall[j] << " s\n";
        std::cout << "total: " << report.total_wall << " s\n";
    }
    return rc;
}

int cmd_map(const std::string& spec_file, std::uint64_t database_size, int P,
            std::uint64_t max_entries) {
    const auto spec = hicops::load_cluster_spec(spec_file);
    const auto m = hicops::task_mapping(spec, database_size, P, max_entries);
    std::cout << hicops::format_mapping(m);
    return 0;
}

// Peptide/e-value columns of one PSM TSV, keyed by spectrum id.
struct PsmFileRow {
    std::string peptide;
    std::string mods;
    double e_value = -1.0;
};

std::map<std::uint32_t, PsmFileRow> load_psms(
    const std::filesystem::path& psms_dir) {
    std::map<std::uint32_t, PsmFileRow> out;
    for (const auto& e : std::filesystem::directory_iterator(psms_dir)) {
        if (e.path().extension() != ".tsv") continue;
        std::ifstream in(e.path());
        std::string line;
        std::getline(in, line);  // header
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream ss(line);
            std::vector<std::string> cols;
            std::string c;
            while (std::getline(ss, c, '\t')) cols.push_back(c);
            if (cols.size() < 9) continue;
            PsmFileRow row;
            row.peptide = cols[2];
            row.mods = cols[3];
            row.e_value = cols[8] == "-" ? -1.0 : std::stod(cols[8]);
            out[static_cast<std::uint32_t>(std::stoul(cols[0]))] = row;
        }
    }
    return out;
}

int cmd_verify(const std::string& run_dir, const ConfigArgs& args) {
    const auto paths = hicops::RunPaths::under(run_dir);
    // Reconstruct the run's config from its manifest; input.* digest
    // lines are metadata, not config keys.
    RunConfig cfg;
    {
        std::ifstream in(paths.root / "manifest.txt");
        if (!in)
            throw std::runtime_error("no manifest.txt under " + run_dir);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line.rfind("input.", 0) == 0) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            cfg.set(line.substr(0, eq), line.substr(eq + 1));
        }
    }
    for (const auto& [key, value] : args.overrides) cfg.set(key, value);

    // Single-worker, unsampled oracle over the same inputs.
    RunConfig oracle = cfg;
    oracle.partitions = 1;
    oracle.search.sampling_enabled = false;
    oracle.transport = hicops::TransportMode::InProcess;
    oracle.run_dir = (paths.root / "oracle").string();
    if (const int rc = hicops::run_pipeline(oracle); rc != 0) {
        std::cout << "verify: FAIL (oracle run failed)\n";
        return 1;
    }

    const auto got = load_psms(paths.psms);
    const auto want =
        load_psms(hicops::RunPaths::under(oracle.run_dir).psms);
    std::size_t compared = 0, same_peptide = 0;
    double max_log10_delta = 0.0;
    std::uint32_t first_diff = 0;
    bool any_diff = false;
    for (const auto& [id, w] : want) {
        auto it = got.find(id);
        if (it == got.end()) {
            if (!any_diff) { first_diff = id; any_diff = true; }
            ++compared;
            continue;
        }
        ++compared;
        if (it->second.peptide == w.peptide && it->second.mods == w.mods) {
            ++same_peptide;
        } else if (!any_diff) {
            first_diff = id;
            any_diff = true;
        }
        if (w.e_value > 0 && it->second.e_value > 0)
            max_log10_delta =
                std::max(max_log10_delta, std::abs(std::log10(w.e_value) -
                                                   std::log10(it->second.e_value)));
    }
    const double identity =
        compared ? static_cast<double>(same_peptide) /
                       static_cast<double>(compared)
                 : 1.0;
    std::cout << "compared=" << compared << " identity=" << identity
              << " max_log10_evalue_delta=" << max_log10_delta << '\n';
    const bool pass = identity >= 0.995;
    if (!pass && any_diff)
        std::cout << "first differing spectrum_id=" << first_diff << '\n';
    std::cout << "verify: " << (pass ? "PASS" : "FAIL") << '\n';
    return pass ? 0 : 1;
}

int cmd_report(const std::string& run_dir) {
    const auto paths = hicops::RunPaths::under(run_dir);
    const auto timings = hicops::load_timings(paths.metrics);
    if (timings.empty())
        throw std::runtime_error("no timing data under " + run_dir);
    std::cout << hicops::format_report(hicops::compute_overheads(timings));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-worker peptide database search engine"};
    app.require_subcommand(1);

    ConfigArgs run_args, build_args, pre_args, search_args, asm_args,
        verify_args;

    auto* build = app.add_subcommand("build-db",
                                     "digest FASTA and write partition manifests");
    add_config_options(build, build_args);
    auto* pre = app.add_subcommand("preprocess",
                                   "preprocess MS2 spectra into batches");
    add_config_options(pre, pre_args);
    auto* search = app.add_subcommand("search",
                                      "run the partial search over existing "
                                      "partitions and batches");
    add_config_options(search, search_args);
    auto* assemble = app.add_subcommand("assemble",
                                        "assemble results and write PSMs");
    add_config_options(assemble, asm_args);
    auto* run = app.add_subcommand("run", "end-to-end four-superstep run");
    add_config_options(run, run_args);

    std::string map_spec;
    std::uint64_t map_db_size = 0;
    int map_p = 1;
    std::uint64_t map_max_entries = 48000000;
    auto* map_cmd = app.add_subcommand("map", "derive the per-node task layout");
    map_cmd->add_option("--spec", map_spec, "cluster spec file")->required();
    map_cmd->add_option("--database-size", map_db_size, "database entry count")
        ->required();
    map_cmd->add_option("--partitions", map_p, "number of workers P");
    map_cmd->add_option("--max-entries-per-task", map_max_entries,
                        "split threshold");

    std::string verify_run_dir, report_run_dir;
    auto* verify = app.add_subcommand(
        "verify", "re-run the single-worker unsampled oracle and compare PSMs");
    verify->add_option("--run", verify_run_dir, "completed run directory")
        ->required();
    add_config_options(verify, verify_args);
    auto* report = app.add_subcommand("report", "overhead breakdown for a run");
    report->add_option("--run", report_run_dir, "completed run directory")
        ->required();

    std::string worker_root;
    int worker_rank = 0;
    auto* worker = app.add_subcommand("__worker");
    worker->group("");  // hidden
    worker->add_option("--run-root", worker_root)->required();
    worker->add_option("--rank", worker_rank)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*build) return cmd_build_db(build_config(build_args));
        if (*pre) return cmd_preprocess(build_config(pre_args));
        if (*search) return cmd_search(build_config(search_args));
        if (*assemble) return cmd_assemble(build_config(asm_args));
        if (*run) return cmd_run(build_config(run_args), argv[0]);
        if (*map_cmd)
            return cmd_map(map_spec, map_db_size, map_p, map_max_entries);
        if (*verify) return cmd_verify(verify_run_dir, verify_args);
        if (*report) return cmd_report(report_run_dir);
        if (*worker) return hicops::run_worker(worker_root, worker_rank);
    } catch (const hicops::ConfigError& e) {
        std::cerr << "config error";
        if (!e.key.empty()) std::cerr << " [" << e.key << "]";
        std::cerr << ": " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
