#include "hicops/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace hicops {

namespace {

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("invalid number for key '" + key + "': " + v, key);
    }
}

long to_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        long n = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return n;
    } catch (const std::exception&) {
        throw ConfigError("invalid integer for key '" + key + "': " + v, key);
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "on") return true;
    if (v == "false" || v == "0" || v == "off") return false;
    throw ConfigError("invalid boolean for key '" + key + "': " + v, key);
}

// "M:15.994915,S:79.96633"
PtmList parse_ptms(const std::string& key, const std::string& v, bool fixed) {
    PtmList out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        auto colon = item.find(':');
        if (colon != 1)
            throw ConfigError("ptm entry must be <letter>:<delta>: " + item, key);
        out.push_back({item[0], to_double(key, item.substr(2)), fixed});
    }
    return out;
}

std::string ptms_to_string(const PtmList& ptms, bool fixed) {
    std::string s;
    for (const auto& p : ptms) {
        if (p.is_fixed != fixed) continue;
        if (!s.empty()) s += ',';
        char buf[48];
        std::snprintf(buf, sizeof(buf), "%c:%.6f", p.target_residue, p.delta_mass);
        s += buf;
    }
    return s;
}

}  // namespace

void SearchConfig::validate() const {
    if (!(delta_f > 0)) throw ConfigError("search.delta_f must be > 0", "search.delta_f");
    if (delta_m < 0) throw ConfigError("search.delta_m must be >= 0", "search.delta_m");
    if (sample_count <= 0 || sample_count > histogram_bins)
        throw ConfigError("search.sample_count out of range", "search.sample_count");
    if (top_m < 1) throw ConfigError("search.top_m must be >= 1", "search.top_m");
    if (batch_cap < 1) throw ConfigError("search.batch_cap must be >= 1", "search.batch_cap");
    if (histogram_bins < 1 || !(histogram_bin_width > 0))
        throw ConfigError("histogram shape invalid", "search.histogram_bins");
}

void DatabaseConfig::validate() const {
    if (min_len < 1 || max_len < min_len)
        throw ConfigError("db length range empty", "db.min_len");
    if (!(max_mass >= min_mass))
        throw ConfigError("db mass range empty", "db.min_mass");
    if (missed_cleavages < 0)
        throw ConfigError("db.missed_cleavages must be >= 0", "db.missed_cleavages");
    if (max_mods_per_peptide < 0)
        throw ConfigError("db.max_mods must be >= 0", "db.max_mods");
    // Fixed and variable sets must be disjoint per residue, and at most
    // one variable PTM per residue (the mod mask cannot distinguish two).
    for (const auto& a : ptms) {
        for (const auto& b : ptms) {
            if (&a == &b) continue;
            if (a.target_residue == b.target_residue) {
                if (a.is_fixed != b.is_fixed)
                    throw ConfigError("fixed and variable PTMs overlap on residue",
                                      "db.ptm");
                if (!a.is_fixed)
                    throw ConfigError("multiple variable PTMs on one residue",
                                      "db.ptm");
            }
        }
    }
}

void RunConfig::validate() const {
    db.validate();
    search.validate();
    if (partitions < 1) throw ConfigError("partitions must be >= 1", "partitions");
}

void RunConfig::set(const std::string& key, const std::string& value) {
    if (key == "partitions") partitions = static_cast<int>(to_int(key, value));
    else if (key == "fasta") fasta_path = value;
    else if (key == "ms2") {
        ms2_paths.clear();
        std::stringstream ss(value);
        std::string item;
        while (std::getline(ss, item, ',')) if (!item.empty()) ms2_paths.push_back(item);
    }
    else if (key == "run_dir") run_dir = value;
    else if (key == "fit") {
        if (value == "tail") fit = FitMethod::Tail;
        else if (value == "gumbel") fit = FitMethod::Gumbel;
        else throw ConfigError("fit must be 'tail' or 'gumbel'", key);
    }
    else if (key == "transport") {
        if (value == "inprocess") transport = TransportMode::InProcess;
        else if (value == "process") transport = TransportMode::Process;
        else throw ConfigError("transport must be 'inprocess' or 'process'", key);
    }
    else if (key == "verbose") verbose = to_bool(key, value);
    else if (key == "mapping.max_entries_per_task")
        max_entries_per_task = static_cast<std::uint64_t>(to_int(key, value));
    else if (key == "db.enzyme") db.enzyme = value;
    else if (key == "db.missed_cleavages") db.missed_cleavages = static_cast<int>(to_int(key, value));
    else if (key == "db.min_len") db.min_len = static_cast<int>(to_int(key, value));
    else if (key == "db.max_len") db.max_len = static_cast<int>(to_int(key, value));
    else if (key == "db.min_mass") db.min_mass = to_double(key, value);
    else if (key == "db.max_mass") db.max_mass = to_double(key, value);
    else if (key == "db.max_mods") db.max_mods_per_peptide = static_cast<int>(to_int(key, value));
    else if (key == "db.random_scatter") db.random_scatter = to_bool(key, value);
    else if (key == "db.scatter_seed") db.scatter_seed = static_cast<std::uint64_t>(to_int(key, value));
    else if (key == "ptm.variable") {
        auto v = parse_ptms(key, value, false);
        std::erase_if(db.ptms, [](const PtmSpec& p) { return !p.is_fixed; });
        db.ptms.insert(db.ptms.end(), v.begin(), v.end());
    }
    else if (key == "ptm.fixed") {
        auto v = parse_ptms(key, value, true);
        std::erase_if(db.ptms, [](const PtmSpec& p) { return p.is_fixed; });
        db.ptms.insert(db.ptms.end(), v.begin(), v.end());
    }
    else if (key == "search.delta_m") search.delta_m = to_double(key, value);
    else if (key == "search.delta_f") search.delta_f = to_double(key, value);
    else if (key == "search.min_shared_peaks") search.min_shared_peaks = static_cast<int>(to_int(key, value));
    else if (key == "search.top_m") search.top_m = static_cast<int>(to_int(key, value));
    else if (key == "search.top_b_peaks") search.top_b_peaks = static_cast<int>(to_int(key, value));
    else if (key == "search.sample_count") search.sample_count = static_cast<int>(to_int(key, value));
    else if (key == "search.batch_cap") search.batch_cap = static_cast<int>(to_int(key, value));
    else if (key == "search.histogram_bins") search.histogram_bins = static_cast<int>(to_int(key, value));
    else if (key == "search.histogram_bin_width") search.histogram_bin_width = to_double(key, value);
    else if (key == "search.sampling") search.sampling_enabled = to_bool(key, value);
    else if (key == "sched.t_min") sched.t_min = to_double(key, value);
    else if (key == "sched.t_max") sched.t_max = to_double(key, value);
    else if (key == "sched.alpha") sched.alpha = to_double(key, value);
    else if (key == "sched.beta") sched.beta = to_double(key, value);
    else if (key == "sched.buffers") sched.buffers = static_cast<int>(to_int(key, value));
    else if (key == "sched.threads") sched.threads = static_cast<int>(to_int(key, value));
    else throw ConfigError("unknown config key: " + key, key);
}

void RunConfig::apply_file(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open config file: " + file.string());
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        // trim
        auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        auto e = line.find_last_not_of(" \t\r");
        line = line.substr(b, e - b + 1);
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) +
                              " is not key=value: " + line);
        set(line.substr(0, eq), line.substr(eq + 1));
    }
}

RunConfig RunConfig::load(const std::filesystem::path& file) {
    RunConfig c;
    c.apply_file(file);
    return c;
}

std::string RunConfig::serialize() const {
    std::ostringstream os;
    auto kv = [&](const char* k, const auto& v) { os << k << '=' << v << '\n'; };
    kv("partitions", partitions);
    kv("fasta", fasta_path);
    {
        std::string ms2;
        for (const auto& p : ms2_paths) {
            if (!ms2.empty()) ms2 += ',';
            ms2 += p;
        }
        kv("ms2", ms2);
    }
    kv("run_dir", run_dir);
    kv("fit", fit == FitMethod::Tail ? "tail" : "gumbel");
    kv("transport", transport == TransportMode::InProcess ? "inprocess" : "process");
    kv("verbose", verbose ? "true" : "false");
    kv("mapping.max_entries_per_task", max_entries_per_task);
    kv("db.enzyme", db.enzyme);
    kv("db.missed_cleavages", db.missed_cleavages);
    kv("db.min_len", db.min_len);
    kv("db.max_len", db.max_len);
    kv("db.min_mass", db.min_mass);
    kv("db.max_mass", db.max_mass);
    kv("db.max_mods", db.max_mods_per_peptide);
    kv("db.random_scatter", db.random_scatter ? "true" : "false");
    kv("db.scatter_seed", db.scatter_seed);
    kv("ptm.variable", ptms_to_string(db.ptms, false));
    kv("ptm.fixed", ptms_to_string(db.ptms, true));
    kv("search.delta_m", search.delta_m);
    kv("search.delta_f", search.delta_f);
    kv("search.min_shared_peaks", search.min_shared_peaks);
    kv("search.top_m", search.top_m);
    kv("search.top_b_peaks", search.top_b_peaks);
    kv("search.sample_count", search.sample_count);
    kv("search.batch_cap", search.batch_cap);
    kv("search.histogram_bins", search.histogram_bins);
    kv("search.histogram_bin_width", search.histogram_bin_width);
    kv("search.sampling", search.sampling_enabled ? "true" : "false");
    kv("sched.t_min", sched.t_min);
    kv("sched.t_max", sched.t_max);
    kv("sched.alpha", sched.alpha);
    kv("sched.beta", sched.beta);
    kv("sched.buffers", sched.buffers);
    kv("sched.threads", sched.threads);
    return os.str();
}

}  // namespace hicops
