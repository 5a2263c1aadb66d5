#include "dime/cli.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "dime/deepalign.hpp"
#include "dime/evalkit.hpp"
#include "dime/metaprox.hpp"
#include "dime/netcore.hpp"
#include "dime/rng.hpp"
#include "dime/synthgen.hpp"

namespace dime::cli {

namespace fs = std::filesystem;
using nlohmann::json;

const std::string& Config::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end())
        fail(ErrorKind::bad_argument, "missing required config key '" + key + "'");
    return it->second;
}

std::string Config::get_or(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
    fail(ErrorKind::bad_argument, "bad value '" + value + "' for config key '" + key + "'");
}

template <typename T, typename Parse>
T parse_checked(const std::string& key, const std::string& value, Parse parse) {
    try {
        std::size_t pos = 0;
        T v = parse(value, &pos);
        if (pos != value.size()) bad_value(key, value);
        return v;
    } catch (const Error&) {
        throw;
    } catch (const std::exception&) {
        bad_value(key, value);
    }
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(s);
    while (std::getline(ss, cur, ',')) {
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

}  // namespace

double Config::get_double(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    return parse_checked<double>(key, get(key), [](const std::string& v, std::size_t* p) {
        return std::stod(v, p);
    });
}

int Config::get_int(const std::string& key, int fallback) const {
    if (!has(key)) return fallback;
    return parse_checked<int>(key, get(key), [](const std::string& v, std::size_t* p) {
        return std::stoi(v, p);
    });
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    return parse_checked<std::uint64_t>(key, get(key), [](const std::string& v, std::size_t* p) {
        return static_cast<std::uint64_t>(std::stoull(v, p));
    });
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string& v = get(key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    bad_value(key, v);
}

std::vector<double> Config::get_double_list(const std::string& key,
                                            const std::string& fallback) const {
    std::vector<double> out;
    for (const auto& item : split_list(get_or(key, fallback)))
        out.push_back(parse_checked<double>(key, item, [](const std::string& v, std::size_t* p) {
            return std::stod(v, p);
        }));
    return out;
}

std::vector<int> Config::get_int_list(const std::string& key, const std::string& fallback) const {
    std::vector<int> out;
    for (const auto& item : split_list(get_or(key, fallback)))
        out.push_back(parse_checked<int>(key, item, [](const std::string& v, std::size_t* p) {
            return std::stoi(v, p);
        }));
    return out;
}

Config load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::io, "cannot open config '" + path + "'");
    Config cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            fail(ErrorKind::parse,
                 path + ":" + std::to_string(line_no) + ": expected key=value");
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        if (key.empty())
            fail(ErrorKind::parse, path + ":" + std::to_string(line_no) + ": empty key");
        cfg.set(key, trim(line.substr(eq + 1)));
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// Manifest plumbing.

namespace {

std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::io, "cannot open '" + path + "' for digest");
    std::ostringstream buf;
    buf << in.rdbuf();
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(rng::fnv1a64(buf.str())));
    return hex;
}

class StageTimer {
public:
    void start(const std::string& stage) {
        flush();
        current_ = stage;
        begin_ = std::chrono::steady_clock::now();
    }
    json finish() {
        flush();
        return timings_;
    }

private:
    void flush() {
        if (current_.empty()) return;
        const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - begin_)
                            .count();
        timings_[current_] = ms;
        current_.clear();
    }
    std::string current_;
    std::chrono::steady_clock::time_point begin_;
    json timings_ = json::object();
};

struct ManifestWriter {
    std::string command;
    Config config;
    std::string out_dir;
    json inputs = json::object();
    std::vector<std::string> outputs;
    StageTimer timer;

    void add_input(const std::string& name, const std::string& path) {
        inputs[name] = {{"path", path}, {"fnv1a64", file_digest(path)}};
    }

    std::string write() {
        json m;
        m["tool"] = "dime";
        m["version"] = kToolVersion;
        m["command"] = command;
        m["out_dir"] = out_dir;
        json cfg = json::object();
        for (const auto& [k, v] : config.values()) cfg[k] = v;
        m["config"] = cfg;
        m["inputs"] = inputs;
        m["outputs"] = outputs;
        m["timings_ms"] = timer.finish();
        const std::string path = (fs::path(out_dir) / "manifest.json").string();
        std::ofstream out(path, std::ios::binary);
        if (!out) fail(ErrorKind::io, "cannot write '" + path + "'");
        out << m.dump(2) << "\n";
        outputs.push_back(path);
        return path;
    }
};

void reject_unknown_keys(const Config& cfg, const std::set<std::string>& known,
                         const std::string& command) {
    for (const auto& [key, value] : cfg.values()) {
        if (!known.count(key))
            fail(ErrorKind::bad_argument,
                 "unknown config key '" + key + "' for command '" + command + "'");
    }
}

std::string write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::io, "cannot write '" + path + "'");
    out << text;
    return path;
}

// Shared hyperparameter block for embed/eval commands.
const std::set<std::string> kModelKeys = {
    "alpha", "beta",  "gamma",        "epochs", "batch",       "lr",
    "dim",   "widths", "fusion-width", "paths",  "anchor-rows-only"};

std::string compact(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

void fill_default(Config& cfg, const std::string& key, const std::string& value) {
    if (!cfg.has(key)) cfg.set(key, value);
}

// The manifest records every resolved value, so defaults are folded into the
// config before the command runs.
void fill_model_defaults(Config& cfg) {
    const deepalign::TrainConfig tc;
    fill_default(cfg, "alpha", compact(tc.alpha));
    fill_default(cfg, "beta", compact(tc.beta));
    fill_default(cfg, "gamma", compact(tc.gamma));
    fill_default(cfg, "epochs", std::to_string(tc.epochs));
    fill_default(cfg, "batch", std::to_string(tc.batch));
    fill_default(cfg, "lr", compact(tc.learning_rate));
    fill_default(cfg, "dim", "50");
    fill_default(cfg, "widths", "500,50");
    fill_default(cfg, "fusion-width", "50");
    fill_default(cfg, "paths", "0,1,2,3,4,5,6,7");
    fill_default(cfg, "anchor-rows-only", "false");
    fill_default(cfg, "seed", "0");
}

deepalign::TrainConfig train_config_from(const Config& cfg, std::uint64_t seed) {
    deepalign::TrainConfig tc;
    tc.alpha = cfg.get_double("alpha", tc.alpha);
    tc.beta = cfg.get_double("beta", tc.beta);
    tc.gamma = cfg.get_double("gamma", tc.gamma);
    tc.epochs = cfg.get_int("epochs", tc.epochs);
    tc.batch = cfg.get_int("batch", tc.batch);
    tc.learning_rate = cfg.get_double("lr", tc.learning_rate);
    tc.anchor_rows_only = cfg.get_bool("anchor-rows-only", false);
    tc.seed = seed;
    return tc;
}

deepalign::ArchitectureSpec arch_from(const Config& cfg) {
    deepalign::ArchitectureSpec arch;
    const auto widths = cfg.get_int_list("widths", "500,50");
    arch.encoder_widths = widths;
    arch.fusion_width = cfg.get_int("fusion-width", 50);
    const int d = cfg.get_int("dim", 50);
    arch.embed_dim = {d, d};
    if (cfg.has("paths")) {
        arch.active_paths.fill(false);
        for (int k : cfg.get_int_list("paths", "")) {
            if (k < 0 || k >= deepalign::kNumPaths)
                fail(ErrorKind::bad_argument, "path id out of range: " + std::to_string(k));
            arch.active_paths[k] = true;
        }
    }
    return arch;
}

char const* kLambdaFormat = "%.2f";

std::string format_double(const char* fmt, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), fmt, v);
    return buf;
}

// One metrics CSV row per (method, metric, grid point).
struct MetricRow {
    std::string method;
    std::string metric;
    double lambda;
    int param;  // theta or k
    double mean;
    double stddev;
    int n_runs;
};

std::string metrics_csv(const std::string& param_name, const std::vector<MetricRow>& rows) {
    std::string out = "method,metric,lambda," + param_name + ",mean,std,n_runs\n";
    for (const auto& r : rows) {
        out += r.method + "," + r.metric + "," + format_double(kLambdaFormat, r.lambda) + "," +
               std::to_string(r.param) + "," + format_double("%.6f", r.mean) + "," +
               format_double("%.6f", r.stddev) + "," + std::to_string(r.n_runs) + "\n";
    }
    return out;
}

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
    threads = std::max(1, std::min(threads, count));
    if (threads == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&]() {
            while (true) {
                const int i = next.fetch_add(1);
                if (i >= count) return;
                fn(i);
            }
        });
    for (auto& th : pool) th.join();
}

}  // namespace

// ---------------------------------------------------------------------------
// Commands.

std::vector<std::string> cmd_generate(const Config& raw_cfg, const std::string& out_dir) {
    reject_unknown_keys(raw_cfg,
                        {"users", "communities", "intra", "inter", "posts-per-user",
                         "vocabulary", "words-per-post", "locations", "skew",
                         "anchor-fraction", "emergence", "seed"},
                        "generate");
    Config cfg = raw_cfg;
    {
        const synthgen::SynthConfig def;
        fill_default(cfg, "users", std::to_string(def.users));
        fill_default(cfg, "communities", std::to_string(def.communities));
        fill_default(cfg, "intra", compact(def.intra_p));
        fill_default(cfg, "inter", compact(def.inter_p));
        fill_default(cfg, "posts-per-user", compact(def.posts_per_user));
        fill_default(cfg, "vocabulary", std::to_string(def.vocabulary));
        fill_default(cfg, "words-per-post", std::to_string(def.words_per_post));
        fill_default(cfg, "locations", std::to_string(def.locations));
        fill_default(cfg, "skew", compact(def.attribute_skew));
        fill_default(cfg, "anchor-fraction", compact(def.anchor_fraction));
        fill_default(cfg, "emergence", compact(def.emergence));
        fill_default(cfg, "seed", std::to_string(def.seed));
    }
    ManifestWriter manifest{.command = "generate", .config = cfg, .out_dir = out_dir};
    fs::create_directories(out_dir);

    synthgen::SynthConfig sc;
    sc.users = cfg.get_int("users", sc.users);
    sc.communities = cfg.get_int("communities", sc.communities);
    sc.intra_p = cfg.get_double("intra", sc.intra_p);
    sc.inter_p = cfg.get_double("inter", sc.inter_p);
    sc.posts_per_user = cfg.get_double("posts-per-user", sc.posts_per_user);
    sc.vocabulary = cfg.get_int("vocabulary", sc.vocabulary);
    sc.words_per_post = cfg.get_int("words-per-post", sc.words_per_post);
    sc.locations = cfg.get_int("locations", sc.locations);
    sc.attribute_skew = cfg.get_double("skew", sc.attribute_skew);
    sc.anchor_fraction = cfg.get_double("anchor-fraction", sc.anchor_fraction);
    sc.emergence = cfg.get_double("emergence", sc.emergence);
    sc.seed = cfg.get_u64("seed", sc.seed);

    manifest.timer.start("generate");
    const auto result = synthgen::generate_pair(sc);
    manifest.timer.start("write");
    const auto files = synthgen::write_files(result, out_dir);
    manifest.outputs = {files.emerging_path, files.mature_path, files.anchors_path,
                        files.labels_path};
    manifest.write();
    return manifest.outputs;
}

std::vector<std::string> cmd_proximity(const Config& cfg, const std::string& out_dir) {
    reject_unknown_keys(cfg, {"network", "paths", "threads", "self-norms", "out", "seed"},
                        "proximity");
    ManifestWriter manifest{.command = "proximity", .config = cfg, .out_dir = out_dir};
    fs::create_directories(out_dir);
    const std::string net_path = cfg.get("network");
    manifest.add_input("network", net_path);

    manifest.timer.start("load");
    const auto net = netcore::load_network(net_path);
    metaprox::ProxOptions opts;
    opts.threads = cfg.get_int("threads", 1);
    opts.self_in_norms = cfg.get_bool("self-norms", false);

    manifest.timer.start("proximity");
    auto bundle = metaprox::proximity_bundle(net, opts);
    if (cfg.has("paths")) {
        std::set<int> wanted;
        for (int k : cfg.get_int_list("paths", "")) wanted.insert(k);
        std::vector<metaprox::ProximityMatrix> selected;
        for (auto& pm : bundle)
            if (wanted.count(pm.path_id)) selected.push_back(std::move(pm));
        bundle = std::move(selected);
    }
    manifest.timer.start("write");
    const std::string out_path =
        (fs::path(out_dir) / cfg.get_or("out", "proximity.bin")).string();
    metaprox::save_bundle(out_path, bundle);
    manifest.outputs = {out_path};
    manifest.write();
    return manifest.outputs;
}

namespace {

struct LoadedPair {
    netcore::AlignedPair pair;
    bool has_mature = false;
};

LoadedPair load_pair(const Config& cfg, ManifestWriter& manifest, bool need_mature) {
    LoadedPair lp;
    const std::string g1 = cfg.get("g1");
    manifest.add_input("g1", g1);
    auto emerging = netcore::load_network(g1);
    if (need_mature || cfg.has("g2")) {
        const std::string g2 = cfg.get("g2");
        const std::string anchors = cfg.get("anchors");
        manifest.add_input("g2", g2);
        manifest.add_input("anchors", anchors);
        auto mature = netcore::load_network(g2);
        lp.pair = netcore::load_anchors(anchors, std::move(emerging), std::move(mature));
        lp.has_mature = true;
    } else {
        lp.pair.emerging = std::move(emerging);
    }
    return lp;
}

}  // namespace

std::vector<std::string> cmd_embed(const Config& raw_cfg, const std::string& out_dir) {
    std::set<std::string> known = {"g1", "g2", "anchors", "bundle1", "bundle2",
                                   "mode", "seed", "threads"};
    known.insert(kModelKeys.begin(), kModelKeys.end());
    reject_unknown_keys(raw_cfg, known, "embed");
    Config cfg = raw_cfg;
    fill_model_defaults(cfg);
    fill_default(cfg, "mode", "dime");
    ManifestWriter manifest{.command = "embed", .config = cfg, .out_dir = out_dir};
    fs::create_directories(out_dir);

    const std::string mode = cfg.get_or("mode", "dime");
    const auto method = evalkit::parse_method(mode);
    const std::uint64_t seed = cfg.get_u64("seed", 0);

    manifest.timer.start("load");
    LoadedPair lp = load_pair(cfg, manifest, method == evalkit::Method::dime);

    deepalign::ArchitectureSpec arch = arch_from(cfg);
    if (method == evalkit::Method::auto_baseline) {
        arch.active_paths.fill(false);
        arch.active_paths[0] = true;
    }
    deepalign::TrainConfig tc = train_config_from(cfg, rng::derive_seed(seed, "embed"));
    metaprox::ProxOptions popts;
    popts.threads = cfg.get_int("threads", 1);

    manifest.timer.start("proximity");
    std::vector<metaprox::ProximityMatrix> bundle1, bundle2;
    if (cfg.has("bundle1")) {
        manifest.add_input("bundle1", cfg.get("bundle1"));
        bundle1 = metaprox::load_bundle(cfg.get("bundle1"));
    } else {
        bundle1 = metaprox::proximity_bundle(lp.pair.emerging, popts);
    }
    if (method == evalkit::Method::dime) {
        if (cfg.has("bundle2")) {
            manifest.add_input("bundle2", cfg.get("bundle2"));
            bundle2 = metaprox::load_bundle(cfg.get("bundle2"));
        } else {
            bundle2 = metaprox::proximity_bundle(lp.pair.mature, popts);
        }
    }

    manifest.timer.start("train");
    deepalign::TrainResult result;
    if (method == evalkit::Method::dime) {
        result = deepalign::train(lp.pair, bundle1, bundle2, arch, tc);
    } else {
        result = deepalign::embed_single(lp.pair.emerging, bundle1, arch, tc);
    }

    manifest.timer.start("write");
    const std::string z1_path = (fs::path(out_dir) / "z1.csv").string();
    deepalign::write_embeddings_csv(z1_path, lp.pair.emerging.user_ids, result.embeddings[0]);
    manifest.outputs.push_back(z1_path);
    if (result.embeddings.size() > 1) {
        const std::string z2_path = (fs::path(out_dir) / "z2.csv").string();
        deepalign::write_embeddings_csv(z2_path, lp.pair.mature.user_ids, result.embeddings[1]);
        manifest.outputs.push_back(z2_path);
    }
    const std::string ckpt_path = (fs::path(out_dir) / "model.ckpt").string();
    deepalign::save_checkpoint(ckpt_path, result.params);
    manifest.outputs.push_back(ckpt_path);
    std::string trace = "epoch,loss\n";
    for (std::size_t e = 0; e < result.loss_trace.size(); ++e)
        trace += std::to_string(e + 1) + "," + format_double("%.9f", result.loss_trace[e]) + "\n";
    manifest.outputs.push_back(
        write_text_file((fs::path(out_dir) / "loss_trace.csv").string(), trace));
    manifest.write();
    return manifest.outputs;
}

namespace {

std::vector<std::string> run_eval(const Config& raw_cfg, const std::string& out_dir,
                                  bool link_mode) {
    std::set<std::string> known = {"g1",     "g2",    "anchors", "lambdas", "methods",
                                   "seed",   "threads"};
    if (link_mode)
        known.insert("thetas");
    else {
        known.insert("ks");
        known.insert("runs");
    }
    known.insert(kModelKeys.begin(), kModelKeys.end());
    reject_unknown_keys(raw_cfg, known, link_mode ? "eval link" : "eval community");
    Config cfg = raw_cfg;
    fill_model_defaults(cfg);
    fill_default(cfg, "lambdas", "1.0");
    fill_default(cfg, "methods", "dime,dime-sh,auto");
    if (link_mode) {
        fill_default(cfg, "thetas", "1");
    } else {
        fill_default(cfg, "ks", "10");
        fill_default(cfg, "runs", "5");
    }
    ManifestWriter manifest{.command = link_mode ? std::string("eval link")
                                                 : std::string("eval community"),
                            .config = cfg,
                            .out_dir = out_dir};
    fs::create_directories(out_dir);

    const std::uint64_t seed = cfg.get_u64("seed", 0);
    manifest.timer.start("load");
    LoadedPair lp = load_pair(cfg, manifest, true);

    std::vector<evalkit::Method> methods;
    for (const auto& name : split_list(cfg.get_or("methods", "dime,dime-sh,auto")))
        methods.push_back(evalkit::parse_method(name));
    const auto lambdas = cfg.get_double_list("lambdas", "1.0");
    const auto params = link_mode ? cfg.get_int_list("thetas", "1") : cfg.get_int_list("ks", "10");
    const int runs = link_mode ? 10 : cfg.get_int("runs", 5);

    struct Point {
        evalkit::Method method;
        double lambda;
        int param;
    };
    std::vector<Point> grid;
    for (const auto m : methods)
        for (const double l : lambdas)
            for (const int p : params) grid.push_back({m, l, p});

    const deepalign::ArchitectureSpec arch = arch_from(cfg);
    const deepalign::TrainConfig base_tc = train_config_from(cfg, 0);

    manifest.timer.start("eval");
    std::vector<evalkit::ExperimentResult> results(grid.size());
    const int threads = cfg.get_int("threads", 1);
    parallel_for(static_cast<int>(grid.size()), threads, [&](int i) {
        const Point& pt = grid[i];
        // grid-shape independent sub-seed: derived from the point itself
        const std::string tag = std::string(link_mode ? "eval.link." : "eval.community.") +
                                evalkit::method_name(pt.method) + "." +
                                format_double("%.4f", pt.lambda) + "." +
                                std::to_string(pt.param);
        const std::uint64_t point_seed = rng::derive_seed(seed, tag);
        deepalign::TrainConfig tc = base_tc;
        tc.seed = rng::derive_seed(point_seed, "train");
        if (link_mode) {
            results[i] = evalkit::run_link_experiment(lp.pair, arch, tc, pt.method, pt.lambda,
                                                      pt.param, point_seed);
        } else {
            results[i] = evalkit::run_community_experiment(lp.pair, arch, tc, pt.method,
                                                           pt.lambda, pt.param, runs,
                                                           point_seed);
        }
    });

    manifest.timer.start("write");
    std::vector<MetricRow> rows;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        for (const auto& col : results[i].metrics) {
            rows.push_back({evalkit::method_name(grid[i].method), col.name, grid[i].lambda,
                            grid[i].param, col.mean(), col.stddev(),
                            static_cast<int>(col.values.size())});
        }
    }
    const std::string csv_name = link_mode ? "link_metrics.csv" : "community_metrics.csv";
    const std::string csv_path = (fs::path(out_dir) / csv_name).string();
    write_text_file(csv_path, metrics_csv(link_mode ? "theta" : "k", rows));
    manifest.outputs = {csv_path};
    manifest.write();
    return manifest.outputs;
}

}  // namespace

std::vector<std::string> cmd_eval_link(const Config& cfg, const std::string& out_dir) {
    return run_eval(cfg, out_dir, true);
}

std::vector<std::string> cmd_eval_community(const Config& cfg, const std::string& out_dir) {
    return run_eval(cfg, out_dir, false);
}

std::vector<std::string> replay(const std::string& manifest_path, const std::string& out_dir) {
    std::ifstream in(manifest_path);
    if (!in) fail(ErrorKind::io, "cannot open manifest '" + manifest_path + "'");
    json m;
    try {
        in >> m;
    } catch (const json::exception& e) {
        fail(ErrorKind::parse, "bad manifest: " + std::string(e.what()));
    }
    Config cfg;
    for (const auto& [k, v] : m.at("config").items()) cfg.set(k, v.get<std::string>());
    const std::string command = m.at("command").get<std::string>();
    const std::string dir = out_dir.empty() ? m.at("out_dir").get<std::string>() : out_dir;
    if (command == "generate") return cmd_generate(cfg, dir);
    if (command == "proximity") return cmd_proximity(cfg, dir);
    if (command == "embed") return cmd_embed(cfg, dir);
    if (command == "eval link") return cmd_eval_link(cfg, dir);
    if (command == "eval community") return cmd_eval_community(cfg, dir);
    fail(ErrorKind::bad_argument, "manifest names unknown command '" + command + "'");
}

// ---------------------------------------------------------------------------
// argv front end.

namespace {

struct CommandLine {
    std::string config_path;
    std::string out_dir = "out";
    std::map<std::string, std::string> overrides;

    // config file first, flags on top
    Config resolve() const {
        Config cfg = config_path.empty() ? Config{} : load_config_file(config_path);
        for (const auto& [k, v] : overrides) cfg.set(k, v);
        return cfg;
    }
};

// every model/grid flag is registered as a string and validated by the
// Config getters, so file values and flag values go through the same checks
void add_config_flag(CLI::App* app, CommandLine& cl, const std::string& flag,
                     const std::string& key, const std::string& help) {
    app->add_option_function<std::string>(
        flag, [&cl, key](const std::string& v) { cl.overrides[key] = v; }, help);
}

void add_common(CLI::App* app, CommandLine& cl) {
    app->add_option("--config", cl.config_path, "key=value config file");
    app->add_option("--out-dir", cl.out_dir, "output directory");
    add_config_flag(app, cl, "--seed", "seed", "master seed");
    add_config_flag(app, cl, "--threads", "threads", "worker threads");
}

void add_model_flags(CLI::App* app, CommandLine& cl) {
    add_config_flag(app, cl, "--alpha", "alpha", "fusion-loss weight");
    add_config_flag(app, cl, "--beta", "beta", "regularization weight");
    add_config_flag(app, cl, "--gamma", "gamma", "nonzero-entry loss weight");
    add_config_flag(app, cl, "--epochs", "epochs", "training epochs");
    add_config_flag(app, cl, "--batch", "batch", "minibatch size");
    add_config_flag(app, cl, "--lr", "lr", "learning rate");
    add_config_flag(app, cl, "--dim", "dim", "embedding dimension");
    add_config_flag(app, cl, "--widths", "widths", "encoder widths, comma separated");
    add_config_flag(app, cl, "--fusion-width", "fusion-width", "fusion layer width");
    add_config_flag(app, cl, "--paths", "paths", "active meta paths, comma separated ids");
    add_config_flag(app, cl, "--anchor-rows-only", "anchor-rows-only",
                    "restrict fusion loss to anchor rows");
}

void add_pair_flags(CLI::App* app, CommandLine& cl) {
    add_config_flag(app, cl, "--g1", "g1", "emerging network file");
    add_config_flag(app, cl, "--g2", "g2", "mature network file");
    add_config_flag(app, cl, "--anchors", "anchors", "anchor links file");
}

void print_outputs(const std::vector<std::string>& files) {
    for (const auto& f : files) std::cout << f << "\n";
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"aligned-autoencoder network embedding"};
    app.require_subcommand(1);

    CommandLine gen_cl, prox_cl, embed_cl, link_cl, comm_cl;
    std::string replay_manifest, replay_out;

    auto* gen = app.add_subcommand("generate", "generate a synthetic aligned pair");
    add_common(gen, gen_cl);
    for (const char* key : {"users", "communities", "intra", "inter", "posts-per-user",
                            "vocabulary", "words-per-post", "locations", "skew",
                            "anchor-fraction", "emergence"})
        add_config_flag(gen, gen_cl, std::string("--") + key, key, key);

    auto* prox = app.add_subcommand("proximity", "compute meta-path proximity bundle");
    add_common(prox, prox_cl);
    add_config_flag(prox, prox_cl, "--network", "network", "edge-list-v1 network file");
    add_config_flag(prox, prox_cl, "--paths", "paths", "meta path ids to emit");
    add_config_flag(prox, prox_cl, "--self-norms", "self-norms",
                    "include self instances in normalization sums");
    add_config_flag(prox, prox_cl, "--out", "out", "bundle file name");

    auto* embed = app.add_subcommand("embed", "train embeddings");
    add_common(embed, embed_cl);
    add_pair_flags(embed, embed_cl);
    add_model_flags(embed, embed_cl);
    add_config_flag(embed, embed_cl, "--bundle1", "bundle1", "precomputed emerging bundle");
    add_config_flag(embed, embed_cl, "--bundle2", "bundle2", "precomputed mature bundle");
    add_config_flag(embed, embed_cl, "--mode", "mode", "dime | dime-sh | auto");

    auto* eval = app.add_subcommand("eval", "run evaluation protocols");
    eval->require_subcommand(1);
    auto* link = eval->add_subcommand("link", "supervised link prediction");
    add_common(link, link_cl);
    add_pair_flags(link, link_cl);
    add_model_flags(link, link_cl);
    add_config_flag(link, link_cl, "--lambdas", "lambdas", "sampling ratios, comma separated");
    add_config_flag(link, link_cl, "--thetas", "thetas", "negative:positive ratios");
    add_config_flag(link, link_cl, "--methods", "methods", "dime,dime-sh,auto");
    auto* comm = eval->add_subcommand("community", "unsupervised community detection");
    add_common(comm, comm_cl);
    add_pair_flags(comm, comm_cl);
    add_model_flags(comm, comm_cl);
    add_config_flag(comm, comm_cl, "--lambdas", "lambdas", "sampling ratios, comma separated");
    add_config_flag(comm, comm_cl, "--ks", "ks", "cluster counts, comma separated");
    add_config_flag(comm, comm_cl, "--runs", "runs", "repeats per grid point");
    add_config_flag(comm, comm_cl, "--methods", "methods", "dime,dime-sh,auto");

    auto* rep = app.add_subcommand("replay", "re-run a recorded manifest");
    rep->add_option("manifest", replay_manifest, "manifest.json path")->required();
    rep->add_option("--out-dir", replay_out, "override output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (gen->parsed()) print_outputs(cmd_generate(gen_cl.resolve(), gen_cl.out_dir));
        if (prox->parsed()) print_outputs(cmd_proximity(prox_cl.resolve(), prox_cl.out_dir));
        if (embed->parsed()) print_outputs(cmd_embed(embed_cl.resolve(), embed_cl.out_dir));
        if (eval->parsed()) {
            if (link->parsed()) print_outputs(cmd_eval_link(link_cl.resolve(), link_cl.out_dir));
            if (comm->parsed())
                print_outputs(cmd_eval_community(comm_cl.resolve(), comm_cl.out_dir));
        }
        if (rep->parsed()) print_outputs(replay(replay_manifest, replay_out));
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace dime::cli
