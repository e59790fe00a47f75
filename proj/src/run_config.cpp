#include "posewatch/run_config.hpp"

#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>

#include "posewatch/io_util.hpp"
#include "posewatch/rng.hpp"

namespace posewatch {

void scheme_architecture(Scheme s, int& n_heads, int& n_layers, int& ff_dim) {
    switch (s) {
        case Scheme::StPrp: n_heads = 12; n_layers = 4; ff_dim = 64; return;
        case Scheme::TPrp: n_heads = 8; n_layers = 8; ff_dim = 128; return;
        case Scheme::KsPrp: n_heads = 8; n_layers = 4; ff_dim = 128; return;
        case Scheme::FsPrp: n_heads = 12; n_layers = 6; ff_dim = 64; return;
    }
    throw std::invalid_argument("scheme_architecture: bad scheme");
}

uetd::UetdConfig RunConfig::resolved_uetd() const {
    const TokenShape shape = token_shape(scheme, beta, k);
    uetd::UetdConfig c;
    scheme_architecture(scheme.scheme, c.n_heads, c.n_layers, c.ff_dim);
    if (n_heads > 0) c.n_heads = n_heads;
    if (n_layers > 0) c.n_layers = n_layers;
    if (ff_dim > 0) c.ff_dim = ff_dim;
    c.token_dim = shape.dim;
    c.n_tokens = shape.n_tokens;
    if (model_dim > 0) {
        c.model_dim = model_dim;
    } else {
        // Smallest even multiple of n_heads that fits the scheme's full
        // token dimension. Sized for the with-relative layout either way, so
        // the relative-pose ablation compares equal-capacity models.
        const TokenShape full = token_shape({scheme.scheme, true}, beta, k);
        int m = ((full.dim + c.n_heads - 1) / c.n_heads) * c.n_heads;
        while (m % 2 != 0) m += c.n_heads;
        c.model_dim = m;
    }
    c.dropout = dropout;
    return c;
}

uetd::TrainConfig RunConfig::resolved_train(uetd::Branch branch) const {
    uetd::TrainConfig tc = branch == uetd::Branch::Ctd ? train_ctd : train_ftd;
    tc.seed = Rng::mix(seed, branch == uetd::Branch::Ctd ? 0xc7d : 0xf7d);
    return tc;
}

void RunConfig::validate() const {
    if (beta < 2 || beta % 2 != 0)
        throw std::invalid_argument("config: beta must be even and >= 2 (the tokenizer splits the "
                                    "window in half and scores attach to t0 + beta/2)");
    if (k < 1) throw std::invalid_argument("config: k must be >= 1");
    if (stride < 1 || train_stride < 1 || pair_stride < 1)
        throw std::invalid_argument("config: strides must be >= 1");
    if (dump_limit < 1) throw std::invalid_argument("config: dump_limit must be >= 1");
    resolved_uetd().validate();
    resolved_train(uetd::Branch::Ctd).validate();
    resolved_train(uetd::Branch::Ftd).validate();
}

namespace {

std::string fmt_double(double v) {
    // Shortest representation that parses back to the same double.
    char buf[40];
    for (int prec = 1; prec <= 16; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::stod(buf) == v) return buf;
    }
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fill_name(FillPolicy f) { return f == FillPolicy::MinObserved ? "min_observed" : "zero"; }

FillPolicy fill_from_name(const std::string& s) {
    if (s == "min_observed") return FillPolicy::MinObserved;
    if (s == "zero") return FillPolicy::Zero;
    throw std::invalid_argument("config: unknown fill policy: " + s);
}

void serialize_train(std::ostringstream& out, const char* section, const uetd::TrainConfig& tc) {
    out << "[" << section << "]\n"
        << "learning_rate = " << fmt_double(tc.learning_rate) << "\n"
        << "batch_size = " << tc.batch_size << "\n"
        << "epochs = " << tc.epochs << "\n"
        << "weight_decay = " << fmt_double(tc.weight_decay) << "\n"
        << "dropout = " << fmt_double(tc.dropout) << "\n"
        << "threads = " << tc.threads << "\n"
        << "grad_chunks = " << tc.grad_chunks << "\n";
}

}  // namespace

std::string RunConfig::serialize() const {
    std::ostringstream out;
    out << "# posewatch run configuration\n"
        << "seed = " << seed << "\n"
        << "scheme = \"" << scheme_name(scheme.scheme) << "\"\n"
        << "use_relative = " << (scheme.use_relative ? "true" : "false") << "\n"
        << "beta = " << beta << "\n"
        << "k = " << k << "\n"
        << "stride = " << stride << "\n"
        << "train_stride = " << train_stride << "\n"
        << "pair_stride = " << pair_stride << "\n"
        << "dump_limit = " << dump_limit << "\n"
        << "fill = \"" << fill_name(fill) << "\"\n\n"
        << "[model]\n"
        << "n_heads = " << n_heads << "\n"
        << "n_layers = " << n_layers << "\n"
        << "ff_dim = " << ff_dim << "\n"
        << "model_dim = " << model_dim << "\n"
        << "dropout = " << fmt_double(dropout) << "\n\n";
    serialize_train(out, "train_ctd", train_ctd);
    out << "\n";
    serialize_train(out, "train_ftd", train_ftd);
    out << "\n[paths]\n"
        << "poses_train = \"" << paths.poses_train << "\"\n"
        << "poses_test = \"" << paths.poses_test << "\"\n"
        << "labels_train = \"" << paths.labels_train << "\"\n"
        << "labels_test = \"" << paths.labels_test << "\"\n"
        << "checkpoint_ctd = \"" << paths.checkpoint_ctd << "\"\n"
        << "checkpoint = \"" << paths.checkpoint << "\"\n"
        << "scores = \"" << paths.scores << "\"\n"
        << "report = \"" << paths.report << "\"\n"
        << "out_dir = \"" << paths.out_dir << "\"\n\n"
        << "[synth]\n"
        << "train_videos = " << synth.train_videos << "\n"
        << "test_videos = " << synth.test_videos << "\n"
        << "persons_per_video = " << synth.persons_per_video << "\n"
        << "n_frames = " << synth.n_frames << "\n";
    return out.str();
}

std::string RunConfig::fingerprint() const {
    const std::string s = serialize();
    return to_hex(fnv1a(s.data(), s.size()));
}

namespace {

std::string strip(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& s, const std::string& where) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
    if (!s.empty() && s.front() == '"')
        throw std::runtime_error(where + ": unterminated string: " + s);
    return s;
}

bool parse_bool(const std::string& s, const std::string& where) {
    if (s == "true") return true;
    if (s == "false") return false;
    throw std::runtime_error(where + ": expected true/false, got: " + s);
}

}  // namespace

RunConfig parse_run_config_text(const std::string& text, const std::string& origin) {
    RunConfig c;
    std::istringstream in(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string where = origin + ":" + std::to_string(line_no);
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = strip(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw std::runtime_error(where + ": bad section header");
            section = line.substr(1, line.size() - 2);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw std::runtime_error(where + ": expected key = value");
        const std::string key = strip(line.substr(0, eq));
        const std::string raw = strip(line.substr(eq + 1));
        const std::string val = unquote(raw, where);

        try {
            if (section.empty()) {
                if (key == "seed") c.seed = std::stoull(val);
                else if (key == "scheme") c.scheme.scheme = scheme_from_name(val);
                else if (key == "use_relative") c.scheme.use_relative = parse_bool(val, where);
                else if (key == "beta") c.beta = std::stoi(val);
                else if (key == "k") c.k = std::stoi(val);
                else if (key == "stride") c.stride = std::stoi(val);
                else if (key == "train_stride") c.train_stride = std::stoi(val);
                else if (key == "pair_stride") c.pair_stride = std::stoi(val);
                else if (key == "dump_limit") c.dump_limit = std::stoi(val);
                else if (key == "fill") c.fill = fill_from_name(val);
                else throw std::runtime_error(where + ": unknown key: " + key);
            } else if (section == "model") {
                if (key == "n_heads") c.n_heads = std::stoi(val);
                else if (key == "n_layers") c.n_layers = std::stoi(val);
                else if (key == "ff_dim") c.ff_dim = std::stoi(val);
                else if (key == "model_dim") c.model_dim = std::stoi(val);
                else if (key == "dropout") c.dropout = std::stod(val);
                else throw std::runtime_error(where + ": unknown model key: " + key);
            } else if (section == "train_ctd" || section == "train_ftd") {
                uetd::TrainConfig& tc = section == "train_ctd" ? c.train_ctd : c.train_ftd;
                if (key == "learning_rate") tc.learning_rate = std::stod(val);
                else if (key == "batch_size") tc.batch_size = std::stoi(val);
                else if (key == "epochs") tc.epochs = std::stoi(val);
                else if (key == "weight_decay") tc.weight_decay = std::stod(val);
                else if (key == "dropout") tc.dropout = std::stod(val);
                else if (key == "threads") tc.threads = std::stoi(val);
                else if (key == "grad_chunks") tc.grad_chunks = std::stoi(val);
                else throw std::runtime_error(where + ": unknown train key: " + key);
            } else if (section == "paths") {
                if (key == "poses_train") c.paths.poses_train = val;
                else if (key == "poses_test") c.paths.poses_test = val;
                else if (key == "labels_train") c.paths.labels_train = val;
                else if (key == "labels_test") c.paths.labels_test = val;
                else if (key == "checkpoint_ctd") c.paths.checkpoint_ctd = val;
                else if (key == "checkpoint") c.paths.checkpoint = val;
                else if (key == "scores") c.paths.scores = val;
                else if (key == "report") c.paths.report = val;
                else if (key == "out_dir") c.paths.out_dir = val;
                else throw std::runtime_error(where + ": unknown path key: " + key);
            } else if (section == "synth") {
                if (key == "train_videos") c.synth.train_videos = std::stoi(val);
                else if (key == "test_videos") c.synth.test_videos = std::stoi(val);
                else if (key == "persons_per_video") c.synth.persons_per_video = std::stoi(val);
                else if (key == "n_frames") c.synth.n_frames = std::stoi(val);
                else throw std::runtime_error(where + ": unknown synth key: " + key);
            } else {
                throw std::runtime_error(where + ": unknown section: [" + section + "]");
            }
        } catch (const std::invalid_argument&) {
            throw std::runtime_error(where + ": bad value for " + key + ": " + val);
        } catch (const std::out_of_range&) {
            throw std::runtime_error(where + ": value out of range for " + key + ": " + val);
        }
    }
    return c;
}

RunConfig parse_run_config(const std::string& path) {
    return parse_run_config_text(read_file(path), path);
}

void write_run_config(const std::string& path, const RunConfig& config) {
    write_file_atomic(path, config.serialize());
}

RunConfig default_synth_run() {
    RunConfig c;
    c.seed = 7;
    c.paths.out_dir = "out/synth";
    c.train_stride = 12;
    c.pair_stride = 12;
    c.train_ctd.learning_rate = 7e-4;
    c.train_ctd.batch_size = 8;
    c.train_ctd.epochs = 14;
    c.train_ctd.dropout = 0.05;
    c.train_ctd.grad_chunks = 2;
    c.train_ftd.learning_rate = 7e-4;
    c.train_ftd.batch_size = 8;
    c.train_ftd.epochs = 14;
    c.train_ftd.dropout = 0.05;
    c.train_ftd.grad_chunks = 2;
    return c;
}

RunConfig default_ablate_run() {
    // Slightly lighter reconstruction training so the full 4-scheme x
    // relative grid stays inside a desk-scale time budget; same benchmark,
    // same scoring.
    RunConfig c = default_synth_run();
    c.paths.out_dir = "out/ablate";
    c.train_stride = 16;
    c.train_ctd.epochs = 12;
    c.train_ftd.epochs = 12;
    return c;
}

}  // namespace posewatch
