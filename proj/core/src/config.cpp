#include "avs/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "avs/errors.hpp"

namespace avs {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used == v.size()) return d;
    } catch (const std::exception&) {
    }
    throw ConfigError(key + ": expected a number, got '" + v + "'");
}

long long parse_int(const std::string& key, const std::string& v) {
    long long out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
        throw ConfigError(key + ": expected an integer, got '" + v + "'");
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

// Shortest text that parses back to the same double.
std::string fmt(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

struct Binding {
    std::string key;
    std::string help;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Binding int_key(std::string key, std::string help, T RunConfig::*section, int T::*field) {
    return {key, std::move(help),
            [=](RunConfig& c, const std::string& v) { (c.*section).*field = static_cast<int>(parse_int(key, v)); },
            [=](const RunConfig& c) { return std::to_string((c.*section).*field); }};
}

template <typename T>
Binding real_key(std::string key, std::string help, T RunConfig::*section, double T::*field) {
    return {key, std::move(help),
            [=](RunConfig& c, const std::string& v) { (c.*section).*field = parse_double(key, v); },
            [=](const RunConfig& c) { return fmt((c.*section).*field); }};
}

template <typename T>
Binding bool_key(std::string key, std::string help, T RunConfig::*section, bool T::*field) {
    return {key, std::move(help),
            [=](RunConfig& c, const std::string& v) { (c.*section).*field = parse_bool(key, v); },
            [=](const RunConfig& c) { return std::string((c.*section).*field ? "true" : "false"); }};
}

Binding path_key(std::string key, std::string help, std::filesystem::path DataConfig::*field) {
    return {key, std::move(help),
            [=](RunConfig& c, const std::string& v) { c.data.*field = v; },
            [=](const RunConfig& c) { return (c.data.*field).string(); }};
}

const std::vector<Binding>& bindings() {
    static const std::vector<Binding> table = [] {
        std::vector<Binding> b;
        b.push_back({"seed", "global seed for initialization, data order and splits",
                     [](RunConfig& c, const std::string& v) { c.seed = static_cast<std::uint64_t>(parse_int("seed", v)); },
                     [](const RunConfig& c) { return std::to_string(c.seed); }});

        using M = ModelConfig;
        b.push_back(int_key("model.fused_width", "C_av, fused feature width", &RunConfig::model, &M::fused_width));
        b.push_back(int_key("model.model_width", "D, query width", &RunConfig::model, &M::model_width));
        b.push_back(int_key("model.queries", "N_q, number of decoder queries", &RunConfig::model, &M::queries));
        b.push_back(int_key("model.heads", "attention heads", &RunConfig::model, &M::heads));
        b.push_back(int_key("model.encoder_layers", "L_enc", &RunConfig::model, &M::encoder_layers));
        b.push_back(int_key("model.decoder_layers", "L_dec", &RunConfig::model, &M::decoder_layers));
        b.push_back(int_key("model.ffn_width", "transformer feed-forward width", &RunConfig::model, &M::ffn_width));
        b.push_back(int_key("model.mask_channels", "C_m, mask feature width", &RunConfig::model, &M::mask_channels));
        b.push_back({"model.query_init", "audio | constant",
                     [](RunConfig& c, const std::string& v) {
                         if (v == "audio") c.model.query_init = fusion::QueryInit::kAudio;
                         else if (v == "constant") c.model.query_init = fusion::QueryInit::kConstant;
                         else throw ConfigError("model.query_init: expected audio or constant, got '" + v + "'");
                     },
                     [](const RunConfig& c) {
                         return std::string(c.model.query_init == fusion::QueryInit::kAudio ? "audio" : "constant");
                     }});
        b.push_back(bool_key("model.temporal_encoding", "include t in positional encodings", &RunConfig::model, &M::temporal_encoding));
        b.push_back(bool_key("model.audio_injection", "audio cross-attention in the pixel decoder", &RunConfig::model, &M::audio_injection));
        b.push_back({"model.mask_stride", "mask feature stride (fixed at 4)",
                     [](RunConfig&, const std::string& v) {
                         if (parse_int("model.mask_stride", v) != 4) throw ConfigError("model.mask_stride must be 4");
                     },
                     [](const RunConfig&) { return std::string("4"); }});
        b.push_back({"model.backbone_seed", "seed of the frozen toy backbones",
                     [](RunConfig& c, const std::string& v) {
                         c.model.backbone_seed = static_cast<std::uint64_t>(parse_int("model.backbone_seed", v));
                     },
                     [](const RunConfig& c) { return std::to_string(c.model.backbone_seed); }});
        b.push_back(real_key("model.threshold", "mask probability threshold at inference", &RunConfig::model, &M::threshold));

        using O = OptimConfig;
        b.push_back(real_key("optim.lr", "AdamW learning rate", &RunConfig::optim, &O::lr));
        b.push_back(real_key("optim.weight_decay", "decoupled weight decay", &RunConfig::optim, &O::weight_decay));
        b.push_back(real_key("optim.beta1", "AdamW beta1", &RunConfig::optim, &O::beta1));
        b.push_back(real_key("optim.beta2", "AdamW beta2", &RunConfig::optim, &O::beta2));
        b.push_back(real_key("optim.eps", "AdamW epsilon", &RunConfig::optim, &O::eps));
        b.push_back(int_key("optim.epochs", "passes over the training set", &RunConfig::optim, &O::epochs));
        b.push_back(int_key("optim.batch_size", "samples per step", &RunConfig::optim, &O::batch_size));
        b.push_back(int_key("optim.max_steps", "step cap, 0 for none", &RunConfig::optim, &O::max_steps));

        using L = objective::CostConfig;
        b.push_back(real_key("loss.lambda_dice", "dice weight", &RunConfig::loss, &L::lambda_dice));
        b.push_back(real_key("loss.lambda_focal", "focal weight", &RunConfig::loss, &L::lambda_focal));
        b.push_back(real_key("loss.lambda_sound", "sounding BCE weight", &RunConfig::loss, &L::lambda_sound));
        b.push_back(real_key("loss.focal_gamma", "focal gamma", &RunConfig::loss, &L::focal_gamma));
        b.push_back(real_key("loss.focal_alpha", "focal alpha", &RunConfig::loss, &L::focal_alpha));
        b.push_back(real_key("loss.dice_eps", "dice smoothing", &RunConfig::loss, &L::dice_eps));
        b.push_back(bool_key("loss.full_resolution", "dice and focal on logits upsampled to the mask size", &RunConfig::loss, &L::full_resolution));

        using S = encoders::SpectrogramConfig;
        b.push_back(int_key("audio.sample_rate_hz", "expected waveform rate", &RunConfig::audio, &S::sample_rate_hz));
        b.push_back(int_key("audio.n_mels", "mel bands", &RunConfig::audio, &S::n_mels));
        b.push_back(int_key("audio.frames_per_segment", "STFT frames per segment", &RunConfig::audio, &S::frames_per_segment));
        b.push_back(real_key("audio.segment_seconds", "segment length", &RunConfig::audio, &S::segment_seconds));
        b.push_back(real_key("audio.hop_seconds", "segment hop", &RunConfig::audio, &S::hop_seconds));
        b.push_back(real_key("audio.eps", "log offset", &RunConfig::audio, &S::eps));

        b.push_back(path_key("data.train_manifest", "training manifest", &DataConfig::train_manifest));
        b.push_back(path_key("data.eval_manifest", "evaluation manifest", &DataConfig::eval_manifest));
        b.push_back(path_key("data.output_dir", "run output directory", &DataConfig::output_dir));
        b.push_back({"data.classes", "training vocabulary, comma-separated (set by train)",
                     [](RunConfig& c, const std::string& v) { c.data.classes = v; },
                     [](const RunConfig& c) { return c.data.classes; }});
        b.push_back(real_key("data.test_fraction", "held-out share per class", &RunConfig::data, &DataConfig::test_fraction));

        b.push_back(real_key("eval.beta2", "F-measure beta squared", &RunConfig::eval, &EvalConfig::beta2));
        return b;
    }();
    return table;
}

const Binding& find_binding(const std::string& key) {
    for (const auto& b : bindings()) {
        if (b.key == key) return b;
    }
    throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

void RunConfig::validate() const {
    model.validate();
    loss.validate();
    if (optim.lr < 0.0 || optim.weight_decay < 0.0) throw ConfigError("optim.lr and optim.weight_decay must be >= 0");
    if (optim.batch_size < 1) throw ConfigError("optim.batch_size must be positive");
    if (optim.epochs < 0 || optim.max_steps < 0) throw ConfigError("optim.epochs and optim.max_steps must be >= 0");
    if (!(optim.beta1 >= 0.0 && optim.beta1 < 1.0 && optim.beta2 >= 0.0 && optim.beta2 < 1.0)) {
        throw ConfigError("optim betas must lie in [0, 1)");
    }
    if (!(data.test_fraction >= 0.0 && data.test_fraction < 1.0)) throw ConfigError("data.test_fraction must lie in [0, 1)");
    if (!(eval.beta2 > 0.0)) throw ConfigError("eval.beta2 must be positive");
}

std::vector<ConfigKey> config_keys() {
    const RunConfig defaults;
    std::vector<ConfigKey> out;
    for (const auto& b : bindings()) out.push_back({b.key, b.get(defaults), b.help});
    return out;
}

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
    find_binding(key).set(cfg, value);
}

std::string get_config_value(const RunConfig& cfg, const std::string& key) {
    return find_binding(key).get(cfg);
}

RunConfig parse_config(std::istream& in, RunConfig cfg) {
    std::string line;
    std::string section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto cut = line.find_first_of("#;");
        if (cut != std::string::npos) line.erase(cut);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ParseError("unterminated section header", lineno);
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected key = value", lineno);
        std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!section.empty()) key = section + "." + key;
        try {
            set_config_value(cfg, key, value);
        } catch (const ConfigError& e) {
            throw ParseError(e.what(), lineno);
        }
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    return parse_config(in, std::move(base));
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("override must be key=value: '" + assignment + "'");
    set_config_value(cfg, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

std::vector<std::string> split_classes(const std::string& list) {
    std::vector<std::string> out;
    std::stringstream in(list);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string join_classes(const std::vector<std::string>& classes) {
    std::string out;
    for (const auto& c : classes) {
        if (c.find_first_of(",#;") != std::string::npos) throw ConfigError("class name '" + c + "' cannot be stored");
        if (!out.empty()) out += ',';
        out += c;
    }
    return out;
}

std::string config_text(const RunConfig& cfg) {
    std::ostringstream out;
    for (const auto& b : bindings()) out << b.key << " = " << b.get(cfg) << '\n';
    return out.str();
}

}  // namespace avs
