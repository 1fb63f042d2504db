#include "gyronet/hypformer.hpp"
#include "gyronet/text.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace gyronet::hypformer {

using optim::ParamKind;
using optim::Parameter;

namespace {

constexpr const char* kMagic = "GYRONET1";

void write_doubles(std::ostream& out, std::span<const double> values) {
    for (double v : values) {
        std::uint64_t bits = 0;
        std::memcpy(&bits, &v, sizeof bits);
        char bytes[8];
        for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
        out.write(bytes, 8);
    }
}

std::vector<double> read_doubles(std::istream& in, std::size_t count, const std::string& block) {
    std::vector<double> out(count);
    for (double& v : out) {
        unsigned char bytes[8];
        if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw ModelError("bundle: block '" + block + "' is truncated");
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
        std::memcpy(&v, &bits, sizeof v);
        if (!std::isfinite(v)) throw ModelError("bundle: block '" + block + "' holds a non-finite value");
    }
    return out;
}

void write_block(std::ostream& out, const std::string& name, diff::Shape shape, const char* kind, bool trainable,
                 std::span<const double> values) {
    out << "block " << name << ' ' << shape.rows << ' ' << shape.cols << ' ' << kind << ' ' << (trainable ? 1 : 0)
        << '\n';
    write_doubles(out, values);
    out << '\n';
}

std::string next_line(std::istream& in, const char* what) {
    std::string line;
    if (!std::getline(in, line)) throw ModelError(std::string("bundle: missing ") + what);
    return line;
}

std::vector<std::string> read_token_list(std::istream& in, const std::string& header, const char* what) {
    std::istringstream hs(header);
    std::string tag;
    std::size_t count = 0;
    if (!(hs >> tag >> count) || tag != what) throw ModelError(std::string("bundle: expected '") + what + " <count>'");
    std::vector<std::string> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(text::unescape_token(next_line(in, what)));
    return out;
}

}  // namespace

void write_bundle(std::ostream& out, const ModelBundle& bundle) {
    const Classifier& m = bundle.model;
    out << kMagic << '\n';
    for (const auto& [k, v] : m.config().to_map()) out << k << '=' << v << '\n';
    out << "optimizer.steps=" << bundle.optimizer.steps << '\n';
    out << "optimizer.cycle_start=" << bundle.optimizer.cycle_start << '\n';
    out << "labels " << bundle.labels.size() << '\n';
    for (const auto& l : bundle.labels) out << text::escape_token(l) << '\n';
    out << "vocab " << m.vocab().size() << '\n';
    for (const auto& t : m.vocab()) out << text::escape_token(t) << '\n';
    for (const Parameter& p : m.params()) {
        write_block(out, p.name, p.shape, p.kind == ParamKind::Poincare ? "poincare" : "euclidean", p.trainable, p.data);
    }
    for (const auto& [name, state] : bundle.optimizer.rms) {
        write_block(out, "opt." + name, {1, state.acc.size()}, "euclidean", false, state.acc);
    }
    out << "end\n";
}

ModelBundle read_bundle(std::istream& in) {
    if (next_line(in, "header") != kMagic) throw ModelError("bundle: bad magic (expected GYRONET1)");
    std::map<std::string, std::string> config;
    ModelBundle bundle;
    std::string line;
    for (;;) {
        line = next_line(in, "config block");
        const auto eq = line.find('=');
        if (eq == std::string::npos) break;
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        if (key == "optimizer.steps") {
            bundle.optimizer.steps = std::stoull(value);
        } else if (key == "optimizer.cycle_start") {
            bundle.optimizer.cycle_start = std::stoi(value);
        } else {
            config[key] = value;
        }
    }
    const TransformerConfig cfg = TransformerConfig::from_map(config);
    bundle.labels = read_token_list(in, line, "labels");
    auto vocab = read_token_list(in, next_line(in, "vocab"), "vocab");

    std::vector<Parameter> params;
    for (;;) {
        line = next_line(in, "end marker");
        if (line == "end") break;
        std::istringstream hs(line);
        std::string tag, name, kind;
        std::size_t rows = 0, cols = 0;
        int trainable = 0;
        if (!(hs >> tag >> name >> rows >> cols >> kind >> trainable) || tag != "block") {
            throw ModelError("bundle: malformed block header '" + line + "'");
        }
        auto values = read_doubles(in, rows * cols, name);
        if (in.get() != '\n') throw ModelError("bundle: block '" + name + "' has trailing bytes");
        if (name.rfind("opt.", 0) == 0) {
            bundle.optimizer.rms[name.substr(4)].acc = std::move(values);
            continue;
        }
        if (kind != "poincare" && kind != "euclidean") throw ModelError("bundle: unknown parameter kind '" + kind + "'");
        params.push_back({name, {rows, cols}, std::move(values),
                          kind == "poincare" ? ParamKind::Poincare : ParamKind::Euclidean, trainable != 0});
    }
    bundle.model = Classifier(cfg, std::move(vocab), std::move(params));
    return bundle;
}

void save_bundle(const std::string& path, const ModelBundle& bundle) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ModelError("cannot write " + path);
    write_bundle(out, bundle);
    if (!out) throw ModelError("failed writing " + path);
}

ModelBundle load_bundle(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ModelError("cannot read " + path);
    try {
        return read_bundle(in);
    } catch (const ModelError& e) {
        throw ModelError(path + ": " + e.what());
    }
}

}  // namespace gyronet::hypformer
