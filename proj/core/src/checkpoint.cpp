#include "avs/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "avs/errors.hpp"

namespace avs {

namespace {

constexpr char kMagic[8] = {'A', 'V', 'S', 'C', 'K', 'P', 'T', '1'};

class Writer {
public:
    explicit Writer(std::ostream& out) : out_(out) {}
    void u32(std::uint32_t v) { le(v, 4); }
    void u64(std::uint64_t v) { le(v, 8); }
    void f32(float f) { u32(std::bit_cast<std::uint32_t>(f)); }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        out_.write(s.data(), static_cast<std::streamsize>(s.size()));
    }

private:
    void le(std::uint64_t v, int bytes) {
        char buf[8];
        for (int i = 0; i < bytes; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
        out_.write(buf, bytes);
    }
    std::ostream& out_;
};

class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}
    std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
    std::uint64_t u64() { return le(8); }
    float f32() { return std::bit_cast<float>(u32()); }
    std::string str() {
        const std::uint32_t n = u32();
        std::string s(n, '\0');
        read(s.data(), n);
        return s;
    }
    void read(char* dst, std::size_t n) {
        in_.read(dst, static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) throw IoError("checkpoint is truncated");
    }

private:
    std::uint64_t le(int bytes) {
        unsigned char buf[8];
        read(reinterpret_cast<char*>(buf), static_cast<std::size_t>(bytes));
        std::uint64_t v = 0;
        for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
        return v;
    }
    std::istream& in_;
};

}  // namespace

const Tensor* Checkpoint::find(const std::string& name) const {
    for (const auto& [n, t] : tensors) {
        if (n == name) return &t;
    }
    return nullptr;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint " + path.string());
    Writer w(out);
    out.write(kMagic, sizeof kMagic);
    w.str(ckpt.config_text);
    w.u64(ckpt.seed);
    w.u64(ckpt.step);
    w.u32(static_cast<std::uint32_t>(ckpt.tensors.size()));
    for (const auto& [name, t] : ckpt.tensors) {
        w.str(name);
        w.u32(static_cast<std::uint32_t>(t.rank()));
        for (int d : t.shape()) w.u32(static_cast<std::uint32_t>(d));
        for (double v : t.data()) w.f32(static_cast<float>(v));
    }
    if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    Reader r(in);
    char magic[8];
    r.read(magic, sizeof magic);
    if (std::memcmp(magic, kMagic, sizeof magic) != 0) throw IoError(path.string() + " is not a checkpoint");
    Checkpoint ckpt;
    ckpt.config_text = r.str();
    ckpt.seed = r.u64();
    ckpt.step = r.u64();
    const std::uint32_t count = r.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
        std::string name = r.str();
        const std::uint32_t rank = r.u32();
        std::vector<int> shape(rank);
        for (auto& d : shape) d = static_cast<int>(r.u32());
        Tensor t(shape);
        for (double& v : t.data()) v = r.f32();
        ckpt.tensors.emplace_back(std::move(name), std::move(t));
    }
    return ckpt;
}

void export_parameters(const nn::ParamList& params, Checkpoint& ckpt, const std::string& prefix) {
    for (const auto& p : params) {
        ckpt.tensors.emplace_back(prefix + p.name,
                                  Tensor({p.var.rows(), p.var.cols()},
                                         std::vector<double>(p.var.value().begin(), p.var.value().end())));
    }
}

void import_parameters(const Checkpoint& ckpt, nn::ParamList& params, const std::string& prefix) {
    for (auto& p : params) {
        const Tensor* t = ckpt.find(prefix + p.name);
        if (!t) throw IoError("checkpoint lacks tensor " + prefix + p.name);
        if (t->rank() != 2 || t->dim(0) != p.var.rows() || t->dim(1) != p.var.cols()) {
            throw ShapeError("checkpoint tensor " + prefix + p.name + " has the wrong shape");
        }
        std::copy(t->data().begin(), t->data().end(), p.var.mutable_value().begin());
    }
}

}  // namespace avs
