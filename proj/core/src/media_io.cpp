#include "avs/media_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "avs/errors.hpp"

namespace avs::media {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    return in;
}

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string pnm_token(std::istream& in) {
    std::string tok;
    char c;
    while (in.get(c)) {
        if (c == '#') {
            std::string rest;
            std::getline(in, rest);
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(c);
    }
    return tok;
}

struct PnmHeader {
    std::string magic;
    int width = 0;
    int height = 0;
    int maxval = 0;
};

PnmHeader read_pnm_header(std::istream& in, const std::filesystem::path& path) {
    PnmHeader h;
    h.magic = pnm_token(in);
    try {
        h.width = std::stoi(pnm_token(in));
        h.height = std::stoi(pnm_token(in));
        h.maxval = std::stoi(pnm_token(in));
    } catch (const std::exception&) {
        throw IoError("malformed PNM header in " + path.string());
    }
    if (h.width <= 0 || h.height <= 0 || h.maxval <= 0 || h.maxval > 255) {
        throw IoError("unsupported PNM geometry in " + path.string());
    }
    return h;
}

void put_u16(std::ostream& out, std::uint16_t v) {
    const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
    out.write(b, 2);
}

void put_u32(std::ostream& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t le32(const unsigned char* p) {
    return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t le16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

}  // namespace

void write_ppm(const std::filesystem::path& path, const RgbImage& image) {
    if (image.rgb.size() != static_cast<std::size_t>(image.height) * image.width * 3) {
        throw ShapeError("write_ppm: pixel buffer does not match size");
    }
    auto out = open_out(path);
    out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.rgb.data()),
              static_cast<std::streamsize>(image.rgb.size()));
}

RgbImage read_ppm(const std::filesystem::path& path) {
    auto in = open_in(path);
    const auto h = read_pnm_header(in, path);
    if (h.magic != "P6") throw IoError("not a binary PPM: " + path.string());
    RgbImage img{h.height, h.width, std::vector<std::uint8_t>(static_cast<std::size_t>(h.width) * h.height * 3)};
    in.read(reinterpret_cast<char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.rgb.size())) {
        throw IoError("truncated PPM: " + path.string());
    }
    return img;
}

void write_mask_pgm(const std::filesystem::path& path, const BinaryMask& mask) {
    auto out = open_out(path);
    out << "P5\n" << mask.width() << ' ' << mask.height() << "\n255\n";
    for (auto b : mask.bits()) out.put(static_cast<char>(b ? 255 : 0));
}

BinaryMask read_mask_pgm(const std::filesystem::path& path) {
    auto in = open_in(path);
    const auto h = read_pnm_header(in, path);
    if (h.magic != "P5") throw IoError("not a binary PGM: " + path.string());
    std::vector<std::uint8_t> raw(static_cast<std::size_t>(h.width) * h.height);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
        throw IoError("truncated PGM: " + path.string());
    }
    for (auto& b : raw) b = b ? 1 : 0;
    return BinaryMask(h.height, h.width, std::move(raw));
}

void write_wav(const std::filesystem::path& path, const std::vector<double>& samples,
               int sample_rate_hz) {
    auto out = open_out(path);
    const std::uint32_t data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
    out.write("RIFF", 4);
    put_u32(out, 36 + data_bytes);
    out.write("WAVEfmt ", 8);
    put_u32(out, 16);
    put_u16(out, 1);  // PCM
    put_u16(out, 1);  // mono
    put_u32(out, static_cast<std::uint32_t>(sample_rate_hz));
    put_u32(out, static_cast<std::uint32_t>(sample_rate_hz) * 2);
    put_u16(out, 2);
    put_u16(out, 16);
    out.write("data", 4);
    put_u32(out, data_bytes);
    for (double s : samples) {
        const double clamped = std::clamp(s, -1.0, 1.0);
        const auto v = static_cast<std::int16_t>(std::lround(clamped * 32767.0));
        put_u16(out, static_cast<std::uint16_t>(v));
    }
}

std::vector<double> read_wav(const std::filesystem::path& path, int* sample_rate_hz) {
    auto in = open_in(path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        throw IoError("not a RIFF/WAVE file: " + path.string());
    }
    int channels = 0, bits = 0, rate = 0;
    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const std::uint32_t size = le32(&bytes[pos + 4]);
        const unsigned char* body = &bytes[pos + 8];
        if (pos + 8 + size > bytes.size()) throw IoError("truncated WAV chunk: " + path.string());
        if (std::memcmp(&bytes[pos], "fmt ", 4) == 0) {
            if (le16(body) != 1) throw IoError("only PCM WAV is supported: " + path.string());
            channels = le16(body + 2);
            rate = static_cast<int>(le32(body + 4));
            bits = le16(body + 14);
        } else if (std::memcmp(&bytes[pos], "data", 4) == 0) {
            if (bits != 16 || channels < 1) throw IoError("expected 16-bit PCM: " + path.string());
            const std::size_t frames = size / (2u * static_cast<unsigned>(channels));
            std::vector<double> out(frames);
            for (std::size_t f = 0; f < frames; ++f) {
                double acc = 0.0;
                for (int c = 0; c < channels; ++c) {
                    const auto v = static_cast<std::int16_t>(le16(body + 2 * (f * channels + c)));
                    acc += v / 32768.0;
                }
                out[f] = acc / channels;
            }
            if (sample_rate_hz) *sample_rate_hz = rate;
            return out;
        }
        pos += 8 + size + (size & 1);
    }
    throw IoError("WAV has no data chunk: " + path.string());
}

FrameClip to_frame_clip(const RgbImage& image) {
    const std::size_t plane = static_cast<std::size_t>(image.height) * image.width;
    std::vector<double> px(plane * 3);
    for (std::size_t p = 0; p < plane; ++p) {
        for (int c = 0; c < 3; ++c) px[c * plane + p] = image.rgb[p * 3 + c] / 127.5 - 1.0;
    }
    return FrameClip(1, image.height, image.width, std::move(px));
}

}  // namespace avs::media
