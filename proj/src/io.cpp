#include "sfvd/io.hpp"

#include <zlib.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace sfvd {

using nlohmann::json;

std::string to_string(IoCode c) {
    switch (c) {
        case IoCode::BadMagic: return "bad magic";
        case IoCode::BadCrc: return "crc mismatch";
        case IoCode::SizeMismatch: return "size mismatch";
        case IoCode::UnsupportedVersion: return "unsupported version";
        case IoCode::InvalidValue: return "invalid value";
        case IoCode::HeaderParse: return "header parse error";
        case IoCode::FileAccess: return "file access error";
    }
    return "io error";
}

namespace {

constexpr uint16_t kFvdVersion = 1;
constexpr uint32_t kCkptVersion = 1;

void put_u16(std::string& buf, uint16_t v) {
    buf.push_back(char(v & 0xff));
    buf.push_back(char((v >> 8) & 0xff));
}

void put_u32(std::string& buf, uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(char((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& buf, float f) {
    uint32_t v;
    std::memcpy(&v, &f, 4);
    put_u32(buf, v);
}

struct Reader {
    const std::string& buf;
    size_t pos = 0;

    void need(size_t n) const {
        if (pos + n > buf.size()) throw IoError(IoCode::SizeMismatch, "truncated file");
    }
    uint16_t u16() {
        need(2);
        uint16_t v = uint16_t(uint8_t(buf[pos])) | uint16_t(uint8_t(buf[pos + 1])) << 8;
        pos += 2;
        return v;
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= uint32_t(uint8_t(buf[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    float f32() {
        uint32_t v = u32();
        float f;
        std::memcpy(&f, &v, 4);
        return f;
    }
    uint8_t u8() {
        need(1);
        return uint8_t(buf[pos++]);
    }
};

uint32_t crc_of(const std::string& data, size_t n) {
    return uint32_t(crc32(0L, reinterpret_cast<const Bytef*>(data.data()), uInt(n)));
}

void atomic_write(const std::string& path, const std::string& data) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError(IoCode::FileAccess, "cannot open " + tmp);
        out.write(data.data(), std::streamsize(data.size()));
        if (!out) throw IoError(IoCode::FileAccess, "short write to " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError(IoCode::FileAccess, "rename failed: " + path);
}

std::string read_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(IoCode::FileAccess, "cannot open " + path);
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return data;
}

void check_crc(const std::string& data) {
    if (data.size() < 4) throw IoError(IoCode::SizeMismatch, "file shorter than its checksum");
    Reader tail{data, data.size() - 4};
    uint32_t stored = tail.u32();
    if (crc_of(data, data.size() - 4) != stored) throw IoError(IoCode::BadCrc, "payload corrupted");
}

}  // namespace

void write_fvd(const std::string& path, const LabeledVideo& video) {
    const int n = video.frame_count();
    if (n == 0) throw IoError(IoCode::InvalidValue, "empty video");
    const int h = video.height(), w = video.width();
    if (int(video.masks.size()) != n || int(video.annotated.size()) != n)
        throw IoError(IoCode::InvalidValue, "frame/mask/flag counts differ");

    std::string buf;
    buf.reserve(22 + size_t(n) * h * w * 5 + n + 4);
    buf.append("FVD1", 4);
    put_u16(buf, kFvdVersion);
    put_u32(buf, uint32_t(n));
    put_u32(buf, uint32_t(h));
    put_u32(buf, uint32_t(w));
    for (const auto& f : video.frames) {
        if (f.h != h || f.w != w) throw IoError(IoCode::InvalidValue, "frame shape differs");
        for (float v : f.v) {
            if (v < -1.0f || v > 1.0f || !std::isfinite(v))
                throw IoError(IoCode::InvalidValue, "frame value outside [-1,1]");
            put_f32(buf, v);
        }
    }
    for (const auto& m : video.masks) {
        if (m.h != h || m.w != w) throw IoError(IoCode::InvalidValue, "mask shape differs");
        for (uint8_t v : m.v) {
            if (v > 1) throw IoError(IoCode::InvalidValue, "mask value not in {0,1}");
            buf.push_back(char(v));
        }
    }
    for (uint8_t a : video.annotated) {
        if (a > 1) throw IoError(IoCode::InvalidValue, "annotation flag not in {0,1}");
        buf.push_back(char(a));
    }
    put_u32(buf, crc_of(buf, buf.size()));
    atomic_write(path, buf);
}

LabeledVideo read_fvd(const std::string& path) {
    std::string data = read_binary(path);
    if (data.size() < 4 || data.compare(0, 4, "FVD1") != 0)
        throw IoError(IoCode::BadMagic, path);
    Reader r{data, 4};
    uint16_t version = r.u16();
    if (version != kFvdVersion)
        throw IoError(IoCode::UnsupportedVersion, "fvd version " + std::to_string(version));
    uint32_t n = r.u32(), h = r.u32(), w = r.u32();
    size_t expect = 18 + size_t(n) * h * w * 5 + n + 4;
    if (data.size() != expect) throw IoError(IoCode::SizeMismatch, path);
    check_crc(data);

    LabeledVideo video;
    video.frames.reserve(n);
    for (uint32_t i = 0; i < n; ++i) {
        Plane f{int(h), int(w)};
        for (auto& v : f.v) {
            v = r.f32();
            if (v < -1.0f || v > 1.0f || !std::isfinite(v))
                throw IoError(IoCode::InvalidValue, "frame value outside [-1,1]");
        }
        video.frames.push_back(std::move(f));
    }
    video.masks.reserve(n);
    for (uint32_t i = 0; i < n; ++i) {
        Mask m{int(h), int(w)};
        for (auto& v : m.v) {
            v = r.u8();
            if (v > 1) throw IoError(IoCode::InvalidValue, "mask value not in {0,1}");
        }
        video.masks.push_back(std::move(m));
    }
    video.annotated.resize(n);
    for (auto& a : video.annotated) {
        a = r.u8();
        if (a > 1) throw IoError(IoCode::InvalidValue, "annotation flag not in {0,1}");
    }
    return video;
}

namespace {

void write_ckpt_common(const std::string& path, const json& header,
                       const std::vector<float>& blob) {
    std::string hdr = header.dump();
    std::string buf;
    buf.reserve(8 + hdr.size() + blob.size() * 4 + 4);
    buf.append("SFVD", 4);
    put_u32(buf, uint32_t(hdr.size()));
    buf.append(hdr);
    for (float v : blob) put_f32(buf, v);
    put_u32(buf, crc_of(buf, buf.size()));
    atomic_write(path, buf);
}

json read_ckpt_common(const std::string& path, std::vector<float>& blob) {
    std::string data = read_binary(path);
    if (data.size() < 4 || data.compare(0, 4, "SFVD") != 0)
        throw IoError(IoCode::BadMagic, path);
    Reader r{data, 4};
    uint32_t hdr_len = r.u32();
    r.need(hdr_len);
    std::string hdr = data.substr(r.pos, hdr_len);
    r.pos += hdr_len;

    json j;
    try {
        j = json::parse(hdr);
    } catch (const json::exception& e) {
        throw IoError(IoCode::HeaderParse, e.what());
    }
    if (!j.contains("format_version") || j["format_version"].get<uint32_t>() != kCkptVersion)
        throw IoError(IoCode::UnsupportedVersion, "checkpoint format_version");

    size_t blob_bytes = data.size() - r.pos - 4;
    size_t expect = j.at("param_count").get<size_t>() * 4;
    if (data.size() < r.pos + 4 || blob_bytes != expect)
        throw IoError(IoCode::SizeMismatch, "blob length does not match the architecture");
    check_crc(data);

    blob.resize(expect / 4);
    for (auto& v : blob) v = r.f32();
    return j;
}

json arch_json(const NetDesc& d) {
    return json{{"in_ch", d.in_ch}, {"out_ch", d.out_ch}, {"base_width", d.base_width},
                {"emb_dim", d.emb_dim}};
}

NetDesc arch_from_json(const json& j) {
    NetDesc d;
    d.in_ch = j.at("in_ch").get<int>();
    d.out_ch = j.at("out_ch").get<int>();
    d.base_width = j.at("base_width").get<int>();
    d.emb_dim = j.at("emb_dim").get<int>();
    return d;
}

}  // namespace

void write_checkpoint(const std::string& path, const DenoiserModel& model) {
    json j{{"format_version", kCkptVersion},
           {"kind", "denoiser"},
           {"role", to_string(model.role)},
           {"arch", arch_json(model.desc)},
           {"schedule",
            {{"kind", to_string(model.sched_kind)},
             {"T", model.sched_T},
             {"beta_start", model.beta_start},
             {"beta_end", model.beta_end}}},
           {"train_seed", model.train_seed},
           {"param_count", model.params.size()}};
    write_ckpt_common(path, j, model.params);
}

void write_checkpoint(const std::string& path, const SegmenterModel& model) {
    json j{{"format_version", kCkptVersion},
           {"kind", "segmenter"},
           {"arch", arch_json(model.desc)},
           {"noise_augment", model.noise_augment},
           {"schedule",
            {{"kind", to_string(model.sched_kind)},
             {"T", model.sched_T},
             {"beta_start", model.beta_start},
             {"beta_end", model.beta_end}}},
           {"train_seed", model.train_seed},
           {"param_count", model.params.size()}};
    write_ckpt_common(path, j, model.params);
}

DenoiserModel read_denoiser_checkpoint(const std::string& path) {
    std::vector<float> blob;
    json j = read_ckpt_common(path, blob);
    try {
        if (j.at("kind").get<std::string>() != "denoiser")
            throw IoError(IoCode::InvalidValue, "checkpoint is not a denoiser");
        DenoiserModel m;
        m.role = denoiser_role_from_string(j.at("role").get<std::string>());
        m.desc = arch_from_json(j.at("arch"));
        const json& s = j.at("schedule");
        m.sched_kind = schedule_kind_from_string(s.at("kind").get<std::string>());
        m.sched_T = s.at("T").get<int>();
        m.beta_start = s.at("beta_start").get<double>();
        m.beta_end = s.at("beta_end").get<double>();
        m.train_seed = j.at("train_seed").get<uint64_t>();
        if (build_manifest(m.desc).total != blob.size())
            throw IoError(IoCode::SizeMismatch, "blob length does not match the architecture");
        m.params = std::move(blob);
        return m;
    } catch (const json::exception& e) {
        throw IoError(IoCode::HeaderParse, e.what());
    }
}

SegmenterModel read_segmenter_checkpoint(const std::string& path) {
    std::vector<float> blob;
    json j = read_ckpt_common(path, blob);
    try {
        if (j.at("kind").get<std::string>() != "segmenter")
            throw IoError(IoCode::InvalidValue, "checkpoint is not a segmenter");
        SegmenterModel m;
        m.desc = arch_from_json(j.at("arch"));
        m.noise_augment = j.at("noise_augment").get<bool>();
        const json& s = j.at("schedule");
        m.sched_kind = schedule_kind_from_string(s.at("kind").get<std::string>());
        m.sched_T = s.at("T").get<int>();
        m.beta_start = s.at("beta_start").get<double>();
        m.beta_end = s.at("beta_end").get<double>();
        m.train_seed = j.at("train_seed").get<uint64_t>();
        if (build_manifest(m.desc).total != blob.size())
            throw IoError(IoCode::SizeMismatch, "blob length does not match the architecture");
        m.params = std::move(blob);
        return m;
    } catch (const json::exception& e) {
        throw IoError(IoCode::HeaderParse, e.what());
    }
}

// ---------------------------------------------------------------------------
// Minimal grayscale PNG writer (8-bit, zlib-compressed IDAT).
// ---------------------------------------------------------------------------
namespace {

void put_be32(std::string& buf, uint32_t v) {
    for (int i = 3; i >= 0; --i) buf.push_back(char((v >> (8 * i)) & 0xff));
}

void png_chunk(std::string& out, const char type[4], const std::string& payload) {
    put_be32(out, uint32_t(payload.size()));
    size_t start = out.size();
    out.append(type, 4);
    out.append(payload);
    uint32_t crc = uint32_t(
        crc32(0L, reinterpret_cast<const Bytef*>(out.data() + start), uInt(out.size() - start)));
    put_be32(out, crc);
}

}  // namespace

void write_png_gray(const std::string& path, const Plane& image) {
    const int h = image.h, w = image.w;
    std::string raw;
    raw.reserve(size_t(h) * (w + 1));
    for (int y = 0; y < h; ++y) {
        raw.push_back('\0');  // filter: none
        for (int x = 0; x < w; ++x) {
            float v = std::clamp(image.at(y, x), -1.0f, 1.0f);
            raw.push_back(char(uint8_t(std::lround((v + 1.0f) * 127.5f))));
        }
    }
    uLongf comp_len = compressBound(uLong(raw.size()));
    std::string comp(comp_len, '\0');
    if (compress2(reinterpret_cast<Bytef*>(comp.data()), &comp_len,
                  reinterpret_cast<const Bytef*>(raw.data()), uLong(raw.size()), 9) != Z_OK)
        throw IoError(IoCode::FileAccess, "png compression failed");
    comp.resize(comp_len);

    std::string out("\x89PNG\r\n\x1a\n", 8);
    std::string ihdr;
    put_be32(ihdr, uint32_t(w));
    put_be32(ihdr, uint32_t(h));
    ihdr.push_back(8);   // bit depth
    ihdr.push_back(0);   // grayscale
    ihdr.push_back(0);   // compression
    ihdr.push_back(0);   // filter
    ihdr.push_back(0);   // no interlace
    png_chunk(out, "IHDR", ihdr);
    png_chunk(out, "IDAT", comp);
    png_chunk(out, "IEND", "");
    atomic_write(path, out);
}

Plane contact_sheet(std::span<const Plane> frames) {
    if (frames.empty()) throw std::invalid_argument("contact_sheet: no frames");
    const int h = frames[0].h, w = frames[0].w;
    const int n = int(frames.size());
    Plane sheet(h, n * w + (n - 1), 1.0f);
    for (int i = 0; i < n; ++i) {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) sheet.at(y, i * (w + 1) + x) = frames[i].at(y, x);
    }
    return sheet;
}

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace

void write_metrics_csv(const std::string& path, std::span<const SegMetrics> per_video,
                       const SegMetrics& aggregate) {
    std::string out = "dice,hd,g2re,r2ge,sensitivity,precision\n";
    auto row = [&](const SegMetrics& m) {
        out += fmt(m.dice) + "," + fmt(m.hd) + "," + fmt(m.g2re) + "," + fmt(m.r2ge) + "," +
               fmt(m.sensitivity) + "," + fmt(m.precision) + "\n";
    };
    for (const auto& m : per_video) row(m);
    row(aggregate);
    atomic_write(path, out);
}

void write_loss_csv(const std::string& path, std::span<const LossRow> rows) {
    std::string out = "step,loss,l_simple,l_vlb\n";
    for (const auto& r : rows) {
        out += std::to_string(r.step) + "," + fmt(r.loss) + "," + fmt(r.l_simple) + "," +
               fmt(r.l_vlb) + "\n";
    }
    atomic_write(path, out);
}

std::string read_text_file(const std::string& path) { return read_binary(path); }

void write_text_file(const std::string& path, const std::string& content) {
    atomic_write(path, content);
}

}  // namespace sfvd
