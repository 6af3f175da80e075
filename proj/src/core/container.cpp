#include "container.hpp"

#include <cstring>
#include <fstream>

#include "error.hpp"

namespace dira {

namespace {

void put_u16(std::string& out, uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float f) {
    uint32_t bits;
    std::memcpy(&bits, &f, sizeof(bits));
    put_u32(out, bits);
}

class Reader {
public:
    Reader(std::string bytes, std::string path) : bytes_(std::move(bytes)), path_(std::move(path)) {}

    size_t offset() const { return pos_; }

    void raw(void* dst, size_t n) {
        if (pos_ + n > bytes_.size())
            throw FormatError(path_ + ": truncated at byte offset " + std::to_string(pos_));
        std::memcpy(dst, bytes_.data() + pos_, n);
        pos_ += n;
    }

    uint16_t u16() {
        unsigned char b[2];
        raw(b, 2);
        return static_cast<uint16_t>(b[0] | (b[1] << 8));
    }

    uint32_t u32() {
        unsigned char b[4];
        raw(b, 4);
        return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
               (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
    }

    uint64_t u64() {
        uint64_t v = 0;
        unsigned char b[8];
        raw(b, 8);
        for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
        return v;
    }

    float f32() {
        const uint32_t bits = u32();
        float f;
        std::memcpy(&f, &bits, sizeof(f));
        return f;
    }

    std::string str(size_t n) {
        std::string s(n, '\0');
        raw(s.data(), n);
        return s;
    }

private:
    std::string bytes_;
    std::string path_;
    size_t pos_ = 0;
};

}  // namespace

void write_container(const std::string& path, const Container& c) {
    std::string out;
    out.append(c.magic.data(), 4);
    put_u16(out, Container::kVersion);
    put_u32(out, static_cast<uint32_t>(c.meta.size()));
    out += c.meta;
    put_u32(out, static_cast<uint32_t>(c.entries.size()));
    uint64_t payload_floats = 0;
    for (const auto& e : c.entries) {
        put_u32(out, static_cast<uint32_t>(e.name.size()));
        out += e.name;
        put_u32(out, static_cast<uint32_t>(e.shape.size()));
        for (int64_t d : e.shape) put_u64(out, static_cast<uint64_t>(d));
        put_u64(out, payload_floats * 4);  // byte offset into payload
        payload_floats += e.data.size();
    }
    put_u64(out, payload_floats * 4);
    for (const auto& e : c.entries)
        for (float f : e.data) put_f32(out, f);

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw FormatError("cannot open '" + path + "' for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw FormatError("short write to '" + path + "'");
}

Container read_container(const std::string& path, const char expected_magic[4]) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot open '" + path + "'");
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    Reader r(std::move(bytes), path);

    Container c;
    r.raw(c.magic.data(), 4);
    if (std::memcmp(c.magic.data(), expected_magic, 4) != 0)
        throw FormatError(path + ": bad magic at byte offset 0 (expected \"" +
                          std::string(expected_magic, 4) + "\")");
    const uint16_t version = r.u16();
    if (version != Container::kVersion)
        throw FormatError(path + ": unsupported format version " + std::to_string(version));

    c.meta = r.str(r.u32());
    const uint32_t n_entries = r.u32();

    struct RawEntry {
        std::string name;
        Shape shape;
        uint64_t offset;
        uint64_t count;
    };
    std::vector<RawEntry> raw;
    raw.reserve(n_entries);
    for (uint32_t i = 0; i < n_entries; ++i) {
        RawEntry e;
        e.name = r.str(r.u32());
        const uint32_t ndim = r.u32();
        for (uint32_t d = 0; d < ndim; ++d) e.shape.push_back(static_cast<int64_t>(r.u64()));
        e.offset = r.u64();
        e.count = static_cast<uint64_t>(shape_numel(e.shape));
        raw.push_back(std::move(e));
    }
    const uint64_t payload_bytes = r.u64();
    const size_t payload_at = r.offset();
    for (auto& e : raw) {
        if (e.offset % 4 != 0 || e.offset + e.count * 4 > payload_bytes)
            throw FormatError(path + ": entry '" + e.name + "' points outside the payload");
    }
    std::vector<float> payload(payload_bytes / 4);
    for (auto& v : payload) v = r.f32();
    (void)payload_at;

    for (auto& e : raw) {
        Container::Entry out;
        out.name = std::move(e.name);
        out.shape = std::move(e.shape);
        const size_t first = e.offset / 4;
        out.data.assign(payload.begin() + static_cast<ptrdiff_t>(first),
                        payload.begin() + static_cast<ptrdiff_t>(first + e.count));
        c.entries.push_back(std::move(out));
    }
    return c;
}

}  // namespace dira
