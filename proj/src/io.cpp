#include "tempdepth/io.hpp"

#include <bit>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace tempdepth {

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad())
        throw IoError("read failure on " + path);
    return ss.str();
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot open " + path + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw IoError("write failure on " + path);
}

float float_from_bytes(const unsigned char* b, bool little) {
    std::uint32_t u;
    if (little)
        u = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
            (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    else
        u = static_cast<std::uint32_t>(b[3]) | (static_cast<std::uint32_t>(b[2]) << 8) |
            (static_cast<std::uint32_t>(b[1]) << 16) | (static_cast<std::uint32_t>(b[0]) << 24);
    return std::bit_cast<float>(u);
}

void bytes_from_float(float f, unsigned char* b) { // little-endian
    auto u = std::bit_cast<std::uint32_t>(f);
    b[0] = static_cast<unsigned char>(u & 0xff);
    b[1] = static_cast<unsigned char>((u >> 8) & 0xff);
    b[2] = static_cast<unsigned char>((u >> 16) & 0xff);
    b[3] = static_cast<unsigned char>((u >> 24) & 0xff);
}

std::uint32_t u32_from_le(const unsigned char* b) {
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void le_from_u32(std::uint32_t u, unsigned char* b) {
    b[0] = static_cast<unsigned char>(u & 0xff);
    b[1] = static_cast<unsigned char>((u >> 8) & 0xff);
    b[2] = static_cast<unsigned char>((u >> 16) & 0xff);
    b[3] = static_cast<unsigned char>((u >> 24) & 0xff);
}

// Whitespace-delimited header scanner; the single delimiter byte before a
// binary payload is consumed explicitly via expect_payload_separator.
struct HeaderScanner {
    const std::string& buf;
    std::size_t pos = 0;
    bool allow_comments = false;

    void skip_space() {
        while (pos < buf.size()) {
            unsigned char c = static_cast<unsigned char>(buf[pos]);
            if (std::isspace(c)) {
                ++pos;
            } else if (allow_comments && c == '#') {
                while (pos < buf.size() && buf[pos] != '\n') ++pos;
            } else {
                break;
            }
        }
    }

    std::string next_token(const char* what) {
        skip_space();
        std::size_t start = pos;
        while (pos < buf.size() && !std::isspace(static_cast<unsigned char>(buf[pos])))
            ++pos;
        if (pos == start)
            throw FormatError(std::string("missing ") + what + " in header");
        return buf.substr(start, pos - start);
    }

    long next_int(const char* what) {
        std::string t = next_token(what);
        std::size_t used = 0;
        long v = 0;
        try {
            v = std::stol(t, &used);
        } catch (const std::exception&) {
            throw FormatError(std::string("bad ") + what + " '" + t + "'");
        }
        if (used != t.size())
            throw FormatError(std::string("bad ") + what + " '" + t + "'");
        return v;
    }

    double next_double(const char* what) {
        std::string t = next_token(what);
        std::size_t used = 0;
        double v = 0;
        try {
            v = std::stod(t, &used);
        } catch (const std::exception&) {
            throw FormatError(std::string("bad ") + what + " '" + t + "'");
        }
        if (used != t.size())
            throw FormatError(std::string("bad ") + what + " '" + t + "'");
        return v;
    }

    void expect_payload_separator() {
        if (pos >= buf.size() || !std::isspace(static_cast<unsigned char>(buf[pos])))
            throw FormatError("missing separator before payload");
        ++pos;
    }

    std::size_t remaining() const { return buf.size() - pos; }
};

} // namespace

Raster read_pfm(const std::string& path) {
    std::string buf = read_file(path);
    HeaderScanner sc{buf};

    std::string magic = sc.next_token("magic");
    int channels;
    if (magic == "PF")
        channels = 3;
    else if (magic == "Pf")
        channels = 1;
    else
        throw FormatError("bad magic '" + magic + "', expected PF or Pf");

    long w = sc.next_int("width");
    long h = sc.next_int("height");
    if (w < 1 || h < 1 || w > 1000000 || h > 1000000)
        throw FormatError("bad raster dimensions");
    double scale = sc.next_double("scale");
    if (scale == 0.0)
        throw FormatError("scale must be nonzero");
    bool little = scale < 0.0;
    sc.expect_payload_separator();

    std::size_t need = static_cast<std::size_t>(w) * h * channels * 4;
    if (sc.remaining() < need)
        throw TruncationError("payload shorter than header declares");

    Raster r(channels, static_cast<int>(h), static_cast<int>(w));
    const unsigned char* p = reinterpret_cast<const unsigned char*>(buf.data()) + sc.pos;
    // File rows run bottom-to-top, pixels interleaved.
    for (long fy = 0; fy < h; ++fy) {
        int y = static_cast<int>(h - 1 - fy);
        for (long x = 0; x < w; ++x) {
            for (int c = 0; c < channels; ++c) {
                r.at(c, y, static_cast<int>(x)) = float_from_bytes(p, little);
                p += 4;
            }
        }
    }
    return r;
}

void write_pfm(const Raster& r, const std::string& path) {
    if (r.channels != 1 && r.channels != 3)
        throw PreconditionError("PFM rasters must have 1 or 3 channels");
    if (r.width < 1 || r.height < 1)
        throw PreconditionError("cannot write empty raster");

    std::string out;
    out += (r.channels == 3) ? "PF\n" : "Pf\n";
    out += std::to_string(r.width) + " " + std::to_string(r.height) + "\n";
    out += "-1.0\n";

    std::size_t header = out.size();
    out.resize(header + static_cast<std::size_t>(r.width) * r.height * r.channels * 4);
    unsigned char* p = reinterpret_cast<unsigned char*>(out.data()) + header;
    for (int fy = 0; fy < r.height; ++fy) {
        int y = r.height - 1 - fy;
        for (int x = 0; x < r.width; ++x) {
            for (int c = 0; c < r.channels; ++c) {
                bytes_from_float(static_cast<float>(r.at(c, y, x)), p);
                p += 4;
            }
        }
    }
    write_file(path, out);
}

BinaryMask read_mask_pgm(const std::string& path) {
    std::string buf = read_file(path);
    HeaderScanner sc{buf};
    sc.allow_comments = true;

    std::string magic = sc.next_token("magic");
    if (magic != "P5")
        throw FormatError("bad magic '" + magic + "', expected P5");
    long w = sc.next_int("width");
    long h = sc.next_int("height");
    if (w < 1 || h < 1 || w > 1000000 || h > 1000000)
        throw FormatError("bad mask dimensions");
    long maxval = sc.next_int("maxval");
    if (maxval != 255)
        throw FormatError("maxval must be 255");
    sc.expect_payload_separator();

    std::size_t need = static_cast<std::size_t>(w) * h;
    if (sc.remaining() < need)
        throw TruncationError("payload shorter than header declares");

    BinaryMask m(static_cast<int>(h), static_cast<int>(w));
    const unsigned char* p = reinterpret_cast<const unsigned char*>(buf.data()) + sc.pos;
    for (std::size_t i = 0; i < need; ++i)
        m.values[i] = (p[i] > 127) ? 1 : 0;
    return m;
}

void write_mask_pgm(const BinaryMask& m, const std::string& path) {
    if (m.width < 1 || m.height < 1)
        throw PreconditionError("cannot write empty mask");

    std::string out = "P5\n" + std::to_string(m.width) + " " + std::to_string(m.height) + "\n255\n";
    out.reserve(out.size() + m.size());
    for (auto v : m.values)
        out.push_back(v ? static_cast<char>(0xff) : static_cast<char>(0x00));
    write_file(path, out);
}

FeatureGrid read_fgrid(const std::string& path) {
    std::string buf = read_file(path);
    if (buf.size() < 16)
        throw FormatError("file too short for a feature-grid header");
    if (std::memcmp(buf.data(), "FGRD", 4) != 0)
        throw FormatError("bad magic, expected FGRD");

    const unsigned char* p = reinterpret_cast<const unsigned char*>(buf.data());
    std::uint32_t c = u32_from_le(p + 4);
    std::uint32_t h = u32_from_le(p + 8);
    std::uint32_t w = u32_from_le(p + 12);
    std::uint64_t count = static_cast<std::uint64_t>(c) * h * w;
    if (c > 1000000 || h > 1000000 || w > 1000000 || count > (1u << 28))
        throw FormatError("implausible feature-grid dimensions");
    if (buf.size() - 16 < count * 4)
        throw TruncationError("payload shorter than header declares");

    FeatureGrid g(static_cast<int>(c), static_cast<int>(h), static_cast<int>(w));
    p += 16;
    for (std::uint64_t i = 0; i < count; ++i) {
        g.data[i] = float_from_bytes(p, true);
        p += 4;
    }
    return g;
}

void write_fgrid(const FeatureGrid& g, const std::string& path) {
    std::string out;
    out.resize(16 + g.data.size() * 4);
    unsigned char* p = reinterpret_cast<unsigned char*>(out.data());
    std::memcpy(p, "FGRD", 4);
    le_from_u32(static_cast<std::uint32_t>(g.channels), p + 4);
    le_from_u32(static_cast<std::uint32_t>(g.height), p + 8);
    le_from_u32(static_cast<std::uint32_t>(g.width), p + 12);
    p += 16;
    for (double v : g.data) {
        bytes_from_float(static_cast<float>(v), p);
        p += 4;
    }
    write_file(path, out);
}

Raster to_raster(const Grid& g) {
    Raster r(1, g.height, g.width);
    r.data = g.data;
    return r;
}

Raster to_raster(const DepthMap& d) {
    Raster r(1, d.height(), d.width());
    for (std::size_t i = 0; i < d.values.size(); ++i)
        r.data[i] = d.valid[i] ? d.values.data[i] : 0.0;
    return r;
}

Raster to_raster(const NormalMap& n) {
    Raster r(3, n.height, n.width);
    std::size_t plane = n.nx.size();
    std::copy(n.nx.data.begin(), n.nx.data.end(), r.data.begin());
    std::copy(n.ny.data.begin(), n.ny.data.end(), r.data.begin() + plane);
    std::copy(n.nz.data.begin(), n.nz.data.end(), r.data.begin() + 2 * plane);
    return r;
}

Raster to_raster(const FlowField& f) {
    Raster r(3, f.height(), f.width());
    std::size_t plane = f.u.size();
    std::copy(f.u.data.begin(), f.u.data.end(), r.data.begin());
    std::copy(f.v.data.begin(), f.v.data.end(), r.data.begin() + plane);
    return r;
}

Grid grid_from_raster(const Raster& r) {
    if (r.channels != 1)
        throw FormatError("expected a 1-channel raster");
    Grid g(r.height, r.width);
    g.data = r.data;
    return g;
}

DepthMap depth_from_raster(const Raster& r) {
    return DepthMap::from_grid(grid_from_raster(r));
}

NormalMap normals_from_raster(const Raster& r) {
    if (r.channels != 3)
        throw FormatError("expected a 3-channel raster");
    NormalMap n(r.height, r.width);
    std::size_t plane = n.nx.size();
    std::copy(r.data.begin(), r.data.begin() + plane, n.nx.data.begin());
    std::copy(r.data.begin() + plane, r.data.begin() + 2 * plane, n.ny.data.begin());
    std::copy(r.data.begin() + 2 * plane, r.data.end(), n.nz.data.begin());
    for (std::size_t i = 0; i < plane; ++i) {
        bool ok = std::isfinite(n.nx.data[i]) && std::isfinite(n.ny.data[i]) &&
                  std::isfinite(n.nz.data[i]);
        n.valid[i] = ok ? 1 : 0;
    }
    return n;
}

FlowField flow_from_raster(const Raster& r) {
    if (r.channels != 3)
        throw FormatError("expected a 3-channel raster");
    FlowField f(r.height, r.width);
    std::size_t plane = f.u.size();
    std::copy(r.data.begin(), r.data.begin() + plane, f.u.data.begin());
    std::copy(r.data.begin() + plane, r.data.begin() + 2 * plane, f.v.data.begin());
    return f;
}

} // namespace tempdepth
