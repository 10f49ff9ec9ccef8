#include "prandtl_lab/io.hpp"

#include <bit>
#include <cstdio>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "prandtl_lab/errors.hpp"

namespace plab {

namespace {

constexpr const char* kMagic = "PRANDTL-LAB/1 field";

void put_f64(std::string& out, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof bits);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    char buf[8];
    std::memcpy(buf, &bits, 8);
    out.append(buf, 8);
}

double get_f64(const char* p) {
    std::uint64_t bits;
    std::memcpy(&bits, p, 8);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    double d;
    std::memcpy(&d, &bits, sizeof d);
    return d;
}

void ensure_parent(const std::string& path) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (parent.empty()) return;
    std::error_code ec;
    std::filesystem::create_directories(parent, ec);
    if (ec) throw IoError("cannot create directory " + parent.string() + ": " + ec.message());
}

}  // namespace

void write_text(const std::string& path, const std::string& text) {
    ensure_parent(path);
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + path + " for writing");
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!os) throw IoError("write failed: " + path);
}

std::vector<std::size_t> write_snapshot(const std::string& path, const std::vector<NamedField>& fields) {
    std::string out;
    std::vector<std::size_t> offsets;
    for (const auto& nf : fields) {
        const Field2D& f = *nf.field;
        if (f.data.size() != f.nx * f.ny) throw ShapeError("write_snapshot: field " + nf.name + " has inconsistent size");
        offsets.push_back(out.size());
        out += kMagic;
        out += '\n';
        out += std::to_string(f.nx) + " " + std::to_string(f.ny) + "\n";
        for (double d : f.data) put_f64(out, d);
    }
    write_text(path, out);
    return offsets;
}

std::vector<Field2D> read_snapshot(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path);
    const std::string buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    std::vector<Field2D> out;
    std::size_t pos = 0;
    auto line = [&]() {
        const auto e = buf.find('\n', pos);
        if (e == std::string::npos) throw IoError("read_snapshot: truncated header in " + path);
        std::string s = buf.substr(pos, e - pos);
        pos = e + 1;
        return s;
    };
    while (pos < buf.size()) {
        if (line() != kMagic) throw IoError("read_snapshot: bad block header in " + path);
        std::size_t nx = 0, ny = 0;
        if (std::sscanf(line().c_str(), "%zu %zu", &nx, &ny) != 2) throw IoError("read_snapshot: bad dims line in " + path);
        const std::size_t bytes = nx * ny * 8;
        if (pos + bytes > buf.size()) throw IoError("read_snapshot: truncated data in " + path);
        Field2D f(nx, ny);
        for (std::size_t k = 0; k < nx * ny; ++k) f.data[k] = get_f64(buf.data() + pos + 8 * k);
        pos += bytes;
        out.push_back(std::move(f));
    }
    return out;
}

void write_snapshot_with_manifest(const std::string& path, const std::vector<NamedField>& fields,
                                  const std::string& extra_json) {
    const auto offsets = write_snapshot(path, fields);
    nlohmann::ordered_json m;
    m["format"] = kMagic;
    m["file"] = std::filesystem::path(path).filename().string();
    m["blocks"] = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < fields.size(); ++k)
        m["blocks"].push_back({{"name", fields[k].name},
                               {"offset", offsets[k]},
                               {"nx", fields[k].field->nx},
                               {"ny", fields[k].field->ny}});
    if (!extra_json.empty()) {
        const auto extra = nlohmann::ordered_json::parse(extra_json);
        if (!extra.is_object()) throw ConfigError("write_snapshot_with_manifest: extra must be a JSON object");
        for (const auto& [k, v] : extra.items()) m[k] = v;
    }
    write_text(path + ".json", m.dump(2) + "\n");
}

}  // namespace plab
