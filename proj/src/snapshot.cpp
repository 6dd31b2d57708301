#include "adr/snapshot.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace adr {

namespace {

void put_u32(std::ostream& out, std::uint32_t x) {
    unsigned char b[4] = {static_cast<unsigned char>(x), static_cast<unsigned char>(x >> 8),
                          static_cast<unsigned char>(x >> 16), static_cast<unsigned char>(x >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f64(std::ostream& out, double x) {
    const std::uint64_t u = std::bit_cast<std::uint64_t>(x);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return std::bit_cast<double>(u);
}

[[noreturn]] void io_fail(const std::filesystem::path& path, const char* what) {
    throw IoError(std::string(what) + ": " + path.string());
}

}  // namespace

void write_snapshot(const std::filesystem::path& path, const TensorField& field) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) io_fail(path, "cannot open snapshot for writing");
    out.write("ADRF", 4);
    put_u32(out, kSnapshotFormatVersion);
    put_u32(out, static_cast<std::uint32_t>(field.order()));
    for (int n : field.dims()) put_u32(out, static_cast<std::uint32_t>(n));
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(field.data()),
                  static_cast<std::streamsize>(field.size()) * 8);
    } else {
        for (std::int64_t i = 0; i < field.size(); ++i) put_f64(out, field[i]);
    }
    if (!out) io_fail(path, "snapshot write failed");
}

TensorField read_snapshot(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) io_fail(path, "cannot open snapshot");
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "ADRF", 4) != 0) io_fail(path, "not an ADRF snapshot");
    const std::uint32_t version = get_u32(in);
    if (version != kSnapshotFormatVersion) io_fail(path, "unsupported snapshot format version");
    const std::uint32_t d = get_u32(in);
    if (!in || d == 0 || d > 16) io_fail(path, "corrupt snapshot header");
    std::vector<int> dims(d);
    for (std::uint32_t mu = 0; mu < d; ++mu) {
        const std::uint32_t n = get_u32(in);
        if (!in || n == 0 || n > (1u << 24)) io_fail(path, "corrupt snapshot header");
        dims[mu] = static_cast<int>(n);
    }
    TensorField field(dims);
    if constexpr (std::endian::native == std::endian::little) {
        in.read(reinterpret_cast<char*>(field.data()), static_cast<std::streamsize>(field.size()) * 8);
    } else {
        for (std::int64_t i = 0; i < field.size(); ++i) field[i] = get_f64(in);
    }
    if (!in) io_fail(path, "snapshot truncated");
    return field;
}

void write_indicators_csv(const std::filesystem::path& path, const Indicators& indicators) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) io_fail(path, "cannot open indicators file for writing");
    out << "t,mean_u,increment_u_fro\n";
    char line[128];
    for (const IndicatorSample& s : indicators.samples) {
        std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g\n", s.t, s.mean_u, s.increment_u);
        out << line;
    }
    if (!out) io_fail(path, "indicators write failed");
}

}  // namespace adr
