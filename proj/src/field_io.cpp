#include "fbsde_ns/field_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>

namespace fbsde {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void put_le(std::ostream& os, T value) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
    unsigned char bytes[sizeof(T)];
    is.read(reinterpret_cast<char*>(bytes), sizeof(T));
    if (!is) throw std::runtime_error("NSF1: truncated stream");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

} // namespace

void write_nsf1(std::ostream& os, const VectorField& v) {
    os.write("NSF1", 4);
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(v.spec().dim()));
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(v.spec().n()));
    put_le<double>(os, v.spec().box_length());
    put_le<double>(os, v.time_tag().value_or(std::numeric_limits<double>::quiet_NaN()));
    for (double x : v.data()) put_le<double>(os, x);
}

VectorField read_nsf1(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "NSF1", 4) != 0) throw std::runtime_error("NSF1: bad magic");
    const auto d = get_le<std::uint32_t>(is);
    const auto n = get_le<std::uint32_t>(is);
    const auto L = get_le<double>(is);
    const auto tag = get_le<double>(is);
    auto spec = GridSpec::make(static_cast<int>(d), static_cast<int>(n), L);
    std::vector<double> data(spec.points() * spec.dim());
    for (auto& x : data) x = get_le<double>(is);
    std::optional<double> time_tag;
    if (!std::isnan(tag)) time_tag = tag;
    return VectorField(spec, std::move(data), time_tag);
}

void write_nsf1(const std::filesystem::path& path, const VectorField& v) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_nsf1(os, v);
}

VectorField read_nsf1(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    return read_nsf1(is);
}

void write_csv(std::ostream& os, const VectorField& v) {
    const auto& spec = v.spec();
    const int d = spec.dim();
    for (int a = 0; a < d; ++a) os << 'i' << a << ',';
    for (int c = 0; c < d; ++c) os << 'v' << c << (c + 1 < d ? ',' : '\n');
    os << std::setprecision(17);
    for (std::size_t idx = 0; idx < spec.points(); ++idx) {
        auto i = spec.unflatten(idx);
        for (int a = 0; a < d; ++a) os << i[a] << ',';
        for (int c = 0; c < d; ++c) os << v.component(c)[idx] << (c + 1 < d ? ',' : '\n');
    }
}

} // namespace fbsde
