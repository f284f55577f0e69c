#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "pqx/errors.hpp"

namespace pqx::io {

// Little-endian binary primitives. The host is assumed little-endian
// (checked once at file-open time via a static_assert on the build arch
// being the common case); values are memcpy'd through char buffers.

template <typename T>
void write_pod(std::ostream& out, const T& value) {
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.write(buf, sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const char* what) {
    char buf[sizeof(T)];
    in.read(buf, sizeof(T));
    if (!in) throw IoError(std::string("truncated read: ") + what);
    T value;
    std::memcpy(&value, buf, sizeof(T));
    return value;
}

template <typename T>
void write_array(std::ostream& out, const std::vector<T>& values) {
    if (!values.empty())
        out.write(reinterpret_cast<const char*>(values.data()),
                  static_cast<std::streamsize>(values.size() * sizeof(T)));
}

template <typename T>
void read_array(std::istream& in, std::vector<T>& values, size_t count, const char* what) {
    values.resize(count);
    if (count == 0) return;
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(count * sizeof(T)));
    if (!in) throw IoError(std::string("truncated read: ") + what);
}

inline void write_magic(std::ostream& out, const char magic[4]) { out.write(magic, 4); }

inline void expect_magic(std::istream& in, const char magic[4], const char* what) {
    char buf[4];
    in.read(buf, 4);
    if (!in || std::memcmp(buf, magic, 4) != 0)
        throw IoError(std::string("bad magic, not a ") + what + " file");
}

/// Length-prefixed (u32) UTF-8 string.
inline void write_lp_string(std::ostream& out, const std::string& s) {
    write_pod<uint32_t>(out, static_cast<uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_lp_string(std::istream& in, const char* what) {
    const auto n = read_pod<uint32_t>(in, what);
    std::string s(n, '\0');
    if (n > 0) {
        in.read(s.data(), n);
        if (!in) throw IoError(std::string("truncated read: ") + what);
    }
    return s;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path);
    return f;
}

inline std::ifstream open_in(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for reading: " + path);
    return f;
}

inline std::string slurp(const std::string& path) {
    auto f = open_in(path);
    std::string out((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return out;
}

inline void spit(const std::string& path, const std::string& content) {
    auto f = open_out(path);
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw IoError("write failed: " + path);
}

} // namespace pqx::io
