#include "pqx/hash.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <fstream>

#include "pqx/errors.hpp"

namespace pqx {

Sha256 sha256_bytes(const void* data, size_t len) {
    Sha256 out{};
    unsigned int out_len = 0;
    if (EVP_Digest(data, len, out.data(), &out_len, EVP_sha256(), nullptr) != 1 ||
        out_len != out.size())
        throw IoError("sha256 digest failed");
    return out;
}

Sha256 sha256_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for hashing: " + path);
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx) throw IoError("sha256 context allocation failed");
    Sha256 out{};
    unsigned int out_len = 0;
    bool ok = EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) == 1;
    std::vector<char> buf(1 << 16);
    while (ok && f) {
        f.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        const auto n = f.gcount();
        if (n > 0) ok = EVP_DigestUpdate(ctx, buf.data(), static_cast<size_t>(n)) == 1;
    }
    ok = ok && EVP_DigestFinal_ex(ctx, out.data(), &out_len) == 1 && out_len == out.size();
    EVP_MD_CTX_free(ctx);
    if (!ok) throw IoError("sha256 of file failed: " + path);
    return out;
}

std::string hex(const Sha256& digest) {
    static const char* digits = "0123456789abcdef";
    std::string s;
    s.reserve(64);
    for (uint8_t b : digest) {
        s.push_back(digits[b >> 4]);
        s.push_back(digits[b & 0xf]);
    }
    return s;
}

} // namespace pqx
