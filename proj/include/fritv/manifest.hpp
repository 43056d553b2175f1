#ifndef FRITV_MANIFEST_HPP
#define FRITV_MANIFEST_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>
#include <openssl/evp.h>

#include "fritv/types.hpp"

namespace fritv {

namespace detail {

class Sha256 {
  public:
    Sha256() : ctx_(EVP_MD_CTX_new()) {
        if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1)
            throw std::runtime_error("sha256: init failed");
    }
    ~Sha256() { EVP_MD_CTX_free(ctx_); }
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;

    void update(const void* data, std::size_t len) {
        if (EVP_DigestUpdate(ctx_, data, len) != 1)
            throw std::runtime_error("sha256: update failed");
    }

    std::string hex() {
        std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
        unsigned int len = 0;
        if (EVP_DigestFinal_ex(ctx_, digest.data(), &len) != 1)
            throw std::runtime_error("sha256: final failed");
        static const char* k = "0123456789abcdef";
        std::string out(2 * len, '0');
        for (unsigned int i = 0; i < len; ++i) {
            out[2 * i] = k[digest[i] >> 4];
            out[2 * i + 1] = k[digest[i] & 0xf];
        }
        return out;
    }

  private:
    EVP_MD_CTX* ctx_;
};

} // namespace detail

inline std::string sha256_hex(const void* data, std::size_t len) {
    detail::Sha256 h;
    h.update(data, len);
    return h.hex();
}

inline std::string sha256_hex(const std::string& s) { return sha256_hex(s.data(), s.size()); }

inline std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("sha256_file: cannot open " + path.string());
    detail::Sha256 h;
    std::vector<char> buf(1 << 20);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    if (in.bad()) throw io_error("sha256_file: read error on " + path.string());
    return h.hex();
}

struct FileDigest {
    std::string path; ///< as given on the command line
    std::string sha256;
    std::uint64_t bytes = 0;
};

inline FileDigest digest_file(const std::filesystem::path& path) {
    return FileDigest{path.string(), sha256_file(path),
                      static_cast<std::uint64_t>(std::filesystem::file_size(path))};
}

/// Record of one CLI invocation: command, effective configuration, and
/// content digests of every file read or written. Contains no timestamps so
/// identical inputs and arguments reproduce the manifest byte for byte.
struct RunManifest {
    std::string command;
    std::vector<std::string> argv;
    nlohmann::json config = nlohmann::json::object();
    std::vector<FileDigest> inputs;
    std::vector<FileDigest> outputs;
    std::uint64_t seed = 0;
    nlohmann::json metrics = nlohmann::json::object();
};

inline nlohmann::json to_json(const RunManifest& m) {
    auto digests = [](const std::vector<FileDigest>& v) {
        nlohmann::json a = nlohmann::json::array();
        for (const FileDigest& d : v)
            a.push_back(nlohmann::json{
                {"path", d.path}, {"sha256", d.sha256}, {"bytes", d.bytes}});
        return a;
    };
    return nlohmann::json{{"command", m.command},
                          {"argv", m.argv},
                          {"config", m.config},
                          {"inputs", digests(m.inputs)},
                          {"outputs", digests(m.outputs)},
                          {"seed", m.seed},
                          {"metrics", m.metrics},
                          {"versions", nlohmann::json{{"fritv", "0.1.0"}}}};
}

inline void write_manifest(const std::filesystem::path& path, const RunManifest& m) {
    namespace fs = std::filesystem;
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw io_error("cannot open for writing: " + tmp.string());
        out << to_json(m).dump(2) << "\n";
        if (!out) throw io_error("write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw io_error("rename failed: " + path.string() + ": " + ec.message());
}

} // namespace fritv

#endif // FRITV_MANIFEST_HPP
