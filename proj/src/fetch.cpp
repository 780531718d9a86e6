#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <zlib.h>

#include <fstream>
#include <stdexcept>

#include "bijepa/runner.hpp"

namespace bijepa {

namespace {

struct UrlParts {
    std::string origin; // scheme://host[:port]
    std::string path;   // always ends with '/'
};

UrlParts split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw std::invalid_argument("base URL needs a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    UrlParts parts;
    parts.origin = url.substr(0, path_start);
    parts.path = path_start == std::string::npos ? "/" : url.substr(path_start);
    if (parts.path.back() != '/') parts.path += '/';
    return parts;
}

std::string gunzip(const std::string& compressed, const std::string& what) {
    z_stream zs{};
    if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) throw std::runtime_error("zlib init failed");
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(compressed.data()));
    zs.avail_in = static_cast<uInt>(compressed.size());
    std::string out;
    char buf[1 << 16];
    int rc = Z_OK;
    while (rc == Z_OK) {
        zs.next_out = reinterpret_cast<Bytef*>(buf);
        zs.avail_out = sizeof(buf);
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            throw std::runtime_error("corrupt gzip stream for " + what);
        }
        out.append(buf, sizeof(buf) - zs.avail_out);
        if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
            inflateEnd(&zs);
            throw std::runtime_error("truncated gzip stream for " + what);
        }
    }
    inflateEnd(&zs);
    return out;
}

} // namespace

std::vector<std::filesystem::path> fetch_mnist(const std::filesystem::path& out_dir, const std::string& base_url) {
    const UrlParts url = split_url(base_url);
    std::filesystem::create_directories(out_dir);

    httplib::Client client(url.origin);
    client.set_follow_location(true);
    client.set_connection_timeout(30);
    client.set_read_timeout(120);

    std::vector<std::filesystem::path> written;
    std::vector<std::filesystem::path> temps;
    try {
        for (const MnistFileSpec& spec : kMnistFiles) {
            const auto dest = out_dir / spec.name;
            std::error_code ec;
            if (std::filesystem::exists(dest) && std::filesystem::file_size(dest, ec) == spec.bytes) {
                written.push_back(dest);
                continue;
            }
            const std::string remote = url.path + spec.name + ".gz";
            auto res = client.Get(remote);
            if (!res) throw std::runtime_error("download of " + remote + " failed: " + httplib::to_string(res.error()));
            if (res->status != 200) {
                throw std::runtime_error("download of " + remote + " returned HTTP " + std::to_string(res->status));
            }
            const std::string raw = gunzip(res->body, spec.name);
            if (raw.size() != spec.bytes) {
                throw std::runtime_error(std::string(spec.name) + ": expected " + std::to_string(spec.bytes) +
                                         " bytes, got " + std::to_string(raw.size()));
            }
            const auto tmp = out_dir / (std::string(spec.name) + ".part");
            temps.push_back(tmp);
            {
                std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
                os.write(raw.data(), static_cast<std::streamsize>(raw.size()));
                if (!os) throw std::runtime_error("cannot write " + tmp.string());
            }
            std::filesystem::rename(tmp, dest);
            temps.pop_back();
            written.push_back(dest);
        }
    } catch (...) {
        for (const auto& t : temps) {
            std::error_code ec;
            std::filesystem::remove(t, ec);
        }
        throw;
    }
    return written;
}

} // namespace bijepa
