#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

namespace bijepa::testing {

inline void put_be32(std::ofstream& os, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_idx_images(const std::filesystem::path& path, std::uint32_t count, std::uint32_t rows,
                             std::uint32_t cols, const std::vector<std::uint8_t>& pixels, std::uint32_t magic = 0x803) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    put_be32(os, magic);
    put_be32(os, count);
    put_be32(os, rows);
    put_be32(os, cols);
    os.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

inline void write_idx_labels(const std::filesystem::path& path, const std::vector<std::uint8_t>& labels,
                             std::uint32_t magic = 0x801) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    put_be32(os, magic);
    put_be32(os, static_cast<std::uint32_t>(labels.size()));
    os.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

// Writes a tiny MNIST-shaped dataset (both splits) whose digit classes are
// separable: image k has a bright column band at a class-specific offset.
inline void write_synthetic_mnist(const std::filesystem::path& dir, std::uint32_t n_train, std::uint32_t n_test) {
    std::filesystem::create_directories(dir);
    auto make = [](std::uint32_t n, std::uint32_t salt, std::vector<std::uint8_t>& px, std::vector<std::uint8_t>& lb) {
        px.assign(static_cast<std::size_t>(n) * 784, 0);
        lb.resize(n);
        for (std::uint32_t i = 0; i < n; ++i) {
            const std::uint8_t label = static_cast<std::uint8_t>((i * 7 + salt) % 10);
            lb[i] = label;
            for (std::uint32_t r = 4; r < 24; ++r) {
                px[i * 784 + r * 28 + 2 + label] = 255;
                px[i * 784 + r * 28 + 15 + label] = 200;
            }
        }
    };
    std::vector<std::uint8_t> px, lb;
    make(n_train, 0, px, lb);
    write_idx_images(dir / "train-images-idx3-ubyte", n_train, 28, 28, px);
    write_idx_labels(dir / "train-labels-idx1-ubyte", lb);
    make(n_test, 3, px, lb);
    write_idx_images(dir / "t10k-images-idx3-ubyte", n_test, 28, 28, px);
    write_idx_labels(dir / "t10k-labels-idx1-ubyte", lb);
}

} // namespace bijepa::testing
