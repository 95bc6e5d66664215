#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "cosseg/rng.hpp"
#include "cosseg/traffic.hpp"

namespace cosseg::test {

// Unstructured random stream: arbitrary lengths, gaps and directions.
inline TrafficStream random_stream(uint64_t seed, int n_packets) {
    Rng rng(seed);
    TrafficStream s;
    s.label = CosLabel(0, "random");
    s.source = "random#" + std::to_string(seed);
    double t = 0.0;
    for (int i = 0; i < n_packets; ++i) {
        PacketRecord p;
        if (i > 0) t += rng.next_exponential(0.01);
        p.timestamp = t;
        p.length = 40 + static_cast<int64_t>(rng.next_below(1475));
        p.direction = rng.next_bernoulli(0.5) ? Direction::Uplink : Direction::Downlink;
        s.packets.push_back(p);
    }
    recompute_iats(s.packets);
    return s;
}

// Scratch directory under the current working directory, wiped on creation.
inline std::filesystem::path scratch_dir(const std::string& name) {
    std::filesystem::path dir = std::filesystem::current_path() / ("scratch_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void spit(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

} // namespace cosseg::test
