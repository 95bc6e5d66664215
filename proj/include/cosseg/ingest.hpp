#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "cosseg/traffic.hpp"

namespace cosseg {

// Client-side address or CIDR prefix used to derive packet direction from a
// capture: src matches -> uplink, dst matches -> downlink.
struct EndpointSpec {
    int family = 0;                  // AF_INET or AF_INET6
    std::array<uint8_t, 16> address{}; // network byte order, IPv4 in first 4 bytes
    int prefix_len = 0;

    // "10.0.0.5", "10.0.0.0/24", "2001:db8::1", "2001:db8::/32"
    static EndpointSpec parse(const std::string& text);

    bool matches(const uint8_t* addr, int addr_family) const;
};

struct CsvReadOptions {
    // Out-of-order timestamps up to this depth are repaired by a stable sort;
    // anything worse is treated as a corrupt file.
    double sort_tolerance = 1e-3;
    // Allowed disagreement between a present iat column and timestamp deltas.
    double iat_tolerance = 1e-6;
};

// Reads the packet-log CSV schema `timestamp,length,direction[,iat]`.
// Timestamps are rebased to the first packet, iats recomputed from timestamps;
// a present iat column is cross-checked against the recomputed values.
TrafficStream read_csv(const std::string& path, const CosLabel& label,
                       const CsvReadOptions& opts = {});

struct PcapSummary {
    int64_t frames_total = 0;
    int64_t frames_kept = 0;
    int64_t skipped_both = 0;    // endpoint matched src and dst
    int64_t skipped_neither = 0; // endpoint matched neither side
    int64_t skipped_undecodable = 0; // non-IP or truncated layer 2/3

    int64_t skipped() const { return skipped_both + skipped_neither + skipped_undecodable; }
    std::string to_string() const;
};

// Classic pcap only (magic 0xa1b2c3d4 / 0xa1b23c4d, native or byte-swapped),
// link types Ethernet (1) and raw IP (101). Record length is the original
// frame length field; timestamps are rebased to the first kept frame. Frames
// whose direction cannot be attributed are dropped and counted in the summary.
TrafficStream read_pcap(const std::string& path, const EndpointSpec& endpoint,
                        const CosLabel& label, PcapSummary* summary = nullptr);

} // namespace cosseg
