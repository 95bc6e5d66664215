#pragma once

// Hand-built classic pcap files: 24-byte global header followed by 16-byte
// record headers and raw frame bytes. The swapped variants store every header
// field byte-reversed; frame contents stay in network byte order.

#include <cstdint>
#include <string>
#include <utility>

namespace cosseg::test {

namespace detail {

inline void put16(std::string& out, uint16_t v, bool swapped) {
    if (swapped)
        out += {static_cast<char>(v >> 8), static_cast<char>(v & 0xFF)};
    else
        out += {static_cast<char>(v & 0xFF), static_cast<char>(v >> 8)};
}

inline void put32(std::string& out, uint32_t v, bool swapped) {
    char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                 static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
    if (swapped) std::swap(b[0], b[3]), std::swap(b[1], b[2]);
    out.append(b, 4);
}

inline std::string global_header(bool swapped, bool nanos, uint32_t link_type) {
    std::string out;
    put32(out, nanos ? 0xa1b23c4du : 0xa1b2c3d4u, swapped);
    put16(out, 2, swapped);  // version major
    put16(out, 4, swapped);  // version minor
    put32(out, 0, swapped);  // thiszone
    put32(out, 0, swapped);  // sigfigs
    put32(out, 65535, swapped);
    put32(out, link_type, swapped);
    return out;
}

inline std::string eth_ipv4_frame(const uint8_t src[4], const uint8_t dst[4]) {
    std::string f;
    f.append(6, '\x02');           // dst MAC
    f.append(6, '\x04');           // src MAC
    f += {'\x08', '\x00'};         // ethertype IPv4
    f += '\x45';                   // version 4, IHL 5
    f += '\x00';                   // DSCP
    f += {'\x00', '\x28'};         // total length (40, unused by the reader)
    f.append(4, '\x00');           // id, flags
    f += '\x40';                   // TTL
    f += '\x11';                   // protocol UDP
    f += {'\x00', '\x00'};         // checksum
    f.append(reinterpret_cast<const char*>(src), 4);
    f.append(reinterpret_cast<const char*>(dst), 4);
    return f;
}

inline std::string ipv6_frame(const uint8_t src[16], const uint8_t dst[16]) {
    std::string f;
    f += '\x60';          // version 6
    f.append(3, '\x00');  // traffic class / flow label
    f += {'\x00', '\x08'}; // payload length
    f += '\x11';          // next header UDP
    f += '\x40';          // hop limit
    f.append(reinterpret_cast<const char*>(src), 16);
    f.append(reinterpret_cast<const char*>(dst), 16);
    return f;
}

} // namespace detail

// Two Ethernet/IPv4 frames: client 10.0.0.5 sends 60 bytes at t=0, receives
// 1500 bytes at t=0.001 s.
inline std::string two_frame_pcap(bool swapped, bool nanos) {
    const uint8_t client[4] = {10, 0, 0, 5};
    const uint8_t server[4] = {93, 184, 216, 34};

    std::string out = detail::global_header(swapped, nanos, 1);

    const std::string up = detail::eth_ipv4_frame(client, server);
    detail::put32(out, 1000, swapped); // ts_sec
    detail::put32(out, 0, swapped);    // ts fraction
    detail::put32(out, static_cast<uint32_t>(up.size()), swapped);
    detail::put32(out, 60, swapped); // orig_len
    out += up;

    const std::string down = detail::eth_ipv4_frame(server, client);
    detail::put32(out, 1000, swapped);
    detail::put32(out, nanos ? 1000000u : 1000u, swapped); // +0.001 s
    detail::put32(out, static_cast<uint32_t>(down.size()), swapped);
    detail::put32(out, 1500, swapped);
    out += down;
    return out;
}

inline std::string pcap_header_only() { return detail::global_header(false, false, 1); }

// Two raw-IP (link type 101) IPv6 frames between 2001:db8::1 and 2001:db8::2.
inline std::string rawip_ipv6_pcap() {
    const uint8_t client[16] = {0x20, 0x01, 0x0d, 0xb8, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1};
    const uint8_t server[16] = {0x20, 0x01, 0x0d, 0xb8, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 2};

    std::string out = detail::global_header(false, false, 101);

    const std::string up = detail::ipv6_frame(client, server);
    detail::put32(out, 2000, false);
    detail::put32(out, 0, false);
    detail::put32(out, static_cast<uint32_t>(up.size()), false);
    detail::put32(out, 120, false);
    out += up;

    const std::string down = detail::ipv6_frame(server, client);
    detail::put32(out, 2000, false);
    detail::put32(out, 500, false);
    detail::put32(out, static_cast<uint32_t>(down.size()), false);
    detail::put32(out, 1400, false);
    out += down;
    return out;
}

} // namespace cosseg::test
