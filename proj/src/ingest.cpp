#include "cosseg/ingest.hpp"

#include <arpa/inet.h>
#include <sys/socket.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace cosseg {

EndpointSpec EndpointSpec::parse(const std::string& text) {
    std::string addr = text;
    int prefix = -1;
    if (size_t slash = text.find('/'); slash != std::string::npos) {
        addr = text.substr(0, slash);
        const std::string p = text.substr(slash + 1);
        auto res = std::from_chars(p.data(), p.data() + p.size(), prefix);
        if (res.ec != std::errc() || res.ptr != p.data() + p.size() || prefix < 0)
            throw Error("endpoint '" + text + "': bad prefix length");
    }

    EndpointSpec spec;
    if (inet_pton(AF_INET, addr.c_str(), spec.address.data()) == 1) {
        spec.family = AF_INET;
        spec.prefix_len = prefix < 0 ? 32 : prefix;
        if (spec.prefix_len > 32) throw Error("endpoint '" + text + "': IPv4 prefix > 32");
    } else if (inet_pton(AF_INET6, addr.c_str(), spec.address.data()) == 1) {
        spec.family = AF_INET6;
        spec.prefix_len = prefix < 0 ? 128 : prefix;
        if (spec.prefix_len > 128) throw Error("endpoint '" + text + "': IPv6 prefix > 128");
    } else {
        throw Error("endpoint '" + text + "': not a valid IPv4/IPv6 address or prefix");
    }
    return spec;
}

bool EndpointSpec::matches(const uint8_t* addr, int addr_family) const {
    if (addr_family != family) return false;
    int bits = prefix_len;
    int i = 0;
    for (; bits >= 8; bits -= 8, ++i)
        if (addr[i] != address[static_cast<size_t>(i)]) return false;
    if (bits > 0) {
        const uint8_t mask = static_cast<uint8_t>(0xFF << (8 - bits));
        if ((addr[i] & mask) != (address[static_cast<size_t>(i)] & mask)) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// CSV packet log
// ---------------------------------------------------------------------------

namespace {

struct CsvRow {
    PacketRecord packet;
    double file_iat = -1.0; // < 0 when the column is absent
    size_t line_no = 0;
};

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    size_t pos = 0;
    for (;;) {
        size_t comma = line.find(',', pos);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(pos));
            break;
        }
        fields.push_back(line.substr(pos, comma - pos));
        pos = comma + 1;
    }
    return fields;
}

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& field, const std::string& where) {
    double x = 0.0;
    const std::string t = trim(field);
    auto res = std::from_chars(t.data(), t.data() + t.size(), x);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size())
        throw Error(where + ": bad number '" + field + "'");
    return x;
}

int64_t parse_int(const std::string& field, const std::string& where) {
    int64_t x = 0;
    const std::string t = trim(field);
    auto res = std::from_chars(t.data(), t.data() + t.size(), x);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size())
        throw Error(where + ": bad integer '" + field + "'");
    return x;
}

} // namespace

TrafficStream read_csv(const std::string& path, const CosLabel& label,
                       const CsvReadOptions& opts) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");

    auto strip_cr = [](std::string& s) {
        if (!s.empty() && s.back() == '\r') s.pop_back();
    };

    std::string line;
    if (!std::getline(in, line)) throw Error(path + ": empty file");
    strip_cr(line);

    bool has_iat = false;
    if (line == "timestamp,length,direction")
        has_iat = false;
    else if (line == "timestamp,length,direction,iat")
        has_iat = true;
    else
        throw Error(path + ":1: unexpected header '" + line +
                    "' (expected 'timestamp,length,direction[,iat]')");

    std::vector<CsvRow> rows;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(line_no);

        std::vector<std::string> fields = split_fields(line);
        const size_t expected = has_iat ? 4u : 3u;
        if (fields.size() != expected)
            throw Error(where + ": expected " + std::to_string(expected) + " fields, got " +
                        std::to_string(fields.size()));

        CsvRow row;
        row.line_no = line_no;
        row.packet.timestamp = parse_double(fields[0], where);
        if (!(row.packet.timestamp >= 0.0)) throw Error(where + ": negative timestamp");
        row.packet.length = parse_int(fields[1], where);
        if (row.packet.length < 1)
            throw Error(where + ": packet length must be >= 1, got " +
                        std::to_string(row.packet.length));
        try {
            row.packet.direction = direction_from_string(trim(fields[2]));
        } catch (const Error& e) {
            throw Error(where + ": " + e.what());
        }
        if (has_iat) {
            row.file_iat = parse_double(fields[3], where);
            if (!(row.file_iat >= 0.0)) throw Error(where + ": negative iat");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw Error(path + ": no packet rows");

    // Capture jitter may reorder rows slightly; deep inversions mean the file
    // is corrupt rather than jittered.
    double running_max = rows.front().packet.timestamp;
    for (const CsvRow& r : rows) {
        if (running_max - r.packet.timestamp > opts.sort_tolerance)
            throw Error(path + ":" + std::to_string(r.line_no) +
                        ": timestamp out of order by more than sort tolerance");
        running_max = std::max(running_max, r.packet.timestamp);
    }
    std::stable_sort(rows.begin(), rows.end(), [](const CsvRow& a, const CsvRow& b) {
        return a.packet.timestamp < b.packet.timestamp;
    });

    TrafficStream stream;
    stream.label = label;
    stream.source = path;
    stream.packets.reserve(rows.size());
    const double base = rows.front().packet.timestamp;
    for (CsvRow& r : rows) {
        r.packet.timestamp -= base;
        stream.packets.push_back(r.packet);
    }
    recompute_iats(stream.packets);

    if (has_iat) {
        for (size_t i = 0; i < rows.size(); ++i) {
            const double delta = std::fabs(rows[i].file_iat - stream.packets[i].iat);
            if (delta > opts.iat_tolerance)
                throw Error(path + ":" + std::to_string(rows[i].line_no) +
                            ": iat column disagrees with timestamp delta by " +
                            std::to_string(delta));
        }
    }

    stream.validate();
    return stream;
}

// ---------------------------------------------------------------------------
// classic pcap
// ---------------------------------------------------------------------------

namespace {

constexpr uint32_t kMagicMicro = 0xa1b2c3d4u;
constexpr uint32_t kMagicMicroSwapped = 0xd4c3b2a1u;
constexpr uint32_t kMagicNano = 0xa1b23c4du;
constexpr uint32_t kMagicNanoSwapped = 0x4d3cb2a1u;

constexpr uint32_t kLinkEthernet = 1;
constexpr uint32_t kLinkRawIp = 101;

uint32_t swap32(uint32_t x) { return __builtin_bswap32(x); }
uint16_t load_be16(const uint8_t* p) { return static_cast<uint16_t>(p[0] << 8 | p[1]); }

uint32_t read_u32(const uint8_t* p, bool swapped) {
    uint32_t x;
    std::memcpy(&x, p, 4);
    return swapped ? swap32(x) : x;
}

// src/dst network addresses of one frame; family 0 when not attributable
struct FrameAddrs {
    int family = 0;
    const uint8_t* src = nullptr;
    const uint8_t* dst = nullptr;
};

FrameAddrs decode_ip(const uint8_t* data, size_t len) {
    FrameAddrs a;
    if (len < 1) return a;
    const int version = data[0] >> 4;
    if (version == 4 && len >= 20) {
        a.family = AF_INET;
        a.src = data + 12;
        a.dst = data + 16;
    } else if (version == 6 && len >= 40) {
        a.family = AF_INET6;
        a.src = data + 8;
        a.dst = data + 24;
    }
    return a;
}

FrameAddrs decode_frame(const uint8_t* data, size_t len, uint32_t link_type) {
    if (link_type == kLinkRawIp) return decode_ip(data, len);
    // Ethernet, with at most one 802.1Q tag
    if (len < 14) return {};
    uint16_t ethertype = load_be16(data + 12);
    size_t off = 14;
    if (ethertype == 0x8100 && len >= 18) {
        ethertype = load_be16(data + 16);
        off = 18;
    }
    if (ethertype == 0x0800 || ethertype == 0x86DD) return decode_ip(data + off, len - off);
    return {};
}

} // namespace

std::string PcapSummary::to_string() const {
    std::ostringstream os;
    os << "frames=" << frames_total << " kept=" << frames_kept
       << " skipped_both=" << skipped_both << " skipped_neither=" << skipped_neither
       << " skipped_undecodable=" << skipped_undecodable;
    return os.str();
}

TrafficStream read_pcap(const std::string& path, const EndpointSpec& endpoint,
                        const CosLabel& label, PcapSummary* summary) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");

    uint8_t ghdr[24];
    in.read(reinterpret_cast<char*>(ghdr), sizeof(ghdr));
    if (in.gcount() != static_cast<std::streamsize>(sizeof(ghdr)))
        throw Error(path + ": truncated pcap global header");

    uint32_t magic;
    std::memcpy(&magic, ghdr, 4);
    bool swapped = false;
    bool nanos = false;
    switch (magic) {
    case kMagicMicro: break;
    case kMagicMicroSwapped: swapped = true; break;
    case kMagicNano: nanos = true; break;
    case kMagicNanoSwapped: swapped = true; nanos = true; break;
    default: {
        std::ostringstream os;
        os << path << ": unknown pcap magic 0x" << std::hex << magic;
        throw Error(os.str());
    }
    }

    const uint32_t link_type = read_u32(ghdr + 20, swapped);
    if (link_type != kLinkEthernet && link_type != kLinkRawIp)
        throw Error(path + ": unsupported link type " + std::to_string(link_type) +
                    " (supported: Ethernet (1), raw IP (101))");

    PcapSummary stats;
    TrafficStream stream;
    stream.label = label;
    stream.source = path;

    const double frac_scale = nanos ? 1e-9 : 1e-6;
    bool have_base = false;
    int64_t base_sec = 0, base_frac = 0;

    std::vector<uint8_t> frame;
    for (;;) {
        uint8_t rhdr[16];
        in.read(reinterpret_cast<char*>(rhdr), sizeof(rhdr));
        if (in.gcount() == 0) break; // clean end of file
        if (in.gcount() != static_cast<std::streamsize>(sizeof(rhdr)))
            throw Error(path + ": truncated frame header at frame " +
                        std::to_string(stats.frames_total));

        const uint32_t ts_sec = read_u32(rhdr + 0, swapped);
        const uint32_t ts_frac = read_u32(rhdr + 4, swapped);
        const uint32_t incl_len = read_u32(rhdr + 8, swapped);
        const uint32_t orig_len = read_u32(rhdr + 12, swapped);

        frame.resize(incl_len);
        in.read(reinterpret_cast<char*>(frame.data()), incl_len);
        if (in.gcount() != static_cast<std::streamsize>(incl_len))
            throw Error(path + ": truncated frame body at frame " +
                        std::to_string(stats.frames_total));
        ++stats.frames_total;

        const FrameAddrs addrs = decode_frame(frame.data(), frame.size(), link_type);
        if (addrs.family == 0) {
            ++stats.skipped_undecodable;
            continue;
        }
        const bool src_match = endpoint.matches(addrs.src, addrs.family);
        const bool dst_match = endpoint.matches(addrs.dst, addrs.family);
        if (src_match == dst_match) {
            // A wrong direction corrupts up/down counts silently, so frames we
            // cannot attribute are dropped and counted instead of defaulted.
            ++(src_match ? stats.skipped_both : stats.skipped_neither);
            continue;
        }

        if (orig_len == 0) {
            // zero-length frames break len_min semantics and are rejected
            ++stats.skipped_undecodable;
            continue;
        }

        if (!have_base) {
            base_sec = ts_sec;
            base_frac = ts_frac;
            have_base = true;
        }
        PacketRecord p;
        p.timestamp = static_cast<double>(static_cast<int64_t>(ts_sec) - base_sec) +
                      static_cast<double>(static_cast<int64_t>(ts_frac) - base_frac) * frac_scale;
        p.length = static_cast<int64_t>(orig_len);
        p.direction = src_match ? Direction::Uplink : Direction::Downlink;
        stream.packets.push_back(p);
        ++stats.frames_kept;
    }

    // Captures are normally in order; repair stray reordering, then rebase so
    // the stream starts at t = 0 even if the first kept frame was not earliest.
    std::stable_sort(stream.packets.begin(), stream.packets.end(),
                     [](const PacketRecord& a, const PacketRecord& b) {
                         return a.timestamp < b.timestamp;
                     });
    if (!stream.packets.empty()) {
        const double base = stream.packets.front().timestamp;
        for (PacketRecord& p : stream.packets) p.timestamp -= base;
    }
    recompute_iats(stream.packets);
    stream.validate();
    if (summary) *summary = stats;
    return stream;
}

} // namespace cosseg
