#include "cosseg/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace cosseg {

std::string to_string(Direction d) {
    return d == Direction::Uplink ? "up" : "down";
}

Direction direction_from_string(const std::string& token) {
    if (token == "up" || token == "0") return Direction::Uplink;
    if (token == "down" || token == "1") return Direction::Downlink;
    throw Error("unknown direction token '" + token + "' (expected up, down, 0 or 1)");
}

CosLabel::CosLabel(int id_, std::string name_) : id(id_), name(std::move(name_)) {
    if (id < 0) throw Error("CoS label id must be non-negative");
    if (name.empty()) throw Error("CoS label name must be non-empty");
    if (name.find(',') != std::string::npos || name.find('\n') != std::string::npos)
        throw Error("CoS label name '" + name + "' may not contain commas or newlines");
}

void TrafficStream::validate() const {
    for (size_t i = 0; i < packets.size(); ++i) {
        const PacketRecord& p = packets[i];
        if (p.length < 1)
            throw Error("stream " + source + ": packet " + std::to_string(i) +
                        " has length " + std::to_string(p.length) + " (must be >= 1)");
        if (!(p.timestamp >= 0.0))
            throw Error("stream " + source + ": packet " + std::to_string(i) +
                        " has negative timestamp");
        if (!(p.iat >= 0.0))
            throw Error("stream " + source + ": packet " + std::to_string(i) +
                        " has negative iat");
        if (i == 0) {
            if (p.iat != 0.0)
                throw Error("stream " + source + ": first packet iat must be 0");
        } else {
            const PacketRecord& prev = packets[i - 1];
            if (p.timestamp < prev.timestamp)
                throw Error("stream " + source + ": timestamps decrease at packet " +
                            std::to_string(i));
            double delta = p.timestamp - prev.timestamp;
            if (std::fabs(p.iat - delta) > 1e-9)
                throw Error("stream " + source + ": iat of packet " + std::to_string(i) +
                            " disagrees with timestamp delta");
        }
    }
}

void recompute_iats(std::vector<PacketRecord>& packets) {
    for (size_t i = 0; i < packets.size(); ++i)
        packets[i].iat = i == 0 ? 0.0 : packets[i].timestamp - packets[i - 1].timestamp;
}

SegmentVector SegmentVector::from_array(const std::array<double, kNumFeatures>& a) {
    SegmentVector v;
    v.len_min = a[0];
    v.len_max = a[1];
    v.len_mean = a[2];
    v.len_std = a[3];
    v.iat_min = a[4];
    v.iat_max = a[5];
    v.iat_mean = a[6];
    v.iat_std = a[7];
    v.up_count = a[8];
    v.down_count = a[9];
    v.duration = a[10];
    return v;
}

namespace {

// a <= b up to relative rounding slack
bool leq(double a, double b) {
    double slack = 1e-12 * std::max(std::fabs(a), std::fabs(b));
    return a <= b + slack;
}

bool is_count(double x) { return x >= 0.0 && x == std::floor(x); }

} // namespace

void SegmentVector::validate(int n) const {
    if (!(leq(len_min, len_mean) && leq(len_mean, len_max)))
        throw Error("segment vector: len_min <= len_mean <= len_max violated");
    if (!(leq(iat_min, iat_mean) && leq(iat_mean, iat_max)))
        throw Error("segment vector: iat_min <= iat_mean <= iat_max violated");
    if (!(len_std >= 0.0) || !(iat_std >= 0.0))
        throw Error("segment vector: negative standard deviation");
    if (!is_count(up_count) || !is_count(down_count))
        throw Error("segment vector: up/down counts must be non-negative integers");
    if (n >= 0 && up_count + down_count != static_cast<double>(n))
        throw Error("segment vector: up_count + down_count != segment size");
    if (!(duration >= 0.0))
        throw Error("segment vector: negative duration");
}

const std::array<std::string, kNumFeatures>& feature_names() {
    static const std::array<std::string, kNumFeatures> names = {
        "len_min", "len_max", "len_mean", "len_std",
        "iat_min", "iat_max", "iat_mean", "iat_std",
        "up_count", "down_count", "duration"};
    return names;
}

std::vector<CosLabel> SegmentMatrix::classes() const {
    std::vector<CosLabel> out;
    for (const Row& r : rows) {
        bool seen = false;
        for (const CosLabel& c : out) {
            if (c.id == r.label.id) {
                if (c.name != r.label.name)
                    throw Error("matrix: label id " + std::to_string(c.id) +
                                " used with two names ('" + c.name + "', '" + r.label.name + "')");
                seen = true;
                break;
            }
        }
        if (!seen) out.push_back(r.label);
    }
    std::sort(out.begin(), out.end(), [](const CosLabel& a, const CosLabel& b) { return a.id < b.id; });
    for (size_t i = 0; i < out.size(); ++i)
        if (out[i].id != static_cast<int>(i))
            throw Error("matrix: label ids are not dense 0..K-1");
    return out;
}

} // namespace cosseg
