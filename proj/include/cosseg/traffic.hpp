#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace cosseg {

// Base error type for everything the library throws.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

enum class Direction : int { Uplink = 0, Downlink = 1 };

std::string to_string(Direction d);
// accepts "up"/"down"/"0"/"1"; throws on anything else
Direction direction_from_string(const std::string& token);

// One captured packet. Timestamps are seconds relative to the first packet of
// the capture, so double precision is spent on deltas rather than the epoch.
struct PacketRecord {
    double timestamp = 0.0; // seconds since first packet of the capture
    int64_t length = 0;     // original frame length in bytes, >= 1
    Direction direction = Direction::Uplink;
    double iat = 0.0;       // gap to previous packet in the stream, 0 for the first
};

struct CosLabel {
    int id = -1;
    std::string name;

    CosLabel() = default;
    CosLabel(int id_, std::string name_);

    bool operator==(const CosLabel& other) const { return id == other.id && name == other.name; }
};

// Ordered packets of one CoS class from one capture. Each input file is a
// pre-isolated stream of a single class; there is no flow demultiplexing.
struct TrafficStream {
    CosLabel label;
    std::vector<PacketRecord> packets;
    std::string source; // provenance tag (file path, generator profile, ...)

    size_t size() const { return packets.size(); }

    // Checks ordering, iat consistency (1e-9), positive lengths.
    // Throws Error naming the first offending packet.
    void validate() const;
};

// Sets iat[0] = 0 and iat[i] = t[i] - t[i-1] exactly (double arithmetic), so
// the stored iats and the timestamps can never drift apart.
void recompute_iats(std::vector<PacketRecord>& packets);

inline constexpr int kNumFeatures = 11;

// The 11-element statistical reduction of one N-packet segment.
// Standard deviations are population (divide by count).
struct SegmentVector {
    double len_min = 0, len_max = 0, len_mean = 0, len_std = 0; // bytes
    double iat_min = 0, iat_max = 0, iat_mean = 0, iat_std = 0; // seconds
    double up_count = 0, down_count = 0;                        // packet counts
    double duration = 0;                                        // seconds, last - first timestamp

    std::array<double, kNumFeatures> as_array() const {
        return {len_min, len_max, len_mean, len_std,
                iat_min, iat_max, iat_mean, iat_std,
                up_count, down_count, duration};
    }
    static SegmentVector from_array(const std::array<double, kNumFeatures>& a);

    // Type invariants; n < 0 skips the up+down == n check.
    void validate(int n = -1) const;
};

// Fixed column order used by the feature-matrix CSV and importance reports.
const std::array<std::string, kNumFeatures>& feature_names();

// Stacked segment vectors with their labels. All rows share the same N.
struct SegmentMatrix {
    struct Row {
        SegmentVector v;
        CosLabel label;
    };

    std::vector<Row> rows;
    int n = 0;                           // segment size the rows were produced with
    std::vector<std::string> provenance; // source tags of the contributing streams

    size_t size() const { return rows.size(); }

    // Distinct labels ordered by id; throws if ids are not dense 0..K-1.
    std::vector<CosLabel> classes() const;
};

} // namespace cosseg
