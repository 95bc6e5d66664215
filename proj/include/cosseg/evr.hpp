#pragma once

#include <span>
#include <string>
#include <vector>

#include "cosseg/exec.hpp"
#include "cosseg/traffic.hpp"

namespace cosseg {

// Half-open packet-index range [begin, end) of one segment within a stream.
struct SegmentRange {
    size_t begin = 0;
    size_t end = 0;

    size_t count() const { return end - begin; }
    bool operator==(const SegmentRange&) const = default;
};

// Consecutive non-overlapping N-packet windows [0,n), [n,2n), ...
// A trailing partial window is discarded; returns floor(len/n) ranges.
std::vector<SegmentRange> segment(const TrafficStream& stream, int n);

// Reduces one segment to its 11-feature vector. Length and iat statistics use
// population standard deviation. The first packet of a segment keeps its
// stream-level iat, i.e. the gap back to the previous segment's last packet
// (0 for the stream's first packet). duration = last - first timestamp.
SegmentVector vectorize(const TrafficStream& stream, SegmentRange range);

// Vectorizes many segments of one stream; the parallel path is the OpenMP
// kernel, the serial one is the reference used by tests and the bench tool.
std::vector<SegmentVector> vectorize_all(const TrafficStream& stream,
                                         std::span<const SegmentRange> ranges,
                                         ExecPolicy policy = ExecPolicy::Parallel);

// Builds the training matrix: exactly s_t rows per class taken from the head
// of each class's segment sequence (streams of the same class are consumed in
// input order). Throws if any class cannot supply s_t segments.
SegmentMatrix evr(std::span<const TrafficStream> streams, int s_t, int n,
                  ExecPolicy policy = ExecPolicy::Parallel);

// Everything after the first `skip` segments per class; may be empty.
// evr(s_t, n) and evr_tail(skip = s_t, n) exactly partition the segments.
SegmentMatrix evr_tail(std::span<const TrafficStream> streams, int skip, int n,
                       ExecPolicy policy = ExecPolicy::Parallel);

// Feature-matrix CSV: the 11 feature columns in feature_names() order plus a
// trailing `label` column. Doubles are written shortest-round-trip.
void write_matrix_csv(const SegmentMatrix& matrix, const std::string& path);
SegmentMatrix read_matrix_csv(const std::string& path);

} // namespace cosseg
