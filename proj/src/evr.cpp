#include "cosseg/evr.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace cosseg {

std::vector<SegmentRange> segment(const TrafficStream& stream, int n) {
    if (n < 1) throw Error("segment: segment size must be >= 1, got " + std::to_string(n));
    const size_t count = stream.size() / static_cast<size_t>(n);
    std::vector<SegmentRange> ranges;
    ranges.reserve(count);
    for (size_t i = 0; i < count; ++i)
        ranges.push_back({i * static_cast<size_t>(n), (i + 1) * static_cast<size_t>(n)});
    return ranges;
}

SegmentVector vectorize(const TrafficStream& stream, SegmentRange range) {
    if (range.begin >= range.end) throw Error("vectorize: empty segment range");
    if (range.end > stream.size()) throw Error("vectorize: segment range exceeds stream length");

    const double cnt = static_cast<double>(range.count());
    SegmentVector v;
    v.len_min = v.iat_min = std::numeric_limits<double>::infinity();
    v.len_max = v.iat_max = -std::numeric_limits<double>::infinity();

    double len_sum = 0.0, iat_sum = 0.0;
    for (size_t i = range.begin; i < range.end; ++i) {
        const PacketRecord& p = stream.packets[i];
        const double len = static_cast<double>(p.length);
        v.len_min = std::min(v.len_min, len);
        v.len_max = std::max(v.len_max, len);
        len_sum += len;
        v.iat_min = std::min(v.iat_min, p.iat);
        v.iat_max = std::max(v.iat_max, p.iat);
        iat_sum += p.iat;
        if (p.direction == Direction::Uplink)
            v.up_count += 1.0;
        else
            v.down_count += 1.0;
    }
    v.len_mean = len_sum / cnt;
    v.iat_mean = iat_sum / cnt;

    double len_sq = 0.0, iat_sq = 0.0;
    for (size_t i = range.begin; i < range.end; ++i) {
        const PacketRecord& p = stream.packets[i];
        const double dl = static_cast<double>(p.length) - v.len_mean;
        const double di = p.iat - v.iat_mean;
        len_sq += dl * dl;
        iat_sq += di * di;
    }
    v.len_std = std::sqrt(len_sq / cnt);
    v.iat_std = std::sqrt(iat_sq / cnt);
    v.duration = stream.packets[range.end - 1].timestamp - stream.packets[range.begin].timestamp;
    return v;
}

std::vector<SegmentVector> vectorize_all(const TrafficStream& stream,
                                         std::span<const SegmentRange> ranges,
                                         ExecPolicy policy) {
    std::vector<SegmentVector> out(ranges.size());
    if (policy == ExecPolicy::Parallel) {
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < static_cast<int64_t>(ranges.size()); ++i)
            out[static_cast<size_t>(i)] = vectorize(stream, ranges[static_cast<size_t>(i)]);
    } else {
        for (size_t i = 0; i < ranges.size(); ++i)
            out[i] = vectorize(stream, ranges[i]);
    }
    return out;
}

namespace {

// Marks per stream which of its segments land in the matrix: the head takes
// the first s_t segments of each class's concatenated sequence, the tail takes
// everything after the first `skip`. Streams of one class are consumed in
// input order and segments never span streams.
SegmentMatrix build_matrix(std::span<const TrafficStream> streams, int n,
                           int head_count, int skip, bool is_head, ExecPolicy policy) {
    if (n < 1) throw Error("evr: segment size must be >= 1, got " + std::to_string(n));

    struct StreamSel {
        std::vector<SegmentRange> selected;
    };
    std::vector<StreamSel> sel(streams.size());
    std::map<int, int64_t> seen_per_class;    // label id -> segments consumed so far
    std::map<int, int64_t> packets_per_class; // label id -> total packets (for errors)
    std::map<int, std::string> class_name;

    for (size_t si = 0; si < streams.size(); ++si) {
        const TrafficStream& s = streams[si];
        packets_per_class[s.label.id] += static_cast<int64_t>(s.size());
        auto [it, inserted] = class_name.emplace(s.label.id, s.label.name);
        if (!inserted && it->second != s.label.name)
            throw Error("evr: label id " + std::to_string(s.label.id) +
                        " used with two names ('" + it->second + "', '" + s.label.name + "')");
        int64_t& seen = seen_per_class[s.label.id];
        for (const SegmentRange& r : segment(s, n)) {
            const int64_t global_idx = seen++;
            const bool take = is_head ? global_idx < head_count : global_idx >= skip;
            if (take) sel[si].selected.push_back(r);
        }
    }

    if (is_head) {
        for (const auto& [id, seen] : seen_per_class) {
            if (seen < head_count) {
                const int64_t need = static_cast<int64_t>(head_count) * n;
                throw Error("evr: class \"" + class_name[id] + "\" needs " + std::to_string(need) +
                            " packets (" + std::to_string(head_count) + " segments of " +
                            std::to_string(n) + "), has " + std::to_string(packets_per_class[id]));
            }
        }
    }

    SegmentMatrix m;
    m.n = n;
    for (size_t si = 0; si < streams.size(); ++si) {
        m.provenance.push_back(streams[si].source);
        std::vector<SegmentVector> vecs = vectorize_all(streams[si], sel[si].selected, policy);
        for (SegmentVector& v : vecs) m.rows.push_back({std::move(v), streams[si].label});
    }
    return m;
}

} // namespace

SegmentMatrix evr(std::span<const TrafficStream> streams, int s_t, int n, ExecPolicy policy) {
    if (s_t < 0) throw Error("evr: segment count must be >= 0, got " + std::to_string(s_t));
    return build_matrix(streams, n, s_t, 0, true, policy);
}

SegmentMatrix evr_tail(std::span<const TrafficStream> streams, int skip, int n, ExecPolicy policy) {
    if (skip < 0) throw Error("evr_tail: skip must be >= 0, got " + std::to_string(skip));
    return build_matrix(streams, n, 0, skip, false, policy);
}

namespace {

std::string format_double(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

} // namespace

void write_matrix_csv(const SegmentMatrix& matrix, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    const auto& names = feature_names();
    for (int f = 0; f < kNumFeatures; ++f) out << names[f] << ',';
    out << "label\n";
    for (const SegmentMatrix::Row& r : matrix.rows) {
        const auto a = r.v.as_array();
        for (int f = 0; f < kNumFeatures; ++f) out << format_double(a[f]) << ',';
        out << r.label.name << '\n';
    }
    if (!out) throw Error("failed writing '" + path + "'");
}

SegmentMatrix read_matrix_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");

    auto strip_cr = [](std::string& s) {
        if (!s.empty() && s.back() == '\r') s.pop_back();
    };

    std::string line;
    if (!std::getline(in, line)) throw Error(path + ": empty file");
    strip_cr(line);

    std::string expected;
    for (const auto& nme : feature_names()) expected += nme + ',';
    expected += "label";
    if (line != expected)
        throw Error(path + ":1: unexpected header (expected '" + expected + "')");

    SegmentMatrix m;
    std::vector<std::string> names; // label id by first appearance
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty()) continue;

        std::array<double, kNumFeatures> a{};
        size_t pos = 0;
        for (int f = 0; f < kNumFeatures; ++f) {
            size_t comma = line.find(',', pos);
            if (comma == std::string::npos)
                throw Error(path + ":" + std::to_string(line_no) + ": expected 12 columns");
            auto res = std::from_chars(line.data() + pos, line.data() + comma, a[f]);
            if (res.ec != std::errc() || res.ptr != line.data() + comma)
                throw Error(path + ":" + std::to_string(line_no) + ": bad number in column " +
                            std::to_string(f + 1));
            pos = comma + 1;
        }
        std::string label_name = line.substr(pos);
        if (label_name.empty())
            throw Error(path + ":" + std::to_string(line_no) + ": empty label");

        auto it = std::find(names.begin(), names.end(), label_name);
        int id;
        if (it == names.end()) {
            id = static_cast<int>(names.size());
            names.push_back(label_name);
        } else {
            id = static_cast<int>(it - names.begin());
        }
        m.rows.push_back({SegmentVector::from_array(a), CosLabel(id, label_name)});
    }
    if (m.rows.empty()) throw Error(path + ": no data rows");

    const double n0 = m.rows.front().v.up_count + m.rows.front().v.down_count;
    m.n = static_cast<int>(n0);
    for (size_t i = 0; i < m.rows.size(); ++i) {
        const SegmentMatrix::Row& r = m.rows[i];
        if (r.v.up_count + r.v.down_count != n0)
            throw Error(path + ": row " + std::to_string(i + 1) +
                        " was produced with a different segment size");
        r.v.validate(m.n);
    }
    m.provenance.push_back(path);
    return m;
}

} // namespace cosseg
