#include "cosseg/synthgen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "cosseg/rng.hpp"

namespace cosseg {

void LenDist::validate() const {
    switch (kind) {
    case Kind::Uniform:
        if (!(lo > 0.0) || !(hi >= lo)) throw Error("length dist: need 0 < lo <= hi");
        break;
    case Kind::Normal:
        if (!(mean1 > 0.0) || !(std1 >= 0.0)) throw Error("length dist: need mean > 0, std >= 0");
        break;
    case Kind::Bimodal:
        if (!(mean1 > 0.0) || !(std1 >= 0.0) || !(mean2 > 0.0) || !(std2 >= 0.0))
            throw Error("length dist: need positive means, non-negative stds");
        if (!(w1 >= 0.0 && w1 <= 1.0)) throw Error("length dist: mixture weight outside [0,1]");
        break;
    }
}

void IatDist::validate() const {
    switch (kind) {
    case Kind::Exponential:
        if (!(mean > 0.0)) throw Error("iat dist: exponential mean must be positive");
        break;
    case Kind::Lognormal:
        if (!(sigma >= 0.0) || !std::isfinite(mu)) throw Error("iat dist: bad lognormal params");
        break;
    case Kind::BurstPause:
        if (burst_len < 1) throw Error("iat dist: burst_len must be >= 1");
        if (!(intra_gap > 0.0) || !(pause_gap > 0.0))
            throw Error("iat dist: burst gaps must be positive");
        break;
    }
}

void DirModel::validate() const {
    for (double p : {p_up_init, p_up_up, p_down_down})
        if (!(p >= 0.0 && p <= 1.0)) throw Error("direction model: probability outside [0,1]");
}

void SynthProfile::validate() const {
    if (name.empty()) throw Error("profile name must be non-empty");
    if (label.id < 0 || label.name.empty()) throw Error("profile '" + name + "' has no label");
    len.validate();
    iat.validate();
    dir.validate();
}

namespace {

double draw_length(const LenDist& d, Rng& rng) {
    double x = 0.0;
    switch (d.kind) {
    case LenDist::Kind::Uniform:
        x = rng.next_uniform(d.lo, d.hi);
        break;
    case LenDist::Kind::Normal:
        x = rng.next_normal(d.mean1, d.std1);
        break;
    case LenDist::Kind::Bimodal:
        x = rng.next_bernoulli(d.w1) ? rng.next_normal(d.mean1, d.std1)
                                     : rng.next_normal(d.mean2, d.std2);
        break;
    }
    return std::clamp(std::round(x), kMinFrameBytes, kMaxFrameBytes);
}

// gap preceding packet i (i >= 1)
double draw_gap(const IatDist& d, int i, Rng& rng) {
    switch (d.kind) {
    case IatDist::Kind::Exponential:
        return rng.next_exponential(d.mean);
    case IatDist::Kind::Lognormal:
        return rng.next_lognormal(d.mu, d.sigma);
    case IatDist::Kind::BurstPause: {
        const bool at_pause = i % d.burst_len == 0;
        const double base = at_pause ? d.pause_gap : d.intra_gap;
        return base * rng.next_uniform(0.8, 1.2);
    }
    }
    return 0.0;
}

uint64_t profile_seed(const SynthProfile& p, uint64_t seed) {
    uint64_t h = seed;
    for (char c : p.name) h = mix64(h, static_cast<uint64_t>(static_cast<unsigned char>(c)));
    return mix64(h, static_cast<uint64_t>(p.label.id));
}

} // namespace

TrafficStream generate(const SynthProfile& profile, int n_packets, uint64_t seed) {
    profile.validate();
    if (n_packets < 1) throw Error("generate: need at least 1 packet");

    Rng rng(profile_seed(profile, seed));
    TrafficStream s;
    s.label = profile.label;
    s.source = "synth:" + profile.name + "#" + std::to_string(seed);
    s.packets.resize(static_cast<size_t>(n_packets));

    double t = 0.0;
    bool up = rng.next_bernoulli(profile.dir.p_up_init);
    for (int i = 0; i < n_packets; ++i) {
        PacketRecord& p = s.packets[static_cast<size_t>(i)];
        if (i > 0) {
            t += draw_gap(profile.iat, i, rng);
            const double p_stay = up ? profile.dir.p_up_up : profile.dir.p_down_down;
            if (!rng.next_bernoulli(p_stay)) up = !up;
        }
        p.timestamp = t;
        p.length = static_cast<int64_t>(draw_length(profile.len, rng));
        p.direction = up ? Direction::Uplink : Direction::Downlink;
    }
    recompute_iats(s.packets);
    return s;
}

std::vector<SynthProfile> builtin_profiles() {
    std::vector<SynthProfile> out(5);

    // Bulk downlink transfer: large frames, sustained small gaps.
    SynthProfile& ft = out[0];
    ft.name = "filetransfer";
    ft.label = CosLabel(0, "filetransfer");
    ft.sync = true;
    ft.len = {LenDist::Kind::Normal, 0, 0, 1300.0, 60.0, 0, 0, 1.0};
    ft.iat.kind = IatDist::Kind::Exponential;
    ft.iat.mean = 0.002;
    ft.dir = {0.1, 0.15, 0.97};

    // Streaming: bursts of large data frames with small control frames mixed
    // in, long buffer-refill pauses between bursts.
    SynthProfile& video = out[1];
    video.name = "video";
    video.label = CosLabel(1, "video");
    video.sync = true;
    video.len = {LenDist::Kind::Bimodal, 0, 0, 1350.0, 50.0, 200.0, 40.0, 0.8};
    video.iat.kind = IatDist::Kind::BurstPause;
    video.iat.burst_len = 25;
    video.iat.intra_gap = 0.001;
    video.iat.pause_gap = 0.15;
    video.dir = {0.15, 0.3, 0.9};

    // Small symmetric frames on a tight, nearly constant cadence.
    SynthProfile& voip = out[2];
    voip.name = "voip";
    voip.label = CosLabel(2, "voip");
    voip.sync = true;
    voip.len = {LenDist::Kind::Normal, 0, 0, 120.0, 10.0, 0, 0, 1.0};
    voip.iat.kind = IatDist::Kind::Lognormal;
    voip.iat.mu = std::log(0.02);
    voip.iat.sigma = 0.15;
    voip.dir = {0.5, 0.4, 0.4};

    // Sparse messaging with long heavy-tailed think-time gaps.
    SynthProfile& chat = out[3];
    chat.name = "chat";
    chat.label = CosLabel(3, "chat");
    chat.sync = false;
    chat.len = {LenDist::Kind::Normal, 0, 0, 350.0, 60.0, 0, 0, 1.0};
    chat.iat.kind = IatDist::Kind::Lognormal;
    chat.iat.mu = std::log(0.4);
    chat.iat.sigma = 0.8;
    chat.dir = {0.5, 0.75, 0.75};

    // Mixed frame sizes, symmetric directions, moderate gaps.
    SynthProfile& p2p = out[4];
    p2p.name = "p2p";
    p2p.label = CosLabel(4, "p2p");
    p2p.sync = false;
    p2p.len = {LenDist::Kind::Uniform, 60.0, 1400.0, 0, 0, 0, 0, 1.0};
    p2p.iat.kind = IatDist::Kind::Exponential;
    p2p.iat.mean = 0.008;
    p2p.dir = {0.5, 0.5, 0.5};

    for (const SynthProfile& p : out) p.validate();
    return out;
}

SynthProfile perturb(const SynthProfile& profile, double jitter, uint64_t seed) {
    if (!(jitter >= 0.0 && jitter < 1.0)) throw Error("perturb: jitter must be in [0,1)");
    Rng rng(mix64(profile_seed(profile, seed), 0x706572747562ULL));
    auto factor = [&] { return rng.next_uniform(1.0 - jitter, 1.0 + jitter); };

    SynthProfile p = profile;
    switch (p.len.kind) {
    case LenDist::Kind::Uniform: {
        double lo = p.len.lo * factor();
        double hi = p.len.hi * factor();
        p.len.lo = std::min(lo, hi);
        p.len.hi = std::max(lo, hi);
        break;
    }
    case LenDist::Kind::Normal:
        p.len.mean1 *= factor();
        p.len.std1 *= factor();
        break;
    case LenDist::Kind::Bimodal:
        p.len.mean1 *= factor();
        p.len.std1 *= factor();
        p.len.mean2 *= factor();
        p.len.std2 *= factor();
        break;
    }
    switch (p.iat.kind) {
    case IatDist::Kind::Exponential:
        p.iat.mean *= factor();
        break;
    case IatDist::Kind::Lognormal:
        p.iat.mu += std::log(factor()); // scales the median
        p.iat.sigma *= factor();
        break;
    case IatDist::Kind::BurstPause:
        p.iat.intra_gap *= factor();
        p.iat.pause_gap *= factor();
        p.iat.burst_len = std::max(1, static_cast<int>(std::lround(p.iat.burst_len * factor())));
        break;
    }
    p.validate();
    return p;
}

namespace {

std::string format_double(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

} // namespace

void write_csv(const TrafficStream& stream, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << "timestamp,length,direction,iat\n";
    for (const PacketRecord& p : stream.packets)
        out << format_double(p.timestamp) << ',' << p.length << ','
            << to_string(p.direction) << ',' << format_double(p.iat) << '\n';
    if (!out) throw Error("failed writing '" + path + "'");
}

namespace {

using nlohmann::json;

LenDist parse_len(const json& j) {
    LenDist d;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "uniform") {
        d.kind = LenDist::Kind::Uniform;
        d.lo = j.at("lo").get<double>();
        d.hi = j.at("hi").get<double>();
    } else if (kind == "normal") {
        d.kind = LenDist::Kind::Normal;
        d.mean1 = j.at("mean").get<double>();
        d.std1 = j.at("std").get<double>();
    } else if (kind == "bimodal") {
        d.kind = LenDist::Kind::Bimodal;
        d.mean1 = j.at("mean1").get<double>();
        d.std1 = j.at("std1").get<double>();
        d.mean2 = j.at("mean2").get<double>();
        d.std2 = j.at("std2").get<double>();
        d.w1 = j.at("w1").get<double>();
    } else {
        throw Error("unknown length distribution kind '" + kind + "'");
    }
    return d;
}

IatDist parse_iat(const json& j) {
    IatDist d;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "exponential") {
        d.kind = IatDist::Kind::Exponential;
        d.mean = j.at("mean").get<double>();
    } else if (kind == "lognormal") {
        d.kind = IatDist::Kind::Lognormal;
        d.mu = j.at("mu").get<double>();
        d.sigma = j.at("sigma").get<double>();
    } else if (kind == "burst_pause") {
        d.kind = IatDist::Kind::BurstPause;
        d.burst_len = j.at("burst_len").get<int>();
        d.intra_gap = j.at("intra_gap").get<double>();
        d.pause_gap = j.at("pause_gap").get<double>();
    } else {
        throw Error("unknown iat distribution kind '" + kind + "'");
    }
    return d;
}

} // namespace

std::vector<SynthProfile> load_profiles(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw Error(path + ": invalid JSON: " + e.what());
    }

    std::vector<SynthProfile> out;
    try {
        for (const json& jp : doc.at("profiles")) {
            SynthProfile p;
            p.name = jp.at("name").get<std::string>();
            if (jp.contains("label"))
                p.label = CosLabel(jp["label"].at("id").get<int>(),
                                   jp["label"].at("name").get<std::string>());
            else
                p.label = CosLabel(static_cast<int>(out.size()), p.name);
            p.sync = jp.value("sync", false);
            p.len = parse_len(jp.at("len"));
            p.iat = parse_iat(jp.at("iat"));
            if (jp.contains("dir")) {
                p.dir.p_up_init = jp["dir"].value("p_up_init", 0.5);
                p.dir.p_up_up = jp["dir"].value("p_up_up", 0.5);
                p.dir.p_down_down = jp["dir"].value("p_down_down", 0.5);
            }
            p.validate();
            out.push_back(std::move(p));
        }
    } catch (const json::exception& e) {
        throw Error(path + ": bad profile config: " + e.what());
    }
    if (out.empty()) throw Error(path + ": no profiles defined");
    return out;
}

} // namespace cosseg
