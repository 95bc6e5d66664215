#pragma once

#include <string>
#include <vector>

#include "cosseg/traffic.hpp"

namespace cosseg {

// Frame length bounds applied to every generated packet.
inline constexpr double kMinFrameBytes = 40.0;
inline constexpr double kMaxFrameBytes = 1514.0;

struct LenDist {
    enum class Kind { Uniform, Normal, Bimodal };
    Kind kind = Kind::Normal;
    // uniform: lo/hi; normal: mean1/std1; bimodal: mixture w1*N(mean1,std1) + (1-w1)*N(mean2,std2)
    double lo = 0, hi = 0;
    double mean1 = 0, std1 = 0;
    double mean2 = 0, std2 = 0;
    double w1 = 1.0;

    void validate() const;
};

struct IatDist {
    enum class Kind { Exponential, Lognormal, BurstPause };
    Kind kind = Kind::Exponential;
    double mean = 0;                // exponential
    double mu = 0, sigma = 0;       // lognormal (log-scale)
    int burst_len = 0;              // burst-pause: packets per burst
    double intra_gap = 0;           // seconds between packets inside a burst
    double pause_gap = 0;           // seconds between bursts

    void validate() const;
};

// Two-state Markov chain over packet direction.
struct DirModel {
    double p_up_init = 0.5; // P(first packet is uplink)
    double p_up_up = 0.5;   // P(up -> up)
    double p_down_down = 0.5;

    void validate() const;
};

struct SynthProfile {
    std::string name;
    CosLabel label;
    LenDist len;
    IatDist iat;
    DirModel dir;
    bool sync = false; // synchronous (request/ack-driven) vs delay-tolerant service

    void validate() const;
};

// Deterministic given (profile, n_packets, seed). Timestamps accumulate the
// drawn gaps starting at 0; stored iats are recomputed from the accumulated
// timestamps so stream invariants hold exactly.
TrafficStream generate(const SynthProfile& profile, int n_packets, uint64_t seed);

// Five well-separated fixtures named after common CoS classes: filetransfer,
// video, voip, chat, p2p. Labels are dense 0..4 in that order. Parameters are
// invented fixtures, not measurements.
std::vector<SynthProfile> builtin_profiles();

// Scales every continuous distribution parameter by an independent factor
// drawn uniformly from [1-jitter, 1+jitter]; used to emulate evaluating on a
// "different network" at desk scale. Deterministic given seed.
SynthProfile perturb(const SynthProfile& profile, double jitter, uint64_t seed);

// Emits the ingest CSV schema (timestamp,length,direction,iat) so generated
// fixtures round-trip through read_csv.
void write_csv(const TrafficStream& stream, const std::string& path);

// Profile definitions from a JSON config: {"profiles":[{...}]}. Labels are
// assigned dense ids in file order unless given explicitly.
std::vector<SynthProfile> load_profiles(const std::string& path);

} // namespace cosseg
