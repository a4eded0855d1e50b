#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "nnstab/loss.hpp"
#include "nnstab/model.hpp"

namespace nnstab {

struct GenConfig {
    int d = 5;
    double c_x = 1.0;
    double c_y = 1.0;
    double noise_std = 0.0;
    double noise_trunc = 3.0;  // noise truncated to ±noise_trunc·noise_std
    std::uint64_t seed = 0;
};

/// Designated minimiser W* realised by a teacher network.
struct TeacherSpec {
    Network net;
    Params params;
    std::optional<double> mu_target;  // if set, ||W*|| ≤ m^{1/2−μ}
};

/// Gaussian teacher weights (stddev), rescaled to the μ budget when given.
TeacherSpec make_teacher(const NetworkConfig& config, const ActivationSpec& act, const OutputSigns& signs,
                         double stddev, std::uint64_t seed, std::optional<double> mu_target = {});

/// Multiplies params by min(1, m^{1/2−μ}/||W||).
Params rescale_to_mu(const Params& params, int m, double mu);

/// x uniform on the ball of radius c_x; y = f_{W*}(x) + truncated Gaussian noise,
/// clipped to [−c_y, c_y] (clip events counted in Dataset::clipped).
/// Without a teacher, y is pure noise.
Dataset sample_dataset(const GenConfig& gen, const TeacherSpec* teacher, Eigen::Index n);

/// Sampler bound to a generator/teacher pair; the seed argument replaces gen.seed.
Sampler make_sampler(GenConfig gen, const TeacherSpec* teacher);

std::string params_hash(const Params& params);

/// CSV (x0..x{d-1}, y) plus "<path>.json" sidecar with c_x, c_y, c0, seed, teacher hash.
void write_dataset(const std::string& csv_path, const Dataset& data, const GenConfig& gen,
                   const std::string& teacher_hash);
Dataset read_dataset(const std::string& csv_path);

}  // namespace nnstab
