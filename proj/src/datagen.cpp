#include "nnstab/datagen.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "nnstab/rng.hpp"

namespace nnstab {

using Eigen::Index;

Params rescale_to_mu(const Params& params, int m, double mu) {
    const double norm = params.norm();
    if (norm == 0.0) throw std::invalid_argument("rescale_to_mu: zero parameters");
    const double budget = std::pow(static_cast<double>(m), 0.5 - mu);
    return params * std::min(1.0, budget / norm);
}

TeacherSpec make_teacher(const NetworkConfig& config, const ActivationSpec& act, const OutputSigns& signs,
                         double stddev, std::uint64_t seed, std::optional<double> mu_target) {
    Network net(config, act, signs);
    Params w = init_params(config, InitConfig{stddev}, substream_seed(seed, kStreamTeacher));
    if (mu_target) w = rescale_to_mu(w, config.m, *mu_target);
    return {std::move(net), std::move(w), mu_target};
}

Dataset sample_dataset(const GenConfig& gen, const TeacherSpec* teacher, Index n) {
    if (n < 1) throw std::invalid_argument("sample_dataset: n must be positive");
    if (gen.d < 1 || !(gen.c_x > 0.0) || !(gen.c_y > 0.0) || !(gen.noise_std >= 0.0)) {
        throw std::invalid_argument("sample_dataset: invalid generator config");
    }
    if (teacher && teacher->net.config().d != gen.d) {
        throw std::invalid_argument("sample_dataset: teacher input dimension differs from generator");
    }
    Rng rng(substream_seed(gen.seed, kStreamSample));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    Dataset data;
    data.x.resize(n, gen.d);
    data.y.resize(n);
    data.c_x = gen.c_x;
    data.c_y = gen.c_y;
    for (Index i = 0; i < n; ++i) {
        Eigen::VectorXd v(gen.d);
        double norm = 0.0;
        do {
            for (int j = 0; j < gen.d; ++j) v[j] = normal(rng);
            norm = v.norm();
        } while (norm == 0.0);
        const double radius = gen.c_x * std::pow(unif(rng), 1.0 / gen.d);
        data.x.row(i) = (v * (radius / norm)).transpose();
    }
    if (teacher) {
        data.y = teacher->net.forward_batch(teacher->params, data.x);
    } else {
        data.y.setZero();
    }
    if (gen.noise_std > 0.0) {
        for (Index i = 0; i < n; ++i) {
            double e;
            do {
                e = normal(rng);
            } while (std::abs(e) > gen.noise_trunc);
            data.y[i] += gen.noise_std * e;
        }
    }
    for (Index i = 0; i < n; ++i) {
        if (std::abs(data.y[i]) > gen.c_y) {
            data.y[i] = std::copysign(gen.c_y, data.y[i]);
            ++data.clipped;
        }
    }
    return data;
}

Sampler make_sampler(GenConfig gen, const TeacherSpec* teacher) {
    return [gen, teacher](Index n, std::uint64_t seed) {
        GenConfig g = gen;
        g.seed = seed;
        return sample_dataset(g, teacher, n);
    };
}

std::string params_hash(const Params& params) {
    // FNV-1a over the raw doubles.
    std::uint64_t h = 1469598103934665603ULL;
    for (Index i = 0; i < params.size(); ++i) {
        std::uint64_t bits;
        const double v = params[i];
        std::memcpy(&bits, &v, sizeof bits);
        for (int b = 0; b < 8; ++b) {
            h ^= (bits >> (8 * b)) & 0xFF;
            h *= 1099511628211ULL;
        }
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void write_dataset(const std::string& csv_path, const Dataset& data, const GenConfig& gen,
                   const std::string& teacher_hash) {
    std::ofstream out(csv_path);
    if (!out) throw std::runtime_error("cannot write " + csv_path);
    out << "# nnstab-dataset v1\n";
    for (Index j = 0; j < data.dim(); ++j) out << "x" << j << ",";
    out << "y\n";
    out.precision(17);
    for (Index i = 0; i < data.size(); ++i) {
        for (Index j = 0; j < data.dim(); ++j) out << data.x(i, j) << ",";
        out << data.y[i] << "\n";
    }
    nlohmann::ordered_json side;
    side["c_x"] = data.c_x;
    side["c_y"] = data.c_y;
    side["c0"] = data.c0;
    side["clipped"] = data.clipped;
    side["seed"] = gen.seed;
    side["noise_std"] = gen.noise_std;
    side["noise_trunc"] = gen.noise_trunc;
    side["teacher_hash"] = teacher_hash;
    std::ofstream js(csv_path + ".json");
    if (!js) throw std::runtime_error("cannot write " + csv_path + ".json");
    js << side.dump(2) << "\n";
}

Dataset read_dataset(const std::string& csv_path) {
    std::ifstream in(csv_path);
    if (!in) throw std::runtime_error("cannot read " + csv_path);
    std::string line;
    std::vector<std::vector<double>> rows;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw std::runtime_error(csv_path + ": ragged row");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty() || rows.front().size() < 2) throw std::runtime_error(csv_path + ": no data");
    const Index n = static_cast<Index>(rows.size());
    const Index d = static_cast<Index>(rows.front().size()) - 1;
    Dataset data;
    data.x.resize(n, d);
    data.y.resize(n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < d; ++j) data.x(i, j) = rows[i][j];
        data.y[i] = rows[i][d];
    }
    std::ifstream js(csv_path + ".json");
    if (js) {
        const auto side = nlohmann::json::parse(js);
        data.c_x = side.at("c_x").get<double>();
        data.c_y = side.at("c_y").get<double>();
        data.c0 = side.value("c0", 0.0);
        data.clipped = side.value("clipped", 0);
    }
    data.check_envelope();
    return data;
}

}  // namespace nnstab
