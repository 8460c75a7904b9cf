#pragma once
#include <cmath>
#include <stdexcept>
#include <vector>

namespace astat {

struct ModelParams {
    double lambda = 1.0;
    double rho = 1.0;

    bool stationary() const { return lambda == rho; }
    void validate() const {
        if (!(lambda > 0) || !(rho > 0)) throw std::invalid_argument("ModelParams: intensities must be positive");
        if (rho > lambda) throw std::invalid_argument("ModelParams: need lambda >= rho");
    }
};

struct ScalingFrame {
    double t = 1.0;
    double delta = 0.0;
    std::vector<double> r_list{0.0};

    void validate() const;
    double rho() const;
};

// t^{2/3} through cbrt so perfect cubes stay exact
inline double t_two_thirds(double t) {
    double c = std::cbrt(t);
    return c * c;
}

inline long lattice_index(double t, double r) {
    if (!(t > 0)) throw std::invalid_argument("lattice_index: t must be positive");
    return static_cast<long>(std::floor(t + 2.0 * r * t_two_thirds(t)));
}

inline double rescale_position(double x, double t, double r) {
    if (!(t > 0)) throw std::invalid_argument("rescale_position: t must be positive");
    return (x - 2.0 * t - 2.0 * r * t_two_thirds(t)) / std::cbrt(t);
}

inline double rho_from_delta(double t, double delta) {
    if (!(t > 0) || !(delta >= 0)) throw std::invalid_argument("rho_from_delta: need t > 0 and delta >= 0");
    double rho = 1.0 - delta / std::cbrt(t);
    if (!(rho > 0)) throw std::domain_error("rho_from_delta: frame outside model validity (rho <= 0)");
    return rho;
}

inline double ScalingFrame::rho() const { return rho_from_delta(t, delta); }

inline void ScalingFrame::validate() const {
    if (!(t > 0) || t > 1e7) throw std::invalid_argument("ScalingFrame: t must lie in (0, 1e7]");
    if (!(delta >= 0)) throw std::invalid_argument("ScalingFrame: delta must be >= 0");
    if (r_list.empty()) throw std::invalid_argument("ScalingFrame: empty r list");
    for (std::size_t k = 1; k < r_list.size(); ++k)
        if (!(r_list[k] > r_list[k - 1])) throw std::invalid_argument("ScalingFrame: r list must be strictly increasing");
    rho();
}

}  // namespace astat
