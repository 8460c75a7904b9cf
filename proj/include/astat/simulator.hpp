#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>

#include "astat/rng.hpp"
#include "astat/scaling.hpp"

namespace astat {

struct InitialConfig {
    std::vector<double> zeta;
    double lambda = 1.0;
    double rho = 1.0;

    long N() const { return static_cast<long>(zeta.size()) - 1; }
};

// dB[n] for n = 1..N (dB[0] unused), dB0 drives the boundary particle
struct NoiseGrid {
    double h = 0.0;
    long J = 0;
    std::vector<std::vector<double>> dB;
    std::vector<double> dB0;

    double T() const { return h * J; }
};

// x[n][j], n = 0..N, j = 0..J
struct TrajectorySet {
    std::vector<std::vector<double>> x;
    double h = 0.0;
};

struct ExitRecord {
    double z = 0.0;
    long argmax_k = 0;
};

template <class Rng>
InitialConfig sample_initial(const ModelParams& params, long N, Rng& rng) {
    if (N < 1) throw std::invalid_argument("sample_initial: need N >= 1");
    params.validate();
    boost::random::exponential_distribution<double> ex(params.lambda);
    InitialConfig ic;
    ic.lambda = params.lambda;
    ic.rho = params.rho;
    ic.zeta.resize(N + 1);
    ic.zeta[0] = 0.0;
    for (long n = 1; n <= N; ++n) ic.zeta[n] = ic.zeta[n - 1] + ex(rng);
    return ic;
}

inline InitialConfig sample_initial(const ModelParams& params, long N, std::uint64_t seed, std::uint64_t trial) {
    auto rng = substream(seed, trial, kStreamGaps);
    return sample_initial(params, N, rng);
}

template <class Rng>
void fill_normals(std::vector<double>& v, long J, double h, Rng& rng) {
    boost::random::normal_distribution<double> nd(0.0, std::sqrt(h));
    v.resize(J);
    for (long j = 0; j < J; ++j) v[j] = nd(rng);
}

// particle n draws from substream (trial, n); n = 0 is the boundary
inline NoiseGrid sample_noise(long N, long J, double h, std::uint64_t seed, std::uint64_t trial) {
    NoiseGrid g;
    g.h = h;
    g.J = J;
    g.dB.resize(N + 1);
    auto r0 = substream(seed, trial, 0);
    fill_normals(g.dB0, J, h, r0);
    for (long n = 1; n <= N; ++n) {
        auto rn = substream(seed, trial, n);
        fill_normals(g.dB[n], J, h, rn);
    }
    return g;
}

inline void check_dims(const InitialConfig& init, const NoiseGrid& noise) {
    if (init.zeta.empty()) throw std::invalid_argument("empty initial configuration");
    if (static_cast<long>(noise.dB0.size()) != noise.J) throw std::invalid_argument("noise: boundary length mismatch");
    if (static_cast<long>(noise.dB.size()) < init.N() + 1) throw std::invalid_argument("noise: too few particle rows");
    for (long n = 1; n <= init.N(); ++n)
        if (static_cast<long>(noise.dB[n].size()) != noise.J) throw std::invalid_argument("noise: row length mismatch");
}

inline std::vector<double> boundary_path(double rho, const NoiseGrid& noise) {
    std::vector<double> x(noise.J + 1);
    x[0] = 0.0;
    double b = 0.0;
    for (long j = 1; j <= noise.J; ++j) {
        b += noise.dB0[j - 1];
        x[j] = rho * j * noise.h + b;
    }
    return x;
}

inline TrajectorySet evolve(const InitialConfig& init, const NoiseGrid& noise) {
    check_dims(init, noise);
    long N = init.N(), J = noise.J;
    TrajectorySet ts;
    ts.h = noise.h;
    ts.x.resize(N + 1);
    ts.x[0] = boundary_path(init.rho, noise);
    for (long j = 0; j <= J; ++j) ts.x[0][j] += init.zeta[0];
    for (long n = 1; n <= N; ++n) {
        auto& cur = ts.x[n];
        const auto& prev = ts.x[n - 1];
        const auto& d = noise.dB[n];
        cur.resize(J + 1);
        cur[0] = init.zeta[n];
        for (long j = 1; j <= J; ++j) cur[j] = std::max(cur[j - 1] + d[j - 1], prev[j]);
    }
    return ts;
}

inline long ordering_violations(const TrajectorySet& ts) {
    long bad = 0;
    for (std::size_t n = 1; n < ts.x.size(); ++n)
        for (std::size_t j = 0; j < ts.x[n].size(); ++j)
            if (ts.x[n][j] < ts.x[n - 1][j]) ++bad;
    return bad;
}

namespace detail {
inline std::vector<double> prefix(const std::vector<double>& d) {
    std::vector<double> s(d.size() + 1, 0.0);
    for (std::size_t j = 0; j < d.size(); ++j) s[j + 1] = s[j] + d[j];
    return s;
}
}  // namespace detail

// last passage value by the explicit sup formula over jump times, line by line
inline double lpp_oracle(const InitialConfig& init, const NoiseGrid& noise, long n) {
    check_dims(init, noise);
    if (n < 0 || n > init.N()) throw std::out_of_range("lpp_oracle: index out of range");
    long J = noise.J;
    auto S0 = detail::prefix(noise.dB0);
    std::vector<double> L(J + 1);
    for (long j = 0; j <= J; ++j) L[j] = init.zeta[0] + init.rho * j * noise.h + S0[j];
    for (long l = 1; l <= n; ++l) {
        auto S = detail::prefix(noise.dB[l]);
        std::vector<double> nl(J + 1);
        for (long j = 0; j <= J; ++j) {
            double best = init.zeta[l] + S[j];
            for (long i = 0; i <= j; ++i) best = std::max(best, L[i] + S[j] - S[i]);
            nl[j] = best;
        }
        L.swap(nl);
    }
    return L[J];
}

// exit time from line 0 of the maximizing path to (n, T); first maximum in s_0 wins
inline ExitRecord exit_point(const InitialConfig& init, const NoiseGrid& noise, long n) {
    check_dims(init, noise);
    if (n < 0 || n > init.N()) throw std::out_of_range("exit_point: index out of range");
    long J = noise.J;
    ExitRecord rec;
    if (n == 0) {
        rec.z = noise.T();
        return rec;
    }
    // G[l][i]: best weight from (line l, step i) to (line n, step J)
    std::vector<std::vector<double>> G(n + 2, std::vector<double>(J + 1));
    for (long l = n; l >= 1; --l) {
        auto S = detail::prefix(noise.dB[l]);
        for (long i = J; i >= 0; --i) {
            double best = S[J] - S[i];
            if (l < n)
                for (long j = i; j <= J; ++j) best = std::max(best, S[j] - S[i] + G[l + 1][j]);
            G[l][i] = best;
        }
    }
    auto x0 = boundary_path(init.rho, noise);
    double best = -std::numeric_limits<double>::infinity();
    for (long i = 0; i <= J; ++i) {
        double w = init.zeta[0] + x0[i] + G[1][i];
        if (w > best) {
            best = w;
            rec.z = i * noise.h;
            rec.argmax_k = 0;
        }
        if (i == 0)
            for (long k = 1; k <= n; ++k) {
                double wk = init.zeta[k] + G[k][0];
                if (wk > best) {
                    best = wk;
                    rec.z = 0.0;
                    rec.argmax_k = k;
                }
            }
    }
    return rec;
}

inline std::vector<TrajectorySet> coupled_rho_run(const InitialConfig& init, const NoiseGrid& noise,
                                                  const std::vector<double>& rho_list) {
    std::vector<TrajectorySet> out;
    for (double r : rho_list) {
        InitialConfig c = init;
        c.rho = r;
        out.push_back(evolve(c, noise));
    }
    return out;
}

template <class Rng>
double sup_drifted_bm(double rho, double T, long J, Rng& rng) {
    if (!(rho > 0) || !(T >= 0) || J < 1) throw std::invalid_argument("sup_drifted_bm: bad arguments");
    double h = T / J, b = 0.0, m = 0.0;
    boost::random::normal_distribution<double> nd(0.0, std::sqrt(h));
    for (long j = 1; j <= J; ++j) {
        b += nd(rng) - rho * h;
        m = std::max(m, b);
    }
    return m;
}

struct SimConfig {
    long J = 0;  // 0 selects the default grid policy
    std::uint64_t seed = 1;
    double lambda = 1.0;
};

// J >= 2000 and h <= t^{1/3}/200
inline long default_steps(double t) {
    return std::max(2000L, static_cast<long>(std::ceil(200.0 * t_two_thirds(t))));
}

struct EndpointRun {
    std::vector<double> x;  // x_n(T) for the requested n
    long violations = 0;
};

// memory-light evolution keeping one row; same noise as sample_noise/evolve
inline EndpointRun simulate_endpoints(const ModelParams& params, double T, long J, std::uint64_t seed,
                                      std::uint64_t trial, const std::vector<long>& wanted) {
    long N = 1;
    for (long n : wanted) {
        if (n < 0) throw std::out_of_range("simulate_endpoints: negative particle index");
        N = std::max(N, n);
    }
    auto init = sample_initial(params, N, seed, trial);
    double h = T / J;
    std::vector<double> row(J + 1), d;
    {
        auto r0 = substream(seed, trial, 0);
        fill_normals(d, J, h, r0);
        double b = 0.0;
        row[0] = 0.0;
        for (long j = 1; j <= J; ++j) {
            b += d[j - 1];
            row[j] = params.rho * j * h + b;
        }
    }
    EndpointRun out;
    out.x.assign(wanted.size(), 0.0);
    auto record = [&](long n) {
        for (std::size_t k = 0; k < wanted.size(); ++k)
            if (wanted[k] == n) out.x[k] = row[J];
    };
    record(0);
    for (long n = 1; n <= N; ++n) {
        auto rn = substream(seed, trial, n);
        fill_normals(d, J, h, rn);
        double prevj = row[0];
        row[0] = init.zeta[n];
        if (row[0] < prevj) ++out.violations;
        for (long j = 1; j <= J; ++j) {
            double p = row[j];
            double v = std::max(row[j - 1] + d[j - 1], p);
            if (v < p) ++out.violations;
            row[j] = v;
        }
        record(n);
    }
    return out;
}

// X_t^{(delta)}(r_k) for one trial
inline std::vector<double> sample_scaled(const ScalingFrame& frame, const SimConfig& cfg, std::uint64_t trial,
                                         long* violations = nullptr) {
    frame.validate();
    ModelParams p{cfg.lambda, frame.rho()};
    std::vector<long> idx;
    for (double r : frame.r_list) {
        long n = lattice_index(frame.t, r);
        if (n < 0) throw std::out_of_range("sample_scaled: negative lattice index");
        idx.push_back(n);
    }
    long J = cfg.J > 0 ? cfg.J : default_steps(frame.t);
    auto run = simulate_endpoints(p, frame.t, J, cfg.seed, trial, idx);
    if (violations) *violations += run.violations;
    std::vector<double> X;
    for (std::size_t k = 0; k < idx.size(); ++k) X.push_back(rescale_position(run.x[k], frame.t, frame.r_list[k]));
    return X;
}

// literal two-sided system with particles -M..N; the leftmost one moves freely
struct TwoSidedRun {
    std::vector<double> x;  // x_n(T), n = 0..N
};

inline TwoSidedRun simulate_two_sided(const ModelParams& params, long N, long M, double T, long J,
                                      std::uint64_t seed, std::uint64_t trial) {
    params.validate();
    auto right = sample_initial(params, N, seed, trial);
    auto lr = substream(seed, trial, kStreamLeft);
    boost::random::exponential_distribution<double> ex(params.rho);
    std::vector<double> zeta(M + N + 1);
    zeta[M] = 0.0;
    for (long k = 1; k <= M; ++k) zeta[M - k] = zeta[M - k + 1] - ex(lr);
    for (long n = 1; n <= N; ++n) zeta[M + n] = right.zeta[n];
    double h = T / J;
    std::vector<double> row(J + 1), d;
    TwoSidedRun out;
    for (long i = 0; i <= M + N; ++i) {
        long label = i - M;
        // label >= 0 reuse the one-sided streams; left particles get their own
        auto rn = label >= 0 ? substream(seed, trial, static_cast<std::uint64_t>(label))
                             : substream(seed, trial, kStreamLeft + 1 + static_cast<std::uint64_t>(-label));
        fill_normals(d, J, h, rn);
        if (i == 0) {
            row[0] = zeta[0];
            for (long j = 1; j <= J; ++j) row[j] = row[j - 1] + d[j - 1];
        } else {
            row[0] = zeta[i];
            for (long j = 1; j <= J; ++j) row[j] = std::max(row[j - 1] + d[j - 1], row[j]);
        }
        if (label >= 0) out.x.push_back(row[J]);
    }
    return out;
}

}  // namespace astat
