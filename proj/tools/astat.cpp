#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "astat/harness.hpp"

namespace {

struct Flags {
    std::string config;
    double t = 0, delta = 0, smax = 0, fd_step = 0, grid_lo = 0, grid_hi = 0;
    std::vector<double> r, s;
    long trials = 0, J = 0;
    int nodes = 0, grid_n = 0;
    std::uint64_t seed = 0;
    std::string format, out;
    unsigned threads = 0;
    std::vector<CLI::Option*> opts;
};

void add_flags(CLI::App* sub, Flags& f) {
    f.opts.push_back(sub->add_option("--config", f.config, "key=value config file (flags override it)"));
    f.opts.push_back(sub->add_option("--t", f.t, "time"));
    f.opts.push_back(sub->add_option("--delta", f.delta, "step parameter (0 = stationary)"));
    f.opts.push_back(sub->add_option("--r", f.r, "label r_k (repeatable or comma list, increasing)")->delimiter(','));
    f.opts.push_back(sub->add_option("--s", f.s, "argument s_k (repeatable or comma list)")->delimiter(','));
    f.opts.push_back(sub->add_option("--trials", f.trials, "Monte Carlo trials"));
    f.opts.push_back(sub->add_option("--J", f.J, "time steps (0 = default grid)"));
    f.opts.push_back(sub->add_option("--nodes", f.nodes, "quadrature nodes per block"));
    f.opts.push_back(sub->add_option("--smax", f.smax, "upper truncation offset"));
    f.opts.push_back(sub->add_option("--fd-step", f.fd_step, "finite-difference step"));
    f.opts.push_back(sub->add_option("--seed", f.seed, "master seed"));
    f.opts.push_back(sub->add_option("--format", f.format, "csv or json")->check(CLI::IsMember({"csv", "json"})));
    f.opts.push_back(sub->add_option("--out", f.out, "output path (default stdout)"));
    f.opts.push_back(sub->add_option("--threads", f.threads, "worker threads (0 = all cores)"));
    f.opts.push_back(sub->add_option("--grid-lo", f.grid_lo, "compare grid start"));
    f.opts.push_back(sub->add_option("--grid-hi", f.grid_hi, "compare grid end"));
    f.opts.push_back(sub->add_option("--grid-n", f.grid_n, "compare grid points"));
}

bool given(const Flags& f, const char* name) {
    for (auto* o : f.opts)
        if (o->check_lname(name + 2) && o->count() > 0) return true;
    return false;
}

astat::ExperimentConfig build(const std::string& mode, const Flags& f) {
    astat::ExperimentConfig c = f.config.empty() ? astat::ExperimentConfig{} : astat::load_config(f.config);
    c.mode = mode;
    if (given(f, "--t")) c.frame.t = f.t;
    if (given(f, "--delta")) c.frame.delta = f.delta;
    if (given(f, "--r")) c.frame.r_list = f.r;
    if (given(f, "--s")) c.s_list = f.s;
    if (given(f, "--trials")) c.trials = f.trials;
    if (given(f, "--J")) c.J = f.J;
    if (given(f, "--nodes")) c.rule.nodes = f.nodes;
    if (given(f, "--smax")) c.rule.smax = f.smax;
    if (given(f, "--fd-step")) c.fd_step = f.fd_step;
    if (given(f, "--seed")) c.seed = f.seed;
    if (given(f, "--format")) c.format = f.format;
    if (given(f, "--out")) c.out = f.out;
    if (given(f, "--threads")) c.threads = f.threads;
    if (given(f, "--grid-lo")) c.grid_lo = f.grid_lo;
    if (given(f, "--grid-hi")) c.grid_hi = f.grid_hi;
    if (given(f, "--grid-n")) c.grid_n = f.grid_n;
    c.validate();
    return c;
}

template <class F>
int to_stream(const std::string& path, F&& body) {
    if (path.empty() || path == "-") {
        body(std::cout);
        return 0;
    }
    std::ofstream o(path, std::ios::binary);
    if (!o) throw std::runtime_error("cannot open " + path);
    body(o);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stationary KPZ laboratory: reflected Brownian motions and Airy_stat laws"};
    app.require_subcommand(1);
    Flags f;
    auto* sim = app.add_subcommand("simulate", "emit scaled samples trial_id,r,X");
    auto* lim = app.add_subcommand("limit-cdf", "evaluate the limit joint CDF");
    auto* cmp = app.add_subcommand("compare", "Monte Carlo against the limit law");
    auto* ver = app.add_subcommand("verify", "run the property suite");
    for (auto* s : {sim, lim, cmp, ver}) add_flags(s, f);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    try {
        if (sim->parsed()) {
            auto c = build("simulate", f);
            return to_stream(c.out, [&](std::ostream& o) { astat::run_simulate(c, o); });
        }
        if (lim->parsed()) {
            auto c = build("limit-cdf", f);
            return to_stream(c.out, [&](std::ostream& o) { astat::run_limit_cdf(c, o); });
        }
        if (cmp->parsed()) {
            auto c = build("compare", f);
            auto rep = astat::run_compare(c);
            astat::emit_report(rep, c.format, c.out);
            double budget = astat::ks_budget(c.frame.t, c.trials);
            std::fprintf(stderr, "ks=%.6f budget=%.6f runtime=%.1fs violations=%ld\n", rep.ks, budget, rep.runtime,
                         rep.violations);
            return rep.ks <= budget && rep.violations == 0 ? 0 : 1;
        }
        auto c = build("verify", f);
        astat::VerifyOptions opt;
        if (given(f, "--seed")) opt.seed = c.seed;
        opt.threads = c.threads;
        if (given(f, "--nodes")) opt.self_nodes = c.rule.nodes;
        auto vs = astat::run_verify(opt, &std::cout);
        std::printf("verify: %s in %.1f s\n", vs.all_pass ? "PASS" : "FAIL", vs.seconds);
        return vs.all_pass ? 0 : 1;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 2;
    } catch (const std::domain_error& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
