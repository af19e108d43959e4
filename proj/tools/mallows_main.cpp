// Experiment driver: parameter sweeps, Monte Carlo convergence studies, and
// exact-vs-formula validation runs.  Each subcommand writes a CSV data file
// and prints a JSON summary with per-assertion results to stdout; the exit
// status is 0 iff every embedded assertion passed.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mallows/foursquare.hpp"
#include "mallows/measures.hpp"
#include "mallows/pressure.hpp"
#include "mallows/qcomb.hpp"
#include "mallows/sampler.hpp"

using json = nlohmann::json;
using namespace mallows;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

struct Common {
    std::uint64_t seed = 20240817;
    std::string out;
    std::string config_path;
    int threads = 1;
};

void add_common(CLI::App* cmd, Common& c, const std::string& default_out) {
    c.out = default_out;
    cmd->add_option("--seed", c.seed, "root seed for all random streams");
    cmd->add_option("--out", c.out, "output CSV path");
    cmd->add_option("--config", c.config_path, "flat JSON config file (flags take precedence)");
    cmd->add_option("--threads", c.threads, "worker threads for replica-level parallelism");
}

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw CLI::ValidationError("--config", "cannot open config file " + path);
    json j;
    in >> j;
    if (!j.is_object()) throw CLI::ValidationError("--config", "config must be a JSON object");
    return j;
}

// flags > config file > defaults
template <typename T>
void cfg(const json& j, const CLI::App* cmd, const std::string& flag, const std::string& key,
         T& value) {
    if (cmd->count(flag) == 0 && j.contains(key)) value = j.at(key).get<T>();
}

void parallel_for(std::size_t total, int threads, const std::function<void(std::size_t)>& fn) {
    threads = std::max(1, threads);
    if (threads == 1 || total < 2) {
        for (std::size_t i = 0; i < total; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), total);
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t)
        pool.emplace_back([&] {
            for (std::size_t i; (i = next.fetch_add(1)) < total;) fn(i);
        });
    for (std::thread& t : pool) t.join();
}

struct Checks {
    json items = json::array();
    bool pass = true;

    void record(const std::string& name, bool ok, double value, double bound) {
        items.push_back({{"name", name}, {"pass", ok}, {"value", value}, {"bound", bound}});
        pass = pass && ok;
    }
};

// The hash covers the science parameters and the seed, not the output path
// or thread count, so replays land on identical bytes.
std::string config_hash(const std::string& command, const json& params) {
    json j = params;
    j["command"] = command;
    return hex64(fnv1a64(j.dump()));
}

int finish(const std::string& command, const Common& c, const json& params, const Checks& checks,
           const json& extra = json::object()) {
    json summary = {{"command", command},
                    {"version", kVersion},
                    {"config_hash", config_hash(command, params)},
                    {"seed", c.seed},
                    {"params", params},
                    {"assertions", checks.items},
                    {"pass", checks.pass},
                    {"out", c.out}};
    for (auto it = extra.begin(); it != extra.end(); ++it) summary[it.key()] = it.value();
    std::cout << summary.dump(2) << "\n";
    return checks.pass ? 0 : 1;
}

std::ofstream open_csv(const std::string& command, const Common& c, const json& params) {
    std::ofstream out(c.out);
    if (!out) throw std::runtime_error("cannot open output file " + c.out);
    out << "# artifact=mallows " << kVersion << "\n";
    out << "# config_hash=" << config_hash(command, params) << "\n";
    out << "# seed=" << c.seed << "\n";
    return out;
}

// ---------------------------------------------------------------- pressure

int run_pressure(const Common& c, const std::vector<double>& betas, const std::vector<int>& ns) {
    const json params = {{"betas", betas}, {"n", ns}, {"seed", c.seed}};
    std::ofstream out = open_csv("pressure", c, params);
    out << "beta,p,p_n,remainder\n";

    Checks checks;
    std::vector<double> pvals(betas.size());
    for (std::size_t i = 0; i < betas.size(); ++i) pvals[i] = pressure(betas[i]);

    for (std::size_t i = 0; i < betas.size(); ++i) {
        for (int n : ns) {
            const double pn = finite_volume_pressure(n, betas[i]);
            const double rem = q_stirling_remainder(n, betas[i]);
            out << g17(betas[i]) << ',' << g17(pvals[i]) << ',' << g17(pn) << ',' << g17(rem)
                << "\n";
        }
        if (betas[i] == 0.0) checks.record("p(0)_exact", pvals[i] == 0.0, pvals[i], 0.0);
    }
    // reflection identity on symmetric grid pairs
    double worst = 0.0;
    for (std::size_t i = 0; i < betas.size(); ++i)
        for (std::size_t j = 0; j < betas.size(); ++j)
            if (betas[i] == -betas[j] && betas[i] > 0.0)
                worst = std::max(worst, std::abs(pvals[j] - pvals[i] - betas[i] / 2.0));
    checks.record("reflection_identity", worst <= 1e-12, worst, 1e-12);
    return finish("pressure", c, params, checks);
}

// -------------------------------------------------------------------- rfun

int run_rfun(const Common& c, int theta_steps, const std::vector<double>& betas) {
    const json params = {{"theta_steps", theta_steps}, {"betas", betas}, {"seed", c.seed}};
    std::ofstream out = open_csv("rfun", c, params);
    out << "theta1,theta2,beta,R_closed,R_solver,rho,phi_at_R\n";

    Checks checks;
    double worst_gap = 0.0, worst_phi = 0.0;
    for (int i = 1; i <= theta_steps; ++i) {
        for (int j = 1; j <= theta_steps; ++j) {
            const double th1 = static_cast<double>(i) / (theta_steps + 1);
            const double th2 = static_cast<double>(j) / (theta_steps + 1);
            for (double beta : betas) {
                const double rc = equilibrium_cdf(th1, th2, beta);
                const double rs = solve_critical_mass(th1, th2, beta);
                const double rho = equilibrium_density(th1, th2, beta);
                const double phi = diagonal_cost(DiagonalParam(th1, th2, rc), beta);
                out << g17(th1) << ',' << g17(th2) << ',' << g17(beta) << ',' << g17(rc) << ','
                    << g17(rs) << ',' << g17(rho) << ',' << g17(phi) << "\n";
                worst_gap = std::max(worst_gap, std::abs(rc - rs));
                worst_phi = std::max(worst_phi, std::abs(phi));
                if (std::abs(rc - rs) > 1e-12) {
                    std::cerr << "rfun: solver/closed-form mismatch at theta=(" << th1 << ","
                              << th2 << ") beta=" << beta << ": " << g17(rc) << " vs " << g17(rs)
                              << "\n";
                    checks.record("solver_matches_closed_form", false, std::abs(rc - rs), 1e-12);
                    return finish("rfun", c, params, checks, {{"aborted", true}});
                }
            }
        }
    }
    checks.record("solver_matches_closed_form", true, worst_gap, 1e-12);
    checks.record("phi_at_R_zero", worst_phi <= 1e-8, worst_phi, 1e-8);
    return finish("rfun", c, params, checks);
}

// ------------------------------------------------------------------ sample

int run_sample(const Common& c, int n, double beta, int replicas) {
    const json params = {{"n", n}, {"beta", beta}, {"replicas", replicas}, {"seed", c.seed}};
    std::ofstream out = open_csv("sample", c, params);
    out << "replica,index,x,y\n";

    std::vector<PointConfiguration> cfgs(static_cast<std::size_t>(replicas));
    const RandomStream root(c.seed);
    parallel_for(static_cast<std::size_t>(replicas), c.threads, [&](std::size_t r) {
        RandomStream rng = root.child(r);
        cfgs[r] = sample_configuration(n, beta, rng);
    });

    bool in_range = true;
    for (int r = 0; r < replicas; ++r) {
        const PointConfiguration& cfg = cfgs[static_cast<std::size_t>(r)];
        for (int k = 0; k < n; ++k) {
            const Point& p = cfg.points[static_cast<std::size_t>(k)];
            in_range = in_range && p.x >= 0.0 && p.x <= 1.0 && p.y >= 0.0 && p.y <= 1.0;
            out << r << ',' << k << ',' << g17(p.x) << ',' << g17(p.y) << "\n";
        }
    }
    Checks checks;
    checks.record("coordinates_in_unit_square", in_range, in_range ? 1.0 : 0.0, 1.0);
    return finish("sample", c, params, checks);
}

// ---------------------------------------------------------------- converge

int run_converge(const Common& c, const std::vector<int>& ns, double beta, double th1, double th2,
                 int replicas) {
    const json params = {{"n", ns},       {"beta", beta},         {"theta1", th1},
                         {"theta2", th2}, {"replicas", replicas}, {"seed", c.seed}};
    std::ofstream out = open_csv("converge", c, params);
    out << "n,replicas,beta,theta1,theta2,mean,std,expected,abs_dev,band,within_band\n";

    Checks checks;
    const double expected = equilibrium_cdf(th1, th2, beta);
    const RandomStream root(c.seed);
    for (std::size_t ni = 0; ni < ns.size(); ++ni) {
        const int n = ns[ni];
        std::vector<double> vals(static_cast<std::size_t>(replicas));
        parallel_for(static_cast<std::size_t>(replicas), c.threads, [&](std::size_t r) {
            RandomStream rng = root.child(ni * 1000003ULL + r);
            vals[r] = empirical_cdf_at(sample_configuration(n, beta, rng), th1, th2);
        });
        double sum = 0.0;
        for (double v : vals) sum += v;
        const double mean = sum / replicas;
        double ss = 0.0;
        for (double v : vals) ss += (v - mean) * (v - mean);
        const double sd = std::sqrt(ss / (replicas - 1));
        const double dev = std::abs(mean - expected);
        const double band = 3.0 * sd / std::sqrt(static_cast<double>(replicas));
        const bool within = dev <= band;
        out << n << ',' << replicas << ',' << g17(beta) << ',' << g17(th1) << ',' << g17(th2)
            << ',' << g17(mean) << ',' << g17(sd) << ',' << g17(expected) << ',' << g17(dev)
            << ',' << g17(band) << ',' << (within ? 1 : 0) << "\n";
        checks.record("within_3sigma_n=" + std::to_string(n), within, dev, band);
    }
    return finish("converge", c, params, checks);
}

// -------------------------------------------------------- foursquare-exact

int run_foursquare_exact(const Common& c, int n, double beta, double th1, double th2,
                         bool oracle) {
    const json params = {{"n", n},        {"beta", beta},     {"theta1", th1},
                         {"theta2", th2}, {"oracle", oracle}, {"seed", c.seed}};
    std::ofstream out = open_csv("foursquare-exact", c, params);
    out << "n11,n12,n21,n22,p_formula,p_oracle,relerr\n";

    Checks checks;
    std::unique_ptr<FourSquareEnumerator> enumerator;
    if (oracle) enumerator = std::make_unique<FourSquareEnumerator>(n, beta);

    double total = 0.0, max_rel = 0.0;
    for (int a = 0; a <= n; ++a)
        for (int b = 0; a + b <= n; ++b)
            for (int d = 0; a + b + d <= n; ++d) {
                const SplitCounts counts{a, b, d, n - a - b - d};
                const double pf = four_square_probability(counts, th1, th2, n, beta);
                total += pf;
                out << a << ',' << b << ',' << d << ',' << (n - a - b - d) << ',' << g17(pf);
                if (enumerator) {
                    const double po = enumerator->probability(counts, th1, th2);
                    const double rel = std::abs(pf - po) / po;
                    max_rel = std::max(max_rel, rel);
                    out << ',' << g17(po) << ',' << g17(rel) << "\n";
                } else {
                    out << ",nan,nan\n";
                }
            }
    checks.record("formula_total_probability", std::abs(total - 1.0) <= 1e-12,
                  std::abs(total - 1.0), 1e-12);
    if (oracle) checks.record("max_relative_error", max_rel <= 1e-12, max_rel, 1e-12);
    return finish("foursquare-exact", c, params, checks, {{"max_relerr", max_rel}});
}

// ------------------------------------------------------------------ ratefn

int run_ratefn(const Common& c, double beta, int m, const std::string& source,
               const std::string& dump_path) {
    const json params = {{"beta", beta}, {"m", m}, {"measure", source}, {"seed", c.seed}};

    GridMeasure mu = GridMeasure::uniform(1);
    if (source == "uniform") {
        mu = GridMeasure::uniform(m);
    } else if (source == "rho") {
        // exact cell masses of the equilibrium measure from its closed-form CDF
        const std::size_t w = static_cast<std::size_t>(m) + 1;
        std::vector<double> cdf(w * w);
        for (int a = 0; a <= m; ++a)
            for (int b = 0; b <= m; ++b)
                cdf[static_cast<std::size_t>(a) * w + b] =
                    equilibrium_cdf(static_cast<double>(a) / m, static_cast<double>(b) / m, beta);
        std::vector<double> mass(static_cast<std::size_t>(m) * static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                const std::size_t a = static_cast<std::size_t>(i), b = static_cast<std::size_t>(j);
                mass[a * static_cast<std::size_t>(m) + b] =
                    cdf[(a + 1) * w + b + 1] - cdf[a * w + b + 1] - cdf[(a + 1) * w + b] +
                    cdf[a * w + b];
            }
        mu = GridMeasure::normalized(m, std::move(mass));
    } else {
        std::ifstream in(source);
        if (!in) throw std::runtime_error("cannot open measure file " + source);
        mu = read_grid_measure(in);
    }

    if (!dump_path.empty()) {
        std::ofstream dump(dump_path);
        if (!dump) throw std::runtime_error("cannot open dump file " + dump_path);
        write_grid_measure(dump, mu);
    }

    const double s = relative_entropy(mu);
    const double e = energy(mu);
    const double p = pressure(beta);
    const double rate = -s + beta * e + p;

    std::ofstream out = open_csv("ratefn", c, params);
    out << "beta,m,source,entropy,energy,pressure,rate\n";
    out << g17(beta) << ',' << mu.resolution() << ',' << source << ',' << g17(s) << ',' << g17(e)
        << ',' << g17(p) << ',' << g17(rate) << "\n";

    Checks checks;
    checks.record("rate_nonnegative", rate >= -1e-6, rate, -1e-6);
    return finish("ratefn", c, params, checks,
                  {{"entropy", s}, {"energy", e}, {"pressure", p}, {"rate", rate}});
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mallows large-deviation toolkit"};
    app.require_subcommand(1);

    // pressure
    Common c_pressure;
    std::vector<double> pr_betas = {-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0};
    std::vector<int> pr_ns = {1000};
    CLI::App* pressure_cmd =
        app.add_subcommand("pressure", "limit and finite-volume pressure over a beta grid");
    add_common(pressure_cmd, c_pressure, "pressure.csv");
    pressure_cmd->add_option("--beta-grid,--betas", pr_betas, "beta values")->delimiter(',');
    pressure_cmd->add_option("--n", pr_ns, "finite-volume sizes")->delimiter(',');

    // rfun
    Common c_rfun;
    int rf_steps = 9;
    std::vector<double> rf_betas = {-6.0, -4.0, -2.0, 0.0, 2.0, 4.0, 6.0};
    CLI::App* rfun_cmd =
        app.add_subcommand("rfun", "closed-form vs solver limiting CDF and density");
    add_common(rfun_cmd, c_rfun, "rfun.csv");
    rfun_cmd->add_option("--theta-steps", rf_steps, "interior grid steps per axis");
    rfun_cmd->add_option("--betas", rf_betas, "beta values")->delimiter(',');

    // sample
    Common c_sample;
    int sm_n = 100, sm_reps = 1;
    double sm_beta = 1.0;
    CLI::App* sample_cmd = app.add_subcommand("sample", "draw Gibbs point configurations");
    add_common(sample_cmd, c_sample, "sample.csv");
    sample_cmd->add_option("--n", sm_n, "points per configuration");
    sample_cmd->add_option("--beta", sm_beta, "inverse temperature");
    sample_cmd->add_option("--replicas", sm_reps, "number of configurations");

    // converge
    Common c_conv;
    std::vector<int> cv_ns = {500, 2000};
    double cv_beta = 2.0, cv_th1 = 0.5, cv_th2 = 0.5;
    int cv_reps = 200;
    CLI::App* conv_cmd =
        app.add_subcommand("converge", "empirical quadrant mass against the limiting CDF");
    add_common(conv_cmd, c_conv, "converge.csv");
    conv_cmd->add_option("--n", cv_ns, "configuration sizes")->delimiter(',');
    conv_cmd->add_option("--beta", cv_beta, "inverse temperature");
    conv_cmd->add_option("--theta1", cv_th1, "x cut");
    conv_cmd->add_option("--theta2", cv_th2, "y cut");
    conv_cmd->add_option("--replicas", cv_reps, "replicas per size");

    // foursquare-exact
    Common c_fs;
    int fs_n = 6;
    double fs_beta = std::numeric_limits<double>::quiet_NaN(), fs_q = 0.25;
    double fs_th1 = 0.4, fs_th2 = 0.6;
    bool fs_oracle = true;
    CLI::App* fs_cmd = app.add_subcommand(
        "foursquare-exact", "exact quadrant-count table against the enumeration oracle");
    add_common(fs_cmd, c_fs, "foursquare-exact.csv");
    fs_cmd->add_option("--n", fs_n, "number of points (oracle needs n <= 9)");
    fs_cmd->add_option("--beta", fs_beta, "inverse temperature (overrides --q)");
    fs_cmd->add_option("--q", fs_q, "Mallows q; beta = -(n-1) ln q");
    fs_cmd->add_option("--theta1", fs_th1, "x cut");
    fs_cmd->add_option("--theta2", fs_th2, "y cut");
    fs_cmd->add_flag("--oracle,!--no-oracle", fs_oracle, "run the S_n enumeration oracle");

    // ratefn
    Common c_rate;
    double rt_beta = 2.0;
    int rt_m = 256;
    std::string rt_measure = "rho", rt_dump;
    CLI::App* rate_cmd =
        app.add_subcommand("ratefn", "rate function of a grid measure (uniform, rho, or file)");
    add_common(rate_cmd, c_rate, "ratefn.csv");
    rate_cmd->add_option("--beta", rt_beta, "inverse temperature");
    rate_cmd->add_option("--m", rt_m, "grid resolution");
    rate_cmd->add_option("--measure", rt_measure, "uniform | rho | path to a measure CSV");
    rate_cmd->add_option("--dump-measure", rt_dump, "write the evaluated measure to this path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (pressure_cmd->parsed()) {
            const json j = load_config(c_pressure.config_path);
            cfg(j, pressure_cmd, "--seed", "seed", c_pressure.seed);
            cfg(j, pressure_cmd, "--out", "out", c_pressure.out);
            cfg(j, pressure_cmd, "--threads", "threads", c_pressure.threads);
            cfg(j, pressure_cmd, "--beta-grid", "betas", pr_betas);
            cfg(j, pressure_cmd, "--n", "n", pr_ns);
            return run_pressure(c_pressure, pr_betas, pr_ns);
        }
        if (rfun_cmd->parsed()) {
            const json j = load_config(c_rfun.config_path);
            cfg(j, rfun_cmd, "--seed", "seed", c_rfun.seed);
            cfg(j, rfun_cmd, "--out", "out", c_rfun.out);
            cfg(j, rfun_cmd, "--theta-steps", "theta_steps", rf_steps);
            cfg(j, rfun_cmd, "--betas", "betas", rf_betas);
            return run_rfun(c_rfun, rf_steps, rf_betas);
        }
        if (sample_cmd->parsed()) {
            const json j = load_config(c_sample.config_path);
            cfg(j, sample_cmd, "--seed", "seed", c_sample.seed);
            cfg(j, sample_cmd, "--out", "out", c_sample.out);
            cfg(j, sample_cmd, "--threads", "threads", c_sample.threads);
            cfg(j, sample_cmd, "--n", "n", sm_n);
            cfg(j, sample_cmd, "--beta", "beta", sm_beta);
            cfg(j, sample_cmd, "--replicas", "replicas", sm_reps);
            return run_sample(c_sample, sm_n, sm_beta, sm_reps);
        }
        if (conv_cmd->parsed()) {
            const json j = load_config(c_conv.config_path);
            cfg(j, conv_cmd, "--seed", "seed", c_conv.seed);
            cfg(j, conv_cmd, "--out", "out", c_conv.out);
            cfg(j, conv_cmd, "--threads", "threads", c_conv.threads);
            cfg(j, conv_cmd, "--n", "n", cv_ns);
            cfg(j, conv_cmd, "--beta", "beta", cv_beta);
            cfg(j, conv_cmd, "--theta1", "theta1", cv_th1);
            cfg(j, conv_cmd, "--theta2", "theta2", cv_th2);
            cfg(j, conv_cmd, "--replicas", "replicas", cv_reps);
            return run_converge(c_conv, cv_ns, cv_beta, cv_th1, cv_th2, cv_reps);
        }
        if (fs_cmd->parsed()) {
            const json j = load_config(c_fs.config_path);
            cfg(j, fs_cmd, "--seed", "seed", c_fs.seed);
            cfg(j, fs_cmd, "--out", "out", c_fs.out);
            cfg(j, fs_cmd, "--n", "n", fs_n);
            cfg(j, fs_cmd, "--beta", "beta", fs_beta);
            cfg(j, fs_cmd, "--q", "q", fs_q);
            cfg(j, fs_cmd, "--theta1", "theta1", fs_th1);
            cfg(j, fs_cmd, "--theta2", "theta2", fs_th2);
            cfg(j, fs_cmd, "--oracle", "oracle", fs_oracle);
            if (fs_oracle && fs_n > 9) {
                std::cerr << "foursquare-exact: enumeration oracle budget is n <= 9; pass "
                             "--no-oracle for larger n\n";
                return 2;
            }
            const double beta = std::isnan(fs_beta) ? -(fs_n - 1) * std::log(fs_q) : fs_beta;
            return run_foursquare_exact(c_fs, fs_n, beta, fs_th1, fs_th2, fs_oracle);
        }
        if (rate_cmd->parsed()) {
            const json j = load_config(c_rate.config_path);
            cfg(j, rate_cmd, "--seed", "seed", c_rate.seed);
            cfg(j, rate_cmd, "--out", "out", c_rate.out);
            cfg(j, rate_cmd, "--beta", "beta", rt_beta);
            cfg(j, rate_cmd, "--m", "m", rt_m);
            cfg(j, rate_cmd, "--measure", "measure", rt_measure);
            cfg(j, rate_cmd, "--dump-measure", "dump_measure", rt_dump);
            return run_ratefn(c_rate, rt_beta, rt_m, rt_measure, rt_dump);
        }
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
