#include "soilvox/pngm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <string>

#include "soilvox/csv.hpp"
#include "soilvox/error.hpp"
#include "soilvox/parallel.hpp"
#include "soilvox/pcg.hpp"
#include "soilvox/random.hpp"

namespace soilvox {

namespace {

void check_theta(const BallNetwork& net, const ConductanceParams& theta) {
    if (theta.theta.size() != net.edges.size())
        throw InputError("conductance count " + std::to_string(theta.theta.size()) + " does not match " +
                         std::to_string(net.edges.size()) + " network edges");
}

void check_masses(const BallNetwork& net, std::span<const double> m) {
    if (m.size() != net.size()) throw InputError("ball mass vector length does not match the network");
}

// acc_i = sum_j theta_ij (c_i - c_j)
void conductance_laplacian(const BallNetwork& net, const ConductanceParams& theta, std::span<const double> c,
                           std::span<double> acc) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t e = 0; e < net.edges.size(); ++e) {
        const auto& edge = net.edges[e];
        const double flux = theta.theta[e] * (c[edge.i] - c[edge.j]);
        acc[edge.i] += flux;
        acc[edge.j] -= flux;
    }
}

std::vector<double> concentrations(const BallNetwork& net, std::span<const double> m) {
    std::vector<double> c(m.size());
    for (std::size_t k = 0; k < m.size(); ++k) c[k] = m[k] / net.volumes[k];
    return c;
}

// Residual of one pair under the chosen objective. Returns the concentrations
// the residual differentiates against (x/v for L1, y/v for L2).
std::vector<double> pair_residual(const BallNetwork& net, const ConductanceParams& theta,
                                  const DistributionPair& p, Objective obj, double s, std::vector<double>& r) {
    const std::size_t q = net.size();
    if (p.x.size() != q || p.y.size() != q) throw InputError("calibration pair length does not match the network");
    auto c = concentrations(net, obj == Objective::L1 ? p.x : p.y);
    r.assign(q, 0.0);
    conductance_laplacian(net, theta, c, r);
    for (std::size_t i = 0; i < q; ++i) {
        if (obj == Objective::L1)
            r[i] = p.y[i] - p.x[i] + s * r[i];
        else
            r[i] = p.x[i] - p.y[i] - s * r[i];
    }
    return c;
}

long long checked_ratio(double num, double den, const char* what) {
    const double ratio = num / den;
    const double rounded = std::round(ratio);
    if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-6 * rounded)
        throw InputError(std::string(what) + " must be a positive integer multiple");
    return static_cast<long long>(rounded);
}

}  // namespace

double sphere_contact_area(double r1, double r2, double d) {
    if (d >= r1 + r2) return 0.0;
    if (d <= std::abs(r1 - r2)) {
        const double r = std::min(r1, r2);
        return std::numbers::pi * r * r;
    }
    const double x = (d * d + r1 * r1 - r2 * r2) / (2.0 * d);
    return std::numbers::pi * std::max(0.0, r1 * r1 - x * x);
}

BallNetwork build_ball_network(std::span<const Ball> balls, const VoxelGraph& g) {
    if (balls.empty()) throw InputError("ball network needs at least one ball");
    if (balls.size() >= std::numeric_limits<BallId>::max()) throw InputError("too many balls");
    BallNetwork net;
    net.balls.assign(balls.begin(), balls.end());
    const std::size_t q = balls.size();

    for (std::size_t i = 0; i < q; ++i) {
        if (!(balls[i].radius > 0.0)) throw InputError("ball radius must be positive");
        for (std::size_t j = i + 1; j < q; ++j) {
            const auto& a = balls[i];
            const auto& b = balls[j];
            const double d = std::hypot(a.center[0] - b.center[0], a.center[1] - b.center[1],
                                        a.center[2] - b.center[2]);
            if (d >= a.radius + b.radius) continue;
            if (!(d > 0.0)) throw InputError("balls " + std::to_string(i) + " and " + std::to_string(j) +
                                             " share a center");
            net.edges.push_back({static_cast<BallId>(i), static_cast<BallId>(j),
                                 sphere_contact_area(a.radius, b.radius, d), d});
        }
    }
    net.incident.resize(q);
    for (std::size_t e = 0; e < net.edges.size(); ++e) {
        const auto& edge = net.edges[e];
        net.incident[edge.i].push_back({edge.j, static_cast<std::uint32_t>(e)});
        net.incident[edge.j].push_back({edge.i, static_cast<std::uint32_t>(e)});
    }

    // Nearest covering center wins; strict comparison keeps the lower index on ties.
    constexpr BallId kNone = std::numeric_limits<BallId>::max();
    net.owner.assign(g.size(), kNone);
    std::vector<double> best(g.size(), std::numeric_limits<double>::infinity());
    const Dims& dims = g.dims();
    for (std::size_t k = 0; k < q; ++k) {
        const Ball& b = balls[k];
        std::array<int, 3> lo{}, hi{};
        for (int a = 0; a < 3; ++a) {
            lo[a] = std::max(0, static_cast<int>(std::floor(b.center[a] - b.radius - 0.5)));
            hi[a] = std::min(dims.extent(a) - 1, static_cast<int>(std::ceil(b.center[a] + b.radius - 0.5)));
        }
        const double r2 = b.radius * b.radius;
        for (int z = lo[2]; z <= hi[2]; ++z)
            for (int y = lo[1]; y <= hi[1]; ++y)
                for (int x = lo[0]; x <= hi[0]; ++x) {
                    const double dx = x + 0.5 - b.center[0];
                    const double dy = y + 0.5 - b.center[1];
                    const double dz = z + 0.5 - b.center[2];
                    const double d2 = dx * dx + dy * dy + dz * dz;
                    if (d2 > r2) continue;
                    const auto node = g.find({x, y, z});
                    if (!node) continue;
                    if (d2 < best[*node]) {
                        best[*node] = d2;
                        net.owner[*node] = static_cast<BallId>(k);
                    }
                }
    }
    net.voxel_map.resize(q);
    for (std::size_t n = 0; n < g.size(); ++n) {
        if (net.owner[n] == kNone) {
            const auto& c = g.coord(static_cast<NodeId>(n));
            throw InputError("pore voxel (" + std::to_string(c[0]) + "," + std::to_string(c[1]) + "," +
                             std::to_string(c[2]) + ") is covered by no ball");
        }
        net.voxel_map[net.owner[n]].push_back(static_cast<NodeId>(n));
    }
    net.volumes.resize(q);
    for (std::size_t k = 0; k < q; ++k) {
        if (net.voxel_map[k].empty()) throw InputError("ball " + std::to_string(k) + " owns no voxel");
        net.volumes[k] = static_cast<double>(net.voxel_map[k].size());
    }
    return net;
}

ConductanceParams initial_conductance(const BallNetwork& net) {
    ConductanceParams p;
    p.theta.reserve(net.edges.size());
    for (const auto& e : net.edges) p.theta.push_back(e.contact_area / e.distance);
    return p;
}

std::vector<double> voxel_to_ball(std::span<const double> voxel_masses, const BallNetwork& net) {
    if (voxel_masses.size() != net.owner.size()) throw InputError("voxel mass vector length mismatch");
    std::vector<double> m(net.size(), 0.0);
    for (std::size_t k = 0; k < net.size(); ++k)
        for (NodeId n : net.voxel_map[k]) m[k] += voxel_masses[n];
    return m;
}

std::vector<double> ball_to_voxel_by_concentration(std::span<const double> ball_masses, const BallNetwork& net) {
    check_masses(net, ball_masses);
    std::vector<double> v(net.owner.size(), 0.0);
    for (std::size_t k = 0; k < net.size(); ++k) {
        const double c = ball_masses[k] / net.volumes[k];
        for (NodeId n : net.voxel_map[k]) v[n] = c;
    }
    return v;
}

std::vector<double> pngm_explicit_step(const BallNetwork& net, const ConductanceParams& theta,
                                       std::span<const double> m, double d_coeff, double dt) {
    check_theta(net, theta);
    check_masses(net, m);
    const double s = d_coeff * dt;
    std::vector<double> out(m.begin(), m.end());
    for (std::size_t e = 0; e < net.edges.size(); ++e) {
        const auto& edge = net.edges[e];
        const double flux = s * theta.theta[e] * (m[edge.i] / net.volumes[edge.i] - m[edge.j] / net.volumes[edge.j]);
        out[edge.i] -= flux;
        out[edge.j] += flux;
    }
    return out;
}

std::vector<double> pngm_implicit_step(const BallNetwork& net, const ConductanceParams& theta,
                                       std::span<const double> m, double d_coeff, double dt, double tol,
                                       int max_iter) {
    check_theta(net, theta);
    check_masses(net, m);
    const double s = d_coeff * dt;
    const std::size_t q = net.size();
    std::vector<double> inv_diag(net.volumes);
    for (std::size_t e = 0; e < net.edges.size(); ++e) {
        inv_diag[net.edges[e].i] += s * theta.theta[e];
        inv_diag[net.edges[e].j] += s * theta.theta[e];
    }
    for (double& d : inv_diag) d = 1.0 / d;
    std::vector<double> acc(q);
    const LinearOperator op = [&](std::span<const double> c, std::span<double> y) {
        conductance_laplacian(net, theta, c, acc);
        for (std::size_t k = 0; k < q; ++k) y[k] = net.volumes[k] * c[k] + s * acc[k];
    };
    auto res = pcg_solve(op, inv_diag, m, {tol, max_iter, false});
    for (std::size_t k = 0; k < q; ++k) res.x[k] *= net.volumes[k];
    return std::move(res.x);
}

double pngm_max_stable_dt(const BallNetwork& net, const ConductanceParams& theta, double d_coeff) {
    check_theta(net, theta);
    std::vector<double> out_cond(net.size(), 0.0);
    for (std::size_t e = 0; e < net.edges.size(); ++e) {
        out_cond[net.edges[e].i] += theta.theta[e];
        out_cond[net.edges[e].j] += theta.theta[e];
    }
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < net.size(); ++k)
        if (out_cond[k] > 0.0 && d_coeff > 0.0) best = std::min(best, net.volumes[k] / (d_coeff * out_cond[k]));
    return best;
}

CalibDataset generate_calib_data(const BallNetwork& net, const VoxelGraph& g, const DiffusionConfig& cfg,
                                 const CalibGenOptions& opts) {
    cfg.validate();
    if (net.owner.size() != g.size()) throw InputError("ball network does not match the voxel graph");
    if (opts.n_scenarios < 1) throw InputError("need at least one calibration scenario");
    if (!(opts.mass_min >= 0.0) || !(opts.mass_max >= opts.mass_min))
        throw InputError("calibration mass range must satisfy 0 <= min <= max");
    if (!(opts.voxel_dt_s > 0.0) || !(opts.record_interval_s > 0.0)) throw InputError("time steps must be > 0");
    const double dt = opts.voxel_dt_s / kSecondsPerDay;
    if (cfg.d_coeff > 0.0 && dt > max_stable_dt(g, cfg.d_coeff))
        throw StabilityError("calibration voxel dt " + std::to_string(opts.voxel_dt_s) +
                             " s exceeds the explicit stability bound");
    const auto steps_per_record = checked_ratio(opts.record_interval_s, opts.voxel_dt_s, "record interval / voxel dt");
    const auto records = checked_ratio(opts.horizon_s, opts.record_interval_s, "horizon / record interval");

    CalibDataset ds;
    ds.q = net.size();
    ds.dt_seconds = opts.record_interval_s;
    ds.d_coeff = cfg.d_coeff;
    std::vector<std::vector<DistributionPair>> per_scenario(static_cast<std::size_t>(opts.n_scenarios));

#pragma omp parallel for schedule(dynamic)
    for (int sc = 0; sc < opts.n_scenarios; ++sc) {
        Rng rng = make_rng(opts.rng_seed, static_cast<std::uint64_t>(sc));
        const double total = uniform(rng, opts.mass_min, opts.mass_max);
        std::vector<double> m(g.size());
        double wsum = 0.0;
        for (double& w : m) {
            w = uniform01(rng);
            wsum += w;
        }
        for (double& w : m) w = wsum > 0.0 ? total * w / wsum : 0.0;

        DiffusionConfig step_cfg = cfg;
        step_cfg.dt = dt;
        DiffusionStepper stepper(g, Scheme::Explicit, step_cfg);
        auto& out = per_scenario[static_cast<std::size_t>(sc)];
        std::vector<double> prev = voxel_to_ball(m, net);
        for (long long r = 0; r < records; ++r) {
            if (cfg.d_coeff > 0.0)
                for (long long s = 0; s < steps_per_record; ++s) stepper.step(m, dt);
            auto next = voxel_to_ball(m, net);
            out.push_back({prev, next});
            prev = std::move(next);
        }
    }
    for (auto& v : per_scenario)
        for (auto& p : v) ds.pairs.push_back(std::move(p));
    return ds;
}

void save_calib_data(const CalibDataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "calib_dataset,1\n"
        << "q," << ds.q << "\n"
        << "dt_s," << csv::format(ds.dt_seconds) << "\n"
        << "d_coeff," << csv::format(ds.d_coeff) << "\n"
        << "pairs," << ds.pairs.size() << "\n";
    auto row = [&](const char* tag, const std::vector<double>& v) {
        out << tag;
        for (double x : v) out << ',' << csv::format(x);
        out << '\n';
    };
    for (const auto& p : ds.pairs) {
        row("x", p.x);
        row("y", p.y);
    }
    if (!out) throw Error("failed writing " + path.string());
}

CalibDataset load_calib_data(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read calibration data " + path.string());
    std::string line;
    auto next_cells = [&](const char* tag) {
        while (std::getline(in, line))
            if (!csv::trim(line).empty()) {
                auto cells = csv::split(line);
                if (cells.empty() || cells[0] != tag)
                    throw InputError(path.string() + ": expected '" + tag + "' row, got '" + line + "'");
                return cells;
            }
        throw InputError(path.string() + ": truncated, expected '" + tag + "' row");
    };
    auto header = next_cells("calib_dataset");
    if (header.size() != 2 || header[1] != "1") throw InputError(path.string() + ": unsupported dataset version");
    CalibDataset ds;
    ds.q = static_cast<std::size_t>(csv::parse_int(next_cells("q").at(1)));
    ds.dt_seconds = csv::parse_double(next_cells("dt_s").at(1));
    ds.d_coeff = csv::parse_double(next_cells("d_coeff").at(1));
    const auto n = csv::parse_int(next_cells("pairs").at(1));
    auto read_row = [&](const char* tag) {
        auto cells = next_cells(tag);
        if (cells.size() != ds.q + 1) throw InputError(path.string() + ": row length does not match q");
        std::vector<double> v(ds.q);
        for (std::size_t k = 0; k < ds.q; ++k) v[k] = csv::parse_double(cells[k + 1]);
        return v;
    };
    for (long long p = 0; p < n; ++p) {
        DistributionPair pair;
        pair.x = read_row("x");
        pair.y = read_row("y");
        ds.pairs.push_back(std::move(pair));
    }
    return ds;
}

double loss(const BallNetwork& net, const ConductanceParams& theta, std::span<const DistributionPair> pairs,
            Objective objective, double d_coeff, double dt) {
    check_theta(net, theta);
    if (pairs.empty()) return 0.0;
    const double s = d_coeff * dt;
    const double q = static_cast<double>(net.size());
    double total = 0.0;
    std::vector<double> r;
    for (const auto& p : pairs) {
        pair_residual(net, theta, p, objective, s, r);
        double sq = 0.0;
        for (double v : r) sq += v * v;
        total += sq / q;
    }
    return total / static_cast<double>(pairs.size());
}

std::vector<double> loss_gradient(const BallNetwork& net, const ConductanceParams& theta,
                                  std::span<const DistributionPair> batch, Objective objective, double d_coeff,
                                  double dt) {
    check_theta(net, theta);
    std::vector<double> grad(net.edges.size(), 0.0);
    if (batch.empty()) return grad;
    const double s = d_coeff * dt;
    // d r_i / d theta_ij = sign * s * (c_i - c_j); theta_ij sits in rows i and j.
    const double sign = objective == Objective::L1 ? 1.0 : -1.0;
    const double scale = 2.0 * sign * s / (static_cast<double>(net.size()) * static_cast<double>(batch.size()));
    std::vector<double> r;
    for (const auto& p : batch) {
        const auto c = pair_residual(net, theta, p, objective, s, r);
        for (std::size_t e = 0; e < net.edges.size(); ++e) {
            const auto& edge = net.edges[e];
            grad[e] += (c[edge.i] - c[edge.j]) * (r[edge.i] - r[edge.j]);
        }
    }
    for (double& g : grad) g *= scale;
    return grad;
}

void CalibConfig::validate() const {
    if (epochs < 0) throw InputError("epochs must be >= 0");
    if (batch_size < 1) throw InputError("batch_size must be >= 1");
    if (!(lr0 >= 0.0)) throw InputError("lr0 must be >= 0");
    if (halve_every < 1) throw InputError("halve_every must be >= 1");
}

double CalibConfig::learning_rate(int epoch) const { return std::ldexp(lr0, -(epoch / halve_every)); }

CalibrationResult sgd_calibrate(const BallNetwork& net, const CalibDataset& dataset, const CalibConfig& cfg,
                                const ConductanceParams* start) {
    cfg.validate();
    if (dataset.pairs.empty()) throw InputError("calibration dataset is empty");
    if (dataset.q != net.size()) throw InputError("calibration dataset ball count does not match the network");
    CalibrationResult res;
    res.theta = start ? *start : initial_conductance(net);
    check_theta(net, res.theta);

    const double dt = dataset.dt_days();
    Rng rng = make_rng(cfg.rng_seed);
    std::vector<DistributionPair> batch(static_cast<std::size_t>(cfg.batch_size));
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (auto& slot : batch) slot = dataset.pairs[uniform_below(rng, dataset.pairs.size())];
        const double lr = cfg.learning_rate(epoch);
        res.history.push_back({epoch, lr, loss(net, res.theta, batch, cfg.objective, dataset.d_coeff, dt)});
        const auto grad = loss_gradient(net, res.theta, batch, cfg.objective, dataset.d_coeff, dt);
        for (std::size_t e = 0; e < grad.size(); ++e) {
            if (grad[e] == 0.0) continue;
            double& th = res.theta.theta[e];
            th = grad[e] > 0.0 ? th - lr : th + lr;
            if (th < 0.0) th = 0.0;
        }
    }
    return res;
}

void save_conductance(const BallNetwork& net, const ConductanceParams& theta, const std::filesystem::path& path) {
    check_theta(net, theta);
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "i,j,theta\n";
    for (std::size_t e = 0; e < net.edges.size(); ++e)
        out << net.edges[e].i << ',' << net.edges[e].j << ',' << csv::format(theta.theta[e]) << '\n';
    if (!out) throw Error("failed writing " + path.string());
}

ConductanceParams load_conductance(const BallNetwork& net, const std::filesystem::path& path) {
    std::map<std::pair<BallId, BallId>, std::size_t> index;
    for (std::size_t e = 0; e < net.edges.size(); ++e) index[{net.edges[e].i, net.edges[e].j}] = e;
    ConductanceParams p;
    p.theta.assign(net.edges.size(), std::numeric_limits<double>::quiet_NaN());
    for (const auto& row : csv::read_table(path, {"i", "j", "theta"})) {
        auto i = static_cast<BallId>(csv::parse_int(row[0]));
        auto j = static_cast<BallId>(csv::parse_int(row[1]));
        if (i > j) std::swap(i, j);
        const auto it = index.find({i, j});
        if (it == index.end()) throw InputError(path.string() + ": (" + row[0] + "," + row[1] + ") is not an edge");
        const double th = csv::parse_double(row[2]);
        if (!(th >= 0.0)) throw InputError(path.string() + ": conductance must be >= 0");
        p.theta[it->second] = th;
    }
    for (std::size_t e = 0; e < p.theta.size(); ++e)
        if (std::isnan(p.theta[e]))
            throw InputError(path.string() + ": missing conductance for edge (" + std::to_string(net.edges[e].i) +
                             "," + std::to_string(net.edges[e].j) + ")");
    return p;
}

void save_loss_history(const std::vector<LossRecord>& history, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "epoch,lr,loss\n";
    for (const auto& h : history) out << h.epoch << ',' << csv::format(h.lr) << ',' << csv::format(h.loss) << '\n';
    if (!out) throw Error("failed writing " + path.string());
}

}  // namespace soilvox
