#include "soilvox/commands.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>

#include "soilvox/biology.hpp"
#include "soilvox/csv.hpp"
#include "soilvox/diffusion.hpp"
#include "soilvox/error.hpp"
#include "soilvox/image.hpp"
#include "soilvox/pngm.hpp"
#include "soilvox/simulator.hpp"
#include "soilvox/voxel_graph.hpp"

namespace soilvox {

namespace {

// Default scenario of the decomposition runs: 289.5 ugC of DOM, 1000 spots
// holding 5.2e7 cells at 5.41e-8 ugC each.
constexpr double kDecompDom = 289.5;
constexpr double kDecompMb = 2.8132;
constexpr int kDecompSpots = 1000;
// Layer-diffusion scenario: 592.7593 mg of DOM for 1.76 h.
constexpr double kLayerDom = 592.7593;
constexpr double kLayerSeconds = 1.76 * 3600.0;

// Conservation guard applied to every command output.
constexpr double kGuardRelDrift = 1e-6;

struct Geometry {
    std::optional<BinaryImage3D> image;
    VoxelGraph graph;
    std::vector<Ball> balls;
};

Dims parse_dims(const std::string& key, const std::string& s) {
    const auto cells = csv::split(s);
    if (cells.size() != 3) throw InputError("config key '" + key + "': expected 'nx,ny,nz'");
    return {static_cast<int>(csv::parse_int(cells[0])), static_cast<int>(csv::parse_int(cells[1])),
            static_cast<int>(csv::parse_int(cells[2]))};
}

Axis parse_axis(const std::string& s) {
    if (s == "x") return Axis::X;
    if (s == "y") return Axis::Y;
    if (s == "z") return Axis::Z;
    throw InputError("axis must be x, y or z, got '" + s + "'");
}

Scheme parse_scheme(const std::string& key, const std::string& s) {
    if (s == "explicit") return Scheme::Explicit;
    if (s == "implicit") return Scheme::Implicit;
    throw InputError("config key '" + key + "' must be explicit or implicit, got '" + s + "'");
}

TransformVariant parse_variant(const std::string& key, const std::string& s) {
    if (s == "batch") return TransformVariant::Batch;
    if (s == "sequential") return TransformVariant::Sequential;
    throw InputError("config key '" + key + "' must be batch or sequential, got '" + s + "'");
}

Objective parse_objective(const std::string& s) {
    if (s == "L1") return Objective::L1;
    if (s == "L2") return Objective::L2;
    throw InputError("objective must be L1 or L2, got '" + s + "'");
}

SeedKind parse_seed_kind(const std::string& s) {
    if (s == "uniform_layers") return SeedKind::UniformLayers;
    if (s == "random_spots") return SeedKind::RandomSpots;
    if (s == "from_file") return SeedKind::FromFile;
    throw InputError("seed_kind must be uniform_layers, random_spots or from_file, got '" + s + "'");
}

std::vector<Ball> load_config_balls(const RunConfig& cfg) { return load_balls(cfg.require_string("balls")); }

BinaryImage3D rasterize_config_balls(const RunConfig& cfg, std::span<const Ball> balls) {
    Dims dims = bounding_dims(balls);
    const auto grid = cfg.get_string("grid_dims", std::to_string(dims.nx) + "," + std::to_string(dims.ny) + "," +
                                                      std::to_string(dims.nz));
    dims = parse_dims("grid_dims", grid);
    return rasterize_balls(balls, dims);
}

// Image from `image` (+ optional subvolume), or rasterized from `balls`.
BinaryImage3D load_config_image(const RunConfig& cfg) {
    BinaryImage3D img;
    if (cfg.has("image") || !cfg.has("balls")) {
        const auto raw = cfg.require_string("image");
        img = load_image(raw, cfg.get_string("image_meta", raw + ".meta"));
    } else {
        img = rasterize_config_balls(cfg, load_config_balls(cfg));
    }
    if (cfg.has("sub_origin") || cfg.has("sub_dims")) {
        const Dims o = parse_dims("sub_origin", cfg.require_string("sub_origin"));
        img = extract_subvolume(img, {o.nx, o.ny, o.nz}, parse_dims("sub_dims", cfg.require_string("sub_dims")));
    }
    return img;
}

Geometry load_voxel_geometry(const RunConfig& cfg) {
    Geometry geo;
    if (cfg.has("graph_cache")) {
        geo.graph = VoxelGraph::load_cache(cfg.require_string("graph_cache"));
        return geo;
    }
    geo.image = load_config_image(cfg);
    geo.graph = build_graph(*geo.image);
    return geo;
}

Geometry load_ball_geometry(const RunConfig& cfg) {
    Geometry geo;
    geo.balls = load_config_balls(cfg);
    geo.image = rasterize_config_balls(cfg, geo.balls);
    geo.graph = build_graph(*geo.image);
    return geo;
}

DiffusionConfig diffusion_config(const RunConfig& cfg, double dt_seconds) {
    DiffusionConfig d;
    d.d_coeff = cfg.get_double("d_coeff", 100950.0);
    d.pcg_tol = cfg.get_double("pcg_tol", 1e-10);
    d.pcg_max_iter = static_cast<int>(cfg.get_int("pcg_max_iter", 1000));
    d.dt = dt_seconds / kSecondsPerDay;
    d.validate();
    return d;
}

BioParams bio_params(const RunConfig& cfg) {
    BioParams p;
    p.rho = cfg.get_double("rho", p.rho);
    p.mu = cfg.get_double("mu", p.mu);
    p.beta = cfg.get_double("beta", p.beta);
    p.v_som = cfg.get_double("v_som", p.v_som);
    p.v_fom = cfg.get_double("v_fom", p.v_fom);
    p.v_dom = cfg.get_double("v_dom", p.v_dom);
    p.k_dom = cfg.get_double("k_dom", p.k_dom);
    p.validate();
    return p;
}

struct ScenarioDefaults {
    std::string seed_kind;
    double dom_total;
    double mb_total;
    int n_spots;
};

Scenario scenario_from(const RunConfig& cfg, const ScenarioDefaults& d) {
    Scenario s;
    s.seed_kind = parse_seed_kind(cfg.get_string("seed_kind", d.seed_kind));
    if (s.seed_kind == SeedKind::FromFile) {
        s.state_file = cfg.require_string("initial_state");
        return s;
    }
    s.dom_total = cfg.get_double("dom_total", d.dom_total);
    s.layer_axis = parse_axis(cfg.get_string("axis", "z"));
    s.layer_ids = cfg.get_int_list("layers", {0, 1});
    s.n_spots = static_cast<int>(cfg.get_int("n_spots", d.n_spots));
    s.mb_total = cfg.get_double("mb_total", d.mb_total);
    s.som_total = cfg.get_double("som_total", 0.0);
    s.fom_total = cfg.get_double("fom_total", 0.0);
    s.rng_seed = cfg.get_seed("rng_seed", 42);
    s.validate();
    return s;
}

struct ScheduleDefaults {
    double t_end_s;
    double record_every_s;
    std::string scheme;
};

Schedule schedule_from(const RunConfig& cfg, const ScheduleDefaults& d) {
    Schedule s;
    s.scheme = parse_scheme("scheme", cfg.get_string("scheme", d.scheme));
    s.transform_variant = parse_variant("transform_variant", cfg.get_string("transform_variant", "sequential"));
    s.dt_diffusion = cfg.get_double("dt_diffusion_s", 0.1) / kSecondsPerDay;
    s.dt_transform = cfg.get_double("dt_transform_s", 0.43) / kSecondsPerDay;
    s.t_end = cfg.get_double("t_end_s", d.t_end_s) / kSecondsPerDay;
    s.record_every = cfg.get_double("record_every_s", d.record_every_s) / kSecondsPerDay;
    s.validate();
    return s;
}

void check_finite_nonneg(std::span<const double> v, const char* what) {
    for (double x : v)
        if (!std::isfinite(x) || x < 0.0)
            throw Error(std::string("numeric guard failed: ") + what + " has a negative or non-finite entry");
}

void check_drift(double initial, double current, const char* what) {
    const double scale = std::max(std::abs(initial), 1e-300);
    if (!std::isfinite(current) || std::abs(current - initial) > kGuardRelDrift * scale)
        throw Error(std::string("numeric guard failed: ") + what + " drifted from " + csv::format(initial) +
                    " to " + csv::format(current));
}

void write_summary(const std::filesystem::path& path, const std::vector<std::pair<std::string, std::string>>& kv) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    for (const auto& [k, v] : kv) out << k << " = " << v << '\n';
    if (!out) throw Error("failed writing " + path.string());
}

double sum_of(const NodeMasses& m) { return m[0] + m[1] + m[2] + m[3] + m[4]; }

// ---------------------------------------------------------------------------

void cmd_build_graph(const RunConfig& cfg, const CommandContext& ctx) {
    const BinaryImage3D img = load_config_image(cfg);
    const VoxelGraph g = build_graph(img);
    g.save_cache(ctx.out_dir / "graph.bin");
    const std::vector<std::pair<std::string, std::string>> summary{
        {"dims", std::to_string(img.dims().nx) + "," + std::to_string(img.dims().ny) + "," +
                     std::to_string(img.dims().nz)},
        {"nodes", std::to_string(g.size())},
        {"edges", std::to_string(g.edge_count())},
        {"max_degree", std::to_string(g.max_degree())},
        {"porosity", csv::format(img.porosity())},
    };
    write_summary(ctx.out_dir / "graph_summary.txt", summary);
    for (const auto& [k, v] : summary) ctx.out << k << " = " << v << '\n';
    if (g.empty()) ctx.err << "warning: image has no pore voxels, graph is empty\n";
}

void cmd_rasterize_balls(const RunConfig& cfg, const CommandContext& ctx) {
    const auto balls = load_config_balls(cfg);
    const BinaryImage3D img = rasterize_config_balls(cfg, balls);
    save_image(img, ctx.out_dir / "image.raw", ctx.out_dir / "image.meta");
    ctx.out << "balls = " << balls.size() << "\npore_voxels = " << img.pore_count()
            << "\nporosity = " << csv::format(img.porosity()) << '\n';
}

void cmd_diffuse(const RunConfig& cfg, const CommandContext& ctx) {
    const Geometry geo = load_voxel_geometry(cfg);
    const Scenario scenario = scenario_from(cfg, {"uniform_layers", kLayerDom, 0.0, 0});
    const Schedule schedule = schedule_from(cfg, {kLayerSeconds, kLayerSeconds, "explicit"});
    const DiffusionConfig dcfg = diffusion_config(cfg, schedule.dt_diffusion * kSecondsPerDay);
    const std::string unit = cfg.get_string("mass_unit", "mg");

    const LayerProfiles lp = run_diffusion_experiment(geo.graph, scenario, schedule, dcfg);
    double initial = 0.0;
    for (double v : lp.profiles.front()) initial += v;
    for (const auto& prof : lp.profiles) {
        double total = 0.0;
        for (double v : prof) total += v;
        check_drift(initial, total, "total DOM");
    }
    check_finite_nonneg(lp.final_dom, "DOM field");
    write_layer_profiles(ctx.out_dir / "layer_profile.csv", lp);
    write_summary(ctx.out_dir / "summary.txt", {{"nodes", std::to_string(geo.graph.size())},
                                                {"records", std::to_string(lp.times.size())},
                                                {"mass_unit", unit},
                                                {"initial_mass", csv::format(initial)}});
    ctx.out << "nodes = " << geo.graph.size() << "\nrecords = " << lp.times.size() << '\n';
}

void cmd_decompose(const RunConfig& cfg, const CommandContext& ctx) {
    const Geometry geo = load_voxel_geometry(cfg);
    const Scenario scenario = scenario_from(cfg, {"random_spots", kDecompDom, kDecompMb, kDecompSpots});
    const Schedule schedule = schedule_from(cfg, {5.0 * kSecondsPerDay, 3600.0, "explicit"});
    const DiffusionConfig dcfg = diffusion_config(cfg, schedule.dt_diffusion * kSecondsPerDay);
    const BioParams params = bio_params(cfg);
    const std::string unit = cfg.get_string("mass_unit", "ugC");

    const DecompositionResult res = run_decomposition(geo.graph, scenario, schedule, dcfg, params);
    const double carbon0 = sum_of(res.totals.front());
    for (const auto& t : res.totals) check_drift(carbon0, sum_of(t), "total carbon");
    for (int c = 0; c < kCompounds; ++c)
        check_finite_nonneg(res.final_state[static_cast<Compound>(c)], "final state");
    write_totals(ctx.out_dir / "totals.csv", res.times, res.totals);
    write_state(ctx.out_dir / "final_state.csv", geo.graph, res.final_state);
    write_summary(ctx.out_dir / "summary.txt", {{"nodes", std::to_string(geo.graph.size())},
                                                {"records", std::to_string(res.times.size())},
                                                {"mass_unit", unit},
                                                {"pcg_iterations", std::to_string(res.pcg_iterations)}});
    ctx.out << "nodes = " << geo.graph.size() << "\nrecords = " << res.times.size() << '\n';
}

CalibDataset calib_data_for(const RunConfig& cfg, const Geometry& geo, const BallNetwork& net) {
    CalibGenOptions opts;
    opts.n_scenarios = static_cast<int>(cfg.get_int("calib_scenarios", opts.n_scenarios));
    opts.record_interval_s = cfg.get_double("calib_record_s", opts.record_interval_s);
    opts.horizon_s = cfg.get_double("calib_horizon_s", opts.horizon_s);
    opts.voxel_dt_s = cfg.get_double("calib_voxel_dt_s", opts.voxel_dt_s);
    opts.mass_min = cfg.get_double("calib_mass_min", opts.mass_min);
    opts.mass_max = cfg.get_double("calib_mass_max", opts.mass_max);
    opts.rng_seed = cfg.get_seed("rng_seed", 42);
    return generate_calib_data(net, geo.graph, diffusion_config(cfg, opts.voxel_dt_s), opts);
}

void cmd_gen_calib_data(const RunConfig& cfg, const CommandContext& ctx) {
    const Geometry geo = load_ball_geometry(cfg);
    const BallNetwork net = build_ball_network(geo.balls, geo.graph);
    const CalibDataset ds = calib_data_for(cfg, geo, net);
    for (const auto& p : ds.pairs) {
        double sx = 0.0, sy = 0.0;
        for (double v : p.x) sx += v;
        for (double v : p.y) sy += v;
        check_drift(sx, sy, "calibration pair mass");
    }
    save_calib_data(ds, ctx.out_dir / "calib_data.csv");
    ctx.out << "balls = " << net.size() << "\nedges = " << net.edges.size() << "\npairs = " << ds.pairs.size()
            << '\n';
}

void cmd_calibrate(const RunConfig& cfg, const CommandContext& ctx) {
    const Geometry geo = load_ball_geometry(cfg);
    const BallNetwork net = build_ball_network(geo.balls, geo.graph);
    CalibDataset ds;
    if (cfg.has("calib_data")) {
        ds = load_calib_data(cfg.require_string("calib_data"));
    } else {
        ds = calib_data_for(cfg, geo, net);
        save_calib_data(ds, ctx.out_dir / "calib_data.csv");
    }
    CalibConfig cc;
    cc.objective = parse_objective(cfg.get_string("objective", "L2"));
    cc.epochs = static_cast<int>(cfg.get_int("epochs", cc.epochs));
    cc.batch_size = static_cast<int>(cfg.get_int("batch_size", cc.batch_size));
    cc.lr0 = cfg.get_double("lr0", cc.lr0);
    cc.halve_every = static_cast<int>(cfg.get_int("halve_every", cc.halve_every));
    cc.rng_seed = cfg.get_seed("rng_seed", 42) + 1;
    const CalibrationResult res = sgd_calibrate(net, ds, cc);
    for (double th : res.theta.theta)
        if (!std::isfinite(th) || th < 0.0) throw Error("numeric guard failed: invalid conductance");
    save_conductance(net, res.theta, ctx.out_dir / "theta.csv");
    save_loss_history(res.history, ctx.out_dir / "loss_history.csv");
    ctx.out << "balls = " << net.size() << "\nedges = " << net.edges.size() << "\npairs = " << ds.pairs.size()
            << "\nepochs = " << cc.epochs << '\n';
    if (!res.history.empty())
        ctx.out << "initial_loss = " << csv::format(res.history.front().loss)
                << "\nfinal_loss = " << csv::format(res.history.back().loss) << '\n';
}

void cmd_pngm_simulate(const RunConfig& cfg, const CommandContext& ctx) {
    const Geometry geo = load_ball_geometry(cfg);
    const BallNetwork net = build_ball_network(geo.balls, geo.graph);
    const ConductanceParams theta =
        cfg.has("theta") ? load_conductance(net, cfg.require_string("theta")) : initial_conductance(net);

    const Scenario scenario = scenario_from(cfg, {"uniform_layers", kLayerDom, 0.0, 0});
    const StateField voxel_state = initial_state(geo.graph, scenario);
    StateField state(net.size());
    for (int c = 0; c < kCompounds; ++c)
        state[static_cast<Compound>(c)] = voxel_to_ball(voxel_state[static_cast<Compound>(c)], net);

    const std::string transform = cfg.get_string("pngm_transform", "none");
    std::optional<BioParams> params;
    Schedule schedule;
    schedule.t_end = cfg.get_double("t_end_s", kLayerSeconds) / kSecondsPerDay;
    schedule.record_every = cfg.get_double("record_every_s", 600.0) / kSecondsPerDay;
    schedule.dt_diffusion = cfg.get_double("pngm_dt_s", 10.0) / kSecondsPerDay;
    schedule.dt_transform = schedule.dt_diffusion;
    if (transform != "none") {
        schedule.transform_variant = parse_variant("pngm_transform", transform);
        schedule.dt_transform = cfg.get_double("pngm_dt_transform_s", 30.0) / kSecondsPerDay;
        params = bio_params(cfg);
    }
    const Scheme scheme = parse_scheme("pngm_scheme", cfg.get_string("pngm_scheme", "implicit"));
    const DiffusionConfig dcfg = diffusion_config(cfg, schedule.dt_diffusion * kSecondsPerDay);
    if (scheme == Scheme::Explicit && schedule.dt_diffusion > pngm_max_stable_dt(net, theta, dcfg.d_coeff))
        throw StabilityError("pngm_dt_s exceeds the ball-network explicit stability bound");

    std::ofstream balls_out(ctx.out_dir / "ball_masses.csv");
    if (!balls_out) throw Error("cannot write ball_masses.csv");
    balls_out << "t_days,ball,mb,dom,som,fom,co2\n";
    std::vector<double> times;
    std::vector<NodeMasses> totals;
    run_coupled(
        state, schedule, params ? &*params : nullptr,
        [&](std::vector<double>& dom, double dt) {
            dom = scheme == Scheme::Explicit
                      ? pngm_explicit_step(net, theta, dom, dcfg.d_coeff, dt)
                      : pngm_implicit_step(net, theta, dom, dcfg.d_coeff, dt, dcfg.pcg_tol, dcfg.pcg_max_iter);
        },
        [&](double t, const StateField& s) {
            times.push_back(t);
            totals.push_back(total_masses(s));
            for (std::size_t k = 0; k < s.size(); ++k) {
                balls_out << csv::format(t) << ',' << k;
                for (double v : s.node(k)) balls_out << ',' << csv::format(v);
                balls_out << '\n';
            }
        });
    if (!balls_out) throw Error("failed writing ball_masses.csv");
    const double carbon0 = sum_of(totals.front());
    for (const auto& t : totals) check_drift(carbon0, sum_of(t), "total carbon");
    write_totals(ctx.out_dir / "totals.csv", times, totals);
    ctx.out << "balls = " << net.size() << "\nrecords = " << times.size() << '\n';
}

using CommandFn = std::function<void(const RunConfig&, const CommandContext&)>;

const std::map<std::string, CommandFn>& command_table() {
    static const std::map<std::string, CommandFn> table{
        {"build-graph", cmd_build_graph},   {"rasterize-balls", cmd_rasterize_balls},
        {"diffuse", cmd_diffuse},           {"decompose", cmd_decompose},
        {"gen-calib-data", cmd_gen_calib_data}, {"calibrate", cmd_calibrate},
        {"pngm-simulate", cmd_pngm_simulate},
    };
    return table;
}

}  // namespace

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"build-graph", "rasterize-balls", "diffuse",      "decompose",
                                                "gen-calib-data", "calibrate",     "pngm-simulate"};
    return names;
}

void run_command(const std::string& name, const RunConfig& cfg, const CommandContext& ctx) {
    const auto& table = command_table();
    const auto it = table.find(name);
    if (it == table.end()) throw InputError("unknown command '" + name + "'");
    std::filesystem::create_directories(ctx.out_dir);
    try {
        it->second(cfg, ctx);
    } catch (...) {
        cfg.write_resolved(ctx.out_dir / "resolved_config.txt");
        throw;
    }
    cfg.write_resolved(ctx.out_dir / "resolved_config.txt");
}

}  // namespace soilvox
