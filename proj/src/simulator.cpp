#include "soilvox/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

#include "soilvox/csv.hpp"
#include "soilvox/error.hpp"
#include "soilvox/random.hpp"

namespace soilvox {

namespace {

// Relative slack when comparing accumulated times to grid points.
constexpr double kTimeSlack = 1e-9;

// Length of the last of `steps` steps of size dt covering `span`: the
// remainder, snapped to dt when it differs from it by rounding only.
double last_step(double span, double dt, int steps) {
    const double tail = span - (steps - 1) * dt;
    return std::abs(tail - dt) <= kTimeSlack * dt ? dt : tail;
}

int step_count(double span, double dt) {
    const double ratio = span / dt;
    const auto n = static_cast<long long>(std::ceil(ratio - kTimeSlack));
    if (n > 2'000'000'000LL) throw InputError("time step too small for the simulated span");
    return static_cast<int>(std::max<long long>(n, 0));
}

// Emits a record whenever a completed step reaches the next multiple of `every`.
class RecordClock {
public:
    explicit RecordClock(double every) : every_(every) {}

    bool due(double t) {
        if (t < next_ * (1.0 - kTimeSlack) - every_ * kTimeSlack) return false;
        while (next_ <= t * (1.0 + kTimeSlack) + every_ * kTimeSlack) next_ += every_;
        return true;
    }

private:
    double every_;
    double next_ = 0.0;
};

void check_explicit(const VoxelGraph& g, const Schedule& s, const DiffusionConfig& cfg) {
    if (s.scheme != Scheme::Explicit || cfg.d_coeff == 0.0 || g.empty()) return;
    const double bound = max_stable_dt(g, cfg.d_coeff);
    if (s.dt_diffusion > bound)
        throw StabilityError("explicit diffusion dt " + std::to_string(s.dt_diffusion * kSecondsPerDay) +
                             " s exceeds the stability bound " + std::to_string(bound * kSecondsPerDay) + " s");
}

void write_or_throw(std::ofstream& out, const std::filesystem::path& path) {
    if (!out) throw Error("failed writing " + path.string());
}

}  // namespace

void Scenario::validate() const {
    if (dom_total < 0 || mb_total < 0 || som_total < 0 || fom_total < 0)
        throw InputError("scenario totals must be >= 0");
    if (n_spots < 0) throw InputError("n_spots must be >= 0");
}

void Schedule::validate() const {
    if (!(t_end >= 0.0)) throw InputError("t_end must be >= 0");
    if (!(dt_transform > 0.0) || !(dt_diffusion > 0.0)) throw InputError("time steps must be > 0");
    if (!(record_every > 0.0)) throw InputError("record interval must be > 0");
    if (record_every < std::min(dt_transform, dt_diffusion) * (1.0 - kTimeSlack))
        throw InputError("record interval must not be shorter than the smallest time step");
}

std::vector<double> seed_layers(const VoxelGraph& g, Axis axis, std::span<const int> layer_ids,
                                double total_mass) {
    const auto a = static_cast<int>(axis);
    std::vector<char> selected_layer(static_cast<std::size_t>(std::max(g.dims().extent(a), 0)), 0);
    for (int id : layer_ids)
        if (id >= 0 && id < g.dims().extent(a)) selected_layer[static_cast<std::size_t>(id)] = 1;
    std::vector<double> m(g.size(), 0.0);
    std::size_t count = 0;
    for (const auto& c : g.coords()) count += selected_layer[static_cast<std::size_t>(c[a])];
    if (count == 0) throw InputError("no pore voxels in the selected layers");
    const double share = total_mass / static_cast<double>(count);
    for (std::size_t i = 0; i < g.size(); ++i)
        if (selected_layer[static_cast<std::size_t>(g.coords()[i][a])]) m[i] = share;
    return m;
}

std::vector<double> seed_spots(const VoxelGraph& g, int n_spots, double total_mass, std::uint64_t rng_seed) {
    if (n_spots < 0 || static_cast<std::size_t>(n_spots) > g.size())
        throw InputError("n_spots (" + std::to_string(n_spots) + ") exceeds the pore voxel count (" +
                         std::to_string(g.size()) + ")");
    std::vector<double> m(g.size(), 0.0);
    if (n_spots == 0) return m;
    // Partial Fisher-Yates: the first n_spots slots become the sample.
    std::vector<NodeId> idx(g.size());
    std::iota(idx.begin(), idx.end(), NodeId{0});
    Rng rng = make_rng(rng_seed);
    const double share = total_mass / n_spots;
    for (std::size_t k = 0; k < static_cast<std::size_t>(n_spots); ++k) {
        const auto pick = k + uniform_below(rng, idx.size() - k);
        std::swap(idx[k], idx[pick]);
        m[idx[k]] = share;
    }
    return m;
}

StateField initial_state(const VoxelGraph& g, const Scenario& sc) {
    sc.validate();
    if (sc.seed_kind == SeedKind::FromFile) return load_state(sc.state_file, g);
    StateField s(g.size());
    if (g.empty()) return s;
    if (sc.seed_kind == SeedKind::UniformLayers) {
        s.dom = seed_layers(g, sc.layer_axis, sc.layer_ids, sc.dom_total);
    } else {
        std::fill(s.dom.begin(), s.dom.end(), sc.dom_total / static_cast<double>(g.size()));
    }
    s.mb = seed_spots(g, sc.n_spots, sc.mb_total, sc.rng_seed);
    std::fill(s.som.begin(), s.som.end(), sc.som_total / static_cast<double>(g.size()));
    std::fill(s.fom.begin(), s.fom.end(), sc.fom_total / static_cast<double>(g.size()));
    return s;
}

std::vector<double> layer_profile(const VoxelGraph& g, std::span<const double> m, Axis axis) {
    const auto a = static_cast<int>(axis);
    std::vector<double> prof(static_cast<std::size_t>(g.dims().extent(a)), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) prof[static_cast<std::size_t>(g.coords()[i][a])] += m[i];
    return prof;
}

LayerProfiles run_diffusion_experiment(const VoxelGraph& g, const Scenario& scenario, const Schedule& schedule,
                                       const DiffusionConfig& cfg) {
    schedule.validate();
    cfg.validate();
    if (scenario.mb_total > 0 || scenario.som_total > 0 || scenario.fom_total > 0 || scenario.n_spots > 0)
        throw InputError("diffusion experiment scenario must seed DOM only");
    check_explicit(g, schedule, cfg);

    const StateField init = initial_state(g, scenario);
    LayerProfiles out;
    out.axis = scenario.layer_axis;
    std::vector<double> dom = init.dom;
    DiffusionStepper stepper(g, schedule.scheme, cfg);
    RecordClock clock(schedule.record_every);

    auto record = [&](double t) {
        out.times.push_back(t);
        out.profiles.push_back(layer_profile(g, dom, out.axis));
    };
    clock.due(0.0);
    record(0.0);

    const double dt = schedule.dt_diffusion;
    const int steps = step_count(schedule.t_end, dt);
    for (int k = 0; k < steps; ++k) {
        const bool last = k + 1 == steps;
        const double t1 = last ? schedule.t_end : (k + 1) * dt;
        if (!g.empty()) stepper.step(dom, last ? last_step(schedule.t_end, dt, steps) : dt);
        if (clock.due(t1) || last) {
            if (out.times.back() != t1) record(t1);
        }
    }
    out.final_dom = std::move(dom);
    return out;
}

void run_coupled(StateField& state, const Schedule& schedule, const BioParams* params,
                 const DiffusionOperator& diffuse, const RecordCallback& on_record) {
    schedule.validate();
    if (params) params->validate();
    RecordClock clock(schedule.record_every);
    clock.due(0.0);
    on_record(0.0, state);

    // Without transformation the diffusion step alone sets the grid.
    const double dt_transform = params ? schedule.dt_transform : schedule.dt_diffusion;
    const bool transform_coarse = dt_transform >= schedule.dt_diffusion;
    const double coarse = std::max(dt_transform, schedule.dt_diffusion);
    const double fine = std::min(dt_transform, schedule.dt_diffusion);

    auto transform = [&](double dt) {
        if (params) transform_in_place(state, *params, dt, schedule.transform_variant);
    };
    auto diffusion = [&](double dt) { diffuse(state.dom, dt); };
    auto sub_steps = [&](double span, auto&& op) {
        const int n = std::max(1, step_count(span, fine));
        const double tail = last_step(span, fine, n);
        for (int s = 0; s < n; ++s) op(s + 1 < n ? fine : tail);
    };

    const int steps = step_count(schedule.t_end, coarse);
    double last_recorded = 0.0;
    for (int k = 0; k < steps; ++k) {
        // Full steps use the exact dt; only the last one absorbs the remainder.
        const bool last = k + 1 == steps;
        const double t1 = last ? schedule.t_end : (k + 1) * coarse;
        const double span = last ? last_step(schedule.t_end, coarse, steps) : coarse;
        if (transform_coarse) {
            transform(span);
            sub_steps(span, diffusion);
        } else {
            sub_steps(span, transform);
            diffusion(span);
        }
        if ((clock.due(t1) || last) && t1 != last_recorded) {
            on_record(t1, state);
            last_recorded = t1;
        }
    }
}

DecompositionResult run_decomposition(const VoxelGraph& g, const StateField& initial, const Schedule& schedule,
                                      const DiffusionConfig& cfg, const BioParams& params) {
    schedule.validate();
    cfg.validate();
    check_explicit(g, schedule, cfg);
    if (initial.size() != g.size()) throw InputError("initial state size does not match the graph");

    DecompositionResult out;
    out.final_state = initial;
    DiffusionStepper stepper(g, schedule.scheme, cfg);
    const bool diffuse = cfg.d_coeff > 0.0 && !g.empty();
    run_coupled(
        out.final_state, schedule, &params,
        [&](std::vector<double>& dom, double dt) {
            if (diffuse) stepper.step(dom, dt);
        },
        [&](double t, const StateField& state) {
            out.times.push_back(t);
            out.totals.push_back(total_masses(state));
        });
    out.pcg_iterations = stepper.total_pcg_iterations();
    return out;
}

DecompositionResult run_decomposition(const VoxelGraph& g, const Scenario& scenario, const Schedule& schedule,
                                      const DiffusionConfig& cfg, const BioParams& params) {
    return run_decomposition(g, initial_state(g, scenario), schedule, cfg, params);
}

void write_layer_profiles(const std::filesystem::path& path, const LayerProfiles& lp) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "t_days,layer,mass\n";
    for (std::size_t r = 0; r < lp.times.size(); ++r)
        for (std::size_t l = 0; l < lp.profiles[r].size(); ++l)
            out << csv::format(lp.times[r]) << ',' << l << ',' << csv::format(lp.profiles[r][l]) << '\n';
    write_or_throw(out, path);
}

void write_totals(const std::filesystem::path& path, const std::vector<double>& times,
                  const std::vector<NodeMasses>& totals) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "t_days,mb,dom,som,fom,co2\n";
    for (std::size_t r = 0; r < times.size(); ++r) {
        out << csv::format(times[r]);
        for (double v : totals[r]) out << ',' << csv::format(v);
        out << '\n';
    }
    write_or_throw(out, path);
}

void write_state(const std::filesystem::path& path, const VoxelGraph& g, const StateField& state) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "node,i,j,k,mb,dom,som,fom,co2\n";
    for (std::size_t n = 0; n < g.size(); ++n) {
        const auto& c = g.coord(static_cast<NodeId>(n));
        out << n << ',' << c[0] << ',' << c[1] << ',' << c[2];
        for (double v : state.node(n)) out << ',' << csv::format(v);
        out << '\n';
    }
    write_or_throw(out, path);
}

StateField load_state(const std::filesystem::path& path, const VoxelGraph& g) {
    const auto rows = csv::read_table(path, {"node", "i", "j", "k", "mb", "dom", "som", "fom", "co2"});
    StateField s(g.size());
    for (const auto& row : rows) {
        const Index3 c{static_cast<int>(csv::parse_int(row[1])), static_cast<int>(csv::parse_int(row[2])),
                       static_cast<int>(csv::parse_int(row[3]))};
        const auto node = g.find(c);
        if (!node) throw InputError(path.string() + ": voxel (" + row[1] + "," + row[2] + "," + row[3] + ") is not pore");
        NodeMasses x{};
        for (int q = 0; q < kCompounds; ++q) {
            x[static_cast<std::size_t>(q)] = csv::parse_double(row[static_cast<std::size_t>(4 + q)]);
            if (!(x[static_cast<std::size_t>(q)] >= 0.0)) throw InputError(path.string() + ": negative mass");
        }
        s.set_node(*node, x);
    }
    return s;
}

}  // namespace soilvox
