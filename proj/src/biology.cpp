#include "soilvox/biology.hpp"

#include "soilvox/error.hpp"
#include "soilvox/parallel.hpp"

namespace soilvox {

void BioParams::validate() const {
    if (rho < 0 || mu < 0 || v_som < 0 || v_fom < 0 || v_dom < 0)
        throw InputError("biological rates must be >= 0");
    if (!(beta >= 0.0 && beta <= 1.0)) throw InputError("beta must lie in [0, 1]");
    if (!(k_dom > 0.0)) throw InputError("k_dom must be > 0");
}

std::vector<double>& StateField::operator[](Compound c) {
    switch (c) {
        case Compound::MB: return mb;
        case Compound::DOM: return dom;
        case Compound::SOM: return som;
        case Compound::FOM: return fom;
        case Compound::CO2: return co2;
    }
    throw Error("bad compound");
}

const std::vector<double>& StateField::operator[](Compound c) const {
    return const_cast<StateField&>(*this)[c];
}

void StateField::set_node(std::size_t i, const NodeMasses& x) {
    mb[i] = x[0];
    dom[i] = x[1];
    som[i] = x[2];
    fom[i] = x[3];
    co2[i] = x[4];
}

void transform_node_batch(NodeMasses& x, const BioParams& p, double dt) {
    auto& [mb, dom, som, fom, co2] = x;

    double uptake = p.v_dom * dom / (p.k_dom + dom) * mb * dt;
    if (uptake > dom) uptake = dom;

    // Mortality has priority over respiration when together they exceed MB.
    double resp = p.rho * mb * dt;
    double morta = p.mu * mb * dt;
    if (morta > mb) {
        morta = mb;
        resp = 0.0;
    }
    const double alive = mb - morta;
    if (resp > alive) resp = alive;

    const double morta_som = (1.0 - p.beta) * morta;
    const double morta_dom = p.beta * morta;

    double turn_fom = p.v_fom * fom * dt;
    if (turn_fom > fom) turn_fom = fom;
    double turn_som = p.v_som * som * dt;
    if (turn_som > som) turn_som = som;

    mb = (alive - resp) + uptake;
    dom = (dom - uptake) + morta_dom + turn_fom + turn_som;
    som = (som - turn_som) + morta_som;
    fom = fom - turn_fom;
    co2 = co2 + resp;
}

void transform_node_sequential(NodeMasses& x, const BioParams& p, double dt) {
    auto& [mb, dom, som, fom, co2] = x;

    if (mb > 0.0) {
        if (dom > 0.0) {
            const double uptake = p.v_dom * dom / (p.k_dom + dom) * mb * dt;
            if (uptake < dom) {
                mb += uptake;
                dom -= uptake;
            } else {
                mb += dom;
                dom = 0.0;
            }
        }
        const double morta = p.mu * mb * dt;
        if (morta < mb) {
            mb -= morta;
            dom += p.beta * morta;
            som += (1.0 - p.beta) * morta;
        } else {
            dom += p.beta * mb;
            som += (1.0 - p.beta) * mb;
            mb = 0.0;
        }
        const double resp = p.rho * mb * dt;
        if (resp < mb) {
            mb -= resp;
            co2 += resp;
        } else {
            co2 += mb;
            mb = 0.0;
        }
    }
    if (som > 0.0) {
        const double turn_som = p.v_som * som * dt;
        if (turn_som < som) {
            som -= turn_som;
            dom += turn_som;
        } else {
            dom += som;
            som = 0.0;
        }
    }
    if (fom > 0.0) {
        const double turn_fom = p.v_fom * fom * dt;
        if (turn_fom < fom) {
            fom -= turn_fom;
            dom += turn_fom;
        } else {
            dom += fom;
            fom = 0.0;
        }
    }
}

void transform_in_place(StateField& state, const BioParams& p, double dt, TransformVariant variant) {
    if (!(dt > 0.0)) throw InputError("transformation dt must be > 0");
    const auto n = static_cast<std::ptrdiff_t>(state.size());
    const bool batch = variant == TransformVariant::Batch;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        // Nodes without biomass or organic pools have nothing to transform.
        if (state.mb[k] == 0.0 && state.som[k] == 0.0 && state.fom[k] == 0.0) continue;
        NodeMasses x = state.node(k);
        if (batch)
            transform_node_batch(x, p, dt);
        else
            transform_node_sequential(x, p, dt);
        state.set_node(k, x);
    }
}

StateField transform_batch(const StateField& state, const BioParams& p, double dt) {
    StateField out = state;
    transform_in_place(out, p, dt, TransformVariant::Batch);
    return out;
}

StateField transform_sequential(const StateField& state, const BioParams& p, double dt) {
    StateField out = state;
    transform_in_place(out, p, dt, TransformVariant::Sequential);
    return out;
}

NodeMasses total_masses(const StateField& state) {
    return {parallel::sum(state.mb), parallel::sum(state.dom), parallel::sum(state.som), parallel::sum(state.fom),
            parallel::sum(state.co2)};
}

}  // namespace soilvox
