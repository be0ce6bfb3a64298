#pragma once

#include "fitsim/dae.hpp"

namespace fitsim {

/// Charge right-hand side q(t) = pattern * signal(t) over free nodes.
struct ChargeSource {
    Vec pattern;
    Signal signal;
};

/// Lossless full-wave system in the field strengths, x = [h; e]. Explicit ODE
/// after inverting the diagonal mass.
DaeSystem fullwave_eh(const Model& model);

/// Transformed full-wave stiffness in the scaled unknowns; skew-symmetric.
SpMat fullwave_transformed_stiffness(const Model& model);

/// Lorenz-gauged A-Phi system, x = [q; phi; a; pi], differential index 1.
DaeSystem aphi_lorenz(const Model& model, ScalingMode mode = ScalingMode::diagonal);

/// Coulomb-gauged A-Phi system, x = [q; phi; a; pi], differential index 2.
DaeSystem aphi_coulomb(const Model& model, ScalingMode mode = ScalingMode::diagonal);

/// Damped-wave potential pair with known charges, reduced to first order over
/// [a; da/dt; phi; dphi/dt]. The charge source must satisfy the discrete
/// continuity equation against the current sources.
DaeSystem wave_pair(const Model& model, const std::optional<ChargeSource>& q = std::nullopt,
                    ScalingMode mode = ScalingMode::diagonal);

/// Electroquasistatic scalar potential ODE over the free nodes.
DaeSystem eqs_phi(const Model& model);

/// Mixed charge/potential electroquasistatic pair, x = [phi; q], index 1.
DaeSystem eqs_mixed(const Model& model);

enum class MqsGauge { none, graddiv };

/// Magnetoquasistatic A* curl-curl system over the free edges. The grad-div
/// gauge adds Z_sigma and makes the pencil positive definite (index 1); the
/// ungauged system is integrated with conjugate gradients.
DaeSystem mqs_astar(const Model& model, MqsGauge gauge = MqsGauge::graddiv);

/// Tree-cotree gauged T-Omega system, x = [t; psi]. The electric vector
/// potential lives on the conductor edges with a spanning tree removed; the
/// magnetic scalar potential is grounded in one node.
DaeSystem mqs_tomega(const Model& model);

/// Darwin field systems over [a; phi]; index deliberately unasserted.
DaeSystem darwin_a(const Model& model, const std::optional<ChargeSource>& q);
DaeSystem darwin_b(const Model& model, bool graddiv_gauge = true,
                   ScalingMode mode = ScalingMode::diagonal);

/// Relative residual of the discrete continuity equation for given sources and
/// rates (all over the free spaces).
double continuity_residual(const Model& model, const Vec& j_s, const Vec& q, const Vec& q_dot,
                           const Vec& a_dot);

/// CLI-facing dispatch by formulation tag.
DaeSystem assemble_formulation(const Model& model, const std::string& tag);

const std::vector<std::string>& formulation_tags();

}  // namespace fitsim
