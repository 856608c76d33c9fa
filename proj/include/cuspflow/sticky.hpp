#pragma once

#include <functional>
#include <vector>

namespace cuspflow {

// brute-force inelastic particle discretization of the 1D gas, used as an
// independent oracle for the accretion quadratures and the tracked point mass
struct ParticleSystem {
    std::vector<double> positions; // strictly increasing
    std::vector<double> masses;
    std::vector<double> velocities;
    std::vector<long long> counts; // source particles merged into each slot
    double time = 0.0;
};

// midpoint sampling on N uniform cells: particle i sits at the cell midpoint,
// carries the exact cell mass and the pointwise velocity
ParticleSystem discretize(const std::function<double(double)>& rho_bar,
                          const std::function<double(double)>& w, double a, double b, int N);

// ballistic flight between events, perfectly inelastic merges at events;
// collision times within 1e-12 of each other are treated as one event and
// adjacent chains merge as a single group
ParticleSystem evolve(ParticleSystem sys, double t_end);

struct Cluster {
    double position = 0.0;
    double mass = 0.0;
    double velocity = 0.0;
    long long count = 0;
};

// heaviest merged cluster, leftmost on ties; falls back to the heaviest
// single particle when no merge has happened yet
Cluster heaviest_cluster(const ParticleSystem& sys);

} // namespace cuspflow
