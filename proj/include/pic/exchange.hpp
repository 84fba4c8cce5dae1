#pragma once

#include <span>
#include <vector>

#include "pic/fields.hpp"
#include "pic/grid.hpp"
#include "pic/particles.hpp"
#include "pic/transport.hpp"

namespace pic {

/// Fills the ghost layers of every array from the face neighbours' interiors.
/// Axes are processed x, then y, then z, each slab spanning the full padded
/// extent of the other axes, so edge and corner ghosts come out right.
void exchange_field_halos(std::span<Array3* const> arrays, const DomainTopology& topo,
                          Communicator& comm);

/// Adds ghost-layer deposits into the owning ranks' interiors, receiving from
/// -x, +x, -y, +y, -z, +z in that order, then refreshes the ghosts.
void reduce_current_halos(std::span<Array3* const> arrays, const DomainTopology& topo,
                          Communicator& comm);

/// Hands particles that left the subdomain to the face neighbours, one axis at
/// a time. Arrivals are appended in source order (-face, then +face), each in
/// packet order. Positions are wrapped when crossing the global boundary.
/// Throws SimulationError for a particle more than one ghost layer outside.
void migrate_particles(std::span<ParticleBuffer* const> buffers, const DomainTopology& topo,
                       const YeeLayout& layout, Communicator& comm);

/// Folds x into [0, length) and guarantees floor(x / cell) < cells.
double wrap_periodic(double x, double length, double inv_cell, int cells);

}  // namespace pic
