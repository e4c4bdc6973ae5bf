#include <spdlog/spdlog.h>

#include "homsusp/error.hpp"
#include "homsusp/micro.hpp"

namespace homsusp {

namespace {

// Cell-mesh P2 node -> global P2 node, per particle.
std::vector<std::vector<int>> cell_node_maps(const PerforatedMesh& mesh, const P2Space& cell_space,
                                             const P2Space& space) {
  const Mesh& cell = cell_space.mesh();
  const int nv = cell.num_vertices();
  std::vector<std::pair<int, int>> edge_of(cell_space.num_nodes(), {-1, -1});
  static constexpr int kEdge[3][2] = {{0, 1}, {1, 2}, {2, 0}};
  for (int t = 0; t < cell.num_triangles(); ++t) {
    const auto& el = cell_space.element(t);
    for (int e = 0; e < 3; ++e) edge_of[el[3 + e]] = {cell.triangles[t][kEdge[e][0]], cell.triangles[t][kEdge[e][1]]};
  }
  std::vector<std::vector<int>> out(mesh.particles.size(), std::vector<int>(cell_space.num_nodes()));
  for (std::size_t k = 0; k < out.size(); ++k) {
    const auto& vmap = mesh.cell_vertex_map[k];
    for (int n = 0; n < cell_space.num_nodes(); ++n) {
      out[k][n] = n < nv ? vmap[n] : space.edge_node(vmap[edge_of[n].first], vmap[edge_of[n].second]);
      require(out[k][n] >= 0, ErrorCode::InvalidArgument, "cell node has no image in the perforated mesh");
    }
  }
  return out;
}

double h1_norm(const std::shared_ptr<const P2Space>& vs, const Vec& u) {
  MixedField f = make_field(vs, nullptr);
  f.u = u;
  return norms(vs->mesh(), field_fn(f)).h1();
}

}  // namespace

ProjectionReport project_to_Veps(const VectorFn& u, const PerforatedMesh& mesh, const SolverOptions& options) {
  require(static_cast<bool>(u), ErrorCode::InvalidArgument, "projection needs a velocity field");
  auto base = std::make_shared<const PerforatedMesh>(mesh);
  const PerforatedMesh& pm = *base;
  auto vs = std::make_shared<const P2Space>(base);
  const Vec u0 = interpolate(*vs, u);

  // Step 1: w = 0 on the boundary with div w = div u against fluid P1 and per-particle constants.
  std::vector<int> group(pm.num_triangles(), -1);
  for (int t = 0; t < pm.num_triangles(); ++t)
    if (pm.region[t] == Region::Rigid) group[t] = pm.particle_of[t];
  auto ps = std::make_shared<const PressureSpace>(PressureSpace::fluid_p1_plus_groups(base, group));
  VelocityConstraintSpec spec;
  spec.dirichlet_box = true;
  const ConstraintMap vmap = build_velocity_constraints(*vs, spec);
  const PressureMap pmap = build_pressure_map(*ps, false, true);
  StokesForms forms;
  forms.viscosity = Viscosity::scalar(1.0);
  forms.stiffness_mask.assign(pm.num_triangles(), 1);
  forms.pressure_mass = true;
  SaddleSystem sys = assemble_stokes(*vs, *ps, vmap, pmap, forms);
  Vec w;
  {
    SpMat K_full, B_full;
    assemble_full(*vs, *ps, forms, K_full, B_full);
    const Vec div = B_full * u0;
    for (int i = 0; i < ps->size(); ++i)
      if (pmap.reduced_of_full[i] >= 0) sys.G(pmap.reduced_of_full[i]) = div(i);
  }
  {
    const SaddleSolver solver(sys, options);
    w = vmap.expand(solver.solve(sys.F, sys.G).u);
  }
  const Vec u1 = u0 - w;

  // Step 2: per cell, the strain defect of u1 on the particle extended with zero trace on the cell boundary.
  auto cell = std::make_shared<const CellMesh>(pm.cell);
  auto cvs = std::make_shared<const P2Space>(cell);
  auto cps = std::make_shared<const PressureSpace>(PressureSpace::fluid_p1(cell));
  VelocityConstraintSpec cspec;
  cspec.dirichlet_box = true;
  const std::vector<char> rigid = cvs->region_nodes(Region::Rigid);
  for (int n = 0; n < cvs->num_nodes(); ++n)
    if (rigid[n]) cspec.pinned_nodes.push_back(n);
  ConstraintMap cmap = build_velocity_constraints(*cvs, cspec);
  const PressureMap cpmap = build_pressure_map(*cps, false, true);
  StokesForms cforms;
  cforms.viscosity = Viscosity::scalar(1.0);
  const SaddleSolver csolver(assemble_stokes(*cvs, *cps, cmap, cpmap, cforms), options);
  const auto node_map = cell_node_maps(pm, *cvs, *vs);
  const auto tris = particle_triangles(pm);

  MixedField f1 = make_field(vs, nullptr);
  f1.u = u1;
  Vec ext = Vec::Zero(vs->num_dofs());
  Vec offset = Vec::Zero(cvs->num_dofs());
  for (std::size_t k = 0; k < pm.particles.size(); ++k) {
    const RigidMotion R = rigid_l2_fit(f1, tris[k], pm.centers[k]);
    offset.setZero();
    for (int n : cspec.pinned_nodes) {
      const int g = node_map[k][n];
      offset.segment<2>(2 * n) = f1.node_velocity(g) - R(vs->node(g));
    }
    cmap.set_offset(offset);
    Vec F, G;
    assemble_rhs(*cvs, *cps, cmap, cpmap, cforms, F, G);
    const Vec v = cmap.expand(csolver.solve(F, G).u);
    for (int n = 0; n < cvs->num_nodes(); ++n) ext.segment<2>(2 * node_map[k][n]) += v.segment<2>(2 * n);
  }

  // Step 3.
  ProjectionReport r;
  r.projected = make_field(vs, nullptr);
  r.projected.u = u1 - ext;
  r.projected.flags = kDirichlet | kRigidPerParticle;
  MixedField f0 = make_field(vs, nullptr);
  f0.u = u0;
  std::vector<char> rigid_mask(pm.num_triangles());
  for (int t = 0; t < pm.num_triangles(); ++t) rigid_mask[t] = pm.region[t] == Region::Rigid;
  r.gap = h1_norm(vs, u0 - r.projected.u);
  r.div_norm = norms(pm, field_fn(f0)).div;
  r.rigid_strain = norms(pm, field_fn(f0), rigid_mask).strain;
  r.divergence_step = h1_norm(vs, w);
  r.extension_step = h1_norm(vs, ext);
  spdlog::debug("projection eps {}: gap {:.3e} div {:.3e} rigid strain {:.3e}", pm.eps.str(), r.gap, r.div_norm,
                r.rigid_strain);
  return r;
}

}  // namespace homsusp
