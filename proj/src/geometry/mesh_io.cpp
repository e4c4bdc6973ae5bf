#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "homsusp/geometry.hpp"
#include "homsusp/io.hpp"

namespace homsusp {

void write_mesh_json(const Mesh& mesh, const std::string& path, const PeriodicPairing* pairing) {
  nlohmann::json j;
  j["format"] = "homsusp-mesh";
  j["version"] = 1;
  j["dimension"] = 2;
  auto& verts = j["vertices"] = nlohmann::json::array();
  for (const auto& v : mesh.vertices) verts.push_back({v.x(), v.y()});
  auto& tris = j["triangles"] = nlohmann::json::array();
  for (const auto& t : mesh.triangles) tris.push_back({t[0], t[1], t[2]});
  auto& tags = j["region"] = nlohmann::json::array();
  for (Region r : mesh.region) tags.push_back(r == Region::Rigid ? "rigid" : "fluid");
  if (const auto* cell = dynamic_cast<const CellMesh*>(&mesh)) {
    j["h"] = cell->h;
    j["segments"] = cell->segments;
    auto& facets = j["interface"] = nlohmann::json::array();
    for (const auto& f : cell->facets) facets.push_back({{"a", f.a}, {"b", f.b}, {"t0", f.t0}, {"t1", f.t1}});
  }
  if (pairing) {
    auto& pairs = j["periodic_pairs"] = nlohmann::json::array();
    for (std::size_t i = 0; i < pairing->master.size(); ++i)
      if (pairing->master[i] != static_cast<int>(i)) pairs.push_back({i, pairing->master[i]});
  }
  write_text_atomic(path, j.dump(1) + "\n");
}

void write_mesh_vtk(const Mesh& mesh, const std::string& path) {
  std::ostringstream out;
  out << "# vtk DataFile Version 3.0\nhomsusp mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.num_vertices() << " double\n";
  for (const auto& v : mesh.vertices) out << fmt::format("{:.17g} {:.17g} 0\n", v.x(), v.y());
  out << "CELLS " << mesh.num_triangles() << " " << 4 * mesh.num_triangles() << "\n";
  for (const auto& t : mesh.triangles) out << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
  out << "CELL_TYPES " << mesh.num_triangles() << "\n";
  for (int t = 0; t < mesh.num_triangles(); ++t) out << "5\n";
  out << "CELL_DATA " << mesh.num_triangles() << "\nSCALARS region int 1\nLOOKUP_TABLE default\n";
  for (Region r : mesh.region) out << (r == Region::Rigid ? 1 : 0) << "\n";
  write_text_atomic(path, out.str());
}

}  // namespace homsusp
