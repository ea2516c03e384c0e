#include "lmor/mesh.hpp"

#include <fmt/format.h>
#include <fmt/os.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <sstream>

namespace lmor {

void RceGeometry::validate() const {
  if (!(side_length > 0.0)) throw std::invalid_argument("RCE side length must be positive");
  if (n_verts_per_edge < 2) throw std::invalid_argument("RCE needs at least 2 vertices per edge");
  for (const auto& a : aggregates) {
    if (!(a.radius > 0.0)) throw std::invalid_argument("aggregate radius must be positive");
    for (int k = 0; k < 2; ++k) {
      if (!(a.center[k] - a.radius > 0.0 && a.center[k] + a.radius < side_length))
        throw std::invalid_argument("aggregate touches or crosses the RCE boundary");
    }
  }
  for (std::size_t i = 0; i < aggregates.size(); ++i) {
    for (std::size_t j = i + 1; j < aggregates.size(); ++j) {
      const double d = (aggregates[i].center - aggregates[j].center).norm();
      if (!(d > aggregates[i].radius + aggregates[j].radius))
        throw std::invalid_argument("aggregates overlap");
    }
  }
}

FineMesh build_rce_mesh(const RceGeometry& geom) {
  geom.validate();
  const int m = geom.n_verts_per_edge - 1;
  const int nl = 2 * m + 1;
  const double side = geom.side_length;
  auto id = [nl](int i, int j) { return j * nl + i; };

  FineMesh mesh;
  mesh.lattice_step = side / (2.0 * m);
  mesh.nodes.reserve(static_cast<std::size_t>(nl) * nl);
  mesh.is_vertex.reserve(static_cast<std::size_t>(nl) * nl);
  for (int j = 0; j < nl; ++j) {
    for (int i = 0; i < nl; ++i) {
      mesh.nodes.emplace_back(side * i / (2.0 * m), side * j / (2.0 * m));
      mesh.is_vertex.push_back(i % 2 == 0 && j % 2 == 0);
    }
  }

  mesh.elements.reserve(2 * static_cast<std::size_t>(m) * m);
  for (int b = 0; b < m; ++b) {
    for (int a = 0; a < m; ++a) {
      const int i = 2 * a;
      const int j = 2 * b;
      // split along the diagonal from (i, j) to (i+2, j+2)
      mesh.elements.push_back({id(i, j), id(i + 2, j), id(i + 2, j + 2), id(i + 1, j), id(i + 2, j + 1),
                               id(i + 1, j + 1)});
      mesh.elements.push_back({id(i, j), id(i + 2, j + 2), id(i, j + 2), id(i + 1, j + 1), id(i + 1, j + 2),
                               id(i, j + 1)});
    }
  }

  mesh.material_label.reserve(mesh.elements.size());
  for (const auto& el : mesh.elements) {
    const Vec2 c = (mesh.nodes[el[0]] + mesh.nodes[el[1]] + mesh.nodes[el[2]]) / 3.0;
    int label = 0;
    for (const auto& agg : geom.aggregates) {
      if ((c - agg.center).norm() < agg.radius) {
        label = 1;
        break;
      }
    }
    mesh.material_label.push_back(label);
  }

  for (int k = 0; k < nl; ++k) {
    mesh.boundary_edges[0].push_back(id(k, 0));
    mesh.boundary_edges[1].push_back(id(nl - 1, k));
    mesh.boundary_edges[2].push_back(id(k, nl - 1));
    mesh.boundary_edges[3].push_back(id(0, k));
  }
  return mesh;
}

std::vector<int> boundary_dofs(const FineMesh& mesh) {
  std::set<int> nodes;
  for (const auto& chain : mesh.boundary_edges) nodes.insert(chain.begin(), chain.end());
  std::vector<int> dofs;
  dofs.reserve(2 * nodes.size());
  for (int n : nodes) {
    dofs.push_back(dof_of(n, 0));
    dofs.push_back(dof_of(n, 1));
  }
  return dofs;
}

std::vector<int> chain_dofs(std::span<const int> chain) {
  std::vector<int> dofs;
  dofs.reserve(2 * chain.size());
  for (int n : chain) {
    dofs.push_back(dof_of(n, 0));
    dofs.push_back(dof_of(n, 1));
  }
  return dofs;
}

// ---------------------------------------------------------------------------

int CoarseGrid::cell_at(int ix, int iy) const {
  if (ix < 0 || iy < 0 || ix >= layout.nx || iy >= layout.ny) return -1;
  return cell_lookup[static_cast<std::size_t>(iy) * layout.nx + ix];
}

bool CoarseGrid::is_horizontal(int e) const {
  const auto& v = edges[e];
  return std::abs(vertices[v[0]].y() - vertices[v[1]].y()) < 1e-12 * cell_size;
}

CoarseGrid build_coarse_grid(const GridLayout& layout, double cell_size, Vec2 origin) {
  if (layout.nx < 1 || layout.ny < 1) throw std::invalid_argument("coarse grid needs nx, ny >= 1");
  if (!(cell_size > 0.0)) throw std::invalid_argument("coarse cell size must be positive");
  if (layout.shape == GridShape::lpanel && (layout.nx < 2 || layout.ny < 2))
    throw std::invalid_argument("L-panel grid needs nx, ny >= 2");

  const int nx = layout.nx;
  const int ny = layout.ny;
  auto active = [&](int ix, int iy) {
    if (ix < 0 || iy < 0 || ix >= nx || iy >= ny) return false;
    if (layout.shape == GridShape::lpanel) return !(ix >= nx / 2 && iy >= ny / 2);
    return true;
  };

  CoarseGrid g;
  g.layout = layout;
  g.cell_size = cell_size;
  g.origin = origin;

  std::vector<int> vid(static_cast<std::size_t>(nx + 1) * (ny + 1), -1);
  auto vat = [&](int ix, int iy) -> int& { return vid[static_cast<std::size_t>(iy) * (nx + 1) + ix]; };
  for (int iy = 0; iy <= ny; ++iy) {
    for (int ix = 0; ix <= nx; ++ix) {
      if (active(ix, iy) || active(ix - 1, iy) || active(ix, iy - 1) || active(ix - 1, iy - 1)) {
        vat(ix, iy) = g.n_vertices();
        g.vertices.emplace_back(origin.x() + ix * cell_size, origin.y() + iy * cell_size);
      }
    }
  }

  g.cell_lookup.assign(static_cast<std::size_t>(nx) * ny, -1);
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      if (!active(ix, iy)) continue;
      g.cell_lookup[static_cast<std::size_t>(iy) * nx + ix] = g.n_cells();
      g.cells.push_back({vat(ix, iy), vat(ix + 1, iy), vat(ix + 1, iy + 1), vat(ix, iy + 1)});
      g.cell_ij.push_back({ix, iy});
    }
  }

  std::vector<int> hid(static_cast<std::size_t>(nx) * (ny + 1), -1);
  std::vector<int> vtid(static_cast<std::size_t>(nx + 1) * ny, -1);
  for (int iy = 0; iy <= ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      if (active(ix, iy) || active(ix, iy - 1)) {
        hid[static_cast<std::size_t>(iy) * nx + ix] = g.n_edges();
        g.edges.push_back({vat(ix, iy), vat(ix + 1, iy)});
      }
    }
  }
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix <= nx; ++ix) {
      if (active(ix, iy) || active(ix - 1, iy)) {
        vtid[static_cast<std::size_t>(iy) * (nx + 1) + ix] = g.n_edges();
        g.edges.push_back({vat(ix, iy), vat(ix, iy + 1)});
      }
    }
  }

  g.edge_cells.assign(g.edges.size(), {});
  for (int c = 0; c < g.n_cells(); ++c) {
    const auto [ix, iy] = g.cell_ij[c];
    const std::array<int, 4> ce{hid[static_cast<std::size_t>(iy) * nx + ix],
                                vtid[static_cast<std::size_t>(iy) * (nx + 1) + ix + 1],
                                hid[static_cast<std::size_t>(iy + 1) * nx + ix],
                                vtid[static_cast<std::size_t>(iy) * (nx + 1) + ix]};
    g.cell_edges.push_back(ce);
    for (int e : ce) g.edge_cells[e].push_back(c);
  }
  return g;
}

// ---------------------------------------------------------------------------

GlobalBc free_bc(const CoarseGrid& grid) {
  GlobalBc bc;
  bc.edges.assign(grid.edges.size(), EdgeBc{});
  return bc;
}

void assign_edges(GlobalBc& bc, const CoarseGrid& grid, const std::function<bool(const Vec2&)>& pred,
                  const EdgeBc& edge_bc) {
  if (bc.edges.size() != grid.edges.size()) bc.edges.assign(grid.edges.size(), EdgeBc{});
  for (int e = 0; e < grid.n_edges(); ++e) {
    if (!grid.is_boundary_edge(e)) continue;
    const Vec2 mid = 0.5 * (grid.vertices[grid.edges[e][0]] + grid.vertices[grid.edges[e][1]]);
    if (pred(mid)) bc.edges[e] = edge_bc;
  }
}

// ---------------------------------------------------------------------------

int PatchMesh::local_index(int cell) const {
  auto it = std::find(cells.begin(), cells.end(), cell);
  if (it == cells.end()) throw std::out_of_range("cell is not part of the patch");
  return static_cast<int>(it - cells.begin());
}

Vector PatchMesh::restrict_to_cell(const Vector& patch_field, int cell) const {
  const auto& map = cell_dofs[local_index(cell)];
  Vector out(static_cast<Eigen::Index>(map.size()));
  for (std::size_t i = 0; i < map.size(); ++i) out[static_cast<Eigen::Index>(i)] = patch_field[map[i]];
  return out;
}

int PatchMesh::gamma_mu_vertex_count() const {
  std::set<int> nodes;
  for (int e : gamma_mu_edges) {
    for (int n : edge_nodes.at(e)) {
      if (mesh.is_vertex[n]) nodes.insert(n);
    }
  }
  return static_cast<int>(nodes.size());
}

namespace {

bool edge_connected(const CoarseGrid& grid, std::span<const int> cells) {
  std::set<int> in(cells.begin(), cells.end());
  std::set<int> seen{cells.front()};
  std::deque<int> queue{cells.front()};
  while (!queue.empty()) {
    const int c = queue.front();
    queue.pop_front();
    for (int e : grid.cell_edges[c]) {
      for (int n : grid.edge_cells[e]) {
        if (in.count(n) && !seen.count(n)) {
          seen.insert(n);
          queue.push_back(n);
        }
      }
    }
  }
  return seen.size() == in.size();
}

}  // namespace

PatchMesh compose_patch(const CoarseGrid& grid, std::span<const int> cells_in, const FineMesh& rce) {
  if (cells_in.empty()) throw std::invalid_argument("patch needs at least one cell");
  std::vector<int> cells(cells_in.begin(), cells_in.end());
  std::sort(cells.begin(), cells.end());
  if (std::adjacent_find(cells.begin(), cells.end()) != cells.end())
    throw std::invalid_argument("duplicate cell in patch");
  for (int c : cells) {
    if (c < 0 || c >= grid.n_cells()) throw std::invalid_argument("cell id out of range");
  }
  if (!edge_connected(grid, cells)) throw std::invalid_argument("patch cells are not edge-connected");

  const double step = rce.lattice_step;
  const double side = rce.nodes[rce.boundary(Side::right).front()].x();
  if (std::abs(side - grid.cell_size) > 1e-12 * side)
    throw std::invalid_argument("RCE side length does not match the coarse cell size");
  const double merge_tol = 1e-12 * side;

  PatchMesh p;
  p.cells = cells;
  p.mesh.lattice_step = step;
  std::map<std::pair<long long, long long>, int> lattice;
  std::vector<std::vector<int>> node_map(cells.size());

  for (std::size_t k = 0; k < cells.size(); ++k) {
    const Vec2 shift = grid.cell_origin(cells[k]);
    auto& nm = node_map[k];
    nm.resize(rce.nodes.size());
    for (int n = 0; n < rce.n_nodes(); ++n) {
      const Vec2 x = rce.nodes[n] + shift;
      const std::pair<long long, long long> key{std::llround((x.x() - grid.origin.x()) / step),
                                                std::llround((x.y() - grid.origin.y()) / step)};
      auto [it, inserted] = lattice.try_emplace(key, p.mesh.n_nodes());
      if (inserted) {
        p.mesh.nodes.push_back(x);
        p.mesh.is_vertex.push_back(rce.is_vertex[n]);
      } else if ((p.mesh.nodes[it->second] - x).lpNorm<Eigen::Infinity>() > merge_tol) {
        throw std::logic_error("patch node merge: coordinates disagree beyond tolerance");
      }
      nm[n] = it->second;
    }
    auto& dofs = p.cell_dofs.emplace_back(rce.n_dofs());
    for (int n = 0; n < rce.n_nodes(); ++n) {
      dofs[dof_of(n, 0)] = dof_of(nm[n], 0);
      dofs[dof_of(n, 1)] = dof_of(nm[n], 1);
    }
    for (int el = 0; el < rce.n_elements(); ++el) {
      std::array<int, 6> conn{};
      for (int a = 0; a < 6; ++a) conn[a] = nm[rce.elements[el][a]];
      p.mesh.elements.push_back(conn);
      p.mesh.material_label.push_back(rce.material_label[el]);
      p.cell_of_element.push_back(cells[k]);
    }
    for (Side s : kSides) {
      const int e = grid.cell_edges[cells[k]][static_cast<int>(s)];
      if (p.edge_nodes.count(e)) continue;
      std::vector<int> chain;
      for (int n : rce.boundary(s)) chain.push_back(nm[n]);
      p.edge_nodes.emplace(e, std::move(chain));
    }
  }

  std::map<int, int> edge_count;
  for (int c : cells)
    for (int e : grid.cell_edges[c]) ++edge_count[e];
  std::set<int> mu_nodes;
  for (auto [e, count] : edge_count) {
    if (count != 1) continue;
    p.boundary_coarse_edges.push_back(e);
    if (!grid.is_boundary_edge(e)) {
      p.gamma_mu_edges.push_back(e);
      const auto& chain = p.edge_nodes.at(e);
      mu_nodes.insert(chain.begin(), chain.end());
    }
  }
  for (int n : mu_nodes) {
    p.gamma_mu_dofs.push_back(dof_of(n, 0));
    p.gamma_mu_dofs.push_back(dof_of(n, 1));
  }

  // bounding-box sides of the patch, canonical orientation
  Vec2 lo = p.mesh.nodes.front();
  Vec2 hi = lo;
  for (const auto& x : p.mesh.nodes) {
    lo = lo.cwiseMin(x);
    hi = hi.cwiseMax(x);
  }
  for (int n = 0; n < p.mesh.n_nodes(); ++n) {
    const Vec2& x = p.mesh.nodes[n];
    if (std::abs(x.y() - lo.y()) <= merge_tol) p.mesh.boundary_edges[0].push_back(n);
    if (std::abs(x.x() - hi.x()) <= merge_tol) p.mesh.boundary_edges[1].push_back(n);
    if (std::abs(x.y() - hi.y()) <= merge_tol) p.mesh.boundary_edges[2].push_back(n);
    if (std::abs(x.x() - lo.x()) <= merge_tol) p.mesh.boundary_edges[3].push_back(n);
  }
  auto by_x = [&](int a, int b) { return p.mesh.nodes[a].x() < p.mesh.nodes[b].x(); };
  auto by_y = [&](int a, int b) { return p.mesh.nodes[a].y() < p.mesh.nodes[b].y(); };
  std::sort(p.mesh.boundary_edges[0].begin(), p.mesh.boundary_edges[0].end(), by_x);
  std::sort(p.mesh.boundary_edges[1].begin(), p.mesh.boundary_edges[1].end(), by_y);
  std::sort(p.mesh.boundary_edges[2].begin(), p.mesh.boundary_edges[2].end(), by_x);
  std::sort(p.mesh.boundary_edges[3].begin(), p.mesh.boundary_edges[3].end(), by_y);
  return p;
}

// ---------------------------------------------------------------------------

std::vector<int> neighbourhood(const CoarseGrid& grid, int cell) {
  const auto [ix, iy] = grid.cell_ij.at(cell);
  std::vector<int> out;
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      const int c = grid.cell_at(ix + dx, iy + dy);
      if (c >= 0) out.push_back(c);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

EdgeRole role_of(const CoarseGrid& grid, const GlobalBc& bc, int e) {
  if (!grid.is_boundary_edge(e)) return EdgeRole::gamma_mu;
  switch (bc.edge(e).type) {
    case BcType::dirichlet: return EdgeRole::dirichlet;
    case BcType::neumann: return EdgeRole::neumann;
    case BcType::free: return EdgeRole::free;
  }
  return EdgeRole::free;
}

std::string role_tag(const CoarseGrid& grid, const GlobalBc& bc, int e) {
  switch (role_of(grid, bc, e)) {
    case EdgeRole::gamma_mu: return "M";
    case EdgeRole::neumann: return "N";
    case EdgeRole::free: return "F";
    case EdgeRole::dirichlet: {
      const auto& f = bc.edge(e).fixed;
      return fmt::format("D{}{}", f[0] ? 'x' : '-', f[1] ? 'y' : '-');
    }
  }
  return "?";
}

std::vector<PatchBoundarySpec> patch_boundary(const CoarseGrid& grid, const GlobalBc& bc,
                                              std::span<const int> patch) {
  std::map<int, int> count;
  for (int c : patch)
    for (int e : grid.cell_edges[c]) ++count[e];
  std::vector<PatchBoundarySpec> spec;
  for (auto [e, n] : count) {
    if (n == 1) spec.push_back({e, role_of(grid, bc, e)});
  }
  return spec;
}

struct CellInfo {
  std::string key;
  int priority = 0;
  int score = 0;
  int patch_size = 0;
};

CellInfo describe_cell(const CoarseGrid& grid, const GlobalBc& bc, int cell) {
  const auto patch = neighbourhood(grid, cell);
  const auto [tx, ty] = grid.cell_ij[cell];
  CellInfo info;
  info.patch_size = static_cast<int>(patch.size());

  bool special = false;
  bool touches = false;
  std::string touch_key = "T|";
  for (Side s : kSides) {
    const int e = grid.cell_edges[cell][static_cast<int>(s)];
    if (!grid.is_boundary_edge(e)) {
      touch_key += '-';
      continue;
    }
    touches = true;
    const auto type = bc.edge(e).type;
    if (type != BcType::free) special = true;
    touch_key += 'F';
  }
  for (const auto& pc : bc.points) {
    for (int v : grid.cells[cell])
      if (v == pc.vertex) special = true;
  }

  const std::set<int> target_edges(grid.cell_edges[cell].begin(), grid.cell_edges[cell].end());
  for (const auto& b : patch_boundary(grid, bc, patch)) {
    if (b.role != EdgeRole::gamma_mu && !target_edges.count(b.coarse_edge)) ++info.score;
  }

  if (!special) {
    info.key = touch_key;
    info.priority = touches ? 1 : 0;
    return info;
  }

  std::ostringstream key;
  key << "L|";
  for (int c : patch) {
    key << '(' << grid.cell_ij[c][0] - tx << ',' << grid.cell_ij[c][1] - ty << ':';
    for (Side s : kSides) {
      const int e = grid.cell_edges[c][static_cast<int>(s)];
      const bool on_patch_boundary =
          std::count_if(patch.begin(), patch.end(), [&](int o) {
            const auto& ce = grid.cell_edges[o];
            return std::find(ce.begin(), ce.end(), e) != ce.end();
          }) == 1;
      key << (on_patch_boundary ? role_tag(grid, bc, e) : std::string("."));
    }
    key << ')';
  }
  const double h = grid.cell_size;
  const Vec2 o = grid.cell_origin(cell);
  for (const auto& pc : bc.points) {
    const Vec2 rel = (grid.vertices[pc.vertex] - o) / h;
    if (rel.x() >= -1.0 - 1e-9 && rel.x() <= 2.0 + 1e-9 && rel.y() >= -1.0 - 1e-9 && rel.y() <= 2.0 + 1e-9) {
      key << "P(" << std::lround(rel.x()) << ',' << std::lround(rel.y()) << ',' << pc.component << ')';
    }
  }
  info.key = key.str();
  info.priority = 2;
  return info;
}

}  // namespace

std::vector<Configuration> classify_configurations(const CoarseGrid& grid, const GlobalBc& bc) {
  if (bc.edges.size() != grid.edges.size())
    throw std::invalid_argument("boundary condition table does not match the coarse grid");

  std::vector<Configuration> out;
  if (bc.ignore_in_oversampling) {
    auto synth = std::make_shared<CoarseGrid>(build_coarse_grid({GridShape::rectangle, 5, 5}, grid.cell_size));
    Configuration cfg;
    cfg.id = 0;
    cfg.key = "interior";
    cfg.grid = synth;
    cfg.target_cell = synth->cell_at(2, 2);
    cfg.patch_cells = neighbourhood(*synth, cfg.target_cell);
    cfg.bc_spec = patch_boundary(*synth, free_bc(*synth), cfg.patch_cells);
    cfg.members.resize(grid.n_cells());
    for (int c = 0; c < grid.n_cells(); ++c) cfg.members[c] = c;
    cfg.priority = 0;
    cfg.uses_global_bc = false;
    out.push_back(std::move(cfg));
    return out;
  }

  auto shared = std::make_shared<CoarseGrid>(grid);
  std::map<std::string, int> index;
  std::vector<CellInfo> infos;
  for (int c = 0; c < grid.n_cells(); ++c) {
    infos.push_back(describe_cell(grid, bc, c));
    auto [it, inserted] = index.try_emplace(infos.back().key, static_cast<int>(out.size()));
    if (inserted) {
      Configuration cfg;
      cfg.id = it->second;
      cfg.key = infos.back().key;
      cfg.grid = shared;
      cfg.priority = infos.back().priority;
      out.push_back(std::move(cfg));
    }
    out[it->second].members.push_back(c);
  }

  for (auto& cfg : out) {
    int best = cfg.members.front();
    for (int c : cfg.members) {
      const auto& a = infos[c];
      const auto& b = infos[best];
      if (a.score < b.score || (a.score == b.score && a.patch_size > b.patch_size)) best = c;
    }
    cfg.target_cell = best;
    cfg.patch_cells = neighbourhood(grid, best);
    cfg.bc_spec = patch_boundary(grid, bc, cfg.patch_cells);
    for (Side s : kSides) {
      cfg.target_on_boundary[static_cast<int>(s)] =
          grid.is_boundary_edge(grid.cell_edges[best][static_cast<int>(s)]);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

void write_mesh_text(const FineMesh& mesh, const std::string& path) {
  auto out = fmt::output_file(path);
  out.print("# nodes {}\n", mesh.n_nodes());
  for (int n = 0; n < mesh.n_nodes(); ++n)
    out.print("{} {:.17g} {:.17g}\n", n, mesh.nodes[n].x(), mesh.nodes[n].y());
  out.print("# elements {}\n", mesh.n_elements());
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const auto& el = mesh.elements[e];
    out.print("{} {} {} {} {} {} {} {}\n", e, el[0], el[1], el[2], el[3], el[4], el[5], mesh.material_label[e]);
  }
  for (Side s : kSides) {
    const auto& chain = mesh.boundary(s);
    out.print("# boundary {} {}\n", to_string(s), chain.size());
    for (std::size_t k = 0; k < chain.size(); ++k) out.print("{}{}", k ? " " : "", chain[k]);
    out.print("\n");
  }
}

}  // namespace lmor
