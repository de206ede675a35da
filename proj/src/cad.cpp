#include "bellow/cad.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>

#include "bellow/error.hpp"

namespace bellow {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
// Fan boundaries this close to a grid angle replace it.
constexpr double kSnapAngle = 1e-3;

double cross2(const Point2& a, const Point2& b, const Point2& c) {
  return (b - a).x() * (c - b).y() - (b - a).y() * (c - b).x();
}

double signed_area(const std::vector<Point2>& loop) {
  double s = 0.0;
  for (std::size_t i = 0; i < loop.size(); ++i) {
    const auto& p = loop[i];
    const auto& q = loop[(i + 1) % loop.size()];
    s += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * s;
}

std::string where(const Point2& p) {
  std::ostringstream os;
  os << "(r=" << p.x() << ", z=" << p.y() << ")";
  return os.str();
}

void push(std::vector<Point2>& out, const Point2& p) {
  if (out.empty() || (out.back() - p).norm() > 1e-12) out.push_back(p);
}

// Appends the arc from angle a0 to a1 (inclusive) in steps of at most `step`.
void arc(std::vector<Point2>& out, const Point2& c, double radius, double a0, double a1, double step) {
  const int n = std::max(1, static_cast<int>(std::ceil(std::abs(a1 - a0) / step - 1e-9)));
  for (int i = 0; i <= n; ++i) {
    const double a = a0 + (a1 - a0) * static_cast<double>(i) / n;
    push(out, c + radius * Point2(std::cos(a), std::sin(a)));
  }
}

void line(std::vector<Point2>& out, const Point2& a, const Point2& b, double spacing) {
  const int n = std::max(1, static_cast<int>(std::ceil((b - a).norm() / spacing - 1e-9)));
  for (int i = 0; i <= n; ++i) push(out, a + (b - a) * static_cast<double>(i) / n);
}

// Surfaces of one module in local coordinates, each listed bottom to top.
struct ModuleCurves {
  std::vector<Point2> outer;     // (r_in, 0) .. (r_in, l)
  std::vector<Point2> stub_lo;   // (r_in - t, 0) or the plug corner .. lower crossing
  std::vector<Point2> middle;    // lower crossing .. upper crossing, through the crown
  std::vector<Point2> vertical;  // lower crossing .. upper crossing along r = r_in
  std::vector<Point2> stub_hi;   // upper crossing .. (r_in - t, l) or the plug corner
};

void check_meshable(const ModuleDesign& d) {
  auto report = validate_module(d);
  if (!report.ok()) throw ValidationError("invalid module design", report.violations);
  if (!(d.t < d.r_in)) {
    throw DegenerateError("profile self-intersects: wall thickness t=" + std::to_string(d.t) +
                          " closes the bore (needs t < r_in)");
  }
}

// The inner fillets cross r = r_in at height z_c above/below the interface;
// a plug of thickness t meets them at angle pi - asin(t / (r_2 + t)).
ModuleCurves module_curves(const ModuleDesign& d, const MeshOptions& o, bool plug_lo, bool plug_hi) {
  if (!(o.arc_step_deg > 0.0) || o.arc_step_deg > 90.0) {
    throw ValidationError("invalid mesh options", {"0 < arc_step_deg <= 90"});
  }
  const DerivedGeometry g = derived_geometry(d);
  const double step = o.arc_step_deg * kPi / 180.0;
  const double r_in = d.r_in, t = d.t, l = d.l, r1 = g.r_1, r2 = g.r_2, r_ou = g.r_ou;
  const Point2 c_lo(r_in + r2, 0.0), c_hi(r_in + r2, l), c_crown(r_ou - r1, l / 2.0);
  const double ri = r2 + t;
  const double a_cross = std::acos(-r2 / ri);
  const double a_plug = kPi - std::asin(t / ri);

  ModuleCurves c;
  arc(c.outer, c_lo, r2, kPi, kPi / 2.0, step);
  push(c.outer, {r_ou - r1, l / 4.0});
  arc(c.outer, c_crown, r1, -kPi / 2.0, kPi / 2.0, step);
  push(c.outer, {r_in + r2, 3.0 * l / 4.0});
  arc(c.outer, c_hi, r2, -kPi / 2.0, -kPi, step);

  arc(c.stub_lo, c_lo, ri, plug_lo ? a_plug : kPi, a_cross, step);
  arc(c.middle, c_lo, ri, a_cross, kPi / 2.0, step);
  push(c.middle, {r_ou - r1, l / 4.0 + t});
  arc(c.middle, c_crown, r1 - t, -kPi / 2.0, kPi / 2.0, step);
  push(c.middle, {r_in + r2, 3.0 * l / 4.0 - t});
  arc(c.middle, c_hi, ri, -kPi / 2.0, -a_cross, step);
  arc(c.stub_hi, c_hi, ri, -a_cross, plug_hi ? -a_plug : -kPi, step);
  // Pin the crossings exactly onto r = r_in so all three pieces share them.
  const Point2 x_lo(r_in, c.middle.front().y()), x_hi(r_in, c.middle.back().y());
  c.stub_lo.back() = c.middle.front() = x_lo;
  c.middle.back() = c.stub_hi.front() = x_hi;
  line(c.vertical, x_lo, x_hi, o.fan_spacing);
  return c;
}

void shift(std::vector<Point2>& pts, double dz) {
  for (auto& p : pts) p.y() += dz;
}

// Ear clipping of a counter-clockwise simple polygon. A vertex lying on a
// candidate ear's boundary blocks it, so collinear vertices end up as
// triangle corners and no T-junctions appear.
std::vector<std::array<std::size_t, 3>> ear_clip(const std::vector<Point2>& poly) {
  std::vector<std::array<std::size_t, 3>> tris;
  std::vector<std::size_t> idx(poly.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  double scale = 0.0;
  for (const auto& p : poly) scale = std::max(scale, p.cwiseAbs().maxCoeff());
  const double eps = 1e-12 * scale * scale;

  // Inside or on triangle (a, b, c), other than at a corner.
  auto blocks = [&](const Point2& p, const Point2& a, const Point2& b, const Point2& c) {
    if ((p - a).norm() < 1e-12 || (p - b).norm() < 1e-12 || (p - c).norm() < 1e-12) return false;
    return cross2(a, b, p) >= -eps && cross2(b, c, p) >= -eps && cross2(c, a, p) >= -eps;
  };

  while (idx.size() > 3) {
    bool clipped = false;
    const std::size_t m = idx.size();
    for (std::size_t i = 0; i < m && !clipped; ++i) {
      const std::size_t ip = idx[(i + m - 1) % m], ic = idx[i], in = idx[(i + 1) % m];
      const Point2 &a = poly[ip], &b = poly[ic], &c = poly[in];
      if (cross2(a, b, c) <= eps) continue;
      bool blocked = false;
      for (std::size_t j = 0; j < m && !blocked; ++j) {
        const std::size_t v = idx[j];
        if (v != ip && v != ic && v != in) blocked = blocks(poly[v], a, b, c);
      }
      if (blocked) continue;
      tris.push_back({ip, ic, in});
      idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(i));
      clipped = true;
    }
    if (!clipped) throw DegenerateError("fan side wall triangulation failed near " + where(poly[idx.front()]));
  }
  tris.push_back({idx[0], idx[1], idx[2]});
  return tris;
}

// Collects profile points, directed profile edges and fan walls, then sweeps
// them about the z axis.
class Revolver {
 public:
  enum class Span { always, outside_fan, inside_fan };

  std::size_t add(const Point2& p) {
    pts_.push_back(p);
    return pts_.size() - 1;
  }
  const Point2& point(std::size_t i) const { return pts_[i]; }

  // Adds ids for `pts`, reusing `first` for the leading point when given.
  std::vector<std::size_t> add_chain(const std::vector<Point2>& pts, std::optional<std::size_t> first = {},
                                     std::optional<std::size_t> last = {}) {
    std::vector<std::size_t> ids;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i == 0 && first) {
        ids.push_back(*first);
      } else if (i + 1 == pts.size() && last) {
        ids.push_back(*last);
      } else {
        ids.push_back(add(pts[i]));
      }
    }
    return ids;
  }

  void edges(const std::vector<std::size_t>& chain, Span span = Span::always, int fan = -1) {
    for (std::size_t i = 0; i + 1 < chain.size(); ++i) edge(chain[i], chain[i + 1], span, fan);
  }
  void edge(std::size_t a, std::size_t b, Span span = Span::always, int fan = -1) {
    if (pts_[a].x() == 0.0 && pts_[b].x() == 0.0) return;  // on the axis
    edges_.push_back({a, b, span, fan});
  }

  // Fan `k` centred on angle `centre`; `full` fills the whole circle. `wall`
  // is the cavity polygon (ids) for the side faces.
  void fan(double centre, bool full, std::vector<std::size_t> wall) { fans_.push_back({centre, full, std::move(wall)}); }

  TriangleMesh build(double angle_step_deg) const;

 private:
  struct Edge {
    std::size_t a, b;
    Span span;
    int fan;
  };
  struct Fan {
    double centre;
    bool full;
    std::vector<std::size_t> wall;
  };

  std::vector<Point2> pts_;
  std::vector<Edge> edges_;
  std::vector<Fan> fans_;
};

double wrap(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  return a;
}

double angular_gap(double a, double b) {
  const double d = std::abs(wrap(a) - wrap(b));
  return std::min(d, kTwoPi - d);
}

TriangleMesh Revolver::build(double angle_step_deg) const {
  if (!(angle_step_deg > 0.0) || angle_step_deg > 120.0) throw ValidationError("invalid mesh options", {"0 < angle_step_deg <= 120"});
  const auto n_grid = static_cast<std::size_t>(std::max(3L, std::lround(360.0 / angle_step_deg)));
  std::vector<double> angles(n_grid);
  for (std::size_t i = 0; i < n_grid; ++i) angles[i] = kTwoPi * static_cast<double>(i) / static_cast<double>(n_grid);

  // Fan boundaries join the angle set; near-duplicates collapse.
  std::vector<double> bounds;
  for (const auto& f : fans_) {
    if (f.full) continue;
    for (double b : {wrap(f.centre - kPi / 4.0), wrap(f.centre + kPi / 4.0)}) {
      bool dup = false;
      for (double e : bounds) dup = dup || angular_gap(e, b) < 2.0 * kSnapAngle;
      if (!dup) bounds.push_back(b);
    }
  }
  for (double b : bounds) {
    std::size_t near = 0;
    for (std::size_t i = 1; i < angles.size(); ++i) {
      if (angular_gap(angles[i], b) < angular_gap(angles[near], b)) near = i;
    }
    if (angular_gap(angles[near], b) < kSnapAngle) {
      angles[near] = b;
    } else {
      angles.push_back(b);
    }
  }
  std::sort(angles.begin(), angles.end());
  const std::size_t na = angles.size();
  auto index_of = [&](double a) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < na; ++i) {
      if (angular_gap(angles[i], a) < angular_gap(angles[best], a)) best = i;
    }
    return best;
  };

  // inside[k][i]: interval (angles[i], angles[i+1]) lies in fan k.
  std::vector<std::vector<char>> inside(fans_.size(), std::vector<char>(na, 0));
  std::vector<std::pair<std::size_t, std::size_t>> fan_index(fans_.size());
  for (std::size_t k = 0; k < fans_.size(); ++k) {
    if (fans_[k].full) {
      std::fill(inside[k].begin(), inside[k].end(), 1);
      continue;
    }
    const std::size_t s = index_of(fans_[k].centre - kPi / 4.0), e = index_of(fans_[k].centre + kPi / 4.0);
    fan_index[k] = {s, e};
    for (std::size_t i = s; i != e; i = (i + 1) % na) inside[k][i] = 1;
  }

  TriangleMesh mesh;
  std::vector<std::int64_t> vid(pts_.size() * na, -1);
  auto vertex = [&](std::size_t p, std::size_t a) -> std::uint32_t {
    if (pts_[p].x() == 0.0) a = 0;  // single apex on the axis
    auto& slot = vid[p * na + a];
    if (slot < 0) {
      const double r = pts_[p].x();
      slot = static_cast<std::int64_t>(mesh.vertices.size());
      mesh.vertices.emplace_back(r * std::cos(angles[a]), r * std::sin(angles[a]), pts_[p].y());
    }
    return static_cast<std::uint32_t>(slot);
  };
  auto tri = [&](std::uint32_t a, std::uint32_t b, std::uint32_t c) {
    if (a != b && b != c && a != c) mesh.triangles.push_back({a, b, c});
  };

  for (const auto& e : edges_) {
    for (std::size_t i = 0; i < na; ++i) {
      if (e.span != Span::always) {
        const bool in = inside[static_cast<std::size_t>(e.fan)][i] != 0;
        if ((e.span == Span::inside_fan) != in) continue;
      }
      const std::size_t j = (i + 1) % na;
      const auto pa = vertex(e.a, i), pb = vertex(e.a, j), qa = vertex(e.b, i), qb = vertex(e.b, j);
      tri(pa, pb, qb);
      tri(pa, qb, qa);
    }
  }

  for (std::size_t k = 0; k < fans_.size(); ++k) {
    const auto& f = fans_[k];
    if (f.full) continue;
    std::vector<Point2> poly;
    for (auto id : f.wall) poly.push_back(pts_[id]);
    std::vector<std::size_t> ids = f.wall;
    if (signed_area(poly) < 0.0) {
      std::reverse(poly.begin(), poly.end());
      std::reverse(ids.begin(), ids.end());
    }
    const auto tris = ear_clip(poly);
    const auto [s, e] = fan_index[k];
    // Counter-clockwise in (r, z) faces -e_phi: outward at the start wall.
    for (const auto& t : tris) {
      tri(vertex(ids[t[0]], s), vertex(ids[t[1]], s), vertex(ids[t[2]], s));
      tri(vertex(ids[t[0]], e), vertex(ids[t[2]], e), vertex(ids[t[1]], e));
    }
  }
  return mesh;
}

struct ModuleIds {
  std::vector<std::size_t> outer, stub_lo, middle, vertical, stub_hi;
};

// Registers one module's curves, sharing the interface points with the
// previous module when given.
ModuleIds add_module(Revolver& rv, const ModuleCurves& c, std::optional<std::size_t> outer_first,
                     std::optional<std::size_t> inner_first) {
  ModuleIds m;
  m.outer = rv.add_chain(c.outer, outer_first);
  m.stub_lo = rv.add_chain(c.stub_lo, inner_first);
  m.middle = rv.add_chain(c.middle, m.stub_lo.back());
  m.vertical = rv.add_chain(c.vertical, m.stub_lo.back(), m.middle.back());
  m.stub_hi = rv.add_chain(c.stub_hi, m.middle.back());
  return m;
}

std::vector<std::size_t> rev(std::vector<std::size_t> v) {
  std::reverse(v.begin(), v.end());
  return v;
}

// Inner surface of module `k`, walked top to bottom.
void inner_edges(Revolver& rv, const ModuleIds& m, int k) {
  rv.edges(rev(m.stub_hi));
  rv.edges(rev(m.middle), Revolver::Span::outside_fan, k);
  rv.edges(rev(m.vertical), Revolver::Span::inside_fan, k);
  rv.edges(rev(m.stub_lo));
}

std::vector<std::size_t> wall_loop(const ModuleIds& m) {
  std::vector<std::size_t> loop = m.vertical;
  for (std::size_t i = m.middle.size() - 1; i-- > 1;) loop.push_back(m.middle[i]);
  return loop;
}

}  // namespace

Eigen::Vector3d TriangleMesh::normal(std::size_t tri) const {
  const auto& t = triangles[tri];
  const Eigen::Vector3d n = (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]);
  const double len = n.norm();
  return len > 0.0 ? Eigen::Vector3d(n / len) : Eigen::Vector3d::Zero();
}

double TriangleMesh::area(std::size_t tri) const {
  const auto& t = triangles[tri];
  return 0.5 * (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]).norm();
}

double port_radius(const ModuleDesign& d) {
  // r_in / 2, unless the bore at the valleys (radius r_in - t) is narrower.
  return d.t <= d.r_in / 2.0 ? d.r_in / 2.0 : (d.r_in - d.t) / 2.0;
}

std::vector<Point2> module_profile(const ModuleDesign& d, const MeshOptions& o) {
  check_meshable(d);
  const auto c = module_curves(d, o, false, false);
  std::vector<Point2> loop = c.outer;
  std::vector<Point2> inner = c.stub_lo;
  for (const auto* piece : {&c.middle, &c.stub_hi}) {
    for (const auto& p : *piece) push(inner, p);
  }
  for (auto it = inner.rbegin(); it != inner.rend(); ++it) push(loop, *it);
  if ((loop.back() - loop.front()).norm() < 1e-12) loop.pop_back();

  // Segment-level self-intersection audit.
  const std::size_t n = loop.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 &a = loop[i], &b = loop[(i + 1) % n];
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j + 1 == n) continue;
      const Point2 &c2 = loop[j], &d2 = loop[(j + 1) % n];
      const double o1 = cross2(a, b, c2), o2 = cross2(a, b, d2), o3 = cross2(c2, d2, a), o4 = cross2(c2, d2, b);
      if (((o1 > 0) != (o2 > 0)) && ((o3 > 0) != (o4 > 0)) && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0) {
        throw DegenerateError("profile self-intersects near " + where(a));
      }
    }
  }
  return loop;
}

std::vector<Point2> fan_profile(const ModuleDesign& d, const MeshOptions& o) {
  check_meshable(d);
  const auto c = module_curves(d, o, false, false);
  std::vector<Point2> loop = c.vertical;
  for (std::size_t i = c.middle.size() - 1; i-- > 1;) loop.push_back(c.middle[i]);
  if (signed_area(loop) < 0.0) std::reverse(loop.begin(), loop.end());
  return loop;
}

TriangleMesh mesh_module(const ModuleDesign& d, const MeshOptions& o) {
  check_meshable(d);
  const auto c = module_curves(d, o, false, false);
  Revolver rv;
  const auto m = add_module(rv, c, {}, {});
  rv.edges(m.outer);
  rv.edge(m.outer.back(), m.stub_hi.back());
  inner_edges(rv, m, 0);
  rv.edge(m.stub_lo.front(), m.outer.front());
  rv.fan(0.0, d.rigid, wall_loop(m));
  return rv.build(o.angle_step_deg);
}

TriangleMesh mesh_actuator(const ActuatorSpec& a, const MeshOptions& o) {
  auto report = validate_actuator(a);
  if (!report.ok()) throw ValidationError("invalid actuator", report.violations);
  for (const auto& d : a.modules) check_meshable(d);
  const std::size_t n = a.modules.size();
  const double t = a.modules.front().t;
  const double r_port = port_radius(a.modules.front());

  Revolver rv;
  std::vector<ModuleIds> ids;
  double z = 0.0, phi = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    auto c = module_curves(a.modules[k], o, k == 0, k + 1 == n);
    for (auto* piece : {&c.outer, &c.stub_lo, &c.middle, &c.vertical, &c.stub_hi}) shift(*piece, z);
    std::optional<std::size_t> outer_first, inner_first;
    if (k > 0) {
      outer_first = ids.back().outer.back();
      inner_first = ids.back().stub_hi.back();
    }
    ids.push_back(add_module(rv, c, outer_first, inner_first));
    phi += a.twist_before(k);
    rv.fan(phi, a.modules[k].rigid, wall_loop(ids.back()));
    z += a.modules[k].l;
  }

  // Base annulus, outer surface, top cap, plug underside.
  const auto port_lo = rv.add({r_port, 0.0});
  rv.edge(port_lo, ids.front().outer.front());
  for (const auto& m : ids) rv.edges(m.outer);
  const auto top_axis = rv.add({0.0, z});
  const auto plug_axis = rv.add({0.0, z - t});
  rv.edge(ids.back().outer.back(), top_axis);
  rv.edge(plug_axis, ids.back().stub_hi.back());
  for (std::size_t k = n; k-- > 0;) inner_edges(rv, ids[k], static_cast<int>(k));
  // Base plug top face, then the port wall.
  const auto port_hi = rv.add({r_port, t});
  rv.edge(ids.front().stub_lo.front(), port_hi);
  rv.edge(port_hi, port_lo);
  return rv.build(o.angle_step_deg);
}

MeshAudit audit_mesh(const TriangleMesh& mesh) {
  MeshAudit au;
  au.vertices = mesh.vertices.size();
  au.faces = mesh.triangles.size();
  struct HalfEdge {
    std::uint64_t key;
    bool forward;
  };
  std::vector<HalfEdge> half;
  half.reserve(3 * mesh.triangles.size());
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    const auto& t = mesh.triangles[i];
    for (int e = 0; e < 3; ++e) {
      const std::uint32_t u = t[e], v = t[(e + 1) % 3];
      const std::uint64_t lo = std::min(u, v), hi = std::max(u, v);
      half.push_back({(lo << 32) | hi, u < v});
    }
    const double area = mesh.area(i);
    if (!(area > 1e-9)) ++au.degenerate_triangles;
    au.surface_area += area;
    const auto &a = mesh.vertices[t[0]], &b = mesh.vertices[t[1]], &c = mesh.vertices[t[2]];
    au.volume += a.dot(b.cross(c)) / 6.0;
  }
  std::sort(half.begin(), half.end(), [](const HalfEdge& x, const HalfEdge& y) {
    return x.key != y.key ? x.key < y.key : x.forward < y.forward;
  });
  for (std::size_t i = 0; i < half.size();) {
    std::size_t j = i;
    int fwd = 0;
    while (j < half.size() && half[j].key == half[i].key) fwd += half[j++].forward ? 1 : 0;
    const std::size_t count = j - i;
    ++au.edges;
    if (count == 1) {
      ++au.boundary_edges;
    } else if (count > 2) {
      ++au.nonmanifold_edges;
    } else if (fwd != 1) {
      ++au.misoriented_edges;
    }
    i = j;
  }
  au.euler_characteristic = static_cast<long>(au.vertices) - static_cast<long>(au.edges) + static_cast<long>(au.faces);
  if (!mesh.vertices.empty()) {
    au.min = au.max = mesh.vertices.front();
    for (const auto& v : mesh.vertices) {
      au.min = au.min.cwiseMin(v);
      au.max = au.max.cwiseMax(v);
    }
  }
  return au;
}

double radial_moment(const std::vector<Point2>& loop) {
  double s = 0.0;
  for (std::size_t i = 0; i < loop.size(); ++i) {
    const auto& p = loop[i];
    const auto& q = loop[(i + 1) % loop.size()];
    s += (q.y() - p.y()) * (p.x() * p.x() + p.x() * q.x() + q.x() * q.x()) / 6.0;
  }
  return s;
}

}  // namespace bellow
