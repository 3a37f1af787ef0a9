#include "sentinel/netsys.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <limits>
#include <mutex>
#include <string>

#include "sentinel/parallel.hpp"

namespace sentinel::net {
namespace {

std::string dims_text(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void expect_shape(const Matrix& m, Index rows, Index cols,
                  const std::string& what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw DimensionError(what + " is " + dims_text(m) + ", expected " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  }
  if (!m.allFinite()) throw InputError(what + " has non-finite entries");
}

void check_index(std::size_t i) {
  if (i >= SubsystemSet::kCapacity) {
    throw InputError("subsystem index " + std::to_string(i) +
                     " exceeds the 64-subsystem set capacity");
  }
}

struct Stacked {
  std::vector<std::size_t> members;
  std::vector<Block> x, v, w, r, y;
  Index nx = 0, nv = 0, nw = 0, nr = 0, ny = 0;
};

Stacked stack_members(const InterconnectedNetwork& net) {
  Stacked s;
  const std::size_t n = net.size();
  s.x.resize(n);
  s.v.resize(n);
  s.w.resize(n);
  s.r.resize(n);
  s.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!net.active().contains(i)) continue;
    s.members.push_back(i);
    const SubsystemDims d = net.subsystem(i).dims();
    s.x[i] = {s.nx, d.nx};
    s.v[i] = {s.nv, d.nv};
    s.w[i] = {s.nw, d.nw};
    s.r[i] = {s.nr, d.nr};
    s.y[i] = {s.ny, d.ny};
    s.nx += d.nx;
    s.nv += d.nv;
    s.nw += d.nw;
    s.nr += d.nr;
    s.ny += d.ny;
  }
  return s;
}

// Restricted coupling matrix: rows = stacked v, cols = stacked w.
Matrix restricted_coupling(const InterconnectedNetwork& net, const Stacked& s) {
  Matrix m = Matrix::Zero(s.nv, s.nw);
  for (const auto& [key, mij] : net.topology().edges()) {
    const auto [to, from] = key;
    if (!net.active().contains(to) || !net.active().contains(from)) continue;
    m.block(s.v[to].offset, s.w[from].offset, mij.rows(), mij.cols()) += mij;
  }
  return m;
}

// Block-diagonal loop gain Z_blk * M over the active members.
Matrix loop_gain(const InterconnectedNetwork& net, const Stacked& s,
                 const Matrix& coupling) {
  Matrix z = Matrix::Zero(s.nw, s.nv);
  for (std::size_t i : s.members) {
    const auto& sub = net.subsystem(i);
    z.block(s.w[i].offset, s.v[i].offset, sub.z.rows(), sub.z.cols()) = sub.z;
  }
  return z * coupling;
}

double condition_number(const Matrix& m) {
  if (m.size() == 0) return 1.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& sv = svd.singularValues();
  const double smin = sv(sv.size() - 1);
  if (!(smin > 0.0)) return std::numeric_limits<double>::infinity();
  return sv(0) / smin;
}

}  // namespace

// ---------------------------------------------------------------- Subsystem

Subsystem Subsystem::zeros(std::string name, const SubsystemDims& d) {
  Subsystem s;
  s.name = std::move(name);
  s.a = Matrix::Zero(d.nx, d.nx);
  s.l = Matrix::Zero(d.nx, d.nv);
  s.b = Matrix::Zero(d.nx, d.nr);
  s.w = Matrix::Zero(d.nw, d.nx);
  s.z = Matrix::Zero(d.nw, d.nv);
  s.u = Matrix::Zero(d.nw, d.nr);
  s.c = Matrix::Zero(d.ny, d.nx);
  s.e = Matrix::Zero(d.ny, d.nv);
  s.d = Matrix::Zero(d.ny, d.nr);
  return s;
}

SubsystemDims Subsystem::dims() const {
  return {a.rows(), l.cols(), w.rows(), b.cols(), c.rows()};
}

void Subsystem::validate() const {
  const SubsystemDims d = dims();
  const std::string tag = "subsystem '" + name + "': ";
  expect_shape(a, d.nx, d.nx, tag + "A");
  expect_shape(l, d.nx, d.nv, tag + "L");
  expect_shape(b, d.nx, d.nr, tag + "B");
  expect_shape(w, d.nw, d.nx, tag + "W");
  expect_shape(z, d.nw, d.nv, tag + "Z");
  expect_shape(u, d.nw, d.nr, tag + "U");
  expect_shape(c, d.ny, d.nx, tag + "C");
  expect_shape(e, d.ny, d.nv, tag + "E");
  expect_shape(this->d, d.ny, d.nr, tag + "D");
}

// ------------------------------------------------------------ SubsystemSet

SubsystemSet::SubsystemSet(std::initializer_list<std::size_t> members) {
  for (std::size_t i : members) insert(i);
}

SubsystemSet SubsystemSet::all(std::size_t n) {
  if (n > kCapacity) {
    throw InputError("networks are limited to 64 subsystems");
  }
  return SubsystemSet(n == kCapacity ? ~std::uint64_t{0}
                                     : ((std::uint64_t{1} << n) - 1));
}

SubsystemSet SubsystemSet::from_members(const std::vector<std::size_t>& members) {
  SubsystemSet s;
  for (std::size_t i : members) s.insert(i);
  return s;
}

bool SubsystemSet::contains(std::size_t i) const {
  return i < kCapacity && ((mask_ >> i) & 1u) != 0;
}

void SubsystemSet::insert(std::size_t i) {
  check_index(i);
  mask_ |= std::uint64_t{1} << i;
}

void SubsystemSet::erase(std::size_t i) {
  if (i < kCapacity) mask_ &= ~(std::uint64_t{1} << i);
}

std::size_t SubsystemSet::size() const {
  return static_cast<std::size_t>(std::popcount(mask_));
}

std::vector<std::size_t> SubsystemSet::members() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < kCapacity; ++i) {
    if (contains(i)) out.push_back(i);
  }
  return out;
}

std::string SubsystemSet::to_string() const {
  std::string out = "{";
  bool first = true;
  for (std::size_t i : members()) {
    if (!first) out += ",";
    out += std::to_string(i + 1);
    first = false;
  }
  return out + "}";
}

// ---------------------------------------------------------------- Topology

void Topology::connect(std::size_t to, std::size_t from, Matrix m) {
  if (to >= n_ || from >= n_) {
    throw InputError("edge " + std::to_string(from + 1) + " -> " +
                     std::to_string(to + 1) + " references a subsystem outside 1.." +
                     std::to_string(n_));
  }
  auto [it, inserted] = edges_.try_emplace({to, from}, m);
  if (!inserted) {
    if (it->second.rows() != m.rows() || it->second.cols() != m.cols()) {
      throw DimensionError("duplicate edge with different coupling size");
    }
    it->second += m;
  }
}

const Matrix* Topology::coupling(std::size_t to, std::size_t from) const {
  auto it = edges_.find({to, from});
  return it == edges_.end() ? nullptr : &it->second;
}

std::vector<std::size_t> Topology::neighbors(std::size_t i) const {
  std::vector<std::size_t> out;
  for (const auto& [key, m] : edges_) {
    if (key.first == i) out.push_back(key.second);
  }
  return out;
}

// --------------------------------------------------- InterconnectedNetwork

InterconnectedNetwork::InterconnectedNetwork(std::vector<Subsystem> subsystems,
                                             Topology topology)
    : InterconnectedNetwork(std::move(subsystems), std::move(topology),
                            SubsystemSet()) {
  active_ = SubsystemSet::all(subsystems_.size());
}

InterconnectedNetwork::InterconnectedNetwork(std::vector<Subsystem> subsystems,
                                             Topology topology,
                                             SubsystemSet active)
    : subsystems_(std::move(subsystems)),
      topology_(std::move(topology)),
      active_(active) {
  if (subsystems_.size() > SubsystemSet::kCapacity) {
    throw InputError("networks are limited to 64 subsystems");
  }
  if (topology_.size() != subsystems_.size()) {
    throw DimensionError("topology covers " + std::to_string(topology_.size()) +
                         " subsystems but the network has " +
                         std::to_string(subsystems_.size()));
  }
  for (const auto& s : subsystems_) s.validate();
  for (const auto& [key, m] : topology_.edges()) {
    const auto [to, from] = key;
    const auto dto = subsystems_[to].dims();
    const auto dfrom = subsystems_[from].dims();
    if (m.rows() != dto.nv || m.cols() != dfrom.nw) {
      throw DimensionError("coupling " + std::to_string(from + 1) + " -> " +
                           std::to_string(to + 1) + " is " + dims_text(m) +
                           ", expected " + std::to_string(dto.nv) + "x" +
                           std::to_string(dfrom.nw));
    }
    if (!m.allFinite()) throw InputError("coupling has non-finite entries");
  }
  if (!active_.is_subset_of(SubsystemSet::all(subsystems_.size()))) {
    throw InputError("active set references subsystems outside the network");
  }
}

// ----------------------------------------------------------------- closing

double loop_condition_number(const InterconnectedNetwork& net) {
  const Stacked s = stack_members(net);
  const Matrix zm = loop_gain(net, s, restricted_coupling(net, s));
  return condition_number(Matrix::Identity(s.nw, s.nw) - zm);
}

bool check_well_posedness(const InterconnectedNetwork& net,
                          double condition_limit) {
  return loop_condition_number(net) < condition_limit;
}

ClosedNetwork close_interconnection(const InterconnectedNetwork& net,
                                    const CloseOptions& options) {
  const Stacked s = stack_members(net);
  const std::size_t n = net.size();
  const Matrix coupling = restricted_coupling(net, s);
  const Matrix loop = Matrix::Identity(s.nw, s.nw) - loop_gain(net, s, coupling);
  const double cond = condition_number(loop);
  if (!(cond < options.condition_limit)) {
    throw IllPosedError("interconnection " + net.active().to_string() +
                        " is ill-posed: cond(I - Z M) = " + std::to_string(cond));
  }

  Matrix a = Matrix::Zero(s.nx, s.nx), l = Matrix::Zero(s.nx, s.nv),
         b = Matrix::Zero(s.nx, s.nr);
  Matrix w = Matrix::Zero(s.nw, s.nx), u = Matrix::Zero(s.nw, s.nr);
  Matrix c = Matrix::Zero(s.ny, s.nx), e = Matrix::Zero(s.ny, s.nv),
         d = Matrix::Zero(s.ny, s.nr);
  for (std::size_t i : s.members) {
    const auto& sub = net.subsystem(i);
    const auto& x = s.x[i];
    a.block(x.offset, x.offset, x.size, x.size) = sub.a;
    l.block(x.offset, s.v[i].offset, x.size, s.v[i].size) = sub.l;
    b.block(x.offset, s.r[i].offset, x.size, s.r[i].size) = sub.b;
    w.block(s.w[i].offset, x.offset, s.w[i].size, x.size) = sub.w;
    u.block(s.w[i].offset, s.r[i].offset, s.w[i].size, s.r[i].size) = sub.u;
    c.block(s.y[i].offset, x.offset, s.y[i].size, x.size) = sub.c;
    e.block(s.y[i].offset, s.v[i].offset, s.y[i].size, s.v[i].size) = sub.e;
    d.block(s.y[i].offset, s.r[i].offset, s.y[i].size, s.r[i].size) = sub.d;
  }

  // f = (I - Z M)^{-1}; w = f (W x + U r + a_w); v = M w.
  const Matrix f = s.nw > 0 ? Matrix(loop.partialPivLu().inverse())
                            : Matrix(0, 0);
  const Matrix mf = coupling * f;  // v = mf (W x + U r + a_w)

  const bool attacks = options.attack_ports;
  const Index n_in = s.nr + (attacks ? s.nx + s.nw + s.ny : 0);
  const Index n_out = s.ny + s.nw;

  Matrix ca = a + l * mf * w;
  Matrix cb = Matrix::Zero(s.nx, n_in);
  Matrix cc = Matrix::Zero(n_out, s.nx);
  Matrix cd = Matrix::Zero(n_out, n_in);

  cb.leftCols(s.nr) = b + l * mf * u;
  cc.topRows(s.ny) = c + e * mf * w;
  cc.bottomRows(s.nw) = f * w;
  cd.topLeftCorner(s.ny, s.nr) = d + e * mf * u;
  cd.bottomLeftCorner(s.nw, s.nr) = f * u;
  if (attacks) {
    const Index ax = s.nr, aw = s.nr + s.nx, ay = s.nr + s.nx + s.nw;
    cb.middleCols(ax, s.nx) = Matrix::Identity(s.nx, s.nx);
    cb.middleCols(aw, s.nw) = l * mf;
    cd.block(0, aw, s.ny, s.nw) = e * mf;
    cd.block(0, ay, s.ny, s.ny) = Matrix::Identity(s.ny, s.ny);
    cd.block(s.ny, aw, s.nw, s.nw) = f;
  }

  ClosedNetwork out;
  out.system = lti::StateSpace(std::move(ca), std::move(cb), std::move(cc),
                               std::move(cd));
  out.members = s.members;
  out.state = s.x;
  out.reference = s.r;
  out.attack_state.assign(n, Block{});
  out.attack_interconnection.assign(n, Block{});
  out.attack_measurement.assign(n, Block{});
  out.measurement = s.y;
  out.interconnection.assign(n, Block{});
  for (std::size_t i : s.members) {
    out.interconnection[i] = {s.ny + s.w[i].offset, s.w[i].size};
    if (attacks) {
      out.attack_state[i] = {s.nr + s.x[i].offset, s.x[i].size};
      out.attack_interconnection[i] = {s.nr + s.nx + s.w[i].offset, s.w[i].size};
      out.attack_measurement[i] = {s.nr + s.nx + s.nw + s.y[i].offset, s.y[i].size};
    }
  }
  out.coupling = coupling;
  out.interconnection_input = s.v;
  return out;
}

InterconnectedNetwork disconnect(const InterconnectedNetwork& net,
                                 const SubsystemSet& keep) {
  if (!keep.is_subset_of(net.active())) {
    throw InputError("disconnect: " + keep.to_string() +
                     " is not a subset of the active set " +
                     net.active().to_string());
  }
  return InterconnectedNetwork(net.subsystems(), net.topology(), keep);
}

Subsystem strip_dynamics(const Subsystem& sub) {
  const SubsystemDims d = sub.dims();
  Subsystem out;
  out.name = sub.name;
  out.a = Matrix(0, 0);
  out.l = Matrix(0, d.nv);
  out.b = Matrix(0, d.nr);
  out.w = Matrix(d.nw, 0);
  out.z = sub.z;
  out.u = sub.u;
  out.c = Matrix(d.ny, 0);
  out.e = sub.e;
  out.d = sub.d;
  return out;
}

InterconnectedNetwork strip_dynamics(const InterconnectedNetwork& net,
                                     const SubsystemSet& which) {
  std::vector<Subsystem> subs = net.subsystems();
  for (std::size_t i : which.members()) {
    if (i >= subs.size()) throw InputError("strip_dynamics: index out of range");
    subs[i] = strip_dynamics(subs[i]);
  }
  return InterconnectedNetwork(std::move(subs), net.topology(), net.active());
}

// -------------------------------------------------------------- resilience

ResilienceReport verify_disconnection_resilience(
    const InterconnectedNetwork& net, const ResilienceOptions& options) {
  const std::size_t n = net.size();
  if (n > options.max_subsystems) {
    throw InputError("resilience enumeration over " + std::to_string(n) +
                     " subsystems exceeds the cap of " +
                     std::to_string(options.max_subsystems) + " (2^N subsets)");
  }
  const std::size_t count = std::size_t{1} << n;
  std::vector<SubsetResult> results(count);
  // Lowest failing mask seen so far; masks above it need not be evaluated
  // when stopping early.
  std::atomic<std::size_t> first_fail{count};

  parallel_for(
      count,
      [&](std::size_t mask) {
        if (options.stop_on_first_failure && mask > first_fail.load()) return;
        SubsetResult r;
        r.subset = SubsystemSet(static_cast<std::uint64_t>(mask));
        const InterconnectedNetwork sub(net.subsystems(), net.topology(), r.subset);
        r.well_posed = check_well_posedness(sub, options.condition_limit);
        if (r.well_posed) {
          CloseOptions co;
          co.attack_ports = false;
          co.condition_limit = options.condition_limit;
          r.spectral_abscissa =
              lti::spectral_abscissa(close_interconnection(sub, co).system.a);
          r.stable = r.spectral_abscissa < -options.margin;
        } else {
          r.spectral_abscissa = std::numeric_limits<double>::quiet_NaN();
        }
        if (!r.stable) {
          std::size_t cur = first_fail.load();
          while (mask < cur && !first_fail.compare_exchange_weak(cur, mask)) {
          }
        }
        results[mask] = r;
      },
      options.threads);

  ResilienceReport report;
  const std::size_t fail = first_fail.load();
  report.passed = fail == count;
  if (!report.passed) {
    report.first_failure = SubsystemSet(static_cast<std::uint64_t>(fail));
  }
  const std::size_t keep =
      (options.stop_on_first_failure && !report.passed) ? fail + 1 : count;
  results.resize(keep);
  report.subsets = std::move(results);
  return report;
}

}  // namespace sentinel::net
