#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json_util.hpp"
#include "sentinel/io.hpp"

namespace sentinel::io {

using detail::json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw InputError("write to '" + path.string() + "' failed");
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

NetworkDocument parse_network(const std::string& text) {
  const json j = detail::parse_json(text, "network");
  detail::check_format(j, "retrofit-sentinel/network", "network");
  const json& subs = detail::require(j, "subsystems", "network");
  if (!subs.is_array() || subs.empty()) {
    throw InputError("network: 'subsystems' must be a non-empty array");
  }

  std::vector<net::Subsystem> list;
  std::vector<Vector> refs;
  bool any_ref = false;
  for (std::size_t i = 0; i < subs.size(); ++i) {
    const json& s = subs[i];
    const std::string ctx = "network: subsystem " + std::to_string(i + 1);
    const json& dj = detail::require(s, "dims", ctx);
    net::SubsystemDims d;
    d.nx = detail::count(detail::require(dj, "nx", ctx), ctx + " dims.nx");
    d.nv = detail::count(detail::require(dj, "nv", ctx), ctx + " dims.nv");
    d.nw = detail::count(detail::require(dj, "nw", ctx), ctx + " dims.nw");
    d.nr = detail::count(detail::require(dj, "nr", ctx), ctx + " dims.nr");
    d.ny = detail::count(detail::require(dj, "ny", ctx), ctx + " dims.ny");

    net::Subsystem sub;
    sub.name = s.value("name", std::string());
    auto block = [&](const char* key, Index r, Index c) {
      if (!s.contains(key)) return Matrix(Matrix::Zero(r, c));
      return detail::matrix(s.at(key), r, c, ctx + " " + key);
    };
    sub.a = block("A", d.nx, d.nx);
    sub.l = block("L", d.nx, d.nv);
    sub.b = block("B", d.nx, d.nr);
    sub.w = block("W", d.nw, d.nx);
    sub.z = block("Z", d.nw, d.nv);
    sub.u = block("U", d.nw, d.nr);
    sub.c = block("C", d.ny, d.nx);
    sub.e = block("E", d.ny, d.nv);
    sub.d = block("D", d.ny, d.nr);
    sub.validate();
    list.push_back(std::move(sub));

    if (s.contains("reference")) {
      any_ref = true;
      Vector r = detail::vector(s.at("reference"), ctx + " reference");
      if (r.size() != d.nr) throw DimensionError(ctx + ": reference must have nr entries");
      refs.push_back(std::move(r));
    } else {
      refs.push_back(Vector::Zero(d.nr));
    }
  }

  const std::size_t n = list.size();
  net::Topology topo(n);
  if (j.contains("topology")) {
    const json& edges = j.at("topology");
    if (!edges.is_array()) throw InputError("network: 'topology' must be an array");
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const std::string ctx = "network: topology entry " + std::to_string(e + 1);
      const Index from = detail::count(detail::require(edges[e], "from", ctx), ctx + " from");
      const Index to = detail::count(detail::require(edges[e], "to", ctx), ctx + " to");
      if (from < 1 || to < 1 || static_cast<std::size_t>(from) > n ||
          static_cast<std::size_t>(to) > n) {
        throw InputError(ctx + ": subsystem index out of range (1-based)");
      }
      const auto& sto = list[static_cast<std::size_t>(to - 1)];
      const auto& sfrom = list[static_cast<std::size_t>(from - 1)];
      topo.connect(static_cast<std::size_t>(to - 1), static_cast<std::size_t>(from - 1),
                   detail::matrix(detail::require(edges[e], "matrix", ctx), sto.dims().nv,
                                  sfrom.dims().nw, ctx + " matrix"));
    }
  }

  net::SubsystemSet active = net::SubsystemSet::all(n);
  if (j.contains("active")) {
    active = net::SubsystemSet();
    for (const auto& a : j.at("active")) {
      const Index k = detail::count(a, "network: active");
      if (k < 1 || static_cast<std::size_t>(k) > n) {
        throw InputError("network: active index out of range (1-based)");
      }
      active.insert(static_cast<std::size_t>(k - 1));
    }
  }

  NetworkDocument doc{net::InterconnectedNetwork(std::move(list), std::move(topo), active), {}};
  if (any_ref) doc.references = std::move(refs);
  return doc;
}

std::string format_network(const net::InterconnectedNetwork& network,
                           const std::vector<Vector>& references) {
  json j;
  j["format"] = "retrofit-sentinel/network";
  j["version"] = 1;
  json subs = json::array();
  for (std::size_t i = 0; i < network.size(); ++i) {
    const auto& s = network.subsystem(i);
    const auto d = s.dims();
    json o;
    o["name"] = s.name;
    o["dims"] = {{"nx", d.nx}, {"nv", d.nv}, {"nw", d.nw}, {"nr", d.nr}, {"ny", d.ny}};
    o["A"] = detail::to_json(s.a);
    o["L"] = detail::to_json(s.l);
    o["B"] = detail::to_json(s.b);
    o["W"] = detail::to_json(s.w);
    o["Z"] = detail::to_json(s.z);
    o["U"] = detail::to_json(s.u);
    o["C"] = detail::to_json(s.c);
    o["E"] = detail::to_json(s.e);
    o["D"] = detail::to_json(s.d);
    if (i < references.size()) o["reference"] = detail::to_json(references[i]);
    subs.push_back(std::move(o));
  }
  j["subsystems"] = std::move(subs);
  json edges = json::array();
  for (const auto& [key, m] : network.topology().edges()) {
    edges.push_back({{"from", key.second + 1}, {"to", key.first + 1},
                     {"matrix", detail::to_json(m)}});
  }
  j["topology"] = std::move(edges);
  if (network.active() != net::SubsystemSet::all(network.size())) {
    json act = json::array();
    for (std::size_t i : network.active().members()) act.push_back(i + 1);
    j["active"] = std::move(act);
  }
  return j.dump(2) + "\n";
}

NetworkDocument load_network(const std::filesystem::path& path) {
  try {
    return parse_network(read_file(path));
  } catch (const Error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void save_network(const std::filesystem::path& path,
                  const net::InterconnectedNetwork& network,
                  const std::vector<Vector>& references) {
  write_file(path, format_network(network, references));
}

}  // namespace sentinel::io
