// Routing topologies and their text format.
//
//   # comment to end of line
//   [routers]
//   A B C D
//   [links]
//   A B 10          directed link A→B with capacity 10
//   B C 10 bidir    adds B→C and C→B, both capacity 10
//   [demands]
//   A D 4 10        demand pair A→D, per-episode base demand in [4, 10]
//   [paths]
//   0 A B D         candidate path for demand 0 as a node sequence
//
// Links are numbered in file order (a bidir line yields two consecutive ids,
// forward first). Demands are numbered in file order; demand i is agent i.

#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "attmaddpg/errors.hpp"

namespace attmaddpg::env {

struct Link {
  std::string src;
  std::string dst;
  double capacity = 0.0;
};

struct DemandPair {
  std::string src;
  std::string dst;
  double min_demand = 0.0;
  double max_demand = 0.0;
};

/// A candidate path as the ids of the links it traverses, in order.
using Path = std::vector<std::size_t>;

struct Topology {
  std::vector<std::string> routers;
  std::vector<Link> links;
  std::vector<DemandPair> demands;
  std::vector<std::vector<Path>> paths;  // per demand

  std::optional<std::size_t> find_link(const std::string& src, const std::string& dst) const {
    for (std::size_t l = 0; l < links.size(); ++l) {
      if (links[l].src == src && links[l].dst == dst) return l;
    }
    return std::nullopt;
  }

  bool has_router(const std::string& name) const {
    return std::find(routers.begin(), routers.end(), name) != routers.end();
  }

  std::string link_label(std::size_t l) const { return links[l].src + "-" + links[l].dst; }

  /// Sorted ids of every link on any of the demand's candidate paths.
  std::vector<std::size_t> links_of_demand(std::size_t d) const {
    std::vector<std::size_t> out;
    for (const auto& p : paths.at(d)) out.insert(out.end(), p.begin(), p.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  /// Throws ValidationError naming the first offending element.
  void validate() const {
    if (routers.empty()) throw ValidationError("topology has no routers");
    for (std::size_t l = 0; l < links.size(); ++l) {
      const auto& k = links[l];
      if (!has_router(k.src)) throw ValidationError("link " + std::to_string(l) + " uses unknown node '" + k.src + "'");
      if (!has_router(k.dst)) throw ValidationError("link " + std::to_string(l) + " uses unknown node '" + k.dst + "'");
      if (!(k.capacity > 0.0)) throw ValidationError("link " + k.src + "-" + k.dst + " has nonpositive capacity");
    }
    if (demands.empty()) throw ValidationError("topology has no demand pairs");
    if (paths.size() != demands.size()) throw ValidationError("paths table does not match demand count");
    for (std::size_t d = 0; d < demands.size(); ++d) {
      const auto& dp = demands[d];
      if (!has_router(dp.src)) throw ValidationError("demand " + std::to_string(d) + " uses unknown node '" + dp.src + "'");
      if (!has_router(dp.dst)) throw ValidationError("demand " + std::to_string(d) + " uses unknown node '" + dp.dst + "'");
      if (dp.min_demand < 0.0 || dp.max_demand < dp.min_demand) {
        throw ValidationError("demand " + std::to_string(d) + " has an invalid range");
      }
      if (paths[d].size() < 2) throw ValidationError("demand " + std::to_string(d) + " has fewer than 2 candidate paths");
      for (std::size_t p = 0; p < paths[d].size(); ++p) {
        const auto& path = paths[d][p];
        const std::string where = "path " + std::to_string(p) + " of demand " + std::to_string(d);
        if (path.empty()) throw ValidationError(where + " is empty");
        std::string at = dp.src;
        for (std::size_t l : path) {
          if (l >= links.size()) throw ValidationError(where + " references missing link " + std::to_string(l));
          if (links[l].src != at) throw ValidationError(where + " is disconnected at node '" + at + "'");
          at = links[l].dst;
        }
        if (at != dp.dst) throw ValidationError(where + " ends at '" + at + "' instead of '" + dp.dst + "'");
      }
    }
  }
};

namespace detail {

inline std::vector<std::string> tokens(const std::string& line) {
  std::istringstream in(line.substr(0, line.find('#')));
  std::vector<std::string> out;
  for (std::string t; in >> t;) out.push_back(t);
  return out;
}

inline double parse_number(const std::string& text, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ValidationError(where + ": '" + text + "' is not a number");
  }
}

}  // namespace detail

/// Parses and validates the text format above.
inline Topology load_topology(const std::string& text) {
  Topology topo;
  std::vector<std::vector<std::vector<std::string>>> node_paths;
  std::string section;
  std::istringstream in(text);
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    const auto t = detail::tokens(line);
    if (t.empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    if (t.size() == 1 && t[0].size() > 2 && t[0].front() == '[' && t[0].back() == ']') {
      section = t[0].substr(1, t[0].size() - 2);
      if (section != "routers" && section != "links" && section != "demands" && section != "paths") {
        throw ValidationError(where + ": unknown section [" + section + "]");
      }
      continue;
    }
    if (section == "routers") {
      for (const auto& r : t) {
        if (topo.has_router(r)) throw ValidationError(where + ": duplicate router '" + r + "'");
        topo.routers.push_back(r);
      }
    } else if (section == "links") {
      if (t.size() != 3 && !(t.size() == 4 && t[3] == "bidir")) {
        throw ValidationError(where + ": expected 'src dst capacity [bidir]'");
      }
      const double cap = detail::parse_number(t[2], where);
      auto add = [&](const std::string& a, const std::string& b) {
        if (topo.find_link(a, b)) throw ValidationError(where + ": duplicate link " + a + "-" + b);
        topo.links.push_back({a, b, cap});
      };
      add(t[0], t[1]);
      if (t.size() == 4) add(t[1], t[0]);
    } else if (section == "demands") {
      if (t.size() != 4) throw ValidationError(where + ": expected 'src dst min max'");
      topo.demands.push_back({t[0], t[1], detail::parse_number(t[2], where),
                              detail::parse_number(t[3], where)});
    } else if (section == "paths") {
      if (t.size() < 3) throw ValidationError(where + ": expected 'demand-index node node ...'");
      const double d = detail::parse_number(t[0], where);
      if (d < 0 || d != static_cast<double>(static_cast<std::size_t>(d))) {
        throw ValidationError(where + ": bad demand index '" + t[0] + "'");
      }
      const auto idx = static_cast<std::size_t>(d);
      if (node_paths.size() <= idx) node_paths.resize(idx + 1);
      node_paths[idx].emplace_back(t.begin() + 1, t.end());
    } else {
      throw ValidationError(where + ": content outside of a section");
    }
  }
  if (node_paths.size() > topo.demands.size()) {
    throw ValidationError("paths reference demand " + std::to_string(node_paths.size() - 1) +
                          " which does not exist");
  }
  node_paths.resize(topo.demands.size());
  topo.paths.resize(topo.demands.size());
  for (std::size_t d = 0; d < node_paths.size(); ++d) {
    for (std::size_t p = 0; p < node_paths[d].size(); ++p) {
      const auto& nodes = node_paths[d][p];
      const std::string where = "path " + std::to_string(p) + " of demand " + std::to_string(d);
      if (nodes.front() != topo.demands[d].src) {
        throw ValidationError(where + " does not start at '" + topo.demands[d].src + "'");
      }
      Path path;
      for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
        for (const auto* n : {&nodes[i], &nodes[i + 1]}) {
          if (!topo.has_router(*n)) throw ValidationError(where + " uses unknown node '" + *n + "'");
        }
        auto l = topo.find_link(nodes[i], nodes[i + 1]);
        if (!l) throw ValidationError(where + " references missing link " + nodes[i] + "-" + nodes[i + 1]);
        path.push_back(*l);
      }
      topo.paths[d].push_back(std::move(path));
    }
  }
  topo.validate();
  return topo;
}

inline Topology load_topology_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open topology file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return load_topology(buf.str());
}

}  // namespace attmaddpg::env
