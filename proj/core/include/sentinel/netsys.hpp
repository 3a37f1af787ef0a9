#pragma once

#include <cstdint>
#include <initializer_list>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sentinel/lti.hpp"

namespace sentinel::net {

/// Default ceiling on cond(I - Z M) for a loop to count as well-posed.
inline constexpr double kWellPosedConditionLimit = 1e12;

struct SubsystemDims {
  Index nx = 0;  ///< state
  Index nv = 0;  ///< interconnection input
  Index nw = 0;  ///< interconnection output
  Index nr = 0;  ///< reference
  Index ny = 0;  ///< measurement

  friend bool operator==(const SubsystemDims&, const SubsystemDims&) = default;
};

/**
 * One LTI subsystem of an interconnected plant:
 *
 *   x' = A x + L v + B r
 *   w  = W x + Z v + U r
 *   y  = C x + E v + D r
 *
 * Attack inputs enter additively on x', w and y; they are not stored here.
 */
struct Subsystem {
  std::string name;
  Matrix a, l, b;
  Matrix w, z, u;
  Matrix c, e, d;

  /// All-zero blocks with the given sizes.
  static Subsystem zeros(std::string name, const SubsystemDims& dims);

  SubsystemDims dims() const;
  void validate() const;
};

/// Set of subsystem indices (0-based) backed by a 64-bit mask.
class SubsystemSet {
 public:
  static constexpr std::size_t kCapacity = 64;

  SubsystemSet() = default;
  explicit SubsystemSet(std::uint64_t mask) : mask_(mask) {}
  SubsystemSet(std::initializer_list<std::size_t> members);

  static SubsystemSet all(std::size_t n);
  static SubsystemSet from_members(const std::vector<std::size_t>& members);

  bool contains(std::size_t i) const;
  void insert(std::size_t i);
  void erase(std::size_t i);
  std::size_t size() const;
  bool empty() const { return mask_ == 0; }
  bool is_subset_of(const SubsystemSet& other) const {
    return (mask_ & ~other.mask_) == 0;
  }
  std::uint64_t mask() const { return mask_; }
  std::vector<std::size_t> members() const;

  SubsystemSet operator-(const SubsystemSet& other) const {
    return SubsystemSet(mask_ & ~other.mask_);
  }
  SubsystemSet operator|(const SubsystemSet& other) const {
    return SubsystemSet(mask_ | other.mask_);
  }
  SubsystemSet operator&(const SubsystemSet& other) const {
    return SubsystemSet(mask_ & other.mask_);
  }
  friend bool operator==(const SubsystemSet&, const SubsystemSet&) = default;

  /// 1-based listing, e.g. "{1,3}".
  std::string to_string() const;

 private:
  std::uint64_t mask_ = 0;
};

/// Sparse coupling v_i = sum_j M_ij w_j.
class Topology {
 public:
  using Key = std::pair<std::size_t, std::size_t>;  // (to, from)

  Topology() = default;
  explicit Topology(std::size_t n) : n_(n) {}

  std::size_t size() const { return n_; }

  /// Adds M to the coupling from subsystem `from` into subsystem `to`.
  void connect(std::size_t to, std::size_t from, Matrix m);

  const std::map<Key, Matrix>& edges() const { return edges_; }
  const Matrix* coupling(std::size_t to, std::size_t from) const;

  /// Neighborhood of i: the j with an edge j -> i, ascending.
  std::vector<std::size_t> neighbors(std::size_t i) const;

 private:
  std::size_t n_ = 0;
  std::map<Key, Matrix> edges_;
};

/// Subsystems + topology + the currently connected subset.
class InterconnectedNetwork {
 public:
  InterconnectedNetwork() = default;
  InterconnectedNetwork(std::vector<Subsystem> subsystems, Topology topology);
  InterconnectedNetwork(std::vector<Subsystem> subsystems, Topology topology,
                        SubsystemSet active);

  std::size_t size() const { return subsystems_.size(); }
  const std::vector<Subsystem>& subsystems() const { return subsystems_; }
  const Subsystem& subsystem(std::size_t i) const { return subsystems_.at(i); }
  const Topology& topology() const { return topology_; }
  const SubsystemSet& active() const { return active_; }

 private:
  std::vector<Subsystem> subsystems_;
  Topology topology_;
  SubsystemSet active_;
};

/// A contiguous slice of a stacked vector.
struct Block {
  Index offset = 0;
  Index size = 0;
};

/**
 * Closed realization of the active part of a network together with the
 * slices that locate each subsystem's signals in it.
 *
 * Inputs are stacked as [r | a_x | a_w | a_y], outputs as [y | w], each in
 * member order. Per-subsystem block vectors are indexed by the global
 * subsystem index; inactive subsystems get empty blocks.
 */
struct ClosedNetwork {
  lti::StateSpace system;
  std::vector<std::size_t> members;
  std::vector<Block> state;
  std::vector<Block> reference;
  std::vector<Block> attack_state;
  std::vector<Block> attack_interconnection;
  std::vector<Block> attack_measurement;
  std::vector<Block> measurement;
  std::vector<Block> interconnection;
  /// Restricted coupling: stacked v = coupling * stacked w (member order).
  Matrix coupling;
  /// Slices of stacked v per subsystem (member order, like w).
  std::vector<Block> interconnection_input;
};

struct CloseOptions {
  bool attack_ports = true;
  double condition_limit = kWellPosedConditionLimit;
};

/// Eliminates the algebraic loop w = (I - Z M)^{-1}(W x + U r + a_w) over the
/// active subsystems. Throws IllPosedError when the loop is singular.
ClosedNetwork close_interconnection(const InterconnectedNetwork& net,
                                    const CloseOptions& options = {});

/// cond(I - Z M) over the active subsystems; 1 for an empty loop.
double loop_condition_number(const InterconnectedNetwork& net);

bool check_well_posedness(const InterconnectedNetwork& net,
                          double condition_limit = kWellPosedConditionLimit);

/// Network with active set `keep`; throws InputError if keep is not a subset
/// of the current active set.
InterconnectedNetwork disconnect(const InterconnectedNetwork& net,
                                 const SubsystemSet& keep);

/**
 * Removes the dynamic part of the listed subsystems while keeping their
 * algebraic pass-through: the state is frozen at zero and dropped, so
 * w = Z v + U r and y = E v + D r remain.
 */
Subsystem strip_dynamics(const Subsystem& sub);
InterconnectedNetwork strip_dynamics(const InterconnectedNetwork& net,
                                     const SubsystemSet& which);

struct SubsetResult {
  SubsystemSet subset;
  bool well_posed = false;
  double spectral_abscissa = 0.0;  ///< -inf for an empty state
  bool stable = false;
};

struct ResilienceOptions {
  std::size_t max_subsystems = 16;
  double margin = lti::kHurwitzMargin;
  double condition_limit = kWellPosedConditionLimit;
  /// Stop at the first failing subset (in ascending mask order).
  bool stop_on_first_failure = true;
  std::size_t threads = 0;
};

struct ResilienceReport {
  /// Ascending by subset mask; truncated after the first failure when
  /// stop_on_first_failure is set.
  std::vector<SubsetResult> subsets;
  bool passed = false;
  std::optional<SubsystemSet> first_failure;
};

/**
 * Closes every subset of {0..N-1} (the empty and full sets included) and
 * reports its spectral abscissa. Ill-posed subsets are reported, not thrown.
 */
ResilienceReport verify_disconnection_resilience(
    const InterconnectedNetwork& net, const ResilienceOptions& options = {});

/// Linear readout of one subsystem's signals: cx x + ev v + dr r,
/// optionally passed through a square root (for squared magnitudes).
struct Probe {
  std::string name;
  std::size_t subsystem = 0;
  Matrix cx, ev, dr;
  bool square_root = false;
};

}  // namespace sentinel::net
