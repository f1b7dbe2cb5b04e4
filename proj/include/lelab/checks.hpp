#pragma once

// Numerical claims evaluated end to end, shared by `lab_cli verify` and the
// acceptance binary. Every check produces records with the computed value,
// the expected value and the tolerance it was judged against.

#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "lelab/asymptotics.hpp"
#include "lelab/green_robin.hpp"
#include "lelab/lane_emden.hpp"
#include "lelab/spectral.hpp"

namespace lelab::checks {

enum class Compare {
  AbsLe,    ///< |computed - expected| <= tolerance
  RelLe,    ///< |computed - expected| <= tolerance * |expected|
  Le,       ///< computed <= expected (tolerance unused)
  Ge,       ///< computed >= expected
  Lt,       ///< computed < expected
  Gt,       ///< computed > expected
  Equal,    ///< computed == expected exactly
};

struct CheckRecord {
  std::string claim;
  std::string anchor;  ///< the mathematical statement being checked
  double computed = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  Compare compare = Compare::AbsLe;
  bool pass = false;
};

CheckRecord make_check(std::string claim, std::string anchor, double computed, double expected,
                       double tolerance, Compare compare);

struct CheckReport {
  std::string target;
  std::vector<CheckRecord> records;
  std::string error;  ///< non-empty when a solver error stopped the check

  bool pass() const;
  void add(CheckRecord r) { records.push_back(std::move(r)); }
};

nlohmann::json to_json(const CheckRecord& r);
nlohmann::json to_json(const CheckReport& r);

/// Solver results reused across checks, keyed by domain, schedule and mesh size.
class Workspace {
public:
  /// FEM branches run from p = 5 through `schedule` on meshes of size `base_h`.
  explicit Workspace(std::vector<double> schedule = {20, 40, 80}, double base_h = 0.05);

  double base_h() const { return base_h_; }
  const std::vector<double>& schedule() const { return schedule_; }
  /// Solution at p; exponents outside the schedule get a branch of their own.
  const Solution& solution(const DomainSpec& domain, double p);
  const SpectrumReport& spectrum(const DomainSpec& domain, double p);
  const RobinSolver& robin_solver(const DomainSpec& domain, double h);
  const RobinData& robin(const DomainSpec& domain, double h);

private:
  const Branch& branch(const DomainSpec& domain, const std::vector<double>& p_values);

  std::vector<double> schedule_;
  double base_h_;
  std::map<std::string, Branch> branches_;
  std::map<std::string, SpectrumReport> spectra_;
  std::map<std::string, std::unique_ptr<RobinSolver>> solvers_;
  std::map<std::string, RobinData> robin_;
};

/// Mesh size of the Robin solvers used by spectral checks.
double robin_h(const DomainSpec& domain);

CheckReport lambda1(Workspace& ws, const std::vector<DomainSpec>& domains, const std::vector<double>& p);
CheckReport energy(const std::vector<double>& p);
CheckReport sup_norm(const std::vector<double>& p);
CheckReport lambda4(const std::vector<double>& p);
CheckReport lambda23(Workspace& ws, const std::vector<double>& oracle_p, const std::vector<double>& fem_p);
CheckReport morse(Workspace& ws, const std::vector<DomainSpec>& domains, const std::vector<double>& p);
CheckReport robin_oracle(double h_coarse, double h_fine);
CheckReport boundary_identities(double h);
CheckReport far_field(Workspace& ws, const std::vector<double>& p);
CheckReport eigen_structure(Workspace& ws, const std::vector<double>& p);
CheckReport liouville(Workspace& ws, const std::vector<double>& p);
CheckReport pohozaev(Workspace& ws, const std::vector<double>& p);
CheckReport oracle_equivalence(Workspace& ws, const std::vector<double>& p);

}  // namespace lelab::checks
