#pragma once

#include "noids/contours.hpp"
#include "noids/sister.hpp"
#include "noids/solver.hpp"

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace noids {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitValidation = 2,
  kExitNumerical = 3,
  kExitIo = 4,
  kExitCheckFailed = 5,
};

class ConfigError : public DomainError {
 public:
  using DomainError::DomainError;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Pipeline { Scherk, Knoid, Noid2k, Sister, Verify };
std::string pipeline_name(Pipeline p);
Pipeline parse_pipeline(const std::string& name);

struct RunConfig {
  Pipeline pipeline = Pipeline::Knoid;
  SpaceParams space;
  Family family = Family::Knoid;  // sister and verify
  int k = 3;
  double a = 1.0;
  double d = 1.0;
  double alpha = -1.0;             // < 0: pi / (2k)
  std::vector<double> truncations{2.0};
  SolverOptions solver;
  int scherk_points = 200;
  int scherk_sign = 1;
  double scherk_s_max = 1.4;       // angular extent of the exported Scherk mesh
  int patch_u = 50, patch_v = 50;
  TwistOptions twist;
  int verify_loops = 20;
  unsigned verify_seed = 7;

  double resolved_alpha() const;
  NoidSpec spec(double truncation) const;
  void validate() const;
};

// Sectioned key = value text; '#' starts a comment. Unknown keys are errors.
RunConfig parse_config(std::istream& is, Pipeline pipeline);
RunConfig load_config(const std::filesystem::path& path, Pipeline pipeline);
void write_config(std::ostream& os, const RunConfig& cfg);

// 17 significant digits, '.' decimal point.
std::string format_number(double x);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add(const std::vector<double>& values);
  void add_cells(std::vector<std::string> cells);
};
void write_csv(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_csv(const std::filesystem::path& path);

struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
};
// Grid of nu x nv samples, two triangles per cell.
TriMesh patch_mesh(const SurfacePatch& patch, int nu, int nv);
TriMesh graph_mesh(const DiscreteGraph& g);
void write_obj(std::ostream& os, const TriMesh& mesh);
TriMesh read_obj(std::istream& is);
void write_ply(std::ostream& os, const TriMesh& mesh);
void export_mesh(const std::filesystem::path& path, const TriMesh& mesh);  // by extension

struct Check {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct RunResult {
  std::vector<std::filesystem::path> files;
  std::vector<Check> checks;
  std::vector<std::pair<std::string, std::string>> facts;  // descriptive, written to summary.csv
  bool passed() const;
};

// Each run writes its outputs and resolved.cfg into `out`.
RunResult run_pipeline(const RunConfig& cfg, const std::filesystem::path& out);

}  // namespace noids
