#pragma once

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <json.hpp>

#include <titerlab/analyzer.hpp>
#include <titerlab/ensemble.hpp>
#include <titerlab/grid.hpp>
#include <titerlab/trajectory.hpp>

namespace titerlab {

// CSV artifacts. Every file starts with one metadata comment line and a
// header row. Values are rendered with %.17g and nothing in the file depends
// on the wall clock, so a rerun with the same config and seed is
// byte-identical; regression suites can diff the files directly.

inline std::string render_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvWriter {
public:
  explicit CsvWriter(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot open '" + path + "' for writing");
  }

  void comment(const std::string& line) { out_ << "# " << line << "\n"; }

  void header(const std::vector<std::string>& cols) { line(cols); }

  void row(const std::vector<double>& vals) {
    for (std::size_t i = 0; i < vals.size(); ++i) {
      if (i) out_ << ',';
      out_ << render_num(vals[i]);
    }
    out_ << "\n";
  }

  void line(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << "\n";
  }

private:
  std::ofstream out_;
};

inline std::string run_metadata(const std::string& config_hash, std::uint64_t seed) {
  return "config_hash=" + config_hash + " seed=" + std::to_string(seed);
}

inline void write_density_csv(const std::string& path, const DensityVector& f,
                              const std::string& meta) {
  CsvWriter w(path);
  w.comment(meta + " escaped=" + render_num(f.escaped));
  w.header({"cell_left", "cell_right", "value"});
  for (int i = 0; i < f.grid.n_cells(); ++i)
    w.row({f.grid.left(i), f.grid.right(i), f.values[i]});
}

inline void write_histogram_csv(const std::string& path, const HistogramResult& h,
                                const std::string& meta) {
  CsvWriter w(path);
  w.comment(meta + " escaped=" + render_num(h.density.escaped));
  w.header({"cell_left", "cell_right", "density", "std_error"});
  for (int i = 0; i < h.density.grid.n_cells(); ++i)
    w.row({h.density.grid.left(i), h.density.grid.right(i), h.density.values[i],
           h.std_error[i]});
}

// One row per jump event, plus a t=0 row carrying the start state so a
// plotted path has its left endpoint.
inline void write_paths_csv(const std::string& path,
                            const std::vector<TrajectoryPath>& paths,
                            const std::string& meta) {
  CsvWriter w(path);
  w.comment(meta);
  w.header({"path", "t", "pre_state", "post_state"});
  for (std::size_t p = 0; p < paths.size(); ++p) {
    w.line({std::to_string(p), render_num(0.0), render_num(paths[p].x0()),
            render_num(paths[p].x0())});
    for (const auto& e : paths[p].jumps())
      w.line({std::to_string(p), render_num(e.time), render_num(e.pre),
              render_num(e.post)});
  }
}

inline void write_moments_csv(const std::string& path,
                              const std::vector<MomentPoint>& series,
                              const std::string& meta) {
  CsvWriter w(path);
  w.comment(meta);
  w.header({"t", "value", "std_error"});
  for (const auto& m : series) w.row({m.t, m.value, m.std_error});
}

inline void write_series_csv(const std::string& path, const std::string& value_name,
                             const std::vector<double>& times,
                             const std::vector<double>& values, const std::string& meta) {
  if (times.size() != values.size())
    throw std::invalid_argument("series: times and values disagree in length");
  CsvWriter w(path);
  w.comment(meta);
  w.header({"t", value_name});
  for (std::size_t i = 0; i < times.size(); ++i) w.row({times[i], values[i]});
}

inline void write_triplets_csv(const std::string& path,
                               const Eigen::SparseMatrix<double>& A,
                               const std::string& meta) {
  CsvWriter w(path);
  w.comment(meta);
  w.header({"row", "col", "value"});
  for (int k = 0; k < A.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it)
      w.line({std::to_string(it.row()), std::to_string(it.col()), render_num(it.value())});
}

inline nlohmann::json verdict_to_json(const Verdict& v, const std::string& model_desc) {
  nlohmann::json out;
  out["schema_version"] = 1;
  out["model"] = model_desc;
  out["verdict"] = to_string(v.stability);
  if (std::isfinite(v.gamma_witness)) out["gamma_witness"] = v.gamma_witness;
  if (std::isfinite(v.c_gamma)) out["c_gamma"] = v.c_gamma;
  if (std::isfinite(v.drift_coefficient)) out["drift_coefficient"] = v.drift_coefficient;
  out["evidence"] = nlohmann::json::array();
  for (const auto& e : v.evidence)
    out["evidence"].push_back({{"source", e.source}, {"detail", e.detail}});
  return out;
}

}  // namespace titerlab
