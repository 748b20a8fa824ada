#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hessopt/vec.hpp"

namespace hessopt {

struct TraceRecord {
  long t = 0;
  double eta = 0.0;
  double alpha = 0.0;
  double loss = 0.0;
  double true_grad_norm = 0.0;
  double est_norm = 0.0;
  double err_norm = 0.0;
  bool clipped = false;
  double step_norm = 0.0;
};

struct RunSummary {
  long T = 0;
  double avg_sq_grad_norm = 0.0;
  double avg_grad_norm = 0.0;
  double final_loss = 0.0;
  long selected_t = 0;
  Vec selected_iterate;
  double selected_grad_norm = 0.0;
  long grad_calls = 0;
  long hvp_calls = 0;
  long sample_calls = 0;
  long zero_steps = 0;
  long traced_rows = 0;
  bool subsampled = false;   // averages taken over a strided subset of t
  bool left_test_box = false;
  double max_iterate_inf_norm = 0.0;
  double wall_time_s = 0.0;  // excluded from reproducibility guarantees
  std::vector<std::string> warnings;
};

inline constexpr const char* kTraceCsvHeader =
    "t,eta,alpha,loss,true_grad_norm,est_norm,err_norm,clipped,step_norm";

// Shortest decimal rendering that round-trips a double exactly.
inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string trace_csv_line(const TraceRecord& r) {
  std::string line = std::to_string(r.t);
  for (double v : {r.eta, r.alpha, r.loss, r.true_grad_norm, r.est_norm, r.err_norm})
    line += "," + format_g17(v);
  line += r.clipped ? ",1" : ",0";
  line += "," + format_g17(r.step_norm);
  return line;
}

inline void write_trace_csv(const std::vector<TraceRecord>& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << kTraceCsvHeader << "\n";
  for (const auto& r : trace) out << trace_csv_line(r) << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::vector<TraceRecord> read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::string line;
  if (!std::getline(in, line) || line != kTraceCsvHeader)
    throw std::runtime_error("bad trace header in " + path);
  std::vector<TraceRecord> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string field;
    double vals[9];
    for (int i = 0; i < 9; ++i) {
      if (!std::getline(ss, field, ',')) throw std::runtime_error("short row in " + path);
      vals[i] = std::stod(field);
    }
    TraceRecord r;
    r.t = static_cast<long>(vals[0]);
    r.eta = vals[1];
    r.alpha = vals[2];
    r.loss = vals[3];
    r.true_grad_norm = vals[4];
    r.est_norm = vals[5];
    r.err_norm = vals[6];
    r.clipped = vals[7] != 0.0;
    r.step_norm = vals[8];
    rows.push_back(r);
  }
  return rows;
}

}  // namespace hessopt
