#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "myodyn/ini.hpp"

namespace myodyn {

// One recorded motion trial: time, per-muscle envelopes and joint angle, the
// paper-style t-by-(2+N) layout. Ground-truth muscle forces ride in a
// parallel matrix when available.
struct TrialMatrix {
  std::vector<std::string> muscle_names;
  std::vector<double> times;
  std::vector<std::vector<double>> envelopes;  // per row, N values
  std::vector<double> q;
  std::vector<std::vector<double>> forces;  // optional, per row, N values

  size_t rows() const { return times.size(); }
  size_t n_muscles() const { return muscle_names.size(); }
  bool has_forces() const { return !forces.empty(); }

  double dt() const {
    if (times.size() < 2) throw std::invalid_argument("trial: need at least two rows");
    return times[1] - times[0];
  }
  double duration() const { return times.empty() ? 0.0 : times.back() - times.front(); }
};

inline void validate(const TrialMatrix& trial) {
  if (trial.times.size() < 2) throw std::invalid_argument("trial: need at least two rows");
  if (trial.q.size() != trial.times.size() || trial.envelopes.size() != trial.times.size())
    throw std::invalid_argument("trial: column lengths differ");
  if (trial.has_forces() && trial.forces.size() != trial.times.size())
    throw std::invalid_argument("trial: force rows differ from time rows");
  const double dt = trial.times[1] - trial.times[0];
  if (!(dt > 0.0)) throw std::invalid_argument("trial: time must increase");
  for (size_t i = 1; i < trial.times.size(); ++i) {
    const double step = trial.times[i] - trial.times[i - 1];
    if (!(step > 0.0))
      throw std::invalid_argument("trial: non-monotone time at row " + std::to_string(i));
    if (std::abs(step - dt) > 1e-9 * std::max(1.0, std::abs(dt)))
      throw std::invalid_argument("trial: non-uniform time step at row " + std::to_string(i));
  }
  for (size_t i = 0; i < trial.rows(); ++i) {
    if (trial.envelopes[i].size() != trial.n_muscles())
      throw std::invalid_argument("trial: envelope width mismatch at row " + std::to_string(i));
    for (double e : trial.envelopes[i])
      if (e < 0.0 || e > 1.0)
        throw std::invalid_argument("trial: envelope outside [0,1] at row " + std::to_string(i));
  }
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(line);
  while (std::getline(in, item, ',')) out.push_back(ini::trim(item));
  return out;
}

inline double parse_cell(const std::string& cell, size_t line, size_t col,
                         const std::string& path) {
  try {
    size_t pos = 0;
    const double v = std::stod(cell, &pos);
    if (pos != cell.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    std::ostringstream msg;
    msg << path << ":" << line << ": column " << col + 1 << ": bad number '" << cell << "'";
    throw std::invalid_argument(msg.str());
  }
}

inline void write_matrix(const std::string& path, const std::string& header,
                         const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << header << "\n";
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) out << ",";
      out << ini::format_double(row[i]);
    }
    out << "\n";
  }
}

}  // namespace detail

// Header: t,e_<name>...,q
inline void save_trial(const TrialMatrix& trial, const std::string& path) {
  std::string header = "t";
  for (const auto& name : trial.muscle_names) header += ",e_" + name;
  header += ",q";
  std::vector<std::vector<double>> rows(trial.rows());
  for (size_t i = 0; i < trial.rows(); ++i) {
    rows[i].push_back(trial.times[i]);
    for (double e : trial.envelopes[i]) rows[i].push_back(e);
    rows[i].push_back(trial.q[i]);
  }
  detail::write_matrix(path, header, rows);
}

// Header: t,F_<name>...
inline void save_forces(const TrialMatrix& trial, const std::string& path) {
  if (!trial.has_forces()) throw std::invalid_argument("trial has no force matrix");
  std::string header = "t";
  for (const auto& name : trial.muscle_names) header += ",F_" + name;
  std::vector<std::vector<double>> rows(trial.rows());
  for (size_t i = 0; i < trial.rows(); ++i) {
    rows[i].push_back(trial.times[i]);
    for (double f : trial.forces[i]) rows[i].push_back(f);
  }
  detail::write_matrix(path, header, rows);
}

inline TrialMatrix load_trial(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument(path + ": empty file");
  const auto header = detail::split_csv(line);
  if (header.size() < 3 || header.front() != "t" || header.back() != "q")
    throw std::invalid_argument(path + ":1: header must be t,e_<muscle>...,q");
  TrialMatrix trial;
  for (size_t i = 1; i + 1 < header.size(); ++i) {
    if (header[i].rfind("e_", 0) != 0)
      throw std::invalid_argument(path + ":1: missing envelope column header '" + header[i] +
                                  "' (expected e_<muscle>)");
    trial.muscle_names.push_back(header[i].substr(2));
  }
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (ini::trim(line).empty()) continue;
    const auto cells = detail::split_csv(line);
    if (cells.size() != header.size()) {
      std::ostringstream msg;
      msg << path << ":" << lineno << ": expected " << header.size() << " columns, got "
          << cells.size();
      throw std::invalid_argument(msg.str());
    }
    trial.times.push_back(detail::parse_cell(cells[0], lineno, 0, path));
    std::vector<double> env;
    for (size_t i = 1; i + 1 < cells.size(); ++i)
      env.push_back(detail::parse_cell(cells[i], lineno, i, path));
    trial.envelopes.push_back(std::move(env));
    trial.q.push_back(detail::parse_cell(cells.back(), lineno, cells.size() - 1, path));
  }
  validate(trial);
  return trial;
}

// Loads a force sidecar into an existing trial; rows and names must line up.
inline void load_forces(TrialMatrix& trial, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument(path + ": empty file");
  const auto header = detail::split_csv(line);
  if (header.size() != trial.n_muscles() + 1 || header.front() != "t")
    throw std::invalid_argument(path + ":1: header must be t,F_<muscle>...");
  for (size_t i = 0; i < trial.n_muscles(); ++i)
    if (header[i + 1] != "F_" + trial.muscle_names[i])
      throw std::invalid_argument(path + ":1: force column '" + header[i + 1] +
                                  "' does not match muscle " + trial.muscle_names[i]);
  trial.forces.clear();
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (ini::trim(line).empty()) continue;
    const auto cells = detail::split_csv(line);
    if (cells.size() != header.size())
      throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": column count mismatch");
    std::vector<double> row;
    for (size_t i = 1; i < cells.size(); ++i)
      row.push_back(detail::parse_cell(cells[i], lineno, i, path));
    trial.forces.push_back(std::move(row));
  }
  if (trial.forces.size() != trial.rows())
    throw std::invalid_argument(path + ": force rows differ from trial rows");
}

}  // namespace myodyn
